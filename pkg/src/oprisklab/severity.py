"""Latent severity families: the standard Gaussian and stretched Weibull laws.

The Weibull member is parameterized directly through its survival function
``P(X > x) = exp(-c x^rho)`` for ``x >= 0`` with tail index ``rho > 1`` and
scale ``c > 0``.  The default scale ``c = 1/rho`` is the normalization under
which the Legendre transform ``sup_x (t x - x^rho / rho)`` equals
``t^{rho'} / rho'`` exactly, with ``rho' = rho / (rho - 1)`` — that is the
scale for which the asymptotic cumulant formula below is exact to leading
order without a correction factor.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .errors import DomainError, NumericalError, PreconditionError
from .rng import RandomStream

#: Uniform draws are clamped away from zero before inverse transforms so that
#: quantile functions stay finite; 2^-53 is the generator's smallest non-zero
#: output spacing.
_U_FLOOR = 2.0**-53


class SeverityKind(enum.Enum):
    GAUSSIAN = "gaussian"
    WEIBULL = "weibull"


@dataclass(frozen=True)
class SeverityFamily:
    """The law of the latent variables driving each cell loss.

    ``GAUSSIAN`` is the standard normal (its tail index is rho = 2 by
    definition and ``c`` is unused).  ``WEIBULL`` has survival
    ``exp(-c x^rho)`` on ``x >= 0``.
    """

    kind: SeverityKind
    rho: float = 2.0
    c: float = 0.5

    def __post_init__(self) -> None:
        if not isinstance(self.kind, SeverityKind):
            raise DomainError(f"kind must be a SeverityKind, got {self.kind!r}")
        if not (math.isfinite(self.rho) and self.rho > 1.0):
            raise DomainError(f"tail index rho must be finite and > 1, got {self.rho}")
        if self.kind is SeverityKind.GAUSSIAN and self.rho != 2.0:
            raise DomainError("the Gaussian family has tail index rho = 2 by definition")
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise DomainError(f"tail scale c must be finite and > 0, got {self.c}")

    @classmethod
    def gaussian(cls) -> "SeverityFamily":
        return cls(SeverityKind.GAUSSIAN, rho=2.0, c=0.5)

    @classmethod
    def weibull(cls, rho: float, c: float | None = None) -> "SeverityFamily":
        """Weibull-tailed family; ``c`` defaults to the natural scale 1/rho."""
        if c is None:
            if not (math.isfinite(rho) and rho > 1.0):
                raise DomainError(f"tail index rho must be finite and > 1, got {rho}")
            c = 1.0 / rho
        return cls(SeverityKind.WEIBULL, rho=rho, c=c)

    @property
    def rho_prime(self) -> float:
        return self.rho / (self.rho - 1.0)


def cdf(family: SeverityFamily, x):
    """Exact distribution function; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    if family.kind is SeverityKind.GAUSSIAN:
        out = ndtr(x)
    else:
        out = np.where(x < 0.0, 0.0, -np.expm1(-family.c * np.power(np.maximum(x, 0.0), family.rho)))
    return float(out) if out.ndim == 0 else out


def quantile(family: SeverityFamily, q: float) -> float:
    """Exact inverse CDF."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if family.kind is SeverityKind.GAUSSIAN:
        return float(ndtri(q))
    return float((-math.log1p(-q) / family.c) ** (1.0 / family.rho))


def sample(family: SeverityFamily, stream: RandomStream, n: int) -> np.ndarray:
    """n i.i.d. draws by inverse transform of the stream's uniforms."""
    if n < 1:
        raise PreconditionError(f"sample size must be >= 1, got {n}")
    u = stream.generator().random(n)
    np.maximum(u, _U_FLOOR, out=u)
    if family.kind is SeverityKind.GAUSSIAN:
        return ndtri(u)
    return (-np.log1p(-u) / family.c) ** (1.0 / family.rho)


def cgf_exact(family: SeverityFamily, t: float) -> float:
    """The cumulant generating function ``K(t) = ln E[exp(t X)]``.

    Gaussian: exactly ``t^2 / 2``.  Weibull: numerical integration of the
    moment integral, carried out in log space around the saddle point of
    ``t x - c x^rho`` so that arbitrarily large ``t`` stays representable.
    """
    if not (math.isfinite(t) and t >= 0.0):
        raise DomainError(f"cgf is evaluated on t >= 0, got {t}")
    if family.kind is SeverityKind.GAUSSIAN:
        return 0.5 * t * t
    return _weibull_cgf(family.rho, family.c, t)


@lru_cache(maxsize=4096)
def _weibull_cgf(rho: float, c: float, t: float) -> float:
    if t == 0.0:
        return 0.0
    log_norm = math.log(c * rho)

    # Peak of the full log-integrand g(x) = t x - c x^rho + (rho-1) ln x,
    # bracketed around the saddle of the dominant part t x - c x^rho.
    x_star = (t / (c * rho)) ** (1.0 / (rho - 1.0))

    def g(x: float) -> float:
        if x <= 0.0:
            return -math.inf
        return t * x - c * x**rho + (rho - 1.0) * math.log(x)

    g_star = g(x_star)

    def integrand(x: float) -> float:
        e = g(x) - g_star
        return math.exp(e) if e > -745.0 else 0.0

    left, err_l = integrate.quad(integrand, 0.0, x_star, epsabs=1e-13, epsrel=1e-11, limit=200)
    right, err_r = integrate.quad(integrand, x_star, math.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
    total = left + right
    if not (total > 0.0 and math.isfinite(total)):
        raise NumericalError(f"Weibull moment integral failed for rho={rho}, c={c}, t={t}")
    if (err_l + err_r) > 1e-8 * total:
        raise NumericalError(
            f"Weibull moment integral did not converge: value={total:.6e}, "
            f"error={err_l + err_r:.2e} (rho={rho}, c={c}, t={t})"
        )
    return g_star + log_norm + math.log(total)


def cgf_asymptotic(family: SeverityFamily, t: float) -> float:
    """Leading-order cumulant growth ``t^{rho'} / rho'``.

    For the Weibull family this form is exact-to-leading-order only under the
    natural scale ``c = 1/rho``; other scales are rejected rather than
    silently corrected.
    """
    if not (math.isfinite(t) and t >= 0.0):
        raise DomainError(f"cgf is evaluated on t >= 0, got {t}")
    if family.kind is SeverityKind.WEIBULL and abs(family.c * family.rho - 1.0) > 1e-12:
        raise PreconditionError(
            f"asymptotic CGF requires the natural scale c = 1/rho, got c={family.c}, rho={family.rho}"
        )
    rp = family.rho_prime
    return t**rp / rp

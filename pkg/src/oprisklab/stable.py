"""Numerics for totally right-skewed alpha-stable laws.

This module provides density, distribution, quantile, sampling, and
location-scale fitting for the one-sided-skew stable family that arises as
the limit law of normalized heavy-tailed sums.  Only extreme right skewness
is supported (the ``skew`` field is fixed at +1); at ``alpha = 2`` the law
degenerates to a Gaussian with variance ``2 gamma^2`` where skewness is
meaningless.

Two location-scale conventions are supported:

* ``CONTINUOUS`` — the parameterization that is jointly continuous in
  ``(alpha, gamma, delta)``, including at ``alpha = 1``.  All internal
  computation happens here.
* ``CLASSIC`` — the historical parameterization in which the closed-form
  special cases look simplest (e.g. ``alpha = 1/2`` is the one-sided law
  with CDF ``erfc(sqrt(gamma / (2 (x - delta))))``).

For fixed ``alpha != 1`` the two differ by the exact location shift
``delta_continuous = delta_classic + gamma * beta * tan(pi alpha / 2)``; at
``alpha = 1`` the shift is ``gamma * beta * (2/pi) * ln gamma``.

Density and distribution values come from adaptive quadrature of the
standard angular integral representation: with ``zeta = -tan(pi alpha / 2)``
and ``theta0 = atan(-zeta) / alpha``, the integrand is a smooth function of
``g(theta) = ln w + ln V(theta)`` where the single sign change of ``g``
locates the concentration point of the integral.  The integral is split at
that root so the adaptive scheme sees two one-sided peaks.  Beyond
``(x - delta) / gamma`` of +/-50 the quadrature window is abandoned for the
leading-order series tail (heavy side) or exact underflow (light side).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, FitError, NumericalError, PreconditionError
from .rng import RandomStream
from .stats import empirical_quantile

_PI = math.pi
_U_FLOOR = 2.0**-53
#: Beyond this many scale units from the location the law is evaluated by
#: its tail series / underflow rules instead of quadrature.
_TAIL_CUT = 50.0
#: Width of the snapping window around alpha = 1 inside which the dedicated
#: alpha = 1 branch is used (the continuous parameterization makes the law
#: continuous in alpha, so the substitution error is of the same order).
_ALPHA1_EPS = 1e-8


class ParamConvention(enum.Enum):
    CONTINUOUS = "continuous"
    CLASSIC = "classic"


@dataclass(frozen=True)
class StableDist:
    """A totally right-skewed stable law.

    Parameters
    ----------
    alpha:
        Stability index in (0, 2].
    gamma:
        Scale, > 0.
    delta:
        Location.
    convention:
        Which location-scale convention ``(gamma, delta)`` refer to.
    skew:
        Fixed at +1; present so the asymmetry choice is explicit in the type.
    """

    alpha: float
    gamma: float = 1.0
    delta: float = 0.0
    convention: ParamConvention = ParamConvention.CONTINUOUS
    skew: float = field(default=1.0)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise DomainError(f"gamma must be finite and > 0, got {self.gamma}")
        if not math.isfinite(self.delta):
            raise DomainError(f"delta must be finite, got {self.delta}")
        if self.skew != 1.0:
            raise DomainError("only the totally right-skewed family (skew = +1) is supported")
        if not isinstance(self.convention, ParamConvention):
            raise DomainError(f"convention must be a ParamConvention, got {self.convention!r}")


def _tan_half(alpha: float) -> float:
    """tan(pi alpha / 2), computed to respect the sign near alpha = 2."""
    return math.tan(_PI * alpha / 2.0)


def to_continuous(dist: StableDist) -> StableDist:
    if dist.convention is ParamConvention.CONTINUOUS:
        return dist
    if _is_alpha_one(dist.alpha):
        delta = dist.delta + dist.gamma * (2.0 / _PI) * math.log(dist.gamma)
    else:
        delta = dist.delta + dist.gamma * _tan_half(dist.alpha)
    return StableDist(dist.alpha, dist.gamma, delta, ParamConvention.CONTINUOUS)


def to_classic(dist: StableDist) -> StableDist:
    if dist.convention is ParamConvention.CLASSIC:
        return dist
    if _is_alpha_one(dist.alpha):
        delta = dist.delta - dist.gamma * (2.0 / _PI) * math.log(dist.gamma)
    else:
        delta = dist.delta - dist.gamma * _tan_half(dist.alpha)
    return StableDist(dist.alpha, dist.gamma, delta, ParamConvention.CLASSIC)


def _is_alpha_one(alpha: float) -> bool:
    return abs(alpha - 1.0) <= _ALPHA1_EPS


# ---------------------------------------------------------------------------
# Standardized building blocks (continuous convention, gamma=1, delta=0).
# ---------------------------------------------------------------------------


def _zeta(alpha: float) -> float:
    return -_tan_half(alpha)


def _theta0(alpha: float, beta: float) -> float:
    return math.atan(beta * _tan_half(alpha)) / alpha


def _ln_v(theta: float, alpha: float, theta0: float) -> float:
    """ln V(theta) for alpha != 1; +/-inf limits outside the domain."""
    a = alpha
    ct = math.cos(theta)
    s = math.sin(a * (theta0 + theta))
    if ct <= 0.0 or s <= 0.0:
        return -math.inf if a > 1.0 else math.inf
    num = math.cos(a * theta0 + (a - 1.0) * theta)
    if num <= 0.0:
        return -math.inf if a > 1.0 else math.inf
    return (
        math.log(math.cos(a * theta0)) / (a - 1.0)
        + (a / (a - 1.0)) * math.log(ct / s)
        + math.log(num / ct)
    )


def _ln_v1(theta: float) -> float:
    """ln V(theta) on the dedicated alpha = 1 branch (skew +1)."""
    bt = _PI / 2.0 + theta
    ct = math.cos(theta)
    if ct <= 0.0 or bt <= 0.0:
        return math.inf
    return math.log(2.0 / _PI) + math.log(bt / ct) + bt * math.tan(theta)


def _split_quad(ln_g, lo: float, hi: float, integrand) -> tuple[float, float]:
    """Integrate ``integrand`` over (lo, hi), split where ln g crosses zero.

    ``ln_g`` is the log of the exponent function; its zero is where the
    integrand transitions.  The transition layer can be orders of magnitude
    narrower than the full interval (it shrinks as the evaluation point moves
    into the tail), and adaptive quadrature on a wide piece whose samples all
    miss the layer reports false convergence.  So besides splitting at the
    zero crossing, the layer is bracketed explicitly: beyond |ln g| = 30 the
    integrand is flat at machine precision, so solving ln g = +/-5 and +/-30
    on each side confines all variation to thin sub-pieces that quadrature
    cannot overlook.  Returns (value, error-estimate).
    """
    inset = 1e-12
    cuts: list[float] = []
    a, b = lo + inset, hi - inset
    fa, fb = ln_g(a), ln_g(b)
    if math.isfinite(fa) and math.isfinite(fb) and fa * fb < 0.0:
        try:
            mid = brentq(ln_g, a, b, xtol=1e-14)
        except ValueError:
            mid = None
        if mid is not None:
            cuts.append(mid)
            for endpoint, fval in ((a, fa), (b, fb)):
                left, right = min(endpoint, mid), max(endpoint, mid)
                for mag in (5.0, 30.0):
                    if abs(fval) > mag:
                        level = math.copysign(mag, fval)
                        try:
                            cuts.append(brentq(lambda t: ln_g(t) - level, left, right, xtol=1e-14))
                        except ValueError:
                            pass
    points = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
    total = 0.0
    err = 0.0
    for a, b in zip(points[:-1], points[1:]):
        val, e = integrate.quad(integrand, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)
        total += val
        err += e
    return total, err


def _check_quad(value: float, err: float, what: str) -> None:
    if not math.isfinite(value) or err > max(1e-7, 1e-6 * abs(value)):
        raise NumericalError(f"angular quadrature failed for {what}: value={value!r}, error={err:.2e}")


def _tail_coeff(alpha: float) -> float:
    """c_alpha in the survival series  1 - F(z) ~ 2 c_alpha z^(-alpha)."""
    return math.sin(_PI * alpha / 2.0) * math.gamma(alpha) / _PI


@lru_cache(maxsize=64)
def _tail_calibration(alpha: float) -> float:
    """Coefficient C of the survival tail  1 - F(z) = C * (z - zeta)^(-alpha).

    Asymptotically C equals 2 * _tail_coeff(alpha), but the subleading terms
    dropped by the series are not negligible at the switch point (nearly 50%
    for alpha near 2), which would leave a visible step — and a monotonicity
    violation — where quadrature hands over to the series.  Matching C to the
    quadrature value at the switch point keeps the exact tail exponent while
    making the CDF continuous and non-decreasing across the seam.
    """
    if _is_alpha_one(alpha):
        z_star = _TAIL_CUT
        survival = 1.0 - _std_cdf_a1(z_star)
        return survival * z_star
    zeta = _zeta(alpha)
    z_star = max(_TAIL_CUT, zeta + _TAIL_CUT)
    survival = 1.0 - _std_cdf(z_star, alpha)
    if survival <= 0.0:
        # quadrature underflowed (alpha at or near 2); fall back to the
        # asymptotic constant, where the tail mass is below resolution anyway
        return 2.0 * _tail_coeff(alpha)
    return survival * (z_star - zeta) ** alpha


def _std_pdf(z: float, alpha: float) -> float:
    """Standard (continuous-convention) density at z for skew +1."""
    if _is_alpha_one(alpha):
        return _std_pdf_a1(z)
    zeta = _zeta(alpha)
    theta0 = _theta0(alpha, 1.0)
    scale = 1e-12 * (1.0 + abs(zeta))
    if abs(z - zeta) <= scale:
        return math.gamma(1.0 + 1.0 / alpha) * math.cos(theta0) / (
            _PI * (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
        )
    if alpha < 1.0 and z <= zeta:
        return 0.0
    if z - zeta > _TAIL_CUT and z > _TAIL_CUT:
        return alpha * _tail_calibration(alpha) * (z - zeta) ** (-alpha - 1.0)
    if alpha >= 1.0 and z < -_TAIL_CUT:
        return 0.0
    if z < zeta:
        return _reflected_pdf(z, alpha)
    lnw = (alpha / (alpha - 1.0)) * math.log(z - zeta)

    def ln_g(theta: float) -> float:
        return lnw + _ln_v(theta, alpha, theta0)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(g - math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -theta0, _PI / 2.0, integrand)
    _check_quad(val, err, f"pdf(alpha={alpha}, z={z})")
    return max(0.0, alpha * val / (_PI * abs(alpha - 1.0) * (z - zeta)))


def _std_cdf(z: float, alpha: float) -> float:
    """Standard (continuous-convention) CDF at z for skew +1."""
    if _is_alpha_one(alpha):
        return _std_cdf_a1(z)
    zeta = _zeta(alpha)
    theta0 = _theta0(alpha, 1.0)
    scale = 1e-12 * (1.0 + abs(zeta))
    if abs(z - zeta) <= scale:
        return 0.5 - theta0 / _PI
    if alpha < 1.0 and z <= zeta:
        return 0.0
    if z - zeta > _TAIL_CUT and z > _TAIL_CUT:
        return min(1.0, 1.0 - _tail_calibration(alpha) * (z - zeta) ** (-alpha))
    if alpha >= 1.0 and z < -_TAIL_CUT:
        return 0.0
    if z < zeta:
        return 1.0 - _reflected_cdf(z, alpha)
    lnw = (alpha / (alpha - 1.0)) * math.log(z - zeta)

    def ln_g(theta: float) -> float:
        return lnw + _ln_v(theta, alpha, theta0)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(-math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -theta0, _PI / 2.0, integrand)
    _check_quad(val, err, f"cdf(alpha={alpha}, z={z})")
    if alpha < 1.0:
        out = (0.5 - theta0 / _PI) + val / _PI
    else:
        out = 1.0 - val / _PI
    return min(1.0, max(0.0, out))


def _reflected_pdf(z: float, alpha: float) -> float:
    """Density left of zeta for alpha > 1, via the skew -1 reflection."""
    theta0 = _theta0(alpha, -1.0)
    zeta_r = -_zeta(alpha)
    x = -z
    lnw = (alpha / (alpha - 1.0)) * math.log(x - zeta_r)

    def ln_g(theta: float) -> float:
        return lnw + _ln_v(theta, alpha, theta0)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(g - math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -theta0, _PI / 2.0, integrand)
    _check_quad(val, err, f"pdf(alpha={alpha}, z={z})")
    return max(0.0, alpha * val / (_PI * abs(alpha - 1.0) * (x - zeta_r)))


def _reflected_cdf(z: float, alpha: float) -> float:
    """Survival of the skew -1 reflection, used for z < zeta, alpha > 1."""
    theta0 = _theta0(alpha, -1.0)
    zeta_r = -_zeta(alpha)
    x = -z
    lnw = (alpha / (alpha - 1.0)) * math.log(x - zeta_r)

    def ln_g(theta: float) -> float:
        return lnw + _ln_v(theta, alpha, theta0)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(-math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -theta0, _PI / 2.0, integrand)
    _check_quad(val, err, f"cdf(alpha={alpha}, z={z})")
    return min(1.0, max(0.0, 1.0 - val / _PI))


def _std_pdf_a1(z: float) -> float:
    if z > _TAIL_CUT:
        return _tail_calibration(1.0) * z**-2.0
    if z < -_TAIL_CUT:
        return 0.0
    lnw = -_PI * z / 2.0

    def ln_g(theta: float) -> float:
        return lnw + _ln_v1(theta)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(g - math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -_PI / 2.0, _PI / 2.0, integrand)
    _check_quad(val, err, f"pdf(alpha=1, z={z})")
    return max(0.0, val / 2.0)


def _std_cdf_a1(z: float) -> float:
    if z > _TAIL_CUT:
        return 1.0 - _tail_calibration(1.0) / z
    if z < -_TAIL_CUT:
        return 0.0
    lnw = -_PI * z / 2.0

    def ln_g(theta: float) -> float:
        return lnw + _ln_v1(theta)

    def integrand(theta: float) -> float:
        g = ln_g(theta)
        return math.exp(-math.exp(g)) if g < 700.0 else 0.0

    val, err = _split_quad(ln_g, -_PI / 2.0, _PI / 2.0, integrand)
    _check_quad(val, err, f"cdf(alpha=1, z={z})")
    return min(1.0, max(0.0, val / _PI))


# ---------------------------------------------------------------------------
# Public scalar operations.
# ---------------------------------------------------------------------------


def _standardize(dist: StableDist, x: float) -> tuple[float, float]:
    """Map x to the standardized continuous-convention coordinate."""
    cont = to_continuous(dist)
    return (x - cont.delta) / cont.gamma, cont.gamma


def stable_pdf(dist: StableDist, x: float) -> float:
    """Density of the stable law at ``x``."""
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    z, gamma = _standardize(dist, x)
    return _std_pdf(z, dist.alpha) / gamma


def stable_cdf(dist: StableDist, x: float) -> float:
    """P(Z <= x) for the stable law."""
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    z, _ = _standardize(dist, x)
    return _std_cdf(z, dist.alpha)


def stable_cdf_batch(dist: StableDist, xs: np.ndarray) -> np.ndarray:
    """Vectorized CDF over an array, via a cached standard-law interpolant.

    The interpolant is a cubic spline through ~1200 quadrature nodes placed
    on an asinh-spaced grid of the standard law; its error against direct
    quadrature is below 1e-9, which is negligible at the resolution of the
    KS statistics it serves.  Points beyond the grid use the same tail rules
    as :func:`stable_cdf`.
    """
    xs = np.asarray(xs, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise DomainError("stable_cdf_batch requires finite input")
    cont = to_continuous(dist)
    z = (xs - cont.delta) / cont.gamma
    alpha = dist.alpha
    spline, z_lo, z_hi = _std_cdf_interpolant(alpha)
    out = np.empty_like(z)
    below = z <= z_lo
    above = z >= z_hi
    mid = ~(below | above)
    out[below] = 0.0
    if np.any(above):
        za = z[above]
        if _is_alpha_one(alpha):
            out[above] = 1.0 - _tail_calibration(1.0) / za
        else:
            c = _tail_calibration(alpha)
            out[above] = 1.0 - c * (za - _zeta(alpha)) ** (-alpha)
    if np.any(mid):
        out[mid] = np.clip(spline(np.arcsinh(z[mid])), 0.0, 1.0)
    return out


@lru_cache(maxsize=64)
def _std_cdf_interpolant(alpha: float):
    """Cubic-spline interpolant of the standard CDF on the quadrature window."""
    if _is_alpha_one(alpha):
        z_lo = -_TAIL_CUT
        z_hi = _TAIL_CUT
    elif alpha < 1.0:
        z_lo = _zeta(alpha)
        z_hi = max(_TAIL_CUT, _zeta(alpha) + _TAIL_CUT)
    else:
        z_lo = -_TAIL_CUT
        z_hi = max(_TAIL_CUT, _zeta(alpha) + _TAIL_CUT)
    grid = np.sinh(np.linspace(np.arcsinh(z_lo), np.arcsinh(z_hi), 1200))
    grid[0], grid[-1] = z_lo, z_hi
    values = np.array([_std_cdf(float(g), alpha) for g in grid])
    return CubicSpline(np.arcsinh(grid), values), z_lo, z_hi


def stable_quantile(dist: StableDist, q: float) -> float:
    """Inverse CDF by bracketing root search on :func:`stable_cdf`."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    alpha = dist.alpha
    z = _std_quantile(alpha, q)
    cont = to_continuous(dist)
    return cont.delta + cont.gamma * z


def _std_quantile(alpha: float, q: float) -> float:
    if _is_alpha_one(alpha):
        z_lo, z_hi = -_TAIL_CUT, _TAIL_CUT
    elif alpha < 1.0:
        zeta = _zeta(alpha)
        z_lo = zeta + 1e-13 * (1.0 + abs(zeta))
        z_hi = max(_TAIL_CUT, zeta + _TAIL_CUT)
    else:
        z_lo = -_TAIL_CUT
        z_hi = max(_TAIL_CUT, _zeta(alpha) + _TAIL_CUT)
    f_hi = _std_cdf(z_hi, alpha)
    if q > f_hi:
        # Invert the heavy-tail series, staying consistent with the CDF's
        # own tail rule.
        if _is_alpha_one(alpha):
            return _tail_calibration(1.0) / (1.0 - q)
        c = _tail_calibration(alpha)
        return _zeta(alpha) + (c / (1.0 - q)) ** (1.0 / alpha)
    root = brentq(lambda z: _std_cdf(z, alpha) - q, z_lo, z_hi, xtol=1e-13, maxiter=200)
    if abs(_std_cdf(root, alpha) - q) > 1e-9:
        raise NumericalError(f"quantile root search stalled at alpha={alpha}, q={q}")
    return float(root)


def stable_sample(dist: StableDist, stream: RandomStream, n: int) -> np.ndarray:
    """n independent draws by the exact uniform/exponential transformation.

    Uses the Chambers-Mallows-Stuck construction (in Weron's corrected
    form), including its dedicated ``alpha = 1`` branch, then maps the
    standard draws into the distribution's own convention.
    """
    if n < 1:
        raise PreconditionError(f"sample size must be >= 1, got {n}")
    gen = stream.generator()
    u1 = np.maximum(gen.random(n), _U_FLOOR)
    u2 = np.maximum(gen.random(n), _U_FLOOR)
    theta = _PI * (u1 - 0.5)
    w = -np.log1p(-u2)
    alpha, gamma, delta = dist.alpha, dist.gamma, dist.delta
    if _is_alpha_one(alpha):
        half = _PI / 2.0
        z = (2.0 / _PI) * (
            (half + theta) * np.tan(theta)
            - np.log((half * w * np.cos(theta)) / (half + theta))
        )
        if dist.convention is ParamConvention.CLASSIC:
            return gamma * z + delta + (2.0 / _PI) * gamma * math.log(gamma)
        return gamma * z + delta
    tan_half = _tan_half(alpha)
    b = math.atan(tan_half) / alpha
    s = (1.0 + tan_half * tan_half) ** (1.0 / (2.0 * alpha))
    arg = alpha * (theta + b)
    z = (
        s
        * np.sin(arg)
        / np.cos(theta) ** (1.0 / alpha)
        * (np.cos(theta - arg) / w) ** ((1.0 - alpha) / alpha)
    )
    if dist.convention is ParamConvention.CLASSIC:
        return gamma * z + delta
    return gamma * (z - tan_half) + delta


@lru_cache(maxsize=64)
def _std_quartiles(alpha: float) -> tuple[float, float]:
    return _std_quantile(alpha, 0.25), _std_quantile(alpha, 0.75)


def fit_location_scale(samples: np.ndarray, alpha: float) -> tuple[float, float]:
    """Fit ``(gamma, delta)`` of a continuous-convention stable law.

    The stability index is fixed by theory; gamma and delta are chosen so
    the theoretical 25% and 75% quantiles match the empirical ones exactly.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise PreconditionError(f"fit needs at least 100 samples, got {x.size}")
    if not (math.isfinite(alpha) and 0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    e25 = empirical_quantile(x, 0.25)
    e75 = empirical_quantile(x, 0.75)
    if e75 - e25 <= 0.0:
        raise FitError("sample interquartile range is zero; cannot identify a scale")
    z25, z75 = _std_quartiles(alpha)
    gamma = (e75 - e25) / (z75 - z25)
    delta = e25 - gamma * z25
    return float(gamma), float(delta)

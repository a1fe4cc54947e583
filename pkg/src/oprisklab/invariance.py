"""Closed-form algebra of the scale-invariant loss model.

Everything in this module is exact arithmetic on model parameters — no
simulation.  The central objects are:

* ``ModelPoint (rho, lambda)`` — tail index of the latent severity and the
  speed at which the log-loss scale grows with the number of cells N;
* the derived stability index ``alpha = (rho lambda / rho')^{1/rho'}`` with
  ``rho' = rho/(rho-1)``, which decides the limiting regime of the
  normalized bank loss;
* parameter schedules mapping N to the cell parameters ``(mu_N, t_N)`` and
  the factor correlation ``rho_N``;
* the loci in the (rho, lambda) plane where alpha = 1 (curve A), alpha = 2
  (curve B), the bank-loss variance exponent vanishes (curve C), and
  alpha = rho (curve D, the diversification frontier).

Two typography variants exist for curves B-D and for the variance exponent:
the self-consistent forms use ``2^{rho'}`` / ``rho^{rho'}`` where the
alternates read ``2 rho'`` / ``rho rho'``.  Both coincide at rho = 2.  The
derived forms are the default; ``printed=True`` selects the alternates for
side-by-side comparison.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ConfigError, DomainError
from .severity import SeverityFamily, SeverityKind, cgf_asymptotic, cgf_exact, quantile
from .stable import StableDist, stable_quantile

_ALPHA_TOL = 1e-12


@dataclass(frozen=True)
class ModelPoint:
    """A (rho, lambda) point of the model's phase plane."""

    rho: float
    lam: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rho) and self.rho > 1.0):
            raise DomainError(f"rho must be finite and > 1, got {self.rho}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise DomainError(f"lambda must be finite and > 0, got {self.lam}")


class Region(enum.Enum):
    CLT = "CLT"
    LLN_ONLY = "LLN_ONLY"
    NO_LLN = "NO_LLN"


class VarianceClass(enum.Enum):
    ZERO = "ZERO"
    FINITE = "FINITE"
    INFINITE = "INFINITE"


class Diversification(enum.Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class RegimeReport:
    """Full classification of a model point."""

    rho_prime: float
    alpha: float
    region: Region
    variance_class: VarianceClass
    diversification: Diversification
    curve_lambdas: Mapping[str, float]
    var_exponent: float
    eps_var_exponent: float


def rho_prime(rho: float) -> float:
    """The conjugate index rho/(rho - 1)."""
    if not (math.isfinite(rho) and rho > 1.0):
        raise DomainError(f"rho must be finite and > 1, got {rho}")
    return rho / (rho - 1.0)


def alpha_index(point: ModelPoint) -> float:
    """Stability index (rho lambda / rho')^(1/rho') of the fluctuation law."""
    rp = rho_prime(point.rho)
    return (point.rho * point.lam / rp) ** (1.0 / rp)


def t_schedule(point: ModelPoint, n: float) -> float:
    """The log-scale parameter t_N = (rho' ln N / lambda)^(1/rho')."""
    if not n >= 2.0:
        raise DomainError(f"the schedule is defined for N >= 2, got {n}")
    rp = rho_prime(point.rho)
    return (rp * math.log(n) / point.lam) ** (1.0 / rp)


class ScheduleMode(enum.Enum):
    ASYMPTOTIC = "asymptotic"
    EXACT_LOGNORMAL = "exact-lognormal"
    EXACT_NORMALIZED = "exact-normalized"


@dataclass(frozen=True)
class ScheduleValues:
    mu: float
    t: float
    rho_n: float


@dataclass(frozen=True)
class Schedule:
    """N-indexed parameter maps (mu_N, t_N, rho_N).

    Modes
    -----
    ASYMPTOTIC
        ``mu_N = ln a - ((lambda+1)/lambda) ln N`` with the power-law
        ``t_N`` of :func:`t_schedule`.  Pins the expected bank loss to ``a``
        only asymptotically.
    EXACT_NORMALIZED
        Same ``t_N`` but ``mu_N = ln a - ln N - K(t_N)`` with the exact
        cumulant function, so E[L_N] = a exactly at every finite N.
    EXACT_LOGNORMAL
        Gaussian severities only: ``(mu_N, sigma_N)`` solve the two-moment
        matching E[L_N] = a, var[L_N] = b in closed form at every N.  The
        induced speed parameter is lambda = 2.
    """

    mode: ScheduleMode
    family: SeverityFamily
    lam: float = 2.0
    a: float = 1.0
    b: float = 1.0
    c0: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.mode, ScheduleMode):
            raise ConfigError(f"mode must be a ScheduleMode, got {self.mode!r}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise DomainError(f"lambda must be finite and > 0, got {self.lam}")
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise DomainError(f"target mean a must be finite and > 0, got {self.a}")
        if not (math.isfinite(self.b) and self.b >= 0.0):
            raise DomainError(f"target variance b must be finite and >= 0, got {self.b}")
        if not (math.isfinite(self.c0) and self.c0 >= 0.0):
            raise DomainError(f"correlation constant c0 must be finite and >= 0, got {self.c0}")
        if self.mode is ScheduleMode.EXACT_LOGNORMAL:
            if self.family.kind is not SeverityKind.GAUSSIAN:
                raise ConfigError("the exact lognormal schedule requires Gaussian severities")
            if self.b <= 0.0:
                raise ConfigError("the exact lognormal schedule needs a target variance b > 0")
            if self.lam != 2.0:
                raise ConfigError(
                    "the exact lognormal schedule fixes the speed parameter at lambda = 2"
                )

    @property
    def point(self) -> ModelPoint:
        return ModelPoint(self.family.rho, self.lam)

    def evaluate(self, n: float) -> ScheduleValues:
        """Parameters at cell count N (real-valued N admitted for plotting)."""
        if self.mode is ScheduleMode.EXACT_LOGNORMAL:
            if not n >= 1.0:
                raise DomainError(f"the exact lognormal schedule needs N >= 1, got {n}")
            mu, sigma = lognormal_exact_schedule(self.a, self.b, n)
            t = sigma
        else:
            t = t_schedule(self.point, n)
            mu = mu_schedule(self, n)
        if self.c0 == 0.0:
            rho_n = 0.0
        else:
            rho_n = correlation_schedule(self.c0, n)
        return ScheduleValues(mu=mu, t=t, rho_n=rho_n)


def mu_schedule(schedule: Schedule, n: float) -> float:
    """The location map mu_N of a schedule."""
    if schedule.mode is ScheduleMode.EXACT_LOGNORMAL:
        mu, _ = lognormal_exact_schedule(schedule.a, schedule.b, n)
        return mu
    if not n >= 2.0:
        raise DomainError(f"the schedule is defined for N >= 2, got {n}")
    lam = schedule.lam
    if schedule.mode is ScheduleMode.ASYMPTOTIC:
        return math.log(schedule.a) - (lam + 1.0) / lam * math.log(n)
    if schedule.mode is ScheduleMode.EXACT_NORMALIZED:
        t = t_schedule(schedule.point, n)
        return math.log(schedule.a) - math.log(n) - cgf_exact(schedule.family, t)
    raise ConfigError(f"unknown schedule mode {schedule.mode!r}")


def lognormal_exact_schedule(a: float, b: float, n: float) -> tuple[float, float]:
    """Solve N e^{mu + s^2/2} = a and N e^{2 mu + s^2}(e^{s^2} - 1) = b.

    Returns ``(mu, sigma)``; the closed form is
    ``sigma^2 = ln(1 + N b / a^2)`` and ``mu = ln a - ln N - sigma^2 / 2``.
    """
    if not (math.isfinite(a) and a > 0.0):
        raise DomainError(f"target mean a must be finite and > 0, got {a}")
    if not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"target variance b must be finite and > 0, got {b}")
    if not n >= 1.0:
        raise DomainError(f"cell count N must be >= 1, got {n}")
    sigma2 = math.log1p(n * b / (a * a))
    mu = math.log(a) - math.log(n) - sigma2 / 2.0
    return mu, math.sqrt(sigma2)


def correlation_schedule(c0: float, n: float) -> float:
    """The factor-correlation map rho_N = min(1, c0 / ln N)."""
    if not (math.isfinite(c0) and c0 >= 0.0):
        raise DomainError(f"correlation constant c0 must be finite and >= 0, got {c0}")
    if not n >= 2.0:
        raise DomainError(f"the correlation schedule is defined for N >= 2, got {n}")
    if c0 == 0.0:
        return 0.0
    return min(1.0, c0 / math.log(n))


_CURVES = ("A", "B", "C", "D")


def curve_lambda(curve: str, rho: float, printed: bool = False) -> float:
    """lambda on one of the phase-plane curves at tail index rho.

    A: alpha = 1; B: alpha = 2; C: zero bank-loss variance exponent;
    D: alpha = rho (the diversification frontier).  ``printed=True``
    selects the alternate typography (see module docstring).
    """
    if curve not in _CURVES:
        raise DomainError(f"curve must be one of {_CURVES}, got {curve!r}")
    rp = rho_prime(rho)
    if curve == "A":
        return 1.0 / (rho - 1.0)
    if curve == "B":
        top = (2.0 * rp) if printed else 2.0**rp
        return top / (rho - 1.0)
    if curve == "C":
        return (2.0 * rp - 2.0) if printed else 2.0**rp - 2.0
    top = (rho * rp) if printed else rho**rp
    return top / (rho - 1.0)


def var_exponent(point: ModelPoint, printed: bool = False) -> float:
    """Exponent of N in the bank-loss variance: 1 - 2(lambda+1)/lambda + 2^{rho'}/lambda."""
    rp = rho_prime(point.rho)
    lam = point.lam
    top = (2.0 * rp) if printed else 2.0**rp
    return 1.0 - 2.0 * (lam + 1.0) / lam + top / lam


def eps_var_exponent(point: ModelPoint) -> float:
    """Divergence exponent 2((lambda+1)/lambda - rho/alpha) of the normalized fluctuation's variance."""
    alpha = alpha_index(point)
    if alpha >= 2.0:
        raise DomainError(
            f"the fluctuation variance exponent is defined for alpha < 2, got alpha = {alpha}"
        )
    lam = point.lam
    return 2.0 * ((lam + 1.0) / lam - point.rho / alpha)


def _schedule_cgf(schedule: Schedule, t: float) -> float:
    """The cumulant function consistent with a schedule's mode."""
    if schedule.mode is ScheduleMode.ASYMPTOTIC:
        return cgf_asymptotic(schedule.family, t)
    return cgf_exact(schedule.family, t)


def bbm_normalizers(point: ModelPoint, schedule: Schedule, n: float) -> tuple[float, float]:
    """Centering and scale (A_N, B_N) of the bank-loss fluctuation at N.

    ``A_N = e^{mu_N} N e^{K(t_N)}`` for alpha > 1 (halved exactly at
    alpha = 1, zero below), and ``B_N = e^{mu_N} N^{rho/alpha}`` for
    alpha < 2.  For alpha > 2 the scale is the standard deviation
    ``B_N = e^{mu_N} sqrt(var S_N)``, with only half the variance entering
    at the alpha = 2 boundary.  The cumulant function follows the schedule
    mode (asymptotic or exact).
    """
    values = schedule.evaluate(n)
    mu, t = values.mu, values.t
    alpha = alpha_index(point)
    k1 = _schedule_cgf(schedule, t)
    ln_mean = mu + math.log(n) + k1
    if alpha > 1.0 + _ALPHA_TOL:
        a_val = math.exp(ln_mean)
    elif alpha >= 1.0 - _ALPHA_TOL:
        a_val = 0.5 * math.exp(ln_mean)
    else:
        a_val = 0.0
    if alpha < 2.0 - _ALPHA_TOL:
        b_val = math.exp(mu + (point.rho / alpha) * math.log(n))
    else:
        k2 = _schedule_cgf(schedule, 2.0 * t)
        ln_var = math.log(n) + k2 + math.log1p(-math.exp(min(2.0 * k1 - k2, -1e-300)))
        if alpha <= 2.0 + _ALPHA_TOL:
            ln_var -= math.log(2.0)
        b_val = math.exp(mu + 0.5 * ln_var)
    return a_val, b_val


def classify_regime(point: ModelPoint, printed: bool = False) -> RegimeReport:
    """Name the limit law, variance class and diversification sign at a point."""
    rp = rho_prime(point.rho)
    alpha = alpha_index(point)
    if alpha >= 2.0 - _ALPHA_TOL:
        region = Region.CLT
    elif alpha >= 1.0 - _ALPHA_TOL:
        region = Region.LLN_ONLY
    else:
        region = Region.NO_LLN
    v = var_exponent(point, printed=printed)
    if abs(v) <= 1e-12:
        variance_class = VarianceClass.FINITE
    elif v > 0.0:
        variance_class = VarianceClass.INFINITE
    else:
        variance_class = VarianceClass.ZERO
    diversification = Diversification.NEGATIVE if alpha <= point.rho else Diversification.POSITIVE
    curves = {c: curve_lambda(c, point.rho, printed=printed) for c in _CURVES}
    eps_exp = eps_var_exponent(point) if alpha < 2.0 - _ALPHA_TOL else math.nan
    return RegimeReport(
        rho_prime=rp,
        alpha=alpha,
        region=region,
        variance_class=variance_class,
        diversification=diversification,
        curve_lambdas=curves,
        var_exponent=v,
        eps_var_exponent=eps_exp,
    )


@dataclass(frozen=True)
class PhaseRow:
    rho: float
    lambda_A: float
    lambda_C: float
    lambda_B: float
    lambda_D: float


def phase_grid(rho_min: float, rho_max: float, steps: int, printed: bool = False) -> list[PhaseRow]:
    """Curve values on a uniform rho grid (the phase-diagram table)."""
    if not (math.isfinite(rho_min) and math.isfinite(rho_max) and 1.0 < rho_min < rho_max):
        raise DomainError(f"need 1 < rho_min < rho_max, got ({rho_min}, {rho_max})")
    if steps < 2:
        raise DomainError(f"steps must be at least 2, got {steps}")
    rows = []
    h = (rho_max - rho_min) / (steps - 1)
    for i in range(steps):
        rho = rho_min + h * i
        rows.append(
            PhaseRow(
                rho=rho,
                lambda_A=curve_lambda("A", rho, printed=printed),
                lambda_C=curve_lambda("C", rho, printed=printed),
                lambda_B=curve_lambda("B", rho, printed=printed),
                lambda_D=curve_lambda("D", rho, printed=printed),
            )
        )
    return rows


def dr_asymptotic(
    point: ModelPoint,
    q: float,
    n: float,
    family: SeverityFamily | None = None,
    printed_sign: bool = False,
) -> float:
    """Asymptotic diversification ratio at quantile level q and cell count N.

    ``F_alpha^{-1}(q) * exp((rho/alpha - 1) ln N - H^{-1}(q) t_N)`` where
    ``F_alpha^{-1}`` is the standard totally skewed stable quantile and
    ``H^{-1}`` the severity quantile.  The sub-leading term's default sign
    is the re-derived (negative) one; ``printed_sign=True`` flips it to the
    alternate convention.  ``family`` defaults to the canonical severity of
    the point: Gaussian at rho = 2, natural-scale Weibull otherwise.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if not n >= 2.0:
        raise DomainError(f"N must be >= 2, got {n}")
    alpha = alpha_index(point)
    if alpha >= 2.0:
        raise DomainError(f"the stable-quantile form requires alpha < 2, got alpha = {alpha}")
    if family is None:
        if point.rho == 2.0:
            family = SeverityFamily.gaussian()
        else:
            family = SeverityFamily.weibull(point.rho)
    elif family.rho != point.rho:
        raise ConfigError(
            f"severity tail index {family.rho} does not match the model point rho = {point.rho}"
        )
    f_inv = stable_quantile(StableDist(alpha), q)
    h_inv = quantile(family, q)
    t = t_schedule(point, n)
    sign = 1.0 if printed_sign else -1.0
    return f_inv * math.exp((point.rho / alpha - 1.0) * math.log(n) + sign * h_inv * t)


def lindeberg_margin(sigma_n: float, n: float) -> float:
    """sigma_N / sqrt(ln N / 2); above 1 the Gaussian domain is left behind."""
    if not (math.isfinite(sigma_n) and sigma_n > 0.0):
        raise DomainError(f"sigma_N must be finite and > 0, got {sigma_n}")
    if not n >= 2.0:
        raise DomainError(f"N must be >= 2, got {n}")
    return sigma_n / math.sqrt(0.5 * math.log(n))


def lognormal_pair_correlation(sigma: float, rho: float) -> float:
    """Pearson correlation of two one-factor lognormal cells.

    For cells ``exp(mu + sigma (sqrt(rho) F + sqrt(1-rho) X_i))`` the
    closed form is ``(e^{rho sigma^2} - 1) / (e^{sigma^2} - 1)``.
    """
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise DomainError(f"sigma must be finite and > 0, got {sigma}")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"factor correlation must lie in [0, 1], got {rho}")
    s2 = sigma * sigma
    return math.expm1(rho * s2) / math.expm1(s2)

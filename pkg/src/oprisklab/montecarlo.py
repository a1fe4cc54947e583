"""Replication-parallel Monte Carlo for the N-cell bank loss.

The simulated object is ``L_N = sum_i exp(mu_N + t_N (sqrt(r) F + sqrt(1-r) X_i))``
with i.i.d. severities ``X_i`` (standard Gaussian or Weibull), an optional
common factor ``F`` at correlation ``r``, and schedule-driven parameters
``(mu_N, t_N, r = rho_N)``.

Reproducibility contract: replication ``r`` consumes only the counter-based
stream keyed by ``(master_seed, r)``, so results are bit-identical for any
worker count and any partition of the replication range.  Replications are
simulated in fixed 8192-wide blocks into disjoint slices of preallocated
arrays; moments are folded in block order; bootstrap standard errors use
dedicated streams whose ids live above 2^63, disjoint from replication ids.

Estimation is one-pass streaming moments plus retained samples for
quantiles.  Replications whose log-loss would overflow ``exp`` are flagged
with NaN, counted, and excluded; a run aborts if more than 0.01% of its
replications overflow.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from . import _backend
from .errors import ConfigError, DomainError, NumericalError, PreconditionError
from .invariance import (
    ModelPoint,
    Schedule,
    alpha_index,
    bbm_normalizers,
    dr_asymptotic,
    lognormal_pair_correlation,
)
from .rng import RandomStream
from .severity import SeverityFamily, SeverityKind, cgf_exact
from .severity import quantile as severity_quantile
from .stable import StableDist, fit_location_scale, stable_cdf_batch
from .stats import StreamingMoments, bootstrap_se, empirical_quantile, ks_statistic

_BLOCK = 8192
_N_BOOT = 200
_BOOT_BASE = 2**63
_OVERFLOW_FRACTION = 1e-4
_TRIM = 0.01


@dataclass(frozen=True)
class ModelSpec:
    """Assembled model: severity family, parameter schedule, study knobs.

    ``lam`` and ``correlation_c0`` default to the schedule's own values and,
    when given explicitly, must agree with them — they exist so a spec reads
    completely on its own.
    """

    family: SeverityFamily
    schedule: Schedule
    lam: float | None = None
    q: float = 0.99
    correlation_c0: float | None = None

    def __post_init__(self) -> None:
        if self.family != self.schedule.family:
            raise ConfigError("spec family and schedule family must be the same object")
        if self.lam is None:
            object.__setattr__(self, "lam", self.schedule.lam)
        elif self.lam != self.schedule.lam:
            raise ConfigError(
                f"spec lambda {self.lam} disagrees with schedule lambda {self.schedule.lam}"
            )
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {self.q}")
        if self.correlation_c0 is None:
            object.__setattr__(self, "correlation_c0", self.schedule.c0)
        elif self.correlation_c0 != self.schedule.c0:
            raise ConfigError(
                f"spec correlation constant {self.correlation_c0} disagrees with "
                f"schedule c0 {self.schedule.c0}"
            )

    @property
    def point(self) -> ModelPoint:
        return ModelPoint(self.family.rho, float(self.lam))


@dataclass(frozen=True)
class SimEstimate:
    """Moment and quantile estimates from one simulation run."""

    n: int
    n_reps: int
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    quantiles: Mapping[float, tuple[float, float]]
    seed: int
    elapsed: float
    overflow: int = 0


@dataclass(frozen=True)
class FluctuationRow:
    N: int
    eps_var_mc: float
    eps_var_analytic: float
    ks_stable: float
    ks_normal: float
    gamma_fit: float
    delta_fit: float


@dataclass(frozen=True)
class DRRow:
    N: int
    var_bank_mc: float
    var_bank_se: float
    sum_cell_var_analytic: float
    dr_mc: float
    dr_se: float
    dr_eq15_derived: float
    dr_eq15_printed: float


@dataclass(frozen=True)
class CorrRow:
    N: int
    rho_N: float
    corr_mc: float
    corr_se: float
    corr_closed_form: float
    bank_mean: float
    bank_var: float


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        return os.cpu_count() or 1
    w = int(workers)
    if w < 1:
        raise DomainError(f"worker count must be at least 1, got {workers}")
    return w


def _blocks(n_reps: int) -> list[tuple[int, int]]:
    return [(s, min(s + _BLOCK, n_reps)) for s in range(0, n_reps, _BLOCK)]


def simulate_fixed_params(
    family: SeverityFamily,
    mu: float,
    t: float,
    rho_corr: float,
    n_cells: int,
    n_reps: int,
    master_seed: int,
    workers: int | None = None,
    want_pairs: bool = False,
) -> tuple[np.ndarray, np.ndarray | None, int]:
    """Raw engine: per-replication bank losses at fixed cell parameters.

    Returns ``(losses, pairs, n_overflow)`` where ``losses`` has one entry
    per replication (NaN if that replication overflowed), ``pairs`` holds
    the first two cell losses per replication when ``want_pairs`` is set,
    and ``n_overflow`` counts flagged replications.  Raises
    :class:`NumericalError` when more than 0.01% of replications overflow.
    """
    if n_cells < 1:
        raise DomainError(f"cell count must be at least 1, got {n_cells}")
    if want_pairs and n_cells < 2:
        raise PreconditionError("pair capture needs at least two cells")
    if n_reps < 1:
        raise DomainError(f"replication count must be at least 1, got {n_reps}")
    if not (math.isfinite(mu) and math.isfinite(t) and t >= 0.0):
        raise DomainError(f"need finite mu and t >= 0, got mu={mu}, t={t}")
    if not 0.0 <= rho_corr <= 1.0:
        raise DomainError(f"factor correlation must lie in [0, 1], got {rho_corr}")
    RandomStream(master_seed)  # validates the seed range
    fam_code = 0 if family.kind is SeverityKind.GAUSSIAN else 1
    losses = np.empty(n_reps, dtype=np.float64)
    pair_flat = np.empty(2 * n_reps if want_pairs else 2, dtype=np.float64)
    kernel = _backend.kernels.simulate_block

    def run_block(block: tuple[int, int]) -> int:
        s, e = block
        out_pair = pair_flat[2 * s : 2 * e] if want_pairs else pair_flat
        return kernel(
            mu, t, rho_corr, fam_code, family.rho, family.c,
            master_seed, s, e, n_cells, losses[s:e], out_pair, want_pairs,
        )

    blocks = _blocks(n_reps)
    n_workers = _resolve_workers(workers)
    if n_workers == 1 or len(blocks) == 1:
        counts = [run_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            counts = list(pool.map(run_block, blocks))
    n_overflow = int(sum(counts))
    if n_overflow > _OVERFLOW_FRACTION * n_reps:
        raise NumericalError(
            f"{n_overflow} of {n_reps} replications overflowed the exp guard; "
            "the parameter schedule is outside the simulable range"
        )
    pairs = pair_flat.reshape(n_reps, 2) if want_pairs else None
    return losses, pairs, n_overflow


def _fold_moments(losses: np.ndarray, has_nan: bool) -> StreamingMoments:
    """Per-block moments merged in block order (worker-count independent)."""
    total = StreamingMoments()
    for s, e in _blocks(losses.size):
        chunk = losses[s:e]
        if has_nan:
            chunk = chunk[np.isfinite(chunk)]
        if chunk.size:
            total = total.merge(StreamingMoments.from_samples(chunk))
    return total


def _variance_se(x: np.ndarray) -> float:
    """Nonparametric standard error of the sample variance (4th-moment form)."""
    n = x.size
    if n < 4:
        return math.nan
    d = x - x.mean()
    s2 = float(np.sum(d * d)) / (n - 1)
    m4 = float(np.mean(d**4))
    v = (m4 - s2 * s2 * (n - 3) / (n - 1)) / n
    return math.sqrt(max(v, 0.0))


def _valid(losses: np.ndarray, n_overflow: int) -> np.ndarray:
    return losses[np.isfinite(losses)] if n_overflow else losses


def simulate_bank_loss(
    spec: ModelSpec,
    n: int,
    n_reps: int,
    master_seed: int,
    workers: int | None = None,
    levels: Sequence[float] | None = None,
) -> SimEstimate:
    """Estimate mean, variance and quantiles of L_N from ``n_reps`` replications."""
    if n_reps < 100:
        raise PreconditionError(f"need at least 100 replications, got {n_reps}")
    n = int(n)
    start = time.perf_counter()
    vals = spec.schedule.evaluate(n)
    losses, _, n_overflow = simulate_fixed_params(
        spec.family, vals.mu, vals.t, vals.rho_n, n, n_reps, master_seed, workers
    )
    moments = _fold_moments(losses, n_overflow > 0)
    valid = _valid(losses, n_overflow)
    variance = moments.variance
    mean_se = math.sqrt(variance / moments.count)
    if levels is None:
        levels = (spec.q,)
    quantiles: dict[float, tuple[float, float]] = {}
    for j, level in enumerate(sorted(levels)):
        value = empirical_quantile(valid, level)
        se = bootstrap_se(
            valid,
            lambda x, _q=level: empirical_quantile(x, _q),
            _N_BOOT,
            RandomStream(master_seed, _BOOT_BASE + 256 * n + j),
        )
        quantiles[float(level)] = (value, se)
    return SimEstimate(
        n=n,
        n_reps=n_reps,
        mean=moments.mean,
        mean_se=mean_se,
        variance=variance,
        variance_se=_variance_se(valid),
        quantiles=quantiles,
        seed=master_seed,
        elapsed=time.perf_counter() - start,
        overflow=n_overflow,
    )


def _bank_loss_variance(
    family: SeverityFamily, mu: float, t: float, rho_corr: float, n: int
) -> float:
    """Closed-form var[L_N]; NaN when no closed form applies (correlated Weibull)."""
    k1 = cgf_exact(family, t)
    k2 = cgf_exact(family, 2.0 * t)
    ln_ind = 2.0 * mu + math.log(n) + k2 + math.log1p(-math.exp(min(2.0 * k1 - k2, -1e-300)))
    var = math.exp(ln_ind)
    if rho_corr > 0.0:
        if family.kind is not SeverityKind.GAUSSIAN:
            return math.nan
        s2 = t * t
        var += n * (n - 1) * math.exp(2.0 * mu + s2) * math.expm1(rho_corr * s2)
    return var


def eps_variance_analytic(spec: ModelSpec, n: int) -> float:
    """Closed-form variance of the normalized fluctuation eps_N = (L_N - A_N)/B_N."""
    n = int(n)
    vals = spec.schedule.evaluate(n)
    _, b_n = bbm_normalizers(spec.point, spec.schedule, n)
    return _bank_loss_variance(spec.family, vals.mu, vals.t, vals.rho_n, n) / (b_n * b_n)


def fluctuation_study(
    spec: ModelSpec,
    n_list: Sequence[int],
    n_reps: int,
    master_seed: int,
    workers: int | None = None,
) -> list[FluctuationRow]:
    """Empirical law of the normalized fluctuation eps_N at each N.

    For alpha < 2 the sample is compared against the totally skewed stable
    law with the theory-fixed index (scale/location fitted by quartile
    matching) and against a Gaussian moment-matched on a sample trimmed by
    1% in each tail (the raw second moment is tail-dominated — the trim is
    a diagnostic choice).  For alpha >= 2 only the Gaussian comparison is
    meaningful; the stable columns are NaN.
    """
    if n_reps < 100:
        raise PreconditionError(f"need at least 100 replications, got {n_reps}")
    point = spec.point
    alpha = alpha_index(point)
    rows = []
    for n in n_list:
        n = int(n)
        vals = spec.schedule.evaluate(n)
        losses, _, n_overflow = simulate_fixed_params(
            spec.family, vals.mu, vals.t, vals.rho_n, n, n_reps, master_seed, workers
        )
        a_n, b_n = bbm_normalizers(point, spec.schedule, n)
        eps = np.sort((_valid(losses, n_overflow) - a_n) / b_n)
        eps_var_mc = _fold_moments((losses - a_n) / b_n, n_overflow > 0).variance
        k = int(_TRIM * eps.size)
        core = eps[k : eps.size - k] if k > 0 else eps
        mu_fit = float(core.mean())
        sd_fit = float(core.std(ddof=1))
        ks_normal = ks_statistic(eps, lambda x: ndtr((x - mu_fit) / sd_fit))
        if alpha < 2.0:
            gamma_fit, delta_fit = fit_location_scale(eps, alpha)
            law = StableDist(alpha, gamma=gamma_fit, delta=delta_fit)
            ks_stable = ks_statistic(eps, lambda x: stable_cdf_batch(law, x))
        else:
            ks_stable = gamma_fit = delta_fit = math.nan
        rows.append(
            FluctuationRow(
                N=n,
                eps_var_mc=eps_var_mc,
                eps_var_analytic=eps_variance_analytic(spec, n),
                ks_stable=ks_stable,
                ks_normal=ks_normal,
                gamma_fit=gamma_fit,
                delta_fit=delta_fit,
            )
        )
    return rows


def dr_study(
    spec: ModelSpec,
    n_list: Sequence[int],
    n_reps: int,
    master_seed: int,
    workers: int | None = None,
) -> list[DRRow]:
    """Diversification ratio VaR_q(L_N) / sum_i VaR_q(Y_i) at each N.

    The numerator is the empirical quantile over replications with a
    bootstrap standard error; the denominator is exact, ``N e^{mu_N + t_N
    H^{-1}(q)}``, because the cells are exchangeable.  Each row also carries
    the asymptotic ratio under both sub-leading sign conventions (NaN when
    alpha >= 2 or N < 2, where the stable form does not apply).
    """
    q = spec.q
    if not 0.5 < q < 1.0:
        raise PreconditionError(f"VaR studies need q in (0.5, 1), got {q}")
    tail_points = n_reps * (1.0 - q)
    if tail_points < 20.0:
        raise PreconditionError(
            f"{n_reps} replications leave only {tail_points:.1f} expected tail points "
            f"beyond q={q}; need at least 20"
        )
    point = spec.point
    alpha = alpha_index(point)
    h_q = severity_quantile(spec.family, q)
    rows = []
    for n in n_list:
        n = int(n)
        vals = spec.schedule.evaluate(n)
        losses, _, n_overflow = simulate_fixed_params(
            spec.family, vals.mu, vals.t, vals.rho_n, n, n_reps, master_seed, workers
        )
        valid = _valid(losses, n_overflow)
        var_bank = empirical_quantile(valid, q)
        var_bank_se = bootstrap_se(
            valid,
            lambda x: empirical_quantile(x, q),
            _N_BOOT,
            RandomStream(master_seed, _BOOT_BASE + 256 * n),
        )
        denom = math.exp(math.log(n) + vals.mu + vals.t * h_q)
        if alpha < 2.0 and n >= 2:
            dr_derived = dr_asymptotic(point, q, n, family=spec.family)
            dr_printed = dr_asymptotic(point, q, n, family=spec.family, printed_sign=True)
        else:
            dr_derived = dr_printed = math.nan
        rows.append(
            DRRow(
                N=n,
                var_bank_mc=var_bank,
                var_bank_se=var_bank_se,
                sum_cell_var_analytic=denom,
                dr_mc=var_bank / denom,
                dr_se=var_bank_se / denom,
                dr_eq15_derived=dr_derived,
                dr_eq15_printed=dr_printed,
            )
        )
    return rows


def _pair_corr(pairs: np.ndarray) -> float:
    return float(np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1])


def correlation_study(
    spec: ModelSpec,
    n_list: Sequence[int],
    n_reps: int,
    master_seed: int,
    workers: int | None = None,
) -> list[CorrRow]:
    """Empirical cell-pair correlation against its lognormal closed form.

    Gaussian severities only.  Exchangeability makes the first pair of cells
    representative, so the estimator is the Pearson correlation of
    ``(Y_1, Y_2)`` across replications.
    """
    if spec.family.kind is not SeverityKind.GAUSSIAN:
        raise PreconditionError("the correlation study requires Gaussian severities")
    if n_reps < 100:
        raise PreconditionError(f"need at least 100 replications, got {n_reps}")
    rows = []
    for n in n_list:
        n = int(n)
        vals = spec.schedule.evaluate(n)
        losses, pairs, n_overflow = simulate_fixed_params(
            spec.family,
            vals.mu,
            vals.t,
            vals.rho_n,
            n,
            n_reps,
            master_seed,
            workers,
            want_pairs=True,
        )
        if n_overflow:
            pairs = pairs[np.isfinite(pairs).all(axis=1)]
        corr_mc = _pair_corr(pairs)
        corr_se = bootstrap_se(
            pairs, _pair_corr, _N_BOOT, RandomStream(master_seed, _BOOT_BASE + 256 * n + 1)
        )
        moments = _fold_moments(losses, n_overflow > 0)
        rows.append(
            CorrRow(
                N=n,
                rho_N=vals.rho_n,
                corr_mc=corr_mc,
                corr_se=corr_se,
                corr_closed_form=lognormal_pair_correlation(vals.t, vals.rho_n),
                bank_mean=moments.mean,
                bank_var=moments.variance,
            )
        )
    return rows

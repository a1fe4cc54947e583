"""Acceptance gate: ten end-to-end checks, one verdict line each.

Each test prints ``[criterion NN] PASS/FAIL - name: detail`` (collected again
in the terminal summary) and then asserts, so a red criterion still reports
its measured numbers.  Monte Carlo work shares the canonical seed; the two
heaviest runs are reused across criteria through module-scoped fixtures.
"""

import math

import numpy as np
import pytest
from scipy.special import erfc, ndtr, ndtri

from conftest import record_criterion

from oprisklab import (
    Diversification,
    ModelPoint,
    ModelSpec,
    ParamConvention,
    RandomStream,
    Region,
    Schedule,
    ScheduleMode,
    SeverityFamily,
    StableDist,
    VarianceClass,
    alpha_index,
    classify_regime,
    correlation_study,
    curve_lambda,
    dr_study,
    eps_var_exponent,
    eps_variance_analytic,
    fluctuation_study,
    lindeberg_margin,
    simulate_bank_loss,
    stable_cdf,
    stable_cdf_batch,
    stable_sample,
    t_schedule,
    var_exponent,
)
from oprisklab.severity import cgf_exact
from oprisklab.stats import ks_statistic, loglog_slope

SEED = 0x5EED0001
GAUSS = SeverityFamily.gaussian()
SQRT2 = math.sqrt(2.0)

N_LIST_STUDY = tuple(2**k for k in range(6, 15))  # 2^6 .. 2^14


def normalized_spec(lam=2.0, c0=0.0):
    sched = Schedule(mode=ScheduleMode.EXACT_NORMALIZED, family=GAUSS, lam=lam, a=1.0, c0=c0)
    return ModelSpec(family=GAUSS, schedule=sched)


def lognormal_spec():
    sched = Schedule(mode=ScheduleMode.EXACT_LOGNORMAL, family=GAUSS, lam=2.0, a=1.0, b=1.0)
    return ModelSpec(family=GAUSS, schedule=sched)


@pytest.fixture(scope="module")
def fluctuation_rows():
    # shared by criteria 5 and 6 (the single most expensive normalized run)
    return fluctuation_study(normalized_spec(), [2**8, 2**10, 2**12, 2**14], 50_000, SEED)


def test_criterion_01_regime_algebra_exact():
    point = ModelPoint(2.0, 2.0)
    devs = [
        abs(alpha_index(point) - SQRT2),
        abs(curve_lambda("A", 2.0) - 1.0),
        abs(curve_lambda("C", 2.0) - 2.0),
        abs(curve_lambda("B", 2.0) - 4.0),
        abs(curve_lambda("D", 2.0) - 4.0),
        abs(var_exponent(point) - 0.0),
        abs(eps_var_exponent(point) - (3.0 - 2.0 * SQRT2)),
    ]
    worst = max(devs)
    ok = worst <= 1e-12
    line = record_criterion(1, "regime algebra exact", ok, f"max deviation {worst:.2e} (tol 1e-12)")
    assert ok, line


def test_criterion_02_curve_self_consistency_sweep():
    rhos = np.linspace(1.05, 10.0, 201)[1:]  # 200 values in (1.05, 10]
    worst = 0.0
    alpha_c_ok = True
    for rho in rhos:
        rho = float(rho)
        worst = max(
            worst,
            abs(alpha_index(ModelPoint(rho, curve_lambda("A", rho))) - 1.0),
            abs(alpha_index(ModelPoint(rho, curve_lambda("B", rho))) - 2.0),
            abs(alpha_index(ModelPoint(rho, curve_lambda("D", rho))) - rho),
            abs(var_exponent(ModelPoint(rho, curve_lambda("C", rho)))),
        )
        a_c = alpha_index(ModelPoint(rho, curve_lambda("C", rho)))
        alpha_c_ok = alpha_c_ok and 1.0 < a_c < 2.0
    ok = worst <= 1e-10 and alpha_c_ok
    line = record_criterion(
        2, "curve self-consistency", ok,
        f"max inversion error {worst:.2e} (tol 1e-10), alpha on C in (1,2): {alpha_c_ok}",
    )
    assert ok, line


def test_criterion_03_moment_pinning():
    spec = lognormal_spec()

    worst = 0.0
    for n in (1, 10, 10**3, 10**6):
        vals = spec.schedule.evaluate(n)
        k1 = cgf_exact(GAUSS, vals.t)
        k2 = cgf_exact(GAUSS, 2.0 * vals.t)
        mean = n * math.exp(vals.mu + k1)
        var = n * math.exp(2.0 * vals.mu) * (math.exp(k2) - math.exp(2.0 * k1))
        worst = max(worst, abs(mean - 1.0), abs(var - 1.0))
    analytic_ok = worst <= 1e-10

    mc_parts = []
    mc_ok = True
    for n in (1, 4096):
        est = simulate_bank_loss(spec, n, 100_000, SEED)
        mean_ok = abs(est.mean - 1.0) <= 3.0 * est.mean_se
        var_ok = abs(est.variance - 1.0) <= 0.10
        mc_ok = mc_ok and mean_ok and var_ok
        mc_parts.append(
            f"N={n}: mean {est.mean:.4f} (3se {3 * est.mean_se:.4f}, {'ok' if mean_ok else 'OFF'}),"
            f" var {est.variance:.4f} ({'ok' if var_ok else 'OFF'} at 10%)"
        )
    ok = analytic_ok and mc_ok
    line = record_criterion(
        3, "moment pinning", ok,
        f"analytic max |dev| {worst:.2e} (tol 1e-10); MC " + "; ".join(mc_parts),
    )
    assert ok, line


def test_criterion_04_mean_scaling_exponent():
    # mu_N fixed at 0: E[S_N] = N e^{H(t_N)}, whose log-log slope is (lam+1)/lam
    point = ModelPoint(2.0, 2.0)
    pts = []
    for n in np.geomspace(10**3, 10**7, 9):
        t = t_schedule(point, float(n))
        pts.append((float(n), float(n) * math.exp(cgf_exact(GAUSS, t))))
    slope, _, _ = loglog_slope(pts)
    ok = abs(slope - 1.5) <= 0.03
    line = record_criterion(4, "mean-scaling exponent", ok, f"slope {slope:.6f} vs 1.5 (tol 2%)")
    assert ok, line


def test_criterion_05_lindeberg_exit(fluctuation_rows):
    point = ModelPoint(2.0, 2.0)
    margin_dev = max(
        abs(lindeberg_margin(t_schedule(point, n), n) - SQRT2) for n in (4.0, 1e3, 1e6, 1e12)
    )
    margin_ok = margin_dev <= 1e-12
    last = fluctuation_rows[-1]
    ks_ok = last.ks_stable < last.ks_normal
    ok = margin_ok and ks_ok
    line = record_criterion(
        5, "Lindeberg exit", ok,
        f"margin dev {margin_dev:.2e} from sqrt(2); at N=2^14 KS(stable) {last.ks_stable:.4f}"
        f" < KS(normal) {last.ks_normal:.4f}: {ks_ok}",
    )
    assert ok, line


def test_criterion_06_fluctuation_variance_slope(fluctuation_rows):
    spec = normalized_spec()
    target = 3.0 - 2.0 * SQRT2
    analytic_pts = [(float(2**k), eps_variance_analytic(spec, 2**k)) for k in range(8, 21, 2)]
    slope_an, _, _ = loglog_slope(analytic_pts)
    mc_pts = [(float(r.N), r.eps_var_mc) for r in fluctuation_rows]
    slope_mc, _, _ = loglog_slope(mc_pts)
    an_ok = abs(slope_an - target) <= 0.02
    mc_ok = abs(slope_mc - target) <= 0.10
    ok = an_ok and mc_ok
    mc_txt = ", ".join(f"{r.N}: {r.eps_var_mc:.3f}/{r.eps_var_analytic:.3f}" for r in fluctuation_rows)
    line = record_criterion(
        6, "eps variance slope", ok,
        f"analytic {slope_an:.5f} (tol 0.02), MC {slope_mc:.5f} (tol 0.10), target {target:.5f};"
        f" var mc/analytic by N: {mc_txt}",
    )
    assert ok, line


def test_criterion_07_negative_diversification_lognormal():
    spec = lognormal_spec()
    rows = dr_study(spec, N_LIST_STUDY, 200_000, SEED)
    z_q = ndtri(spec.q)
    crossover = math.expm1(z_q * z_q)  # a^2/b = 1
    beyond = [r for r in rows if r.N > crossover]
    denom_ok = all(a.sum_cell_var_analytic > b.sum_cell_var_analytic for a, b in zip(beyond, beyond[1:]))
    numer_ok = all(r.var_bank_mc >= 0.5 for r in rows)
    top4 = rows[-4:]
    trend_ok = all(a.dr_mc < b.dr_mc for a, b in zip(top4, top4[1:]))
    ok = denom_ok and numer_ok and trend_ok
    dr_txt = ", ".join(f"{r.dr_mc:.3f}" for r in rows)
    line = record_criterion(
        7, "negative diversification", ok,
        f"denominator decreasing beyond N*~{crossover:.0f}: {denom_ok}; "
        f"numerator >= 0.5a: {numer_ok}; DR rising over top four: {trend_ok} (DR: {dr_txt})",
    )
    assert ok, line


def test_criterion_08_clt_region_contrast():
    report = classify_regime(ModelPoint(2.0, 5.0))
    labels_ok = (
        report.region is Region.CLT
        and report.variance_class is VarianceClass.ZERO
        and report.diversification is Diversification.POSITIVE
    )
    rows = fluctuation_study(normalized_spec(lam=5.0), N_LIST_STUDY, 20_000, SEED)
    ks = [r.ks_normal for r in rows]
    slope, _, _ = loglog_slope([(float(r.N), r.ks_normal) for r in rows])
    ks_ok = ks[-1] < ks[0] and slope < 0.0
    ok = labels_ok and ks_ok
    line = record_criterion(
        8, "CLT-region contrast", ok,
        f"labels (CLT, ZERO, POSITIVE): {labels_ok}; KS(normal) "
        + " -> ".join(f"{v:.4f}" for v in ks)
        + f", slope {slope:.3f}",
    )
    assert ok, line


def test_criterion_09_correlation_decay():
    spec = normalized_spec(c0=1.0)
    n_list = tuple(2**k for k in range(4, 15))  # 2^4 .. 2^14
    rows = correlation_study(spec, n_list, 100_000, SEED)
    match_ok = all(abs(r.corr_mc - r.corr_closed_form) <= 3.0 * r.corr_se for r in rows)
    corr = [r.corr_mc for r in rows]
    slope = float(np.polyfit(np.log([r.N for r in rows]), corr, 1)[0])
    decay_ok = corr[0] > corr[-1] and slope < 0.0
    means = [r.bank_mean for r in rows]
    mean_ok = max(means) <= 2.0 * min(means)
    ok = match_ok and decay_ok and mean_ok
    line = record_criterion(
        9, "correlation decay", ok,
        f"within 3se at every N: {match_ok}; decreasing ({corr[0]:.4f} -> {corr[-1]:.4f}, "
        f"slope {slope:.4f}): {decay_ok}; bank mean within factor 2: {mean_ok}",
    )
    assert ok, line


def test_criterion_10_stable_law_anchors():
    # closed-form anchors exercise the quadrature region on both edges of alpha
    gauss = StableDist(2.0, gamma=1.3, delta=-0.7)
    xs = -0.7 + 1.3 * SQRT2 * np.linspace(-6.0, 6.0, 100)
    gauss_dev = max(
        abs(stable_cdf(gauss, float(x)) - ndtr((x + 0.7) / (1.3 * SQRT2))) for x in xs
    )

    levy = StableDist(0.5, gamma=2.0, delta=1.0, convention=ParamConvention.CLASSIC)
    us = np.geomspace(0.02, 40.0, 100)
    levy_dev = max(
        abs(stable_cdf(levy, 1.0 + 2.0 * float(u)) - erfc(math.sqrt(1.0 / (2.0 * u)))) for u in us
    )
    anchors_ok = gauss_dev <= 1e-6 and levy_dev <= 1e-6

    n = 100_000
    crit = 1.628 / math.sqrt(n)  # KS critical value at 1% significance
    ks_vals = {}
    for k, alpha in enumerate((0.8, 1.0, SQRT2, 1.8, 2.0)):
        dist = StableDist(alpha, gamma=1.0, delta=0.0)
        samples = stable_sample(dist, RandomStream(SEED, 100 + k), n)
        ks_vals[alpha] = ks_statistic(np.sort(samples), lambda x: stable_cdf_batch(dist, x))
    ks_ok = all(v < crit for v in ks_vals.values())
    ok = anchors_ok and ks_ok
    ks_txt = ", ".join(f"a={a:.3g}: {v:.5f}" for a, v in ks_vals.items())
    line = record_criterion(
        10, "stable-law anchors", ok,
        f"gaussian dev {gauss_dev:.2e}, levy dev {levy_dev:.2e} (tol 1e-6); "
        f"sampler KS vs {crit:.5f}: {ks_txt}",
    )
    assert ok, line

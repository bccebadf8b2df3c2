import math

import numpy as np
import pytest

from busylab import (CycleCaps, Exponential, FunctionalSpec, Pareto,
                     QueueParams, PLAIN_QUEUE_AREA, PLAIN_WORKLOAD_AREA,
                     make_stream)
from busylab import asymptotics as asy
from busylab import estimation as est
from busylab.batch import run_cycles
from busylab.errors import (DegenerateSample, DomainError, EmptySample,
                            GridMismatch, InsufficientWindow, TooFewQualifiers)

MM1 = QueueParams(Exponential(0.5), Exponential(1.0))


def _fake_estimate(grid, p, n_cycles=10 ** 7, counts=None, quantity="x"):
    grid = np.asarray(grid, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if counts is None:
        counts = np.maximum((p * n_cycles).astype(np.int64), 1)
    lo = np.array([est.wilson_interval(c, n_cycles)[0] for c in counts])
    hi = np.array([est.wilson_interval(c, n_cycles)[1] for c in counts])
    return est.TailEstimate(
        quantity=quantity, grid=grid, p_hat=p, ci_lo=np.minimum(lo, p),
        ci_hi=np.maximum(hi, p), exceed_count=counts,
        ess=counts.astype(np.float64), biased_low=np.zeros(len(grid), bool),
        n_cycles=n_cycles, n_censored=0, weighted=False, params_digest="d")


def test_wilson_hand_value():
    lo, hi = est.wilson_interval(10, 100)
    assert abs(lo - 0.055) < 1e-3
    assert abs(hi - 0.174) < 1e-3
    lo0, hi0 = est.wilson_interval(0, 50)
    assert lo0 == 0.0 and hi0 > 0.0
    lo1, hi1 = est.wilson_interval(50, 50)
    assert hi1 == 1.0 and lo1 < 1.0
    with pytest.raises(EmptySample):
        est.wilson_interval(1, 0)


def test_tally_counting_semantics():
    tally = est.TailTally("x", [2.5])
    tally.update(np.array([1.0, 2.0, 3.0, 4.0]))
    e = tally.estimate()
    assert e.p_hat[0] == 0.5
    tally = est.TailTally("x", [0.5, 2.0, 3.999])
    tally.update(np.array([1.0, 2.0, 3.0, 4.0]))
    e = tally.estimate()
    assert list(e.p_hat) == [1.0, 0.5, 0.25]
    assert list(e.exceed_count) == [4, 2, 1]
    # strict exceedance: a value equal to the level does not count
    tally = est.TailTally("x", [2.0])
    tally.update(np.array([2.0, 2.0, 3.0]))
    assert tally.estimate().p_hat[0] == pytest.approx(1.0 / 3.0)


def test_tally_incremental_updates_match_single():
    rng = np.random.default_rng(0)
    values = rng.exponential(1.0, size=5000)
    grid = np.geomspace(0.1, 8.0, 12)
    one = est.TailTally("x", grid)
    one.update(values)
    two = est.TailTally("x", grid)
    two.update(values[:1234])
    two.update(values[1234:])
    a, b = one.estimate(), two.estimate()
    assert np.array_equal(a.exceed_count, b.exceed_count)
    assert np.allclose(a.p_hat, b.p_hat, rtol=0, atol=0)


def test_tally_censored_semantics():
    # censored values are lower bounds: exceed only where the bound clears
    grid = np.array([1.0, 3.0])
    tally = est.TailTally("x", grid)
    tally.update(np.array([2.0, 5.0]), censored=np.array([True, True]))
    e = tally.estimate()
    assert list(e.exceed_count) == [2, 1]
    # the second grid point is undetermined for the bound-2.0 cycle
    assert list(e.biased_low) == [False, True]
    assert e.n_censored == 2


def test_tally_weighted_and_ess():
    grid = np.array([1.0])
    tally = est.TailTally("x", grid, weighted=True)
    tally.update(np.array([2.0, 2.0, 0.5]), weights=np.array([0.2, 0.2, 0.6]))
    e = tally.estimate()
    assert abs(e.p_hat[0] - 0.4) < 1e-15
    assert abs(e.ess[0] - 2.0) < 1e-12  # two equal weights above the level
    assert e.weighted
    with pytest.raises(ValueError):
        tally.update(np.array([1.0]))  # weights required


def test_empirical_tail_from_sample():
    sample = run_cycles(MM1, 20_000, master_seed=3)
    grid = np.geomspace(0.5, 20.0, 15)
    e = est.empirical_tail(sample, "tau", grid)
    assert e.n_cycles == 20_000
    assert np.all(np.diff(e.p_hat) <= 0.0)
    assert np.all(e.ci_lo <= e.p_hat) and np.all(e.p_hat <= e.ci_hi)
    assert e.params_digest == MM1.digest()
    direct = np.array([(sample.tau > x).mean() for x in grid])
    assert np.allclose(e.p_hat, direct, atol=0.0)
    with pytest.raises(EmptySample):
        est.TailTally("x", grid).estimate()


def test_hill_on_exact_pareto():
    rng = np.random.default_rng(3)
    x = (1.0 - rng.random(10 ** 5)) ** (-1.0 / 2.0)  # exact Pareto(2)
    h = est.hill_estimator(x)
    assert 1.88 <= h.alpha <= 2.12
    assert h.ci_lo < h.alpha < h.ci_hi
    assert h.k == est.default_hill_k(10 ** 5)


def test_hill_scale_invariance():
    rng = np.random.default_rng(4)
    x = (1.0 - rng.random(20_000)) ** (-1.0 / 1.5)
    a = est.hill_estimator(x, k=500).alpha
    b = est.hill_estimator(123.456 * x, k=500).alpha
    assert abs(a - b) < 1e-12


def test_hill_errors():
    with pytest.raises(DegenerateSample):
        est.hill_estimator(np.ones(100), k=10)
    with pytest.raises(DomainError):
        est.hill_estimator(np.arange(1.0, 100.0), k=1)
    with pytest.raises(DomainError):
        est.hill_estimator(np.arange(1.0, 100.0), k=99)
    with pytest.raises(EmptySample):
        est.hill_estimator(np.array([1.0]))


def test_default_hill_k():
    assert est.default_hill_k(10 ** 5) == 2154
    assert est.default_hill_k(10 ** 7) == 46415
    assert est.default_hill_k(40) == 4  # n/10 cap binds


def test_fit_stretched_exact_recovery():
    grid = np.geomspace(10.0, 2000.0, 40)
    fr = est.fit_tail(_fake_estimate(grid, np.exp(-0.4 * np.sqrt(grid))),
                      est.MODEL_STRETCHED, window=est.FitWindow(),
                      include_quarter_log=False)
    assert abs(fr.value("psi") - 0.4) < 1e-10
    assert fr.se("psi") >= 0.0
    # quarter-log variant on data generated with the quarter-log term
    p = grid ** -0.25 * np.exp(-0.4 * np.sqrt(grid))
    fr2 = est.fit_tail(_fake_estimate(grid, p / p.max() * 0.5),
                       est.MODEL_STRETCHED, window=est.FitWindow())
    assert abs(fr2.value("psi") - 0.4) < 1e-10


def test_fit_quarter_log_term_small_effect():
    # deep in the tail ln(x) is nearly affine in sqrt(x), so toggling the
    # -ln(x)/4 term moves psi-hat by under 0.5% on a two-decade deep window
    # (analytically: the shift is about ln(x_hi/x_lo)/(4*(sqrt(x_hi)-sqrt(x_lo))))
    grid = np.geomspace(1e4, 1e6, 30)
    p = grid ** -0.25 * np.exp(-0.4 * np.sqrt(grid))
    p = p / p.max() * 0.3
    e = _fake_estimate(grid, p, counts=np.full(30, 10 ** 6, dtype=np.int64))
    with_term = est.fit_tail(e, est.MODEL_STRETCHED, window=est.FitWindow(),
                             include_quarter_log=True).value("psi")
    without = est.fit_tail(e, est.MODEL_STRETCHED, window=est.FitWindow(),
                           include_quarter_log=False).value("psi")
    assert abs(with_term - 0.4) < 0.002
    assert abs(with_term - without) / with_term < 0.005


def test_fit_loglog_exact_recovery():
    grid = np.geomspace(10.0, 1e4, 25)
    fr = est.fit_tail(_fake_estimate(grid, 0.7 * grid ** (-1.0 / 3.0)),
                      est.MODEL_LOGLOG, window=est.FitWindow())
    assert abs(fr.value("slope") + 1.0 / 3.0) < 1e-12


def test_fit_coverage_on_nested_counts():
    # synthetic replication with the true nested-exceedance noise model
    # (binomial thinning down the grid); the quoted WLS standard errors
    # must cover the truth at 95% nominal in at least 90 of 100 replicates
    rng = np.random.default_rng(77)
    grid = np.geomspace(20.0, 3000.0, 25)
    truth = np.exp(-0.4 * np.sqrt(grid))
    n = 10 ** 7
    hits = 0
    for _ in range(100):
        counts = np.empty(len(grid), dtype=np.int64)
        counts[0] = rng.binomial(n, truth[0])
        for j in range(1, len(grid)):
            counts[j] = rng.binomial(counts[j - 1], truth[j] / truth[j - 1])
        keep = counts > 0
        e = _fake_estimate(grid[keep], counts[keep] / n, n_cycles=n,
                           counts=counts[keep])
        fr = est.fit_tail(e, est.MODEL_STRETCHED, window=est.FitWindow(),
                          include_quarter_log=False)
        if abs(fr.value("psi") - 0.4) <= 1.96 * fr.se("psi"):
            hits += 1
    assert hits >= 90


def test_fit_window_and_errors():
    grid = np.geomspace(10.0, 2000.0, 40)
    e = _fake_estimate(grid, np.exp(-0.4 * np.sqrt(grid)))
    with pytest.raises(InsufficientWindow):
        est.fit_tail(e, est.MODEL_STRETCHED, window=est.FitWindow(x_lo=1900.0))
    with pytest.raises(DomainError):
        est.fit_tail(e, "NoSuchModel", window=est.FitWindow())
    # default stretched window honours p in [max(1e-6, 5/n), 1e-2]
    fr = est.fit_tail(e, est.MODEL_STRETCHED)
    window_p = np.exp(-0.4 * np.sqrt(np.array(fr.window)))
    assert window_p[0] <= 1e-2 * 1.0001
    assert window_p[1] >= 1e-6 * 0.999


def test_ratio_diagnostic_identity_and_flags():
    grid = np.geomspace(1.0, 100.0, 10)
    p = 0.5 * grid ** -1.2
    e = _fake_estimate(grid, p, n_cycles=10 ** 6)
    curve = asy.AsymptoticCurve(name="X", kind="probability", params_digest="d",
                                grid=grid, values=p, applicability="applicable")
    diag = est.ratio_diagnostic(e, curve)
    assert np.allclose(diag.ratio, 1.0, atol=0.0)
    assert np.all(diag.ci_lo <= 1.0) and np.all(diag.ci_hi >= 1.0)
    assert diag.confident_within(0.9, 1.1)
    # low-confidence flags kick in below 200 exceedances
    assert np.array_equal(diag.low_confidence, e.exceed_count < 200)


def test_ratio_diagnostic_grid_and_digest_mismatch():
    grid = np.geomspace(1.0, 100.0, 10)
    e = _fake_estimate(grid, 0.5 * grid ** -1.2)
    other = asy.AsymptoticCurve(name="X", kind="probability", params_digest="e",
                                grid=grid, values=0.5 * grid ** -1.2,
                                applicability="applicable")
    with pytest.raises(GridMismatch):
        est.ratio_diagnostic(e, other)
    shifted = asy.AsymptoticCurve(name="X", kind="probability", params_digest="d",
                                  grid=grid * 1.5, values=0.5 * grid ** -1.2,
                                  applicability="applicable")
    with pytest.raises(GridMismatch):
        est.ratio_diagnostic(e, shifted)


def test_ratio_of_two_estimates():
    grid = np.geomspace(1.0, 100.0, 10)
    num = _fake_estimate(grid, 0.5 * grid ** -1.2)
    den = _fake_estimate(grid * 2.0, 0.5 * grid ** -1.2, quantity="tau")
    diag = est.ratio_diagnostic(num, den)
    assert np.allclose(diag.ratio, 1.0)
    assert diag.denominator == "tau"


def test_tilted_run_gamma_zero_equals_plain():
    # gamma = 0 gives unit weights and, cycle for cycle, exactly the plain
    # run under the same stop rule and caps
    from busylab.cycles import _StopRule
    grid = np.array([2.0, 5.0, 10.0])
    out = est.tilted_run(MM1, 0.0, 30_000, {"tau": grid}, master_seed=12)["tau"]
    same_caps = QueueParams(MM1.interarrival, MM1.service, MM1.functionals,
                            CycleCaps(max_customers=10 ** 7))
    stop = _StopRule(float(grid.max()), np.array([-np.inf, -np.inf]))
    plain = run_cycles(same_caps, 30_000, master_seed=12, stop_rule=stop)
    assert np.all(plain.weight == 1.0)
    direct = np.array([(plain.tau > u).mean() for u in grid])
    assert np.allclose(out.p_hat, direct, atol=0.0)
    assert not out.weighted or np.allclose(out.p_hat, direct)


def test_tilted_run_unbiasedness_bridge():
    # tilted and plain agree within overlapping 95% CIs at plain p >= 1e-3
    grid = np.array([5.0, 10.0, 17.0])
    plain = run_cycles(MM1, 400_000, master_seed=21)
    p_tally = est.TailTally("tau", grid)
    p_tally.update(plain.tau, censored=plain.censored)
    p = p_tally.estimate()
    gamma = asy.lundberg_root(MM1.interarrival, MM1.service)
    t = est.tilted_run(MM1, gamma, 150_000, {"tau": grid},
                       master_seed=22)["tau"]
    for j in range(len(grid)):
        assert p.ci_lo[j] <= t.ci_hi[j] and t.ci_lo[j] <= p.ci_hi[j], (
            grid[j], p.p_hat[j], t.p_hat[j])


def test_tilted_run_area_events():
    gamma = 0.3
    grid = np.geomspace(5.0, 500.0, 8)
    out = est.tilted_run(MM1, gamma, 50_000,
                         {PLAIN_QUEUE_AREA: grid}, master_seed=31)
    e = out[PLAIN_QUEUE_AREA]
    assert e.weighted
    assert np.all(np.diff(e.p_hat) <= 0.0)
    assert not np.any(e.biased_low)  # every level decided by the stop rule
    plain = run_cycles(MM1, 400_000, master_seed=32)
    direct = (plain.area(PLAIN_QUEUE_AREA) > grid[0]).mean()
    assert abs(e.p_hat[0] - direct) < 6.0 * math.sqrt(direct / 400_000) + 0.1 * direct


def test_tilted_run_rejects_heavy_service():
    heavy = QueueParams(Exponential(0.5), Pareto(2.5, 0.6))
    from busylab.errors import TiltOutOfDomain
    with pytest.raises(TiltOutOfDomain):
        est.tilted_run(heavy, 0.1, 100, {"tau": np.array([5.0])})


def test_censoring_soundness_caps_monotonicity():
    # enlarging caps never decreases p_hat at confident points by more than
    # the interval width (censored exceedances are sound lower bounds)
    base = dict(interarrival=Exponential(1.0), service=Exponential(1.0))
    grid = np.geomspace(5.0, 2000.0, 10)
    small = QueueParams(caps=CycleCaps(max_customers=30), **base)
    big = QueueParams(caps=CycleCaps(max_customers=3000), **base)
    s_small = run_cycles(small, 50_000, master_seed=9)
    s_big = run_cycles(big, 50_000, master_seed=9)
    e_small = est.empirical_tail(s_small, PLAIN_QUEUE_AREA, grid)
    e_big = est.empirical_tail(s_big, PLAIN_QUEUE_AREA, grid)
    for j in range(len(grid)):
        if e_small.exceed_count[j] >= 200 and not e_small.biased_low[j]:
            width = e_small.ci_hi[j] - e_small.ci_lo[j]
            assert e_big.p_hat[j] >= e_small.p_hat[j] - width


def test_profile_triangle_path():
    # a single triangular deterministic path has zero triangle distance
    from busylab import cycle_from_draws
    params = QueueParams(Exponential(0.5), Exponential(1.0))
    sample = run_cycles(params, 40, master_seed=13, capture_paths=True)
    profile = est.conditional_path_profile(sample, "tau", 0.0, n_bins=20,
                                           min_qualifying=30)
    assert profile.n_qualifying >= 30
    assert 0.0 < profile.peak_fraction < 1.0
    assert np.all(profile.q_mean >= 0.0)
    assert profile.triangle_distance >= 0.0


def test_profile_synthetic_triangle_is_exact():
    from busylab.batch import CycleSample
    from busylab.cycles import PathTrace
    # construct one synthetic path: queue rises 1,2,3 then falls 2,1,0
    times = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    queue = np.array([1, 2, 3, 2, 1, 0, 0])
    work = np.array([6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0])
    paths = [PathTrace(times, queue, work)] * 35
    params = QueueParams(Exponential(0.5), Exponential(1.0))
    sample = CycleSample(
        params=params, master_seed=0, tau=np.full(35, 6.0),
        n_customers=np.full(35, 3, dtype=np.int64),
        max_queue=np.full(35, 3, dtype=np.int64),
        max_workload=np.full(35, 6.0), sojourn_sum=np.full(35, 9.0),
        weight=np.ones(35), censored=np.zeros(35, bool),
        areas=np.full((35, 2), 9.0), paths=paths)
    profile = est.conditional_path_profile(sample, "tau", 1.0, n_bins=6)
    # piecewise-constant staircase of an exact triangle: small L2 defect
    assert profile.triangle_distance < 0.15
    assert abs(profile.peak_fraction - 0.4166666) < 1e-6
    with pytest.raises(TooFewQualifiers):
        est.conditional_path_profile(sample, "tau", 100.0, n_bins=6)


def test_profile_requires_paths():
    sample = run_cycles(MM1, 50, master_seed=1)
    with pytest.raises(ValueError):
        est.conditional_path_profile(sample, "tau", 0.0)


def test_joint_tail_marginal_reductions():
    params = QueueParams(Exponential(0.4), Exponential(1.0))
    sample = est.run_bivariate_cycles(params, 2.0, 4000, master_seed=3)
    x = float(np.quantile(sample.area_w1, 0.9))
    # a = 0: the second event is almost sure
    jt0 = est.joint_tail(sample, x, 0.0)
    marg = (sample.area_w1 > x).mean()
    assert jt0.p_hat == pytest.approx(marg)
    # joint tail is dominated by both marginals
    jt1 = est.joint_tail(sample, x, 1.0)
    marg2 = (sample.area_w2 > x).mean()
    assert jt1.p_hat <= min(marg, marg2) + 1e-12
    assert jt1.ci_lo <= jt1.p_hat <= jt1.ci_hi


def test_joint_tail_identical_servers():
    params = QueueParams(Exponential(0.4), Exponential(1.0))
    sample = est.run_bivariate_cycles(params, 1.0, 3000, master_seed=5)
    x = float(np.quantile(sample.area_w1, 0.8))
    jt = est.joint_tail(sample, x, 1.0)
    assert jt.p_hat == pytest.approx((sample.area_w1 > x).mean())
    with pytest.raises(DomainError):
        est.joint_tail(sample, x, -0.5)


def test_grid_from_quantiles():
    rng = np.random.default_rng(8)
    values = rng.exponential(1.0, 10_000)
    grid = est.grid_from_quantiles(values, lo_q=0.5, hi_q=0.999, points=20)
    assert len(grid) == 20
    assert np.all(np.diff(grid) > 0.0)
    assert abs(grid[0] - np.quantile(values, 0.5)) < 0.05
    with pytest.raises(EmptySample):
        est.grid_from_quantiles(np.array([]))

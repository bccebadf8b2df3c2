import math

import numpy as np
import pytest

from busylab import (CycleCaps, Deterministic, Erlang, Exponential, Lognormal,
                     Pareto, QueueParams, Weibull)
from busylab import asymptotics as asy
from busylab.errors import DomainError, NoRoot, UnstableRegime


def test_busy_tail_heavy_values():
    got = asy.busy_tail_heavy(100.0, 0.5, Pareto(2.5, 0.6))
    assert abs(got - 2.0 * (0.6 / 50.0) ** 2.5) < 1e-18
    # pre-asymptotic clamp when (1-rho)x sits below the Pareto scale
    assert asy.busy_tail_heavy(1.0, 0.5, Pareto(2.5, 0.6)) == 1.0
    got = asy.busy_tail_heavy(10.0, 0.5, Exponential(1.0))
    assert abs(got - 2.0 * math.exp(-5.0)) < 1e-15
    with pytest.raises(UnstableRegime):
        asy.busy_tail_heavy(10.0, 1.0, Exponential(1.0))


def test_threshold_maps_hand_values():
    assert abs(asy.area_w_threshold(200.0, 0.5) - math.sqrt(800.0)) < 1e-12
    assert abs(asy.area_q_threshold(100.0, 0.5, 0.5, 1.0)
               - math.sqrt(200.0 / 0.25)) < 1e-12
    assert abs(asy.power_threshold(100.0, 2.0, 0.5) - 1200.0 ** (1.0 / 3.0)) < 1e-12
    assert asy.power_threshold(5.0, 0.0, 0.7) == 5.0
    assert abs(asy.discounted_threshold(10.0, 2.0, 0.1, 0.5) - 2.0) < 1e-12
    assert abs(asy.discounted_threshold(10.0, 1.0, 0.1, 0.5) - 2.0) < 1e-12
    with pytest.raises(DomainError):
        asy.discounted_threshold(10.0, 0.0, 0.1, 0.5)
    with pytest.raises(UnstableRegime):
        asy.area_w_threshold(1.0, 1.2)


def test_power_threshold_reduces_to_area_w():
    # exact agreement at k = 1 on a dense grid (consistency identity)
    xs = np.geomspace(1e-3, 1e6, 10 ** 4)
    for rho in (0.2, 0.5, 0.9):
        a = np.array([asy.power_threshold(x, 1.0, rho) for x in xs])
        b = np.array([asy.area_w_threshold(x, rho) for x in xs])
        assert np.array_equal(a, b)


def test_threshold_maps_increasing_to_infinity():
    xs = np.geomspace(0.1, 1e9, 200)
    for f in (lambda x: asy.area_w_threshold(x, 0.5),
              lambda x: asy.area_q_threshold(x, 0.5, 0.5, 1.0),
              lambda x: asy.power_threshold(x, 2.0, 0.5),
              lambda x: asy.discounted_threshold(x, 2.0, 0.1, 0.5)):
        vals = np.array([f(x) for x in xs])
        assert np.all(np.diff(vals) > 0.0)
        assert vals[-1] > 1e3


def test_mm1_psi_values():
    assert abs(asy.mm1_psi(0.5) - 0.398601) < 1e-5
    assert abs(asy.mm1_psi(0.8) - 0.081446) < 1e-5
    direct = 2.0 * math.sqrt(1.5 * math.log(2.0) - 1.0)
    assert abs(asy.mm1_psi(0.5) - direct) < 1e-15


def test_mm1_psi_radicand_positive_and_vanishing():
    rhos = np.arange(0.01, 1.0, 0.01)
    vals = np.array([asy.mm1_psi(r) for r in rhos])
    assert np.all(vals > 0.0)
    assert np.all(np.diff(vals) < 0.0)  # decreasing toward the critical point
    # cubic vanishing near rho = 1: radicand ~ (1-rho)^3 / 6
    eps = 1e-3
    rad = (1.0 + (1 - eps)) * math.log(1.0 / (1 - eps)) - 2.0 * eps
    assert abs(rad - eps ** 3 / 6.0) < eps ** 4


def test_mm1_area_tail_prefactor():
    psi = asy.mm1_psi(0.5)
    x = 100.0
    expect = (0.5 / (0.5 * math.sqrt(2 * math.pi * psi))) * x ** -0.25 \
        * math.exp(-psi * math.sqrt(x))
    assert abs(asy.mm1_area_tail(x, 0.5) - expect) < 1e-15
    assert asy.mm1_area_tail(1e-9, 0.5) == 1.0  # clamped


def test_kyprianou_exponent():
    got = asy.kyprianou_comparator_exponent(0.5, 1.0)
    assert abs(got - 0.0857864 * math.sqrt(6.0)) < 1e-7
    assert abs(got - 0.21013) < 1e-5
    # the two light-tail candidates disagree, the comparator being smaller
    assert got < asy.mm1_psi(0.5)
    assert asy.kyprianou_comparator_exponent(0.999, 1.0) < 1e-3


def test_critical_slope():
    assert asy.critical_slope() == -1.0 / 3.0


def test_lundberg_root_mm1():
    # closed form gamma = mu - lambda for M/M/1
    gamma = asy.lundberg_root(Exponential(0.5), Exponential(1.0))
    assert abs(gamma - 0.5) < 1e-12
    assert gamma > 0.0  # gamma = 0 is always a root and must be excluded


def test_lundberg_root_dm1_residual():
    interarrival = Deterministic(2.0)
    service = Exponential(1.0)
    gamma = asy.lundberg_root(interarrival, service)
    residual = abs(service.mgf(gamma) * interarrival.mgf(-gamma) - 1.0)
    assert residual < 1e-12
    assert gamma > 0.0


def test_lundberg_root_erlang():
    interarrival = Erlang(2, 0.5)
    service = Exponential(1.0)
    gamma = asy.lundberg_root(interarrival, service)
    residual = abs(service.mgf(gamma) * interarrival.mgf(-gamma) - 1.0)
    assert residual < 1e-12


def test_lundberg_root_tilted_queue_unstable():
    # the chosen orientation must destabilise the tilted queue
    interarrival = Exponential(0.5)
    service = Exponential(1.0)
    gamma = asy.lundberg_root(interarrival, service)
    tilted_rho = (1.0 / interarrival.tilt(-gamma).mean()) / \
        (1.0 / service.tilt(gamma).mean())
    assert tilted_rho > 1.0


def test_lundberg_errors():
    with pytest.raises(NoRoot):
        asy.lundberg_root(Exponential(0.5), Pareto(2.5, 0.6))
    with pytest.raises(UnstableRegime):
        asy.lundberg_root(Exponential(1.0), Exponential(1.0))
    # D/D/1 with service always below interarrival: single-customer cycles
    with pytest.raises(NoRoot):
        asy.lundberg_root(Deterministic(2.0), Deterministic(1.0))


def test_interlight_examples():
    assert asy.check_interlight(Exponential(1.0), Pareto(2.5, 0.6), 0.5) == asy.HOLDS
    assert asy.check_interlight(Pareto(1.5, 1.0), Pareto(2.5, 0.6), 0.5) == asy.FAILS
    assert asy.check_interlight(Deterministic(1.0), Pareto(2.5, 0.6), 0.5) == asy.HOLDS
    # polynomial tie-breaking: needs alpha_T > alpha_S + 1 + varsigma
    assert asy.check_interlight(Pareto(4.1, 1.0), Pareto(2.5, 1.0), 0.5) == asy.HOLDS
    assert asy.check_interlight(Pareto(4.0, 1.0), Pareto(2.5, 1.0), 0.5) == asy.FAILS
    # light interarrival vs light service: rate comparison
    assert asy.check_interlight(Exponential(2.0), Exponential(1.0), 0.5) == asy.HOLDS
    assert asy.check_interlight(Exponential(1.0), Exponential(1.0), 0.5) == asy.FAILS
    assert asy.check_interlight(Exponential(1.0), Weibull(0.5, 1.0), 0.5) == asy.HOLDS
    assert asy.check_interlight(Weibull(0.5, 1.0), Exponential(1.0), 0.5) == asy.FAILS
    assert asy.check_interlight(Lognormal(0.0, 1.0), Pareto(2.5, 1.0), 0.5) == asy.HOLDS
    assert asy.check_interlight(Pareto(2.5, 1.0), Lognormal(0.0, 1.0), 0.5) == asy.FAILS
    assert asy.check_interlight(Lognormal(0.0, 1.0), Lognormal(0.0, 2.0), 0.5) == asy.HOLDS
    # erlang vs exponential at equal rates: polynomial factors decide
    assert asy.check_interlight(Exponential(1.0), Erlang(4, 1.0), 0.5) == asy.HOLDS
    assert asy.check_interlight(Erlang(4, 1.0), Exponential(1.0), 0.5) == asy.FAILS
    with pytest.raises(DomainError):
        asy.check_interlight(Exponential(1.0), Pareto(2.5, 0.6), 0.0)


HEAVY_PARAMS = QueueParams(Exponential(0.5), Pareto(2.5, 0.6))
MM1_PARAMS = QueueParams(Exponential(0.5), Exponential(1.0))


def test_build_curve_probability_monotone():
    grid = np.geomspace(10.0, 1e5, 50)
    for name in ("BusyTailHeavy", "AreaWConjecture", "AreaQConjecture"):
        curve = asy.build_curve(name, HEAVY_PARAMS, grid)
        assert curve.kind == "probability"
        assert np.all(np.diff(curve.values) <= 0.0)
        assert np.all(curve.values > 0.0) and np.all(curve.values <= 1.0)
        assert curve.applicability == "applicable"
        assert curve.params_digest == HEAVY_PARAMS.digest()


def test_build_curve_power_and_discounted():
    grid = np.geomspace(10.0, 1e4, 20)
    c3 = asy.build_curve("PowerConjecture", HEAVY_PARAMS, grid, k=2.0)
    assert "k=2" in c3.name
    c4 = asy.build_curve("DiscountedConjecture", HEAVY_PARAMS, grid, k=2.0,
                         theta=0.1)
    assert "theta=0.1" in c4.name
    assert np.all(np.diff(c3.values) <= 0.0)
    assert np.all(np.diff(c4.values) <= 0.0)
    with pytest.raises(DomainError):
        asy.build_curve("PowerConjecture", HEAVY_PARAMS, grid)


def test_build_curve_applicability_flags():
    grid = np.geomspace(10.0, 100.0, 5)
    heavy_on_mm1 = asy.build_curve("AreaWConjecture", MM1_PARAMS, grid)
    assert heavy_on_mm1.applicability == "extrapolated"
    light_on_mm1 = asy.build_curve("MM1LightTail", MM1_PARAMS, grid)
    assert light_on_mm1.applicability == "applicable"
    light_on_heavy = asy.build_curve("MM1LightTail", HEAVY_PARAMS, grid)
    assert light_on_heavy.applicability == "extrapolated"
    # AreaQ needs the light-interarrival condition: Pareto arrivals break it
    pareto_in = QueueParams(Pareto(1.5, 0.5), Pareto(2.5, 0.6))
    flagged = asy.build_curve("AreaQConjecture", pareto_in, grid)
    assert flagged.applicability == "extrapolated"
    assert flagged.metadata["interlight"] == asy.FAILS


def test_build_curve_exponent_and_shape():
    grid = np.geomspace(1.0, 100.0, 5)
    comp = asy.build_curve("KyprianouComparator", MM1_PARAMS, grid)
    assert comp.kind == "exponent"
    assert abs(comp.values[0] - 0.21013 * 1.0) < 1e-4
    crit = QueueParams(Exponential(1.0), Exponential(1.0),
                       caps=CycleCaps(max_customers=10))
    shape = asy.build_curve("CriticalSlope", crit, grid)
    assert shape.kind == "shape"
    assert abs(shape.values[-1] - 100.0 ** (-1.0 / 3.0)) < 1e-15
    assert shape.applicability == "applicable"
    with pytest.raises(DomainError):
        asy.build_curve("NoSuchCurve", MM1_PARAMS, grid)


def test_composed_threshold_curve_matches_pointwise():
    grid = np.geomspace(10.0, 1e4, 30)
    curve = asy.build_curve("AreaWConjecture", HEAVY_PARAMS, grid)
    direct = [asy.busy_tail_heavy(asy.area_w_threshold(x, 0.5), 0.5,
                                  Pareto(2.5, 0.6)) for x in grid]
    assert np.allclose(curve.values, direct, rtol=0.0, atol=0.0)

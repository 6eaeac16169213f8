import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from atlas_lab.diagnostics import (
    AnalyticBoundValues,
    BoundQuery,
    Ecdf,
    analytic_bounds,
    doa_experiment,
    gaussian_tail,
    ks_to_exponential,
    occupancy,
    two_sample_ks,
    two_sample_ks_critical,
)
from atlas_lab.models import InitialCondition, ModelSpec
from atlas_lab.reflect import simulate
from atlas_lab.rng import NoiseStream

import oracles


def test_ecdf_evaluate():
    e = Ecdf.from_samples([3.0, 1.0, 2.0, 2.0])
    np.testing.assert_array_equal(e.values, [1.0, 2.0, 2.0, 3.0])
    np.testing.assert_allclose(e.evaluate([0.5, 1.0, 2.0, 2.5, 3.5]), [0, 0.25, 0.75, 0.75, 1.0])
    with pytest.raises(ValueError):
        Ecdf.from_samples([])


def test_ks_single_sample_at_median_is_half():
    # the ECDF jumps from 0 to 1 where the reference CDF sits at 1/2
    x = math.log(2.0) / 3.0
    assert ks_to_exponential(Ecdf.from_samples([x]), 3.0) == pytest.approx(0.5)


def test_ks_two_point_closed_form():
    # sample (1, 2) against Exp(1): the sup is attained just below x=1,
    # where the ECDF is still 0 and the CDF has reached 1 - e^{-1}
    got = ks_to_exponential(Ecdf.from_samples([1.0, 2.0]), 1.0)
    assert got == pytest.approx(1.0 - math.exp(-1.0), abs=1e-15)


def test_ks_large_stationary_sample():
    draws = NoiseStream(42).exponentials(np.full(100000, 2.0))
    d = ks_to_exponential(Ecdf.from_samples(draws), 2.0)
    # 1% asymptotic critical value at n = 1e5 is about 0.00617
    assert d == pytest.approx(0.002992705193918921, abs=1e-15)
    assert d < 0.0062


@given(
    st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=1, max_size=40),
    st.floats(min_value=0.1, max_value=5.0),
)
def test_ks_matches_naive_scan(sample, rate):
    got = ks_to_exponential(Ecdf.from_samples(sample), rate)
    want = oracles.naive_ks_to_exponential(sample, rate)
    assert got == pytest.approx(want, abs=1e-12)
    assert 0.0 <= got <= 1.0


def test_two_sample_ks_extremes_and_oracle():
    assert two_sample_ks([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert two_sample_ks([1.0, 2.0], [5.0, 6.0]) == 1.0
    rng = np.random.default_rng(1)
    a = rng.normal(size=37)
    b = rng.normal(0.4, size=53)
    assert two_sample_ks(a, b) == pytest.approx(oracles.naive_two_sample_ks(a, b), abs=1e-12)


def test_two_sample_ks_critical_value():
    got = two_sample_ks_critical(20000, 20000, 0.01)
    assert got == pytest.approx(0.016276236307187292, abs=1e-15)
    # closed form: sqrt(-ln(alpha/2)/2) * sqrt((n1+n2)/(n1 n2))
    want = math.sqrt(-math.log(0.005) / 2.0) * math.sqrt(2.0 / 20000.0)
    assert got == pytest.approx(want)
    with pytest.raises(ValueError):
        two_sample_ks_critical(10, 10, 0.0)


def test_gaussian_tail_matches_scipy():
    from scipy.stats import norm

    x = np.array([-3.0, -0.5, 0.0, 0.5, 1.0, 4.0])
    np.testing.assert_allclose(gaussian_tail(x), norm.sf(x), atol=1e-15)


def test_analytic_bounds_informative_values():
    pos = np.array([0.0, 0.3, 0.7, 1.2, 1.8, 2.5])
    b = analytic_bounds(BoundQuery(k=2, l=3, d=4, t=0.5, gamma_level=6.0, positions=pos))
    assert isinstance(b, AnalyticBoundValues)
    assert b.sup_bound == pytest.approx(
        oracles.scipy_sup_bound(2, 3, 0.5, 6.0, pos), abs=1e-12
    )
    assert b.sup_bound == pytest.approx(0.07676164143972045, abs=1e-14)
    assert not b.sup_clamped

    b2 = analytic_bounds(BoundQuery(k=2, l=3, d=4, t=0.5, gamma_level=-1.5, positions=pos))
    assert b2.inf_bound == pytest.approx(
        oracles.scipy_inf_bound(4, 0.5, -1.5, pos), abs=1e-12
    )
    assert b2.inf_bound == pytest.approx(3.0731270543384557e-06, rel=1e-9)
    assert not b2.inf_clamped


def test_analytic_bounds_clamp():
    # a level inside the initial configuration makes both raw bounds vacuous
    pos = np.array([0.0, 0.3, 0.7, 1.2, 1.8, 2.5])
    b = analytic_bounds(BoundQuery(k=2, l=3, d=4, t=0.8, gamma_level=2.0, positions=pos))
    assert b.sup_bound == 1.0 and b.sup_clamped
    assert b.inf_bound == 1.0 and b.inf_clamped
    # at gamma = Y_k the second sup term alone is 4 (k+1) tail(0) = 2 (k+1)
    raw = oracles.scipy_sup_bound(2, 1, 1.0, 0.7, pos)
    assert raw >= 2.0 * 3.0


def test_bound_query_validation():
    pos = np.zeros(4)
    with pytest.raises(ValueError):
        BoundQuery(k=0, l=1, d=1, t=-1.0, gamma_level=1.0, positions=pos)
    with pytest.raises(ValueError):
        BoundQuery(k=0, l=0, d=1, t=1.0, gamma_level=1.0, positions=pos)
    with pytest.raises(ValueError):
        BoundQuery(k=9, l=1, d=1, t=1.0, gamma_level=1.0, positions=pos)
    with pytest.raises(ValueError):
        BoundQuery(k=0, l=9, d=1, t=1.0, gamma_level=1.0, positions=pos)


def _tiny_trajectory():
    model = ModelSpec.atlas(4)
    start = np.tile([0.4, 0.3, 0.2], (3, 1))
    return simulate(model, start, 1.0, 1e-2, NoiseStream(13))


def test_occupancy_thinning_and_pooling():
    traj = _tiny_trajectory()
    est = occupancy(traj, 2, [0.5, 1.0], thinning=0.1)
    assert est.coordinates == (1, 2)
    assert est.thinning == pytest.approx(0.1)
    # stride 10 on a 0.01 grid: 6 samples by t=0.5, 11 by t=1.0, 3 members
    assert est.ecdfs[0][0].n == 6 * 3
    assert est.ecdfs[1][0].n == 11 * 3
    solo = occupancy(traj, 2, [0.5, 1.0], thinning=0.1, member=1)
    assert solo.ecdfs[0][0].n == 6
    np.testing.assert_array_equal(
        solo.ecdfs[1][1].values, np.sort(traj.gaps[::10, 1, 1])
    )
    assert est.ecdf(0.5, 2).n == 18


def test_occupancy_validation():
    traj = _tiny_trajectory()
    with pytest.raises(ValueError):
        occupancy(traj, 2, [])
    with pytest.raises(ValueError):
        occupancy(traj, 2, [0.5, 0.5])
    with pytest.raises(ValueError):
        occupancy(traj, 2, [2.0])
    with pytest.raises(ValueError):
        occupancy(traj, 9, [0.5])


def test_doa_experiment_smoke():
    model = ModelSpec.atlas(4)
    report = doa_experiment(
        model,
        InitialCondition.stationary(0.0),
        0.0,
        2,
        [0.5, 1.0],
        3,
        NoiseStream(101),
        dt=1e-2,
        thinning=0.1,
    )
    assert report.ks_members.shape == (3, 2, 2)
    assert report.ks_mean.shape == (2, 2)
    assert report.ks_pooled.shape == (2, 2)
    assert report.trend.shape == (2,)
    np.testing.assert_array_equal(report.target_rates, [2.0, 2.0])
    assert np.all(report.ks_members >= 0) and np.all(report.ks_members <= 1)
    # mean over members at each horizon/coordinate matches the member table
    np.testing.assert_allclose(report.ks_mean, report.ks_members.mean(axis=0))


def test_doa_report_csv(tmp_path):
    model = ModelSpec.atlas(3)
    report = doa_experiment(
        model,
        InitialCondition.stationary(0.0),
        0.0,
        1,
        [0.5, 1.0],
        2,
        NoiseStream(5),
        dt=1e-2,
    )
    path = tmp_path / "doa.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "horizon,coordinate,ks_mean,ks_se,trend"
    assert len(lines) == 1 + 2 * 1
    first = lines[1].split(",")
    assert float(first[0]) == 0.5
    assert int(first[1]) == 1
    assert float(first[2]) == pytest.approx(report.ks_mean[0, 0])


def test_doa_experiment_validation():
    model = ModelSpec.atlas(3)
    init = InitialCondition.stationary(0.0)
    with pytest.raises(ValueError):
        doa_experiment(model, init, -1.0, 1, [1.0], 2, NoiseStream(1))
    with pytest.raises(ValueError):
        doa_experiment(model, init, 0.0, 1, [], 2, NoiseStream(1))
    with pytest.raises(ValueError):
        doa_experiment(model, init, 0.0, 5, [1.0], 2, NoiseStream(1))
    with pytest.raises(ValueError):
        doa_experiment(model, init, 0.0, 1, [1.0], 0, NoiseStream(1))

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atlas_lab.excursions import (
    ExcursionRecord,
    detect_excursions,
    excursion_tail_stats,
    t_chain,
    write_excursions_jsonl,
)

import oracles


def crafted_path():
    """Two complete excursions of coordinate 2 plus one stalled opening.

    Columns are coordinates 1 and 2 on an integer grid.  The sum series is
    chosen to make the decrements easy to read off.
    """
    c2 = np.array([0.0, 0.6, 0.4, 0.0, 0.2, 0.0, 0.7, 0.3, 0.0, 0.0, 0.8, 0.5])
    c1 = np.array([0.1, 0.2, 0.1, 0.3, 0.0, 0.1, 0.2, 0.1, 0.2, 0.0, 0.3, 0.2])
    times = np.arange(12.0)
    sums = 2.0 - 0.1 * times
    return times, np.column_stack([c1, c2]), sums


def test_t_chain_walks_coordinates_down():
    times, deltas, _ = crafted_path()
    # from the first opening at t=1: coordinate 2 first hits zero at t=3,
    # then coordinate 1 (searching from there) at t=4
    chain = t_chain(times, deltas, 2, 1.0)
    np.testing.assert_array_equal(chain, [3.0, 4.0])
    # k=1 chains only need the first coordinate
    np.testing.assert_array_equal(t_chain(times, deltas, 1, 0.0), [4.0])


def test_t_chain_stalls_to_inf():
    times = np.arange(4.0)
    deltas = np.column_stack([np.full(4, 0.5), np.array([0.6, 0.0, 0.6, 0.6])])
    chain = t_chain(times, deltas, 2, 0.0)
    assert chain[0] == 1.0
    assert math.isinf(chain[1])


def test_t_chain_validation():
    times, deltas, _ = crafted_path()
    with pytest.raises(ValueError):
        t_chain(times, deltas[:, 0], 1, 0.0)
    with pytest.raises(ValueError):
        t_chain(times, deltas, 3, 0.0)
    with pytest.raises(ValueError):
        t_chain(times, deltas, 2, 99.0)


def test_detect_excursions_crafted():
    times, deltas, sums = crafted_path()
    rec = detect_excursions(times, deltas, sums, 2, 0.5, zero_threshold=1e-9)
    # openings at 1 and 6 close at 5 and 9; the opening at 10 never closes
    np.testing.assert_array_equal(rec.sigma_times, [1.0, 5.0, 6.0, 9.0, 10.0])
    assert rec.n_completed == 2
    np.testing.assert_allclose(rec.decrements, [sums[5] - sums[1], sums[9] - sums[6]])
    np.testing.assert_allclose(rec.lengths, [4.0, 3.0])
    assert rec.n_t == 3
    # chains: first excursion hits zero on 2 at t=3 then 1 at t=4;
    # second hits 2 at t=8 then 1 at t=9
    np.testing.assert_array_equal(rec.t_chains[0], [3.0, 4.0])
    np.testing.assert_array_equal(rec.t_chains[1], [8.0, 9.0])
    assert not np.isfinite(rec.t_chains[2][-1])


def test_detect_excursions_horizon_only_counts():
    times, deltas, sums = crafted_path()
    rec = detect_excursions(times, deltas, sums, 2, 0.5, horizon=7.0)
    assert rec.n_t == 2  # the opening at t=10 is past the horizon
    assert rec.n_completed == 2  # detection is unaffected


def test_detect_excursions_validation():
    times, deltas, sums = crafted_path()
    with pytest.raises(ValueError):
        detect_excursions(times, deltas, sums[:-1], 2, 0.5)
    with pytest.raises(ValueError):
        detect_excursions(times, deltas, sums, 2, 1e-12, zero_threshold=1e-9)


@settings(max_examples=120)
@given(
    st.lists(st.sampled_from([0.0, 0.2, 0.4, 0.8, 1.0]), min_size=2, max_size=50),
    st.lists(st.sampled_from([0.0, 0.3, 0.9]), min_size=2, max_size=50),
)
def test_detect_matches_naive_walker(col2, col1):
    n = min(len(col1), len(col2))
    deltas = np.column_stack([col1[:n], col2[:n]])
    times = np.arange(float(n))
    sums = np.linspace(1.0, 0.0, n)
    eps, zthr = 0.7, 1e-9

    rec = detect_excursions(times, deltas, sums, 2, eps, zero_threshold=zthr)
    ref = oracles.naive_excursion_scan(deltas, 2, eps, zthr)

    opens = rec.sigma_times[0::2]
    closes = rec.sigma_times[1::2]
    assert len(ref) == len(opens)
    for j, (open_i, close_i, _chain) in enumerate(ref):
        assert opens[j] == times[open_i]
        if close_i is None:
            assert j >= closes.shape[0]
        else:
            assert closes[j] == times[close_i]
            assert rec.decrements[j] == pytest.approx(sums[close_i] - sums[open_i])


def make_record(k, lengths, horizon, n_open=None):
    lengths = np.asarray(lengths, dtype=float)
    n = n_open if n_open is not None else lengths.shape[0]
    sigma = []
    t = 0.0
    for ln in lengths:
        sigma += [t, t + ln]
        t += ln + 1.0
    for _ in range(n - lengths.shape[0]):
        sigma.append(t)
    return ExcursionRecord(
        k=k,
        epsilon=0.1,
        horizon=horizon,
        zero_threshold=1e-9,
        sigma_times=np.asarray(sigma),
        decrements=-np.ones(lengths.shape[0]),
        lengths=lengths,
    )


def test_tail_stats_threshold_and_counts():
    T = 100.0
    recs = [make_record(2, [5.0, 40000.0], T), make_record(2, [1.0], T)]
    report = excursion_tail_stats(recs, 2.0, 2, T)
    assert report.threshold == pytest.approx(48.0 * 4.0 * 2 * 9 * math.log(T))
    assert report.num_completed == 3
    assert report.num_long == 1  # 40000 > 15908.7...
    assert report.num_runs_with_long == 1
    assert report.fraction_runs_with_long == pytest.approx(0.5)
    assert report.binomial_se == pytest.approx(math.sqrt(0.25 / 2))
    assert report.reference_n == 2
    assert report.bound_value == pytest.approx(5.0 * 2 * 2 / T**2)


def test_tail_stats_validation():
    rec = make_record(2, [1.0], 10.0)
    with pytest.raises(ValueError):
        excursion_tail_stats([rec], 0.0, 2, 10.0)
    with pytest.raises(ValueError):
        excursion_tail_stats([rec], 2.0, 2, 1.0)
    with pytest.raises(ValueError):
        excursion_tail_stats([], 2.0, 2, 10.0)
    with pytest.raises(ValueError):
        excursion_tail_stats([rec], 2.0, 3, 10.0)


def test_write_excursions_jsonl(tmp_path):
    times, deltas, sums = crafted_path()
    rec = detect_excursions(times, deltas, sums, 2, 0.5)
    path = tmp_path / "exc.jsonl"
    write_excursions_jsonl([rec], path)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == 3
    assert rows[0]["sigma_open"] == 1.0
    assert rows[0]["sigma_close"] == 5.0
    assert rows[0]["decrement"] == pytest.approx(sums[5] - sums[1])
    assert rows[2]["sigma_close"] is None
    assert rows[2]["decrement"] is None
    assert rows[2]["chain"][-1] is None

import numpy as np
import pytest

from atlas_lab.coupling import couple, drift_domination_run, verify_l1_identity
from atlas_lab.models import ModelSpec
from atlas_lab.rng import NoiseStream


def ordered_starts():
    lower = np.array([0.1, 0.3, 0.05, 0.2])
    upper = lower + np.array([0.2, 0.0, 0.3, 0.1])
    return lower, upper


def test_couple_preserves_order_and_contracts():
    model = ModelSpec.atlas(5)
    lower, upper = ordered_starts()
    rec = couple(model, lower, upper, 0.2, 1e-3, NoiseStream(8))
    assert rec.monotone_violation <= 1e-12
    dl1 = rec.local_time_diff_first
    assert np.all(np.diff(dl1[:, 0]) <= 1e-12)
    assert np.all(rec.gaps_upper - rec.gaps_lower >= -1e-12)
    # summed difference never grows
    assert np.all(np.diff(rec.sum_gap_diff[:, 0]) <= 1e-12)


def test_l1_identity_exact_on_grid():
    model = ModelSpec.atlas(5)
    lower, upper = ordered_starts()
    rec = couple(model, lower, upper, 0.1, 1e-3, NoiseStream(3))
    report = verify_l1_identity(rec)
    assert report.max_defect <= 1e-12
    assert report.defect_series.shape == rec.sum_gap_diff.shape
    assert np.all(report.boundary_series >= 0)
    np.testing.assert_allclose(
        report.final_boundary_term, 0.5 * np.abs(rec.local_time_diff_last[-1])
    )


def test_identical_starts_stay_identical():
    model = ModelSpec.atlas(4)
    start = np.array([0.2, 0.1, 0.3])
    rec = couple(model, start, start, 0.05, 1e-3, NoiseStream(12))
    np.testing.assert_array_equal(rec.gaps_lower, rec.gaps_upper)
    np.testing.assert_array_equal(rec.local_lower, rec.local_upper)
    assert rec.monotone_violation == 0.0
    np.testing.assert_array_equal(rec.sum_gap_diff, 0.0)


def test_couple_batched_and_sampled():
    model = ModelSpec.atlas(4)
    lower = np.tile([0.1, 0.2, 0.3], (5, 1))
    upper = lower + 0.1
    rec = couple(model, lower, upper, 0.02, 1e-3, NoiseStream(2), sample_every=4)
    assert rec.gaps_lower.shape == (6, 5, 3)
    assert rec.sum_gap_diff.shape == (6, 5)
    assert rec.violation_series.shape == (6,)
    np.testing.assert_allclose(rec.times, [0.0, 0.004, 0.008, 0.012, 0.016, 0.02])


def test_coupled_tracking_full_resolution():
    model = ModelSpec.atlas(4)
    lower, upper = np.array([0.1, 0.2, 0.3]), np.array([0.3, 0.2, 0.5])
    rec = couple(
        model, lower, upper, 0.01, 1e-3, NoiseStream(6),
        sample_every=5, track=(1, 3), track_sum=True,
    )
    assert rec.tracked_diff.shape == (11, 1, 2)
    assert rec.tracked_sum.shape == (11, 1)
    np.testing.assert_allclose(rec.tracked_diff[0, 0], [0.2, 0.2])
    np.testing.assert_allclose(rec.tracked_sum[0, 0], 0.4)
    np.testing.assert_allclose(rec.tracked_times(), np.arange(11) * 1e-3)


def test_couple_rejects_bad_input():
    model = ModelSpec.atlas(3)
    with pytest.raises(ValueError):
        couple(model, np.array([0.1]), np.array([0.1, 0.2]), 0.01, 1e-3, NoiseStream(0))
    with pytest.raises(ValueError):
        couple(model, np.array([-0.1, 0.2]), np.array([0.1, 0.2]), 0.01, 1e-3, NoiseStream(0))
    with pytest.raises(ValueError):
        couple(
            model, np.array([0.1, 0.2]), np.array([0.1, 0.2]), 0.01, 1e-3,
            NoiseStream(0), sample_every=0,
        )
    with pytest.raises(ValueError):
        couple(
            model, np.array([0.1, 0.2]), np.array([0.1, 0.2]), 0.01, 1e-3,
            NoiseStream(0), track=(5,),
        )


def test_drift_domination_orders_gaps():
    model = ModelSpec.atlas(5)
    start = np.array([0.3, 0.1, 0.2, 0.4])
    rec = drift_domination_run(model, start, 0.0, 0.2, 1e-3, NoiseStream(4))
    # the variant with weaker bottom drift is the upper copy
    assert rec.model_upper.bottom_drift_gamma == 0.0
    assert rec.model_lower.bottom_drift_gamma == 1.0
    assert rec.monotone_violation <= 1e-10
    np.testing.assert_array_equal(rec.gaps_lower[0], rec.gaps_upper[0])


def test_drift_domination_rejects_gamma_above_drift():
    model = ModelSpec.atlas(3)
    with pytest.raises(ValueError, match="gamma"):
        drift_domination_run(model, np.array([0.1, 0.2]), 1.5, 0.01, 1e-3, NoiseStream(0))


def test_coupled_csv(tmp_path):
    model = ModelSpec.atlas(3)
    rec = couple(
        model, np.array([0.1, 0.2]), np.array([0.2, 0.3]), 0.01, 1e-3, NoiseStream(7)
    )
    path = tmp_path / "coupled.csv"
    rec.to_csv(path, member=0, include_gaps=True)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "time,sum_dz,dl1,dlm,violation,lower_gap_1,lower_gap_2,upper_gap_1,upper_gap_2"
    assert len(lines) == 1 + rec.times.shape[0]
    row = lines[1].split(",")
    assert float(row[0]) == 0.0
    assert float(row[1]) == pytest.approx(0.2)

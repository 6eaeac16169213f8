import json

import numpy as np
import pytest

from atlas_lab.config import parse_config
from atlas_lab.experiments import (
    ExperimentFailure,
    alt_model_step_config,
    domination_constant,
    parse_bounds_points,
    run,
    truncation_doubling_check,
)
from atlas_lab.models import InitialCondition


def make_cfg(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return parse_config(path)


STATIONARITY = """
[experiment]
kind = stationarity
seed = 5
[model]
truncation = 3
dt = 1e-3
horizon = 0.4
burn_in = 0.1
sample_every = 10
[initial]
kind = finite_atlas
[analysis]
ensemble_size = 6
group_size = 2
"""


def test_stationarity_run_artifacts(tmp_path):
    cfg = make_cfg(tmp_path, STATIONARITY)
    res = run(cfg, output_dir=tmp_path / "out")
    assert res.kind == "stationarity"
    out = tmp_path / "out"
    assert (out / "resolved_config.ini").is_file()
    assert (out / "summary.json").is_file()
    assert (out / "stationary_means.csv").is_file()
    assert (out / "trajectory_member0.csv").is_file()

    means = (out / "stationary_means.csv").read_text().strip().splitlines()
    assert means[0] == "gap_index,mean,target,rel_err,se"
    assert len(means) == 4
    row = means[1].split(",")
    assert float(row[2]) == pytest.approx(2.0 / 3.0)

    summary = json.loads((out / "summary.json").read_text())
    assert summary["kind"] == "stationarity"
    assert summary["results"]["ensemble_size"] == 6
    assert len(summary["results"]["gap_means"]) == 3
    # the snapshot parses back to the exact same configuration
    assert parse_config(out / "resolved_config.ini") == cfg


def test_worker_count_does_not_change_outputs(tmp_path):
    cfg = make_cfg(tmp_path, STATIONARITY)
    res1 = run(cfg, workers=1, output_dir=tmp_path / "w1")
    res3 = run(cfg, workers=3, output_dir=tmp_path / "w3")
    for name in ("stationary_means.csv", "trajectory_member0.csv"):
        a = (tmp_path / "w1" / name).read_bytes()
        b = (tmp_path / "w3" / name).read_bytes()
        assert a == b
    assert res1.summary["results"] == res3.summary["results"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = make_cfg(tmp_path, STATIONARITY)
    run(cfg, output_dir=tmp_path / "a")
    run(cfg, output_dir=tmp_path / "b")
    for name in ("stationary_means.csv", "trajectory_member0.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_coupling_run(tmp_path):
    cfg = make_cfg(
        tmp_path,
        """
[experiment]
kind = coupling
seed = 9
[model]
truncation = 4
dt = 1e-3
horizon = 0.2
[initial]
kind = stationary
[analysis]
gamma_levels = 0.0 0.5
""",
    )
    res = run(cfg, output_dir=tmp_path / "out")
    r = res.summary["results"]
    assert r["monotone_violation"] <= 1e-10
    assert r["max_identity_defect"] <= 1e-10
    assert r["max_local_diff_increase"] <= 1e-10
    assert set(r["drift_domination"]) == {"0", "0.5"}
    assert all(v <= 1e-10 for v in r["drift_domination"].values())
    assert (tmp_path / "out" / "coupled.csv").is_file()
    assert (tmp_path / "out" / "l1_identity.csv").is_file()


def test_excursions_run(tmp_path):
    cfg = make_cfg(
        tmp_path,
        """
[experiment]
kind = excursions
seed = 3
[model]
truncation = 4
dt = 1e-3
horizon = 2.0
[initial]
kind = stationary
[analysis]
k = 2
epsilon = 0.1
ensemble_size = 4
""",
    )
    res = run(cfg, output_dir=tmp_path / "out")
    r = res.summary["results"]
    assert r["num_runs"] == 4
    assert r["num_openings"] >= r["num_completed"] >= 0
    assert "tail_stats" in r
    assert r["tail_stats"]["domination_constant"] == pytest.approx(1.0)
    lines = (tmp_path / "out" / "excursions.jsonl").read_text().splitlines()
    assert len(lines) == r["num_openings"]


def test_doa_run(tmp_path):
    cfg = make_cfg(
        tmp_path,
        """
[experiment]
kind = doa
seed = 21
[model]
truncation = 4
dt = 1e-2
horizon = 1.0
[initial]
kind = dominating
rate = 1.0
[analysis]
k = 2
t_grid = 0.5 1.0
ensemble_size = 3
thinning = 0.1
target_tilt = 0.0
""",
    )
    res = run(cfg, output_dir=tmp_path / "out")
    r = res.summary["results"]
    assert r["a_target"] == 0.0
    assert r["t_grid"] == [0.5, 1.0]
    assert len(r["final_ks_mean"]) == 2
    assert len(r["trend_strictly_decreasing"]) == 2
    report = (tmp_path / "out" / "doa_report.csv").read_text().strip().splitlines()
    assert report[0] == "horizon,coordinate,ks_mean,ks_se,trend"
    assert len(report) == 1 + 2 * 2


BOUNDS = """
[experiment]
kind = bounds
seed = 31
[model]
truncation = 6
dt = 1e-2
horizon = 1.0
[initial]
kind = stationary
[analysis]
ensemble_size = 40
group_size = 16
bounds_points = sup: k=2, l=2, t=0.5, gamma=8.0; inf: d=3, t=1.0, gamma=-6.0
"""


def test_bounds_run(tmp_path):
    cfg = make_cfg(tmp_path, BOUNDS)
    res = run(cfg, output_dir=tmp_path / "out")
    pts = res.summary["results"]["points"]
    assert len(pts) == 2
    sup = next(p for p in pts if p["event"] == "sup")
    inf = next(p for p in pts if p["event"] == "inf")
    assert sup["bound_for_event"] == sup["bound_sup"]
    assert inf["bound_for_event"] == inf["bound_inf"]
    for p in pts:
        assert 0.0 <= p["empirical"] <= 1.0
        assert 0.0 <= p["bound_for_event"] <= 1.0
    rows = (tmp_path / "out" / "bounds.csv").read_text().strip().splitlines()
    assert rows[0] == "k,l,d,t,gamma_level,bound_sup,bound_inf,empirical,se"
    assert len(rows) == 3


def test_bounds_worker_invariance(tmp_path):
    cfg = make_cfg(tmp_path, BOUNDS)
    run(cfg, workers=1, output_dir=tmp_path / "w1")
    run(cfg, workers=3, output_dir=tmp_path / "w3")
    assert (tmp_path / "w1" / "bounds.csv").read_bytes() == (
        tmp_path / "w3" / "bounds.csv"
    ).read_bytes()


def test_parse_bounds_points():
    pts = parse_bounds_points("sup: k=5, l=3, t=1.0, gamma=12.0; inf: d=30, t=2.0, gamma=4.0")
    assert pts[0]["event"] == "sup"
    assert pts[0]["k"] == 5 and pts[0]["l"] == 3
    assert pts[1]["event"] == "inf"
    assert pts[1]["d"] == 30 and pts[1]["gamma"] == 4.0
    with pytest.raises(ValueError):
        parse_bounds_points("sup: k=1")  # missing t and gamma
    with pytest.raises(ValueError):
        parse_bounds_points("med: k=1, t=1.0, gamma=0.0")


def test_bounds_time_validation(tmp_path):
    bad = BOUNDS.replace("t=0.5", "t=0.505")
    cfg = make_cfg(tmp_path, bad, "bad.ini")
    with pytest.raises(ValueError, match="multiple of dt"):
        run(cfg, output_dir=tmp_path / "out")


def test_alt_model_step_config():
    model = alt_model_step_config(3, 1.0)
    assert model.num_particles == 4
    assert model.rank_drifts[0] == 1.0
    np.testing.assert_allclose(model.rank_drifts[1:], [-0.25, -0.5, -0.75])


def test_domination_constant():
    assert domination_constant(InitialCondition.dominating(1.0), 5) == pytest.approx(2.0)
    assert domination_constant(InitialCondition.stationary(0.0), 5) == pytest.approx(1.0)
    # tilted laws have rates above 2 everywhere, already dominated by pi
    assert domination_constant(InitialCondition.stationary(1.0), 5) <= 1.0
    with pytest.raises(ValueError):
        domination_constant(InitialCondition.adversarial(), 5)


def test_solver_failure_cleans_outputs(tmp_path):
    text = STATIONARITY.replace(
        "sample_every = 10", "sample_every = 10\nsolver_method = fixedpoint\nsolver_tolerance = 1e-300"
    )
    cfg = make_cfg(tmp_path, text, "fail.ini")
    with pytest.raises(ExperimentFailure, match="solver failed"):
        run(cfg, output_dir=tmp_path / "out")
    leftovers = sorted(p.name for p in (tmp_path / "out").glob("*"))
    assert leftovers == ["failure_report.json", "resolved_config.ini"]
    report = json.loads((tmp_path / "out" / "failure_report.json").read_text())
    assert report["error"] == "skorokhod solver failed"
    assert report["residual"] > 0


def test_doubling_check_flags_small_truncation(tmp_path):
    cfg = make_cfg(
        tmp_path,
        """
[experiment]
kind = stationarity
seed = 13
[model]
truncation = 2
dt = 1e-3
horizon = 1.0
[initial]
kind = stationary
[analysis]
k = 2
ensemble_size = 2
""",
    )
    report = truncation_doubling_check(cfg)
    assert report["monitored_k"] == 2
    assert report["truncation"] == 2
    assert len(report["per_coordinate_discrepancy"]) == 2
    assert report["below_heuristic"]
    # at truncation 2 the second gap touches the boundary constantly, so the
    # doubled run must diverge from it by far more than the default threshold
    assert report["flagged"]
    assert report["max_discrepancy"] > report["threshold"]


def test_doubling_check_validation(tmp_path):
    cfg = make_cfg(tmp_path, STATIONARITY)
    with pytest.raises(ValueError):
        truncation_doubling_check(cfg, monitored_k=9)

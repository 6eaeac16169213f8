"""Config-driven experiment runner.

Noise layout (shared by every experiment kind, so truncation-doubling and
worker parallelism cannot change results):

- the run root is ``NoiseStream(seed)``,
- ensemble member ``j`` draws its initial gaps from ``root.child(1, j)``
  (coupled kinds use ``root.child(1, j, 0)`` and ``root.child(1, j, 1)``),
- members are partitioned into contiguous groups of ``group_size``; the
  engine stream of group ``g`` is ``root.child(0, g)``, so the rank-``r``
  increments come from ``root.child(0, g, r)`` regardless of truncation
  (the bounds kind runs on named particles, so there the same child streams
  feed particle labels instead of ranks).

Workers parallelize over groups (or over runs, for coupled ensembles) and
results are merged in group/member order, so output bytes do not depend on
the worker count.  Per-rank streams make the doubling check exact: the runs
at truncation m and 2m share the increments of ranks 0..m.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_initial_condition, config_as_dict, write_snapshot
from .coupling import CoupledRecord, couple, drift_domination_run, verify_l1_identity
from .diagnostics import BoundQuery, analytic_bounds, doa_experiment
from .excursions import detect_excursions, excursion_tail_stats, write_excursions_jsonl
from .models import (
    InitialCondition,
    ModelSpec,
    alt_model_rates,
    finite_atlas_rates,
    stationary_rates,
)
from .reflect import SkorokhodSolveError, simulate
from .rng import NoiseStream

__all__ = [
    "ExperimentFailure",
    "RunResult",
    "alt_model_step_config",
    "model_from_config",
    "domination_constant",
    "run",
    "truncation_doubling_check",
    "parse_bounds_points",
]

SUMMARY_NAME = "summary.json"
SNAPSHOT_NAME = "resolved_config.ini"


class ExperimentFailure(RuntimeError):
    """Numeric failure mid-run (CLI exit code 3); partial outputs removed."""


@dataclass(frozen=True)
class RunResult:
    kind: str
    output_dir: Path
    summary: dict
    files: tuple


def alt_model_step_config(d: int, a: float) -> ModelSpec:
    """ModelSpec of the alternative finite model with stationary law
    ⊗Exp((2+ia)(1-i/(d+1))).

    Bottom rank drifts at 1, rank j at -ja/(d+1).  The bottom drift must be
    exactly 1 (not 1 - a/(d+1)): the stationarity criterion for ranked
    diffusions requires the bottom-vs-rank-1 drift difference 1 + a/(d+1) to
    produce the claimed gap law, and direct simulation confirms it.
    """
    return ModelSpec.alternative_finite(d, a)


def model_from_config(cfg: ExperimentConfig) -> ModelSpec:
    if cfg.kind == "alt-model":
        return alt_model_step_config(cfg.truncation, cfg.tilt)
    return ModelSpec.atlas(cfg.truncation + 1, gamma=cfg.bottom_gamma)


def _target_rates(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.kind == "alt-model":
        return alt_model_rates(cfg.tilt, cfg.truncation)
    return finite_atlas_rates(cfg.truncation)


def domination_constant(init: InitialCondition, m: int) -> float:
    """Smallest D with init stochastically dominated by the D-scaled a=0 law.

    Exponential-family kinds with rates r_i are dominated by D·pi exactly
    when every r_i >= 2/D.  Other kinds have no finite exponential-domination
    constant.
    """
    rates = init._rates(m)
    return float(2.0 / rates.min())


def _member_groups(ensemble: int, group_size: int):
    return [
        (g, start, min(start + group_size, ensemble))
        for g, start in enumerate(range(0, ensemble, group_size))
    ]


def _group_starts(init: InitialCondition, m: int, seed: int, start: int, stop: int) -> np.ndarray:
    root = NoiseStream(seed)
    return np.stack([init.sample(m, root.child(1, j)) for j in range(start, stop)])


def _csv_row(values) -> str:
    out = []
    for v in values:
        if isinstance(v, (float, np.floating)):
            out.append(format(float(v), ".17g"))
        else:
            out.append(str(v))
    return ",".join(out)


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(_csv_row(r) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# stationarity (and alt-model, which differs only in the ModelSpec/targets)
# --------------------------------------------------------------------------


def _stationarity_group(args):
    cfg, g, start, stop = args
    model = model_from_config(cfg)
    init = build_initial_condition(cfg)
    starts = _group_starts(init, cfg.truncation, cfg.seed, start, stop)
    noise = NoiseStream(cfg.seed).child(0, g)
    traj = simulate(
        model,
        starts,
        cfg.burn_in + cfg.horizon,
        cfg.dt,
        noise,
        sample_every=cfg.sample_every,
        tolerance=cfg.solver_tolerance,
        method=cfg.solver_method,
    )
    keep = traj.times >= cfg.burn_in - 1e-9
    member_means = traj.gaps[keep].mean(axis=0)
    first = traj if g == 0 else None
    return member_means, first


def _run_stationarity(cfg: ExperimentConfig, out: Path, workers: int):
    groups = [(cfg, g, a, b) for g, a, b in _member_groups(cfg.ensemble_size, cfg.group_size)]
    results = _map_ordered(_stationarity_group, groups, workers)
    member_means = np.concatenate([r[0] for r in results])
    first_traj = results[0][1]

    rates = _target_rates(cfg)
    target = 1.0 / rates
    mean = member_means.mean(axis=0)
    if member_means.shape[0] > 1:
        se = member_means.std(axis=0, ddof=1) / math.sqrt(member_means.shape[0])
    else:
        se = np.zeros_like(mean)
    rel = (mean - target) / target

    files = []
    means_path = out / "stationary_means.csv"
    _write_csv(
        means_path,
        ["gap_index", "mean", "target", "rel_err", "se"],
        [(i + 1, mean[i], target[i], rel[i], se[i]) for i in range(cfg.truncation)],
    )
    files.append(means_path)
    traj_path = out / "trajectory_member0.csv"
    first_traj.to_csv(traj_path, member=0)
    files.append(traj_path)

    summary = {
        "gap_means": mean.tolist(),
        "targets": target.tolist(),
        "rel_err": rel.tolist(),
        "se": se.tolist(),
        "max_abs_rel_err": float(np.abs(rel).max()),
        "ensemble_size": cfg.ensemble_size,
    }
    return summary, files


# --------------------------------------------------------------------------
# coupling
# --------------------------------------------------------------------------


def _ordered_pair_starts(init: InitialCondition, m: int, seed: int, run_index: int):
    """Two draws of the same recipe, ordered coordinatewise min/max."""
    root = NoiseStream(seed)
    a = init.sample(m, root.child(1, run_index, 0))
    b = init.sample(m, root.child(1, run_index, 1))
    return np.minimum(a, b), np.maximum(a, b)


def _run_coupling(cfg: ExperimentConfig, out: Path, workers: int):
    model = model_from_config(cfg)
    init = build_initial_condition(cfg)
    lower0, upper0 = _ordered_pair_starts(init, cfg.truncation, cfg.seed, 0)
    noise = NoiseStream(cfg.seed).child(0, 0)
    record = couple(
        model,
        lower0,
        upper0,
        cfg.horizon,
        cfg.dt,
        noise,
        sample_every=cfg.sample_every,
        tolerance=cfg.solver_tolerance,
        method=cfg.solver_method,
    )
    report = verify_l1_identity(record)

    files = []
    coupled_path = out / "coupled.csv"
    record.to_csv(coupled_path, member=0)
    files.append(coupled_path)
    identity_path = out / "l1_identity.csv"
    _write_csv(
        identity_path,
        ["time", "defect", "boundary"],
        zip(report.times, report.defect_series, report.boundary_series),
    )
    files.append(identity_path)

    dl = record.local_time_diff()
    dl_increase = float(np.max(np.diff(dl, axis=0))) if dl.shape[0] > 1 else 0.0
    summary = {
        "monotone_violation": float(record.monotone_violation),
        "max_identity_defect": float(report.max_defect),
        "final_boundary_term": float(np.max(report.final_boundary_term)),
        "max_local_diff_increase": dl_increase,
        "drift_domination": {},
    }
    for gamma in cfg.gamma_levels:
        dom = drift_domination_run(
            model,
            lower0,
            gamma,
            cfg.horizon,
            cfg.dt,
            NoiseStream(cfg.seed).child(0, 0),
            sample_every=cfg.sample_every,
            tolerance=cfg.solver_tolerance,
            method=cfg.solver_method,
        )
        summary["drift_domination"][format(gamma, "g")] = float(dom.monotone_violation)
    return summary, files


# --------------------------------------------------------------------------
# excursions
# --------------------------------------------------------------------------


def _excursion_run(args):
    cfg, j = args
    model = model_from_config(cfg)
    init = build_initial_condition(cfg)
    lower0, upper0 = _ordered_pair_starts(init, cfg.truncation, cfg.seed, j)
    noise = NoiseStream(cfg.seed).child(0, j)
    record = couple(
        model,
        lower0,
        upper0,
        cfg.horizon,
        cfg.dt,
        noise,
        sample_every=cfg.sample_every,
        tolerance=cfg.solver_tolerance,
        method=cfg.solver_method,
    )
    deltas = record.gaps_upper[:, 0, :] - record.gaps_lower[:, 0, :]
    sums = record.sum_gap_diff[:, 0]
    return detect_excursions(
        record.times,
        deltas,
        sums,
        cfg.k,
        cfg.epsilon,
        zero_threshold=cfg.zero_threshold,
    )


def _run_excursions(cfg: ExperimentConfig, out: Path, workers: int):
    jobs = [(cfg, j) for j in range(cfg.ensemble_size)]
    records = _map_ordered(_excursion_run, jobs, workers)

    files = []
    jsonl_path = out / "excursions.jsonl"
    write_excursions_jsonl(records, jsonl_path)
    files.append(jsonl_path)

    decrements = np.concatenate(
        [np.asarray(r.decrements, dtype=float) for r in records]
        or [np.empty(0)]
    )
    init = build_initial_condition(cfg)
    summary = {
        "num_runs": cfg.ensemble_size,
        "num_openings": int(sum(r.n_t for r in records)),
        "num_completed": int(decrements.size),
        "k": cfg.k,
        "epsilon": cfg.epsilon,
    }
    if decrements.size:
        summary["max_decrement"] = float(decrements.max())
        summary["required_decrement"] = -cfg.epsilon / 2**cfg.k
        summary["fraction_meeting_required"] = float(
            np.mean(decrements <= -cfg.epsilon / 2**cfg.k + 1e-3)
        )
    try:
        D = domination_constant(init, cfg.truncation)
    except ValueError:
        D = None
        summary["tail_stats"] = "unavailable: no exponential domination constant"
    if D is not None and cfg.horizon > 1:
        tail = excursion_tail_stats(records, D, cfg.k, cfg.horizon)
        summary["tail_stats"] = {
            "threshold": tail.threshold,
            "num_long": tail.num_long,
            "fraction_long_excursions": tail.fraction_long_excursions,
            "fraction_runs_with_long": tail.fraction_runs_with_long,
            "binomial_se": tail.binomial_se,
            "bound_value": tail.bound_value,
            "domination_constant": D,
        }
    return summary, files


# --------------------------------------------------------------------------
# weak domain of attraction
# --------------------------------------------------------------------------


def _run_doa(cfg: ExperimentConfig, out: Path, workers: int):
    model = model_from_config(cfg)
    init = build_initial_condition(cfg)
    a_target = cfg.target_tilt if cfg.target_tilt >= 0 else cfg.tilt
    t_grid = cfg.t_grid or (cfg.horizon,)
    report = doa_experiment(
        model,
        init,
        a_target,
        cfg.k,
        t_grid,
        cfg.ensemble_size,
        NoiseStream(cfg.seed),
        dt=cfg.dt,
        thinning=cfg.thinning,
        tolerance=cfg.solver_tolerance,
        method=cfg.solver_method,
    )
    files = []
    report_path = out / "doa_report.csv"
    report.to_csv(report_path)
    files.append(report_path)
    summary = {
        "a_target": a_target,
        "t_grid": list(report.t_grid),
        "final_ks_mean": report.ks_mean[-1].tolist(),
        "final_ks_pooled": report.ks_pooled[-1].tolist(),
        "trend_strictly_decreasing": report.trend.astype(bool).tolist(),
        "trend_pooled_strictly_decreasing": report.trend_pooled.astype(bool).tolist(),
    }
    return summary, files


# --------------------------------------------------------------------------
# analytic bound sweeps
# --------------------------------------------------------------------------


def parse_bounds_points(raw: str):
    """Parse ``sup: k=5, l=3, t=1.0, gamma=12.0; inf: d=30, t=2.0, gamma=4.0``.

    Returns a list of dicts with keys event/k/l/d/t/gamma.  Missing indices
    default to 1 (they still parameterize the written bound columns).
    """
    points = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValueError(f"bounds point {chunk!r} needs an event tag 'sup:' or 'inf:'")
        tag, _, body = chunk.partition(":")
        tag = tag.strip()
        if tag not in ("sup", "inf"):
            raise ValueError(f"bounds event must be sup or inf, got {tag!r}")
        point = {"event": tag, "k": 1, "l": 1, "d": 1, "t": None, "gamma": None}
        for item in body.split(","):
            item = item.strip()
            if not item:
                continue
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in ("k", "l", "d", "t", "gamma"):
                raise ValueError(f"unknown bounds parameter {key!r}")
            point[key] = int(val) if key in ("k", "l", "d") else float(val)
        if point["t"] is None or point["gamma"] is None:
            raise ValueError(f"bounds point {chunk!r} needs t= and gamma=")
        points.append(point)
    if not points:
        raise ValueError("no bounds points given")
    return points


def _bounds_group(args):
    """Track running extremes of the hitting-event statistics for one group.

    The sup event watches the ranked particle ``Y_(k)``; the inf event
    watches ``inf_{i >= d} Y_i`` over particle labels, which is not a ranked
    quantity (labels mix with ranks as paths cross).  Both come naturally
    from the sorting engine on named particles: label ``i`` starts at
    ``Y_i(0)`` (ranked order, bottom pinned at zero) and draws its Brownian
    increments from the group stream's child ``i``.
    """
    cfg, g, start, stop, sup_ranks, inf_labels, checkpoints = args
    model = model_from_config(cfg)
    init = build_initial_condition(cfg)
    starts = _group_starts(init, cfg.truncation, cfg.seed, start, stop)
    noise = NoiseStream(cfg.seed).child(0, g)

    batch = starts.shape[0]
    n = model.num_particles
    pos = np.concatenate([np.zeros((batch, 1)), np.cumsum(starts, axis=1)], axis=1)
    streams = [noise.child(i) for i in range(n)]
    sqdt = math.sqrt(cfg.dt)
    n_steps = checkpoints[-1]
    dt = cfg.dt

    order = np.argsort(pos, axis=1, kind="stable")
    srt = np.take_along_axis(pos, order, axis=1)
    run_max = {k: srt[:, k].copy() for k in sup_ranks}
    run_min = {d: pos[:, d:].min(axis=1) for d in inf_labels}
    max_at, min_at = [], []

    ranks = np.empty((batch, n), dtype=int)
    lane = np.broadcast_to(np.arange(n), (batch, n))
    chunk_cap = max(1, min(n_steps, (1 << 21) // max(1, batch * n)))
    xi_buf = np.empty((chunk_cap, batch, n))
    step = 0
    next_cp = 0
    while step < n_steps:
        span = min(chunk_cap, n_steps - step)
        xi_chunk = xi_buf[:span]
        for i, s in enumerate(streams):
            xi_chunk[:, :, i] = s.normals((span, batch))
        xi_chunk *= sqdt
        for j in range(span):
            step += 1
            np.put_along_axis(ranks, order, lane, axis=1)
            pos = pos + model.rank_drifts[ranks] * dt + model.rank_diffusions[ranks] * xi_chunk[j]
            order = np.argsort(pos, axis=1, kind="stable")
            srt = np.take_along_axis(pos, order, axis=1)
            for k in sup_ranks:
                np.maximum(run_max[k], srt[:, k], out=run_max[k])
            for d in inf_labels:
                np.minimum(run_min[d], pos[:, d:].min(axis=1), out=run_min[d])
            if step == checkpoints[next_cp]:
                max_at.append({k: run_max[k].copy() for k in sup_ranks})
                min_at.append({d: run_min[d].copy() for d in inf_labels})
                next_cp += 1
    return starts, max_at, min_at


def _run_bounds(cfg: ExperimentConfig, out: Path, workers: int):
    points = parse_bounds_points(cfg.bounds_points)
    sup_ranks = sorted({p["k"] for p in points if p["event"] == "sup"})
    inf_labels = sorted({p["d"] for p in points if p["event"] == "inf"})
    times = sorted({p["t"] for p in points})
    checkpoints = [int(round(t / cfg.dt)) for t in times]
    for t, s in zip(times, checkpoints):
        if abs(s * cfg.dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"bounds time {t} is not a multiple of dt")
        if s < 1:
            raise ValueError(f"bounds time {t} is below one step of dt={cfg.dt}")

    groups = [
        (cfg, g, a, b, tuple(sup_ranks), tuple(inf_labels), tuple(checkpoints))
        for g, a, b in _member_groups(cfg.ensemble_size, cfg.group_size)
    ]
    results = _map_ordered(_bounds_group, groups, workers)
    starts = np.concatenate([r[0] for r in results])
    max_at = [
        {k: np.concatenate([r[1][ci][k] for r in results]) for k in sup_ranks}
        for ci in range(len(checkpoints))
    ]
    min_at = [
        {d: np.concatenate([r[2][ci][d] for r in results]) for d in inf_labels}
        for ci in range(len(checkpoints))
    ]

    positions = np.concatenate(
        [np.zeros((starts.shape[0], 1)), np.cumsum(starts, axis=1)], axis=1
    )
    n = starts.shape[0]
    rows, tags = [], []
    for p in points:
        ci = times.index(p["t"])
        sup_vals = np.empty(n)
        inf_vals = np.empty(n)
        for j in range(n):
            q = BoundQuery(
                k=p["k"], l=p["l"], d=p["d"], t=p["t"],
                gamma_level=p["gamma"], positions=positions[j],
            )
            b = analytic_bounds(q)
            sup_vals[j] = b.sup_bound
            inf_vals[j] = b.inf_bound
        if p["event"] == "sup":
            hits = max_at[ci][p["k"]] >= p["gamma"]
        else:
            hits = min_at[ci][p["d"]] <= p["gamma"]
        freq = float(hits.mean())
        se = math.sqrt(freq * (1.0 - freq) / n)
        rows.append(
            (p["k"], p["l"], p["d"], p["t"], p["gamma"],
             float(sup_vals.mean()), float(inf_vals.mean()), freq, se)
        )
        tags.append(p["event"])

    files = []
    bounds_path = out / "bounds.csv"
    _write_csv(
        bounds_path,
        ["k", "l", "d", "t", "gamma_level", "bound_sup", "bound_inf", "empirical", "se"],
        rows,
    )
    files.append(bounds_path)
    summary = {
        "num_trajectories": n,
        "points": [
            {
                "event": tag,
                "k": r[0], "l": r[1], "d": r[2], "t": r[3], "gamma_level": r[4],
                "bound_sup": r[5], "bound_inf": r[6], "empirical": r[7], "se": r[8],
                "bound_for_event": r[5] if tag == "sup" else r[6],
                "within_bound": r[7] <= (r[5] if tag == "sup" else r[6]) + 3 * r[8],
            }
            for tag, r in zip(tags, rows)
        ],
    }
    return summary, files


# --------------------------------------------------------------------------
# truncation doubling check
# --------------------------------------------------------------------------


def truncation_doubling_check(cfg: ExperimentConfig, monitored_k: int | None = None, workers: int = 1):
    """Compare the first monitored gaps at truncation m vs 2m, shared noise.

    Per-rank noise streams and per-member initial draws make the comparison
    exact: the 2m run consumes identical increments on ranks 0..m and extends
    the same initial vector.  The discrepancy for coordinate c is
    max_t |gap_m - gap_2m| / max(scale_c, 1e-12) with scale_c the coordinate's
    largest magnitude across both runs.
    """
    k = monitored_k if monitored_k is not None else (cfg.monitored_k or cfg.k)
    if k < 1:
        raise ValueError("monitored_k must be >= 1")
    if k > cfg.truncation:
        raise ValueError("monitored_k cannot exceed the truncation")

    def one_run(truncation: int) -> np.ndarray:
        model = (
            alt_model_step_config(truncation, cfg.tilt)
            if cfg.kind == "alt-model"
            else ModelSpec.atlas(truncation + 1, gamma=cfg.bottom_gamma)
        )
        init = build_initial_condition(cfg)
        stop = min(cfg.ensemble_size, cfg.group_size)
        starts = _group_starts(init, truncation, cfg.seed, 0, stop)
        noise = NoiseStream(cfg.seed).child(0, 0)
        traj = simulate(
            model,
            starts,
            cfg.burn_in + cfg.horizon,
            cfg.dt,
            noise,
            sample_every=cfg.sample_every,
            tolerance=cfg.solver_tolerance,
            method=cfg.solver_method,
        )
        return traj.gaps[:, :, :k]

    base = one_run(cfg.truncation)
    doubled = one_run(2 * cfg.truncation)
    scale = np.maximum(
        np.abs(base).max(axis=(0, 1)), np.abs(doubled).max(axis=(0, 1))
    )
    discrepancy = np.abs(base - doubled).max(axis=(0, 1)) / np.maximum(scale, 1e-12)

    heuristic = max(4 * k, int(math.ceil(10.0 * math.sqrt(cfg.burn_in + cfg.horizon))))
    report = {
        "monitored_k": k,
        "truncation": cfg.truncation,
        "per_coordinate_discrepancy": discrepancy.tolist(),
        "max_discrepancy": float(discrepancy.max()),
        "threshold": cfg.doubling_threshold,
        "flagged": bool(discrepancy.max() > cfg.doubling_threshold),
        "heuristic_minimum_truncation": heuristic,
        "below_heuristic": bool(cfg.truncation < heuristic),
    }
    return report


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------


def _map_ordered(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


_RUNNERS = {
    "stationarity": _run_stationarity,
    "alt-model": _run_stationarity,
    "coupling": _run_coupling,
    "excursions": _run_excursions,
    "doa": _run_doa,
    "bounds": _run_bounds,
}


def run(cfg: ExperimentConfig, workers: int = 1, output_dir=None) -> RunResult:
    """Execute one experiment; write snapshot, artifacts, and summary.

    On a solver failure every artifact written so far is removed and a
    failure report is left in the output directory instead.
    """
    out = Path(output_dir or cfg.output_dir or f"runs/{cfg.kind}")
    out.mkdir(parents=True, exist_ok=True)
    snapshot = out / SNAPSHOT_NAME
    write_snapshot(cfg, snapshot)

    try:
        summary, files = _RUNNERS[cfg.kind](cfg, out, workers)
    except SkorokhodSolveError as exc:
        for leftover in out.glob("*"):
            if leftover.name not in (SNAPSHOT_NAME,):
                leftover.unlink()
        report = {
            "error": "skorokhod solver failed",
            "residual": exc.residual,
            "iterations": exc.iterations,
        }
        (out / "failure_report.json").write_text(json.dumps(report, indent=2) + "\n")
        raise ExperimentFailure(
            f"solver failed (residual {exc.residual:.3e} after {exc.iterations} iterations)"
        ) from exc

    summary_full = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in config_as_dict(cfg).items()
        },
        "results": summary,
    }
    summary_path = out / SUMMARY_NAME
    summary_path.write_text(json.dumps(summary_full, indent=2, sort_keys=True) + "\n")
    all_files = (snapshot, *files, summary_path)
    return RunResult(cfg.kind, out, summary_full, tuple(map(str, all_files)))

"""Synchronous coupling of two gap processes on shared rank noise.

Two copies of the ranked dynamics advance in lockstep, consuming the same
Gaussian increment per rank per step, so every difference between them is
attributable to the initial configurations (or, for drift-domination runs,
to the bottom drift).  For coordinatewise-ordered starts the discrete
solution map preserves the order, the difference of cumulative local times
``L_upper - L_lower`` only decreases, and the summed gap difference obeys an
exact telescoping identity with boundary local-time terms:

    sum dZ(t) = sum dZ(0) + (dL_1(t) + dL_m(t)) / 2,

where ``dZ = Z_upper - Z_lower`` and ``dL = L_upper - L_lower``.  The
identity holds step by step in the discrete scheme (the reflection matrix's
column sums telescope), so its measured defect is a direct audit of solver
and accumulation error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .models import ModelSpec
from .reflect import (
    DEFAULT_SOLVER_TOL,
    _prepare_batch,
    _resolve_steps,
    _snapshot_steps,
    solve_skorokhod,
    tent_increments,
)
from .rng import NoiseStream

__all__ = ["CoupledRecord", "L1IdentityReport", "couple", "drift_domination_run", "verify_l1_identity"]


@dataclass
class CoupledRecord:
    """Sampled history of one synchronously coupled pair (batched).

    Gap and cumulative-local-time arrays have shape ``(T, B, m)``;
    ``sum_gap_diff`` is the summed difference ``sum_j (upper - lower)_j`` per
    sample, shape ``(T, B)``; ``violation_series`` is the per-sample maximum
    of ``(lower - upper)+`` over members and coordinates.  When ``track``
    coordinates were requested, ``tracked_diff`` holds the coupled gap
    differences at full step resolution, shape ``(steps + 1, B, k)``.
    """

    times: np.ndarray
    gaps_lower: np.ndarray
    gaps_upper: np.ndarray
    local_lower: np.ndarray
    local_upper: np.ndarray
    sum_gap_diff: np.ndarray
    violation_series: np.ndarray
    model_lower: ModelSpec
    model_upper: ModelSpec
    dt: float
    tracked_coordinates: tuple[int, ...] = ()
    tracked_diff: np.ndarray | None = None
    tracked_sum: np.ndarray | None = None

    def tracked_times(self) -> np.ndarray:
        """Full-resolution time grid matching ``tracked_diff``/``tracked_sum``."""
        if self.tracked_diff is None and self.tracked_sum is None:
            raise ValueError("record has no full-resolution tracking")
        n = (self.tracked_diff if self.tracked_diff is not None else self.tracked_sum).shape[0]
        return np.arange(n) * self.dt

    @property
    def monotone_violation(self) -> float:
        """Largest positive part of (lower - upper) seen at any sample."""
        return float(self.violation_series.max())

    @property
    def local_time_diff_first(self) -> np.ndarray:
        """Series of dL_1 = (L_upper - L_lower)_1, shape (T, B)."""
        return self.local_upper[:, :, 0] - self.local_lower[:, :, 0]

    @property
    def local_time_diff_last(self) -> np.ndarray:
        """Series of dL_m, shape (T, B)."""
        return self.local_upper[:, :, -1] - self.local_lower[:, :, -1]

    def local_time_diff(self) -> np.ndarray:
        """Full dL series, shape (T, B, m)."""
        return self.local_upper - self.local_lower

    def to_csv(self, path, member: int = 0, include_gaps: bool = False) -> None:
        """Write ``time,sum_dz,dl1,dlm,violation`` rows for one member.

        ``violation`` is the batch-wide per-sample maximum (the series the
        headline ``monotone_violation`` reduces).  With ``include_gaps`` the
        member's lower and upper gap columns are appended.
        """
        m = self.gaps_lower.shape[2]
        header = ["time", "sum_dz", "dl1", "dlm", "violation"]
        if include_gaps:
            header += [f"lower_gap_{i}" for i in range(1, m + 1)]
            header += [f"upper_gap_{i}" for i in range(1, m + 1)]
        dl1 = self.local_time_diff_first
        dlm = self.local_time_diff_last
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s, t in enumerate(self.times):
                row = [
                    format(t, ".17g"),
                    format(self.sum_gap_diff[s, member], ".17g"),
                    format(dl1[s, member], ".17g"),
                    format(dlm[s, member], ".17g"),
                    format(self.violation_series[s], ".17g"),
                ]
                if include_gaps:
                    row += [format(x, ".17g") for x in self.gaps_lower[s, member]]
                    row += [format(x, ".17g") for x in self.gaps_upper[s, member]]
                w.writerow(row)


def _couple_models(
    model_lower: ModelSpec,
    model_upper: ModelSpec,
    init_lower,
    init_upper,
    horizon: float,
    dt: float,
    noise: NoiseStream,
    sample_every: int,
    track: tuple[int, ...],
    track_sum: bool,
    tolerance: float,
    max_iterations: int | None,
    method: str,
) -> CoupledRecord:
    if model_lower.num_particles != model_upper.num_particles:
        raise ValueError("coupled models must have the same particle count")
    if not np.array_equal(model_lower.rank_diffusions, model_upper.rank_diffusions):
        raise ValueError("coupled models must share rank diffusions")
    m = model_lower.num_gaps
    gl = _prepare_batch(init_lower, m, "init_lower")
    gu = _prepare_batch(init_upper, m, "init_upper")
    if gl.shape != gu.shape:
        raise ValueError("init_lower and init_upper must have the same shape")
    if np.any(gl < 0) or np.any(gu < 0):
        raise ValueError("initial gaps must be nonnegative")
    batch = gl.shape[0]
    n_steps = _resolve_steps(horizon, dt)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    for c in track:
        if not 1 <= c <= m:
            raise ValueError(f"tracked coordinate {c} outside 1..{m}")

    streams = [noise.child(r) for r in range(model_lower.num_particles)]
    sqdt = np.sqrt(dt)
    snap_steps = _snapshot_steps(n_steps, sample_every)
    n_snap = snap_steps.shape[0]

    out_gl = np.empty((n_snap, batch, m))
    out_gu = np.empty((n_snap, batch, m))
    out_ll = np.empty((n_snap, batch, m))
    out_lu = np.empty((n_snap, batch, m))
    out_sum = np.empty((n_snap, batch))
    out_viol = np.empty(n_snap)
    tracked = np.empty((n_steps + 1, batch, len(track))) if track else None
    tracked_sum = np.empty((n_steps + 1, batch)) if track_sum else None
    track_idx = np.asarray([c - 1 for c in track], dtype=int)

    ll = np.zeros((batch, m))
    lu = np.zeros((batch, m))
    snap_ptr = 0

    def record(step: int):
        nonlocal snap_ptr
        if snap_ptr < n_snap and snap_steps[snap_ptr] == step:
            out_gl[snap_ptr] = gl
            out_gu[snap_ptr] = gu
            out_ll[snap_ptr] = ll
            out_lu[snap_ptr] = lu
            out_sum[snap_ptr] = (gu - gl).sum(axis=1)
            out_viol[snap_ptr] = max(0.0, float((gl - gu).max()))
            snap_ptr += 1

    record(0)
    if tracked is not None:
        tracked[0] = (gu - gl)[:, track_idx]
    if tracked_sum is not None:
        tracked_sum[0] = (gu - gl).sum(axis=1)

    for step in range(1, n_steps + 1):
        inc = sqdt * np.stack([s.normals(batch) for s in streams], axis=1)
        res_l = solve_skorokhod(
            gl + tent_increments(model_lower, dt, inc), tolerance, max_iterations, method
        )
        res_u = solve_skorokhod(
            gu + tent_increments(model_upper, dt, inc), tolerance, max_iterations, method
        )
        gl = res_l.new_gaps
        gu = res_u.new_gaps
        ll = ll + res_l.local_time_increments
        lu = lu + res_u.local_time_increments
        record(step)
        if tracked is not None:
            tracked[step] = (gu - gl)[:, track_idx]
        if tracked_sum is not None:
            tracked_sum[step] = (gu - gl).sum(axis=1)

    return CoupledRecord(
        times=snap_steps * dt,
        gaps_lower=out_gl,
        gaps_upper=out_gu,
        local_lower=out_ll,
        local_upper=out_lu,
        sum_gap_diff=out_sum,
        violation_series=out_viol,
        model_lower=model_lower,
        model_upper=model_upper,
        dt=dt,
        tracked_coordinates=tuple(track),
        tracked_diff=tracked,
        tracked_sum=tracked_sum,
    )


def couple(
    model: ModelSpec,
    init_lower,
    init_upper,
    horizon: float,
    dt: float,
    noise: NoiseStream,
    sample_every: int = 1,
    track: tuple[int, ...] = (),
    track_sum: bool = False,
    tolerance: float = DEFAULT_SOLVER_TOL,
    max_iterations: int | None = None,
    method: str = "auto",
) -> CoupledRecord:
    """Couple two copies of one model from different starts on shared noise.

    The monotonicity statistics are meaningful when
    ``init_lower <= init_upper`` coordinatewise; that ordering is the
    caller's responsibility (unordered starts are legal and simply make
    ``monotone_violation`` uninformative).  Monotonicity is asserted at
    sample times only; anything between samples is invisible, so callers
    auditing it closely should use ``sample_every=1``.
    """
    return _couple_models(
        model, model, init_lower, init_upper, horizon, dt, noise,
        sample_every, track, track_sum, tolerance, max_iterations, method,
    )


def drift_domination_run(
    model: ModelSpec,
    init,
    gamma: float,
    horizon: float,
    dt: float,
    noise: NoiseStream,
    sample_every: int = 1,
    tolerance: float = DEFAULT_SOLVER_TOL,
    max_iterations: int | None = None,
    method: str = "auto",
) -> CoupledRecord:
    """Couple ``model`` against its bottom-drift-``gamma`` variant, same start.

    Lowering the bottom drift weakens the upward push on the lowest particle,
    so gaps can only widen: the variant is the upper copy and the record's
    ``monotone_violation`` measures failures of ``Z <= Z_variant``.
    ``gamma`` must not exceed the model's own bottom drift.
    """
    if gamma > model.bottom_drift_gamma:
        raise ValueError(
            f"gamma must be <= the model's bottom drift ({model.bottom_drift_gamma:g})"
        )
    drifts = model.rank_drifts.copy()
    drifts[0] = gamma
    variant = ModelSpec(model.num_particles, drifts, model.rank_diffusions.copy())
    return _couple_models(
        model, variant, init, init, horizon, dt, noise,
        sample_every, (), False, tolerance, max_iterations, method,
    )


@dataclass(frozen=True)
class L1IdentityReport:
    """Defect of the telescoped local-time identity along a coupled record.

    ``defect_series`` is ``|sum dZ(t) - sum dZ(0) - dL_1(t)/2 - dL_m(t)/2|``
    per sample and member; ``boundary_series`` is ``|dL_m(t)|/2``, the term
    that must die off as the truncation grows for the untruncated identity
    to emerge.
    """

    times: np.ndarray
    defect_series: np.ndarray
    boundary_series: np.ndarray

    @property
    def max_defect(self) -> float:
        return float(self.defect_series.max())

    @property
    def final_boundary_term(self) -> np.ndarray:
        return self.boundary_series[-1]


def verify_l1_identity(record: CoupledRecord) -> L1IdentityReport:
    """Audit the exact discrete telescoping identity on a coupled record."""
    dl1 = record.local_time_diff_first
    dlm = record.local_time_diff_last
    defect = np.abs(
        record.sum_gap_diff - record.sum_gap_diff[0] - 0.5 * dl1 - 0.5 * dlm
    )
    return L1IdentityReport(
        times=record.times,
        defect_series=defect,
        boundary_series=0.5 * np.abs(dlm),
    )

"""Discretized gap dynamics with collision local times.

The gap vector of a ranked diffusion satisfies, between collisions, a linear
SDE driven by differences of the rank noises; at a collision the gap is held
at zero by a pair of local-time pushes.  One Euler step therefore splits into
a free move (the "tent" vector: old gaps plus drift and noise increments)
followed by a Skorokhod reflection that restores nonnegativity:

    new_gaps = tent + R dL,   dL >= 0,   new_gaps >= 0,   dL . new_gaps = 0,

where ``R`` is the tridiagonal reflection matrix with unit diagonal and
``-1/2`` off-diagonals.  This is a linear complementarity problem with an
M-matrix, so it has a unique solution.

Two solution methods are provided.  The projected fixed-point sweep

    dL_i <- max(0, (dL_{i-1} + dL_{i+1})/2 - tent_i)

converges monotonically from zero, but its rate degrades like
``cos(pi/(L+2))`` on a contiguous active cluster of length ``L``; that is
fine for small systems and hopeless when tight-packed high ranks collide in
blocks of 50+ every step.  For those, note that ``(R dL)_i`` is ``-1/2``
times the second difference of ``dL``, so the complementarity problem is a
discrete obstacle problem: with ``p`` the double cumulative sum of
``2 * tent`` (pinned to 0 at both ends of the extended index range), the
solution is ``dL = p - gcm(p)`` where ``gcm`` is the greatest convex
minorant of the points ``(i, p_i)``.  The minorant's slopes are the isotonic
(pool-adjacent-violators) regression of the slopes of ``p``, which gives the
exact answer in one O(m) pass.

The batch axis comes first everywhere: solvers and steppers accept ``(B, m)``
arrays (a bare ``(m,)`` vector is treated as a batch of one).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .models import ModelSpec
from .rng import NoiseStream

__all__ = [
    "SkorokhodSolveError",
    "ReflectionSolveResult",
    "GapState",
    "reflection_matrix",
    "reflection_matrix_inverse",
    "solve_skorokhod",
    "tent_increments",
    "step_ranked",
    "Trajectory",
    "PositionTrajectory",
    "simulate",
    "simulate_unranked",
]

DEFAULT_SOLVER_TOL = 1e-12

# Above this system size the minorant method takes over from the fixed-point
# sweep under method="auto".  The crossover is generous: the sweep is still
# exact below it, just slower on adversarial inputs.
_AUTO_METHOD_CUTOFF = 24

# Gaussian increments are drawn in blocks of this many values per run (split
# across steps as the batch and particle count allow) to keep generator-call
# overhead off the per-step budget.  Chunked draws from one stream are
# bit-identical to per-step draws, so determinism is unaffected.
_NOISE_CHUNK_VALUES = 1 << 21


class SkorokhodSolveError(RuntimeError):
    """Raised when the reflection solve fails to reach tolerance.

    Carries the final ``residual`` and the ``iterations`` spent, so callers
    can distinguish a slightly-too-tight budget from a genuinely bad input.
    """

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"reflection solve stopped at residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ReflectionSolveResult:
    """Outcome of one reflection solve.

    ``local_time_increments`` is the nonnegative dL vector; ``new_gaps`` is
    ``tent + R dL``, which may dip below zero by at most the residual.
    ``residual`` is the infinity norm of ``min(dL, tent + R dL)``, which
    vanishes exactly at the solution.
    """

    local_time_increments: np.ndarray
    new_gaps: np.ndarray
    iterations: int
    residual: float


def reflection_matrix(m: int) -> np.ndarray:
    """Tridiagonal reflection matrix: 1 on the diagonal, -1/2 off it."""
    if m < 1:
        raise ValueError("need m >= 1")
    r = np.eye(m)
    off = -0.5 * np.eye(m, k=1)
    return r + off + off.T


def reflection_matrix_inverse(m: int) -> np.ndarray:
    """Closed-form inverse: entry (i, j) is ``2 min(i,j) (1 - max(i,j)/(m+1))``.

    Indices are 1-based in the formula.  All entries are positive, which is
    what makes the one-step gap map monotone in the tent vector.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    i = np.arange(1, m + 1, dtype=float)
    lo = np.minimum.outer(i, i)
    hi = np.maximum.outer(i, i)
    return 2.0 * lo * (1.0 - hi / (m + 1))


def _negative_rows(t: np.ndarray) -> np.ndarray:
    """Indices of rows containing a negative entry.

    For narrow arrays a column sweep beats ``(t < 0).any(axis=1)`` by an
    order of magnitude (numpy's short-axis reductions are strided); wide
    arrays go through the plain reduction.
    """
    m = t.shape[1]
    if m > 32:
        return np.flatnonzero((t < 0.0).any(axis=1))
    neg = t[:, 0] < 0.0
    for c in range(1, m):
        np.logical_or(neg, t[:, c] < 0.0, out=neg)
    return np.flatnonzero(neg)


def _neighbor_half_sum(z: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """``out_i = (z_{i-1} + z_{i+1}) / 2`` with zero beyond both ends."""
    if out is None:
        out = np.zeros_like(z)
    else:
        out.fill(0.0)
    out[..., :-1] += 0.5 * z[..., 1:]
    out[..., 1:] += 0.5 * z[..., :-1]
    return out


def _minorant_increments(t: np.ndarray) -> np.ndarray:
    """Exact dL for each row of ``t`` via the obstacle-problem reduction.

    On the unit grid the minorant's slopes are the isotonic regression of
    the slopes of ``p`` (pooled block means equal hull slopes), so each row
    costs one pool-adjacent-violators pass.  Rows that are already feasible
    have convex ``p`` and come out as exact zeros.
    """
    batch, m = t.shape
    # p_0 = p_1 = 0, then p_{i+1} = 2 * double-cumsum of tent up to i.
    p = np.zeros((batch, m + 2))
    np.cumsum(np.cumsum(t, axis=1), axis=1, out=p[:, 2:])
    p[:, 2:] *= 2.0
    slopes = np.diff(p, axis=1)
    z = np.empty_like(t)
    for b in range(batch):
        gcm_slopes = isotonic_regression(slopes[b]).x
        # gcm value at interior index i is p_0 + the sum of the first i slopes.
        z[b] = p[b, 1:-1] - np.cumsum(gcm_slopes[:-1])
    np.maximum(z, 0.0, out=z)
    return z


def solve_skorokhod(
    tentative_gaps,
    tolerance: float = DEFAULT_SOLVER_TOL,
    max_iterations: int | None = None,
    method: str = "auto",
) -> ReflectionSolveResult:
    """Solve the one-step reflection problem for a batch of tent vectors.

    ``method`` is ``"fixedpoint"`` (projected sweeps from zero, monotone),
    ``"minorant"`` (exact convex-minorant construction, one pass), or
    ``"auto"`` which picks the sweep for small systems and the minorant
    beyond.  Both verify the complementarity residual
    ``max |min(dL, tent + R dL)|`` against ``tolerance`` and raise
    :class:`SkorokhodSolveError` if it is not met; for the sweep this is a
    convergence budget (default ``max_iterations`` is ``50 m + 500``), for
    the minorant it guards against floating-point degradation of the double
    cumulative sums, which grow like ``m**2 * |tent|`` (callers with m in
    the hundreds should pass a tolerance of 1e-8 or so).
    """
    t = np.asarray(tentative_gaps, dtype=float)
    squeeze = t.ndim == 1
    if squeeze:
        t = t[None, :]
    if t.ndim != 2:
        raise ValueError("tentative_gaps must be a vector or a (batch, m) array")
    if not np.all(np.isfinite(t)):
        raise ValueError("tentative gap entries must be finite")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    m = t.shape[1]
    if method == "auto":
        method = "fixedpoint" if m <= _AUTO_METHOD_CUTOFF else "minorant"
    if method not in ("fixedpoint", "minorant"):
        raise ValueError(f"unknown method {method!r}")

    # Rows with no negative entry are already at the solution (dL = 0), so
    # only the rest go through a solve.  In diffusive regimes with small dt
    # that is often a small fraction of a large batch.
    active = _negative_rows(t)
    if active.size == 0:
        z = np.zeros_like(t)
        gaps = t.copy()
        if squeeze:
            return ReflectionSolveResult(z[0], gaps[0], 0, 0.0)
        return ReflectionSolveResult(z, gaps, 0, 0.0)
    sub = t[active]

    if method == "fixedpoint":
        if max_iterations is None:
            max_iterations = 50 * m + 500
        zs = np.zeros_like(sub)
        nh = np.empty_like(sub)
        ws = np.empty_like(sub)
        iterations = 0
        residual = np.inf
        while iterations < max_iterations:
            iterations += 1
            _neighbor_half_sum(zs, out=nh)
            np.subtract(nh, sub, out=nh)
            np.maximum(nh, 0.0, out=nh)
            zs, nh = nh, zs
            _neighbor_half_sum(zs, out=ws)
            np.subtract(zs, ws, out=ws)
            np.add(ws, sub, out=ws)
            np.minimum(zs, ws, out=nh)
            np.abs(nh, out=nh)
            residual = float(nh.max())
            if residual <= tolerance:
                break
        if residual > tolerance:
            raise SkorokhodSolveError(residual, iterations)
    else:
        zs = _minorant_increments(sub)
        ws = sub + zs - _neighbor_half_sum(zs)
        residual = float(np.abs(np.minimum(zs, ws)).max())
        iterations = 1
        if residual > tolerance:
            raise SkorokhodSolveError(residual, iterations)

    # Either branch leaves ws = sub + zs - neighbor_half_sum(zs), the solved
    # rows' new gaps; passive rows keep their tent values.
    z = np.zeros_like(t)
    z[active] = zs
    gaps = t.copy()
    gaps[active] = ws
    if squeeze:
        return ReflectionSolveResult(z[0], gaps[0], iterations, residual)
    return ReflectionSolveResult(z, gaps, iterations, residual)


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------


# Difference operators folded with the rank diffusions, keyed by the model's
# coefficient bytes.  ``noise @ mat`` equals the sliced difference of the
# diffusion-scaled noises bitwise (each column holds one -sigma/+sigma pair,
# so exactly one rounding happens per output entry) and is several times
# faster on wide batches.
_TENT_MATS: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}


def _tent_operators(model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    key = model.rank_drifts.tobytes() + model.rank_diffusions.tobytes()
    ops = _TENT_MATS.get(key)
    if ops is None:
        p = model.num_particles
        mat = np.zeros((p, p - 1))
        idx = np.arange(p - 1)
        mat[idx, idx] = -model.rank_diffusions[:-1]
        mat[idx + 1, idx] = model.rank_diffusions[1:]
        ops = (np.diff(model.rank_drifts), mat)
        _TENT_MATS[key] = ops
    return ops


def tent_increments(model: ModelSpec, dt: float, scaled_noise: np.ndarray) -> np.ndarray:
    """Free-move gap increments from one batch of scaled rank noises.

    ``scaled_noise`` holds Gaussian draws already scaled by ``sqrt(dt)``,
    shape ``(..., num_particles)``, one per rank.  Gap ``i`` picks up the
    drift difference of ranks ``i`` and ``i-1`` times ``dt`` plus the
    corresponding diffusion-weighted noise difference.
    """
    drift_diff, noise_mat = _tent_operators(model)
    return drift_diff * dt + np.asarray(scaled_noise) @ noise_mat


@dataclass
class GapState:
    """Instantaneous state of the ranked system: gaps, local times, bottom.

    ``gaps`` and ``cum_local_times`` may be ``(m,)`` or batched ``(B, m)``;
    ``bottom_position`` is scalar or ``(B,)`` to match.
    """

    time: float
    gaps: np.ndarray
    cum_local_times: np.ndarray
    bottom_position: float | np.ndarray

    @classmethod
    def initial(cls, gaps) -> "GapState":
        g = np.asarray(gaps, dtype=float)
        bottom = 0.0 if g.ndim == 1 else np.zeros(g.shape[0])
        return cls(0.0, g.copy(), np.zeros_like(g), bottom)


def step_ranked(
    state: GapState,
    model: ModelSpec,
    dt: float,
    increments,
    tolerance: float = DEFAULT_SOLVER_TOL,
    max_iterations: int | None = None,
    method: str = "auto",
) -> GapState:
    """Advance one Euler step using the given scaled Gaussian increments.

    ``increments`` has one entry per rank (already scaled by ``sqrt(dt)``),
    shape ``(num_particles,)`` or ``(B, num_particles)``.  The bottom
    particle picks up its own drift and noise minus half the first
    local-time increment.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    inc = np.asarray(increments, dtype=float)
    if inc.shape[-1] != model.num_particles:
        raise ValueError(f"need {model.num_particles} increments, got {inc.shape[-1]}")
    tent = state.gaps + tent_increments(model, dt, inc)
    res = solve_skorokhod(tent, tolerance, max_iterations, method)
    dl = res.local_time_increments
    first_dl = dl[..., 0]
    bottom = (
        state.bottom_position
        + model.rank_drifts[0] * dt
        + model.rank_diffusions[0] * inc[..., 0]
        - 0.5 * first_dl
    )
    return GapState(
        time=state.time + dt,
        gaps=res.new_gaps,
        cum_local_times=state.cum_local_times + dl,
        bottom_position=bottom,
    )


def _prepare_batch(values, m: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != m:
        raise ValueError(f"{what} must have shape (batch, {m}) or ({m},)")
    return arr.copy()


def _snapshot_steps(n_steps: int, sample_every: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, sample_every)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def _resolve_steps(horizon: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(1.0, abs(horizon)):
        raise ValueError("horizon must be an integer multiple of dt")
    return n


@dataclass
class Trajectory:
    """Snapshots of one batched gap-process run.

    ``gaps`` and ``local_times`` have shape ``(snapshots, batch, m)``;
    ``local_times`` is cumulative from zero.  ``bottom`` tracks the position
    of the lowest-ranked particle, shape ``(snapshots, batch)``.  When
    coordinates were tracked, ``tracked`` holds them at full step resolution,
    shape ``(n_steps + 1, batch, len(tracked_coordinates))``.
    """

    times: np.ndarray
    gaps: np.ndarray
    local_times: np.ndarray
    bottom: np.ndarray
    model: ModelSpec
    dt: float
    tracked_coordinates: tuple[int, ...] = ()
    tracked: np.ndarray | None = None

    @property
    def batch_size(self) -> int:
        return self.gaps.shape[1]

    @property
    def num_gaps(self) -> int:
        return self.gaps.shape[2]

    def final_gaps(self) -> np.ndarray:
        return self.gaps[-1]

    def to_csv(self, path, member: int = 0) -> None:
        """Write one batch member as ``time,gap_1..gap_m,L_1..L_m,bottom``."""
        m = self.num_gaps
        header = (
            ["time"]
            + [f"gap_{i}" for i in range(1, m + 1)]
            + [f"L_{i}" for i in range(1, m + 1)]
            + ["bottom"]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s, t in enumerate(self.times):
                row = [format(t, ".17g")]
                row += [format(x, ".17g") for x in self.gaps[s, member]]
                row += [format(x, ".17g") for x in self.local_times[s, member]]
                row.append(format(self.bottom[s, member], ".17g"))
                w.writerow(row)


def simulate(
    model: ModelSpec,
    initial_gaps,
    horizon: float,
    dt: float,
    noise: NoiseStream,
    sample_every: int = 1,
    track: tuple[int, ...] = (),
    tolerance: float = DEFAULT_SOLVER_TOL,
    max_iterations: int | None = None,
    method: str = "auto",
) -> Trajectory:
    """Run the reflected gap dynamics from ``initial_gaps`` to ``horizon``.

    Rank ``r`` draws its Brownian increments from ``noise.child(r)``, so a
    run with more particles reproduces the noise of a smaller one rank for
    rank (the basis of the truncation doubling check).  ``sample_every``
    is in steps; the initial and final states are always recorded.  ``track``
    lists 1-based gap coordinates to record at every step.

    ``initial_gaps`` may be ``(m,)`` or ``(batch, m)``; sampling from an
    :class:`~atlas_lab.models.InitialCondition` is the caller's job, which
    keeps the engine's noise consumption independent of how the start state
    was produced.
    """
    m = model.num_gaps
    gaps = _prepare_batch(initial_gaps, m, "initial_gaps")
    if np.any(gaps < 0):
        raise ValueError("initial gaps must be nonnegative")
    batch = gaps.shape[0]
    n_steps = _resolve_steps(horizon, dt)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    for c in track:
        if not 1 <= c <= m:
            raise ValueError(f"tracked coordinate {c} outside 1..{m}")

    streams = [noise.child(r) for r in range(model.num_particles)]
    sqdt = np.sqrt(dt)
    snap_steps = _snapshot_steps(n_steps, sample_every)
    n_snap = snap_steps.shape[0]

    out_gaps = np.empty((n_snap, batch, m))
    out_lt = np.empty((n_snap, batch, m))
    out_bottom = np.empty((n_snap, batch))
    tracked = np.empty((n_steps + 1, batch, len(track))) if track else None
    track_idx = np.asarray([c - 1 for c in track], dtype=int)

    local_times = np.zeros((batch, m))
    bottom = np.zeros(batch)
    snap_ptr = 0

    def record(step: int):
        nonlocal snap_ptr
        if snap_ptr < n_snap and snap_steps[snap_ptr] == step:
            out_gaps[snap_ptr] = gaps
            out_lt[snap_ptr] = local_times
            out_bottom[snap_ptr] = bottom
            snap_ptr += 1

    record(0)
    if tracked is not None:
        tracked[0] = gaps[:, track_idx]

    n_particles = model.num_particles
    chunk_cap = max(1, min(n_steps, _NOISE_CHUNK_VALUES // max(1, batch * n_particles)))
    xi_buf = np.empty((chunk_cap, batch, n_particles))
    step = 0
    while step < n_steps:
        k = min(chunk_cap, n_steps - step)
        xi_chunk = xi_buf[:k]
        for r, s in enumerate(streams):
            xi_chunk[:, :, r] = s.normals((k, batch))
        xi_chunk *= sqdt
        for j in range(k):
            step += 1
            xi = xi_chunk[j]
            tent = gaps + tent_increments(model, dt, xi)
            res = solve_skorokhod(tent, tolerance, max_iterations, method)
            gaps = res.new_gaps
            local_times = local_times + res.local_time_increments
            bottom = bottom + (
                model.rank_drifts[0] * dt
                + model.rank_diffusions[0] * xi[:, 0]
                - 0.5 * res.local_time_increments[:, 0]
            )
            record(step)
            if tracked is not None:
                tracked[step] = gaps[:, track_idx]

    return Trajectory(
        times=snap_steps * dt,
        gaps=out_gaps,
        local_times=out_lt,
        bottom=out_bottom,
        model=model,
        dt=dt,
        tracked_coordinates=tuple(track),
        tracked=tracked,
    )


# --------------------------------------------------------------------------
# unranked (named-particle) engine
# --------------------------------------------------------------------------


@dataclass
class PositionTrajectory:
    """Snapshots of a named-particle run: ``positions`` is (snapshots, batch, n).

    Particles keep their labels; ranks are recomputed per step only to assign
    coefficients.  ``sorted_gaps()`` recovers the gap process.  No local
    times exist on this path; it serves as a law-level cross-check of the
    reflected engine.
    """

    times: np.ndarray
    positions: np.ndarray
    model: ModelSpec
    dt: float

    @property
    def batch_size(self) -> int:
        return self.positions.shape[1]

    def sorted_positions(self) -> np.ndarray:
        return np.sort(self.positions, axis=-1)

    def sorted_gaps(self) -> np.ndarray:
        return np.diff(self.sorted_positions(), axis=-1)

    def bottom(self) -> np.ndarray:
        return self.positions.min(axis=-1)

    def to_csv(self, path, member: int = 0) -> None:
        """Write one batch member as ``time,pos_1..pos_n`` (labels, not ranks)."""
        n = self.positions.shape[2]
        header = ["time"] + [f"pos_{i}" for i in range(1, n + 1)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s, t in enumerate(self.times):
                row = [format(t, ".17g")]
                row += [format(x, ".17g") for x in self.positions[s, member]]
                w.writerow(row)


def simulate_unranked(
    model: ModelSpec,
    initial_positions,
    horizon: float,
    dt: float,
    noise: NoiseStream,
    sample_every: int = 1,
) -> PositionTrajectory:
    """Euler scheme on named particles with rank-assigned coefficients.

    Each step sorts the current positions (stable, so ties give the lower
    label the lower rank), assigns rank ``j``'s drift and diffusion to the
    particle holding rank ``j``, and moves all particles independently.
    There is no reflection: collisions resolve themselves through the
    sorting.  Particle ``i`` draws from ``noise.child(i)``.
    """
    n = model.num_particles
    pos = _prepare_batch(initial_positions, n, "initial_positions")
    batch = pos.shape[0]
    n_steps = _resolve_steps(horizon, dt)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")

    streams = [noise.child(i) for i in range(n)]
    sqdt = np.sqrt(dt)
    snap_steps = _snapshot_steps(n_steps, sample_every)
    out = np.empty((snap_steps.shape[0], batch, n))
    snap_ptr = 0
    ranks = np.empty((batch, n), dtype=int)
    lane = np.arange(n)

    def record(step: int):
        nonlocal snap_ptr
        if snap_ptr < out.shape[0] and snap_steps[snap_ptr] == step:
            out[snap_ptr] = pos
            snap_ptr += 1

    record(0)
    chunk_cap = max(1, min(n_steps, _NOISE_CHUNK_VALUES // max(1, batch * n)))
    xi_buf = np.empty((chunk_cap, batch, n))
    step = 0
    while step < n_steps:
        k = min(chunk_cap, n_steps - step)
        xi_chunk = xi_buf[:k]
        for i, s in enumerate(streams):
            xi_chunk[:, :, i] = s.normals((k, batch))
        xi_chunk *= sqdt
        for j in range(k):
            step += 1
            order = np.argsort(pos, axis=1, kind="stable")
            np.put_along_axis(ranks, order, np.broadcast_to(lane, (batch, n)), axis=1)
            drift = model.rank_drifts[ranks]
            sigma = model.rank_diffusions[ranks]
            pos = pos + drift * dt + sigma * xi_chunk[j]
            record(step)

    return PositionTrajectory(times=snap_steps * dt, positions=out, model=model, dt=dt)

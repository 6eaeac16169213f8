"""Occupancy measures, exponential-marginal distances, and tail bounds.

The convergence object throughout is the time-averaged occupancy measure of
a gap coordinate: the empirical law of all samples of that coordinate up to
a horizon, with uniform time weighting.  Distances to the product-exponential
reference laws are plain Kolmogorov-Smirnov statistics, used descriptively
(the samples are autocorrelated; no formal test is attached).

The analytic bounds are one-sided Gaussian tail estimates for the ranked
system: an upper bound on the probability that the k-th ranked particle
exceeds a level before time t, and one on the probability that any particle
initially at index >= d dips below a level.  Both are functions of the
initial configuration only, so they pair naturally with batched runs from a
fixed start.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .models import InitialCondition, ModelSpec, stationary_rates
from .reflect import DEFAULT_SOLVER_TOL, Trajectory, simulate
from .rng import NoiseStream

__all__ = [
    "Ecdf",
    "OccupancyEstimate",
    "BoundQuery",
    "AnalyticBoundValues",
    "DoaReport",
    "gaussian_tail",
    "ks_to_exponential",
    "two_sample_ks",
    "two_sample_ks_critical",
    "occupancy",
    "analytic_bounds",
    "doa_experiment",
]

DEFAULT_THINNING = 0.1


@dataclass(frozen=True)
class Ecdf:
    """Empirical CDF as a sorted sample array with equal weights."""

    values: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "Ecdf":
        v = np.sort(np.asarray(samples, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("cannot build an ECDF from zero samples")
        return cls(v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def evaluate(self, x) -> np.ndarray:
        """Right-continuous ECDF values at ``x``."""
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n


def ks_to_exponential(ecdf: Ecdf, rate: float) -> float:
    """Sup distance between an ECDF and the Exp(rate) CDF.

    Evaluated at the jump points with both one-sided gaps, which is exact for
    a continuous reference CDF.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    v = ecdf.values
    n = ecdf.n
    ref = -np.expm1(-rate * np.maximum(v, 0.0))
    upper = np.max(np.arange(1, n + 1) / n - ref)
    lower = np.max(ref - np.arange(0, n) / n)
    return float(max(upper, lower, 0.0))


def two_sample_ks(first, second) -> float:
    """Two-sample KS statistic (sup distance between the two ECDFs)."""
    a = np.sort(np.asarray(first, dtype=float).ravel())
    b = np.sort(np.asarray(second, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(fa - fb).max())


def two_sample_ks_critical(n1: int, n2: int, alpha: float) -> float:
    """Asymptotic two-sample KS critical value at level ``alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((n1 + n2) / (n1 * n2))


# --------------------------------------------------------------------------
# occupancy measures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OccupancyEstimate:
    """Time-averaged occupancy marginals of the first ``k`` gaps.

    ``ecdfs[h][c]`` is the ECDF of coordinate ``c+1`` built from all retained
    samples in ``[0, t_grid[h]]``.  ``thinning`` records the minimum time
    spacing between retained samples.
    """

    t_grid: np.ndarray
    coordinates: tuple[int, ...]
    thinning: float
    ecdfs: list

    def ecdf(self, horizon: float, coordinate: int) -> Ecdf:
        h = int(np.nonzero(np.isclose(self.t_grid, horizon))[0][0])
        return self.ecdfs[h][self.coordinates.index(coordinate)]


def occupancy(
    trajectory: Trajectory,
    k: int,
    t_grid: Sequence[float],
    thinning: float = DEFAULT_THINNING,
    member: int | None = None,
) -> OccupancyEstimate:
    """Estimate occupancy marginals of gaps ``1..k`` at each horizon.

    Samples are the trajectory's snapshots, subsampled to at least
    ``thinning`` time units apart.  With ``member`` None all batch members
    are pooled (they must then be exchangeable starts of the same law);
    otherwise only that member contributes.
    """
    grid = np.asarray(list(t_grid), dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be non-empty and strictly increasing")
    times = trajectory.times
    if grid[-1] > times[-1] + 1e-9:
        raise ValueError("t_grid extends beyond the trajectory")
    if not 1 <= k <= trajectory.num_gaps:
        raise ValueError(f"k must lie in 1..{trajectory.num_gaps}")

    spacing = float(np.min(np.diff(times))) if times.shape[0] > 1 else np.inf
    stride = max(1, int(math.ceil(thinning / spacing - 1e-9))) if np.isfinite(spacing) else 1
    keep = np.arange(0, times.shape[0], stride)
    kept_times = times[keep]
    gaps = trajectory.gaps[keep][:, :, :k]
    if member is not None:
        gaps = gaps[:, member : member + 1, :]

    ecdfs = []
    for h in grid:
        sel = kept_times <= h + 1e-12
        ecdfs.append([Ecdf.from_samples(gaps[sel, :, c]) for c in range(k)])
    return OccupancyEstimate(
        t_grid=grid,
        coordinates=tuple(range(1, k + 1)),
        thinning=stride * spacing if np.isfinite(spacing) else 0.0,
        ecdfs=ecdfs,
    )


# --------------------------------------------------------------------------
# analytic Gaussian tail bounds
# --------------------------------------------------------------------------


def gaussian_tail(x) -> np.ndarray:
    """Standard normal upper tail via the complementary error function."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class BoundQuery:
    """Inputs of the two tail bounds: indices, horizon, level, initial state.

    ``positions`` is the ranked initial configuration ``Y_0(0) <= Y_1(0) <= ...``
    (length m+1).  ``k`` indexes the monitored ranked particle for the upper
    bound, ``l >= 1`` is the averaging depth of its first term, ``d >= 1`` the
    starting index of the lower bound's union, ``gamma_level`` the level.
    """

    k: int
    l: int
    d: int
    t: float
    gamma_level: float
    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        if self.t <= 0:
            raise ValueError("t must be positive")
        if self.l < 1 or self.d < 1:
            raise ValueError("l and d must be >= 1")
        if not 0 <= self.k < self.positions.shape[0]:
            raise ValueError("k must index into positions")
        if self.l > self.positions.shape[0]:
            raise ValueError("l exceeds the number of positions")


@dataclass(frozen=True)
class AnalyticBoundValues:
    """The two bound values, clamped into [0, 1] with clamp flags."""

    sup_bound: float
    inf_bound: float
    sup_clamped: bool
    inf_clamped: bool


def analytic_bounds(query: BoundQuery) -> AnalyticBoundValues:
    """Evaluate both Gaussian tail bounds for one query.

    Upper ranked-particle bound:
        2 tail((l (G - Y_k)/3 - t - sum_{j<l} Y_j) / sqrt(l t))
        + 4 (k+1) tail((G - Y_k) / (3 sqrt(t)))
    Low-particle bound, truncated at the available positions:
        2 sum_{i >= d} tail((Y_i - G) / sqrt(t))

    Values above 1 are vacuous as probability bounds and are clamped, with
    the flag reporting that this happened.
    """
    y = query.positions
    g = query.gamma_level
    t = query.t
    yk = y[query.k]
    first_arg = (query.l * (g - yk) / 3.0 - t - y[: query.l].sum()) / math.sqrt(query.l * t)
    sup_raw = float(
        2.0 * gaussian_tail(first_arg)
        + 4.0 * (query.k + 1) * gaussian_tail((g - yk) / (3.0 * math.sqrt(t)))
    )
    tail_args = (y[query.d :] - g) / math.sqrt(t)
    inf_raw = float(2.0 * gaussian_tail(tail_args).sum()) if tail_args.size else 0.0
    return AnalyticBoundValues(
        sup_bound=min(sup_raw, 1.0),
        inf_bound=min(inf_raw, 1.0),
        sup_clamped=sup_raw > 1.0,
        inf_clamped=inf_raw > 1.0,
    )


# --------------------------------------------------------------------------
# attraction experiments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DoaReport:
    """KS distances of occupancy marginals to the target exponentials.

    ``ks_members`` has shape ``(ensemble, horizons, coordinates)``;
    ``ks_mean``/``ks_se`` are its ensemble statistics, and ``ks_pooled`` is
    the distance of the pooled-ensemble occupancy (smaller Monte Carlo noise,
    same estimand).  ``trend`` flags, per coordinate, whether the mean
    distance strictly decreases along the horizon grid; ``trend_pooled``
    does the same for the pooled series.
    """

    a_target: float
    t_grid: np.ndarray
    coordinates: tuple[int, ...]
    target_rates: np.ndarray
    ks_members: np.ndarray
    ks_mean: np.ndarray
    ks_se: np.ndarray
    ks_pooled: np.ndarray
    trend: np.ndarray
    trend_pooled: np.ndarray

    def to_csv(self, path) -> None:
        """Write ``horizon,coordinate,ks_mean,ks_se,trend`` rows.

        ``trend`` is the coordinate's strict-decrease flag (0/1), repeated on
        each of its rows.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["horizon", "coordinate", "ks_mean", "ks_se", "trend"])
            for hi, h in enumerate(self.t_grid):
                for ci, c in enumerate(self.coordinates):
                    w.writerow(
                        [
                            format(h, ".17g"),
                            c,
                            format(self.ks_mean[hi, ci], ".17g"),
                            format(self.ks_se[hi, ci], ".17g"),
                            int(self.trend[ci]),
                        ]
                    )


def doa_experiment(
    model: ModelSpec,
    init: InitialCondition,
    a_target: float,
    k: int,
    t_grid: Sequence[float],
    ensemble_size: int,
    noise: NoiseStream,
    dt: float = 1e-3,
    thinning: float = DEFAULT_THINNING,
    tolerance: float = DEFAULT_SOLVER_TOL,
    method: str = "auto",
) -> DoaReport:
    """Measure convergence of occupancy marginals toward the tilt-``a`` law.

    Runs an ensemble from iid draws of ``init`` (member ``j`` draws its start
    from ``noise.child(1, j)``; the shared engine stream is
    ``noise.child(0, 0)``), estimates per-member and pooled occupancy of gaps
    ``1..k`` at each horizon, and reports KS distances to ``Exp(2 + i a)``.
    The trend flags state whether the distance sequence strictly decreases
    along ``t_grid``; they are qualitative, not a hypothesis test.
    """
    if a_target < 0:
        raise ValueError("a_target must be >= 0")
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    grid = np.asarray(list(t_grid), dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be non-empty and strictly increasing")
    m = model.num_gaps
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in 1..{m}")

    rates = stationary_rates(a_target, k)
    starts = np.stack([init.sample(m, noise.child(1, j)) for j in range(ensemble_size)])
    sample_every = max(1, int(round(thinning / dt)))
    traj = simulate(
        model,
        starts,
        float(grid[-1]),
        dt,
        noise.child(0, 0),
        sample_every=sample_every,
        tolerance=tolerance,
        method=method,
    )

    n_h, n_c = grid.shape[0], k
    ks_members = np.empty((ensemble_size, n_h, n_c))
    for j in range(ensemble_size):
        est = occupancy(traj, k, grid, thinning=thinning, member=j)
        for hi in range(n_h):
            for ci in range(n_c):
                ks_members[j, hi, ci] = ks_to_exponential(est.ecdfs[hi][ci], rates[ci])
    pooled = occupancy(traj, k, grid, thinning=thinning)
    ks_pooled = np.array(
        [
            [ks_to_exponential(pooled.ecdfs[hi][ci], rates[ci]) for ci in range(n_c)]
            for hi in range(n_h)
        ]
    )
    ks_mean = ks_members.mean(axis=0)
    if ensemble_size > 1:
        ks_se = ks_members.std(axis=0, ddof=1) / math.sqrt(ensemble_size)
    else:
        ks_se = np.zeros_like(ks_mean)
    trend = np.all(np.diff(ks_mean, axis=0) < 0, axis=0)
    trend_pooled = np.all(np.diff(ks_pooled, axis=0) < 0, axis=0)
    return DoaReport(
        a_target=a_target,
        t_grid=grid,
        coordinates=tuple(range(1, k + 1)),
        target_rates=rates,
        ks_members=ks_members,
        ks_mean=ks_mean,
        ks_se=ks_se,
        ks_pooled=ks_pooled,
        trend=trend,
        trend_pooled=trend_pooled,
    )

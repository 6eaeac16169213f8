"""Stopping-time machinery on coupled gap-difference paths.

An excursion of the coupled difference ``dZ_k`` starts when the coordinate
climbs above a threshold ``epsilon`` and ends when it returns to zero after
a prescribed chain of intermediate zero hits: starting from the excursion's
opening time, coordinate ``k`` must hit zero, then ``k-1``, down to ``1``
(each search starting where the previous ended), and the excursion closes at
the first zero of coordinate ``k`` after that chain completes.  Each
completed excursion forces the summed difference to drop by at least
``epsilon / 2**k``, which is the mechanism behind the L1 contraction of
synchronously coupled ordered systems.

All detection happens on the recorded grid: "hits zero" means "at or below a
small threshold at a grid time", and reported times are the first grid times
satisfying each condition.  Sub-grid crossings are invisible by design; the
quantitative checks built on top are one-sided to stay valid under that
convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .reflect import DEFAULT_SOLVER_TOL

__all__ = [
    "DEFAULT_ZERO_THRESHOLD",
    "ExcursionRecord",
    "ExcursionTailReport",
    "t_chain",
    "detect_excursions",
    "excursion_tail_stats",
    "write_excursions_jsonl",
]

DEFAULT_ZERO_THRESHOLD = 10 * DEFAULT_SOLVER_TOL


def _first_at_or_below(series: np.ndarray, start: int, threshold: float) -> int:
    """Index of the first entry ``>= start`` at or below ``threshold``, or -1."""
    hits = series[start:] <= threshold
    if hits.size == 0:
        return -1
    pos = int(np.argmax(hits))
    if not hits[pos]:
        return -1
    return start + pos


def _first_at_or_above(series: np.ndarray, start: int, threshold: float) -> int:
    hits = series[start:] >= threshold
    if hits.size == 0:
        return -1
    pos = int(np.argmax(hits))
    if not hits[pos]:
        return -1
    return start + pos


def t_chain(
    times,
    deltas,
    k: int,
    s: float,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
) -> np.ndarray:
    """Successive first zero-hit times of coordinates ``k`` down to ``1``.

    ``times`` is the sample grid and ``deltas`` the coordinate paths, shape
    ``(len(times), C)`` with coordinate ``i`` in column ``i - 1``; ``k <= C``.
    The chain starts at time ``s``: entry ``j`` (0-based) is the first grid
    time, at or after the previous entry, where coordinate ``k - j`` is at or
    below ``zero_threshold``.  Entries are ``inf`` from the first coordinate
    that never complies within the record.
    """
    times = np.asarray(times, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 2 or deltas.shape[0] != times.shape[0]:
        raise ValueError("deltas must be (len(times), coordinates)")
    if not 1 <= k <= deltas.shape[1]:
        raise ValueError(f"k must lie in 1..{deltas.shape[1]}")
    if s > times[-1]:
        raise ValueError("chain start time lies beyond the record")
    out = np.full(k, np.inf)
    idx = int(np.searchsorted(times, s, side="left"))
    for j in range(k):
        coord = k - j  # k, k-1, ..., 1
        idx = _first_at_or_below(deltas[:, coord - 1], idx, zero_threshold)
        if idx < 0:
            break
        out[j] = times[idx]
    return out


@dataclass
class ExcursionRecord:
    """All excursions of one coordinate found in one recorded path.

    ``sigma_times`` alternates opening and closing times (an unmatched final
    opening is kept, so the length may be odd).  ``t_chains`` has one chain
    per opening, entries ``inf`` where the chain stalled.  ``decrements``
    and ``lengths`` cover completed excursions only: the change of the
    summed difference between opening and closing (negative when the sum
    contracted) and the closing-minus-opening duration.
    """

    k: int
    epsilon: float
    horizon: float
    zero_threshold: float
    sigma_times: np.ndarray
    t_chains: list = field(default_factory=list)
    decrements: np.ndarray = field(default_factory=lambda: np.empty(0))
    lengths: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_t(self) -> int:
        """Number of excursions opened by the horizon."""
        opens = self.sigma_times[0::2]
        return int(np.count_nonzero(opens <= self.horizon))

    @property
    def n_completed(self) -> int:
        return self.decrements.shape[0]


def detect_excursions(
    times,
    deltas,
    sum_series,
    k: int,
    epsilon: float,
    horizon: float | None = None,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
) -> ExcursionRecord:
    """Scan one path for the alternating excursion times of coordinate ``k``.

    ``sum_series`` is the summed coupled difference on the same grid, used
    for the per-excursion decrements.  ``horizon`` defaults to the end of the
    record and only affects the excursion count ``n_t``; detection itself
    always runs over the whole record.
    """
    times = np.asarray(times, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    sums = np.asarray(sum_series, dtype=float)
    if sums.shape != times.shape:
        raise ValueError("sum_series must match the time grid")
    if epsilon <= zero_threshold:
        raise ValueError("epsilon must exceed the zero threshold")
    if horizon is None:
        horizon = float(times[-1])

    ks = deltas[:, k - 1]
    sigma: list[float] = []
    chains: list[np.ndarray] = []
    decs: list[float] = []
    lens: list[float] = []

    idx = _first_at_or_above(ks, 0, epsilon)
    while idx >= 0:
        open_idx = idx
        sigma.append(float(times[open_idx]))
        chain = t_chain(times, deltas, k, times[open_idx], zero_threshold)
        chains.append(chain)
        if not np.isfinite(chain[-1]):
            break
        chain_end = int(np.searchsorted(times, chain[-1], side="left"))
        close_idx = _first_at_or_below(ks, chain_end, zero_threshold)
        if close_idx < 0:
            break
        sigma.append(float(times[close_idx]))
        decs.append(float(sums[close_idx] - sums[open_idx]))
        lens.append(float(times[close_idx] - times[open_idx]))
        idx = _first_at_or_above(ks, close_idx, epsilon)

    return ExcursionRecord(
        k=k,
        epsilon=epsilon,
        horizon=horizon,
        zero_threshold=zero_threshold,
        sigma_times=np.asarray(sigma),
        t_chains=chains,
        decrements=np.asarray(decs),
        lengths=np.asarray(lens),
    )


@dataclass(frozen=True)
class ExcursionTailReport:
    """Long-excursion statistics for an ensemble of records.

    ``threshold`` is ``48 D^2 k (k+1)^2 log T``.  Two empirical frequencies
    are reported: per completed excursion, and per run (whether a run has any
    long excursion, the event the tail lemma actually bounds).
    ``bound_value`` evaluates the additive bound ``P(N_T > n) + 5 k n / T^2``
    at ``n`` equal to the largest observed count, where the first term's
    empirical estimate is then zero by construction.
    """

    threshold: float
    num_records: int
    num_completed: int
    num_long: int
    fraction_long_excursions: float
    num_runs_with_long: int
    fraction_runs_with_long: float
    binomial_se: float
    reference_n: int
    bound_value: float


def excursion_tail_stats(
    records: Iterable[ExcursionRecord],
    D: float,
    k: int,
    horizon: float,
) -> ExcursionTailReport:
    """Compare observed excursion lengths against the analytic tail threshold.

    The caller asserts that the upper initial law of the underlying coupled
    runs is dominated by the ``D``-dilated stationary law; that hypothesis is
    what makes the threshold meaningful.  ``horizon`` must exceed 1 so the
    logarithm keeps the threshold positive.
    """
    if D <= 0:
        raise ValueError("domination factor D must be positive")
    if horizon <= 1.0:
        raise ValueError("horizon must exceed 1 (log T must be positive)")
    recs = list(records)
    if not recs:
        raise ValueError("need at least one record")
    for r in recs:
        if r.k != k:
            raise ValueError(f"record has k={r.k}, expected {k}")

    threshold = 48.0 * D * D * k * (k + 1) ** 2 * math.log(horizon)
    num_completed = sum(r.n_completed for r in recs)
    num_long = sum(int(np.count_nonzero(r.lengths > threshold)) for r in recs)
    runs_long = sum(bool(np.any(r.lengths > threshold)) for r in recs)
    n_ref = max(r.n_t for r in recs)
    frac_runs = runs_long / len(recs)
    se = math.sqrt(frac_runs * (1.0 - frac_runs) / len(recs))
    return ExcursionTailReport(
        threshold=threshold,
        num_records=len(recs),
        num_completed=num_completed,
        num_long=num_long,
        fraction_long_excursions=(num_long / num_completed) if num_completed else 0.0,
        num_runs_with_long=runs_long,
        fraction_runs_with_long=frac_runs,
        binomial_se=se,
        reference_n=n_ref,
        bound_value=0.0 + 5.0 * k * n_ref / horizon**2,
    )


def _json_num(x: float):
    return None if not math.isfinite(x) else x


def write_excursions_jsonl(records: Sequence[ExcursionRecord], path) -> None:
    """Write one JSON object per detected excursion: ``{k, eps, sigma_open, ...}``.

    An unmatched final opening appears with ``sigma_close`` and ``decrement``
    null; chain entries that never completed are null as well.
    """
    with open(path, "w") as fh:
        for rec in records:
            opens = rec.sigma_times[0::2]
            closes = rec.sigma_times[1::2]
            for j, op in enumerate(opens):
                closed = j < closes.shape[0]
                obj = {
                    "k": rec.k,
                    "eps": rec.epsilon,
                    "sigma_open": float(op),
                    "sigma_close": float(closes[j]) if closed else None,
                    "decrement": float(rec.decrements[j]) if closed else None,
                    "chain": [_json_num(float(x)) for x in rec.t_chains[j]],
                }
                fh.write(json.dumps(obj) + "\n")

"""Model specifications, stationary-law samplers, and initial conditions.

A ranked diffusion here is a system of ``m+1`` particles on the line whose
drift and diffusion coefficients depend only on the particle's current rank:
rank ``j`` moves with drift ``rank_drifts[j]`` and diffusion
``rank_diffusions[j]``.  The Atlas preset gives unit upward drift to the
lowest particle and none to the rest.  The object of study is the gap vector
``Z_i = Y_(i) - Y_(i-1)``, ``i = 1..m``.

Stationary gap laws used throughout:

* infinite-model family, tilt ``a >= 0``: gap ``i ~ Exp(2 + i*a)``;
* finite Atlas model with ``d`` gaps: gap ``i ~ Exp(2*(1 - i/(d+1)))``;
* alternative finite model with tilt ``a > 0``: gap
  ``i ~ Exp((2 + i*a)*(1 - i/(d+1)))``.

Initial conditions are declarative: an :class:`InitialCondition` names a
sampling recipe, and every stochastic recipe is expressed as a coordinatewise
quantile transform of iid uniforms.  That makes ``pointwise_min`` of two
recipes well defined under one shared uniform draw, and keeps all samplers
reproducible from a :class:`~atlas_lab.rng.NoiseStream`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .rng import NoiseStream

__all__ = [
    "ModelSpec",
    "InitialCondition",
    "ConditionDiagnostic",
    "as_gap_vector",
    "prefix_positions",
    "stationary_rates",
    "finite_atlas_rates",
    "alt_model_rates",
    "sample_stationary_gaps",
    "sample_finite_atlas_gaps",
    "sample_alt_model_gaps",
    "scale_sequence",
    "check_conditions",
    "write_gap_csv",
]


# --------------------------------------------------------------------------
# model specification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Drifts, diffusions, and truncation level of one finite ranked diffusion.

    ``rank_drifts`` and ``rank_diffusions`` have length ``num_particles``
    (entries indexed by rank, bottom first).  Diffusions must be strictly
    positive.
    """

    num_particles: int
    rank_drifts: np.ndarray
    rank_diffusions: np.ndarray

    def __post_init__(self):
        drifts = np.asarray(self.rank_drifts, dtype=float)
        diffs = np.asarray(self.rank_diffusions, dtype=float)
        if self.num_particles < 2:
            raise ValueError("need at least 2 particles (1 gap)")
        if drifts.shape != (self.num_particles,):
            raise ValueError(
                f"rank_drifts must have length {self.num_particles}, got {drifts.shape}"
            )
        if diffs.shape != (self.num_particles,):
            raise ValueError(
                f"rank_diffusions must have length {self.num_particles}, got {diffs.shape}"
            )
        if not np.all(np.isfinite(drifts)):
            raise ValueError("rank_drifts must be finite")
        if not np.all(diffs > 0):
            raise ValueError("rank_diffusions must be strictly positive")
        object.__setattr__(self, "rank_drifts", drifts)
        object.__setattr__(self, "rank_diffusions", diffs)

    @property
    def num_gaps(self) -> int:
        return self.num_particles - 1

    @property
    def bottom_drift_gamma(self) -> float:
        """Drift of the lowest-ranked particle (the Atlas drift when preset)."""
        return float(self.rank_drifts[0])

    @classmethod
    def atlas(cls, num_particles: int, gamma: float = 1.0) -> "ModelSpec":
        """Atlas preset: drift ``gamma`` on the bottom rank, unit diffusions."""
        drifts = np.zeros(num_particles)
        drifts[0] = gamma
        return cls(num_particles, drifts, np.ones(num_particles))

    @classmethod
    def alternative_finite(cls, d: int, a: float) -> "ModelSpec":
        """Alternative finite rank-based diffusion with ``d`` gaps and tilt ``a``.

        Rank 0 drifts at ``1``; rank ``j >= 1`` at ``-j*a/(d+1)``.  Its
        stationary gap law is the tilted finite product-exponential with
        rates ``(2 + i*a)*(1 - i/(d+1))``: by the standard stationarity
        criterion for ranked diffusions with unit volatility, gap ``i`` is
        Exp(2 alpha_i) with ``alpha_i = sum_{j<i} (g_j - mean(g))``, and this
        drift vector is the one that reproduces those rates (the bottom rank
        must beat rank 1 by ``1 + a/(d+1)``, not by 1).
        """
        if d < 1:
            raise ValueError("d must be >= 1")
        if a <= 0:
            raise ValueError("tilt a must be > 0 for the alternative model")
        j = np.arange(d + 1, dtype=float)
        drifts = -j * a / (d + 1)
        drifts[0] = 1.0
        return cls(d + 1, drifts, np.ones(d + 1))


# --------------------------------------------------------------------------
# gap vectors and positions
# --------------------------------------------------------------------------


def as_gap_vector(values, m: int | None = None) -> np.ndarray:
    """Validate and return a gap vector (1-d, finite, nonnegative)."""
    g = np.asarray(values, dtype=float)
    if g.ndim != 1:
        raise ValueError("gap vector must be one-dimensional")
    if m is not None and g.shape[0] != m:
        raise ValueError(f"expected {m} gaps, got {g.shape[0]}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gaps must be finite")
    if np.any(g < 0):
        raise ValueError("gaps must be nonnegative")
    return g


def prefix_positions(gaps) -> np.ndarray:
    """Particle positions implied by a gap vector, bottom particle at 0.

    ``(g1, g2, g3) -> (0, g1, g1+g2, g1+g2+g3)``; output is nondecreasing and
    one entry longer than the input.
    """
    g = as_gap_vector(gaps)
    out = np.empty(g.shape[0] + 1)
    out[0] = 0.0
    np.cumsum(g, out=out[1:])
    return out


# --------------------------------------------------------------------------
# stationary-law rates and samplers
# --------------------------------------------------------------------------


def stationary_rates(a: float, m: int) -> np.ndarray:
    """Exponential rates ``2 + i*a`` of the infinite-model stationary law."""
    if m < 1:
        raise ValueError("need at least one gap")
    if a < 0:
        raise ValueError("tilt a must be >= 0")
    i = np.arange(1, m + 1, dtype=float)
    return 2.0 + i * a


def finite_atlas_rates(d: int) -> np.ndarray:
    """Exponential rates ``2*(1 - i/(d+1))`` of the finite Atlas stationary law."""
    if d < 1:
        raise ValueError("need at least one gap")
    i = np.arange(1, d + 1, dtype=float)
    return 2.0 * (1.0 - i / (d + 1))


def alt_model_rates(a: float, d: int) -> np.ndarray:
    """Exponential rates ``(2 + i*a)*(1 - i/(d+1))`` of the alternative model."""
    if d < 1:
        raise ValueError("need at least one gap")
    if a <= 0:
        raise ValueError("tilt a must be > 0 (use finite_atlas_rates for a=0)")
    i = np.arange(1, d + 1, dtype=float)
    return (2.0 + i * a) * (1.0 - i / (d + 1))


def sample_stationary_gaps(a: float, m: int, noise: NoiseStream) -> np.ndarray:
    """One draw of ``m`` gaps from the infinite-model stationary law, tilt ``a``."""
    return noise.exponentials(stationary_rates(a, m))


def sample_finite_atlas_gaps(d: int, noise: NoiseStream) -> np.ndarray:
    """One draw from the finite Atlas stationary gap law (``d`` gaps)."""
    return noise.exponentials(finite_atlas_rates(d))


def sample_alt_model_gaps(a: float, d: int, noise: NoiseStream) -> np.ndarray:
    """One draw from the alternative finite model's stationary gap law."""
    return noise.exponentials(alt_model_rates(a, d))


# --------------------------------------------------------------------------
# deterministic scale sequences
# --------------------------------------------------------------------------

_SCALE_FAMILIES = ("constant", "power", "adversarial_blocks", "linear_over_loglog")


def scale_sequence(family: str, m: int, **params) -> np.ndarray:
    """Evaluate a named deterministic sequence at indices 1..m.

    Families:

    * ``constant``: ``value`` everywhere.
    * ``power``: ``coeff * i**exponent``.
    * ``adversarial_blocks``: ``i**(-2/3)`` except at perfect cubes
      ``i = n**3`` where the value is ``n`` (so index 1 gets 1, index 8
      gets 2, ...).  The partial sums grow like ``d**(2/3)`` while the
      coordinatewise minimum against a stationary draw sums like
      ``d**(1/3)``, which is what makes the sequence adversarial for the
      attraction diagnostics.
    * ``linear_over_loglog``: ``coeff * i / log(log(i + 2))``, a slowly
      growing perturbation that keeps relative rate changes small.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    i = np.arange(1, m + 1, dtype=float)
    if family == "constant":
        return np.full(m, float(params["value"]))
    if family == "power":
        return float(params["coeff"]) * i ** float(params["exponent"])
    if family == "adversarial_blocks":
        vals = i ** (-2.0 / 3.0)
        n = np.rint(np.cbrt(i)).astype(int)
        cubes = n.astype(float) ** 3 == i
        vals[cubes] = n[cubes]
        return vals
    if family == "linear_over_loglog":
        return float(params["coeff"]) * i / np.log(np.log(i + 2.0))
    raise ValueError(f"unknown scale family {family!r}; expected one of {_SCALE_FAMILIES}")


# --------------------------------------------------------------------------
# initial conditions
# --------------------------------------------------------------------------


def _theta_quantile(dist: str, params: Mapping[str, float], u: np.ndarray) -> np.ndarray:
    if dist == "exponential":
        rate = float(params.get("rate", 1.0))
        if rate <= 0:
            raise ValueError("theta exponential rate must be > 0")
        return -np.log1p(-u) / rate
    if dist == "uniform":
        high = float(params.get("high", 1.0))
        if high <= 0:
            raise ValueError("theta uniform high must be > 0")
        return u * high
    raise ValueError(f"unknown theta distribution {dist!r}")


@dataclass(frozen=True)
class InitialCondition:
    """Named recipe for the initial gap vector.

    Construct via the classmethods; ``sample(m, noise)`` draws one gap
    vector of length ``m``.  All stochastic kinds are coordinatewise
    quantile transforms of iid uniforms, so ``pointwise_min`` can feed one
    shared uniform draw through both constituents.
    """

    kind: str
    params: dict = field(default_factory=dict)

    # -- constructors ------------------------------------------------------

    @classmethod
    def stationary(cls, a: float = 0.0) -> "InitialCondition":
        """Infinite-model stationary law with tilt ``a`` (gap i ~ Exp(2+i*a))."""
        if a < 0:
            raise ValueError("tilt a must be >= 0")
        return cls("stationary", {"a": float(a)})

    @classmethod
    def finite_atlas(cls) -> "InitialCondition":
        """Finite Atlas stationary law at the model's own truncation."""
        return cls("finite_atlas", {})

    @classmethod
    def finite_alt(cls, a: float) -> "InitialCondition":
        """Alternative finite model's stationary law with tilt ``a > 0``."""
        if a <= 0:
            raise ValueError("tilt a must be > 0")
        return cls("finite_alt", {"a": float(a)})

    @classmethod
    def dominating(cls, rate: float) -> "InitialCondition":
        """iid Exp(rate) gaps; rate <= 2 stochastically dominates the a=0 law."""
        if rate <= 0:
            raise ValueError("rate must be > 0")
        return cls("dominating", {"rate": float(rate)})

    @classmethod
    def scaled_iid(
        cls,
        scale_family: str,
        theta: str = "exponential",
        scale_params: Mapping[str, float] | None = None,
        theta_params: Mapping[str, float] | None = None,
    ) -> "InitialCondition":
        """Gap i = lambda_i * Theta_i with deterministic scales and iid Theta."""
        return cls(
            "scaled_iid",
            {
                "scale_family": scale_family,
                "scale_params": dict(scale_params or {}),
                "theta": theta,
                "theta_params": dict(theta_params or {}),
            },
        )

    @classmethod
    def perturbed(
        cls,
        a: float,
        scale_family: str,
        scale_params: Mapping[str, float] | None = None,
        beta_slack: float = 0.9,
    ) -> "InitialCondition":
        """Gap i ~ Exp(2 + i*a + lambda_i) for a named perturbation sequence.

        Validated at sampling time: every rate must stay positive, and the
        perturbation may not push any rate below ``(1 - beta_slack)`` times
        the unperturbed rate (the admissible-perturbation constraint with
        slack parameter < 1).
        """
        if a < 0:
            raise ValueError("tilt a must be >= 0")
        if not 0 < beta_slack < 1:
            raise ValueError("beta_slack must lie in (0, 1)")
        return cls(
            "perturbed",
            {
                "a": float(a),
                "scale_family": scale_family,
                "scale_params": dict(scale_params or {}),
                "beta_slack": float(beta_slack),
            },
        )

    @classmethod
    def adversarial(cls) -> "InitialCondition":
        """Deterministic block sequence i^(-2/3) with spikes n at i = n^3."""
        return cls("adversarial", {})

    @classmethod
    def explicit(cls, gaps) -> "InitialCondition":
        """Fixed gap vector, returned unchanged (validated nonnegative)."""
        g = as_gap_vector(gaps)
        return cls("explicit", {"gaps": tuple(float(x) for x in g)})

    @classmethod
    def pointwise_min(cls, first: "InitialCondition", second: "InitialCondition") -> "InitialCondition":
        """Coordinatewise minimum of two recipes under a shared uniform draw."""
        return cls("pointwise_min", {"first": first, "second": second})

    # -- sampling ----------------------------------------------------------

    @property
    def is_deterministic(self) -> bool:
        if self.kind in ("adversarial", "explicit"):
            return True
        if self.kind == "pointwise_min":
            return self.params["first"].is_deterministic and self.params["second"].is_deterministic
        return False

    def _rates(self, m: int) -> np.ndarray:
        """Exponential rates for the exponential-family kinds."""
        if self.kind == "stationary":
            return stationary_rates(self.params["a"], m)
        if self.kind == "finite_atlas":
            return finite_atlas_rates(m)
        if self.kind == "finite_alt":
            return alt_model_rates(self.params["a"], m)
        if self.kind == "dominating":
            return np.full(m, self.params["rate"])
        if self.kind == "perturbed":
            a = self.params["a"]
            base = stationary_rates(a, m)
            lam = scale_sequence(self.params["scale_family"], m, **self.params["scale_params"])
            rates = base + lam
            if np.any(rates <= 0):
                bad = int(np.argmax(rates <= 0)) + 1
                raise ValueError(f"perturbed rate at gap {bad} is not positive")
            floor = (1.0 - self.params["beta_slack"]) * base
            if np.any(rates < floor):
                bad = int(np.argmax(rates < floor)) + 1
                raise ValueError(
                    f"perturbation at gap {bad} exceeds the admissible slack "
                    f"(rate below {1.0 - self.params['beta_slack']:g} of the unperturbed rate)"
                )
            return rates
        raise ValueError(f"kind {self.kind!r} is not exponential-family")

    def quantiles(self, u: np.ndarray) -> np.ndarray:
        """Coordinatewise quantile transform at uniforms ``u`` (length m)."""
        m = u.shape[0]
        if self.kind in ("stationary", "finite_atlas", "finite_alt", "dominating", "perturbed"):
            return -np.log1p(-u) / self._rates(m)
        if self.kind == "scaled_iid":
            lam = scale_sequence(self.params["scale_family"], m, **self.params["scale_params"])
            if np.any(lam <= 0):
                raise ValueError("scaled_iid requires strictly positive scales")
            return lam * _theta_quantile(self.params["theta"], self.params["theta_params"], u)
        if self.kind == "adversarial":
            return scale_sequence("adversarial_blocks", m)
        if self.kind == "explicit":
            g = np.asarray(self.params["gaps"], dtype=float)
            if g.shape[0] != m:
                raise ValueError(f"explicit vector has {g.shape[0]} gaps, expected {m}")
            return g.copy()
        if self.kind == "pointwise_min":
            a = self.params["first"].quantiles(u)
            b = self.params["second"].quantiles(u)
            return np.minimum(a, b)
        raise ValueError(f"unknown initial-condition kind {self.kind!r}")

    def sample(self, m: int, noise: NoiseStream) -> np.ndarray:
        """Draw one gap vector of length ``m``.

        Deterministic kinds consume no randomness; stochastic kinds consume
        exactly ``m`` uniforms from ``noise``.
        """
        if m < 1:
            raise ValueError("need m >= 1")
        if self.is_deterministic:
            u = np.zeros(m)
        else:
            u = noise.uniforms(m)
        gaps = self.quantiles(u)
        return as_gap_vector(gaps, m)


# --------------------------------------------------------------------------
# attraction-condition diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionDiagnostic:
    """Finite-d series for the domain-of-attraction conditions.

    The underlying conditions are liminf/limsup statements, so no verdict is
    attached; the series are for trend inspection only.
    """

    d_grid: np.ndarray
    series: dict

    def __post_init__(self):
        for name, vals in self.series.items():
            if np.asarray(vals).shape != self.d_grid.shape:
                raise ValueError(f"series {name!r} length does not match d_grid")


def check_conditions(
    U,
    reference=None,
    d_grid: Sequence[int] = (),
    which: Iterable[str] = ("overlap",),
    beta: float | None = None,
    theta: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ConditionDiagnostic:
    """Evaluate the finite-d attraction-condition series along ``d_grid``.

    ``which`` selects any of:

    * ``"overlap"`` — sum of coordinatewise minima against ``reference``,
      normalized by ``sqrt(d) * log(d)``.  Divergence of this series is the
      sufficient condition for attraction to the untilted stationary law.
    * ``"perturbation"`` — two series for the tilted criterion: the L1
      distance to ``reference`` scaled by ``log log d / log d``, and the
      tail ratio ``U_d / (d * reference_d)``.
    * ``"growth"`` — the three envelope series with user-supplied ``beta``
      (in [1, 2)) and positive sequence ``theta``: partial sums of ``U`` over
      ``d**beta * theta(d)``, partial sums of ``(log U)_-`` over the same,
      and partial sums of ``U`` over ``d**(beta**2/(1+beta)) * theta(d)``.

    All series are exact finite sums (no asymptotics).  Natural logarithms
    throughout.
    """
    U = np.asarray(U, dtype=float)
    grid = np.asarray(list(d_grid), dtype=int)
    which = tuple(which)
    if grid.size == 0:
        raise ValueError("d_grid must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("d_grid must be strictly increasing")
    if grid[0] < 3:
        raise ValueError("d_grid entries must be >= 3 (log log requirement)")
    if grid[-1] > U.shape[0]:
        raise ValueError("d_grid exceeds the length of U")

    needs_ref = any(w in ("overlap", "perturbation") for w in which)
    if needs_ref:
        if reference is None:
            raise ValueError("'overlap' and 'perturbation' require a reference vector")
        reference = np.asarray(reference, dtype=float)
        if grid[-1] > reference.shape[0]:
            raise ValueError("d_grid exceeds the length of the reference vector")

    idx = grid - 1
    dvals = grid.astype(float)
    series: dict[str, np.ndarray] = {}

    for w in which:
        if w == "overlap":
            csum = np.cumsum(np.minimum(U, reference[: U.shape[0]]))
            series["overlap"] = csum[idx] / (np.sqrt(dvals) * np.log(dvals))
        elif w == "perturbation":
            csum = np.cumsum(np.abs(reference[: U.shape[0]] - U))
            series["perturbation_l1"] = csum[idx] * np.log(np.log(dvals)) / np.log(dvals)
            series["perturbation_tail"] = U[idx] / (dvals * reference[idx])
        elif w == "growth":
            if beta is None or theta is None:
                raise ValueError("'growth' requires beta and theta")
            if not 1.0 <= beta < 2.0:
                raise ValueError("beta must lie in [1, 2)")
            th = np.asarray(theta(dvals), dtype=float)
            if th.shape != dvals.shape or np.any(th <= 0):
                raise ValueError("theta must map the grid to positive values")
            csum = np.cumsum(U)
            with np.errstate(divide="ignore"):
                logneg = np.cumsum(np.maximum(0.0, -np.log(U)))
            series["growth_upper"] = csum[idx] / (dvals**beta * th)
            series["growth_logneg"] = logneg[idx] / (dvals**beta * th)
            series["growth_lower"] = csum[idx] / (dvals ** (beta**2 / (1.0 + beta)) * th)
        else:
            raise ValueError(f"unknown condition {w!r}")

    return ConditionDiagnostic(grid, series)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


def write_gap_csv(path, gaps) -> None:
    """Write a gap vector as CSV with header ``index,gap`` (1-based index)."""
    g = as_gap_vector(gaps)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "gap"])
        for i, x in enumerate(g, start=1):
            w.writerow([i, format(x, ".17g")])

"""Finite-state semi-Markov model of the harvested energy inflow.

The source dwells in one of a few states (e.g. day/night); while in
state ``s`` it provides a constant current drawn from a bounded pdf and
stays there for a random duration drawn from another bounded pdf, then
jumps according to an embedded transition matrix.  Both pdfs are
represented as piecewise-constant histograms, with an exact point-mass
variant so that degenerate cases (a fixed night current of zero, a
deterministic stage length) stay exact instead of being smeared over a
bin.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSupport, InvalidInput, TraceFormat

SECONDS_PER_HOUR = 3600.0
PDF_NORM_TOL = 1e-9
ROW_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Bounded probability densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundedPdf:
    """Piecewise-constant density on a bounded support, or a point mass.

    A point mass is stored as a single-entry ``edges`` array with an
    empty ``density``; every operation special-cases it exactly.
    """

    edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        density = np.asarray(self.density, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "density", density)
        if edges.ndim != 1 or edges.size < 1:
            raise InvalidInput("edges must be a non-empty 1-D array")
        if edges.size == 1:
            if density.size != 0:
                raise InvalidInput("a point mass carries no density array")
            return
        if density.shape != (edges.size - 1,):
            raise InvalidInput("density must have one entry per bin")
        if np.any(np.diff(edges) <= 0):
            raise InvalidInput("edges must be strictly increasing")
        if np.any(density < 0):
            raise InvalidInput("density must be non-negative")
        mass = float(np.sum(density * np.diff(edges)))
        if abs(mass - 1.0) > PDF_NORM_TOL:
            raise InvalidInput(f"density integrates to {mass!r}, expected 1")

    # -- constructors ------------------------------------------------------

    @classmethod
    def point_mass(cls, value: float) -> "BoundedPdf":
        return cls(np.array([float(value)]), np.array([]))

    @classmethod
    def from_histogram(cls, edges: Sequence[float],
                       masses: Sequence[float]) -> "BoundedPdf":
        """Build from per-bin probability masses (normalized here)."""
        edges = np.asarray(edges, dtype=float)
        masses = np.asarray(masses, dtype=float)
        widths = np.diff(edges)
        total = float(masses.sum())
        if total <= 0:
            raise InvalidInput("histogram must carry positive mass")
        return cls(edges, masses / total / widths)

    @classmethod
    def uniform(cls, lo: float, hi: float, bins: int = 1) -> "BoundedPdf":
        if not hi > lo:
            raise InvalidInput("uniform support must have positive width")
        edges = np.linspace(lo, hi, bins + 1)
        return cls(edges, np.full(bins, 1.0 / (hi - lo)))

    @classmethod
    def truncated_normal(cls, mean: float, spread: float, lo: float,
                         hi: float, bins: int = 128) -> "BoundedPdf":
        if not spread > 0:
            raise InvalidInput("spread must be positive")
        if not hi > lo:
            raise InvalidInput("support must have positive width")
        edges = np.linspace(lo, hi, bins + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        shape = np.exp(-0.5 * ((mids - mean) / spread) ** 2)
        return cls.from_histogram(edges, shape)

    # -- queries -----------------------------------------------------------

    @property
    def is_point(self) -> bool:
        return self.edges.size == 1

    @property
    def support(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def mean(self) -> float:
        if self.is_point:
            return float(self.edges[0])
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        return float(np.sum(self.density * np.diff(self.edges) * mids))

    def variance(self) -> float:
        if self.is_point:
            return 0.0
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        widths = np.diff(self.edges)
        # Within-bin uniform spread contributes widths^2 / 12.
        m = self.mean()
        second = np.sum(self.density * widths * (mids ** 2 + widths ** 2 / 12.0))
        return float(second - m * m)

    def evaluate(self, x) -> np.ndarray:
        """Density value at x (0 outside the support; point masses refuse)."""
        if self.is_point:
            raise DegenerateSupport("a point mass has no density to evaluate")
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.density.size)
        # The right edge belongs to the last bin.
        at_top = x == self.edges[-1]
        idx = np.clip(idx, 0, self.density.size - 1)
        out = np.where(inside | at_top, self.density[idx], 0.0)
        return out

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Inverse-CDF draw (uniform within a bin)."""
        if self.is_point:
            value = float(self.edges[0])
            return value if size is None else np.full(size, value)
        masses = self.density * np.diff(self.edges)
        cdf = np.concatenate(([0.0], np.cumsum(masses)))
        cdf[-1] = 1.0
        u = rng.random(size)
        idx = np.clip(np.searchsorted(cdf, u, side="right") - 1,
                      0, self.density.size - 1)
        lo = self.edges[idx]
        width = np.diff(self.edges)[idx]
        mass = np.maximum(masses[idx], 1e-300)
        frac = (u - cdf[idx]) / mass
        out = lo + np.clip(frac, 0.0, 1.0) * width
        return float(out) if size is None else out

    def expected_min(self, cap) -> np.ndarray:
        """E[min(cap, X)], exact for the histogram; vectorized over cap."""
        cap = np.asarray(cap, dtype=float)
        if self.is_point:
            return np.minimum(cap, float(self.edges[0]))
        edges = self.edges
        widths = np.diff(edges)
        masses = self.density * widths
        # Prefix sums at edges: probability mass and first moment below.
        cum_mass = np.concatenate(([0.0], np.cumsum(masses)))
        first = self.density * (edges[1:] ** 2 - edges[:-1] ** 2) / 2.0
        cum_first = np.concatenate(([0.0], np.cumsum(first)))

        c = np.clip(cap, edges[0], edges[-1])
        idx = np.clip(np.searchsorted(edges, c, side="right") - 1,
                      0, self.density.size - 1)
        part_first = self.density[idx] * (c ** 2 - edges[idx] ** 2) / 2.0
        part_mass = self.density[idx] * (c - edges[idx])
        below = cum_first[idx] + part_first
        above = c * (1.0 - cum_mass[idx] - part_mass)
        out = below + above
        # cap below the support: min is the cap itself; above: the mean.
        out = np.where(cap <= edges[0], cap, out)
        out = np.where(cap >= edges[-1], self.mean(), out)
        return out

    def scaled(self, factor: float) -> "BoundedPdf":
        """Pdf of factor * X (e.g. shading applied to a current)."""
        if factor <= 0:
            raise InvalidInput("scale factor must be positive")
        if self.is_point:
            return BoundedPdf.point_mass(float(self.edges[0]) * factor)
        return BoundedPdf(self.edges * factor, self.density / factor)

    def shifted_scaled(self, scale: float, shift: float) -> "BoundedPdf":
        """Pdf of scale * X + shift, with scale of either sign."""
        if scale == 0:
            return BoundedPdf.point_mass(shift)
        if self.is_point:
            return BoundedPdf.point_mass(float(self.edges[0]) * scale + shift)
        edges = self.edges * scale + shift
        density = self.density / abs(scale)
        if scale < 0:
            edges = edges[::-1].copy()
            density = density[::-1].copy()
        return BoundedPdf(edges, density)


# ---------------------------------------------------------------------------
# Source model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergySourceModel:
    """Semi-Markov harvesting source.

    ``transition_matrix`` is the embedded chain over source states;
    ``duration_pdfs`` (seconds) and ``current_pdfs`` (mA) describe the
    per-state stage length and harvested current.
    """

    transition_matrix: np.ndarray
    duration_pdfs: tuple
    current_pdfs: tuple
    state_names: Optional[tuple] = None

    def __post_init__(self):
        p = np.asarray(self.transition_matrix, dtype=float)
        object.__setattr__(self, "transition_matrix", p)
        object.__setattr__(self, "duration_pdfs", tuple(self.duration_pdfs))
        object.__setattr__(self, "current_pdfs", tuple(self.current_pdfs))
        n = p.shape[0]
        if p.ndim != 2 or p.shape != (n, n) or n < 1:
            raise InvalidInput("transition matrix must be square")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise InvalidInput("transition matrix rows must sum to 1")
        if len(self.duration_pdfs) != n or len(self.current_pdfs) != n:
            raise InvalidInput("need one duration and one current pdf per state")
        for pdf in self.duration_pdfs:
            if pdf.support[0] <= 0:
                raise DegenerateSupport("stage durations must be positive")
        if self.state_names is not None:
            object.__setattr__(self, "state_names", tuple(self.state_names))
            if len(self.state_names) != n:
                raise InvalidInput("need one name per state")

    @property
    def n_states(self) -> int:
        return self.transition_matrix.shape[0]

    def stationary_distribution(self) -> np.ndarray:
        """Stationary distribution of the embedded chain.

        Power iteration on the lazy kernel (I + P)/2, which shares the
        stationary distribution but converges for periodic chains such
        as a strict day/night alternation.
        """
        p = self.transition_matrix
        pi = np.full(self.n_states, 1.0 / self.n_states)
        for _ in range(100000):
            nxt = 0.5 * (pi + pi @ p)
            if np.abs(nxt - pi).sum() < 1e-14:
                pi = nxt
                break
            pi = nxt
        return pi / pi.sum()

    def mean_stage_duration(self) -> float:
        """Expected stage length (s) under the stationary state weights."""
        pi = self.stationary_distribution()
        return float(sum(w * pdf.mean()
                         for w, pdf in zip(pi, self.duration_pdfs)))

    def scaled_current(self, factor: float) -> "EnergySourceModel":
        """Same source with every harvested current scaled (shading)."""
        return EnergySourceModel(
            self.transition_matrix,
            self.duration_pdfs,
            tuple(pdf.scaled(factor) for pdf in self.current_pdfs),
            self.state_names,
        )


def sample_stage(model: EnergySourceModel, state: int,
                 rng: np.random.Generator) -> tuple[float, float, int]:
    """Draw one stage: (duration s, harvested current mA, next state).

    Duration and current are independent given the state; the next
    state follows the embedded transition matrix.
    """
    if not 0 <= state < model.n_states:
        raise InvalidInput(f"state {state} out of range")
    tau = float(model.duration_pdfs[state].sample(rng))
    iota = float(model.current_pdfs[state].sample(rng))
    nxt = int(rng.choice(model.n_states, p=model.transition_matrix[state]))
    return tau, iota, nxt


def synthetic_day_night(day_mean_current: float,
                        day_current_spread: float = 0.0,
                        day_hours: float = 12.0,
                        night_hours: float = 12.0,
                        duration_spread_hours: float = 0.0,
                        night_current: float = 0.0,
                        bins: int = 128) -> EnergySourceModel:
    """Two-state day/night source with truncated-normal day statistics.

    Zero spreads degrade gracefully to point masses, so a fully
    deterministic source is representable.  The day current support is
    clipped at zero; durations are clipped to stay positive.
    """
    if day_mean_current <= 0 or day_hours <= 0 or night_hours <= 0:
        raise InvalidInput("day current and stage durations must be positive")
    if day_current_spread < 0 or duration_spread_hours < 0 or night_current < 0:
        raise InvalidInput("spreads and night current must be non-negative")

    def duration_pdf(hours: float) -> BoundedPdf:
        mean_s = hours * SECONDS_PER_HOUR
        spread_s = duration_spread_hours * SECONDS_PER_HOUR
        if spread_s == 0:
            return BoundedPdf.point_mass(mean_s)
        lo = max(mean_s - 3.0 * spread_s, 0.05 * mean_s)
        hi = mean_s + 3.0 * spread_s
        return BoundedPdf.truncated_normal(mean_s, spread_s, lo, hi, bins)

    if day_current_spread == 0:
        day_current = BoundedPdf.point_mass(day_mean_current)
    else:
        lo = max(day_mean_current - 3.0 * day_current_spread, 0.0)
        hi = day_mean_current + 3.0 * day_current_spread
        day_current = BoundedPdf.truncated_normal(
            day_mean_current, day_current_spread, lo, hi, bins)

    return EnergySourceModel(
        transition_matrix=np.array([[0.0, 1.0], [1.0, 0.0]]),
        duration_pdfs=(duration_pdf(day_hours), duration_pdf(night_hours)),
        current_pdfs=(day_current, BoundedPdf.point_mass(night_current)),
        state_names=("day", "night"),
    )


# ---------------------------------------------------------------------------
# Charge variation per stage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChargeDeltaPdf:
    """Distribution of the battery variation (mAh) over one stage."""

    state: int
    control: float  # drained current u (mA)
    pdf: BoundedPdf

    def mean(self) -> float:
        return self.pdf.mean()


def _log_weighted_mass(tau: BoundedPdf):
    """H(x) = integral of f_tau(t) * 3600 / t over (support_lo, x].

    Closed form per histogram bin (log antiderivative), returned as a
    vectorized callable.  H(inf) is the total weighted mass.
    """
    edges = tau.edges
    density = tau.density
    seg = density * SECONDS_PER_HOUR * np.diff(np.log(edges))
    cum = np.concatenate(([0.0], np.cumsum(seg)))

    def weighted_cdf(x):
        x = np.clip(np.asarray(x, dtype=float), edges[0], edges[-1])
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1,
                      0, density.size - 1)
        return cum[idx] + density[idx] * SECONDS_PER_HOUR \
            * (np.log(x) - np.log(edges[idx]))

    return weighted_cdf


def charge_delta_pdf(model: EnergySourceModel, state: int, control: float,
                     bins: int = 512) -> ChargeDeltaPdf:
    """Pdf of the stage charge variation delta = tau * (iota - u) / 3600.

    Point-mass duration or current pdfs reduce to exact affine
    transforms.  In the general case the product density
    f_delta(d) = integral f_tau(t) f_iota(3600 d / t + u) (3600 / t) dt
    is evaluated exactly at the midpoints of a ``bins``-bin output
    grid: both factors are piecewise constant, so for each current bin
    the integral over the matching duration range has a closed (log)
    form.  The result is renormalized on the grid.
    """
    if control < 0:
        raise InvalidInput("control must be non-negative")
    if not 0 <= state < model.n_states:
        raise InvalidInput(f"state {state} out of range")
    tau = model.duration_pdfs[state]
    iota = model.current_pdfs[state]
    if tau.support[0] <= 0:
        raise DegenerateSupport("stage durations must be positive")

    if tau.is_point and iota.is_point:
        d = tau.mean() * (iota.mean() - control) / SECONDS_PER_HOUR
        return ChargeDeltaPdf(state, control, BoundedPdf.point_mass(d))
    if tau.is_point:
        t0 = tau.mean()
        pdf = iota.shifted_scaled(t0 / SECONDS_PER_HOUR,
                                  -control * t0 / SECONDS_PER_HOUR)
        return ChargeDeltaPdf(state, control, pdf)
    if iota.is_point:
        rate = (iota.mean() - control) / SECONDS_PER_HOUR
        pdf = tau.shifted_scaled(rate, 0.0)
        return ChargeDeltaPdf(state, control, pdf)

    t_lo, t_hi = tau.support
    i_lo, i_hi = iota.support
    corners = [t * (i - control) / SECONDS_PER_HOUR
               for t in (t_lo, t_hi) for i in (i_lo, i_hi)]
    d_lo, d_hi = min(corners), max(corners)
    if d_hi - d_lo <= 0:
        # Degenerate product (e.g. iota support collapsed onto u).
        return ChargeDeltaPdf(state, control,
                              BoundedPdf.point_mass(0.5 * (d_lo + d_hi)))
    d_edges = np.linspace(d_lo, d_hi, bins + 1)
    d_mids = 0.5 * (d_edges[:-1] + d_edges[1:])
    density = charge_delta_density(tau, iota, control, d_mids)
    mass = float(density.sum() * (d_edges[1] - d_edges[0]))
    if mass <= 0:
        raise DegenerateSupport("charge-delta integration produced zero mass")
    return ChargeDeltaPdf(state, control,
                          BoundedPdf(d_edges, density / mass))


def charge_delta_density(tau: BoundedPdf, iota: BoundedPdf, control: float,
                         points) -> np.ndarray:
    """Exact product density of tau * (iota - u) / 3600 at ``points``.

    For each current-pdf bin [a, b) the duration range where
    3600 d / t + u falls inside it is an interval, and the weighted
    duration mass over that interval is available in closed form.
    """
    points = np.asarray(points, dtype=float)
    weighted_cdf = _log_weighted_mass(tau)
    t_lo, t_hi = tau.support
    total = weighted_cdf(t_hi)
    density = np.zeros(points.shape)
    for a, b, g in zip(iota.edges[:-1], iota.edges[1:], iota.density):
        if g == 0.0:
            continue
        lo_rate = (a - control) / SECONDS_PER_HOUR   # mAh/s at bin edges
        hi_rate = (b - control) / SECONDS_PER_HOUR
        # d > 0 needs a positive rate d/t in [lo_rate, hi_rate).
        pos = points > 0
        if hi_rate > 0:
            t_min = points[pos] / hi_rate
            t_max = points[pos] / lo_rate if lo_rate > 0 \
                else np.full(t_min.shape, t_hi)
            density[pos] += g * np.maximum(
                weighted_cdf(np.minimum(t_max, t_hi))
                - weighted_cdf(np.maximum(t_min, t_lo)), 0.0)
        # d < 0 needs a negative rate.
        neg = points < 0
        if lo_rate < 0:
            t_min = points[neg] / lo_rate
            t_max = points[neg] / hi_rate if hi_rate < 0 \
                else np.full(t_min.shape, t_hi)
            density[neg] += g * np.maximum(
                weighted_cdf(np.minimum(t_max, t_hi))
                - weighted_cdf(np.maximum(t_min, t_lo)), 0.0)
        # d == 0: the density equals f_iota(u) * E[3600 / tau].
        if lo_rate <= 0.0 < hi_rate:
            density[points == 0] += g * total
    return density


# ---------------------------------------------------------------------------
# Shading mixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShadingMixture:
    """Uncertainty over per-node shading of the harvested current.

    Each component scales the base source's current pdfs by a factor in
    (0, 1]; weights are the probabilities of the factors.
    """

    base: EnergySourceModel
    values: tuple
    weights: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        if len(values) != len(weights) or not values:
            raise InvalidInput("values and weights must be equal-length, non-empty")
        if any(v <= 0 for v in values):
            raise InvalidInput("shading factors must be positive")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise InvalidInput("weights must be non-negative and sum to 1")

    @property
    def n_states(self) -> int:
        return self.base.n_states

    def component(self, k: int) -> EnergySourceModel:
        return self.base.scaled_current(self.values[k])

    def components(self) -> list[tuple[float, EnergySourceModel]]:
        return [(w, self.component(k)) for k, w in enumerate(self.weights)]


def mixture_delta_pdf(mixture: ShadingMixture, state: int, control: float,
                      bins: int = 512) -> ChargeDeltaPdf:
    """Charge-variation pdf under shading uncertainty.

    The weighted sum of the per-component pdfs, resampled on a common
    grid spanning the union of the component supports.
    """
    parts = [(w, charge_delta_pdf(mixture.component(k), state, control,
                                  bins=bins).pdf)
             for k, w in enumerate(mixture.weights)]
    if all(p.is_point for _, p in parts):
        locs = {p.support[0] for _, p in parts}
        if len(locs) == 1:
            return ChargeDeltaPdf(state, control,
                                  BoundedPdf.point_mass(locs.pop()))
    lo = min(p.support[0] for _, p in parts)
    hi = max(p.support[1] for _, p in parts)
    if hi - lo <= 0:
        return ChargeDeltaPdf(state, control, BoundedPdf.point_mass(lo))
    edges = np.linspace(lo, hi, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    density = np.zeros(bins)
    for w, p in parts:
        if p.is_point:
            # Lump the atom into its containing bin.
            k = min(int((p.support[0] - lo) / width), bins - 1)
            density[k] += w / width
        else:
            density += w * p.evaluate(mids)
    mass = float(density.sum() * width)
    return ChargeDeltaPdf(state, control, BoundedPdf(edges, density / mass))


# ---------------------------------------------------------------------------
# Persistence: source model files and stage traces
# ---------------------------------------------------------------------------

def _pdf_to_json(pdf: BoundedPdf) -> dict:
    if pdf.is_point:
        return {"point": float(pdf.edges[0])}
    return {"edges": pdf.edges.tolist(),
            "masses": (pdf.density * np.diff(pdf.edges)).tolist()}


def _pdf_from_json(obj: dict) -> BoundedPdf:
    if "point" in obj:
        return BoundedPdf.point_mass(float(obj["point"]))
    return BoundedPdf.from_histogram(obj["edges"], obj["masses"])


def save_source_model(model: EnergySourceModel, path) -> None:
    doc = {
        "transition_matrix": model.transition_matrix.tolist(),
        "states": [
            {
                "name": (model.state_names[k] if model.state_names
                         else f"state{k}"),
                "duration_s": _pdf_to_json(model.duration_pdfs[k]),
                "current_ma": _pdf_to_json(model.current_pdfs[k]),
            }
            for k in range(model.n_states)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_source_model(path) -> EnergySourceModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        states = doc["states"]
        return EnergySourceModel(
            transition_matrix=np.asarray(doc["transition_matrix"], dtype=float),
            duration_pdfs=tuple(_pdf_from_json(s["duration_s"]) for s in states),
            current_pdfs=tuple(_pdf_from_json(s["current_ma"]) for s in states),
            state_names=tuple(s.get("name", f"state{k}")
                              for k, s in enumerate(states)),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise TraceFormat(f"malformed source model file {path}: {exc}") from exc


TRACE_HEADER = ["epoch_index", "state", "duration_s", "current_mA"]


@dataclass(frozen=True)
class StageTrace:
    """A recorded (or generated) sequence of source stages."""

    states: np.ndarray     # int state index per stage
    durations: np.ndarray  # seconds
    currents: np.ndarray   # mA

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=int))
        object.__setattr__(self, "durations",
                           np.asarray(self.durations, dtype=float))
        object.__setattr__(self, "currents",
                           np.asarray(self.currents, dtype=float))
        n = self.states.size
        if self.durations.shape != (n,) or self.currents.shape != (n,):
            raise InvalidInput("trace arrays must have equal length")
        if n and self.durations.min() <= 0:
            raise InvalidInput("stage durations must be positive")

    def __len__(self) -> int:
        return self.states.size


def generate_stage_trace(model: EnergySourceModel, epochs: int, seed: int,
                         initial_state: int = 0) -> StageTrace:
    """Sample a trace of ``epochs`` stages from the source model."""
    rng = np.random.default_rng(seed)
    states = np.empty(epochs, dtype=int)
    durations = np.empty(epochs)
    currents = np.empty(epochs)
    state = initial_state
    for k in range(epochs):
        states[k] = state
        durations[k], currents[k], state = sample_stage(model, state, rng)
    return StageTrace(states, durations, currents)


def write_stage_trace(trace: StageTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for k in range(len(trace)):
            writer.writerow([k, int(trace.states[k]),
                             repr(float(trace.durations[k])),
                             repr(float(trace.currents[k]))])


def read_stage_trace(path) -> StageTrace:
    states, durations, currents = [], [], []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise TraceFormat(
                f"expected header {','.join(TRACE_HEADER)!r}, got {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise TraceFormat(f"row {row_no}: expected 4 fields, got {len(row)}")
            try:
                states.append(int(row[1]))
                durations.append(float(row[2]))
                currents.append(float(row[3]))
            except ValueError as exc:
                raise TraceFormat(f"row {row_no}: {exc}") from exc
            if durations[-1] <= 0:
                raise TraceFormat(f"row {row_no}: non-positive duration")
    return StageTrace(np.array(states, dtype=int), np.array(durations),
                      np.array(currents))

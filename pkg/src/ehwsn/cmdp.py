"""Constrained MDP over (source state, battery level).

The control is the average current ``u`` the node may drain during a
stage.  The reward of a stage is the packet rate r(u) times the time
the battery holds charge; the cost is the time spent below a threshold.
The throughput-maximization problem under a discounted cost bound is
solved by value iteration on the Lagrangian relaxation inside a
dichotomic search over the multiplier, yielding a mixed policy that
meets the cost bound with equality.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import Infeasible, InvalidInput, NonConvergence, TraceFormat
from .source import (BoundedPdf, EnergySourceModel, ShadingMixture,
                     charge_delta_pdf, mixture_delta_pdf, SECONDS_PER_HOUR)

SourceLike = Union[EnergySourceModel, ShadingMixture]


# ---------------------------------------------------------------------------
# Stage-level primitives
# ---------------------------------------------------------------------------

def clamp_buffer(level: float, delta: float, capacity: float) -> float:
    """Battery level after a stage: clamped to [0, capacity] (mAh)."""
    return min(max(level + delta, 0.0), capacity)


def time_above_zero(delta: float, duration: float, level: float) -> float:
    """Seconds the battery holds positive charge within one stage.

    The level varies linearly from ``level`` by ``delta`` over
    ``duration``; a draining battery hits zero after
    -level * duration / delta seconds.
    """
    if delta >= 0.0:
        return duration
    return min(-level * duration / delta, duration)


def time_below_threshold(delta: float, duration: float, level: float,
                         threshold: float) -> float:
    """Seconds the battery spends below ``threshold`` within one stage."""
    if delta >= 0.0:
        if level >= threshold:
            return 0.0
        if delta == 0.0:
            return duration
        return max(0.0, min((threshold - level) * duration / delta, duration))
    return min(max(0.0, (1.0 - (threshold - level) / delta) * duration),
               duration)


def _expected_above_zero(levels: np.ndarray, control: float,
                         duration_pdf: BoundedPdf,
                         current_pdf: BoundedPdf) -> np.ndarray:
    """E over (tau, iota) of the time above zero, per battery level.

    The charging branch contributes P(iota >= u) * E[tau]; the draining
    branch reduces to E[min(level / drain_rate, tau)], exact in tau for
    the histogram via expected_min.  The current pdf enters through its
    bin midpoints (midpoint quadrature), exactly for a point mass.
    """
    if current_pdf.is_point:
        mids = np.array([current_pdf.mean()])
        weights = np.array([1.0])
    else:
        edges = current_pdf.edges
        mids = 0.5 * (edges[:-1] + edges[1:])
        weights = current_pdf.density * np.diff(edges)
    mean_tau = duration_pdf.mean()
    rates = (mids - control) / SECONDS_PER_HOUR   # mAh per second
    out = np.zeros(levels.size)
    for rate, w in zip(rates, weights):
        if w == 0.0:
            continue
        if rate >= 0.0:
            out += w * mean_tau
        else:
            out += w * duration_pdf.expected_min(levels / -rate)
    return out


def _expected_below_threshold(levels: np.ndarray, control: float,
                              threshold: float, duration_pdf: BoundedPdf,
                              current_pdf: BoundedPdf) -> np.ndarray:
    """E over (tau, iota) of the time below threshold, per battery level."""
    if current_pdf.is_point:
        mids = np.array([current_pdf.mean()])
        weights = np.array([1.0])
    else:
        edges = current_pdf.edges
        mids = 0.5 * (edges[:-1] + edges[1:])
        weights = current_pdf.density * np.diff(edges)
    mean_tau = duration_pdf.mean()
    rates = (mids - control) / SECONDS_PER_HOUR
    below = levels < threshold
    out = np.zeros(levels.size)
    for rate, w in zip(rates, weights):
        if w == 0.0:
            continue
        if rate > 0.0:
            # Climbing: below threshold until the crossing.
            crossing = np.where(below, (threshold - levels) / rate, 0.0)
            out += w * np.where(below, duration_pdf.expected_min(crossing), 0.0)
        elif rate == 0.0:
            out += w * np.where(below, mean_tau, 0.0)
        else:
            # Draining: below threshold after the downward crossing.
            crossing = (threshold - levels) / rate   # >= 0 where above
            above_part = mean_tau - duration_pdf.expected_min(crossing)
            out += w * np.where(below, mean_tau, above_part)
    return out


def stage_reward(levels, control: float, reward_fn, duration_pdf: BoundedPdf,
                 current_pdf: BoundedPdf) -> np.ndarray:
    """Expected stage reward r(u) * E[time above zero] (packets)."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    rate = float(reward_fn(control))
    return rate * _expected_above_zero(levels, control, duration_pdf,
                                       current_pdf)


def stage_cost(levels, control: float, threshold: float,
               duration_pdf: BoundedPdf, current_pdf: BoundedPdf) -> np.ndarray:
    """Expected stage cost: E[time below threshold] (seconds)."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    return _expected_below_threshold(levels, control, threshold, duration_pdf,
                                     current_pdf)


def outage_to_cost(outage_fraction: float, discount: float,
                   mean_stage: float) -> float:
    """Discounted cost bound equivalent to a long-run outage fraction."""
    if not 0.0 <= discount < 1.0:
        raise InvalidInput("discount must lie in [0, 1)")
    if mean_stage <= 0:
        raise InvalidInput("mean stage duration must be positive")
    return outage_fraction * mean_stage / (1.0 - discount)


def cost_to_outage(cost_bound: float, discount: float,
                   mean_stage: float) -> float:
    """Inverse of outage_to_cost."""
    if mean_stage <= 0:
        raise InvalidInput("mean stage duration must be positive")
    return cost_bound * (1.0 - discount) / mean_stage


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BatteryConfig:
    """Energy buffer description (mAh)."""

    capacity: float
    threshold: float
    levels: int = 200   # battery grid nodes over [0, capacity]

    def __post_init__(self):
        if not 0.0 < self.threshold <= self.capacity:
            raise InvalidInput("need 0 < threshold <= capacity")
        if self.levels < 16:
            raise InvalidInput("need at least 16 battery levels")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.capacity, self.levels)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs of the constrained solver.

    Exactly one of ``outage_fraction`` and ``cost_bound`` must be set;
    the former is converted through the mean stage duration.
    ``eps_value`` defaults to 1e-6 times the reward scale
    r(u_max) * E[tau].
    """

    discount: float = 0.9
    outage_fraction: Optional[float] = None
    cost_bound: Optional[float] = None
    controls: int = 64
    eps_cost: float = 1e-4            # dichotomic stop on |C_lo - C_hi| (s)
    lambda_tol: float = 1e-9          # relative multiplier-interval stop
    eps_value: Optional[float] = None
    max_value_iterations: int = 5000
    lambda_cap: float = 2.0 ** 40
    delta_bins: int = 512

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise InvalidInput("discount must lie in [0, 1)")
        if (self.outage_fraction is None) == (self.cost_bound is None):
            raise InvalidInput(
                "set exactly one of outage_fraction and cost_bound")
        if self.outage_fraction is not None and not 0.0 <= self.outage_fraction < 1.0:
            raise InvalidInput("outage_fraction must lie in [0, 1)")
        if self.cost_bound is not None and self.cost_bound < 0:
            raise InvalidInput("cost_bound must be non-negative")
        if self.controls < 2:
            raise InvalidInput("need at least 2 control levels")


# ---------------------------------------------------------------------------
# Discretized model
# ---------------------------------------------------------------------------

class DiscreteCmdp:
    """Tables of the discretized problem.

    Attributes:
        levels: battery grid nodes, (B,) mAh
        controls: control grid, (A,) mA
        reward_table: (S, B, A) expected stage rewards
        cost_table: (S, B, A) expected stage costs (s)
        battery_kernel: (S, A, B, B) next-battery transition weights;
            probability mass leaving [0, capacity] is lumped onto the
            boundary nodes, interior mass is split linearly between the
            two neighboring nodes
        source_matrix: (S, S) embedded source chain
    """

    def __init__(self, source: SourceLike, reward_fn, battery: BatteryConfig,
                 config: SolverConfig, controls: Optional[np.ndarray] = None):
        base = source.base if isinstance(source, ShadingMixture) else source
        self.source = source
        self.base = base
        self.battery = battery
        self.config = config
        self.reward_fn = reward_fn
        self.levels = battery.grid()
        if controls is None:
            controls = np.linspace(reward_fn.u_min, reward_fn.u_max,
                                   config.controls)
        self.controls = np.asarray(controls, dtype=float)
        self.source_matrix = base.transition_matrix
        self.mean_stage = base.mean_stage_duration()

        n_s = base.n_states
        n_b = self.levels.size
        n_a = self.controls.size
        if isinstance(source, ShadingMixture):
            components = source.components()
        else:
            components = [(1.0, source)]

        self.reward_table = np.zeros((n_s, n_b, n_a))
        self.cost_table = np.zeros((n_s, n_b, n_a))
        self.battery_kernel = np.zeros((n_s, n_a, n_b, n_b))
        for s in range(n_s):
            for a, u in enumerate(self.controls):
                for w, comp in components:
                    self.reward_table[s, :, a] += w * stage_reward(
                        self.levels, float(u), reward_fn,
                        comp.duration_pdfs[s], comp.current_pdfs[s])
                    self.cost_table[s, :, a] += w * stage_cost(
                        self.levels, float(u), battery.threshold,
                        comp.duration_pdfs[s], comp.current_pdfs[s])
                if isinstance(source, ShadingMixture):
                    delta = mixture_delta_pdf(source, s, float(u),
                                              bins=config.delta_bins)
                else:
                    delta = charge_delta_pdf(source, s, float(u),
                                             bins=config.delta_bins)
                self.battery_kernel[s, a] = self._kernel_from_delta(delta.pdf)

    def _kernel_from_delta(self, pdf: BoundedPdf) -> np.ndarray:
        levels = self.levels
        n_b = levels.size
        step = levels[1] - levels[0]
        if pdf.is_point:
            deltas = np.array([pdf.support[0]])
            masses = np.array([1.0])
        else:
            deltas = 0.5 * (pdf.edges[:-1] + pdf.edges[1:])
            masses = pdf.density * np.diff(pdf.edges)
            masses = masses / masses.sum()
        nxt = np.clip(levels[:, None] + deltas[None, :], 0.0,
                      self.battery.capacity)
        pos = nxt / step
        low = np.clip(np.floor(pos).astype(int), 0, n_b - 2)
        frac = np.clip(pos - low, 0.0, 1.0)
        kernel = np.zeros((n_b, n_b))
        rows = np.repeat(np.arange(n_b), deltas.size)
        mass = np.broadcast_to(masses, nxt.shape).ravel()
        np.add.at(kernel, (rows, low.ravel()), mass * (1.0 - frac.ravel()))
        np.add.at(kernel, (rows, low.ravel() + 1), mass * frac.ravel())
        return kernel

    @property
    def n_states(self) -> int:
        return self.source_matrix.shape[0]

    def cost_bound(self) -> float:
        cfg = self.config
        if cfg.cost_bound is not None:
            return cfg.cost_bound
        return outage_to_cost(cfg.outage_fraction, cfg.discount,
                              self.mean_stage)

    def value_tolerance(self) -> float:
        if self.config.eps_value is not None:
            return self.config.eps_value
        scale = float(self.reward_fn(self.controls[-1])) * self.mean_stage
        return max(1e-6 * scale, 1e-12)


# ---------------------------------------------------------------------------
# Value iteration and policy evaluation
# ---------------------------------------------------------------------------

@dataclass
class ValueIterationResult:
    values: np.ndarray      # (S, B)
    policy: np.ndarray      # (S, B) indices into the control grid
    iterations: int
    residuals: np.ndarray   # sup-norm change per sweep


def _next_value(model: DiscreteCmdp, values: np.ndarray) -> np.ndarray:
    """E[J(next state)] for each (state, control, level): (S, A, B)."""
    # W[s] = sum_s' p[s, s'] J[s'] folds the source transition first;
    # the battery kernel then averages over the charge variation.
    w = model.source_matrix @ values.reshape(model.n_states, -1)
    w = w.reshape(values.shape)
    return np.einsum("sabc,sc->sab", model.battery_kernel, w)


def value_iteration(model: DiscreteCmdp, lagrangian: float,
                    warm_start: Optional[np.ndarray] = None
                    ) -> ValueIterationResult:
    """Optimal values and pure policy of the relaxed problem.

    Iterates J <- max_a [R - lambda C + alpha E J'] from J = 0 (or a
    warm start) until the sup-norm change drops below the configured
    tolerance.  The argmax map is the pure policy; near-ties (within a
    small fraction of the value scale, absorbing kernel rounding noise)
    resolve to the smallest control.
    """
    if lagrangian < 0:
        raise InvalidInput("the multiplier must be non-negative")
    stage = model.reward_table - lagrangian * model.cost_table
    alpha = model.config.discount
    tol = model.value_tolerance()
    values = np.zeros_like(model.reward_table[:, :, 0]) if warm_start is None \
        else warm_start.copy()
    residuals = []
    policy = np.zeros(values.shape, dtype=int)
    for iteration in range(1, model.config.max_value_iterations + 1):
        q = stage + alpha * np.transpose(_next_value(model, values), (0, 2, 1))
        new_values = q.max(axis=2)
        tie = 1e-9 * max(float(np.abs(new_values).max()), 1.0)
        policy = (q >= new_values[:, :, None] - tie).argmax(axis=2)
        residual = float(np.abs(new_values - values).max())
        residuals.append(residual)
        values = new_values
        if residual < tol:
            return ValueIterationResult(values, policy, iteration,
                                        np.array(residuals))
    raise NonConvergence(
        f"value iteration did not converge in {model.config.max_value_iterations} sweeps")


def policy_cost_values(model: DiscreteCmdp, policy: np.ndarray) -> np.ndarray:
    """Discounted cost-to-go of a fixed pure policy, (S, B).

    Fixed-policy value iteration: the maximization collapses onto the
    single prescribed control per state.
    """
    alpha = model.config.discount
    n_s, n_b = policy.shape
    rows = np.arange(n_b)
    stage = np.stack([model.cost_table[s, rows, policy[s]] for s in range(n_s)])
    kernels = np.stack([model.battery_kernel[s, policy[s], rows, :]
                        for s in range(n_s)])  # (S, B, B)
    cost_scale = max(float(np.abs(stage).max()), 1e-9)
    tol = max(1e-9 * cost_scale / max(1.0 - alpha, 1e-6), 1e-12)
    values = np.zeros((n_s, n_b))
    for _ in range(model.config.max_value_iterations):
        w = model.source_matrix @ values.reshape(n_s, -1)
        w = w.reshape(values.shape)
        new_values = stage + alpha * np.einsum("sbc,sc->sb", kernels, w)
        residual = float(np.abs(new_values - values).max())
        values = new_values
        if residual < tol:
            return values
    raise NonConvergence("fixed-policy cost evaluation did not converge")


def steady_state(model: DiscreteCmdp, policy: np.ndarray,
                 start: Optional[np.ndarray] = None) -> np.ndarray:
    """Stationary distribution over (state, level) under a pure policy.

    Power iteration on the lazy kernel (I + K)/2, which has the same
    stationary distribution as the induced kernel K but converges for
    periodic source chains.  ``start`` defaults to uniform; reducible
    chains converge to the stationary distribution of the recurrent
    class reachable from it.
    """
    n_s, n_b = policy.shape
    rows = np.arange(n_b)
    kernels = np.stack([model.battery_kernel[s, policy[s], rows, :]
                        for s in range(n_s)])  # (S, B, B)
    if start is None:
        dist = np.full((n_s, n_b), 1.0 / (n_s * n_b))
    else:
        dist = np.asarray(start, dtype=float).reshape(n_s, n_b).copy()
        dist /= dist.sum()
    for _ in range(200000):
        moved = np.einsum("sb,sbc->sc", dist, kernels)       # battery step
        pushed = np.einsum("st,sc->tc", model.source_matrix, moved)
        nxt = 0.5 * (dist + pushed)
        delta = float(np.abs(nxt - dist).sum())
        dist = nxt
        if delta < 1e-12:
            break
    else:
        raise NonConvergence("steady-state power iteration did not converge")
    return dist / dist.sum()


def expected_cost(distribution: np.ndarray, cost_values: np.ndarray) -> float:
    """Steady-state expectation of the discounted cost-to-go."""
    return float(np.sum(distribution * cost_values))


def _policy_cost(model: DiscreteCmdp, policy: np.ndarray) -> float:
    return expected_cost(steady_state(model, policy),
                         policy_cost_values(model, policy))


# ---------------------------------------------------------------------------
# The mixed policy and the dichotomic search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedPolicy:
    """Randomization between two pure control maps.

    At every stage the aggressive map (multiplier lambda_lo, cost above
    the bound) is used with probability ``mix_prob`` and the
    conservative map (lambda_hi) otherwise; the mix meets the cost
    bound with equality.  Maps store control values (mA) over the
    battery grid; battery lookups floor to the containing bin.
    """

    levels: np.ndarray            # battery grid nodes (bin lows), mAh
    map_aggressive: np.ndarray    # (S, B) control values, multiplier lambda_lo
    map_conservative: np.ndarray  # (S, B) control values, multiplier lambda_hi
    mix_prob: float
    lambda_lo: float
    lambda_hi: float
    cost_aggressive: float
    cost_conservative: float
    cost_bound: float
    discount: float
    capacity: float
    threshold: float
    iterates: tuple = field(default_factory=tuple)  # (lambda, cost) log

    @property
    def n_states(self) -> int:
        return self.map_aggressive.shape[0]

    def bin_index(self, level: float) -> int:
        step = self.levels[1] - self.levels[0]
        return int(np.clip(math.floor(level / step), 0, self.levels.size - 1))

    def control(self, state: int, level: float, aggressive: bool) -> float:
        table = self.map_aggressive if aggressive else self.map_conservative
        return float(table[state, self.bin_index(level)])

    def expected_map(self) -> np.ndarray:
        """Mean control per grid point: p * aggressive + (1-p) * conservative."""
        return (self.mix_prob * self.map_aggressive
                + (1.0 - self.mix_prob) * self.map_conservative)

    def mixed_cost(self) -> float:
        return (self.mix_prob * self.cost_aggressive
                + (1.0 - self.mix_prob) * self.cost_conservative)


def solve_p2(model: DiscreteCmdp) -> MixedPolicy:
    """Dichotomic search over the Lagrange multiplier.

    Starts from the unconstrained optimum (multiplier 0); if its cost
    already meets the bound the pure policy is returned.  Otherwise the
    multiplier doubles until the cost drops below the bound, then
    bisection narrows the bracket until either the cost gap or the
    multiplier interval is small, and the two bracketing policies are
    mixed to meet the bound exactly.
    """
    cfg = model.config
    c_th = model.cost_bound()
    iterates: list[tuple[float, float]] = []

    result = value_iteration(model, 0.0)
    cost = _policy_cost(model, result.policy)
    iterates.append((0.0, cost))
    controls = model.controls

    def pure(policy_idx, lam, cost):
        values = controls[policy_idx]
        return MixedPolicy(
            levels=model.levels, map_aggressive=values,
            map_conservative=values.copy(), mix_prob=1.0,
            lambda_lo=lam, lambda_hi=lam, cost_aggressive=cost,
            cost_conservative=cost, cost_bound=c_th, discount=cfg.discount,
            capacity=model.battery.capacity, threshold=model.battery.threshold,
            iterates=tuple(iterates))

    equal_tol = 1e-12 * max(1.0, c_th)
    if cost <= c_th + equal_tol:
        return pure(result.policy, 0.0, cost)

    lam_lo, pol_lo, cost_lo = 0.0, result.policy, cost
    lam_hi = 1.0
    warm = result.values
    while True:
        result = value_iteration(model, lam_hi, warm_start=warm)
        warm = result.values
        cost = _policy_cost(model, result.policy)
        iterates.append((lam_hi, cost))
        if cost <= c_th:
            pol_hi, cost_hi = result.policy, cost
            break
        lam_lo, pol_lo, cost_lo = lam_hi, result.policy, cost
        lam_hi *= 2.0
        if lam_hi > cfg.lambda_cap:
            raise Infeasible(
                f"cost bound {c_th:.6g} s unattainable: even the most "
                f"conservative policy costs {cost:.6g} s")
    if abs(cost_hi - c_th) <= equal_tol:
        return pure(pol_hi, lam_hi, cost_hi)

    while (cost_lo - cost_hi > cfg.eps_cost
           and lam_hi - lam_lo > cfg.lambda_tol * max(lam_hi, 1.0)):
        lam = 0.5 * (lam_lo + lam_hi)
        result = value_iteration(model, lam, warm_start=warm)
        warm = result.values
        cost = _policy_cost(model, result.policy)
        iterates.append((lam, cost))
        if abs(cost - c_th) <= equal_tol:
            return pure(result.policy, lam, cost)
        if cost > c_th:
            lam_lo, pol_lo, cost_lo = lam, result.policy, cost
        else:
            lam_hi, pol_hi, cost_hi = lam, result.policy, cost

    if cost_lo <= cost_hi:
        mix = 1.0
    else:
        mix = (c_th - cost_hi) / (cost_lo - cost_hi)
    mix = float(np.clip(mix, 0.0, 1.0))
    return MixedPolicy(
        levels=model.levels,
        map_aggressive=controls[pol_lo],
        map_conservative=controls[pol_hi],
        mix_prob=mix,
        lambda_lo=lam_lo, lambda_hi=lam_hi,
        cost_aggressive=cost_lo, cost_conservative=cost_hi,
        cost_bound=c_th, discount=cfg.discount,
        capacity=model.battery.capacity, threshold=model.battery.threshold,
        iterates=tuple(iterates))


# ---------------------------------------------------------------------------
# Policy persistence
# ---------------------------------------------------------------------------

POLICY_HEADER = ["source_state", "battery_bin_low_mAh", "control_mA"]
_META_NAME = "policy_meta.json"
_AGGRESSIVE_NAME = "policy_lambda_minus.csv"
_CONSERVATIVE_NAME = "policy_lambda_plus.csv"


def _write_map(path: Path, levels: np.ndarray, table: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(POLICY_HEADER)
        for s in range(table.shape[0]):
            for b in range(table.shape[1]):
                writer.writerow([s, repr(float(levels[b])),
                                 repr(float(table[s, b]))])


def _read_map(path: Path) -> tuple[np.ndarray, np.ndarray]:
    states, lows, controls = [], [], []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != POLICY_HEADER:
            raise TraceFormat(f"{path}: expected header "
                              f"{','.join(POLICY_HEADER)!r}, got {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                states.append(int(row[0]))
                lows.append(float(row[1]))
                controls.append(float(row[2]))
            except (ValueError, IndexError) as exc:
                raise TraceFormat(f"{path} row {row_no}: {exc}") from exc
    if not states:
        raise TraceFormat(f"{path}: empty policy map")
    n_s = max(states) + 1
    n_b = len(states) // n_s
    levels = np.array(lows[:n_b])
    table = np.array(controls).reshape(n_s, n_b)
    return levels, table


def save_policy(policy: MixedPolicy, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_map(directory / _AGGRESSIVE_NAME, policy.levels,
               policy.map_aggressive)
    _write_map(directory / _CONSERVATIVE_NAME, policy.levels,
               policy.map_conservative)
    meta = {
        "mix_prob": policy.mix_prob,
        "lambda_minus": policy.lambda_lo,
        "lambda_plus": policy.lambda_hi,
        "cost_lambda_minus": policy.cost_aggressive,
        "cost_lambda_plus": policy.cost_conservative,
        "cost_bound_s": policy.cost_bound,
        "discount": policy.discount,
        "capacity_mah": policy.capacity,
        "threshold_mah": policy.threshold,
    }
    (directory / _META_NAME).write_text(json.dumps(meta, indent=2) + "\n",
                                        encoding="utf-8")


def load_policy(directory) -> MixedPolicy:
    directory = Path(directory)
    try:
        meta = json.loads((directory / _META_NAME).read_text(encoding="utf-8"))
        levels, aggressive = _read_map(directory / _AGGRESSIVE_NAME)
        _, conservative = _read_map(directory / _CONSERVATIVE_NAME)
        return MixedPolicy(
            levels=levels, map_aggressive=aggressive,
            map_conservative=conservative,
            mix_prob=float(meta["mix_prob"]),
            lambda_lo=float(meta["lambda_minus"]),
            lambda_hi=float(meta["lambda_plus"]),
            cost_aggressive=float(meta["cost_lambda_minus"]),
            cost_conservative=float(meta["cost_lambda_plus"]),
            cost_bound=float(meta["cost_bound_s"]),
            discount=float(meta["discount"]),
            capacity=float(meta["capacity_mah"]),
            threshold=float(meta["threshold_mah"]),
        )
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise TraceFormat(f"malformed policy directory {directory}: {exc}") from exc

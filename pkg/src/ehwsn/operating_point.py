"""Closed-form and numerical solvers for the optimal operating point.

The node current of :mod:`ehwsn.consumption`, evaluated with the
collision-free retransmission factor, collapses to

    I(t_u, t_dc) = d1 t_dc/t_u + d2/t_u + d3 t_dc + d4 + d5/t_dc
                   + d6/(t_dc t_u),

which makes the best duty-cycle period for a given packet interval, the
feasible control range and the budget-matching packet interval all
available in closed form.  Collisions re-enter through a rigid
translation of the closed-form solution locus, anchored at the
saturation point where the exact (fixed-point) solution is computed
numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import channel
from .consumption import NodePowerProfile, OperatingPoint, TopologyParams, \
    node_current
from .errors import InfeasibleLoad, Infeasible, InvalidInput, NoFeasibleLimit, \
    NumericalFailure

TIME_TOL = 1e-9      # absolute tolerance on solved times (s)
CURRENT_TOL = 1e-6   # absolute tolerance on current matching (mA)
MAX_ITER = 200       # cap for every one-dimensional search
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Coefficient reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of the reduced current model.

    The a-group collects protocol timings per state, the b-group scales
    them by the hardware currents, the c-group holds the current
    combinations themselves and the d-group is the final six-term form.
    By construction c1 = tx+cpu, c2 = rx+cpu, c3 = cpu, c4 = sleep and
    c5 = rx+cpu-sleep currents.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    a7: float
    a8: float
    a9: float
    a10: float
    a11: float
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float
    b7: float
    b8: float
    b9: float
    b10: float
    b11: float
    b12: float
    b13: float
    b14: float
    b15: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    d6: float
    wake_window: float
    retx_ratio: float

    def current(self, t_u: float, t_dc: float) -> float:
        """Total node current (mA) in the reduced six-term form."""
        inv_u = 0.0 if math.isinf(t_u) else 1.0 / t_u
        return (self.d1 * t_dc * inv_u + self.d2 * inv_u + self.d3 * t_dc
                + self.d4 + self.d5 / t_dc + self.d6 * inv_u / t_dc)

    def idle_fraction(self, t_u: float, t_dc: float) -> float:
        """Idle time fraction at the given operating point."""
        inv_u = 0.0 if math.isinf(t_u) else 1.0 / t_u
        return (self.a10 - self.a1 * t_dc * inv_u - self.a3 * t_dc
                - self.a11 * inv_u)

    def saturation_interval(self, t_dc: float) -> float:
        """Packet interval at which the idle fraction hits zero."""
        den = self.a10 - self.a3 * t_dc
        if den <= 0:
            raise InfeasibleLoad("control traffic alone saturates this duty cycle")
        return (self.a1 * t_dc + self.a11) / den

    def quadratic_coeffs(self, u: float) -> tuple[float, float, float]:
        """(e2, e1, e0) of e2 t^2 + e1 t + e0 = 0 solved by the budget-u interval."""
        d7 = self.d4 - u
        e0 = 4.0 * self.d1 * self.d6 - self.d2 * self.d2
        e1 = 4.0 * (self.d1 * self.d5 + self.d3 * self.d6) - 2.0 * self.d2 * d7
        e2 = 4.0 * self.d3 * self.d5 - d7 * d7
        return e2, e1, e0

    def cubic_coeffs(self) -> tuple[float, float, float, float]:
        """(f3, f2, f1, f0) of the saturation-period cubic."""
        f3 = self.d3 * self.a1 - self.d1 * self.a3
        f2 = self.d1 * self.a10 + self.d3 * self.a11
        f1 = self.d6 * self.a3 - self.d5 * self.a1
        f0 = -(self.d6 * self.a10 + self.d5 * self.a11)
        return f3, f2, f1, f0


def derive_coefficients(profile: NodePowerProfile, topo: TopologyParams,
                        retx_ratio: Optional[float] = None) -> CoefficientSet:
    """Reduce the per-state current model to the six-term coefficient form.

    ``retx_ratio`` defaults to the collision-free value 1/(1 - e_t); any
    ratio >= 1 may be supplied to re-derive the reduction under a fixed
    retransmission level.
    """
    if retx_ratio is None:
        retx_ratio = 1.0 / (1.0 - profile.channel_error_prob)
    if retx_ratio < 1.0:
        raise InvalidInput("retx_ratio must be >= 1")
    q = retx_ratio - 1.0

    t_on = profile.wake_window
    t_data = profile.data_airtime
    t_rpl = profile.trickle_period
    n_c = topo.children
    n_i = topo.interferers
    n_int = topo.interfering_packets
    inv_rpl = 0.0 if math.isinf(t_rpl) else 1.0 / t_rpl

    # TX time splits into a term linear in t_dc (preamble strobing plus
    # retries) and a constant (wake window plus data exchange); the TX
    # rate splits into data-gathering (per t_u) and control (per t_rpl)
    # components, giving the four a1..a4 products.
    a1 = (0.5 + q) * (1.0 + n_c)
    a2 = (t_on / 2.0 + t_data) * (1.0 + n_c)
    a3 = (0.5 + q) * (2.0 + n_c) * inv_rpl
    a4 = (t_on / 2.0 + t_data) * (2.0 + n_c) * inv_rpl
    a5 = t_data * n_c
    a6 = t_data * (1.0 + n_c + n_i) * inv_rpl
    a7 = profile.header_decode_time * n_int
    a8 = profile.header_decode_time * n_int * inv_rpl
    a9 = profile.cpu_time_per_reading * profile.readings_per_packet
    a10 = 1.0 - a4 - a6 - a8
    a11 = a2 + a5 + a7 + a9
    if a10 <= 0:
        raise InvalidInput("control traffic alone saturates the node")

    c1 = profile.tx_current + profile.cpu_current
    c2 = profile.rx_current + profile.cpu_current
    c3 = profile.cpu_current
    c4 = profile.sleep_current
    c5 = profile.rx_current + profile.cpu_current - profile.sleep_current

    b1, b2, b3, b4 = c1 * a1, c1 * a2, c1 * a3, c1 * a4
    b5, b6 = c2 * a5, c2 * a6
    b7, b8 = c2 * a7, c2 * a8
    b9 = c3 * a9
    # Idle current r_idle * (c4 + c5 t_on / t_dc) expanded over the four
    # idle-fraction terms.
    b10 = -a1 * c4
    b11 = -(a1 * c5 * t_on + a11 * c4)
    b12 = -a3 * c4
    b13 = a10 * c4 - a3 * c5 * t_on
    b14 = a10 * c5 * t_on
    b15 = -a11 * c5 * t_on

    return CoefficientSet(
        a1=a1, a2=a2, a3=a3, a4=a4, a5=a5, a6=a6, a7=a7, a8=a8, a9=a9,
        a10=a10, a11=a11,
        b1=b1, b2=b2, b3=b3, b4=b4, b5=b5, b6=b6, b7=b7, b8=b8, b9=b9,
        b10=b10, b11=b11, b12=b12, b13=b13, b14=b14, b15=b15,
        c1=c1, c2=c2, c3=c3, c4=c4, c5=c5,
        d1=b1 + b10, d2=b2 + b5 + b7 + b9 + b11, d3=b3 + b12,
        d4=b4 + b6 + b8 + b13, d5=b14, d6=b15,
        wake_window=t_on, retx_ratio=retx_ratio,
    )


# ---------------------------------------------------------------------------
# Polynomial helpers
# ---------------------------------------------------------------------------

def real_cubic_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """All real roots of c3 x^3 + c2 x^2 + c1 x + c0 = 0, ascending.

    Closed form (trigonometric for three real roots, Cardano for one);
    degenerate leading coefficients fall back to the quadratic and
    linear cases.
    """
    scale = max(abs(c3), abs(c2), abs(c1), abs(c0))
    if scale == 0.0:
        return []
    eps = 1e-14 * scale
    if abs(c3) <= eps:
        if abs(c2) <= eps:
            if abs(c1) <= eps:
                return []
            return [-c0 / c1]
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return []
        s = math.sqrt(disc)
        return sorted([(-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2)])

    a = c2 / c3
    b = c1 / c3
    c = c0 / c3
    shift = -a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        s = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + s) ** (1.0 / 3.0), -q / 2.0 + s)
        v = math.copysign(abs(-q / 2.0 - s) ** (1.0 / 3.0), -q / 2.0 - s)
        return [u + v + shift]
    if p == 0.0:
        return [shift]
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
    theta = math.acos(arg) / 3.0
    return sorted(m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift
                  for k in range(3))


# ---------------------------------------------------------------------------
# Closed-form solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlRange:
    """Feasible control interval and the operating points at its ends."""

    u_min: float      # current of the control-traffic-only optimum (mA)
    u_max: float      # current at the saturation point (mA)
    t_u_lim: float    # smallest feasible packet interval (s)
    t_dc_lim: float   # duty-cycle period at saturation (s)
    t_dc_min: float   # duty-cycle period of the no-traffic optimum (s)


def optimal_dc_period(coeffs: CoefficientSet, t_u: float) -> float:
    """Duty-cycle period minimizing the current at a fixed packet interval.

    Stationary point of the reduced form: sqrt((d6/t_u + d5)/(d1/t_u + d3)),
    clamped below at the wake window.  An infinite packet interval gives
    sqrt(d5/d3).
    """
    inv_u = 0.0 if math.isinf(t_u) else 1.0 / t_u
    num = coeffs.d6 * inv_u + coeffs.d5
    den = coeffs.d1 * inv_u + coeffs.d3
    if num <= 0.0 or den <= 0.0:
        raise InfeasibleLoad("no admissible duty cycle at this packet interval")
    return max(math.sqrt(num / den), coeffs.wake_window)


def control_bounds(coeffs: CoefficientSet) -> ControlRange:
    """Feasible control range [u_min, u_max] of the closed-form model.

    u_min is the current at (t_u = inf, t_dc = sqrt(d5/d3)); u_max is
    the current at the saturation point where the duty-cycle optimality
    condition and a zero idle fraction hold simultaneously, with the
    saturation period being the largest admissible root of the cubic
    from cubic_coeffs().
    """
    t_dc_min = math.sqrt(coeffs.d5 / coeffs.d3)
    u_min = coeffs.current(math.inf, t_dc_min)

    roots = real_cubic_roots(*coeffs.cubic_coeffs())
    admissible = [r for r in roots
                  if r > 0.0 and coeffs.a10 - coeffs.a3 * r > 0.0]
    if not admissible:
        raise NoFeasibleLimit("saturation cubic has no admissible root")
    t_dc_lim = max(max(admissible), coeffs.wake_window)
    t_u_lim = coeffs.saturation_interval(t_dc_lim)
    if t_u_lim <= 0.0:
        raise NoFeasibleLimit("saturation packet interval is not positive")
    u_max = coeffs.current(t_u_lim, t_dc_lim)
    if not u_min < u_max:
        raise NoFeasibleLimit("degenerate control range (u_min >= u_max)")
    return ControlRange(u_min=u_min, u_max=u_max, t_u_lim=t_u_lim,
                        t_dc_lim=t_dc_lim, t_dc_min=t_dc_min)


def solve_p1_closed_form(coeffs: CoefficientSet, u: float,
                         bounds: Optional[ControlRange] = None) -> OperatingPoint:
    """Throughput-maximizing operating point for the current budget ``u``.

    Below u_min the node falls back to the no-traffic optimum (infinite
    packet interval); above u_max it saturates at the limit point.  In
    between, the packet interval solves the quadratic obtained by
    squaring the budget equation; squaring can introduce one spurious
    root, which is rejected by back-substitution with a sign check.
    """
    if not u > 0.0:
        raise InvalidInput("control u must be positive")
    if bounds is None:
        bounds = control_bounds(coeffs)
    if u <= bounds.u_min:
        return OperatingPoint(math.inf, max(bounds.t_dc_min, coeffs.wake_window),
                              coeffs.wake_window)
    if u >= bounds.u_max:
        return OperatingPoint(bounds.t_u_lim, bounds.t_dc_lim, coeffs.wake_window)

    e2, e1, e0 = coeffs.quadratic_coeffs(u)
    disc = e1 * e1 - 4.0 * e2 * e0
    if disc < 0.0:
        raise NumericalFailure("budget quadratic has no real root")
    s = math.sqrt(disc)
    q = -(e1 + math.copysign(s, e1)) / 2.0
    roots = []
    if e2 != 0.0:
        roots.append(q / e2)
    if q != 0.0:
        roots.append(e0 / q)

    best = None
    best_err = math.inf
    sign_slack = 1e-9 * (abs(u) + abs(coeffs.d4))
    for t_u in roots:
        if not t_u > 0.0:
            continue
        # The pre-squaring equation requires u - d4 - d2/t_u >= 0.
        if u - coeffs.d4 - coeffs.d2 / t_u < -sign_slack:
            continue
        t_dc = optimal_dc_period(coeffs, t_u)
        err = abs(coeffs.current(t_u, t_dc) - u)
        if err < best_err:
            best, best_err = (t_u, t_dc), err
    if best is None or best_err > 1e-6 * abs(u):
        raise NumericalFailure(
            f"no admissible root matched the budget (residual {best_err:.3e})")
    return OperatingPoint(best[0], best[1], coeffs.wake_window)


# ---------------------------------------------------------------------------
# Numerical oracle (nested one-dimensional searches)
# ---------------------------------------------------------------------------

def _retx_ratio_at(profile: NodePowerProfile, topo: TopologyParams,
                   t_u: float, with_collisions: bool) -> Optional[float]:
    # None signals channel infeasibility at this packet interval.
    if not with_collisions or topo.interferers == 0 or math.isinf(t_u):
        return 1.0 / (1.0 - profile.channel_error_prob)
    sol = channel.solve_fixed_point(1.0 / t_u, profile.vulnerability_window,
                                    profile.channel_error_prob, topo.interferers)
    if not sol.feasible:
        return None
    return sol.retx_ratio


def _min_current_at(profile: NodePowerProfile, topo: TopologyParams,
                    t_u: float, retx_ratio: float
                    ) -> Optional[tuple[float, float, bool]]:
    """(current, dc period, pinned) minimizing the current at fixed ``t_u``.

    Golden-section search over the duty-cycle period, driven purely by
    consumption-model evaluations (no coefficient form), so the result
    stands as an independent oracle for the closed form.  ``pinned``
    flags a minimum sitting on the zero-idle feasibility edge rather
    than at an interior stationary point; the node is then saturated.
    Returns None when the load is infeasible even at the shortest
    period.
    """
    t_on = profile.wake_window

    def current_at(t_dc: float) -> Optional[float]:
        try:
            op = OperatingPoint(t_u, t_dc, t_on)
            return node_current(profile, topo, op, retx_ratio)
        except InfeasibleLoad:
            return None

    if current_at(t_on) is None:
        return None

    # The idle fraction decreases in t_dc; the feasible periods form an
    # interval [t_on, edge].  Locate the edge by doubling then bisection.
    lo, hi = t_on, 2.0 * t_on
    while current_at(hi) is not None:
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            break
    if current_at(hi) is None:
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if current_at(mid) is None:
                hi = mid
            else:
                lo = mid
    edge = lo

    # Sign of the current slope at the edge decides whether the interior
    # stationary point exists: a falling current at the edge means the
    # constrained minimum is pinned there (saturated interval).
    h = max(1e-7 * edge, 1e-12)
    at_edge = current_at(edge)
    before_edge = current_at(edge - h)
    if at_edge is not None and before_edge is not None and at_edge <= before_edge:
        return at_edge, edge, True

    lo, hi = t_on, edge
    x_lo = lo + (hi - lo) * (1.0 - _GOLDEN)
    x_hi = lo + (hi - lo) * _GOLDEN
    f_lo = current_at(x_lo)
    f_hi = current_at(x_hi)
    for _ in range(MAX_ITER):
        if hi - lo <= TIME_TOL * max(1.0, hi):
            break
        if f_lo is None or (f_hi is not None and f_lo > f_hi):
            lo = x_lo
            x_lo, f_lo = x_hi, f_hi
            x_hi = lo + (hi - lo) * _GOLDEN
            f_hi = current_at(x_hi)
        else:
            hi = x_hi
            x_hi, f_hi = x_lo, f_lo
            x_lo = lo + (hi - lo) * (1.0 - _GOLDEN)
            f_lo = current_at(x_lo)
    t_dc = 0.5 * (lo + hi)
    value = current_at(t_dc)
    if value is None:
        t_dc = lo
        value = current_at(lo)
    return value, t_dc, False


def _optimum_at(profile: NodePowerProfile, topo: TopologyParams, t_u: float,
                with_collisions: bool) -> Optional[tuple[float, float, bool]]:
    retx = _retx_ratio_at(profile, topo, t_u, with_collisions)
    if retx is None:
        return None
    return _min_current_at(profile, topo, t_u, retx)


def solve_p1_numerical(profile: NodePowerProfile, topo: TopologyParams,
                       u: float, with_collisions: bool = False) -> OperatingPoint:
    """Operating point from two nested one-dimensional searches.

    The inner search minimizes the node current over the duty-cycle
    period at a fixed packet interval; the outer search adjusts the
    packet interval until the minimized current meets the budget ``u``.
    Packet intervals whose inner minimum is pinned on the zero-idle
    boundary (no interior stationary point) count as saturated: the
    solution is capped at the smallest interval with an interior
    optimum, mirroring the closed-form limit point.  With
    ``with_collisions`` the retransmission ratio at every candidate
    interval comes from the channel fixed point instead of the
    collision-free value.
    """
    if not u > 0.0:
        raise InvalidInput("control u must be positive")
    t_on = profile.wake_window

    floor = _optimum_at(profile, topo, math.inf, with_collisions)
    if floor is None:
        raise Infeasible("routing maintenance alone saturates the node")
    u_floor, t_dc_floor, _ = floor
    if u <= u_floor + CURRENT_TOL:
        return OperatingPoint(math.inf, t_dc_floor, t_on)

    def saturated(t_u: float) -> bool:
        # Saturated: channel/radio infeasible, or inner minimum pinned
        # on the zero-idle edge.  Monotone in t_u (True below the limit
        # interval, False above).
        opt = _optimum_at(profile, topo, t_u, with_collisions)
        return opt is None or opt[2]

    lo, hi = 1e-6, max(10.0 * t_on, 1.0)
    while saturated(hi):
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            raise Infeasible("no feasible packet interval found")
    while not saturated(lo) and lo > 1e-12:
        hi = lo
        lo *= 0.5
    if saturated(lo):
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if saturated(mid):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * hi:
                break
    t_u_edge = hi

    cap = _optimum_at(profile, topo, t_u_edge, with_collisions)
    assert cap is not None
    u_cap, t_dc_cap, _ = cap
    if u >= u_cap - CURRENT_TOL:
        return OperatingPoint(t_u_edge, t_dc_cap, t_on)

    # Monotone bracket above the limit interval: the minimized current
    # decreases as the packet interval grows.
    lo = t_u_edge
    hi = max(2.0 * t_u_edge, 1.0)
    while True:
        opt = _optimum_at(profile, topo, hi, with_collisions)
        if opt is not None and opt[0] < u:
            break
        lo = hi
        hi *= 2.0
        if hi > 1e12:
            return OperatingPoint(math.inf, t_dc_floor, t_on)

    t_dc = t_dc_cap
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        opt = _optimum_at(profile, topo, mid, with_collisions)
        if opt is None:
            lo = mid
            continue
        value, t_dc, _ = opt
        if abs(value - u) <= CURRENT_TOL and hi - lo <= 1e-6 * mid:
            return OperatingPoint(mid, t_dc, t_on)
        if value > u:
            lo = mid
        else:
            hi = mid
        if hi - lo <= TIME_TOL * max(1.0, mid):
            break
    t_u = 0.5 * (lo + hi)
    opt = _optimum_at(profile, topo, t_u, with_collisions)
    if opt is None:
        t_u = hi
        opt = _optimum_at(profile, topo, t_u, with_collisions)
    if opt is None:
        raise NumericalFailure("outer search collapsed onto an infeasible interval")
    return OperatingPoint(t_u, opt[1], t_on)


# ---------------------------------------------------------------------------
# Collision correction and the reward curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectedSolver:
    """Closed-form solver rigidly translated to account for collisions.

    The offset is the gap, at the saturation budget, between the exact
    collision-aware solution and the collision-free closed form; adding
    it to every closed-form solution keeps the map exact at saturation
    and within a few percent elsewhere.
    """

    coeffs: CoefficientSet
    bounds: ControlRange
    t_u_offset: float
    t_dc_offset: float

    @property
    def u_min(self) -> float:
        return self.bounds.u_min

    @property
    def u_max(self) -> float:
        return self.bounds.u_max

    def __call__(self, u: float) -> OperatingPoint:
        base = solve_p1_closed_form(self.coeffs, u, self.bounds)
        t_u = base.packet_interval + self.t_u_offset
        t_dc = max(base.dc_period + self.t_dc_offset, self.coeffs.wake_window)
        return OperatingPoint(max(t_u, TIME_TOL), t_dc, self.coeffs.wake_window)


def collision_corrected_solver(profile: NodePowerProfile,
                               topo: TopologyParams) -> CorrectedSolver:
    """Budget-to-operating-point map with the collision translation applied.

    Without interferers the offset is exactly zero and the map reduces
    to the closed form.
    """
    coeffs = derive_coefficients(profile, topo)
    bounds = control_bounds(coeffs)
    if topo.interferers == 0:
        return CorrectedSolver(coeffs, bounds, 0.0, 0.0)
    anchor = solve_p1_numerical(profile, topo, bounds.u_max, with_collisions=True)
    return CorrectedSolver(
        coeffs, bounds,
        t_u_offset=anchor.packet_interval - bounds.t_u_lim,
        t_dc_offset=anchor.dc_period - bounds.t_dc_lim,
    )


@dataclass(frozen=True)
class RewardCurve:
    """Sampled map from current budget (mA) to packet rate (packets/s).

    Piecewise linear between samples, zero below u_min and flat at the
    saturation rate above u_max.
    """

    controls: np.ndarray
    rates: np.ndarray
    u_min: float
    u_max: float

    def __call__(self, u):
        return np.interp(u, self.controls, self.rates)

    @property
    def max_rate(self) -> float:
        return float(self.rates[-1])


def reward_curve(solver: Callable[[float], OperatingPoint],
                 u_grid: Optional[np.ndarray] = None,
                 samples: int = 129) -> RewardCurve:
    """Sample the achievable packet rate over the control range.

    ``solver`` is any budget-to-operating-point map exposing u_min and
    u_max (closed-form or collision-corrected).  The sampled rates are
    made monotone with a running maximum, which only smooths
    floating-point noise: the underlying map is nondecreasing.
    """
    if u_grid is None:
        u_grid = np.linspace(solver.u_min, solver.u_max, samples)
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.ndim != 1 or u_grid.size < 2:
        raise InvalidInput("u_grid must be a 1-D array with at least 2 samples")
    rates = np.empty_like(u_grid)
    for k, u in enumerate(u_grid):
        op = solver(float(u))
        rates[k] = op.packet_rate
    rates = np.maximum.accumulate(rates)
    return RewardCurve(controls=u_grid, rates=rates,
                       u_min=float(solver.u_min), u_max=float(solver.u_max))

"""Collision probability of the preamble-sampling channel access.

With ``n_i`` interferers each transmitting once per effective interval
and a vulnerability window ``t_v`` around every transmission, the
collision probability ``e_c`` and the effective rate ``f'`` satisfy a
fixed point: ``e_c = 1 - (1 - f' t_v)^n_i`` while retransmissions pump
``f'`` up to ``f / (1 - e_p)`` with ``e_p = e_c + e_t - e_c e_t``.
This module solves that fixed point by bisection, provides the
second-order Taylor approximation of its smallest root, and exposes the
load bound below which the fixed point exists at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput, NoRealSolution, Saturated

FIXED_POINT_TOL = 1e-10  # absolute bisection tolerance on e_c


@dataclass(frozen=True)
class CollisionSolution:
    """Equilibrium of the collision/retransmission loop.

    When ``feasible`` is False the channel cannot carry the offered
    load and the numeric fields are NaN.
    """

    collision_prob: float   # e_c in [0, 1]
    packet_error_prob: float  # e_p = e_c + e_t - e_c * e_t
    effective_rate: float   # f' = f / (1 - e_p), packets/s
    feasible: bool

    @property
    def retx_ratio(self) -> float:
        """Effective-to-nominal rate ratio f'/f = 1/(1 - e_p)."""
        return 1.0 / (1.0 - self.packet_error_prob)


def rate_from_collision_prob(collision_prob: float, vulnerability_window: float,
                             interferers: int) -> float:
    """Effective rate implied by a collision probability.

    Inverts e_c = 1 - (1 - f' t_v)^n_i for f'.  Undefined for zero
    interferers (the exponent 1/n_i does not exist); callers must
    short-circuit e_c = 0 in that case.
    """
    if interferers < 1:
        raise InvalidInput("rate_from_collision_prob needs at least one interferer")
    if vulnerability_window <= 0:
        raise InvalidInput("vulnerability_window must be positive")
    if not 0.0 <= collision_prob <= 1.0:
        raise InvalidInput("collision_prob must lie in [0, 1]")
    return (1.0 - (1.0 - collision_prob) ** (1.0 / interferers)) / vulnerability_window


def rate_with_retransmissions(collision_prob: float, error_prob: float,
                              packet_rate: float) -> float:
    """Effective rate after stop-and-wait retransmissions, f/(1 - e_p)."""
    e_p = collision_prob + error_prob - collision_prob * error_prob
    if e_p >= 1.0:
        raise Saturated("total packet error probability reached 1")
    return packet_rate / (1.0 - e_p)


def peak_collision_prob(interferers: int) -> float:
    """Collision probability at which the channel capacity peaks.

    The admissible load (1-e_t)(1-e_c)(1-(1-e_c)^(1/n_i)) is maximized
    at e_c = 1 - (n_i/(1+n_i))^n_i; the stable fixed point always lies
    left of this value.
    """
    if interferers < 1:
        raise InvalidInput("peak_collision_prob needs at least one interferer")
    return 1.0 - (interferers / (1.0 + interferers)) ** interferers


def feasibility_limit(error_prob: float, interferers: int) -> float:
    """Largest product f * t_v for which the channel access is stable.

    Equals (1-e_t) * (1/(1+n_i)) * (n_i/(1+n_i))^n_i.  Decreasing in
    the number of interferers and linear in (1 - e_t); for large n_i it
    approaches (1-e_t)/(e * n_i).
    """
    if interferers < 1:
        raise InvalidInput("feasibility_limit needs at least one interferer")
    if not 0.0 <= error_prob < 1.0:
        raise InvalidInput("error_prob must lie in [0, 1)")
    n = interferers
    return (1.0 - error_prob) / (1.0 + n) * (n / (1.0 + n)) ** n


def _load_curve(collision_prob: float, error_prob: float, interferers: int) -> float:
    # Offered load (f * t_v) that would make collision_prob an equilibrium.
    return ((1.0 - error_prob) * (1.0 - collision_prob)
            * (1.0 - (1.0 - collision_prob) ** (1.0 / interferers)))


def solve_fixed_point(packet_rate: float, vulnerability_window: float,
                      error_prob: float, interferers: int) -> CollisionSolution:
    """Equilibrium collision probability for the offered load.

    Bisects the load curve on [0, peak] where it is monotone, which
    isolates the smaller of the two equilibria (the stable one).
    Infeasibility (offered load above the channel's peak capacity) is
    reported through the ``feasible`` flag, not an exception.
    """
    if packet_rate < 0:
        raise InvalidInput("packet_rate must be non-negative")
    if not 0.0 <= error_prob < 1.0:
        raise InvalidInput("error_prob must lie in [0, 1)")
    if interferers < 0:
        raise InvalidInput("interferers must be non-negative")

    if interferers == 0 or packet_rate == 0.0:
        e_p = error_prob
        return CollisionSolution(0.0, e_p, packet_rate / (1.0 - e_p), True)

    load = packet_rate * vulnerability_window
    peak = peak_collision_prob(interferers)
    if load > feasibility_limit(error_prob, interferers):
        return CollisionSolution(math.nan, math.nan, math.nan, False)

    lo, hi = 0.0, peak
    # _load_curve(0) = 0 <= load and _load_curve(peak) >= load, so the
    # smallest root sits in [0, peak].  The stop is relative so that the
    # implied rates stay accurate even for tiny equilibrium values; it
    # is always at least as tight as the absolute FIXED_POINT_TOL.
    while hi - lo > min(FIXED_POINT_TOL, 1e-12 * hi) and hi - lo > 1e-18:
        mid = 0.5 * (lo + hi)
        if _load_curve(mid, error_prob, interferers) < load:
            lo = mid
        else:
            hi = mid
    e_c = 0.5 * (lo + hi)
    e_p = e_c + error_prob - e_c * error_prob
    return CollisionSolution(e_c, e_p, packet_rate / (1.0 - e_p), True)


def approx_collision_prob(packet_rate: float, vulnerability_window: float,
                          error_prob: float, interferers: int) -> float:
    """Closed-form collision probability from a first-order expansion.

    Expanding (1-e_c)^(1/n_i) around 0 turns the fixed point into
    x^2 (1-e_t) - x (1-e_t) + f t_v n_i = 0; the smaller root
    (1 - sqrt(delta))/2 with delta = 1 - 4 f t_v n_i / (1-e_t) is
    returned.  Accurate to the third decimal place for n_i <= 20 and to
    the second for n_i <= 50 when e_t <= 0.3 and f t_v <= 0.001.
    """
    if interferers < 0:
        raise InvalidInput("interferers must be non-negative")
    if not 0.0 <= error_prob < 1.0:
        raise InvalidInput("error_prob must lie in [0, 1)")
    load = packet_rate * vulnerability_window * interferers
    if load == 0.0:
        return 0.0
    delta = 1.0 - 4.0 * load / (1.0 - error_prob)
    if delta < 0.0:
        bound = math.floor((1.0 - error_prob)
                           / (4.0 * packet_rate * vulnerability_window))
        raise NoRealSolution(
            f"no real collision probability; need interferers <= {bound}")
    return (1.0 - math.sqrt(delta)) / 2.0

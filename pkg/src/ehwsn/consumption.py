"""Average current drained by a duty-cycled sensor node.

The node is modeled through six operational states: transmitting (TX),
receiving (RX), overhearing interfering frames, CPU-only processing,
channel sampling (CCA) and deep sleep.  For each state x the average
current over a deployment epoch is

    I_x = i_x * r_x,    r_x = t_x * f_x,

where i_x is the hardware current in the state, t_x the mean time per
visit and f_x the visit rate.  Whatever fraction of time is left after
traffic and processing (the idle fraction) is spent duty cycling
between CCA and sleep.  All currents are in mA, all times in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleLoad, InvalidInput

# Idle fractions in [-IDLE_SLACK, 0) are rounding noise and clamp to 0;
# anything more negative means the radio is genuinely saturated.
IDLE_SLACK = 1e-12


@dataclass(frozen=True)
class NodePowerProfile:
    """Hardware and protocol constants of one sensor platform.

    Currents are in mA, times in seconds.  ``data_airtime`` is the data
    packet airtime inclusive of the CTS and ACK exchanges, so those two
    control frames never appear separately in the model.
    """

    tx_current: float            # radio current while transmitting (mA)
    rx_current: float            # radio current while receiving or sampling (mA)
    cpu_current: float           # microprocessor current while active (mA)
    sleep_current: float         # whole-node deep-sleep current (mA)
    wake_window: float           # duration of the periodic wake/CCA phase (s)
    data_airtime: float          # data packet airtime incl. CTS and ACK (s)
    header_decode_time: float    # time to decode a header and drop the frame (s)
    cpu_time_per_reading: float  # processing time per sensor reading (s)
    readings_per_packet: float   # sensor readings aggregated into one packet (>= 1)
    trickle_period: float        # steady-state routing beacon period (s, may be inf)
    vulnerability_window: float  # interval around a TX in which an interferer collides (s)
    channel_error_prob: float    # packet error probability of the radio link, in [0, 1)

    def __post_init__(self):
        currents = (self.tx_current, self.rx_current, self.cpu_current)
        if any(c <= 0 for c in currents) or self.sleep_current <= 0:
            raise InvalidInput("all state currents must be positive")
        if self.sleep_current >= min(currents):
            raise InvalidInput("sleep current must be below every active current")
        times = (self.wake_window, self.data_airtime, self.header_decode_time,
                 self.cpu_time_per_reading, self.trickle_period,
                 self.vulnerability_window)
        if any(t <= 0 for t in times):
            raise InvalidInput("all protocol times must be positive")
        if not self.header_decode_time < self.data_airtime:
            raise InvalidInput("header decode time must be below the data airtime")
        if self.readings_per_packet < 1:
            raise InvalidInput("readings_per_packet must be >= 1")
        if not 0 <= self.channel_error_prob < 1:
            raise InvalidInput("channel_error_prob must lie in [0, 1)")


@dataclass(frozen=True)
class TopologyParams:
    """Traffic load descriptors of the bottleneck node.

    ``children`` drives the relayed traffic, ``interferers`` the number
    of in-range nodes routed elsewhere, and ``interfering_packets`` the
    per-cycle packet count those nodes expose the bottleneck to
    (typically >= interferers, since interferers relay as well).
    """

    children: int = 0
    interferers: int = 0
    interfering_packets: int = 0

    def __post_init__(self):
        for name in ("children", "interferers", "interfering_packets"):
            value = getattr(self, name)
            if value < 0 or float(value) != int(value):
                raise InvalidInput(f"{name} must be a non-negative integer")


@dataclass(frozen=True)
class OperatingPoint:
    """A (packet interval, duty-cycle period) pair.

    ``packet_interval`` may be ``math.inf`` to represent a node that
    generates no application traffic (routing maintenance only); the
    consumption model then evaluates the idle-plus-control limit
    exactly instead of through a large-interval proxy.
    """

    packet_interval: float   # seconds between generated packets (t_U, may be inf)
    dc_period: float         # duty-cycle period (t_dc = t_on + t_off, s)
    wake_window: float       # active portion of the duty cycle (t_on, s)

    def __post_init__(self):
        if not self.packet_interval > 0:
            raise InvalidInput("packet_interval must be positive")
        if not self.wake_window > 0:
            raise InvalidInput("wake_window must be positive")
        if self.dc_period < self.wake_window:
            raise InvalidInput("dc_period must be at least the wake window")

    @classmethod
    def for_profile(cls, profile: NodePowerProfile, packet_interval: float,
                    dc_period: float) -> "OperatingPoint":
        return cls(packet_interval, dc_period, profile.wake_window)

    @property
    def sleep_interval(self) -> float:
        return self.dc_period - self.wake_window

    @property
    def duty_cycle(self) -> float:
        return self.wake_window / self.dc_period

    @property
    def packet_rate(self) -> float:
        if math.isinf(self.packet_interval):
            return 0.0
        return 1.0 / self.packet_interval


@dataclass(frozen=True)
class StateBudget:
    """Per-state average currents (mA) and time fractions of one node."""

    tx: float               # average TX current
    rx: float               # average RX current
    overhear: float         # average current spent on interfering frames
    cpu: float              # average processing current
    cca: float              # average channel-sampling current
    sleep: float            # average deep-sleep current
    tx_fraction: float
    rx_fraction: float
    overhear_fraction: float
    cpu_fraction: float
    idle_fraction: float
    retx_ratio: float       # effective-to-nominal rate ratio (>= 1)


def state_budgets(profile: NodePowerProfile, topo: TopologyParams,
                  op: OperatingPoint, retx_ratio: float) -> StateBudget:
    """Average current of each node state at the given operating point.

    ``retx_ratio`` is the ratio of the effective transmission rate to
    the nominal one.  Callers pass 1/(1 - e_t) for a collision-free
    channel or the collision fixed-point value from
    :mod:`ehwsn.channel`; the factor (retx_ratio - 1) counts the extra
    full-period preamble transmissions spent on retries.

    Raises InfeasibleLoad when the offered traffic leaves a negative
    idle fraction (the radio cannot carry the load).
    """
    if retx_ratio < 1.0:
        raise InvalidInput("retx_ratio must be >= 1")
    t_u = op.packet_interval
    t_dc = op.dc_period
    t_on = op.wake_window
    t_rpl = profile.trickle_period
    n_c = topo.children
    n_i = topo.interferers
    n_int = topo.interfering_packets

    # Mean time to push one packet: wake window, half a sleep interval of
    # preamble strobing before the receiver wakes, the data exchange, and
    # a full extra period per retransmission.
    tx_time = t_dc / 2.0 + t_on / 2.0 + profile.data_airtime \
        + (retx_ratio - 1.0) * t_dc
    tx_rate = (1.0 + n_c) / t_u + (2.0 + n_c) / t_rpl
    rx_rate = n_c / t_u + (1.0 + n_c + n_i) / t_rpl

    r_tx = tx_time * tx_rate
    r_rx = profile.data_airtime * rx_rate
    r_int = profile.header_decode_time * n_int * (1.0 / t_u + 1.0 / t_rpl)
    r_cpu = profile.cpu_time_per_reading * profile.readings_per_packet / t_u

    r_idle = 1.0 - r_tx - r_rx - r_int - r_cpu
    if r_idle < -IDLE_SLACK:
        raise InfeasibleLoad(
            f"offered load exceeds capacity (idle fraction {r_idle:.3e})")
    r_idle = max(r_idle, 0.0)

    d_c = op.duty_cycle
    return StateBudget(
        tx=(profile.cpu_current + profile.tx_current) * r_tx,
        rx=(profile.cpu_current + profile.rx_current) * r_rx,
        overhear=(profile.cpu_current + profile.rx_current) * r_int,
        cpu=profile.cpu_current * r_cpu,
        cca=(profile.cpu_current + profile.rx_current) * d_c * r_idle,
        sleep=profile.sleep_current * (1.0 - d_c) * r_idle,
        tx_fraction=r_tx,
        rx_fraction=r_rx,
        overhear_fraction=r_int,
        cpu_fraction=r_cpu,
        idle_fraction=r_idle,
        retx_ratio=retx_ratio,
    )


def total_current(budget: StateBudget) -> float:
    """Total average node current (mA): the sum over the six states."""
    return (budget.tx + budget.rx + budget.overhear + budget.cpu
            + budget.cca + budget.sleep)


def node_current(profile: NodePowerProfile, topo: TopologyParams,
                 op: OperatingPoint, retx_ratio: float) -> float:
    """Convenience wrapper: total current at one operating point."""
    return total_current(state_budgets(profile, topo, op, retx_ratio))

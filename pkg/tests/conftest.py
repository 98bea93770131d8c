import numpy as np
import pytest

from ehwsn import NodePowerProfile, TopologyParams


@pytest.fixture(scope="session")
def profile() -> NodePowerProfile:
    # CC2420-class example platform (illustrative constants).
    return NodePowerProfile(
        tx_current=17.4, rx_current=18.8, cpu_current=1.8, sleep_current=0.02,
        wake_window=0.01, data_airtime=0.008, header_decode_time=0.002,
        cpu_time_per_reading=0.005, readings_per_packet=10,
        trickle_period=600.0, vulnerability_window=0.01,
        channel_error_prob=0.1)


@pytest.fixture(scope="session")
def sparse_topo() -> TopologyParams:
    return TopologyParams(children=3, interferers=4, interfering_packets=8)


@pytest.fixture(scope="session")
def medium_topo() -> TopologyParams:
    return TopologyParams(children=10, interferers=5, interfering_packets=15)


@pytest.fixture(scope="session")
def dense_topo() -> TopologyParams:
    return TopologyParams(children=15, interferers=10, interfering_packets=40)


def random_profile(rng: np.random.Generator,
                   tx_at_least_rx: bool = False) -> NodePowerProfile:
    """A random but physically sensible platform.

    ``tx_at_least_rx`` restricts draws to platforms whose transmit
    current is no smaller than the receive current, the regime in which
    the node current is provably increasing in every topology count.
    """
    rx = rng.uniform(8.0, 30.0)
    data_airtime = rng.uniform(0.004, 0.02)
    tx_factor = rng.uniform(1.0, 1.4) if tx_at_least_rx \
        else rng.uniform(0.8, 1.2)
    return NodePowerProfile(
        tx_current=tx_factor * rx,
        rx_current=rx,
        cpu_current=rng.uniform(0.5, 5.0),
        sleep_current=rng.uniform(0.001, 0.05),
        wake_window=rng.uniform(0.002, 0.02),
        data_airtime=data_airtime,
        header_decode_time=rng.uniform(0.1, 0.8) * data_airtime,
        cpu_time_per_reading=rng.uniform(0.001, 0.01),
        readings_per_packet=float(rng.integers(1, 20)),
        trickle_period=rng.uniform(120.0, 3600.0),
        vulnerability_window=rng.uniform(0.005, 0.02),
        channel_error_prob=rng.uniform(0.0, 0.3))


def random_topology(rng: np.random.Generator,
                    max_children: int = 20) -> TopologyParams:
    n_i = int(rng.integers(0, 10))
    return TopologyParams(
        children=int(rng.integers(0, max_children)),
        interferers=n_i,
        interfering_packets=int(rng.integers(n_i, 3 * n_i + 2)))

"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line (with its wall time) once its
assertions hold; run with ``pytest tests/test_acceptance.py -v`` to get
one line per criterion either way.
"""

import itertools
import math
import time

import numpy as np
import pytest

from ehwsn import (BatteryConfig, DiscreteCmdp, OperatingPoint, SolverConfig,
                   TopologyParams, approx_collision_prob, collision_corrected_solver,
                   control_bounds, derive_coefficients, generate_stage_trace,
                   node_current, reward_curve, run_heterogeneous, run_kansal,
                   run_policy, solve_fixed_point, solve_p1_closed_form,
                   solve_p1_numerical, solve_p2, state_budgets,
                   synthetic_day_night, value_iteration)
from ehwsn.simulate import BaselineConfig
from ehwsn.source import BoundedPdf, EnergySourceModel, ShadingMixture
from ehwsn.errors import InfeasibleLoad

from conftest import random_profile, random_topology

TOPOLOGIES = {
    "sparse": TopologyParams(children=3, interferers=4, interfering_packets=8),
    "medium": TopologyParams(children=10, interferers=5, interfering_packets=15),
    "dense": TopologyParams(children=15, interferers=10, interfering_packets=40),
}

SOURCE_PARAMS = dict(day_mean_current=12.0, day_current_spread=3.0,
                     day_hours=12.0, night_hours=12.0,
                     duration_spread_hours=1.0)


def report(criterion: int, elapsed: float, detail: str) -> None:
    print(f"PASS criterion {criterion}: {detail} [{elapsed:.1f}s]")


@pytest.fixture(scope="module")
def day_night_source():
    return synthetic_day_night(**SOURCE_PARAMS)


@pytest.fixture(scope="module")
def medium_curve(profile):
    solver = collision_corrected_solver(profile, TOPOLOGIES["medium"])
    return solver, reward_curve(solver)


@pytest.fixture(scope="module")
def default_policy(profile, day_night_source, medium_curve):
    """Criterion-7 setup: default grids, b_max 250, b_th 50, outage 1%."""
    _, curve = medium_curve
    battery = BatteryConfig(capacity=250.0, threshold=50.0, levels=200)
    config = SolverConfig(discount=0.9, outage_fraction=0.01, controls=64)
    started = time.monotonic()
    model = DiscreteCmdp(day_night_source, curve, battery, config)
    policy = solve_p2(model)
    return model, policy, battery, time.monotonic() - started


def test_criterion_1_retransmission_gap():
    started = time.monotonic()
    solution = solve_fixed_point(0.04, 0.01, 0.1, 5)   # f_U * t_v = 4e-4
    assert solution.feasible
    e_p = solution.packet_error_prob
    retx_with = e_p / (1.0 - e_p)
    retx_without = 0.1 / 0.9
    gap = 100.0 * (retx_with - retx_without) / retx_with
    elapsed = time.monotonic() - started
    assert gap == pytest.approx(2.18, abs=0.05)
    assert elapsed < 1.0
    report(1, elapsed, f"collision retransmission gap {gap:.3f}% = 2.18 +/- 0.05")


def test_criterion_2_approximation_precision_box():
    started = time.monotonic()
    error_probs = np.linspace(0.0, 0.3, 10)
    loads = np.linspace(1e-4, 1e-3, 10)
    interferers = np.unique(np.linspace(1, 50, 20).astype(int))
    t_v = 0.01
    worst_small = worst_large = 0.0
    for e_t, load, n_i in itertools.product(error_probs, loads, interferers):
        f_u = load / t_v
        exact = solve_fixed_point(f_u, t_v, float(e_t), int(n_i))
        assert exact.feasible
        approx = approx_collision_prob(f_u, t_v, float(e_t), int(n_i))
        gap = abs(approx - exact.collision_prob)
        if n_i <= 20:
            worst_small = max(worst_small, gap)
        worst_large = max(worst_large, gap)
    elapsed = time.monotonic() - started
    assert worst_small < 1e-3
    assert worst_large < 1e-2
    assert elapsed < 10.0
    report(2, elapsed, f"approximation error {worst_small:.2e} (n_i<=20), "
                       f"{worst_large:.2e} (n_i<=50)")


def test_criterion_3_closed_form_vs_numerical(profile):
    started = time.monotonic()
    worst = 0.0
    for topo in TOPOLOGIES.values():
        coeffs = derive_coefficients(profile, topo)
        bounds = control_bounds(coeffs)
        for u in np.linspace(bounds.u_min, bounds.u_max, 50):
            closed = solve_p1_closed_form(coeffs, float(u), bounds)
            numeric = solve_p1_numerical(profile, topo, float(u))
            if math.isinf(closed.packet_interval):
                assert math.isinf(numeric.packet_interval)
            else:
                worst = max(worst, abs(closed.packet_interval
                                       - numeric.packet_interval)
                            / closed.packet_interval)
            worst = max(worst, abs(closed.dc_period - numeric.dc_period)
                        / closed.dc_period)
    elapsed = time.monotonic() - started
    assert worst < 1e-3
    assert elapsed < 30.0
    report(3, elapsed, f"closed form vs numerical within {worst:.2e} "
                       f"(50-point sweep, 3 networks)")


def test_criterion_4_stationarity_and_budget_tightness(profile):
    started = time.monotonic()
    worst_slope = worst_budget = 0.0
    for topo in TOPOLOGIES.values():
        coeffs = derive_coefficients(profile, topo)
        bounds = control_bounds(coeffs)
        for u in np.linspace(bounds.u_min * 1.001, bounds.u_max * 0.999, 50):
            op = solve_p1_closed_form(coeffs, float(u), bounds)
            t_u, t_dc = op.packet_interval, op.dc_period
            current = coeffs.current(t_u, t_dc)
            worst_budget = max(worst_budget, abs(current - u) / u)
            h = 1e-5 * t_dc
            slope = (coeffs.current(t_u, t_dc + h)
                     - coeffs.current(t_u, t_dc - h)) / (2.0 * h)
            worst_slope = max(worst_slope, abs(slope) * t_dc / current)
    elapsed = time.monotonic() - started
    assert worst_budget < 1e-6
    assert worst_slope < 1e-6
    assert elapsed < 10.0
    report(4, elapsed, f"budget mismatch {worst_budget:.2e}, "
                       f"normalized slope {worst_slope:.2e}")


def test_criterion_5_consumption_monotonicity():
    started = time.monotonic()
    rng = np.random.default_rng(20240508)
    checked = 0
    while checked < 1000:
        prof = random_profile(rng, tx_at_least_rx=True)
        topo = random_topology(rng, max_children=12)
        op = OperatingPoint.for_profile(
            prof, float(rng.uniform(20.0, 400.0)),
            float(rng.uniform(prof.wake_window, 1.5)))
        retx = 1.0 / (1.0 - prof.channel_error_prob)
        bumped = [
            TopologyParams(topo.children + 1, topo.interferers,
                           topo.interfering_packets),
            TopologyParams(topo.children, topo.interferers + 1,
                           topo.interfering_packets),
            TopologyParams(topo.children, topo.interferers,
                           topo.interfering_packets + 1),
        ]
        try:
            base = state_budgets(prof, topo, op, retx)
            totals = [node_current(prof, b, op, retx) for b in bumped]
        except InfeasibleLoad:
            continue
        if base.idle_fraction <= 0.0:
            continue
        base_total = (base.tx + base.rx + base.overhear + base.cpu
                      + base.cca + base.sleep)
        for total in totals:
            assert total > base_total
        checked += 1
    elapsed = time.monotonic() - started
    assert elapsed < 5.0
    report(5, elapsed, "strict current increase under unit topology "
                       "increments, 1000 random configs")


def test_criterion_6_small_instance_oracle():
    started = time.monotonic()
    source = EnergySourceModel(
        np.array([[0.25, 0.75], [0.6, 0.4]]),
        (BoundedPdf.point_mass(3600.0),
         BoundedPdf.uniform(3600.0, 7200.0, 4)),
        (BoundedPdf.uniform(2.0, 10.0, 8), BoundedPdf.point_mass(0.5)))
    from ehwsn.operating_point import RewardCurve
    curve = RewardCurve(controls=np.array([1.0, 8.0]),
                        rates=np.array([0.0, 1.0]), u_min=1.0, u_max=8.0)
    battery = BatteryConfig(capacity=40.0, threshold=10.0, levels=16)
    config = SolverConfig(discount=0.8, cost_bound=1e9, controls=2,
                          delta_bins=64, eps_value=1e-10)
    model = DiscreteCmdp(source, curve, battery, config,
                         controls=np.array([1.0, 8.0]))
    keep = np.array([0, 5, 10, 15])
    model.levels = model.levels[keep]
    model.reward_table = model.reward_table[:, keep, :]
    model.cost_table = model.cost_table[:, keep, :]
    kernel = model.battery_kernel[:, :, keep][:, :, :, keep]
    model.battery_kernel = kernel / kernel.sum(axis=3, keepdims=True)

    result = value_iteration(model, 0.0)

    n_s, n_b, n_a = model.reward_table.shape
    n = n_s * n_b
    rows = np.arange(n_b)
    best = np.full(n, -np.inf)
    for assignment in itertools.product(range(n_a), repeat=n):
        policy = np.array(assignment).reshape(n_s, n_b)
        kernel = np.zeros((n, n))
        rewards = np.empty(n)
        for s in range(n_s):
            batt = model.battery_kernel[s, policy[s], rows, :]
            for t in range(n_s):
                kernel[s * n_b:(s + 1) * n_b, t * n_b:(t + 1) * n_b] = \
                    model.source_matrix[s, t] * batt
            rewards[s * n_b:(s + 1) * n_b] = \
                model.reward_table[s, rows, policy[s]]
        values = np.linalg.solve(np.eye(n) - 0.8 * kernel, rewards)
        best = np.maximum(best, values)
    gap = float(np.max(np.abs(result.values - best.reshape(n_s, n_b))))
    elapsed = time.monotonic() - started
    assert gap < 1e-8
    assert elapsed < 5.0
    report(6, elapsed, f"value iteration vs 256-policy enumeration, "
                       f"gap {gap:.2e}")


def test_criterion_7_constraint_satisfaction(default_policy, day_night_source,
                                             medium_curve):
    model, policy, battery, solve_seconds = default_policy
    _, curve = medium_curve
    mixed_cost = policy.mix_prob * policy.cost_aggressive \
        + (1.0 - policy.mix_prob) * policy.cost_conservative
    identity_gap = abs(mixed_cost - policy.cost_bound)
    assert identity_gap <= model.config.eps_cost
    assert solve_seconds < 600.0

    started = time.monotonic()
    sim = run_policy(policy, day_night_source, battery, curve,
                     epochs=10_000, seed=2024)
    sim_seconds = time.monotonic() - started
    assert sim_seconds < 60.0
    assert sim.outage_fraction <= 0.015
    report(7, solve_seconds + sim_seconds,
           f"cost identity gap {identity_gap:.2e} <= "
           f"{model.config.eps_cost:g}, simulated outage "
           f"{sim.outage_fraction:.4f} <= 0.015 "
           f"(solve {solve_seconds:.1f}s, sim {sim_seconds:.1f}s)")


def test_criterion_8_policy_shape(default_policy, medium_curve):
    started = time.monotonic()
    _, policy, _, _ = default_policy
    _, curve = medium_curve
    day, night = 0, 1
    for table in (policy.map_aggressive, policy.map_conservative,
                  policy.expected_map()):
        assert np.all(np.diff(table[day]) >= -1e-9)
    fractions = []
    for table in (policy.map_aggressive, policy.map_conservative):
        fractions.append(float(np.mean(np.isclose(table[night], curve.u_min,
                                                  rtol=1e-9))))
        assert fractions[-1] >= 0.90
    elapsed = time.monotonic() - started
    report(8, elapsed, f"day map nondecreasing; night map at u_min on "
                       f"{min(fractions):.1%} of bins (>= 90%)")


def test_criterion_9_buffer_and_discount_ordering(profile, day_night_source,
                                                  medium_curve):
    started = time.monotonic()
    _, curve = medium_curve
    throughputs = {}
    for capacity in (100.0, 250.0, 500.0, 1000.0):
        battery = BatteryConfig(capacity=capacity, threshold=50.0, levels=120)
        config = SolverConfig(discount=0.9, outage_fraction=0.01, controls=48,
                              delta_bins=256)
        policy = solve_p2(DiscreteCmdp(day_night_source, curve, battery,
                                       config))
        sim = run_policy(policy, day_night_source, battery, curve,
                         epochs=6000, seed=11)
        throughputs[capacity] = sim.throughput
    ordered = [throughputs[c] for c in (100.0, 250.0, 500.0, 1000.0)]
    assert all(a <= b + 1e-12 for a, b in zip(ordered, ordered[1:]))
    gain_low = throughputs[500.0] - throughputs[100.0]
    gain_high = throughputs[1000.0] - throughputs[500.0]
    assert gain_high < gain_low

    battery = BatteryConfig(capacity=250.0, threshold=50.0, levels=120)
    greedy_cfg = SolverConfig(discount=0.01, outage_fraction=0.01,
                              controls=48, delta_bins=256)
    greedy = solve_p2(DiscreteCmdp(day_night_source, curve, battery,
                                   greedy_cfg))
    greedy_sim = run_policy(greedy, day_night_source, battery, curve,
                            epochs=6000, seed=11)
    assert throughputs[250.0] >= greedy_sim.throughput
    elapsed = time.monotonic() - started
    report(9, elapsed,
           f"throughput {ordered[0]:.3f} <= {ordered[1]:.3f} <= "
           f"{ordered[2]:.3f} <= {ordered[3]:.3f} pkt/s; marginal gain "
           f"{gain_high:.4f} < {gain_low:.4f}; alpha ordering "
           f"{throughputs[250.0]:.3f} >= {greedy_sim.throughput:.3f}")


def test_criterion_10_baseline_contrast(default_policy, day_night_source,
                                        medium_curve):
    started = time.monotonic()
    _, policy, battery, _ = default_policy
    p1_solver, curve = medium_curve
    trace = generate_stage_trace(day_night_source, 10_000, seed=77)
    ours = run_policy(policy, trace, battery, curve, epochs=10_000, seed=5)
    baseline = run_kansal(BaselineConfig(0.5), trace, battery, p1_solver,
                          epochs=10_000, seed=5)
    assert baseline.empty_fraction > ours.empty_fraction
    elapsed = time.monotonic() - started
    report(10, elapsed,
           f"baseline empty-battery fraction {baseline.empty_fraction:.4f} > "
           f"policy {ours.empty_fraction:.4f} (baseline throughput "
           f"{baseline.throughput:.3f} vs {ours.throughput:.3f} pkt/s)")


def test_criterion_11_heterogeneous_shading(profile, day_night_source,
                                            medium_curve):
    started = time.monotonic()
    _, curve = medium_curve
    mixture = ShadingMixture(day_night_source,
                             values=(0.4, 0.6, 0.8, 1.0),
                             weights=(0.15, 0.15, 0.15, 0.55))
    battery = BatteryConfig(capacity=250.0, threshold=50.0, levels=120)
    config = SolverConfig(discount=0.9, outage_fraction=0.01, controls=48,
                          delta_bins=256)
    policy = solve_p2(DiscreteCmdp(mixture, curve, battery, config))
    # Three-day-equivalent run: six 12-hour stages; the bottleneck is
    # unshaded, the second bottleneck gets the worst shading.
    reports = run_heterogeneous(policy, day_night_source, [1.0, 0.4],
                                battery, curve, epochs=6, seed=3)
    sbn = reports[1]
    assert sbn.outage_fraction < 0.01
    full = run_heterogeneous(policy, day_night_source, [1.0, 1.0],
                             battery, curve, epochs=6, seed=3)
    assert full[0].throughput >= reports[0].throughput
    elapsed = time.monotonic() - started
    report(11, elapsed,
           f"second-bottleneck outage {sbn.outage_fraction:.4f} < 0.01 "
           f"under min-buffer control with shading 0.4")

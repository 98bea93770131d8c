import itertools

import numpy as np
import pytest

from ehwsn.cmdp import (BatteryConfig, DiscreteCmdp, SolverConfig,
                        clamp_buffer, cost_to_outage, expected_cost,
                        load_policy, outage_to_cost, policy_cost_values,
                        save_policy, solve_p2, stage_cost, stage_reward,
                        steady_state, time_above_zero, time_below_threshold,
                        value_iteration)
from ehwsn.errors import Infeasible, InvalidInput
from ehwsn.operating_point import RewardCurve
from ehwsn.source import BoundedPdf, EnergySourceModel, synthetic_day_night

HOUR = 3600.0


def flat_curve(u_max: float, rate: float, u_min: float = 0.0) -> RewardCurve:
    return RewardCurve(controls=np.array([u_min, u_max]),
                       rates=np.array([rate, rate]),
                       u_min=u_min, u_max=u_max)


def linear_curve(u_min: float, u_max: float, r_max: float) -> RewardCurve:
    return RewardCurve(controls=np.array([u_min, u_max]),
                       rates=np.array([0.0, r_max]),
                       u_min=u_min, u_max=u_max)


def single_state_model(tau_pdf, iota_pdf) -> EnergySourceModel:
    return EnergySourceModel(np.array([[1.0]]), (tau_pdf,), (iota_pdf,))


# ---------------------------------------------------------------------------
# Stage-level primitives
# ---------------------------------------------------------------------------

def test_clamp_buffer():
    assert clamp_buffer(10.0, -20.0, 250.0) == 0.0
    assert clamp_buffer(240.0, 20.0, 250.0) == 250.0
    assert clamp_buffer(100.0, 50.0, 250.0) == 150.0


def test_time_above_zero():
    assert time_above_zero(5.0, 8.0, 3.0) == 8.0
    assert time_above_zero(-10.0, 8.0, 5.0) == pytest.approx(4.0)
    assert time_above_zero(-1.0, 8.0, 100.0) == 8.0
    assert time_above_zero(-3.0, 8.0, 0.0) == 0.0


def test_time_below_threshold():
    # Above threshold and charging: never below.
    assert time_below_threshold(5.0, 8.0, 60.0, 50.0) == 0.0
    # Charging from empty: below until the upward crossing.
    assert time_below_threshold(80.0, 8.0, 0.0, 50.0) == pytest.approx(5.0)
    # Charging but not reaching the threshold: below throughout.
    assert time_below_threshold(10.0, 8.0, 0.0, 50.0) == 8.0
    # Flat below the threshold.
    assert time_below_threshold(0.0, 8.0, 10.0, 50.0) == 8.0
    assert time_below_threshold(0.0, 8.0, 60.0, 50.0) == 0.0
    # Draining from below the threshold: below throughout.
    assert time_below_threshold(-5.0, 8.0, 10.0, 50.0) == 8.0
    # Draining across the threshold: below after the crossing.
    assert time_below_threshold(-40.0, 8.0, 70.0, 50.0) == pytest.approx(4.0)
    # Draining but staying above.
    assert time_below_threshold(-5.0, 8.0, 70.0, 50.0) == 0.0


def test_outage_cost_conversion():
    assert outage_to_cost(0.0, 0.9, 12 * HOUR) == 0.0
    assert outage_to_cost(0.01, 0.9, 12 * HOUR) == pytest.approx(4320.0)
    for t_out in (0.001, 0.05, 0.3):
        cost = outage_to_cost(t_out, 0.85, 7200.0)
        assert cost_to_outage(cost, 0.85, 7200.0) == pytest.approx(t_out)


# ---------------------------------------------------------------------------
# Stage reward / cost expectations
# ---------------------------------------------------------------------------

def test_stage_reward_trivial_cases():
    tau = BoundedPdf.uniform(1000.0, 3000.0, 16)
    curve = flat_curve(u_max=10.0, rate=2.0)
    # Zero rate: zero reward.
    zero = stage_reward(np.array([5.0]), 0.0, lambda u: 0.0, tau,
                        BoundedPdf.point_mass(0.0))
    assert zero[0] == 0.0
    # Harvest always above consumption: full-stage reward.
    rich = BoundedPdf.uniform(12.0, 14.0, 8)
    full = stage_reward(np.array([100.0]), 10.0, curve, tau, rich)
    assert full[0] == pytest.approx(2.0 * tau.mean(), rel=1e-12)


def test_stage_cost_trivial_cases():
    tau = BoundedPdf.uniform(1000.0, 3000.0, 16)
    rich = BoundedPdf.uniform(12.0, 14.0, 8)
    # Full battery, charging: never below the threshold.
    assert stage_cost(np.array([250.0]), 10.0, 50.0, tau, rich)[0] == 0.0
    # Empty battery, no harvest: below throughout.
    dead = BoundedPdf.point_mass(0.0)
    assert stage_cost(np.array([0.0]), 5.0, 50.0, tau, dead)[0] \
        == pytest.approx(tau.mean(), rel=1e-12)


def test_stage_expectations_against_monte_carlo():
    rng = np.random.default_rng(77)
    tau = BoundedPdf.uniform(0.5 * HOUR, 4 * HOUR, 32)
    iota = BoundedPdf.uniform(0.0, 9.0, 32)
    curve = linear_curve(0.5, 12.0, 2.0)
    n = 1_000_000
    taus = tau.sample(rng, size=n)
    iotas = iota.sample(rng, size=n)
    for level, u in ((5.0, 6.0), (40.0, 3.0), (80.0, 11.0)):
        deltas = taus * (iotas - u) / HOUR
        above = np.where(deltas >= 0, taus,
                         np.minimum(-level * taus / deltas, taus))
        reward_mc = float(curve(u)) * above.mean()
        reward = stage_reward(np.array([level]), u, curve, tau, iota)[0]
        assert reward == pytest.approx(reward_mc, rel=0.01)

        threshold = 50.0
        below_mc = np.array([time_below_threshold(d, t, level, threshold)
                             for d, t in zip(deltas[:200_000], taus[:200_000])])
        cost = stage_cost(np.array([level]), u, threshold, tau, iota)[0]
        assert cost == pytest.approx(below_mc.mean(), rel=0.01, abs=1.0)


# ---------------------------------------------------------------------------
# Value iteration
# ---------------------------------------------------------------------------

def test_geometric_series_value():
    # Static battery (harvest exactly matches the only control), one
    # source state: J = r * E[tau] / (1 - alpha) for any charged start.
    u0 = 5.0
    tau = BoundedPdf.point_mass(2 * HOUR)
    model_src = single_state_model(tau, BoundedPdf.point_mass(u0))
    curve = flat_curve(u_max=u0, rate=1.5, u_min=u0 / 2)
    battery = BatteryConfig(capacity=100.0, threshold=10.0, levels=21)
    cfg = SolverConfig(discount=0.9, cost_bound=1e12, controls=2)
    model = DiscreteCmdp(model_src, curve, battery, cfg,
                         controls=np.array([u0]))
    result = value_iteration(model, 0.0)
    expected = 1.5 * tau.mean() / (1.0 - 0.9)
    interior = result.values[0, 1:]   # every charged level
    assert np.allclose(interior, expected, rtol=1e-5)


def test_contraction_rate():
    source = synthetic_day_night(12.0, 3.0, 12.0, 12.0, 1.0, bins=32)
    curve = linear_curve(0.5, 15.0, 2.0)
    battery = BatteryConfig(capacity=250.0, threshold=50.0, levels=40)
    cfg = SolverConfig(discount=0.9, outage_fraction=0.01, controls=8,
                       delta_bins=128)
    model = DiscreteCmdp(source, curve, battery, cfg)
    result = value_iteration(model, 1.0)
    ratios = result.residuals[6:] / result.residuals[5:-1]
    assert np.all(ratios <= 0.9 + 0.05)


def brute_force_optimal_values(model, lagrangian):
    """Pointwise max over all pure policies, each solved exactly.

    Exhaustive enumeration with one linear solve per policy; tractable
    only for tiny grids.
    """
    n_s, n_b, n_a = model.reward_table.shape
    n = n_s * n_b
    stage = model.reward_table - lagrangian * model.cost_table
    best = np.full(n, -np.inf)
    rows = np.arange(n_b)
    for assignment in itertools.product(range(n_a), repeat=n):
        policy = np.array(assignment).reshape(n_s, n_b)
        kernel = np.zeros((n, n))
        reward = np.empty(n)
        for s in range(n_s):
            batt = model.battery_kernel[s, policy[s], rows, :]  # (B, B)
            for t in range(n_s):
                kernel[s * n_b:(s + 1) * n_b, t * n_b:(t + 1) * n_b] = \
                    model.source_matrix[s, t] * batt
            reward[s * n_b:(s + 1) * n_b] = stage[s, rows, policy[s]]
        values = np.linalg.solve(
            np.eye(n) - model.config.discount * kernel, reward)
        best = np.maximum(best, values)
    return best.reshape(n_s, n_b)


def small_instance():
    source = EnergySourceModel(
        np.array([[0.25, 0.75], [0.6, 0.4]]),
        (BoundedPdf.point_mass(1 * HOUR), BoundedPdf.uniform(HOUR, 2 * HOUR, 4)),
        (BoundedPdf.uniform(2.0, 10.0, 8), BoundedPdf.point_mass(0.5)))
    curve = linear_curve(1.0, 8.0, 1.0)
    cfg = SolverConfig(discount=0.8, cost_bound=1e9, controls=2,
                       delta_bins=64, eps_value=1e-10)
    return source, curve, cfg


def test_value_iteration_matches_enumeration():
    source, curve, cfg = small_instance()
    battery = BatteryConfig(capacity=40.0, threshold=10.0, levels=16)
    model = DiscreteCmdp(source, curve, battery, cfg,
                         controls=np.array([1.0, 8.0]))
    # Decimate to 4 battery nodes so the 2^8-policy enumeration stays
    # exact and cheap; VI and the oracle share the decimated kernel.
    keep = np.array([0, 5, 10, 15])
    model.levels = model.levels[keep]
    model.reward_table = model.reward_table[:, keep, :]
    model.cost_table = model.cost_table[:, keep, :]
    kernel = model.battery_kernel[:, :, keep][:, :, :, keep]
    model.battery_kernel = kernel / kernel.sum(axis=3, keepdims=True)
    result = value_iteration(model, 0.0)
    reference = brute_force_optimal_values(model, 0.0)
    assert np.max(np.abs(result.values - reference)) < 1e-8


# ---------------------------------------------------------------------------
# Policy evaluation, steady state, expected cost
# ---------------------------------------------------------------------------

def test_policy_cost_pinned_full_battery_is_free():
    u0 = 5.0
    src = single_state_model(BoundedPdf.point_mass(HOUR),
                             BoundedPdf.point_mass(u0 + 2.0))
    curve = flat_curve(u_max=u0, rate=1.0)
    battery = BatteryConfig(capacity=100.0, threshold=50.0, levels=21)
    cfg = SolverConfig(discount=0.9, cost_bound=1.0, controls=2)
    model = DiscreteCmdp(src, curve, battery, cfg, controls=np.array([u0]))
    policy = np.zeros((1, 21), dtype=int)
    costs = policy_cost_values(model, policy)
    # Starting at full (or above threshold and charging) the cost is 0.
    assert costs[0, -1] == pytest.approx(0.0, abs=1e-9)


def test_policy_cost_geometric_drain():
    u0 = 4.0
    src = single_state_model(BoundedPdf.point_mass(2 * HOUR),
                             BoundedPdf.point_mass(0.0))
    curve = flat_curve(u_max=u0, rate=1.0)
    battery = BatteryConfig(capacity=100.0, threshold=30.0, levels=26)
    cfg = SolverConfig(discount=0.9, cost_bound=1.0, controls=2)
    model = DiscreteCmdp(src, curve, battery, cfg, controls=np.array([u0]))
    policy = np.zeros((1, 26), dtype=int)
    costs = policy_cost_values(model, policy)
    # From empty with no harvest, every stage is fully below threshold.
    expected = 2 * HOUR / (1.0 - 0.9)
    assert costs[0, 0] == pytest.approx(expected, rel=1e-6)


def test_policy_cost_against_rollouts():
    source = synthetic_day_night(10.0, 2.0, 6.0, 6.0, 0.5, bins=32)
    curve = linear_curve(0.5, 12.0, 1.0)
    battery = BatteryConfig(capacity=120.0, threshold=30.0, levels=30)
    cfg = SolverConfig(discount=0.85, outage_fraction=0.01, controls=4,
                       delta_bins=128)
    model = DiscreteCmdp(source, curve, battery, cfg)
    rng = np.random.default_rng(4)
    policy = rng.integers(0, 4, size=(2, 30))
    values = policy_cost_values(model, policy)

    # Monte Carlo rollout of the same discretized chain.
    horizon = 90   # alpha^90 ~ 4e-7
    episodes = 12_000
    start = (0, 12)
    total = np.zeros(episodes)
    rows = np.arange(30)
    kernels = np.stack([model.battery_kernel[s, policy[s], rows, :]
                        for s in range(2)])
    stage = np.stack([model.cost_table[s, rows, policy[s]] for s in range(2)])
    states = np.full(episodes, start[0])
    bins = np.full(episodes, start[1])
    discount = 1.0
    for _ in range(horizon):
        total += discount * stage[states, bins]
        u = rng.random(episodes)
        cdf = np.cumsum(kernels[states, bins, :], axis=1)
        bins = (u[:, None] < cdf).argmax(axis=1)
        u2 = rng.random(episodes)
        cdf_s = np.cumsum(model.source_matrix[states], axis=1)
        states = (u2[:, None] < cdf_s).argmax(axis=1)
        discount *= 0.85
    assert values[start] == pytest.approx(total.mean(), rel=0.02)


def test_steady_state_absorbing_point_start():
    u0 = 3.0
    src = single_state_model(BoundedPdf.point_mass(HOUR),
                             BoundedPdf.point_mass(u0))   # delta == 0
    curve = flat_curve(u_max=u0, rate=1.0)
    battery = BatteryConfig(capacity=100.0, threshold=10.0, levels=21)
    cfg = SolverConfig(discount=0.9, cost_bound=1.0, controls=2)
    model = DiscreteCmdp(src, curve, battery, cfg, controls=np.array([u0]))
    policy = np.zeros((1, 21), dtype=int)
    start = np.zeros((1, 21))
    start[0, 7] = 1.0
    dist = steady_state(model, policy, start=start)
    assert dist[0, 7] == pytest.approx(1.0)


def test_steady_state_day_night_marginal():
    source = synthetic_day_night(10.0, 2.0, 12.0, 12.0, 1.0, bins=32)
    curve = linear_curve(0.5, 12.0, 1.0)
    battery = BatteryConfig(capacity=120.0, threshold=30.0, levels=24)
    cfg = SolverConfig(discount=0.9, outage_fraction=0.01, controls=4,
                       delta_bins=128)
    model = DiscreteCmdp(source, curve, battery, cfg)
    policy = np.ones((2, 24), dtype=int)
    dist = steady_state(model, policy)
    marginal = dist.sum(axis=1)
    assert np.allclose(marginal, [0.5, 0.5], atol=1e-9)
    # Fixed point of the true (non-lazy) kernel.
    rows = np.arange(24)
    kernels = np.stack([model.battery_kernel[s, policy[s], rows, :]
                        for s in range(2)])
    moved = np.einsum("sb,sbc->sc", dist, kernels)
    pushed = np.einsum("st,sc->tc", model.source_matrix, moved)
    assert np.abs(pushed - dist).sum() < 1e-9


def test_steady_state_against_chain_simulation():
    source = synthetic_day_night(9.0, 3.0, 8.0, 10.0, 1.5, bins=32)
    curve = linear_curve(0.5, 12.0, 1.0)
    battery = BatteryConfig(capacity=100.0, threshold=25.0, levels=20)
    cfg = SolverConfig(discount=0.9, outage_fraction=0.01, controls=3,
                       delta_bins=128)
    model = DiscreteCmdp(source, curve, battery, cfg)
    rng = np.random.default_rng(8)
    policy = rng.integers(0, 3, size=(2, 20))
    dist = steady_state(model, policy)

    rows = np.arange(20)
    kernels = np.stack([model.battery_kernel[s, policy[s], rows, :]
                        for s in range(2)])
    cdf_b = np.cumsum(kernels, axis=2)
    cdf_s = np.cumsum(model.source_matrix, axis=1)
    counts = np.zeros((2, 20))
    state, b = 0, 10
    steps = 400_000
    u_draws = rng.random((steps, 2))
    for k in range(steps):
        counts[state, b] += 1
        b = int(np.searchsorted(cdf_b[state, b], u_draws[k, 0]))
        state = int(np.searchsorted(cdf_s[state], u_draws[k, 1]))
    empirical = counts / counts.sum()
    assert np.abs(empirical - dist).sum() < 0.02


def test_expected_cost_reductions():
    dist = np.array([[0.25, 0.25], [0.25, 0.25]])
    assert expected_cost(dist, np.full((2, 2), 7.0)) == pytest.approx(7.0)
    point = np.zeros((2, 2))
    point[1, 0] = 1.0
    values = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert expected_cost(point, values) == 3.0
    rng = np.random.default_rng(2)
    d = rng.random((3, 5))
    d /= d.sum()
    v = rng.random((3, 5))
    assert expected_cost(d, v) == pytest.approx(float((d * v).sum()))


# ---------------------------------------------------------------------------
# The dichotomic search
# ---------------------------------------------------------------------------

def small_day_night_problem(cost_bound=None, outage=None, discount=0.9):
    source = synthetic_day_night(12.0, 3.0, 12.0, 12.0, 1.0, bins=32)
    curve = linear_curve(0.5, 15.0, 2.0)
    battery = BatteryConfig(capacity=250.0, threshold=50.0, levels=48)
    cfg = SolverConfig(discount=discount, outage_fraction=outage,
                       cost_bound=cost_bound, controls=12, delta_bins=128)
    return DiscreteCmdp(source, curve, battery, cfg)


def test_slack_bound_returns_pure_policy():
    model = small_day_night_problem(cost_bound=1e9)
    policy = solve_p2(model)
    assert policy.mix_prob == 1.0
    assert policy.lambda_lo == policy.lambda_hi == 0.0
    assert np.array_equal(policy.map_aggressive, policy.map_conservative)


def test_unattainable_bound_is_infeasible():
    # The night state has zero harvest, so below-threshold time cannot
    # be driven to zero; a zero cost bound is unattainable.
    model = small_day_night_problem(cost_bound=0.0)
    model.config = SolverConfig(discount=0.9, cost_bound=0.0, controls=12,
                                delta_bins=128, lambda_cap=2.0 ** 12)
    with pytest.raises(Infeasible):
        solve_p2(model)


def test_mixed_policy_meets_bound_with_equality():
    model = small_day_night_problem(outage=0.01)
    policy = solve_p2(model)
    mixed = policy.mix_prob * policy.cost_aggressive \
        + (1.0 - policy.mix_prob) * policy.cost_conservative
    assert abs(mixed - policy.cost_bound) <= model.config.eps_cost
    assert 0.0 <= policy.mix_prob <= 1.0
    assert policy.cost_conservative <= policy.cost_bound <= \
        policy.cost_aggressive + model.config.eps_cost


def test_lagrangian_cost_is_monotone_over_iterates():
    model = small_day_night_problem(outage=0.01)
    policy = solve_p2(model)
    iterates = sorted(policy.iterates)
    costs = [c for _, c in iterates]
    scale = max(costs)
    for a, b in zip(costs, costs[1:]):
        assert b <= a + 1e-6 * scale
    # Bounded iteration count: doubling plus bisection phases.
    assert len(policy.iterates) <= 80


def test_policy_io_round_trip(tmp_path):
    model = small_day_night_problem(outage=0.01)
    policy = solve_p2(model)
    save_policy(policy, tmp_path / "pol")
    loaded = load_policy(tmp_path / "pol")
    assert np.allclose(loaded.levels, policy.levels)
    assert np.allclose(loaded.map_aggressive, policy.map_aggressive)
    assert np.allclose(loaded.map_conservative, policy.map_conservative)
    assert loaded.mix_prob == pytest.approx(policy.mix_prob)
    assert loaded.cost_bound == pytest.approx(policy.cost_bound)
    assert loaded.discount == policy.discount
    header = (tmp_path / "pol" / "policy_lambda_minus.csv").read_text() \
        .splitlines()[0]
    assert header == "source_state,battery_bin_low_mAh,control_mA"


def test_config_validation():
    with pytest.raises(InvalidInput):
        SolverConfig(discount=1.0, cost_bound=1.0)
    with pytest.raises(InvalidInput):
        SolverConfig(discount=0.9)
    with pytest.raises(InvalidInput):
        SolverConfig(discount=0.9, cost_bound=1.0, outage_fraction=0.01)
    with pytest.raises(InvalidInput):
        BatteryConfig(capacity=100.0, threshold=0.0)
    with pytest.raises(InvalidInput):
        BatteryConfig(capacity=100.0, threshold=120.0)
    with pytest.raises(InvalidInput):
        BatteryConfig(capacity=100.0, threshold=50.0, levels=4)

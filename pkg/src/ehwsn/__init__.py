"""Energy management toolkit for energy-harvesting sensor networks.

Two nested optimizations: a closed-form optimal operating point (duty
cycle and packet rate) for a given current budget, and an online
energy-management policy from a constrained Markov decision process,
plus a trace-driven simulator to evaluate the resulting policies.
"""

from .consumption import (NodePowerProfile, OperatingPoint, StateBudget,
                          TopologyParams, node_current, state_budgets,
                          total_current)
from .channel import (CollisionSolution, approx_collision_prob,
                      feasibility_limit, peak_collision_prob,
                      solve_fixed_point)
from .operating_point import (CoefficientSet, ControlRange, CorrectedSolver,
                              RewardCurve, collision_corrected_solver,
                              control_bounds, derive_coefficients,
                              optimal_dc_period, reward_curve,
                              solve_p1_closed_form, solve_p1_numerical)
from .source import (BoundedPdf, ChargeDeltaPdf, EnergySourceModel,
                     ShadingMixture, StageTrace, charge_delta_pdf,
                     generate_stage_trace, load_source_model,
                     mixture_delta_pdf, read_stage_trace, sample_stage,
                     save_source_model, synthetic_day_night,
                     write_stage_trace)
from .cmdp import (BatteryConfig, DiscreteCmdp, MixedPolicy, SolverConfig,
                   ValueIterationResult, clamp_buffer, cost_to_outage,
                   expected_cost, load_policy, outage_to_cost,
                   policy_cost_values, save_policy, solve_p2, stage_cost,
                   stage_reward, steady_state, time_above_zero,
                   time_below_threshold, value_iteration)
from .simulate import (BaselineConfig, SimReport, ewma, run_heterogeneous,
                       run_kansal, run_policy)
from .config import RunConfig, build_source, parse_config

__all__ = [
    "NodePowerProfile", "OperatingPoint", "StateBudget", "TopologyParams",
    "node_current", "state_budgets", "total_current",
    "CollisionSolution", "approx_collision_prob", "feasibility_limit",
    "peak_collision_prob", "solve_fixed_point",
    "CoefficientSet", "ControlRange", "CorrectedSolver", "RewardCurve",
    "collision_corrected_solver", "control_bounds", "derive_coefficients",
    "optimal_dc_period", "reward_curve", "solve_p1_closed_form",
    "solve_p1_numerical",
    "BoundedPdf", "ChargeDeltaPdf", "EnergySourceModel", "ShadingMixture",
    "StageTrace", "charge_delta_pdf", "generate_stage_trace",
    "load_source_model", "mixture_delta_pdf", "read_stage_trace",
    "sample_stage", "save_source_model", "synthetic_day_night",
    "write_stage_trace",
    "BatteryConfig", "DiscreteCmdp", "MixedPolicy", "SolverConfig",
    "ValueIterationResult", "clamp_buffer", "cost_to_outage",
    "expected_cost", "load_policy", "outage_to_cost", "policy_cost_values",
    "save_policy", "solve_p2", "stage_cost", "stage_reward", "steady_state",
    "time_above_zero", "time_below_threshold", "value_iteration",
    "BaselineConfig", "SimReport", "ewma", "run_heterogeneous", "run_kansal",
    "run_policy",
    "RunConfig", "build_source", "parse_config",
]

__version__ = "0.1.0"

"""Command-line front end.

Subcommands cover the whole pipeline: the closed-form operating point
(solve-p1, reward-curve, feasibility), the constrained policy solver
(solve-p2), trace-driven evaluation (simulate, compare-baseline) and
parameter sweeps (sweep).  Every report path writes schema-stable CSV
files and, unless --no-plot is given, a PNG figure next to them.

Exit codes: 0 success, 1 domain error (infeasible problem, saturated
channel, ...), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import channel, plots
from .cmdp import (BatteryConfig, DiscreteCmdp, SolverConfig, load_policy,
                   save_policy, solve_p2)
from .config import RunConfig, parse_config
from .consumption import node_current
from .errors import ConfigError, EhwsnError
from .operating_point import (collision_corrected_solver, control_bounds,
                              derive_coefficients, reward_curve,
                              solve_p1_closed_form)
from .simulate import BaselineConfig, run_kansal, run_policy
from .source import (EnergySourceModel, ShadingMixture, generate_stage_trace,
                     read_stage_trace)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _p1_solver(config: RunConfig):
    if config.p1.with_collisions:
        return collision_corrected_solver(config.profile, config.topology)
    coeffs = derive_coefficients(config.profile, config.topology)
    bounds = control_bounds(coeffs)

    class _ClosedForm:
        u_min = bounds.u_min
        u_max = bounds.u_max

        def __call__(self, u):
            return solve_p1_closed_form(coeffs, u, bounds)

    return _ClosedForm()


def _reward_curve(config: RunConfig):
    solver = _p1_solver(config)
    return solver, reward_curve(solver, samples=config.p1.reward_samples)


def _simulation_source(config: RunConfig, args):
    """Stage input for simulation commands: recorded trace or the model."""
    if getattr(args, "trace", None):
        return read_stage_trace(args.trace)
    source = config.require_source()
    if isinstance(source, ShadingMixture):
        # Simulations run against a realization, not the belief mixture.
        return source.base
    return source


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_solve_p1(args) -> int:
    config = parse_config(args.config)
    coeffs = derive_coefficients(config.profile, config.topology)
    bounds = control_bounds(coeffs)
    if args.collisions:
        solver = collision_corrected_solver(config.profile, config.topology)
        op = solver(args.u)
        retx = None
        if config.topology.interferers > 0 and not math.isinf(op.packet_interval):
            sol = channel.solve_fixed_point(
                op.packet_rate, config.profile.vulnerability_window,
                config.profile.channel_error_prob, config.topology.interferers)
            retx = sol.retx_ratio if sol.feasible else None
        ratio = retx if retx is not None else \
            1.0 / (1.0 - config.profile.channel_error_prob)
        i_out = node_current(config.profile, config.topology, op, ratio)
    else:
        op = solve_p1_closed_form(coeffs, args.u, bounds)
        i_out = coeffs.current(op.packet_interval, op.dc_period)
    print(f"u            = {args.u:.6g} mA (range [{bounds.u_min:.6g}, "
          f"{bounds.u_max:.6g}])")
    print(f"t_u          = {op.packet_interval:.6g} s")
    print(f"t_dc         = {op.dc_period:.6g} s")
    print(f"duty_cycle   = {op.duty_cycle:.6g}")
    print(f"packet_rate  = {op.packet_rate:.6g} packets/s")
    print(f"i_out        = {i_out:.6g} mA")
    return 0


def _cmd_reward_curve(args) -> int:
    config = parse_config(args.config)
    solver, curve = _reward_curve(config)
    if args.samples:
        curve = reward_curve(solver, samples=args.samples)
    out = _out_dir(args)
    rows = []
    for u in curve.controls:
        op = solver(float(u))
        rows.append([float(u), float(curve(u)), op.packet_interval,
                     op.dc_period])
    csv_path = out / "reward_curve.csv"
    _write_csv(csv_path, ["u_mA", "packet_rate_pps", "t_u_s", "t_dc_s"], rows)
    print(f"wrote {csv_path}")
    if args.plot:
        print(f"wrote {plots.plot_reward_curve(curve, out / 'reward_curve.png')}")
    return 0


def _cmd_feasibility(args) -> int:
    config = parse_config(args.config)
    profile, topo = config.profile, config.topology
    if topo.interferers == 0:
        print("no interferers: channel access always feasible, e_c = 0")
        return 0
    limit = channel.feasibility_limit(profile.channel_error_prob,
                                      topo.interferers)
    max_rate = limit / profile.vulnerability_window
    print(f"interferers      = {topo.interferers}")
    print(f"load limit       = {limit:.6g} (packet_rate * t_v)")
    print(f"max packet rate  = {max_rate:.6g} packets/s")
    print(f"peak e_c         = "
          f"{channel.peak_collision_prob(topo.interferers):.6g}")
    if args.packet_rate is not None:
        sol = channel.solve_fixed_point(
            args.packet_rate, profile.vulnerability_window,
            profile.channel_error_prob, topo.interferers)
        print(f"packet rate      = {args.packet_rate:.6g} packets/s")
        print(f"feasible         = {sol.feasible}")
        if sol.feasible:
            print(f"e_c              = {sol.collision_prob:.8g}")
            print(f"e_p              = {sol.packet_error_prob:.8g}")
            print(f"effective rate   = {sol.effective_rate:.8g} packets/s")
    return 0


def _cmd_solve_p2(args) -> int:
    config = parse_config(args.config)
    battery = config.require_battery()
    solver_cfg = config.require_solver()
    source = config.require_source()
    _, curve = _reward_curve(config)
    model = DiscreteCmdp(source, curve, battery, solver_cfg)
    policy = solve_p2(model)
    out = Path(args.out)
    save_policy(policy, out)
    print(f"cost bound     = {policy.cost_bound:.6g} s")
    print(f"lambda bracket = [{policy.lambda_lo:.6g}, {policy.lambda_hi:.6g}]")
    print(f"costs          = [{policy.cost_aggressive:.6g}, "
          f"{policy.cost_conservative:.6g}] s")
    print(f"mix prob       = {policy.mix_prob:.6g}")
    print(f"wrote policy to {out}")
    if args.plot:
        base = source.base if isinstance(source, ShadingMixture) else source
        print(f"wrote {plots.plot_policy(policy, out / 'policy.png', base.state_names)}")
    return 0


def _cmd_simulate(args) -> int:
    config = parse_config(args.config)
    battery = config.require_battery()
    _, curve = _reward_curve(config)
    stages = _simulation_source(config, args)
    if args.policy_dir:
        policy = load_policy(args.policy_dir)
    else:
        source = config.require_source()
        policy = solve_p2(DiscreteCmdp(source, curve, battery,
                                       config.require_solver()))
    epochs = args.epochs or config.simulation.epochs
    seed = args.seed if args.seed is not None else config.simulation.seed
    report = run_policy(policy, stages, battery, curve, epochs=epochs,
                        seed=seed,
                        update_delay=config.simulation.update_delay_s)
    out = _out_dir(args)
    report.write_epochs_csv(out / "epochs.csv")
    report.write_summary_csv(out / "summary.csv")
    for key, value in report.summary().items():
        print(f"{key} = {value:.6g}" if isinstance(value, float)
              else f"{key} = {value}")
    print(f"wrote {out / 'epochs.csv'} and {out / 'summary.csv'}")
    if args.plot:
        print(f"wrote {plots.plot_simulation(report, out / 'simulation.png')}")
    return 0


def _cmd_compare_baseline(args) -> int:
    config = parse_config(args.config)
    battery = config.require_battery()
    p1_solver, curve = _reward_curve(config)
    epochs = args.epochs or config.simulation.epochs
    seed = args.seed if args.seed is not None else config.simulation.seed

    stages = _simulation_source(config, args)
    if isinstance(stages, EnergySourceModel):
        stages = generate_stage_trace(stages, epochs, seed)
    if args.policy_dir:
        policy = load_policy(args.policy_dir)
    else:
        source = config.require_source()
        policy = solve_p2(DiscreteCmdp(source, curve, battery,
                                       config.require_solver()))
    rep_policy = run_policy(policy, stages, battery, curve, epochs=epochs,
                            seed=seed)
    rep_base = run_kansal(BaselineConfig(args.ewma), stages, battery,
                          p1_solver, epochs=epochs, seed=seed)

    out = _out_dir(args)
    rep_policy.write_epochs_csv(out / "policy_epochs.csv")
    rep_base.write_epochs_csv(out / "baseline_epochs.csv")
    header = ["scheme"] + list(rep_policy.summary())
    rows = [["policy"] + list(rep_policy.summary().values()),
            ["baseline"] + list(rep_base.summary().values())]
    _write_csv(out / "comparison.csv", header, rows)
    for name, rep in (("policy", rep_policy), ("baseline", rep_base)):
        print(f"{name}: throughput={rep.throughput:.6g} packets/s, "
              f"outage={rep.outage_fraction:.6g}, "
              f"empty={rep.empty_fraction:.6g}")
    print(f"wrote {out / 'comparison.csv'}")
    if args.plot:
        print(f"wrote {plots.plot_comparison(rep_policy, rep_base, out / 'comparison.png')}")
    return 0


def _parse_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list value {text!r}: {exc}") from exc


def _sweep_point(config_path: str, b_max: float, alpha: float,
                 panel_scale: float, epochs: int, seed: int) -> dict:
    config = parse_config(config_path)
    battery_base = config.require_battery()
    solver_base = config.require_solver()
    battery = BatteryConfig(capacity=b_max, threshold=battery_base.threshold,
                            levels=battery_base.levels)
    solver_cfg = SolverConfig(
        discount=alpha, outage_fraction=solver_base.outage_fraction,
        cost_bound=solver_base.cost_bound, controls=solver_base.controls,
        eps_cost=solver_base.eps_cost, lambda_tol=solver_base.lambda_tol,
        eps_value=solver_base.eps_value,
        max_value_iterations=solver_base.max_value_iterations,
        delta_bins=solver_base.delta_bins)
    source = config.require_source()
    if panel_scale != 1.0:
        if isinstance(source, ShadingMixture):
            source = ShadingMixture(source.base.scaled_current(panel_scale),
                                    source.values, source.weights)
        else:
            source = source.scaled_current(panel_scale)
    _, curve = _reward_curve(config)
    policy = solve_p2(DiscreteCmdp(source, curve, battery, solver_cfg))
    sim_source = source.base if isinstance(source, ShadingMixture) else source
    report = run_policy(policy, sim_source, battery, curve, epochs=epochs,
                        seed=seed)
    row = {"b_max_mah": b_max, "alpha": alpha, "panel_scale": panel_scale}
    row.update(report.summary())
    return row


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    battery = config.require_battery()
    solver_cfg = config.require_solver()
    b_values = _parse_list(args.b_max) if args.b_max else [battery.capacity]
    a_values = _parse_list(args.alpha) if args.alpha else [solver_cfg.discount]
    s_values = _parse_list(args.panel_scale) if args.panel_scale else [1.0]
    epochs = args.epochs or config.simulation.epochs
    seed = args.seed if args.seed is not None else config.simulation.seed

    grid = [(b, a, s) for b in b_values for a in a_values for s in s_values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_point, args.config, b, a, s,
                                   epochs, seed) for b, a, s in grid]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_point(args.config, b, a, s, epochs, seed)
                for b, a, s in grid]

    out = _out_dir(args)
    header = list(rows[0])
    _write_csv(out / "sweep.csv", header, [list(r.values()) for r in rows])
    for row in rows:
        print(f"b_max={row['b_max_mah']:g} alpha={row['alpha']:g} "
              f"scale={row['panel_scale']:g}: "
              f"throughput={row['throughput_pps']:.6g}, "
              f"outage={row['outage_fraction']:.6g}")
    print(f"wrote {out / 'sweep.csv'}")
    if args.plot and len(rows) > 1:
        for key in ("b_max_mah", "alpha", "panel_scale"):
            if len({row[key] for row in rows}) == len(rows):
                print(f"wrote {plots.plot_sweep(rows, key, out / 'sweep.png')}")
                break
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehwsn",
        description="Operating-point optimization and energy-management "
                    "policies for energy-harvesting sensor networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_dir=True, plot=True):
        p.add_argument("--config", required=True, help="run configuration file")
        if out_dir:
            p.add_argument("--out-dir", default="out",
                           help="output directory (default: out)")
            p.add_argument("--format", choices=["csv"], default="csv",
                           help="tabular output format")
        if plot:
            group = p.add_mutually_exclusive_group()
            group.add_argument("--plot", dest="plot", action="store_true",
                               default=True,
                               help="render figures next to the CSVs (default)")
            group.add_argument("--no-plot", dest="plot", action="store_false")

    p = sub.add_parser("solve-p1", help="optimal operating point for a budget")
    add_common(p, out_dir=False, plot=False)
    p.add_argument("--u", type=float, required=True, help="current budget (mA)")
    p.add_argument("--collisions", action="store_true",
                   help="apply the collision-corrected solver")
    p.set_defaults(handler=_cmd_solve_p1)

    p = sub.add_parser("reward-curve", help="sample the throughput-vs-budget curve")
    add_common(p)
    p.add_argument("--samples", type=int, default=None,
                   help="number of budget samples")
    p.set_defaults(handler=_cmd_reward_curve)

    p = sub.add_parser("feasibility", help="channel-access feasibility bound")
    add_common(p, out_dir=False, plot=False)
    p.add_argument("--packet-rate", type=float, default=None,
                   help="evaluate the collision fixed point at this rate")
    p.set_defaults(handler=_cmd_feasibility)

    p = sub.add_parser("solve-p2", help="solve the constrained policy problem")
    add_common(p, out_dir=False)
    p.add_argument("--out", required=True, help="policy output directory")
    p.set_defaults(handler=_cmd_solve_p2)

    p = sub.add_parser("simulate", help="run a policy against a source or trace")
    add_common(p)
    p.add_argument("--policy-dir", default=None,
                   help="policy directory (default: solve first)")
    p.add_argument("--trace", default=None, help="stage-trace CSV input")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("compare-baseline",
                       help="policy versus prediction-driven baseline")
    add_common(p)
    p.add_argument("--policy-dir", default=None)
    p.add_argument("--trace", default=None, help="stage-trace CSV input")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ewma", type=float, default=0.5,
                   help="baseline smoothing weight (default 0.5)")
    p.set_defaults(handler=_cmd_compare_baseline)

    p = sub.add_parser("sweep", help="grid sweep over buffer/discount/panel scale")
    add_common(p)
    p.add_argument("--b-max", default=None,
                   help="comma-separated buffer capacities (mAh)")
    p.add_argument("--alpha", default=None, help="comma-separated discounts")
    p.add_argument("--panel-scale", default=None,
                   help="comma-separated harvest scale factors")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1,
                   help="run grid points in parallel processes")
    p.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    except EhwsnError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Figure rendering for the CLI report paths.

Every report-producing subcommand can drop a PNG next to its CSV
output.  All functions take prepared data, write a single file and
return its path; none of them show interactive windows.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def plot_reward_curve(curve, path) -> Path:
    """Packet rate versus current budget."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.controls, curve.rates, lw=1.5)
    ax.set_xlabel("current budget u (mA)")
    ax.set_ylabel("packet rate (packets/s)")
    ax.set_title("Achievable throughput")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_policy(policy, path, state_names=None) -> Path:
    """Expected control map per source state over the battery grid."""
    expected = policy.expected_map()
    n_states = expected.shape[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in range(n_states):
        name = state_names[s] if state_names else f"state {s}"
        ax.step(policy.levels, expected[s], where="post", label=name)
    ax.axvline(policy.threshold, color="gray", ls="--", lw=1,
               label="threshold")
    ax.set_xlabel("battery level (mAh)")
    ax.set_ylabel("control u (mA)")
    ax.set_title(f"Energy-management policy (mix p={policy.mix_prob:.3f})")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_simulation(report, path, max_epochs: int = 400) -> Path:
    """Battery trajectory and applied control over the first epochs."""
    n = min(report.epochs, max_epochs)
    t_h = np.concatenate(([0.0], np.cumsum(report.durations[:n]))) / 3600.0
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    levels = np.append(report.start_levels[:n], report.final_level
                       if n == report.epochs else report.start_levels[n])
    ax1.plot(t_h, levels, lw=1.0)
    ax1.axhline(report.threshold, color="gray", ls="--", lw=1)
    ax1.set_ylabel("battery (mAh)")
    ax1.grid(alpha=0.3)
    ax2.step(t_h[:-1], report.controls[:n], where="post", lw=1.0)
    ax2.set_ylabel("control u (mA)")
    ax2.set_xlabel("time (h)")
    ax2.grid(alpha=0.3)
    fig.suptitle(f"throughput {report.throughput:.3f} pkt/s, "
                 f"outage {report.outage_fraction:.3%}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_comparison(policy_report, baseline_report, path,
                    max_epochs: int = 400) -> Path:
    """Battery trajectories of the solved policy and the baseline."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, rep, style in (("policy", policy_report, "-"),
                              ("baseline", baseline_report, "--")):
        n = min(rep.epochs, max_epochs)
        t_h = np.concatenate(([0.0], np.cumsum(rep.durations[:n]))) / 3600.0
        levels = np.append(rep.start_levels[:n], rep.final_level
                           if n == rep.epochs else rep.start_levels[n])
        ax.plot(t_h, levels, style, lw=1.0, label=label)
    ax.axhline(policy_report.threshold, color="gray", ls=":", lw=1)
    ax.set_xlabel("time (h)")
    ax.set_ylabel("battery (mAh)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_sweep(rows: list[dict], x_key: str, path) -> Path:
    """Throughput and outage across one swept parameter."""
    xs = [row[x_key] for row in rows]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(xs, [row["throughput_pps"] for row in rows], "o-",
             label="throughput")
    ax1.set_xlabel(x_key)
    ax1.set_ylabel("throughput (packets/s)")
    ax1.grid(alpha=0.3)
    ax2 = ax1.twinx()
    ax2.plot(xs, [row["outage_fraction"] for row in rows], "s--",
             color="tab:red", label="outage")
    ax2.set_ylabel("outage fraction")
    fig.legend(loc="upper left", bbox_to_anchor=(0.12, 0.95))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)

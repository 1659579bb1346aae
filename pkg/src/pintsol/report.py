"""Figure rendering for CLI results.

Each function draws one matplotlib figure summarizing a result object and
writes it to ``path`` (PNG or whatever the suffix selects).  Files carry no
creation date so reruns stay byte-stable.  matplotlib is imported lazily and
forced onto the Agg backend: this module only ever renders to files.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "plot_solution",
    "plot_distribution",
    "plot_curve",
    "plot_sweep",
    "plot_error_profile",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> str:
    path = str(path)
    kwargs = {"dpi": 150}
    if path.endswith(".png"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(path, **kwargs)
    _pyplot().close(fig)
    return path


def plot_solution(result, path) -> str:
    """Solution components against time, one panel."""
    plt = _pyplot()
    traj = result.fine_solution
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(traj.states.shape[1]):
        ax.plot(traj.times, traj.states[:, i], lw=0.9, label=f"u{i}")
    ax.set_xlabel("t")
    ax.set_ylabel("u(t)")
    ax.set_title(f"{result.solver}: {result.iterations} iterations")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_distribution(dist, path) -> str:
    """Bar chart of the empirical iteration-count distribution."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = sorted(dist.counts)
    probs = [dist.probability(k) for k in ks]
    ax.bar(ks, probs, width=0.8, color="tab:blue")
    ax.axvline(dist.kd_reference, color="tab:red", ls="--", lw=1.2,
               label=f"deterministic ({dist.kd_reference})")
    ax.set_xlabel("iterations to converge")
    ax.set_ylabel("empirical probability")
    ax.set_title(f"{dist.n_realizations} realizations, "
                 f"beat probability {dist.beat_probability():.3f}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_curve(points, path) -> str:
    """Expected iteration count against ensemble size, with spread bars."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ms = [p.n_samples for p in points]
    ax.errorbar(ms, [p.expectation for p in points],
                yerr=[p.std_dev for p in points],
                marker="o", capsize=3, lw=1.2)
    ax.set_xscale("log")
    ax.set_xlabel("samples per sub-interval")
    ax.set_ylabel("expected iterations")
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(entries, path) -> str:
    """Beat probability against ensemble size, one line per coarse grid."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    totals = sorted({e.total_coarse_steps for e in entries})
    for total in totals:
        rows = [e for e in entries if e.total_coarse_steps == total]
        rows.sort(key=lambda e: e.n_samples)
        ax.plot([e.n_samples for e in rows],
                [e.beat_probability for e in rows],
                marker="o", lw=1.2,
                label=f"{total} coarse steps (ref {rows[0].kd_reference})")
    ax.set_xscale("log")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("samples per sub-interval")
    ax.set_ylabel("P(beat deterministic)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_error_profile(profile, path) -> str:
    """Mean error and two-sd band against the serial fine solution."""
    plt = _pyplot()
    d = profile.mean_abs_error.shape[1]
    fig, axes = plt.subplots(d, 1, figsize=(8, 3.2 * d), squeeze=False)
    floor = 1e-18  # keep zero errors visible on the log axis
    for i in range(d):
        ax = axes[i][0]
        mean = np.maximum(profile.mean_abs_error[:, i], floor)
        band = np.maximum(profile.sd_band[:, i], floor)
        ref = np.maximum(profile.parareal_error[:, i], floor)
        ax.semilogy(profile.times, ref, color="tab:red", lw=0.8,
                    label="deterministic")
        ax.semilogy(profile.times, mean, color="black", lw=0.8,
                    label="ensemble mean")
        ax.fill_between(profile.times, np.maximum(mean - band, floor),
                        mean + band, color="gray", alpha=0.4,
                        label="two-sd band")
        ax.set_ylabel(f"|error| (u{i})")
        ax.legend(fontsize=7)
    axes[-1][0].set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)

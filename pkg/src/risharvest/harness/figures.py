"""Report figures rendered straight from run directories.

Every plot function takes already loaded rows, draws one PNG, and
returns the tidy rows it drew, so the caller can drop the same data
next to the figure as a delimited file.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .runner import write_csv

FIG_DPI = 150

PROTOCOL_STYLE = {
    "HYBRID": dict(color="tab:red", marker="o"),
    "PS": dict(color="tab:blue", marker="s"),
    "TS": dict(color="tab:green", marker="^"),
}

ALGO_STYLE = {
    "oracle": dict(color="black", marker="*"),
    "ddpg_eh": dict(color="tab:red", marker="o"),
    "td3": dict(color="tab:purple", marker="v"),
    "ddpg": dict(color="tab:orange", marker="d"),
    "random": dict(color="gray", marker="x"),
}


def _style(table, key):
    return dict(table.get(key, {}))


def smooth(values, window):
    values = np.asarray(values, dtype=float)
    if window <= 1 or values.size == 0:
        return values
    kernel = np.ones(window) / window
    # running mean with a growing head so the curve starts at episode 0
    out = np.convolve(values, kernel, mode="full")[:values.size]
    counts = np.minimum(np.arange(values.size) + 1, window)
    return out * window / counts


def plot_learning_curves(curves, path, column="reward_mean", window=20,
                         title="training reward"):
    """curves: {label: [episode rows per seed]}; draws seed-mean lines.

    Returns tidy rows (label, episode, mean, lo, hi) for the csv twin.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    tidy = []
    for label, per_seed in curves.items():
        series = [smooth([r[column] for r in rows], window)
                  for rows in per_seed]
        n = min(len(s) for s in series)
        arr = np.stack([s[:n] for s in series])
        mean = arr.mean(axis=0)
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        st = _style(PROTOCOL_STYLE, label)
        st.pop("marker", None)
        ax.plot(np.arange(n), mean, label=label, lw=1.6, **st)
        ax.fill_between(np.arange(n), lo, hi, alpha=0.15,
                        color=st.get("color"))
        for ep in range(n):
            tidy.append({"label": label, "episode": ep,
                         "mean": float(mean[ep]), "lo": float(lo[ep]),
                         "hi": float(hi[ep])})
    ax.set_xlabel("episode")
    ax.set_ylabel(column)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return tidy


def plot_bars(groups, path, ylabel, title, style_table=None):
    """groups: ordered {label: [values]}; bar = mean, whisker = min/max."""
    labels = list(groups)
    means = [float(np.mean(groups[k])) for k in labels]
    los = [float(np.min(groups[k])) for k in labels]
    his = [float(np.max(groups[k])) for k in labels]
    fig, ax = plt.subplots(figsize=(6.2, 4.0))
    xs = np.arange(len(labels))
    colors = [_style(style_table or PROTOCOL_STYLE, k).get("color",
                                                           "tab:gray")
              for k in labels]
    ax.bar(xs, means, color=colors, alpha=0.85)
    yerr = np.array([[m - lo for m, lo in zip(means, los)],
                     [hi - m for m, hi in zip(means, his)]])
    ax.errorbar(xs, means, yerr=yerr, fmt="none", ecolor="black",
                capsize=4, lw=1.0)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return [{"label": k, "mean": m, "lo": lo, "hi": hi}
            for k, m, lo, hi in zip(labels, means, los, his)]


def plot_battery_traces(traces, path, capacity_j, title="battery level"):
    """traces: {label: [level_j per slot]} from logged slot rows."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    tidy = []
    for label, levels in traces.items():
        xs = np.arange(len(levels))
        ax.plot(xs, levels, lw=1.4, label=label)
        for t, v in enumerate(levels):
            tidy.append({"label": label, "slot": t,
                         "battery_j": float(v)})
    ax.axhline(capacity_j, color="black", ls="--", lw=0.8, alpha=0.6)
    ax.set_xlabel("slot")
    ax.set_ylabel("stored energy [J]")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return tidy


def render(figdir, name, kind, data, **kwargs):
    """Draw <name>.png and write <name>.csv beside it."""
    os.makedirs(figdir, exist_ok=True)
    png = os.path.join(figdir, name + ".png")
    if kind == "curves":
        tidy = plot_learning_curves(data, png, **kwargs)
        cols = ("label", "episode", "mean", "lo", "hi")
    elif kind == "bars":
        tidy = plot_bars(data, png, **kwargs)
        cols = ("label", "mean", "lo", "hi")
    elif kind == "battery":
        tidy = plot_battery_traces(data, png, **kwargs)
        cols = ("label", "slot", "battery_j")
    else:
        raise ValueError("unknown figure kind %r" % (kind,))
    write_csv(os.path.join(figdir, name + ".csv"), cols, tidy)
    return png

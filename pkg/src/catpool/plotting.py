"""Figure rendering for the CLI report commands.

Every report command writes its delimited tables first and then renders the
matching figures next to them; nothing here is needed to reproduce the
numbers. Figures carry no timestamps or software metadata so outputs stay
byte-stable across reruns.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams.update({
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
})


def save_figure(fig, path) -> None:
    fig.savefig(path, bbox_inches="tight", metadata={})
    plt.close(fig)


def _group(rows, key):
    groups = defaultdict(list)
    for row in rows:
        groups[row[key]].append(row)
    return groups


def asymptotic_figure(rows, path) -> None:
    """Feasible bounds and minimal DR against xi, one panel per quantity."""
    fig, (ax_box, ax_dr) = plt.subplots(1, 2, figsize=(9, 4))
    for participant, group in sorted(_group(rows, "i").items()):
        xi = [r["xi"] for r in group]
        ax_box.plot(xi, [r["lambda_lower"] for r in group], marker="o",
                    label=f"lower {participant}")
        finite = [(r["xi"], r["lambda_upper"]) for r in group
                  if r["lambda_upper"] != float("inf")]
        if finite:
            ax_box.plot([f[0] for f in finite], [f[1] for f in finite],
                        marker="s", linestyle="--",
                        label=f"upper {participant}")
        ax_dr.plot(xi, [r["dr_min"] for r in group], marker="o",
                   label=f"participant {participant}")
    ax_box.set_xlabel("xi")
    ax_box.set_ylabel("lambda bounds")
    ax_box.legend()
    ax_dr.set_xlabel("xi")
    ax_dr.set_ylabel("minimal limit DR")
    ax_dr.legend()
    save_figure(fig, path)


def dr_curves_figure(rows, path, label_key: str = "i") -> None:
    """DR against p, one panel per xi, one line per participant."""
    by_xi = _group(rows, "xi")
    n_panels = len(by_xi)
    cols = min(2, n_panels)
    rows_of_panels = (n_panels + cols - 1) // cols
    fig, axes = plt.subplots(rows_of_panels, cols, squeeze=False,
                             figsize=(5.0 * cols, 3.5 * rows_of_panels))
    for ax, (xi, group) in zip(axes.flat, sorted(by_xi.items())):
        for label, series in sorted(_group(group, label_key).items()):
            # average DR across seeds at each p
            dr_by_p = defaultdict(list)
            for r in series:
                dr_by_p[r["p"]].append(r["dr"])
            p_values = sorted(dr_by_p)
            dr = [sum(dr_by_p[p]) / len(dr_by_p[p]) for p in p_values]
            ax.plot(p_values, dr, label=str(label))
        ax.axhline(1.0, color="black", linewidth=0.8, linestyle=":")
        ax.set_title(f"xi = {xi:.4f}")
        ax.set_xlabel("p")
        ax.set_ylabel("DR")
        ax.legend()
    for ax in axes.flat[n_panels:]:
        ax.set_visible(False)
    save_figure(fig, path)


def pi_distance_figure(rows, path) -> None:
    """Distance to the feasible set against p, one line per xi."""
    fig, ax = plt.subplots()
    for xi, group in sorted(_group(rows, "xi").items()):
        stats = defaultdict(list)
        for r in group:
            stats[r["p"]].append(r["pi_distance"])
        p_values = sorted(stats)
        ax.plot(p_values,
                [sum(stats[p]) / len(stats[p]) for p in p_values],
                marker="o", label=f"xi = {xi:.4f}")
    ax.set_yscale("log")
    ax.set_xlabel("p")
    ax.set_ylabel("mean distance to feasible set")
    ax.legend()
    save_figure(fig, path)


def hill_figure(rows, path) -> None:
    """Tail-index estimates against k, one line per series label."""
    fig, ax = plt.subplots()
    for state, group in sorted(_group(rows, "state").items()):
        group = sorted(group, key=lambda r: r["k"])
        ax.plot([r["k"] for r in group], [r["alpha_hat"] for r in group],
                label=state)
    ax.set_xlabel("k")
    ax.set_ylabel("alpha estimate")
    ax.legend()
    save_figure(fig, path)


def theta_figure(rows, path) -> None:
    """Relative tail-scale estimates against h."""
    fig, ax = plt.subplots()
    for state, group in sorted(_group(rows, "state").items()):
        group = sorted(group, key=lambda r: r["h"])
        ax.plot([r["h"] for r in group], [r["theta_hat"] for r in group],
                label=state)
    ax.set_xlabel("h")
    ax.set_ylabel("theta estimate")
    ax.legend()
    save_figure(fig, path)


def tests_figure(rows, path, rv_significance: float) -> None:
    """Two panels: RV statistic vs critical value, and equivalence p-values."""
    rv_rows = [r for r in rows if r["test"].startswith("rv:")]
    eq_rows = [r for r in rows if r["test"].startswith("tail_equivalence:")]
    fig, (ax_rv, ax_eq) = plt.subplots(1, 2, figsize=(9, 4))
    for label, group in sorted(_group(rv_rows, "test").items()):
        group = sorted(group, key=lambda r: r["k"])
        ax_rv.plot([r["k"] for r in group], [r["statistic"] for r in group],
                   label=label.split(":", 1)[1])
    if rv_rows:
        ax_rv.axhline(rv_rows[0]["critical_or_p"], color="black",
                      linestyle="--", linewidth=0.8,
                      label=f"critical ({rv_significance:g})")
    ax_rv.set_xlabel("k")
    ax_rv.set_ylabel("RV test statistic")
    ax_rv.legend()
    for label, group in sorted(_group(eq_rows, "test").items()):
        group = sorted(group, key=lambda r: r["k"])
        ax_eq.plot([r["k"] for r in group],
                   [r["critical_or_p"] for r in group],
                   label=label.split(":", 1)[1])
    ax_eq.axhline(0.05, color="black", linestyle="--", linewidth=0.8)
    ax_eq.set_xlabel("k")
    ax_eq.set_ylabel("equivalence p-value")
    ax_eq.legend()
    save_figure(fig, path)


def ecdf_figure(report, metric: str, path) -> None:
    """Empirical CDF of times or errors, one step line per algorithm."""
    fig, ax = plt.subplots()
    for algorithm in report.algorithms:
        x, f = report.ecdf_points(metric, algorithm)
        ax.step(x, f, where="post", label=algorithm)
    ax.set_xlabel("time (s)" if metric == "time" else "absolute error")
    ax.set_ylabel("empirical CDF")
    ax.set_ylim(0, 1.05)
    ax.legend()
    save_figure(fig, path)


def box_figure(report, metric: str, path) -> None:
    """Box plots of times or errors per algorithm."""
    data = {"time": report.times, "error": report.errors}[metric]
    fig, ax = plt.subplots()
    ax.boxplot([data[:, k] for k in range(len(report.algorithms))],
               tick_labels=report.algorithms)
    ax.set_ylabel("time (s)" if metric == "time" else "absolute error")
    save_figure(fig, path)

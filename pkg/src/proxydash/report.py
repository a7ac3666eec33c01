"""Report rendering: dashboard figures plus delimited chart exports.

The report path mirrors what the live dashboard shows - the 3 x 4 chart
grid for the current state - but renders it to image files, with the
aggregated numbers alongside as CSV so downstream tooling can diff them.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .charts import ChartData
from .dashboard import RenderModel
from .scenario import Scenario


def _plot_chart(ax, cd: ChartData, colors: dict[str, str]) -> None:
    if cd.histogram is not None:
        lows = [b[0] for b in cd.histogram]
        counts = [b[2] for b in cd.histogram]
        widths = [b[1] - b[0] or 1.0 for b in cd.histogram]
        ax.bar(lows, counts, width=widths, align="edge",
               color="#8899aa", edgecolor="white")
    else:
        for building, buckets in cd.series:
            labels = [b[0] for b in buckets]
            values = [b[1] for b in buckets]
            ax.plot(range(len(values)), values, marker=".",
                    label=building, color=colors.get(building))
            ax.set_xticks(range(len(labels)))
            ax.set_xticklabels(labels, fontsize=5, rotation=45)
    title = f"{cd.chart.attribute.value} / {cd.chart.granularity.value}"
    if cd.period:
        title += f" [{cd.period}]"
    ax.set_title(title, fontsize=7)
    ax.tick_params(labelsize=5)


def render_dashboard_figure(model: RenderModel, scenario: Scenario,
                            out_path: str | Path) -> Path:
    colors = {b.id: b.color for b in scenario.buildings.values()}
    charts = model.charts
    n = len(charts)
    if model.secondary is None:
        rows, cols = 3, 4
    else:
        cols = min(max(n, 1), 4)
        rows = max((n + cols - 1) // cols, 1)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.4 * rows))
    axes = [axes] if rows * cols == 1 else list(axes.flat)
    for ax in axes[n:]:
        ax.axis("off")
    for ax, cd in zip(axes, charts):
        _plot_chart(ax, cd, colors)
    subtitle = "overview" if model.secondary is None else \
        f"drill-down of {model.secondary.key()}"
    locked = " [locked]" if model.locked else ""
    filtered = ", ".join(e.building for e in model.legend if e.highlighted)
    fig.suptitle(f"{scenario.id}: {subtitle}{locked}"
                 + (f" | filter: {filtered}" if filtered else ""), fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def render_table_figure(scenario: Scenario, robot_poses: dict,
                        trails: dict[str, list] | None, out_path: str | Path) -> Path:
    """Top-down table view: safety margin, park targets and drive trails."""
    ws = scenario.workspace
    fig, ax = plt.subplots(figsize=(7, 7 * ws.height / ws.width))
    ax.add_patch(plt.Rectangle((0, 0), ws.width, ws.height,
                               fill=False, color="black"))
    m = ws.safety_margin
    ax.add_patch(plt.Rectangle((m, m), ws.width - 2 * m, ws.height - 2 * m,
                               fill=False, color="#bbbbbb", linestyle="--"))
    colors = {b.id: b.color for b in scenario.buildings.values()}
    for proxy, bid in scenario.bindings.items():
        color = colors.get(bid, "#444444")
        if trails and proxy in trails and len(trails[proxy]) > 1:
            xs = [p[0] for p in trails[proxy]]
            ys = [p[1] for p in trails[proxy]]
            ax.plot(xs, ys, color=color, linewidth=0.8, alpha=0.6)
        if proxy in robot_poses:
            x, y = robot_poses[proxy][0], robot_poses[proxy][1]
            ax.add_patch(plt.Circle((x, y), 0.05, color=color, alpha=0.7))
            ax.annotate(f"{proxy}:{bid}", (x, y), fontsize=6,
                        ha="center", va="center")
    ax.set_xlim(-0.02, ws.width + 0.02)
    ax.set_ylim(-0.02, ws.height + 0.02)
    ax.set_aspect("equal")
    ax.set_title(f"{scenario.id}: table ({ws.width:.2f} x {ws.height:.2f} m)")
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def export_chart_csv(model: RenderModel, out_path: str | Path) -> Path:
    """Tidy delimited dump of every rendered chart bucket."""
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["attribute", "granularity", "period", "building",
                    "bucket", "mean_value"])
        for cd in model.charts:
            for building, buckets in cd.series:
                for label, value in buckets:
                    w.writerow([cd.chart.attribute.value,
                                cd.chart.granularity.value,
                                cd.period or "", building, label,
                                f"{value:.9g}"])
    return out_path


def export_histogram_csv(model: RenderModel, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["attribute", "bin_lower", "bin_upper", "count"])
        for cd in model.charts:
            if cd.histogram is None:
                continue
            for lo, hi, count in cd.histogram:
                w.writerow([cd.chart.attribute.value, f"{lo:.9g}",
                            f"{hi:.9g}", count])
    return out_path


def write_report(model: RenderModel, scenario: Scenario, out_dir: str | Path,
                 robot_poses: dict | None = None,
                 trails: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        render_dashboard_figure(model, scenario, out_dir / "dashboard.png"),
        export_chart_csv(model, out_dir / "charts.csv"),
        export_histogram_csv(model, out_dir / "histograms.csv"),
    ]
    if robot_poses is not None:
        written.append(render_table_figure(scenario, robot_poses, trails,
                                           out_dir / "table.png"))
    return written

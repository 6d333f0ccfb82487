"""Figure rendering: error boxplots, the initial-vs-refined scatter, and
normalized cost-trajectory curves.

Output is deterministic for fixed inputs: the SVG hash salt is pinned and
no timestamps are embedded.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .reader import below_equal_line_pct, read_results, read_trajectories

KINDS = ("boxplot", "scatter", "trajectory")

plt.rcParams["svg.hashsalt"] = "ssrefine-plots"


@dataclass(frozen=True)
class PlotJob:
    """One figure request: input CSV, figure kind, output path, title."""

    input_csv: str
    kind: str
    output: str
    title: str = ""
    log_scale: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _save(fig, output):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    plt.close(fig)
    return out


def _render_boxplot(job):
    data = read_results(job.input_csv)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.boxplot([data["e_mn"], data["e_mpBC"], data["e_mp"]],
               tick_labels=["mn", "mpBC", "mp"])
    if job.log_scale:
        ax.set_yscale("log")
    ax.set_ylabel("error norm")
    ax.set_title(job.title or "initial vs refined model errors")
    return _save(fig, job.output)


def _render_scatter(job):
    data = read_results(job.input_csv)
    x, y = data["e_mn"], data["e_mp"]
    pct = below_equal_line_pct(x, y)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.scatter(x, y, s=14)
    lo, hi = min(min(x), min(y)), max(max(x), max(y))
    ax.plot([lo, hi], [lo, hi], "k--", linewidth=1, label="equal line")
    if job.log_scale:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("initial model error")
    ax.set_ylabel("fully refined model error")
    title = job.title or "refinement vs initial estimate"
    ax.set_title(f"{title}\n{pct:.1f}% of points below the equal line")
    ax.legend(loc="best")
    return _save(fig, job.output)


def _render_trajectory(job):
    data = read_trajectories(job.input_csv)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    steps = data["step"]
    for name, label in (("bcd", "block descent"),
                        ("gn_bcd", "Gauss-Newton, state matrix fixed"),
                        ("gn_full", "Gauss-Newton, all matrices")):
        col = data[name]
        base = col[0] if col[0] != 0 else 1.0
        ax.plot(steps, [v / base for v in col], marker="o", label=label)
    if job.log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("cost, normalized to the initial model")
    ax.set_title(job.title or "cost evolution of the three optimizers")
    ax.legend(loc="best")
    return _save(fig, job.output)


def render(job: PlotJob) -> Path:
    """Render one figure and return the written path."""
    if job.kind == "boxplot":
        return _render_boxplot(job)
    if job.kind == "scatter":
        return _render_scatter(job)
    return _render_trajectory(job)

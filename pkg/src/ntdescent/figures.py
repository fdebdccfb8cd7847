"""Figure rendering for the report path: traces and comparison tables.

All plots go straight to files (Agg backend); the delimited output stays
the source of truth and figures are rendered alongside it.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .trace import TraceRow  # noqa: E402

_STYLE = {
    "figure.figsize": (6.4, 4.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 9,
    "axes.labelsize": 11,
}


def _best_curve(rows: list[TraceRow], f_ref: float | None):
    calls = [r.oracle_calls for r in rows]
    if f_ref is None:
        gaps = [r.f_best for r in rows]
    else:
        gaps = [r.f_best - f_ref for r in rows]
    return calls, gaps


def plot_traces(traces: list[tuple[list[TraceRow], str]], out: str | Path,
                f_ref: float | None = None, title: str | None = None) -> Path:
    """Best-gap (or best-value) against oracle calls, one line per trace."""
    out = Path(out)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        floor = 1e-16
        for rows, label in traces:
            calls, gaps = _best_curve(rows, f_ref)
            gaps = [max(g, floor) for g in gaps]
            ax.plot(calls, gaps, label=label, linewidth=1.4)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("oracle calls")
        ax.set_ylabel("best gap" if f_ref is not None else "best value")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out, dpi=150)
        plt.close(fig)
    return out


def plot_compare(labels: list[str], checkpoints: list[int],
                 gaps: list[list[float | None]], out: str | Path,
                 title: str | None = None) -> Path:
    """Gap-at-checkpoint summary: one marker series per configuration."""
    out = Path(out)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        floor = 1e-16
        for j, label in enumerate(labels):
            xs = [c for c, row in zip(checkpoints, gaps) if row[j] is not None]
            ys = [max(row[j], floor) for row in gaps if row[j] is not None]
            ax.plot(xs, ys, marker="o", label=label, linewidth=1.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("oracle-call checkpoint")
        ax.set_ylabel("best gap")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out, dpi=150)
        plt.close(fig)
    return out

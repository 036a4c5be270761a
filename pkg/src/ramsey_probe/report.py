"""Figure data and matplotlib rendering of probe traces."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import models
from .dynamics import DynamicsTrace, ModelParams, trace_dynamics
from .spectrum import build_diagonal

FIG_N = 2**10
FIG_M1 = 1
FIG_C = 0.02

_STYLES = ["k-", "r--", "b:", "c-."]


def figure2_traces(points: int = 3001, tmax: float = 3000.0) -> dict[str, DynamicsTrace]:
    """Three-level resonant curves for E' = 1, 2, 5 and the E'' = 1 closed form."""
    t = np.linspace(0.0, tmax, points)
    out = {f"E'={e}": models.three_level_trace(FIG_N, FIG_M1, e, FIG_C, t) for e in (1, 2, 5)}
    p = models.nonres_probability(1.0, FIG_C, t)
    out["E''=1 (non-resonant)"] = DynamicsTrace(t, p, FIG_N, "two-level-closed-form")
    return out


def figure3_traces(points: int = 1001, tmax: float = 100.0) -> dict[str, DynamicsTrace]:
    """Short-time comparison including the full simulation of n=4, (x, y) = (2, 4)."""
    t = np.linspace(0.0, tmax, points)
    table = build_diagonal(4, 2, 4)
    return {
        "resonant E'=1": models.three_level_trace(FIG_N, FIG_M1, 1.0, FIG_C, t),
        "non-resonant E''=1": DynamicsTrace(t, models.nonres_probability(1.0, FIG_C, t), FIG_N,
                                            "two-level-closed-form"),
        "R(2,4)=4, n=4": trace_dynamics(ModelParams(4, 2, 4, c=FIG_C), table, t),
    }


def traces_csv(traces: dict[str, DynamicsTrace]) -> str:
    """Wide CSV: a shared time column followed by one column per trace."""
    names = list(traces)
    t = traces[names[0]].times
    header = ",".join(["t"] + [f'"{n}"' for n in names])
    cols = np.column_stack([t] + [traces[n].probs for n in names])
    rows = [",".join(repr(float(v)) for v in row) for row in cols]
    return "\n".join([header] + rows) + "\n"


def plot_traces(traces: dict[str, DynamicsTrace], path, title: str | None = None) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for style, (label, tr) in zip(_STYLES * 4, traces.items()):
        ax.plot(tr.times, tr.probs, style, lw=1.2, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("P(probe in |1>)")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

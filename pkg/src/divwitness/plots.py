"""Figure rendering for the report path.

Figures are written straight to files next to the delimited output; no
interactive backend is ever required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.1),
    "axes.grid": True,
    "grid.alpha": 0.35,
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def plot_guessing_trace(values, path, extended: bool = False, title: str | None = None):
    """Guessing probability per time index, saved to `path`."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        steps = list(range(len(values)))
        ax.plot(steps, values, marker="o", color="tab:blue")
        for i in range(len(values) - 1):
            if values[i + 1] > values[i] + 1e-9:
                ax.plot(steps[i : i + 2], values[i : i + 2], color="tab:red", lw=2.2)
        ax.set_xlabel("time index")
        ax.set_ylabel("guessing probability" + (" (extended)" if extended else ""))
        ax.set_xticks(steps)
        if title:
            ax.set_title(title)
        fig.savefig(path)
        plt.close(fig)


def plot_step_diagnostics(negativities, residuals, path, title: str | None = None):
    """Per-step Choi negativity and recomposition residual bars."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        steps = list(range(1, len(negativities) + 1))
        width = 0.4
        ax.bar([s - width / 2 for s in steps],
               [0.0 if v is None else v for v in negativities],
               width=width, label="Choi negativity", color="tab:red")
        ax.bar([s + width / 2 for s in steps], residuals,
               width=width, label="residual", color="tab:gray")
        ax.set_xlabel("step")
        ax.set_xticks(steps)
        ax.set_yscale("symlog", linthresh=1e-10)
        ax.legend()
        if title:
            ax.set_title(title)
        fig.savefig(path)
        plt.close(fig)

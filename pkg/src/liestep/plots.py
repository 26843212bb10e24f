"""Figure rendering for the report-producing commands.

Figures are written next to the delimited output; rendering is isolated
here so library users never pay the matplotlib import cost.
"""

from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_compare_figure(times: np.ndarray, casimir: dict, energy: dict,
                          path: str) -> None:
    """Drift curves of several methods on shared initial data."""
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    floor = 1e-18
    for name, series in casimir.items():
        ax1.semilogy(times, np.maximum(np.abs(series), floor), label=name)
    ax1.set_xlabel("time")
    ax1.set_ylabel("|Casimir drift|")
    ax1.set_title("Casimir (momentum-norm) drift")
    ax1.legend()
    for name, series in energy.items():
        ax2.semilogy(times, np.maximum(np.abs(series), floor), label=name)
    ax2.set_xlabel("time")
    ax2.set_ylabel("|energy drift|")
    ax2.set_title("Kinetic-energy drift")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={"Software": None})
    plt.close(fig)


def render_convergence_figure(report, path: str) -> None:
    """Log-log error plot with the fitted order annotated."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    h = np.asarray(report.step_sizes)
    e = np.asarray(report.errors)
    ax.loglog(h, e, "o-", label=f"{report.method} (slope {report.slope:.2f})")
    anchor = e[0] / h[0] ** round(report.slope)
    ax.loglog(h, anchor * h ** round(report.slope), "k--", alpha=0.5,
              label=f"order {round(report.slope)} guide")
    ax.set_xlabel("step size h")
    ax.set_ylabel("momentum error at final time")
    ax.set_title(f"convergence vs {report.reference}")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={"Software": None})
    plt.close(fig)

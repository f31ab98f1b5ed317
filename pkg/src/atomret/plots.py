"""Figure rendering for retrieval traces (file output only)."""

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["render_trace"]


def _series(rows, key):
    ts, vals = [], []
    for r in rows:
        v = r[key]
        if v is not None and not (isinstance(v, float) and math.isnan(v)):
            ts.append(r["t"])
            vals.append(v)
    return ts, vals


def render_trace(report, path, fit_target=None):
    """Two-panel trace figure: dual value / exposure radius, and the
    reduced-solve misfit against the termination target."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)

    t_d, d_vals = _series(report.rows, "d_value")
    ax1.plot(t_d, d_vals, marker=".", label="dual value")
    t_e, eps = _series(report.rows, "eps_bound")
    if eps:
        ax1b = ax1.twinx()
        ax1b.plot(t_e, eps, marker=".", color="tab:orange",
                  label="exposure radius")
        ax1b.set_ylabel("exposure radius")
        ax1b.set_yscale("log")
    ax1.set_ylabel("dual value")
    ax1.legend(loc="upper right")
    ax1.set_title(f"retrieval trace (status: {report.status})")

    t_f, f_vals = _series(report.rows, "f_reduced")
    if f_vals:
        ax2.plot(t_f, f_vals, marker=".", color="tab:green",
                 label="reduced misfit")
        if any(v > 0 for v in f_vals):
            ax2.set_yscale("log")
    if fit_target is not None and fit_target > 0:
        ax2.axhline(fit_target, color="tab:red", linestyle="--",
                    label="termination target")
    ax2.set_xlabel("outer iteration")
    ax2.set_ylabel("misfit")
    ax2.legend(loc="upper right")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

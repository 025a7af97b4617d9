"""Static SVG rendering of a ratio series with its detections.

Every drawn element carries an SVG id so figures can be checked
structurally: ``t-curve``, ``tau-line``, ``interval-kept-<j>``,
``interval-pruned-<j>``, ``dip-<k>`` and ``spike-<k>``.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .detector import Detection  # noqa: E402

__all__ = ["plot_detection"]


def plot_detection(detection: Detection, out_path, title: str | None = None, width: float = 10.0):
    """Write an SVG of ``T`` (log scale) with ``tau``, intervals and estimates.

    ``dip-<k>`` marks the minimizer ``r_k`` (labelled with ``z_k``) and
    ``spike-<k>`` the largest value of ``T`` within ``alpha`` after it.
    """
    series = detection.series
    if series is None:
        raise ValueError("detection carries no ratio series to plot")
    t = series.t
    idx = series.indices()
    fig, ax = plt.subplots(figsize=(width, 3.6))
    (line,) = ax.plot(idx, t, lw=0.8, color="black", label="T")
    line.set_gid("t-curve")
    tau_line = ax.axhline(detection.tau, color="tab:red", ls="--", lw=0.8, label=f"tau = {detection.tau:g}")
    tau_line.set_gid("tau-line")

    kept = pruned = 0
    for iv in detection.intervals:
        lo, hi = max(iv.m, 1), iv.M
        if iv.pruned:
            pruned += 1
            span = ax.axvspan(lo, hi, color="tab:gray", alpha=0.25, lw=0)
            span.set_gid(f"interval-pruned-{pruned}")
        else:
            kept += 1
            span = ax.axvspan(lo, hi, color="tab:blue", alpha=0.2, lw=0)
            span.set_gid(f"interval-kept-{kept}")

    alpha = detection.alpha
    for k, (r, z) in enumerate(zip(detection.minimizers, detection.locations), start=1):
        (dip,) = ax.plot([r], [t[r - 1]], "v", color="tab:green", ms=6)
        dip.set_gid(f"dip-{k}")
        ax.annotate(str(z), (r, t[r - 1]), textcoords="offset points", xytext=(0, -12),
                    ha="center", fontsize=7, color="tab:green")
        hi = min(r + alpha, len(t))
        if hi > r:
            j = r + 1 + int(np.argmax(t[r:hi]))
            (spike,) = ax.plot([j], [t[j - 1]], "^", color="tab:orange", ms=5)
            spike.set_gid(f"spike-{k}")

    ax.set_yscale("log")
    ax.set_xlabel("i")
    ax.set_ylabel("T(i)")
    ax.set_xlim(idx[0], idx[-1])
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path

"""SVG figures for the experiment reports.

Figures are written without a timestamp and with a fixed hash salt, so that
reruns produce identical files. The plotted numbers are embedded in the SVG
description metadata.
"""

from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_svg",
    "plot_convergence",
    "plot_transformed_ellipses",
    "plot_noise",
    "plot_scatter",
    "plot_lambda_contours",
    "plot_signature_pairs",
]

plt.rcParams.update({
    "svg.hashsalt": "moebius-sig",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else None
    return x


def save_svg(fig, path, data: dict | None = None) -> None:
    meta = {"Date": None}
    if data is not None:
        meta["Description"] = "data: " + json.dumps(_jsonable(data), separators=(",", ":"))
    fig.savefig(path, format="svg", metadata=meta, bbox_inches="tight")
    plt.close(fig)


def plot_convergence(table: dict, path) -> None:
    """Log-log errors of every length estimate against N."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    n = np.array(table["N"])
    series = [
        ("err_curvature", "curvature method", "o-"),
        ("err_crossratio", "cross-ratio method", "s-"),
        ("err_modified", "modified method", "^-"),
        ("err_richardson_modified", "modified + 1 Richardson step", "v--"),
        ("err_richardson_crossratio", "cross-ratio + 2 Richardson steps", "d--"),
    ]
    data = {"N": n}
    for key, label, style in series:
        e = np.abs(np.array(table[key], dtype=float))
        ok = np.isfinite(e) & (e > 0)
        ax.loglog(n[ok], e[ok], style, label=label, ms=4)
        data[key] = table[key]
    ax.set_xlabel("N")
    ax.set_ylabel("|error in Moebius length|")
    ax.legend(fontsize=7)
    save_svg(fig, path, data)


def plot_transformed_ellipses(res: dict, path) -> None:
    """4 x 4 panel of transformed ellipses with arclength landmarks."""
    fig, axes = plt.subplots(4, 4, figsize=(8, 8))
    for ax, c, lm, err in zip(axes.ravel(), res["curves"], res["landmarks"], res["err_curvature"]):
        z = np.append(c.points, c.points[0])
        ax.plot(z.real, z.imag, "-", lw=0.8)
        ax.plot(lm.real, lm.imag, "o", ms=3)
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(f"{err:.4f}", fontsize=8)
    save_svg(fig, path, {"d": res["d"], "err_curvature": res["err_curvature"],
                         "err_crossratio": res["err_crossratio"]})


def plot_noise(sweep: dict, path) -> None:
    """Heatmaps of mean relative errors of L and FCR over (N, eps)."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    labels = [f"{e:g}" for e in sweep["eps"]]
    for ax, key, title in zip(axes, ("L_rel", "FCR_rel"), ("relative error in L", "relative error in FCR")):
        vals = np.log10(np.asarray(sweep[key]))
        img = ax.imshow(vals, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(labels)), labels)
        ax.set_yticks(range(len(sweep["N"])), [str(n) for n in sweep["N"]])
        ax.set_xlabel("noise eps")
        ax.set_ylabel("N")
        ax.set_title(title)
        ax.grid(False)
        fig.colorbar(img, ax=ax, label="log10")
    save_svg(fig, path, {"N": sweep["N"], "eps": sweep["eps"], "L_rel": sweep["L_rel"],
                         "FCR_rel": sweep["FCR_rel"]})


def plot_scatter(d, e, corr: float, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    d, e = np.asarray(d, float), np.asarray(e, float)
    ok = np.isfinite(d) & np.isfinite(e)
    ax.plot(d[ok], e[ok], ".", ms=5)
    ax.set_xlabel("registered distance d_G (Moebius, H1)")
    ax.set_ylabel("FCR distance")
    ax.set_title(f"Pearson r = {corr:.3f}")
    save_svg(fig, path, {"d_moebius": d, "fcr_distance": e, "correlation": corr})


def plot_lambda_contours(img, fields, path, title: str = "") -> None:
    """Intensity contours 0.1..0.9 with the lambda_n contours -1, -0.25, 0, 0.25, 1."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    x = img.axis
    ax.contour(x, x, img.grid, levels=np.arange(0.1, 1.0, 0.1), colors="tab:blue", linewidths=0.6)
    ln = np.where(fields.mask, fields.lambda_n, np.nan)
    ax.contour(x, x, ln, levels=[-100, -1, -0.25], colors="tab:red", linewidths=0.6)
    ax.contour(x, x, ln, levels=[0], colors="tab:green", linewidths=0.6)
    ax.contour(x, x, ln, levels=[0.25, 1, 100], colors="black", linewidths=0.6)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.grid(False)
    save_svg(fig, path)


def plot_signature_pairs(pairs, path, title: str = "") -> None:
    """Signature curves of originals (blue) and Moebius images (red), one panel each."""
    k = len(pairs)
    cols = int(np.ceil(np.sqrt(k)))
    rows = int(np.ceil(k / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.6 * rows), squeeze=False)
    lim = np.pi / 2
    for ax in axes.ravel()[k:]:
        ax.axis("off")
    for ax, (s1, s2) in zip(axes.ravel(), pairs):
        ax.plot(s1.u, s1.v, ".", ms=1.5, color="tab:blue")
        ax.plot(s2.u, s2.v, ".", ms=1.5, color="tab:red")
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.tick_params(labelsize=6)
    fig.suptitle(title)
    save_svg(fig, path)

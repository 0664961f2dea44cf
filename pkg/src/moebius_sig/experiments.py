"""Drivers for the curve and image experiments.

Each function returns plain data (dicts of lists and arrays) so that the CLI,
the plots and the acceptance tests share one code path.
"""

from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import image as im
from .arclength import (
    arclength_profile,
    count_vertices,
    ellipse_exact_length,
    moebius_length,
    richardson_length,
    richardson_step,
)
from .curve import add_noise, ellipse, is_simple, random_jordan
from .errors import PossibleUndersampling
from .moebius import MoebiusTransform
from .registration import RegistrationConfig, dist_symmetrized, thread_count
from .signature import fcr_distance, fcr_of_curve, relative_fcr_error

__all__ = [
    "ELLIPSE_BASE_N",
    "loglog_slope",
    "ellipse_convergence",
    "ellipse_transforms",
    "fig5_transforms",
    "noise_sweep",
    "shape_seeds",
    "shape_experiment",
    "reference_image_experiment",
    "blob_pairs_experiment",
    "jitter_experiment",
]

ELLIPSE_BASE_N = 25
NOISE_NS = (32, 64, 128, 256, 512)
NOISE_EPS = (0.0, 1e-4, 1e-3, 1e-2)
REFERENCE_FCR_N = 4096


def loglog_slope(h, err) -> float:
    """Least-squares slope of log|err| against log h."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.abs(np.asarray(err, float))), 1)[0])


# ---------------------------------------------------------------- ellipse

def ellipse_convergence(j_max: int = 7, base: int = ELLIPSE_BASE_N) -> dict:
    """Lengths of the ellipse for N = base 2^j, j = 0..j_max, by every method.

    ``richardson_crossratio`` holds the two-step (orders 3/2, 2) value that
    ends at row j (needs j >= 2); ``richardson_modified`` the one-step
    (order 2) value on the modified method ending at row j (needs j >= 1).
    """
    exact = ellipse_exact_length()
    ns = [base * 2**j for j in range(j_max + 1)]
    rows = {m: [] for m in ("curvature", "crossratio", "modified")}
    for n in ns:
        c = ellipse(n)
        for m in rows:
            rows[m].append(moebius_length(c, m))
    cr, mod = rows["crossratio"], rows["modified"]
    rich_cr = [np.nan, np.nan] + [richardson_length(*cr[j - 2:j + 1]) for j in range(2, len(ns))]
    rich_mod = [np.nan] + [float(richardson_step(mod[j - 1], mod[j], 2.0)) for j in range(1, len(ns))]
    out = {"N": ns, "h": [1.0 / n for n in ns], "exact": exact}
    for m, vals in rows.items():
        out[m] = vals
        out[f"err_{m}"] = [v - exact for v in vals]
    out["richardson_crossratio"] = rich_cr
    out["err_richardson_crossratio"] = [v - exact for v in rich_cr]
    out["richardson_modified"] = rich_mod
    out["err_richardson_modified"] = [v - exact for v in rich_mod]
    # slopes skip every value that uses the coarsest grid, which is not yet
    # asymptotic (its cross-ratio error even has the opposite sign)
    h = np.array(out["h"])
    out["slope_crossratio"] = loglog_slope(h[1:], out["err_crossratio"][1:])
    out["slope_curvature"] = loglog_slope(h[1:], out["err_curvature"][1:])
    out["slope_modified"] = loglog_slope(h[1:], out["err_modified"][1:])
    out["slope_richardson_modified"] = loglog_slope(h[2:], out["err_richardson_modified"][2:])
    return out


def fig5_transforms() -> list[MoebiusTransform]:
    """16 maps z -> z / (1 + d z) of the ellipse, from nearly the identity to
    nearly singular.

    The pole -1/d sits at s times the ellipse radius in direction theta,
    s in {10, 2, 1.2, 1.05} and theta = pi/3 + k pi/2.
    """
    out = []
    for s in (10.0, 2.0, 1.2, 1.05):
        for k in range(4):
            th = np.pi / 3 + k * np.pi / 2
            rho = 1.0 / np.hypot(np.cos(th), np.sin(th) / 2)
            d = -1.0 / (s * rho * np.exp(1j * th))
            out.append(MoebiusTransform(1.0, 0.0, d, 1.0))
    return out


def ellipse_transforms(n: int = 100) -> dict:
    """Lengths of the 16 transformed ellipses by the curvature and cross-ratio methods."""
    exact = ellipse_exact_length()
    base = ellipse(n)
    res = {"d": [], "crossratio": [], "curvature": [], "curves": [], "landmarks": []}
    for t in fig5_transforms():
        c = base.transformed(t)
        res["d"].append(t.c)
        res["crossratio"].append(moebius_length(c, "crossratio"))
        res["curvature"].append(moebius_length(c, "curvature"))
        res["curves"].append(c)
        prof = arclength_profile(c)
        res["landmarks"].append(c.interpolate(prof.t_of(np.arange(10) * prof.total_length / 10)))
    res["err_crossratio"] = [v - exact for v in res["crossratio"]]
    res["err_curvature"] = [v - exact for v in res["curvature"]]
    res["exact"] = exact
    res["N"] = n
    return res


# ---------------------------------------------------------------- noise

def noise_sweep(ns=NOISE_NS, eps=NOISE_EPS, realizations: int = 20, seed: int = 0,
                n_sig: int = 128, delta_frac: float = 1 / 8) -> dict:
    """Mean relative errors of L (modified method) and FCR on the noisy ellipse.

    The FCR reference is that of the clean ellipse at N = 4096; the L
    reference is the exact length. Realisation k of cell (N, eps) uses seed
    ``seed * 1_000_003 + 1000 * i_eps + k``, shared across N.
    """
    exact = ellipse_exact_length()
    ref = fcr_of_curve(ellipse(REFERENCE_FCR_N), delta_frac, n_sig)
    L_err = np.zeros((len(ns), len(eps)))
    F_err = np.zeros_like(L_err)
    flagged = np.zeros(L_err.shape, dtype=int)
    for a, n in enumerate(ns):
        clean = ellipse(n)
        for b, e in enumerate(eps):
            reps = 1 if e == 0 else realizations
            le, fe = [], []
            for k in range(reps):
                c = add_noise(clean, e, seed * 1_000_003 + 1000 * b + k)
                # heavy noise on fine grids trips the branch guard by design
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", PossibleUndersampling)
                    f = fcr_of_curve(c, delta_frac, n_sig)
                flagged[a, b] += any(issubclass(w.category, PossibleUndersampling) for w in caught)
                le.append(abs(f.L - exact) / exact)
                fe.append(relative_fcr_error(f, ref))
            L_err[a, b] = np.mean(le)
            F_err[a, b] = np.mean(fe)
    return {"N": list(ns), "eps": list(eps), "L_rel": L_err, "FCR_rel": F_err,
            "undersampled": flagged, "realizations": realizations, "seed": seed}


# ---------------------------------------------------------------- shapes

def shape_seeds(seed: int, count: int = 16, n_samples: int = 256) -> list[int]:
    """First ``count`` seeds from seed * 10000 onwards whose curves are simple."""
    out = []
    s = seed * 10_000
    while len(out) < count:
        if is_simple(random_jordan(s, n_samples)):
            out.append(s)
        s += 1
    return out


def _pair_distance(args):
    i, j, ci, cj, cfg = args
    d, fwd, bwd = dist_symmetrized(ci, cj, "moebius", cfg)
    return i, j, d, fwd.r, bwd.r, fwd.converged and bwd.converged


def shape_experiment(seed: int = 0, n_shapes: int = 16, n_samples: int = 256,
                     pairs: int | None = None, n_sig: int = 128, delta_frac: float = 1 / 8,
                     alpha: float = 0.1, n_jobs: int | None = None) -> dict:
    """FCR distances for every pair of random shapes, registered distances for
    the first ``pairs`` pairs (all by default), and their Pearson correlation."""
    seeds = shape_seeds(seed, n_shapes, n_samples)
    curves = [random_jordan(s, n_samples) for s in seeds]
    fcrs = [fcr_of_curve(c, delta_frac, n_sig) for c in curves]
    all_pairs = list(itertools.combinations(range(n_shapes), 2))
    fdist = [fcr_distance(fcrs[i], fcrs[j]) for i, j in all_pairs]
    todo = all_pairs if pairs is None else all_pairs[:pairs]
    cfg = RegistrationConfig(alpha=alpha)
    jobs = n_jobs or thread_count()
    args = [(i, j, curves[i], curves[j], cfg) for i, j in todo]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reg = list(ex.map(_pair_distance, args))
    else:
        reg = [_pair_distance(a) for a in args]
    d = np.full(len(all_pairs), np.nan)
    r_fwd = np.full(len(all_pairs), np.nan)
    r_bwd = np.full(len(all_pairs), np.nan)
    conv = [None] * len(all_pairs)
    for k, (i, j, dist, rf, rb, ok) in enumerate(reg):
        d[k], r_fwd[k], r_bwd[k], conv[k] = dist, rf, rb, ok
    done = np.isfinite(d)
    corr = float(np.corrcoef(d[done], np.array(fdist)[done])[0, 1]) if done.sum() > 2 else float("nan")
    ratio = np.maximum(r_fwd, r_bwd) / np.minimum(r_fwd, r_bwd)
    return {
        "seeds": seeds,
        "curves": curves,
        "vertices": [count_vertices(c) for c in curves],
        "lengths": [f.L for f in fcrs],
        "pairs": all_pairs,
        "fcr_distance": fdist,
        "d_moebius": d.tolist(),
        "r_forward": r_fwd.tolist(),
        "r_backward": r_bwd.tolist(),
        "converged": conv,
        "correlation": corr,
        "n_registered": int(done.sum()),
        "max_asymmetry": float(np.nanmax(ratio)) if done.any() else float("nan"),
    }


# ---------------------------------------------------------------- images

def reference_image_experiment(m: int = im.DEFAULT_M, saddle_near: complex = -0.46 - 0.49j) -> dict:
    """Saddle of lambda_n and the pointwise invariance of both fields."""
    img = im.reference_image(m)
    fields = im.invariant_fields(img)
    t = im.REFERENCE_TRANSFORM
    img2 = im.pullback(im.reference_function, t, m)
    fields2 = im.invariant_fields(img2)
    w = t.apply_array(img.points())
    out = {"m": m, "h": img.h, "image": img, "fields": fields, "image2": img2, "fields2": fields2}
    bright = img.grid >= 0.1
    for name in ("lambda_n", "lambda_t"):
        v, ok = fields2.interpolate(w, name)
        ok &= fields.mask
        diff = np.abs(v - getattr(fields, name))
        out[f"median_diff_{name}"] = float(np.median(diff[ok]))
        out[f"median_diff_{name}_bright"] = float(np.median(diff[ok & bright]))
        out["common_mask_size"] = int(ok.sum())
    loc, val, eig = im.stationary_point(fields.lambda_n, fields.h, saddle_near, radius=0.1)
    out["saddle_location"] = loc
    out["saddle_lambda_n"] = val
    out["saddle_hessian_eigs"] = eig
    return out


def blob_pairs_experiment(seed: int = 0, count: int = 9, m: int = im.DEFAULT_M,
                          level: float = 0.5) -> dict:
    """Random blobs against their random Moebius images; signature distances."""
    rows = []
    for k in range(count):
        blob = im.random_blobs(4, seed * 1000 + k, m)
        t = im.random_moebius(seed * 1000 + 500 + k)
        a, b = im.sample(blob, m), im.pullback(blob, t, m)
        sa, sb = im.signature_curve(a, level), im.signature_curve(b, level)
        rows.append({"blob": blob, "transform": t, "image": a, "image2": b,
                     "sig": sa, "sig2": sb, "distance": im.signature_distance(sa, sb)})
    return {"pairs": rows, "distances": [r["distance"] for r in rows]}


def jitter_experiment(seed: int = 0, count: int = 9, m: int = im.DEFAULT_M,
                      level: float = 0.5, rel: float = 0.05, c_std: float = 0.1) -> dict:
    """Near-identical blobs (+-5% parameters) and their z/(1+cz) images.

    ``ratio`` is the mean distance between signatures of distinct blobs over
    the mean distance within Moebius pairs.
    """
    base = im.random_blobs(4, seed * 1000 + 999, m)
    sigs, msigs, rows = [], [], []
    for k in range(count):
        blob = im.jittered_blobs(base, seed * 1000 + 700 + k, rel, m)
        t = im.random_inversion(seed * 1000 + 800 + k, c_std)
        a, b = im.sample(blob, m), im.pullback(blob, t, m)
        sigs.append(im.signature_curve(a, level))
        msigs.append(im.signature_curve(b, level))
        rows.append({"blob": blob, "transform": t, "image": a, "image2": b})
    moeb = [im.signature_distance(s, t) for s, t in zip(sigs, msigs)]
    distinct = [im.signature_distance(sigs[i], sigs[j])
                for i, j in itertools.combinations(range(count), 2)]
    return {"rows": rows, "sigs": sigs, "msigs": msigs, "moebius_distances": moeb,
            "distinct_distances": distinct,
            "ratio": float(np.mean(distinct) / np.mean(moeb)),
            "worst_ratio": float(np.min(distinct) / np.max(moeb))}

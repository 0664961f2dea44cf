"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest,
which repeats the lines in its terminal summary. Tolerances are the
required ones; criteria that are not met fail here and are discussed in the
README.
"""

import time

import numpy as np
import pytest

from moebius_sig import experiments as ex
from moebius_sig import image as im
from moebius_sig.arclength import (
    arclength_profile,
    count_vertices,
    moebius_curvature_polyline,
    moebius_length,
)
from moebius_sig.curve import ellipse, random_jordan
from moebius_sig.moebius import MoebiusTransform, cross_ratio
from moebius_sig.signature import (
    ScrSignature,
    fcr,
    fcr_distance,
    fcr_distance_quotient,
    fcr_of_curve,
    scr,
)

REPORT = []


def check(cid: str, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {cid:<4} {name}: {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def convergence():
    t0 = time.perf_counter()
    conv = ex.ellipse_convergence(7)
    conv["seconds"] = time.perf_counter() - t0
    return conv


@pytest.fixture(scope="module")
def noise():
    return ex.noise_sweep(realizations=20, seed=0)


@pytest.fixture(scope="module")
def reference():
    return ex.reference_image_experiment(161)


# 1

def test_c1_ellipse_length():
    t0 = time.perf_counter()
    c = ellipse(800)
    cr, cu = moebius_length(c, "crossratio"), moebius_length(c, "curvature")
    dt = time.perf_counter() - t0
    ok = abs(cr - 6.86) <= 0.01 and abs(cu - 6.86) <= 0.01 and dt < 1.0
    check("1", "ellipse length at N=800", ok,
          f"crossratio {cr:.5f}, curvature {cu:.5f} (6.86 +- 0.01), {dt:.3f} s (< 1 s)")


# 2

def test_c2_richardson(convergence):
    err = convergence["err_richardson_crossratio"][-1]
    ok = abs(err) < 1e-10 and convergence["seconds"] < 5
    check("2", "two-step Richardson, j <= 7", ok,
          f"error {err:.3e} (< 1e-10), {convergence['seconds']:.2f} s (< 5 s)")


# 3

def test_c3_exact_invariance():
    res = ex.ellipse_transforms(100)
    cr = np.array(res["crossratio"])
    spread = float((cr.max() - cr.min()) / cr.mean())
    e = np.abs(res["err_curvature"])
    var = float(e.max() / e.min())
    check("3", "cross-ratio length identical across 16 transforms", spread < 1e-12 and var > 10,
          f"relative spread {spread:.2e} (< 1e-12); curvature error ratio {var:.2f} (> 10); "
          f"cross-ratio error {np.mean(res['err_crossratio']):.5f} at N={res['N']}")


# 4

def test_c4_orders(convergence):
    s_raw = convergence["slope_crossratio"]
    s_mod = convergence["slope_modified"]
    s_rich = convergence["slope_richardson_modified"]
    ok = abs(s_raw - 1.5) <= 0.2 and abs(s_mod - 2.0) <= 0.2 and s_rich >= 3.8
    check("4", "convergence orders", ok,
          f"raw {s_raw:.3f} (1.5 +- 0.2), modified {s_mod:.3f} (2.0 +- 0.2), "
          f"modified + Richardson {s_rich:.3f} (>= 3.8)")


# 5

def test_c5a_fcr_saturation(noise):
    i, j = noise["N"].index(128), noise["eps"].index(1e-2)
    v = noise["FCR_rel"][i, j]
    check("5a", "FCR error at eps=1e-2, N=128", 0.05 <= v <= 0.25, f"{v:.4f} (in [0.05, 0.25])")


def test_c5b_fcr_below_length(noise):
    ok = bool(np.all(noise["FCR_rel"] <= noise["L_rel"]))
    worst = float(np.max(noise["FCR_rel"] / noise["L_rel"]))
    check("5b", "FCR error <= L error in every cell", ok, f"max FCR/L ratio {worst:.3f} (<= 1)")


def test_c5c_error_ratio(noise):
    i, j = noise["N"].index(128), noise["eps"].index(1e-3)
    r = noise["L_rel"][i, j] / noise["FCR_rel"][i, j]
    check("5c", "L/FCR error ratio at eps=1e-3, N=128", 4 <= r <= 16, f"{r:.2f} (in [4, 16])")


# 6

@pytest.mark.slow
def test_c6_correlation():
    t0 = time.perf_counter()
    res = ex.shape_experiment(seed=0)
    dt = time.perf_counter() - t0
    ok = res["n_registered"] >= 60 and res["correlation"] > 0.6 and dt < 3600
    check("6", "registration vs FCR distance correlation", ok,
          f"Pearson {res['correlation']:.4f} over {res['n_registered']} pairs (> 0.6, >= 60 pairs), "
          f"{dt:.0f} s (< 3600 s); max asymmetry r_max/r_min {res['max_asymmetry']:.2f}")


# 7

def test_c7_vertices():
    ve = count_vertices(ellipse(400))
    vs = [count_vertices(random_jordan(s, 256)) for s in ex.shape_seeds(0, 16)]
    ok = ve == 4 and all(v % 2 == 0 and v >= 4 for v in vs)
    check("7", "vertex counts", ok, f"ellipse {ve} (4); 16 shapes {vs} (even, >= 4)")


# 8

def test_c8_moebius_curvature():
    parts, ok = [], True
    for m in (0.5, 1.5):
        theta = np.linspace(0, np.pi, 500)
        _, k = moebius_curvature_polyline(np.exp((m + 1j) * theta))
        exact = (1 - m**2) / (2 * m)
        spread = float((k.max() - k.min()) / abs(np.mean(k)))
        err = float(abs(np.mean(k) - exact) / abs(exact))
        ok &= spread < 0.01 and err < 0.01
        parts.append(f"m={m}: mean {np.mean(k):.5f} vs {exact:.5f} (rel {err:.1e}), spread {spread:.1e}")
    check("8", "Moebius curvature of log spirals", ok, "; ".join(parts) + " (both < 1%)")


# 9

def test_c9a_image_invariance(reference):
    dn, dt = reference["median_diff_lambda_n"], reference["median_diff_lambda_t"]
    check("9a", "median |d lambda| over the common mask, h=1/80", dn < 0.05 and dt < 0.05,
          f"lambda_n {dn:.4f}, lambda_t {dt:.4f} (< 0.05); on f >= 0.1: "
          f"{reference['median_diff_lambda_n_bright']:.4f}, {reference['median_diff_lambda_t_bright']:.4f}")


def test_c9b_saddle(reference):
    v = reference["saddle_lambda_n"]
    check("9b", "saddle lambda_n at h=1/80", abs(v - 1.07) <= 0.05,
          f"{v:.4f} at {reference['saddle_location']:.3f} (1.07 +- 0.05)")


def test_c9c_saddle_refinement(reference):
    v1 = reference["saddle_lambda_n"]
    v2 = ex.reference_image_experiment(321)["saddle_lambda_n"]
    ok = abs(v2 - 0.94) < abs(v1 - 0.94)
    check("9c", "halving h moves the saddle value toward 0.94", ok, f"h=1/80 {v1:.4f}, h=1/160 {v2:.4f}")


# 10

def test_c10a_blob_pairs():
    d = ex.blob_pairs_experiment(seed=0)["distances"]
    n_ok = sum(v < 0.02 for v in d)
    check("10a", "Moebius blob pairs overlap", n_ok == 9,
          f"{n_ok}/9 below 0.02; distances {', '.join(f'{v:.4f}' for v in d)}")


def test_c10b_jitter():
    res = ex.jitter_experiment(seed=0)
    check("10b", "jittered blobs separate", res["ratio"] > 5,
          f"mean distinct / mean Moebius {res['ratio']:.1f} (> 5); worst case {res['worst_ratio']:.1f}")


# 11

def test_c11_properties():
    rng = np.random.default_rng(11)
    # cross-ratio invariance
    worst_cr = 0.0
    for _ in range(200):
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
        t = MoebiusTransform(a, b, c, 1.0)
        w = t.apply_array(z)
        base = cross_ratio(*z)
        worst_cr = max(worst_cr, abs(cross_ratio(*w) - base) / max(1.0, abs(base)))
    # FCR cyclic shift
    s = scr(ellipse(256))
    shifted = ScrSignature(np.roll(s.values, 17), s.delta, s.L, s.V)
    shift_err = float(np.max(np.abs(fcr(s).coeffs - fcr(shifted).coeffs)))
    # quotient collapse
    c = random_jordan(0, 512)
    f, g = fcr_of_curve(c, orient=False), fcr_of_curve(c.reversed(), orient=False)
    raw_rev, q_rev = fcr_distance(f, g), fcr_distance_quotient(f, g, True, False)
    h = fcr_of_curve(c.conjugate())
    f1 = fcr_of_curve(c)
    raw_ref, q_ref = fcr_distance(f1, h), fcr_distance_quotient(f1, h, False, True)
    # inverse identity
    prof = arclength_profile(random_jordan(3, 256))
    tt = np.linspace(0, 1, 2001, endpoint=False)
    inv_err = float(np.max(np.abs(prof.t_of(prof.lam(tt)) - tt)))
    # div n against contour curvature
    med = []
    for m in (81, 161, 321):
        img = im.reference_image(m)
        fld = im.invariant_fields(img)
        q, kap = im.contour_curvature(im.level_set(img, 0.5)[0], img.h)
        dv, ok = fld.interpolate(q, "div_n")
        med.append(float(np.median(np.abs(kap[ok] + dv[ok]))))
    first_order = med[0] / med[1] > 1.6 and med[1] / med[2] > 1.6
    ok = (worst_cr < 1e-10 and shift_err < 1e-14 and q_rev < 0.05 * raw_rev and q_ref < 0.05 * raw_ref
          and inv_err < 1e-10 and first_order)
    check("11", "property suite", ok,
          f"cross-ratio {worst_cr:.1e} (< 1e-10); shift {shift_err:.1e} (< 1e-14); "
          f"reversal {q_rev:.1e} vs {raw_rev:.1e}; reflection {q_ref:.1e} vs {raw_ref:.1e}; "
          f"t(lambda(t)) {inv_err:.1e} (< 1e-10); div n vs contour curvature medians "
          f"{', '.join(f'{v:.4f}' for v in med)} (O(h))")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

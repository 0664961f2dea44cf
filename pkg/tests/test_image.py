import numpy as np
import pytest

from moebius_sig.errors import EmptyLevelSet, MalformedImage, PoleInDomain
from moebius_sig.image import (
    REFERENCE_TRANSFORM,
    ScalarImage,
    contour_curvature,
    invariant_fields,
    jittered_blobs,
    level_set,
    pullback,
    random_blobs,
    random_inversion,
    random_moebius,
    read_image_csv,
    read_pgm,
    reference_function,
    reference_image,
    sample,
    signature_curve,
    signature_distance,
    write_image_csv,
    write_pgm,
    write_signature_csv,
)
from moebius_sig.moebius import MoebiusTransform, compose

K_RADIAL = 3.0


def radial(z):
    return np.exp(-K_RADIAL * np.abs(z) ** 2)


def test_reference_values():
    assert reference_function(0j) == 1.0
    y = np.linspace(-1, 1, 41)
    for x in (-1.0, 1.0):
        assert np.all(reference_function(x + 1j * y) <= np.exp(-4))
    img = reference_image(161)
    assert img.grid.max() == 1.0
    assert img.grid[80, 80] == 1.0
    assert img.h == pytest.approx(1 / 80)


def test_image_validation():
    with pytest.raises(MalformedImage):
        ScalarImage(np.zeros((5, 5)))
    with pytest.raises(MalformedImage):
        ScalarImage(np.zeros((9, 10)))
    g = np.zeros((9, 9))
    g[3, 3] = np.nan
    with pytest.raises(MalformedImage):
        ScalarImage(g)
    with pytest.raises(ValueError):
        sample(radial, 40)


def test_pullback_identity_and_inverse():
    ident = MoebiusTransform(1, 0, 0, 1)
    assert np.array_equal(pullback(reference_function, ident, 81).grid, reference_image(81).grid)
    t = REFERENCE_TRANSFORM
    # pulling back by t then by t^{-1} is the pullback by the identity
    g = lambda z: reference_function(t.inverse().apply_array(z))  # f o t^{-1}
    twice = pullback(g, t.inverse(), 81)
    assert np.max(np.abs(twice.grid - reference_image(81).grid)) < 1e-12
    comp = pullback(reference_function, compose(t.inverse(), t), 81)
    assert np.max(np.abs(comp.grid - reference_image(81).grid)) < 1e-12


def test_pullback_pole():
    # inverse of z / (1 + z) is z / (1 - z), pole at 1
    with pytest.raises(PoleInDomain):
        pullback(reference_function, MoebiusTransform(1, 0, 1, 1), 81)


def test_radial_lambda_t_vanishes():
    # zero for the continuous image; the grid leaves an O(h^2) residue
    med = []
    for m in (81, 161, 321):
        img = sample(radial, m)
        f = invariant_fields(img)
        z = img.points()
        ring = f.mask & (np.abs(z) > 0.2) & (np.abs(z) < 0.8)
        med.append(np.median(np.abs(f.lambda_t[ring])))
        assert not f.mask[:2].any() and not f.mask[:, -2:].any()
    assert med[1] < 0.01
    assert med[0] / med[1] == pytest.approx(4, rel=0.1)
    assert med[1] / med[2] == pytest.approx(4, rel=0.1)


def test_radial_contour_is_circle():
    img = sample(radial, 161)
    polys = level_set(img, 0.5)
    assert len(polys) == 1
    r = np.sqrt(np.log(2) / K_RADIAL)
    assert np.max(np.abs(np.abs(polys[0]) - r)) < img.h
    # higher intensity on the left: counter-clockwise around the maximum
    z = polys[0]
    assert 0.5 * np.sum(np.imag(np.conj(z) * np.roll(z, -1))) > 0


def test_level_above_max_is_empty():
    img = sample(lambda z: 0.8 * radial(z), 81)
    assert level_set(img, 0.9) == []
    with pytest.raises(EmptyLevelSet):
        signature_curve(img, 0.9)
    with pytest.raises(ValueError):
        level_set(img, 1.5)


def test_reference_level_set_single_loop():
    img = reference_image()
    polys = level_set(img, 0.5)
    assert len(polys) == 1
    assert np.abs(polys[0][-1] - polys[0][0]) < 2 * img.h


def test_saddle_cell_rule():
    # a checkerboard saddle: centre average above the level joins the high corners
    g = np.zeros((9, 9))
    g[4, 4] = g[5, 5] = 1.0
    g[4, 5] = g[5, 4] = 0.0
    high = ScalarImage(g.copy())
    polys = level_set(high, 0.3)
    assert len(polys) == 1  # the two bumps connect through the saddle cell
    g[4, 4] = g[5, 5] = 0.7
    low = level_set(ScalarImage(g), 0.5)
    assert len(low) == 2  # centre average 0.35 < 0.5 separates them


def test_radial_signature():
    img = sample(radial, 161)
    s = signature_curve(img, 0.5)
    assert np.max(np.abs(s.u)) < 0.02
    assert np.all(np.abs(s.coords) < np.pi / 2)


def test_divergence_matches_contour_curvature():
    rel, med = [], []
    for m in (81, 161, 321):
        img = reference_image(m)
        f = invariant_fields(img)
        q, kappa = contour_curvature(level_set(img, 0.5)[0], img.h)
        div, ok = f.interpolate(q, "div_n")
        # n points uphill, so the level set turns with curvature -div n
        e = np.abs(kappa[ok] + div[ok])
        rel.append(np.max(e) / np.max(np.abs(div[ok])))
        med.append(np.median(e))
    # first order: each halving of h at least 1.6x smaller
    assert med[0] / med[1] > 1.6 and med[1] / med[2] > 1.6
    assert rel[2] < rel[1] < rel[0]
    assert rel[2] < 0.01


def test_blow_up_near_maximum():
    img = reference_image(161)
    f = invariant_fields(img)
    z = img.points()
    peaks = []
    for r in (0.3, 0.15, 0.075):
        ring = f.mask & (np.abs(np.abs(z) - r) < img.h)
        peaks.append(np.max(np.abs(f.lambda_t[ring]) + np.abs(f.lambda_n[ring])))
    assert peaks[0] < peaks[1] < peaks[2]


def test_blobs_reproducible_and_scaled():
    a, b = random_blobs(4, seed=5), random_blobs(4, seed=5)
    assert a.to_dict() == b.to_dict()
    img = sample(a, 161)
    assert img.grid.min() == pytest.approx(0.0, abs=1e-12)
    assert img.grid.max() == pytest.approx(1.0, abs=1e-12)
    j = jittered_blobs(a, seed=1)
    ratio = np.asarray(j.amplitudes) / np.asarray(a.amplitudes)
    assert np.all(np.abs(ratio - 1) <= 0.05 + 1e-12)
    assert random_blobs(4, seed=6).to_dict() != a.to_dict()


def test_random_transforms_keep_pole_away():
    for s in range(20):
        t = random_moebius(s)
        assert t.b == 0 and t.d == 1
        assert 0.7 <= abs(t.a) <= 1.3
        pullback(reference_function, t, 41)
        r = random_inversion(s)
        assert r.a == 1 and r.b == 0 and r.d == 1


def test_moebius_pair_signatures_overlap():
    f = random_blobs(4, seed=2)
    t = random_moebius(2)
    s1 = signature_curve(sample(f), 0.5)
    s2 = signature_curve(pullback(f, t), 0.5)
    assert signature_distance(s1, s1) == 0.0
    assert signature_distance(s1, s2) < 0.02


def test_pgm_roundtrip(tmp_path):
    img = reference_image(41)
    p = tmp_path / "f.pgm"
    write_pgm(img, p)
    lines = p.read_text().splitlines()
    assert lines[:3] == ["P2", "41 41", "65535"]
    back = read_pgm(p)
    assert np.max(np.abs(back.grid - img.grid)) <= 0.5 / 65535 + 1e-15
    # top row of the file is the largest y
    assert lines[3].split()[20] == str(round(img.grid[-1, 20] * 65535))


def test_pgm_malformed(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_text("P5\n2 2\n255\n")
    with pytest.raises(MalformedImage):
        read_pgm(p)
    p.write_text("P2\n9 9\n255\n1 2 3\n")
    with pytest.raises(MalformedImage):
        read_pgm(p)


def test_image_csv_roundtrip(tmp_path):
    img = sample(random_blobs(4, seed=1), 41)
    p = tmp_path / "f.csv"
    write_image_csv(img, p)
    assert np.array_equal(read_image_csv(p).grid, img.grid)


def test_signature_csv(tmp_path):
    s = signature_curve(reference_image(), 0.5)
    p = tmp_path / "s.csv"
    write_signature_csv(s, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "level,x,y,lambda_n,lambda_t,sig_u,sig_v"
    assert len(lines) == len(s.points) + 1
    row = [float(v) for v in lines[1].split(",")]
    assert row[5] == pytest.approx(np.arctan(row[4] / 4))

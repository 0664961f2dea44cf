import mpmath
import numpy as np
import pytest

from moebius_sig.curve import (
    SampledCurve, add_noise, circle, ellipse, from_fourier, grid_exp, is_simple,
    random_fourier_params, random_jordan, read_curve, write_curve,
)
from moebius_sig.errors import MalformedCsv, NonUniformGrid, SampleCountTooSmall


def test_minimum_samples():
    with pytest.raises(SampleCountTooSmall):
        SampledCurve(np.zeros(7))


def test_points_read_only_and_cyclic_index():
    c = ellipse(16)
    with pytest.raises(ValueError):
        c.points[0] = 0
    assert c[16] == c[0] and c[-1] == c.points[-1]
    assert np.array_equal(c.roll(3)[0], c.points[3])


@pytest.mark.parametrize("n", [25, 100, 3200])
def test_grid_exp_matches_high_precision(n):
    e = grid_exp(n, 0.25, 3)
    mpmath.mp.dps = 30
    ref = np.array([complex(mpmath.expjpi(2 * 3 * mpmath.mpf(4 * i + 1) / (4 * n))) for i in range(0, n, max(1, n // 50))])
    assert np.max(np.abs(e[:: max(1, n // 50)] - ref)) < 4e-16


def test_ellipse_and_circle_geometry():
    c = ellipse(64)
    assert np.allclose(c.points.real ** 2 + (c.points.imag / 2) ** 2, 1)
    assert c.signed_area() > 0
    assert c.reversed().signed_area() < 0
    assert c.reversed().positively_oriented().signed_area() > 0
    r = circle(32, 2.0, 1 + 1j)
    assert np.allclose(np.abs(r.points - (1 + 1j)), 2)


def test_interpolate_hits_samples():
    c = ellipse(32)
    assert np.allclose(c.interpolate(c.t), c.points)
    assert np.allclose(c.interpolate(c.t + 1), c.points)


def test_fourier_params_reproducible_and_shape():
    p, q = random_fourier_params(7), random_fourier_params(7)
    assert p.coefficients == q.coefficients
    assert sorted(p.coefficients) == list(range(-4, 5))
    a1 = p.coefficients[1]
    assert abs(abs(a1) - 1) < 1e-15
    u = p.coefficients[-1] / a1
    assert abs(u.imag) < 1e-12 and 0 <= u.real < 0.6
    c = from_fourier(p, 64)
    assert np.allclose(c.points, p.evaluate(c.t))


def test_random_shapes_mostly_simple():
    simple = sum(is_simple(random_jordan(s, 128)) for s in range(40))
    assert simple >= 30


def test_is_simple_detects_figure_eight():
    t = (np.arange(64) + 0.25) / 64
    eight = np.sin(2 * np.pi * t) + 1j * np.sin(4 * np.pi * t)
    assert not is_simple(SampledCurve(eight))
    assert is_simple(ellipse(64))


def test_noise_model():
    c = ellipse(4096)
    assert add_noise(c, 0.0, 1) is c
    d = add_noise(c, 1e-2, 3).points - c.points
    assert abs(np.std(d.real) - 1e-2) < 1e-3 and abs(np.std(d.imag) - 1e-2) < 1e-3
    assert np.array_equal(add_noise(c, 1e-2, 3).points, add_noise(c, 1e-2, 3).points)


def test_csv_roundtrip(tmp_path):
    c = random_jordan(3, 40)
    p = tmp_path / "c.csv"
    write_curve(c, p)
    d = read_curve(p)
    assert np.array_equal(c.points, d.points) and d.phase == pytest.approx(c.phase)
    assert p.read_text().splitlines()[0] == "t,x,y"


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(MalformedCsv):
        read_curve(bad)
    rows = "\n".join(f"{t},{np.cos(t)},{np.sin(t)}" for t in np.sort(np.random.default_rng(0).random(20)))
    bad.write_text("t,x,y\n" + rows + "\n")
    with pytest.raises(NonUniformGrid):
        read_curve(bad)
    bad.write_text("t,x,y\n0,1,0\n0.5,0,1\n")
    with pytest.raises(SampleCountTooSmall):
        read_curve(bad)

"""Discrete Moebius arclength.

Two local estimators of the arclength of each cell are provided: one from
circumcircle curvatures (Euclidean invariant only) and one from the
cross-ratio of four consecutive samples (exactly Moebius invariant). The
*modified* method integrates the square root of a piecewise-linear
interpolant of the signed squared density in closed form, which removes the
square-root singularities at the vertices.

Cell value ``k`` of every per-cell array belongs to the parameter
``t_{k+3/2} = (k + 3/2 + phase) h``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .curve import SampledCurve
from .errors import AtVertex, DegenerateConfiguration, DegenerateTriple, PossibleUndersampling
from .moebius import cross_ratios

__all__ = [
    "METHODS",
    "ArclengthProfile",
    "CurvatureSamples",
    "circumcircle_curvature",
    "circumcircle_curvatures",
    "curvature_samples",
    "signed_density_squared",
    "density_curvature_method",
    "density_crossratio_method",
    "density_oracle_ellipse",
    "ellipse_exact_length",
    "moebius_length",
    "richardson_step",
    "richardson_length",
    "observed_orders",
    "arclength_profile",
    "profile_from_density",
    "moebius_curvature_polyline",
    "count_vertices",
    "moebius_curvature",
]

METHODS = ("curvature", "crossratio", "modified")
VERTEX_TOL = 1e-9
VERTEX_FLOOR = 1e-13
AT_VERTEX_TOL = 1e-12


def _heron_area(a, b, c):
    """Kahan's cancellation-free Heron formula (sides in any order)."""
    s = np.sort(np.stack(np.broadcast_arrays(a, b, c)), axis=0)[::-1]
    a, b, c = s[0], s[1], s[2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def circumcircle_curvatures(A, B, C) -> np.ndarray:
    """Signed curvature of the circles through A, B, C (vectorised).

    Positive when A -> B -> C runs counterclockwise; zero for collinear
    points.
    """
    A, B, C = (np.asarray(p, dtype=complex) for p in (A, B, C))
    a, b, c = np.abs(B - A), np.abs(C - B), np.abs(A - C)
    if np.any((a == 0) | (b == 0) | (c == 0)):
        raise DegenerateTriple("two of the three points coincide")
    orient = np.sign(np.imag(np.conj(B - A) * (C - A)))
    return orient * 4.0 * _heron_area(a, b, c) / (a * b * c)


def circumcircle_curvature(A, B, C) -> float:
    return float(circumcircle_curvatures(A, B, C))


@dataclass(frozen=True)
class CurvatureSamples:
    """kappa[k] is the curvature through z_k, z_{k+1}, z_{k+2}; ds[k] = |z_{k+2} - z_{k+1}|."""

    kappa: np.ndarray
    ds: np.ndarray


def curvature_samples(c: SampledCurve) -> CurvatureSamples:
    z = c.points
    kappa = circumcircle_curvatures(z, c.roll(1), c.roll(2))
    return CurvatureSamples(kappa, np.abs(c.roll(2) - c.roll(1)))


def density_curvature_method(c: SampledCurve) -> np.ndarray:
    """Per-cell arclength sqrt(|kappa_{k+1} - kappa_k| |z_{k+2} - z_{k+1}|)."""
    cs = curvature_samples(c)
    dkappa = np.roll(cs.kappa, -1) - cs.kappa
    return np.sqrt(np.abs(dkappa) * cs.ds)


def _log1p_minus_x(x):
    """log(1 + x) - x without cancellation for small complex x."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0)
    acc = np.zeros_like(xs)
    power = xs * xs
    for k in range(2, 40):
        acc += (-1) ** (k + 1) * power / k
        power = power * xs
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log1p(np.where(small, 0, x)) - np.where(small, 0, x)
    return np.where(small, acc, direct)


def log_cross_ratio_imag(z1, z2, z3, z4) -> np.ndarray:
    """Im log CR(z1, z2, z3, z4) for nearby, nearly equispaced points.

    With d_k the successive differences, CR = (2 + e1)(2 + e3) / (3 + e1 + e3)
    where e1 = (d1 - d2)/d2 and e3 = (d3 - d2)/d2. Expanding the logarithms
    around 2, 2 and 3 keeps the O(h^2) result free of the O(1) cancellation
    that the direct formula suffers.
    """
    z1, z2, z3, z4 = (np.asarray(z, dtype=complex) for z in (z1, z2, z3, z4))
    d1, d2, d3 = z2 - z1, z3 - z2, z4 - z3
    if np.any((d1 == 0) | (d2 == 0) | (d3 == 0) | (d1 + d2 == 0) | (d2 + d3 == 0)
              | (d1 + d2 + d3 == 0)):
        raise DegenerateConfiguration("consecutive samples coincide")
    e1 = (d1 - d2) / d2
    e3 = (d3 - d2) / d2
    e13 = ((d1 - d2) + (d3 - d2)) / d2
    val = e13 / 6 + _log1p_minus_x(e1 / 2) + _log1p_minus_x(e3 / 2) - _log1p_minus_x(e13 / 3)
    im = np.imag(val)
    return np.mod(im + np.pi, 2 * np.pi) - np.pi


def _log_cross_ratio_imag(c: SampledCurve) -> np.ndarray:
    im = log_cross_ratio_imag(c.points, c.roll(1), c.roll(2), c.roll(3))
    if not np.all(np.isfinite(im)):
        raise DegenerateConfiguration("non-finite cross-ratio")
    if np.any(np.abs(im) > np.pi / 2):
        warnings.warn("|Im log CR| exceeds pi/2; the curve may be undersampled",
                      PossibleUndersampling, stacklevel=3)
    return im


def signed_density_squared(c: SampledCurve) -> np.ndarray:
    """6 Im log CR(z_k, ..., z_{k+3}), i.e. h^2 (d lambda/dt)^2 with sign.

    The sign follows the sign of the curvature derivative (for a positively
    oriented curve) so the sequence crosses zero smoothly at vertices.
    """
    return 6.0 * _log_cross_ratio_imag(c)


def density_crossratio_method(c: SampledCurve) -> np.ndarray:
    """Per-cell arclength sqrt(6 |Im log CR|)."""
    return np.sqrt(np.abs(signed_density_squared(c)))


def density_oracle_ellipse(t):
    """Exact d lambda/dt of cos 2 pi t + 2i sin 2 pi t."""
    t = np.asarray(t, dtype=float)
    out = 12 * np.pi * np.sqrt(np.abs(np.sin(4 * np.pi * t))) / (5 + 3 * np.cos(4 * np.pi * t))
    return out if out.ndim else float(out)


def ellipse_exact_length() -> float:
    """Moebius length of the test ellipse by algebraic-weight quadrature."""
    # On [0, 1/4] the density is sqrt(t (1/4 - t)) times a smooth function;
    # with x = 4t, sin(4 pi t) / (t (1/4 - t)) = 16 sin(pi x) / (x (1 - x)).
    def smooth(t):
        x = 4.0 * t
        ratio = np.pi * (np.sinc(x) / (1 - x) if x <= 0.5 else np.sinc(1 - x) / x)
        return 12 * np.pi * 4.0 * np.sqrt(ratio) / (5 + 3 * np.cos(4 * np.pi * t))

    val, _ = integrate.quad(smooth, 0.0, 0.25, weight="alg", wvar=(0.5, 0.5),
                            epsabs=1e-14, epsrel=1e-14, limit=200)
    return 4.0 * val


def moebius_length(c: SampledCurve, method: str = "crossratio") -> float:
    """Total Moebius length as the sum of per-cell values."""
    if method == "curvature":
        return float(np.sum(density_curvature_method(c)))
    if method == "crossratio":
        return float(np.sum(density_crossratio_method(c)))
    if method == "modified":
        return arclength_profile(c).total_length
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def richardson_step(coarse, fine, order: float, ratio: float = 2.0):
    """Eliminate an error term of the given order from two estimates."""
    w = ratio**order
    return (w * np.asarray(fine) - np.asarray(coarse)) / (w - 1.0)


def richardson_length(l_h: float, l_h2: float, l_h4: float) -> float:
    """Two Richardson steps on lengths at mesh ratios 1 : 1/2 : 1/4.

    The first removes the h^(3/2) vertex term, the second the h^2 term.
    """
    r1 = richardson_step(l_h, l_h2, 1.5)
    r2 = richardson_step(l_h2, l_h4, 1.5)
    return float(richardson_step(r1, r2, 2.0))


def observed_orders(errors, ratio: float = 2.0) -> np.ndarray:
    """log(e_k / e_{k+1}) / log(ratio) for successive refinements."""
    e = np.abs(np.asarray(errors, dtype=float))
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


def _piece_lengths(p, q, du):
    """Closed-form integral of sqrt(p + q u) over [0, du] with p, p + q du >= 0."""
    P = np.maximum(p + q * du, 0.0)
    sp, sP = np.sqrt(p), np.sqrt(P)
    den = sp + sP
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (2.0 / 3.0) * du * (p + sp * sP + P) / den
    return np.where(den > 0, val, 0.0)


@dataclass(frozen=True)
class ArclengthProfile:
    """Exact lambda(t) for a piecewise-linear squared density.

    ``density_sq`` are the signed per-cell values of (d lambda/dt)^2 at
    ``knots``. Internally [0, 1] is cut into pieces on which |f| is linear
    and of one sign, ``|f|(t) = p + q (t - start)``.
    """

    density_sq: np.ndarray
    knots: np.ndarray
    starts: np.ndarray
    widths: np.ndarray
    p: np.ndarray
    q: np.ndarray
    cumulative: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.cumulative[-1])

    def lam(self, t):
        """Moebius arclength from t = 0, extended so lambda(t + 1) = lambda(t) + L."""
        t = np.asarray(t, dtype=float)
        wraps = np.floor(t)
        tt = t - wraps
        k = np.clip(np.searchsorted(self.starts, tt, side="right") - 1, 0, self.starts.size - 1)
        u = np.clip(tt - self.starts[k], 0.0, self.widths[k])
        out = self.cumulative[k] + _piece_lengths(self.p[k], self.q[k], u) + wraps * self.total_length
        return out if out.ndim else float(out)

    def t_of(self, lam):
        """Inverse of :meth:`lam`."""
        lam = np.asarray(lam, dtype=float)
        L = self.total_length
        wraps = np.floor(lam / L)
        ll = lam - wraps * L
        k = np.clip(np.searchsorted(self.cumulative, ll, side="right") - 1, 0, self.starts.size - 1)
        rem = np.maximum(ll - self.cumulative[k], 0.0)
        p, q = self.p[k], self.q[k]
        A = p**1.5
        X = 1.5 * q * rem
        g = np.maximum(A + X, 0.0) ** (2.0 / 3.0)
        den = g * g + g * p + p * p
        with np.errstate(divide="ignore", invalid="ignore"):
            u = 1.5 * rem * (2 * A + X) / den
        u = np.where(den > 0, np.clip(u, 0.0, self.widths[k]), 0.0)
        out = self.starts[k] + u + wraps
        return out if out.ndim else float(out)


def arclength_profile(c: SampledCurve) -> ArclengthProfile:
    """Exact lambda(t) and t(lambda) for the linear interpolant of 6 Im log CR / h^2."""
    f = signed_density_squared(c) * c.n**2
    return profile_from_density(f, (np.arange(c.n) + 1.5 + c.phase) * c.h)


def profile_from_density(f, knots) -> ArclengthProfile:
    """Profile of the periodic piecewise-linear interpolant of signed values
    ``f`` given at parameters ``knots`` (taken mod 1)."""
    f = np.asarray(f, dtype=float)
    knots = np.asarray(knots, dtype=float)
    order = np.argsort(np.mod(knots, 1.0), kind="stable")
    knots_mod = np.mod(knots, 1.0)
    x, y = knots_mod[order], f[order]
    # close the period with values interpolated at t = 0 and t = 1
    gap = x[0] + 1.0 - x[-1]
    y0 = y[-1] + (y[0] - y[-1]) * (1.0 - x[-1]) / gap
    xs = np.concatenate([[0.0], x, [1.0]])
    ys = np.concatenate([[y0], y, [y0]])

    x0, x1 = xs[:-1], xs[1:]
    f0, f1 = ys[:-1], ys[1:]
    cross = (f0 * f1) < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(cross, x0 + (x1 - x0) * f0 / (f0 - f1), x1)
    # each segment becomes one or two one-signed pieces
    a_start = x0
    a_w = root - x0
    a_p = np.abs(f0)
    a_end = np.where(cross, 0.0, np.abs(f1))
    b_start = root
    b_w = np.where(cross, x1 - root, 0.0)
    b_p = np.zeros_like(f0)
    b_end = np.abs(f1)

    starts = np.stack([a_start, b_start], axis=1).ravel()
    widths = np.stack([a_w, b_w], axis=1).ravel()
    p = np.stack([a_p, b_p], axis=1).ravel()
    end = np.stack([a_end, b_end], axis=1).ravel()
    keep = widths > 0
    starts, widths, p, end = starts[keep], widths[keep], p[keep], end[keep]
    q = (end - p) / widths
    lengths = _piece_lengths(p, q, widths)
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    return ArclengthProfile(
        density_sq=f, knots=knots,
        starts=starts, widths=widths, p=p, q=q, cumulative=cumulative,
    )


def count_vertices(c: SampledCurve) -> int:
    """Number of cyclic sign changes of the discrete curvature derivative.

    The sign of Im log CR of consecutive quadruples is used, which agrees
    with the sign of kappa' and is itself Moebius invariant. Entries below
    ``VERTEX_TOL * max`` are ignored; a curve whose largest entry is below
    ``VERTEX_FLOOR`` (a circle) has no vertices by convention.
    """
    s = _log_cross_ratio_imag(c)
    peak = np.max(np.abs(s))
    if peak < VERTEX_FLOOR:
        return 0
    sig = np.sign(s[np.abs(s) >= VERTEX_TOL * peak])
    return int(np.count_nonzero(sig != np.roll(sig, -1)))


def moebius_curvature(kappa, dkappa, d2kappa, d3kappa):
    """Moebius (inversive) curvature from arclength derivatives of kappa.

    (4 k' (k''' - k^2 k') - 5 k''^2) / (8 k'^3)
    """
    k, k1, k2, k3 = (np.asarray(v, dtype=float) for v in (kappa, dkappa, d2kappa, d3kappa))
    if np.any(np.abs(k1) < AT_VERTEX_TOL):
        raise AtVertex("curvature derivative vanishes")
    out = (4 * k1 * (k3 - k**2 * k1) - 5 * k2**2) / (8 * k1**3)
    return out if out.ndim else float(out)


def moebius_curvature_polyline(points) -> tuple[np.ndarray, np.ndarray]:
    """Moebius curvature along an open sampled curve.

    kappa comes from circumcircles of consecutive triples; its arclength
    derivatives from second-order differences on the chord-length grid.
    Third differences amplify roundoff like eps / h^3, so a few hundred
    samples per feature give the best accuracy; finer sampling does not
    help. Returns (arclength, kappa_moebius) at the interior samples, five
    samples from either end dropped.
    """
    z = np.asarray(points, dtype=complex)
    if z.size < 16:
        raise ValueError("need at least 16 points")
    k = circumcircle_curvatures(z[:-2], z[1:-1], z[2:])
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(z)))])[1:-1]
    k1 = np.gradient(k, s, edge_order=2)
    k2 = np.gradient(k1, s, edge_order=2)
    k3 = np.gradient(k2, s, edge_order=2)
    sl = slice(5, -5)
    return s[sl], np.asarray(moebius_curvature(k[sl], k1[sl], k2[sl], k3[sl]))

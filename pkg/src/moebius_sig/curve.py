"""Sampled closed curves, curve generators, the noise model and CSV I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedCsv, NonUniformGrid, SampleCountTooSmall
from .moebius import MoebiusTransform

__all__ = [
    "MIN_SAMPLES",
    "SampledCurve",
    "FourierShapeParams",
    "make_rng",
    "ellipse",
    "circle",
    "from_fourier",
    "random_fourier_params",
    "random_jordan",
    "add_noise",
    "is_simple",
    "read_curve",
    "write_curve",
]

MIN_SAMPLES = 8
DEFAULT_PHASE = 0.25
DEFAULT_JORDAN_SAMPLES = 256


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; every experiment seeds one explicitly."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SampledCurve:
    """N samples z_i = z(t_i) of a closed curve, t_i = (i + phase) / N.

    Indexing is cyclic. ``points`` is stored read-only.
    """

    points: np.ndarray
    phase: float = DEFAULT_PHASE
    closed: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=complex).ravel()
        if pts.size < MIN_SAMPLES:
            raise SampleCountTooSmall(f"need at least {MIN_SAMPLES} samples, got {pts.size}")
        if not self.closed:
            raise ValueError("only closed curves are supported")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def h(self) -> float:
        return 1.0 / self.points.size

    @property
    def t(self) -> np.ndarray:
        return (np.arange(self.n) + self.phase) * self.h

    def __getitem__(self, i):
        return self.points[np.mod(i, self.n)]

    def roll(self, k: int) -> np.ndarray:
        """Samples shifted so that entry i is z_{i+k}."""
        return np.roll(self.points, -k)

    def transformed(self, t: MoebiusTransform) -> "SampledCurve":
        return SampledCurve(t.apply_array(self.points), self.phase)

    def reversed(self) -> "SampledCurve":
        return SampledCurve(self.points[::-1], self.phase)

    def conjugate(self) -> "SampledCurve":
        return SampledCurve(np.conj(self.points), self.phase)

    def signed_area(self) -> float:
        z = self.points
        return 0.5 * float(np.sum(np.imag(np.conj(z) * np.roll(z, -1))))

    def positively_oriented(self) -> "SampledCurve":
        return self if self.signed_area() >= 0 else self.reversed()

    def interpolate(self, t) -> np.ndarray:
        """Piecewise-linear evaluation at arbitrary (periodic) parameters."""
        u = np.asarray(t, dtype=float) * self.n - self.phase
        i0 = np.floor(u).astype(int)
        w = u - i0
        z = self.points
        return (1 - w) * z[np.mod(i0, self.n)] + w * z[np.mod(i0 + 1, self.n)]


@dataclass(frozen=True)
class FourierShapeParams:
    """Coefficients a_n, n = -4..4, of z(t) = sum a_n exp(2 pi i n t)."""

    coefficients: dict
    seed: int | None = None

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        z = np.zeros(t.shape, dtype=complex)
        for n, a in sorted(self.coefficients.items()):
            z += a * np.exp(2j * np.pi * n * t)
        return z

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        z = np.zeros(t.shape, dtype=complex)
        for n, a in sorted(self.coefficients.items()):
            z += 2j * np.pi * n * a * np.exp(2j * np.pi * n * t)
        return z


def _grid(n_samples: int, phase: float) -> np.ndarray:
    if n_samples < MIN_SAMPLES:
        raise SampleCountTooSmall(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    return (np.arange(n_samples) + phase) / n_samples


_QUARTER_TURNS = np.array([1, 1j, -1, -1j])


def grid_exp(n_samples: int, phase: float, freq: int = 1) -> np.ndarray:
    """exp(2 pi i freq t_j) on the sample grid, accurate to a few ulp.

    When 4 * phase is an integer the angle is reduced exactly in integer
    arithmetic to a quarter turn plus a remainder of at most 1/8 turn;
    rounding in 2 pi t otherwise perturbs the spacing of fine grids enough
    to show up in extrapolated lengths.
    """
    t = _grid(n_samples, phase)
    q4 = 4 * phase
    if q4 != round(q4):
        return np.exp(2j * np.pi * np.mod(freq * t, 1.0))
    units = 4 * n_samples
    m = np.mod(freq * (4 * np.arange(n_samples, dtype=np.int64) + int(round(q4))), units)
    quarter = np.round(m / n_samples).astype(np.int64)
    r = m - quarter * n_samples
    return _QUARTER_TURNS[np.mod(quarter, 4)] * np.exp(1j * np.pi * r / (2 * n_samples))


def ellipse(n_samples: int, phase: float = DEFAULT_PHASE) -> SampledCurve:
    """cos 2 pi t + 2i sin 2 pi t."""
    e = grid_exp(n_samples, phase)
    return SampledCurve(e.real + 2j * e.imag, phase)


def circle(n_samples: int, radius: float = 1.0, center: complex = 0j,
           phase: float = DEFAULT_PHASE) -> SampledCurve:
    return SampledCurve(center + radius * grid_exp(n_samples, phase), phase)


def from_fourier(params: FourierShapeParams, n_samples: int,
                 phase: float = DEFAULT_PHASE) -> SampledCurve:
    z = np.zeros(n_samples, dtype=complex)
    for n, a in sorted(params.coefficients.items()):
        z += a * grid_exp(n_samples, phase, n)
    return SampledCurve(z, phase)


def random_fourier_params(seed: int) -> FourierShapeParams:
    """Draw a_n for the random smooth Jordan curve distribution.

    Re a_n and Im a_n are normal with *standard deviation* 1/(1+|n|^3) for
    n != +-1;
    a_1 has unit modulus and uniform argument; a_{-1} = u a_1, u ~ U(0, 0.6).
    """
    rng = make_rng(seed)
    coeffs = {}
    for n in range(-4, 5):
        if n in (-1, 1):
            continue
        std = 1.0 / (1.0 + abs(n) ** 3)
        re, im = rng.normal(0.0, std, size=2)
        coeffs[n] = complex(re, im)
    a1 = np.exp(1j * rng.uniform(0.0, 2 * np.pi))
    u = rng.uniform(0.0, 0.6)
    coeffs[1] = complex(a1)
    coeffs[-1] = complex(u * a1)
    return FourierShapeParams(dict(sorted(coeffs.items())), seed)


def random_jordan(seed: int, n_samples: int = DEFAULT_JORDAN_SAMPLES,
                  phase: float = DEFAULT_PHASE) -> SampledCurve:
    return from_fourier(random_fourier_params(seed), n_samples, phase)


def add_noise(c: SampledCurve, sigma: float, seed: int) -> SampledCurve:
    """Independent complex Gaussian noise, per-axis standard deviation sigma."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return c
    rng = make_rng(seed)
    noise = rng.normal(0.0, sigma, size=(c.n, 2))
    return SampledCurve(c.points + noise[:, 0] + 1j * noise[:, 1], c.phase)


def is_simple(c: SampledCurve) -> bool:
    """True when no two non-adjacent polygon edges intersect."""
    z = c.points
    p, q = z, np.roll(z, -1)
    n = z.size

    def orient(a, b, x):
        return np.sign(np.imag(np.conj(b - a) * (x - a)))

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        d1 = orient(p[i], q[i], p[j])
        d2 = orient(p[i], q[i], q[j])
        d3 = orient(p[j], q[j], p[i])
        d4 = orient(p[j], q[j], q[i])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return False
    return True


def write_curve(c: SampledCurve, path) -> None:
    """CSV with header ``t,x,y``; values written with round-trip precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("t,x,y\n")
        for t, z in zip(c.t, c.points):
            fh.write(f"{float(t)!r},{float(z.real)!r},{float(z.imag)!r}\n")


def read_curve(path, grid_tol: float = 1e-9) -> SampledCurve:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "x", "y"} <= set(reader.fieldnames):
            raise MalformedCsv(f"{path}: expected header t,x,y")
        try:
            rows = [(float(r["t"]), float(r["x"]), float(r["y"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise MalformedCsv(f"{path}: {exc}") from exc
    if len(rows) < MIN_SAMPLES:
        raise SampleCountTooSmall(f"{path}: only {len(rows)} rows")
    data = np.array(rows)
    n = len(rows)
    t = data[:, 0]
    phase = t[0] * n
    expected = (np.arange(n) + phase) / n
    if np.max(np.abs(t - expected)) > grid_tol or not 0 <= t[0] < 1.0 / n + grid_tol:
        raise NonUniformGrid(f"{path}: t is not a sorted uniform grid of spacing 1/{n}")
    return SampledCurve(data[:, 1] + 1j * data[:, 2], float(phase))

"""Moebius transformations of the Riemann sphere and the cross-ratio.

The point at infinity is represented by the singleton :data:`INF` rather than
by a large complex number, so that limits are taken symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateConfiguration, InvalidTransform

__all__ = [
    "INF",
    "MoebiusTransform",
    "apply",
    "compose",
    "inverse",
    "cross_ratio",
    "cross_ratios",
    "is_infinite",
]

DET_TOL = 1e-14
COINCIDENCE_TOL = 1e-13


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_infinite(z) -> bool:
    return z is INF


@dataclass(frozen=True)
class MoebiusTransform:
    """z -> (a z + b) / (c z + d).

    Coefficients are kept as given; no normalisation to unit determinant is
    applied, so two transforms may represent the same map up to scale.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            value = complex(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidTransform(f"coefficient {name} is not finite")
            object.__setattr__(self, name, value)
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0 or abs(self.det) < DET_TOL * scale**2:
            raise InvalidTransform("ad - bc vanishes")

    @classmethod
    def identity(cls) -> "MoebiusTransform":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> "MoebiusTransform":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def pole(self):
        """The point sent to infinity."""
        if self.c == 0:
            return INF
        return -self.d / self.c

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other: "MoebiusTransform") -> "MoebiusTransform":
        return compose(self, other)

    def inverse(self) -> "MoebiusTransform":
        return inverse(self)

    def normalized(self) -> "MoebiusTransform":
        """Equivalent transform scaled so that ad - bc = 1."""
        s = np.sqrt(self.det)
        return MoebiusTransform(self.a / s, self.b / s, self.c / s, self.d / s)

    def is_scalar_multiple_of(self, other: "MoebiusTransform", tol: float = 1e-12) -> bool:
        m1, m2 = self.matrix.ravel(), other.matrix.ravel()
        k = np.argmax(np.abs(m2))
        lam = m1[k] / m2[k]
        return bool(np.max(np.abs(m1 - lam * m2)) <= tol * np.max(np.abs(m1)))

    def apply_array(self, z) -> np.ndarray:
        """Vectorised evaluation on finite points; poles map to complex inf."""
        z = np.asarray(z, dtype=complex)
        num = self.a * z + self.b
        den = self.c * z + self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        return np.where(den == 0, complex(np.inf, np.inf), out)

    def derivative_array(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.det / (self.c * z + self.d) ** 2


def apply(t: MoebiusTransform, z):
    """Image of a point of the Riemann sphere under ``t``.

    Arrays are evaluated with :meth:`MoebiusTransform.apply_array`.
    """
    if isinstance(z, np.ndarray):
        return t.apply_array(z)
    if z is INF:
        return INF if t.c == 0 else t.a / t.c
    z = complex(z)
    den = t.c * z + t.d
    if abs(den) <= COINCIDENCE_TOL * (abs(t.c * z) + abs(t.d)):
        return INF
    return (t.a * z + t.b) / den


def compose(t1: MoebiusTransform, t2: MoebiusTransform) -> MoebiusTransform:
    """The transform z -> t1(t2(z))."""
    return MoebiusTransform.from_matrix(t1.matrix @ t2.matrix)


def inverse(t: MoebiusTransform) -> MoebiusTransform:
    return MoebiusTransform(t.d, -t.b, -t.c, t.a)


def _coincident(p, q, scale):
    if p is INF or q is INF:
        return p is q
    return abs(p - q) < COINCIDENCE_TOL * scale


def cross_ratio(z1, z2, z3, z4):
    """(z1 - z3)(z2 - z4) / ((z2 - z3)(z1 - z4)) on the Riemann sphere.

    Any one argument may be :data:`INF`. A single coincident pair gives 0, 1
    or INF depending on which pair it is; two or more coincident pairs raise
    :class:`DegenerateConfiguration`.
    """
    zs = [z if z is INF else complex(z) for z in (z1, z2, z3, z4)]
    finite = [abs(z) for z in zs if z is not INF]
    scale = 1.0 + (max(finite) if finite else 0.0)
    pairs = [(i, j) for i, j in combinations(range(4), 2) if _coincident(zs[i], zs[j], scale)]
    if len(pairs) >= 2:
        raise DegenerateConfiguration("two or more coincident pairs")
    if pairs:
        pair = pairs[0]
        if pair in ((0, 2), (1, 3)):
            return 0j
        if pair in ((1, 2), (0, 3)):
            return INF
        return 1 + 0j

    a, b, c, d = zs
    # Factors involving the point at infinity cancel in the limit.
    if a is INF:
        return (b - d) / (b - c)
    if b is INF:
        return (a - c) / (a - d)
    if c is INF:
        return (b - d) / (a - d)
    if d is INF:
        return (a - c) / (b - c)
    return (a - c) * (b - d) / ((b - c) * (a - d))


def cross_ratios(z1, z2, z3, z4) -> np.ndarray:
    """Vectorised cross-ratio of finite, non-degenerate quadruples."""
    z1, z2, z3, z4 = (np.asarray(z, dtype=complex) for z in (z1, z2, z3, z4))
    return (z1 - z3) * (z2 - z4) / ((z2 - z3) * (z1 - z4))

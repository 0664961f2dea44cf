"""Shape cross-ratio (SCR) signatures and their Fourier invariants (FCR).

A curve is reparametrised by Moebius arclength, the cross-ratio of four
points a distance delta apart is sampled at ``n_sig`` equally spaced values
of lambda, and the translation-invariant products
F(phi1 o SCR)_n F(phi2 o SCR)_{-n} are formed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arclength import arclength_profile, count_vertices
from .curve import SampledCurve
from .errors import DegenerateConfiguration, ShapeMismatch
from .moebius import cross_ratios

__all__ = [
    "DEFAULT_N_SIG",
    "DEFAULT_DELTA_FRAC",
    "ScrSignature",
    "FcrInvariant",
    "phi1",
    "phi2",
    "scr",
    "fcr",
    "fcr_of_curve",
    "fcr_distance",
    "fcr_distance_quotient",
    "relative_fcr_error",
]

DEFAULT_N_SIG = 128
DEFAULT_DELTA_FRAC = 1.0 / 8.0


@dataclass(frozen=True)
class ScrSignature:
    values: np.ndarray
    delta: float
    L: float
    V: int = 0

    @property
    def n_sig(self) -> int:
        return self.values.size

    @property
    def delta_frac(self) -> float:
        return self.delta / self.L

    def norm(self) -> float:
        """Root-mean-square of SCR over one period."""
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))


@dataclass(frozen=True)
class FcrInvariant:
    """FCR(n) for n = -n_sig/2 .. n_sig/2 - 1, plus Moebius length and vertex count."""

    coeffs: np.ndarray
    L: float
    V: int
    delta_frac: float = DEFAULT_DELTA_FRAC

    @property
    def n_sig(self) -> int:
        return self.coeffs.size

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-(self.n_sig // 2), self.n_sig - self.n_sig // 2)

    def reversed(self) -> "FcrInvariant":
        """Action of an orientation reversal: FCR(n) -> FCR(-n)."""
        full = np.fft.ifftshift(self.coeffs)
        flipped = full[(-np.arange(self.n_sig)) % self.n_sig]
        return FcrInvariant(np.fft.fftshift(flipped), self.L, self.V, self.delta_frac)

    def conjugated(self) -> "FcrInvariant":
        """Action of a reflection z -> conj(z): FCR(n) -> conj FCR(n)."""
        return FcrInvariant(np.conj(self.coeffs), self.L, self.V, self.delta_frac)

    def to_dict(self) -> dict:
        return {
            "n_sig": self.n_sig,
            "delta_frac": self.delta_frac,
            "L": self.L,
            "V": self.V,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FcrInvariant":
        coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        if coeffs.size != d["n_sig"]:
            raise ShapeMismatch("coefficient count does not match n_sig")
        return cls(coeffs, float(d["L"]), int(d["V"]), float(d["delta_frac"]))

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_json(cls, path) -> "FcrInvariant":
        return cls.from_dict(json.loads(Path(path).read_text()))


def phi1(w):
    """w / sqrt(1 + |w|^2), mapping the plane into the unit disk."""
    w = np.asarray(w, dtype=complex)
    return w / np.sqrt(1.0 + np.abs(w) ** 2)


def phi2(w):
    return phi1(w) ** 2


def scr(c: SampledCurve, delta_frac: float = DEFAULT_DELTA_FRAC,
        n_sig: int = DEFAULT_N_SIG, orient: bool = True) -> ScrSignature:
    """Shape cross-ratio sampled at lambda_i = i L / n_sig, i = 0..n_sig-1.

    Parameters
    ----------
    c : SampledCurve
        Smooth, simple closed curve.
    delta_frac : float
        delta / L; 1/8 by default.
    n_sig : int
        Number of lambda samples, a power of two.
    orient : bool
        Normalise to positive orientation first. Turning this off is only
        useful for studying the reversal action itself.
    """
    if n_sig < 4 or n_sig & (n_sig - 1):
        raise ValueError("n_sig must be a power of two")
    if not 0 < delta_frac <= 0.25:
        raise ValueError("delta_frac must lie in (0, 1/4]")
    if orient:
        c = c.positively_oriented()
    profile = arclength_profile(c)
    L = profile.total_length
    if not L > 0:
        raise DegenerateConfiguration("curve has zero Moebius length (a circle?)")
    delta = delta_frac * L
    lam = np.arange(n_sig) * (L / n_sig)
    shift = delta_frac * n_sig
    if abs(shift - round(shift)) < 1e-12:
        # delta is a whole number of lambda steps, so points are reused
        z = c.interpolate(profile.t_of(lam))
        k = int(round(shift))
        quad = [np.roll(z, -j * k) for j in range(4)]
    else:
        quad = [c.interpolate(profile.t_of(lam + j * delta)) for j in range(4)]
    with np.errstate(divide="ignore", invalid="ignore"):
        values = cross_ratios(*quad)
    if not np.all(np.isfinite(values)):
        raise DegenerateConfiguration("cross-ratio blew up along the curve")
    return ScrSignature(values, delta, L, count_vertices(c))


def fcr(s: ScrSignature) -> FcrInvariant:
    """F(phi1 o SCR)_n * F(phi2 o SCR)_{-n}, DFTs normalised by 1/n_sig."""
    n = s.n_sig
    f1 = np.fft.fft(phi1(s.values)) / n
    f2 = np.fft.fft(phi2(s.values)) / n
    prod = f1 * f2[(-np.arange(n)) % n]
    return FcrInvariant(np.fft.fftshift(prod), s.L, s.V, s.delta_frac)


def fcr_of_curve(c: SampledCurve, delta_frac: float = DEFAULT_DELTA_FRAC,
                 n_sig: int = DEFAULT_N_SIG, orient: bool = True) -> FcrInvariant:
    return fcr(scr(c, delta_frac, n_sig, orient))


def _check_compatible(f1: FcrInvariant, f2: FcrInvariant):
    if f1.n_sig != f2.n_sig:
        raise ShapeMismatch(f"n_sig differs: {f1.n_sig} vs {f2.n_sig}")
    if abs(f1.delta_frac - f2.delta_frac) > 1e-12:
        raise ShapeMismatch(f"delta_frac differs: {f1.delta_frac} vs {f2.delta_frac}")


def fcr_distance(f1: FcrInvariant, f2: FcrInvariant) -> float:
    _check_compatible(f1, f2)
    return float(np.linalg.norm(f1.coeffs - f2.coeffs))


def fcr_distance_quotient(f1: FcrInvariant, f2: FcrInvariant,
                          reversal: bool = True, reflection: bool = True) -> float:
    """min over g of ||f1 - g f2|| for g in the selected reversal/reflection group."""
    _check_compatible(f1, f2)
    candidates = [f2]
    if reversal:
        candidates.append(f2.reversed())
    if reflection:
        candidates += [g.conjugated() for g in list(candidates)]
    return min(float(np.linalg.norm(f1.coeffs - g.coeffs)) for g in candidates)


def relative_fcr_error(f: FcrInvariant, reference: FcrInvariant) -> float:
    return fcr_distance(f, reference) / float(np.linalg.norm(reference.coeffs))

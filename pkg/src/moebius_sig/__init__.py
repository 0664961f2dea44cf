"""Moebius-invariant signatures of planar curves and grey-scale images."""

from .arclength import (
    arclength_profile,
    circumcircle_curvature,
    count_vertices,
    ellipse_exact_length,
    moebius_curvature,
    moebius_length,
    richardson_length,
)
from .curve import (
    SampledCurve,
    add_noise,
    circle,
    ellipse,
    random_jordan,
    read_curve,
    write_curve,
)
from .errors import MoebiusSigError, PossibleUndersampling
from .moebius import INF, MoebiusTransform, apply, compose, cross_ratio, inverse
from .registration import dist_symmetrized, h1_norm, register
from .signature import FcrInvariant, fcr, fcr_distance, fcr_distance_quotient, fcr_of_curve, scr

__version__ = "0.1.0"

__all__ = [
    "INF",
    "MoebiusTransform",
    "apply",
    "compose",
    "inverse",
    "cross_ratio",
    "SampledCurve",
    "ellipse",
    "circle",
    "random_jordan",
    "add_noise",
    "read_curve",
    "write_curve",
    "circumcircle_curvature",
    "moebius_length",
    "richardson_length",
    "arclength_profile",
    "count_vertices",
    "moebius_curvature",
    "ellipse_exact_length",
    "scr",
    "fcr",
    "fcr_of_curve",
    "fcr_distance",
    "fcr_distance_quotient",
    "FcrInvariant",
    "h1_norm",
    "register",
    "dist_symmetrized",
    "MoebiusSigError",
    "PossibleUndersampling",
]

"""Grey-scale images, the Moebius differential invariants lambda_n and lambda_t,
level-set signature curves and random blob images.

Images live on the square [-1, 1]^2 sampled on an M x M grid; ``grid[i, j]``
is the intensity at x = -1 + j h, y = -1 + i h. Analytic image functions take
complex points z = x + iy, so that pullbacks f o phi^{-1} are evaluated
exactly rather than by resampling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .curve import make_rng
from .errors import EmptyLevelSet, MalformedImage, PoleInDomain
from .moebius import MoebiusTransform

__all__ = [
    "ScalarImage",
    "InvariantFields",
    "SignatureCurve",
    "BlobFunction",
    "reference_function",
    "reference_image",
    "REFERENCE_TRANSFORM",
    "sample",
    "pullback",
    "invariant_fields",
    "level_set",
    "signature_curve",
    "signature_distance",
    "resample_polyline",
    "contour_curvature",
    "stationary_point",
    "random_blobs",
    "jittered_blobs",
    "random_moebius",
    "random_inversion",
    "read_pgm",
    "write_pgm",
    "read_image_csv",
    "write_image_csv",
    "write_signature_csv",
]

DEFAULT_M = 161
MIN_M = 9
BORDER = 2
EPS_GRAD_REL = 1e-3
ARCTAN_SCALE = 4.0
PGM_MAXVAL = 65535

# z -> ((0.9+0.1i) z + 0.1) / ((0.1+0.4i) z + 1)
REFERENCE_TRANSFORM = MoebiusTransform(0.9 + 0.1j, 0.1, 0.1 + 0.4j, 1.0)


@dataclass(frozen=True)
class ScalarImage:
    """M x M samples of an intensity on [-1, 1]^2, h = 2 / (M - 1)."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise MalformedImage(f"expected a square grid, got shape {g.shape}")
        if g.shape[0] < MIN_M:
            raise MalformedImage(f"need M >= {MIN_M}, got {g.shape[0]}")
        if not np.all(np.isfinite(g)):
            raise MalformedImage("image contains non-finite values")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @property
    def m(self) -> int:
        return self.grid.shape[0]

    @property
    def h(self) -> float:
        return 2.0 / (self.m - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.m)

    def points(self) -> np.ndarray:
        """Complex coordinates of every grid node, same shape as ``grid``."""
        x = self.axis
        return x[None, :] + 1j * x[:, None]


@dataclass(frozen=True)
class InvariantFields:
    lambda_n: np.ndarray
    lambda_t: np.ndarray
    grad_norm: np.ndarray
    div_n: np.ndarray
    mask: np.ndarray
    h: float

    def interpolate(self, z, which: str = "lambda_n") -> tuple[np.ndarray, np.ndarray]:
        """Bilinear interpolation at complex points; second output is validity.

        A point is valid when it lies in the domain and all four surrounding
        nodes are in the mask.
        """
        return _bilinear(getattr(self, which), self.mask, self.h, z)


@dataclass(frozen=True)
class SignatureCurve:
    """(arctan(lambda_t / 4), arctan(lambda_n / 4)) along a level set."""

    level: float
    points: np.ndarray  # contour points, complex
    lambda_n: np.ndarray
    lambda_t: np.ndarray
    segments: np.ndarray | None = None  # (k, 2) index pairs of consecutive points

    @property
    def u(self) -> np.ndarray:
        return np.arctan(self.lambda_t / ARCTAN_SCALE)

    @property
    def v(self) -> np.ndarray:
        return np.arctan(self.lambda_n / ARCTAN_SCALE)

    @property
    def coords(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])


# ---------------------------------------------------------------- generators

def reference_function(z):
    """exp(-4x^2 - 8(y - 0.2x - 0.8x^2)^2): a banana-shaped bump."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    return np.exp(-4 * x**2 - 8 * (y - 0.2 * x - 0.8 * x**2) ** 2)


def sample(func, m: int = DEFAULT_M) -> ScalarImage:
    if m % 2 == 0:
        raise ValueError("m must be odd so that the grid contains the origin")
    x = np.linspace(-1.0, 1.0, m)
    return ScalarImage(func(x[None, :] + 1j * x[:, None]))


def reference_image(m: int = DEFAULT_M) -> ScalarImage:
    return sample(reference_function, m)


reference_image.__test__ = False
test_image = reference_image


def pullback(func, t: MoebiusTransform, m: int = DEFAULT_M) -> ScalarImage:
    """Samples of f o t^{-1}, evaluated analytically."""
    if m % 2 == 0:
        raise ValueError("m must be odd")
    inv = t.inverse()
    h = 2.0 / (m - 1)
    if inv.c != 0:
        pole = -inv.d / inv.c
        if max(abs(pole.real), abs(pole.imag)) <= 1.0 + 2 * h:
            raise PoleInDomain(f"pole of the inverse at {pole:.6g} lies in the image domain ({t})")
    x = np.linspace(-1.0, 1.0, m)
    z = x[None, :] + 1j * x[:, None]
    return ScalarImage(func(inv.apply_array(z)))


@dataclass(frozen=True)
class BlobFunction:
    """Sum of anisotropic Gaussians, affinely rescaled by (g - lo) / (hi - lo)."""

    amplitudes: np.ndarray
    centers: np.ndarray  # complex
    widths: np.ndarray  # (k, 2)
    angles: np.ndarray
    lo: float = 0.0
    hi: float = 1.0
    seed: int | None = None

    def raw(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        for amp, c, (sa, sb), th in zip(self.amplitudes, self.centers, self.widths, self.angles):
            w = (z - c) * np.exp(-1j * th)
            out += amp * np.exp(-0.5 * ((w.real / sa) ** 2 + (w.imag / sb) ** 2))
        return out

    def __call__(self, z):
        return (self.raw(z) - self.lo) / (self.hi - self.lo)

    def normalized(self, m: int = DEFAULT_M) -> "BlobFunction":
        """Same blob with lo, hi set so that the range on the m-grid is [0, 1]."""
        x = np.linspace(-1.0, 1.0, m)
        g = self.raw(x[None, :] + 1j * x[:, None])
        return BlobFunction(self.amplitudes, self.centers, self.widths, self.angles,
                            float(g.min()), float(g.max()), self.seed)

    def to_dict(self) -> dict:
        return {
            "amplitudes": self.amplitudes.tolist(),
            "centers": [[c.real, c.imag] for c in self.centers],
            "widths": self.widths.tolist(),
            "angles": self.angles.tolist(),
            "lo": self.lo,
            "hi": self.hi,
            "seed": self.seed,
        }


def random_blobs(k: int = 4, seed: int = 0, m: int = DEFAULT_M) -> BlobFunction:
    """k random Gaussians, range scaled to [0, 1] on the m-grid.

    Amplitudes U(0.5, 1), centres U(-0.35, 0.35)^2, axis widths U(0.15, 0.4),
    orientation U(0, pi).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = make_rng(seed)
    amps = rng.uniform(0.5, 1.0, k)
    cen = rng.uniform(-0.35, 0.35, (k, 2))
    widths = rng.uniform(0.15, 0.4, (k, 2))
    angles = rng.uniform(0.0, np.pi, k)
    blob = BlobFunction(amps, cen[:, 0] + 1j * cen[:, 1], widths, angles, seed=seed)
    return blob.normalized(m)


def jittered_blobs(base: BlobFunction, seed: int, rel: float = 0.05,
                   m: int = DEFAULT_M) -> BlobFunction:
    """Every parameter multiplied by an independent U(1 - rel, 1 + rel) factor."""
    rng = make_rng(seed)
    k = base.amplitudes.size

    def jit(shape):
        return rng.uniform(1 - rel, 1 + rel, shape)

    cen = np.column_stack([base.centers.real, base.centers.imag]) * jit((k, 2))
    blob = BlobFunction(base.amplitudes * jit(k), cen[:, 0] + 1j * cen[:, 1],
                        base.widths * jit((k, 2)), base.angles * jit(k), seed=seed)
    return blob.normalized(m)


def _pole_clear(t: MoebiusTransform, margin: float) -> bool:
    inv = t.inverse()
    if inv.c == 0:
        return True
    pole = -inv.d / inv.c
    return max(abs(pole.real), abs(pole.imag)) > 1.0 + margin


def random_moebius(seed: int, margin: float = 0.25, max_tries: int = 1000) -> MoebiusTransform:
    """z -> a z / (c z + 1): |a| area-uniform in [0.7, 1.3], arg a and arg c
    uniform, |c| = |N(0, 0.6)|.

    Draws whose inverse has a pole within ``margin`` of the domain are
    rejected and redrawn from the same stream.
    """
    rng = make_rng(seed)
    for _ in range(max_tries):
        r = np.sqrt(rng.uniform(0.7**2, 1.3**2))
        a = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        c = abs(rng.normal(0.0, 0.6)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        t = MoebiusTransform(a, 0.0, c, 1.0)
        if _pole_clear(t, margin):
            return t
    raise PoleInDomain("no admissible transform drawn")


def random_inversion(seed: int, std: float = 0.1) -> MoebiusTransform:
    """z -> z / (1 + c z) with Re c, Im c ~ N(0, std)."""
    rng = make_rng(seed)
    re, im = rng.normal(0.0, std, 2)
    return MoebiusTransform(1.0, 0.0, complex(re, im), 1.0)


# ---------------------------------------------------------------- invariants

def _d(a: np.ndarray, h: float):
    """Central differences (d/dx, d/dy); second-order one-sided at the edges."""
    return np.gradient(a, h, axis=1, edge_order=2), np.gradient(a, h, axis=0, edge_order=2)


def invariant_fields(img: ScalarImage, eps_grad: float | None = None) -> InvariantFields:
    """lambda_n = n . grad(curl n) / |grad f|^2, lambda_t = n x grad(div n) / |grad f|^2.

    n = grad f / |grad f|; curl n := d_y n_x - d_x n_y, which equals the
    divergence of the rotated field i n, the curvature of the orthogonal
    trajectories. Regular points are those with |grad f| >= eps_grad
    (default 1e-3 max |grad f|) at least 2 cells from the boundary.
    """
    h = img.h
    fx, fy = _d(img.grid, h)
    g = np.hypot(fx, fy)
    if eps_grad is None:
        eps_grad = EPS_GRAD_REL * float(g.max())
    with np.errstate(all="ignore"):
        nx, ny = fx / g, fy / g
        nxx, nxy = _d(nx, h)
        nyx, nyy = _d(ny, h)
        div = nxx + nyy
        curl = nxy - nyx
        cx, cy = _d(curl, h)
        dx, dy = _d(div, h)
        g2 = g * g
        lam_n = (nx * cx + ny * cy) / g2
        lam_t = (nx * dy - ny * dx) / g2
    mask = g >= eps_grad
    mask[:BORDER, :] = mask[-BORDER:, :] = False
    mask[:, :BORDER] = mask[:, -BORDER:] = False
    mask &= np.isfinite(lam_n) & np.isfinite(lam_t)
    for a in (lam_n, lam_t, div):
        a[~mask] = np.nan
    return InvariantFields(lam_n, lam_t, g, div, mask, h)


def _bilinear(field_: np.ndarray, mask: np.ndarray, h: float, z):
    z = np.asarray(z, dtype=complex)
    m = field_.shape[0]
    u = (z.real + 1.0) / h
    v = (z.imag + 1.0) / h
    inside = (u >= 0) & (u <= m - 1) & (v >= 0) & (v <= m - 1)
    j = np.clip(np.floor(u).astype(int), 0, m - 2)
    i = np.clip(np.floor(v).astype(int), 0, m - 2)
    s, t = u - j, v - i
    ok = inside & mask[i, j] & mask[i, j + 1] & mask[i + 1, j] & mask[i + 1, j + 1]
    with np.errstate(invalid="ignore"):
        val = ((1 - s) * (1 - t) * field_[i, j] + s * (1 - t) * field_[i, j + 1]
               + (1 - s) * t * field_[i + 1, j] + s * t * field_[i + 1, j + 1])
    return np.where(ok, val, np.nan), ok


def stationary_point(values: np.ndarray, h: float, near: complex, radius: float = 0.1):
    """Stationary point of a gridded field nearest in gradient to ``near``.

    Picks the node within ``radius`` with the smallest central-difference
    gradient, then refines with a least-squares quadratic on its 5 x 5
    neighbourhood. Returns (location, value, hessian eigenvalues).
    """
    m = values.shape[0]
    x = np.linspace(-1.0, 1.0, m)
    gx, gy = _d(values, h)
    gnorm = np.hypot(gx, gy)
    Z = x[None, :] + 1j * x[:, None]
    gnorm = np.where((np.abs(Z - near) <= radius) & np.isfinite(gnorm), gnorm, np.inf)
    i, j = np.unravel_index(np.argmin(gnorm), gnorm.shape)
    if not np.isfinite(gnorm[i, j]) or not (2 <= i < m - 2 and 2 <= j < m - 2):
        raise ValueError("no usable stationary point near the requested location")
    di, dj = np.meshgrid(np.arange(-2, 3), np.arange(-2, 3), indexing="ij")
    di, dj = di.ravel(), dj.ravel()
    A = np.column_stack([np.ones(25), dj, di, dj**2, di * dj, di**2])
    c = np.linalg.lstsq(A, values[i - 2:i + 3, j - 2:j + 3].ravel(), rcond=None)[0]
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    s = np.linalg.solve(hess, -c[1:3])
    val = c[0] + c[1:3] @ s + 0.5 * s @ hess @ s
    loc = complex(x[j] + s[0] * h, x[i] + s[1] * h)
    return loc, float(val), np.linalg.eigvalsh(hess) / h**2


# ---------------------------------------------------------------- contours

# cell corners counter-clockwise in (x, y): (i,j), (i,j+1), (i+1,j+1), (i+1,j)
_CORNERS = ((0, 0), (0, 1), (1, 1), (1, 0))


def level_set(img: ScalarImage, level: float) -> list[np.ndarray]:
    """Marching-squares contours of ``img`` at ``level`` as complex polylines.

    Crossings are linearly interpolated on cell edges; ambiguous saddle cells
    are resolved by the average of the four corners. Each polyline keeps the
    higher intensity on its left. Closed polylines repeat no point; a
    polyline is closed when its last segment returns to its first point.
    Returns closed loops first, then boundary-terminated ones, each group
    ordered by decreasing length.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    F = img.grid
    m = img.m
    h = img.h
    above = F > level

    def edge_key(i, j, k):
        # k-th edge of cell (i, j), keyed by its lower-left node and direction
        if k == 0:
            return ("h", i, j)
        if k == 1:
            return ("v", i, j + 1)
        if k == 2:
            return ("h", i + 1, j)
        return ("v", i, j)

    crossing = {}

    def point(key):
        if key in crossing:
            return crossing[key]
        kind, i, j = key
        i2, j2 = (i, j + 1) if kind == "h" else (i + 1, j)
        fa, fb = F[i, j], F[i2, j2]
        t = (level - fa) / (fb - fa)
        x = -1.0 + (j + t * (j2 - j)) * h
        y = -1.0 + (i + t * (i2 - i)) * h
        crossing[key] = complex(x, y)
        return crossing[key]

    a = above
    code = (a[:-1, :-1].astype(int) + 2 * a[:-1, 1:] + 4 * a[1:, 1:] + 8 * a[1:, :-1])
    cells = np.argwhere((code != 0) & (code != 15))
    nxt = {}
    for i, j in cells:
        corners = [a[i + di, j + dj] for di, dj in _CORNERS]
        # edge k runs from corner k to corner k+1; "down" leaves the region above level
        down = [k for k in range(4) if corners[k] and not corners[(k + 1) % 4]]
        up = [k for k in range(4) if not corners[k] and corners[(k + 1) % 4]]
        if len(down) == 1:
            pairs = [(down[0], up[0])]
        else:
            centre = F[i:i + 2, j:j + 2].mean()
            if centre > level:
                pairs = [(k, (k + 1) % 4) for k in down]
            else:
                pairs = [(k, (k - 1) % 4) for k in down]
        for k0, k1 in pairs:
            nxt[edge_key(i, j, k0)] = edge_key(i, j, k1)

    heads = set(nxt) - set(nxt.values())
    used = set()
    closed, open_ = [], []
    for start in sorted(heads) + sorted(set(nxt) - heads):
        if start in used:
            continue
        chain = [start]
        used.add(start)
        key = nxt[start]
        is_closed = False
        while True:
            if key == start:
                is_closed = True
                break
            chain.append(key)
            if key not in nxt or key in used:
                break
            used.add(key)
            key = nxt[key]
        poly = np.array([point(k) for k in chain])
        (closed if is_closed else open_).append(poly)

    def length(p, c):
        d = np.abs(np.diff(p))
        return d.sum() + (abs(p[-1] - p[0]) if c else 0.0)

    closed.sort(key=lambda p: -length(p, True))
    open_.sort(key=lambda p: -length(p, False))
    return closed + open_


def resample_polyline(poly: np.ndarray, spacing: float, closed: bool = True) -> np.ndarray:
    """Points equally spaced in arclength along a polyline."""
    z = np.append(poly, poly[0]) if closed else np.asarray(poly)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(z)))])
    n = max(int(s[-1] / spacing), 3)
    t = np.arange(n) * (s[-1] / n) if closed else np.linspace(0.0, s[-1], n)
    return np.interp(t, s, z.real) + 1j * np.interp(t, s, z.imag)


def contour_curvature(poly: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Signed curvature of a closed contour from fourth-order differences.

    Contour vertices carry O(h^2) position error, so the polyline is first
    resampled at spacing 0.35 sqrt(h), which balances that error against
    the truncation of the five-point stencil. Returns (points, curvature).
    """
    q = resample_polyline(poly, 0.35 * np.sqrt(h))
    r = lambda k: np.roll(q, -k)  # noqa: E731
    d1 = (r(-2) - 8 * r(-1) + 8 * r(1) - r(2)) / 12
    d2 = (-r(-2) + 16 * r(-1) - 30 * q + 16 * r(1) - r(2)) / 12
    return q, np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3


def signature_curve(img: ScalarImage, level: float = 0.5,
                    fields: InvariantFields | None = None) -> SignatureCurve:
    """Invariants interpolated onto the level set; points near the mask edge are dropped."""
    polys = level_set(img, level)
    if not polys:
        raise EmptyLevelSet(f"no contour at level {level}")
    fields = fields or invariant_fields(img)
    pts = np.concatenate(polys)
    ln, ok_n = fields.interpolate(pts, "lambda_n")
    lt, ok_t = fields.interpolate(pts, "lambda_t")
    ok = ok_n & ok_t
    if not np.any(ok):
        raise EmptyLevelSet(f"level {level} has no regular points")
    segs = []
    start = 0
    for p in polys:
        idx = np.arange(start, start + len(p))
        nxt = np.roll(idx, -1) if _is_loop(p, img.h) else idx[1:]
        segs.append(np.column_stack([idx[: nxt.size], nxt]))
        start += len(p)
    segs = np.concatenate(segs)
    segs = segs[ok[segs[:, 0]] & ok[segs[:, 1]]]
    new_index = np.cumsum(ok) - 1
    return SignatureCurve(level, pts[ok], ln[ok], lt[ok], new_index[segs])


def _is_loop(poly: np.ndarray, h: float) -> bool:
    return len(poly) > 2 and abs(poly[-1] - poly[0]) < 2 * h


def _distance_to_curve(a: np.ndarray, s: SignatureCurve) -> np.ndarray:
    """Distance from each row of ``a`` to the nearest point of the polyline ``s``."""
    b = s.coords
    d = cKDTree(b).query(a)[0]
    if s.segments is None or len(s.segments) == 0:
        return d
    p, q = b[s.segments[:, 0]], b[s.segments[:, 1]]
    e = q - p
    ee = np.maximum(np.einsum("ij,ij->i", e, e), 1e-300)
    out = d.copy()
    for lo in range(0, len(a), 256):
        x = a[lo:lo + 256, None, :]
        t = np.clip(np.einsum("kij,ij->ki", x - p, e) / ee, 0.0, 1.0)
        proj = p + t[..., None] * e
        out[lo:lo + 256] = np.minimum(d[lo:lo + 256], np.sqrt(((x - proj) ** 2).sum(-1)).min(axis=1))
    return out


def signature_distance(s1: SignatureCurve, s2: SignatureCurve) -> float:
    """Symmetric mean nearest-point distance in (arctan) signature coordinates.

    The nearest point is taken on the other signature curve, i.e. on the
    polyline through its samples, so that two samplings of one curve are at
    distance zero.
    """
    d_ab = _distance_to_curve(s1.coords, s2)
    d_ba = _distance_to_curve(s2.coords, s1)
    return 0.5 * (float(d_ab.mean()) + float(d_ba.mean()))


# ---------------------------------------------------------------- I/O

def write_pgm(img: ScalarImage, path) -> None:
    """Plain PGM (P2), maxval 65535, top row = largest y."""
    q = np.rint(np.clip(img.grid, 0.0, 1.0) * PGM_MAXVAL).astype(int)[::-1]
    lines = ["P2", f"{img.m} {img.m}", str(PGM_MAXVAL)]
    lines += [" ".join(map(str, row)) for row in q]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> ScalarImage:
    text = Path(path).read_text()
    tokens = []
    for line in text.splitlines():
        tokens += line.split("#", 1)[0].split()
    if len(tokens) < 4 or tokens[0] != "P2":
        raise MalformedImage(f"{path}: not a plain PGM (P2) file")
    try:
        w, hgt, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        data = np.array(tokens[4:], dtype=float)
    except ValueError as exc:
        raise MalformedImage(f"{path}: {exc}") from exc
    if data.size != w * hgt or maxval <= 0:
        raise MalformedImage(f"{path}: expected {w * hgt} samples, found {data.size}")
    return ScalarImage((data.reshape(hgt, w) / maxval)[::-1])


def write_image_csv(img: ScalarImage, path) -> None:
    """One row per image row, top row = largest y, repr precision."""
    with Path(path).open("w", newline="") as fh:
        for row in img.grid[::-1]:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_image_csv(path) -> ScalarImage:
    try:
        with Path(path).open(newline="") as fh:
            rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
        grid = np.array(rows, dtype=float)
    except ValueError as exc:
        raise MalformedImage(f"{path}: {exc}") from exc
    return ScalarImage(grid[::-1])


def write_signature_csv(sigs, path) -> None:
    """Header level,x,y,lambda_n,lambda_t,sig_u,sig_v; one row per contour point."""
    if isinstance(sigs, SignatureCurve):
        sigs = [sigs]
    with Path(path).open("w", newline="") as fh:
        fh.write("level,x,y,lambda_n,lambda_t,sig_u,sig_v\n")
        for s in sigs:
            for z, ln, lt, u, v in zip(s.points, s.lambda_n, s.lambda_t, s.u, s.v):
                fh.write(",".join(repr(float(q)) for q in (s.level, z.real, z.imag, ln, lt, u, v)) + "\n")

"""Direct registration of closed curves under the H^1 norm.

r_G(z, w) = min over g in G and monotone reparametrisations psi of
||g o z o psi - w||_{H^1}, with G the direct similarities or the Moebius
group. The reparametrisation is a piecewise-linear, increasing, degree-one
circle map with 16 control intervals.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .curve import SampledCurve
from .moebius import MoebiusTransform

__all__ = [
    "Reparam",
    "RegistrationConfig",
    "RegistrationResult",
    "h1_norm",
    "h1_residual_vector",
    "levenberg_marquardt",
    "register",
    "dist_symmetrized",
    "thread_count",
]

N_CONTROL = 16
DEFAULT_ALPHA = 0.1
START_ROTATIONS = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)
START_SCALES = (0.5, 1.0, 2.0)
CHART_TOL = 1e-3


def thread_count() -> int:
    """Worker cap from MOEBIUS_SIG_THREADS; 0 or unset means all cores."""
    try:
        n = int(os.environ.get("MOEBIUS_SIG_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _central_diff(v: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(v, -1, axis=-1) - np.roll(v, 1, axis=-1)) / (2 * h)


def h1_norm(c, alpha: float = DEFAULT_ALPHA) -> float:
    """sqrt(int |z|^2 + alpha |z'|^2 dt): midpoint rule, central-difference z'."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    z = c.points if isinstance(c, SampledCurve) else np.asarray(c, dtype=complex)
    h = 1.0 / z.size
    dz = _central_diff(z, h)
    return float(np.sqrt(h * np.sum(np.abs(z) ** 2 + alpha * np.abs(dz) ** 2)))


def h1_residual_vector(v: np.ndarray, w: np.ndarray, alpha: float) -> np.ndarray:
    """Real vector whose squared norm is the squared H^1 norm of v - w.

    Works on a batch: the last axis indexes samples.
    """
    h = 1.0 / v.shape[-1]
    d = v - w
    dd = _central_diff(d, h) * np.sqrt(alpha)
    s = np.sqrt(h)
    return s * np.concatenate([d.real, d.imag, dd.real, dd.imag], axis=-1)


@dataclass(frozen=True)
class Reparam:
    """psi(s_k) = phase + cumulative softmax(control) at knots s_k = k/16."""

    control: np.ndarray
    phase: float = 0.0

    @classmethod
    def identity(cls) -> "Reparam":
        return cls(np.zeros(N_CONTROL), 0.0)

    @property
    def increments(self) -> np.ndarray:
        e = np.exp(self.control - np.max(self.control))
        return e / e.sum()

    def __call__(self, t):
        return _psi(np.asarray(self.control)[None, :], np.array([self.phase]),
                    np.asarray(t, dtype=float))[0]


def _psi(control: np.ndarray, phase: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Batched reparametrisation; control has shape (B, 16), result (B, len(t))."""
    e = np.exp(control - control.max(axis=1, keepdims=True))
    inc = e / e.sum(axis=1, keepdims=True)
    knots = np.concatenate([np.zeros((control.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)
    m = control.shape[1]
    wraps = np.floor(t)
    u = (t - wraps) * m
    k = np.minimum(u.astype(int), m - 1)
    frac = u - k
    val = knots[:, k] + frac * inc[:, k]
    return phase[:, None] + val + wraps


@dataclass
class RegistrationConfig:
    alpha: float = DEFAULT_ALPHA
    max_iter: int = 500
    rotations: tuple = START_ROTATIONS
    scales: tuple = START_SCALES
    n_eval: int = 128
    fd_step: float = 1e-7
    tol: float = 1e-10
    n_jobs: int = 1


@dataclass
class RegistrationResult:
    r: float
    transform: MoebiusTransform
    reparam: Reparam
    starts_tried: int
    converged: bool
    start_index: int
    start_residuals: list = field(default_factory=list)
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        t = self.transform
        return {
            "r": self.r,
            "transform": {k: [complex(getattr(t, k)).real, complex(getattr(t, k)).imag] for k in "abcd"},
            "reparam": {"control": list(map(float, self.reparam.control)), "phase": float(self.reparam.phase)},
            "starts_tried": self.starts_tried,
            "converged": self.converged,
            "start_index": self.start_index,
            "start_residuals": list(map(float, self.start_residuals)),
        }


def levenberg_marquardt(fun, x0, max_iter=500, fd_step=1e-7, tol=1e-10):
    """Damped Gauss-Newton with a forward-difference Jacobian.

    ``fun`` maps a batch of parameter vectors (B, n) to residuals (B, m).
    A step is accepted only if it lowers the cost, so the returned history
    of costs is non-increasing.

    Returns (x, cost, converged, history).
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    r = fun(x[None, :])[0]
    cost = float(r @ r)
    history = [cost]
    mu = None
    nu = 2.0
    eye = np.eye(n)
    for _ in range(max_iter):
        steps = fd_step * np.maximum(1.0, np.abs(x))
        batch = x[None, :] + np.diag(steps)
        J = ((fun(batch) - r[None, :]) / steps[:, None]).T
        g = J.T @ r
        A = J.T @ J
        if mu is None:
            mu = 1e-3 * float(np.max(np.diag(A)))
        if np.max(np.abs(g)) < tol * max(1.0, cost):
            return x, cost, True, history
        accepted = False
        for _ in range(30):
            try:
                dx = np.linalg.solve(A + mu * eye, -g)
            except np.linalg.LinAlgError:
                mu *= nu
                nu *= 2
                continue
            x_new = x + dx
            r_new = fun(x_new[None, :])[0]
            cost_new = float(r_new @ r_new)
            pred = float(dx @ (mu * dx - g))
            if np.isfinite(cost_new) and cost_new < cost:
                rho = (cost - cost_new) / pred if pred > 0 else 0.0
                mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
                nu = 2.0
                small = cost - cost_new <= tol * cost or np.linalg.norm(dx) <= tol * (np.linalg.norm(x) + tol)
                x, r, cost = x_new, r_new, cost_new
                history.append(cost)
                accepted = True
                if small:
                    return x, cost, True, history
                break
            mu *= nu
            nu *= 2
        if not accepted:
            return x, cost, True, history
    return x, cost, False, history


class _Problem:
    """Residual of g o z o psi - w on the evaluation grid of w."""

    def __init__(self, z: SampledCurve, w: SampledCurve, group: str, cfg: RegistrationConfig):
        if z.n != w.n:
            raise ValueError("curves must have equal sample counts")
        self.group = group
        self.alpha = cfg.alpha
        self.z_spline = _periodic_spline(z)
        n_eval = min(cfg.n_eval, w.n) if cfg.n_eval else w.n
        if w.n % n_eval == 0:
            # a stride of the target's own samples: w is never interpolated
            step = w.n // n_eval
            self.t, self.w = w.t[::step], w.points[::step]
        else:
            self.t = (np.arange(n_eval) + w.phase) / n_eval
            self.w = _periodic_spline(w)(self.t)
        self.chart = "d"
        self.n_group = 4 if group == "similarity" else 6

    def unpack_group(self, p: np.ndarray):
        """(B, n_group) -> coefficient arrays a, b, c, d of shape (B, 1)."""
        cplx = p[:, 0::2] + 1j * p[:, 1::2]
        a, b = cplx[:, 0:1], cplx[:, 1:2]
        one = np.ones_like(a)
        if self.group == "similarity":
            return a, b, np.zeros_like(a), one
        if self.chart == "d":
            return a, b, cplx[:, 2:3], one
        return a, b, one, cplx[:, 2:3]

    def curve_values(self, x: np.ndarray) -> np.ndarray:
        gp = x[:, : self.n_group]
        control = x[:, self.n_group: self.n_group + N_CONTROL]
        phase = x[:, -1]
        s = _psi(control, phase, self.t)
        zs = self.z_spline(s)
        a, b, c, d = self.unpack_group(gp)
        return (a * zs + b) / (c * zs + d)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            v = self.curve_values(x)
            res = h1_residual_vector(v, self.w[None, :], self.alpha)
        return np.where(np.isfinite(res), res, 1e150)

    def pack(self, t: MoebiusTransform, rp: Reparam) -> np.ndarray:
        if self.group == "similarity":
            gp = [t.a / t.d, t.b / t.d]
        elif self.chart == "d":
            gp = [t.a / t.d, t.b / t.d, t.c / t.d]
        else:
            gp = [t.a / t.c, t.b / t.c, t.d / t.c]
        flat = np.ravel([[complex(v).real, complex(v).imag] for v in gp])
        return np.concatenate([flat, rp.control, [rp.phase]])

    def unpack(self, x: np.ndarray):
        a, b, c, d = (complex(v[0, 0]) for v in self.unpack_group(x[None, : self.n_group]))
        return (MoebiusTransform(a, b, c, d),
                Reparam(x[self.n_group: self.n_group + N_CONTROL].copy(), float(x[-1])))

    def denominator_floor(self, x: np.ndarray) -> float:
        a, b, c, d = self.unpack_group(x[None, : self.n_group])
        zs = self.z_spline(_psi(x[None, self.n_group: self.n_group + N_CONTROL],
                                x[None, -1], self.t)[0])
        return float(np.min(np.abs(c[0, 0] * zs + d[0, 0])) / max(abs(c[0, 0]), abs(d[0, 0])))


def _periodic_spline(c: SampledCurve) -> CubicSpline:
    t = np.append(c.t, c.t[0] + 1.0)
    z = np.append(c.points, c.points[0])
    return CubicSpline(t, z, bc_type="periodic", extrapolate="periodic")


def _run_start(z, w, group, cfg, rot, scale, index):
    prob = _Problem(z, w, group, cfg)
    a0 = scale * np.exp(1j * rot)
    b0 = complex(np.mean(prob.w) - a0 * np.mean(z.points))
    x0 = prob.pack(MoebiusTransform(a0, b0, 0, 1), Reparam.identity())
    x, cost, ok, hist = levenberg_marquardt(prob, x0, cfg.max_iter, cfg.fd_step, cfg.tol)
    if group == "moebius" and prob.denominator_floor(x) < CHART_TOL:
        # |cz + d| collapsed in the d = 1 chart: continue in the c = 1 chart
        t, rp = prob.unpack(x)
        if t.c != 0:
            prob.chart = "c"
            x2, cost2, ok2, hist2 = levenberg_marquardt(prob, prob.pack(t, rp), cfg.max_iter,
                                                       cfg.fd_step, cfg.tol)
            if cost2 <= cost:
                x, cost, ok, hist = x2, cost2, ok2, hist + hist2
    t, rp = prob.unpack(x)
    return float(np.sqrt(cost)), t, rp, ok, hist, index


def register(z: SampledCurve, w: SampledCurve, group: str = "moebius",
             cfg: RegistrationConfig | None = None) -> RegistrationResult:
    """Register z onto w; multi-start over rotations x scales, best residual wins."""
    if group not in ("similarity", "moebius"):
        raise ValueError(f"unknown group {group!r}")
    cfg = cfg or RegistrationConfig()
    starts = [(rot, sc) for rot in cfg.rotations for sc in cfg.scales]
    args = [(z, w, group, cfg, rot, sc, i) for i, (rot, sc) in enumerate(starts)]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as ex:
            outs = list(ex.map(_run_start_star, args))
    else:
        outs = [_run_start(*a) for a in args]
    best = min(outs, key=lambda o: (o[0], o[5]))
    r, t, rp, ok, hist, idx = best
    return RegistrationResult(r=r, transform=t, reparam=rp, starts_tried=len(outs), converged=ok,
                              start_index=idx, start_residuals=[o[0] for o in outs], history=hist)


def _run_start_star(args):
    return _run_start(*args)


def dist_symmetrized(z: SampledCurve, w: SampledCurve, group: str = "moebius",
                     cfg: RegistrationConfig | None = None):
    """max(r_G(z, w), r_G(w, z)) together with both registration results."""
    fwd = register(z, w, group, cfg)
    bwd = register(w, z, group, cfg)
    return max(fwd.r, bwd.r), fwd, bwd


def config_dict(cfg: RegistrationConfig) -> dict:
    d = asdict(cfg)
    d["rotations"] = list(map(float, cfg.rotations))
    d["scales"] = list(map(float, cfg.scales))
    return d

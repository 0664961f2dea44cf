"""Command-line front end: one subcommand per experiment.

Every command writes its results into ``--out``; ``--format`` (repeatable)
selects which of csv, json and svg are written, all three by default. A short
comma-separated summary goes to stdout. Outputs depend only on the arguments,
so reruns produce identical CSV and JSON files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import image as im
from .curve import add_noise, read_curve
from .errors import MoebiusSigError
from .registration import RegistrationConfig, config_dict, register
from .signature import DEFAULT_DELTA_FRAC, DEFAULT_N_SIG, fcr_of_curve

FORMATS = ("csv", "json", "svg")


def _num(x):
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_num(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    return x


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_num(obj), indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def _summary(pairs) -> None:
    print("key,value")
    for k, v in pairs:
        print(f"{k},{v}")


class Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.formats = set(args.format or FORMATS)
        self.written = []

    def want(self, fmt: str) -> bool:
        return fmt in self.formats

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.written.append(p)
        return p


# ---------------------------------------------------------------- commands

def cmd_ellipse_demo(run: Run) -> None:
    a = run.args
    conv = ex.ellipse_convergence()
    trans = ex.ellipse_transforms(a.n or 100)
    keys = ["curvature", "crossratio", "modified", "richardson_modified", "richardson_crossratio"]
    if run.want("csv"):
        header = ["j", "N"] + [k for key in keys for k in (key, f"err_{key}")]
        rows = []
        for j, n in enumerate(conv["N"]):
            row = [j, n]
            for key in keys:
                v = conv[key][j]
                row += [None if np.isnan(v) else v, None if np.isnan(v) else conv[f"err_{key}"][j]]
            rows.append(row)
        _write_csv(run.path("ellipse_convergence.csv"), header, rows)
        _write_csv(run.path("ellipse_transforms.csv"),
                   ["k", "d_re", "d_im", "L_crossratio", "err_crossratio", "L_curvature", "err_curvature"],
                   [[k, d.real, d.imag, trans["crossratio"][k], trans["err_crossratio"][k],
                     trans["curvature"][k], trans["err_curvature"][k]] for k, d in enumerate(trans["d"])])
    e_cur = np.abs(trans["err_curvature"])
    cr = np.array(trans["crossratio"])
    summary = {
        "exact_length": conv["exact"],
        "richardson_final_error": conv["err_richardson_crossratio"][-1],
        "slopes": {k: conv[k] for k in conv if k.startswith("slope_")},
        "transform_N": trans["N"],
        "crossratio_relative_spread": float((cr.max() - cr.min()) / cr.mean()),
        "curvature_error_spread": float(e_cur.max() / e_cur.min()),
    }
    if run.want("json"):
        _write_json(run.path("ellipse_demo.json"), summary)
    if run.want("svg"):
        from . import plotting
        plotting.plot_convergence(conv, run.path("ellipse_convergence.svg"))
        plotting.plot_transformed_ellipses(trans, run.path("ellipse_transforms.svg"))
    _summary([("exact_length", conv["exact"]),
              ("length_crossratio_N800", conv["crossratio"][5]),
              ("length_curvature_N800", conv["curvature"][5]),
              ("richardson_final_error", summary["richardson_final_error"]),
              ("slope_crossratio", conv["slope_crossratio"]),
              ("slope_modified", conv["slope_modified"]),
              ("slope_richardson_modified", conv["slope_richardson_modified"]),
              ("curvature_error_spread", summary["curvature_error_spread"])])


def cmd_shapes(run: Run) -> None:
    a = run.args
    res = ex.shape_experiment(seed=a.seed, n_samples=a.n or 256, pairs=a.pairs,
                              n_sig=a.n_sig, delta_frac=a.delta_frac, alpha=a.alpha)
    seeds = res["seeds"]
    if run.want("csv"):
        rows = []
        for k, (i, j) in enumerate(res["pairs"]):
            d = res["d_moebius"][k]
            rows.append([i, j, seeds[i], seeds[j], res["fcr_distance"][k],
                         None if np.isnan(d) else d,
                         None if np.isnan(d) else res["r_forward"][k],
                         None if np.isnan(d) else res["r_backward"][k],
                         "" if res["converged"][k] is None else int(res["converged"][k])])
        _write_csv(run.path("shapes_pairs.csv"),
                   ["i", "j", "seed_i", "seed_j", "fcr_distance", "d_moebius", "r_forward",
                    "r_backward", "converged"], rows)
    summary = {k: res[k] for k in ("seeds", "vertices", "lengths", "correlation", "n_registered",
                                   "max_asymmetry")}
    summary["n_pairs"] = len(res["pairs"])
    summary["registration"] = config_dict(RegistrationConfig(alpha=a.alpha))
    summary["seed"] = a.seed
    if run.want("json"):
        _write_json(run.path("shapes_summary.json"), summary)
    if run.want("svg"):
        from . import plotting
        plotting.plot_scatter(res["d_moebius"], res["fcr_distance"], res["correlation"],
                              run.path("shapes_scatter.svg"))
    _summary([("pairs", len(res["pairs"])), ("registered", res["n_registered"]),
              ("correlation", res["correlation"]), ("max_asymmetry", res["max_asymmetry"])])


def cmd_noise(run: Run) -> None:
    a = run.args
    eps = ex.NOISE_EPS if a.noise is None else (0.0, a.noise)
    ns = ex.NOISE_NS if a.n is None else (a.n,)
    sw = ex.noise_sweep(ns, eps, a.realizations, a.seed, a.n_sig, a.delta_frac)
    if run.want("csv"):
        rows = [[n, e, sw["L_rel"][i, j], sw["FCR_rel"][i, j]]
                for i, n in enumerate(sw["N"]) for j, e in enumerate(sw["eps"])]
        _write_csv(run.path("noise_sweep.csv"), ["N", "eps", "L_rel", "FCR_rel"], rows)
    if run.want("json"):
        _write_json(run.path("noise_sweep.json"), sw)
    if run.want("svg"):
        from . import plotting
        plotting.plot_noise(sw, run.path("noise_sweep.svg"))
    print("N,eps,L_rel,FCR_rel")
    for i, n in enumerate(sw["N"]):
        for j, e in enumerate(sw["eps"]):
            print(f"{n},{e:g},{sw['L_rel'][i, j]:.4e},{sw['FCR_rel'][i, j]:.4e}")


def cmd_image_demo(run: Run) -> None:
    a = run.args
    m = a.n or im.DEFAULT_M
    ref = ex.reference_image_experiment(m)
    blobs = ex.blob_pairs_experiment(a.seed, m=m)
    jit = ex.jitter_experiment(a.seed, m=m)
    summary = {
        "m": m,
        "saddle_lambda_n": ref["saddle_lambda_n"],
        "saddle_location": ref["saddle_location"],
        "median_diff_lambda_n": ref["median_diff_lambda_n"],
        "median_diff_lambda_t": ref["median_diff_lambda_t"],
        "median_diff_lambda_n_bright": ref["median_diff_lambda_n_bright"],
        "median_diff_lambda_t_bright": ref["median_diff_lambda_t_bright"],
        "blob_pair_distances": blobs["distances"],
        "blob_transforms": [[p["transform"].a, p["transform"].c] for p in blobs["pairs"]],
        "jitter_moebius_distances": jit["moebius_distances"],
        "jitter_distinct_distances": jit["distinct_distances"],
        "jitter_ratio": jit["ratio"],
        "jitter_worst_ratio": jit["worst_ratio"],
        "seed": a.seed,
    }
    if run.want("json"):
        _write_json(run.path("image_demo.json"), summary)
    if run.want("csv"):
        sigs = []
        for p in blobs["pairs"]:
            sigs += [p["sig"], p["sig2"]]
        im.write_signature_csv(sigs, run.path("blob_signatures.csv"))
        im.write_signature_csv(jit["sigs"] + jit["msigs"], run.path("jitter_signatures.csv"))
        im.write_image_csv(ref["image"], run.path("reference_image.csv"))
        np.savetxt(run.path("reference_lambda_n.csv"), ref["fields"].lambda_n[::-1], delimiter=",", fmt="%.17g")
        np.savetxt(run.path("reference_lambda_t.csv"), ref["fields"].lambda_t[::-1], delimiter=",", fmt="%.17g")
        rows = []
        for k, poly in enumerate(im.level_set(ref["image"], 0.5)):
            rows += [[0.5, k, z.real, z.imag] for z in poly]
        _write_csv(run.path("reference_contours.csv"), ["level", "polyline", "x", "y"], rows)
    if run.want("svg"):
        from . import plotting
        plotting.plot_lambda_contours(ref["image"], ref["fields"], run.path("reference_lambda_n.svg"), "f")
        plotting.plot_lambda_contours(ref["image2"], ref["fields2"], run.path("pullback_lambda_n.svg"),
                                      "f o phi^-1")
        plotting.plot_signature_pairs([(p["sig"], p["sig2"]) for p in blobs["pairs"]],
                                      run.path("blob_signatures.svg"))
        plotting.plot_signature_pairs(list(zip(jit["sigs"], jit["msigs"])), run.path("jitter_signatures.svg"))
    _summary([("saddle_lambda_n", ref["saddle_lambda_n"]),
              ("median_diff_lambda_n", ref["median_diff_lambda_n"]),
              ("median_diff_lambda_t", ref["median_diff_lambda_t"]),
              ("blob_pairs_passing", sum(d < 0.02 for d in blobs["distances"])),
              ("jitter_ratio", jit["ratio"])])


def _is_curve_csv(path: Path) -> bool:
    with path.open() as fh:
        first = fh.readline().strip().replace(" ", "")
    return first.startswith("t,x,y")


def cmd_invariant(run: Run) -> None:
    a = run.args
    src = Path(a.input)
    if not src.is_file():
        raise FileNotFoundError(f"no such file: {src}")
    if src.suffix.lower() == ".pgm" or not _is_curve_csv(src):
        img = im.read_pgm(src) if src.suffix.lower() == ".pgm" else im.read_image_csv(src)
        sig = im.signature_curve(img, a.level)
        out = run.path(f"{src.stem}_signature.csv")
        im.write_signature_csv(sig, out)
        _summary([("kind", "image"), ("points", len(sig.points)), ("output", out)])
        return
    c = read_curve(src)
    if a.noise:
        c = add_noise(c, a.noise, a.seed)
    f = fcr_of_curve(c, a.delta_frac, a.n_sig)
    out = run.path(f"{src.stem}_fcr.json")
    f.to_json(out)
    _summary([("kind", "curve"), ("n_sig", f.n_sig), ("L", f.L), ("V", f.V), ("output", out)])


def cmd_register(run: Run) -> None:
    a = run.args
    z, w = read_curve(a.z), read_curve(a.w)
    cfg = RegistrationConfig(alpha=a.alpha)
    t0 = time.perf_counter()
    fwd = register(z, w, a.group, cfg)
    bwd = register(w, z, a.group, cfg)
    report = {
        "z": str(a.z),
        "w": str(a.w),
        "group": a.group,
        "config": config_dict(cfg),
        "forward": fwd.to_dict(),
        "backward": bwd.to_dict(),
        "d": max(fwd.r, bwd.r),
        "seed": a.seed,
    }
    out = run.path("register.json")
    _write_json(out, report)
    _summary([("r_forward", fwd.r), ("r_backward", bwd.r), ("d", report["d"]),
              ("seconds", round(time.perf_counter() - t0, 2)), ("output", out)])


COMMANDS = {
    "ellipse-demo": cmd_ellipse_demo,
    "shapes": cmd_shapes,
    "noise": cmd_noise,
    "image-demo": cmd_image_demo,
    "invariant": cmd_invariant,
    "register": cmd_register,
}


def _positive_int(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _delta_frac(s):
    v = float(s)
    if not 0 < v <= 0.25:
        raise argparse.ArgumentTypeError("must lie in (0, 1/4]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=_positive_int, default=None, help="sample count (command specific)")
    common.add_argument("--n-sig", type=_positive_int, default=DEFAULT_N_SIG)
    common.add_argument("--delta-frac", type=_delta_frac, default=DEFAULT_DELTA_FRAC)
    common.add_argument("--noise", type=float, default=None, help="noise standard deviation per axis")
    common.add_argument("--alpha", type=float, default=0.1, help="H1 derivative weight")
    common.add_argument("--pairs", type=_positive_int, default=None, help="number of pairs to register")
    common.add_argument("--out", default="out")
    common.add_argument("--format", action="append", choices=FORMATS,
                        help="output kinds to write (repeatable; default all)")

    p = argparse.ArgumentParser(prog="moebius-sig", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ellipse-demo", parents=[common], help="length convergence on the ellipse")
    sub.add_parser("shapes", parents=[common], help="registration vs FCR distance on random shapes")
    sp = sub.add_parser("noise", parents=[common], help="noise sweep on the ellipse")
    sp.add_argument("--realizations", type=_positive_int, default=20)
    sub.add_parser("image-demo", parents=[common], help="image invariants and blob signatures")
    sp = sub.add_parser("invariant", parents=[common], help="FCR of a curve CSV or signature of an image")
    sp.add_argument("input")
    sp.add_argument("--level", type=float, default=0.5)
    sp = sub.add_parser("register", parents=[common], help="register two curve CSVs")
    sp.add_argument("z")
    sp.add_argument("w")
    sp.add_argument("--group", choices=("moebius", "similarity"), default="moebius")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(args)
        COMMANDS[args.command](run)
    except (MoebiusSigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
Command line interface.

Precedence is defaults < ``--config`` file < explicit flags.  Exit codes:
0 all checks pass, 1 a tolerance check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ExperimentConfig, ParseError, ValidationError, load_config_text, parse_config
from .laplace import laplace_band_eigenvalues, laplace_effective_count
from .lattice import SubdividedZ2, Torus, build_lattice
from .operators import AdmissibilityError
from .symbol import band_eigenvalues, momentum_grid
from .verify import measure_curve, prediction_for, run_verify, spec_from

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--model", choices=("dirac", "laplace"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=float, help="mass (dirac)")
    p.add_argument("--gamma", type=float, help="decay rate, 0 < gamma < n")
    p.add_argument("--Gamma", type=_floats, help="coefficients Gamma_0,...,Gamma_n")
    p.add_argument("--L", type=int, help="box half-width")
    p.add_argument("--q", type=int, help="quadrature grid side")
    p.add_argument("--torus-q", dest="torus_q", type=int, help="torus side for effective-count")
    p.add_argument("--offset", choices=("half", "none"))
    p.add_argument("--lambda-grid", dest="lambda_grid", type=_floats, metavar="START,STOP,POINTS",
                   help="geometric lambda grid")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", help="output directory")
    p.add_argument("--no-admissibility-check", dest="check_admissible", action="store_const", const=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diracflat", description="Flat-band eigenvalue accumulation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bands", help="band functions on a momentum grid (CSV + figure)")
    _common(p)
    p.add_argument("--grid", type=int, default=64, help="points per axis of the k/grid mesh")

    p = sub.add_parser("constant", help="accumulation constant C (JSON line + CSV)")
    _common(p)

    p = sub.add_parser("count", help="counting curve on a box (CSV)")
    _common(p)

    p = sub.add_parser("effective-count", help="eigenvalue counts of PVP on a torus (CSV)")
    _common(p)
    p.add_argument("--method", choices=("auto", "loops", "dense"), default="auto")

    p = sub.add_parser("verify", help="prediction, counting curve, fit and verdicts")
    _common(p)
    p.add_argument("--l-doubling", dest="l_doubling", choices=("auto", "always", "never"))

    p = sub.add_parser("laplace-verify", help="verify for the subdivided Z^2 Laplacian")
    _common(p)
    p.add_argument("--l-doubling", dest="l_doubling", choices=("auto", "always", "never"))
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    over = {k: getattr(args, k, None) for k in
            ("model", "n", "m", "gamma", "Gamma", "L", "q", "torus_q", "offset", "seed", "output",
             "check_admissible", "l_doubling")}
    if args.command == "laplace-verify":
        over["model"] = "laplace"
    if args.lambda_grid is not None:
        if len(args.lambda_grid) != 3:
            raise ValidationError("--lambda-grid takes START,STOP,POINTS")
        start, stop, pts = args.lambda_grid
        if pts != int(pts):
            raise ValidationError("lambda grid POINTS must be an integer")
        over.update(lambda_start=start, lambda_stop=stop, lambda_points=int(pts))
    if args.n is not None and args.Gamma is None and args.config is None:
        over["Gamma"] = [0.0] + [1.0] * args.n
    if args.config is not None:
        return parse_config(args.config, over)
    return load_config_text("", over)


def _emit_csv(rows, header, out_path: Optional[Path]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text)
    return text


def _bands_path(n: int, pts: int) -> tuple:
    corners = [np.zeros(n)]
    for k in range(n):
        c = corners[-1].copy()
        c[k] = 0.5
        corners.append(c)
    corners.append(np.zeros(n))
    names = ["0"] + ["X" if k == 0 else ("M" if k == n - 1 else f"K{k}") for k in range(n)] + ["0"]
    xs, s, ticks, pos = [], [], {}, 0.0
    for a, b, name in zip(corners[:-1], corners[1:], names):
        seg = np.linalg.norm(b - a)
        t = np.linspace(0, 1, pts, endpoint=False)
        xs.append(a + t[:, None] * (b - a))
        s.append(pos + t * seg)
        ticks[pos] = name
        pos += seg
    ticks[pos] = names[-1]
    xs.append(corners[-1][None, :])
    s.append(np.array([pos]))
    return np.vstack(xs), np.concatenate(s), ticks


def cmd_bands(cfg: ExperimentConfig, args) -> int:
    from .plotting import plot_bands

    out = Path(cfg.output)
    n = cfg.n
    xi = momentum_grid(n, args.grid, "none").reshape(-1, n)
    if cfg.model == "laplace":
        ev = laplace_band_eigenvalues(xi)
        lo, flat, hi = ev[:, 0], np.full(len(xi), 2.0), ev[:, 2]
    else:
        ev = band_eigenvalues(xi, cfg.m)
        lo, flat, hi = ev[:, 0], np.full(len(xi), -cfg.m), ev[:, -1]
    rows = [[*(f"{v:.10g}" for v in x), f"{a:.12g}", f"{b:.12g}", f"{c:.12g}"]
            for x, a, b, c in zip(xi, lo, flat, hi)]
    header = [f"xi{j + 1}" for j in range(n)] + ["z_minus", "z_flat", "z_plus"]
    _emit_csv(rows, header, out / "bands.csv")
    intervals = [[float(lo.min()), float(lo.max())], [float(hi.min()), float(hi.max())]]
    print(json.dumps({"model": cfg.model, "n": n, "grid": args.grid, "flat": float(flat[0]),
                      "bands": intervals, "csv": str(out / "bands.csv")}))
    path_xi, s, ticks = _bands_path(n, 120)
    if cfg.model == "laplace":
        curves = laplace_band_eigenvalues(path_xi)
    else:
        full = band_eigenvalues(path_xi, cfg.m)
        curves = np.stack([full[:, 0], full[:, 1], full[:, -1]], axis=1)
    labels = ["z-", "flat", "z+"]
    plot_bands(s, {lab: curves[:, k] for k, lab in enumerate(labels)}, ticks, out / "bands.svg",
               title=f"{cfg.model} bands")
    return EXIT_OK


def cmd_constant(cfg: ExperimentConfig, args) -> int:
    pred = prediction_for(cfg)
    out = Path(cfg.output)
    d = pred.to_dict()
    print(json.dumps(d))
    keys = list(d)
    _emit_csv([[json.dumps(d[k]) if isinstance(d[k], list) else d[k] for k in keys]], keys, out / "constant.csv")
    return EXIT_OK if pred.converged else EXIT_FAIL


def cmd_count(cfg: ExperimentConfig, args) -> int:
    curve = measure_curve(cfg)
    L = curve.metadata.get("L")
    rows = [[repr(float(lam)), int(N), L, f"{t:.1f}"]
            for lam, N, t in zip(curve.lambdas, curve.counts, curve.runtime_ms)]
    sys.stdout.write(_emit_csv(rows, ["lambda", "N", "L", "runtime_ms"], Path(cfg.output) / "count.csv"))
    return EXIT_OK


def cmd_effective(cfg: ExperimentConfig, args) -> int:
    from .flatband import effective_count

    spec = spec_from(cfg)
    twisted = cfg.offset == "half"
    lam = cfg.lambda_grid()[::-1]
    if cfg.model == "laplace":
        g = build_lattice(2, SubdividedZ2(Torus(cfg.torus_q, twisted)))
        counts = laplace_effective_count(g, spec, lam, args.method, seed=cfg.seed)
    else:
        g = build_lattice(cfg.n, Torus(cfg.torus_q, twisted))
        counts = effective_count(g, spec, lam, args.method, seed=cfg.seed)
    pred = prediction_for(cfg)
    ratios = counts * lam**pred.exponent / pred.prefactor if pred.prefactor > 0 else np.full(len(lam), np.nan)
    rows = [[repr(float(x)), int(c), cfg.torus_q, f"{r:.10g}"] for x, c, r in zip(lam, counts, ratios)]
    sys.stdout.write(_emit_csv(rows, ["lambda", "n_plus", "q", "ratio"], Path(cfg.output) / "effective_count.csv"))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    report = run_verify(cfg, cfg.output)
    curve = report.curve
    rows = []
    for k, (lam, N) in enumerate(zip(curve.lambdas, curve.counts)):
        ratio = report.ratios[k] if report.ratios is not None else float("nan")
        rows.append([repr(float(lam)), int(N), f"{ratio:.6f}"])
    sys.stdout.write(_emit_csv(rows, ["lambda", "N", "ratio"], None))
    print(json.dumps(report.summary()))
    for name, ok in report.checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "bands": cmd_bands,
    "constant": cmd_constant,
    "count": cmd_count,
    "effective-count": cmd_effective,
    "verify": cmd_verify,
    "laplace-verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ParseError, ValidationError, AdmissibilityError, OSError) as exc:
        print(f"diracflat: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg, args)
    except (ValidationError, AdmissibilityError) as exc:
        print(f"diracflat: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

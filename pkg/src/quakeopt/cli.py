"""Command-line front end: generate, optimize, analyze, hypervolume.

Exit codes: 0 success, 1 invalid input or engine error, 2 missing input
file (and argparse usage errors).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analysis, problem, reporting
from .engine import EngineConfig, run_optimizer
from .hypervolume import contributions, hypervolume_2d

EXIT_INVALID = 1
EXIT_MISSING = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} file not found: {p}", EXIT_MISSING)
    return p


def _dump(data) -> str:
    return json.dumps(data, indent=1) + "\n"


def cmd_generate(args) -> int:
    if args.reference:
        spec = problem.reference_instance()
    else:
        if args.nodes < 1 or args.types < 1:
            raise CliError("--nodes and --types must be >= 1")
        spec = problem.generate_network_spec(args.nodes, args.types, args.seed, F_star=args.f_star)
    reporting.atomic_write_text(args.out, _dump(problem.spec_to_dict(spec)))
    print(f"wrote {args.out} (N={spec.N}, T={spec.T}, active dims={spec.active_dims.size})")
    return 0


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = _require_file(path, "config")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{p}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError(f"{p}: top level must be a JSON object")
    return data


def cmd_optimize(args) -> int:
    spec_path = _require_file(args.spec, "spec")
    try:
        spec = problem.load_network_spec(spec_path)
    except ValueError as exc:
        raise CliError(f"{spec_path}: {exc}") from None
    cfg = _load_config(args.config)
    cfg["seed"] = args.seed if args.seed is not None else cfg.get("seed", 0)
    if args.selection is not None:
        cfg["selection"] = args.selection
    if args.generations is not None:
        cfg["max_generations"] = args.generations
    try:
        config = EngineConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}") from None

    out = Path(args.out)
    manifest = {
        "spec": str(spec_path),
        "config": None if args.config is None else str(args.config),
        "seed": config.seed,
        "out": str(out),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    reporting.atomic_write_text(out / "manifest.json", _dump(manifest))
    report = run_optimizer(spec, config)
    reporting.atomic_write_text(out / "archive.csv", reporting.archive_csv(spec, report.archive))
    reporting.atomic_write_text(out / "run.json", reporting.run_json(report, spec_path))
    reporting.atomic_write_text(out / "magnitudes.csv", reporting.trace_csv(report.magnitude_trace))
    best = report.best
    g = "n/a" if best is None else f"{-best.objectives[0]:.6g}"
    print(f"{report.generations} generations ({report.stop_reason}), archive {len(report.archive)}, "
          f"best G {g}, {report.wall_time:.1f} s -> {out}")
    return 0


def cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    trace = _require_file(run_dir / "magnitudes.csv", "magnitude trace")
    try:
        mags = reporting.read_trace_csv(trace)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    both = not (args.gr_fit or args.poisson_check)
    gr = args.gr_fit or both
    pc = args.poisson_check or both
    try:
        rep = analysis.trace_report(
            mags, args.bins, gr_fit=gr, poisson_check=pc, iterations=args.iterations,
            log_magnitudes=args.log_magnitudes, rng=np.random.default_rng(args.seed),
        )
    except ValueError as exc:
        raise CliError(f"analysis failed: {exc}") from None

    # plot-ready rows: bin midpoint, count, fitted count
    hist = rep["histogram"]
    edges = np.array(hist["edges"])
    mid = 0.5 * (edges[1:] + edges[:-1])
    fitted = [""] * mid.size
    if "gr_fit" in rep:
        fit = analysis.GrFit(rep["gr_fit"]["a"], rep["gr_fit"]["b"], rep["gr_fit"]["residual"])
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.log10(mid) if args.log_magnitudes else mid
            fitted = [repr(float(v)) for v in fit.predict(x)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin", "count", "fitted"])
    for m, c, f in zip(mid, hist["counts"], fitted):
        w.writerow([repr(float(m)), c, f])

    out = Path(args.out) if args.out else run_dir
    reporting.atomic_write_text(out / "analysis.json", _dump(rep))
    reporting.atomic_write_text(out / "histogram.csv", buf.getvalue())
    if "gr_fit" in rep:
        print(f"GR fit: a = {rep['gr_fit']['a']:.6g}, b = {rep['gr_fit']['b']:.6g}")
    if "poisson_check" in rep:
        p = rep["poisson_check"]
        print(f"Poisson: lambda(q) = {p['lambda_q']:.6g}, mean/var = {p['ratio']:.4f}, "
              f"KS p = {p['ks_pvalue']:.3g}")
    return 0


def cmd_hypervolume(args) -> int:
    front_path = _require_file(args.front, "front")
    try:
        pts = reporting.read_front_csv(front_path)
        hv = hypervolume_2d(pts, args.ref)
        contrib = contributions(pts, args.ref)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    print(f"hypervolume {hv!r}")
    for i, (p, c) in enumerate(zip(pts, contrib)):
        print(f"  {i}: ({float(p[0])!r}, {float(p[1])!r}) contribution {float(c)!r}")
    if args.out:
        data = {
            "reference": list(args.ref),
            "hypervolume": hv,
            "points": pts.tolist(),
            "contributions": contrib.tolist(),
        }
        reporting.atomic_write_text(args.out, _dump(data))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quakeopt", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic network spec")
    g.add_argument("--nodes", "-N", type=int, default=4)
    g.add_argument("--types", "-T", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--f-star", type=float, default=0.9, help="critical fidelity F*")
    g.add_argument("--reference", action="store_true",
                   help="write the fixed N=4, T=2 reference instance instead")
    g.add_argument("--out", required=True, help="spec JSON path")
    g.set_defaults(func=cmd_generate)

    o = sub.add_parser("optimize", help="run the optimizer on a spec")
    o.add_argument("--spec", required=True)
    o.add_argument("--config", help="engine config JSON (keys of EngineConfig)")
    o.add_argument("--seed", type=int, help="overrides the config seed (default 0)")
    o.add_argument("--selection", choices=("inverted", "literal"))
    o.add_argument("--generations", type=int, help="overrides max_generations")
    o.add_argument("--out", required=True, help="output directory")
    o.set_defaults(func=cmd_optimize)

    a = sub.add_parser("analyze", help="magnitude statistics of a run")
    a.add_argument("run_dir")
    a.add_argument("--gr-fit", action="store_true")
    a.add_argument("--poisson-check", action="store_true")
    a.add_argument("--bins", type=int, default=20, help="number of magnitude ranges")
    a.add_argument("--iterations", type=int, default=1000)
    a.add_argument("--log-magnitudes", action="store_true",
                   help="regress on log10 of the bin midpoints")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", help="output directory (default: the run directory)")
    a.set_defaults(func=cmd_analyze)

    h = sub.add_parser("hypervolume", help="exact 2-D hypervolume of a front CSV")
    h.add_argument("front")
    h.add_argument("--ref", type=float, nargs=2, required=True, metavar=("R1", "R2"))
    h.add_argument("--out", help="optional JSON output path")
    h.set_defaults(func=cmd_hypervolume)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

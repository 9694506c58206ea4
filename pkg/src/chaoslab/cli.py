"""Command-line front end: ``chaoslab <subcommand> ...``.

Exit codes
----------
0  success, or an experiment verdict matching its expected verdict
1  a check or experiment came out differently than expected
2  usage error or malformed input
3  a capacity cap (degree, order, cells, matrix budget) was exceeded
4  an experiment's hypothesis gate refused the families
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cramer import (
    ConfigError,
    bundled_config,
    list_bundled_configs,
    load_config,
    resolve_config,
    run_experiment,
    write_report,
)
from .errors import CapacityError, ChaosLabError, HypothesisViolation
from .kernel import (
    adjoint,
    contract,
    inner_product,
    load_kernel,
    nested_contract,
    norm,
    save_kernel,
    symmetrize,
)
from .pairings import DEGREE_CAP, max_degree
from .wiener import SimulationPlan, exact_moment_wick, mc_product_moment
from .wigner import matrix_oracle_moment, semicircle_density, semicircle_moment, trace_moment

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CAPACITY, EXIT_GATE = 0, 1, 2, 3, 4


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _record(command: str, config: dict, result: dict) -> dict:
    return {
        "tool": "chaoslab",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed", 0),
        "result": result,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_path(args, given: str | None, default: str) -> Path:
    path = Path(given) if given else Path(default)
    return path if path.is_absolute() else Path(args.out_dir) / path


# --- subcommands -------------------------------------------------------------


def cmd_contract(args) -> int:
    f, g = load_kernel(args.f), load_kernel(args.g)
    op = nested_contract if args.nested else contract
    out = op(f, g, args.l)
    config = {"f": args.f, "g": args.g, "l": args.l, "nested": args.nested, "seed": args.seed}
    path = _out_path(args, args.out, "contraction.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_kernel(out, path, meta={"tool": "chaoslab", "version": __version__, "command": "contract", "config": config})
    print(f"norm {norm(out)!r}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_symmetrize(args) -> int:
    f = load_kernel(args.f)
    out = symmetrize(f) if args.kind == "full" else (f + adjoint(f)) * 0.5
    config = {"f": args.f, "kind": args.kind, "seed": args.seed}
    path = _out_path(args, args.out, "symmetrized.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_kernel(out, path, meta={"tool": "chaoslab", "version": __version__, "command": "symmetrize", "config": config})
    print(f"norm {norm(out)!r}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_moment(args) -> int:
    files = [s for s in args.word.split(",") if s]
    if not files:
        raise ConfigError("--word needs at least one kernel file")
    cache = {name: load_kernel(name) for name in dict.fromkeys(files)}
    word = [cache[name] for name in files] * args.p
    config = {
        "side": args.side,
        "method": args.method,
        "word": files,
        "p": args.p,
        "seed": args.seed,
        "degree_cap": max_degree(),
    }
    result: dict = {}
    if args.method == "exact":
        value = trace_moment(word) if args.side == "wigner" else exact_moment_wick(word)
        result["value"] = value
        print(f"value {value!r}")
    else:
        plan = SimulationPlan(args.paths, args.seed, args.workers)
        config["paths"] = args.paths
        if args.method == "matrix":
            if args.side != "wigner":
                raise ConfigError("--method matrix is only available with --side wigner")
            config["d"] = args.d
            est = matrix_oracle_moment(word, args.d, plan)
        else:
            if args.side != "wiener":
                raise ConfigError("--method mc is only available with --side wiener")
            est = mc_product_moment(word, None, plan)
        result = {"value": est.value, "std_error": est.std_error, "paths": est.paths}
        print(f"value {est.value!r}")
        print(f"std_error {est.std_error!r}")
    path = _out_path(args, args.out, "moment.json")
    _write_json(path, _record("moment", config, result))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_isometry_check(args) -> int:
    f = load_kernel(args.f)
    g = load_kernel(args.g) if args.g else f
    # free side: phi(I(f) I(g)) = <f, g*>
    free_lhs = trace_moment([f, g])
    free_rhs = inner_product(f, adjoint(g)) if f.order == g.order else 0.0
    # classical side: E[I(f) I(g)] = q! <sym f, sym g>, zero across orders
    cl_lhs = exact_moment_wick([f, g])
    if f.order == g.order:
        cl_rhs = math.factorial(f.order) * inner_product(symmetrize(f), symmetrize(g))
    else:
        cl_rhs = 0.0
    scale = max(1.0, abs(free_rhs), abs(cl_rhs))
    free_ok = abs(free_lhs - free_rhs) <= args.tol * scale
    cl_ok = abs(cl_lhs - cl_rhs) <= args.tol * scale
    result = {
        "wigner": {"trace_moment": free_lhs, "inner_with_adjoint": free_rhs, "ok": free_ok},
        "wiener": {"wick_moment": cl_lhs, "symmetrized_inner": cl_rhs, "ok": cl_ok},
    }
    config = {"f": args.f, "g": args.g or args.f, "tol": args.tol, "seed": args.seed}
    path = _out_path(args, args.out, "isometry.json")
    _write_json(path, _record("isometry-check", config, result))
    print(f"wigner {free_lhs!r} vs {free_rhs!r}: {'ok' if free_ok else 'MISMATCH'}")
    print(f"wiener {cl_lhs!r} vs {cl_rhs!r}: {'ok' if cl_ok else 'MISMATCH'}")
    return EXIT_OK if free_ok and cl_ok else EXIT_MISMATCH


def semicircle_mass(mean: float, var: float, nodes: int = 64) -> float:
    """Total mass of the semicircle density by Gauss-Legendre quadrature.

    The substitution ``x = mean + 2 sigma sin(t)`` removes the square-root
    endpoints, so the integrand is smooth and the rule converges fast.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = t * (math.pi / 2)
    sigma = math.sqrt(var)
    x = mean + 2 * sigma * np.sin(t)
    jac = 2 * sigma * np.cos(t)
    return float(np.sum(w * semicircle_density(mean, var, x) * jac) * (math.pi / 2))


def cmd_semicircle(args) -> int:
    if not args.var > 0:
        raise ConfigError("--var must be positive")
    moments = {str(k): semicircle_moment(k, args.var) for k in range(0, args.max_moment + 1)}
    mass = semicircle_mass(args.mean, args.var)
    result = {"centered_moments": moments, "mass": mass}
    if args.x:
        xs = [float(v) for v in args.x.split(",")]
        result["density"] = {repr(x): float(semicircle_density(args.mean, args.var, x)) for x in xs}
    config = {"mean": args.mean, "var": args.var, "max_moment": args.max_moment, "x": args.x, "seed": args.seed}
    path = _out_path(args, args.out, "semicircle.json")
    _write_json(path, _record("semicircle", config, result))
    print(f"mass {mass!r}")
    for k, v in moments.items():
        print(f"m{k} {v!r}")
    print(f"wrote {path}")
    return EXIT_OK


def _resolve_config_arg(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    bundled = bundled_config(arg)
    if bundled.exists():
        return bundled
    raise ConfigError(f"no config file {arg!r} and no bundled config of that name")


def _run_config(args, raw: dict, base_dir: Path | None) -> int:
    raw = dict(raw)
    if args.seed_given:
        raw["seed"] = args.seed
    cfg = resolve_config(raw)
    report = run_experiment(cfg, base_dir)
    json_path = _out_path(args, Path(cfg["output"]["json_path"]).name, "report.json")
    csv_path = _out_path(args, Path(cfg["output"]["csv_path"]).name, "report.csv")
    written = write_report(report, cfg, json_path, csv_path)
    verdict = "pass" if report.verdict else "fail"
    for label, slope in report.fitted_rate.items():
        print(f"slope {label} {slope!r}")
    print(f"verdict {verdict} (expected {cfg['expected_verdict']})")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK if verdict == cfg["expected_verdict"] else EXIT_MISMATCH


def cmd_cramer(args) -> int:
    if args.list:
        for name in list_bundled_configs():
            print(name)
        return EXIT_OK
    if not args.config:
        raise ConfigError("cramer needs --config (a path or a bundled name; see --list)")
    path = _resolve_config_arg(args.config)
    return _run_config(args, load_config(path), path.parent)


def cmd_transfer(args) -> int:
    if args.config:
        path = _resolve_config_arg(args.config)
        raw = load_config(path)
        if raw.get("mode") != "transfer":
            raise ConfigError(f"{args.config}: transfer needs a config with mode 'transfer'")
        return _run_config(args, raw, path.parent)
    raw = {
        "mode": "transfer",
        "families": [{"label": args.label, "kind": args.kind, "q": args.q, "block_offset": 0}],
        "indices": [int(v) for v in args.indices.split(",")],
        "expected_verdict": "pass",
        "output": {"csv_path": "transfer.csv", "json_path": "transfer.json"},
    }
    return _run_config(args, raw, None)


# --- parser ---------------------------------------------------------------------


class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=0, action=_SeedAction,
                        help="unsigned 64-bit seed (default: %(default)s)")
    common.add_argument("--workers", type=_positive, default=1,
                        help="worker threads; never changes results (default: %(default)s)")
    common.add_argument("--out-dir", default=".", help="directory for output files (default: %(default)s)")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    parser = argparse.ArgumentParser(prog="chaoslab", description="Classical and free chaos on grid kernels.")
    parser.add_argument("--version", action="version", version=f"chaoslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("contract", parents=[common], formatter_class=fmt, help="contract two kernel files")
    p.add_argument("--f", required=True, help="first kernel file")
    p.add_argument("--g", required=True, help="second kernel file")
    p.add_argument("--l", type=int, required=True, help="number of glued arguments")
    p.add_argument("--nested", action="store_true", help="glue the arguments of g in reversed order")
    p.add_argument("--out", default=None, help="output kernel file (default: contraction.json in --out-dir)")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("symmetrize", parents=[common], formatter_class=fmt, help="symmetrize a kernel file")
    p.add_argument("--f", required=True, help="kernel file")
    p.add_argument("--kind", choices=["full", "mirror"], default="full", help="symmetry to impose")
    p.add_argument("--out", default=None, help="output kernel file (default: symmetrized.json in --out-dir)")
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("moment", parents=[common], formatter_class=fmt, help="moment of a product of integrals")
    p.add_argument("--side", choices=["wiener", "wigner"], default="wiener", help="classical or free integrals")
    p.add_argument("--method", choices=["exact", "mc", "matrix"], default="exact", help="backend")
    p.add_argument("--word", required=True, help="comma-separated kernel files, one per factor")
    p.add_argument("--p", type=_positive, default=1, help="repeat the word this many times")
    p.add_argument("--paths", type=_positive, default=100_000, help="paths for stochastic backends")
    p.add_argument("--d", type=_positive, default=256, help="matrix size for the matrix backend")
    p.add_argument("--out", default=None, help="output record (default: moment.json in --out-dir)")
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("isometry-check", parents=[common], formatter_class=fmt,
                       help="check second-moment isometries on kernel files")
    p.add_argument("--f", required=True, help="first kernel file")
    p.add_argument("--g", default=None, help="second kernel file (default: same as --f)")
    p.add_argument("--tol", type=float, default=1e-12, help="relative tolerance")
    p.add_argument("--out", default=None, help="output record (default: isometry.json in --out-dir)")
    p.set_defaults(func=cmd_isometry_check)

    p = sub.add_parser("semicircle", parents=[common], formatter_class=fmt, help="semicircle law moments and density")
    p.add_argument("--mean", type=float, default=0.0, help="center of the law")
    p.add_argument("--var", type=float, default=1.0, help="variance of the law")
    p.add_argument("--max-moment", type=int, default=8, help="highest centered moment to list")
    p.add_argument("--x", default=None, help="comma-separated points at which to evaluate the density")
    p.add_argument("--out", default=None, help="output record (default: semicircle.json in --out-dir)")
    p.set_defaults(func=cmd_semicircle)

    p = sub.add_parser("cramer", parents=[common], formatter_class=fmt, help="run a convergence experiment")
    p.add_argument("--config", default=None, help="config file, or the name of a bundled config")
    p.add_argument("--list", action="store_true", help="list bundled configs and exit")
    p.set_defaults(func=cmd_cramer)

    p = sub.add_parser("transfer", parents=[common], formatter_class=fmt,
                       help="compare classical and free diagnostics of one family")
    p.add_argument("--config", default=None, help="transfer config file or bundled name")
    p.add_argument("--kind", choices=["clt", "constant", "zero"], default="clt", help="family kind without --config")
    p.add_argument("--q", type=int, default=2, help="family order without --config")
    p.add_argument("--label", default="F", help="family label without --config")
    p.add_argument("--indices", default="1,2,4,8,16", help="comma-separated index ladder without --config")
    p.set_defaults(func=cmd_transfer)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "seed_given"):
        args.seed_given = False
    try:
        return args.func(args)
    except HypothesisViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except CapacityError as exc:
        print(f"error: {exc} (degree cap {max_degree()}, hard cap {DEGREE_CAP})", file=sys.stderr)
        return EXIT_CAPACITY
    except (ChaosLabError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``rtucker {generate,decompose,benchmark,verify-bounds}``.

Mode numbers given on the command line (``--order``) are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace

import numpy as np

from .algorithms import ALGORITHMS, AlgoConfig, reconstruct, relative_error
from .bench import (
    CSV_COLUMNS,
    ExperimentConfig,
    kernel_threads,
    orthonormality_report,
    run_benchmark,
    timed_run,
    verify_bounds,
    write_csv,
)
from .bounds import bound_alg1_total, bound_alg4_total
from .datagen import KINDS, GeneratorSpec, desk_spec, generate, load_tensor, save_tensor
from .tensor import frobenius_norm


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _add_algo_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    if sweep:
        p.add_argument("--ranks", type=_int_list, action="append",
                       help="repeatable; one multilinear rank per sweep point")
    else:
        p.add_argument("--ranks", type=_int_list, help="multilinear rank, e.g. 10,10,10")
    p.add_argument("--oversampling", type=int, default=10)
    p.add_argument("--power", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--samples", type=_int_list, help="sampled columns per mode (overrides alpha)")
    p.add_argument("--regime", choices=("uniform", "optimal", "nearly-optimal"), default="uniform")
    p.add_argument("--beta", type=float, default=0.5, help="mixing weight of the nearly-optimal regime")
    p.add_argument("--order", type=_int_list, help="processing order, 1-based, e.g. 3,2,1")
    p.add_argument("--strategy", choices=("A", "B"), default="A")
    p.add_argument("--seed", type=int, default=0)


def _algo_config(args, ndim: int) -> AlgoConfig:
    if not args.ranks:
        raise SystemExit("error: --ranks is required")
    ranks = args.ranks * ndim if len(args.ranks) == 1 else args.ranks
    order = None
    if args.order:
        order = [m - 1 for m in args.order]
    return AlgoConfig(
        ranks=ranks, oversampling=args.oversampling, power=args.power, alpha=args.alpha,
        regime=args.regime, beta=args.beta, samples=args.samples, order=order,
        seed=args.seed, strategy=args.strategy,
    )


def cmd_generate(args) -> int:
    if args.config:
        spec = GeneratorSpec.from_dict(_load_json(args.config))
    else:
        overrides = {"seed": args.seed}
        for key in ("dims", "core_dims", "gamma", "snr"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        spec = desk_spec(args.kind, **overrides)
    t = generate(spec)
    save_tensor(args.output, t)
    print(json.dumps({"output": args.output, "dims": list(t.shape),
                      "norm": frobenius_norm(t), "spec": spec.to_dict()}))
    return 0


def cmd_decompose(args) -> int:
    if args.algorithm not in ALGORITHMS:
        raise SystemExit(f"error: unknown algorithm {args.algorithm!r}")
    a = load_tensor(args.input)
    cfg = _algo_config(args, a.ndim)
    with kernel_threads(1 if args.timed else None):
        d, ms = timed_run(args.algorithm, a, cfg)
    re = relative_error(a, reconstruct(d))
    result = {
        "algorithm": args.algorithm,
        "dims": list(a.shape),
        "ranks": list(d.ranks),
        "RE": re,
        "FIT": 1.0 - re,
        "wall_time_ms": ms,
        "orthonormality_residuals": orthonormality_report(d),
        "info": d.info,
    }
    if args.bounds:
        if args.algorithm in ("alg1",):
            result["bound"] = bound_alg1_total(a, cfg, decomposition=d).to_dict()
        elif args.algorithm == "alg4" and cfg.power == 1:
            result["bound"] = bound_alg4_total(a, cfg, decomposition=d).to_dict()
        else:
            result["bound"] = None
    _emit(result, args.output)
    return 0


def cmd_benchmark(args) -> int:
    if args.config:
        exp = ExperimentConfig.from_dict(_load_json(args.config))
    else:
        if not args.algorithm:
            raise SystemExit("error: --algorithm or --config is required")
        algos = args.algorithm.split(",")
        if args.input:
            source = {"input": args.input}
        else:
            source = {"generator": desk_spec(args.kind, seed=args.data_seed)}
        ndim = len(load_tensor(args.input).shape) if args.input else len(source["generator"].dims)
        if not args.ranks:
            raise SystemExit("error: --ranks is required")
        ranks = [r * ndim if len(r) == 1 else r for r in args.ranks]
        base = {
            "oversampling": args.oversampling, "power": args.power, "alpha": args.alpha,
            "regime": args.regime, "beta": args.beta, "strategy": args.strategy,
        }
        if args.order:
            base["order"] = [m - 1 for m in args.order]
        if args.samples:
            base["samples"] = args.samples
        exp = ExperimentConfig(
            algorithms=algos, ranks=ranks, seeds=args.seeds or [args.seed],
            reps=args.reps, base=base, timed=args.timed, verify=args.verify, **source,
        )
    if args.timed:
        exp = replace(exp, timed=True)
    rows = run_benchmark(exp)
    if args.output:
        write_csv(args.output, rows, append=args.append)
    else:
        print(",".join(CSV_COLUMNS))
        for row in rows:
            print(",".join(row.to_csv()))
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows, {failed} failed", file=sys.stderr)
    return 0


def cmd_verify_bounds(args) -> int:
    if args.config:
        cfg_d = _load_json(args.config)
        a = generate(GeneratorSpec.from_dict(cfg_d["generator"])) if "generator" in cfg_d \
            else load_tensor(cfg_d["input"])
        cfg = AlgoConfig(**cfg_d.get("algo", {}))
        extra = {k: cfg_d[k] for k in ("trials", "beta", "gamma", "delta") if k in cfg_d}
    else:
        if not args.input:
            raise SystemExit("error: --input or --config is required")
        a = load_tensor(args.input)
        cfg = _algo_config(args, a.ndim)
        extra = {"trials": args.trials, "beta": args.bound_beta,
                 "gamma": args.gamma, "delta": args.delta}
    report = verify_bounds(a, cfg, **extra)
    _emit(report, args.output)
    return 0 if report["deterministic_ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtucker", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic tensor to a TNSR file")
    g.add_argument("--kind", choices=KINDS, default="tucker_noise")
    g.add_argument("--config", help="JSON generator spec (overrides the other flags)")
    g.add_argument("--dims", type=_int_list)
    g.add_argument("--core-dims", dest="core_dims", type=_int_list)
    g.add_argument("--gamma", type=float)
    g.add_argument("--snr", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decompose", help="run one algorithm on a TNSR tensor")
    d.add_argument("--input", required=True)
    d.add_argument("--algorithm", required=True, choices=tuple(ALGORITHMS))
    _add_algo_flags(d)
    d.add_argument("--timed", action="store_true", help="single-threaded kernels")
    d.add_argument("--bounds", action="store_true", help="attach a bound report (alg1, alg4)")
    d.add_argument("--output", help="JSON output path (default: stdout)")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("benchmark", help="run a sweep and write CSV rows")
    b.add_argument("--config", help="JSON experiment config")
    b.add_argument("--input")
    b.add_argument("--kind", choices=KINDS, default="tucker_noise",
                   help="desk-scale generator used when --input is absent")
    b.add_argument("--data-seed", type=int, default=0)
    b.add_argument("--algorithm", help="comma-separated algorithm ids")
    _add_algo_flags(b, sweep=True)
    b.add_argument("--seeds", type=_int_list)
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--timed", action="store_true")
    b.add_argument("--verify", action="store_true", help="check the deterministic inequalities per row")
    b.add_argument("--append", action="store_true")
    b.add_argument("--output", help="CSV output path (default: stdout)")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("verify-bounds", help="empirical bound frequencies and hard inequality checks")
    v.add_argument("--config")
    v.add_argument("--input")
    _add_algo_flags(v)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--bound-beta", type=float, default=2.0)
    v.add_argument("--gamma", type=float, default=2.0)
    v.add_argument("--delta", type=float, default=0.1)
    v.add_argument("--output")
    v.set_defaults(func=cmd_verify_bounds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())

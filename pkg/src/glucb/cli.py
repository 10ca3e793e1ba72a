"""Command-line entry point: ``glucb gen | run | lower-bound``.

Exit codes: 0 success, 1 usage or argument error, 2 runtime failure
(unreadable files, solver non-convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import complexity, env, harness

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, help="dimension (soare, sphere)")
    p.add_argument("--k", type=int, help="number of arms (sphere, crowded)")
    p.add_argument("--omega", type=float, help="angle of the extra arm (soare, three_arm)")
    p.add_argument("--gamma", type=float, help="offset toward the runner-up (sphere)")
    p.add_argument("--sigma", type=float, help="jitter std of the crowded arms (crowded)")
    p.add_argument("--noise-std", type=float, help="Gaussian reward noise std")


def _dataset_params(args) -> dict:
    keys = ("d", "k", "omega", "gamma", "sigma", "noise_std")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glucb", description="Best-arm identification in linear bandits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("dataset", choices=harness.DATASETS)
    _add_dataset_args(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="instance file to write")

    run = sub.add_parser("run", help="run seeded trials and write a per-trial CSV")
    run.add_argument("--config", help="JSON config file; flags override its fields")
    run.add_argument("--algo", choices=harness.ALGOS)
    run.add_argument("--radius-mode", choices=("det", "simple"))
    run.add_argument("--delta", type=float)
    run.add_argument("--R", type=float)
    run.add_argument("--S", type=float)
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", dest="master_seed", type=int)
    run.add_argument("--max-steps", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--weights", help="comma-separated static allocation")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--instance", help="instance file")
    src.add_argument("--dataset", choices=harness.DATASETS)
    _add_dataset_args(run)
    run.add_argument("--dataset-seed", type=int, help="seed of a random dataset")
    run.add_argument("--out", required=True, help="CSV output; summary goes to <out>.summary.json")

    lb = sub.add_parser("lower-bound", help="compute H_G, w* and the sample lower bound")
    lb.add_argument("instance", help="instance file")
    lb.add_argument("--delta", type=float, default=0.05)
    lb.add_argument("--tol", type=float, default=1e-6)
    lb.add_argument("--max-iter", type=int, default=100_000)
    return parser


def _config_from_args(args) -> harness.ExperimentConfig:
    data: dict = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
    for key in ("algo", "radius_mode", "delta", "R", "S", "lam", "trials", "master_seed", "max_steps", "workers"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.weights:
        data["static_weights"] = [float(v) for v in args.weights.split(",")]
    if args.instance:
        data["instance"] = args.instance
        data.pop("dataset", None)
    elif args.dataset:
        spec = {"name": args.dataset, **_dataset_params(args)}
        if args.dataset_seed is not None:
            spec["seed"] = args.dataset_seed
        data["dataset"] = spec
        data.pop("instance", None)
    return harness.ExperimentConfig.from_mapping(data)


def _load(loader, *args):
    try:
        return loader(*args)
    except (ValueError, KeyError) as exc:
        raise RuntimeError(f"cannot read instance: {exc}") from exc


def cmd_gen(args) -> int:
    params = _dataset_params(args)
    params["seed"] = args.seed
    try:
        instance = harness.make_dataset(args.dataset, **params)
    except env.ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    env.dump_instance(instance, args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config_from_args(args)
    if config.instance is not None:
        instance = _load(env.load_instance, config.instance)
    else:
        instance = harness.load_config_instance(config)
    if config.static_weights is not None and len(config.static_weights) != instance.K:
        raise UsageError(f"--weights needs {instance.K} entries")
    records = harness.run_experiment(config, instance)
    harness.write_csv(records, args.out)
    stats = harness.aggregate(records)
    harness.write_summary(stats, f"{args.out}.summary.json")
    print(json.dumps(asdict(stats)))
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    if not 0.0 < args.delta < 0.15:
        raise UsageError(f"--delta must lie in (0, 0.15), got {args.delta}")
    instance = _load(env.load_instance, args.instance)
    result = complexity.solve_hg(instance, tol=args.tol, max_iter=args.max_iter)
    out = result.to_dict()
    out["delta"] = args.delta
    out["sample_lower_bound"] = complexity.sample_lower_bound(result.h_g, args.delta)
    print(json.dumps(out, indent=1))
    return EXIT_OK if result.converged else EXIT_RUNTIME


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "lower-bound": cmd_lower_bound}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

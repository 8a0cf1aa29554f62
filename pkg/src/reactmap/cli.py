"""Command-line entry points: run, benchmark, diff, oracle."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import benchmark as bench
from . import io, verify
from .config import STAGES, PipelineConfig, config_from_dict, config_to_dict
from .pipeline import diff_runs, run_pipeline


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        config = config_from_dict(io.read_json(args.config))
    else:
        config = PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config.master_seed = args.seed
    if getattr(args, "out", None):
        config.output_dir = args.out
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    stages = tuple(args.stages.split(",")) if args.stages else None
    manifest = run_pipeline(config, out_dir=args.out, stages=stages)
    statuses = {s["name"]: s["status"] for s in manifest["stages"]}
    for name, status in statuses.items():
        print(f"{name}: {status}")
    if any(s["status"] == "failed" for s in manifest["stages"]):
        print(json.dumps({"error": "stage failure", "stages": statuses}), file=sys.stderr)
        return 2
    print(f"manifest: {Path(manifest['runtime']['output_dir']) / 'manifest.json'}")
    return 0


def _cmd_benchmark(args: argparse.Namespace) -> int:
    config = _load_config(args)
    sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else None
    result = bench.run_benchmark(config.benchmark, seed=config.master_seed, sizes=sizes)
    out = Path(args.out or config.output_dir or ".")
    bench.write_benchmark(result, out)
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest = io.read_json(manifest_path)
    else:
        manifest = {
            "schema": "reactmap/manifest-v1",
            "config": config_to_dict(config),
            "master_seed": config.master_seed,
            "stages": [],
            "files": {},
            "metrics": {},
            "runtime": {"wall_times_s": {}, "output_dir": str(out)},
        }
        manifest["config"]["output_dir"] = None
    manifest["stages"] = [
        s for s in manifest["stages"] if s.get("name") != "benchmark"
    ] + [
        {
            "name": "benchmark",
            "status": "completed",
            "files": ["benchmark/benchmark.csv", "benchmark/fits.json"],
        }
    ]
    for rel in ("benchmark/benchmark.csv", "benchmark/fits.json"):
        manifest["files"][rel] = io.sha256_file(out / rel)
    manifest["metrics"]["benchmark_arc_slope"] = result["fits"]["arc_count"]["slope"]
    manifest["metrics"]["benchmark_runtime_slope"] = result["fits"]["runtime"]["slope"]
    io.write_json(manifest_path, manifest)
    print(f"arc-count slope: {result['fits']['arc_count']['slope']:.3f}")
    print(
        f"runtime slope (informational): {result['fits']['runtime']['slope']:.3f}"
        f" (R^2 = {result['fits']['runtime']['r_squared']:.3f})"
    )
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    result = diff_runs(args.manifest_a, args.manifest_b)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    result = verify.oracle_battery(
        n_instances=args.instances, seed=args.seed if args.seed is not None else 0
    )
    if args.out:
        io.write_json(args.out, result)
    summary = {
        alpha: f"{stats['passes']}/{result['n_instances']}"
        for alpha, stats in result["alphas"].items()
    }
    summary["1.0 (linear)"] = f"{result['linear']['passes']}/{result['n_instances']}"
    for alpha, line in summary.items():
        print(f"alpha {alpha}: {line} within tolerance")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reactmap",
        description="Branched-transport reaction-map pipeline on synthetic multimodal data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run pipeline stages")
    run_p.add_argument("--config", help="JSON config file (defaults otherwise)")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--seed", type=int, help="master seed override")
    run_p.add_argument(
        "--stages", help=f"comma-separated subset of {','.join(STAGES)}"
    )
    run_p.set_defaults(func=_cmd_run)

    bench_p = sub.add_parser("benchmark", help="solver scalability benchmark")
    bench_p.add_argument("--config", help="JSON config file")
    bench_p.add_argument("--out", help="output directory")
    bench_p.add_argument("--seed", type=int, help="master seed override")
    bench_p.add_argument("--sizes", help="comma-separated node counts")
    bench_p.set_defaults(func=_cmd_benchmark)

    diff_p = sub.add_parser("diff", help="compare two run manifests")
    diff_p.add_argument("manifest_a")
    diff_p.add_argument("manifest_b")
    diff_p.set_defaults(func=_cmd_diff)

    oracle_p = sub.add_parser("oracle", help="small-instance solver verification")
    oracle_p.add_argument("--instances", type=int, default=50)
    oracle_p.add_argument("--seed", type=int, default=0)
    oracle_p.add_argument("--out", help="write full results JSON here")
    oracle_p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - machine-readable error contract
        print(
            json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())

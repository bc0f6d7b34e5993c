"""Command-line interface: gen-designs, run, analyze, regret.

Exit codes: 0 on success, 2 for configuration problems, 3 for runtime
failures.  All randomness is controlled by the seed arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .benchmarks import BENCHMARK_NAMES, DEFAULT_GKLS_SEED, get_benchmark
from .errors import ConfigError
from .harness import (CaseStudyConfig, RunStore, analyze, gen_designs,
                      load_config, read_designs, regret_csv, run_case_study,
                      write_designs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bo-inner-lab",
        description="Desk-scale comparison of inner solvers for Bayesian optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-designs", help="sample per-experiment initial designs")
    p.add_argument("--benchmark", required=True, choices=BENCHMARK_NAMES)
    p.add_argument("--n", type=int, required=True, help="points per design")
    p.add_argument("--experiments", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--gkls-seed", type=int, default=DEFAULT_GKLS_SEED)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="execute the solver x experiment x run grid")
    p.add_argument("--config", required=True, help="case-study config file")
    p.add_argument("--designs", required=True)
    p.add_argument("--out", required=True, help="run-store path (resumable)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analyze", help="emit the statistical report for a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--regret-csv", default=None)
    p.add_argument("--gkls-seed", type=int, default=DEFAULT_GKLS_SEED)

    p = sub.add_parser("regret", help="emit only the regret CSV for a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gkls-seed", type=int, default=DEFAULT_GKLS_SEED)
    return parser


def _records_and_fstar(store_path, gkls_seed):
    store = RunStore(store_path)
    records = store.load_records()
    if not records:
        raise ConfigError(f"{store_path}: store is empty")
    benchmark = records[0].case_id.split(";", 1)[0]
    bench = get_benchmark(benchmark, gkls_seed=gkls_seed)
    return records, bench.f_star


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-designs":
            designs = gen_designs(args.benchmark, args.n, args.experiments,
                                  args.seed, gkls_seed=args.gkls_seed)
            write_designs(args.out, args.benchmark, args.n, args.seed, designs)
        elif args.command == "run":
            config: CaseStudyConfig = load_config(args.config)
            meta, designs = read_designs(args.designs)
            if meta["benchmark"] != config.benchmark:
                raise ConfigError(
                    f"designs are for {meta['benchmark']!r}, config wants "
                    f"{config.benchmark!r}")
            if meta["n"] != config.n_init:
                raise ConfigError(
                    f"designs have n={meta['n']}, config wants n-init={config.n_init}")
            run_case_study(config, designs, args.out, workers=args.workers)
        elif args.command == "analyze":
            records, f_star = _records_and_fstar(args.store, args.gkls_seed)
            Path(args.out).write_text(analyze(records, f_star), encoding="utf-8")
            if args.regret_csv:
                Path(args.regret_csv).write_text(regret_csv(records, f_star),
                                                 encoding="utf-8")
        elif args.command == "regret":
            records, f_star = _records_and_fstar(args.store, args.gkls_seed)
            Path(args.out).write_text(regret_csv(records, f_star), encoding="utf-8")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

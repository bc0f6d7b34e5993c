"""Dev calibration: acceptance-9 regime grid, printed summary."""
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")
import bo_inner_lab as lab
from bo_inner_lab.acquisition import FixedKappa
from bo_inner_lab.engine import BnbOptions, TerminationConfig
from bo_inner_lab.harness import CaseStudyConfig, gen_designs, run_case_study
from bo_inner_lab import stats


def main():
    config = CaseStudyConfig(
        benchmark="mueller-brown",
        n_init=3,
        policy=FixedKappa(2.0),
        tc=TerminationConfig(0.001, 0.05, 0.01, 0.5, max_iter=150),
        n_experiments=10,
        runs_per_experiment=10,
        solvers=("ils", "ims", "bnb"),
        seed=42,
        bnb=BnbOptions(node_cap=800, time_limit=10.0),
    )
    designs = gen_designs(config.benchmark, config.n_init, config.n_experiments, config.seed)
    t0 = time.perf_counter()
    store = run_case_study(config, designs, "/tmp/calib_store.v1", workers=4)
    print(f"grid done in {time.perf_counter()-t0:.0f}s", flush=True)
    records = store.load_records()

    table = stats.build_success_table(records, include_replicated=True)
    for solver in ("ils", "ims", "bnb"):
        print(f"{solver}: overall={table.overall(solver):.3f} "
              f"per-exp={np.round(table.proportions(solver), 2)}")
    summary = stats.iteration_stats(records, joint_success_filter=True)
    for solver, row in summary.items():
        print(f"{solver} joint-success iters: count={row.count} mean={row.mean:.2f} "
              f"median={row.median} std={row.std:.2f}")
    summary = stats.iteration_stats(records, joint_success_filter=False)
    for solver, row in summary.items():
        print(f"{solver} all-runs iters: count={row.count} mean={row.mean:.2f}")
    # distribution of terminal precision among basin-reaching runs
    for solver in ("ils", "ims", "bnb"):
        gaps = [r.f_best - (-146.69951720995402) for r in records
                if r.solver == solver and r.f_best < -120]
        print(f"{solver}: basin-reaching runs {len(gaps)}, "
              f"gap quantiles {np.round(np.quantile(gaps, [0.25, 0.5, 0.75, 0.9]), 3) if gaps else '-'}")


if __name__ == "__main__":
    main()

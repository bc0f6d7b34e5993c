"""Case-study orchestration: configs, designs, the run store, and reports.

Every random stream is derived from the master seed through a documented
splittable construction, all files are line-oriented with a versioned
header, and outputs carry no timestamps, so the whole pipeline is
byte-reproducible for a fixed configuration.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import (DimensionLogSchedule, DiscretizedConfidenceSchedule,
                          FixedKappa, KappaPolicy)
from .benchmarks import BENCHMARK_NAMES, DEFAULT_GKLS_SEED, get_benchmark, latin_hypercube
from .engine import (SOLVER_BNB, SOLVER_TAGS, BnbOptions, RunRecord,
                     TerminationConfig, run_bo)
from .errors import ConfigError
from . import stats

FORMAT_VERSION = "bo-inner-lab/v1"

_SOLVER_CODES = {"ils": 1, "ims": 2, "bnb": 3}


# ---------------------------------------------------------------------------
# seed derivation


def _stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def derive_rng(master_seed: int, scope: str, *indices: int) -> np.random.Generator:
    """Independent counter-based stream for one unit of work.

    The stream is Philox seeded with SeedSequence entropy
    ``[master_seed, sha256_64(scope), *indices]``; any implementation that
    reproduces this entropy list reproduces the stream.
    """
    entropy = [master_seed, _stable_hash64(scope), *indices]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class CaseStudyConfig:
    """Everything defining one case study plus its experiment/run grid."""

    benchmark: str
    n_init: int
    policy: KappaPolicy
    tc: TerminationConfig
    n_experiments: int
    runs_per_experiment: int
    solvers: tuple = ("ils", "ims", "bnb")
    seed: int = 0
    bnb: BnbOptions = field(default_factory=BnbOptions)
    ims_restarts: int = 5
    gkls_seed: int = DEFAULT_GKLS_SEED

    def __post_init__(self):
        if self.benchmark not in BENCHMARK_NAMES:
            raise ConfigError(f"case.benchmark: unknown benchmark {self.benchmark!r}")
        if self.n_init < 1:
            raise ConfigError("case.n-init: must be >= 1")
        if self.n_experiments < 1:
            raise ConfigError("case.experiments: must be >= 1")
        if self.runs_per_experiment < 1:
            raise ConfigError("case.runs-per-experiment: must be >= 1")
        if not self.solvers:
            raise ConfigError("case.solvers: must list at least one solver")
        for solver in self.solvers:
            if solver not in SOLVER_TAGS:
                raise ConfigError(f"case.solvers: unknown solver tag {solver!r}")

    def _policy_id(self) -> str:
        if isinstance(self.policy, FixedKappa):
            return f"fixed:{self.policy.value:g}"
        if isinstance(self.policy, DiscretizedConfidenceSchedule):
            return (f"conf-schedule:{self.policy.n_points:g}/{self.policy.delta:g}"
                    f"/{self.policy.scale:g}")
        if isinstance(self.policy, DimensionLogSchedule):
            return f"dim-schedule:{self.policy.dim}"
        raise ConfigError(f"case.kappa: unknown policy {self.policy!r}")

    @property
    def case_id(self) -> str:
        return (f"{self.benchmark};N={self.n_init};kappa={self._policy_id()};"
                f"seed={self.seed}")


def _parse_kappa(raw: str, dim: int) -> KappaPolicy:
    raw = raw.strip()
    if raw == "conf-schedule":
        return DiscretizedConfidenceSchedule()
    if raw == "dim-schedule":
        return DimensionLogSchedule(dim=dim)
    try:
        return FixedKappa(value=float(raw))
    except ValueError as exc:
        raise ConfigError(
            f"case.kappa: expected a number, 'conf-schedule', or 'dim-schedule', "
            f"got {raw!r}") from exc


def load_config(path) -> CaseStudyConfig:
    """Read a flat key=value case-study file (sections per solver)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "case" not in parser:
        raise ConfigError("config must contain a [case] section")
    case = parser["case"]

    def need(key: str) -> str:
        if key not in case:
            raise ConfigError(f"case.{key}: missing required key")
        return case[key]

    def number(section, key, cast, default=None):
        try:
            if key not in section:
                if default is None:
                    raise ConfigError(f"{section.name}.{key}: missing required key")
                return default
            return cast(section[key])
        except ValueError as exc:
            raise ConfigError(f"{section.name}.{key}: invalid value "
                              f"{section[key]!r}") from exc

    benchmark = need("benchmark").strip()
    if benchmark not in BENCHMARK_NAMES:
        raise ConfigError(f"case.benchmark: unknown benchmark {benchmark!r}")
    bench = get_benchmark(benchmark)
    tc = TerminationConfig(
        eps_x1=number(case, "eps-x1", float),
        eps_x2=number(case, "eps-x2", float),
        eps_f_rel=number(case, "eps-f-rel", float),
        eps_f_abs=number(case, "eps-f-abs", float),
        max_iter=number(case, "max-iter", int, 150),
    )
    solvers = tuple(s.strip() for s in case.get("solvers", "ils,ims,bnb").split(",") if s.strip())
    if "bnb" in parser:
        sec = parser["bnb"]
        bnb = BnbOptions(eps_r_init=number(sec, "eps-r-init", float, 0.01),
                         eps_a=number(sec, "eps-a", float, 1e-6),
                         time_limit=number(sec, "time-limit", float, 10.0),
                         node_cap=number(sec, "node-cap", int, 2000))
    else:
        bnb = BnbOptions()
    ims_restarts = 5
    if "ims" in parser:
        ims_restarts = number(parser["ims"], "restarts", int, 5)
    return CaseStudyConfig(
        benchmark=benchmark,
        n_init=number(case, "n-init", int),
        policy=_parse_kappa(need("kappa"), dim=bench.box.dim),
        tc=tc,
        n_experiments=number(case, "experiments", int),
        runs_per_experiment=number(case, "runs-per-experiment", int),
        solvers=solvers,
        seed=number(case, "seed", int, 0),
        bnb=bnb,
        ims_restarts=ims_restarts,
        gkls_seed=number(case, "gkls-seed", int, DEFAULT_GKLS_SEED),
    )


# ---------------------------------------------------------------------------
# initial designs


def _json_line(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def gen_designs(benchmark: str, n: int, n_experiments: int, seed: int,
                gkls_seed: int = DEFAULT_GKLS_SEED) -> list:
    """One space-filling initial design per experiment (raw units)."""
    bench = get_benchmark(benchmark, gkls_seed=gkls_seed)
    designs = []
    for dat in range(n_experiments):
        rng = derive_rng(seed, f"designs/{benchmark}/{n}", dat)
        designs.append(latin_hypercube(n, bench.box, rng))
    return designs


def write_designs(path, benchmark: str, n: int, seed: int, designs) -> None:
    lines = [FORMAT_VERSION + " designs",
             _json_line({"benchmark": benchmark, "n": n,
                         "experiments": len(designs), "seed": seed})]
    for dat, design in enumerate(designs):
        lines.append(_json_line({"experiment": dat, "x": np.asarray(design).tolist()}))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_designs(path):
    """Returns (meta dict, list of design matrices)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FORMAT_VERSION + " designs":
        raise ConfigError(f"{path}: not a {FORMAT_VERSION} designs file")
    meta = json.loads(lines[1])
    designs = [None] * meta["experiments"]
    for line in lines[2:]:
        row = json.loads(line)
        designs[row["experiment"]] = np.asarray(row["x"], dtype=float)
    if any(d is None for d in designs):
        raise ConfigError(f"{path}: missing experiment rows")
    return meta, designs


# ---------------------------------------------------------------------------
# run store


class RunStore:
    """Append-only line store of run records keyed by (case, dat, solver, r)."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            self.path.write_text(FORMAT_VERSION + "\n", encoding="utf-8")
        else:
            with self.path.open(encoding="utf-8") as fh:
                header = fh.readline().rstrip("\n")
            if header != FORMAT_VERSION:
                raise ConfigError(f"{self.path}: not a {FORMAT_VERSION} store")
        self._keys = {self._key(p) for p in self.iter_payloads()}

    @staticmethod
    def _key(payload: dict):
        return (payload["case"], payload["experiment"], payload["solver"],
                payload["run"])

    def keys(self) -> set:
        return set(self._keys)

    def iter_payloads(self):
        with self.path.open(encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def append(self, record: RunRecord) -> None:
        key = (record.case_id, record.experiment, record.solver, record.run_index)
        if key in self._keys:
            raise ValueError(f"duplicate record key {key}")
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(_json_line(record.to_payload()) + "\n")
        self._keys.add(key)

    def load_records(self) -> list:
        return [RunRecord.from_payload(p) for p in self.iter_payloads()]


# ---------------------------------------------------------------------------
# case-study execution


def _execute_run(config: CaseStudyConfig, design, dat: int, solver: str,
                 run_index: int) -> RunRecord:
    bench = get_benchmark(config.benchmark, gkls_seed=config.gkls_seed)
    rng = derive_rng(config.seed, config.case_id, dat,
                     _SOLVER_CODES[solver], run_index)
    record = run_bo(bench, design, solver, config.policy, config.tc, rng,
                    bnb_opts=config.bnb, case_id=config.case_id,
                    experiment=dat, run_index=run_index)
    return record


def _replicate(record: RunRecord, run_index: int) -> RunRecord:
    clone = RunRecord.from_payload(record.to_payload())
    clone.run_index = run_index
    clone.replicated = True
    return clone


def run_case_study(config: CaseStudyConfig, designs, store_path,
                   workers: int = 1) -> RunStore:
    """Execute the solver x experiment x run grid into a run store.

    The deterministic global solver executes once per experiment; its record
    is logically replicated (and flagged) for the remaining run slots.
    Existing store keys are skipped, so an interrupted invocation can be
    resumed with the same arguments.
    """
    if len(designs) < config.n_experiments:
        raise ConfigError("designs file has fewer experiments than the config")
    store = RunStore(store_path)
    existing = store.keys()

    jobs = []  # (dat, solver, r) in deterministic grid order; bnb only r=0
    for dat in range(config.n_experiments):
        for solver in config.solvers:
            n_eff = 1 if solver == SOLVER_BNB else config.runs_per_experiment
            for r in range(n_eff):
                jobs.append((dat, solver, r))

    def is_done(dat, solver, r):
        return (config.case_id, dat, solver, r) in existing

    results: dict = {}
    pending = [(dat, solver, r) for dat, solver, r in jobs
               if not is_done(dat, solver, r)]
    if workers > 1 and pending:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(key, pool.submit(_execute_run, config,
                                         designs[key[0]], *key))
                       for key in pending]
            for key, future in futures:
                results[key] = future.result()
    else:
        for key in pending:
            results[key] = _execute_run(config, designs[key[0]], *key)

    def stored_base(dat: int, solver: str) -> RunRecord:
        for payload in store.iter_payloads():
            if (payload["case"] == config.case_id and payload["experiment"] == dat
                    and payload["solver"] == solver and payload["run"] == 0):
                return RunRecord.from_payload(payload)
        raise RuntimeError(f"store is missing the base run for ({dat}, {solver})")

    # append in deterministic grid order, materializing bnb replicas
    for dat in range(config.n_experiments):
        for solver in config.solvers:
            for r in range(config.runs_per_experiment):
                effective_r = 0 if solver == SOLVER_BNB else r
                if is_done(dat, solver, r):
                    continue
                base = results.get((dat, solver, effective_r))
                if base is None:
                    # resuming: the base run was stored by an earlier invocation
                    base = stored_base(dat, solver)
                if solver == SOLVER_BNB and r > 0:
                    store.append(_replicate(base, r))
                else:
                    store.append(base)
    return store


# ---------------------------------------------------------------------------
# analysis report


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".10g")
    return str(x)


def analyze(records, f_star: float, caps=None, reference_solver: str = SOLVER_BNB,
            half_size: int | None = None) -> str:
    """Render the full statistical report for one case study's records."""
    records = list(records)
    if not records:
        raise ValueError("no records to analyze")
    solvers = sorted({r.solver for r in records})
    experiments = sorted({r.experiment for r in records})
    max_iter = max(r.iterations_to_termination for r in records)
    if caps is None:
        caps = list(range(5, max_iter + 5, 5)) + [math.inf]
    if half_size is None:
        half_size = max(1, len(experiments) // 2)

    lines = [FORMAT_VERSION + " report",
             f"case: {records[0].case_id}",
             f"solvers: {','.join(solvers)}",
             f"experiments: {len(experiments)}",
             ""]

    # success probabilities over all runs (replicas included)
    lines.append("[success-probability]")
    lines.append("solver runs successes probability")
    table_all = stats.build_success_table(records, include_replicated=True)
    for solver in solvers:
        runs = sum(table_all.counts(dat, solver)[0] for dat in table_all.experiments)
        succ = sum(table_all.counts(dat, solver)[1] for dat in table_all.experiments)
        lines.append(f"{solver} {runs} {succ} {_fmt(succ / runs)}")
    lines.append("")

    # iteration statistics, filtered and unfiltered, with paired t-tests
    for label, filtered in (("iteration-stats joint-success", True),
                            ("iteration-stats all-runs", False)):
        lines.append(f"[{label}]")
        lines.append("solver count mean median std t-vs-ref p-vs-ref")
        summary = stats.iteration_stats(records, joint_success_filter=filtered)
        if filtered:
            keep = stats.joint_success_experiments(records)
            pool = [r for r in records if r.experiment in keep and r.success]
            exp_list = sorted(keep)
        else:
            pool = records
            exp_list = experiments
        ref_means = (stats.per_experiment_mean_iterations(pool, reference_solver,
                                                          exp_list, False)
                     if reference_solver in solvers else None)
        for solver in solvers:
            row = summary[solver]
            t_txt = p_txt = "-"
            if (ref_means is not None and solver != reference_solver
                    and row.count > 0):
                solver_means = stats.per_experiment_mean_iterations(
                    pool, solver, exp_list, False)
                pairs = [(a, b) for a, b in zip(solver_means, ref_means)
                         if not (math.isnan(a) or math.isnan(b))]
                if len(pairs) >= 2:
                    try:
                        tt = stats.paired_t_one_sided([a for a, _ in pairs],
                                                      [b for _, b in pairs])
                        t_txt, p_txt = _fmt(tt.t), _fmt(tt.p)
                    except Exception:
                        t_txt, p_txt = "zero-variance", "-"
            lines.append(f"{solver} {row.count} {_fmt(row.mean)} "
                         f"{_fmt(row.median)} {_fmt(row.std)} {t_txt} {p_txt}")
        lines.append("")

    # conditional log-odds fits against the reference solver
    lines.append("[cmle]")
    if reference_solver in solvers and len(solvers) > 1:
        table_eff = stats.build_success_table(records, include_replicated=False)
        lines.append("pair alpha se wald-z wald-p converged informative")
        for solver in solvers:
            if solver == reference_solver:
                continue
            fit = stats.cmle_fit(table_eff, solver, reference_solver)
            lines.append(f"{solver}-vs-{reference_solver} {_fmt(fit.alpha_hat)} "
                         f"{_fmt(fit.se)} {_fmt(fit.wald_z)} {_fmt(fit.wald_p)} "
                         f"{fit.converged} {fit.n_informative}")
        joint = stats.cmle_joint_lr(table_eff, solvers, reference_solver)
        lines.append(f"joint-lr statistic={_fmt(joint.statistic)} df={joint.df} "
                     f"p={_fmt(joint.p_value)} converged={joint.converged}")
    else:
        lines.append("absent (needs the reference solver and at least one other)")
    lines.append("")

    # minimax summaries
    lines.append("[minimax]")
    try:
        table_eff = stats.build_success_table(records, include_replicated=False)
        q1_values, q1_solver, q1_best = stats.minimax_q1(table_eff, solvers, half_size)
        for solver in solvers:
            lines.append(f"q1 {solver} {_fmt(q1_values[solver])}")
        lines.append(f"q1-best {q1_solver} {_fmt(q1_best)}")
        subset, q2_value, exact = stats.minimax_q2(table_eff, solvers, half_size)
        subset_txt = ",".join(str(s) for s in subset)
        lines.append(f"q2 subset={subset_txt} value={_fmt(q2_value)} "
                     f"exact={exact}")
    except Exception as exc:
        lines.append(f"absent ({exc})")
    lines.append("")

    # success probability against iteration caps
    lines.append("[cap-curves]")
    lines.append("solver cap fraction")
    curves = stats.success_probability_vs_cap(records, caps)
    for solver in solvers:
        for cap, frac in curves[solver]:
            cap_txt = "inf" if math.isinf(cap) else str(int(cap))
            lines.append(f"{solver} {cap_txt} {_fmt(frac)}")
    lines.append("")
    return "\n".join(lines) + "\n"


def regret_csv(records, f_star: float) -> str:
    """Plot-ready CSV of mean/std best-so-far regret per iteration."""
    curves = stats.regret_curves(records, f_star)
    lines = ["solver,iteration,mean_regret,std_regret"]
    for solver in sorted(curves):
        for iteration, mean, std in curves[solver]:
            lines.append(f"{solver},{iteration},{_fmt(mean)},{_fmt(std)}")
    return "\n".join(lines) + "\n"

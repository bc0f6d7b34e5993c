"""Outer Bayesian-optimization loop with pluggable inner solvers.

One run: fit the GP to everything evaluated so far, minimize the acquisition
with the configured inner solver, evaluate the black box at the candidate,
then test the composite termination rule.  Candidate-proximity tests run in
scaled coordinates while objective tests use raw function values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .acquisition import AcquisitionContext, KappaPolicy, kappa_at
from .box import SearchBox
from .errors import InnerSolverFailureError
from .global_solver import (STATUS_OPTIMAL, BnbResult, LoosenState,
                            bnb_minimize, loosen_policy_update)
from .gp import GpModel, fit
from .local_solvers import ils_minimize, ims_minimize

SOLVER_ILS = "ils"
SOLVER_IMS = "ims"
SOLVER_BNB = "bnb"
SOLVER_TAGS = (SOLVER_ILS, SOLVER_IMS, SOLVER_BNB)

CLAUSE_PROXIMITY = "tc1"
CLAUSE_VALUE_MATCH = "tc2"


@dataclass(frozen=True)
class TerminationConfig:
    """Thresholds of the composite termination rule.

    ``eps_x1`` stops on near-duplicate candidates outright; ``eps_x2``
    combines moderate proximity with objective agreement (relative
    ``eps_f_rel`` or absolute ``eps_f_abs``) against the best value so far.
    """

    eps_x1: float
    eps_x2: float
    eps_f_rel: float
    eps_f_abs: float
    max_iter: int = 150

    def __post_init__(self):
        if not (0.0 < self.eps_x1 < self.eps_x2):
            raise ValueError("require 0 < eps_x1 < eps_x2")
        if self.eps_f_rel <= 0.0 or self.eps_f_abs <= 0.0:
            raise ValueError("objective tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class BnbOptions:
    eps_r_init: float = 0.01
    eps_a: float = 1e-6
    time_limit: float = 10.0
    node_cap: int = 2000


@dataclass(frozen=True)
class BenchmarkHandle:
    """A black-box objective with its box and certified reference optima."""

    name: str
    fn: Callable[[np.ndarray], float]
    box: SearchBox
    optima: tuple          # ((x_star, f_star), ...) raw units
    success_tol: float

    def __post_init__(self):
        for x_star, f_star in self.optima:
            x_star = np.asarray(x_star, dtype=float)
            if not self.box.contains(x_star):
                raise ValueError(f"reference optimum {x_star} outside the box")
            if abs(self.fn(x_star) - f_star) > 1e-6:
                raise ValueError(
                    f"benchmark {self.name}: fn(x*)={self.fn(x_star)!r} "
                    f"does not reproduce f*={f_star!r}")

    @property
    def f_star(self) -> float:
        return min(f for _, f in self.optima)

    def evaluate(self, x_raw) -> float:
        return float(self.fn(np.asarray(x_raw, dtype=float)))


@dataclass(frozen=True)
class IterationRow:
    t: int
    x_raw: np.ndarray
    f: float
    kappa: float
    solver_info: dict
    clause: Optional[str]


@dataclass
class RunRecord:
    """Full trajectory of one BO run."""

    case_id: str
    experiment: int
    run_index: int
    solver: str
    initial_x: np.ndarray
    initial_f: np.ndarray
    iterations: list = field(default_factory=list)
    iterations_to_termination: int = 0
    clause: Optional[str] = None
    x_best: np.ndarray | None = None
    f_best: float = math.nan
    success: bool = False
    status: str = "ok"
    replicated: bool = False

    def to_payload(self) -> dict:
        return {
            "case": self.case_id,
            "experiment": self.experiment,
            "run": self.run_index,
            "solver": self.solver,
            "replicated": self.replicated,
            "status": self.status,
            "initial_x": self.initial_x.tolist(),
            "initial_f": self.initial_f.tolist(),
            "iterations": [
                {"t": row.t, "x": row.x_raw.tolist(), "f": row.f,
                 "kappa": row.kappa, "solver_info": row.solver_info,
                 "clause": row.clause}
                for row in self.iterations
            ],
            "iterations_to_termination": self.iterations_to_termination,
            "clause": self.clause,
            "x_best": None if self.x_best is None else self.x_best.tolist(),
            "f_best": self.f_best,
            "success": self.success,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "RunRecord":
        record = cls(
            case_id=payload["case"],
            experiment=int(payload["experiment"]),
            run_index=int(payload["run"]),
            solver=payload["solver"],
            initial_x=np.asarray(payload["initial_x"], dtype=float),
            initial_f=np.asarray(payload["initial_f"], dtype=float),
            replicated=bool(payload["replicated"]),
            status=payload["status"],
        )
        record.iterations = [
            IterationRow(t=int(row["t"]), x_raw=np.asarray(row["x"], dtype=float),
                         f=float(row["f"]), kappa=float(row["kappa"]),
                         solver_info=row["solver_info"], clause=row["clause"])
            for row in payload["iterations"]
        ]
        record.iterations_to_termination = int(payload["iterations_to_termination"])
        record.clause = payload["clause"]
        record.x_best = (None if payload["x_best"] is None
                         else np.asarray(payload["x_best"], dtype=float))
        record.f_best = float(payload["f_best"])
        record.success = bool(payload["success"])
        return record


def check_termination(prior_x, x_t, prior_f, f_t,
                      tc: TerminationConfig):
    """Evaluate the composite stop rule for candidate ``x_t``.

    ``prior_x``/``x_t`` are scaled coordinates of everything sampled before
    iteration t (initial design included) and of the new candidate;
    ``prior_f``/``f_t`` are the raw objective values.  Returns
    ``(stop, clause)`` with at most one clause reported.
    """
    prior_x = np.atleast_2d(np.asarray(prior_x, dtype=float))
    if prior_x.shape[0] == 0:
        raise ValueError("termination requires at least one prior candidate")
    x_t = np.asarray(x_t, dtype=float)
    dist = float(np.min(np.linalg.norm(prior_x - x_t[None, :], axis=1)))
    if dist < tc.eps_x1:
        return True, CLAUSE_PROXIMITY
    if dist < tc.eps_x2:
        f_best = float(np.min(prior_f))
        gap = abs(f_t - f_best)
        if gap < tc.eps_f_rel * abs(f_best) or gap < tc.eps_f_abs:
            return True, CLAUSE_VALUE_MATCH
    return False, None


def _solve_inner(solver: str, ctx: AcquisitionContext, rng,
                 loosen: LoosenState | None, bnb_opts: BnbOptions):
    """Run one inner solve; returns (x_scaled, info dict, new loosen state)."""
    if solver == SOLVER_ILS:
        res = ils_minimize(ctx, rng)
        info = {"converged": res.converged, "n_evals": res.n_evals}
        return res.x, info, loosen
    if solver == SOLVER_IMS:
        res = ims_minimize(ctx, rng)
        info = {"converged": res.converged, "n_evals": res.n_evals}
        return res.x, info, loosen
    if solver == SOLVER_BNB:
        result: BnbResult = bnb_minimize(ctx, eps_r=loosen.eps_r,
                                         eps_a=bnb_opts.eps_a,
                                         time_limit=bnb_opts.time_limit,
                                         node_cap=bnb_opts.node_cap)
        info = {"status": result.status, "gap_rel": result.gap_rel,
                "nodes": result.nodes_processed, "eps_r": loosen.eps_r}
        return result.x_best, info, loosen_policy_update(loosen, result)
    raise ValueError(f"unknown solver tag {solver!r}")


def run_bo(bench: BenchmarkHandle, initial_x, solver: str,
           policy: KappaPolicy, tc: TerminationConfig,
           rng: np.random.Generator,
           bnb_opts: BnbOptions | None = None,
           case_id: str = "adhoc", experiment: int = 0,
           run_index: int = 0) -> RunRecord:
    """Execute one full BO run from the given raw-unit initial design."""
    if solver not in SOLVER_TAGS:
        raise ValueError(f"unknown solver tag {solver!r}")
    bnb_opts = bnb_opts or BnbOptions()
    initial_x = np.atleast_2d(np.asarray(initial_x, dtype=float))
    initial_f = np.array([bench.evaluate(x) for x in initial_x])

    record = RunRecord(case_id=case_id, experiment=experiment,
                       run_index=run_index, solver=solver,
                       initial_x=initial_x, initial_f=initial_f)

    x_all = initial_x.copy()
    f_all = initial_f.copy()
    warm = None
    loosen = LoosenState(eps_r=bnb_opts.eps_r_init) if solver == SOLVER_BNB else None

    for t in range(1, tc.max_iter + 1):
        model: GpModel = fit(x_all, f_all, bench.box, warm_start=warm)
        warm = model.hyper
        ctx = AcquisitionContext(model=model, policy=policy, t=t)
        x_scaled, info, loosen = _solve_inner(solver, ctx, rng, loosen, bnb_opts)
        if not np.all(np.isfinite(x_scaled)):
            record.status = "solver-failure"
            record.iterations_to_termination = t - 1
            break
        x_raw = bench.box.unscale(x_scaled)
        f_t = bench.evaluate(x_raw)

        prior_scaled = bench.box.scale(x_all)
        stop, clause = check_termination(prior_scaled, x_scaled, f_all, f_t, tc)

        record.iterations.append(IterationRow(
            t=t, x_raw=x_raw, f=f_t, kappa=kappa_at(policy, t),
            solver_info=info, clause=clause))
        x_all = np.vstack([x_all, x_raw])
        f_all = np.append(f_all, f_t)

        if stop:
            record.clause = clause
            record.iterations_to_termination = t
            break
    else:
        record.iterations_to_termination = tc.max_iter

    best_idx = int(np.argmin(f_all))
    record.x_best = x_all[best_idx]
    record.f_best = float(f_all[best_idx])
    record.success = classify_success(record, bench)
    return record


def classify_success(record: RunRecord, bench: BenchmarkHandle) -> bool:
    """Did the run terminate near a globally optimal objective value?

    Runs that hit the iteration cap without satisfying the termination rule,
    or that aborted on a solver failure, count as failures regardless of
    their best value.
    """
    if record.status != "ok" or record.clause is None:
        return False
    return record.f_best <= bench.f_star + bench.success_tol

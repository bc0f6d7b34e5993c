"""Matched-design statistics over collections of run records.

Solver runs are matched on the experiment (initial dataset) that produced
them: success probabilities are compared through a conditional-likelihood
log-odds model, worst-case behavior through subset minimax summaries, and
iteration counts through one-sided t-tests paired by experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from math import comb, lgamma

import numpy as np

from .errors import UnequalRunCountsError, ZeroVarianceError

# ---------------------------------------------------------------------------
# success tables


@dataclass(frozen=True)
class SuccessTable:
    """Per (experiment, solver) success counts.

    ``rows`` maps (experiment, solver) to (n_runs, n_success).
    """

    rows: dict
    solvers: tuple
    experiments: tuple

    def counts(self, experiment, solver):
        return self.rows[(experiment, solver)]

    def proportions(self, solver) -> np.ndarray:
        """Per-experiment success proportions, ordered by experiment id."""
        out = []
        for dat in self.experiments:
            n_runs, n_success = self.rows[(dat, solver)]
            out.append(n_success / n_runs)
        return np.asarray(out)

    def overall(self, solver) -> float:
        runs = succ = 0
        for dat in self.experiments:
            n_runs, n_success = self.rows[(dat, solver)]
            runs += n_runs
            succ += n_success
        return succ / runs


def build_success_table(records, include_replicated: bool = True,
                        deterministic_tags=("bnb",)) -> SuccessTable:
    """Group run outcomes by (experiment, solver).

    With ``include_replicated=False`` the logically replicated copies of
    deterministic-solver runs are dropped, leaving the effective single run
    per experiment.  Rows for solvers in ``deterministic_tags`` are checked
    to carry degenerate proportions (0 or 1).
    """
    rows: dict = {}
    for record in records:
        if not include_replicated and record.replicated:
            continue
        key = (record.experiment, record.solver)
        n_runs, n_success = rows.get(key, (0, 0))
        rows[key] = (n_runs + 1, n_success + int(record.success))
    solvers = tuple(sorted({s for _, s in rows}))
    experiments = tuple(sorted({d for d, _ in rows}))
    for dat in experiments:
        for solver in solvers:
            if (dat, solver) not in rows:
                raise ValueError(f"missing runs for experiment {dat}, solver {solver}")
    for solver in solvers:
        if solver in deterministic_tags:
            for dat in experiments:
                n_runs, n_success = rows[(dat, solver)]
                if n_success not in (0, n_runs):
                    raise ValueError(
                        f"deterministic solver {solver} has mixed outcomes on "
                        f"experiment {dat}: {n_success}/{n_runs}")
    return SuccessTable(rows=rows, solvers=solvers, experiments=experiments)


# ---------------------------------------------------------------------------
# special functions (no external stats dependency)


def _log_comb(n: int, k: int) -> float:
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(lgamma(a + b) - lgamma(a) - lgamma(b)
                     + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: int) -> float:
    """Upper-tail probability of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of chi-square via the regularized incomplete beta bridge."""
    if x <= 0.0:
        return 1.0
    if df == 2:
        return math.exp(-0.5 * x)
    # Q(df/2, x/2) through the series / continued fraction of the
    # regularized upper incomplete gamma
    a = 0.5 * df
    xx = 0.5 * x
    if xx < a + 1.0:
        # lower series
        term = 1.0 / a
        total = term
        n = a
        for _ in range(500):
            n += 1.0
            term *= xx / n
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        p = total * math.exp(-xx + a * math.log(xx) - lgamma(a))
        return 1.0 - p
    # upper continued fraction (Lentz)
    tiny = 1e-300
    b = xx + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-xx + a * math.log(xx) - lgamma(a))


# ---------------------------------------------------------------------------
# conditional-likelihood log-odds estimation


@dataclass(frozen=True)
class CmleFit:
    """Common log-odds ratio of solver A vs the reference solver."""

    alpha_hat: float
    se: float
    wald_z: float
    wald_p: float
    converged: bool
    n_informative: int


def _conditional_moments(alpha: float, m: int, n: int, total: int):
    """Mean/variance of the A-success count given the combined total."""
    u_lo = max(0, total - n)
    u_hi = min(m, total)
    us = np.arange(u_lo, u_hi + 1)
    logw = np.array([_log_comb(m, u) + _log_comb(n, total - u) for u in us])
    logw = logw + alpha * us
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    mean = float(w @ us)
    var = float(w @ (us - mean) ** 2)
    return mean, var


def cmle_fit(table: SuccessTable, solver_a: str, solver_ref: str,
             bound: float = 20.0) -> CmleFit:
    """Conditional MLE of the common log-odds ratio of A versus reference.

    Experiments where the combined success count is fully concordant (all
    failures or all successes) carry no information and are dropped; if
    every experiment is concordant the fit is reported as non-converged.
    """
    cells = []
    for dat in table.experiments:
        m, a = table.counts(dat, solver_a)
        n, c = table.counts(dat, solver_ref)
        total = a + c
        if total == 0 or total == m + n:
            continue
        cells.append((a, m, n, total))
    if not cells:
        return CmleFit(alpha_hat=0.0, se=math.inf, wald_z=0.0, wald_p=1.0,
                       converged=False, n_informative=0)

    def score(alpha: float) -> float:
        return sum(a - _conditional_moments(alpha, m, n, total)[0]
                   for a, m, n, total in cells)

    lo, hi = -bound, bound
    s_lo, s_hi = score(lo), score(hi)
    if s_lo < 0.0 or s_hi > 0.0:
        # estimate sits at or beyond the search boundary
        alpha = lo if s_lo < 0.0 else hi
        info = sum(_conditional_moments(alpha, m, n, total)[1]
                   for _, m, n, total in cells)
        se = 1.0 / math.sqrt(info) if info > 0 else math.inf
        z = alpha / se if se > 0 and math.isfinite(se) else math.copysign(math.inf, alpha)
        return CmleFit(alpha_hat=alpha, se=se, wald_z=z,
                       wald_p=2.0 * normal_sf(abs(z)), converged=False,
                       n_informative=len(cells))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s_mid = score(mid)
        if s_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    alpha = 0.5 * (lo + hi)
    # Newton refinement inside the bracket
    for _ in range(8):
        s = score(alpha)
        info = sum(_conditional_moments(alpha, m, n, total)[1]
                   for _, m, n, total in cells)
        if info <= 0:
            break
        step = s / info
        candidate = alpha + step
        if candidate <= lo or candidate >= hi or abs(step) < 1e-14:
            break
        alpha = candidate
    info = sum(_conditional_moments(alpha, m, n, total)[1]
               for _, m, n, total in cells)
    se = 1.0 / math.sqrt(info)
    z = alpha / se
    return CmleFit(alpha_hat=alpha, se=se, wald_z=z,
                   wald_p=2.0 * normal_sf(abs(z)), converged=True,
                   n_informative=len(cells))


def conditional_success_probability(alpha: float, total: int, m: int = 1,
                                    n: int = 31) -> float:
    """P(A succeeded | combined total) under the common-odds model."""
    mean, _ = _conditional_moments(alpha, m, n, total)
    if m == 1:
        return mean
    raise ValueError("probability form is defined for a single A run")


@dataclass(frozen=True)
class JointLrResult:
    statistic: float
    df: int
    p_value: float
    log_odds: dict
    converged: bool


def cmle_joint_lr(table: SuccessTable, solvers, solver_ref: str) -> JointLrResult:
    """Likelihood-ratio test that all solvers share one success probability.

    Fits per-solver log-odds (vs the reference) by joint conditional maximum
    likelihood and compares against the all-zero model; the statistic is
    asymptotically chi-square with (#solvers - 1) degrees of freedom.
    """
    others = [s for s in solvers if s != solver_ref]
    if not others:
        raise ValueError("need at least one non-reference solver")
    k = len(others)

    datasets = []
    for dat in table.experiments:
        counts = {s: table.counts(dat, s) for s in list(others) + [solver_ref]}
        total = sum(c for _, c in counts.values())
        n_all = sum(m for m, _ in counts.values())
        if total == 0 or total == n_all:
            continue
        datasets.append(counts)
    if not datasets:
        return JointLrResult(statistic=0.0, df=k, p_value=1.0,
                             log_odds={s: 0.0 for s in others}, converged=False)

    def dataset_support(counts):
        total = sum(c for _, c in counts.values())
        m_ref = counts[solver_ref][0]
        ms = [counts[s][0] for s in others]
        combos = []
        def rec(idx, remaining, acc):
            if idx == k:
                if remaining <= m_ref:
                    combos.append((tuple(acc), remaining))
                return
            for y in range(0, min(ms[idx], remaining) + 1):
                rec(idx + 1, remaining - y, acc + [y])
        rec(0, total, [])
        rows = []
        for ys, y_ref in combos:
            logc = sum(_log_comb(ms[i], ys[i]) for i in range(k))
            logc += _log_comb(m_ref, y_ref)
            rows.append((np.array(ys, dtype=float), logc))
        return rows

    supports = [dataset_support(c) for c in datasets]
    observed = [np.array([c[s][1] for s in others], dtype=float) for c in datasets]

    def grad_hess(theta):
        grad = np.zeros(k)
        hess = np.zeros((k, k))
        for rows, obs in zip(supports, observed):
            ys = np.stack([r[0] for r in rows])
            logc = np.array([r[1] for r in rows])
            logits = logc + ys @ theta
            w = np.exp(logits - logits.max())
            w /= w.sum()
            mean = w @ ys
            grad += obs - mean
            centered = ys - mean
            hess -= centered.T @ (centered * w[:, None])
        return grad, hess

    def loglik_only(theta):
        ll = 0.0
        for rows, obs in zip(supports, observed):
            ys = np.stack([r[0] for r in rows])
            logc = np.array([r[1] for r in rows])
            logits = logc + ys @ theta
            mx = logits.max()
            z = float(np.exp(logits - mx).sum())
            match = np.nonzero(np.all(ys == obs, axis=1))[0]
            obs_logc = float(logc[match[0]])
            ll += obs_logc + float(obs @ theta) - (mx + math.log(z))
        return ll

    theta = np.zeros(k)
    converged = False
    for _ in range(100):
        grad, hess = grad_hess(theta)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        step = np.clip(step, -5.0, 5.0)
        theta_new = theta + step
        if float(np.max(np.abs(step))) < 1e-10:
            theta = theta_new
            converged = True
            break
        theta = theta_new
    ll_hat = loglik_only(theta)
    ll_null = loglik_only(np.zeros(k))
    stat = max(0.0, 2.0 * (ll_hat - ll_null))
    return JointLrResult(statistic=stat, df=k, p_value=chi2_sf(stat, k),
                         log_odds={s: float(theta[i]) for i, s in enumerate(others)},
                         converged=converged)


# ---------------------------------------------------------------------------
# minimax summaries


def _require_equal_runs(table: SuccessTable, solvers):
    for solver in solvers:
        counts = {table.counts(dat, solver)[0] for dat in table.experiments}
        if len(counts) != 1:
            raise UnequalRunCountsError(
                f"solver {solver} has unequal run counts across experiments: {sorted(counts)}")


def minimax_q1(table: SuccessTable, solvers, half_size: int):
    """Worst subset-average success proportion per solver, and the best solver.

    For equal per-experiment run counts the subset average equals the mean
    of per-experiment proportions, so the minimum over subsets is exactly
    the mean of the ``half_size`` smallest proportions.
    """
    _require_equal_runs(table, solvers)
    if not (1 <= half_size <= len(table.experiments)):
        raise ValueError("half_size out of range")
    values = {}
    for solver in solvers:
        props = np.sort(table.proportions(solver))
        values[solver] = float(np.mean(props[:half_size]))
    best_solver = max(solvers, key=lambda s: (values[s], s))
    return values, best_solver, values[best_solver]


Q2_EXACT_LIMIT = 10_000_000


def minimax_q2(table: SuccessTable, solvers, half_size: int,
               rng: np.random.Generator | None = None,
               restarts: int = 32):
    """Subset maximizing the worst-over-solvers success proportion.

    Enumerates all subsets exactly when feasible; otherwise runs a seeded
    swap local search and flags the result approximate.
    Returns (subset, value, exact_flag).
    """
    _require_equal_runs(table, solvers)
    n = len(table.experiments)
    if not (1 <= half_size <= n):
        raise ValueError("half_size out of range")
    props = {s: table.proportions(s) for s in solvers}

    def value_of(index_tuple):
        idx = np.asarray(index_tuple)
        return min(float(np.mean(props[s][idx])) for s in solvers)

    if comb(n, half_size) <= Q2_EXACT_LIMIT:
        best = None
        for subset in combinations(range(n), half_size):
            v = value_of(subset)
            if best is None or v > best[1] + 1e-15:
                best = (subset, v)
        subset_ids = tuple(table.experiments[i] for i in best[0])
        return subset_ids, best[1], True

    rng = rng if rng is not None else np.random.default_rng(0)
    best = None
    for _ in range(restarts):
        current = list(rng.choice(n, size=half_size, replace=False))
        current.sort()
        outside = [i for i in range(n) if i not in set(current)]
        v = value_of(current)
        improved = True
        while improved:
            improved = False
            for i_pos in range(len(current)):
                for o_pos in range(len(outside)):
                    trial = current.copy()
                    trial[i_pos] = outside[o_pos]
                    tv = value_of(trial)
                    if tv > v + 1e-15:
                        outside[o_pos], current[i_pos] = current[i_pos], trial[i_pos]
                        current.sort()
                        outside.sort()
                        v = tv
                        improved = True
                        break
                if improved:
                    break
        if best is None or v > best[1]:
            best = (tuple(current), v)
    subset_ids = tuple(table.experiments[i] for i in best[0])
    return subset_ids, best[1], False


# ---------------------------------------------------------------------------
# paired t-tests and iteration statistics


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int


def paired_t_one_sided(means_a, means_b) -> TTestResult:
    """One-sided paired t-test of H1: mean(a) > mean(b).

    Inputs are per-experiment summaries aligned by experiment.  Raises
    ZeroVarianceError when the differences are identically zero; constant
    nonzero differences get the t = +/- infinity convention.
    """
    a = np.asarray(means_a, dtype=float)
    b = np.asarray(means_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need paired vectors of equal length >= 2")
    d = a - b
    n = d.size
    sd = float(np.std(d, ddof=1))
    mean = float(np.mean(d))
    if sd == 0.0:
        if mean == 0.0:
            raise ZeroVarianceError("paired differences are identically zero")
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t=t, p=0.0 if mean > 0 else 1.0, df=n - 1)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t=t, p=student_t_sf(t, n - 1), df=n - 1)


def _lower_median(values) -> float:
    ordered = sorted(values)
    return float(ordered[(len(ordered) - 1) // 2])


@dataclass(frozen=True)
class IterationStats:
    count: int
    mean: float
    median: float
    std: float


def joint_success_experiments(records) -> set:
    """Experiments where every solver present has at least one success."""
    solvers = sorted({r.solver for r in records})
    experiments = sorted({r.experiment for r in records})
    out = set()
    for dat in experiments:
        ok = True
        for solver in solvers:
            runs = [r for r in records if r.experiment == dat and r.solver == solver]
            if not runs or not any(r.success for r in runs):
                ok = False
                break
        if ok:
            out.add(dat)
    return out


def iteration_stats(records, joint_success_filter: bool) -> dict:
    """Per-solver iteration-count summaries.

    Filtered variant: successful runs only, restricted to experiments where
    every solver succeeded at least once.  Unfiltered variant: every run of
    every experiment regardless of where it converged.
    """
    records = list(records)
    if joint_success_filter:
        keep = joint_success_experiments(records)
        pool = [r for r in records if r.experiment in keep and r.success]
    else:
        pool = records
    out = {}
    for solver in sorted({r.solver for r in records}):
        iters = [r.iterations_to_termination for r in pool if r.solver == solver]
        if not iters:
            out[solver] = IterationStats(count=0, mean=math.nan,
                                         median=math.nan, std=math.nan)
            continue
        arr = np.asarray(iters, dtype=float)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
        out[solver] = IterationStats(count=arr.size, mean=float(arr.mean()),
                                     median=_lower_median(iters), std=std)
    return out


def per_experiment_mean_iterations(records, solver: str, experiments,
                                   successful_only: bool) -> list:
    """Mean iterations per experiment (NaN when no qualifying run exists)."""
    out = []
    for dat in experiments:
        runs = [r for r in records if r.solver == solver and r.experiment == dat]
        if successful_only:
            runs = [r for r in runs if r.success]
        if not runs:
            out.append(math.nan)
        else:
            out.append(float(np.mean([r.iterations_to_termination for r in runs])))
    return out


def success_probability_vs_cap(records, caps) -> dict:
    """Fraction of runs that succeeded within each iteration cap."""
    records = list(records)
    out = {}
    for solver in sorted({r.solver for r in records}):
        runs = [r for r in records if r.solver == solver]
        curve = []
        for cap in caps:
            hits = sum(1 for r in runs
                       if r.success and r.iterations_to_termination <= cap)
            curve.append((cap, hits / len(runs)))
        out[solver] = curve
    return out


def regret_curves(records, f_star: float) -> dict:
    """Per-solver mean/std of best-so-far regret, aligned by iteration.

    Iteration 0 is the initial design; shorter runs carry their final regret
    forward.  The spread is the population standard deviation.
    """
    records = list(records)
    out = {}
    for solver in sorted({r.solver for r in records}):
        runs = [r for r in records if r.solver == solver]
        series = []
        for r in runs:
            best = float(np.min(r.initial_f))
            regret = [best - f_star]
            for row in r.iterations:
                best = min(best, row.f)
                regret.append(best - f_star)
            series.append(regret)
        horizon = max(len(s) for s in series)
        aligned = np.array([s + [s[-1]] * (horizon - len(s)) for s in series])
        means = aligned.mean(axis=0)
        stds = aligned.std(axis=0)
        out[solver] = [(i, float(means[i]), float(stds[i])) for i in range(horizon)]
    return out

"""Benchmark objectives, their certified optima, and initial-design sampling.

Reference optima marked "derived" below were computed with a dense
multistart oracle (quasi-Newton starts followed by simplex polish and a
gradient-norm filter) and are frozen here to full float precision.
"""

from __future__ import annotations

import math

import numpy as np

from .box import SearchBox
from .engine import BenchmarkHandle
from .gkls import gkls_generate

E_CONST = math.e

# ---------------------------------------------------------------------------
# 2-D double-well potential (four anisotropic Gaussian wells)

_MB_A = np.array([-200.0, -100.0, -170.0, 15.0])
_MB_a = np.array([-1.0, -1.0, -6.5, 0.7])
_MB_b = np.array([0.0, 0.0, 11.0, 0.6])
_MB_c = np.array([-10.0, -10.0, -6.5, 0.7])
_MB_W1 = np.array([1.0, 0.0, -0.5, -1.0])
_MB_W2 = np.array([0.0, 0.5, 1.5, 1.0])

MUELLER_BROWN_BOX = SearchBox(lower=(-1.5, -0.5), upper=(1.0, 2.0))

# derived: global minimum plus the two other local minima inside the box
MUELLER_BROWN_GLOBAL = ((-0.5582236346, 1.4417258418), -146.69951720995402)
MUELLER_BROWN_LOCAL = (
    ((0.6234994049, 0.0280377585), -108.16672411685236),
    ((-0.0500108227, 0.4666941049), -80.76781812965903),
)


def mueller_brown(x) -> float:
    x = np.asarray(x, dtype=float)
    d1 = x[0] - _MB_W1
    d2 = x[1] - _MB_W2
    return float(np.sum(_MB_A * np.exp(_MB_a * d1 * d1 + _MB_b * d1 * d2
                                       + _MB_c * d2 * d2)))


# ---------------------------------------------------------------------------
# 2-D six-hump camelback

CAMELBACK_BOX = SearchBox(lower=(-3.0, -2.0), upper=(3.0, 2.0))

CAMELBACK_GLOBALS = (
    ((0.0898420131, -0.7126564032), -1.031628453489877),
    ((-0.0898420131, 0.7126564032), -1.031628453489877),
)


def camelback(x) -> float:
    x = np.asarray(x, dtype=float)
    x1, x2 = float(x[0]), float(x[1])
    return ((4.0 - 2.1 * x1 ** 2 + x1 ** 4 / 3.0) * x1 ** 2 + x1 * x2
            + (-4.0 + 4.0 * x2 ** 2) * x2 ** 2)


# ---------------------------------------------------------------------------
# 3-D Ackley

ACKLEY3_BOX = SearchBox(lower=(-5.0, -5.0, -5.0), upper=(5.0, 5.0, 5.0))


def ackley3(x) -> float:
    x = np.asarray(x, dtype=float)
    root_term = -20.0 * math.exp(-0.2 * math.sqrt(float(np.mean(x * x)))) + 20.0
    cos_term = E_CONST - math.exp(float(np.mean(np.cos(2.0 * math.pi * x))))
    return root_term + cos_term


# ---------------------------------------------------------------------------
# 4-D Hartmann (plain exponential-sum form)

HARTMANN4_BOX = SearchBox(lower=(0.0,) * 4, upper=(1.0,) * 4)

_H4_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H4_A = np.array([
    [10.0, 3.0, 17.0, 3.5],
    [0.05, 10.0, 17.0, 0.1],
    [3.0, 3.5, 1.7, 10.0],
    [17.0, 8.0, 0.05, 10.0],
])
_H4_P = np.array([
    [0.1312, 0.1696, 0.5569, 0.0124],
    [0.2329, 0.4135, 0.8307, 0.3736],
    [0.2348, 0.1451, 0.3522, 0.2883],
    [0.4047, 0.8828, 0.8732, 0.5743],
])

# derived: the minimizer of the form above (multistart oracle, simplex-polished)
HARTMANN4_GLOBAL = ((0.1873952709, 0.1941514159, 0.5579177825, 0.2647796239),
                    -3.729840584485593)


def hartmann4(x) -> float:
    x = np.asarray(x, dtype=float)
    inner = np.sum(_H4_A * (x[None, :] - _H4_P) ** 2, axis=1)
    return float(-np.sum(_H4_ALPHA * np.exp(-inner)))


# ---------------------------------------------------------------------------
# initial designs

def latin_hypercube(n: int, box: SearchBox, rng: np.random.Generator) -> np.ndarray:
    """n raw-unit points with one sample per axis stratum per dimension."""
    if n < 1:
        raise ValueError("need n >= 1 design points")
    dim = box.dim
    unit = np.empty((n, dim))
    for d in range(dim):
        strata = rng.permutation(n)
        unit[:, d] = (strata + rng.uniform(size=n)) / n
    return box.lower + unit * box.width


# ---------------------------------------------------------------------------
# registry

# case-study parameters for the generated multimodal instances per dimension:
# (distance to vertex, attraction radius, number of local minima)
_GKLS_PARAMS = {
    2: (0.90, 0.40, 10),
    3: (0.66, 0.30, 10),
    4: (0.66, 0.20, 10),
}
DEFAULT_GKLS_SEED = 12

BENCHMARK_NAMES = ("mueller-brown", "camelback-2d", "ackley-3d", "hartmann-4d",
                   "gkls-2d", "gkls-3d", "gkls-4d")

# absolute objective tolerance used for success classification, matching the
# per-case-study absolute termination tolerance
_SUCCESS_TOL = {
    "mueller-brown": 0.5,
    "camelback-2d": 0.05,
    "ackley-3d": 0.05,
    "hartmann-4d": 0.01,
    "gkls-2d": 0.05,
    "gkls-3d": 0.02,
    "gkls-4d": 0.01,
}


def get_benchmark(name: str, gkls_seed: int = DEFAULT_GKLS_SEED) -> BenchmarkHandle:
    """Benchmark handle by stable string identifier."""
    if name == "mueller-brown":
        return BenchmarkHandle(name=name, fn=mueller_brown, box=MUELLER_BROWN_BOX,
                               optima=(MUELLER_BROWN_GLOBAL,),
                               success_tol=_SUCCESS_TOL[name])
    if name == "camelback-2d":
        return BenchmarkHandle(name=name, fn=camelback, box=CAMELBACK_BOX,
                               optima=CAMELBACK_GLOBALS,
                               success_tol=_SUCCESS_TOL[name])
    if name == "ackley-3d":
        return BenchmarkHandle(name=name, fn=ackley3, box=ACKLEY3_BOX,
                               optima=(((0.0, 0.0, 0.0), 0.0),),
                               success_tol=_SUCCESS_TOL[name])
    if name == "hartmann-4d":
        return BenchmarkHandle(name=name, fn=hartmann4, box=HARTMANN4_BOX,
                               optima=(HARTMANN4_GLOBAL,),
                               success_tol=_SUCCESS_TOL[name])
    if name.startswith("gkls-") and name.endswith("d"):
        dim = int(name[5:-1])
        if dim not in _GKLS_PARAMS:
            raise KeyError(f"no generated instance class for dimension {dim}")
        dist, radius, n_minima = _GKLS_PARAMS[dim]
        instance = gkls_generate(dim, dist, radius, n_minima, seed=gkls_seed)
        box = SearchBox(lower=(-1.0,) * dim, upper=(1.0,) * dim)
        return BenchmarkHandle(name=name, fn=instance.evaluate, box=box,
                               optima=((tuple(instance.global_minimizer),
                                        instance.global_value),),
                               success_tol=_SUCCESS_TOL[name])
    raise KeyError(f"unknown benchmark {name!r}; known: {BENCHMARK_NAMES}")


def reference_optimum(name: str, gkls_seed: int = DEFAULT_GKLS_SEED):
    """(list of minimizers, f_star, success_tol) for a registered benchmark."""
    handle = get_benchmark(name, gkls_seed=gkls_seed)
    xs = [np.asarray(x, dtype=float) for x, _ in handle.optima]
    return xs, handle.f_star, handle.success_tol

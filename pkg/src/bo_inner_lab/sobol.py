"""Unscrambled Sobol sequence from standard direction numbers (dims <= 16).

Emits the sequence in Gray-code order starting at construction index 1, so
the first 1-D terms are 0.5, 0.75, 0.25, ...  The all-zeros origin term is
not emitted.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionTooLargeError

MAX_DIM = 16

# (degree s, coefficient bits a, initial m values) per dimension >= 2;
# dimension 1 is the plain van der Corput radical inverse.
_DIRECTION_TABLE = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
)


def _direction_integers(dim_index: int, n_bits: int) -> np.ndarray:
    """Direction numbers as integers scaled by 2^n_bits for one dimension."""
    v = np.zeros(n_bits, dtype=np.uint64)
    if dim_index == 0:
        for j in range(n_bits):
            v[j] = np.uint64(1) << np.uint64(n_bits - 1 - j)
        return v
    s, a, m = _DIRECTION_TABLE[dim_index - 1]
    for j in range(min(s, n_bits)):
        v[j] = np.uint64(m[j]) << np.uint64(n_bits - 1 - j)
    for j in range(s, n_bits):
        new = v[j - s] ^ (v[j - s] >> np.uint64(s))
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                new ^= v[j - k]
        v[j] = new
    return v


def sobol_points(n: int, d: int) -> np.ndarray:
    """First ``n`` terms of the d-dimensional Sobol sequence in [0, 1)^d."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if d > MAX_DIM:
        raise DimensionTooLargeError(
            f"sobol_points supports at most {MAX_DIM} dimensions, got {d}")
    if n < 1:
        raise ValueError("need n >= 1 points")
    n_bits = max(1, int(n).bit_length() + 1)
    directions = np.stack([_direction_integers(j, n_bits) for j in range(d)])
    out = np.empty((n, d))
    state = np.zeros(d, dtype=np.uint64)
    scale = float(2 ** n_bits)
    for i in range(1, n + 1):
        low_zero = (i & -i).bit_length() - 1  # lowest set bit of i
        state ^= directions[:, low_zero]
        out[i - 1] = state / scale
    return out

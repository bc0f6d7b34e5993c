"""Axis-aligned search boxes and the raw <-> unit-cube coordinate maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SearchBox:
    """Box constraints in raw units; the solvers all work on [0, 1]^D."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("box must satisfy lower < upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def scale(self, x_raw) -> np.ndarray:
        """Map raw coordinates onto the unit cube."""
        return (np.asarray(x_raw, dtype=float) - self.lower) / self.width

    def unscale(self, x_unit) -> np.ndarray:
        """Map unit-cube coordinates back to raw units, clipped into the box."""
        raw = self.lower + np.asarray(x_unit, dtype=float) * self.width
        return np.clip(raw, self.lower, self.upper)

    def contains(self, x_raw, atol: float = 0.0) -> bool:
        x = np.asarray(x_raw, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

"""Generator for multimodal test functions with a certified global minimum.

A quadratic bowl on [-1, 1]^D is reshaped inside pairwise-disjoint balls: in
ball i the function blends between a local quadratic cup with prescribed
minimum value and the bowl, through a quintic smoothstep of the radial
coordinate.  The blend and both of its derivatives match the bowl on every
ball boundary, so the result is twice continuously differentiable, with one
local minimizer per ball plus the bowl vertex itself.

The first ball's minimum is pinned at exactly -1.0 and is the unique global
minimum.  Instances are deterministic functions of the generation seed; the
generator makes no attempt to reproduce any external instance stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleGeometryError

GLOBAL_MIN_VALUE = -1.0
_DOMAIN_MARGIN = 0.02
_BALL_GAP = 0.02
_VERTEX_GAP = 0.05
_OTHER_RADIUS_RANGE = (0.10, 0.20)
_OTHER_VALUE_RANGE = (-0.8, -0.05)


def _smoothstep(s):
    """Quintic step: 0 at 0, 1 at 1, first and second derivatives 0 at both."""
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


@dataclass(frozen=True)
class GklsInstance:
    """One generated instance on [-1, 1]^dim.

    ``centers[0]`` is the global minimizer (value exactly -1); the bowl
    vertex is an additional local minimizer, for ``n_minima`` in total.
    """

    dim: int
    vertex: np.ndarray
    vertex_value: float
    centers: np.ndarray    # (n_balls, dim)
    radii: np.ndarray      # (n_balls,)
    values: np.ndarray     # (n_balls,) local minimum values
    cups: np.ndarray       # (n_balls,) local quadratic curvatures

    @property
    def n_minima(self) -> int:
        return self.centers.shape[0] + 1

    @property
    def global_minimizer(self) -> np.ndarray:
        return self.centers[0]

    @property
    def global_value(self) -> float:
        return float(self.values[0])

    def minimizers(self) -> list:
        """All local minimizers with their values, global first."""
        out = [(self.centers[i], float(self.values[i]))
               for i in range(self.centers.shape[0])]
        out.append((self.vertex, self.vertex_value))
        return out

    def _bowl(self, x):
        d = x - self.vertex
        return float(d @ d) + self.vertex_value

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        dists = np.linalg.norm(self.centers - x[None, :], axis=1)
        inside = np.nonzero(dists < self.radii)[0]
        if inside.size == 0:
            return self._bowl(x)
        i = int(inside[0])  # balls are disjoint; at most one match
        omega = dists[i]
        s = omega / self.radii[i]
        cup = self.values[i] + self.cups[i] * omega * omega
        blend = _smoothstep(s)
        return float((1.0 - blend) * cup + blend * self._bowl(x))

    def __call__(self, x) -> float:
        return self.evaluate(x)


def _fits_domain(center, radius, dim):
    return bool(np.all(np.abs(center) + radius <= 1.0 - _DOMAIN_MARGIN))


def gkls_generate(dim: int, dist_to_vertex: float, attraction_radius: float,
                  n_minima: int, seed: int, vertex_value: float = 0.0,
                  max_attempts: int = 200) -> GklsInstance:
    """Generate an instance with ``n_minima`` local minima in total.

    ``dist_to_vertex`` separates the global minimizer from the bowl vertex
    and ``attraction_radius`` sizes its ball.  Raises
    InfeasibleGeometryError when the balls cannot be placed disjointly
    within the attempt budget.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not (0.0 < attraction_radius < dist_to_vertex):
        raise ValueError("require 0 < attraction_radius < dist_to_vertex")
    if n_minima < 2:
        raise ValueError("need at least two local minima")

    rng = np.random.default_rng(seed)
    n_balls = n_minima - 1

    for _ in range(max_attempts):
        vertex = rng.uniform(-0.5, 0.5, size=dim)

        global_center = None
        for _ in range(64):
            direction = rng.normal(size=dim)
            direction /= np.linalg.norm(direction)
            candidate = vertex + dist_to_vertex * direction
            if _fits_domain(candidate, attraction_radius, dim):
                global_center = candidate
                break
        if global_center is None:
            continue

        centers = [global_center]
        radii = [attraction_radius]
        placed_all = True
        for _ in range(n_balls - 1):
            placed = False
            for _ in range(256):
                radius = rng.uniform(*_OTHER_RADIUS_RANGE)
                center = rng.uniform(-1.0 + _DOMAIN_MARGIN + radius,
                                     1.0 - _DOMAIN_MARGIN - radius, size=dim)
                if np.linalg.norm(center - vertex) <= radius + _VERTEX_GAP:
                    continue
                ok = all(np.linalg.norm(center - c) > radius + r + _BALL_GAP
                         for c, r in zip(centers, radii))
                if ok:
                    centers.append(center)
                    radii.append(radius)
                    placed = True
                    break
            if not placed:
                placed_all = False
                break
        if not placed_all:
            continue

        centers = np.asarray(centers)
        radii = np.asarray(radii)
        values = np.empty(n_balls)
        values[0] = GLOBAL_MIN_VALUE
        for i in range(1, n_balls):
            bowl_floor = (np.linalg.norm(centers[i] - vertex) - radii[i]) ** 2 + vertex_value
            hi = min(_OTHER_VALUE_RANGE[1], bowl_floor - 0.05)
            lo = _OTHER_VALUE_RANGE[0]
            if hi <= lo:
                hi = lo + 0.01
            values[i] = rng.uniform(lo, hi)

        # cup reaches the spherical average of the bowl on the ball boundary
        bowl_at = np.sum((centers - vertex[None, :]) ** 2, axis=1) + vertex_value
        cups = (bowl_at + radii ** 2 - values) / radii ** 2
        return GklsInstance(dim=dim, vertex=vertex, vertex_value=float(vertex_value),
                            centers=centers, radii=radii, values=values, cups=cups)

    raise InfeasibleGeometryError(
        f"could not place {n_balls} disjoint attraction regions in "
        f"{max_attempts} attempts (dim={dim})")

"""Achievable-rate sampling per chain-rule order and the sampled capacity
region as the convex closure of all orders' clouds (inner approximation)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import info
from .errors import GuardExceeded
from .model import ChannelMatrix, IpdProduct
from .verify import GridSpec, all_multi_indices, boundary_determinant

REGION_GUARD = 10**6
_DEDUP_DECIMALS = 9


@dataclass(frozen=True)
class RateSample:
    """One decomposition of I at one sampled distribution.

    ``rates[t]`` is the chain component of user ``order[t]``; use
    :meth:`user_rates` for coordinates arranged by user index.
    """

    order: tuple[int, ...]
    rates: tuple[float, ...]
    source_ipd: IpdProduct

    def user_rates(self) -> tuple[float, ...]:
        out = [0.0] * len(self.order)
        for t, user in enumerate(self.order):
            out[user] = self.rates[t]
        return tuple(out)


@dataclass(frozen=True)
class RegionEstimate:
    samples: tuple[RateSample, ...]
    hull_vertices: np.ndarray
    hull_facets: tuple[tuple[int, ...], ...]
    hull_equations: np.ndarray | None
    diagnostics: tuple[str, ...]

    def contains(self, point, tol: float = 1e-9) -> bool:
        point = np.asarray(point, dtype=np.float64)
        if self.hull_vertices.size == 0:
            return False
        if self.hull_equations is None:
            lo = self.hull_vertices.min(axis=0) - tol
            hi = self.hull_vertices.max(axis=0) + tol
            return bool(np.all(point >= lo) and np.all(point <= hi))
        residual = self.hull_equations[:, :-1] @ point + self.hull_equations[:, -1]
        return bool(np.max(residual) <= tol)

    def max_sum_rate(self) -> float:
        if self.hull_vertices.size:
            return float(self.hull_vertices.sum(axis=1).max())
        return float(max(sum(s.user_rates()) for s in self.samples))


def sample_subregion(
    P: ChannelMatrix, order, grid: GridSpec
) -> list[RateSample]:
    """Chain-rate tuples for every lattice distribution, one fixed order."""
    if grid.sizes != P.mac_type.n:
        raise ValueError("grid does not match the channel type")
    if grid.total_points > REGION_GUARD:
        raise GuardExceeded(
            f"grid has {grid.total_points} points, region guard is {REGION_GUARD}"
        )
    order = tuple(int(u) for u in order)
    samples = []
    for flat in range(grid.total_points):
        p = grid.point(flat)
        chain = info.chain_decomposition(P, p, order)
        samples.append(RateSample(order, chain.components, p))
    return samples


def _dedupe(points: np.ndarray) -> np.ndarray:
    seen = {}
    for row in points:
        key = tuple(np.round(row, _DEDUP_DECIMALS))
        if key not in seen:
            seen[key] = row
    return np.array(list(seen.values()))


def _build_hull(points: np.ndarray):
    """Hull vertices, facets and equations; degenerate clouds degrade to a
    bounding description with a diagnostic."""
    diagnostics = []
    if points.shape[1] == 1:
        vertices = np.array([[points.min()], [points.max()]])
        return vertices, (), None, diagnostics
    try:
        hull = ConvexHull(points)
    except QhullError:
        diagnostics.append("degenerate point cloud, hull joggled")
        try:
            hull = ConvexHull(points, qhull_options="QJ")
        except QhullError:
            diagnostics.append("hull construction failed, reporting bounding box")
            lo, hi = points.min(axis=0), points.max(axis=0)
            corners = np.array(list(itertools.product(*zip(lo, hi))))
            return corners, (), None, diagnostics
    vertex_pos = {int(v): i for i, v in enumerate(hull.vertices)}
    vertices = points[hull.vertices]
    facets = tuple(
        tuple(vertex_pos[int(v)] for v in simplex if int(v) in vertex_pos)
        for simplex in hull.simplices
    )
    return vertices, facets, hull.equations, diagnostics


def capacity_region(P: ChannelMatrix, grid: GridSpec) -> RegionEstimate:
    """Union of the per-order clouds, convex-closed.

    The hull is an inner approximation converging with resolution; above
    three users only the sampling is returned, with a diagnostic.
    """
    N = P.mac_type.num_users
    samples: list[RateSample] = []
    for order in itertools.permutations(range(N)):
        samples.extend(sample_subregion(P, order, grid))
    cloud = _dedupe(np.array([s.user_rates() for s in samples]))
    if N > 3:
        return RegionEstimate(
            tuple(samples),
            np.empty((0, N)),
            (),
            None,
            ("hull construction skipped for more than three users",),
        )
    vertices, facets, equations, diagnostics = _build_hull(cloud)
    return RegionEstimate(
        tuple(samples), vertices, facets, equations, tuple(diagnostics)
    )


def boundary_residual_map(
    P: ChannelMatrix, order, grid: GridSpec
) -> list[tuple[IpdProduct, float]]:
    """Worst boundary-equation residual at every lattice distribution.

    Near-zero residuals trace candidate extremal points of the order's
    sub-region; the map does not separate maxima from minima.
    """
    if P.mac_type.num_users < 2:
        raise ValueError("boundary residuals need at least two users")
    if grid.total_points > REGION_GUARD:
        raise GuardExceeded(
            f"grid has {grid.total_points} points, region guard is {REGION_GUARD}"
        )
    indices = all_multi_indices(P.mac_type)
    out = []
    for flat in range(grid.total_points):
        p = grid.point(flat)
        residual = max(
            abs(boundary_determinant(P, p, order, idx)) for idx in indices
        )
        out.append((p, float(residual)))
    return out

"""Independent oracles and property checkers: brute-force grid capacity,
local-maximum perturbation tests, level-set connectedness, and boundary
determinants.

The grid oracles walk the barycentric lattice on each user's simplex (or
face): all compositions of resolution-1 into the support size, scaled down.
That covers the simplex exactly, corners included, with no projection bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import backend, info
from .errors import GuardExceeded
from .model import ChannelMatrix, FaceProduct, IpdProduct, MacType
from .optimize import OptimizeOptions, kt_check

GRID_GUARD = 10**8
LEVELSET_GUARD = 10**7


@cache
def compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to
    ``total``, in ascending lexicographic order."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts == 1:
        out = np.array([[total]], dtype=np.int64)
    else:
        blocks = []
        for head in range(total + 1):
            tail = compositions(total - head, parts - 1)
            block = np.empty((tail.shape[0], parts), dtype=np.int64)
            block[:, 0] = head
            block[:, 1:] = tail
            blocks.append(block)
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridSpec:
    """Barycentric product lattice over the per-user simplices or faces."""

    resolution: int
    supports: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        object.__setattr__(
            self, "supports", tuple(tuple(int(i) for i in s) for s in self.supports)
        )
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))

    @classmethod
    def for_type(
        cls, mac_type: MacType, resolution: int, face: FaceProduct | None = None
    ) -> "GridSpec":
        if face is None:
            face = FaceProduct.full(mac_type)
        face.validate_for(mac_type)
        return cls(resolution, face.supports, mac_type.n)

    @property
    def num_users(self) -> int:
        return len(self.sizes)

    @property
    def per_user_counts(self) -> tuple[int, ...]:
        r = self.resolution
        return tuple(
            math.comb(r + len(s) - 2, len(s) - 1) for s in self.supports
        )

    @property
    def total_points(self) -> int:
        return math.prod(self.per_user_counts)

    def user_lattice(self, k: int) -> np.ndarray:
        """Lattice vectors of user k, embedded at full length."""
        support = list(self.supports[k])
        comp = compositions(self.resolution - 1, len(support))
        out = np.zeros((comp.shape[0], self.sizes[k]))
        out[:, support] = comp / float(self.resolution - 1)
        return out

    def decode(self, flat: int) -> tuple[int, ...]:
        """Per-user lattice indices of a flat grid index (user 1 slowest)."""
        idxs = []
        for count in reversed(self.per_user_counts):
            idxs.append(flat % count)
            flat //= count
        return tuple(reversed(idxs))

    def point(self, flat: int) -> IpdProduct:
        idxs = self.decode(flat)
        return IpdProduct(
            tuple(self.user_lattice(k)[i] for k, i in enumerate(idxs))
        )


def _block_weights(lattices: Sequence[np.ndarray], counts, start: int, stop: int):
    """Joint-weight rows for flat grid indices [start, stop)."""
    flats = np.arange(start, stop, dtype=np.int64)
    strides = np.ones(len(counts), dtype=np.int64)
    for k in range(len(counts) - 2, -1, -1):
        strides[k] = strides[k + 1] * counts[k + 1]
    W = None
    for k, lat in enumerate(lattices):
        rows = lat[(flats // strides[k]) % counts[k]]
        if W is None:
            W = rows
        else:
            W = (W[:, :, None] * rows[:, None, :]).reshape(W.shape[0], -1)
    return np.ascontiguousarray(W)


def iter_grid_values(
    P: ChannelMatrix, grid: GridSpec, block_rows: int = 4096
) -> Iterable[tuple[int, np.ndarray]]:
    """Yield (flat_start, mutual informations) over the product grid."""
    lattices = [grid.user_lattice(k) for k in range(grid.num_users)]
    counts = grid.per_user_counts
    total = grid.total_points
    colent = P.column_entropy_terms
    for start in range(0, total, block_rows):
        stop = min(start + block_rows, total)
        W = _block_weights(lattices, counts, start, stop)
        yield start, np.asarray(backend.mi_block(P.probs, colent, W))


class GridCapacity(NamedTuple):
    value: float
    argmax: IpdProduct
    bound: float


def grid_capacity(
    P: ChannelMatrix, grid: GridSpec, face: FaceProduct | None = None
) -> GridCapacity:
    """Exhaustive lattice maximum of I: a certified lower bound on the
    capacity, with a Lipschitz-style radius estimate in ``bound``."""
    if face is not None:
        grid = GridSpec.for_type(P.mac_type, grid.resolution, face)
    if grid.sizes != P.mac_type.n:
        raise ValueError("grid does not match the channel type")
    total = grid.total_points
    if total > GRID_GUARD:
        raise GuardExceeded(
            f"grid has {total} points, guard is {GRID_GUARD}; "
            "lower the resolution"
        )
    best_val = -np.inf
    best_flat = 0
    for start, vals in iter_grid_values(P, grid):
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_flat = start + i
    argmax = grid.point(best_flat)

    # gradient magnitude sampled at the argmax and the face barycenter
    lip = 1.0
    probes = [argmax, FaceProduct(grid.supports).barycenter(P.mac_type)]
    for probe in probes:
        for J in info.scores(P, probe):
            finite = J[np.isfinite(J)]
            if finite.size:
                lip = max(lip, float(np.max(np.abs(finite))) + 1.0)
    step = sum(len(s) for s in grid.supports) / (grid.resolution - 1)
    return GridCapacity(best_val, argmax, lip * step)


@dataclass(frozen=True)
class LevelSetReport:
    threshold: float
    grid: GridSpec
    component_count: int
    connected: bool
    empty: bool


def _user_adjacency(comp: np.ndarray) -> list[np.ndarray]:
    """Single-unit-move neighbors within one user's composition lattice."""
    index = {tuple(int(v) for v in row): i for i, row in enumerate(comp)}
    adj = []
    for row in comp:
        nbrs = set()
        row = [int(v) for v in row]
        for a in range(len(row)):
            if row[a] == 0:
                continue
            for b in range(len(row)):
                if b == a:
                    continue
                key = list(row)
                key[a] -= 1
                key[b] += 1
                nbrs.add(index[tuple(key)])
        adj.append(np.array(sorted(nbrs), dtype=np.int64))
    return adj


def level_set_connected(P: ChannelMatrix, a: float, grid: GridSpec) -> LevelSetReport:
    """Count connected components of the grid points with I >= a, moving one
    lattice step in one user at a time."""
    if grid.sizes != P.mac_type.n:
        raise ValueError("grid does not match the channel type")
    total = grid.total_points
    if total > LEVELSET_GUARD:
        raise GuardExceeded(
            f"grid has {total} points, guard is {LEVELSET_GUARD}"
        )
    values = np.empty(total)
    for start, vals in iter_grid_values(P, grid):
        values[start : start + vals.size] = vals
    included = values >= a
    if not included.any():
        return LevelSetReport(a, grid, 0, True, True)

    counts = grid.per_user_counts
    strides = [1] * len(counts)
    for k in range(len(counts) - 2, -1, -1):
        strides[k] = strides[k + 1] * counts[k + 1]
    adjacency = [
        _user_adjacency(compositions(grid.resolution - 1, len(s)))
        for s in grid.supports
    ]

    visited = np.zeros(total, dtype=bool)
    components = 0
    for seed in np.flatnonzero(included):
        seed = int(seed)
        if visited[seed]:
            continue
        components += 1
        stack = [seed]
        visited[seed] = True
        while stack:
            node = stack.pop()
            idxs = grid.decode(node)
            for k, (idx_k, stride) in enumerate(zip(idxs, strides)):
                base = node - idx_k * stride
                for nb in adjacency[k][idx_k]:
                    other = base + int(nb) * stride
                    if included[other] and not visited[other]:
                        visited[other] = True
                        stack.append(other)
    return LevelSetReport(a, grid, components, components <= 1, False)


class LocalMaxReport(NamedTuple):
    passed: bool
    worst_gap: float
    worst_ipd: IpdProduct | None
    samples: int


def check_local_max(
    P: ChannelMatrix,
    p_star: IpdProduct,
    radius: float,
    samples: int,
    seed: int,
    kt_tol: float = 1e-6,
    slack: float = 1e-9,
) -> LocalMaxReport:
    """Random perturbations within max-norm ``radius`` (clamped to zero and
    renormalized, which can stretch the radius by up to a factor of two);
    passes when no perturbation improves I beyond ``slack``.

    Only meaningful at stationary points, so the input must pass
    :func:`kt_check` at ``kt_tol`` first.
    """
    report = kt_check(P, p_star, kt_tol=kt_tol)
    if not report.satisfied:
        raise ValueError(
            "p_star does not satisfy the Kuhn-Tucker conditions at "
            f"tolerance {kt_tol!r} (equality residual "
            f"{report.max_equality_residual!r}, violation "
            f"{report.max_inequality_violation!r})"
        )
    rng = np.random.default_rng(seed)
    pert_parts = []
    for v in p_star.parts:
        noise = rng.uniform(-radius, radius, size=(samples, v.size))
        block = np.maximum(v[None, :] + noise, 0.0)
        sums = block.sum(axis=1, keepdims=True)
        flat = np.flatnonzero(sums[:, 0] <= 0.0)
        if flat.size:  # cannot happen for radius < 1/n, kept as a guard
            block[flat] = v[None, :]
            sums[flat] = 1.0
        pert_parts.append(block / sums)

    W = pert_parts[0]
    for block in pert_parts[1:]:
        W = (W[:, :, None] * block[:, None, :]).reshape(samples, -1)
    values = np.asarray(
        backend.mi_block(P.probs, P.column_entropy_terms, np.ascontiguousarray(W))
    )
    base = info.mutual_information(P, p_star)
    worst = int(np.argmax(values))
    worst_gap = float(values[worst] - base)
    worst_ipd = IpdProduct(tuple(block[worst] for block in pert_parts))
    return LocalMaxReport(worst_gap <= slack, worst_gap, worst_ipd, samples)


def boundary_determinant(
    P: ChannelMatrix,
    p: IpdProduct,
    order: Sequence[int],
    indices: Sequence[int],
) -> float:
    """Determinant of the reduced-partial matrix whose columns are the
    order's first chain component, the full I, then the remaining components
    (the last component is omitted).  Zero at every stationary point with
    full equality, since the I column vanishes there."""
    N = P.mac_type.num_users
    if N < 2:
        raise ValueError("the boundary determinant needs at least two users")
    indices = tuple(int(i) for i in indices)
    if len(indices) != N:
        raise ValueError(f"need one index per user, got {indices}")
    for k, (i, n) in enumerate(zip(indices, P.mac_type.n)):
        if not 0 <= i <= n - 2:
            raise ValueError(f"index {i} of user {k + 1} must be in [0, {n - 2}]")
    columns = info.component_partial_table(P, p, order)
    M = np.empty((N, N))
    for k in range(N):
        ref = P.mac_type.n[k] - 1
        for t, tables in enumerate(columns):
            vec = tables[k]
            M[k, t] = vec[indices[k]] - vec[ref]
    return float(np.linalg.det(M))


def all_multi_indices(mac_type: MacType) -> list[tuple[int, ...]]:
    """Every multi-index (i_1, ..., i_N) with i_k <= n_k - 2."""
    out = [()]
    for n in mac_type.n:
        out = [prefix + (i,) for prefix in out for i in range(n - 1)]
    return out


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def random_channel(mac_type: MacType, rng: np.random.Generator) -> ChannelMatrix:
    """Columns drawn independently and uniformly from the output simplex."""
    probs = rng.dirichlet(np.ones(mac_type.m), size=mac_type.num_inputs).T
    return ChannelMatrix(mac_type, probs)


def random_ipd(mac_type: MacType, rng: np.random.Generator) -> IpdProduct:
    return IpdProduct.random(mac_type, rng)

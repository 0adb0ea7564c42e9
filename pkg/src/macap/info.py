"""Information functionals: output law, mutual information, marginal scores,
conditional mutual informations and chain-rule decompositions.

All values are in nats.  The zero convention throughout: a summand is
dropped whenever its total probability coefficient is zero, before any
logarithm is taken.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .model import ChannelMatrix, IpdProduct

_COMPONENT_CLAMP = 1e-12


@dataclass(frozen=True)
class OutputDistribution:
    q: np.ndarray

    def __post_init__(self):
        q = np.ascontiguousarray(self.q, dtype=np.float64)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if np.any(q < 0.0) or abs(float(q.sum()) - 1.0) > 1e-12:
            raise ValueError("output distribution is not a probability vector")


@dataclass(frozen=True)
class ChainDecomposition:
    """One chain-rule split of I into per-user conditional components.

    ``order`` lists users (0-based) in peeling order; ``components[t]`` is the
    conditional mutual information of user ``order[t]`` given the not yet
    peeled users, with users ``order[:t]`` averaged out.
    """

    order: tuple[int, ...]
    components: tuple[float, ...]

    def __post_init__(self):
        comp = []
        for v in self.components:
            if v < -_COMPONENT_CLAMP:
                raise ValueError(f"chain component {v!r} is negative beyond tolerance")
            comp.append(max(v, 0.0))
        object.__setattr__(self, "components", tuple(comp))
        object.__setattr__(self, "order", tuple(int(u) for u in self.order))

    @property
    def total(self) -> float:
        return float(sum(self.components))


def _eval_point(P: ChannelMatrix, p: IpdProduct):
    sizes = np.asarray(P.mac_type.n, dtype=np.int64)
    return backend.point_eval(P.probs, P.log_probs, sizes, p.concat())


def output_distribution(P: ChannelMatrix, p: IpdProduct) -> OutputDistribution:
    """q(j) = sum over input tuples of the joint weight times P(j | tuple)."""
    p.require_type(P.mac_type)
    q, _, _ = _eval_point(P, p)
    return OutputDistribution(q)


def mutual_information(P: ChannelMatrix, p: IpdProduct) -> float:
    p.require_type(P.mac_type)
    _, mi, _ = _eval_point(P, p)
    return mi


def scores(P: ChannelMatrix, p: IpdProduct) -> tuple[np.ndarray, ...]:
    """All marginal scores J(p; i_k), one array per user.

    J(p; i_k) is the gradient of I with respect to p_k(i_k) plus one; it
    equals I(p) on every positive-mass symbol exactly when p is a
    stationary point.  Entries can be +inf on zero-mass symbols.
    """
    p.require_type(P.mac_type)
    _, _, flat = _eval_point(P, p)
    out, off = [], 0
    for n in P.mac_type.n:
        out.append(flat[off : off + n])
        off += n
    return tuple(out)


def score(P: ChannelMatrix, p: IpdProduct, k: int, i_k: int) -> float:
    if not 0 <= k < P.mac_type.num_users:
        raise ValueError(f"user index {k} out of range")
    if not 0 <= i_k < P.mac_type.n[k]:
        raise ValueError(f"symbol {i_k} out of range for user {k + 1}")
    return float(scores(P, p)[k][i_k])


# ---------------------------------------------------------------------------
# Averaged channel tensors and conditional terms
# ---------------------------------------------------------------------------


def _averaged_tensor(P: ChannelMatrix, p: IpdProduct, users: Iterable[int]) -> np.ndarray:
    """Average the channel tensor over the given users, weighted by their
    vectors, then re-insert singleton axes so the result broadcasts against
    the full ``(m, n_1, ..., n_N)`` shape."""
    users = sorted(set(int(u) for u in users))
    B = P.tensor
    for u in reversed(users):
        B = np.tensordot(B, p.parts[u], axes=([1 + u], [0]))
    for u in users:
        B = np.expand_dims(B, axis=1 + u)
    return B


def _weight_tensor(p: IpdProduct, skip: int | None = None) -> np.ndarray:
    vecs = [np.ones(v.size) if l == skip else v for l, v in enumerate(p.parts)]
    return reduce(np.multiply.outer, vecs)


def conditional_mi(
    P: ChannelMatrix,
    p: IpdProduct,
    target: Iterable[int],
    averaged_out: Iterable[int] = (),
) -> float:
    """Generalized conditional term: the expected log-ratio of the channel
    averaged over ``averaged_out`` to the channel averaged over
    ``averaged_out + target``.

    With target = all users and nothing averaged this is the full mutual
    information; with an empty target it is zero.
    """
    p.require_type(P.mac_type)
    target = set(int(u) for u in target)
    averaged = set(int(u) for u in averaged_out)
    users = set(range(P.mac_type.num_users))
    if not target <= users or not averaged <= users:
        raise ValueError("user sets out of range")
    if target & averaged:
        raise ValueError(f"target {sorted(target)} overlaps averaged {sorted(averaged)}")
    if not target:
        return 0.0

    B1 = _averaged_tensor(P, p, averaged)
    B2 = _averaged_tensor(P, p, averaged | target)
    W = _weight_tensor(p)[None]
    Pt = P.tensor
    mask = (W > 0.0) & (Pt > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(B1) - np.log(B2)
        val = np.where(mask, W * Pt * L, 0.0).sum()
    return float(val)


def chain_decomposition(
    P: ChannelMatrix, p: IpdProduct, order: Sequence[int]
) -> ChainDecomposition:
    """Decompose I(p) along a user ordering; the components telescope to I."""
    p.require_type(P.mac_type)
    order = tuple(int(u) for u in order)
    if sorted(order) != list(range(P.mac_type.num_users)):
        raise ValueError(f"order {order} is not a permutation of the users")
    comps = [
        conditional_mi(P, p, target={order[t]}, averaged_out=set(order[:t]))
        for t in range(len(order))
    ]
    return ChainDecomposition(order, tuple(comps))


def all_orders(num_users: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(num_users)))


# ---------------------------------------------------------------------------
# Reduced partial derivatives of chain components (used by the boundary
# determinant).  For a component with averaged sets S (numerator) and
# S' = S + {x} (denominator), the partial with respect to p_k(a) is the
# "outer" sum below plus a constant in a; constants cancel in the reduced
# form partial(a) - partial(n_k - 1), so only the outer sums are needed.
# ---------------------------------------------------------------------------


def _component_log_tensor(
    P: ChannelMatrix, p: IpdProduct, num_avg: set[int], den_avg: set[int]
) -> np.ndarray:
    B1 = _averaged_tensor(P, p, num_avg)
    B2 = _averaged_tensor(P, p, den_avg)
    Pt = P.tensor
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(B1) - np.log(B2)
        G = np.where(Pt > 0.0, Pt * L, 0.0)
    # 0/0 inside an averaged pair: both averages vanish together on any
    # supported outer weight; skip those terms (continuous-extension choice).
    both_zero = np.broadcast_to((B1 == 0.0) & (B2 == 0.0), G.shape)
    return np.where(both_zero, 0.0, G)


def _outer_scores(G: np.ndarray, p: IpdProduct, k: int) -> np.ndarray:
    """sum_{j, tuples with user k pinned} (prod_{l != k} p_l) G  as a vector
    over user k's symbols."""
    wex = _weight_tensor(p, skip=k)[None]
    masked = np.where(wex > 0.0, G, 0.0)
    axes = tuple(ax for ax in range(G.ndim) if ax != 1 + k)
    return np.sum(masked * wex, axis=axes)


def component_partial_table(
    P: ChannelMatrix, p: IpdProduct, order: Sequence[int]
) -> list[list[np.ndarray]]:
    """Outer-sum tables for [first component, full I, remaining components].

    Entry ``[col][k]`` is the vector over user k's symbols whose reduced
    differences give the reduced partials of that column's functional.
    """
    p.require_type(P.mac_type)
    order = tuple(int(u) for u in order)
    N = P.mac_type.num_users
    if sorted(order) != list(range(N)):
        raise ValueError(f"order {order} is not a permutation of the users")

    def tables_for(num_avg, den_avg):
        G = _component_log_tensor(P, p, num_avg, den_avg)
        return [_outer_scores(G, p, k) for k in range(N)]

    columns = []
    # component 1 of the order
    columns.append(tables_for(set(), {order[0]}))
    # the full mutual information
    columns.append(tables_for(set(), set(range(N))))
    # components 2 .. N-1 of the order
    for t in range(1, N - 1):
        columns.append(tables_for(set(order[:t]), set(order[: t + 1])))
    return columns

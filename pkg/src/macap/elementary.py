"""Face combinatorics: the elementary test, enumeration of the master face
set, and degenerate-direction witnesses for oversized input alphabets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import info
from .model import ChannelMatrix, FaceProduct, IpdProduct, MacType

DEFAULT_FACE_CAP = 10**6


@dataclass(frozen=True)
class ElementarySet:
    """All maximal elementary faces of a channel domain.

    When the channel is itself elementary this is exactly the full domain.
    ``truncated`` is set when enumeration stopped at the cap; downstream
    capacity results are then lower bounds.
    """

    faces: tuple[FaceProduct, ...]
    mac_type: MacType
    truncated: bool


@dataclass(frozen=True)
class DegenerateWitness:
    """A support-shrinking replacement for one user's vector that leaves the
    output distribution unchanged.

    ``mi_gap`` records |I(original) - I(replaced)|; it is at noise level
    whenever the kernel of the effective matrix admits a direction orthogonal
    to the score vector (always the case for the stationary points the
    theory uses, and generically whenever the kernel has dimension >= 2).
    """

    user: int
    original: np.ndarray
    replacement: np.ndarray
    output_gap: float
    mi_gap: float
    kernel_dim: int

    def __post_init__(self):
        for name in ("original", "replacement"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def is_elementary(mac_type: MacType) -> bool:
    """True iff no input alphabet is larger than the output alphabet."""
    return all(n <= mac_type.m for n in mac_type.n)


def master_face_count(mac_type: MacType) -> int:
    return math.prod(
        math.comb(n, min(n, mac_type.m)) for n in mac_type.n
    )


def enumerate_master_faces(
    mac_type: MacType, cap: int = DEFAULT_FACE_CAP
) -> ElementarySet:
    """All faces with per-user support size min(n_k, m), in lexicographic
    order of the support subsets (user 1 slowest)."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    per_user = [
        itertools.combinations(range(n), min(n, mac_type.m)) for n in mac_type.n
    ]
    faces = []
    truncated = False
    for combo in itertools.product(*per_user):
        if len(faces) >= cap:
            truncated = True
            break
        faces.append(FaceProduct(tuple(combo)))
    return ElementarySet(tuple(faces), mac_type, truncated)


def _effective_matrix(P: ChannelMatrix, p: IpdProduct, k: int) -> np.ndarray:
    """m x n_k matrix whose column i is the output distribution when user k
    sends i and the other users mix according to p."""
    others = set(range(P.mac_type.num_users)) - {k}
    A = info._averaged_tensor(P, p, others)
    return A.reshape(P.mac_type.m, P.mac_type.n[k])


def degenerate_witness(
    P: ChannelMatrix,
    p: IpdProduct,
    k: int,
    zero_tol: float = 1e-12,
    rank_tol: float = 1e-10,
) -> DegenerateWitness | None:
    """Shrink user k's support without moving the output distribution.

    Returns None when user k's support is not larger than the output
    alphabet (the elementary situation) or, defensively, when no usable
    kernel direction is found.  The effective matrix has columns summing to
    one, so every kernel vector automatically sums to zero and a move along
    it keeps both the simplex constraint and the output law.
    """
    p.require_type(P.mac_type)
    if not 0 <= k < P.mac_type.num_users:
        raise ValueError(f"user index {k} out of range")
    pk = p.parts[k]
    support = np.flatnonzero(pk > zero_tol)
    f = support.size
    if f <= P.mac_type.m:
        return None

    A = _effective_matrix(P, p, k)
    A_s = A[:, support]
    # rank-revealing null space of the restricted effective matrix
    _, sv, vt = np.linalg.svd(A_s)
    cut = rank_tol * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > cut))
    kernel = vt[rank:].T  # f x d, orthonormal columns
    d = kernel.shape[1]
    if d == 0:
        return None
    if float(np.abs(kernel.sum(axis=0)).max()) > 1e-6:
        # column sums of A are 1, so a true kernel vector sums to zero
        return None

    j_scores = info.scores(P, p)[k][support]
    coeff = kernel.T @ j_scores  # projection of the score vector onto the kernel
    if d >= 2 and np.linalg.norm(coeff) > 1e-14 * max(1.0, float(np.abs(j_scores).max())):
        # pick the kernel direction orthogonal to the scores: the move then
        # leaves the mutual information unchanged, not just the output law
        _, _, wt = np.linalg.svd(coeff[None, :])
        v = kernel @ wt[1:].T[:, 0]
    else:
        v = kernel[:, 0]

    # deterministic sign, then walk to the first coordinate crossing
    lead = int(np.argmax(np.abs(v)))
    if v[lead] < 0.0:
        v = -v
    neg = v < 0.0
    if not neg.any():
        return None
    steps = pk[support[neg]] / -v[neg]
    t = float(steps.min())

    new_pk = np.array(pk)
    new_pk[support] = pk[support] + t * v
    new_pk[new_pk < 1e-15] = 0.0
    new_pk /= new_pk.sum()

    new_support = np.flatnonzero(new_pk > zero_tol)
    if new_support.size >= f:
        return None

    parts = list(p.parts)
    parts[k] = new_pk
    p_new = IpdProduct(tuple(parts))
    q_old = info.output_distribution(P, p).q
    q_new = info.output_distribution(P, p_new).q
    mi_gap = abs(info.mutual_information(P, p) - info.mutual_information(P, p_new))
    return DegenerateWitness(
        user=k,
        original=pk,
        replacement=new_pk,
        output_gap=float(np.max(np.abs(q_old - q_new))),
        mi_gap=float(mi_gap),
        kernel_dim=d,
    )

"""Mutual-information maximization on faces, capacity over the master face
set, Kuhn-Tucker reports, and line-restricted (binary sub-channel)
optimization.

The default inner solver is a per-user multiplicative fixed point: with the
other users frozen, user k's subproblem is a single-user channel with an
additive linear reward, and the classical capacity iteration
``p(i) <- p(i) exp(J(p; i)) / Z`` applies on the face support.  Projected
gradient is available as a fallback for faces where the fixed point stalls.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import backend, info
from .elementary import DEFAULT_FACE_CAP, enumerate_master_faces
from .model import ChannelMatrix, FaceProduct, IpdProduct

#: symbols with mass above this are held to the KT equality branch
MASS_TOL = 1e-9
#: extra stop requirement: largest single-entry move in the last sweep
MOVE_TOL = 1e-11
#: consecutive no-improvement sweeps tolerated before flagging a stall
STALL_LIMIT = 50
#: support polish: coordinates below this mass with scores clearly under C
#: are zeroed and the fixed point re-run on the smaller support
_TRUNC_MASS = 1e-4
_POLISH_ROUNDS = 4


@dataclass(frozen=True)
class OptimizeOptions:
    max_sweeps: int = 10_000
    rel_tol: float = 1e-12
    kt_tol: float = 1e-6
    starts: int = 8
    seed: int = 0
    inner: str = "fixed-point"

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.rel_tol <= 0 or self.kt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.inner not in ("fixed-point", "pg", "projected-gradient"):
            raise ValueError(f"unknown inner solver {self.inner!r}")


@dataclass(frozen=True)
class KtReport:
    """Kuhn-Tucker evaluation of one input distribution on the full domain."""

    scores: tuple[np.ndarray, ...]
    capacity_estimate: float
    max_equality_residual: float
    max_inequality_violation: float
    satisfied: bool
    diagnostics: dict = field(default_factory=dict, compare=False)


class FaceResult(NamedTuple):
    face: FaceProduct
    value: float
    kt_report: KtReport


class StartResult(NamedTuple):
    ipd: IpdProduct
    value: float
    converged: bool
    stalled: bool
    sweeps: int
    history: tuple[float, ...]


@dataclass(frozen=True)
class CapacityResult:
    capacity_nats: float
    optimal_ipd: IpdProduct
    achieving_face: FaceProduct
    per_face: tuple[FaceResult, ...]
    co_achievers: tuple[FaceProduct, ...]
    truncated: bool

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)


def kt_check(
    P: ChannelMatrix,
    p: IpdProduct,
    kt_tol: float = 1e-6,
    mass_tol: float = MASS_TOL,
    diagnostics: dict | None = None,
) -> KtReport:
    """Evaluate the stationarity system: J = I on carried symbols, J <= I off
    them, both within ``kt_tol``."""
    p.require_type(P.mac_type)
    scores = info.scores(P, p)
    cval = info.mutual_information(P, p)
    eq = 0.0
    viol = 0.0
    for part, J in zip(p.parts, scores):
        carried = part > mass_tol
        if carried.any():
            eq = max(eq, float(np.max(np.abs(J[carried] - cval))))
        if (~carried).any():
            viol = max(viol, float(np.max(J[~carried] - cval)), 0.0)
    satisfied = bool(eq <= kt_tol and viol <= kt_tol)
    return KtReport(
        scores=scores,
        capacity_estimate=cval,
        max_equality_residual=eq,
        max_inequality_violation=viol,
        satisfied=satisfied,
        diagnostics=dict(diagnostics or {}),
    )


# ---------------------------------------------------------------------------
# Inner solvers
# ---------------------------------------------------------------------------


def _face_starts(
    P: ChannelMatrix, face: FaceProduct, opts: OptimizeOptions
) -> list[IpdProduct]:
    rng = np.random.default_rng(opts.seed)
    starts = [face.barycenter(P.mac_type)]
    for _ in range(opts.starts - 1):
        parts = []
        for support, n in zip(face.supports, P.mac_type.n):
            v = np.zeros(n)
            v[list(support)] = rng.dirichlet(np.ones(len(support)))
            parts.append(v)
        starts.append(IpdProduct(tuple(parts)))
    return starts


def _run_fixed_point(
    P: ChannelMatrix, face: FaceProduct, p0: IpdProduct, opts: OptimizeOptions
) -> StartResult:
    sizes = np.asarray(P.mac_type.n, dtype=np.int64)
    mask = np.concatenate(face.masks(P.mac_type)).astype(np.uint8)
    p, value, sweeps, converged, stalled, history = backend.fixed_point(
        P.probs,
        P.log_probs,
        sizes,
        mask,
        p0.concat(),
        opts.rel_tol,
        MOVE_TOL,
        opts.max_sweeps,
        STALL_LIMIT,
    )
    ipd = IpdProduct.from_concat(p, P.mac_type.n)
    return StartResult(ipd, float(value), bool(converged), bool(stalled), int(sweeps), tuple(history))


def _project_simplex(c: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort algorithm)."""
    a = -np.sort(-c)
    cumsum = (np.cumsum(a) - 1.0) / np.arange(1, c.size + 1)
    k = np.flatnonzero(a > cumsum)[-1]
    return np.maximum(c - cumsum[k], 0.0)


def _run_projected_gradient(
    P: ChannelMatrix, face: FaceProduct, p0: IpdProduct, opts: OptimizeOptions
) -> StartResult:
    masks = face.masks(P.mac_type)
    parts = [np.array(v) for v in p0.parts]
    current = info.mutual_information(P, IpdProduct(tuple(parts)))
    history = [current]
    converged = stalled = False
    stall = 0
    sweeps = 0
    for sweeps in range(1, opts.max_sweeps + 1):
        move = 0.0
        for k, mask in enumerate(masks):
            J = info.scores(P, IpdProduct(tuple(parts)))[k]
            sub = parts[k][mask]
            grad = J[mask]
            eta = 1.0
            for _ in range(40):
                cand = _project_simplex(sub + eta * grad)
                trial = [np.array(v) for v in parts]
                trial[k][mask] = cand
                val = info.mutual_information(P, IpdProduct(tuple(trial)))
                if val >= current - 1e-15:
                    move = max(move, float(np.max(np.abs(cand - sub))))
                    parts[k][mask] = cand
                    current = max(val, current)
                    break
                eta *= 0.5
        history.append(current)
        delta = history[-1] - history[-2]
        if delta <= opts.rel_tol * max(1.0, abs(current)) and move <= MOVE_TOL:
            converged = True
            break
        if delta <= 0.0:
            stall += 1
            if stall >= STALL_LIMIT:
                stalled = True
                break
        else:
            stall = 0
    ipd = IpdProduct(tuple(parts))
    return StartResult(ipd, float(current), converged, stalled, sweeps, tuple(history))


def _polish_support(
    P: ChannelMatrix, face: FaceProduct, opts: OptimizeOptions, result: StartResult
) -> StartResult:
    """Zero out clearly-vanishing coordinates and re-run.

    A coordinate heading for zero decays geometrically, so its per-sweep
    movement can drop under the stopping tolerance while its mass still sits
    above the KT classification threshold.  Zeroing it (first-order increase
    of I, since its score is below C) and re-converging resolves the split.
    """
    runner = (
        _run_fixed_point if opts.inner == "fixed-point" else _run_projected_gradient
    )
    for _ in range(_POLISH_ROUNDS):
        kt = kt_check(P, result.ipd, kt_tol=opts.kt_tol)
        if kt.satisfied:
            return result
        cval = kt.capacity_estimate
        parts = []
        changed = False
        for part, J in zip(result.ipd.parts, kt.scores):
            drop = (part > 0.0) & (part < _TRUNC_MASS) & (J < cval - opts.kt_tol)
            if drop.any() and ((part > 0.0) & ~drop).any():
                v = np.where(drop, 0.0, part)
                parts.append(v / v.sum())
                changed = True
            else:
                parts.append(np.asarray(part))
        if not changed:
            return result
        rerun = runner(P, face, IpdProduct(tuple(parts)), opts)
        if rerun.value < result.value - 1e-12:
            return result
        result = StartResult(
            rerun.ipd,
            rerun.value,
            rerun.converged,
            rerun.stalled,
            result.sweeps + rerun.sweeps,
            rerun.history,
        )
    return result


def start_results(
    P: ChannelMatrix, face: FaceProduct, opts: OptimizeOptions
) -> list[StartResult]:
    """Run every start (barycenter first, then seeded random) on the face."""
    face.validate_for(P.mac_type)
    runner = (
        _run_fixed_point if opts.inner == "fixed-point" else _run_projected_gradient
    )
    return [
        _polish_support(P, face, opts, runner(P, face, p0, opts))
        for p0 in _face_starts(P, face, opts)
    ]


def maximize_on_face(
    P: ChannelMatrix, face: FaceProduct, opts: OptimizeOptions | None = None
) -> tuple[IpdProduct, float, KtReport]:
    """Best start's distribution, its value, and the full-domain KT report.

    The report's diagnostics carry the convergence flags; a non-converged
    best start is returned as-is with ``converged: False``.
    """
    opts = opts or OptimizeOptions()
    results = start_results(P, face, opts)
    best_idx = max(range(len(results)), key=lambda i: results[i].value)
    best = results[best_idx]
    report = kt_check(
        P,
        best.ipd,
        kt_tol=opts.kt_tol,
        diagnostics={
            "converged": best.converged,
            "stalled": best.stalled,
            "sweeps": best.sweeps,
            "start_index": best_idx,
            "inner": opts.inner,
        },
    )
    return best.ipd, best.value, report


def capacity(
    P: ChannelMatrix,
    opts: OptimizeOptions | None = None,
    cap: int = DEFAULT_FACE_CAP,
    threads: int | None = None,
) -> CapacityResult:
    """Capacity as the maximum of the per-face optima over the master face
    set; single face (the whole domain) when the channel is elementary.

    Per-face optimizations are independent; with ``threads`` > 1 they run on
    a worker pool and are reduced in face order, so parallel and serial runs
    give identical results.
    """
    opts = opts or OptimizeOptions()
    es = enumerate_master_faces(P.mac_type, cap)

    def work(face: FaceProduct) -> tuple[IpdProduct, float, KtReport]:
        return maximize_on_face(P, face, opts)

    if threads and threads > 1 and len(es.faces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, es.faces))
    else:
        outcomes = [work(face) for face in es.faces]

    per_face = tuple(
        FaceResult(face, value, report)
        for face, (_, value, report) in zip(es.faces, outcomes)
    )
    best_idx = max(range(len(per_face)), key=lambda i: per_face[i].value)
    best_ipd = outcomes[best_idx][0]
    best_value = per_face[best_idx].value
    co = tuple(
        fr.face for fr in per_face if fr.value >= best_value - opts.kt_tol
    )
    return CapacityResult(
        capacity_nats=best_value,
        optimal_ipd=best_ipd,
        achieving_face=per_face[best_idx].face,
        per_face=per_face,
        co_achievers=co,
        truncated=es.truncated,
    )


# ---------------------------------------------------------------------------
# Line-restricted optimization (induced binary-input sub-channel)
# ---------------------------------------------------------------------------


def _blend(rho1: IpdProduct, rho2: IpdProduct, theta: np.ndarray) -> IpdProduct:
    parts = tuple(
        t * a + (1.0 - t) * b for t, a, b in zip(theta, rho1.parts, rho2.parts)
    )
    return IpdProduct(parts)


def line_restricted_optimize(
    P: ChannelMatrix,
    rho1: IpdProduct,
    rho2: IpdProduct,
    opts: OptimizeOptions | None = None,
) -> tuple[np.ndarray, float]:
    """Maximize I over the cube of per-user blends between rho1 and rho2.

    Each coordinate subproblem is scalar concave, solved by bisection on its
    derivative.  The induced binary-input channel is elementary, so every
    stationary point is optimal and all starts agree in value.
    """
    opts = opts or OptimizeOptions()
    rho1.require_type(P.mac_type)
    rho2.require_type(P.mac_type)
    N = P.mac_type.num_users
    directions = [a - b for a, b in zip(rho1.parts, rho2.parts)]

    def deriv(theta: np.ndarray, k: int) -> float:
        J = info.scores(P, _blend(rho1, rho2, theta))[k]
        coef = directions[k]
        with np.errstate(invalid="ignore"):
            val = float(np.sum(np.where(coef != 0.0, coef * J, 0.0)))
        return 0.0 if math.isnan(val) else val

    def solve_from(theta0: np.ndarray) -> tuple[np.ndarray, float]:
        theta = np.array(theta0, dtype=np.float64)
        value = info.mutual_information(P, _blend(rho1, rho2, theta))
        for _ in range(opts.max_sweeps):
            for k in range(N):
                theta[k] = 0.0
                if deriv(theta, k) <= 0.0:
                    continue
                theta[k] = 1.0
                if deriv(theta, k) >= 0.0:
                    continue
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    theta[k] = mid
                    d = deriv(theta, k)
                    if abs(d) < 1e-13:
                        break
                    if d > 0.0:
                        lo = mid
                    else:
                        hi = mid
                    if hi - lo < 1e-13:
                        break
                theta[k] = 0.5 * (lo + hi)
            new_value = info.mutual_information(P, _blend(rho1, rho2, theta))
            delta = new_value - value
            value = new_value
            if abs(delta) <= opts.rel_tol * max(1.0, abs(value)):
                break
        return theta, value

    rng = np.random.default_rng(opts.seed)
    start_points = [np.full(N, 0.5)]
    for _ in range(opts.starts - 1):
        start_points.append(rng.uniform(0.0, 1.0, size=N))

    best_theta, best_value = None, -np.inf
    for t0 in start_points:
        theta, value = solve_from(t0)
        if value > best_value:
            best_theta, best_value = theta, value
    return best_theta, float(best_value)

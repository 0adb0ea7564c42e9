"""Pure-numpy kernels: the fallback twin of the compiled module ``_core``.

Both backends expose the same three entry points operating on raw arrays:

``point_eval``   output distribution, mutual information and all marginal
                 scores at one input-distribution product.
``mi_block``     mutual information for a block of joint-weight rows.
``fixed_point``  alternating per-user multiplicative fixed-point ascent on
                 a face.

Scores use natural logarithms; a score is ``+inf`` when the corresponding
symbol would reveal an output that has probability zero under the current
input (the true divergence of the continuous extension).
"""

from __future__ import annotations

import numpy as np


def _split(flat, sizes):
    out, off = [], 0
    for n in sizes:
        out.append(flat[off : off + n])
        off += n
    return out


def _kron_all(parts):
    w = parts[0]
    for v in parts[1:]:
        w = np.kron(w, v)
    return w


def _outer_except(parts, k):
    """Tensor of shape ``sizes`` holding prod_{l != k} p_l, constant along axis k."""
    vecs = [np.ones(p.size) if l == k else p for l, p in enumerate(parts)]
    t = vecs[0]
    for v in vecs[1:]:
        t = np.multiply.outer(t, v)
    return t


def point_eval(P, logP, sizes, p):
    """Return ``(q, I, J)`` with J the concatenated per-user score vectors."""
    m = P.shape[0]
    sizes = tuple(int(n) for n in sizes)
    N = len(sizes)
    parts = _split(np.asarray(p, dtype=np.float64), sizes)
    w = _kron_all(parts)
    q = P @ w
    with np.errstate(divide="ignore"):
        logq = np.where(q > 0.0, np.log(q), 0.0)
    pos = P > 0.0
    colkl = np.einsum("jc,jc->c", P, np.where(pos, logP - logq[:, None], 0.0))
    bad = (pos & (q[:, None] == 0.0)).any(axis=0)
    mi = float(np.dot(np.where(w > 0.0, colkl, 0.0), w))

    T = colkl.reshape(sizes)
    badT = bad.reshape(sizes)
    Tfin = np.where(badT, 0.0, T)
    scores = []
    for k in range(N):
        wex = _outer_except(parts, k)
        axes = tuple(ax for ax in range(N) if ax != k)
        Jk = np.sum(wex * Tfin, axis=axes) if axes else wex * Tfin
        hit = np.sum(np.where(badT, wex, 0.0), axis=axes) if axes else np.where(badT, wex, 0.0)
        scores.append(np.where(hit > 0.0, np.inf, Jk))
    return q, mi, np.concatenate(scores)


def mi_block(P, colent, W):
    """Mutual information for each row of joint weights ``W`` (rows sum to 1)."""
    Q = W @ P.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(Q > 0.0, Q * np.log(Q), 0.0).sum(axis=1)
    return W @ colent - ent


def _mi_single(P, colent, parts):
    w = _kron_all(parts)
    q = P @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(q > 0.0, q * np.log(q), 0.0).sum()
    return float(w @ colent - ent)


def fixed_point(P, logP, sizes, support_mask, p0, rel_tol, move_tol, max_sweeps, stall_limit):
    """Alternating multiplicative ascent; one fixed-point step per user per sweep.

    Returns ``(p, I, sweeps, converged, stalled, history)`` where history is
    the list of sweep-end mutual informations (starting value included).
    """
    m = P.shape[0]
    sizes = tuple(int(n) for n in sizes)
    N = len(sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    p = np.array(p0, dtype=np.float64)
    parts = [p[offs[k] : offs[k + 1]] for k in range(N)]
    masks = [np.asarray(support_mask[offs[k] : offs[k + 1]], dtype=bool) for k in range(N)]
    colent = np.sum(P * logP, axis=0)
    Pt = P.reshape((m, *sizes))
    logPt = logP.reshape((m, *sizes))
    pos = Pt > 0.0

    mi_prev = _mi_single(P, colent, parts)
    history = [mi_prev]
    converged = stalled = False
    stall = 0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        move = 0.0
        for k in range(N):
            w = _kron_all(parts)
            q = P @ w
            with np.errstate(divide="ignore"):
                logq = np.where(q > 0.0, np.log(q), 0.0)
            G = np.where(pos, Pt * (logPt - logq.reshape((m,) + (1,) * N)), 0.0)
            wex = _outer_except(parts, k)
            axes = (0,) + tuple(1 + ax for ax in range(N) if ax != k)
            Jk = np.sum(G * wex[None], axis=axes)
            active = masks[k] & (parts[k] > 0.0)
            jmax = Jk[active].max()
            u = np.zeros(sizes[k])
            u[active] = parts[k][active] * np.exp(Jk[active] - jmax)
            u /= u.sum()
            move = max(move, float(np.max(np.abs(u - parts[k]))))
            parts[k][:] = u
        mi_new = _mi_single(P, colent, parts)
        history.append(mi_new)
        delta = mi_new - mi_prev
        mi_prev = mi_new
        if delta <= rel_tol * max(1.0, abs(mi_new)) and move <= move_tol:
            converged = True
            break
        # a cycle makes no value progress at all; slow channels still gain
        if delta <= 0.0:
            stall += 1
            if stall >= stall_limit:
                stalled = True
                break
        else:
            stall = 0
    return p, mi_prev, sweeps, converged, stalled, history

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see _pycore for the reference semantics."""

from libc.math cimport log, exp, fabs, INFINITY

import numpy as np


cdef inline Py_ssize_t _sym(Py_ssize_t c, Py_ssize_t stride, Py_ssize_t n) nogil:
    return (c // stride) % n


def mi_block(const double[:, ::1] P, const double[::1] colent, const double[:, ::1] W):
    cdef Py_ssize_t rows = W.shape[0]
    cdef Py_ssize_t cols = W.shape[1]
    cdef Py_ssize_t m = P.shape[0]
    out_arr = np.empty(rows)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, c, j
    cdef double acc, q, ent
    with nogil:
        for r in range(rows):
            acc = 0.0
            for c in range(cols):
                acc += W[r, c] * colent[c]
            ent = 0.0
            for j in range(m):
                q = 0.0
                for c in range(cols):
                    q += P[j, c] * W[r, c]
                if q > 0.0:
                    ent += q * log(q)
            out[r] = acc - ent
    return out_arr


def point_eval(const double[:, ::1] P, const double[:, ::1] logP, const long[::1] sizes, const double[::1] p):
    cdef Py_ssize_t m = P.shape[0]
    cdef Py_ssize_t cols = P.shape[1]
    cdef Py_ssize_t N = sizes.shape[0]
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t k, l, c, j, ik
    for k in range(N):
        total += sizes[k]

    offs_arr = np.zeros(N + 1, dtype=np.int64)
    strides_arr = np.ones(N, dtype=np.int64)
    cdef long[::1] offs = offs_arr
    cdef long[::1] strides = strides_arr
    for k in range(N):
        offs[k + 1] = offs[k] + sizes[k]
    for k in range(N - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]

    q_arr = np.zeros(m)
    J_arr = np.zeros(total)
    logq_arr = np.zeros(m)
    cdef double[::1] q = q_arr
    cdef double[::1] J = J_arr
    cdef double[::1] logq = logq_arr
    cdef double w, wex, acc, Pj, mi
    cdef bint bad
    mi = 0.0
    with nogil:
        for c in range(cols):
            w = 1.0
            for l in range(N):
                w *= p[offs[l] + _sym(c, strides[l], sizes[l])]
            if w == 0.0:
                continue
            for j in range(m):
                q[j] += w * P[j, c]
        for j in range(m):
            logq[j] = log(q[j]) if q[j] > 0.0 else 0.0
        for c in range(cols):
            acc = 0.0
            bad = 0
            for j in range(m):
                Pj = P[j, c]
                if Pj > 0.0:
                    if q[j] > 0.0:
                        acc += Pj * (logP[j, c] - logq[j])
                    else:
                        bad = 1
            w = 1.0
            for l in range(N):
                w *= p[offs[l] + _sym(c, strides[l], sizes[l])]
            if w > 0.0:
                mi += w * acc
            for k in range(N):
                wex = 1.0
                for l in range(N):
                    if l != k:
                        wex *= p[offs[l] + _sym(c, strides[l], sizes[l])]
                if wex == 0.0:
                    continue
                ik = offs[k] + _sym(c, strides[k], sizes[k])
                if bad:
                    J[ik] = INFINITY
                else:
                    J[ik] = J[ik] + wex * acc
    return q_arr, mi, J_arr


def fixed_point(const double[:, ::1] P, const double[:, ::1] logP, const long[::1] sizes,
                const unsigned char[::1] support_mask, const double[::1] p0,
                double rel_tol, double move_tol, long max_sweeps, long stall_limit):
    cdef Py_ssize_t m = P.shape[0]
    cdef Py_ssize_t cols = P.shape[1]
    cdef Py_ssize_t N = sizes.shape[0]
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t k, l, c, j, i, ik, nk, off
    for k in range(N):
        total += sizes[k]

    offs_arr = np.zeros(N + 1, dtype=np.int64)
    strides_arr = np.ones(N, dtype=np.int64)
    cdef long[::1] offs = offs_arr
    cdef long[::1] strides = strides_arr
    for k in range(N):
        offs[k + 1] = offs[k] + sizes[k]
    for k in range(N - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]

    p_arr = np.array(p0, dtype=np.float64)
    colent_arr = np.einsum("jc,jc->c", np.asarray(P), np.asarray(logP))
    q_arr = np.zeros(m)
    logq_arr = np.zeros(m)
    Jk_arr = np.zeros(total)
    u_arr = np.zeros(total)
    cdef double[::1] p = p_arr
    cdef double[::1] colent = colent_arr
    cdef double[::1] q = q_arr
    cdef double[::1] logq = logq_arr
    cdef double[::1] Jk = Jk_arr
    cdef double[::1] u = u_arr

    cdef double w, wex, acc, Pj, jmax, z, move, mi_prev, mi_new, delta
    cdef bint converged = 0, stalled = 0
    cdef long stall = 0, sweeps = 0, sweep

    mi_prev = _mi_here(P, colent, sizes, offs, strides, p, q)
    history = [mi_prev]

    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        move = 0.0
        with nogil:
            for k in range(N):
                nk = sizes[k]
                off = offs[k]
                for j in range(m):
                    q[j] = 0.0
                for c in range(cols):
                    w = 1.0
                    for l in range(N):
                        w *= p[offs[l] + _sym(c, strides[l], sizes[l])]
                    if w == 0.0:
                        continue
                    for j in range(m):
                        q[j] += w * P[j, c]
                for j in range(m):
                    logq[j] = log(q[j]) if q[j] > 0.0 else 0.0
                for i in range(nk):
                    Jk[off + i] = 0.0
                for c in range(cols):
                    ik = _sym(c, strides[k], sizes[k])
                    if not support_mask[off + ik]:
                        continue
                    wex = 1.0
                    for l in range(N):
                        if l != k:
                            wex *= p[offs[l] + _sym(c, strides[l], sizes[l])]
                    if wex == 0.0:
                        continue
                    acc = 0.0
                    for j in range(m):
                        Pj = P[j, c]
                        if Pj > 0.0 and q[j] > 0.0:
                            acc += Pj * (logP[j, c] - logq[j])
                    Jk[off + ik] += wex * acc
                jmax = -INFINITY
                for i in range(nk):
                    if support_mask[off + i] and p[off + i] > 0.0 and Jk[off + i] > jmax:
                        jmax = Jk[off + i]
                z = 0.0
                for i in range(nk):
                    if support_mask[off + i] and p[off + i] > 0.0:
                        u[off + i] = p[off + i] * exp(Jk[off + i] - jmax)
                    else:
                        u[off + i] = 0.0
                    z += u[off + i]
                for i in range(nk):
                    u[off + i] /= z
                    if fabs(u[off + i] - p[off + i]) > move:
                        move = fabs(u[off + i] - p[off + i])
                    p[off + i] = u[off + i]
        mi_new = _mi_here(P, colent, sizes, offs, strides, p, q)
        history.append(mi_new)
        delta = mi_new - mi_prev
        mi_prev = mi_new
        if delta <= rel_tol * max(1.0, fabs(mi_new)) and move <= move_tol:
            converged = 1
            break
        # a cycle makes no value progress at all; slow channels still gain
        if delta <= 0.0:
            stall += 1
            if stall >= stall_limit:
                stalled = 1
                break
        else:
            stall = 0
    return p_arr, mi_prev, sweeps, bool(converged), bool(stalled), history


cdef double _mi_here(const double[:, ::1] P, const double[::1] colent, const long[::1] sizes,
                     const long[::1] offs, const long[::1] strides, const double[::1] p,
                     double[::1] qbuf):
    cdef Py_ssize_t m = P.shape[0]
    cdef Py_ssize_t cols = P.shape[1]
    cdef Py_ssize_t N = sizes.shape[0]
    cdef Py_ssize_t c, l, j
    cdef double w, acc = 0.0, ent = 0.0
    with nogil:
        for j in range(m):
            qbuf[j] = 0.0
        for c in range(cols):
            w = 1.0
            for l in range(N):
                w *= p[offs[l] + _sym(c, strides[l], sizes[l])]
            if w == 0.0:
                continue
            acc += w * colent[c]
            for j in range(m):
                qbuf[j] += w * P[j, c]
        for j in range(m):
            if qbuf[j] > 0.0:
                ent += qbuf[j] * log(qbuf[j])
    return acc - ent

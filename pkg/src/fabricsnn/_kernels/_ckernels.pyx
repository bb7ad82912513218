# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels; interface mirrors pykernels (see _kernels/__init__)."""

from libc.math cimport fabs, NAN
from libc.stdint cimport int64_t, uint8_t

import numpy as np


cdef int _lu_solve(double[:, ::1] A, double[:, ::1] B) nogil:
    """In-place LU with partial pivoting; B becomes the solution. 0 on success."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t i, j, k, piv
    cdef double vmax, val, f, s
    for k in range(n):
        piv = k
        vmax = fabs(A[k, k])
        for i in range(k + 1, n):
            val = fabs(A[i, k])
            if val > vmax:
                vmax = val
                piv = i
        if vmax == 0.0:
            return -1
        if piv != k:
            for j in range(n):
                val = A[k, j]
                A[k, j] = A[piv, j]
                A[piv, j] = val
            for j in range(m):
                val = B[k, j]
                B[k, j] = B[piv, j]
                B[piv, j] = val
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            if f != 0.0:
                A[i, k] = f
                for j in range(k + 1, n):
                    A[i, j] -= f * A[k, j]
                for j in range(m):
                    B[i, j] -= f * B[k, j]
            else:
                A[i, k] = 0.0
    for k in range(n - 1, -1, -1):
        for j in range(m):
            s = B[k, j]
            for i in range(k + 1, n):
                s -= A[k, i] * B[i, j]
            B[k, j] = s / A[k, k]
    return 0


def solve_multi(G, B):
    """Solve G @ V = B for a single (n, n) system with (n, m) right sides."""
    cdef double[:, ::1] a = np.array(G, dtype=np.float64, order="C", copy=True)
    out = np.array(B, dtype=np.float64, order="C", copy=True)
    if out.ndim == 1:
        out = out.reshape(-1, 1)
    cdef double[:, ::1] b = out
    if _lu_solve(a, b) != 0:
        raise ArithmeticError("singular conductance system")
    return out


def solve_batch(Gs, Bs):
    """Solve a stack of systems; returns (V, ok) with NaN rows where singular."""
    cdef double[:, :, ::1] gs = np.array(Gs, dtype=np.float64, order="C", copy=True)
    out = np.array(Bs, dtype=np.float64, order="C", copy=True)
    cdef double[:, :, ::1] bs = out
    cdef Py_ssize_t n_sys = gs.shape[0]
    ok = np.ones(n_sys, dtype=bool)
    cdef uint8_t[:] okv = ok.view(np.uint8)
    cdef Py_ssize_t s
    with nogil:
        for s in range(n_sys):
            if _lu_solve(gs[s], bs[s]) != 0:
                okv[s] = 0
    for s in range(n_sys):
        if not ok[s]:
            out[s, :, :] = np.nan
    return out, ok


def swap_volts(G0, B0, src_is_term, src_idx, dst_idx, connected,
               opt_g, opt_ptr, selected, term_v, out_idx):
    """Output voltages for every single-edge option swap (see pykernels)."""
    cdef double[:, ::1] g0 = np.ascontiguousarray(G0, dtype=np.float64)
    cdef double[:, ::1] b0 = np.ascontiguousarray(B0, dtype=np.float64)
    cdef uint8_t[:] is_term = np.ascontiguousarray(src_is_term, dtype=np.uint8)
    cdef int64_t[:] src = np.ascontiguousarray(src_idx, dtype=np.int64)
    cdef int64_t[:] dst = np.ascontiguousarray(dst_idx, dtype=np.int64)
    cdef uint8_t[:] conn = np.ascontiguousarray(connected, dtype=np.uint8)
    cdef double[:] og = np.ascontiguousarray(opt_g, dtype=np.float64)
    cdef int64_t[:] optr = np.ascontiguousarray(opt_ptr, dtype=np.int64)
    cdef int64_t[:] sel = np.ascontiguousarray(selected, dtype=np.int64)
    cdef double[:, ::1] tv = np.ascontiguousarray(term_v, dtype=np.float64)
    cdef int64_t[:] oidx = np.ascontiguousarray(out_idx, dtype=np.int64)

    cdef Py_ssize_t n = g0.shape[0]
    cdef Py_ssize_t n_pat = b0.shape[1]
    cdef Py_ssize_t n_edges = dst.shape[0]
    cdef Py_ssize_t n_out = oidx.shape[0]
    cdef Py_ssize_t max_opts = 0
    cdef Py_ssize_t e, k, i, j, p, u, d
    for e in range(n_edges):
        if optr[e + 1] - optr[e] > max_opts:
            max_opts = optr[e + 1] - optr[e]

    res = np.full((n_edges, max_opts, n_pat, n_out), np.nan, dtype=np.float64)
    cdef double[:, :, :, ::1] out = res
    work_g = np.empty((n, n), dtype=np.float64)
    work_b = np.empty((n, n_pat), dtype=np.float64)
    cdef double[:, ::1] wg = work_g
    cdef double[:, ::1] wb = work_b
    cdef double g_cur, g_new, dg
    cdef int status

    with nogil:
        for e in range(n_edges):
            if conn[e]:
                g_cur = og[optr[e] + sel[e]]
            else:
                g_cur = 0.0
            d = dst[e]
            for k in range(optr[e + 1] - optr[e]):
                if conn[e]:
                    g_new = og[optr[e] + k]
                else:
                    g_new = g_cur
                dg = g_new - g_cur
                for i in range(n):
                    for j in range(n):
                        wg[i, j] = g0[i, j]
                    for p in range(n_pat):
                        wb[i, p] = b0[i, p]
                wg[d, d] += dg
                if is_term[e]:
                    for p in range(n_pat):
                        wb[d, p] += dg * tv[p, src[e]]
                else:
                    u = src[e]
                    wg[u, u] += dg
                    wg[u, d] -= dg
                    wg[d, u] -= dg
                status = _lu_solve(wg, wb)
                if status == 0:
                    for p in range(n_pat):
                        for j in range(n_out):
                            out[e, k, p, j] = wb[oidx[j], p]
    return res


def gs_sweeps(nbr_ptr, nbr_idx, nbr_g, diag, inj, v, double tol, int max_iters):
    """Run relaxation sweeps in place; returns (sweeps used, last max update)."""
    cdef int64_t[:] ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    cdef int64_t[:] idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    cdef double[:] gv = np.ascontiguousarray(nbr_g, dtype=np.float64)
    cdef double[:] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[:] bj = np.ascontiguousarray(inj, dtype=np.float64)
    cdef double[:] x = v
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, q
    cdef int sweep, used = max_iters
    cdef double acc, new, delta, max_update
    max_update = 0.0
    with nogil:
        for sweep in range(1, max_iters + 1):
            max_update = 0.0
            for i in range(n):
                acc = bj[i]
                for q in range(ptr[i], ptr[i + 1]):
                    acc += gv[q] * x[idx[q]]
                new = acc / dg[i]
                delta = fabs(new - x[i])
                if delta > max_update:
                    max_update = delta
                x[i] = new
            if max_update < tol:
                used = sweep
                break
    return used, max_update

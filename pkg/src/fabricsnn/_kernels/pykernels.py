"""Fallback numeric kernels (numpy for dense solves, plain python for sweeps).

Mirrors the compiled extension's interface exactly; see _kernels/__init__.
"""

from __future__ import annotations

import numpy as np


def solve_multi(G: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve G @ V = B for a single (n, n) system with (n, m) right sides."""
    try:
        return np.linalg.solve(G, B)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"singular conductance system: {exc}") from exc


def solve_batch(Gs: np.ndarray, Bs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve a stack of systems; returns (V, ok) with NaN rows where singular."""
    n_sys = Gs.shape[0]
    ok = np.ones(n_sys, dtype=bool)
    try:
        return np.linalg.solve(Gs, Bs), ok
    except np.linalg.LinAlgError:
        pass
    out = np.full_like(Bs, np.nan)
    for i in range(n_sys):
        try:
            out[i] = np.linalg.solve(Gs[i], Bs[i])
        except np.linalg.LinAlgError:
            ok[i] = False
    return out, ok


def swap_volts(
    G0: np.ndarray,
    B0: np.ndarray,
    src_is_term: np.ndarray,
    src_idx: np.ndarray,
    dst_idx: np.ndarray,
    connected: np.ndarray,
    opt_g: np.ndarray,
    opt_ptr: np.ndarray,
    selected: np.ndarray,
    term_v: np.ndarray,
    out_idx: np.ndarray,
) -> np.ndarray:
    """Output voltages for every single-edge option swap.

    G0 (n, n) and B0 (n, p) describe the grounded-mode system under the
    current selection; term_v (p, t) holds the terminal source voltage per
    pattern.  Result has shape (n_edges, max_options, p, n_out) with NaN in
    slots past an edge's option count.
    """
    n_edges = len(dst_idx)
    n_pat = B0.shape[1]
    max_opts = int(np.max(opt_ptr[1:] - opt_ptr[:-1]))
    counts = opt_ptr[1:] - opt_ptr[:-1]

    stacked_g = []
    stacked_b = []
    slots = []
    for e in range(n_edges):
        g_cur = opt_g[opt_ptr[e] + selected[e]] if connected[e] else 0.0
        d = dst_idx[e]
        for k in range(counts[e]):
            g_new = opt_g[opt_ptr[e] + k] if connected[e] else g_cur
            dg = g_new - g_cur
            G = G0.copy()
            B = B0.copy()
            G[d, d] += dg
            if src_is_term[e]:
                B[d, :] += dg * term_v[:, src_idx[e]]
            else:
                u = src_idx[e]
                G[u, u] += dg
                G[u, d] -= dg
                G[d, u] -= dg
            stacked_g.append(G)
            stacked_b.append(B)
            slots.append((e, k))

    vs, ok = solve_batch(np.array(stacked_g), np.array(stacked_b))
    out = np.full((n_edges, max_opts, n_pat, len(out_idx)), np.nan)
    for i, (e, k) in enumerate(slots):
        if ok[i]:
            out[e, k] = vs[i][out_idx, :].T
    return out


def gs_sweeps(
    nbr_ptr: np.ndarray,
    nbr_idx: np.ndarray,
    nbr_g: np.ndarray,
    diag: np.ndarray,
    inj: np.ndarray,
    v: np.ndarray,
    tol: float,
    max_iters: int,
) -> tuple[int, float]:
    """Run relaxation sweeps in place; returns (sweeps used, last max update).

    One sweep updates every unknown once, in index order, from the CSR-style
    neighbor lists.  Stops once the largest update falls below tol.
    """
    ptr = nbr_ptr.tolist()
    idx = nbr_idx.tolist()
    gv = nbr_g.tolist()
    dg = diag.tolist()
    bj = inj.tolist()
    x = v.tolist()
    n = len(x)
    max_update = 0.0
    for sweep in range(1, max_iters + 1):
        max_update = 0.0
        for i in range(n):
            acc = bj[i]
            for q in range(ptr[i], ptr[i + 1]):
                acc += gv[q] * x[idx[q]]
            new = acc / dg[i]
            delta = abs(new - x[i])
            if delta > max_update:
                max_update = delta
            x[i] = new
        if max_update < tol:
            v[:] = x
            return sweep, max_update
    v[:] = x
    return max_iters, max_update

"""Pure-NumPy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``MIXPOST_BACKEND=python`` is set. Signatures match the extension
exactly; see ``mixpost._backend``.
"""
from __future__ import annotations

import numpy as np

_DEGENERATE_STREAK = 50


def w1d_sorted(x, a, y, b, p):
    """W_p^p between two sorted weighted point sets (cumulative sweep)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ca = np.cumsum(a)
    cb = np.cumsum(b)
    n, m = x.size, y.size
    i = j = 0
    prev = 0.0
    total = 0.0
    while i < n and j < m:
        nxt = min(ca[i], cb[j])
        mass = nxt - prev
        if mass > 0.0:
            total += mass * abs(x[i] - y[j]) ** p
            prev = nxt
        if ca[i] <= nxt:
            i += 1
        if cb[j] <= nxt:
            j += 1
    return total


def _batched_quantile_w(xs, cas, ys, cbs, p):
    """Row-wise W_p^p for stacks of sorted supports with cumulative weights.

    All arrays are 2-D with one row per slice; returns one value per row.
    """
    L, n = xs.shape
    m = ys.shape[1]
    t = np.sort(np.concatenate([cas, cbs], axis=1), axis=1)
    t = np.minimum(t, np.minimum(cas[:, -1:], cbs[:, -1:]))
    prev = np.empty_like(t)
    prev[:, 0] = 0.0
    prev[:, 1:] = t[:, :-1]
    mass = t - prev
    mid = 0.5 * (t + prev)
    shift = 4.0 * np.arange(L)[:, None]
    ia = np.searchsorted((cas + shift).ravel(), (mid + shift).ravel(), side="left")
    ib = np.searchsorted((cbs + shift).ravel(), (mid + shift).ravel(), side="left")
    ia = np.minimum(ia.reshape(L, -1) - n * np.arange(L)[:, None], n - 1)
    ib = np.minimum(ib.reshape(L, -1) - m * np.arange(L)[:, None], m - 1)
    qa = np.take_along_axis(xs, ia, axis=1)
    qb = np.take_along_axis(ys, ib, axis=1)
    diff = np.abs(qa - qb)
    cost = diff * diff if p == 2 else diff**p
    return np.einsum("ij,ij->i", np.where(mass > 0, mass, 0.0), cost)


def sliced_pairs(vals, wts, offsets, pairs, p):
    """Mean over slices of W_p^p for each requested pair of measures.

    ``vals``/``wts`` are (L, T): row ``l`` holds every measure's projected
    atoms, sorted within each segment ``offsets[m]:offsets[m+1]``.
    """
    vals = np.asarray(vals, dtype=float)
    wts = np.asarray(wts, dtype=float)
    offsets = np.asarray(offsets, dtype=np.int64)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    L = vals.shape[0]
    cums = np.empty_like(wts)
    for k in range(offsets.size - 1):
        s, e = offsets[k], offsets[k + 1]
        cums[:, s:e] = np.cumsum(wts[:, s:e], axis=1)
    out = np.empty(pairs.shape[0])
    for r, (i, j) in enumerate(pairs):
        si, ei = offsets[i], offsets[i + 1]
        sj, ej = offsets[j], offsets[j + 1]
        per_slice = _batched_quantile_w(
            vals[:, si:ei], cums[:, si:ei], vals[:, sj:ej], cums[:, sj:ej], p
        )
        out[r] = per_slice.sum() / L
    return out


def grid_sliced(proj_sorted, order, ref, others, p):
    """Sliced W_p^p between ``ref`` and each row of ``others`` on a shared grid.

    ``proj_sorted[l]`` are the grid points projected on slice ``l`` in
    ascending order, ``order[l]`` the permutation that sorts them.
    """
    proj_sorted = np.asarray(proj_sorted, dtype=float)
    order = np.asarray(order, dtype=np.int64)
    ref = np.asarray(ref, dtype=float)
    others = np.atleast_2d(np.asarray(others, dtype=float))
    L = proj_sorted.shape[0]
    R = others.shape[0]
    out = np.zeros(R)
    for l in range(L):
        s = proj_sorted[l]
        ca = np.cumsum(ref[order[l]])
        cbs = np.cumsum(others[:, order[l]], axis=1)
        xs = np.broadcast_to(s, (R, s.size))
        cas = np.broadcast_to(ca, (R, s.size))
        out += _batched_quantile_w(xs, cas, xs, cbs, p)
    return out / L


def transport_simplex(C, a, b):
    """Exact discrete OT by the transportation (network) simplex method.

    Parameters
    ----------
    C : (n, m) cost matrix
    a, b : strictly positive marginals with equal totals

    Returns
    -------
    value : float
    plan : (n, m) ndarray
    """
    C = np.ascontiguousarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = C.shape
    N = n + m

    # north-west corner start; ties move down the rows so the basis keeps
    # n + m - 1 cells and stays a spanning tree
    basic_i, basic_j, flow = [], [], []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while i < n and j < m:
        f = min(ra[i], rb[j])
        basic_i.append(i)
        basic_j.append(j)
        flow.append(f)
        ra[i] -= f
        rb[j] -= f
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif ra[i] < rb[j]:
            i += 1
        elif ra[i] > rb[j]:
            j += 1
        else:
            i += 1
    basic_i = np.array(basic_i, dtype=np.int64)
    basic_j = np.array(basic_j, dtype=np.int64)
    flow = np.array(flow, dtype=float)

    scale = max(1.0, float(np.abs(C).max()))
    tol = 1e-12 * scale
    degenerate = 0
    max_iter = 50 * N * N + 1000
    for _ in range(max_iter):
        # tree adjacency: node r in [0, n) rows, n + c columns
        adj = [[] for _ in range(N)]
        for e in range(basic_i.size):
            u, v = basic_i[e], n + basic_j[e]
            adj[u].append((v, e))
            adj[v].append((u, e))
        pot = np.zeros(N)
        parent = np.full(N, -1, dtype=np.int64)
        parent_edge = np.full(N, -1, dtype=np.int64)
        depth = np.zeros(N, dtype=np.int64)
        seen = np.zeros(N, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v, e in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    parent_edge[v] = e
                    depth[v] = depth[u] + 1
                    cost = C[basic_i[e], basic_j[e]]
                    # u_i + v_j = c_ij
                    pot[v] = cost - pot[u]
                    stack.append(v)
        red = C - pot[:n, None] - pot[None, n:]
        if degenerate < _DEGENERATE_STREAK:
            k = int(np.argmin(red))
            if red.flat[k] >= -tol:
                break
        else:
            # Bland: first improving cell in index order
            neg = np.flatnonzero(red.ravel() < -tol)
            if neg.size == 0:
                break
            k = int(neg[0])
        ei, ej = divmod(k, m)

        # cycle = entering cell + tree path from column node back to row node
        u, v = n + ej, ei
        path_u, path_v = [], []
        while u != v:
            if depth[u] >= depth[v]:
                path_u.append(parent_edge[u])
                u = parent[u]
            else:
                path_v.append(parent_edge[v])
                v = parent[v]
        path = path_u + path_v[::-1]
        minus = np.array(path[0::2], dtype=np.int64)
        plus = np.array(path[1::2], dtype=np.int64)
        theta = flow[minus].min()
        cand = minus[flow[minus] <= theta]
        leave = int(cand.min())
        degenerate = degenerate + 1 if theta <= 0.0 else 0
        flow[minus] -= theta
        flow[plus] += theta
        basic_i[leave] = ei
        basic_j[leave] = ej
        flow[leave] = theta
    else:
        raise RuntimeError("transport simplex did not converge")

    plan = np.zeros((n, m))
    np.add.at(plan, (basic_i, basic_j), np.maximum(flow, 0.0))
    return float(np.sum(plan * C)), plan

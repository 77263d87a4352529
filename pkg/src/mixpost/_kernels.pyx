# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``mixpost._fallback`` signature for signature."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()

DEF DEGENERATE_STREAK = 50


cdef inline double _cost(double d, double p) noexcept nogil:
    if p == 2.0:
        return d * d
    if p == 1.0:
        return d
    return pow(d, p)


cdef double _sweep(const double[:] x, const double[:] ca,
                   const double[:] y, const double[:] cb, double p) noexcept nogil:
    """W_p^p from sorted supports and their cumulative weights.

    Written without data-dependent branches: the merge order of the two
    cumulative sequences is unpredictable and mispredictions dominate.
    """
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double prev = 0.0, nxt, a, b, total = 0.0
    while i < n and j < m:
        a = ca[i]
        b = cb[j]
        nxt = a if a < b else b
        total += (nxt - prev) * _cost(fabs(x[i] - y[j]), p)
        prev = nxt
        i += a <= nxt
        j += b <= nxt
    return total


def w1d_sorted(x, a, y, b, double p):
    cdef double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:] ca = np.cumsum(np.asarray(a, dtype=np.float64))
    cdef double[:] cb = np.cumsum(np.asarray(b, dtype=np.float64))
    cdef double out
    with nogil:
        out = _sweep(xv, ca, yv, cb, p)
    return out


def sliced_pairs(vals, wts, offsets, pairs, double p):
    cdef double[:, ::1] V = np.ascontiguousarray(vals, dtype=np.float64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] pr = np.ascontiguousarray(
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    cdef double[:, ::1] Cw = np.array(wts, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t L = V.shape[0], nm = off.shape[0] - 1, P = pr.shape[0]
    cdef Py_ssize_t l, k, t, r, i, j
    cdef double acc
    out_arr = np.zeros(P, dtype=np.float64)
    cdef double[:] out = out_arr
    with nogil:
        for l in range(L):
            for k in range(nm):
                acc = 0.0
                for t in range(off[k], off[k + 1]):
                    acc = acc + Cw[l, t]
                    Cw[l, t] = acc
        for r in range(P):
            i = pr[r, 0]
            j = pr[r, 1]
            acc = 0.0
            for l in range(L):
                acc += _sweep(V[l, off[i]:off[i + 1]], Cw[l, off[i]:off[i + 1]],
                              V[l, off[j]:off[j + 1]], Cw[l, off[j]:off[j + 1]], p)
            out[r] = acc / L
    return out_arr


def grid_sliced(proj_sorted, order, ref, others, double p):
    cdef double[:, ::1] S = np.ascontiguousarray(proj_sorted, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] O = np.ascontiguousarray(order, dtype=np.int64)
    cdef const double[:] a = np.ascontiguousarray(ref, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(
        np.atleast_2d(np.asarray(others, dtype=np.float64)))
    cdef Py_ssize_t L = S.shape[0], N = S.shape[1], R = B.shape[0]
    cdef Py_ssize_t l, t, r
    cdef double acc
    ca_arr = np.empty(N, dtype=np.float64)
    cb_arr = np.empty(N, dtype=np.float64)
    out_arr = np.zeros(R, dtype=np.float64)
    cdef double[:] ca = ca_arr
    cdef double[:] cb = cb_arr
    cdef double[:] out = out_arr
    cdef Py_ssize_t r0, r1, block = 16
    with nogil:
        # blocks of targets keep their rows cache-resident across slices
        r0 = 0
        while r0 < R:
            r1 = r0 + block if r0 + block < R else R
            for l in range(L):
                acc = 0.0
                for t in range(N):
                    acc = acc + a[O[l, t]]
                    ca[t] = acc
                for r in range(r0, r1):
                    acc = 0.0
                    for t in range(N):
                        acc = acc + B[r, O[l, t]]
                        cb[t] = acc
                    out[r] += _sweep(S[l], ca, S[l], cb, p)
            r0 = r1
        for r in range(R):
            out[r] = out[r] / L
    return out_arr


def transport_simplex(C, a, b):
    """Transportation simplex; see the fallback for the algorithm notes."""
    cdef double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], m = c.shape[1]
    cdef Py_ssize_t N = n + m, E = n + m - 1
    ra_arr = np.array(a, dtype=np.float64, copy=True)
    rb_arr = np.array(b, dtype=np.float64, copy=True)
    cdef double[:] ra = ra_arr
    cdef double[:] rb = rb_arr
    bi_arr = np.zeros(E, dtype=np.int64)
    bj_arr = np.zeros(E, dtype=np.int64)
    fl_arr = np.zeros(E, dtype=np.float64)
    cdef cnp.int64_t[:] bi = bi_arr
    cdef cnp.int64_t[:] bj = bj_arr
    cdef double[:] fl = fl_arr

    # adjacency as CSR rebuilt each pivot
    deg_arr = np.zeros(N + 1, dtype=np.int64)
    nbr_arr = np.zeros(2 * E, dtype=np.int64)
    nbe_arr = np.zeros(2 * E, dtype=np.int64)
    fill_arr = np.zeros(N, dtype=np.int64)
    pot_arr = np.zeros(N, dtype=np.float64)
    par_arr = np.zeros(N, dtype=np.int64)
    pe_arr = np.zeros(N, dtype=np.int64)
    dep_arr = np.zeros(N, dtype=np.int64)
    seen_arr = np.zeros(N, dtype=np.int8)
    stack_arr = np.zeros(N, dtype=np.int64)
    path_arr = np.zeros(N, dtype=np.int64)
    tail_arr = np.zeros(N, dtype=np.int64)
    cdef cnp.int64_t[:] deg = deg_arr
    cdef cnp.int64_t[:] nbr = nbr_arr
    cdef cnp.int64_t[:] nbe = nbe_arr
    cdef cnp.int64_t[:] fill = fill_arr
    cdef double[:] pot = pot_arr
    cdef cnp.int64_t[:] par = par_arr
    cdef cnp.int64_t[:] pe = pe_arr
    cdef cnp.int64_t[:] dep = dep_arr
    cdef signed char[:] seen = seen_arr
    cdef cnp.int64_t[:] stack = stack_arr
    cdef cnp.int64_t[:] path = path_arr
    cdef cnp.int64_t[:] tail = tail_arr

    cdef Py_ssize_t i = 0, j = 0, e = 0, u, v, w, q, sp, np_, nt, k
    cdef Py_ssize_t ei = 0, ej = 0, leave, it, max_iter = 50 * N * N + 1000
    cdef double f, scale = 1.0, tol, best, r, theta
    cdef int degenerate = 0, converged = 0, bland

    with nogil:
        for i in range(n):
            for j in range(m):
                if fabs(c[i, j]) > scale:
                    scale = fabs(c[i, j])
        tol = 1e-12 * scale
        i = 0
        j = 0
        while i < n and j < m:
            f = ra[i] if ra[i] < rb[j] else rb[j]
            bi[e] = i
            bj[e] = j
            fl[e] = f
            e += 1
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

        for it in range(max_iter):
            for u in range(N + 1):
                deg[u] = 0
            for e in range(E):
                deg[bi[e] + 1] += 1
                deg[n + bj[e] + 1] += 1
            for u in range(N):
                deg[u + 1] += deg[u]
                fill[u] = deg[u]
            for e in range(E):
                u = bi[e]
                v = n + bj[e]
                nbr[fill[u]] = v
                nbe[fill[u]] = e
                fill[u] += 1
                nbr[fill[v]] = u
                nbe[fill[v]] = e
                fill[v] += 1
            for u in range(N):
                seen[u] = 0
            seen[0] = 1
            pot[0] = 0.0
            par[0] = -1
            dep[0] = 0
            sp = 1
            stack[0] = 0
            while sp > 0:
                sp -= 1
                u = stack[sp]
                for q in range(deg[u], deg[u + 1]):
                    v = nbr[q]
                    if not seen[v]:
                        seen[v] = 1
                        par[v] = u
                        pe[v] = nbe[q]
                        dep[v] = dep[u] + 1
                        pot[v] = c[bi[nbe[q]], bj[nbe[q]]] - pot[u]
                        stack[sp] = v
                        sp += 1

            bland = degenerate >= DEGENERATE_STREAK
            best = -tol
            k = -1
            for i in range(n):
                for j in range(m):
                    r = c[i, j] - pot[i] - pot[n + j]
                    if r < best:
                        best = r
                        ei = i
                        ej = j
                        k = 1
                        if bland:
                            break
                if bland and k >= 0:
                    break
            if k < 0:
                converged = 1
                break

            u = n + ej
            v = ei
            np_ = 0
            nt = 0
            while u != v:
                if dep[u] >= dep[v]:
                    path[np_] = pe[u]
                    np_ += 1
                    u = par[u]
                else:
                    tail[nt] = pe[v]
                    nt += 1
                    v = par[v]
            for q in range(nt):
                path[np_ + q] = tail[nt - 1 - q]
            np_ += nt

            theta = fl[path[0]]
            leave = path[0]
            q = 2
            while q < np_:
                w = path[q]
                if fl[w] < theta or (fl[w] == theta and w < leave):
                    theta = fl[w]
                    leave = w
                q += 2
            if theta <= 0.0:
                degenerate += 1
            else:
                degenerate = 0
            for q in range(np_):
                if q % 2 == 0:
                    fl[path[q]] -= theta
                else:
                    fl[path[q]] += theta
            bi[leave] = ei
            bj[leave] = ej
            fl[leave] = theta

    if not converged:
        raise RuntimeError("transport simplex did not converge")
    plan = np.zeros((n, m), dtype=np.float64)
    np.add.at(plan, (bi_arr, bj_arr), np.maximum(fl_arr, 0.0))
    return float(np.sum(plan * np.asarray(c))), plan

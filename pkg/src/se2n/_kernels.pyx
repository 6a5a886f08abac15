# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: bilinear spectrum sampling and invariant sums.

Mirrors the signatures in ``se2n._kernels_py``; see that module for the index
conventions.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IS_NATIVE = True


def sample_bilinear(const double complex[:, :] values, const double[:] u, const double[:] v):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t h = values.shape[0]
    cdef Py_ssize_t w = values.shape[1]
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[:] out = out_arr
    cdef Py_ssize_t i, u0, v0
    cdef double fu, fv
    cdef double complex top, bot
    with nogil:
        for i in range(n):
            u0 = <Py_ssize_t> u[i]
            v0 = <Py_ssize_t> v[i]
            if u0 > w - 2:
                u0 = w - 2
            if v0 > h - 2:
                v0 = h - 2
            fu = u[i] - u0
            fv = v[i] - v0
            top = values[v0, u0] + fu * (values[v0, u0 + 1] - values[v0, u0])
            bot = values[v0 + 1, u0] + fu * (values[v0 + 1, u0 + 1] - values[v0 + 1, u0])
            out[i] = top + fv * (bot - top)
    return out_arr


def rotational_power(const double complex[:, :] stack, const long long[:] idx):
    cdef Py_ssize_t P = idx.shape[0]
    cdef Py_ssize_t N = stack.shape[1]
    out_arr = np.empty((P, N), dtype=np.complex128)
    cdef double complex[:, :] out = out_arr
    cdef Py_ssize_t p, h, k, r
    cdef double complex acc
    with nogil:
        for p in range(P):
            r = idx[p]
            for h in range(N):
                acc = 0
                for k in range(N):
                    acc = acc + stack[r, (k - h + N) % N].conjugate() * stack[r, k]
                out[p, h] = acc
    return out_arr


def rotational_triple(
    const double complex[:, :] stack,
    const long long[:] i_idx,
    const long long[:] j_idx,
    const long long[:] s_idx,
):
    cdef Py_ssize_t M = i_idx.shape[0]
    cdef Py_ssize_t N = stack.shape[1]
    out_arr = np.empty((M, N), dtype=np.complex128)
    cdef double complex[:, :] out = out_arr
    cdef Py_ssize_t m, h, k, a, b, c
    cdef double complex acc
    with nogil:
        for m in range(M):
            a = i_idx[m]
            b = j_idx[m]
            c = s_idx[m]
            for h in range(N):
                acc = 0
                for k in range(N):
                    acc = acc + stack[a, (k - h + N) % N] * stack[b, k] * stack[c, k].conjugate()
                out[m, h] = acc
    return out_arr


def smo_solve(
    const double[:, :] K,
    const double[:] y,
    double C,
    double tol,
    long long max_iter,
):
    """Two-class SMO with max-violating-pair selection on a precomputed kernel.

    Returns (alpha, bias, iterations). Ties in the pair selection resolve to
    the lowest index, matching the pure NumPy twin.
    """
    cdef Py_ssize_t n = y.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    F_arr = np.zeros(n, dtype=np.float64)
    cdef double[:] alpha = alpha_arr
    cdef double[:] F = F_arr
    cdef double slack = 1e-12
    cdef Py_ssize_t i, j, t, it
    cdef double ei, best_up, best_low, L, H, eta, aj_new, d_aj, d_ai, yi, yj
    cdef bint up, low
    cdef long long iters = 0
    with nogil:
        for it in range(max_iter):
            iters = it
            best_up = -1e308
            best_low = 1e308
            i = -1
            j = -1
            for t in range(n):
                ei = y[t] - F[t]  # equals -E[t]
                up = (y[t] > 0 and alpha[t] < C - slack) or (y[t] < 0 and alpha[t] > slack)
                low = (y[t] > 0 and alpha[t] > slack) or (y[t] < 0 and alpha[t] < C - slack)
                if up and ei > best_up:
                    best_up = ei
                    i = t
                if low and ei < best_low:
                    best_low = ei
                    j = t
            if i < 0 or j < 0 or best_up - best_low < tol:
                break
            yi = y[i]
            yj = y[j]
            if yi != yj:
                L = alpha[j] - alpha[i]
                if L < 0:
                    L = 0
                H = C + alpha[j] - alpha[i]
                if H > C:
                    H = C
            else:
                L = alpha[i] + alpha[j] - C
                if L < 0:
                    L = 0
                H = alpha[i] + alpha[j]
                if H > C:
                    H = C
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta < 1e-12:
                eta = 1e-12
            # E[i] - E[j] = (F[i] - y[i]) - (F[j] - y[j]) = best_low... compute directly
            aj_new = alpha[j] + yj * ((F[i] - yi) - (F[j] - yj)) / eta
            if aj_new < L:
                aj_new = L
            elif aj_new > H:
                aj_new = H
            d_aj = aj_new - alpha[j]
            if d_aj < 1e-14 and d_aj > -1e-14:
                break
            d_ai = -yi * yj * d_aj
            alpha[i] = alpha[i] + d_ai
            alpha[j] = aj_new
            for t in range(n):
                F[t] = F[t] + yi * d_ai * K[i, t] + yj * d_aj * K[j, t]
    # bias from the final violation bounds
    cdef double hi = 0.0
    cdef double lo = 0.0
    cdef bint any_up = False
    cdef bint any_low = False
    for t in range(n):
        ei = y[t] - F[t]
        up = (y[t] > 0 and alpha[t] < C - slack) or (y[t] < 0 and alpha[t] > slack)
        low = (y[t] > 0 and alpha[t] > slack) or (y[t] < 0 and alpha[t] < C - slack)
        if up and (not any_up or ei > hi):
            hi = ei
            any_up = True
        if low and (not any_low or ei < lo):
            lo = ei
            any_low = True
    bias = (hi + lo) / 2.0
    return alpha_arr, bias, iters


def cyclic_triple(
    const double complex[:, :] stack,
    const long long[:] i_idx,
    const long long[:] j_idx,
    const long long[:, :] s_idx,
):
    cdef Py_ssize_t M = i_idx.shape[0]
    cdef Py_ssize_t N = stack.shape[1]
    out_arr = np.empty((M, N, N), dtype=np.complex128)
    cdef double complex[:, :, :] out = out_arr
    cdef Py_ssize_t m, k, h, r, a, b, c
    cdef double complex acc
    with nogil:
        for m in range(M):
            a = i_idx[m]
            b = j_idx[m]
            for k in range(N):
                for h in range(N):
                    c = s_idx[m, (h + k) % N]
                    acc = 0
                    for r in range(N):
                        acc = acc + (
                            stack[a, (r - h + N) % N]
                            * stack[b, (r - k + N) % N]
                            * stack[c, r].conjugate()
                        )
                    out[m, k, h] = acc
    return out_arr

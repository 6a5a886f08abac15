"""Pure NumPy implementations of the hot kernels.

Signature-compatible with the compiled module ``se2n._kernels``; the backend
module picks whichever is available. Index conventions: ``stack`` holds one
omega vector per row (shape (F, N)); rolled entry (k - h) mod N realizes
evaluation at the frequency rotated by 2*pi*h/N.
"""

from __future__ import annotations

import numpy as np

IS_NATIVE = False


def _roll_index(N: int) -> np.ndarray:
    k = np.arange(N)
    return (k[None, :] - k[:, None]) % N  # [h, k] -> (k - h) % N


def sample_bilinear(values: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a complex 2D array at fractional (col, row) indices."""
    h, w = values.shape
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    np.clip(u0, 0, w - 2, out=u0)
    np.clip(v0, 0, h - 2, out=v0)
    fu = u - u0
    fv = v - v0
    c00 = values[v0, u0]
    c01 = values[v0, u0 + 1]
    c10 = values[v0 + 1, u0]
    c11 = values[v0 + 1, u0 + 1]
    top = c00 + fu * (c01 - c00)
    bot = c10 + fu * (c11 - c10)
    return top + fv * (bot - top)


def rotational_power(stack: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """out[p, h] = sum_k conj(stack[idx[p], (k-h)%N]) * stack[idx[p], k]."""
    N = stack.shape[1]
    om = stack[idx]
    rolled = om[:, _roll_index(N)]
    return np.einsum("phk,pk->ph", rolled.conj(), om, optimize=True)


def rotational_triple(
    stack: np.ndarray, i_idx: np.ndarray, j_idx: np.ndarray, s_idx: np.ndarray
) -> np.ndarray:
    """out[m, h] = sum_k stack[i, (k-h)%N] * stack[j, k] * conj(stack[s, k])."""
    N = stack.shape[1]
    om1 = stack[i_idx][:, _roll_index(N)]
    rest = stack[j_idx] * stack[s_idx].conj()
    return np.einsum("mhk,mk->mh", om1, rest, optimize=True)


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Two-class SMO with max-violating-pair selection on a precomputed kernel.

    Returns (alpha, bias, iterations); ties in the pair selection resolve to
    the lowest index, so the solver is deterministic.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    F = np.zeros(n)
    slack = 1e-12
    iters = 0
    for it in range(max_iter):
        iters = it
        neg_e = y - F
        up = ((y > 0) & (alpha < C - slack)) | ((y < 0) & (alpha > slack))
        low = ((y > 0) & (alpha > slack)) | ((y < 0) & (alpha < C - slack))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, neg_e, -np.inf)))
        j = int(np.argmin(np.where(low, neg_e, np.inf)))
        if neg_e[i] - neg_e[j] < tol:
            break
        if y[i] != y[j]:
            L = max(0.0, alpha[j] - alpha[i])
            H = min(C, C + alpha[j] - alpha[i])
        else:
            L = max(0.0, alpha[i] + alpha[j] - C)
            H = min(C, alpha[i] + alpha[j])
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta < 1e-12:
            eta = 1e-12
        aj_new = alpha[j] + y[j] * ((F[i] - y[i]) - (F[j] - y[j])) / eta
        aj_new = min(max(aj_new, L), H)
        d_aj = aj_new - alpha[j]
        if abs(d_aj) < 1e-14:
            break  # degenerate pair cannot progress; leave a constant vote
        d_ai = -y[i] * y[j] * d_aj
        alpha[i] += d_ai
        alpha[j] = aj_new
        F += y[i] * d_ai * K[i] + y[j] * d_aj * K[j]
    neg_e = y - F
    up = ((y > 0) & (alpha < C - slack)) | ((y < 0) & (alpha > slack))
    low = ((y > 0) & (alpha > slack)) | ((y < 0) & (alpha < C - slack))
    hi = float(np.max(neg_e[up])) if up.any() else 0.0
    lo = float(np.min(neg_e[low])) if low.any() else 0.0
    return alpha, (hi + lo) / 2.0, iters


def cyclic_triple(
    stack: np.ndarray, i_idx: np.ndarray, j_idx: np.ndarray, s_idx: np.ndarray
) -> np.ndarray:
    """out[m, k, h] = sum_r stack[i, (r-h)%N] * stack[j, (r-k)%N] * conj(stack[s_idx[m, (h+k)%N], r])."""
    N = stack.shape[1]
    roll = _roll_index(N)
    om1 = stack[i_idx][:, roll]            # (M, h, r)
    om2 = stack[j_idx][:, roll]            # (M, k, r)
    oms = stack[s_idx].conj()              # (M, c, r)
    kk, hh = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    c = (kk + hh) % N                      # (k, h)
    prod = np.einsum("mhr,mkr->mkhr", om1, om2, optimize=True)
    return np.einsum("mkhr,mkhr->mkh", prod, oms[:, c], optimize=True)

"""Backend parity: the compiled kernels must match the pure NumPy twins, and
both must match straightforward reference loops."""

import numpy as np
import pytest

from se2n import _kernels_py
from se2n._backend import available_backends

native = pytest.importorskip("se2n._kernels") if "native" in available_backends() else None

N = 6


@pytest.fixture
def stack(rng):
    return rng.normal(size=(40, N)) + 1j * rng.normal(size=(40, N))


def ref_rotational_power(stack, idx):
    out = np.empty((len(idx), N), dtype=complex)
    for p, r in enumerate(idx):
        for h in range(N):
            out[p, h] = sum(
                np.conj(stack[r, (k - h) % N]) * stack[r, k] for k in range(N)
            )
    return out


def ref_rotational_triple(stack, i_idx, j_idx, s_idx):
    out = np.empty((len(i_idx), N), dtype=complex)
    for m in range(len(i_idx)):
        for h in range(N):
            out[m, h] = sum(
                stack[i_idx[m], (k - h) % N] * stack[j_idx[m], k] * np.conj(stack[s_idx[m], k])
                for k in range(N)
            )
    return out


def ref_cyclic(stack, i_idx, j_idx, s_idx):
    out = np.empty((len(i_idx), N, N), dtype=complex)
    for m in range(len(i_idx)):
        for k in range(N):
            for h in range(N):
                out[m, k, h] = sum(
                    stack[i_idx[m], (r - h) % N]
                    * stack[j_idx[m], (r - k) % N]
                    * np.conj(stack[s_idx[m, (h + k) % N], r])
                    for r in range(N)
                )
    return out


def _backends():
    mods = [_kernels_py]
    if native is not None:
        mods.append(native)
    return mods


def test_sample_bilinear_matches_reference(rng):
    values = rng.normal(size=(20, 30)) + 1j * rng.normal(size=(20, 30))
    u = rng.uniform(0, 29, 200)
    v = rng.uniform(0, 19, 200)
    want = _kernels_py.sample_bilinear(values, u, v)
    # manual check of a few entries
    for t in range(5):
        u0, v0 = int(u[t]), int(v[t])
        fu, fv = u[t] - u0, v[t] - v0
        manual = (
            values[v0, u0] * (1 - fu) * (1 - fv)
            + values[v0, u0 + 1] * fu * (1 - fv)
            + values[v0 + 1, u0] * (1 - fu) * fv
            + values[v0 + 1, u0 + 1] * fu * fv
        )
        assert want[t] == pytest.approx(manual, rel=1e-12)
    for mod in _backends():
        got = mod.sample_bilinear(values, u, v)
        assert np.allclose(got, want, rtol=1e-15)


def test_rotational_power_parity(rng, stack):
    idx = np.arange(stack.shape[0], dtype=np.int64)
    want = ref_rotational_power(stack, idx)
    for mod in _backends():
        assert np.allclose(mod.rotational_power(stack, idx), want, rtol=1e-12)


def test_rotational_triple_parity(rng, stack):
    m = 60
    i_idx = rng.integers(0, stack.shape[0], m).astype(np.int64)
    j_idx = rng.integers(0, stack.shape[0], m).astype(np.int64)
    s_idx = rng.integers(0, stack.shape[0], m).astype(np.int64)
    want = ref_rotational_triple(stack, i_idx, j_idx, s_idx)
    for mod in _backends():
        assert np.allclose(mod.rotational_triple(stack, i_idx, j_idx, s_idx), want, rtol=1e-12)


def test_cyclic_parity(rng, stack):
    m = 25
    i_idx = rng.integers(0, stack.shape[0], m).astype(np.int64)
    j_idx = rng.integers(0, stack.shape[0], m).astype(np.int64)
    s_idx = rng.integers(0, stack.shape[0], (m, N)).astype(np.int64)
    want = ref_cyclic(stack, i_idx, j_idx, s_idx)
    for mod in _backends():
        assert np.allclose(mod.cyclic_triple(stack, i_idx, j_idx, s_idx), want, rtol=1e-12)


def test_smo_parity(rng):
    n = 60
    X = rng.normal(size=(n, 8))
    y = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    X[y > 0] += 0.5
    d2 = np.sum(X * X, 1)[:, None] + np.sum(X * X, 1)[None, :] - 2 * X @ X.T
    K = np.exp(-np.maximum(d2, 0) / (2 * 4.0**2))
    results = []
    for mod in _backends():
        alpha, bias, iters = mod.smo_solve(K, y, 10.0, 1e-10, 1_000_000)
        assert np.all(alpha >= -1e-12) and np.all(alpha <= 10.0 + 1e-12)
        assert abs(np.dot(alpha, y)) <= 1e-9
        results.append((np.asarray(alpha), bias))
    for alpha, bias in results[1:]:
        assert np.max(np.abs(alpha - results[0][0])) <= 1e-9
        assert abs(bias - results[0][1]) <= 1e-9

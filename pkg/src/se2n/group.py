"""Exact group-theoretic machinery for the semidiscrete roto-translation group.

Elements are pairs (x, k): a plane translation x and a rotation index k modulo
N, composing as (x, k)(y, r) = (x + R_k y, k + r). The module provides the
unitary representations, the matrix-valued Fourier transform of functions on
the group, the wavelet lift of an image together with its closed rank-1
transform, and the induction-reduction equivalence that decomposes tensor
products of representations. Everything here is used as a slow, trusted
reference for the fast descriptor formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .imagecore import Raster
from .spectral import HexGrid, Spectrum, rotate_freq


@dataclass(frozen=True)
class GroupElement:
    x: tuple[float, float]
    k: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % self.N)
        object.__setattr__(self, "x", (float(self.x[0]), float(self.x[1])))


def _rot(v, k: int, N: int) -> tuple[float, float]:
    ang = 2 * np.pi * k / N
    c, s = np.cos(ang), np.sin(ang)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def group_mul(a: GroupElement, b: GroupElement) -> GroupElement:
    """(x, k)(y, r) = (x + R_k y, k + r)."""
    if a.N != b.N:
        raise ValueError("elements from different groups")
    rx, ry = _rot(b.x, a.k, a.N)
    return GroupElement((a.x[0] + rx, a.x[1] + ry), a.k + b.k, a.N)


def group_inv(a: GroupElement) -> GroupElement:
    rx, ry = _rot(a.x, -a.k, a.N)
    return GroupElement((-rx, -ry), -a.k, a.N)


def rep_matrix(lam, a: GroupElement) -> np.ndarray:
    """Unitary representation matrix: entry (h, h+k mod N) = exp(i <lam, R_h x>)."""
    N = a.N
    mat = np.zeros((N, N), dtype=np.complex128)
    lam = np.asarray(lam, dtype=np.float64)
    for h in range(N):
        rx, ry = _rot(a.x, h, N)
        mat[h, (h + a.k) % N] = np.exp(1j * (lam[0] * rx + lam[1] * ry))
    return mat


# ---------------------------------------------------------------------------
# mother wavelet and lift


@dataclass(frozen=True)
class MotherWavelet:
    """Gabor wavelet: Gaussian envelope with a complex carrier.

    hat(mu) = 2*pi*sigma^2 * exp(-sigma^2 |mu - carrier|^2 / 2); strictly
    positive, so the sum of |hat|^2 over any rotation orbit never vanishes
    (weak admissibility).
    """

    sigma: float = 4.0
    carrier: tuple[float, float] = (2 * np.pi / 8, 0.0)

    def spatial(self, xs, ys) -> np.ndarray:
        nx, ny = self.carrier
        env = np.exp(-(np.asarray(xs) ** 2 + np.asarray(ys) ** 2) / (2 * self.sigma**2))
        return env * np.exp(1j * (nx * np.asarray(xs) + ny * np.asarray(ys)))

    def hat(self, freqs) -> np.ndarray:
        """Transform at frequencies of shape (..., 2)."""
        freqs = np.asarray(freqs, dtype=np.float64)
        nx, ny = self.carrier
        d2 = (freqs[..., 0] - nx) ** 2 + (freqs[..., 1] - ny) ** 2
        return (2 * np.pi * self.sigma**2 * np.exp(-self.sigma**2 * d2 / 2)).astype(np.complex128)

    def omega(self, lam, N: int) -> np.ndarray:
        """hat evaluated along the rotation orbit of lam (entry k at R_{-k} lam)."""
        freqs = np.stack([rotate_freq(lam, -k, N) for k in range(N)])
        return self.hat(freqs)

    def admissibility_floor(self, freqs, N: int) -> float:
        """min over the given frequencies of sum_k |hat(R_{-k} lam)|^2."""
        freqs = np.asarray(freqs, dtype=np.float64)
        total = np.zeros(freqs.shape[:-1])
        for k in range(N):
            ang = -2 * np.pi * k / N
            c, s = np.cos(ang), np.sin(ang)
            rot = np.stack(
                [c * freqs[..., 0] - s * freqs[..., 1], s * freqs[..., 0] + c * freqs[..., 1]],
                axis=-1,
            )
            total += np.abs(self.hat(rot)) ** 2
        return float(total.min())


@dataclass
class CortexFunction:
    """Function on the group sampled on a common pixel grid: one slice per rotation index.

    The default origin centers the coordinate system in the grid, matching the
    raster convention.
    """

    slices: np.ndarray                 # (N, H, W) complex
    spacing: float = 1.0
    origin: tuple[float, float] | None = None
    _spectra: tuple[Spectrum, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.slices = np.ascontiguousarray(np.asarray(self.slices, dtype=np.complex128))
        if self.slices.ndim != 3:
            raise ValueError("slices must have shape (N, H, W)")
        if self.origin is None:
            h, w = self.slices.shape[1:]
            self.origin = (-0.5 * (w - 1) * self.spacing, -0.5 * (h - 1) * self.spacing)

    @property
    def N(self) -> int:
        return self.slices.shape[0]

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        ox, oy = self.origin
        h, w = self.slices.shape[1:]
        xs = ox + self.spacing * np.arange(w)
        ys = oy + self.spacing * np.arange(h)
        return np.meshgrid(xs, ys, indexing="xy")

    def spectra(self) -> tuple[Spectrum, ...]:
        if self._spectra is None:
            self._spectra = tuple(
                spectral.spectrum_of_array(s, self.spacing, self.origin, pad_factor=2)
                for s in self.slices
            )
        return self._spectra

    def translated(self, dx: int, dy: int) -> "CortexFunction":
        """Integer-pixel left translation: every slice shifted by (dx, dy), zero fill."""
        out = np.zeros_like(self.slices)
        h, w = self.slices.shape[1:]
        ys_src = slice(max(0, -dy), min(h, h - dy))
        xs_src = slice(max(0, -dx), min(w, w - dx))
        ys_dst = slice(max(0, dy), min(h, h + dy))
        xs_dst = slice(max(0, dx), min(w, w + dx))
        out[:, ys_dst, xs_dst] = self.slices[:, ys_src, xs_src]
        return CortexFunction(out, self.spacing, self.origin)


def lift(f: Raster, psi: MotherWavelet, N: int = 6, pad_factor: int = 2) -> CortexFunction:
    """Wavelet lift of an image: slice k is the cross-correlation of f with the
    wavelet rotated by 2*pi*k/N, computed via FFT products.

    The image is embedded centrally in a canvas ``pad_factor`` times larger so
    the correlation tails do not wrap.
    """
    h, w = f.pixels.shape
    ch, cw = h * pad_factor, w * pad_factor
    off_y, off_x = (ch - h) // 2, (cw - w) // 2
    canvas = np.zeros((ch, cw), dtype=np.float64)
    canvas[off_y : off_y + h, off_x : off_x + w] = f.pixels
    origin = (f.origin[0] - off_x * f.spacing, f.origin[1] - off_y * f.spacing)
    fr = Raster(canvas, spacing=f.spacing, origin=origin)
    spec = spectral.dft2_shifted(fr, pad_factor=1)

    lx, ly = spec.lattice_freqs()
    mx, my = np.meshgrid(lx, ly, indexing="xy")
    slices = np.empty((N, ch, cw), dtype=np.complex128)
    spectra = []
    for k in range(N):
        ang = -2 * np.pi * k / N
        c, s = np.cos(ang), np.sin(ang)
        rot = np.stack([c * mx - s * my, s * mx + c * my], axis=-1)
        prod = spec.values * np.conj(psi.hat(rot))
        slice_spec = Spectrum(prod, spec.freq_step, spec.spacing, spec.origin)
        spectra.append(slice_spec)
        slices[k] = spectral.invert_spectrum_complex(slice_spec)
    return CortexFunction(slices, f.spacing, origin, _spectra=tuple(spectra))


def matrix_ft(phi: CortexFunction, lam, method: str = "dtft") -> np.ndarray:
    """Matrix Fourier coefficient of a function on the group.

    Entry (i, j) is the plane transform of slice (i - j) mod N evaluated at
    R_{-j} lam. ``method='dtft'`` integrates directly (exact up to roundoff for
    the sampled slices); ``method='interp'`` samples each slice's FFT
    bilinearly, which is faster but carries interpolation error.
    """
    N = phi.N
    freqs = np.stack([rotate_freq(lam, -j, N) for j in range(N)])
    if method == "dtft":
        xs, ys = phi.coords()
        phase = np.exp(
            -1j
            * (
                np.multiply.outer(freqs[:, 0], xs.ravel())
                + np.multiply.outer(freqs[:, 1], ys.ravel())
            )
        )
        flat = phi.slices.reshape(N, -1)
        vals = (flat @ phase.T) * phi.spacing**2  # vals[m, j]
    elif method == "interp":
        specs = phi.spectra()
        vals = np.stack([spectral.sample_many(specs[m], freqs) for m in range(N)])
    else:
        raise ValueError(f"unknown method {method!r}")
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    return vals[(i - j) % N, j]


def matrix_ft_haar(phi: CortexFunction, lam) -> np.ndarray:
    """Brute-force matrix Fourier coefficient as a Haar sum over group elements.

    Accumulates phi(a) * T(a^{-1}) over all (pixel, rotation) pairs using the
    representation matrices directly. Independent of :func:`matrix_ft`; meant
    for small test grids.
    """
    N = phi.N
    xs, ys = phi.coords()
    out = np.zeros((N, N), dtype=np.complex128)
    sp2 = phi.spacing**2
    for k in range(N):
        pix = phi.slices[k]
        for iy in range(pix.shape[0]):
            for ix in range(pix.shape[1]):
                val = pix[iy, ix]
                if val == 0:
                    continue
                a = GroupElement((xs[iy, ix], ys[iy, ix]), k, N)
                out += val * rep_matrix(lam, group_inv(a)) * sp2
    return out


def tensor_ft_haar(phi: CortexFunction, lam1, lam2) -> np.ndarray:
    """Haar-sum Fourier coefficient at the tensor product of two representations.

    Returns the N^2 x N^2 matrix sum of phi(a) * kron(T1(a^{-1}), T2(a^{-1})).
    """
    N = phi.N
    xs, ys = phi.coords()
    out = np.zeros((N * N, N * N), dtype=np.complex128)
    sp2 = phi.spacing**2
    for k in range(N):
        pix = phi.slices[k]
        for iy in range(pix.shape[0]):
            for ix in range(pix.shape[1]):
                val = pix[iy, ix]
                if val == 0:
                    continue
                ainv = group_inv(GroupElement((xs[iy, ix], ys[iy, ix]), k, N))
                out += val * np.kron(rep_matrix(lam1, ainv), rep_matrix(lam2, ainv)) * sp2
    return out


def lift_ft_rank1(om_psi: np.ndarray, om_f: np.ndarray) -> np.ndarray:
    """Closed form of the lift's matrix Fourier coefficient.

    Entry (k, h) = conj(om_psi[k]) * om_f[h]; the matrix has rank at most one.
    """
    return np.outer(np.conj(om_psi), om_f)


# ---------------------------------------------------------------------------
# induction-reduction equivalence


def induction_matrix(N: int) -> np.ndarray:
    """Permutation A mapping the tensor basis v(h, h-k) to block k, component h."""
    A = np.zeros((N * N, N * N))
    for k in range(N):
        for h in range(N):
            A[k * N + h, h * N + (h - k) % N] = 1.0
    return A


def induction_apply(M: np.ndarray) -> np.ndarray:
    """Conjugate an N^2 x N^2 matrix by the induction permutation: A M A^{-1}."""
    n2 = M.shape[0]
    N = int(round(np.sqrt(n2)))
    if M.shape != (N * N, N * N):
        raise ValueError("matrix must be square with side N^2")
    A = induction_matrix(N)
    return A @ M @ A.T


def as_blocks(M: np.ndarray, N: int) -> np.ndarray:
    """View an N^2 x N^2 matrix as (k, l, i, j) blocks of size N x N."""
    return M.reshape(N, N, N, N).transpose(0, 2, 1, 3)


def tensor_ft_from_blocks(blocks: np.ndarray) -> np.ndarray:
    """Rebuild the tensor-representation Fourier coefficient from its reduction.

    ``blocks`` holds the N matrices at the summed frequencies; the result is
    A^{-1} (blockdiag blocks) A.
    """
    N = blocks.shape[1]
    diag = np.zeros((N * N, N * N), dtype=np.complex128)
    for k in range(N):
        diag[k * N : (k + 1) * N, k * N : (k + 1) * N] = blocks[k]
    A = induction_matrix(N)
    return A.T @ diag @ A


# ---------------------------------------------------------------------------
# genericity diagnostics


@dataclass(frozen=True)
class GenericityReport:
    freqs: np.ndarray         # (P, 2)
    generic: np.ndarray       # (P,) bool
    sv_ratio: np.ndarray      # (P,) min/max singular value of the orbit family
    fraction: float


def circulant(v: np.ndarray) -> np.ndarray:
    """Matrix whose column k is the shift S^k v, with (S v)_j = v_{j+1}."""
    N = v.shape[0]
    return np.stack([np.roll(v, -k) for k in range(N)], axis=1)


def _real_coords(v: np.ndarray) -> np.ndarray:
    """Real coordinates of a vector in the space {v : v(h) = conj(v(h + N/2))}."""
    half = v.shape[0] // 2
    return np.concatenate([v[:half].real, v[:half].imag])


def _genericity_from_omegas(omegas: np.ndarray, grid: HexGrid, threshold: float) -> GenericityReport:
    N = grid.N
    ratios = np.empty(grid.n_points)
    for p in range(grid.n_points):
        circ = circulant(omegas[p])
        if N % 2:
            svals = np.linalg.svd(circ, compute_uv=False)
        else:
            real_mat = np.stack([_real_coords(circ[:, k]) for k in range(N)], axis=1)
            svals = np.linalg.svd(real_mat, compute_uv=False)
        ratios[p] = 0.0 if svals[0] == 0 else svals[-1] / svals[0]
    generic = ratios > threshold
    return GenericityReport(grid.points, generic, ratios, float(generic.mean()))


def check_genericity(spec: Spectrum, grid: HexGrid, threshold: float = 1e-8) -> GenericityReport:
    """Rank diagnostics of the rotation-orbit family at every grid frequency.

    For odd N the family {S^k omega} must span C^N; for even N it can only
    span the conjugate-symmetric subspace, so the rank test runs in that
    space's real coordinates. Omega vectors are sampled bilinearly from the
    given spectrum; use :func:`check_genericity_exact` when interpolation
    noise would mask a rank deficiency.
    """
    orbit = grid.orbit_freqs()[: grid.n_points]
    omegas = np.stack([spectral.sample_many(spec, orbit[p]) for p in range(grid.n_points)])
    return _genericity_from_omegas(omegas, grid, threshold)


def check_genericity_exact(f: Raster, grid: HexGrid, threshold: float = 1e-8) -> GenericityReport:
    """Genericity diagnostics with omega vectors from direct transform sums."""
    orbit = grid.orbit_freqs()[: grid.n_points]
    omegas = spectral.dtft_exact(f, orbit)
    return _genericity_from_omegas(omegas, grid, threshold)

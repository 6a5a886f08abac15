"""2D Fourier analysis on rasters.

Conventions. The transform is the non-unitary Riemann sum

    F(lam) = sum_x f(x) * exp(-i <lam, x>) * spacing**2,

evaluated on a DC-centered lattice (DC at index (H//2, W//2)), so the DC bin
equals the image average. Off-lattice frequencies are obtained by bilinear
interpolation of the complex lattice values; rasters are zero-padded (factor 2
by default) before the FFT to keep that interpolation accurate.

The hexagonal frequency grid used by the descriptors is represented in integer
lattice coordinates (a, b) with basis (s, 0) and (s/2, s*sqrt(3)/2); rotation
by 60 degrees acts on these integers exactly, which makes closure of the grid
under the discrete rotation group an identity rather than an approximation.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import get_kernels
from .errors import OutOfBandError
from .imagecore import Raster

SQRT3_2 = np.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class Spectrum:
    """DC-centered complex spectrum of a raster."""

    values: np.ndarray                 # (H, W) complex, DC at (H//2, W//2)
    freq_step: tuple[float, float]     # (d_lambda_x, d_lambda_y)
    spacing: float
    origin: tuple[float, float]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __repr__(self):
        return (
            f"Spectrum({self.width}x{self.height}, "
            f"freq_step=({self.freq_step[0]:g}, {self.freq_step[1]:g}))"
        )

    def lattice_freqs(self) -> tuple[np.ndarray, np.ndarray]:
        """1D arrays of lattice frequencies along x and y."""
        dlx, dly = self.freq_step
        lx = (np.arange(self.width) - self.width // 2) * dlx
        ly = (np.arange(self.height) - self.height // 2) * dly
        return lx, ly

    def float_indices(self, freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Fractional (column, row) lattice indices of frequencies, shape (..., 2)."""
        freqs = np.asarray(freqs, dtype=np.float64)
        u = freqs[..., 0] / self.freq_step[0] + self.width // 2
        v = freqs[..., 1] / self.freq_step[1] + self.height // 2
        return u, v


def spectrum_of_array(pixels: np.ndarray, spacing: float, origin, pad_factor: int = 1) -> Spectrum:
    """DC-centered spectrum of a (possibly complex) pixel array."""
    h, w = pixels.shape
    ph, pw = h * pad_factor, w * pad_factor
    pix = np.zeros((ph, pw), dtype=np.complex128 if np.iscomplexobj(pixels) else np.float64)
    pix[:h, :w] = pixels
    vals = np.fft.fftshift(np.fft.fft2(pix)) * spacing**2
    dlx = 2 * np.pi / (pw * spacing)
    dly = 2 * np.pi / (ph * spacing)
    ox, oy = origin
    if ox != 0.0 or oy != 0.0:
        lx = (np.arange(pw) - pw // 2) * dlx
        ly = (np.arange(ph) - ph // 2) * dly
        vals *= np.exp(-1j * oy * ly)[:, None] * np.exp(-1j * ox * lx)[None, :]
    return Spectrum(vals, (dlx, dly), spacing, (ox, oy))


def dft2_shifted(f: Raster, pad_factor: int = 2) -> Spectrum:
    """Compute the DC-centered spectrum of a raster.

    ``pad_factor`` zero-pads the pixel array (appending zeros, which leaves the
    transform values unchanged) so the frequency lattice is refined by the same
    factor.
    """
    return spectrum_of_array(f.pixels, f.spacing, f.origin, pad_factor)


def invert_spectrum_complex(spec: Spectrum) -> np.ndarray:
    """Invert a spectrum to its complex pixel array (no realness assumption)."""
    vals = spec.values
    h, w = vals.shape
    ox, oy = spec.origin
    if ox != 0.0 or oy != 0.0:
        lx = (np.arange(w) - w // 2) * spec.freq_step[0]
        ly = (np.arange(h) - h // 2) * spec.freq_step[1]
        vals = vals * np.exp(1j * oy * ly)[:, None] * np.exp(1j * ox * lx)[None, :]
    return np.fft.ifft2(np.fft.ifftshift(vals)) / spec.spacing**2


def spectrum_to_raster(spec: Spectrum, shape: tuple[int, int] | None = None) -> Raster:
    """Invert :func:`dft2_shifted`, cropping back to ``shape`` if given."""
    pix = invert_spectrum_complex(spec).real
    if shape is not None:
        pix = pix[: shape[0], : shape[1]]
    return Raster(pix, spacing=spec.spacing, origin=spec.origin)


def rotate_freq(lam, k: int, N: int) -> np.ndarray:
    """Rotate a frequency counterclockwise by 2*pi*k/N."""
    ang = 2 * np.pi * k / N
    c, s = np.cos(ang), np.sin(ang)
    lam = np.asarray(lam, dtype=np.float64)
    return np.array([c * lam[0] - s * lam[1], s * lam[0] + c * lam[1]])


def _check_in_band(spec: Spectrum, u: np.ndarray, v: np.ndarray) -> None:
    if np.any(u < 0) or np.any(u > spec.width - 1) or np.any(v < 0) or np.any(v > spec.height - 1):
        raise OutOfBandError("frequency outside the representable band")


def sample_many(spec: Spectrum, freqs: np.ndarray) -> np.ndarray:
    """Bilinear samples of the spectrum at frequencies of shape (..., 2)."""
    u, v = spec.float_indices(freqs)
    _check_in_band(spec, u, v)
    shape = u.shape
    out = get_kernels().sample_bilinear(spec.values, u.ravel(), v.ravel())
    return out.reshape(shape)


def sample(spec: Spectrum, lam) -> complex:
    """Bilinear sample of the spectrum at a single frequency."""
    return complex(sample_many(spec, np.asarray(lam, dtype=np.float64)))


def omega(spec: Spectrum, lam, N: int) -> np.ndarray:
    """The N-vector of spectrum samples along the rotation orbit of ``lam``.

    Entry k is the sample at the frequency rotated by -2*pi*k/N.
    """
    freqs = np.stack([rotate_freq(lam, -k, N) for k in range(N)])
    return sample_many(spec, freqs)


def center_spectrally(spec: Spectrum, c) -> Spectrum:
    """Translate the underlying image so the point ``c`` moves to the origin.

    Multiplies the lattice value at frequency lam by exp(+i <lam, c>); applied
    with c equal to the intensity barycenter this centers the image.
    """
    cx, cy = float(c[0]), float(c[1])
    if cx == 0.0 and cy == 0.0:
        return spec
    lx, ly = spec.lattice_freqs()
    phase = np.exp(1j * cy * ly)[:, None] * np.exp(1j * cx * lx)[None, :]
    return Spectrum(spec.values * phase, spec.freq_step, spec.spacing, spec.origin)


def dtft_exact(f: Raster, freqs: np.ndarray) -> np.ndarray:
    """Direct evaluation of the transform at frequencies of shape (..., 2).

    Brute-force reference for :func:`sample`; cost is O(pixels) per frequency.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    flat = freqs.reshape(-1, 2)
    xs, ys = f.coords()
    phases = np.exp(-1j * (np.multiply.outer(flat[:, 0], xs) + np.multiply.outer(flat[:, 1], ys)))
    vals = phases.reshape(flat.shape[0], -1) @ f.pixels.ravel() * f.spacing**2
    return vals.reshape(freqs.shape[:-1])


# ---------------------------------------------------------------------------
# hexagonal frequency grid

# counterclockwise rotation by 60 degrees in integer lattice coordinates
def _rot60(coords: np.ndarray) -> np.ndarray:
    a, b = coords[..., 0], coords[..., 1]
    return np.stack([-b, a + b], axis=-1)


def _rot60_inv(coords: np.ndarray) -> np.ndarray:
    a, b = coords[..., 0], coords[..., 1]
    return np.stack([a + b, -a], axis=-1)


def rotate_coords(coords: np.ndarray, k: int, N: int) -> np.ndarray:
    """Rotate integer lattice coordinates by 2*pi*k/N (N must divide 6)."""
    if 6 % N:
        raise ValueError("hexagonal lattice closure requires N in {1, 2, 3, 6}")
    step = (k * (6 // N)) % 6
    out = np.asarray(coords)
    for _ in range(step):
        out = _rot60(out)
    return out


def _sextant(coords: np.ndarray) -> np.ndarray:
    """Index in 0..5 of the 60-degree sector containing each nonzero point."""
    out = np.full(coords.shape[:-1], -1, dtype=np.int64)
    cur = np.asarray(coords)
    for s in range(6):
        hit = (cur[..., 0] >= 1) & (cur[..., 1] >= 0) & (out < 0)
        out[hit] = s
        cur = _rot60_inv(cur)
    return out


def coords_to_freqs(coords: np.ndarray, step: float) -> np.ndarray:
    """Map integer lattice coordinates to frequencies."""
    a = coords[..., 0].astype(np.float64)
    b = coords[..., 1].astype(np.float64)
    return np.stack([(a + 0.5 * b) * step, SQRT3_2 * b * step], axis=-1)


def _in_window(coords: np.ndarray, window: int) -> np.ndarray:
    """Exact integer test for |lambda_x| <= window/2 * step and same for y."""
    a, b = coords[..., 0], coords[..., 1]
    return (np.abs(2 * a + b) <= window) & (3 * b * b <= window * window)


@dataclass(frozen=True)
class HexGrid:
    """Deterministic enumeration of descriptor frequencies and frequency pairs.

    ``coords`` are integer lattice coordinates of the slice points (one per
    rotation orbit, polar angle in [0, 2*pi/N), radius > 0), sorted by
    (radius, angle). ``pairs`` are index pairs (i <= j) whose frequency sum
    stays inside the window, sorted lexicographically. The frequency table
    appends the unique pair sums after the points so that omega vectors for
    points and sums can be sampled in one batch.
    """

    N: int
    window: int
    step: float
    coords: np.ndarray            # (P, 2) int
    points: np.ndarray            # (P, 2) float
    pairs: np.ndarray             # (M, 2) int indices into points
    table_coords: np.ndarray      # (F, 2) int: point coords then unique sum coords
    pair_sum_index: np.ndarray    # (M,) int indices into the table
    manifest_hash: str

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]

    def orbit_freqs(self) -> np.ndarray:
        """Frequencies R_{-k} lam for every table entry, shape (F, N, 2).

        Rotations act on integer coordinates, so the orbit lies on the lattice
        exactly.
        """
        orbits = np.stack(
            [rotate_coords(self.table_coords, -k, self.N) for k in range(self.N)], axis=1
        )
        return coords_to_freqs(orbits, self.step)

    def manifest_csv(self) -> bytes:
        """Canonical CSV listing points then pairs; the manifest hash covers these bytes."""
        buf = io.StringIO()
        buf.write("index,lambda_x,lambda_y\n")
        for i, (lx, ly) in enumerate(self.points):
            buf.write(f"{i},{lx:.17g},{ly:.17g}\n")
        buf.write("pair,i,j\n")
        for p, (i, j) in enumerate(self.pairs):
            buf.write(f"{p},{i},{j}\n")
        return buf.getvalue().encode()


def build_hex_grid(N: int = 6, window: int = 16, step: float = 1.0) -> HexGrid:
    """Enumerate the hexagonal grid inside the low-frequency window.

    ``window`` is the full width of the frequency window in units of ``step``:
    points satisfy |lambda_{x,y}| <= window/2 * step. One representative per
    rotation orbit is kept (sector angle in [0, 2*pi/N), radius > 0).
    """
    if 6 % N:
        raise ValueError("hexagonal lattice closure requires N in {1, 2, 3, 6}")
    if window < 4:
        raise ValueError("window too small")
    half = window // 2 + 1
    a, b = np.meshgrid(np.arange(-half, half + 1), np.arange(-half, half + 1), indexing="ij")
    coords = np.stack([a.ravel(), b.ravel()], axis=-1)
    coords = coords[np.any(coords != 0, axis=-1)]
    coords = coords[_in_window(coords, window)]
    sector = _sextant(coords) < (6 // N)
    coords = coords[sector]
    if coords.size == 0:
        raise ValueError("empty hexagonal grid")

    radius2 = coords[:, 0] ** 2 + coords[:, 0] * coords[:, 1] + coords[:, 1] ** 2
    freqs = coords_to_freqs(coords, step)
    angle = np.arctan2(freqs[:, 1], freqs[:, 0])
    order = np.lexsort((angle, radius2))
    coords = coords[order]
    points = coords_to_freqs(coords, step)

    ii, jj = np.triu_indices(coords.shape[0])
    sums = coords[ii] + coords[jj]
    keep = _in_window(sums, window)
    pairs = np.stack([ii[keep], jj[keep]], axis=-1)
    sums = sums[keep]

    # frequency table: points, then unique sums not already present as points
    key_point = {tuple(c): idx for idx, c in enumerate(coords)}
    table = list(map(tuple, coords))
    sum_index = np.empty(pairs.shape[0], dtype=np.int64)
    seen = dict(key_point)
    for m, c in enumerate(map(tuple, sums)):
        if c not in seen:
            seen[c] = len(table)
            table.append(c)
        sum_index[m] = seen[c]
    table_coords = np.array(table, dtype=np.int64)

    grid = HexGrid(
        N=N,
        window=window,
        step=float(step),
        coords=coords,
        points=points,
        pairs=pairs,
        table_coords=table_coords,
        pair_sum_index=sum_index,
        manifest_hash="",
    )
    digest = hashlib.sha256(grid.manifest_csv()).hexdigest()
    object.__setattr__(grid, "manifest_hash", digest)
    return grid


@lru_cache(maxsize=8)
def default_grid(N: int, window: int, step: float) -> HexGrid:
    """Cached grid construction (grids are immutable)."""
    return build_hex_grid(N, window, step)

"""Moment-based comparison descriptors: Hu moments, Zernike moments, and the
analytical Fourier-Mellin transform (AFMT).

All three operate about the intensity barycenter so that translation is
quotiented out; rotation invariance is exact in the continuum and holds to
resampling accuracy on rasters.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import ZeroAverageError
from .imagecore import Raster, average, barycenter, sample_bilinear_pixels


@dataclass(frozen=True)
class MomentSet:
    raw: np.ndarray          # m[p, q] up to order 3
    central: np.ndarray      # u[p, q]
    normalized: np.ndarray   # v[p, q] = u[p, q] / u00^(1 + (p+q)/2)
    hu: np.ndarray           # 7 invariants


@dataclass(frozen=True)
class ZernikeSet:
    orders: list[tuple[int, int]]    # (m, n) with |n| <= m, m - |n| even
    values: np.ndarray               # complex moments, one per order
    center: np.ndarray               # disk center (continuous coordinates)
    radius: float


@dataclass(frozen=True)
class AfmtSet:
    u_values: np.ndarray             # integer angular orders
    v_values: np.ndarray             # real radial frequencies
    values: np.ndarray               # complex M[u, v]
    sigma: float


def _moments_up_to(f: Raster, order: int, center=(0.0, 0.0)) -> np.ndarray:
    xs, ys = f.coords()
    xs = xs - center[0]
    ys = ys - center[1]
    sp2 = f.spacing**2
    out = np.empty((order + 1, order + 1))
    xp = [np.ones_like(xs)]
    yq = [np.ones_like(ys)]
    for _ in range(order):
        xp.append(xp[-1] * xs)
        yq.append(yq[-1] * ys)
    for p in range(order + 1):
        for q in range(order + 1):
            out[p, q] = float((xp[p] * yq[q] * f.pixels).sum() * sp2)
    return out


def hu_moments(f: Raster) -> MomentSet:
    """Raw, central, normalized moments up to order 3 and the 7 Hu invariants."""
    if abs(f.pixels.sum()) < 1e-12 * f.pixels.size * 255.0:
        raise ZeroAverageError("moments undefined for zero-average image")
    raw = _moments_up_to(f, 3)
    c = barycenter(f)
    u = _moments_up_to(f, 3, center=(c[0], c[1]))
    v = np.zeros_like(u)
    for p in range(4):
        for q in range(4):
            v[p, q] = u[p, q] / u[0, 0] ** (1 + (p + q) / 2)
    n20, n02, n11 = v[2, 0], v[0, 2], v[1, 1]
    n30, n03, n21, n12 = v[3, 0], v[0, 3], v[2, 1], v[1, 2]
    hu = np.array(
        [
            n20 + n02,
            (n20 - n02) ** 2 + 4 * n11**2,
            (n30 - 3 * n12) ** 2 + (3 * n21 - n03) ** 2,
            (n30 + n12) ** 2 + (n21 + n03) ** 2,
            (n30 - 3 * n12) * (n30 + n12) * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
            + (3 * n21 - n03) * (n21 + n03) * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2),
            (n20 - n02) * ((n30 + n12) ** 2 - (n21 + n03) ** 2)
            + 4 * n11 * (n30 + n12) * (n21 + n03),
            (3 * n21 - n03) * (n30 + n12) * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
            - (n30 - 3 * n12) * (n21 + n03) * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2),
        ]
    )
    return MomentSet(raw, u, v, hu)


def hu_features(f: Raster) -> np.ndarray:
    """Signed log-magnitude encoding of the Hu invariants, for classifier use."""
    hu = hu_moments(f).hu
    return np.sign(hu) * np.log10(np.abs(hu) + 1e-30)


def _zernike_radial(m: int, n: int, r: np.ndarray) -> np.ndarray:
    n = abs(n)
    out = np.zeros_like(r)
    for s in range((m - n) // 2 + 1):
        coeff = (
            (-1) ** s
            * factorial(m - s)
            / (factorial(s) * factorial((m + n) // 2 - s) * factorial((m - n) // 2 - s))
        )
        out += coeff * r ** (m - 2 * s)
    return out


def zernike_orders(m_max: int) -> list[tuple[int, int]]:
    """(m, n) pairs with 0 <= m <= m_max, |n| <= m, m - |n| even."""
    return [(m, n) for m in range(m_max + 1) for n in range(-m, m + 1) if (m - abs(n)) % 2 == 0]


def zernike_moments(f: Raster, m_max: int = 8) -> ZernikeSet:
    """Zernike moments on the inscribed disk centered at the barycenter.

    Z_mn = (m+1)/pi * sum_{disk} I * conj(V_mn) * dA, with the disk mapped to
    the unit disk.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    c = barycenter(f)
    xs, ys = f.coords()
    ox, oy = f.origin
    # largest circle centered at the barycenter fully inside the raster
    radius = min(
        c[0] - (ox - 0.5 * f.spacing),
        (ox + (f.width - 0.5) * f.spacing) - c[0],
        c[1] - (oy - 0.5 * f.spacing),
        (oy + (f.height - 0.5) * f.spacing) - c[1],
    )
    if radius <= 0:
        raise ValueError("barycenter outside the raster; no inscribed disk")
    px = (xs - c[0]) / radius
    py = (ys - c[1]) / radius
    r = np.hypot(px, py)
    inside = r < 1.0
    r_in = r[inside]
    theta = np.arctan2(py[inside], px[inside])
    vals_in = f.pixels[inside]
    d_area = (f.spacing / radius) ** 2
    orders = zernike_orders(m_max)
    z = np.empty(len(orders), dtype=np.complex128)
    for idx, (m, n) in enumerate(orders):
        vmn = _zernike_radial(m, n, r_in) * np.exp(1j * n * theta)
        z[idx] = (m + 1) / np.pi * np.sum(vals_in * np.conj(vmn)) * d_area
    return ZernikeSet(orders, z, c, float(radius))


def zernike_features(f: Raster, m_max: int = 8) -> np.ndarray:
    """Rotation-invariant Zernike feature vector: the moment moduli."""
    return np.abs(zernike_moments(f, m_max).values)


def _polar_resample(f: Raster, n_theta: int, n_r: int, r_min_ratio: float = 1.0 / 256.0):
    """Log-polar bilinear resampling about the barycenter.

    Returns (samples[n_r, n_theta], log_r grid, theta grid, outer radius). The
    inner radius is a fixed fraction of the outer one so that rescaled images
    are truncated proportionally.
    """
    c = barycenter(f)
    ox, oy = f.origin
    radius = min(
        c[0] - (ox - 0.5 * f.spacing),
        (ox + (f.width - 0.5) * f.spacing) - c[0],
        c[1] - (oy - 0.5 * f.spacing),
        (oy + (f.height - 0.5) * f.spacing) - c[1],
    )
    if radius <= 0:
        raise ValueError("barycenter outside the raster")
    s_grid = np.linspace(np.log(radius * r_min_ratio), np.log(radius), n_r)
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    rr = np.exp(s_grid)[:, None]
    tt = theta[None, :]
    px = (c[0] + rr * np.cos(tt) - ox) / f.spacing
    py = (c[1] + rr * np.sin(tt) - oy) / f.spacing
    samples = sample_bilinear_pixels(f.pixels, px, py)
    return samples, s_grid, theta, radius


def afmt(
    f: Raster,
    sigma: float = 0.5,
    u_max: int = 4,
    v_grid: np.ndarray | None = None,
    n_theta: int = 256,
    n_r: int = 128,
) -> AfmtSet:
    """Analytical Fourier-Mellin transform of the image about its barycenter.

    M(u, v) = 1/(2 pi) * integral of I(r, theta) r^(sigma - i v) e^(-i u theta)
    dr/r dtheta, integrated on a log-polar grid.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if abs(f.pixels.sum()) < 1e-12 * f.pixels.size * 255.0:
        raise ZeroAverageError("AFMT undefined for zero-average image")
    if v_grid is None:
        v_grid = np.linspace(-4.0, 4.0, 9)
    samples, s_grid, theta, _ = _polar_resample(f, n_theta, n_r)
    ds = s_grid[1] - s_grid[0]
    dtheta = theta[1] - theta[0]
    u_values = np.arange(-u_max, u_max + 1)
    radial = samples * np.exp(sigma * s_grid)[:, None]           # (n_r, n_theta)
    ang = np.exp(-1j * np.outer(u_values, theta))                # (n_u, n_theta)
    by_angle = ang @ radial.T                                    # (n_u, n_r)
    mell = np.exp(-1j * np.outer(np.asarray(v_grid), s_grid))    # (n_v, n_r)
    vals = (by_angle @ mell.T) * ds * dtheta / (2 * np.pi)       # (n_u, n_v)
    return AfmtSet(u_values, np.asarray(v_grid, dtype=np.float64), vals, sigma)


def afmt_features(f: Raster, **kwargs) -> np.ndarray:
    """AFMT feature vector: moduli plus values normalized by M(0, 0) with the
    angular phase referenced to M(1, 0)."""
    res = afmt(f, **kwargs)
    m = res.values
    u0 = np.nonzero(res.u_values == 0)[0][0]
    v0 = np.nonzero(np.isclose(res.v_values, 0.0))[0]
    mods = np.abs(m).ravel()
    if v0.size == 0 or m[u0, v0[0]] == 0:
        return mods
    m00 = m[u0, v0[0]]
    ref = m[u0 + 1, v0[0]]
    ref_phase = ref / abs(ref) if abs(ref) > 1e-12 * abs(m00) else 1.0
    # rotation multiplies M(u, v) by exp(-i u alpha); referencing every phase
    # to the one of M(1, 0) cancels alpha
    comp = m * np.conj(ref_phase) ** res.u_values[:, None] / m00
    return np.concatenate([mods, comp.real.ravel(), comp.imag.ravel()])


def moment_features(f: Raster, kind: str) -> np.ndarray:
    """Dispatch for the moment-descriptor kinds."""
    kind = kind.upper()
    if kind == "HU":
        return hu_features(f)
    if kind == "ZERNIKE":
        return zernike_features(f)
    if kind == "AFMT":
        return afmt_features(f)
    raise ValueError(f"unknown moment kind {kind!r}")

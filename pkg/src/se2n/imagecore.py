"""Image handling: rasters, averages, barycenters, noise, datasets.

A raster is a real-valued grayscale image on a square pixel lattice together
with a mapping to continuous coordinates: pixel (ix, iy) sits at
``origin + (ix, iy) * spacing``. Images are treated as zero outside the
raster, so sums over pixels are Riemann approximations of plane integrals.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ZeroAverageError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601 luma


@dataclass(frozen=True)
class Raster:
    """Grayscale image with physical-coordinate mapping.

    ``pixels`` has shape (height, width), row-major, nominal range [0, 255].
    By default the coordinate origin sits at the raster center, which keeps
    image content near x = 0; spectra of such rasters vary slowly between
    frequency-lattice points, which is what makes their bilinear interpolation
    accurate.
    """

    pixels: np.ndarray
    spacing: float = 1.0
    origin: tuple[float, float] | None = None

    def __post_init__(self):
        pix = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if pix.ndim != 2:
            raise ValueError(f"pixels must be 2D, got shape {pix.shape}")
        if not np.all(np.isfinite(pix)):
            raise ValueError("pixel intensities must be finite")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "pixels", pix)
        if self.origin is None:
            h, w = pix.shape
            object.__setattr__(
                self,
                "origin",
                (-0.5 * (w - 1) * self.spacing, -0.5 * (h - 1) * self.spacing),
            )

    def __repr__(self):
        return (
            f"Raster({self.width}x{self.height}, spacing={self.spacing}, "
            f"origin=({self.origin[0]:g}, {self.origin[1]:g}))"
        )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Continuous (x, y) coordinates of every pixel, each shaped like ``pixels``."""
        ox, oy = self.origin
        xs = ox + self.spacing * np.arange(self.width)
        ys = oy + self.spacing * np.arange(self.height)
        return np.meshgrid(xs, ys, indexing="xy")


@dataclass(frozen=True)
class LabeledSample:
    raster: Raster
    class_id: int
    pose_tag: str | None = None

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError("class_id must be >= 0")


def to_grayscale(rgb, spacing: float = 1.0, origin=(0.0, 0.0)) -> Raster:
    """Convert a 3-channel image to a luma raster (0.299 R + 0.587 G + 0.114 B).

    Accepts an array of shape (H, W, 3) or a sequence of three (H, W) planes.
    """
    if isinstance(rgb, (list, tuple)):
        planes = [np.asarray(p, dtype=np.float64) for p in rgb]
        if len(planes) != 3 or any(p.shape != planes[0].shape for p in planes):
            raise ValueError("expected three channel planes of identical shape")
        arr = np.stack(planes, axis=-1)
    else:
        arr = np.asarray(rgb, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected shape (H, W, 3), got {arr.shape}")
    wr, wg, wb = GRAY_WEIGHTS
    gray = wr * arr[..., 0] + wg * arr[..., 1] + wb * arr[..., 2]
    return Raster(gray, spacing=spacing, origin=origin)


def average(f: Raster) -> float:
    """Integral of the image over the plane (pixel sum times spacing^2)."""
    return float(f.pixels.sum() * f.spacing**2)


def _check_nonzero_average(f: Raster) -> float:
    total = float(f.pixels.sum())
    if abs(total) < 1e-12 * f.pixels.size * 255.0:
        raise ZeroAverageError("image average is zero (or numerically negligible)")
    return total * f.spacing**2


def barycenter(f: Raster) -> np.ndarray:
    """Intensity barycenter in continuous coordinates, as array [cx, cy]."""
    avg = _check_nonzero_average(f)
    xs, ys = f.coords()
    sp2 = f.spacing**2
    cx = float((xs * f.pixels).sum() * sp2) / avg
    cy = float((ys * f.pixels).sum() * sp2) / avg
    return np.array([cx, cy])


def add_gaussian_noise(f: Raster, s_d: float, seed: int) -> Raster:
    """Add pixelwise N(0, s_d^2) noise on the 0-255 scale and clip to [0, 255]."""
    if s_d < 0:
        raise ValueError("noise standard deviation must be >= 0")
    if s_d == 0:
        return f
    rng = np.random.default_rng(seed)
    noisy = f.pixels + rng.normal(0.0, s_d, size=f.pixels.shape)
    return Raster(np.clip(noisy, 0.0, 255.0), spacing=f.spacing, origin=f.origin)


def sample_bilinear_pixels(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup of ``pixels`` at fractional pixel coordinates, zero outside."""
    h, w = pixels.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros(xs.shape, dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            if np.any(valid):
                out[valid] += wgt[valid] * pixels[yi[valid], xi[valid]]
    return out


def rotate_image(f: Raster, angle: float, center: np.ndarray | None = None) -> Raster:
    """Rotate image content counterclockwise by ``angle`` about ``center``.

    ``center`` is in continuous coordinates (default: intensity barycenter).
    Bilinear resampling, zero fill outside the source raster.
    """
    if center is None:
        center = barycenter(f)
    ox, oy = f.origin
    cx = (float(center[0]) - ox) / f.spacing
    cy = (float(center[1]) - oy) / f.spacing
    c, s = np.cos(angle), np.sin(angle)
    ix, iy = np.meshgrid(np.arange(f.width), np.arange(f.height), indexing="xy")
    dx = ix - cx
    dy = iy - cy
    # pull-back: source position is the target rotated by -angle
    sx = cx + c * dx + s * dy
    sy = cy - s * dx + c * dy
    return Raster(sample_bilinear_pixels(f.pixels, sx, sy), spacing=f.spacing, origin=f.origin)


def shift_raster(f: Raster, dx: int, dy: int) -> Raster:
    """Shift pixel content by integer offsets, filling with zeros."""
    out = np.zeros_like(f.pixels)
    h, w = f.pixels.shape
    ys_src = slice(max(0, -dy), min(h, h - dy))
    xs_src = slice(max(0, -dx), min(w, w - dx))
    ys_dst = slice(max(0, dy), min(h, h + dy))
    xs_dst = slice(max(0, dx), min(w, w + dx))
    out[ys_dst, xs_dst] = f.pixels[ys_src, xs_src]
    return Raster(out, spacing=f.spacing, origin=f.origin)


# ---------------------------------------------------------------------------
# synthetic dataset


@dataclass(frozen=True)
class _ShapeSpec:
    """Continuous geometry of one synthetic object, centered at its centroid."""

    vertices: np.ndarray          # (V, 2) closed polygon, centroid at origin
    bump_centers: np.ndarray      # (B, 2)
    bump_sigmas: np.ndarray       # (B,)
    bump_gains: np.ndarray        # (B,) signed intensity of Gaussian decorations
    fill: float


def _polygon_centroid(verts: np.ndarray) -> np.ndarray:
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def _random_shape(rng: np.random.Generator, radius: float) -> _ShapeSpec:
    nv = int(rng.integers(6, 12))
    angles = np.linspace(0.0, 2 * np.pi, nv, endpoint=False)
    angles = angles + rng.uniform(-0.25, 0.25, nv) * (2 * np.pi / nv)
    radii = radius * (1.0 + rng.uniform(-0.45, 0.45, nv))
    verts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    verts = verts - _polygon_centroid(verts)
    nb = int(rng.integers(2, 5))
    centers = rng.uniform(-0.5, 0.5, (nb, 2)) * radius
    sigmas = rng.uniform(0.08, 0.22, nb) * radius
    gains = rng.uniform(-140.0, 120.0, nb)
    fill = float(rng.uniform(150.0, 230.0))
    return _ShapeSpec(verts, centers, sigmas, gains, fill)


def _point_in_polygon(px: np.ndarray, py: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over points."""
    inside = np.zeros(px.shape, dtype=bool)
    x0, y0 = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for ex0, ey0, ex1, ey1 in zip(x0, y0, x1, y1):
        crosses = (ey0 > py) != (ey1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ex0 + (py - ey0) * (ex1 - ex0) / (ey1 - ey0)
        inside ^= crosses & (px < xint)
    return inside


def _render_shape(shape: _ShapeSpec, theta: float, size: int, supersample: int = 4) -> Raster:
    """Render the shape rotated by ``theta`` about its centroid, centered in the frame.

    Coverage is estimated on a ``supersample`` x ``supersample`` subpixel grid,
    which anti-aliases the polygon boundary.
    """
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    verts = shape.vertices @ rot.T
    bumps = shape.bump_centers @ rot.T

    center = (size - 1) / 2.0
    ss = supersample
    # whole-pixel window covering the polygon, so subpixel blocks stay aligned
    p0 = max(0, int(np.floor(verts.min() + center)) - 1)
    p1 = min(size, int(np.ceil(verts.max() + center)) + 2)
    pix = np.zeros((size, size), dtype=np.float64)
    if p1 > p0:
        n = p1 - p0
        sub = p0 + (np.arange(n * ss) + 0.5) / ss - 0.5 - center
        px, py = np.meshgrid(sub, sub, indexing="xy")
        inside = _point_in_polygon(px.ravel(), py.ravel(), verts).reshape(px.shape)
        cover = np.add.reduceat(
            np.add.reduceat(inside.astype(np.float64), np.arange(0, n * ss, ss), axis=0),
            np.arange(0, n * ss, ss),
            axis=1,
        ) / (ss * ss)
        pix[p0:p1, p0:p1] = shape.fill * cover
    xs, ys = np.meshgrid(np.arange(size) - center, np.arange(size) - center, indexing="xy")
    mask = pix > 0
    for (bx, by), sig, gain in zip(bumps, shape.bump_sigmas, shape.bump_gains):
        bump = gain * np.exp(-((xs - bx) ** 2 + (ys - by) ** 2) / (2 * sig**2))
        pix += np.where(mask, bump, 0.0)
    return Raster(np.clip(pix, 0.0, 255.0))


def synth_dataset(num_classes: int, poses: int, size: int, seed: int) -> list[LabeledSample]:
    """Synthesize ``num_classes`` random shapes, each at ``poses`` in-plane rotations.

    Rotations are spaced 360/poses degrees about the shape centroid; rendering is
    deterministic given ``seed``.
    """
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if poses < 1:
        raise ValueError("need at least 1 pose")
    if size < 32:
        raise ValueError("size must be >= 32")
    samples = []
    for ci in range(num_classes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, ci]))
        shape = _random_shape(rng, radius=0.30 * size)
        for pi in range(poses):
            theta = 2 * np.pi * pi / poses
            raster = _render_shape(shape, theta, size)
            deg = 360.0 * pi / poses
            samples.append(LabeledSample(raster, ci, pose_tag=f"{deg:g}"))
    return samples


# ---------------------------------------------------------------------------
# file I/O


def read_pgm(path) -> Raster:
    """Read an 8-bit binary PGM (P5) file."""
    data = Path(path).read_bytes()
    # header tokens: magic, width, height, maxval; comments start with '#'
    tokens = []
    pos = 0
    while len(tokens) < 4:
        match = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(data, pos)
        if match is None:
            raise ValueError(f"truncated PGM header in {path}")
        pos = match.end()
        tok = match.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (P5) file: {path}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError("only 8-bit PGM supported")
    pos += 0 if data[pos - 1 : pos].isspace() else 1
    pix = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return Raster(pix.reshape(height, width).astype(np.float64))


def write_pgm(path, f: Raster) -> None:
    """Write a raster as an 8-bit binary PGM (P5) file, clipping to [0, 255]."""
    pix = np.clip(np.rint(f.pixels), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{f.width} {f.height}\n255\n".encode())
        fh.write(pix.tobytes())


def load_image(path) -> Raster:
    """Load a PGM or PNG image as a grayscale raster."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as img:
        if img.mode in ("RGB", "RGBA"):
            arr = np.asarray(img.convert("RGB"), dtype=np.float64)
            return to_grayscale(arr)
        return Raster(np.asarray(img.convert("L"), dtype=np.float64))


_COIL_NAME = re.compile(r"^obj(\d+)__(\d+)\.(png|pgm)$", re.IGNORECASE)


def load_coil_directory(path) -> list[LabeledSample]:
    """Load a directory of ``obj<i>__<deg>.png`` / ``.pgm`` files.

    Object index i (1-based) becomes class_id i-1; the degree becomes the pose
    tag. Files are visited in lexicographic order; malformed names are skipped
    with a warning.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {path}")
    samples = []
    skipped = 0
    for entry in sorted(root.iterdir()):
        if not entry.is_file() or entry.suffix.lower() not in (".png", ".pgm"):
            continue
        match = _COIL_NAME.match(entry.name)
        if match is None:
            skipped += 1
            warnings.warn(f"skipping file with unrecognized name: {entry.name}")
            continue
        obj, deg = int(match.group(1)), match.group(2)
        samples.append(LabeledSample(load_image(entry), obj - 1, pose_tag=deg))
    return samples


def write_dataset(samples: list[LabeledSample], out_dir, header: str = "") -> Path:
    """Write samples as PGM files plus a ``manifest.csv`` (filename,class_id,pose_deg)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for sample in samples:
        deg = sample.pose_tag if sample.pose_tag is not None else "0"
        name = f"obj{sample.class_id + 1}__{deg}.pgm"
        write_pgm(out / name, sample.raster)
        rows.append((name, sample.class_id, deg))
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["filename", "class_id", "pose_deg"])
        writer.writerows(rows)
    return manifest

"""Invariant descriptors built from rotation orbits of the image spectrum.

The atom of every descriptor is the omega vector of a frequency lam: the N
spectrum samples along the orbit of lam under the discrete rotations. Four
families are computed on the hexagonal grid:

- PS:  the squared norm of the omega vector (one real per grid point);
- BS:  triple products over frequency pairs (lam1, lam2, lam1 + lam2);
- RPS: inner products between an omega vector and its index-rotated copy,
       one complex value per (point, h);
- RBS: the pair triple products with the first argument index-rotated,
       one complex value per (ordered pair, h).

RPS and RBS require the spectrum to be centered at the image barycenter
(translation is otherwise not quotiented out); PS and BS are translation
invariant as is. The cyclic family (N values per pair more than RBS) is kept
for comparison experiments only.

Matrix-valued counterparts of all four (products of group Fourier
coefficients) are provided as oracles; the fast formulas above must equal
their scalar factors.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import group, spectral
from ._backend import get_kernels
from .imagecore import LabeledSample, Raster, add_gaussian_noise, barycenter
from .spectral import HexGrid, Spectrum

SPECTRAL_KINDS = ("PS", "BS", "RPS", "RBS", "CYCLIC_BS")
MOMENT_KINDS = ("HU", "ZERNIKE", "AFMT")


def parse_kind(kind: str) -> tuple[str, ...]:
    """Split a composite kind such as 'RPS+BS' into its components."""
    parts = tuple(p.strip().upper() for p in kind.split("+"))
    for p in parts:
        if p not in SPECTRAL_KINDS + MOMENT_KINDS:
            raise ValueError(f"unknown descriptor kind {p!r}")
    return parts


@dataclass(frozen=True)
class DescriptorConfig:
    N: int = 6
    window: int = 16
    kinds: tuple[str, ...] = ("RBS",)
    complex_encoding: str = "re_im"      # or "modulus"
    center: bool = True
    pad_factor: int = 2

    def __post_init__(self):
        if self.complex_encoding not in ("re_im", "modulus"):
            raise ValueError("complex_encoding must be 're_im' or 'modulus'")
        object.__setattr__(self, "kinds", tuple(k.upper() for k in self.kinds))

    @property
    def kind_name(self) -> str:
        return "+".join(self.kinds)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    kind: str
    manifest_hash: str
    label: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# fast scalar formulas


def ps_fast(om: np.ndarray) -> float:
    """Squared norm of the omega vector."""
    return float(np.vdot(om, om).real)


def rps_fast(om_h: np.ndarray, om: np.ndarray) -> complex:
    """Inner product <omega(R_h lam), omega(lam)>, conjugating the first factor."""
    return complex(np.vdot(om_h, om))


def rbs_fast(om_h1: np.ndarray, om2: np.ndarray, om12: np.ndarray) -> complex:
    """Triple product sum_k om_h1[k] * om2[k] * conj(om12[k])."""
    return complex(np.sum(om_h1 * om2 * np.conj(om12)))


def bs_fast(om1: np.ndarray, om2: np.ndarray, om12: np.ndarray) -> complex:
    """Pair triple product; equals :func:`rbs_fast` with the unrotated first argument."""
    return rbs_fast(om1, om2, om12)


def cyclic_bs(spec: Spectrum, lam1, lam2, k: int, h: int, N: int) -> complex:
    """Cyclic-lift comparison quantity at rotation offsets (k, h)."""
    om1 = spectral.omega(spec, spectral.rotate_freq(lam1, h, N), N)
    om2 = spectral.omega(spec, spectral.rotate_freq(lam2, k, N), N)
    lam_sum = np.asarray(lam1, dtype=np.float64) + spectral.rotate_freq(lam2, h + k, N)
    om_s = spectral.omega(spec, lam_sum, N)
    return complex(np.sum(om1 * om2 * np.conj(om_s)))


# ---------------------------------------------------------------------------
# matrix-definition oracles


def ps_matrix(m: np.ndarray) -> np.ndarray:
    """Power-spectrum matrix M M*."""
    return m @ m.conj().T


def rps_matrix(m_h: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Rotational power-spectrum matrix M(R_h lam) M(lam)*."""
    return m_h @ m.conj().T


def bs_matrix(m1: np.ndarray, m2: np.ndarray, tensor_m: np.ndarray) -> np.ndarray:
    """Bispectrum matrix (M1 x M2) (tensor FT)*."""
    return np.kron(m1, m2) @ tensor_m.conj().T


def rbs_matrix(m_h1: np.ndarray, m2: np.ndarray, tensor_m: np.ndarray) -> np.ndarray:
    """Rotational bispectrum matrix (M(R_h lam1) x M(lam2)) (tensor FT)*."""
    return np.kron(m_h1, m2) @ tensor_m.conj().T


def scalar_factor(mat: np.ndarray, base: np.ndarray) -> complex:
    """Least-squares scalar c minimizing ||mat - c * base||_F."""
    denom = np.vdot(base, base)
    if denom == 0:
        raise ValueError("zero base matrix")
    return complex(np.vdot(base, mat) / denom)


# ---------------------------------------------------------------------------
# batch extraction on the hexagonal grid


def spectrum_for(f: Raster, config: DescriptorConfig) -> Spectrum:
    """Padded, DC-centered, optionally barycenter-centered spectrum of an image."""
    spec = spectral.dft2_shifted(f, pad_factor=config.pad_factor)
    if config.center:
        spec = spectral.center_spectrally(spec, barycenter(f))
    return spec


def grid_for(f: Raster, config: DescriptorConfig) -> HexGrid:
    """Hexagonal grid matching the padded spectrum of ``f`` (step = one padded bin)."""
    step = 2 * np.pi / (max(f.width, f.height) * config.pad_factor * f.spacing)
    return spectral.default_grid(config.N, config.window, step)


def omega_stack(spec: Spectrum, grid: HexGrid) -> np.ndarray:
    """Omega vectors for every grid table entry, shape (F, N)."""
    return spectral.sample_many(spec, grid.orbit_freqs())


def roll_stack(stack: np.ndarray, m: int) -> np.ndarray:
    """Omega stack of the image rotated by 2*pi*m/N (an exact index shift)."""
    return np.roll(stack, m, axis=1)


def ordered_pairs(grid: HexGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ordered pair enumeration (i, j, sum index), sorted lexicographically."""
    i, j = grid.pairs[:, 0], grid.pairs[:, 1]
    s = grid.pair_sum_index
    off = i != j
    ai = np.concatenate([i, j[off]])
    aj = np.concatenate([j, i[off]])
    asum = np.concatenate([s, s[off]])
    order = np.lexsort((aj, ai))
    return ai[order].astype(np.int64), aj[order].astype(np.int64), asum[order].astype(np.int64)


def cyclic_tables(grid: HexGrid) -> tuple[np.ndarray, np.ndarray]:
    """Extra lattice coordinates and (pair, c) sum indices for the cyclic family.

    Cyclic quantities need omega at lam_i + R_c lam_j for every c; sums beyond
    the base table are appended and indexed into the extended stack.
    """
    oi, oj, _ = ordered_pairs(grid)
    seen = {tuple(c): idx for idx, c in enumerate(grid.table_coords)}
    extra: list[tuple[int, int]] = []
    s_idx = np.empty((oi.shape[0], grid.N), dtype=np.int64)
    base = grid.table_coords
    for c in range(grid.N):
        rot = spectral.rotate_coords(base[: grid.n_points], c, grid.N)
        sums = base[oi] + rot[oj]
        for m, coord in enumerate(map(tuple, sums)):
            if coord not in seen:
                seen[coord] = base.shape[0] + len(extra)
                extra.append(coord)
            s_idx[m, c] = seen[coord]
    extra_arr = np.array(extra, dtype=np.int64).reshape(-1, 2)
    return extra_arr, s_idx


def _encode(values: np.ndarray, encoding: str) -> np.ndarray:
    flat = values.ravel()
    if encoding == "modulus":
        return np.abs(flat)
    out = np.empty(flat.size * 2, dtype=np.float64)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def features_from_stack(
    stack: np.ndarray,
    grid: HexGrid,
    config: DescriptorConfig,
    kinds: tuple[str, ...],
    ext_stack: np.ndarray | None = None,
    cyclic_sum_index: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Assemble per-kind feature arrays from an omega stack, in manifest order."""
    kern = get_kernels()
    out: dict[str, np.ndarray] = {}
    point_idx = np.arange(grid.n_points, dtype=np.int64)
    need_pairs = any(k in ("BS", "RBS", "CYCLIC_BS") for k in kinds)
    if need_pairs:
        oi, oj, osum = ordered_pairs(grid)
    for kind in kinds:
        if kind == "PS":
            out[kind] = kern.rotational_power(stack, point_idx)[:, 0].real.copy()
        elif kind == "RPS":
            out[kind] = _encode(kern.rotational_power(stack, point_idx), config.complex_encoding)
        elif kind == "BS":
            vals = kern.rotational_triple(
                stack,
                grid.pairs[:, 0].astype(np.int64),
                grid.pairs[:, 1].astype(np.int64),
                grid.pair_sum_index.astype(np.int64),
            )[:, 0]
            out[kind] = _encode(vals, config.complex_encoding)
        elif kind == "RBS":
            vals = kern.rotational_triple(stack, oi, oj, osum)
            out[kind] = _encode(vals, config.complex_encoding)
        elif kind == "CYCLIC_BS":
            if ext_stack is None or cyclic_sum_index is None:
                raise ValueError("cyclic features need the extended stack")
            full = np.concatenate([stack, ext_stack], axis=0)
            vals = kern.cyclic_triple(full, oi, oj, cyclic_sum_index)
            out[kind] = _encode(vals, config.complex_encoding)
        else:
            raise ValueError(f"not a spectral kind: {kind!r}")
    return out


def extract_many(
    f: Raster, grid: HexGrid, config: DescriptorConfig, kinds: tuple[str, ...] | None = None
) -> dict[str, FeatureVector]:
    """Extract several descriptor kinds from one image, sharing the omega stack."""
    kinds = tuple(k.upper() for k in (kinds or config.kinds))
    spectral_kinds = tuple(k for k in kinds if k in SPECTRAL_KINDS)
    moment_kinds = tuple(k for k in kinds if k in MOMENT_KINDS)
    unknown = set(kinds) - set(spectral_kinds) - set(moment_kinds)
    if unknown:
        raise ValueError(f"unknown kinds: {sorted(unknown)}")

    out: dict[str, FeatureVector] = {}
    if spectral_kinds:
        spec = spectrum_for(f, config)
        stack = omega_stack(spec, grid)
        ext_stack = cyc_idx = None
        if "CYCLIC_BS" in spectral_kinds:
            extra_coords, cyc_idx = cyclic_tables(grid)
            if extra_coords.size:
                orbits = np.stack(
                    [spectral.rotate_coords(extra_coords, -k, grid.N) for k in range(grid.N)],
                    axis=1,
                )
                ext_stack = spectral.sample_many(spec, spectral.coords_to_freqs(orbits, grid.step))
            else:
                ext_stack = np.zeros((0, grid.N), dtype=np.complex128)
        blocks = features_from_stack(stack, grid, config, spectral_kinds, ext_stack, cyc_idx)
        for kind in spectral_kinds:
            out[kind] = FeatureVector(blocks[kind], kind, grid.manifest_hash)
    if moment_kinds:
        from . import baselines

        for kind in moment_kinds:
            out[kind] = FeatureVector(baselines.moment_features(f, kind), kind, grid.manifest_hash)
    return out


def extract_features(f: Raster, grid: HexGrid, config: DescriptorConfig) -> FeatureVector:
    """Extract the configured descriptor kinds as one concatenated feature vector."""
    parts = extract_many(f, grid, config)
    values = np.concatenate([parts[k].values for k in config.kinds])
    return FeatureVector(values, config.kind_name, grid.manifest_hash)


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("SE2N_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def extract_dataset(
    samples: list[LabeledSample],
    grid: HexGrid,
    config: DescriptorConfig,
    kinds: tuple[str, ...] | None = None,
    threads: int | None = None,
    noise_sd: float = 0.0,
    noise_seed: int = 0,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Extract features for a dataset, in parallel, with deterministic ordering.

    Returns (per-kind feature matrices, labels). Optional Gaussian noise is
    applied per image with a seed derived from (noise_seed, index).
    """
    kinds = tuple(k.upper() for k in (kinds or config.kinds))

    def work(item):
        idx, sample = item
        raster = sample.raster
        if noise_sd > 0:
            seed = int(np.random.SeedSequence([noise_seed, idx]).generate_state(1)[0])
            raster = add_gaussian_noise(raster, noise_sd, seed)
        return extract_many(raster, grid, config, kinds)

    n = _thread_count(threads)
    if n > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(work, enumerate(samples)))
    else:
        results = [work(item) for item in enumerate(samples)]

    labels = np.array([s.class_id for s in samples], dtype=np.int64)
    mats = {k: np.stack([r[k].values for r in results]) for k in kinds}
    return mats, labels


def enumeration_report(grid: HexGrid, config: DescriptorConfig) -> dict[str, int]:
    """Counts of grid entities and per-kind quantities/features."""
    oi, _, _ = ordered_pairs(grid)
    enc = 2 if config.complex_encoding == "re_im" else 1
    n_ord = int(oi.shape[0])
    report = {
        "points": grid.n_points,
        "pairs": grid.n_pairs,
        "ordered_pairs": n_ord,
        "ps_quantities": grid.n_points,
        "rps_quantities": grid.n_points * grid.N,
        "bs_quantities": grid.n_pairs,
        "rbs_quantities": n_ord * grid.N,
        "cyclic_quantities": n_ord * grid.N * grid.N,
        "rbs_per_pair": grid.N,
        "cyclic_per_pair": grid.N * grid.N,
        "ps_features": grid.n_points,
        "rps_features": grid.n_points * grid.N * enc,
        "bs_features": grid.n_pairs * enc,
        "rbs_features": n_ord * grid.N * enc,
        "cyclic_features": n_ord * grid.N * grid.N * enc,
    }
    return report


# ---------------------------------------------------------------------------
# feature CSV files


def write_features(path, vectors: list[FeatureVector], header: str = "") -> None:
    """Write feature vectors as CSV: ``label,kind,manifest_hash,f0,f1,...``."""
    if not vectors:
        raise ValueError("no feature vectors to write")
    dim = vectors[0].values.size
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "kind", "manifest_hash"] + [f"f{i}" for i in range(dim)])
        for vec in vectors:
            if vec.values.size != dim:
                raise ValueError("inconsistent feature dimensions")
            label = "" if vec.label is None else str(vec.label)
            writer.writerow([label, vec.kind, vec.manifest_hash] + [f"{v:.17g}" for v in vec.values])


def read_features(path) -> tuple[np.ndarray, str, str, np.ndarray]:
    """Read a feature CSV; returns (labels, kind, manifest_hash, matrix)."""
    labels, rows = [], []
    kind = manifest = None
    with open(path, newline="") as fh:
        first = True
        for line in fh:
            if line.startswith("#"):
                continue
            row = next(csv.reader([line]))
            if first:
                first = False
                if row[:3] != ["label", "kind", "manifest_hash"]:
                    raise ValueError(f"not a feature CSV: {path}")
                continue
            labels.append(int(row[0]) if row[0] else -1)
            if kind is None:
                kind, manifest = row[1], row[2]
            elif (row[1], row[2]) != (kind, manifest):
                raise ValueError("mixed kinds or grid manifests in one feature file")
            rows.append(np.array(row[3:], dtype=np.float64))
    if not rows:
        raise ValueError(f"empty feature file: {path}")
    return np.array(labels, dtype=np.int64), kind, manifest, np.stack(rows)

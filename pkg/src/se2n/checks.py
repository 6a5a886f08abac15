"""Property suites validating the fast descriptor pipeline against the exact
group-theoretic machinery. Each suite returns rows (name, residual, tolerance,
passed); the CLI turns them into a CSV report and an exit code, and the test
suite asserts them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import descriptors, group, spectral
from .descriptors import DescriptorConfig
from .imagecore import Raster, rotate_image, shift_raster


@dataclass(frozen=True)
class CheckRow:
    suite: str
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def rel_err(got: np.ndarray, want: np.ndarray) -> float:
    got = np.asarray(got)
    want = np.asarray(want)
    denom = max(np.max(np.abs(want)), 1e-300)
    return float(np.max(np.abs(got - want)) / denom)


def random_blob_image(rng: np.random.Generator, size: int = 64, n_blobs: int = 5) -> Raster:
    """Smooth positive test image: a few Gaussian bumps well inside the frame."""
    c = (size - 1) / 2.0
    xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float), indexing="xy")
    pix = np.zeros((size, size))
    for _ in range(n_blobs):
        bx, by = c + rng.uniform(-size / 8, size / 8, 2)
        sig = rng.uniform(3.0, size / 12)
        amp = rng.uniform(40.0, 200.0)
        pix += amp * np.exp(-((xs - bx) ** 2 + (ys - by) ** 2) / (2 * sig**2))
    return Raster(pix)


def random_cortex(rng: np.random.Generator, N: int = 6, size: int = 16) -> group.CortexFunction:
    """Small smooth complex function on the group, for brute-force Haar sums."""
    c = (size - 1) / 2.0
    xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float), indexing="xy")
    slices = np.zeros((N, size, size), dtype=np.complex128)
    for k in range(N):
        for _ in range(3):
            bx, by = c + rng.uniform(-size / 8, size / 8, 2)
            sig = rng.uniform(1.2, max(1.8, size / 6))
            amp = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            slices[k] += amp * np.exp(-((xs - bx) ** 2 + (ys - by) ** 2) / (2 * sig**2))
    return group.CortexFunction(slices)


def _random_lam(rng: np.random.Generator, lo: float = 0.15, hi: float = 0.9) -> np.ndarray:
    r = rng.uniform(lo, hi)
    t = rng.uniform(0, 2 * np.pi)
    return np.array([r * np.cos(t), r * np.sin(t)])


# ---------------------------------------------------------------------------
# identity suite


def identities_suite(seed: int = 0, n_funcs: int = 20, N: int = 6) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    rows: list[CheckRow] = []

    # representation matrices: homomorphism and unitarity
    worst_h = worst_u = 0.0
    for _ in range(n_funcs):
        lam = _random_lam(rng)
        a = group.GroupElement(tuple(rng.uniform(-3, 3, 2)), int(rng.integers(0, N)), N)
        b = group.GroupElement(tuple(rng.uniform(-3, 3, 2)), int(rng.integers(0, N)), N)
        ta, tb = group.rep_matrix(lam, a), group.rep_matrix(lam, b)
        tab = group.rep_matrix(lam, group.group_mul(a, b))
        worst_h = max(worst_h, rel_err(ta @ tb, tab))
        worst_u = max(worst_u, float(np.max(np.abs(ta @ ta.conj().T - np.eye(N)))))
    rows.append(CheckRow("identities", "representation_homomorphism", worst_h, 1e-12))
    rows.append(CheckRow("identities", "representation_unitarity", worst_u, 1e-12))

    # induction permutation applied to random tensor products
    worst = 0.0
    for _ in range(n_funcs):
        P = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        Q = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        blocks = group.as_blocks(group.induction_apply(np.kron(P, Q)), N)
        i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        for k in range(N):
            for h in range(N):
                want = P * Q[(i - k) % N, (j - h) % N]
                worst = max(worst, rel_err(blocks[k, h], want))
    rows.append(CheckRow("identities", "tensor_product_blocks", worst, 1e-12))

    # reduction of the tensor-representation transform to a block diagonal
    worst_diag = worst_off = 0.0
    for _ in range(n_funcs):
        phi = random_cortex(rng, N=N, size=12)
        lam1, lam2 = _random_lam(rng), _random_lam(rng)
        lhs = group.induction_apply(group.tensor_ft_haar(phi, lam1, lam2))
        blocks = group.as_blocks(lhs, N)
        scale = float(np.max(np.abs(lhs)))
        for k in range(N):
            lam_sum = lam1 + spectral.rotate_freq(lam2, k, N)
            want = group.matrix_ft(phi, lam_sum)
            worst_diag = max(worst_diag, float(np.max(np.abs(blocks[k, k] - want))) / scale)
            for h in range(N):
                if h != k:
                    worst_off = max(worst_off, float(np.max(np.abs(blocks[k, h]))) / scale)
    rows.append(CheckRow("identities", "induction_reduction_diagonal", worst_diag, 1e-8))
    rows.append(CheckRow("identities", "induction_reduction_offdiag", worst_off, 1e-8))

    # rank-1 form of the lifted transform vs numerically integrated matrix FT
    psi = group.MotherWavelet()
    worst_eq = worst_rank = 0.0
    for _ in range(n_funcs):
        f = random_blob_image(rng, size=48)
        phi = group.lift(f, psi, N=N)
        on_canvas = Raster(_embed(f, phi), spacing=phi.spacing, origin=phi.origin)
        for _ in range(2):
            lam = _random_lam(rng, 0.2, 0.7)
            got = group.matrix_ft(phi, lam)
            orbit = np.stack([spectral.rotate_freq(lam, -k, N) for k in range(N)])
            om_f = spectral.dtft_exact(on_canvas, orbit)
            want = group.lift_ft_rank1(psi.omega(lam, N), om_f)
            worst_eq = max(worst_eq, rel_err(got, want))
            svals = np.linalg.svd(got, compute_uv=False)
            worst_rank = max(worst_rank, float(svals[1] / svals[0]))
    rows.append(CheckRow("identities", "lift_rank1_formula", worst_eq, 1e-6))
    rows.append(CheckRow("identities", "lift_rank_at_most_one", worst_rank, 1e-9))
    return rows


def _embed(f: Raster, phi: group.CortexFunction) -> np.ndarray:
    """Place the image pixels on the lift canvas (same coordinates)."""
    ch, cw = phi.slices.shape[1:]
    off_x = int(round((f.origin[0] - phi.origin[0]) / f.spacing))
    off_y = int(round((f.origin[1] - phi.origin[1]) / f.spacing))
    canvas = np.zeros((ch, cw))
    canvas[off_y : off_y + f.height, off_x : off_x + f.width] = f.pixels
    return canvas


# ---------------------------------------------------------------------------
# oracle suite: fast invariants vs matrix descriptors


def oracle_suite(seed: int = 0, n_tuples: int = 120, N: int = 6) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    f = random_blob_image(rng, size=64)
    config = DescriptorConfig(N=N, kinds=("RBS",))
    grid = descriptors.grid_for(f, config)
    spec = descriptors.spectrum_for(f, config)
    stack = descriptors.omega_stack(spec, grid)
    psi = group.MotherWavelet()
    orbit = grid.orbit_freqs()
    om_psi = np.stack([psi.hat(orbit[t]) for t in range(orbit.shape[0])])

    worst_ps = worst_rps = worst_bs = worst_rbs = 0.0
    n_half = max(1, n_tuples // 2)
    for _ in range(n_half):
        p = int(rng.integers(0, grid.n_points))
        h = int(rng.integers(0, N))
        om, ow = stack[p], om_psi[p]
        m = group.lift_ft_rank1(ow, om)
        got = descriptors.scalar_factor(descriptors.ps_matrix(m), np.outer(np.conj(ow), ow))
        worst_ps = max(worst_ps, rel_err(got, descriptors.ps_fast(om)))

        m_h = group.lift_ft_rank1(np.roll(ow, h), np.roll(om, h))
        base = np.outer(np.conj(np.roll(ow, h)), ow)
        got = descriptors.scalar_factor(descriptors.rps_matrix(m_h, m), base)
        want = np.conj(descriptors.rps_fast(np.roll(om, h), om))
        worst_rps = max(worst_rps, rel_err(got, want))

    oi, oj, osum = descriptors.ordered_pairs(grid)
    for _ in range(n_half):
        m_idx = int(rng.integers(0, oi.shape[0]))
        h = int(rng.integers(0, N))
        i, j, s = oi[m_idx], oj[m_idx], osum[m_idx]
        om1, om2, om12 = stack[i], stack[j], stack[s]
        ow1, ow2 = om_psi[i], om_psi[j]
        lam1 = grid.points[i]
        lam2 = grid.points[j]
        blocks = []
        for k in range(N):
            lam_sum = lam1 + spectral.rotate_freq(lam2, k, N)
            om_sum_k = spectral.omega(spec, lam_sum, N)
            blocks.append(group.lift_ft_rank1(psi.omega(lam_sum, N), om_sum_k))
        tensor_m = group.tensor_ft_from_blocks(np.stack(blocks))

        m1 = group.lift_ft_rank1(ow1, om1)
        m2 = group.lift_ft_rank1(ow2, om2)
        bs_blocks = group.as_blocks(
            group.induction_apply(descriptors.bs_matrix(m1, m2, tensor_m)), N
        )
        ow12 = psi.omega(lam1 + lam2, N)
        for k in range(N):
            base = np.outer(np.conj(ow1) * np.conj(np.roll(ow2, k)), ow12)
            got = descriptors.scalar_factor(bs_blocks[k, 0], base)
            worst_bs = max(worst_bs, rel_err(got, descriptors.bs_fast(om1, om2, om12)))

        m1h = group.lift_ft_rank1(np.roll(ow1, h), np.roll(om1, h))
        rbs_blocks = group.as_blocks(
            group.induction_apply(descriptors.rbs_matrix(m1h, m2, tensor_m)), N
        )
        want = descriptors.rbs_fast(np.roll(om1, h), om2, om12)
        for k in range(N):
            base = np.outer(np.conj(np.roll(ow1, h)) * np.conj(np.roll(ow2, k)), ow12)
            got = descriptors.scalar_factor(rbs_blocks[k, 0], base)
            worst_rbs = max(worst_rbs, rel_err(got, want))

    return [
        CheckRow("oracle", "power_spectrum_scalar", worst_ps, 1e-8),
        CheckRow("oracle", "rotational_power_scalar", worst_rps, 1e-8),
        CheckRow("oracle", "bispectrum_scalar", worst_bs, 1e-8),
        CheckRow("oracle", "rotational_bispectrum_scalar", worst_rbs, 1e-8),
    ]


# ---------------------------------------------------------------------------
# invariance suite


def _feature_concat(parts: dict[str, np.ndarray], kinds) -> np.ndarray:
    return np.concatenate([parts[k] for k in kinds])


def invariance_suite(seed: int = 0, N: int = 6) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    kinds = ("PS", "BS", "RPS", "RBS")
    config = DescriptorConfig(N=N, kinds=kinds)
    f = random_blob_image(rng, size=96)
    grid = descriptors.grid_for(f, config)
    spec = descriptors.spectrum_for(f, config)
    stack = descriptors.omega_stack(spec, grid)
    base = descriptors.features_from_stack(stack, grid, config, kinds)
    base_vec = _feature_concat(base, kinds)
    rows: list[CheckRow] = []

    # exact rotation applied as an index shift of every omega vector
    worst = 0.0
    for m in range(1, N):
        rolled = descriptors.features_from_stack(
            descriptors.roll_stack(stack, m), grid, config, kinds
        )
        worst = max(worst, rel_err(_feature_concat(rolled, kinds), base_vec))
    rows.append(CheckRow("invariance", "index_shift_rotation", worst, 1e-12))

    # h = 0 reductions
    rps = base["RPS"].reshape(grid.n_points, N, 2)
    red_ps = float(np.max(np.abs(rps[:, 0, 0] - base["PS"])))
    oi, oj, _ = descriptors.ordered_pairs(grid)
    rbs = base["RBS"].reshape(oi.shape[0], N, 2)
    pair_pos = {(int(a), int(b)): m for m, (a, b) in enumerate(zip(oi, oj))}
    bs = base["BS"].reshape(grid.n_pairs, 2)
    red_bs = 0.0
    for m, (a, b) in enumerate(grid.pairs):
        r = pair_pos[(int(a), int(b))]
        red_bs = max(red_bs, float(np.max(np.abs(rbs[r, 0] - bs[m]))))
    scale = float(np.max(np.abs(base_vec)))
    rows.append(CheckRow("invariance", "h0_reduction_ps", red_ps / scale, 1e-15))
    rows.append(CheckRow("invariance", "h0_reduction_bs", red_bs / scale, 1e-15))

    # resampled rotation by one grid angle
    rot = rotate_image(f, 2 * np.pi / N)
    rot_vec = descriptors.extract_features(rot, grid, config).values
    num = float(np.linalg.norm(rot_vec - base_vec))
    rows.append(
        CheckRow("invariance", "resampled_rotation", num / float(np.linalg.norm(base_vec)), 0.02)
    )

    # integer translation with centering
    sh = shift_raster(f, 5, -3)
    sh_vec = descriptors.extract_features(sh, grid, config).values
    num = float(np.linalg.norm(sh_vec - base_vec))
    rows.append(
        CheckRow("invariance", "integer_translation", num / float(np.linalg.norm(base_vec)), 1e-6)
    )
    return rows


# ---------------------------------------------------------------------------
# genericity suite


def genericity_suite(seed: int = 0, N: int = 6) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    config = DescriptorConfig(N=N)
    size = 64
    zero = Raster(np.zeros((size, size)))
    grid = descriptors.grid_for(zero, config)

    rep_zero = group.check_genericity_exact(zero, grid)
    c = (size - 1) / 2.0
    xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float), indexing="xy")
    radial = Raster(200.0 * np.exp(-((xs - c) ** 2 + (ys - c) ** 2) / (2 * 6.0**2)))
    rep_radial = group.check_genericity_exact(radial, grid)
    rep_smooth = group.check_genericity_exact(random_blob_image(rng, size=size), grid)

    return [
        CheckRow("genericity", "zero_image_fraction", rep_zero.fraction, 0.0),
        CheckRow("genericity", "radial_image_fraction", rep_radial.fraction, 0.0),
        CheckRow("genericity", "random_image_nongeneric_fraction", 1.0 - rep_smooth.fraction, 0.05),
    ]


def genericity_detail(seed: int = 0, N: int = 6) -> group.GenericityReport:
    """Per-frequency genericity diagnostics for the suite's random image."""
    rng = np.random.default_rng(seed)
    config = DescriptorConfig(N=N)
    smooth = random_blob_image(rng, size=64)
    grid = descriptors.grid_for(smooth, config)
    return group.check_genericity_exact(smooth, grid)


SUITES = {
    "identities": identities_suite,
    "oracle": oracle_suite,
    "invariance": invariance_suite,
    "genericity": genericity_suite,
}

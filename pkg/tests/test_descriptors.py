import numpy as np
import pytest

from conftest import compact_blob
from se2n import descriptors, group, spectral
from se2n.checks import random_blob_image
from se2n.descriptors import (
    DescriptorConfig,
    FeatureVector,
    bs_fast,
    cyclic_bs,
    cyclic_tables,
    enumeration_report,
    extract_dataset,
    extract_features,
    extract_many,
    ordered_pairs,
    parse_kind,
    ps_fast,
    rbs_fast,
    read_features,
    rps_fast,
    write_features,
)
from se2n.errors import OutOfBandError, ZeroAverageError
from se2n.imagecore import Raster, average, shift_raster
from se2n.spectral import omega, rotate_freq


@pytest.fixture(scope="module")
def setup():
    rng = np.random.default_rng(77)
    f = random_blob_image(rng, 64)
    config = DescriptorConfig(kinds=("PS", "BS", "RPS", "RBS"))
    grid = descriptors.grid_for(f, config)
    spec = descriptors.spectrum_for(f, config)
    stack = descriptors.omega_stack(spec, grid)
    return f, config, grid, spec, stack


class TestFastOps:
    def test_ps_zero(self):
        assert ps_fast(np.zeros(6, dtype=complex)) == 0.0

    def test_ps_constant_orbit(self):
        om = np.full(6, 3 - 4j)
        assert ps_fast(om) == pytest.approx(6 * 25.0)

    def test_rps_h0_is_ps(self, setup):
        _, _, grid, _, stack = setup
        for p in range(5):
            om = stack[p]
            assert rps_fast(om, om).real == ps_fast(om)
            assert abs(rps_fast(om, om).imag) <= 1e-12 * abs(ps_fast(om))

    def test_rps_radial_orbit(self):
        om = np.full(6, 2.0 + 0j)
        for h in range(6):
            assert rps_fast(np.roll(om, h), om) == pytest.approx(6 * 4.0)

    def test_bs_zero_factor(self):
        z = np.zeros(6, dtype=complex)
        om = np.arange(6) + 1j
        assert bs_fast(z, om, om) == 0

    def test_bs_swap_symmetric(self, setup):
        _, _, grid, spec, stack = setup
        i, j, s = (int(v[0]) for v in ordered_pairs(grid))
        assert bs_fast(stack[i], stack[j], stack[s]) == pytest.approx(
            bs_fast(stack[j], stack[i], stack[s])
        )

    def test_rbs_h0_is_bs(self, setup):
        _, _, grid, _, stack = setup
        oi, oj, osum = ordered_pairs(grid)
        for m in range(5):
            a, b, c = stack[oi[m]], stack[oj[m]], stack[osum[m]]
            assert rbs_fast(a, b, c) == bs_fast(a, b, c)

    def test_rbs_index_shift_stable(self, setup):
        _, _, grid, _, stack = setup
        oi, oj, osum = ordered_pairs(grid)
        m, h = 3, 2
        base = rbs_fast(np.roll(stack[oi[m]], h), stack[oj[m]], stack[osum[m]])
        for r in range(1, 6):
            rolled = descriptors.roll_stack(stack, r)
            got = rbs_fast(np.roll(rolled[oi[m]], h), rolled[oj[m]], rolled[osum[m]])
            assert got == pytest.approx(base, rel=1e-12)


class TestSmallFrequencyLimits:
    def test_rbs_approaches_cubed_average(self):
        f = compact_blob(64, 4.0, offsets=((0, 0), (3, -2)), amps=(150, 90))
        config = DescriptorConfig(kinds=("RBS",))
        spec = descriptors.spectrum_for(f, config)
        avg = average(f)
        lam1, lam2 = np.array([1e-3, 0.0]), np.array([0.7e-3, 0.6e-3])
        om_h1 = omega(spec, rotate_freq(lam1, 2, 6), 6)
        om2 = omega(spec, lam2, 6)
        om12 = omega(spec, lam1 + lam2, 6)
        val = rbs_fast(om_h1, om2, om12)
        assert abs(val - 6 * avg**3) <= 0.01 * abs(6 * avg**3)

    def test_ps_recovered_from_bs(self):
        f = compact_blob(64, 4.0, offsets=((0, 0), (-3, 1)), amps=(120, 100))
        config = DescriptorConfig(kinds=("PS",))
        grid = descriptors.grid_for(f, config)
        spec = descriptors.spectrum_for(f, config)
        avg = average(f)
        eps = np.array([1e-3, 0.0])
        om_eps = omega(spec, eps, 6)
        for p in range(8):
            lam = grid.points[p]
            om = omega(spec, lam, 6)
            om_sum = omega(spec, lam + eps, 6)
            recovered = bs_fast(om, om_eps, om_sum) / avg
            assert abs(recovered - ps_fast(om)) <= 1e-2 * ps_fast(om)


class TestCyclic:
    def test_zero_image(self):
        spec = descriptors.spectrum_for(
            Raster(np.ones((32, 32))), DescriptorConfig(center=False)
        )
        zero_spec = spectral.Spectrum(
            np.zeros_like(spec.values), spec.freq_step, spec.spacing, spec.origin
        )
        assert cyclic_bs(zero_spec, (0.1, 0), (0, 0.1), 1, 2, 6) == 0

    def test_h0_reduces_to_pair_product(self, setup):
        f, config, grid, spec, stack = setup
        lam1, lam2 = grid.points[2], grid.points[5]
        for k in range(6):
            got = cyclic_bs(spec, lam1, lam2, k, 0, 6)
            lam2r = rotate_freq(lam2, k, 6)
            want = bs_fast(
                omega(spec, lam1, 6),
                omega(spec, lam2r, 6),
                omega(spec, lam1 + lam2r, 6),
            )
            assert got == pytest.approx(want, rel=1e-12)

    def test_k0_h0_is_plain_pair_product(self, setup):
        f, config, grid, spec, stack = setup
        lam1, lam2 = grid.points[1], grid.points[4]
        want = bs_fast(
            omega(spec, lam1, 6), omega(spec, lam2, 6), omega(spec, lam1 + lam2, 6)
        )
        assert cyclic_bs(spec, lam1, lam2, 0, 0, 6) == pytest.approx(want, rel=1e-12)

    def test_quantity_count_is_n_times_rotational(self, setup):
        f, config, grid, _, _ = setup
        report = enumeration_report(grid, config)
        assert report["cyclic_per_pair"] == 6 * report["rbs_per_pair"]
        assert report["cyclic_quantities"] == 6 * report["rbs_quantities"]

    def test_batch_matches_scalar(self, setup):
        f, config, grid, spec, stack = setup
        extra, cyc_idx = cyclic_tables(grid)
        full = stack
        if extra.size:
            orbits = np.stack(
                [spectral.rotate_coords(extra, -k, 6) for k in range(6)], axis=1
            )
            full = np.concatenate(
                [stack, spectral.sample_many(spec, spectral.coords_to_freqs(orbits, grid.step))]
            )
        from se2n._backend import get_kernels

        vals = get_kernels().cyclic_triple(
            full, *[a for a in ordered_pairs(grid)[:2]], cyc_idx
        )
        oi, oj, _ = ordered_pairs(grid)
        for m in (0, 7, 30):
            for k, h in ((0, 0), (1, 2), (4, 5)):
                want = cyclic_bs(spec, grid.points[oi[m]], grid.points[oj[m]], k, h, 6)
                assert vals[m, k, h] == pytest.approx(want, rel=1e-9)


class TestExtract:
    def test_deterministic(self, setup):
        f, config, grid, _, _ = setup
        a = extract_features(f, grid, config)
        b = extract_features(f, grid, config)
        assert np.array_equal(a.values, b.values)

    def test_combined_kind_lengths_add(self, setup):
        f, _, grid, _, _ = setup
        combo = extract_features(f, grid, DescriptorConfig(kinds=("RPS", "BS")))
        rps = extract_features(f, grid, DescriptorConfig(kinds=("RPS",)))
        bs = extract_features(f, grid, DescriptorConfig(kinds=("BS",)))
        assert combo.kind == "RPS+BS"
        assert combo.values.size == rps.values.size + bs.values.size
        assert np.array_equal(combo.values, np.concatenate([rps.values, bs.values]))

    def test_translation_invariance(self, setup):
        f, config, grid, _, _ = setup
        base = extract_features(f, grid, config).values
        moved = extract_features(shift_raster(f, 4, -2), grid, config).values
        assert np.linalg.norm(moved - base) <= 1e-6 * np.linalg.norm(base)

    def test_modulus_encoding_half_length(self, setup):
        f, _, grid, _, _ = setup
        re_im = extract_features(f, grid, DescriptorConfig(kinds=("RBS",)))
        mod = extract_features(
            f, grid, DescriptorConfig(kinds=("RBS",), complex_encoding="modulus")
        )
        assert re_im.values.size == 2 * mod.values.size
        assert np.allclose(
            mod.values, np.hypot(re_im.values[0::2], re_im.values[1::2])
        )

    def test_zero_average_with_centering(self, setup):
        _, config, grid, _, _ = setup
        with pytest.raises(ZeroAverageError):
            extract_features(Raster(np.zeros((64, 64))), grid, config)

    def test_out_of_band_window(self):
        f = Raster(np.ones((8, 8)))
        config = DescriptorConfig(kinds=("PS",), center=False)
        big = spectral.build_hex_grid(6, 16, 2.0)
        with pytest.raises(OutOfBandError):
            extract_features(f, big, config)

    def test_moment_kinds_dispatch(self, setup):
        f, _, grid, _, _ = setup
        out = extract_many(f, grid, DescriptorConfig(kinds=("HU", "ZERNIKE")))
        assert out["HU"].values.size == 7
        assert out["ZERNIKE"].values.size == len(
            [(m, n) for m in range(9) for n in range(-m, m + 1) if (m - abs(n)) % 2 == 0]
        )

    def test_extract_dataset_order_and_threads(self, setup):
        f, config, grid, _, _ = setup
        from se2n.imagecore import LabeledSample

        samples = [
            LabeledSample(f, 0),
            LabeledSample(shift_raster(f, 2, 1), 1),
            LabeledSample(shift_raster(f, -3, 2), 0),
        ]
        serial, y1 = extract_dataset(samples, grid, config, threads=1)
        parallel, y2 = extract_dataset(samples, grid, config, threads=4)
        assert np.array_equal(y1, y2) and np.array_equal(y1, [0, 1, 0])
        for k in serial:
            assert np.array_equal(serial[k], parallel[k])

    def test_discrimination_of_distinct_images(self):
        config = DescriptorConfig(kinds=("RBS",))
        rng = np.random.default_rng(0)
        grid = None
        vecs = []
        for i in range(20):
            f = random_blob_image(np.random.default_rng(1000 + i), 64)
            if grid is None:
                grid = descriptors.grid_for(f, config)
            vecs.append(extract_features(f, grid, config).values)
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                d = np.linalg.norm(vecs[i] - vecs[j]) / np.linalg.norm(vecs[i])
                assert d >= 1e-3


class TestMatrixOracles:
    def test_ps_matrix_is_hermitian_psd(self, setup):
        _, _, grid, _, stack = setup
        psi = group.MotherWavelet()
        lam = grid.points[3]
        m = group.lift_ft_rank1(psi.omega(lam, 6), stack[3])
        ps = descriptors.ps_matrix(m)
        assert np.allclose(ps, ps.conj().T)
        evals = np.linalg.eigvalsh(ps)
        assert evals.min() >= -1e-9 * evals.max()

    def test_zero_function_zero_matrices(self):
        z = np.zeros((6, 6), dtype=complex)
        assert np.all(descriptors.ps_matrix(z) == 0)
        assert np.all(descriptors.bs_matrix(z, z, np.zeros((36, 36), dtype=complex)) == 0)


class TestKindParsing:
    def test_composite(self):
        assert parse_kind("RPS+BS") == ("RPS", "BS")
        assert parse_kind("rbs") == ("RBS",)

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_kind("XYZ")


class TestFeatureCsv:
    def test_roundtrip(self, tmp_path, setup):
        f, config, grid, _, _ = setup
        vec = extract_features(f, grid, config)
        rows = [
            FeatureVector(vec.values, vec.kind, vec.manifest_hash, label=3),
            FeatureVector(vec.values * 2, vec.kind, vec.manifest_hash, label=5),
        ]
        path = tmp_path / "feat.csv"
        write_features(path, rows, header="unit test")
        labels, kind, manifest, X = read_features(path)
        assert list(labels) == [3, 5]
        assert kind == vec.kind and manifest == grid.manifest_hash
        assert np.array_equal(X[0], vec.values)
        assert np.array_equal(X[1], vec.values * 2)

    def test_mixed_kinds_rejected(self, tmp_path):
        rows = [
            FeatureVector(np.array([1.0]), "PS", "aaa", label=0),
            FeatureVector(np.array([2.0]), "BS", "aaa", label=0),
        ]
        path = tmp_path / "bad.csv"
        write_features(path, rows)
        with pytest.raises(ValueError):
            read_features(path)

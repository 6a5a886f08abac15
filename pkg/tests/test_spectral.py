import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import compact_blob
from se2n import spectral
from se2n.errors import OutOfBandError
from se2n.imagecore import Raster, average, barycenter, shift_raster
from se2n.spectral import (
    build_hex_grid,
    center_spectrally,
    coords_to_freqs,
    dft2_shifted,
    dtft_exact,
    omega,
    rotate_coords,
    rotate_freq,
    sample,
    sample_many,
    spectrum_to_raster,
)

# frozen enumeration of the default grid (N=6, window=16, 128 px, pad 2)
GOLDEN_STEP = 2 * np.pi / 256
GOLDEN_POINTS = 55
GOLDEN_PAIRS = 272
GOLDEN_HASH = "27e3361da7e9c58e84036096e4e29b45c916058a738d984bebdb1502dcd51efb"


class TestDft:
    def test_zero_raster(self):
        spec = dft2_shifted(Raster(np.zeros((8, 8))))
        assert np.all(spec.values == 0)

    def test_constant_raster_dc_only(self):
        f = Raster(np.ones((8, 8)), origin=(0.0, 0.0))
        spec = dft2_shifted(f, pad_factor=1)
        dc = spec.values[4, 4]
        assert dc == pytest.approx(64.0)
        others = np.abs(spec.values).sum() - abs(dc)
        assert others <= 1e-12

    def test_dc_equals_average(self, blob_image):
        spec = dft2_shifted(blob_image)
        dc = spec.values[spec.height // 2, spec.width // 2]
        assert dc == pytest.approx(average(blob_image), rel=1e-12)

    def test_gaussian_closed_form(self):
        size, sig = 64, 3.0
        f = compact_blob(size, sig, amps=(1.0,))
        spec = dft2_shifted(f)
        lx, ly = spec.lattice_freqs()
        mx, my = np.meshgrid(lx, ly, indexing="xy")
        want = 2 * np.pi * sig**2 * np.exp(-(sig**2) * (mx**2 + my**2) / 2)
        err = np.max(np.abs(spec.values - want)) / np.max(np.abs(want))
        assert err <= 1e-6

    def test_parseval(self, blob_image):
        spec = dft2_shifted(blob_image)
        lhs = np.sum(blob_image.pixels**2) * blob_image.spacing**2
        rhs = np.sum(np.abs(spec.values) ** 2) * spec.freq_step[0] * spec.freq_step[1]
        assert lhs == pytest.approx(rhs / (2 * np.pi) ** 2, rel=1e-9)

    def test_inverse_roundtrip(self, blob_image):
        spec = dft2_shifted(blob_image)
        back = spectrum_to_raster(spec, shape=blob_image.pixels.shape)
        assert np.allclose(back.pixels, blob_image.pixels, atol=1e-10)

    def test_conjugate_symmetry_lattice(self, blob_image):
        spec = dft2_shifted(blob_image)
        h, w = spec.values.shape
        # mirror about the DC bin (skip the unpaired first row/column)
        core = spec.values[1:, 1:]
        assert np.allclose(core, np.conj(core[::-1, ::-1]), atol=1e-9 * np.abs(core).max())

    def test_conjugate_symmetry_off_grid(self, rng, blob_image):
        spec = dft2_shifted(blob_image)
        freqs = rng.uniform(-0.5, 0.5, (40, 2))
        a = sample_many(spec, freqs)
        b = sample_many(spec, -freqs)
        assert np.max(np.abs(b - np.conj(a))) <= 1e-12 * np.max(np.abs(a))


class TestSample:
    def test_lattice_point_exact(self, blob_image):
        spec = dft2_shifted(blob_image)
        lx, ly = spec.lattice_freqs()
        val = sample(spec, (lx[40], ly[70]))
        assert val == spec.values[70, 40]

    def test_midpoint_is_mean(self, blob_image):
        spec = dft2_shifted(blob_image)
        lx, ly = spec.lattice_freqs()
        lam = ((lx[40] + lx[41]) / 2, ly[70])
        want = (spec.values[70, 40] + spec.values[70, 41]) / 2
        assert sample(spec, lam) == pytest.approx(want, rel=1e-12)

    def test_against_direct_transform(self, rng):
        f = compact_blob(64, 4.0, offsets=((0, 0), (4, -3), (-4, 2)), amps=(90, 70, 110))
        spec = dft2_shifted(f)
        freqs = rng.uniform(-0.4, 0.4, (100, 2))
        approx = sample_many(spec, freqs)
        exact = dtft_exact(f, freqs)
        err = np.max(np.abs(approx - exact)) / np.max(np.abs(exact))
        assert err <= 0.02

    def test_out_of_band(self, blob_image):
        spec = dft2_shifted(blob_image)
        with pytest.raises(OutOfBandError):
            sample(spec, (2 * np.pi, 0.0))


class TestRotateFreq:
    def test_identity(self):
        assert rotate_freq((0.3, -0.2), 0, 6) == pytest.approx([0.3, -0.2])

    def test_sixth_turn(self):
        assert rotate_freq((1.0, 0.0), 1, 6) == pytest.approx([0.5, np.sqrt(3) / 2])

    def test_half_turn(self):
        assert rotate_freq((1.0, 0.0), 3, 6) == pytest.approx([-1.0, 0.0], abs=1e-15)

    @given(
        st.floats(-5, 5),
        st.floats(-5, 5),
        st.integers(0, 11),
        st.integers(1, 12),
    )
    @settings(max_examples=80, deadline=None)
    def test_roundtrip(self, lx, ly, k, n):
        lam = np.array([lx, ly])
        back = rotate_freq(rotate_freq(lam, k, n), n - k, n)
        assert np.max(np.abs(back - lam)) <= 1e-12


class TestOmega:
    def test_zero_image(self):
        spec = dft2_shifted(Raster(np.zeros((16, 16))))
        assert np.all(omega(spec, (0.1, 0.1), 6) == 0)

    def test_radial_image_equal_entries(self):
        f = compact_blob(64, 5.0)
        lam = (0.25, 0.1)
        om_exact = dtft_exact(f, np.stack([rotate_freq(lam, -k, 6) for k in range(6)]))
        assert np.max(np.abs(om_exact - om_exact[0])) <= 1e-9 * np.abs(om_exact[0])
        om = omega(dft2_shifted(f), lam, 6)
        assert np.max(np.abs(om - om[0])) <= 1e-2 * np.abs(om[0])

    def test_matches_direct_transform(self, rng, blob_image):
        spec = dft2_shifted(blob_image)
        lam = (0.21, -0.13)
        om = omega(spec, lam, 6)
        exact = dtft_exact(blob_image, np.stack([rotate_freq(lam, -k, 6) for k in range(6)]))
        assert np.max(np.abs(om - exact)) <= 0.02 * np.max(np.abs(exact))

    def test_even_order_conjugate_pairing(self, blob_image):
        om = omega(dft2_shifted(blob_image), (0.17, 0.06), 6)
        assert np.allclose(om[3:], np.conj(om[:3]), rtol=0, atol=1e-12 * np.abs(om).max())


class TestCentering:
    def test_zero_offset_identity(self, blob_image):
        spec = dft2_shifted(blob_image)
        assert center_spectrally(spec, (0.0, 0.0)) is spec

    def test_modulus_preserved(self, blob_image):
        spec = dft2_shifted(blob_image)
        cen = center_spectrally(spec, barycenter(blob_image))
        assert np.allclose(np.abs(cen.values), np.abs(spec.values), rtol=1e-12)

    def test_shift_then_center_matches(self):
        f = compact_blob(64, 3.0, offsets=((2.0, -1.0),), amps=(80.0,))
        g = shift_raster(f, 4, 6)
        ca = center_spectrally(dft2_shifted(f), barycenter(f))
        cb = center_spectrally(dft2_shifted(g), barycenter(g))
        scale = np.abs(ca.values).max()
        assert np.max(np.abs(ca.values - cb.values)) <= 1e-9 * scale

    def test_centered_barycenter_is_origin(self):
        f = compact_blob(64, 3.0, offsets=((1.3, -2.2),), amps=(120.0,))
        cen = center_spectrally(dft2_shifted(f), barycenter(f))
        back = spectrum_to_raster(cen)
        assert np.max(np.abs(barycenter(back))) <= 1e-9


class TestHexGrid:
    def test_golden_manifest(self):
        grid = build_hex_grid(6, 16, GOLDEN_STEP)
        assert grid.n_points == GOLDEN_POINTS
        assert grid.n_pairs == GOLDEN_PAIRS
        assert grid.manifest_hash == GOLDEN_HASH

    def test_rotation_closure_exact(self):
        grid = build_hex_grid(6, 16, 0.03)
        orbits = grid.orbit_freqs()
        lattice = {tuple(c) for c in grid.table_coords}
        for k in range(6):
            rot = rotate_coords(grid.table_coords, -k, 6)
            got = coords_to_freqs(rot, grid.step)
            assert np.array_equal(got, orbits[:, k])

    def test_slice_uniqueness(self):
        grid = build_hex_grid(6, 16, 1.0)
        seen = set(map(tuple, grid.coords))
        assert len(seen) == grid.n_points
        for k in range(1, 6):
            rotated = set(map(tuple, rotate_coords(grid.coords, k, 6)))
            assert not (rotated & seen)

    def test_points_in_sector(self):
        grid = build_hex_grid(6, 16, 1.0)
        angles = np.arctan2(grid.points[:, 1], grid.points[:, 0])
        radii = np.hypot(grid.points[:, 0], grid.points[:, 1])
        assert np.all(radii > 0)
        assert np.all(angles >= 0) and np.all(angles < np.pi / 3)

    def test_pair_sums_inside_window(self):
        grid = build_hex_grid(6, 16, 1.0)
        sums = grid.points[grid.pairs[:, 0]] + grid.points[grid.pairs[:, 1]]
        assert np.all(np.abs(sums) <= 8.0 + 1e-12)
        table = coords_to_freqs(grid.table_coords, grid.step)
        assert np.allclose(table[grid.pair_sum_index], sums)

    def test_deterministic(self):
        a = build_hex_grid(6, 16, 0.5)
        b = build_hex_grid(6, 16, 0.5)
        assert a.manifest_hash == b.manifest_hash
        assert np.array_equal(a.coords, b.coords)
        assert np.array_equal(a.pairs, b.pairs)

    def test_small_orders(self):
        for n in (1, 2, 3):
            grid = build_hex_grid(n, 8, 1.0)
            angles = np.arctan2(grid.points[:, 1], grid.points[:, 0]) % (2 * np.pi)
            assert np.all(angles < 2 * np.pi / n + 1e-12)

    def test_unsupported_order(self):
        with pytest.raises(ValueError):
            build_hex_grid(4, 16, 1.0)

    def test_window_too_small(self):
        with pytest.raises(ValueError):
            build_hex_grid(6, 2, 1.0)

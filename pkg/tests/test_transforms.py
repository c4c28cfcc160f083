import numpy as np
import pytest

from fmlab.errors import InvalidExponentError
from fmlab.fields import Grid, SampledField
from fmlab.transforms import fourier_forward, fourier_inverse, lp_norm, rearrangement

from oracles import lp_norm_quad


class TestFourierPair:
    def test_gaussian_self_transform(self):
        # the Gaussian exp(-pi x^2) is fixed by this transform convention;
        # cross-checked against quadrature below
        g = Grid(1, 16.0, 2048)
        fld = SampledField.from_function(g, lambda x: np.exp(-np.pi * x**2), "space")
        hat = fourier_forward(fld)
        xi = hat.grid.axis_coords()
        assert np.max(np.abs(hat.values - np.exp(-np.pi * xi**2))) < 1e-12

    def test_gaussian_transform_matches_quadrature(self):
        g = Grid(1, 16.0, 2048)
        fld = SampledField.from_function(g, lambda x: np.exp(-np.pi * x**2), "space")
        hat = fourier_forward(fld)
        xq, wq = np.polynomial.legendre.leggauss(400)
        xq, wq = 16.0 * xq, 16.0 * wq
        for xi0 in [0.0, 0.375, 1.5]:
            direct = np.sum(wq * np.exp(-np.pi * xq**2) * np.exp(-2j * np.pi * xq * xi0))
            j = int(round((xi0 + hat.grid.L) / hat.grid.h))
            assert hat.values[j] == pytest.approx(direct, abs=1e-12)

    def test_modulation_is_exact_index_shift(self, rng):
        g = Grid(1, 8.0, 128)
        base = rng.standard_normal(128) + 1j * rng.standard_normal(128)
        fld = SampledField(g, base, "space")
        hat = fourier_forward(fld).values
        shift_bins = 9
        omega0 = shift_bins * g.dual().h
        mod = SampledField(g, base * np.exp(2j * np.pi * g.axis_coords() * omega0), "space")
        hat_mod = fourier_forward(mod).values
        assert np.allclose(hat_mod, np.roll(hat, shift_bins), rtol=0, atol=1e-12 * np.max(np.abs(hat)))

    def test_plancherel(self, random_field_1d, random_field_2d):
        for fld in (random_field_1d, random_field_2d):
            hat = fourier_forward(fld)
            n2 = lp_norm(fld, 2)
            assert abs(n2 - lp_norm(hat, 2)) <= 1e-10 * n2

    def test_round_trip(self, random_field_1d, random_field_2d):
        for fld in (random_field_1d, random_field_2d):
            back = fourier_inverse(fourier_forward(fld))
            scale = np.max(np.abs(fld.values))
            assert np.max(np.abs(back.values - fld.values)) < 1e-12 * scale
            assert back.tag == "space"

    def test_single_bin_inversion(self):
        g = Grid(1, 4.0, 64)
        freq = g  # a frequency grid in its own right
        vals = np.zeros(64, dtype=complex)
        k0 = 41
        vals[k0] = 1.0
        fld = SampledField(freq, vals, "frequency")
        space = fourier_inverse(fld)
        omega0 = freq.axis_coords()[k0]
        x = space.grid.axis_coords()
        expected = np.exp(2j * np.pi * x * omega0) / (2.0 * space.grid.L)
        assert np.allclose(space.values, expected, atol=1e-14)

    def test_real_even_spectrum_gives_real_even_field(self):
        g = Grid(1, 8.0, 256)
        xi = g.axis_coords()
        fld = SampledField(g, np.exp(-np.abs(xi)) + 0j, "frequency")
        space = fourier_inverse(fld)
        peak = np.max(np.abs(space.values))
        assert np.max(np.abs(space.values.imag)) < 1e-12 * peak
        # evenness under j -> -j (mod M)
        flipped = np.roll(space.values[::-1], 1)
        assert np.allclose(space.values, flipped, atol=1e-12 * peak)

    def test_tag_enforcement(self, random_field_1d):
        with pytest.raises(ValueError):
            fourier_inverse(random_field_1d)
        with pytest.raises(ValueError):
            fourier_forward(fourier_forward(random_field_1d))


class TestLpNorm:
    def test_constant_on_unit_box(self):
        g = Grid(1, 1.0, 256)
        fld = SampledField(g, np.ones(256), "space")
        assert lp_norm(fld, 2) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_gaussian_l2_value(self):
        # ||exp(-pi x^2)||_2 = 2^{-1/4}; verified against Gauss quadrature
        g = Grid(1, 16.0, 4096)
        fld = SampledField.from_function(g, lambda x: np.exp(-np.pi * x**2), "space")
        oracle = lp_norm_quad(lambda x: np.exp(-np.pi * x**2), -16, 16, 2)
        assert lp_norm(fld, 2) == pytest.approx(2.0**-0.25, abs=1e-6)
        assert lp_norm(fld, 2) == pytest.approx(oracle, abs=1e-6)

    def test_infinity_norm(self, random_field_2d):
        assert lp_norm(random_field_2d, np.inf) == np.max(np.abs(random_field_2d.values))

    def test_absolute_homogeneity(self, random_field_1d):
        c = -2.75 + 1.5j
        scaled = random_field_1d.with_values(c * random_field_1d.values)
        for p in (1, 1.5, 2, 4, np.inf):
            assert lp_norm(scaled, p) == pytest.approx(abs(c) * lp_norm(random_field_1d, p), rel=1e-13)

    def test_rejects_p_below_one(self, random_field_1d):
        with pytest.raises(InvalidExponentError):
            lp_norm(random_field_1d, 0.5)


class TestRearrangement:
    def test_indicator_rearranges_to_indicator(self):
        g = Grid(1, 2.0, 256)
        x = g.axis_coords()
        fld = SampledField(g, ((x >= 0) & (x < 1)).astype(complex), "space")
        r = rearrangement(fld)
        assert r.value(0.5) == 1.0
        assert r.value(1.0 + g.h) == 0.0
        assert abs(r.lp_power_integral(1) - 1.0) <= g.h

    def test_permutation_invariance(self, rng, grid_1d):
        vals = rng.standard_normal(grid_1d.shape) + 1j * rng.standard_normal(grid_1d.shape)
        fld = SampledField(grid_1d, vals, "space")
        perm = SampledField(grid_1d, rng.permutation(vals), "space")
        assert np.array_equal(rearrangement(fld).levels, rearrangement(perm).levels)

    def test_equimeasurability(self, random_field_1d):
        r = rearrangement(random_field_1d)
        for p in (1.0, 2.0, 3.7):
            assert r.lp_power_integral(p) == pytest.approx(lp_norm(random_field_1d, p) ** p, rel=1e-13)

    def test_levels_nonincreasing(self, random_field_2d):
        levels = rearrangement(random_field_2d).levels
        assert np.all(np.diff(levels) <= 0)

import numpy as np
import pytest

from ghostfringe import (
    ComplexField,
    DoubleSlitSpec,
    ExperimentLayout,
    GridResolutionError,
    SpatialGrid,
    canonical_aperture_pair,
    sample_double_slit,
)


class TestSpatialGrid:
    def test_spacing_and_coordinates(self):
        g = SpatialGrid(window=10e-3, samples=1000)
        assert g.spacing == pytest.approx(10e-6)
        x = g.coordinates
        assert x.shape == (1000,)
        assert x[500] == 0.0  # origin on a sample for even N
        assert np.allclose(np.diff(x), g.spacing)

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            SpatialGrid(1e-3, 8)
        with pytest.raises(ValueError):
            SpatialGrid(-1e-3, 64)

    def test_index_of(self):
        g = SpatialGrid(10e-3, 1000)
        assert g.index_of(0.0) == 500
        assert g.coordinates[g.index_of(1e-3)] == pytest.approx(1e-3, abs=g.spacing / 2)
        with pytest.raises(ValueError):
            g.index_of(20e-3)


class TestComplexField:
    def test_length_must_match(self):
        g = SpatialGrid(1e-3, 64)
        with pytest.raises(ValueError):
            ComplexField(g, np.ones(32, dtype=complex))

    def test_power(self):
        g = SpatialGrid(1e-3, 64)
        f = ComplexField(g, np.full(64, 2.0 + 0j))
        assert f.power == pytest.approx(4.0 * 1e-3)
        assert f.power >= 0

    def test_rejects_nonfinite(self):
        g = SpatialGrid(1e-3, 64)
        amp = np.ones(64, dtype=complex)
        amp[3] = np.nan
        with pytest.raises(ValueError):
            ComplexField(g, amp)

    def test_amplitudes_read_only(self):
        g = SpatialGrid(1e-3, 64)
        f = ComplexField(g, np.ones(64, dtype=complex))
        with pytest.raises(ValueError):
            f.amplitudes[0] = 0


class TestExperimentLayout:
    def test_derived_distances_match_bench(self, layout):
        # L0 = 3.4 cm + 4.7 cm, L = 85.3 cm - 4.7 cm
        for arm in (1, 2):
            assert layout.source_to_aperture(arm) == pytest.approx(0.081, rel=1e-12)
            assert layout.aperture_to_detector(arm) == pytest.approx(0.806, rel=1e-12)

    def test_wavenumber_identity(self, layout):
        assert layout.wavenumber * layout.wavelength == pytest.approx(2 * np.pi, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentLayout(wavelength=-1e-9)
        with pytest.raises(ValueError):
            ExperimentLayout(bs_to_detector=(0.04, 0.853))  # detector before aperture

    def test_symmetric_flag(self):
        assert ExperimentLayout().symmetric
        assert not ExperimentLayout(bs_to_aperture=(0.047, 0.05)).symmetric


class TestDoubleSlitSpec:
    def test_edges(self, slit):
        assert slit.inner_edge == pytest.approx(210e-6)
        assert slit.outer_edge == pytest.approx(460e-6)

    def test_slits_must_be_disjoint(self):
        with pytest.raises(ValueError):
            DoubleSlitSpec(slit_width=700e-6, center_separation=670e-6)
        with pytest.raises(ValueError):
            DoubleSlitSpec(slit_width=0.0, center_separation=670e-6)


class TestSampleDoubleSlit:
    def test_known_points(self, slit):
        g = SpatialGrid(4e-3, 4000)  # 1 um pixels
        prof = sample_double_slit(slit, g)
        x = g.coordinates
        assert prof.transmission[np.argmin(np.abs(x - 335e-6))] == 1.0  # slit center
        assert prof.transmission[np.argmin(np.abs(x))] == 0.0  # blocked midpoint

    def test_total_open_length(self, slit):
        g = SpatialGrid(4e-3, 4000)
        prof = sample_double_slit(slit, g)
        assert abs(prof.open_length - 2 * slit.slit_width) <= 2 * g.spacing

    def test_grid_too_coarse_rejected(self, slit):
        g = SpatialGrid(50e-3, 256)  # ~195 um pixels vs b/4 = 62.5 um
        with pytest.raises(GridResolutionError, match="spacing"):
            sample_double_slit(slit, g)

    @pytest.mark.parametrize("b,d,window,n", [
        (250e-6, 670e-6, 4e-3, 4000),
        (250e-6, 670e-6, 5e-3, 4096),
        (100e-6, 300e-6, 2e-3, 3000),
        (333e-6, 1111e-6, 7e-3, 5000),
    ])
    def test_even_in_x(self, b, d, window, n):
        prof = sample_double_slit(DoubleSlitSpec(b, d), SpatialGrid(window, n))
        x = prof.grid.coordinates
        t = prof.transmission
        # compare each sample against its mirror where the mirror exists
        for i in range(len(x)):
            j = np.argmin(np.abs(x + x[i]))
            if abs(x[j] + x[i]) < 1e-15:
                assert t[i] == t[j]

    def test_edge_tie_break(self, slit):
        # 10 um pixels put both slit edges exactly on samples:
        # inner edge (strict) excluded, outer edge (inclusive) kept
        g = SpatialGrid(2e-3, 200)
        prof = sample_double_slit(slit, g)
        x = g.coordinates
        t = prof.transmission
        for sx in (210e-6, -210e-6):
            i = np.argmin(np.abs(x - sx))
            assert abs(x[i]) == pytest.approx(210e-6, rel=1e-12)
            assert t[i] == 0.0
        for sx in (460e-6, -460e-6):
            i = np.argmin(np.abs(x - sx))
            assert t[i] == 1.0


class TestCanonicalAperturePair:
    @pytest.mark.parametrize("support", [920e-6, 1.5e-3, 3e-3])
    def test_product_equals_double_slit(self, slit, support):
        g = SpatialGrid(8e-3, 8192)
        a1, a2 = canonical_aperture_pair(slit, support, g)
        d = sample_double_slit(slit, g)
        assert np.array_equal(a1.transmission * a2.transmission, d.transmission)

    def test_open_lengths(self, slit):
        g = SpatialGrid(8e-3, 8192)
        a1, a2 = canonical_aperture_pair(slit, 920e-6, g)
        assert abs(a1.open_length - 920e-6) <= 2 * g.spacing
        assert abs(a2.open_length - 500e-6) <= 2 * g.spacing

    def test_wide_support_clamps_arm1(self, slit):
        g = SpatialGrid(8e-3, 8192)
        a1, a2 = canonical_aperture_pair(slit, 3e-3, g)
        assert abs(a1.open_length - 920e-6) <= 2 * g.spacing  # clamped to d + b
        assert abs(a2.open_length - (3e-3 - 420e-6)) <= 2 * g.spacing

    def test_narrow_support_rejected(self, slit):
        g = SpatialGrid(8e-3, 8192)
        with pytest.raises(ValueError, match="outer support"):
            canonical_aperture_pair(slit, 800e-6, g)

    def test_neither_is_a_double_slit(self, slit):
        # the defining feature: each profile alone is simply connected or
        # a strip, only the product is the double slit
        g = SpatialGrid(8e-3, 8192)
        a1, a2 = canonical_aperture_pair(slit, 920e-6, g)
        assert a1.shape.kind == "slit"
        assert a2.shape.kind == "strip"

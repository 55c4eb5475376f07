import numpy as np
import pytest
from scipy.spatial.distance import pdist

from app.schemas.colorspace import ChromaticityPoint
from app.schemas.constellation import SymbolBits
from app.services.constellation import (
    CONSTELLATION_HEADER, ConstellationError, bits_to_symbols, build_constellation, constellation_rows,
    gamut_coordinates, hard_demodulate, hard_demodulate_points, min_distance, modulate, nearest_symbols,
    symbols_to_bits,
)


class TestBuild:

    def test_blue_vertex_is_symbol_zero(self, constellation):
        assert constellation.chroma[0].tolist() == [0.1805, 0.0722]
        assert constellation.drives[0].tolist() == [0.0, 0.0, 1.0]

    def test_512_distinct_points(self, constellation):
        assert constellation.order == 512
        assert constellation.bits_per_symbol == 9
        assert len(np.unique(constellation.chroma, axis=0)) == 512
        assert len(np.unique(constellation.drives, axis=0)) == 512

    def test_sixteen_sites_dropped(self, constellation):
        assert constellation.lattice_rows == 32
        assert constellation.dropped_sites == 16

    def test_inside_gamut(self, constellation):
        assert np.all(gamut_coordinates(constellation) >= -1e-12)

    def test_drives_on_emission_grid(self, constellation):
        levels = constellation.drives * 99
        assert np.allclose(levels, np.round(levels), atol=1e-9)
        assert np.all(constellation.drives >= 0.0) and np.all(constellation.drives <= 1.0)

    def test_min_distance_matches_pair_scan(self, constellation):
        d = min_distance(constellation)
        assert d > 0.0
        assert d == pdist(constellation.chroma).min()

    def test_order_four(self):
        c = build_constellation(4, 100)
        assert c.drives[0].tolist() == [0.0, 0.0, 1.0]
        assert len(np.unique(c.chroma, axis=0)) == 4
        assert np.all(gamut_coordinates(c) >= -1e-12)
        nearest_to_blue = np.min(np.linalg.norm(c.chroma[1:] - c.chroma[0], axis=1))
        assert min_distance(c) <= nearest_to_blue

    @pytest.mark.parametrize("order", [0, 3, 6, 500])
    def test_rejects_non_power_of_two(self, order):
        with pytest.raises(ConstellationError):
            build_constellation(order, 100)

    def test_rejects_coarse_steps(self):
        with pytest.raises(ConstellationError):
            build_constellation(512, 10)

    def test_table_export(self, constellation):
        rows = constellation_rows(constellation)
        assert len(rows) == 512
        assert len(CONSTELLATION_HEADER) == len(rows[0])
        assert rows[0][:2] == [0, "000000000"]
        assert rows[511][1] == "111111111"


class TestLabels:

    def test_bijective(self):
        symbols = np.arange(512)
        assert np.array_equal(bits_to_symbols(symbols_to_bits(symbols, 9)), symbols)

    def test_msb_first(self):
        assert symbols_to_bits(np.array([256]), 9)[0].tolist() == [1, 0, 0, 0, 0, 0, 0, 0, 0]

    def test_modulate_all_zero_bits(self, constellation):
        rgb = modulate(constellation, SymbolBits(bits=[0] * 9))
        assert rgb.as_array().tolist() == [0.0, 0.0, 1.0]

    def test_modulate_last_symbol(self, constellation):
        rgb = modulate(constellation, SymbolBits.from_index(511, 9))
        assert np.array_equal(rgb.as_array(), constellation.drives[511])

    def test_modulate_rejects_wrong_width(self, constellation):
        with pytest.raises(ValueError):
            modulate(constellation, SymbolBits(bits=[0, 1]))


class TestHardDemodulation:

    def test_every_reference_point_maps_to_itself(self, constellation):
        assert np.array_equal(hard_demodulate_points(constellation, constellation.chroma), np.arange(512))

    def test_single_point(self, constellation):
        index, bits = hard_demodulate(constellation, ChromaticityPoint.from_array(constellation.chroma[37]))
        assert index == 37
        assert bits.value == 37

    def test_exact_midpoint_ties_to_smaller_index(self, constellation):
        mid = (constellation.chroma[3] + constellation.chroma[7]) / 2
        assert hard_demodulate_points(constellation, mid[None, :])[0] == 3

    def test_perturbed_midpoint_goes_to_nearer_entry(self, constellation):
        a, b = constellation.chroma[7], constellation.chroma[3]
        mid = (a + b) / 2
        nudged = mid + 1e-9 * (a - b) / np.linalg.norm(a - b)
        assert hard_demodulate_points(constellation, nudged[None, :])[0] == 7

    def test_chunked_search_matches_brute_force(self, constellation, rng):
        points = rng.uniform(0.05, 0.75, size=(5000, 2))
        d2 = ((points[:, None, :] - constellation.chroma[None]) ** 2).sum(axis=-1)
        assert np.array_equal(nearest_symbols(constellation.chroma, points), d2.argmin(axis=1))

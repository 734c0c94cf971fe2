"""Constellation geometry, Gray labels, detection, and margin formulas."""

import numpy as np
import pytest

from msmprec.constellation import (bits_to_symbols, detect, make_psk,
                                   make_qam, named_constellation, psk_margin,
                                   qam_margin, qam_region_spec, safety_margin,
                                   symbols_to_bits)
from msmprec.exceptions import InvalidOrder, LengthMismatch


def _popcount(v):
    return bin(int(v)).count("1")


# ============================================================================
# CONSTRUCTION
# ============================================================================


class TestConstruction:
    def test_named_table(self):
        for name, kind, order in [("bpsk", "psk", 2), ("qpsk", "psk", 4),
                                  ("8psk", "psk", 8), ("16psk", "psk", 16),
                                  ("4qam", "qam", 4), ("16qam", "qam", 16),
                                  ("64qam", "qam", 64)]:
            c = named_constellation(name)
            assert (c.kind, c.order) == (kind, order)
            assert c.points.shape == (order,)
            assert c.bits_per_symbol == int(np.log2(order))

    def test_psk_points_offset_from_axes(self):
        # points at exp(j*(2i+1)*pi/S) so the axis grid bounds the sectors
        assert complex(make_psk(4).points[0]) == \
            0.7071067811865476 + 0.7071067811865475j
        c8 = make_psk(8)
        np.testing.assert_allclose(np.abs(c8.points), 1.0, atol=1e-15)
        np.testing.assert_allclose(np.angle(c8.points[0]), np.pi / 8)

    def test_qam_grid_and_max_coord(self):
        c = make_qam(16)
        assert c.max_coord == 3
        assert sorted(set(c.points.real)) == [-3.0, -1.0, 1.0, 3.0]
        # canonical index is re_idx * side + im_idx
        assert complex(c.points[0]) == -3.0 - 3.0j
        assert complex(c.points[15]) == 3.0 + 3.0j

    def test_average_powers(self):
        assert named_constellation("qpsk").avg_power == pytest.approx(1.0)
        assert named_constellation("4qam").avg_power == pytest.approx(2.0)
        assert named_constellation("16qam").avg_power == pytest.approx(10.0)
        assert named_constellation("64qam").avg_power == pytest.approx(42.0)

    def test_mean_abs_sum(self):
        # blind-gain targets: E[|Re s| + |Im s|]
        assert named_constellation("16qam").mean_abs_sum == pytest.approx(4.0)
        assert named_constellation("64qam").mean_abs_sum == pytest.approx(8.0)
        assert named_constellation("qpsk").mean_abs_sum == \
            pytest.approx(np.sqrt(2.0))

    def test_order_validation(self):
        with pytest.raises(InvalidOrder, match="unknown constellation"):
            named_constellation("32apsk")
        with pytest.raises(InvalidOrder, match="even power of two"):
            make_qam(8)
        with pytest.raises(InvalidOrder, match="power of two"):
            make_psk(3)


# ============================================================================
# GRAY LABELS AND BIT PACKING
# ============================================================================


class TestLabels:
    def test_labels_are_a_permutation(self):
        for name in ("qpsk", "16psk", "16qam", "64qam"):
            c = named_constellation(name)
            assert sorted(c.labels.tolist()) == list(range(c.order))

    def test_psk_ring_is_gray(self):
        c = make_psk(16)
        for i in range(16):
            j = (i + 1) % 16
            assert _popcount(c.labels[i] ^ c.labels[j]) == 1

    def test_qam_axis_neighbors_are_gray(self):
        c = make_qam(16)
        side = c.max_coord + 1
        for i in range(16):
            if (i % side) + 1 < side:      # step along the imaginary axis
                assert _popcount(c.labels[i] ^ c.labels[i + 1]) == 1
            if i + side < 16:              # step along the real axis
                assert _popcount(c.labels[i] ^ c.labels[i + side]) == 1

    def test_bits_round_trip(self):
        rng = np.random.default_rng(0)
        for name in ("qpsk", "8psk", "16qam"):
            c = named_constellation(name)
            idx = rng.integers(0, c.order, size=40)
            bits = symbols_to_bits(idx, c)
            assert bits.size == 40 * c.bits_per_symbol
            np.testing.assert_array_equal(bits_to_symbols(bits, c), idx)

    def test_bits_length_validation(self):
        c = named_constellation("16qam")
        with pytest.raises(LengthMismatch, match="not a multiple"):
            bits_to_symbols([0, 1, 0], c)


# ============================================================================
# DETECTION
# ============================================================================


class TestDetect:
    def test_round_trip_on_the_points(self):
        for name in ("bpsk", "qpsk", "8psk", "16psk", "4qam", "16qam", "64qam"):
            c = named_constellation(name)
            np.testing.assert_array_equal(detect(c.points, c),
                                          np.arange(c.order))

    def test_psk_boundary_goes_to_first_sector(self):
        c = make_psk(4)
        assert int(detect(np.array(1.0 + 0.0j), c)) == 0

    def test_qam_boundary_resolves_to_lower_cell(self):
        c = make_qam(16)
        # 0 sits exactly on the even-integer threshold between levels -1, 1
        assert int(detect(np.array(0.0 + 0.0j), c)) == \
            int(detect(np.array(-1.0 - 1.0j), c))

    def test_detection_survives_sub_margin_noise(self):
        # every 16QAM cell edge is at distance 1; any wiggle below that per
        # axis must not flip the decision
        rng = np.random.default_rng(1)
        c = named_constellation("16qam")
        idx = rng.integers(0, 16, size=200)
        wig = (rng.uniform(-0.9, 0.9, 200) + 1j * rng.uniform(-0.9, 0.9, 200))
        np.testing.assert_array_equal(detect(c.points[idx] + wig, c), idx)


# ============================================================================
# MARGINS
# ============================================================================


class TestMargins:
    def test_psk_margin_hand_values(self):
        s = np.exp(1j * np.pi / 4)
        theta = np.pi / 4
        # on the sector axis: margin = |y| sin(theta)
        assert float(psk_margin(s, s, theta)) == pytest.approx(np.sqrt(0.5),
                                                               abs=1e-15)
        # on the sector boundary
        assert float(psk_margin(1.0 + 0.0j, s, theta)) == pytest.approx(0.0)
        # diametrically wrong
        assert float(psk_margin(-1.0 - 0.0j, s, theta)) == pytest.approx(-1.0)

    def test_qam_margin_center_and_edge(self):
        c = named_constellation("16qam")
        inner = 1.0 + 1.0j
        assert float(qam_margin(inner, inner, c.max_coord)) == pytest.approx(1.0)
        # edge symbol: the outward side is unbounded, only the inner edge counts
        edge = 3.0 + 3.0j
        assert float(qam_margin(edge, edge, c.max_coord)) == pytest.approx(1.0)
        assert float(qam_margin(edge, edge, c.max_coord, alpha=0.5)) == \
            pytest.approx(2.0)
        # crossing the inner threshold turns the margin negative
        assert float(qam_margin(0.5 + 1.0j, inner, c.max_coord)) == \
            pytest.approx(0.5)
        assert float(qam_margin(-0.5 + 1.0j, inner, c.max_coord)) < 0

    def test_safety_margin_broadcasts_and_ignores_alpha_for_psk(self):
        c = named_constellation("qpsk")
        u = c.points[np.array([0, 1, 2])] * 1.5
        m1 = safety_margin(u, np.array([0, 1, 2]), c)
        m2 = safety_margin(u, np.array([0, 1, 2]), c, alpha=7.0)
        np.testing.assert_allclose(m1, m2)
        assert m1.shape == (3,)
        assert np.all(m1 > 0)

    def test_safety_margin_scales_qam_cells(self):
        c = named_constellation("16qam")
        u = np.array([0.7 + 0.7j])
        s = np.array([int(detect(np.array(1.0 + 1.0j), c))])
        # at alpha = 0.7 the point sits dead center of its scaled cell
        assert float(safety_margin(u, s, c, alpha=0.7)[0]) == pytest.approx(0.7)


# ============================================================================
# LINEARIZED REGION CONSTANTS
# ============================================================================


class TestRegionSpec:
    def test_outer_corner(self):
        spec = qam_region_spec(np.array([3.0 + 3.0j]), 3)
        assert complex(spec.offset[0]) == 2.0 + 2.0j
        assert complex(spec.c[0]) == pytest.approx(2.0 * np.sqrt(2.0))
        assert np.isinf(spec.xi_re[0]) and np.isinf(spec.xi_im[0])

    def test_inner_point(self):
        spec = qam_region_spec(np.array([1.0 + 1.0j]), 3)
        assert complex(spec.offset[0]) == 0.0 + 0.0j
        assert complex(spec.c[0]) == 0.0 + 0.0j
        assert spec.xi_re[0] == 2.0 and spec.xi_im[0] == 2.0

    def test_mixed_edge(self):
        spec = qam_region_spec(np.array([-3.0 + 1.0j]), 3)
        assert complex(spec.offset[0]) == -2.0 + 0.0j
        assert np.isinf(spec.xi_re[0])
        assert spec.xi_im[0] == 2.0

import math

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from bispade import (
    Displacement,
    adimensional_shift,
    displaced_overlap,
    overlap_first_order,
    physical_shift,
    quad_overlap,
)

modes = st.integers(0, 12)
shifts = st.floats(0.0, 3.0)


class TestDisplacement:
    def test_delta_is_twice_d(self):
        disp = Displacement(d=0.4)
        assert disp.delta == pytest.approx(0.8)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Displacement(d=-0.1)

    def test_unit_conversion_round_trip(self):
        d = adimensional_shift(12e-6, 30e-6)
        assert d == pytest.approx(math.sqrt(2.0) * 12.0 / 30.0, rel=1e-14)
        assert physical_shift(d, 30e-6) == pytest.approx(12e-6, rel=1e-14)

    def test_conversion_rejects_bad_waist(self):
        with pytest.raises(ValueError):
            adimensional_shift(1.0, 0.0)


class TestDisplacedOverlap:
    @given(m=modes, n=modes)
    @settings(max_examples=40)
    def test_zero_shift_is_identity(self, m, n):
        assert displaced_overlap(m, n, 0.0, 1) == (1.0 if m == n else 0.0)

    def test_first_mode_value(self):
        # <1|0,+d> = -d/sqrt(2) * exp(-d^2/4)
        assert displaced_overlap(1, 0, 0.3, 1) == pytest.approx(-0.20741235903988336, rel=1e-12)
        assert displaced_overlap(1, 0, 0.3, -1) == pytest.approx(0.20741235903988336, rel=1e-12)

    def test_matches_quadrature_oracle(self):
        # quad_overlap's shift convention corresponds to sign = -1
        for m in range(7):
            for n in range(7):
                for d in (0.2, 0.8, 1.6, 3.0):
                    for sign in (1, -1):
                        closed = displaced_overlap(m, n, d, sign)
                        brute = quad_overlap(m, n, -sign * d)
                        assert abs(closed - brute) < 1e-10

    def test_high_low_pair_matches_oracle(self):
        assert displaced_overlap(3, 5, 0.8, -1) == pytest.approx(
            quad_overlap(3, 5, 0.8), abs=1e-10
        )

    @given(m=modes, n=modes, d=st.sampled_from([0.1, 0.5, 1.0, 2.0]))
    @settings(max_examples=80)
    def test_parity(self, m, n, d):
        minus = displaced_overlap(m, n, d, -1)
        plus = displaced_overlap(m, n, d, 1)
        assert minus == pytest.approx((-1.0) ** (m + n) * plus, rel=1e-12, abs=1e-15)

    @given(m=modes, n=modes, d=shifts)
    @settings(max_examples=80)
    def test_bounded_by_one(self, m, n, d):
        assert abs(displaced_overlap(m, n, d, 1)) <= 1.0 + 1e-12

    @given(m=modes, n=modes, d=st.floats(0.05, 2.0))
    @settings(max_examples=60)
    def test_square_even_in_shift(self, m, n, d):
        forward = displaced_overlap(m, n, d, 1) ** 2
        backward = displaced_overlap(m, n, -d, 1) ** 2
        assert forward == pytest.approx(backward, rel=1e-12, abs=1e-20)

    def test_completeness(self):
        for n in range(7):
            for d in (0.5, 1.0, 2.0):
                total = sum(displaced_overlap(m, n, d, 1) ** 2 for m in range(n + 41))
                assert abs(total - 1.0) < 1e-8

    def test_exchange_symmetry(self):
        assert displaced_overlap(5, 2, 0.7, 1) == displaced_overlap(2, 5, 0.7, -1)

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            displaced_overlap(0, 0, 0.5, 2)

    def test_rejects_negative_modes(self):
        with pytest.raises(ValueError):
            displaced_overlap(-1, 0, 0.5, 1)


class TestFirstOrder:
    @given(m=modes, d=st.floats(0.0, 0.2), sign=st.sampled_from([1, -1]))
    @settings(max_examples=40)
    def test_diagonal_is_one(self, m, d, sign):
        assert overlap_first_order(m, m, d, sign) == 1.0

    def test_leading_coefficient_magnitude(self):
        value = overlap_first_order(0, 1, 0.05, 1)
        assert abs(value) == pytest.approx(0.05 * math.sqrt(0.5), rel=1e-14)

    def test_matches_exact_to_second_order(self):
        approx = overlap_first_order(2, 3, 0.01, 1)
        exact = displaced_overlap(2, 3, 0.01, 1)
        assert abs(approx - exact) <= 5e-4

    @given(m=st.integers(0, 8), sign=st.sampled_from([1, -1]))
    @settings(max_examples=40)
    def test_neighbour_error_scales_quadratically(self, m, sign):
        # |exact - first order| on a neighbour pair shrinks like d^2
        err = {}
        for d in (0.02, 0.002):
            err[d] = abs(
                overlap_first_order(m, m + 1, d, sign) - displaced_overlap(m, m + 1, d, sign)
            )
        assert err[0.002] <= err[0.02] * 1e-2 * 1.5 + 1e-15

    def test_distant_modes_vanish(self):
        assert overlap_first_order(0, 4, 0.1, 1) == 0.0

    def test_consistent_with_exchange(self):
        # same identity the exact overlap obeys
        assert overlap_first_order(3, 2, 0.01, 1) == pytest.approx(
            overlap_first_order(2, 3, 0.01, -1), rel=1e-14
        )

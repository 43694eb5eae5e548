import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cipher_region.info_core import Channel, Pmf, entropy, mutual_information
from cipher_region.rd_capacity import (
    DistortionMeasure,
    InfeasibleDistortion,
    best_constant_reproduction,
    capacity,
    distortion_rate_inverse,
    min_distortion,
    rate_distortion,
    rd_curve,
    zero_rate_distortion,
)

from conftest import hb
from oracles import capacity_oracle, rate_distortion_oracle

HAM2 = DistortionMeasure.hamming(2)


class TestDistortionMeasure:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DistortionMeasure([[0.0, -1.0], [1.0, 0.0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            DistortionMeasure([[0.0, np.inf], [1.0, 0.0]])

    def test_d_max(self):
        assert DistortionMeasure([[0, 3], [2, 0]]).d_max == 3.0

    def test_difference_layout(self):
        d = DistortionMeasure.difference([0, 1, 4])
        # d(u, v) = rho[(v - u) mod 3]
        assert d.matrix[2, 0] == 1 and d.matrix[0, 2] == 4
        np.testing.assert_array_equal(d.difference_profile(), [0, 1, 4])

    def test_non_difference_has_no_profile(self):
        assert DistortionMeasure([[0, 1], [2, 0]]).difference_profile() is None

    def test_endpoints(self):
        src = Pmf([0.2, 0.5, 0.3])
        d = DistortionMeasure([[1, 2, 3], [0, 5, 1], [4, 4, 0.5]])
        assert min_distortion(src, d) == pytest.approx(0.2 * 1 + 0 + 0.3 * 0.5)
        cols = src.probs @ d.matrix
        assert zero_rate_distortion(src, d) == pytest.approx(cols.min())
        assert best_constant_reproduction(src, d) == int(np.argmin(cols))


class TestCapacity:
    def test_identity(self):
        assert capacity(Channel.identity(2)).capacity == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p", [0.05, 0.1, 0.2, 0.3])
    def test_bsc(self, p):
        res = capacity(Channel.bsc(p))
        assert res.capacity == pytest.approx(1 - hb(p), abs=1e-7)
        assert res.gap <= 1e-7

    def test_bsc_point_one_literal(self):
        assert capacity(Channel.bsc(0.1)).capacity == pytest.approx(0.531004, abs=1e-6)

    def test_bec(self):
        assert capacity(Channel.bec(0.25)).capacity == pytest.approx(0.75, abs=1e-7)

    def test_constant_channel(self):
        assert capacity(Channel.constant(3, Pmf([0.1, 0.9]))).capacity == pytest.approx(0.0, abs=1e-9)

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            capacity(Channel.bsc(0.1), tol=0)

    def test_random_channels_against_convex_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            kx, ky = rng.integers(2, 6, size=2)
            w = rng.dirichlet(np.ones(ky) * rng.choice([0.3, 1.0, 3.0]), size=kx)
            res = capacity(Channel(w))
            assert res.capacity == pytest.approx(capacity_oracle(w), abs=1e-5)
            assert res.lower <= res.capacity <= res.upper + 1e-15
            assert res.capacity <= math.log2(min(kx, ky)) + 1e-12

    def test_lower_bound_history_non_decreasing(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            w = rng.dirichlet(np.ones(4) * 0.5, size=5)
            hist = np.array(capacity(Channel(w), tol=1e-10).lower_history)
            assert np.all(np.diff(hist) >= -1e-12)

    def test_maximality_against_random_inputs(self):
        rng = np.random.default_rng(9)
        w = Channel(rng.dirichlet(np.ones(4), size=3))
        c = capacity(w).capacity
        for _ in range(100):
            px = Pmf(rng.dirichlet(np.ones(3) * rng.choice([0.1, 1.0])))
            assert mutual_information(px, w) <= c + 1e-9

    def test_optimal_input_attains_capacity(self):
        w = Channel([[0.7, 0.2, 0.1], [0.1, 0.1, 0.8], [0.3, 0.4, 0.3]])
        res = capacity(w, tol=1e-9)
        assert mutual_information(res.optimal_input, w) == pytest.approx(res.capacity, abs=1e-8)


class TestRateDistortion:
    @pytest.mark.parametrize(
        "p,D,expected",
        [(0.5, 0.1, 0.531004), (0.5, 0.0, 1.0), (0.5, 0.5, 0.0), (0.3, 0.1, 0.412295)],
    )
    def test_examples(self, p, D, expected):
        assert rate_distortion(Pmf.bernoulli(p), HAM2, D).rate == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
    def test_binary_closed_form(self, p):
        for D in np.linspace(0.01, p - 0.01, 9):
            pt = rate_distortion(Pmf.bernoulli(p), HAM2, D)
            assert pt.rate == pytest.approx(hb(p) - hb(D), abs=1e-6)

    def test_above_zero_rate_distortion(self):
        pt = rate_distortion(Pmf.bernoulli(0.3), HAM2, 0.35)
        assert pt.rate == 0.0
        assert pt.reproduction_symbols == (0,)

    def test_infeasible_reports_d_min(self):
        d = DistortionMeasure([[0.2, 1.0], [1.0, 0.3]])
        with pytest.raises(InfeasibleDistortion, match="0.25"):
            rate_distortion(Pmf.uniform(2), d, 0.1)

    def test_test_channel_reproduces_rate_and_distortion(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(2, 5))
            src = Pmf(rng.dirichlet(np.ones(k)))
            d = DistortionMeasure(rng.uniform(0, 2, size=(k, k)))
            D = rng.uniform(min_distortion(src, d), zero_rate_distortion(src, d))
            pt = rate_distortion(src, d, D)
            full = pt.full_test_channel(k)
            assert mutual_information(src, full) == pytest.approx(pt.rate, abs=1e-6)
            assert d.expected(src, full) <= D + 1e-6
            assert 0 <= pt.rate <= entropy(src) + 1e-9

    def test_random_sources_against_convex_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(12):
            ku, kv = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            src = Pmf(rng.dirichlet(np.ones(ku)))
            dm = rng.uniform(0, 1, size=(ku, kv))
            d = DistortionMeasure(dm)
            lo, hi = min_distortion(src, d), zero_rate_distortion(src, d)
            D = lo + rng.uniform(0.01, 1.0) * (hi - lo)
            got = rate_distortion(src, d, D).rate
            assert got == pytest.approx(rate_distortion_oracle(src.probs, dm, D), abs=1e-5)

    def test_linear_segment_uses_convex_combination(self):
        # two reproduction letters at equal cost make R(D) linear in between
        src = Pmf.uniform(2)
        d = DistortionMeasure([[0, 1, 0.5], [1, 0, 0.5]])
        grid = np.linspace(0, 0.5, 11)
        rates = np.array([rate_distortion(src, d, D).rate for D in grid])
        oracle = np.array([rate_distortion_oracle(src.probs, d.matrix, D) for D in grid])
        np.testing.assert_allclose(rates, oracle, atol=1e-5)

    def test_near_degenerate_letters_certify(self):
        # reproduction letters 0 and 3 cost almost the same, which stalls the
        # plain iteration; the bound must still close at a tight tolerance
        probs = np.array([0.24519138, 0.24519138, 0.17522114, 0.33439611])
        src = Pmf(probs / probs.sum())
        dm = np.array([[0, 0.31557543, 0, 0], [1.25, 1, 0, 1.5], [0, 0, 0.5, 0], [0.0078125, 0, 0, 0]])
        d = DistortionMeasure(dm)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            for D in np.linspace(0, zero_rate_distortion(src, d), 11)[1:-1]:
                pt = rate_distortion(src, d, D, tol=1e-8)
                assert pt.rate - pt.lower_bound <= 1e-8
                assert pt.rate == pytest.approx(rate_distortion_oracle(src.probs, dm, D), abs=1e-5)

    def test_slope_on_linear_stretch_certifies(self):
        # three reproduction letters with nearly dependent kernel columns at
        # the slope of a linear stretch of the curve
        probs = np.array([0.25910641, 0.41690483, 0.32398876])
        src = Pmf(probs / probs.sum())
        dm = np.array([[0, 0, 0], [0.961358284, 0.145586449, 9.555704e-10], [0.0900162538, 0.636710727, 1.79526785]])
        d = DistortionMeasure(dm)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            for D in (0.1005098230, 0.1242916790, 0.1480735350):
                pt = rate_distortion(src, d, D, tol=1e-8)
                assert pt.rate - pt.lower_bound <= 1e-8
                assert pt.rate == pytest.approx(rate_distortion_oracle(src.probs, dm, D), abs=1e-5)

    def test_tiny_distortion_scale(self):
        # the curve lives on [0, 5e-7]; slopes far beyond unit scale are needed
        src = Pmf.uniform(2)
        dm = np.array([[1.0, 0.0], [0.0, 1e-6]])
        d = DistortionMeasure(dm)
        assert rate_distortion(src, d, 0.0).rate == pytest.approx(1.0, abs=1e-9)
        for D in (1e-7, 2.5e-7, 4e-7):
            pt = rate_distortion(src, d, D)
            assert pt.lower_bound <= pt.rate
            assert d.expected(src, pt.full_test_channel(2)) <= D + 1e-12
            # u0 -> v1 is free, u1 -> v1 with probability a pays all the distortion
            a = 2 * D / 1e-6
            assert pt.rate == pytest.approx(hb((1 - a) / 2) - hb(a) / 2, abs=1e-6)

    def test_no_warnings_on_standard_cases(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            for D in np.linspace(0.0, 0.5, 21):
                rate_distortion(Pmf.uniform(3), DistortionMeasure.hamming(3), D)


@st.composite
def rd_problems(draw):
    k = draw(st.integers(2, 4))
    probs = np.array(draw(st.lists(st.floats(0.05, 1), min_size=k, max_size=k)))
    entries = draw(st.lists(st.floats(0, 3), min_size=k * k, max_size=k * k))
    return Pmf(probs / probs.sum()), DistortionMeasure(np.array(entries).reshape(k, k))


@settings(max_examples=25, deadline=None)
@given(rd_problems())
def test_rd_curve_convex_non_increasing(problem):
    src, d = problem
    lo, hi = min_distortion(src, d), zero_rate_distortion(src, d)
    grid = np.linspace(lo, hi, 9)
    rates = np.array([pt.rate for pt in rd_curve(src, d, grid)])
    assert np.all(np.diff(rates) <= 1e-6)
    # second differences on a uniform grid are nonnegative for a convex function
    assert np.all(rates[:-2] - 2 * rates[1:-1] + rates[2:] >= -1e-5)


class TestRdCurve:
    def test_bss_examples(self):
        rates = [pt.rate for pt in rd_curve(Pmf.uniform(2), HAM2, [0, 0.25, 0.5])]
        np.testing.assert_allclose(rates, [1.0, 0.188722, 0.0], atol=1e-6)

    def test_single_point(self):
        src = Pmf.bernoulli(0.2)
        assert rd_curve(src, HAM2, [0])[0].rate == pytest.approx(entropy(src), abs=1e-6)

    def test_bernoulli_point_three(self):
        rates = [pt.rate for pt in rd_curve(Pmf.bernoulli(0.3), HAM2, [0.1, 0.2])]
        np.testing.assert_allclose(rates, [hb(0.3) - hb(0.1), hb(0.3) - hb(0.2)], atol=1e-6)
        np.testing.assert_allclose(rates, [0.412295, 0.159363], atol=1e-6)


class TestDistortionRateInverse:
    def test_full_rate(self):
        assert distortion_rate_inverse(Pmf.uniform(2), HAM2, 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_inverse_of_closed_form(self):
        assert distortion_rate_inverse(Pmf.uniform(2), HAM2, 0.531004) == pytest.approx(0.1, abs=1e-5)

    def test_zero_rate(self):
        src = Pmf([0.2, 0.5, 0.3])
        d = DistortionMeasure([[1, 2, 3], [0, 5, 1], [4, 4, 0.5]])
        assert distortion_rate_inverse(src, d, 0.0) == zero_rate_distortion(src, d)

    def test_rejects_rate_above_entropy(self):
        with pytest.raises(ValueError, match="entropy"):
            distortion_rate_inverse(Pmf.bernoulli(0.3), HAM2, 0.9)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            distortion_rate_inverse(Pmf.uniform(2), HAM2, -0.1)

    @pytest.mark.parametrize("R", [0.1, 0.4, 0.75])
    def test_round_trip(self, R):
        src = Pmf.bernoulli(0.4)
        D = distortion_rate_inverse(src, HAM2, R)
        assert rate_distortion(src, HAM2, D).rate == pytest.approx(R, abs=1e-6)

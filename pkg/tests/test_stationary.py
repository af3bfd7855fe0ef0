import math

import numpy as np
import pytest

from furst.entropy import histogram, shannon_entropy
from furst.errors import DomainError, UndersampledError
from furst.geometry import Mat2, ProjPoint, circle_distance
from furst.products import AtomicMeasureG
from furst.semigroup import Mat2Q, s_lambda
from furst.stationary import (
    action_convolution,
    action_entropy_diagnostic,
    check_hypotheses,
    default_k_window,
    dimension_formula,
    entropy_dimension_estimate,
    largest_cell_mass,
    linearization_probe,
    local_dimension_profile,
    sample_stationary,
    stationarity_distance,
    total_variation,
)

from oracles import CANTOR_DIM

RADII = 2.0 ** -np.arange(4, 11)


class TestSampling:
    def test_irrational_rotation_orbit(self):
        t = math.sqrt(2) - 1
        mu = AtomicMeasureG((Mat2.rotation(t),))
        z = ProjPoint(0.3)
        orbit = np.array([sample_stationary(mu, n, 1, z=z, seed=0)[0] for n in range(1, 601)])
        expected = (0.3 + t * np.arange(1, 601)) % 1.0
        assert np.max(circle_distance(orbit, expected)) < 1e-9
        # equidistribution: every eighth of the circle gets close to 1/8 of the orbit
        assert np.all(np.abs(histogram(orbit, 3).counts / 600 - 1 / 8) < 0.01)

    def test_deterministic(self, s4):
        a = sample_stationary(s4, 32, 10_000, seed=5)
        assert np.array_equal(a, sample_stationary(s4, 32, 10_000, seed=5))
        assert not np.array_equal(a, sample_stationary(s4, 32, 10_000, seed=6))

    def test_thread_independent(self, s4, monkeypatch):
        a = sample_stationary(s4, 16, 150_000, seed=1)
        monkeypatch.setenv("FURST_THREADS", "3")
        assert np.array_equal(a, sample_stationary(s4, 16, 150_000, seed=1))

    def test_range(self, s4_points):
        assert s4_points.min() >= 0 and s4_points.max() < 1

    def test_n_word_doubling(self, s4, s4_points):
        doubled = sample_stationary(s4, 256, 1_000_000, seed=0)
        assert total_variation(s4_points, doubled, 12) <= 0.01

    def test_bad_n_word(self, s4):
        with pytest.raises(ValueError):
            sample_stationary(s4, 0, 10)


class TestStationarity:
    def test_haar(self):
        mu = AtomicMeasureG((Mat2.rotation(0.1234), Mat2.rotation(0.5678)))
        pts = np.random.default_rng(0).random(1_000_000)
        assert stationarity_distance(mu, pts, 8) <= 2 * math.sqrt(2**8 / pts.size)

    def test_s4(self, s4, s4_points):
        assert stationarity_distance(s4, s4_points, 8) < 0.05

    def test_point_mass(self, s4):
        assert stationarity_distance(s4, np.full(10_000, 0.3), 8) > 0.5
        # the horizontal line is fixed by the upper triangular atom: exactly half the mass stays
        assert stationarity_distance(s4, np.full(10_000, 0.5), 8) == pytest.approx(0.5, abs=0.02)

    def test_empty(self, s4):
        with pytest.raises(ValueError):
            stationarity_distance(s4, [], 8)


class TestEntropyDimension:
    def test_uniform(self, uniform_points):
        est = entropy_dimension_estimate(uniform_points, *default_k_window(uniform_points.size))
        assert est.slope == pytest.approx(1, abs=0.02)

    def test_point_mass(self):
        est = entropy_dimension_estimate(np.full(200_000, 0.3), 6, 10)
        assert est.slope == pytest.approx(0, abs=1e-12)

    def test_cantor(self, cantor_points):
        est = entropy_dimension_estimate(cantor_points, *default_k_window(cantor_points.size))
        assert est.slope == pytest.approx(CANTOR_DIM, abs=0.02)

    def test_guard(self, uniform_points):
        with pytest.raises(UndersampledError):
            entropy_dimension_estimate(uniform_points[:10_000], 6, 10)

    def test_window(self):
        assert default_k_window(1_000_000) == (6, 13)
        assert default_k_window(10**9) == (6, 20)

    def test_bias_reported(self, uniform_points):
        est = entropy_dimension_estimate(uniform_points, 6, 12)
        assert est.bias.shape == est.levels.shape and np.all(est.bias > 0)
        mm = entropy_dimension_estimate(uniform_points, 6, 12, miller_madow=True)
        assert np.allclose(mm.entropies - est.entropies, est.bias)


class TestLocalDimension:
    def test_uniform(self, uniform_points):
        prof = local_dimension_profile(uniform_points, 1000, 2.0**-12, 2.0**-6, seed=0)
        assert prof.mean == pytest.approx(1, abs=0.03)
        assert prof.std <= 0.05

    def test_cantor(self, cantor_points):
        prof = local_dimension_profile(cantor_points, 1000, 2.0**-12, 2.0**-4, seed=0)
        assert prof.mean == pytest.approx(CANTOR_DIM, abs=0.03)

    def test_consistency_s4(self, s4_points):
        slope = entropy_dimension_estimate(s4_points, *default_k_window(s4_points.size)).slope
        prof = local_dimension_profile(s4_points, 2000, 2.0**-12, 2.0**-6, seed=0)
        assert abs(prof.mean - slope) <= 0.05

    def test_undersampled(self, uniform_points):
        with pytest.raises(UndersampledError):
            local_dimension_profile(uniform_points[:1000], 200, 2.0**-14, 2.0**-6, seed=0)

    def test_preconditions(self, uniform_points):
        with pytest.raises(ValueError):
            local_dimension_profile(uniform_points, 50, 2.0**-12, 2.0**-6, seed=0)
        with pytest.raises(ValueError):
            local_dimension_profile(uniform_points, 500, 2.0**-6, 2.0**-12, seed=0)

    def test_std_nonnegative(self, s4_points):
        assert local_dimension_profile(s4_points, 500, 2.0**-10, 2.0**-6, seed=1).std >= 0


class TestFormula:
    @pytest.mark.parametrize("h, chi, expected", [(1, 2, 0.25), (3, 1, 1.0), (0, 1, 0.0)])
    def test_values(self, h, chi, expected):
        assert dimension_formula(h, chi) == expected

    @pytest.mark.parametrize("chi", [0.0, -1.0])
    def test_domain(self, chi):
        with pytest.raises(DomainError):
            dimension_formula(1.0, chi)

    def test_negative_entropy(self):
        with pytest.raises(DomainError):
            dimension_formula(-0.1, 1.0)


class TestHypotheses:
    def test_free_family_passes(self):
        check_hypotheses(AtomicMeasureG.uniform(s_lambda(2)))

    def test_invariant_line(self):
        with pytest.raises(DomainError):
            check_hypotheses(AtomicMeasureG((Mat2Q.diag(2),)))

    def test_common_upper_triangular(self):
        with pytest.raises(DomainError):
            check_hypotheses(AtomicMeasureG.uniform([Mat2Q(2, 1, 0, "1/2"), Mat2Q(3, 5, 0, "1/3")]))

    def test_invariant_pair(self):
        # diagonal and antidiagonal matrices permute the two axes
        with pytest.raises(DomainError):
            check_hypotheses(AtomicMeasureG.uniform([Mat2Q.diag(2), Mat2Q(0, 1, -1, 0)]))

    def test_rotations(self):
        with pytest.raises(DomainError):
            check_hypotheses(AtomicMeasureG((Mat2.rotation(0.1), Mat2.rotation(0.37))))


class TestLinearization:
    def test_identity(self):
        rep = linearization_probe(Mat2.identity(), ProjPoint.line(1, 0), RADII, 1000, seed=0)
        assert rep.slope >= 1.8

    def test_diag8(self):
        rep = linearization_probe(Mat2.diag(8, 1 / 8), ProjPoint.line(1, 0), RADII, 1000, seed=0)
        assert 1.8 <= rep.slope <= 2.2

    def test_prefactor_ratio(self):
        big = linearization_probe(Mat2.diag(8, 1 / 8), ProjPoint.line(1, 0), RADII, 1000, seed=0)
        small = linearization_probe(Mat2.diag(2, 1 / 2), ProjPoint.line(1, 0), RADII, 1000, seed=0)
        ratio = big.max_errors[0] / small.max_errors[0]
        assert 1 / 64 <= ratio <= 1 / 4

    def test_too_close_to_contracting_direction(self):
        with pytest.raises(DomainError):
            linearization_probe(Mat2.diag(8, 1 / 8), ProjPoint.line(0.02, 1), RADII, 10, seed=0)


class TestActionConvolution:
    def test_identity(self, s4_points):
        out = action_convolution(AtomicMeasureG((Mat2Q.identity(),)), s4_points, seed=0)
        # resampling with replacement only: TV at level 12 within sampling noise
        assert total_variation(out, s4_points, 12) <= 0.02

    def test_rotation_isometry(self, s4_points):
        rot = AtomicMeasureG((Mat2.rotation(0.3),))
        out = action_convolution(rot, s4_points, seed=0)
        # a shifted dyadic cell meets at most two cells, so entropies differ by at most 1 bit
        for n in range(4, 21, 2):
            delta = shannon_entropy(histogram(out, n)) - shannon_entropy(histogram(s4_points, n))
            assert abs(delta) <= 1.05
            if n >= 10:
                assert abs(delta) / n <= 0.05

    def test_entropy_gain_sign(self, s4, s4_points):
        for N in (6, 8, 10):
            diag = action_entropy_diagnostic(s4, s4_points, N, seed=0)
            assert diag.ell == math.floor(2 * math.log2(s4.mat2()[0].norm()))
            assert diag.gain >= -0.02


class TestProperties:
    @pytest.mark.parametrize("lam", [2, 3, 4])
    def test_non_atomic(self, lam):
        pts = sample_stationary(AtomicMeasureG.uniform(s_lambda(lam)), 128, 1_000_000, seed=3)
        slope = entropy_dimension_estimate(pts, *default_k_window(pts.size)).slope
        assert largest_cell_mass(pts, 20) <= 10 * 2.0 ** (-20 * slope)
        assert slope <= 1.02

    def test_clamp(self, uniform_points, cantor_points, s4_points):
        for pts in (uniform_points, cantor_points, s4_points):
            assert entropy_dimension_estimate(pts, *default_k_window(pts.size)).slope <= 1.02

    def test_concentration_shift(self, s4_points):
        coarse = local_dimension_profile(s4_points, 4000, 2.0**-8, 2.0**-6, seed=2)
        fine = local_dimension_profile(s4_points, 4000, 2.0**-10, 2.0**-8, seed=2)
        assert fine.std < coarse.std

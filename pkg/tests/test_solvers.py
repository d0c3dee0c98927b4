import math

import pytest

from qbinomial.distributions import Heine, KempBinomial, heine_mean, kb_moments
from qbinomial.qcalc import QBase, q_number
from qbinomial.solvers import (
    BracketError,
    theta_for_mean,
    theta_for_poisson,
    theta_limit_for_mean,
)

Q5 = QBase(0.5)


class TestThetaForPoisson:
    def test_direct_value(self):
        # [1]_q = 1, so theta = lambda
        assert theta_for_poisson(2, Q5, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_formula(self):
        assert theta_for_poisson(10, Q5, 2.0) == pytest.approx(
            2.0 / q_number(8, Q5), rel=1e-15
        )

    def test_q_to_1_gives_binomial_success_probability(self):
        theta = theta_for_poisson(10, QBase(0.9999), 2.0)
        assert theta / (1 + theta) == pytest.approx(0.2, abs=1e-3)

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            theta_for_poisson(5, Q5, 5.0)
        with pytest.raises(ValueError):
            theta_for_poisson(5, Q5, 0.0)


class TestThetaForMean:
    def test_inverts_known_moment(self):
        # KB(2, 1, 0.5) has mean 5/6
        sol = theta_for_mean(2, Q5, 5.0 / 6.0)
        assert sol.theta == pytest.approx(1.0, abs=1e-10)
        assert sol.residual <= 1e-12

    def test_small_mu_gives_small_theta(self):
        sol = theta_for_mean(10, Q5, 1e-8)
        assert 0 < sol.theta < 1e-7
        assert sol.residual <= 1e-12

    def test_residual_meets_target_across_grid(self):
        for n in (2, 5, 20, 100, 200):
            sol = theta_for_mean(n, Q5, 1.0)
            assert sol.residual <= 1e-12
            back = kb_moments(KempBinomial(n, sol.theta, Q5)).mean
            assert back == pytest.approx(1.0, abs=1e-11)

    def test_theta_sequence_strictly_decreasing(self):
        thetas = [theta_for_mean(n, Q5, 1.0).theta for n in range(2, 51)]
        assert all(a > b for a, b in zip(thetas, thetas[1:]))

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            theta_for_mean(3, Q5, 2.0)

    def test_determinism(self):
        a = theta_for_mean(37, QBase(0.35), 2.5)
        b = theta_for_mean(37, QBase(0.35), 2.5)
        assert (a.theta, a.residual, a.iterations) == (b.theta, b.residual, b.iterations)


class TestThetaLimitForMean:
    def test_finite_solution_converges_to_limit(self):
        lim = theta_limit_for_mean(Q5, 1.0)
        fin = theta_for_mean(200, Q5, 1.0)
        assert abs(fin.theta - lim.theta) < 1e-8

    def test_small_mu(self):
        sol = theta_limit_for_mean(Q5, 1e-9)
        assert 0 < sol.theta < 1e-8

    def test_poisson_scaling_near_q_one(self):
        q = QBase(1 - 1e-4)
        sol = theta_limit_for_mean(q, 1.0)
        assert sol.theta / 1e-4 == pytest.approx(1.0, abs=1e-2)

    def test_residual(self):
        sol = theta_limit_for_mean(Q5, 2.7)
        assert sol.residual <= 1e-12
        assert heine_mean(Heine(sol.theta, Q5)) == pytest.approx(2.7, abs=1e-11)

    def test_mu_validation(self):
        with pytest.raises(ValueError):
            theta_limit_for_mean(Q5, 0.0)


class TestMonotonicityProperties:
    def test_mean_increasing_in_theta(self):
        means = [
            kb_moments(KempBinomial(15, th, Q5)).mean
            for th in (0.1, 0.5, 1.0, 2.0, 5.0, 20.0)
        ]
        assert all(a < b for a, b in zip(means, means[1:]))

    def test_mean_increasing_in_q(self):
        means = [
            kb_moments(KempBinomial(15, 1.0, QBase(qv))).mean
            for qv in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]
        assert all(a < b for a, b in zip(means, means[1:]))

    def test_lemma2_roots_decrease_and_converge(self):
        # roots of mu_n(theta) = mu decrease in n toward the limit root;
        # past n ~ 53 consecutive roots differ by less than 1 ulp (gap ~ q^n)
        limit = theta_limit_for_mean(Q5, 1.0).theta
        prev = math.inf
        for n in (2, 5, 10, 30, 50):
            theta_n = theta_for_mean(n, Q5, 1.0).theta
            assert theta_n < prev
            assert theta_n >= limit - 1e-12
            prev = theta_n
        assert theta_for_mean(200, Q5, 1.0).theta == pytest.approx(limit, abs=1e-8)

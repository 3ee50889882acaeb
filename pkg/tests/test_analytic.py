import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from echochain.analytic import (DephasingParams, anderson_weiss,
                                cn_monte_carlo, field_integral_samples,
                                gamma_i_estimate, gamma_n, protection_ratio)
from echochain.noise import NoiseModel
from echochain.spinchain import ConfigError

H_RMS = 0.0085
GAMMA = 0.25
J_EFF = math.sqrt(0.47**2 + 0.79**2 + 0.37**2)


def model(j_max=1000, h_rms=H_RMS):
    return NoiseModel(h_rms=h_rms, gamma=GAMMA, delta_omega=np.pi / 1000.0,
                      j_max=j_max)


def params(n_spins, j_max=1000, h_rms=H_RMS, **kwargs):
    return DephasingParams(n_spins=n_spins,
                           noise=model(j_max=j_max, h_rms=h_rms), **kwargs)


def aw_quadrature(par, big_t):
    integral, _ = quad(lambda tp: (big_t - tp) * np.exp(-par.noise.gamma * tp),
                       0.0, big_t, limit=200)
    return math.exp(-par.omega_phi_sq * integral)


class TestDephasingParams:
    def test_default_branch_splitting(self):
        assert params(18).branch_splitting == -18.0

    def test_omega_phi_sq(self):
        assert params(18).omega_phi_sq == pytest.approx(
            (18 * H_RMS) ** 2, rel=1e-14)

    def test_splitting_bound(self):
        with pytest.raises(ConfigError):
            params(4, delta_mz=6.0)


class TestAndersonWeiss:
    def test_empty_integral(self):
        assert anderson_weiss(params(18), 0.0) == 1.0

    @pytest.mark.parametrize("big_t", [0.25, 0.5, 3.0, 30.0, 100.0])
    def test_matches_quadrature(self, big_t):
        par = params(18)
        assert anderson_weiss(par, big_t) == pytest.approx(
            aw_quadrature(par, big_t), rel=1e-10)

    def test_frozen_value(self):
        # quadrature oracle output for 18 spins at T = 30
        assert anderson_weiss(params(18), 30.0) == pytest.approx(
            0.08762024903076812, rel=1e-10)

    def test_monotone_decreasing_in_time(self):
        par = params(12)
        ts = np.linspace(0.0, 60.0, 25)
        values = [anderson_weiss(par, t) for t in ts]
        assert np.all(np.diff(values) < 0)

    def test_monotone_in_noise_strength_and_splitting(self):
        at = lambda p: anderson_weiss(p, 20.0)
        assert at(params(12, h_rms=0.004)) > at(params(12, h_rms=0.009))
        assert (at(params(12, delta_mz=-4.0))
                > at(params(12, delta_mz=-11.0)))

    def test_affine_log_tail(self):
        # log C -> -gamma_n*T + w2/gamma^2 with residual w2 e^{-gT}/g^2
        par = params(18)
        rate = gamma_n(par)
        offset = par.omega_phi_sq / GAMMA**2
        for big_t in (60.0, 80.0):
            log_c = math.log(anderson_weiss(par, big_t))
            residual = par.omega_phi_sq * math.exp(-GAMMA * big_t) / GAMMA**2
            assert log_c - (-rate * big_t + offset) == pytest.approx(
                -residual, abs=1e-12)

    def test_numeric_tail_slope_is_gamma_n(self):
        par = params(18)
        ts = np.linspace(40.0, 80.0, 41)
        logs = np.log([anderson_weiss(par, t) for t in ts])
        slope = np.polyfit(ts, logs, 1)[0]
        assert -slope == pytest.approx(gamma_n(par), rel=0.01)


class TestRates:
    def test_gamma_n_paper_point(self):
        assert gamma_n(params(18)) == pytest.approx(324 * H_RMS**2 / GAMMA,
                                                    rel=1e-12)
        assert gamma_n(params(18)) == pytest.approx(9.3636e-2, rel=1e-4)

    def test_gamma_n_zero_noise(self):
        assert gamma_n(params(10, h_rms=0.0)) == 0.0

    def test_gamma_n_quadratic_scaling(self):
        assert gamma_n(params(20)) == pytest.approx(4 * gamma_n(params(10)),
                                                    rel=1e-12)

    def test_gamma_i_trivial(self):
        assert gamma_i_estimate(1, 1.0, 1.0, prefactor=1.0) == 1.0

    def test_gamma_i_paper_point(self):
        expected = 0.96 * 18 * H_RMS**2 / J_EFF
        value = gamma_i_estimate(18, H_RMS, J_EFF)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(1.26e-3, rel=1e-2)

    def test_rate_ratio_is_order_hundred(self):
        ratio = gamma_n(params(18)) / gamma_i_estimate(18, H_RMS, J_EFF)
        assert ratio == pytest.approx(18 * J_EFF / (0.96 * GAMMA), rel=1e-12)
        assert 30 < ratio < 300

    def test_protection_ratio(self):
        assert protection_ratio(18, J_EFF, GAMMA) == pytest.approx(71.345,
                                                                   rel=1e-3)
        assert protection_ratio(36, J_EFF, GAMMA) == pytest.approx(
            2 * protection_ratio(18, J_EFF, GAMMA), rel=1e-12)
        assert protection_ratio(1, 0.25, 0.25) == 1.0

    def test_guards(self):
        with pytest.raises(ConfigError):
            gamma_i_estimate(10, H_RMS, 0.0)
        with pytest.raises(ConfigError):
            protection_ratio(10, 1.0, 0.0)


class TestFieldIntegralSamples:
    def test_deterministic_by_seed(self):
        m = model(j_max=200)
        a = field_integral_samples(m, 5.0, 64, seed=3)
        b = field_integral_samples(m, 5.0, 64, seed=3)
        assert np.array_equal(a, b)

    def test_variance_matches_exponential_kernel(self):
        # Var(int_0^T h) = 2 h^2 (gamma T - 1 + e^{-gamma T}) / gamma^2
        m = model(j_max=5000)
        tau0 = 5.0
        samples = field_integral_samples(m, tau0, 20000, seed=11)
        gt = GAMMA * 2.0 * tau0
        expected = 2.0 * H_RMS**2 * (gt - 1 + math.exp(-gt)) / GAMMA**2
        assert samples.var() == pytest.approx(expected, rel=0.05)

    def test_zero_mean(self):
        samples = field_integral_samples(model(j_max=500), 4.0, 5000, seed=13)
        assert abs(samples.mean()) <= 4.0 * samples.std() / math.sqrt(5000)


class TestCnMonteCarlo:
    def test_tau0_zero_is_exactly_one(self):
        point = cn_monte_carlo(params(18), 0.0, 500, seed=1)
        assert point.c_value == 1.0
        assert point.std_error == 0.0

    def test_zero_splitting_is_exactly_one(self):
        point = cn_monte_carlo(params(8, delta_mz=0.0), 7.0, 500, seed=1)
        assert point.c_value == 1.0

    def test_sample_floor(self):
        with pytest.raises(ConfigError):
            cn_monte_carlo(params(8), 1.0, 99)

    def test_channel_and_counts(self):
        point = cn_monte_carlo(params(8), 1.0, 256, seed=2)
        assert point.channel == "noninteracting"
        assert point.n_realizations == 256

    def test_matches_bessel_product_oracle(self):
        # discrete model has the exact value prod_j J0(dmz * u_j)
        m = model(j_max=300)
        par = DephasingParams(12, m)
        tau0 = 3.0
        omega = m.frequencies
        kernel = np.where(omega == 0.0, tau0,
                          np.sin(omega * tau0) / np.where(omega == 0.0, 1.0,
                                                          omega))
        args = par.branch_splitting * 2.0 * m.amplitudes * kernel
        exact = abs(np.prod(j0(args)))
        point = cn_monte_carlo(par, tau0, 20000, seed=5)
        assert abs(point.c_value - exact) <= 3.0 * point.std_error

    @pytest.mark.parametrize("tau0", [2.0, 10.0])
    def test_agrees_with_anderson_weiss(self, tau0):
        par = params(14, j_max=5000)
        point = cn_monte_carlo(par, tau0, 4000, seed=7)
        reference = anderson_weiss(par, 2.0 * tau0)
        assert abs(point.c_value - reference) <= (
            3.0 * point.std_error + 0.02 * reference)

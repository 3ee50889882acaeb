"""Closed-form and Monte Carlo results for the noninteracting channel.

For a noninteracting chain the noise only imprints a random relative phase
between the two branch states,

    dphi(2 tau0) = delta_mz * integral_0^{2 tau0} h(t') dt',

so the coherence is a pure phase average.  Two evaluators are provided:

* cn_monte_carlo: the phase average over explicit random-phase draws of
  the harmonic noise model (the discrete-spectrum ground truth).
* anderson_weiss: the motional-narrowing closed form
  exp[-w2 * int_0^T (T - t') exp(-gamma t') dt'] with w2 the mean-square
  phase velocity, evaluated through its exact antiderivative.

Plus the asymptotic decay rates: gamma_n for the noninteracting channel,
the order-of-magnitude estimate gamma_i_estimate for the interacting one,
and their ratio, which measures how much coherence time the echo buys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import CoherencePoint
from .noise import NoiseModel
from .spinchain import ConfigError

_MC_CHUNK = 4_000_000


@dataclass(frozen=True)
class DephasingParams:
    """Branch-pair dephasing inputs: system size, noise, branch splitting.

    delta_mz is the magnetization difference M_z2 - M_z1 of the superposed
    branches; for the all-up/all-down pair it is -n_spins.  The decay-rate
    formulas are quadratic in delta_mz, so its sign never matters.
    """

    n_spins: int
    noise: NoiseModel
    delta_mz: float | None = None

    def __post_init__(self):
        if self.delta_mz is not None and abs(self.delta_mz) > self.n_spins:
            raise ConfigError("|delta_mz| cannot exceed n_spins")

    @property
    def branch_splitting(self) -> float:
        return float(-self.n_spins if self.delta_mz is None else self.delta_mz)

    @property
    def omega_phi_sq(self) -> float:
        """Mean-square phase velocity (delta_mz * h_rms)**2."""
        return (self.branch_splitting * self.noise.h_rms) ** 2


def field_integral_samples(model: NoiseModel, tau0: float, n_samples: int,
                           seed: int = 0) -> np.ndarray:
    """Samples of integral_0^{2 tau0} h(t') dt' over random phase draws.

    Each harmonic integrates to 2 c_j sin(omega_j tau0)/omega_j *
    cos(omega_j tau0 + alpha_j); the j = 0 factor is the removable-limit
    value tau0.
    """
    omega = model.frequencies
    kernel = np.empty_like(omega)
    nonzero = omega != 0.0
    kernel[nonzero] = np.sin(omega[nonzero] * tau0) / omega[nonzero]
    kernel[~nonzero] = tau0
    weights = 2.0 * model.amplitudes * kernel
    a = weights * np.cos(omega * tau0)
    b = weights * np.sin(omega * tau0)

    rng = np.random.default_rng(int(seed))
    out = np.empty(n_samples)
    n_h = omega.size
    chunk = max(1, _MC_CHUNK // n_h)
    for lo in range(0, n_samples, chunk):
        m = min(chunk, n_samples - lo)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(m, n_h))
        out[lo:lo + m] = np.cos(phases) @ a - np.sin(phases) @ b
    return out


def cn_monte_carlo(params: DephasingParams, tau0: float, n_samples: int,
                   seed: int = 0) -> CoherencePoint:
    """Noninteracting coherence |<cos(delta_mz * int h)>| by phase sampling."""
    if n_samples < 100:
        raise ConfigError("cn_monte_carlo needs n_samples >= 100")
    if tau0 < 0:
        raise ConfigError("tau0 must be >= 0")
    integrals = field_integral_samples(params.noise, tau0, n_samples, seed)
    cosines = np.cos(params.branch_splitting * integrals)
    c_value = abs(float(cosines.mean()))
    std_error = float(cosines.std(ddof=1) / math.sqrt(n_samples))
    return CoherencePoint(tau0=float(tau0), c_value=c_value,
                          std_error=std_error, n_realizations=n_samples,
                          channel="noninteracting")


def anderson_weiss(params: DephasingParams, big_t: float) -> float:
    """Motional-narrowing coherence at total time big_t (= 2*tau0).

    Uses the exact antiderivative of (T - t') exp(-gamma t'):
    the exponent is w2 * (gamma*T - 1 + exp(-gamma*T)) / gamma**2, written
    with expm1 to stay accurate at small gamma*T.
    """
    if big_t < 0:
        raise ConfigError("big_t must be >= 0")
    gamma = params.noise.gamma
    gt = gamma * big_t
    integral = (gt + math.expm1(-gt)) / gamma**2
    return math.exp(-params.omega_phi_sq * integral)


def gamma_n(params: DephasingParams) -> float:
    """Asymptotic noninteracting decay rate delta_mz**2 h_rms**2 / gamma.

    For the all-up/all-down branch pair delta_mz = -n_spins, so this is
    the familiar n_spins**2 scaling.
    """
    return params.branch_splitting**2 * params.noise.h_rms**2 / params.noise.gamma


def gamma_i_estimate(n_spins: int, h_rms: float, j_eff: float,
                     prefactor: float = 0.96) -> float:
    """Interacting-channel decay-rate estimate, order of magnitude only.

    Motional narrowing by the internal dynamics replaces 1/gamma with
    1/j_eff and one factor n_spins survives: prefactor * n * h**2 / j_eff.
    """
    if j_eff <= 0:
        raise ConfigError("j_eff must be > 0")
    return prefactor * n_spins * h_rms**2 / j_eff


def protection_ratio(n_spins: int, j_eff: float, gamma: float) -> float:
    """gamma_n / gamma_i ~ n_spins * j_eff / gamma (no prefactor)."""
    if gamma <= 0:
        raise ConfigError("gamma must be > 0")
    return n_spins * j_eff / gamma

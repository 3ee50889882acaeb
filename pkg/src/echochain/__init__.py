"""echochain: Loschmidt-echo protection of spin-chain superpositions.

Simulates a periodic spin-1/2 XYZ chain in a classical fluctuating field,
reverses the interaction at tau0, and measures how much coherence of the
all-up/all-down superposition survives at 2*tau0 -- in both the
interacting (echo-protected) and noninteracting (bare dephasing) channels,
together with the closed-form decay rates the two channels obey.
"""

__version__ = "0.1.0"

from .analytic import (DephasingParams, anderson_weiss, cn_monte_carlo,
                       field_integral_samples, gamma_i_estimate, gamma_n,
                       protection_ratio)
from .coherence import (CoherenceCurve, CoherencePoint, coherence_from_ensemble,
                        coherence_scan)
from .config import RunConfig, load_config
from .dynamics import (EchoRunRecord, EchoSchedule, IntegrationError, evolve,
                       magnetization_curves, magnetization_records, rk4_step)
from .fitting import (FitError, RateFit, fit_exponential_tail,
                      fit_linear_early)
from .noise import (NoiseModel, NoiseRealization, autocorrelation_estimate,
                    sample_realization)
from .seeding import child_seed
from .spinchain import (ChainCouplings, ConfigError, SpinBasis, SpinState,
                        all_down, all_up, apply_interaction,
                        apply_magnetization, cat_state, dense_hamiltonian,
                        expectation_mz, product_state, ring_bonds)

__all__ = [
    "__version__",
    "ChainCouplings", "ConfigError", "SpinBasis", "SpinState",
    "all_down", "all_up", "apply_interaction", "apply_magnetization",
    "cat_state", "dense_hamiltonian", "expectation_mz", "product_state",
    "ring_bonds",
    "NoiseModel", "NoiseRealization", "autocorrelation_estimate",
    "sample_realization",
    "EchoRunRecord", "EchoSchedule", "IntegrationError", "evolve",
    "magnetization_curves", "magnetization_records", "rk4_step",
    "CoherenceCurve", "CoherencePoint", "coherence_from_ensemble",
    "coherence_scan",
    "DephasingParams", "anderson_weiss", "cn_monte_carlo",
    "field_integral_samples", "gamma_i_estimate", "gamma_n",
    "protection_ratio",
    "FitError", "RateFit", "fit_exponential_tail", "fit_linear_early",
    "RunConfig", "load_config", "child_seed",
]

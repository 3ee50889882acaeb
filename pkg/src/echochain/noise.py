"""Classical colored noise h(t) built from discrete Fourier harmonics.

The field is a random-phase harmonic sum

    h(t) = sum_j  c_j cos(omega_j t + alpha_j),   omega_j = delta_omega * j,

over integer j in [-j_max, j_max], with Lorentzian spectral amplitudes
c_j = A * h_rms / sqrt(omega_j**2 + gamma**2).  The normalization A is
fixed by sum_j c_j**2 / 2 = h_rms**2, which makes the ensemble variance of
h(t) equal h_rms**2 exactly and reproduces the correlation function
h_rms**2 * exp(-gamma*|t|) in the dense-spectrum limit.  The j = 0 term is
kept; it is a random DC offset consistent with the Lorentzian spectrum.

h(t) is exactly periodic with period 2*pi/delta_omega; simulations must
stay inside one period (the dynamics module asserts this at run setup).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .seeding import child_seed
from .spinchain import ConfigError

# elements per temporary block in chunked evaluations, keeps memory modest
_CHUNK_BUDGET = 4_000_000
# largest FFT the grid evaluator will attempt before falling back
_MAX_FFT_LEN = 1 << 26


@dataclass(frozen=True)
class NoiseModel:
    """Lorentzian-spectrum harmonic noise ensemble (immutable, shareable)."""

    h_rms: float
    gamma: float
    delta_omega: float
    j_max: int

    def __post_init__(self):
        if self.h_rms < 0:
            raise ConfigError("h_rms must be >= 0")
        if self.gamma <= 0:
            raise ConfigError("gamma must be > 0")
        if self.delta_omega <= 0:
            raise ConfigError("delta_omega must be > 0")
        if self.j_max < 1:
            raise ConfigError("j_max must be >= 1")

    @property
    def n_harmonics(self) -> int:
        return 2 * self.j_max + 1

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.delta_omega

    @cached_property
    def frequencies(self) -> np.ndarray:
        """omega_j for j = -j_max .. j_max, ascending."""
        j = np.arange(-self.j_max, self.j_max + 1, dtype=np.float64)
        return self.delta_omega * j

    @cached_property
    def normalization(self) -> float:
        """A such that sum_j c_j**2 / 2 = h_rms**2."""
        inv = 1.0 / (self.frequencies**2 + self.gamma**2)
        return float(np.sqrt(2.0 / inv.sum()))

    @cached_property
    def amplitudes(self) -> np.ndarray:
        """Spectral amplitudes c_j, positive and even in j."""
        return (self.normalization * self.h_rms
                / np.sqrt(self.frequencies**2 + self.gamma**2))

    def correlation(self, t) -> np.ndarray:
        """Exact ensemble correlation <h(0)h(t)> of the harmonic model."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        c2 = 0.5 * self.amplitudes**2
        out = np.empty(t.shape)
        for i, ti in enumerate(t):
            out[i] = float(c2 @ np.cos(self.frequencies * ti))
        return out

    def target_correlation(self, t) -> np.ndarray:
        """The ideal h_rms**2 * exp(-gamma*|t|) the model approximates."""
        t = np.asarray(t, dtype=np.float64)
        return self.h_rms**2 * np.exp(-self.gamma * np.abs(t))


@dataclass(frozen=True)
class NoiseRealization:
    """One sampled trajectory, fully determined by (model, seed)."""

    model: NoiseModel
    phases: np.ndarray
    seed: int

    def evaluate(self, t):
        """h(t) for scalar or array t; O(n_harmonics) per time point."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.zeros(t_arr.shape[0])
        omega = self.model.frequencies
        amps = self.model.amplitudes
        block = max(1, _CHUNK_BUDGET // max(1, omega.size))
        for lo in range(0, t_arr.size, block):
            tb = t_arr[lo:lo + block]
            args = np.outer(tb, omega)
            args += self.phases
            out[lo:lo + block] = np.cos(args) @ amps
        return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out

    def evaluate_grid(self, spacing: float, n_points: int) -> np.ndarray:
        """h at t = m*spacing for m = 0..n_points-1.

        When the grid spacing divides the noise period an FFT over the
        harmonic phasors gives all points in one pass; otherwise falls
        back to direct evaluation.  Both paths agree with evaluate() to
        better than 1e-9 (tested), so the fast path never changes physics.
        """
        if n_points <= 0:
            return np.zeros(0)
        m = self.model
        fft_len_f = 2.0 * np.pi / (m.delta_omega * spacing)
        fft_len = int(round(fft_len_f))
        usable = (
            abs(fft_len - fft_len_f) < 1e-9 * fft_len
            and m.n_harmonics <= fft_len <= _MAX_FFT_LEN
            and n_points <= fft_len
        )
        if not usable:
            return self.evaluate(spacing * np.arange(n_points))
        j = np.arange(-m.j_max, m.j_max + 1)
        coeff = np.zeros(fft_len, dtype=np.complex128)
        coeff[j % fft_len] = m.amplitudes * np.exp(1j * self.phases)
        # h(m*spacing) = Re sum_j c_j e^{i alpha_j} e^{2 pi i j m / fft_len}
        return (np.fft.ifft(coeff).real * fft_len)[:n_points]


def sample_realization(model: NoiseModel, seed: int) -> NoiseRealization:
    """Draw the random phases of one trajectory from a seeded stream."""
    rng = np.random.default_rng(int(seed))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=model.n_harmonics)
    return NoiseRealization(model=model, phases=phases, seed=int(seed))


def zero_noise(model_like: NoiseModel | None = None) -> NoiseRealization:
    """A convenience h(t) = 0 realization (h_rms = 0, tiny grid)."""
    model = NoiseModel(h_rms=0.0,
                       gamma=model_like.gamma if model_like else 0.25,
                       delta_omega=model_like.delta_omega if model_like
                       else np.pi / 1000.0,
                       j_max=1)
    return sample_realization(model, seed=0)


def field_samples(model: NoiseModel, seeds, times) -> np.ndarray:
    """Matrix h[s, k] = h_seed_s(t_k) for many seeds at once.

    Uses cos(w t + a) = cos(a) cos(w t) - sin(a) sin(w t) so the work is
    two BLAS products instead of per-seed trigonometry over the harmonics.
    """
    times = np.asarray(times, dtype=np.float64)
    seeds = list(seeds)
    omega = model.frequencies
    amps = model.amplitudes
    n_h = omega.size
    out = np.zeros((len(seeds), times.size))
    h_block = max(256, min(n_h, _CHUNK_BUDGET // max(1, times.size)))
    s_block = max(16, _CHUNK_BUDGET // max(1, h_block))
    for hlo in range(0, n_h, h_block):
        hs = slice(hlo, min(n_h, hlo + h_block))
        cos_t = np.cos(np.outer(omega[hs], times))
        sin_t = np.sin(np.outer(omega[hs], times))
        for slo in range(0, len(seeds), s_block):
            rows = range(slo, min(len(seeds), slo + s_block))
            ph = np.empty((len(rows), hs.stop - hs.start))
            for r, s in enumerate(rows):
                rng = np.random.default_rng(int(seeds[s]))
                # must match sample_realization's draw order exactly
                ph[r] = rng.uniform(0.0, 2.0 * np.pi,
                                    size=n_h)[hs]
            out[slo:slo + len(rows)] += (amps[hs] * np.cos(ph)) @ cos_t
            out[slo:slo + len(rows)] -= (amps[hs] * np.sin(ph)) @ sin_t
    return out


def autocorrelation_estimate(model: NoiseModel, lags, n_seeds: int,
                             master_seed: int = 0):
    """Ensemble estimate of <h(0)h(t)> with standard errors.

    Returns (estimates, std_errors), one entry per lag.
    """
    if n_seeds < 100:
        raise ConfigError("autocorrelation estimate needs n_seeds >= 100")
    lags = np.asarray(lags, dtype=np.float64)
    seeds = [child_seed(master_seed, i) for i in range(n_seeds)]
    times = np.concatenate(([0.0], lags))
    h = field_samples(model, seeds, times)
    products = h[:, :1] * h[:, 1:]
    estimates = products.mean(axis=0)
    std_errors = products.std(axis=0, ddof=1) / np.sqrt(n_seeds)
    return estimates, std_errors


def write_trace_csv(realization: NoiseRealization, times, path) -> None:
    """Dump one sampled trajectory as CSV (columns: t, h)."""
    times = np.asarray(times, dtype=np.float64)
    values = realization.evaluate(times)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "h"])
        for t, v in zip(times, values):
            writer.writerow([f"{t:.17g}", f"{v:.17g}"])

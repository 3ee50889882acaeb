"""Ensemble coherence measure C(2*tau0) = 2|<c1* c2>| over noise realizations.

The modulus is taken after ensemble averaging, never per realization:
unitary dynamics preserves coherence in each run, and only the ensemble
over noise trajectories dephases.  Error bars are nonparametric bootstrap
over realizations (C is a nonlinear statistic of the mean).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .config import RunConfig
from .noise import NoiseModel, sample_realization
from .seeding import child_seed
from .spinchain import ChainCouplings, ConfigError, SpinBasis, cat_state

CHANNELS = ("interacting", "noninteracting")
BOOTSTRAP_RESAMPLES = 1000
# stream tags keeping simulator seeds and phase-average seeds disjoint
_STREAM_INTERACTING = 0
_STREAM_NONINTERACTING = 1


@dataclass(frozen=True)
class CoherencePoint:
    """C(2*tau0) at one reversal time, with ensemble statistics."""

    tau0: float
    c_value: float
    std_error: float
    n_realizations: int
    channel: str

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if not 0.0 <= self.c_value <= 1.0 + 3.0 * self.std_error + 1e-9:
            raise ConfigError(
                f"C={self.c_value} exceeds 1 + 3*std_error; "
                "ensemble statistics are inconsistent")

    def to_dict(self) -> dict:
        return {"tau0": self.tau0, "c_value": self.c_value,
                "std_error": self.std_error,
                "n_realizations": self.n_realizations,
                "channel": self.channel}


def point_from_dict(d: dict) -> CoherencePoint:
    return CoherencePoint(tau0=d["tau0"], c_value=d["c_value"],
                          std_error=d["std_error"],
                          n_realizations=d["n_realizations"],
                          channel=d["channel"])


@dataclass(frozen=True)
class CoherenceCurve:
    """C(2*tau0) versus tau0 for one channel, with the run configuration."""

    points: tuple
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        taus = [p.tau0 for p in pts]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ConfigError("tau0 values must be strictly increasing")
        if len({p.channel for p in pts}) > 1:
            raise ConfigError("curve mixes channels")

    @property
    def channel(self) -> str:
        return self.points[0].channel if self.points else "interacting"

    def tau0_values(self) -> np.ndarray:
        return np.array([p.tau0 for p in self.points])

    def c_values(self) -> np.ndarray:
        return np.array([p.c_value for p in self.points])

    def std_errors(self) -> np.ndarray:
        return np.array([p.std_error for p in self.points])


def bootstrap_std_error(values: np.ndarray,
                        n_resamples: int = BOOTSTRAP_RESAMPLES,
                        seed: int = 0) -> float:
    """Bootstrap standard error of 2|mean(values)| over realizations."""
    values = np.asarray(values)
    n = values.size
    if n < 2:
        return 0.0
    rng = np.random.default_rng(child_seed(seed, n, n_resamples))
    idx = rng.integers(0, n, size=(n_resamples, n))
    resampled = 2.0 * np.abs(values[idx].mean(axis=1))
    return float(resampled.std(ddof=1))


def point_from_amplitudes(tau0: float, c1c2: np.ndarray, channel: str,
                          n_resamples: int = BOOTSTRAP_RESAMPLES) -> CoherencePoint:
    """Aggregate per-realization c1* c2 products into a CoherencePoint."""
    c1c2 = np.asarray(c1c2, dtype=np.complex128)
    c_value = 2.0 * abs(c1c2.mean())
    std_error = bootstrap_std_error(c1c2, n_resamples)
    return CoherencePoint(tau0=tau0, c_value=float(c_value),
                          std_error=std_error,
                          n_realizations=c1c2.size, channel=channel)


def coherence_from_ensemble(records, channel: str = "interacting",
                            n_resamples: int = BOOTSTRAP_RESAMPLES) -> CoherencePoint:
    """C(2*tau0) from echo-run records of one ensemble.

    Refuses mixed-parameter ensembles and repeated noise seeds, then
    computes 2|<c1* c2>| with a bootstrap standard error.
    """
    records = list(records)
    if len(records) < 2:
        raise ConfigError("an ensemble needs at least 2 records")
    ref = records[0].params
    for rec in records[1:]:
        if rec.params != ref:
            raise ConfigError("records with mixed parameters refused")
    seeds = [rec.seed for rec in records]
    if len(set(seeds)) != len(seeds):
        raise ConfigError("records must come from distinct noise seeds")
    vals = np.array([np.conj(r.c1) * r.c2 for r in records])
    return point_from_amplitudes(ref["tau0"], vals, channel, n_resamples)


# ---------------------------------------------------------------------------
# scan machinery


def _static_payload(config: RunConfig) -> tuple:
    return (int(config.n_spins_single), config.j_x, config.j_y, config.j_z,
            config.h_rms, config.gamma, config.delta_omega, int(config.j_max),
            config.dt, config.reversal_error, config.renormalize)


_worker_cache: dict = {}


def _echo_work_item(args):
    """Run one (tau0, realization) echo and return the branch amplitudes.

    Top-level so it pickles into pool workers; static inputs are cached
    per process keyed on the physics parameters.
    """
    static, tau0, tau_idx, r_idx, seed = args
    cached = _worker_cache.get(static)
    if cached is None:
        (n_spins, jx, jy, jz, h_rms, gamma, d_omega, j_max,
         _dt, _eps, _renorm) = static
        basis = SpinBasis(n_spins)
        couplings = ChainCouplings(jx, jy, jz)
        model = NoiseModel(h_rms=h_rms, gamma=gamma,
                           delta_omega=d_omega, j_max=j_max)
        cached = (basis, couplings, model)
        _worker_cache[static] = cached
    basis, couplings, model = cached
    dt, eps, renorm = static[8], static[9], static[10]
    # scans only need the endpoint amplitudes: record once per run
    schedule = dynamics.EchoSchedule(
        tau0=tau0, dt=dt, reversal_error=eps, renormalize=renorm,
        record_stride=max(1, round(2.0 * tau0 / dt)))
    noise = sample_realization(model, seed)
    record = dynamics.evolve(cat_state(basis), couplings, noise, schedule)
    return tau_idx, r_idx, record.c1, record.c2


def coherence_scan(config: RunConfig, tau0_grid=None, n_realizations=None,
                   workers=None, existing=None, on_point=None) -> dict:
    """C(2*tau0) over a tau0 grid for the configured channel(s).

    Realization seeds derive from (master_seed, channel stream, tau0 index,
    realization index), so results are independent of worker count and of
    completion order.  `existing` maps (channel, tau_index) to previously
    computed point dicts (resume support); `on_point` is called with each
    newly computed point payload.  Returns {channel: CoherenceCurve}.
    """
    grid = list(config.tau0_grid if tau0_grid is None else tau0_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("tau0 grid must be strictly increasing")
    n_real = int(config.n_realizations if n_realizations is None
                 else n_realizations)
    workers = int(config.workers if workers is None else workers)
    existing = existing or {}
    channels = (CHANNELS if config.channel == "both" else (config.channel,))

    parameters = config.to_dict()
    results: dict = {}

    if "interacting" in channels:
        points = _scan_interacting(config, grid, n_real, workers,
                                   existing, on_point)
        results["interacting"] = CoherenceCurve(points, parameters)
    if "noninteracting" in channels:
        points = _scan_noninteracting(config, grid, existing, on_point)
        results["noninteracting"] = CoherenceCurve(points, parameters)
    return results


def _scan_interacting(config, grid, n_real, workers, existing, on_point):
    static = _static_payload(config)
    jobs = []
    points_by_idx: dict[int, CoherencePoint] = {}
    for ti, tau0 in enumerate(grid):
        prior = existing.get(("interacting", ti))
        if prior is not None:
            points_by_idx[ti] = point_from_dict(prior)
            continue
        for ri in range(n_real):
            seed = child_seed(config.master_seed, _STREAM_INTERACTING, ti, ri)
            jobs.append((static, float(tau0), ti, ri, seed))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_echo_work_item, jobs,
                                chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        raw = [_echo_work_item(job) for job in jobs]

    by_point: dict[int, list] = {}
    for tau_idx, r_idx, c1, c2 in raw:
        by_point.setdefault(tau_idx, []).append((r_idx, c1, c2))
    for ti, entries in by_point.items():
        entries.sort()
        vals = np.array([np.conj(c1) * c2 for _, c1, c2 in entries])
        point = point_from_amplitudes(grid[ti], vals, "interacting")
        points_by_idx[ti] = point
        if on_point is not None:
            payload = point.to_dict()
            payload["c1c2"] = [[v.real, v.imag] for v in vals]
            on_point("interacting", ti, payload)
    return [points_by_idx[ti] for ti in range(len(grid))]


def _scan_noninteracting(config, grid, existing, on_point):
    from . import analytic  # deferred: analytic uses CoherencePoint

    params = analytic.DephasingParams(n_spins=config.n_spins_single,
                                      noise=config.noise_model())
    points = []
    for ti, tau0 in enumerate(grid):
        prior = existing.get(("noninteracting", ti))
        if prior is not None:
            points.append(point_from_dict(prior))
            continue
        seed = child_seed(config.master_seed, _STREAM_NONINTERACTING, ti)
        point = analytic.cn_monte_carlo(params, float(tau0),
                                        config.n_phase_samples, seed=seed)
        points.append(point)
        if on_point is not None:
            on_point("noninteracting", ti, point.to_dict())
    return points

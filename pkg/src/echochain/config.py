"""Run configuration: one JSON document drives every command.

Defaults are the reference parameter set used throughout: couplings
(-0.47, 0.79, 0.37), h_rms = 0.0085, gamma = 0.25, harmonic grid
delta_omega = pi/1000 with j_max = 100000, dt = 0.01.  All quantities are
in hbar = 1 units.  CLI flags override file keys; the resolved document is
embedded in every output sidecar so that any result is regenerable from
its metadata alone.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, fields, replace

from .dynamics import EchoSchedule
from .noise import NoiseModel
from .spinchain import ChainCouplings, ConfigError, SpinBasis

DEFAULT_TAU0_GRID = [1.5 * k for k in range(21)]  # 0 .. 30


@dataclass(frozen=True)
class RunConfig:
    n_spins: tuple = (12,)
    j_x: float = -0.47
    j_y: float = 0.79
    j_z: float = 0.37
    h_rms: float = 0.0085
    gamma: float = 0.25
    delta_omega: float = math.pi / 1000.0
    j_max: int = 100000
    dt: float = 0.01
    tau0: float = 15.0
    tau0_grid: tuple = tuple(DEFAULT_TAU0_GRID)
    record_stride: int | None = None
    reversal_error: float = 0.0
    renormalize: bool = False
    n_realizations: int = 200
    master_seed: int = 20260809
    n_phase_samples: int = 10000
    channel: str = "both"
    output_dir: str = "echochain-out"
    allow_strong_noise: bool = False
    workers: int = 1

    # ---- derived objects -------------------------------------------------

    @property
    def n_spins_single(self) -> int:
        if len(self.n_spins) != 1:
            raise ConfigError(
                f"this command needs a single n_spins value, got {self.n_spins}")
        return int(self.n_spins[0])

    def basis(self) -> SpinBasis:
        return SpinBasis(self.n_spins_single)

    def couplings(self) -> ChainCouplings:
        return ChainCouplings(self.j_x, self.j_y, self.j_z)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(h_rms=self.h_rms, gamma=self.gamma,
                          delta_omega=self.delta_omega, j_max=self.j_max)

    def schedule(self, tau0: float | None = None) -> EchoSchedule:
        return EchoSchedule(tau0=self.tau0 if tau0 is None else tau0,
                            dt=self.dt, record_stride=self.record_stride,
                            reversal_error=self.reversal_error,
                            renormalize=self.renormalize)

    # ---- validation ------------------------------------------------------

    def validate(self) -> None:
        for n in self.n_spins:
            SpinBasis(int(n))  # range check
        if self.channel not in ("interacting", "noninteracting", "both"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.n_realizations < 1 or self.n_phase_samples < 100:
            raise ConfigError("ensemble sizes too small")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        model = self.noise_model()  # parameter range checks
        if self.h_rms >= self.gamma:
            if not self.allow_strong_noise:
                raise ConfigError(
                    f"h_rms={self.h_rms} >= gamma={self.gamma} leaves the "
                    "weak-noise regime; pass allow_strong_noise to override")
            warnings.warn(
                f"h_rms={self.h_rms} >= gamma={self.gamma}: outside the "
                "weak-noise regime the rate formulas do not apply",
                stacklevel=2)
        # every tau0 must sit on the integrator grid and inside one noise
        # period (the grid may hold a leading 0 for the trivial point)
        for tau0 in (*self.tau0_grid, self.tau0):
            EchoSchedule(tau0=float(tau0), dt=self.dt,
                         record_stride=self.record_stride,
                         reversal_error=self.reversal_error)
            if 2.0 * tau0 >= model.period:
                raise ConfigError(
                    f"2*tau0={2 * tau0} reaches the noise period "
                    f"{model.period:.6g}")

    # ---- (de)serialization -----------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_spins": list(self.n_spins),
            "couplings": {"j_x": self.j_x, "j_y": self.j_y, "j_z": self.j_z},
            "noise": {"h_rms": self.h_rms, "gamma": self.gamma,
                      "delta_omega": self.delta_omega, "j_max": self.j_max},
            "schedule": {"dt": self.dt, "tau0": self.tau0,
                         "tau0_grid": list(self.tau0_grid),
                         "record_stride": self.record_stride,
                         "reversal_error": self.reversal_error,
                         "renormalize": self.renormalize},
            "ensemble": {"n_realizations": self.n_realizations,
                         "master_seed": self.master_seed,
                         "n_phase_samples": self.n_phase_samples},
            "channel": self.channel,
            "output_dir": self.output_dir,
            "allow_strong_noise": self.allow_strong_noise,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known_groups = {"couplings", "noise", "schedule", "ensemble"}
        flat: dict = {}
        for key, value in doc.items():
            if key in known_groups:
                flat.update(value)
            else:
                flat[key] = value
        field_names = {f.name for f in fields(cls)}
        unknown = set(flat) - field_names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "n_spins" in flat:
            n = flat["n_spins"]
            flat["n_spins"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        if "tau0_grid" in flat and flat["tau0_grid"] is not None:
            flat["tau0_grid"] = tuple(flat["tau0_grid"])
        return cls(**flat)

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        if "n_spins" in kwargs and not isinstance(kwargs["n_spins"], tuple):
            n = kwargs["n_spins"]
            kwargs["n_spins"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        if "tau0_grid" in kwargs:
            kwargs["tau0_grid"] = tuple(kwargs["tau0_grid"])
        return replace(self, **kwargs)

    def content_hash(self) -> str:
        """Hash of the physics content (excludes output/worker plumbing)."""
        doc = self.to_dict()
        for transient in ("output_dir", "workers"):
            doc.pop(transient, None)
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))

"""Bit-encoded spin-1/2 chain basis and matrix-free chain operators.

Conventions
-----------
* Basis index b encodes lattice site j as bit j; bit value 1 means spin up,
  i.e. S_z eigenvalue +1/2.  The all-down state is index 0, the all-up
  state is index 2**n - 1.
* Spin operators carry the spin-1/2 normalization (factors of 1/2, not
  bare Pauli matrices); every coupling value in the package assumes this.
* The chain is periodic.  For n_spins = 2 the single bond (0, 1) is
  counted once, never twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels

MAX_DENSE_SPINS = 10


class ConfigError(ValueError):
    """Invalid physical or numerical configuration."""


def ring_bonds(n_spins: int) -> list[tuple[int, int]]:
    """Nearest-neighbor bonds (j, j+1 mod n) of the periodic chain.

    The two-site chain has one bond, not a doubled one.
    """
    if n_spins == 2:
        return [(0, 1)]
    return [(j, (j + 1) % n_spins) for j in range(n_spins)]


@dataclass(frozen=True)
class SpinBasis:
    """Computational basis of an n_spins-site chain, 2 <= n_spins <= 24."""

    n_spins: int

    def __post_init__(self):
        if not 2 <= self.n_spins <= 24:
            raise ConfigError(f"n_spins must be in [2, 24], got {self.n_spins}")

    @property
    def dimension(self) -> int:
        return 1 << self.n_spins

    @cached_property
    def magnetization_table(self) -> np.ndarray:
        """M_z eigenvalue popcount(b) - n_spins/2 for every basis index."""
        idx = np.arange(self.dimension, dtype=np.uint32)
        pop = np.zeros(self.dimension, dtype=np.int64)
        for j in range(self.n_spins):
            pop += (idx >> j) & 1
        return pop.astype(np.float64) - 0.5 * self.n_spins

    @cached_property
    def bond_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(site_a, site_b, xor_masks) for the kernel, one entry per bond."""
        bonds = ring_bonds(self.n_spins)
        site_a = np.array([a for a, _ in bonds], dtype=np.int64)
        site_b = np.array([b for _, b in bonds], dtype=np.int64)
        masks = (1 << site_a.astype(np.int64)) | (1 << site_b.astype(np.int64))
        return site_a, site_b, masks

    def index_of(self, pattern) -> int:
        """Basis index of a per-site up/down pattern (site j -> bit j)."""
        if len(pattern) != self.n_spins:
            raise ConfigError(
                f"pattern length {len(pattern)} != n_spins {self.n_spins}")
        idx = 0
        for j, entry in enumerate(pattern):
            idx |= _as_bit(entry) << j
        return idx


def _as_bit(entry) -> int:
    if isinstance(entry, str):
        token = entry.strip().lower()
        if token in ("up", "u", "1", "+"):
            return 1
        if token in ("down", "d", "0", "-"):
            return 0
        raise ConfigError(f"unrecognized spin pattern entry {entry!r}")
    return 1 if entry else 0


@dataclass(frozen=True)
class ChainCouplings:
    """XYZ nearest-neighbor couplings (hbar = 1 energy units)."""

    j_x: float
    j_y: float
    j_z: float
    reversed: bool = False
    reversal_error: float = 0.0

    def __post_init__(self):
        if self.reversal_error < 0:
            raise ConfigError("reversal_error must be >= 0")

    @property
    def j_eff(self) -> float:
        return math.sqrt(self.j_x**2 + self.j_y**2 + self.j_z**2)

    def reverse(self, epsilon: float = 0.0, xi=(0.0, 0.0, 0.0)) -> "ChainCouplings":
        """Sign-flipped couplings for the echo phase.

        With epsilon > 0 each coupling is independently perturbed as
        -J * (1 + epsilon * xi), modeling an imperfect experimental
        reversal; xi is a fixed unit-variance triple drawn once per run.
        """
        ex, ey, ez = (float(x) for x in xi)
        return ChainCouplings(
            j_x=-self.j_x * (1.0 + epsilon * ex),
            j_y=-self.j_y * (1.0 + epsilon * ey),
            j_z=-self.j_z * (1.0 + epsilon * ez),
            reversed=not self.reversed,
            reversal_error=epsilon,
        )


@dataclass
class SpinState:
    """Complex amplitude vector over the computational basis."""

    basis: SpinBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.dimension,):
            raise ConfigError(
                f"amplitude vector of length {amps.shape} does not match "
                f"basis dimension {self.basis.dimension}")
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "SpinState":
        return SpinState(self.basis, self.amplitudes.copy())

    def overlap(self, other: "SpinState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def product_state(basis: SpinBasis, pattern) -> SpinState:
    """Computational basis state for a per-site up/down pattern."""
    amps = np.zeros(basis.dimension, dtype=np.complex128)
    amps[basis.index_of(pattern)] = 1.0
    return SpinState(basis, amps)


def all_up(basis: SpinBasis) -> SpinState:
    return product_state(basis, ["up"] * basis.n_spins)


def all_down(basis: SpinBasis) -> SpinState:
    return product_state(basis, ["down"] * basis.n_spins)


def cat_state(basis: SpinBasis) -> SpinState:
    """(|all up> + |all down>)/sqrt(2), the maximally noise-split pair."""
    amps = np.zeros(basis.dimension, dtype=np.complex128)
    amps[basis.dimension - 1] = 1.0 / math.sqrt(2.0)
    amps[0] = 1.0 / math.sqrt(2.0)
    return SpinState(basis, amps)


def apply_hamiltonian(state: SpinState, couplings: ChainCouplings,
                      h: float = 0.0) -> SpinState:
    """(H_int + h * M_z) |state>, matrix-free; linear in the amplitudes."""
    site_a, site_b, masks = state.basis.bond_arrays
    out = np.empty_like(state.amplitudes)
    _kernels.apply_hamiltonian(
        state.amplitudes, out, site_a, site_b, masks,
        couplings.j_x, couplings.j_y, couplings.j_z,
        float(h), state.basis.magnetization_table)
    return SpinState(state.basis, out)


def apply_interaction(state: SpinState, couplings: ChainCouplings) -> SpinState:
    """H_int |state> for the periodic XYZ chain."""
    return apply_hamiltonian(state, couplings, h=0.0)


def apply_magnetization(state: SpinState) -> SpinState:
    """M_z |state>: diagonal multiply by popcount(b) - n_spins/2."""
    return SpinState(state.basis,
                     state.amplitudes * state.basis.magnetization_table)


def expectation_mz(state: SpinState) -> float:
    """<state| M_z |state>, real by construction."""
    weights = np.abs(state.amplitudes) ** 2
    return float(weights @ state.basis.magnetization_table)


def dense_hamiltonian(basis: SpinBasis, couplings: ChainCouplings,
                      h: float = 0.0) -> np.ndarray:
    """Explicit (H_int + h * M_z) matrix, as a test oracle for small chains.

    Built from Kronecker products of single-site spin matrices, fully
    independent of the bit kernel.  Refused above MAX_DENSE_SPINS to guard
    against runaway allocations.
    """
    n = basis.n_spins
    if n > MAX_DENSE_SPINS:
        raise ConfigError(
            f"dense oracle refused for n_spins={n} > {MAX_DENSE_SPINS}")
    # single-site matrices in the (down, up) = (bit 0, bit 1) ordering
    sx = 0.5 * np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = 0.5 * np.array([[0, 1j], [-1j, 0]], dtype=np.complex128)
    sz = 0.5 * np.array([[-1, 0], [0, 1]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)

    def site_op(site: int, mat: np.ndarray) -> np.ndarray:
        op = np.array([[1.0 + 0.0j]])
        # bit j of the index selects the factor for site j, so site 0 is
        # the innermost Kronecker factor
        for j in reversed(range(n)):
            op = np.kron(op, mat if j == site else eye)
        return op

    dim = basis.dimension
    ham = np.zeros((dim, dim), dtype=np.complex128)
    for a, b in ring_bonds(n):
        ham += couplings.j_x * site_op(a, sx) @ site_op(b, sx)
        ham += couplings.j_y * site_op(a, sy) @ site_op(b, sy)
        ham += couplings.j_z * site_op(a, sz) @ site_op(b, sz)
    if h != 0.0:
        for j in range(n):
            ham += h * site_op(j, sz)
    return ham

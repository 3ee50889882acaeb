"""Numba kernels for the state-evolution hot path.

The Hamiltonian is never stored: each bond of the periodic XYZ chain is
applied directly to the amplitude vector using bit arithmetic on the basis
index.  For a bond (a, b) the three coupling channels reduce to

  z channel     : diagonal, +jz/4 when bits a and b agree, -jz/4 otherwise
  flip-flop     : (jx + jy)/4 on anti-aligned pairs, target index b ^ mask
  double flip   : (jx - jy)/4 on aligned pairs, same target index

where mask has bits a and b set.  Both transverse channels land on the
same XOR target and alignment is invariant under the double flip, so one
fused loop covers all of them.

Kernels are single-threaded on purpose: runs are bit-reproducible and
ensembles parallelize over noise realizations instead.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def apply_hamiltonian(psi, out, site_a, site_b, masks, jx, jy, jz, h, mag):
    """out = (H_int + h * M_z) psi, matrix-free.

    site_a/site_b are the bond endpoint bit positions, masks[k] the XOR
    mask with both endpoint bits set, mag the magnetization table
    popcount(b) - n_spins/2.
    """
    dim = psi.shape[0]
    n_bonds = masks.shape[0]
    jx4 = 0.25 * jx
    jy4 = 0.25 * jy
    jz4 = 0.25 * jz
    for b in range(dim):
        acc = 0.0 + 0.0j
        zsum = 0.0
        for k in range(n_bonds):
            # sign = +1 on aligned bond bits, -1 on anti-aligned
            sign = 1.0 - 2.0 * ((b >> site_a[k] ^ b >> site_b[k]) & 1)
            zsum += sign
            acc += (jx4 - sign * jy4) * psi[b ^ masks[k]]
        out[b] = acc + (jz4 * zsum + h * mag[b]) * psi[b]
    return out


@nb.njit(cache=True)
def rk4_step_inplace(psi, m1, m2, m3, m4, tmp,
                     site_a, site_b, masks, jx, jy, jz,
                     h0, h_half, h1, mag, dt):
    """One classical RK4 step of dpsi/dt = -i H(t) psi, updating psi in place.

    h0, h_half, h1 are the noise field at t, t + dt/2 and t + dt.  The -i
    is folded into the stage coefficients so the Hamiltonian kernel stays
    real-structured: with m_k = H(.) applied to the stage input, the usual
    k_k = -i m_k combinations become complex scalar multipliers.
    """
    dim = psi.shape[0]
    c_half = -0.5j * dt
    c_full = -1.0j * dt
    c_sum = -1.0j * dt / 6.0

    apply_hamiltonian(psi, m1, site_a, site_b, masks, jx, jy, jz, h0, mag)
    for b in range(dim):
        tmp[b] = psi[b] + c_half * m1[b]
    apply_hamiltonian(tmp, m2, site_a, site_b, masks, jx, jy, jz, h_half, mag)
    for b in range(dim):
        tmp[b] = psi[b] + c_half * m2[b]
    apply_hamiltonian(tmp, m3, site_a, site_b, masks, jx, jy, jz, h_half, mag)
    for b in range(dim):
        tmp[b] = psi[b] + c_full * m3[b]
    apply_hamiltonian(tmp, m4, site_a, site_b, masks, jx, jy, jz, h1, mag)
    for b in range(dim):
        psi[b] = psi[b] + c_sum * (m1[b] + 2.0 * (m2[b] + m3[b]) + m4[b])


@nb.njit(cache=True)
def run_steps(psi, m1, m2, m3, m4, tmp, site_a, site_b, masks, jx, jy, jz,
              h_grid, step_offset, n_steps, mag, dt):
    """Advance n_steps RK4 steps with fixed couplings, in place.

    h_grid holds the field on the half-step grid of the whole run; step k
    uses entries 2k, 2k+1, 2k+2.  Batching steps here keeps the per-step
    dispatch cost out of the Python loop.
    """
    for s in range(n_steps):
        k = step_offset + s
        rk4_step_inplace(psi, m1, m2, m3, m4, tmp, site_a, site_b, masks,
                         jx, jy, jz, h_grid[2 * k], h_grid[2 * k + 1],
                         h_grid[2 * k + 2], mag, dt)

"""Dark states ``|D,n>`` and symmetric ground states ``|C^k>``.

``|D,n>`` is built by applying ``[S(B->C) - sum_q (Omega_q/g_q) a_q^dagger]``
n times to ``|C^0, vacuum>``, one excitation sector at a time, then
normalizing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import SymmetricBasis, collective_flip, enumerate_sector, mode_creator
from .model import ModelParams, as_controls


@dataclass(frozen=True)
class DarkState:
    n: int
    amplitudes: np.ndarray
    norm_factor: float
    basis: SymmetricBasis


def symmetric_ground_state(basis: SymmetricBasis, k: int) -> np.ndarray:
    """``|C^k, vacuum>`` as a vector on ``basis``.

    In the occupation representation ``|C^k>`` is a single basis element of
    the k-excitation sector; asking for it in another sector is an error.
    """
    if not 0 <= k <= min(basis.N, basis.n):
        raise ValueError(f"k={k} outside 0..min(N, n)={min(basis.N, basis.n)}")
    if k != basis.n:
        raise ValueError(
            f"|C^{k}> lives in the {k}-excitation sector, not n={basis.n}; "
            f"use basis.shifted({k - basis.n})"
        )
    occ = [0] * (1 + 2 * basis.Q)
    occ[0] = k
    return basis.vector(occ)


def dark_state(
    params: ModelParams,
    controls,
    basis: SymmetricBasis,
    n: int | None = None,
    allow_zero: bool = False,
) -> DarkState:
    """Normalized zero-energy state of the interaction Hamiltonian on ``basis``.

    ``n`` defaults to (and must equal) the sector excitation number. With all
    controls zero the construction degenerates to ``|C^n>``, which is only
    returned when ``allow_zero`` is set.
    """
    omega = as_controls(controls, params.Q)
    if n is None:
        n = basis.n
    if n != basis.n:
        raise ValueError(f"|D,{n}> lives in the {n}-excitation sector, basis has n={basis.n}")
    if not np.any(omega) and not allow_zero:
        raise ValueError("all controls are zero; pass allow_zero=True for the |C^n> limit")
    ratios = omega / params.g_array
    spec = basis.spec
    current = enumerate_sector(spec.with_excitation(0))
    psi = np.ones(1, dtype=complex)
    for step in range(n):
        nxt = basis if step == n - 1 else enumerate_sector(spec.with_excitation(step + 1))
        raise_op = collective_flip(current, "B", "C", target=nxt)
        for q, r in enumerate(ratios, start=1):
            if r != 0:
                raise_op = raise_op - r * mode_creator(current, q, target=nxt)
        psi = raise_op @ psi
        current = nxt
    if n == 0:
        psi = basis.vector([0] * (1 + 2 * basis.Q))
    norm = float(np.linalg.norm(psi))
    if norm == 0:
        raise ValueError("dark-state construction vanished (Fock cutoff too small?)")
    return DarkState(n, psi / norm, norm, basis)


def overlap(state: np.ndarray, reference: np.ndarray) -> float:
    return float(abs(np.vdot(reference, state)) ** 2)


def dark_overlap(state, params, controls, basis, check_norm: bool = True) -> float:
    """``|<D,n|state>|^2`` against the instantaneous dark state of ``controls``."""
    state = np.asarray(state, dtype=complex)
    if check_norm and abs(np.linalg.norm(state) - 1.0) > 1e-6:
        raise ValueError("dark_overlap expects a unit-norm state")
    dark = dark_state(params, controls, basis)
    return overlap(state, dark.amplitudes)


def fock_state(basis: SymmetricBasis, photons) -> np.ndarray:
    """``|C^0; n_1..n_Q>``: all atoms in B and the given photon numbers."""
    photons = tuple(int(p) for p in photons)
    return basis.vector((0,) * (1 + basis.Q) + photons)


def gather_curve(params: ModelParams, basis: SymmetricBasis, mode: int, ratios) -> np.ndarray:
    """Overlap of ``|D,n>`` with all n photons in ``mode`` versus ``Omega/(g sqrt N)``.

    Only ``mode`` carries a control field; row ``[ratio, overlap]``.
    """
    photons = [0] * basis.Q
    photons[mode - 1] = basis.n
    target = fock_state(basis, photons)
    gq = abs(params.g[mode - 1])
    rows = []
    for x in ratios:
        omega = np.zeros(basis.Q, dtype=complex)
        omega[mode - 1] = x * gq * np.sqrt(basis.N)
        rows.append((x, overlap(dark_state(params, omega, basis).amplitudes, target)))
    return np.array(rows)

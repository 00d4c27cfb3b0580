"""Bright/dark basis changes that reduce the multi-Lambda system to a single Lambda.

The atomic transform ``U`` maps ``|A_Q>`` onto the excited bright state
``|EB> = sum_q (Omega_q/Omega)|A_q>``; its other columns span the excited
dark states, which the controls do not couple to ``|C>``. The optical
transform ``W`` (``a_q = sum_s W_qs b_s``) has last column
``(Omega_q/g_q)/R`` so that the mode ``b_Q`` only couples ``|B>`` to ``|EB>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bosonic import induced_unitary
from .hilbert import SymmetricBasis, collective_flip, mode_annihilator, number_operator
from .model import ModelParams, as_controls, build_full_hamiltonian


class BasisUndefinedError(ValueError):
    """All controls vanish, so no bright state or EIT mode exists."""


def householder_completion(v: np.ndarray) -> np.ndarray:
    """Unitary whose last column is the unit vector ``v``.

    Phase-corrected Householder reflection: with ``beta = v[-1] = |beta| e^{i phi}``
    and ``v' = e^{-i phi} v``, ``H = (e + v')(e + v')^dagger / (1 + |beta|) - 1``
    is a Hermitian unitary with ``H e = v'``. Multiplying the last column by
    ``e^{i phi}`` gives ``U e = v``. The denominator is at least one, so no
    pivoting is needed.
    """
    v = np.asarray(v, dtype=complex)
    Q = v.shape[0]
    beta = v[-1]
    phase = beta / abs(beta) if abs(beta) > 0 else 1.0
    e = np.zeros(Q, dtype=complex)
    e[-1] = 1.0
    u = e + v / phase
    U = np.outer(u, u.conj()) / (1.0 + abs(beta)) - np.eye(Q)
    U[:, -1] *= phase
    return U


@dataclass(frozen=True)
class BrightDarkBasis:
    omega_total: float
    eb_coeffs: np.ndarray
    ed_coeffs: np.ndarray  # row r holds <A_q|ED_r>
    U: np.ndarray


@dataclass(frozen=True)
class OpticalBasis:
    R: float
    g_eff: complex
    W: np.ndarray
    bQ_coeffs: np.ndarray  # b_Q = sum_q bQ_coeffs[q] a_q

    @property
    def eit_mode(self) -> np.ndarray:
        """Coefficients of ``b_Q^dagger`` over ``a_q^dagger`` (last column of W)."""
        return self.W[:, -1]


def atomic_transform(params: ModelParams, controls) -> BrightDarkBasis:
    omega = as_controls(controls, params.Q)
    total = float(np.linalg.norm(omega))
    if total == 0:
        raise BasisUndefinedError("bright basis undefined: all controls are zero")
    eb = omega / total
    U = householder_completion(eb)
    return BrightDarkBasis(total, U[:, -1].copy(), U[:, :-1].T.copy(), U)


def optical_transform(params: ModelParams, controls) -> OpticalBasis:
    omega = as_controls(controls, params.Q)
    ratios = omega / params.g_array
    R = float(np.linalg.norm(ratios))
    if R == 0:
        raise BasisUndefinedError("optical basis undefined: all controls are zero")
    W = householder_completion(ratios / R)
    g_eff = float(np.linalg.norm(omega)) / R
    return OpticalBasis(R, g_eff, W, W[:, -1].conj().copy())


def mode_couplings(params: ModelParams, controls):
    """Couplings in the transformed frame.

    Returns ``(G, O)`` with ``G[r, s]`` the strength of ``b_s |E_r><B|`` and
    ``O[r]`` that of ``|E_r><C|`` (both entering with a minus sign), where
    ``E_Q = EB`` and ``E_r = ED_r`` for ``r < Q``.
    """
    omega = as_controls(controls, params.Q)
    U = atomic_transform(params, omega).U
    W = optical_transform(params, omega).W
    G = U.conj().T @ np.diag(params.g_array) @ W
    O = U.conj().T @ omega
    return G, O


def induced_sector_unitary(params, controls, basis: SymmetricBasis) -> sp.csr_matrix:
    """Columns: transformed occupation states expressed in the original basis.

    The symmetric atomic states are treated as bosons over the levels
    ``(C, A_1..A_Q)`` (B fills the rest) and transformed with ``U``; photons
    transform with ``W`` (``b_s^dagger = sum_q W_qs a_q^dagger``).
    """
    omega = as_controls(controls, params.Q)
    U = atomic_transform(params, omega).U
    W = optical_transform(params, omega).W
    Q = params.Q
    single = np.eye(1 + 2 * Q, dtype=complex)
    single[1 : 1 + Q, 1 : 1 + Q] = U
    single[1 + Q :, 1 + Q :] = W
    return induced_unitary(basis, single)


def transformed_hamiltonian(params, controls, basis: SymmetricBasis) -> sp.csr_matrix:
    """``V^dagger H V`` with ``V`` the induced sector unitary.

    Rows and columns are labelled by the same occupation tuples as ``basis``,
    now read as ``(k, m over ED_1..ED_{Q-1}, EB, n over b_1..b_Q)``.
    """
    V = induced_sector_unitary(params, controls, basis)
    H = build_full_hamiltonian(params, controls, basis)
    return (V.conj().T @ H @ V).tocsr()


def direct_transformed_hamiltonian(params, controls, basis) -> sp.csr_matrix:
    """Same operator built from the transformed couplings ``(G, O)``.

    Uses that the collective operators obey the same algebra in any
    single-particle basis, so the Hamiltonian assembler applies with a
    general coupling matrix.
    """
    G, O = mode_couplings(params, controls)
    Q = params.Q
    dim = basis.dim
    try:
        raised = basis.shifted(+1)
    except ValueError:
        raised = None
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for r in range(1, Q + 1):
        if raised is not None:
            up = collective_flip(basis, "B", f"A{r}", target=raised)
            for s in range(1, Q + 1):
                if G[r - 1, s - 1] != 0:
                    H = H - G[r - 1, s - 1] * (mode_annihilator(raised, s, basis) @ up)
        H = H - O[r - 1] * collective_flip(basis, "C", f"A{r}")
    H = H + H.conj().T
    H = H - 0.5 * params.delta * number_operator(basis, "B")
    H = H - 0.5 * params.Delta * number_operator(basis, "C")
    return H.tocsr()


def structure_report(H_transformed, basis: SymmetricBasis) -> float:
    """Largest magnitude among elements that must vanish in the transformed frame.

    Forbidden: ``C <-> ED_r`` flips and ``b_Q``-photon absorption into
    ``ED_r`` (``r < Q``). Zero for ``Q = 1``.
    """
    Q = basis.Q
    if Q == 1:
        return 0.0
    H = sp.csr_matrix(H_transformed)
    occ = basis.occupations
    worst = 0.0
    coo = H.tocoo()
    for i, j, v in zip(coo.row, coo.col, coo.data):
        d = occ[i] - occ[j]
        for r in range(1, Q):
            c_to_ed = np.zeros_like(d)
            c_to_ed[0] = -1
            c_to_ed[r] = 1
            bq_to_ed = np.zeros_like(d)
            bq_to_ed[r] = 1
            bq_to_ed[2 * Q] = -1
            for pattern in (c_to_ed, bq_to_ed):
                if np.array_equal(d, pattern) or np.array_equal(d, -pattern):
                    worst = max(worst, abs(v))
    return float(worst)


def lambda_reference(g: complex, omega: complex, delta: float, Delta: float, N: int = 1):
    """Single-Lambda Hamiltonian on ``(|B..B; 1 photon>, |EB>, |C>)``.

    For ``N`` atoms the photon coupling is collectively enhanced by ``sqrt(N)``
    and the ground-state detunings count all atoms left in ``B``.
    """
    gN = np.sqrt(N) * g
    return np.array(
        [
            [-0.5 * delta * N, -np.conj(gN), 0.0],
            [-gN, -0.5 * delta * (N - 1), -omega],
            [0.0, -np.conj(omega), -0.5 * delta * (N - 1) - 0.5 * Delta],
        ],
        dtype=complex,
    )


def reduced_lambda_block(H_transformed, basis: SymmetricBasis) -> np.ndarray:
    """Restrict the transformed Hamiltonian (1-excitation sector) to the Lambda states."""
    if basis.n != 1:
        raise ValueError("the reduced Lambda block lives in the 1-excitation sector")
    Q = basis.Q
    zero = [0] * (1 + 2 * Q)
    photon = list(zero)
    photon[2 * Q] = 1
    bright = list(zero)
    bright[Q] = 1
    ground = list(zero)
    ground[0] = 1
    idx = [basis.index[tuple(s)] for s in (photon, bright, ground)]
    H = sp.csr_matrix(H_transformed).toarray()
    return H[np.ix_(idx, idx)]


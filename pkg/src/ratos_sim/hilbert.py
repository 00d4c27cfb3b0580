"""Totally symmetric, excitation-conserving state space of N multi-Lambda atoms
coupled to Q quantized modes.

A basis state is an occupation tuple ``(k, m_1..m_Q, n_1..n_Q)``: ``k`` atoms
in ``|C>``, ``m_q`` atoms in ``|A_q>``, ``n_q`` photons in mode ``q``. The
remaining ``N - k - sum(m)`` atoms sit in ``|B>``. The excitation number
``k + sum(m) + sum(n)`` is conserved by the interaction Hamiltonian, so each
sector is enumerated at fixed excitation number.

Operators that change the excitation number (``sigma_CB``, ``a_q``) map one
sector onto another; pass the image sector as ``target``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import sqrt
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

Occupation = Tuple[int, ...]
Level = Union[str, int]


@dataclass(frozen=True)
class SectorSpec:
    num_atoms: int
    num_modes: int
    excitation_number: int
    fock_cutoffs: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.num_atoms <= 0:
            raise ValueError(f"num_atoms must be positive, got {self.num_atoms}")
        if self.num_modes <= 0:
            raise ValueError(f"num_modes must be positive, got {self.num_modes}")
        if self.excitation_number < 0:
            raise ValueError("excitation_number must be non-negative")
        if self.fock_cutoffs is None:
            object.__setattr__(
                self, "fock_cutoffs", (self.excitation_number,) * self.num_modes
            )
        else:
            cutoffs = tuple(int(c) for c in self.fock_cutoffs)
            if len(cutoffs) != self.num_modes or min(cutoffs) < 0:
                raise ValueError("fock_cutoffs needs one non-negative entry per mode")
            object.__setattr__(self, "fock_cutoffs", cutoffs)
        if self.excitation_number > self.num_atoms + sum(self.fock_cutoffs):
            raise ValueError("empty sector: excitation number exceeds N + sum(cutoffs)")

    def with_excitation(self, n: int) -> "SectorSpec":
        """Same atoms, modes and cutoffs at a different excitation number."""
        return SectorSpec(self.num_atoms, self.num_modes, n, self.fock_cutoffs)


@dataclass(frozen=True)
class SymmetricBasis:
    spec: SectorSpec
    states: Tuple[Occupation, ...]
    index: Dict[Occupation, int] = field(compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def N(self) -> int:
        return self.spec.num_atoms

    @property
    def Q(self) -> int:
        return self.spec.num_modes

    @property
    def n(self) -> int:
        return self.spec.excitation_number

    def __len__(self):
        return len(self.states)

    def __iter__(self) -> Iterator[Occupation]:
        return iter(self.states)

    def shifted(self, dn: int) -> "SymmetricBasis":
        """The sector with excitation number ``n + dn`` (same cutoffs)."""
        return enumerate_sector(self.spec.with_excitation(self.n + dn))

    @cached_property
    def occupations(self) -> np.ndarray:
        """Integer array (dim, 1 + 2Q) of occupation tuples."""
        return np.array(self.states, dtype=int).reshape(self.dim, 1 + 2 * self.Q)

    def level_population(self, level: Level) -> np.ndarray:
        """Number of atoms in ``level`` for every basis state."""
        occ = self.occupations
        slot = _level_slot(level, self.Q)
        if slot is None:
            return self.N - occ[:, : 1 + self.Q].sum(axis=1)
        return occ[:, slot]

    def photon_number(self, mode: int) -> np.ndarray:
        return self.occupations[:, _mode_slot(mode, self.Q)]

    def vector(self, occupation: Sequence[int]) -> np.ndarray:
        """Unit vector on a single occupation tuple."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index[tuple(occupation)]] = 1.0
        return psi

    def label(self, occupation: Sequence[int]) -> str:
        k, m, n = split_occupation(occupation, self.Q)
        return f"k={k} m={m} n={n}"


def split_occupation(occ: Sequence[int], Q: int):
    """Split ``(k, m..., n...)`` into ``(k, m_tuple, n_tuple)``."""
    return occ[0], tuple(occ[1 : 1 + Q]), tuple(occ[1 + Q : 1 + 2 * Q])


def _descending(total: int, caps: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    # compositions of `total` into len(caps) bounded parts, largest-first
    if not caps:
        if total == 0:
            yield ()
        return
    head_cap = min(caps[0], total)
    rest_cap = sum(caps[1:])
    for head in range(head_cap, -1, -1):
        if total - head > rest_cap:
            break
        for tail in _descending(total - head, caps[1:]):
            yield (head,) + tail


def enumerate_sector(spec: SectorSpec) -> SymmetricBasis:
    """All occupation tuples of the sector, in descending lexicographic order."""
    N, Q, n = spec.num_atoms, spec.num_modes, spec.excitation_number
    # atoms in C/A_q are capped by N collectively, photons by per-mode cutoffs
    caps = (N,) * (1 + Q) + tuple(spec.fock_cutoffs)
    states = tuple(
        occ for occ in _descending(n, caps) if sum(occ[: 1 + Q]) <= N
    )
    return SymmetricBasis(spec, states, {s: i for i, s in enumerate(states)})


def _level_slot(level: Level, Q: int) -> Optional[int]:
    """Tuple slot of an atomic level; ``None`` for the implicit B level."""
    if isinstance(level, str):
        name = level.strip().upper()
        if name == "B":
            return None
        if name == "C":
            return 0
        if name.startswith("A") and name[1:].isdigit():
            q = int(name[1:])
            if 1 <= q <= Q:
                return q
        raise ValueError(f"unknown level {level!r} for Q={Q}")
    raise TypeError(f"levels are named 'B', 'C', 'A1'..'A{Q}', got {level!r}")


def _mode_slot(mode: int, Q: int) -> int:
    if not 1 <= mode <= Q:
        raise ValueError(f"mode index {mode} out of range 1..{Q}")
    return Q + mode


def _resolve_target(basis: SymmetricBasis, target: Optional[SymmetricBasis]):
    if target is None:
        return basis
    if target.N != basis.N or target.Q != basis.Q:
        raise ValueError("target sector has different N or Q")
    return target


def _assemble(rows, cols, vals, target: SymmetricBasis, basis: SymmetricBasis):
    return sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(target.dim, basis.dim),
    )


def collective_flip(
    basis: SymmetricBasis,
    from_level: Level,
    to_level: Level,
    target: Optional[SymmetricBasis] = None,
) -> sp.csr_matrix:
    """Collective flip ``sum_j |to><from|_j`` restricted to symmetric states.

    An occupation with ``N_from`` atoms in ``from_level`` and ``N_to`` in
    ``to_level`` maps to ``(N_from - 1, N_to + 1)`` with amplitude
    ``sqrt(N_from * (N_to + 1))``. Images outside ``target`` are dropped.
    """
    Q = basis.Q
    src = _level_slot(from_level, Q)
    dst = _level_slot(to_level, Q)
    if src == dst:
        raise ValueError("collective_flip needs two distinct levels")
    target = _resolve_target(basis, target)
    N = basis.N
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        n_b = N - sum(occ[: 1 + Q])
        n_from = n_b if src is None else occ[src]
        n_to = n_b if dst is None else occ[dst]
        if n_from == 0:
            continue
        image = list(occ)
        if src is not None:
            image[src] -= 1
        if dst is not None:
            image[dst] += 1
        row = target.index.get(tuple(image))
        if row is None:
            continue
        rows.append(row)
        cols.append(col)
        vals.append(sqrt(n_from * (n_to + 1)))
    return _assemble(rows, cols, vals, target, basis)


def mode_annihilator(
    basis: SymmetricBasis, mode: int, target: Optional[SymmetricBasis] = None
) -> sp.csr_matrix:
    """Bosonic lowering operator of ``mode`` (1-based), amplitude ``sqrt(n_q)``.

    The image of the n-excitation sector is the (n-1)-excitation sector; with
    ``target=None`` every image is dropped, so pass ``basis.shifted(-1)``.
    """
    slot = _mode_slot(mode, basis.Q)
    target = _resolve_target(basis, target)
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        nq = occ[slot]
        if nq == 0:
            continue
        image = list(occ)
        image[slot] -= 1
        row = target.index.get(tuple(image))
        if row is None:
            continue
        rows.append(row)
        cols.append(col)
        vals.append(sqrt(nq))
    return _assemble(rows, cols, vals, target, basis)


def mode_creator(
    basis: SymmetricBasis, mode: int, target: Optional[SymmetricBasis] = None
) -> sp.csr_matrix:
    """Bosonic raising operator, the adjoint of :func:`mode_annihilator`."""
    target = _resolve_target(basis, target)
    return mode_annihilator(target, mode, basis).conj().T.tocsr()


def number_operator(basis: SymmetricBasis, what: Level) -> sp.csr_matrix:
    """Diagonal population operator of an atomic level or a mode index."""
    if isinstance(what, (int, np.integer)):
        diag = basis.photon_number(int(what))
    else:
        diag = basis.level_population(what)
    return sp.diags(diag.astype(complex), format="csr")


def excitation_operator(basis: SymmetricBasis) -> sp.csr_matrix:
    """``N_C + sum_q N_A_q + sum_q n_q`` as a diagonal operator."""
    return sp.diags(basis.occupations.sum(axis=1).astype(complex), format="csr")

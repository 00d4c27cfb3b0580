"""Linear-optics view of in-coupling, storage and read-out.

In the ideal limit the medium acts like a beam splitter network: photons
in the EIT mode ``b_Q`` enter the medium without loss and everything else is
absorbed. The mode transform ``W`` (``a_q = sum_s W_qs b_s``, so
``b_s^dagger = sum_q W_qs a_q^dagger``) is fixed by the control ratios
``Omega_q/g_q``. Fock states are sparse maps from occupation tuples over the
``Q`` modes to complex amplitudes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bosonic import transform_state
from .model import ModelParams
from .transforms import BasisUndefinedError, householder_completion, optical_transform

UNITARY_TOL = 1e-12


def _check_unitary(W: np.ndarray, name: str) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"{name} must be square")
    err = np.max(np.abs(W.conj().T @ W - np.eye(W.shape[0])))
    if err > UNITARY_TOL:
        raise ValueError(f"{name} is not unitary (deviation {err:.2e})")
    return W


@dataclass(frozen=True)
class FockInput:
    """Photon state over ``Q`` modes as ``{occupation: amplitude}``."""

    state: Dict[Tuple[int, ...], complex]

    def __post_init__(self):
        if not self.state:
            raise ValueError("empty Fock state")
        lengths = {len(k) for k in self.state}
        if len(lengths) != 1:
            raise ValueError("all occupation tuples must have the same length")
        for occ in self.state:
            if any(int(n) != n or n < 0 for n in occ):
                raise ValueError(f"occupation {occ} must be non-negative integers")
        norm = sum(abs(a) ** 2 for a in self.state.values())
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"Fock state must have unit norm, got {norm:.6g}")

    @classmethod
    def from_occupation(cls, occupation: Sequence[int]) -> "FockInput":
        return cls({tuple(int(n) for n in occupation): 1.0 + 0j})

    @classmethod
    def superposition(cls, amplitudes: Mapping[Tuple[int, ...], complex], normalize: bool = True):
        state = {tuple(int(n) for n in k): complex(v) for k, v in amplitudes.items() if v != 0}
        if normalize:
            norm = np.sqrt(sum(abs(v) ** 2 for v in state.values()))
            if norm == 0:
                raise ValueError("superposition has zero norm")
            state = {k: v / norm for k, v in state.items()}
        return cls(state)

    @classmethod
    def single_photon(cls, amplitudes: Sequence[complex]) -> "FockInput":
        """``sum_q c_q a_q^dagger |0>`` (normalized)."""
        Q = len(amplitudes)
        amps = {}
        for q, c in enumerate(amplitudes):
            occ = [0] * Q
            occ[q] = 1
            amps[tuple(occ)] = c
        return cls.superposition(amps)

    @property
    def Q(self) -> int:
        return len(next(iter(self.state)))

    def photon_numbers(self) -> set:
        return {sum(occ) for occ in self.state}


@dataclass(frozen=True)
class ModeTransform:
    W_in: np.ndarray
    W_out: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W_in", _check_unitary(self.W_in, "W_in"))
        object.__setattr__(self, "W_out", _check_unitary(self.W_out, "W_out"))
        if self.W_in.shape != self.W_out.shape:
            raise ValueError("W_in and W_out must have the same size")

    @classmethod
    def from_controls(cls, params: ModelParams, controls_in, controls_out) -> "ModeTransform":
        return cls(optical_transform(params, controls_in).W, optical_transform(params, controls_out).W)


def transform_from_ratios(ratios: Sequence[complex]) -> np.ndarray:
    """Mode transform for control ratios ``Omega_q/g_q`` (any overall scale)."""
    r = np.asarray(ratios, dtype=complex)
    norm = np.linalg.norm(r)
    if norm == 0:
        raise BasisUndefinedError("mode transform undefined: all controls are zero")
    return householder_completion(r / norm)


def to_b_modes(fock: FockInput, W: np.ndarray) -> Dict[Tuple[int, ...], complex]:
    """Rewrite ``fock`` over the ``b`` modes: ``a_q^dagger = sum_s conj(W_qs) b_s^dagger``."""
    W = _check_unitary(W, "W")
    if W.shape[0] != fock.Q:
        raise ValueError(f"transform has size {W.shape[0]}, state has {fock.Q} modes")
    return transform_state(fock.state, W.conj().T)


def _in_eit_mode(occ: Tuple[int, ...]) -> bool:
    return not any(occ[:-1])


def coupling_probability(fock: FockInput, W_in: np.ndarray) -> float:
    """Probability that every photon of ``fock`` lands in the EIT mode ``b_Q``."""
    b_state = to_b_modes(fock, W_in)
    prob = sum(abs(a) ** 2 for occ, a in b_state.items() if _in_eit_mode(occ))
    return float(min(1.0, max(0.0, prob)))


def single_photon_coupling(amplitudes: Sequence[complex], W_in: np.ndarray) -> float:
    """Rank-one shortcut ``|<W_in[:, Q], c>|^2`` for a normalized one-photon state."""
    c = np.asarray(amplitudes, dtype=complex)
    c = c / np.linalg.norm(c)
    W_in = _check_unitary(W_in, "W_in")
    return float(abs(np.vdot(W_in[:, -1], c)) ** 2)


def ratio_grid(Q: int, steps: int = 24) -> Iterable[np.ndarray]:
    """Unit ratio vectors covering magnitudes and relative phases.

    Magnitudes use hyperspherical angles in ``[0, pi/2]`` (``steps + 1``
    points each, endpoints included), relative phases ``steps`` points in
    ``[0, 2 pi)``; the first component is taken real.
    """
    if Q < 1 or steps < 1:
        raise ValueError("need Q >= 1 and steps >= 1")
    if Q == 1:
        yield np.ones(1, dtype=complex)
        return
    angles = np.linspace(0.0, 0.5 * np.pi, steps + 1)
    phases = 2.0 * np.pi * np.arange(steps) / steps
    for theta in itertools.product(angles, repeat=Q - 1):
        mags = np.empty(Q)
        s = 1.0
        for q, th in enumerate(theta):
            mags[q] = s * np.cos(th)
            s *= np.sin(th)
        mags[-1] = s
        for phi in itertools.product(phases, repeat=Q - 1):
            yield mags * np.exp(1j * np.concatenate(([0.0], phi)))


def max_coupling_over_controls(fock: FockInput, grid: Optional[Iterable[Sequence[complex]]] = None):
    """Grid maximum of :func:`coupling_probability` over control ratio vectors.

    ``grid`` yields ratio vectors ``Omega_q/g_q``; default :func:`ratio_grid`.
    Returns ``(best_probability, best_ratios)``.
    """
    if grid is None:
        grid = ratio_grid(fock.Q)
    best, best_r = -1.0, None
    for r in grid:
        try:
            W = transform_from_ratios(r)
        except BasisUndefinedError:
            continue
        p = coupling_probability(fock, W)
        if p > best + 1e-15:
            best, best_r = p, np.asarray(r, dtype=complex)
    if best_r is None:
        raise ValueError("empty control grid")
    return best, best_r


@dataclass(frozen=True)
class TransferResult:
    output: Optional[FockInput]  # normalized output state, None if all absorbed
    absorbed: float


def end_to_end_transfer(fock: FockInput, W_in: np.ndarray, W_out: np.ndarray) -> TransferResult:
    """Store the ``b_Q`` part of ``fock`` and read it out through ``W_out``.

    Components with any photon outside ``b_Q`` are absorbed; each surviving
    ``b_Q^k`` amplitude becomes ``k`` photons in the read-out EIT mode
    ``sum_q W_out[q, Q] a_q^dagger``.
    """
    transforms = ModeTransform(W_in, W_out)
    b_state = to_b_modes(fock, transforms.W_in)
    kept = {occ: a for occ, a in b_state.items() if _in_eit_mode(occ)}
    survived = sum(abs(a) ** 2 for a in kept.values())
    absorbed = float(min(1.0, max(0.0, 1.0 - survived)))
    if survived <= 1e-15:
        return TransferResult(None, absorbed)
    out = transform_state(kept, transforms.W_out)
    return TransferResult(FockInput.superposition(out), absorbed)


def coupling_table(rows: Iterable[Tuple[str, FockInput, Sequence[complex]]]):
    """``(label, ratios, probability)`` rows for reporting."""
    table = []
    for label, fock, ratios in rows:
        table.append((label, np.asarray(ratios, dtype=complex), coupling_probability(fock, transform_from_ratios(ratios))))
    return table

"""Physical parameters, control-field schedules and Hamiltonian assembly.

Units: hbar = 1, rates in units of a reference decay rate, times in its
inverse. The collective Hamiltonian on a symmetric sector is

    H = -(delta/2) N_B - (Delta/2) N_C
        - sum_q [ g_q a_q S(B->A_q) + Omega_q S(C->A_q) ] + h.c.

with ``S`` the collective flip operators, plus ``-(i/2) sum_q gamma_q N_A_q``
for the no-jump effective Hamiltonian.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, pi, sin
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    SymmetricBasis,
    collective_flip,
    mode_annihilator,
    number_operator,
)


@dataclass(frozen=True)
class ModelParams:
    """Couplings, decay rates and detunings of the multi-Lambda ensemble."""

    Q: int
    N: int
    g: Tuple[complex, ...]
    gamma: Tuple[float, ...]
    delta: float = 0.0
    Delta: float = 0.0

    def __post_init__(self):
        if self.Q <= 0 or self.N <= 0:
            raise ValueError("Q and N must be positive")
        g = tuple(complex(x) for x in np.atleast_1d(self.g))
        gamma = tuple(float(x) for x in np.atleast_1d(self.gamma))
        if len(g) != self.Q or len(gamma) != self.Q:
            raise ValueError(f"g and gamma need {self.Q} entries each")
        if min(abs(x) for x in g) == 0:
            raise ValueError("all vacuum Rabi frequencies g_q must be nonzero")
        if min(gamma) < 0:
            raise ValueError("decay rates must be non-negative")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "Delta", float(self.Delta))

    @classmethod
    def uniform(cls, Q: int, N: int, g: complex = 1.0, gamma: float = 0.0, **kw):
        return cls(Q=Q, N=N, g=(g,) * Q, gamma=(gamma,) * Q, **kw)

    @property
    def g_array(self) -> np.ndarray:
        return np.array(self.g, dtype=complex)

    @property
    def gamma_array(self) -> np.ndarray:
        return np.array(self.gamma, dtype=float)

    def replace(self, **changes) -> "ModelParams":
        kw = dict(Q=self.Q, N=self.N, g=self.g, gamma=self.gamma,
                  delta=self.delta, Delta=self.Delta)
        kw.update(changes)
        return ModelParams(**kw)


def as_controls(controls, Q: int) -> np.ndarray:
    omega = np.asarray(controls, dtype=complex).reshape(-1)
    if omega.shape != (Q,):
        raise ValueError(f"expected {Q} control amplitudes, got {omega.shape[0]}")
    return omega


# -- control schedules ------------------------------------------------------

_PROFILES = {
    "constant": lambda s: 1.0,
    # (start, end) blend weights for the end value
    "cosine": lambda s: 0.5 * (1.0 - cos(pi * s)),
}


@dataclass(frozen=True)
class Segment:
    """One piece of a control envelope, active on ``[t_start, t_start + duration]``.

    ``shape`` is ``"cosine"`` (raised-cosine blend ``start -> end``),
    ``"fade_out"`` (``start * cos(pi s / 2)``), ``"fade_in"``
    (``end * sin(pi s / 2)``) or ``"constant"``.
    """

    t_start: float
    duration: float
    start: complex
    end: complex
    shape: str = "cosine"

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def value(self, t: float) -> complex:
        if self.duration <= 0:
            return self.end
        s = min(max((t - self.t_start) / self.duration, 0.0), 1.0)
        if self.shape == "fade_out":
            return self.start * cos(0.5 * pi * s)
        if self.shape == "fade_in":
            return self.end * sin(0.5 * pi * s)
        if self.shape == "constant":
            return self.start
        w = _PROFILES[self.shape](s)
        return (1.0 - w) * self.start + w * self.end


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise, continuous control envelopes ``Omega_q(t)``.

    Each mode holds a time-ordered list of segments; between and after
    segments the last end value is held, before the first segment its start
    value. Builders return new schedules.
    """

    initial: Tuple[complex, ...]
    segments: Tuple[Tuple[Segment, ...], ...] = ()

    def __post_init__(self):
        init = tuple(complex(x) for x in self.initial)
        object.__setattr__(self, "initial", init)
        if not self.segments:
            object.__setattr__(self, "segments", tuple(() for _ in init))
        if len(self.segments) != len(init):
            raise ValueError("one segment list per mode required")

    @property
    def Q(self) -> int:
        return len(self.initial)

    @classmethod
    def constant(cls, values: Sequence[complex]) -> "ControlSchedule":
        return cls(tuple(values))

    @classmethod
    def off(cls, Q: int) -> "ControlSchedule":
        return cls((0j,) * Q)

    def _current(self, q: int) -> complex:
        if not 0 <= q < self.Q:
            raise ValueError(f"mode {q + 1} out of range 1..{self.Q}")
        segs = self.segments[q]
        return segs[-1].end if segs else self.initial[q]

    def _last_time(self, q: int) -> float:
        segs = self.segments[q]
        return segs[-1].t_end if segs else -np.inf

    def _append(self, q: int, seg: Segment) -> "ControlSchedule":
        if not 0 <= q < self.Q:
            raise ValueError(f"mode {q + 1} out of range 1..{self.Q}")
        if seg.t_start < self._last_time(q) - 1e-12:
            raise ValueError(f"segments for mode {q + 1} overlap in time")
        if abs(seg.start - self._current(q)) > 1e-12:
            raise ValueError(
                f"discontinuous control for mode {q + 1}: segment starts at "
                f"{seg.start} but the envelope is at {self._current(q)}"
            )
        segs = list(self.segments)
        segs[q] = segs[q] + (seg,)
        return ControlSchedule(self.initial, tuple(segs))

    def ramp_to(self, mode: int, t_start: float, duration: float, value: complex):
        """Raised-cosine ramp of ``mode`` (1-based) to ``value``."""
        q = mode - 1
        return self._append(q, Segment(t_start, duration, self._current(q), complex(value)))

    def ramp_on(self, mode: int, t_start: float, duration: float, amplitude: complex):
        if abs(self._current(mode - 1)) > 1e-12:
            raise ValueError(f"mode {mode} is already on")
        return self.ramp_to(mode, t_start, duration, amplitude)

    def ramp_off(self, mode: int, t_start: float, duration: float):
        return self.ramp_to(mode, t_start, duration, 0.0)

    def cross_fade(self, i: int, j: int, t_start: float, duration: float,
                   amplitude: Optional[complex] = None):
        """Hand the control over from mode ``i`` to mode ``j``.

        ``Omega_i = A cos(pi s/2)``, ``Omega_j = A sin(pi s/2)`` with
        ``s = (t - t_start)/duration``; ``A`` defaults to the current
        amplitude of mode ``i``.
        """
        if i == j:
            raise ValueError("cross-fade needs two distinct modes")
        amp = self._current(i - 1) if amplitude is None else complex(amplitude)
        if abs(self._current(j - 1)) > 1e-12:
            raise ValueError(f"mode {j} must be off before fading it in")
        out = self._append(i - 1, Segment(t_start, duration, amp, 0j, "fade_out"))
        return out._append(j - 1, Segment(t_start, duration, 0j, amp, "fade_in"))

    def mode_value(self, q: int, t: float) -> complex:
        segs = self.segments[q]
        if not segs or t < segs[0].t_start:
            return segs[0].start if segs else self.initial[q]
        value = segs[0].start
        for seg in segs:
            if t < seg.t_start:
                break
            value = seg.value(t)
        return value

    def __call__(self, t: float) -> np.ndarray:
        return np.array([self.mode_value(q, t) for q in range(self.Q)], dtype=complex)

    @property
    def t_final(self) -> float:
        ends = [s[-1].t_end for s in self.segments if s]
        return max(ends) if ends else 0.0


# -- Hamiltonian assembly ---------------------------------------------------

def _check(params: ModelParams, basis: SymmetricBasis):
    if params.Q != basis.Q or params.N != basis.N:
        raise ValueError(
            f"basis (N={basis.N}, Q={basis.Q}) does not match params "
            f"(N={params.N}, Q={params.Q})"
        )


def _photon_absorption(basis: SymmetricBasis, mode: int) -> sp.csr_matrix:
    """``a_q S(B->A_q)`` within the sector, via the (n+1) sector."""
    try:
        raised = basis.shifted(+1)
    except ValueError:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    up = collective_flip(basis, "B", f"A{mode}", target=raised)
    down = mode_annihilator(raised, mode, target=basis)
    return (down @ up).tocsr()


@dataclass
class HamiltonianTerms:
    """Pre-assembled pieces of ``H(Omega)`` for repeated evaluation.

    ``H(Omega) = static + sum_q (Omega_q K_q + conj(Omega_q) K_q^dagger)``
    """

    static: sp.csr_matrix
    control: List[sp.csr_matrix]
    control_adj: List[sp.csr_matrix] = field(init=False)

    def __post_init__(self):
        self.control_adj = [k.conj().T.tocsr() for k in self.control]

    def matrix(self, controls) -> sp.csr_matrix:
        omega = as_controls(controls, len(self.control))
        h = self.static.copy()
        for w, k, kd in zip(omega, self.control, self.control_adj):
            if w != 0:
                h = h + w * k + np.conj(w) * kd
        return h.tocsr()

    def apply(self, controls, psi: np.ndarray) -> np.ndarray:
        out = self.static @ psi
        for w, k, kd in zip(controls, self.control, self.control_adj):
            if w != 0:
                out += w * (k @ psi) + np.conj(w) * (kd @ psi)
        return out


def hamiltonian_terms(
    params: ModelParams,
    basis: SymmetricBasis,
    detuning: bool = True,
    decay: bool = True,
) -> HamiltonianTerms:
    _check(params, basis)
    dim = basis.dim
    coupling = sp.csr_matrix((dim, dim), dtype=complex)
    for q, gq in enumerate(params.g, start=1):
        coupling = coupling - gq * _photon_absorption(basis, q)
    static = coupling + coupling.conj().T
    if detuning:
        static = static - 0.5 * params.delta * number_operator(basis, "B")
        static = static - 0.5 * params.Delta * number_operator(basis, "C")
    if decay:
        for q, gam in enumerate(params.gamma, start=1):
            if gam:
                static = static - 0.5j * gam * number_operator(basis, f"A{q}")
    control = [-collective_flip(basis, "C", f"A{q}") for q in range(1, params.Q + 1)]
    return HamiltonianTerms(static.tocsr(), control)


def build_interaction_hamiltonian(params, controls, basis) -> sp.csr_matrix:
    """Resonant interaction part only: couplings to signal and control fields."""
    omega = as_controls(controls, params.Q)
    return hamiltonian_terms(params, basis, detuning=False, decay=False).matrix(omega)


def build_full_hamiltonian(params, controls, basis) -> sp.csr_matrix:
    """Interaction part plus ``-(delta/2) N_B - (Delta/2) N_C``."""
    omega = as_controls(controls, params.Q)
    return hamiltonian_terms(params, basis, detuning=True, decay=False).matrix(omega)


def effective_nonhermitian(params, controls, basis) -> sp.csr_matrix:
    """Full Hamiltonian minus ``(i/2) sum_q gamma_q N_A_q`` (no-jump evolution)."""
    omega = as_controls(controls, params.Q)
    return hamiltonian_terms(params, basis).matrix(omega)

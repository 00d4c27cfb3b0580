"""Composed experiments shared by the command-line runner and the test suite.

Each function takes plain numbers, builds the model objects, runs one
experiment and returns a small result object with the headline numbers and
the traces worth writing out.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .darkstates import dark_state, fock_state
from .dynamics import EvolutionConfig, evolve
from .hilbert import SectorSpec, enumerate_sector
from .linoptics import FockInput, coupling_probability, transform_from_ratios
from .model import ControlSchedule, ModelParams, build_interaction_hamiltonian
from .propagation import (
    GaussianPulse,
    MediumSpec,
    PropagationReport,
    absorbance_width,
    group_velocity,
    optical_depth,
    run_pulse_experiment,
    shape_overlap,
    transmission_scan,
    transparency_fwhm,
)
from .transforms import (
    atomic_transform,
    lambda_reference,
    optical_transform,
    reduced_lambda_block,
    structure_report,
    transformed_hamiltonian,
)


def random_complex(rng: np.random.Generator, size, low: float = 0.2, high: float = 2.0) -> np.ndarray:
    """Magnitudes uniform in ``[low, high]`` with uniform random phases."""
    return rng.uniform(low, high, size) * np.exp(2j * np.pi * rng.random(size))


# -- algebraic checks ------------------------------------------------------------

def darkstate_residuals(seed: int, atom_numbers: Sequence[int], mode_counts: Sequence[int],
                        excitations: Sequence[int], draws: int) -> List[dict]:
    """``||H_int |D,n>||`` for random complex couplings and controls."""
    rng = np.random.default_rng(seed)
    rows = []
    for N in atom_numbers:
        for Q in mode_counts:
            for n in excitations:
                basis = enumerate_sector(SectorSpec(N, Q, n))
                for draw in range(draws):
                    params = ModelParams(Q=Q, N=N, g=tuple(random_complex(rng, Q)), gamma=(0.0,) * Q)
                    omega = random_complex(rng, Q)
                    dark = dark_state(params, omega, basis)
                    H = build_interaction_hamiltonian(params, omega, basis)
                    rows.append(dict(N=N, Q=Q, n=n, draw=draw, dim=basis.dim,
                                     residual=float(np.linalg.norm(H @ dark.amplitudes))))
    return rows


def transform_checks(seed: int, draws: int, max_modes: int = 4, max_atoms: int = 3) -> List[dict]:
    """Unitarity, decoupling and reduced-Lambda errors for random draws (one excitation)."""
    rng = np.random.default_rng(seed)
    rows = []
    for draw in range(draws):
        Q = int(rng.integers(1, max_modes + 1))
        N = int(rng.integers(1, max_atoms + 1))
        params = ModelParams(Q=Q, N=N, g=tuple(random_complex(rng, Q)), gamma=(0.0,) * Q,
                             delta=float(rng.normal()), Delta=float(rng.normal()))
        omega = random_complex(rng, Q)
        U = atomic_transform(params, omega).U
        ob = optical_transform(params, omega)
        eye = np.eye(Q)
        basis = enumerate_sector(SectorSpec(N, Q, 1))
        Ht = transformed_hamiltonian(params, omega, basis)
        ref = lambda_reference(ob.g_eff, np.linalg.norm(omega), params.delta, params.Delta, N)
        rows.append(dict(
            draw=draw, Q=Q, N=N,
            unitarity_U=float(np.max(np.abs(U.conj().T @ U - eye))),
            unitarity_W=float(np.max(np.abs(ob.W.conj().T @ ob.W - eye))),
            structure=structure_report(Ht, basis),
            lambda_error=float(np.max(np.abs(reduced_lambda_block(Ht, basis) - ref))),
        ))
    return rows


# -- pulse experiments -----------------------------------------------------------

@dataclass
class SlowdownResult:
    predicted_vg: float
    measured_vg: float
    group_index: float
    transmitted: float
    report: PropagationReport = field(repr=False)


def slowdown(params: ModelParams, omega: Sequence[complex], length: float, dz: float,
             sigma: float, mode: int = 1) -> SlowdownResult:
    """Peak delay of a long Gaussian pulse in constant controls."""
    schedule = ControlSchedule.constant(omega)
    vg, ng = group_velocity(params, omega)
    pulse = GaussianPulse(mode, arrival=6 * sigma, sigma=sigma)
    medium = MediumSpec.from_spacing(length, dz, before=12 * sigma, after=2 * dz)
    duration = 12 * sigma + length / vg
    rep = run_pulse_experiment(medium, params, schedule, [pulse], duration)
    return SlowdownResult(vg, rep.measured_group_velocity(), ng, float(rep.transmitted_fraction()[0]), rep)


@dataclass
class WindowResult:
    detunings: np.ndarray
    transmitted: np.ndarray
    measured_width: float
    predicted_width: float
    optical_depth: float
    resonant_transmission: float


def transparency_scan(params: ModelParams, omega: Sequence[complex], length: float, dz: float,
                      sigma: float, span: float = 1.6, points: int = 81, mode: int = 1) -> WindowResult:
    """Transmitted energy of a long pulse versus detuning, and the window width.

    The detuning grid covers ``[-span, span] * Omega`` around two-photon
    resonance and must contain zero (``points`` odd).
    """
    if points % 2 == 0:
        raise ValueError("points must be odd so the grid contains zero detuning")
    Om = float(np.linalg.norm(omega))
    det = np.linspace(-span * Om, span * Om, points)
    pulse = GaussianPulse(mode, arrival=6 * sigma, sigma=sigma)
    medium = MediumSpec.from_spacing(length, dz, before=12 * sigma, after=2 * dz)
    vg, _ = group_velocity(params, omega)
    trans = transmission_scan(medium, params, ControlSchedule.constant(omega), pulse, det,
                              duration=12 * sigma + length / vg)
    return WindowResult(det, trans, absorbance_width(det, trans), transparency_fwhm(params, omega),
                        optical_depth(params, omega, length), float(trans[points // 2]))


@dataclass
class MemoryResult:
    input_energy: float
    output_energy: np.ndarray  # per mode
    shape_overlap: float
    report: PropagationReport = field(repr=False)

    @property
    def efficiency(self) -> float:
        return float(self.output_energy.sum() / self.input_energy)

    @property
    def mode_fractions(self) -> np.ndarray:
        return self.output_energy / self.output_energy.sum()


def _memory_setup(params, amplitude, length, dz, sigma_fraction, mode_in):
    omega = np.zeros(params.Q, dtype=complex)
    omega[mode_in - 1] = amplitude
    vg, _ = group_velocity(params, omega)
    delay = length / vg
    sigma = delay * sigma_fraction
    arrival = 5 * sigma
    pulse = GaussianPulse(mode_in, arrival=arrival, sigma=sigma)
    medium = MediumSpec.from_spacing(length, dz, before=10 * sigma, after=2 * dz)
    # the pulse centre reaches mid-medium here
    centred = arrival + 0.5 * delay
    return omega, delay, sigma, pulse, medium, centred


def _memory_result(rep: PropagationReport, mode_out: int) -> MemoryResult:
    ref = rep.input_trace[0].sum(axis=0)
    out = rep.output_trace[0, mode_out - 1]
    return MemoryResult(float(rep.input_energy[0].sum()), rep.output_energy[0].copy(),
                        shape_overlap(ref, out), rep)


def storage(params: ModelParams, amplitude: float, length: float, dz: float, ramp: float,
            hold: float, mode_in: int = 1, mode_out: int = 2, sigma_fraction: float = 1 / 6,
            tail: float = 50.0) -> MemoryResult:
    """Stop the pulse with control ``mode_in``, hold, then release it with ``mode_out``.

    The pulse duration is ``sigma_fraction`` of the medium delay so it fits
    inside the medium; the ramp-off is centred on the moment the pulse
    centre reaches mid-medium.
    """
    omega, delay, sigma, pulse, medium, centred = _memory_setup(params, amplitude, length, dz,
                                                                sigma_fraction, mode_in)
    t_off = centred - 0.5 * ramp
    schedule = ControlSchedule.constant(omega).ramp_off(mode_in, t_off, ramp)
    schedule = schedule.ramp_on(mode_out, t_off + ramp + hold, ramp, amplitude)
    duration = t_off + 2 * ramp + hold + 0.5 * delay + 6 * sigma + tail
    rep = run_pulse_experiment(medium, params, schedule, [pulse], duration)
    return _memory_result(rep, mode_out)


def conversion(params: ModelParams, amplitude: float, length: float, dz: float, fade: float,
               mode_in: int = 1, mode_out: int = 2, sigma_fraction: float = 1 / 6,
               tail: float = 50.0) -> MemoryResult:
    """Cross-fade the controls from ``mode_in`` to ``mode_out`` while the pulse is inside."""
    omega, delay, sigma, pulse, medium, centred = _memory_setup(params, amplitude, length, dz,
                                                                sigma_fraction, mode_in)
    schedule = ControlSchedule.constant(omega).cross_fade(mode_in, mode_out, centred - 0.5 * fade, fade)
    duration = pulse.arrival + delay + 6 * sigma + tail
    rep = run_pulse_experiment(medium, params, schedule, [pulse], duration)
    return _memory_result(rep, mode_out)


# -- two-photon coupling -----------------------------------------------------------

@dataclass
class HomResult:
    predicted: float
    surviving: float
    times: np.ndarray
    norms: np.ndarray


def hom_absorption(amplitude: float, gamma: float, t_end: float, dt: float = 0.002,
                   g: float = 1.0) -> HomResult:
    """One photon in each of two modes, balanced controls, strongly absorbing atom.

    Compares the surviving norm of the no-jump evolution with the ideal
    coupling probability into the EIT mode.
    """
    params = ModelParams.uniform(2, 1, g=g, gamma=gamma)
    omega = np.full(2, amplitude / np.sqrt(2), dtype=complex)
    basis = enumerate_sector(SectorSpec(1, 2, 2))
    psi0 = fock_state(basis, [1, 1])
    config = EvolutionConfig(0.0, t_end, dt=dt, record_every=max(1, int(round(0.5 / dt))))
    traj = evolve(params, ControlSchedule.constant(omega), basis, psi0, config, track_dark=False)
    predicted = coupling_probability(FockInput.from_occupation((1, 1)),
                                     transform_from_ratios(omega / params.g_array))
    return HomResult(predicted, float(traj.norms[-1]), traj.times, traj.norms)

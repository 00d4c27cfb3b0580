"""Simulation of EIT and adiabatic optical-state transfer in multi-Lambda ensembles."""
from .darkstates import dark_state, dark_overlap, fock_state, gather_curve, symmetric_ground_state
from .dynamics import EvolutionConfig, StepSizeError, adiabaticity_sweep, evolve, run_ratos
from .hilbert import SectorSpec, SymmetricBasis, collective_flip, enumerate_sector, mode_annihilator, mode_creator
from .linoptics import FockInput, ModeTransform, coupling_probability, end_to_end_transfer, max_coupling_over_controls
from .model import ControlSchedule, ModelParams, build_full_hamiltonian, build_interaction_hamiltonian, effective_nonhermitian
from .propagation import (
    CFLError,
    GaussianPulse,
    MediumSpec,
    NumericalError,
    group_velocity,
    run_pulse_experiment,
    step_maxwell_bloch,
    susceptibility,
    transparency_fwhm,
)
from .transforms import BasisUndefinedError, atomic_transform, optical_transform, structure_report, transformed_hamiltonian

__version__ = "0.1.0"

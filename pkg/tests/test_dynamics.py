import numpy as np
import pytest

from ratos_sim.darkstates import dark_state, fock_state
from ratos_sim.dynamics import (
    EvolutionConfig,
    StepSizeError,
    adiabaticity_sweep,
    evolve,
    geometric_fade_grid,
    ratos_schedule,
    run_ratos,
)
from ratos_sim.hilbert import SectorSpec, enumerate_sector, excitation_operator
from ratos_sim.model import ControlSchedule, ModelParams, build_full_hamiltonian, build_interaction_hamiltonian


def test_eigenvector_is_stationary():
    p = ModelParams.uniform(2, 2, g=1.0, delta=0.3)
    b = enumerate_sector(SectorSpec(2, 2, 1))
    om = [0.7, 0.4j]
    w, v = np.linalg.eigh(build_full_hamiltonian(p, om, b).toarray())
    tr = evolve(p, ControlSchedule.constant(om), b, v[:, 2], EvolutionConfig(0, 5, dt=0.005), track_dark=False)
    assert np.allclose(tr.mode_populations, tr.mode_populations[0], atol=1e-9)
    assert np.abs(np.vdot(v[:, 2], tr.final_state)) == pytest.approx(1.0, abs=1e-9)


def test_vacuum_rabi_oscillation():
    g = 1.3
    p = ModelParams.uniform(1, 1, g=g)
    b = enumerate_sector(SectorSpec(1, 1, 1))
    tr = evolve(p, ControlSchedule.constant([0.0]), b, b.vector((0, 0, 1)),
                EvolutionConfig(0, 4, dt=0.001, record_every=50), track_dark=False)
    assert np.allclose(tr.mode_populations[:, 0], np.cos(g * tr.times) ** 2, atol=1e-9)


def test_dark_state_does_not_decay():
    p = ModelParams.uniform(2, 3, g=1.0, gamma=2.0)
    b = enumerate_sector(SectorSpec(3, 2, 2))
    om = [1.5, 0.5j]
    d = dark_state(p, om, b).amplitudes
    tr = evolve(p, ControlSchedule.constant(om), b, d, EvolutionConfig(0, 10, dt=0.01))
    assert abs(tr.norms[-1] - 1) < 1e-8
    assert np.all(np.abs(tr.dark_overlaps - 1) < 1e-8)


def test_ratos_adiabatic_limit_and_completeness():
    p = ModelParams.uniform(2, 10, g=1.0)
    b = enumerate_sector(SectorSpec(10, 2, 1))
    rep = run_ratos(p, b, 1, 1, 2, 5.0, 40.0)
    assert rep.fidelity >= 0.999
    assert rep.absorbed == pytest.approx(0.0, abs=1e-8)
    psi = rep.trajectory.final_state
    dark = dark_state(p, [0, 5.0], b).amplitudes
    outside = np.linalg.norm(psi - np.vdot(dark, psi) * dark) ** 2
    assert rep.fidelity + outside == pytest.approx(1.0, abs=1e-8)


def test_ratos_moves_photons_between_modes():
    p = ModelParams.uniform(3, 2, g=1.0)
    b = enumerate_sector(SectorSpec(2, 3, 2))
    rep = run_ratos(p, b, 2, 3, 1, 20.0, 30.0)
    pops = rep.trajectory.mode_populations
    assert pops[0, 2] > 1.9 and pops[-1, 0] > 1.9
    assert rep.fidelity > 0.99


def test_sudden_switch_from_photons_in_other_mode():
    p = ModelParams.uniform(2, 10, g=1.0)
    b = enumerate_sector(SectorSpec(10, 2, 1))
    assert run_ratos(p, b, 1, 1, 2, 5.0, 0.0, initial="fock").fidelity == pytest.approx(0.0, abs=1e-15)


def test_ratos_input_validation():
    p = ModelParams.uniform(2, 2, g=1.0)
    b = enumerate_sector(SectorSpec(2, 2, 1))
    with pytest.raises(ValueError):
        run_ratos(p, b, 1, 1, 1, 5.0, 10.0)
    with pytest.raises(ValueError):
        run_ratos(p, b, 2, 1, 2, 5.0, 10.0)
    with pytest.raises(ValueError):
        run_ratos(p, b, 1, 1, 2, 0.0, 10.0)


def test_fidelity_nearly_independent_of_atom_number():
    f = []
    for N in (10, 20):
        p = ModelParams.uniform(2, N, g=1.0)
        f.append(run_ratos(p, enumerate_sector(SectorSpec(N, 2, 1)), 1, 1, 2, 5.0, 40.0,
                           keep_trajectory=False).fidelity)
    assert abs(f[0] - f[1]) < 1e-3


def test_dark_state_is_exact_zero_mode_along_schedule():
    p = ModelParams.uniform(2, 3, g=1.0)
    b = enumerate_sector(SectorSpec(3, 2, 2))
    s = ratos_schedule(2, 1, 2, 4.0, 10.0)
    for t in np.linspace(0, 10, 21):
        d = dark_state(p, s(t), b).amplitudes
        assert np.linalg.norm(build_interaction_hamiltonian(p, s(t), b) @ d) < 1e-10


def test_excitation_bookkeeping_with_decay():
    p = ModelParams.uniform(2, 3, g=1.0, gamma=1.0, delta=0.2)
    b = enumerate_sector(SectorSpec(3, 2, 2))
    s = ratos_schedule(2, 1, 2, 3.0, 5.0)
    psi = fock_state(b, [2, 0])
    tr = evolve(p, s, b, psi, EvolutionConfig(0, 5, dt=0.005, record_every=100), track_dark=False)
    X = excitation_operator(b)
    for y, nrm in zip(tr.states, tr.norms):
        assert np.real(np.vdot(y, X @ y)) == pytest.approx(2 * nrm, abs=1e-12)
    assert tr.norms[-1] < 0.99


def test_forward_backward_recovers_state():
    p = ModelParams.uniform(2, 4, g=1.0, delta=0.1)
    b = enumerate_sector(SectorSpec(4, 2, 2))
    s = ratos_schedule(2, 1, 2, 3.0, 6.0)
    psi0 = fock_state(b, [1, 1])
    fwd = evolve(p, s, b, psi0, EvolutionConfig(0, 6, dt=0.005), track_dark=False)
    back = evolve(p, s, b, fwd.final_state, EvolutionConfig(0, 6, dt=0.005), backward=True, track_dark=False)
    assert back.times[-1] == pytest.approx(0.0)
    assert np.linalg.norm(back.final_state - psi0) < 1e-6


def test_rk4_matches_adaptive():
    p = ModelParams.uniform(2, 5, g=1.0)
    b = enumerate_sector(SectorSpec(5, 2, 1))
    rk = run_ratos(p, b, 1, 1, 2, 5.0, 8.0, keep_trajectory=False)
    ad = run_ratos(p, b, 1, 1, 2, 5.0, 8.0, EvolutionConfig(0, 1, integrator="adaptive"), keep_trajectory=False)
    assert rk.fidelity == pytest.approx(ad.fidelity, abs=1e-8)


def test_step_size_guard():
    p = ModelParams.uniform(1, 50, g=1.0)
    b = enumerate_sector(SectorSpec(50, 1, 1))
    with pytest.raises(StepSizeError):
        evolve(p, ControlSchedule.constant([30.0]), b, fock_state(b, [1]),
               EvolutionConfig(0, 5, dt=0.2, record_every=1), track_dark=False)


def test_sweep_parallel_matches_serial():
    p = ModelParams.uniform(2, 3, g=1.0)
    b = enumerate_sector(SectorSpec(3, 2, 1))
    fades = [2.0, 5.0]
    serial = adiabaticity_sweep(p, b, 1, 1, 2, 4.0, fades)
    par = adiabaticity_sweep(p, b, 1, 1, 2, 4.0, fades, workers=2)
    assert serial == par
    with pytest.raises(ValueError):
        adiabaticity_sweep(p, b, 1, 1, 2, 4.0, [])


def test_geometric_grid():
    grid = geometric_fade_grid(5.0)
    assert grid[-1] == pytest.approx(40.0)
    assert grid[0] == pytest.approx(0.4)
    assert len(grid) == 9


def test_trajectory_csv(tmp_path):
    p = ModelParams.uniform(2, 2, g=1.0)
    b = enumerate_sector(SectorSpec(2, 2, 1))
    rep = run_ratos(p, b, 1, 1, 2, 3.0, 2.0, EvolutionConfig(0, 1, dt=0.01, record_every=20))
    path = tmp_path / "traj.csv"
    rep.trajectory.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,norm,photons_1,photons_2,dark_overlap"
    assert len(lines) == len(rep.trajectory.times) + 1

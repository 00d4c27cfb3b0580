"""Time evolution in a discrete-mode sector and the RATOS transfer protocol.

States evolve under ``i d|psi>/dt = H(t)|psi>`` with ``H`` the no-jump
effective Hamiltonian, so norm loss equals absorption. States are never
renormalized.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .darkstates import dark_state, fock_state, overlap
from .hilbert import SymmetricBasis
from .model import ControlSchedule, ModelParams, hamiltonian_terms
from .transforms import BasisUndefinedError


class StepSizeError(RuntimeError):
    """Norm drift with zero decay exceeded the allowed bound."""


NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class EvolutionConfig:
    t_start: float
    t_end: float
    dt: float = 0.01
    integrator: str = "rk4"  # or "adaptive"
    record_every: int = 10
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.integrator not in ("rk4", "adaptive"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray  # survival probabilities <psi|psi>
    mode_populations: np.ndarray
    dark_overlaps: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        Q = self.mode_populations.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "norm"] + [f"photons_{q + 1}" for q in range(Q)] + ["dark_overlap"])
            for t, nrm, pops, ov in zip(self.times, self.norms, self.mode_populations, self.dark_overlaps):
                writer.writerow([f"{t:.10g}", f"{nrm:.12g}"] + [f"{p:.12g}" for p in pops] + [f"{ov:.12g}"])


def _instant_dark(params, controls, basis):
    try:
        return dark_state(params, controls, basis).amplitudes
    except (ValueError, BasisUndefinedError):
        return None


def _snapshot(params, schedule, basis, t, psi, photon_ops):
    dark = _instant_dark(params, schedule(t), basis)
    ov = overlap(psi, dark) if dark is not None else np.nan
    pops = [float(np.real(np.vdot(psi, op * psi))) for op in photon_ops]
    return float(np.real(np.vdot(psi, psi))), pops, ov


def evolve(
    params: ModelParams,
    schedule: ControlSchedule,
    basis: SymmetricBasis,
    initial: np.ndarray,
    config: EvolutionConfig,
    backward: bool = False,
    track_dark: bool = True,
) -> Trajectory:
    """Integrate the Schroedinger equation over ``[t_start, t_end]``.

    With ``backward=True`` the state is taken at ``t_end`` and evolved back to
    ``t_start``. Raises :class:`StepSizeError` if the norm drifts by more than
    ``1e-6`` although every decay rate is zero.
    """
    psi = np.array(initial, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("initial state must have unit norm")
    if schedule.Q != params.Q:
        raise ValueError("schedule and params disagree on Q")
    terms = hamiltonian_terms(params, basis)
    photon_ops = [basis.photon_number(q).astype(float) for q in range(1, basis.Q + 1)]
    lossless = not any(params.gamma)

    def rhs(t, y):
        return -1j * terms.apply(schedule(t), y)

    t0, t1 = config.t_start, config.t_end
    if backward:
        t0, t1 = t1, t0
    span = t1 - t0
    steps = max(1, int(np.ceil(abs(span) / config.dt - 1e-9)))
    h = span / steps

    times, states, norms, pops, overlaps = [], [], [], [], []

    def record(t, y):
        nrm, pp, ov = _snapshot(params, schedule, basis, t, y, photon_ops) if track_dark else (
            float(np.real(np.vdot(y, y))),
            [float(np.real(np.vdot(y, op * y))) for op in photon_ops],
            np.nan,
        )
        times.append(t)
        states.append(y.copy())
        norms.append(nrm)
        pops.append(pp)
        overlaps.append(ov)

    record(t0, psi)
    if config.integrator == "rk4":
        t = t0
        for step in range(1, steps + 1):
            k1 = rhs(t, psi)
            k2 = rhs(t + h / 2, psi + h / 2 * k1)
            k3 = rhs(t + h / 2, psi + h / 2 * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t0 + step * h
            if step % config.record_every == 0 or step == steps:
                record(t, psi)
                if lossless and abs(norms[-1] - 1.0) > NORM_DRIFT_LIMIT:
                    raise StepSizeError(
                        f"norm drifted to {norms[-1]:.3e} at t={t:.4g}; reduce dt"
                    )
    else:
        grid = np.linspace(t0, t1, steps // config.record_every + 2)
        sol = solve_ivp(rhs, (t0, t1), psi, method="DOP853", t_eval=grid,
                        rtol=config.rtol, atol=config.atol)
        if not sol.success:
            raise RuntimeError(sol.message)
        times.clear(); states.clear(); norms.clear(); pops.clear(); overlaps.clear()
        for t, y in zip(sol.t, sol.y.T):
            record(t, y)
        if lossless and abs(norms[-1] - 1.0) > NORM_DRIFT_LIMIT:
            raise StepSizeError(f"norm drifted to {norms[-1]:.3e}; tighten rtol")

    return Trajectory(
        np.array(times),
        np.array(states),
        np.array(norms),
        np.array(pops).reshape(len(times), basis.Q),
        np.array(overlaps),
    )


@dataclass
class TransferReport:
    fade_T: float
    fidelity: float
    absorbed: float
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


def ratos_schedule(Q: int, mode_i: int, mode_j: int, amplitude: complex, fade_T: float) -> ControlSchedule:
    """Only ``Omega_i`` on, then a cosine cross-fade to ``Omega_j`` over ``[0, fade_T]``."""
    initial = np.zeros(Q, dtype=complex)
    initial[mode_i - 1] = amplitude
    return ControlSchedule(tuple(initial)).cross_fade(mode_i, mode_j, 0.0, fade_T)


def run_ratos(
    params: ModelParams,
    basis: SymmetricBasis,
    n: int,
    mode_i: int,
    mode_j: int,
    amplitude: complex,
    fade_T: float,
    config: Optional[EvolutionConfig] = None,
    initial: str = "dark",
    keep_trajectory: bool = True,
) -> TransferReport:
    """Transfer the dark state from mode ``i`` to mode ``j`` by a control cross-fade.

    ``initial="dark"`` starts in ``|D,n>`` with only ``Omega_i`` on;
    ``initial="fock"`` starts with n photons in mode ``i`` and no atomic
    excitation. Fidelity is ``|<D_j|psi_final>|^2`` against the dark state
    with only ``Omega_j`` on; ``absorbed = 1 - <psi|psi>``.
    """
    if mode_i == mode_j:
        raise ValueError("mode_i and mode_j must differ")
    if not (1 <= mode_i <= params.Q and 1 <= mode_j <= params.Q):
        raise ValueError(f"modes must lie in 1..{params.Q}")
    if abs(amplitude) <= 0:
        raise ValueError("control amplitude must be positive")
    if n != basis.n:
        raise ValueError(f"basis has excitation number {basis.n}, not {n}")
    Q = params.Q
    omega_i = np.zeros(Q, dtype=complex)
    omega_i[mode_i - 1] = amplitude
    omega_j = np.zeros(Q, dtype=complex)
    omega_j[mode_j - 1] = amplitude
    if initial == "dark":
        psi0 = dark_state(params, omega_i, basis).amplitudes
    elif initial == "fock":
        photons = [0] * Q
        photons[mode_i - 1] = n
        psi0 = fock_state(basis, photons)
    else:
        raise ValueError(f"unknown initial state {initial!r}")
    target = dark_state(params, omega_j, basis).amplitudes

    if fade_T <= 0:
        # sudden switch: the state is unchanged
        fidelity = overlap(psi0, target)
        return TransferReport(fade_T, fidelity, 0.0, None)

    if config is None:
        config = EvolutionConfig(0.0, fade_T, dt=min(0.01, fade_T / 50), record_every=10**9)
    else:
        config = EvolutionConfig(0.0, fade_T, dt=min(config.dt, fade_T / 50),
                                 integrator=config.integrator,
                                 record_every=config.record_every,
                                 rtol=config.rtol, atol=config.atol)
    schedule = ratos_schedule(Q, mode_i, mode_j, amplitude, fade_T)
    traj = evolve(params, schedule, basis, psi0, config, track_dark=keep_trajectory)
    psi = traj.final_state
    fidelity = overlap(psi, target)
    absorbed = 1.0 - float(np.real(np.vdot(psi, psi)))
    return TransferReport(fade_T, fidelity, absorbed, traj if keep_trajectory else None)


def _sweep_one(args):
    params, basis, n, i, j, amp, T, config = args
    rep = run_ratos(params, basis, n, i, j, amp, T, config, keep_trajectory=False)
    return rep.fade_T, rep.fidelity, rep.absorbed


def adiabaticity_sweep(
    params: ModelParams,
    basis: SymmetricBasis,
    n: int,
    mode_i: int,
    mode_j: int,
    amplitude: complex,
    fade_times: Sequence[float],
    config: Optional[EvolutionConfig] = None,
    workers: int = 1,
) -> List[tuple]:
    """``(fade_T, fidelity, absorbed)`` for each fade time, in input order."""
    fade_times = list(fade_times)
    if not fade_times:
        raise ValueError("fade_times must be non-empty")
    jobs = [(params, basis, n, mode_i, mode_j, amplitude, T, config) for T in fade_times]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]


def geometric_fade_grid(amplitude: float, decades: float = 2.0, per_decade: int = 4,
                        top: Optional[float] = None) -> np.ndarray:
    """Fade times ending at ``top`` (default ``200/|amplitude|``), geometric spacing."""
    top = 200.0 / abs(amplitude) if top is None else top
    count = int(round(decades * per_decade)) + 1
    return top * np.logspace(-decades, 0, count)

"""1-D Maxwell-Bloch propagation of weak signal envelopes through a multi-Lambda medium.

Units: c = 1 by default, lengths in c/gamma_ref, times in 1/gamma_ref. In the
weak-signal (linear) regime the envelopes ``a_q(z, t)`` and the mean-field
coherences obey

    (d/dt + c d/dz) a_q = i N conj(g_q) s_BA_q
    d/dt s_BA_q = i g_q a_q + i Omega_q s_BC - (gamma_q/2 + i delta) s_BA_q
    d/dt s_BC   = i sum_q conj(Omega_q) s_BA_q - i (delta - Delta) s_BC

inside ``[0, L]``; outside the medium the fields move freely. Time stepping
splits free transport (exact for Courant number one) from the local
field-atom coupling, which is integrated exactly with a matrix exponential.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .model import ControlSchedule, ModelParams, as_controls
from .transforms import BasisUndefinedError, optical_transform

log = logging.getLogger(__name__)


class CFLError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class MediumSpec:
    """Uniform medium on ``[0, length)`` inside the window ``[z_min, z_max]``.

    The atom number (and hence the coupling density ``N g^2``) comes from
    :class:`ModelParams`.
    """

    length: float
    grid_points: int
    z_min: float
    z_max: float
    c: float = 1.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("medium length must be positive")
        if self.grid_points < 2 or self.z_max <= self.z_min:
            raise ValueError("window needs z_max > z_min and at least two points")
        if self.z_min >= 0 or self.z_max <= self.length:
            raise ValueError("window must contain the medium with vacuum on both sides")

    @classmethod
    def from_spacing(cls, length: float, dz: float, before: float, after: float, c: float = 1.0):
        """Grid with spacing ``dz`` placing grid points on ``z = 0`` and ``z = length``."""
        n_before = int(np.ceil(before / dz))
        n_after = int(np.ceil(after / dz))
        n_med = int(round(length / dz))
        if abs(n_med * dz - length) > 1e-9 * max(1.0, length):
            raise ValueError("length must be a multiple of dz")
        z_min = -n_before * dz
        z_max = (n_med + n_after) * dz
        return cls(length, n_before + n_med + n_after + 1, z_min, z_max, c)

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.grid_points - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.grid_points)

    @property
    def medium_slice(self) -> slice:
        z = self.z
        tol = 1e-9 * self.dz
        idx = np.nonzero((z >= -tol) & (z < self.length - tol))[0]
        return slice(int(idx[0]), int(idx[-1]) + 1)

    @property
    def effective_length(self) -> float:
        s = self.medium_slice
        return (s.stop - s.start) * self.dz


@dataclass
class FieldGrid:
    """Envelopes on the whole window and coherences (zero outside the medium)."""

    t: float
    z: np.ndarray
    envelopes: np.ndarray  # (Q, M)
    sigma_ba: np.ndarray  # (Q, M)
    sigma_bc: np.ndarray  # (M,)

    def copy(self) -> "FieldGrid":
        return FieldGrid(self.t, self.z, self.envelopes.copy(), self.sigma_ba.copy(), self.sigma_bc.copy())

    def field_energy(self, dz: float) -> np.ndarray:
        return np.sum(np.abs(self.envelopes) ** 2, axis=1) * dz

    def excitation(self, params: ModelParams, dz: float) -> float:
        """Field energy plus ``N`` times the atomic coherence weight."""
        atoms = np.sum(np.abs(self.sigma_ba) ** 2) + np.sum(np.abs(self.sigma_bc) ** 2)
        return float(np.sum(self.field_energy(dz)) + params.N * atoms * dz)


@dataclass(frozen=True)
class GaussianPulse:
    """Input envelope ``A exp(-(tau - arrival)^2 / (2 sigma^2)) exp(-i carrier tau)``.

    ``tau = t - z/c``: the peak reaches ``z = 0`` at ``t = arrival``;
    ``carrier`` is the frequency offset from the nominal signal frequency.
    """

    mode: int
    arrival: float
    sigma: float
    amplitude: complex = 1.0
    carrier: float = 0.0

    def envelope(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((tau - self.arrival) / self.sigma) ** 2 - 1j * self.carrier * tau)

    @property
    def spatial_fwhm(self) -> float:
        """Intensity FWHM in time units (multiply by c for length)."""
        return 2.0 * self.sigma * np.sqrt(np.log(2.0))


def initial_grid(medium: MediumSpec, Q: int, pulses: Sequence[GaussianPulse] = ()) -> FieldGrid:
    z = medium.z
    env = np.zeros((Q, z.size), dtype=complex)
    for p in pulses:
        if not 1 <= p.mode <= Q:
            raise ValueError(f"pulse mode {p.mode} out of range 1..{Q}")
        env[p.mode - 1] += p.envelope(-z / medium.c)
    med = medium.medium_slice
    total = np.sum(np.abs(env) ** 2)
    inside = np.sum(np.abs(env[:, med.start:]) ** 2)
    if total > 0 and inside > 1e-10 * total:
        raise ValueError("input pulses must start in the vacuum region before the medium")
    edge = np.sum(np.abs(env[:, :3]) ** 2)
    if total > 0 and edge > 1e-12 * total:
        raise ValueError("window too short: pulse is cut at z_min")
    zeros = np.zeros((Q, z.size), dtype=complex)
    return FieldGrid(0.0, z, env, zeros, np.zeros(z.size, dtype=complex))


# -- local field-atom dynamics ------------------------------------------------

def local_generator(params: ModelParams, controls) -> np.ndarray:
    """Generator ``M`` of ``dy/dt = M y`` for ``y = (a_1..a_Q, s_BA_1..s_BA_Q, s_BC)``."""
    Q = params.Q
    omega = as_controls(controls, Q)
    g = params.g_array
    M = np.zeros((2 * Q + 1, 2 * Q + 1), dtype=complex)
    for q in range(Q):
        M[q, Q + q] = 1j * params.N * np.conj(g[q])
        M[Q + q, q] = 1j * g[q]
        M[Q + q, 2 * Q] = 1j * omega[q]
        M[Q + q, Q + q] = -(0.5 * params.gamma[q] + 1j * params.delta)
        M[2 * Q, Q + q] = 1j * np.conj(omega[q])
    M[2 * Q, 2 * Q] = -1j * (params.delta - params.Delta)
    return M


def field_sources(grid: FieldGrid, params: ModelParams) -> np.ndarray:
    """Right-hand sides ``i N conj(g_q) s_BA_q`` of the field equations."""
    return 1j * params.N * np.conj(params.g_array)[:, None] * grid.sigma_ba


def bright_coherence(grid: FieldGrid, params: ModelParams, controls) -> np.ndarray:
    """``s_{B,EB} = sum_q (conj(Omega_q)/Omega) s_BA_q``."""
    omega = as_controls(controls, params.Q)
    return (np.conj(omega) / np.linalg.norm(omega)) @ grid.sigma_ba


def step_maxwell_bloch(grid: FieldGrid, params: ModelParams, controls, dt: float,
                       medium: MediumSpec) -> FieldGrid:
    """Advance one step: upwind transport, then exact local coupling in the medium.

    ``controls`` are the control amplitudes to hold during the step (pass the
    mid-step value for second-order accuracy in time-dependent schedules).
    """
    nu = medium.c * dt / medium.dz
    if nu > 1.0 + 1e-12:
        raise CFLError(f"Courant number {nu:.4g} > 1: reduce dt")
    out = grid.copy()
    env = out.envelopes
    shifted = np.zeros_like(env)
    shifted[:, 1:] = env[:, :-1]
    out.envelopes = env - nu * (env - shifted)
    Q = params.Q
    med = medium.medium_slice
    P = expm(local_generator(params, controls) * dt)
    y = np.concatenate([out.envelopes[:, med], out.sigma_ba[:, med], out.sigma_bc[None, med]])
    y = P @ y
    out.envelopes[:, med] = y[:Q]
    out.sigma_ba[:, med] = y[Q : 2 * Q]
    out.sigma_bc[med] = y[2 * Q]
    out.t = grid.t + dt
    if not np.all(np.isfinite(out.envelopes)):
        raise NumericalError(f"non-finite field at t={out.t:.4g}")
    return out


# -- polariton ------------------------------------------------------------------

@dataclass(frozen=True)
class Polariton:
    theta: float
    psi: np.ndarray  # dark polariton Psi(z)
    bright: np.ndarray  # orthogonal (bright) combination
    b_q: np.ndarray  # EIT-mode envelope


def mixing_angle(params: ModelParams, R: float) -> float:
    return float(np.arctan2(np.sqrt(params.N), R))


def polariton_decompose(grid: FieldGrid, params: ModelParams, controls,
                        frozen_bq: Optional[np.ndarray] = None) -> Polariton:
    """Split fields into the dark-state polariton and its bright partner.

    When all controls vanish the EIT mode is undefined; ``frozen_bq`` (the
    ``b_Q`` coefficients from the last defined control setting) is then used
    and ``theta = pi/2``.
    """
    omega = as_controls(controls, params.Q)
    try:
        ob = optical_transform(params, omega)
        coeffs, R = ob.bQ_coeffs, ob.R
    except BasisUndefinedError:
        if frozen_bq is None:
            raise
        coeffs, R = np.asarray(frozen_bq, dtype=complex), 0.0
    theta = mixing_angle(params, R)
    b_q = coeffs @ grid.envelopes
    atom = np.sqrt(params.N) * grid.sigma_bc
    psi = np.cos(theta) * b_q - np.sin(theta) * atom
    bright = np.sin(theta) * b_q + np.cos(theta) * atom
    return Polariton(theta, psi, bright, b_q)


# -- closed-form EIT quantities ---------------------------------------------------

def bright_decay(params: ModelParams, controls) -> float:
    """Decay rate of ``|EB>``: ``sum_q |Omega_q/Omega|^2 gamma_q``."""
    omega = as_controls(controls, params.Q)
    w = np.abs(omega) ** 2
    return float(w @ params.gamma_array / w.sum())


def susceptibility(params: ModelParams, controls, detunings) -> np.ndarray:
    """Normalized EIT-mode susceptibility on a grid of signal detunings.

    ``chi = (gamma/2) (Delta - d) / [(Delta - d)(d - i gamma/2) + Omega^2]``,
    scaled so that ``chi = i`` on bare resonance (``Omega = 0``, ``d = 0``).
    Positive imaginary part is absorption; the amplitude transmission
    through a medium of resonant optical depth ``d0`` is
    ``exp(i d0 chi / 2)``.
    """
    omega = as_controls(controls, params.Q)
    Om = float(np.linalg.norm(omega))
    if Om == 0:
        raise BasisUndefinedError("susceptibility of the EIT mode needs Omega > 0")
    gam = bright_decay(params, omega)
    d = np.asarray(detunings, dtype=float)
    two = params.Delta - d
    return 0.5 * gam * two / (two * (d - 0.5j * gam) + Om**2)


def transmission(chi, optical_depth: float) -> np.ndarray:
    """Intensity transmission ``exp(-d0 Im chi)``."""
    return np.exp(-optical_depth * np.imag(chi))


def optical_depth(params: ModelParams, controls, length: float, c: float = 1.0) -> float:
    """Resonant optical depth of the EIT mode, ``4 N g^2 L / (c gamma)``."""
    omega = as_controls(controls, params.Q)
    ob = optical_transform(params, omega)
    return 4.0 * params.N * ob.g_eff**2 * length / (c * bright_decay(params, omega))


def transparency_fwhm(params: ModelParams, controls) -> float:
    """Full width of the transparency window where absorption is half its peak."""
    omega = as_controls(controls, params.Q)
    Om = float(np.linalg.norm(omega))
    gam = bright_decay(params, omega)
    if gam <= 0 or Om <= 0:
        raise ValueError("transparency window needs Omega > 0 and gamma > 0")
    return 0.5 * gam * (np.sqrt((4.0 * Om / gam) ** 2 + 1.0) - 1.0)


def group_velocity(params: ModelParams, controls, c: float = 1.0):
    """``(v_g, n_g)`` with ``n_g = N / R^2``."""
    R = optical_transform(params, controls).R
    n_g = params.N / R**2
    return c / (1.0 + n_g), n_g


# -- fast runner ----------------------------------------------------------------

@dataclass
class PropagationReport:
    times: np.ndarray  # probe sample times
    input_trace: np.ndarray  # (B, Q, T) at the probe just before the medium
    output_trace: np.ndarray  # (B, Q, T) at the probe just after the medium
    input_energy: np.ndarray  # (B, Q)
    output_energy: np.ndarray  # (B, Q)
    final: FieldGrid  # batch element 0
    snapshots: List[dict] = field(default_factory=list)
    z_in: float = 0.0
    z_out: float = 0.0
    medium_length: float = 0.0
    dt: float = 0.0

    def peak_time(self, trace: np.ndarray) -> float:
        """Parabolic-interpolated peak time of ``sum_q |trace_q|^2`` (one batch row)."""
        power = np.sum(np.abs(trace) ** 2, axis=0)
        k = int(np.argmax(power))
        if 0 < k < power.size - 1:
            y0, y1, y2 = power[k - 1 : k + 2]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        else:
            shift = 0.0
        return float(self.times[k] + shift * self.dt)

    def medium_delay(self, batch: int = 0) -> float:
        """Extra transit time caused by the medium relative to vacuum."""
        t_in = self.peak_time(self.input_trace[batch])
        t_out = self.peak_time(self.output_trace[batch])
        return t_out - t_in - (self.z_out - self.z_in - self.medium_length)

    def measured_group_velocity(self, batch: int = 0) -> float:
        L = self.medium_length
        return L / (self.medium_delay(batch) + L)

    def transmitted_fraction(self) -> np.ndarray:
        return self.output_energy.sum(axis=1) / self.input_energy.sum(axis=1)


def _fwhm(z: np.ndarray, profile: np.ndarray) -> float:
    k = int(np.argmax(profile))
    half = 0.5 * profile[k]
    left = k
    while left > 0 and profile[left] > half:
        left -= 1
    right = k
    while right < profile.size - 1 and profile[right] > half:
        right += 1

    def cross(i, j):
        y0, y1 = profile[i], profile[j]
        return z[i] + (half - y0) * (z[j] - z[i]) / (y1 - y0)

    return float(cross(right - 1, right) - cross(left, left + 1))


def spatial_width(z: np.ndarray, envelopes: np.ndarray) -> float:
    """Intensity FWHM of ``sum_q |a_q(z)|^2``."""
    return _fwhm(z, np.sum(np.abs(envelopes) ** 2, axis=0))


def run_pulse_experiment(
    medium: MediumSpec,
    params: ModelParams,
    schedule: ControlSchedule,
    input_pulses,
    duration: float,
    snapshot_every: Optional[float] = None,
    carriers: Optional[Sequence[float]] = None,
) -> PropagationReport:
    """Propagate input pulses through the medium for ``duration``.

    The time step equals ``dz / c`` so transport is an exact shift; the field
    is stored along characteristics and only medium cells are updated each
    step. ``carriers`` runs a batch of otherwise identical simulations with
    the input pulses' carrier offsets replaced by each value (frequency scan).
    Snapshots hold envelopes, coherences and the dark-polariton split.
    """
    if schedule.Q != params.Q:
        raise ValueError("schedule and params disagree on Q")
    pulses = list(input_pulses)
    Q = params.Q
    dz, c = medium.dz, medium.c
    dt = dz / c
    steps = int(np.ceil(duration / dt - 1e-9))
    M = medium.grid_points
    z = medium.z
    med = medium.medium_slice
    i0, i1 = med.start, med.stop
    if i0 < 1 or i1 >= M:
        raise ValueError("need at least one vacuum grid point on each side of the medium")
    carrier_list = [None] if carriers is None else list(carriers)
    B = len(carrier_list)

    # characteristic storage: field at (grid i, step n) is F[:, :, i - n + steps]
    F = np.zeros((B, Q, M + steps), dtype=complex)
    for b, nu in enumerate(carrier_list):
        batch_pulses = [p if nu is None else GaussianPulse(p.mode, p.arrival, p.sigma, p.amplitude, nu)
                        for p in pulses]
        F[b, :, steps:] = initial_grid(medium, Q, batch_pulses).envelopes
    input_energy = np.sum(np.abs(F) ** 2, axis=2) * dz
    cells = i1 - i0
    atoms = np.zeros((B, Q + 1, cells), dtype=complex)  # s_BA_1..Q, s_BC

    probe_in, probe_out = i0 - 1, i1
    in_trace = np.zeros((B, Q, steps + 1), dtype=complex)
    out_trace = np.zeros((B, Q, steps + 1), dtype=complex)
    in_trace[:, :, 0] = F[:, :, probe_in + steps]
    out_trace[:, :, 0] = F[:, :, probe_out + steps]

    cache: Dict[tuple, tuple] = {}
    snap_stride = None if snapshot_every is None else max(1, int(round(snapshot_every / dt)))
    snapshots: List[dict] = []
    last_bq = None

    def take_snapshot(n):
        nonlocal last_bq
        t = n * dt
        env = F[0, :, steps - n : steps - n + M].copy()
        sba = np.zeros((Q, M), dtype=complex)
        sbc = np.zeros(M, dtype=complex)
        sba[:, med] = atoms[0, :Q]
        sbc[med] = atoms[0, Q]
        grid = FieldGrid(t, z, env, sba, sbc)
        omega = schedule(t)
        try:
            last_bq = optical_transform(params, omega).bQ_coeffs
        except BasisUndefinedError:
            pass
        pol = polariton_decompose(grid, params, omega, frozen_bq=last_bq) if last_bq is not None else None
        snapshots.append({"t": t, "grid": grid, "polariton": pol, "controls": omega})

    if snap_stride is not None:
        take_snapshot(0)

    for n in range(1, steps + 1):
        omega = schedule((n - 0.5) * dt)
        key = tuple(np.round(omega, 14))
        blocks = cache.get(key)
        if blocks is None:
            P = expm(local_generator(params, omega) * dt)
            blocks = (P[:Q, :Q], P[:Q, Q:], P[Q:, :Q], P[Q:, Q:])
            if len(cache) > 4096:
                cache.clear()
            cache[key] = blocks
        Paa, Pas, Psa, Pss = blocks
        lo = i0 - n + steps
        a = F[:, :, lo : lo + cells]
        a_new = Paa @ a + Pas @ atoms
        atoms = Psa @ a + Pss @ atoms
        F[:, :, lo : lo + cells] = a_new
        in_trace[:, :, n] = F[:, :, probe_in - n + steps]
        out_trace[:, :, n] = F[:, :, probe_out - n + steps]
        if snap_stride is not None and n % snap_stride == 0:
            take_snapshot(n)
        if n % 4096 == 0 and not np.all(np.isfinite(atoms)):
            raise NumericalError(f"non-finite coherences at t={n * dt:.4g}")

    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(atoms))):
        raise NumericalError("non-finite values in the final state")

    output_energy = np.sum(np.abs(out_trace) ** 2, axis=2) * c * dt
    env = F[0, :, 0:M].copy()
    sba = np.zeros((Q, M), dtype=complex)
    sbc = np.zeros(M, dtype=complex)
    sba[:, med] = atoms[0, :Q]
    sbc[med] = atoms[0, Q]
    final = FieldGrid(steps * dt, z, env, sba, sbc)
    return PropagationReport(
        times=np.arange(steps + 1) * dt,
        input_trace=in_trace,
        output_trace=out_trace,
        input_energy=input_energy,
        output_energy=output_energy,
        final=final,
        snapshots=snapshots,
        z_in=float(z[probe_in]),
        z_out=float(z[probe_out]),
        medium_length=medium.effective_length,
        dt=dt,
    )


def compression_at_mid_medium(report: PropagationReport, medium: MediumSpec, pulse: GaussianPulse) -> float:
    """Ratio of in-medium to free-space spatial FWHM when the pulse centroid is at ``L/2``."""
    med = medium.medium_slice
    best, best_gap = None, np.inf
    for snap in report.snapshots:
        env = snap["grid"].envelopes
        power = np.sum(np.abs(env[:, med]) ** 2, axis=0)
        if power.sum() == 0:
            continue
        zc = float(np.sum(power * snap["grid"].z[med]) / power.sum())
        gap = abs(zc - 0.5 * medium.length)
        if gap < best_gap:
            best, best_gap = snap, gap
    if best is None:
        raise ValueError("no snapshot with the pulse inside the medium")
    width = spatial_width(best["grid"].z[med], best["grid"].envelopes[:, med])
    return width / (pulse.spatial_fwhm * medium.c)


def shape_overlap(reference: np.ndarray, signal: np.ndarray) -> float:
    """Max over integer shifts of the normalized overlap ``|<ref|sig>|^2``.

    Both are 1-D complex time traces on the same grid.
    """
    ref = np.asarray(reference, dtype=complex)
    sig = np.asarray(signal, dtype=complex)
    nr = np.vdot(ref, ref).real
    ns = np.vdot(sig, sig).real
    if nr == 0 or ns == 0:
        return 0.0
    size = ref.size + sig.size
    corr = np.fft.ifft(np.fft.fft(sig, size) * np.conj(np.fft.fft(ref, size)))
    return float(np.max(np.abs(corr)) ** 2 / (nr * ns))


def write_envelope_csv(path, z_or_delta: np.ndarray, columns: np.ndarray, label: str = "z",
                       header_comment: Optional[str] = None) -> None:
    """CSV with ``label`` then real/imag pairs per mode (``columns`` is ``(Q, K)``)."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        Q = columns.shape[0]
        head = [label]
        for q in range(1, Q + 1):
            head += [f"re_{q}", f"im_{q}"]
        writer.writerow(head)
        for k, x in enumerate(z_or_delta):
            row = [f"{x:.10g}"]
            for q in range(Q):
                row += [f"{columns[q, k].real:.12g}", f"{columns[q, k].imag:.12g}"]
            writer.writerow(row)


def transmission_scan(medium: MediumSpec, params: ModelParams, schedule: ControlSchedule,
                      pulse: GaussianPulse, detunings, duration: float) -> np.ndarray:
    """Transmitted energy fraction of a long pulse versus extra signal detuning.

    A detuning ``d`` is realized as a carrier offset ``-d`` of the input
    pulse, which shifts the effective one- and two-photon detunings by ``d``.
    All scan points run as one batched simulation.
    """
    carriers = [-float(d) for d in detunings]
    rep = run_pulse_experiment(medium, params, schedule, [pulse], duration, carriers=carriers)
    return rep.transmitted_fraction()


def absorbance_width(detunings, transmitted) -> float:
    """Full width of the transparency dip at half the peak absorbance.

    Absorbance is ``-ln T``; the crossing on each side of the central
    minimum is located by linear interpolation.
    """
    d = np.asarray(detunings, dtype=float)
    order = np.argsort(d)
    d = d[order]
    absorb = -np.log(np.asarray(transmitted, dtype=float)[order])
    centre = int(np.argmin(np.abs(d)))
    half = 0.5 * absorb.max()

    def crossing(indices):
        prev = centre
        for i in indices:
            if absorb[i] >= half:
                y0, y1 = absorb[prev], absorb[i]
                return d[prev] + (half - y0) * (d[i] - d[prev]) / (y1 - y0)
            prev = i
        raise ValueError("scan range does not reach half the peak absorbance")

    right = crossing(range(centre + 1, d.size))
    left = crossing(range(centre - 1, -1, -1))
    return float(right - left)

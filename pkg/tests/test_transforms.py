import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratos_sim.bosonic import transform_occupation, transform_state
from ratos_sim.hilbert import SectorSpec, enumerate_sector
from ratos_sim.model import ModelParams
from ratos_sim.transforms import (
    BasisUndefinedError,
    atomic_transform,
    direct_transformed_hamiltonian,
    householder_completion,
    induced_sector_unitary,
    lambda_reference,
    mode_couplings,
    optical_transform,
    reduced_lambda_block,
    structure_report,
    transformed_hamiltonian,
)

rng = np.random.default_rng(5)
s2 = np.sqrt(2)


def rand_c(size):
    return rng.uniform(0.2, 2.0, size) * np.exp(2j * np.pi * rng.random(size))


def params(Q, N=1, g=None, **kw):
    g = np.ones(Q) if g is None else g
    return ModelParams(Q=Q, N=N, g=tuple(g), gamma=(0.0,) * Q, **kw)


def test_single_mode_is_trivial():
    bd = atomic_transform(params(1), [2.0])
    assert np.allclose(bd.U, [[1.0]])
    assert bd.ed_coeffs.shape == (0, 1)


def test_balanced_two_mode_bright_dark():
    bd = atomic_transform(params(2), [1.0, 1.0])
    assert np.allclose(bd.eb_coeffs, [1 / s2, 1 / s2])
    assert np.allclose(bd.ed_coeffs[0], [-1 / s2, 1 / s2])


def test_three_modes_unitary_and_orthogonal():
    bd = atomic_transform(params(3), [1.0, 1.0, 1.0])
    assert np.allclose(bd.U.conj().T @ bd.U, np.eye(3), atol=1e-14)
    assert np.allclose(bd.ed_coeffs.conj() @ bd.eb_coeffs, 0, atol=1e-14)


def test_balanced_optical_modes():
    ob = optical_transform(params(2), [1.0, 1.0])
    # b_s = sum_q conj(W_qs) a_q
    assert np.allclose(ob.W[:, 1].conj(), [1 / s2, 1 / s2])
    assert np.allclose(ob.W[:, 0].conj(), [-1 / s2, 1 / s2])


def test_single_control_selects_its_mode():
    g = np.array([0.7, 1.9j, 1.1])
    ob = optical_transform(params(3, g=g), [0, 2.0 * np.exp(0.4j), 0])
    assert np.allclose(np.abs(ob.bQ_coeffs), [0, 1, 0])
    assert ob.g_eff == pytest.approx(abs(g[1]))


def test_unequal_couplings_example():
    ob = optical_transform(params(2, g=np.array([1.0, 2.0])), [1.0, 1.0])
    assert ob.R == pytest.approx(np.sqrt(5) / 2)
    assert np.allclose(ob.bQ_coeffs, [2 / np.sqrt(5), 1 / np.sqrt(5)])
    assert ob.g_eff == pytest.approx(np.sqrt(2) / (np.sqrt(5) / 2))


def test_all_controls_zero_raises():
    with pytest.raises(BasisUndefinedError):
        atomic_transform(params(2), [0, 0])
    with pytest.raises(BasisUndefinedError):
        optical_transform(params(2), [0, 0])


@settings(max_examples=60, deadline=None)
@given(Q=st.integers(1, 5), seed=st.integers(0, 10**6))
def test_householder_completion_random(Q, seed):
    r = np.random.default_rng(seed)
    v = r.normal(size=Q) + 1j * r.normal(size=Q)
    v /= np.linalg.norm(v)
    U = householder_completion(v)
    assert np.allclose(U.conj().T @ U, np.eye(Q), atol=1e-12)
    assert np.allclose(U[:, -1], v, atol=1e-14)


def test_householder_handles_zero_last_entry():
    U = householder_completion(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(U.conj().T @ U, np.eye(3))
    assert np.allclose(U[:, -1], [1, 0, 0])


@pytest.mark.parametrize("Q", [2, 3, 4])
def test_excited_dark_states_miss_eit_mode(Q):
    g, om = rand_c(Q), rand_c(Q)
    p = params(Q, g=g)
    bd = atomic_transform(p, om)
    W = optical_transform(p, om).W
    # sum_q g_q <ED_r|A_q> W_qQ = 0
    lhs = bd.ed_coeffs.conj() @ (g * W[:, -1])
    assert np.max(np.abs(lhs)) < 1e-13
    G, O = mode_couplings(p, om)
    assert np.max(np.abs(G[:-1, -1])) < 1e-13
    assert np.max(np.abs(O[:-1])) < 1e-13
    assert G[-1, -1] == pytest.approx(optical_transform(p, om).g_eff)
    assert O[-1] == pytest.approx(np.linalg.norm(om))


def test_global_control_phase_invariance():
    g, om = rand_c(3), rand_c(3)
    p = params(3, g=g)
    ph = np.exp(0.83j)
    a, b = optical_transform(p, om), optical_transform(p, om * ph)
    assert a.R == pytest.approx(b.R)
    assert np.allclose(b.bQ_coeffs, a.bQ_coeffs * np.conj(ph))
    e1, e2 = atomic_transform(p, om), atomic_transform(p, om * ph)
    assert np.allclose(np.abs(e1.eb_coeffs), np.abs(e2.eb_coeffs))


@pytest.mark.parametrize("N,Q,n", [(1, 2, 1), (2, 2, 2), (3, 3, 1), (2, 3, 2), (1, 4, 1)])
def test_transformed_hamiltonian_structure(N, Q, n):
    g, om = rand_c(Q), rand_c(Q)
    p = params(Q, N=N, g=g, delta=0.3, Delta=-0.4)
    b = enumerate_sector(SectorSpec(N, Q, n))
    V = induced_sector_unitary(p, om, b)
    assert abs(V.conj().T @ V - np.eye(b.dim)).max() < 1e-12
    Ht = transformed_hamiltonian(p, om, b)
    assert structure_report(Ht, b) < 1e-12
    assert abs(Ht - direct_transformed_hamiltonian(p, om, b)).max() < 1e-12


def test_structure_report_detects_violations():
    b = enumerate_sector(SectorSpec(1, 2, 1))
    H = np.zeros((b.dim, b.dim), dtype=complex)
    i, j = b.index[(1, 0, 0, 0, 0)], b.index[(0, 1, 0, 0, 0)]
    H[i, j] = H[j, i] = 0.3
    assert structure_report(H, b) == pytest.approx(0.3)
    assert structure_report(np.zeros((3, 3)), enumerate_sector(SectorSpec(1, 1, 1))) == 0.0


@pytest.mark.parametrize("N", [1, 2, 5])
def test_reduced_lambda_block(N):
    Q = 3
    g, om = rand_c(Q), rand_c(Q)
    p = params(Q, N=N, g=g, delta=0.7, Delta=0.2)
    b = enumerate_sector(SectorSpec(N, Q, 1))
    block = reduced_lambda_block(transformed_hamiltonian(p, om, b), b)
    ref = lambda_reference(optical_transform(p, om).g_eff, np.linalg.norm(om), 0.7, 0.2, N)
    assert np.max(np.abs(block - ref)) < 1e-12


# -- bosonic mode maps -----------------------------------------------------------

def test_beam_splitter_two_photon_bunching():
    M = np.array([[1, 1], [-1, 1]]) / s2
    out = transform_occupation((1, 1), M)
    assert abs(out.get((1, 1), 0)) < 1e-15
    assert abs(out[(2, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(out[(0, 2)]) ** 2 == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_mode_map_is_norm_preserving_and_invertible(seed):
    r = np.random.default_rng(seed)
    M = householder_completion((lambda v: v / np.linalg.norm(v))(r.normal(size=3) + 1j * r.normal(size=3)))
    state = {(2, 0, 1): 0.6, (0, 1, 2): 0.8j}
    out = transform_state(state, M)
    assert sum(abs(v) ** 2 for v in out.values()) == pytest.approx(1.0)
    back = transform_state(out, M.conj().T)
    for k, v in state.items():
        assert back[k] == pytest.approx(v)
    assert sum(abs(v) ** 2 for v in back.values()) == pytest.approx(1.0)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratos_sim.linoptics import (
    FockInput,
    ModeTransform,
    coupling_probability,
    coupling_table,
    end_to_end_transfer,
    max_coupling_over_controls,
    ratio_grid,
    single_photon_coupling,
    transform_from_ratios,
)
from ratos_sim.model import ModelParams
from ratos_sim.transforms import BasisUndefinedError

s2 = np.sqrt(2)


def test_single_photon_with_own_control():
    for Q in (1, 2, 3):
        occ = [0] * Q
        occ[-1] = 1
        r = [0] * Q
        r[-1] = 1.0
        assert coupling_probability(FockInput.from_occupation(occ), transform_from_ratios(r)) == pytest.approx(1.0)


def test_two_photons_one_per_mode_balanced():
    p = coupling_probability(FockInput.from_occupation((1, 1)), transform_from_ratios([1, 1]))
    assert p == pytest.approx(0.5, abs=1e-15)


def test_two_photons_in_eit_mode():
    fock = FockInput.superposition({(2, 0): 0.5, (1, 1): 1 / s2, (0, 2): 0.5}, normalize=False)
    assert coupling_probability(fock, transform_from_ratios([1, 1])) == pytest.approx(1.0)


def test_vacuum_always_couples():
    vac = FockInput.from_occupation((0, 0, 0))
    for r in ([1, 0, 0], [0.3, 1j, 2]):
        assert coupling_probability(vac, transform_from_ratios(r)) == 1.0


def test_control_from_model_matches_ratios():
    p = ModelParams(Q=2, N=5, g=(1.0, 2.0j), gamma=(1.0, 1.0))
    om = np.array([0.4, 1.1])
    mt = ModeTransform.from_controls(p, om, om)
    fock = FockInput.single_photon(om / p.g_array)
    assert coupling_probability(fock, mt.W_in) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), Q=st.integers(1, 4))
def test_single_photon_rank_one_formula(seed, Q):
    r = np.random.default_rng(seed)
    c = r.normal(size=Q) + 1j * r.normal(size=Q)
    ratios = r.normal(size=Q) + 1j * r.normal(size=Q)
    W = transform_from_ratios(ratios)
    brute = coupling_probability(FockInput.single_photon(c), W)
    assert brute == pytest.approx(single_photon_coupling(c, W), abs=1e-12)
    # matched controls couple it completely
    assert coupling_probability(FockInput.single_photon(c), transform_from_ratios(c)) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), phase=st.floats(0, 2 * np.pi))
def test_global_control_phase_invariance(seed, phase):
    r = np.random.default_rng(seed)
    ratios = r.normal(size=3) + 1j * r.normal(size=3)
    fock = FockInput.superposition({(1, 1, 0): 0.6, (0, 1, 1): 0.8j})
    a = coupling_probability(fock, transform_from_ratios(ratios))
    b = coupling_probability(fock, transform_from_ratios(ratios * np.exp(1j * phase)))
    assert a == pytest.approx(b, abs=1e-12)


def test_grid_maximum_for_one_photon_per_mode():
    best, r = max_coupling_over_controls(FockInput.from_occupation((1, 1)))
    assert best == pytest.approx(0.5, abs=1e-12)
    assert abs(abs(r[0]) - abs(r[1])) < 1e-12


def test_grid_maximum_single_photon_reaches_one():
    c = np.array([1.0, 1j]) / s2
    best, r = max_coupling_over_controls(FockInput.single_photon(c), ratio_grid(2, 8))
    assert best == pytest.approx(1.0, abs=1e-12)


def test_grid_maximum_vacuum_and_empty_grid():
    assert max_coupling_over_controls(FockInput.from_occupation((0, 0)))[0] == 1.0
    with pytest.raises(ValueError):
        max_coupling_over_controls(FockInput.from_occupation((1, 0)), [])
    with pytest.raises(BasisUndefinedError):
        transform_from_ratios([0, 0])


def test_ratio_grid_is_normalized():
    vecs = list(ratio_grid(3, 4))
    assert len(vecs) == 5**2 * 4**2
    assert np.allclose([np.linalg.norm(v) for v in vecs], 1.0)


def test_transfer_between_single_control_modes():
    res = end_to_end_transfer(FockInput.from_occupation((3, 0, 0)), transform_from_ratios([1, 0, 0]),
                              transform_from_ratios([0, 0, 2]))
    assert res.absorbed == pytest.approx(0.0, abs=1e-15)
    assert set(res.output.state) == {(0, 0, 3)}
    assert abs(res.output.state[(0, 0, 3)]) == pytest.approx(1.0)


def test_transfer_of_one_photon_per_mode():
    W = transform_from_ratios([1, 1])
    res = end_to_end_transfer(FockInput.from_occupation((1, 1)), W, W)
    assert res.absorbed == pytest.approx(0.5)
    expected = {(2, 0): 0.5, (1, 1): 1 / s2, (0, 2): 0.5}
    for k, v in expected.items():
        assert abs(res.output.state[k]) == pytest.approx(v)


def test_round_trip_is_identity():
    r = np.array([0.4, 1.2j, -0.3])
    W = transform_from_ratios(r)
    fock = FockInput.single_photon(W[:, -1])
    res = end_to_end_transfer(fock, W, W)
    assert res.absorbed == pytest.approx(0.0, abs=1e-12)
    for k, v in fock.state.items():
        assert abs(res.output.state[k] - v) < 1e-12


def test_everything_absorbed():
    res = end_to_end_transfer(FockInput.from_occupation((1, 0)), transform_from_ratios([0, 1]),
                              transform_from_ratios([0, 1]))
    assert res.output is None and res.absorbed == pytest.approx(1.0)


def test_input_validation():
    with pytest.raises(ValueError):
        FockInput({(1, 0): 0.5})
    with pytest.raises(ValueError):
        FockInput({(1, 0): 1.0, (1,): 0.0})
    with pytest.raises(ValueError):
        FockInput.from_occupation((-1, 1))
    with pytest.raises(ValueError):
        ModeTransform(np.ones((2, 2)), np.eye(2))
    with pytest.raises(ValueError):
        coupling_probability(FockInput.from_occupation((1, 1, 0)), np.eye(2))


def test_coupling_table():
    rows = coupling_table([("11", FockInput.from_occupation((1, 1)), [1, 1])])
    assert rows[0][0] == "11" and rows[0][2] == pytest.approx(0.5)

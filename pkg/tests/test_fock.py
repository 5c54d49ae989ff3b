import math

import numpy as np
import pytest
from hypothesis import given, settings

from heraldic.fock import (
    BeamSplitter,
    ElementError,
    FockBasis,
    PhaseShifter,
    PhotonCapError,
    QuantumState,
    amplitude,
    evolve,
    permanent,
    permanent_oracle,
    single_photon_unitary,
)
from heraldic.schemes import builtin, dual_rail_encode

from conftest import circuits, random_elements


def test_hom_cancellation():
    out = evolve([BeamSplitter(0, 1, "45", "0")], (1, 1))
    assert abs(amplitude(out, (1, 1))) < 1e-15
    assert abs(abs(amplitude(out, (2, 0))) - 1 / math.sqrt(2)) < 1e-15
    assert abs(abs(amplitude(out, (0, 2))) - 1 / math.sqrt(2)) < 1e-15


@pytest.mark.parametrize("theta,phi", [(30.0, 0.0), (72.5, 40.0), (200.0, 315.25)])
def test_single_photon_matches_matrix(theta, phi):
    out = evolve([BeamSplitter(0, 1, str(theta), str(phi))], (1, 0))
    t, p = math.radians(theta), math.radians(phi)
    assert abs(amplitude(out, (1, 0)) - math.cos(t)) < 1e-15
    assert abs(amplitude(out, (0, 1)) - np.exp(-1j * p) * math.sin(t)) < 1e-15


def test_phase_is_per_photon():
    out = evolve([PhaseShifter(0, "90")], (2,))
    assert abs(amplitude(out, (2,)) + 1) < 1e-15
    assert abs(amplitude(out, (2,)) - permanent_oracle([PhaseShifter(0, "90")], (2,), (2,))) < 1e-15


def test_empty_element_list_is_identity():
    assert amplitude(evolve([], (1, 0)), (1, 0)) == 1
    state = evolve([], (2, 0, 1, 3))
    assert dict(state.items()) == {(2, 0, 1, 3): 1}


def test_ns_sign_flip():
    ns = builtin("NSx")
    for n, sign in ((0, 1), (1, 1), (2, -1)):
        state = evolve(ns.elements, (n, 1, 0))
        amp = amplitude(state, (n, 1, 0))
        assert abs(amp - sign * 0.5) < 1e-12


def test_cz_2_27_heralded_amplitude():
    scheme = builtin("CZ_2_27")
    occ = dual_rail_encode(3, scheme)
    state = evolve(scheme.elements, occ)
    assert abs(abs(amplitude(state, occ)) - math.sqrt(2 / 27)) < 1e-12


def test_cz_1_16_herald_amplitude():
    scheme = builtin("CZ_1_16")
    occ = dual_rail_encode(0, scheme)
    state = evolve(scheme.elements, occ)
    assert abs(abs(amplitude(state, occ)) - 0.25) < 1e-12


def test_oracle_examples():
    assert permanent_oracle([], (1, 0, 1), (1, 0, 1)) == 1
    assert abs(permanent_oracle([BeamSplitter(0, 1, "45", "0")], (1, 1), (1, 1))) < 1e-15


def test_permanent_small_matrices():
    a = np.array([[1, 2], [3, 4]])
    assert permanent(a) == 10
    assert permanent(np.ones((4, 4))) == math.factorial(4)
    assert permanent(np.zeros((0, 0))) == 1


def test_random_four_mode_two_photon_transitions():
    rng = np.random.default_rng(11)
    elements = random_elements(rng, 4, 8)
    basis = FockBasis.get(4, 2)
    for src in basis.occ:
        state = evolve(elements, tuple(src))
        for dst in basis.occ:
            assert abs(amplitude(state, tuple(dst)) - permanent_oracle(elements, tuple(src), tuple(dst))) < 1e-10


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_evolve_matches_oracle(case):
    modes, elements, occ = case
    state = evolve(elements, occ)
    for dst in state.basis.occ:
        dst = tuple(int(n) for n in dst)
        assert abs(state.amplitude(dst) - permanent_oracle(elements, occ, dst, modes)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(circuits(max_modes=6, max_photons=4, max_depth=10))
def test_norm_and_photon_number_conserved(case):
    _, elements, occ = case
    state = evolve(elements, occ)
    assert abs(state.norm() - 1) < 1e-12
    assert all(sum(k) == sum(occ) for k, _ in state.items())


@settings(max_examples=40, deadline=None)
@given(circuits(max_modes=6, max_depth=10))
def test_single_photon_matrix_is_unitary(case):
    modes, elements, _ = case
    u = single_photon_unitary(elements, modes)
    assert np.allclose(u.conj().T @ u, np.eye(modes), atol=1e-13)


def test_superposition_input_is_linear():
    rng = np.random.default_rng(3)
    elements = random_elements(rng, 3, 6)
    amps = {(2, 0, 0): 0.6, (0, 1, 1): 0.8j}
    out = evolve(elements, QuantumState.from_amplitudes(amps))
    parts = [evolve(elements, k).vector * a for k, a in amps.items()]
    assert np.allclose(out.vector, sum(parts), atol=1e-14)


def test_invalid_elements_rejected():
    with pytest.raises(ElementError):
        BeamSplitter(1, 1, "10", "0")
    with pytest.raises(ElementError):
        evolve([BeamSplitter(0, 3, "10", "0")], (1, 0))
    with pytest.raises(ElementError):
        evolve([PhaseShifter(2, "10")], (1, 0))


def test_photon_cap():
    with pytest.raises(PhotonCapError):
        evolve([], (4, 3), photon_cap=6)
    assert evolve([], (4, 3), photon_cap=7).photons == 7


def test_amplitude_off_sector_is_zero():
    state = evolve([], (1, 0))
    assert state.amplitude((2, 0)) == 0
    with pytest.raises(ValueError):
        state.amplitude((1, 0, 0))

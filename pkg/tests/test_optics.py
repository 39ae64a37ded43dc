import math

import numpy as np
import pytest

from twinsub import fock
from twinsub import linalg
from twinsub import optics
from twinsub.fock import MODES, ModeCutoff
from twinsub.optics import BeamSplitterSpec, LossSpec


def test_zero_angle_is_identity():
    u = optics.beam_splitter_unitary(0.0, MODES, 3)
    np.testing.assert_allclose(u.todense(), np.eye(16))


def test_hong_ou_mandel():
    cutoff = ModeCutoff(2)
    u = optics.beam_splitter_unitary(math.pi / 4, MODES, cutoff)
    out = u.apply(fock.basis_state(1, 1, cutoff)).amplitudes
    assert abs(out[cutoff.index(1, 1)]) < 1e-12
    assert abs(out[cutoff.index(2, 0)]) == pytest.approx(1 / math.sqrt(2))
    assert abs(out[cutoff.index(0, 2)]) == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize('theta', [0.01, 0.3, math.pi / 4, 1.2])
def test_beam_splitter_is_unitary(theta):
    u = optics.beam_splitter_unitary(theta, MODES, 5)
    assert u.is_unitary()


@pytest.mark.parametrize('theta', [0.05, 0.7, math.pi / 4, 2.0])
def test_beam_splitter_conserves_photon_number(random_state, theta):
    state = random_state(5)
    out = optics.beam_splitter_unitary(theta, MODES, state.cutoff).apply(state)
    assert fock.mean_photons(out) == pytest.approx(fock.mean_photons(state), abs=1e-10)


@pytest.mark.parametrize('mode', MODES)
@pytest.mark.parametrize('phi', [-1.1, 0.4, math.pi])
def test_phase_shifter_conserves_photon_number(random_state, mode, phi):
    state = random_state(5)
    out = optics.phase_shifter(phi, mode, state.cutoff).apply(state)
    assert fock.mean_photons(out) == pytest.approx(fock.mean_photons(state), abs=1e-10)
    for m in MODES:
        n = fock.number(m, state.cutoff)
        assert fock.expectation(out, n) == pytest.approx(fock.expectation(state, n), abs=1e-10)


def test_beam_splitter_rejects_mode_pair():
    with pytest.raises(ValueError):
        optics.beam_splitter_unitary(0.1, ('a', "b'"), 2)


def test_beam_splitter_mode_names_are_labels():
    ab = optics.beam_splitter_unitary(0.4, ('a', 'b'), 3)
    ba = optics.beam_splitter_unitary(0.4, ('b', 'a'), 3)
    ancilla = optics.beam_splitter_unitary(0.4, fock.ANCILLA_MODES, 3)
    np.testing.assert_allclose(ba.todense(), ab.todense())
    np.testing.assert_allclose(ancilla.todense(), ab.todense())


def test_single_photon_split():
    cutoff = ModeCutoff(1)
    theta = 0.3
    out = optics.beam_splitter_unitary(theta, MODES, cutoff).apply(fock.basis_state(1, 0, cutoff))
    assert out.amplitudes[cutoff.index(1, 0)] == pytest.approx(math.cos(theta))
    assert out.amplitudes[cutoff.index(0, 1)] == pytest.approx(1j * math.sin(theta))


def _tap_amplitude(op, n, cutoff):
    return op.apply(fock.basis_state(n, 0, cutoff)).amplitudes[cutoff.index(n - 1, 1)]


@pytest.mark.parametrize('n', [1, 2, 4])
def test_weak_beam_splitter_amplitude(n):
    cutoff = ModeCutoff(n)
    theta = 0.05
    exact = _tap_amplitude(optics.beam_splitter_unitary(theta, MODES, cutoff), n, cutoff)
    assert exact == pytest.approx(1j * math.sqrt(n) * math.cos(theta) ** (n - 1) * math.sin(theta))
    linear = _tap_amplitude(optics.weak_bs_first_order(theta, MODES, cutoff), n, cutoff)
    assert linear == pytest.approx(1j * theta * math.sqrt(n))
    assert abs(exact - linear) <= n ** 1.5 * theta ** 3


def test_first_order_error_is_quadratic():
    n = 3
    cutoff = ModeCutoff(n)

    def relative_error(theta):
        exact = _tap_amplitude(optics.beam_splitter_unitary(theta, MODES, cutoff), n, cutoff)
        linear = _tap_amplitude(optics.weak_bs_first_order(theta, MODES, cutoff), n, cutoff)
        return abs(exact - linear) / abs(linear)

    for theta in (0.08, 0.04, 0.02):
        ratio = relative_error(theta / 2) / relative_error(theta)
        assert 0.2 <= ratio <= 0.3


def test_jz_rotation_phases():
    cutoff = ModeCutoff(4)
    phi = 0.7
    u = optics.jz_rotation(phi, cutoff)
    for n_a, n_b in ((0, 0), (3, 1), (1, 4)):
        out = u.apply(fock.basis_state(n_a, n_b, cutoff)).amplitudes[cutoff.index(n_a, n_b)]
        assert out == pytest.approx(np.exp(0.5j * phi * (n_a - n_b)))


def test_mzi_output_observable_endpoints():
    cutoff = ModeCutoff(4)
    jz = fock.schwinger('Jz', cutoff).todense()
    jx = fock.schwinger('Jx', cutoff).todense()
    np.testing.assert_allclose(optics.mzi_jz_out(0.0, cutoff).todense(), jz, atol=1e-15)
    np.testing.assert_allclose(optics.mzi_jz_out(math.pi / 2, cutoff).todense(), -jx, atol=1e-15)


def test_mzi_heisenberg_operator():
    cutoff = ModeCutoff(6)
    idx = fock.exact_subspace(cutoff)
    phi = 0.9
    u = optics.mzi_unitary(phi, cutoff).matrix
    rotated = linalg.matmul(linalg.dagger(u), linalg.matmul(fock.schwinger('Jz', cutoff).matrix, u))
    expected = optics.mzi_jz_out(phi, cutoff).matrix
    assert np.max(np.abs(linalg.restrict(rotated - expected, idx))) < 1e-10


def test_mzi_output_square():
    cutoff = ModeCutoff(5)
    idx = fock.exact_subspace(cutoff)
    phi = 0.4
    s, c = math.sin(phi), math.cos(phi)
    jx = fock.schwinger('Jx', cutoff).matrix
    jz = fock.schwinger('Jz', cutoff).matrix
    out = optics.mzi_jz_out(phi, cutoff).matrix
    expected = s * s * (jx @ jx) + c * c * (jz @ jz) - s * c * (jx @ jz + jz @ jx)
    assert np.max(np.abs(linalg.restrict(out @ out - expected, idx))) < 1e-12


def test_mzi_is_unitary():
    assert optics.mzi_unitary(1.1, 5).is_unitary()


def test_heisenberg_and_schrodinger_pictures_agree(rng, random_state):
    n_max = 4
    jz = fock.schwinger('Jz', n_max)
    for _ in range(200):
        state = random_state(n_max)
        phi = rng.uniform(-math.pi, math.pi)
        schrodinger = fock.expectation(optics.mzi_schrodinger(state, phi), jz)
        heisenberg = fock.expectation(state, optics.mzi_jz_out(phi, n_max))
        assert abs(schrodinger - heisenberg) < 1e-9


def test_mzi_fringe_is_periodic(random_state):
    state = random_state(4)
    jz = fock.schwinger('Jz', 4)
    for phi in (0.0, 0.5, 2.0):
        a = fock.expectation(optics.mzi_schrodinger(state, phi), jz)
        b = fock.expectation(optics.mzi_schrodinger(state, phi + 2 * math.pi), jz)
        assert a == pytest.approx(b, abs=1e-10)


def test_mzi_schrodinger_on_density(random_density):
    rho = random_density(4)
    phi = 0.3
    out = optics.mzi_schrodinger(rho, phi)
    assert out.trace() == pytest.approx(1.0)
    assert fock.expectation(out, fock.schwinger('Jz', 4)) == pytest.approx(
        fock.expectation(rho, optics.mzi_jz_out(phi, 4)), abs=1e-10)


def test_loss_transmission_one_is_identity(random_state):
    state = random_state(3)
    rho = optics.loss_channel(1.0, 'a', state)
    np.testing.assert_allclose(rho.todense(), state.to_density().todense())


def test_loss_of_single_photon():
    cutoff = ModeCutoff(2)
    t = 0.8
    rho = optics.loss_channel(t, 'a', fock.basis_state(1, 0, cutoff)).todense()
    assert rho[cutoff.index(1, 0), cutoff.index(1, 0)].real == pytest.approx(t * t)
    assert rho[cutoff.index(0, 0), cutoff.index(0, 0)].real == pytest.approx(1 - t * t)
    assert np.count_nonzero(np.abs(rho) > 1e-14) == 2


@pytest.mark.parametrize('t', [0.3, 0.9, 0.99])
def test_loss_scales_mean_photons(random_state, t):
    state = random_state(5)
    rho = optics.lossy(state, LossSpec.symmetric(t))
    assert fock.mean_photons(rho) == pytest.approx(t * t * fock.mean_photons(state))
    assert rho.trace() == pytest.approx(1.0)


@pytest.mark.parametrize('t', [0.0, 0.5, 0.95])
def test_kraus_completeness(t):
    n_max = 6
    total = sum(linalg.as_dense(k.conj().T @ k) for k in optics.loss_kraus(t, n_max))
    np.testing.assert_allclose(total, np.eye(n_max + 1), atol=1e-12)


def test_loss_composes(random_density):
    rho = random_density(4)
    twice = optics.loss_channel(0.7, 'b', optics.loss_channel(0.9, 'b', rho))
    once = optics.loss_channel(0.63, 'b', rho)
    np.testing.assert_allclose(twice.todense(), once.todense(), atol=1e-12)


def test_loss_rejects_mode():
    with pytest.raises(ValueError):
        optics.loss_channel(0.5, "a'", fock.basis_state(0, 0, 1))


def test_loss_spec_coefficients():
    loss = LossSpec.symmetric(0.9)
    assert loss.c1 == pytest.approx(1.62)
    assert loss.c2 == pytest.approx(0.81)
    assert loss.c3 == pytest.approx(2 * 0.9 * 0.19)
    assert loss.c4 == 0.0
    assert not loss.is_lossless()
    assert LossSpec().is_lossless()


def test_loss_spec_validation():
    with pytest.raises(ValueError):
        LossSpec(1.2, 1.0)
    with pytest.raises(ValueError):
        LossSpec(1.0, -0.1)


@pytest.mark.parametrize('t', [0.0, 0.3, 1.0])
def test_beam_splitter_spec(t):
    spec = BeamSplitterSpec.from_transmission(t)
    assert spec.t == pytest.approx(t)
    assert spec.r ** 2 + spec.t ** 2 == pytest.approx(1.0)


def test_herald_splitter():
    m = optics.herald_splitter().todense()
    s = 1 / math.sqrt(2)
    # basis order 00, 01, 10, 11
    assert m[1, 2] == pytest.approx(s)
    assert m[2, 2] == pytest.approx(s)
    assert m[1, 1] == pytest.approx(-s)
    assert m[2, 1] == pytest.approx(s)
    assert m[0, 0] == pytest.approx(1.0)
    np.testing.assert_allclose(m.conj().T @ m, np.eye(4), atol=1e-12)

import math

import numpy as np
import pytest

from twinsub import fock
from twinsub import subtraction
from twinsub.fock import ModeCutoff, TwoModeDensity, TwoModePureState

THETA = 0.01


def twin(n, extra=2):
    return fock.basis_state(n, n, ModeCutoff(n + extra))


def test_tapped_twin_state_branches():
    n = 3
    state = twin(n)
    cutoff = state.cutoff
    four = subtraction.tapped_state(state, THETA)
    np.testing.assert_allclose(four.branch(0, 0).amplitudes, state.amplitudes)
    np.testing.assert_allclose(four.branch(1, 0).amplitudes,
                               1j * THETA * math.sqrt(n) * fock.basis_state(n - 1, n, cutoff).amplitudes)
    np.testing.assert_allclose(four.branch(0, 1).amplitudes,
                               1j * THETA * math.sqrt(n) * fock.basis_state(n, n - 1, cutoff).amplitudes)
    np.testing.assert_allclose(four.branch(1, 1).amplitudes,
                               -THETA ** 2 * n * fock.basis_state(n - 1, n - 1, cutoff).amplitudes)


def test_tap_needs_a_photon_level():
    with pytest.raises(subtraction.UnheraldableError):
        subtraction.tap_blocks(THETA, 0)


@pytest.mark.parametrize('n', [1, 3, 10])
def test_bucket_output_of_twin_fock(n):
    state = twin(n)
    cutoff = state.cutoff
    out = subtraction.bucket_subtract(state, THETA)
    rho = out.density().todense()
    assert rho[cutoff.index(n - 1, n), cutoff.index(n - 1, n)].real == pytest.approx(0.5)
    assert rho[cutoff.index(n, n - 1), cutoff.index(n, n - 1)].real == pytest.approx(0.5)
    assert out.density().purity() == pytest.approx(0.5, abs=1e-10)
    fringe = fock.expectation(out.state, fock.schwinger('Jz', cutoff))
    assert abs(fringe) < 1e-12
    assert out.herald_probability == pytest.approx(2 * n * THETA ** 2 / (1 + n * THETA ** 2) ** 2)


@pytest.mark.parametrize('sign', ['+', '-'])
@pytest.mark.parametrize('n', [1, 4, 10])
def test_coherent_output_of_twin_fock(n, sign):
    state = twin(n)
    out = subtraction.coherent_subtract(state, THETA, sign)
    target = subtraction.twin_subtracted_state(n, sign, state.cutoff)
    assert isinstance(out.state, TwoModePureState)
    assert fock.fidelity(out.state, target) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.state.amplitudes, target.amplitudes, atol=1e-12)
    assert out.density().purity() == pytest.approx(1.0, abs=1e-10)
    assert out.herald_probability == pytest.approx(n * THETA ** 2 / (1 + n * THETA ** 2) ** 2)
    assert out.protocol == ('coherent_plus' if sign == '+' else 'coherent_minus')


def test_exact_taps_approach_first_order():
    n = 3
    state = twin(n)
    errors = []
    for theta in (0.05, 0.025):
        exact = subtraction.coherent_subtract(state, theta, '+', route='exact')
        linear = subtraction.coherent_subtract(state, theta, '+', route='linear')
        errors.append(abs(exact.herald_probability / linear.herald_probability - 1.0))
        assert errors[-1] < 0.01
        assert fock.fidelity(exact.state, linear.state) == pytest.approx(1.0, abs=1e-12)
    assert errors[1] < errors[0]


@pytest.mark.parametrize('route', subtraction.ROUTES)
def test_coherent_average_is_bucket_for_pure_input(random_state, route):
    state = random_state(5)
    plus = subtraction.coherent_subtract(state, THETA, '+', route)
    minus = subtraction.coherent_subtract(state, THETA, '-', route)
    bucket = subtraction.bucket_subtract(state, THETA, 0.5, route)
    average = subtraction.herald_average([plus, minus])
    assert fock.trace_distance(average, bucket.density()) < 1e-9
    assert plus.herald_probability + minus.herald_probability == pytest.approx(bucket.herald_probability)


def test_coherent_average_is_bucket_for_mixed_input(random_density):
    rho = random_density(5)
    plus = subtraction.coherent_subtract(rho, THETA, '+')
    minus = subtraction.coherent_subtract(rho, THETA, '-')
    bucket = subtraction.bucket_subtract(rho, THETA)
    assert fock.trace_distance(subtraction.herald_average([plus, minus]), bucket.density()) < 1e-9


def test_pure_and_density_paths_agree(random_state):
    state = random_state(4)
    via_pure = subtraction.coherent_subtract(state, THETA, '-')
    via_density = subtraction.coherent_subtract(state.to_density(), THETA, '-')
    assert fock.trace_distance(via_pure.state, via_density.state) < 1e-10
    assert via_pure.herald_probability == pytest.approx(via_density.herald_probability)


def test_bucket_bias():
    n = 2
    state = twin(n)
    cutoff = state.cutoff
    rho = subtraction.bucket_subtract(state, THETA, p=0.8).density().todense()
    assert rho[cutoff.index(n - 1, n), cutoff.index(n - 1, n)].real == pytest.approx(0.8)
    assert rho[cutoff.index(n, n - 1), cutoff.index(n, n - 1)].real == pytest.approx(0.2)
    with pytest.raises(ValueError):
        subtraction.bucket_subtract(state, THETA, p=1.5)


def test_one_photon_removed():
    cutoff = ModeCutoff(6)
    for n_a, n_b in ((3, 1), (2, 2), (0, 4)):
        out = subtraction.bucket_subtract(fock.basis_state(n_a, n_b, cutoff), THETA)
        assert fock.mean_photons(out.state) == pytest.approx(n_a + n_b - 1)


def test_vacuum_cannot_be_heralded():
    vacuum = fock.basis_state(0, 0, 2)
    with pytest.raises(subtraction.UnheraldableError):
        subtraction.bucket_subtract(vacuum, THETA)
    with pytest.raises(subtraction.UnheraldableError):
        subtraction.coherent_subtract(vacuum, THETA, '+')
    with pytest.raises(fock.ConditioningError):
        subtraction.coherent_subtract(vacuum.to_density(), THETA, '-')


def test_tap_angle_validation():
    state = twin(1)
    with pytest.raises(ValueError):
        subtraction.bucket_subtract(state, 0.0)
    with pytest.raises(ValueError):
        subtraction.coherent_subtract(state, THETA, route='second_order')
    with pytest.raises(ValueError):
        subtraction.coherent_subtract(state, THETA, sign='x')


def test_twin_subtracted_state():
    state = subtraction.twin_subtracted_state(3, '-')
    cutoff = state.cutoff
    assert cutoff.n_max == 5
    assert state.amplitudes[cutoff.index(3, 2)] == pytest.approx(1 / math.sqrt(2))
    assert state.amplitudes[cutoff.index(2, 3)] == pytest.approx(-1 / math.sqrt(2))
    with pytest.raises(ValueError):
        subtraction.twin_subtracted_state(0)


def _twin_mixture(weights, n_max):
    cutoff = ModeCutoff(n_max)
    m = np.zeros((cutoff.dim, cutoff.dim))
    for n, w in weights.items():
        m[cutoff.index(n, n), cutoff.index(n, n)] = w
    return TwoModeDensity(cutoff, m)


def test_bucket_of_twin_mixture_matches_constructor():
    rho = _twin_mixture({0: 0.2, 1: 0.3, 2: 0.4, 3: 0.1}, 5)
    pipeline = subtraction.bucket_subtract(rho, THETA).density()
    assert fock.trace_distance(pipeline, subtraction.bucket_mixture(rho)) < 1e-10


@pytest.mark.parametrize('sign', ['+', '-'])
def test_coherent_of_twin_superposition_matches_constructor(sign):
    cutoff = ModeCutoff(5)
    state = TwoModePureState.from_occupations(cutoff, {(1, 1): 0.6, (2, 2): 0.5j, (3, 3): -0.4})
    pipeline = subtraction.coherent_subtract(state, THETA, sign)
    constructed = subtraction.coherent_mixture(state, sign)
    assert fock.trace_distance(pipeline.state, constructed) < 1e-10


def test_mixture_coefficients():
    assert subtraction.mixture_coefficients(twin(3)) == {(5, 5): pytest.approx(1.0)}
    coeffs = subtraction.mixture_coefficients(_twin_mixture({0: 0.25, 1: 0.375, 2: 0.375}, 4))
    # norm = 0.375 * 1 + 0.375 * 2
    assert coeffs == {(1, 1): pytest.approx(1 / 3), (3, 3): pytest.approx(2 / 3)}


def test_twin_form_rejects_other_states():
    with pytest.raises(subtraction.TwinFormError):
        subtraction.twin_form(fock.basis_state(1, 0, 2))
    form = subtraction.twin_form(twin(2))
    assert form == {(2, 2): 1.0}

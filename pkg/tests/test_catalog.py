import math

import numpy as np
import pytest

from twinsub import catalog
from twinsub import estimation
from twinsub import fock
from twinsub import subtraction
from twinsub.catalog import InputStateSpec


def test_twin_fock_photon_number():
    state = catalog.build(InputStateSpec('twin_fock', n=3))
    assert state.cutoff.n_max == 5
    assert fock.mean_photons(state) == pytest.approx(6.0)
    assert catalog.sector_weights(state) == {6: pytest.approx(1.0)}


def test_noon_statistics():
    state = catalog.build(InputStateSpec('noon', n=4))
    na = fock.number('a', state.cutoff)
    mean = fock.expectation(state, na)
    assert mean == pytest.approx(2.0)
    assert fock.expectation(state, na @ na).real - mean ** 2 == pytest.approx(4.0)


def test_coherent_squeezed_mean_photons():
    alpha, r = 3.0, 1.0
    state = catalog.build(InputStateSpec('coherent_squeezed', alpha=alpha, r=r))
    assert state.is_normalized()
    assert fock.mean_photons(state) == pytest.approx(alpha ** 2 + math.sinh(r) ** 2, rel=1e-9)


def test_squeezed_vacuum_has_even_support():
    amps = catalog.squeezed_amplitudes(0.8, 120)
    assert np.all(amps[1::2] == 0)
    assert amps[0].real > 0
    assert amps[2].real < 0
    # <b^2> = -sinh r cosh r
    n = np.arange(121)
    b2 = np.sum(np.conj(amps[:-2]) * np.sqrt(n[2:] * n[1:-1]) * amps[2:])
    assert b2.real == pytest.approx(-math.sinh(0.8) * math.cosh(0.8), rel=1e-9)


def test_coherent_amplitudes_are_poissonian():
    alpha = 2.0 + 1.0j
    amps = catalog.coherent_amplitudes(alpha, catalog.coherent_tail_cutoff(alpha))
    probs = np.abs(amps) ** 2
    n = np.arange(len(probs))
    mean = np.sum(n * probs)
    assert np.sum(probs) == pytest.approx(1.0, abs=1e-11)
    assert mean == pytest.approx(5.0, rel=1e-9)
    assert np.sum(n * n * probs) - mean ** 2 == pytest.approx(5.0, rel=1e-8)


def test_tail_cutoffs():
    k = catalog.coherent_tail_cutoff(5.0)
    assert 25 < k < 100
    assert catalog.coherent_tail_cutoff(0.0) == 0
    assert catalog.squeezed_tail_cutoff(1.0) % 2 == 0
    assert catalog.squeezed_tail_cutoff(0.0) == 0


@pytest.mark.parametrize('kind', ['twin_fock', 'fraternal_twin', 'noon', 'ymck', 'subtracted_twin'])
def test_fock_kinds_are_pure_and_normalized(kind):
    spec = InputStateSpec(kind, n=4)
    state = catalog.build(spec)
    assert state.is_normalized()
    assert catalog.describe(spec, state).purity == 1.0


def test_thermal_opo_mixture():
    spec = InputStateSpec('opo_mixture', x=0.7)
    rho = catalog.build(spec)
    weights = catalog.thermal_twin_weights(0.7)
    assert len(weights) == 78
    assert rho.cutoff.n_max == 79
    assert rho.is_sparse
    assert rho.trace() == pytest.approx(1.0)
    form = subtraction.twin_form(rho)
    assert all(n == m for n, m in form)
    assert form[(1, 1)].real == pytest.approx(0.7 * form[(0, 0)].real)


def test_tabulated_opo_mixture():
    table = [[0, 0, 0.5], [1, 1, 0.5], [0, 1, 0.25], [1, 0, 0.25]]
    rho = catalog.build(InputStateSpec('opo_mixture', table=table))
    rho.validate()
    assert rho.purity() == pytest.approx(0.625)
    assert subtraction.twin_form(rho)[(0, 1)] == pytest.approx(0.25)


def test_tabulated_opo_mixture_must_be_a_state():
    with pytest.raises(ValueError):
        catalog.build(InputStateSpec('opo_mixture', table=[[0, 0, 0.5], [1, 1, 0.5], [0, 1, 0.9], [1, 0, 0.9]]))
    with pytest.raises(ValueError):
        catalog.build(InputStateSpec('opo_mixture', table=[[0, 1, 0.5]]))


def test_opo_mixture_needs_one_source():
    with pytest.raises(ValueError):
        InputStateSpec('opo_mixture')
    with pytest.raises(ValueError):
        InputStateSpec('opo_mixture', x=0.5, table=[[0, 0, 1.0]])
    with pytest.raises(ValueError):
        InputStateSpec('opo_mixture', x=1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        InputStateSpec('cat_state', n=2)
    with pytest.raises(ValueError):
        InputStateSpec('noon', n=0)
    with pytest.raises(ValueError):
        InputStateSpec('twin_fock', n=2.5)
    with pytest.raises(ValueError):
        InputStateSpec('coherent_squeezed', alpha=1.0)
    with pytest.raises(ValueError):
        InputStateSpec('subtracted_twin', n=3, sign='*')


def test_spec_from_dict():
    spec = InputStateSpec.from_dict({'kind': 'coherent_vacuum', 'alpha': [1.0, -2.0]})
    assert spec.alpha == complex(1.0, -2.0)
    assert spec.to_dict() == {'kind': 'coherent_vacuum', 'alpha': [1.0, -2.0], 'sign': '+',
                              'tail_tol': catalog.TAIL_TOL, 'max_cutoff': catalog.MAX_CUTOFF}
    with pytest.raises(ValueError, match='unknown state field'):
        InputStateSpec.from_dict({'kind': 'noon', 'n': 2, 'm': 3})
    with pytest.raises(ValueError, match='kind'):
        InputStateSpec.from_dict({'n': 2})


def test_memory_budget():
    with pytest.raises(fock.CutoffError):
        catalog.build(InputStateSpec('coherent_vacuum', alpha=10.0, max_cutoff=50))
    with pytest.raises(fock.CutoffError):
        catalog.build(InputStateSpec('twin_fock', n=20, n_max=30, max_cutoff=25))


def test_explicit_cutoff():
    state = catalog.build(InputStateSpec('fraternal_twin', n=3, n_max=9))
    assert state.cutoff.n_max == 9


def test_describe():
    spec = InputStateSpec('subtracted_twin', n=5, sign='-')
    desc = catalog.describe(spec)
    assert desc.n_max == 7
    assert desc.mean_photons == pytest.approx(9.0)
    assert desc.two_j_support == (9,)
    assert desc.reference.row == 8
    assert desc.reference.fringe(0.3) == pytest.approx(2.5 * math.sin(0.3))


def test_reference_fringes_match_states():
    n = 8
    for kind in ('fock_vacuum', 'twin_fock', 'fraternal_twin', 'ymck', 'subtracted_twin'):
        spec = InputStateSpec(kind, n=n)
        state = catalog.build(spec)
        ref = catalog.references(spec)
        for phi in (-0.9, 0.0, 0.4):
            assert estimation.fringe(state, phi) == pytest.approx(ref.fringe(phi), abs=1e-12)


def test_ymck_moments():
    n = 6
    state = catalog.build(InputStateSpec('ymck', n=n))
    assert fock.expectation(state, fock.schwinger('Jx', state.cutoff)) == pytest.approx(
        0.5 * math.sqrt(n * (n + 1)))
    assert fock.expectation(state, fock.schwinger('Jz', state.cutoff)) == pytest.approx(0.5)
    assert estimation.phase_error_numeric(state, 0.0) == pytest.approx(1 / math.sqrt(n * (n + 1)))


def test_noon_uses_single_arm_generator():
    spec = InputStateSpec('noon', n=3)
    assert catalog.references(spec).generator == 'Na'
    assert catalog.references(spec).fringe(0.1) is None
    assert catalog.table_generator(spec, 5).label == 'N_a'


def test_coherent_squeezed_bound_at_large_amplitude():
    alpha, r = 5.0, 1.0
    spec = InputStateSpec('coherent_squeezed', alpha=alpha, r=r)
    state = catalog.build(spec)
    ref = catalog.references(spec)
    bound = estimation.qcrb(state, catalog.table_generator(spec, state.cutoff))
    assert bound == pytest.approx(ref.qcrb, rel=1e-9)
    # the e^-r/|alpha| entry is only the leading order in 1/|alpha|
    assert bound == pytest.approx(ref.delta_phi, rel=5e-3)
    assert ref.basis == 'qcrb_leading_order'


def test_coherent_vacuum_bound():
    spec = InputStateSpec('coherent_vacuum', alpha=5.0)
    state = catalog.build(spec)
    bound = estimation.qcrb(state, catalog.table_generator(spec, state.cutoff))
    assert bound == pytest.approx(0.2, rel=1e-9)

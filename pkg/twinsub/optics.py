#!/usr/bin/env python3

"""Passive linear optics on the truncated mode pair.

Beam splitters are exp[i theta (x^dag y + y^dag x)], evaluated sector by
sector of total photon number so that every block is an exact SU(2)
rotation.  Loss is a beam splitter against a vacuum ancilla with the
ancilla traced out, and the MZI is the rotation exp(-i phi J_y).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from twinsub import fock
from twinsub import linalg
from twinsub.fock import MODES, ANCILLA_MODES, ModeCutoff, TwoModeOperator

logger = logging.getLogger(__name__)

# angle above which the first-order tap expansion is a poor approximation
WEAK_TAP_LIMIT = 0.1


@dataclass(frozen=True)
class BeamSplitterSpec:
    theta: float

    @classmethod
    def from_transmission(cls, t):
        if not 0.0 <= t <= 1.0:
            raise ValueError('transmission must lie in [0, 1], got %r' % (t,))
        return cls(math.acos(t))

    @property
    def r(self):
        return math.sin(self.theta)

    @property
    def t(self):
        return math.cos(self.theta)


@dataclass(frozen=True)
class LossSpec:
    """Amplitude transmissions of the two arms."""
    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        for name in ('t1', 't2'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError('%s must lie in [0, 1], got %r' % (name, value))
            object.__setattr__(self, name, float(value))

    @classmethod
    def symmetric(cls, t):
        return cls(t, t)

    @property
    def r1(self):
        return math.sqrt(1.0 - self.t1 ** 2)

    @property
    def r2(self):
        return math.sqrt(1.0 - self.t2 ** 2)

    @property
    def c1(self):
        return self.t1 ** 2 + self.t2 ** 2

    @property
    def c2(self):
        return self.t1 * self.t2

    @property
    def c3(self):
        return self.t1 * self.r1 ** 2 + self.t2 * self.r2 ** 2

    @property
    def c4(self):
        return self.t1 ** 2 - self.t2 ** 2

    def is_lossless(self):
        return self.t1 == 1.0 and self.t2 == 1.0


def _as_spec(spec):
    if isinstance(spec, BeamSplitterSpec):
        return spec
    return BeamSplitterSpec(float(spec))


def _check_modes(modes):
    if set(modes) != set(MODES) and set(modes) != set(ANCILLA_MODES):
        raise ValueError('beam splitter modes must be a pair from %s or %s, got %s'
                         % (MODES, ANCILLA_MODES, tuple(modes)))


def hopping(cutoff):
    """x^dag y + y^dag x for the mode pair."""
    a = fock.ladder('a', 'lower', cutoff)
    b = fock.ladder('b', 'lower', cutoff)
    m = a.matrix.T @ b.matrix
    return TwoModeOperator(a.cutoff, m + m.T, 'G', hermitian=True)


def beam_splitter_unitary(spec, modes, cutoff):
    """exp(i theta (x^dag y + y^dag x)) on the two slots of a ModeCutoff.

    ``modes`` only names the pair, (a, b) or an ancilla pair; it is checked
    but does not select slots. The first mode is always slot a and the
    second slot b, and the hopping term is symmetric so the order of the
    names does not matter.
    """
    spec = _as_spec(spec)
    _check_modes(modes)
    gen = hopping(cutoff)
    if spec.theta == 0.0:
        return fock.identity(gen.cutoff)
    u = linalg.sector_expm(1j * spec.theta * gen.matrix, fock.sector_indices(gen.cutoff))
    return TwoModeOperator(gen.cutoff, u, 'U_BS(%.6g)' % spec.theta)


def weak_bs_first_order(spec, modes, cutoff):
    """1 + i theta (x^dag y + y^dag x); not unitary."""
    spec = _as_spec(spec)
    _check_modes(modes)
    if abs(spec.theta) > WEAK_TAP_LIMIT:
        logger.debug('first-order beam splitter used at theta=%g', spec.theta)
    gen = hopping(cutoff)
    op = fock.identity(gen.cutoff) + (1j * spec.theta) * gen
    return TwoModeOperator(gen.cutoff, op.matrix, 'U_lin(%.6g)' % spec.theta)


def ancilla_blocks(unitary, count=None):
    """Blocks <k|_y U |0>_y of an operator on (signal x, ancilla y).

    Block k maps the signal mode to itself when k photons leave through
    the ancilla port, so these are Kraus operators for any unitary U.
    """
    d = unitary.cutoff.mode_dim
    count = d if count is None else count
    if count > d:
        raise fock.CutoffError('asked for %d ancilla blocks with only %d levels' % (count, d))
    m = linalg.as_sparse(unitary.matrix)
    cols = np.arange(d) * d
    blocks = []
    for k in range(count):
        block = m[cols + k][:, cols].tocsr()
        block.eliminate_zeros()
        blocks.append(block)
    return blocks


def phase_shifter(phi, mode, cutoff):
    """exp(i phi n_mode)."""
    cutoff = fock.as_cutoff(cutoff)
    phases = np.exp(1j * phi * np.arange(cutoff.mode_dim))
    single = sp.diags(phases, 0, format='csr')
    return TwoModeOperator(cutoff, fock.embed(single, mode, cutoff), 'P_%s(%.6g)' % (mode, phi))


def jz_rotation(phi, cutoff):
    """exp(i phi J_z), the relative phase split evenly between the arms."""
    return phase_shifter(0.5 * phi, 'a', cutoff) @ phase_shifter(-0.5 * phi, 'b', cutoff)


def mzi_unitary(phi, cutoff):
    """exp(-i pi/2 J_x) exp(i phi J_z) exp(i pi/2 J_x) = exp(-i phi J_y)."""
    into = beam_splitter_unitary(BeamSplitterSpec(0.25 * math.pi), MODES, cutoff)
    out = beam_splitter_unitary(BeamSplitterSpec(-0.25 * math.pi), MODES, cutoff)
    u = out @ jz_rotation(phi, cutoff) @ into
    return TwoModeOperator(u.cutoff, u.matrix, 'U_MZI(%.6g)' % phi)


def mzi_schrodinger(state, phi):
    """Rotate the state itself; exact only while its total photon number is <= n_max."""
    u = mzi_unitary(phi, state.cutoff)
    if isinstance(state, fock.TwoModePureState):
        return u.apply(state)
    return u.conjugate(state)


def mzi_jz_out(phi, cutoff):
    """J_z^out = -sin(phi) J_x + cos(phi) J_z."""
    jx = fock.schwinger('Jx', cutoff)
    jz = fock.schwinger('Jz', cutoff)
    op = (-math.sin(phi)) * jx + math.cos(phi) * jz
    return TwoModeOperator(op.cutoff, op.matrix, 'Jz_out(%.6g)' % phi, hermitian=True)


def loss_kraus(t, cutoff):
    """Single-mode Kraus operators of a beam splitter of transmission t."""
    bs = beam_splitter_unitary(BeamSplitterSpec.from_transmission(t), MODES, cutoff)
    return [k for k in ancilla_blocks(bs) if k.nnz]


def loss_channel(t, mode, state):
    """Amplitude damping of one mode; pure inputs are promoted to densities."""
    if mode not in MODES:
        raise ValueError('Invalid mode "%s"' % mode)
    rho = fock.promote(state)
    if t == 1.0:
        return rho
    out = None
    for single in loss_kraus(t, rho.cutoff):
        term = linalg.sandwich(fock.embed(single, mode, rho.cutoff), rho.matrix)
        out = term if out is None else out + term
    return fock.TwoModeDensity(rho.cutoff, out, rho.tol)


def lossy(state, loss):
    """Both arms through their loss beam splitters."""
    rho = loss_channel(loss.t1, 'a', state)
    return loss_channel(loss.t2, 'b', rho)


def herald_splitter():
    """Balanced splitter on the ancillas: |10> -> (|10>+|01>)/sqrt2, |01> -> (|10>-|01>)/sqrt2.

    Built on the n_max = 1 pair from a pi/4 beam splitter with a -pi/2 phase
    on b' on either side.
    """
    cutoff = ModeCutoff(1)
    shift = phase_shifter(-0.5 * math.pi, 'b', cutoff)
    bs = beam_splitter_unitary(BeamSplitterSpec(0.25 * math.pi), ANCILLA_MODES, cutoff)
    op = shift @ bs @ shift
    return TwoModeOperator(cutoff, op.matrix, 'B_herald')

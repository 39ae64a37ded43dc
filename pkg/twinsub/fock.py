#!/usr/bin/env python3

"""Truncated two-mode Fock space.

Basis states |n_a, n_b> with 0 <= n_a, n_b <= n_max are stored at the flat
index ``n_a * (n_max + 1) + n_b``, i.e. Kronecker order a (x) b.  Operators
built from truncated ladders are exact on states whose total photon number
does not exceed n_max; ``exact_subspace`` returns those indices.
"""

import collections
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from twinsub import linalg

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10

MODES = ('a', 'b')
ANCILLA_MODES = ("a'", "b'")
SCHWINGER = ('Jx', 'Jy', 'Jz', 'J2')


class CutoffError(ValueError):
    pass


class ConditioningError(ValueError):
    """Raised when a conditioned state has zero weight."""
    pass


@dataclass(frozen=True)
class ModeCutoff:
    """Largest photon number kept in each of the two modes."""
    n_max: int

    def __post_init__(self):
        n_max = self.n_max
        if isinstance(n_max, bool) or not float(n_max).is_integer() or n_max < 0:
            raise CutoffError('n_max must be a non-negative integer, got %r' % (n_max,))
        object.__setattr__(self, 'n_max', int(n_max))

    @property
    def mode_dim(self):
        return self.n_max + 1

    @property
    def dim(self):
        return self.mode_dim ** 2

    def check(self, n, mode='a'):
        if isinstance(n, bool) or not float(n).is_integer() or not 0 <= n <= self.n_max:
            raise CutoffError('photon number %r in mode %s is outside [0, %d]'
                              % (n, mode, self.n_max))
        return int(n)

    def index(self, n_a, n_b):
        return self.check(n_a, 'a') * self.mode_dim + self.check(n_b, 'b')

    def occupations(self, index):
        if not 0 <= index < self.dim:
            raise CutoffError('index %d is outside [0, %d)' % (index, self.dim))
        return divmod(int(index), self.mode_dim)

    def grid(self):
        """Arrays (n_a, n_b) of occupations for every flat index."""
        return np.divmod(np.arange(self.dim), self.mode_dim)


def as_cutoff(cutoff):
    if isinstance(cutoff, ModeCutoff):
        return cutoff
    return ModeCutoff(cutoff)


def _check_same_cutoff(x, y):
    if x.cutoff != y.cutoff:
        raise CutoffError('cutoff mismatch: n_max=%d vs n_max=%d'
                          % (x.cutoff.n_max, y.cutoff.n_max))


@dataclass(frozen=True, eq=False)
class TwoModePureState:
    cutoff: ModeCutoff
    amplitudes: np.ndarray
    norm_tol: float = NORM_TOL

    def __post_init__(self):
        cutoff = as_cutoff(self.cutoff)
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.shape != (cutoff.dim,):
            raise CutoffError('expected %d amplitudes for n_max=%d, got %d'
                              % (cutoff.dim, cutoff.n_max, amps.size))
        amps.flags.writeable = False
        object.__setattr__(self, 'cutoff', cutoff)
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def from_occupations(cls, cutoff, amplitudes, normalize=True):
        """Build from a mapping {(n_a, n_b): amplitude}."""
        cutoff = as_cutoff(cutoff)
        amps = np.zeros(cutoff.dim, dtype=complex)
        for (n_a, n_b), value in amplitudes.items():
            amps[cutoff.index(n_a, n_b)] += value
        state = cls(cutoff, amps)
        return state.normalized() if normalize else state

    @property
    def grid(self):
        return self.amplitudes.reshape(self.cutoff.mode_dim, self.cutoff.mode_dim)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol=None):
        tol = self.norm_tol if tol is None else tol
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self):
        norm = self.norm()
        if norm == 0.0:
            raise ConditioningError('cannot normalize the zero vector')
        return TwoModePureState(self.cutoff, self.amplitudes / norm, self.norm_tol)

    def canonical_phase(self):
        """Same ray, with its largest amplitude made real and positive.

        Ties are resolved towards the highest flat index.
        """
        mags = np.abs(self.amplitudes)
        if not mags.any():
            return self
        peak = mags.max()
        k = np.flatnonzero(mags >= peak * (1.0 - 1e-9))[-1]
        phase = self.amplitudes[k] / mags[k]
        return TwoModePureState(self.cutoff, self.amplitudes / phase, self.norm_tol)

    def inner(self, other):
        _check_same_cutoff(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self, sparse=False):
        return TwoModeDensity.from_pure(self, sparse=sparse)


@dataclass(frozen=True, eq=False)
class TwoModeDensity:
    cutoff: ModeCutoff
    matrix: object
    tol: float = NORM_TOL

    def __post_init__(self):
        cutoff = as_cutoff(self.cutoff)
        m = self.matrix
        if sp.issparse(m):
            m = sp.csr_matrix(m, dtype=complex)
        else:
            m = np.array(m, dtype=complex)
            m.flags.writeable = False
        if m.shape != (cutoff.dim, cutoff.dim):
            raise CutoffError('density shape %s does not match n_max=%d'
                              % (m.shape, cutoff.n_max))
        object.__setattr__(self, 'cutoff', cutoff)
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_pure(cls, state, sparse=False):
        if sparse:
            v = sp.csr_matrix(state.amplitudes.reshape(-1, 1))
            return cls(state.cutoff, v @ v.conj().T)
        return cls(state.cutoff, np.outer(state.amplitudes, state.amplitudes.conj()))

    @property
    def is_sparse(self):
        return linalg.is_sparse(self.matrix)

    def todense(self):
        return linalg.as_dense(self.matrix)

    def trace(self):
        return linalg.trace(self.matrix).real

    def normalized(self):
        tr = self.trace()
        if tr <= 0.0:
            raise ConditioningError('cannot normalize a density with trace %g' % tr)
        return TwoModeDensity(self.cutoff, self.matrix / tr, self.tol)

    def purity(self):
        return linalg.trace_product(self.matrix, self.matrix).real

    def hermitian_residual(self):
        return linalg.hermitian_residual(self.matrix)

    def eigenvalues(self):
        return linalg.hermitian_eigenvalues(self.matrix)

    def min_eigenvalue(self):
        return float(self.eigenvalues().min())

    def validate(self, tol=None):
        """Raise ValueError unless Hermitian, unit trace and positive."""
        tol = self.tol if tol is None else tol
        residual = self.hermitian_residual()
        if residual > tol:
            raise ValueError('density is not Hermitian (residual %.3g)' % residual)
        if abs(self.trace() - 1.0) > tol:
            raise ValueError('density trace is %.12g, expected 1' % self.trace())
        low = self.min_eigenvalue()
        if low < -tol:
            raise ValueError('density has negative eigenvalue %.3g' % low)
        return self


@dataclass(frozen=True, eq=False)
class TwoModeOperator:
    cutoff: ModeCutoff
    matrix: object
    label: str = ''
    hermitian: bool = False

    def __post_init__(self):
        cutoff = as_cutoff(self.cutoff)
        m = self.matrix
        if sp.issparse(m):
            m = sp.csr_matrix(m, dtype=complex)
        else:
            m = np.array(m, dtype=complex)
            m.flags.writeable = False
        if m.shape != (cutoff.dim, cutoff.dim):
            raise CutoffError('operator shape %s does not match n_max=%d'
                              % (m.shape, cutoff.n_max))
        object.__setattr__(self, 'cutoff', cutoff)
        object.__setattr__(self, 'matrix', m)

    def todense(self):
        return linalg.as_dense(self.matrix)

    def dagger(self):
        label = '%s^dag' % self.label if self.label else ''
        return TwoModeOperator(self.cutoff, linalg.dagger(self.matrix), label, self.hermitian)

    def __matmul__(self, other):
        _check_same_cutoff(self, other)
        label = '%s %s' % (self.label, other.label) if self.label and other.label else ''
        return TwoModeOperator(self.cutoff, linalg.matmul(self.matrix, other.matrix), label)

    def __add__(self, other):
        _check_same_cutoff(self, other)
        return TwoModeOperator(self.cutoff, self.matrix + other.matrix,
                               hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return TwoModeOperator(self.cutoff, self.matrix * scalar,
                               hermitian=self.hermitian and scalar.imag == 0.0)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def apply(self, state):
        """Operator acting on a pure state (the result is not renormalized)."""
        _check_same_cutoff(self, state)
        return TwoModePureState(self.cutoff, self.matrix @ state.amplitudes, state.norm_tol)

    def conjugate(self, rho):
        """O rho O^dagger."""
        _check_same_cutoff(self, rho)
        return TwoModeDensity(self.cutoff, linalg.sandwich(self.matrix, rho.matrix), rho.tol)

    def hermitian_residual(self):
        return linalg.hermitian_residual(self.matrix)

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return self.hermitian_residual() <= tol

    def unitarity_residual(self, subspace=None):
        """max |U^dag U - 1| restricted to the columns in ``subspace``."""
        gram = linalg.matmul(linalg.dagger(self.matrix), self.matrix)
        if sp.issparse(gram):
            gram = gram - sp.identity(self.cutoff.dim, format='csr')
        else:
            gram = gram - np.eye(self.cutoff.dim)
        if subspace is not None:
            return float(np.max(np.abs(linalg.restrict(gram, subspace)))) if len(subspace) else 0.0
        return linalg.max_abs(gram)

    def is_unitary(self, tol=NORM_TOL, subspace=None):
        return self.unitarity_residual(subspace) <= tol


# --- single-mode building blocks ---

def mode_lowering(n_max):
    """Single-mode annihilation operator on {|0>, ..., |n_max>}."""
    n = np.arange(1, n_max + 1)
    return sp.csr_matrix((np.sqrt(n).astype(complex), (n - 1, n)), shape=(n_max + 1, n_max + 1))


def mode_number(n_max):
    return sp.diags(np.arange(n_max + 1, dtype=complex), 0, format='csr')


def embed(single, mode, cutoff):
    """Lift a single-mode matrix onto mode ``a`` or ``b`` of the pair."""
    cutoff = as_cutoff(cutoff)
    eye = sp.identity(cutoff.mode_dim, format='csr', dtype=complex)
    single = linalg.as_sparse(single)
    if mode in ('a', ANCILLA_MODES[0]):
        return sp.kron(single, eye, format='csr')
    if mode in ('b', ANCILLA_MODES[1]):
        return sp.kron(eye, single, format='csr')
    raise ValueError('Invalid mode "%s"' % mode)


# --- operations ---

def basis_state(n_a, n_b, cutoff):
    cutoff = as_cutoff(cutoff)
    amps = np.zeros(cutoff.dim, dtype=complex)
    amps[cutoff.index(n_a, n_b)] = 1.0
    return TwoModePureState(cutoff, amps)


def identity(cutoff):
    cutoff = as_cutoff(cutoff)
    return TwoModeOperator(cutoff, sp.identity(cutoff.dim, format='csr', dtype=complex),
                           '1', hermitian=True)


def ladder(mode, direction, cutoff):
    """a, a^dag, b or b^dag.  Raising drops the amplitude pushed past n_max."""
    cutoff = as_cutoff(cutoff)
    low = mode_lowering(cutoff.n_max)
    if direction == 'lower':
        single, label = low, mode
    elif direction == 'raise':
        single, label = low.T.tocsr(), '%s^dag' % mode
    else:
        raise ValueError('Invalid direction "%s"' % direction)
    return TwoModeOperator(cutoff, embed(single, mode, cutoff), label)


def number(mode, cutoff):
    cutoff = as_cutoff(cutoff)
    return TwoModeOperator(cutoff, embed(mode_number(cutoff.n_max), mode, cutoff),
                           'N_%s' % mode, hermitian=True)


def total_number(cutoff):
    op = number('a', cutoff) + number('b', cutoff)
    return TwoModeOperator(op.cutoff, op.matrix, 'N', hermitian=True)


def schwinger(which, cutoff):
    """Schwinger spin operators J_x, J_y, J_z and J^2 of the mode pair."""
    cutoff = as_cutoff(cutoff)
    a, b = ladder('a', 'lower', cutoff).matrix, ladder('b', 'lower', cutoff).matrix
    ad, bd = a.T.tocsr(), b.T.tocsr()
    ab = ad @ b
    ba = bd @ a
    jx = 0.5 * (ab + ba)
    jy = -0.5j * (ab - ba)
    jz = 0.5 * (ad @ a - bd @ b)
    if which == 'Jx':
        m = jx
    elif which == 'Jy':
        m = jy
    elif which == 'Jz':
        m = jz
    elif which == 'J2':
        m = jx @ jx + jy @ jy + jz @ jz
    else:
        raise ValueError('Invalid Schwinger operator "%s", expected one of %s'
                         % (which, ', '.join(SCHWINGER)))
    return TwoModeOperator(cutoff, m.tocsr(), which, hermitian=True)


def promote(state, sparse=None):
    """Density operator of a pure state; densities pass through."""
    if isinstance(state, TwoModeDensity):
        return state
    if sparse is None:
        sparse = state.cutoff.dim > linalg.DENSE_LIMIT
    return TwoModeDensity.from_pure(state, sparse=sparse)


def expectation(state, op):
    """<psi|O|psi> or Tr(rho O).

    Hermitian operators give a float; the imaginary residue is logged if it
    exceeds IMAG_TOL.
    """
    _check_same_cutoff(state, op)
    if isinstance(state, TwoModePureState):
        value = complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    else:
        value = linalg.trace_product(state.matrix, op.matrix)
    if not op.hermitian:
        return value
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        logger.warning('expectation of Hermitian %s has imaginary part %.3g',
                       op.label or 'operator', value.imag)
    return value.real


def mean_photons(state):
    return expectation(state, total_number(state.cutoff))


class SpinLabel(collections.namedtuple('SpinLabel', ['two_j', 'two_m'])):
    __slots__ = ()

    @property
    def j(self):
        return Fraction(self.two_j, 2)

    @property
    def m(self):
        return Fraction(self.two_m, 2)


def jm_index(n_a, n_b):
    """|n_a, n_b> -> |j, m> with j, m stored as doubled integers."""
    for n in (n_a, n_b):
        if isinstance(n, bool) or not float(n).is_integer() or n < 0:
            raise ValueError('photon numbers must be non-negative integers, got (%r, %r)'
                             % (n_a, n_b))
    n_a, n_b = int(n_a), int(n_b)
    return SpinLabel(n_a + n_b, n_a - n_b)


def fock_index(two_j, two_m):
    """Inverse of ``jm_index``."""
    two_j, two_m = int(two_j), int(two_m)
    if two_j < 0 or abs(two_m) > two_j or (two_j - two_m) % 2:
        raise ValueError('(2j, 2m) = (%d, %d) is not a valid spin label' % (two_j, two_m))
    return (two_j + two_m) // 2, (two_j - two_m) // 2


def exact_subspace(cutoff):
    """Flat indices with n_a + n_b <= n_max."""
    cutoff = as_cutoff(cutoff)
    n_a, n_b = cutoff.grid()
    return np.flatnonzero(n_a + n_b <= cutoff.n_max)


def sector_indices(cutoff):
    """Flat indices grouped by total photon number, for every retained total."""
    cutoff = as_cutoff(cutoff)
    n_a, n_b = cutoff.grid()
    total = n_a + n_b
    return [np.flatnonzero(total == n) for n in range(2 * cutoff.n_max + 1)]


def trace_distance(x, y):
    """Half the trace norm of the difference of two states."""
    _check_same_cutoff(x, y)
    rho, sigma = promote(x), promote(y)
    if rho.is_sparse or sigma.is_sparse:
        diff = linalg.as_sparse(rho.matrix) - linalg.as_sparse(sigma.matrix)
    else:
        diff = rho.matrix - sigma.matrix
    return 0.5 * float(np.sum(np.abs(linalg.hermitian_eigenvalues(diff))))


def fidelity(state, target):
    """Overlap of ``state`` (pure or mixed) with a pure ``target``."""
    _check_same_cutoff(state, target)
    if isinstance(state, TwoModePureState):
        return abs(state.inner(target)) ** 2
    t = target.amplitudes
    return float(np.vdot(t, state.matrix @ t).real)


# --- signal pair plus a single-photon ancilla pair ---

@dataclass(frozen=True, eq=False)
class FourModeState:
    """Modes a, b (truncated at ``cutoff``) and ancillas a', b' in {0, 1}.

    ``amplitudes[i, k, l]`` is the amplitude of signal index ``i`` with
    n_a' = k and n_b' = l.
    """
    cutoff: ModeCutoff
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        cutoff = as_cutoff(self.cutoff)
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (cutoff.dim, 2, 2):
            raise CutoffError('four-mode amplitudes must have shape (%d, 2, 2), got %s'
                              % (cutoff.dim, amps.shape))
        amps.flags.writeable = False
        object.__setattr__(self, 'cutoff', cutoff)
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def product(cls, state):
        """|psi>_ab (x) |0, 0>_a'b'."""
        amps = np.zeros((state.cutoff.dim, 2, 2), dtype=complex)
        amps[:, 0, 0] = state.amplitudes
        return cls(state.cutoff, amps)

    @classmethod
    def from_branches(cls, cutoff, branches):
        """Sum over {(n_a', n_b'): signal vector} of |vector> (x) |n_a', n_b'>."""
        cutoff = as_cutoff(cutoff)
        amps = np.zeros((cutoff.dim, 2, 2), dtype=complex)
        for (k, l), vec in branches.items():
            if k not in (0, 1) or l not in (0, 1):
                raise CutoffError('ancilla occupations must be 0 or 1, got (%r, %r)' % (k, l))
            if isinstance(vec, TwoModePureState):
                if vec.cutoff != cutoff:
                    raise CutoffError('branch has n_max=%d, expected %d'
                                      % (vec.cutoff.n_max, cutoff.n_max))
                vec = vec.amplitudes
            amps[:, k, l] += np.asarray(vec, dtype=complex)
        return cls(cutoff, amps)

    def norm_squared(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def branch(self, k, l):
        """Unnormalized signal vector conditioned on ancillas (k, l)."""
        return TwoModePureState(self.cutoff, self.amplitudes[:, k, l])

    def apply_ancilla(self, op):
        """Act with a 4 x 4 matrix on the ancilla pair, basis order 00, 01, 10, 11."""
        op = linalg.as_dense(getattr(op, 'matrix', op))
        if op.shape != (4, 4):
            raise ValueError('ancilla operator must be 4 x 4, got %s' % (op.shape,))
        flat = self.amplitudes.reshape(self.cutoff.dim, 4) @ op.T
        return FourModeState(self.cutoff, flat.reshape(self.cutoff.dim, 2, 2))


def partial_trace_pair(state, keep=MODES, povm=None, normalize=True):
    """Reduced density of the signal pair (a, b) or the ancilla pair (a', b').

    With ``keep=('a', 'b')`` an optional 4 x 4 ancilla ``povm`` element
    conditions the result: Tr_a'b'[(1 (x) povm) |Psi><Psi|].  With
    ``normalize=False`` the trace of the result is the outcome probability.
    """
    flat = state.amplitudes.reshape(state.cutoff.dim, 4)
    keep = tuple(keep)
    if keep == MODES:
        if povm is None:
            weights = np.eye(4)
        else:
            weights = linalg.as_dense(getattr(povm, 'matrix', povm))
            if weights.shape != (4, 4):
                raise ValueError('ancilla POVM element must be 4 x 4, got %s' % (weights.shape,))
        rho = flat @ weights.T @ flat.conj().T
        out = TwoModeDensity(state.cutoff, rho)
    elif keep == ANCILLA_MODES:
        if povm is not None:
            raise ValueError('a POVM element only applies when keeping the signal modes')
        out = TwoModeDensity(ModeCutoff(1), flat.T @ flat.conj())
    else:
        raise ValueError('Invalid mode pair %s, expected %s or %s' % (keep, MODES, ANCILLA_MODES))
    if not normalize:
        return out
    if out.trace() <= 0.0:
        raise ConditioningError('conditioning event has zero probability')
    return out.normalized()

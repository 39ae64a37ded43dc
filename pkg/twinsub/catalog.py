#!/usr/bin/env python3

"""Interferometer input states and their reference performance figures.

Each kind of input has a builder and a reference record.  Fringes are
quoted for <J_z^out(phi)>, i.e. half of the photon-number difference at
the output ports.
"""

import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.stats
from scipy.special import gammaln

from twinsub import fock
from twinsub import linalg
from twinsub import subtraction
from twinsub.fock import CutoffError, ModeCutoff, TwoModeDensity, TwoModePureState

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-12
MAX_CUTOFF = 600
HEADROOM = 2

KINDS = ('fock_vacuum', 'coherent_vacuum', 'coherent_squeezed', 'twin_fock',
         'fraternal_twin', 'noon', 'ymck', 'subtracted_twin', 'opo_mixture')

REQUIRED = {
    'fock_vacuum': ('n',),
    'coherent_vacuum': ('alpha',),
    'coherent_squeezed': ('alpha', 'r'),
    'twin_fock': ('n',),
    'fraternal_twin': ('n',),
    'noon': ('n',),
    'ymck': ('n',),
    'subtracted_twin': ('n',),
    'opo_mixture': (),
}

# kinds whose n counts a photon that must be present
MIN_N = {'fock_vacuum': 0, 'twin_fock': 0, 'fraternal_twin': 1, 'noon': 1,
         'ymck': 1, 'subtracted_twin': 1}


def _parse_complex(value, name):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) <= {'re', 'im'}:
        return complex(float(value.get('re', 0.0)), float(value.get('im', 0.0)))
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    raise ValueError('%s must be a number, [re, im] or {"re", "im"}, got %r' % (name, value))


def _parse_table(value):
    """[[n, n', value], ...] or {"n,n'": value} -> ((n, n', value), ...)."""
    if isinstance(value, dict):
        items = []
        for key, v in value.items():
            try:
                n, m = (int(p) for p in str(key).split(','))
            except ValueError:
                raise ValueError('table key %r is not of the form "n,n\'"' % (key,))
            items.append((n, m, v))
    else:
        items = [tuple(entry) for entry in value]
    out = []
    for entry in items:
        if len(entry) != 3:
            raise ValueError('table entries are [n, n\', value], got %r' % (entry,))
        n, m, v = entry
        if int(n) != n or int(m) != m or n < 0 or m < 0:
            raise ValueError('table photon numbers must be non-negative integers, got %r' % (entry,))
        out.append((int(n), int(m), _parse_complex(v, 'table value')))
    if not out:
        raise ValueError('table must not be empty')
    return tuple(sorted(out))


@dataclass(frozen=True)
class InputStateSpec:
    kind: str
    n: int = None
    alpha: complex = None
    r: float = None
    sign: str = '+'
    x: float = None
    table: tuple = None
    n_max: int = None
    tail_tol: float = TAIL_TOL
    max_cutoff: int = MAX_CUTOFF

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError('Invalid state kind "%s", expected one of %s' % (self.kind, ', '.join(KINDS)))
        for name in REQUIRED[self.kind]:
            if getattr(self, name) is None:
                raise ValueError('state kind "%s" needs parameter "%s"' % (self.kind, name))
        if self.kind in MIN_N:
            n = self.n
            if isinstance(n, bool) or int(n) != n or n < MIN_N[self.kind]:
                raise ValueError('n must be an integer >= %d for "%s", got %r'
                                 % (MIN_N[self.kind], self.kind, n))
            object.__setattr__(self, 'n', int(n))
        if self.alpha is not None:
            object.__setattr__(self, 'alpha', _parse_complex(self.alpha, 'alpha'))
        if self.r is not None and not self.r >= 0.0:
            raise ValueError('squeezing r must be >= 0, got %r' % (self.r,))
        object.__setattr__(self, 'sign', subtraction.parse_sign(self.sign))
        if self.kind == 'opo_mixture':
            if (self.x is None) == (self.table is None):
                raise ValueError('opo_mixture needs exactly one of "x" or "table"')
            if self.x is not None and not 0.0 <= self.x < 1.0:
                raise ValueError('thermal parameter x must lie in [0, 1), got %r' % (self.x,))
            if self.table is not None:
                object.__setattr__(self, 'table', _parse_table(self.table))
        if self.n_max is not None:
            ModeCutoff(self.n_max)
        if not self.tail_tol > 0.0:
            raise ValueError('tail_tol must be positive, got %r' % (self.tail_tol,))

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        names = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError('unknown state field(s): %s' % ', '.join(unknown))
        if 'kind' not in d:
            raise ValueError('state needs a "kind"')
        return cls(**d)

    def to_dict(self):
        out = {}
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, complex):
                value = [value.real, value.imag]
            elif key == 'table':
                value = [[n, m, [v.real, v.imag]] for n, m, v in value]
            out[key] = value
        return out


# --- cutoff sizing ---

def _checked_cutoff(n_max, spec):
    if n_max > spec.max_cutoff:
        raise CutoffError('state "%s" needs n_max=%d, above the memory budget of %d'
                          % (spec.kind, n_max, spec.max_cutoff))
    return ModeCutoff(n_max)


def coherent_tail_cutoff(alpha, tol=TAIL_TOL):
    """Smallest K with P(k > K) < tol for a Poisson photon distribution."""
    mean = abs(alpha) ** 2
    if mean == 0.0:
        return 0
    ks = np.arange(0, int(mean + 40.0 * math.sqrt(mean) + 60))
    tails = scipy.stats.poisson.sf(ks, mean)
    return int(ks[np.argmax(tails < tol)])


def _squeezed_log_probability(m, r):
    """log P(2m photons) of squeezed vacuum."""
    return (2.0 * m * math.log(math.tanh(r)) + gammaln(2 * m + 1)
            - 2.0 * m * math.log(2.0) - 2.0 * gammaln(m + 1) - math.log(math.cosh(r)))


def squeezed_tail_cutoff(r, tol=TAIL_TOL):
    """Smallest even K whose discarded tail of squeezed vacuum is below tol.

    Successive even-number probabilities fall by less than tanh(r)^2, which
    bounds the tail by a geometric series.
    """
    if r == 0.0:
        return 0
    q = math.tanh(r) ** 2
    m = 0
    while math.exp(_squeezed_log_probability(m, r)) * q / (1.0 - q) >= tol:
        m += 1
    return 2 * m


def coherent_amplitudes(alpha, n_max):
    k = np.arange(n_max + 1)
    if alpha == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(alpha) ** 2 + k * math.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    return np.exp(log_mag) * np.exp(1j * k * np.angle(alpha))


def squeezed_amplitudes(r, n_max):
    """S(r)|0> with S(r) = exp((r b^2 - r b^dag^2) / 2): <2m| = (-tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r))."""
    out = np.zeros(n_max + 1, dtype=complex)
    if r == 0.0:
        out[0] = 1.0
        return out
    for m in range(n_max // 2 + 1):
        out[2 * m] = (-1) ** m * math.exp(0.5 * _squeezed_log_probability(m, r))
    return out


# --- builders ---

def _fock_cutoff(spec, highest):
    n_max = spec.n_max if spec.n_max is not None else highest + HEADROOM
    return _checked_cutoff(n_max, spec)


def _build_fock_vacuum(spec):
    return fock.basis_state(spec.n, 0, _fock_cutoff(spec, spec.n))


def _build_twin_fock(spec):
    return fock.basis_state(spec.n, spec.n, _fock_cutoff(spec, spec.n))


def _build_fraternal_twin(spec):
    return fock.basis_state(spec.n, spec.n - 1, _fock_cutoff(spec, spec.n))


def _build_noon(spec):
    cutoff = _fock_cutoff(spec, spec.n)
    return TwoModePureState.from_occupations(cutoff, {(spec.n, 0): 1.0, (0, spec.n): 1.0})


def _build_ymck(spec):
    n = spec.n
    cutoff = _fock_cutoff(spec, n + 1)
    return TwoModePureState.from_occupations(cutoff, {(n, n): 1.0, (n + 1, n - 1): 1.0})


def _build_subtracted_twin(spec):
    return subtraction.twin_subtracted_state(spec.n, spec.sign, _fock_cutoff(spec, spec.n))


def _continuous_cutoff(spec, highest):
    if spec.n_max is not None:
        return _checked_cutoff(spec.n_max, spec)
    return _checked_cutoff(highest + HEADROOM, spec)


def _build_coherent_vacuum(spec):
    cutoff = _continuous_cutoff(spec, coherent_tail_cutoff(spec.alpha, spec.tail_tol))
    grid = np.zeros((cutoff.mode_dim, cutoff.mode_dim), dtype=complex)
    grid[:, 0] = coherent_amplitudes(spec.alpha, cutoff.n_max)
    return TwoModePureState(cutoff, grid).normalized()


def _build_coherent_squeezed(spec):
    highest = max(coherent_tail_cutoff(spec.alpha, spec.tail_tol),
                  squeezed_tail_cutoff(spec.r, spec.tail_tol))
    cutoff = _continuous_cutoff(spec, highest)
    grid = np.outer(coherent_amplitudes(spec.alpha, cutoff.n_max),
                    squeezed_amplitudes(spec.r, cutoff.n_max))
    return TwoModePureState(cutoff, grid).normalized()


def thermal_twin_weights(x, tol=TAIL_TOL):
    """rho_nn proportional to x^n, cut where the geometric tail x^(N+1) drops below tol."""
    if x == 0.0:
        return np.array([1.0])
    top = int(math.ceil(math.log(tol) / math.log(x)))
    weights = x ** np.arange(top)
    return weights / weights.sum()


def _build_opo_mixture(spec):
    if spec.x is not None:
        weights = thermal_twin_weights(spec.x, spec.tail_tol)
        table = np.diag(weights).astype(complex)
    else:
        top = max(max(n, m) for n, m, _ in spec.table)
        table = np.zeros((top + 1, top + 1), dtype=complex)
        for n, m, v in spec.table:
            table[n, m] = v
        if np.max(np.abs(table - table.conj().T)) > fock.NORM_TOL:
            raise ValueError('opo_mixture table is not Hermitian')
        low = scipy.linalg.eigvalsh(table).min()
        if low < -fock.NORM_TOL:
            raise ValueError('opo_mixture table is not positive (eigenvalue %.3g)' % low)
        tr = np.trace(table).real
        if tr <= 0.0:
            raise ValueError('opo_mixture table has no weight')
        table = table / tr
    top = table.shape[0] - 1
    cutoff = _fock_cutoff(spec, top)
    twins = np.arange(top + 1) * (cutoff.mode_dim + 1)
    rows, cols = np.nonzero(table)
    m = sp.coo_matrix((table[rows, cols], (twins[rows], twins[cols])),
                      shape=(cutoff.dim, cutoff.dim)).tocsr()
    if cutoff.dim <= linalg.DENSE_LIMIT:
        m = m.toarray()
    return TwoModeDensity(cutoff, m)


BUILDERS = {
    'fock_vacuum': _build_fock_vacuum,
    'coherent_vacuum': _build_coherent_vacuum,
    'coherent_squeezed': _build_coherent_squeezed,
    'twin_fock': _build_twin_fock,
    'fraternal_twin': _build_fraternal_twin,
    'noon': _build_noon,
    'ymck': _build_ymck,
    'subtracted_twin': _build_subtracted_twin,
    'opo_mixture': _build_opo_mixture,
}


def build(spec):
    state = BUILDERS[spec.kind](spec)
    logger.debug('built %s on n_max=%d', spec.kind, state.cutoff.n_max)
    return state


# --- reference values ---

@dataclass(frozen=True)
class TableReference:
    """Reference phase error and fringe of one input state.

    ``basis`` says what ``delta_phi`` is: ``qcrb`` (exact bound),
    ``qcrb_leading_order`` or ``error_propagation`` (J_z readout at phi = 0).
    ``qcrb`` is always the exact bound for the generator, or None.
    The fringe is fringe_cos cos(phi) + fringe_sin sin(phi), None if the
    state is not an interferometer input.
    """
    row: int
    delta_phi: float
    basis: str
    qcrb: float
    delta_phi_formula: str
    fringe_formula: str
    fringe_cos: float = None
    fringe_sin: float = None
    generator: str = 'Jy'

    def fringe(self, phi):
        if self.fringe_cos is None:
            return None
        return self.fringe_cos * math.cos(phi) + self.fringe_sin * math.sin(phi)

    @property
    def fringe_amplitude(self):
        if self.fringe_cos is None:
            return None
        return math.hypot(self.fringe_cos, self.fringe_sin)


def references(spec):
    n = spec.n
    if spec.kind == 'fock_vacuum':
        v = 1.0 / math.sqrt(n) if n else math.inf
        return TableReference(1, v, 'qcrb', v, '1/sqrt(n)', '(n/2) cos(phi)', 0.5 * n, 0.0)
    if spec.kind == 'coherent_vacuum':
        a2 = abs(spec.alpha) ** 2
        v = 1.0 / math.sqrt(a2) if a2 else math.inf
        return TableReference(2, v, 'qcrb', v, '1/|alpha|', '(|alpha|^2/2) cos(phi)', 0.5 * a2, 0.0)
    if spec.kind == 'coherent_squeezed':
        a2, r = abs(spec.alpha) ** 2, spec.r
        lead = math.exp(-r) / math.sqrt(a2) if a2 else math.inf
        exact = 1.0 / math.sqrt(a2 * math.exp(2 * r) + math.sinh(r) ** 2) if a2 or r else math.inf
        return TableReference(3, lead, 'qcrb_leading_order', exact, 'exp(-r)/|alpha|',
                              '((|alpha|^2 - sinh(r)^2)/2) cos(phi)',
                              0.5 * (a2 - math.sinh(r) ** 2), 0.0)
    if spec.kind == 'twin_fock':
        v = 1.0 / math.sqrt(2 * n * (n + 1)) if n else math.inf
        return TableReference(4, v, 'qcrb', v, '1/sqrt(2n(n+1))', '0', 0.0, 0.0)
    if spec.kind == 'fraternal_twin':
        v = 1.0 / math.sqrt(2 * n * n - 1)
        return TableReference(5, v, 'qcrb', v, '1/sqrt(2n^2-1)', '(1/2) cos(phi)', 0.5, 0.0)
    if spec.kind == 'noon':
        return TableReference(6, 1.0 / n, 'qcrb', 1.0 / n, '1/n', 'none', generator='Na')
    if spec.kind == 'ymck':
        return TableReference(7, 1.0 / math.sqrt(n * (n + 1)), 'error_propagation',
                              1.0 / math.sqrt(2 * n * n + 2 * n - 1), '1/sqrt(n(n+1))',
                              '(1/2) cos(phi) - (sqrt(n(n+1))/2) sin(phi)',
                              0.5, -0.5 * math.sqrt(n * (n + 1)))
    if spec.kind == 'subtracted_twin':
        s = -1.0 if spec.sign == '+' else 1.0
        return TableReference(8, 1.0 / n, 'error_propagation', 1.0 / math.sqrt(2 * n * n - 1),
                              '1/n', '%s(n/2) sin(phi)' % ('-' if s < 0 else '+'), 0.0, 0.5 * n * s)
    if spec.kind == 'opo_mixture':
        return TableReference(None, None, None, None, 'none', '0', 0.0, 0.0)
    raise ValueError('Invalid state kind "%s"' % spec.kind)


def table_generator(spec, cutoff):
    """Phase generator used for the Fisher information of ``spec``."""
    if references(spec).generator == 'Na':
        return fock.number('a', cutoff)
    return fock.schwinger('Jy', cutoff)


@dataclass(frozen=True)
class StateDescription:
    kind: str
    params: dict
    n_max: int
    mean_photons: float
    two_j_support: tuple
    purity: float
    reference: TableReference = field(default=None)


def sector_weights(state):
    """{2j: probability} over total photon numbers."""
    if isinstance(state, TwoModePureState):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.asarray(linalg.as_dense(state.matrix.diagonal())).real.ravel()
    n_a, n_b = state.cutoff.grid()
    totals = np.bincount(n_a + n_b, weights=probs)
    return {int(k): float(w) for k, w in enumerate(totals) if w > TAIL_TOL}


def describe(spec, state=None):
    state = build(spec) if state is None else state
    if isinstance(state, TwoModePureState):
        purity = 1.0
    else:
        purity = state.purity()
    return StateDescription(kind=spec.kind,
                            params=spec.to_dict(),
                            n_max=state.cutoff.n_max,
                            mean_photons=fock.mean_photons(state),
                            two_j_support=tuple(sorted(sector_weights(state))),
                            purity=purity,
                            reference=references(spec))

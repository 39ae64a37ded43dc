#!/usr/bin/env python3

"""Heralded single-photon subtraction from the mode pair.

Each signal mode is tapped by a weak beam splitter into its own ancilla
(a -> a', b -> b').  The ancillas are kept to {0, 1} photons, so the tap
produces the four branches M_kl |psi> with k, l the ancilla occupations:

  bucket    one detector sees a' and b' alike, leaving a mixture;
  coherent  a' and b' are mixed on a balanced splitter first, and a click
            on one output projects onto a pure superposition.

Herald probabilities are normalized over the retained ancilla outcomes.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from twinsub import fock
from twinsub import linalg
from twinsub import optics
from twinsub.fock import MODES, FourModeState, TwoModeDensity, TwoModeOperator, TwoModePureState

logger = logging.getLogger(__name__)

PROTOCOLS = ('bucket', 'coherent_plus', 'coherent_minus')
ROUTES = ('linear', 'exact')

# herald probabilities below UNHERALDABLE_TOL * theta^2 count as zero
UNHERALDABLE_TOL = 1e-12
TWIN_FORM_TOL = 1e-12

# flat index of the ancilla occupations (n_a', n_b') on the n_max = 1 pair
ANCILLA_INDEX = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}


class UnheraldableError(fock.ConditioningError):
    pass


class TwinFormError(ValueError):
    pass


@dataclass(frozen=True)
class HeraldOutcome:
    state: object
    herald_probability: float
    protocol: str
    tap_theta: float
    route: str = 'linear'
    bucket_bias: float = 0.5

    def density(self):
        return fock.promote(self.state)


def parse_sign(sign):
    if sign in ('+', 'plus', 1, +1.0):
        return '+'
    if sign in ('-', 'minus', -1, -1.0):
        return '-'
    raise ValueError('Invalid herald sign %r, expected "+" or "-"' % (sign,))


def _check_tap(theta, route):
    if not theta > 0.0:
        raise ValueError('tap angle must be positive, got %r' % (theta,))
    if theta > optics.WEAK_TAP_LIMIT:
        logger.warning('tap angle %g exceeds the weak-tap regime (%g)', theta, optics.WEAK_TAP_LIMIT)
    if route not in ROUTES:
        raise ValueError('Invalid tap route "%s", expected one of %s' % (route, ', '.join(ROUTES)))


def tap_blocks(theta, cutoff, route='linear'):
    """[E_0, E_1]: single-mode maps for zero or one photon sent to the ancilla."""
    cutoff = fock.as_cutoff(cutoff)
    if cutoff.n_max < 1:
        raise UnheraldableError('no photon can be tapped with n_max=0')
    if route == 'linear':
        op = optics.weak_bs_first_order(theta, MODES, cutoff)
    elif route == 'exact':
        op = optics.beam_splitter_unitary(theta, MODES, cutoff)
    else:
        raise ValueError('Invalid tap route "%s"' % route)
    return optics.ancilla_blocks(op, count=2)


def tap_operators(theta, cutoff, route='linear'):
    """{(k, l): M_kl} with M_kl = E_l on b times E_k on a."""
    cutoff = fock.as_cutoff(cutoff)
    blocks = tap_blocks(theta, cutoff, route)
    ops = {}
    for (k, l) in ANCILLA_INDEX:
        m = fock.embed(blocks[l], 'b', cutoff) @ fock.embed(blocks[k], 'a', cutoff)
        ops[(k, l)] = TwoModeOperator(cutoff, m.tocsr(), 'M%d%d' % (k, l))
    return ops


def tapped_state(state, theta, route='linear'):
    """|psi>_ab |00>_a'b' after both taps, ancillas truncated to one photon."""
    ops = tap_operators(theta, state.cutoff, route)
    return FourModeState.from_branches(
        state.cutoff, {kl: op.apply(state) for kl, op in ops.items()})


def bucket_povm(p=0.5):
    """p |10><10| + (1 - p) |01><01| on the ancilla pair."""
    povm = np.zeros((4, 4))
    povm[ANCILLA_INDEX[(1, 0)], ANCILLA_INDEX[(1, 0)]] = p
    povm[ANCILLA_INDEX[(0, 1)], ANCILLA_INDEX[(0, 1)]] = 1.0 - p
    return povm


def click_povm():
    """One photon in either ancilla, without telling which."""
    return bucket_povm(0.5) * 2.0


def _check_heraldable(probability, theta):
    if probability <= UNHERALDABLE_TOL * theta ** 2:
        raise UnheraldableError('herald probability %.3g vanishes: the input has no photon '
                                'that the taps can remove' % probability)


def _use_four_mode(state):
    return isinstance(state, TwoModePureState) and state.cutoff.dim <= linalg.DENSE_LIMIT


def _branch_densities(rho, ops):
    return {kl: linalg.sandwich(op.matrix, rho.matrix) for kl, op in ops.items()}


def bucket_subtract(state, theta, p=0.5, route='linear'):
    """Subtract one photon with an undiscriminating bucket detector.

    ``p`` is the probability that the detector assigns a click to a'.  The
    reported probability is that of any single click.
    """
    _check_tap(theta, route)
    if not 0.0 <= p <= 1.0:
        raise ValueError('bucket bias must lie in [0, 1], got %r' % (p,))
    if _use_four_mode(state):
        four = tapped_state(state, theta, route)
        total = four.norm_squared()
        click = fock.partial_trace_pair(four, povm=click_povm(), normalize=False).trace()
        _check_heraldable(click / total, theta)
        try:
            rho = fock.partial_trace_pair(four, povm=bucket_povm(p))
        except fock.ConditioningError as e:
            raise UnheraldableError(str(e))
    else:
        rho_in = fock.promote(state)
        branches = _branch_densities(rho_in, tap_operators(theta, state.cutoff, route))
        total = sum(linalg.trace(m).real for m in branches.values())
        on_a, on_b = branches[(1, 0)], branches[(0, 1)]
        click = linalg.trace(on_a).real + linalg.trace(on_b).real
        _check_heraldable(click / total, theta)
        try:
            rho = TwoModeDensity(state.cutoff, p * on_a + (1.0 - p) * on_b).normalized()
        except fock.ConditioningError as e:
            raise UnheraldableError(str(e))
    probability = click / total
    logger.debug('bucket herald probability %.6g at theta=%g', probability, theta)
    return HeraldOutcome(rho, probability, 'bucket', theta, route, p)


def coherent_subtract(state, theta, sign='+', route='linear'):
    """Subtract one photon after mixing the ancillas on a balanced splitter.

    A click in a' heralds the + branch, a click in b' the - branch.  Pure
    inputs give pure outputs with a canonical global phase.
    """
    _check_tap(theta, route)
    sign = parse_sign(sign)
    target = (1, 0) if sign == '+' else (0, 1)
    protocol = 'coherent_plus' if sign == '+' else 'coherent_minus'
    mixer = optics.herald_splitter().todense()
    if _use_four_mode(state):
        four = tapped_state(state, theta, route)
        total = four.norm_squared()
        branch = four.apply_ancilla(mixer).branch(*target)
        probability = branch.norm() ** 2 / total
        _check_heraldable(probability, theta)
        out = branch.normalized().canonical_phase()
    else:
        rho_in = fock.promote(state)
        ops = tap_operators(theta, state.cutoff, route)
        row = mixer[ANCILLA_INDEX[target]]
        kraus = None
        for kl, op in ops.items():
            weight = row[ANCILLA_INDEX[kl]]
            if weight == 0.0:
                continue
            term = weight * op.matrix
            kraus = term if kraus is None else kraus + term
        total = sum(linalg.trace(m).real for m in _branch_densities(rho_in, ops).values())
        heralded = TwoModeDensity(state.cutoff, linalg.sandwich(kraus, rho_in.matrix))
        probability = heralded.trace() / total
        _check_heraldable(probability, theta)
        out = heralded.normalized()
    logger.debug('%s herald probability %.6g at theta=%g', protocol, probability, theta)
    return HeraldOutcome(out, probability, protocol, theta, route)


def herald_average(outcomes):
    """Probability-weighted mixture of several herald outcomes."""
    total = sum(o.herald_probability for o in outcomes)
    if total <= 0.0:
        raise UnheraldableError('outcomes carry no probability')
    densities = [o.density().matrix for o in outcomes]
    if any(sp.issparse(m) for m in densities):
        densities = [linalg.as_sparse(m) for m in densities]
    matrix = None
    for o, m in zip(outcomes, densities):
        term = m * (o.herald_probability / total)
        matrix = term if matrix is None else matrix + term
    return TwoModeDensity(outcomes[0].state.cutoff, matrix)


# --- exact constructors ---

def twin_subtracted_state(n, sign='+', cutoff=None):
    """(|n, n-1> +- |n-1, n>) / sqrt 2."""
    if n < 1:
        raise ValueError('subtracted twin state needs n >= 1, got %r' % (n,))
    sign = parse_sign(sign)
    cutoff = fock.ModeCutoff(n + 2 if cutoff is None else fock.as_cutoff(cutoff).n_max)
    s = 1.0 if sign == '+' else -1.0
    return TwoModePureState.from_occupations(cutoff, {(n, n - 1): 1.0, (n - 1, n): s})


def twin_form(state):
    """Coefficients {(n, n'): rho_nn'} of a density supported on |nn><n'n'|."""
    rho = fock.promote(state)
    d = rho.cutoff.mode_dim
    twins = np.arange(d) * (d + 1)
    block = linalg.restrict(rho.matrix, twins)
    if rho.is_sparse:
        everything = float(np.abs(rho.matrix.data).sum())
    else:
        everything = float(np.abs(rho.matrix).sum())
    stray = everything - float(np.abs(block).sum())
    if stray > TWIN_FORM_TOL * max(1.0, everything):
        raise TwinFormError('density has weight %.3g outside the twin pairs |nn><n\'n\'|' % stray)
    rows, cols = np.nonzero(block)
    return {(int(n), int(m)): complex(block[n, m]) for n, m in zip(rows, cols)}


def _assemble(cutoff, entries, sparse):
    """Density from {(index, index'): value}."""
    rows = [i for i, _ in entries]
    cols = [j for _, j in entries]
    m = sp.coo_matrix((list(entries.values()), (rows, cols)),
                      shape=(cutoff.dim, cutoff.dim), dtype=complex).tocsr()
    return TwoModeDensity(cutoff, m if sparse else m.toarray())


def _subtracted_weights(coeffs):
    norm = sum(n * v.real for (n, m), v in coeffs.items() if n == m)
    if norm <= 0.0:
        raise UnheraldableError('twin mixture has no photons to subtract')
    return {(n, m): math.sqrt(n * m) * v / norm
            for (n, m), v in coeffs.items() if n >= 1 and m >= 1}


def bucket_mixture(state, p=0.5):
    """p |n-1,n><n'-1,n'| + (1-p) |n,n-1><n',n'-1|, weighted by sqrt(nn') rho_nn'."""
    rho = fock.promote(state)
    cutoff = rho.cutoff
    entries = {}
    for (n, m), w in _subtracted_weights(twin_form(rho)).items():
        entries[(cutoff.index(n - 1, n), cutoff.index(m - 1, m))] = p * w
        entries[(cutoff.index(n, n - 1), cutoff.index(m, m - 1))] = (1.0 - p) * w
    return _assemble(cutoff, entries, rho.is_sparse)


def coherent_mixture(state, sign='+'):
    """Coherently subtracted twin mixture: sum sqrt(nn') rho_nn' |psi_n><psi_n'|."""
    rho = fock.promote(state)
    cutoff = rho.cutoff
    s = 1.0 if parse_sign(sign) == '+' else -1.0
    entries = {}
    for (n, m), w in _subtracted_weights(twin_form(rho)).items():
        left = ((cutoff.index(n, n - 1), 1.0), (cutoff.index(n - 1, n), s))
        right = ((cutoff.index(m, m - 1), 1.0), (cutoff.index(m - 1, m), s))
        for i, si in left:
            for k, sk in right:
                entries[(i, k)] = entries.get((i, k), 0.0) + 0.5 * si * sk * w
    return _assemble(cutoff, entries, rho.is_sparse)


def mixture_coefficients(state):
    """c_{j,j'} of the subtracted twin mixture, keyed by (2j, 2j') with 2j = 2n - 1."""
    weights = _subtracted_weights(twin_form(state))
    coeffs = {}
    for (n, m), w in sorted(weights.items()):
        if w == 0:
            continue
        coeffs[(2 * n - 1, 2 * m - 1)] = w.real if w.imag == 0.0 else w
    return coeffs

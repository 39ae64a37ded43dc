#!/usr/bin/env python3

"""Fringes and phase errors of the Mach-Zehnder readout.

The detected observable is J_z^out(phi) = -sin(phi) J_x + cos(phi) J_z, so
every fringe quantity follows from five input moments: <J_x>, <J_z>,
<J_x^2>, <J_z^2> and <J_x J_z + J_z J_x>.  ``SpinMoments`` holds them; the
numeric path measures them on a state, the closed forms below write them
down directly.
"""

import collections
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize

from twinsub import fock
from twinsub import linalg
from twinsub import optics
from twinsub.fock import TwoModeDensity, TwoModePureState

logger = logging.getLogger(__name__)

SLOPE_TOL = 1e-12
POLE_TOL = 1e-12
FD_STEP = 1e-5
VARIANCE_TOL = 1e-12
COEFF_SUM_TOL = 1e-9

PLACEMENTS = ('input', 'output')
TIPPING_MODELS = ('ratio', 'exact')


class StationaryFringeError(ValueError):
    pass


class MixedStateError(TypeError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    phi: float
    mean_jz: float
    var_jz: float
    delta_phi: float
    slope: float = math.nan


def _error_propagation(std, slope, phi, allow_stationary):
    if abs(slope) <= SLOPE_TOL:
        if allow_stationary:
            return math.inf
        raise StationaryFringeError('fringe is stationary at phi=%.12g (slope %.3g)' % (phi, slope))
    return std / abs(slope)


def _clamped(var, scale):
    if var < 0.0:
        if var < -VARIANCE_TOL * max(1.0, scale):
            logger.warning('negative variance %.3g clamped to zero', var)
        return 0.0
    return var


@dataclass(frozen=True)
class SpinMoments:
    """<J_x>, <J_z> and the central second moments of the input state.

    ``cov`` is the symmetrized covariance (1/2)<{dJ_x, dJ_z}>. Raw second
    moments of large-n states cancel against the squared means, so the
    variances are taken from the shifted operators.
    """
    jx: float
    jz: float
    var_x: float
    var_z: float
    cov: float

    @classmethod
    def from_state(cls, state):
        cutoff = state.cutoff
        jx = fock.schwinger('Jx', cutoff)
        jz = fock.schwinger('Jz', cutoff)
        if isinstance(state, TwoModePureState):
            psi = state.normalized().amplitudes
            vx, vz = jx.matrix @ psi, jz.matrix @ psi
            mx, mz = np.vdot(psi, vx).real, np.vdot(psi, vz).real
            dx, dz = vx - mx * psi, vz - mz * psi
            return cls(jx=mx, jz=mz,
                       var_x=np.vdot(dx, dx).real,
                       var_z=np.vdot(dz, dz).real,
                       cov=np.vdot(dx, dz).real)
        rho = state.normalized()
        mx, mz = fock.expectation(rho, jx), fock.expectation(rho, jz)
        one = fock.identity(cutoff)
        dx, dz = jx - mx * one, jz - mz * one
        return cls(jx=mx, jz=mz,
                   var_x=linalg.trace_product(rho.matrix, (dx @ dx).matrix).real,
                   var_z=linalg.trace_product(rho.matrix, (dz @ dz).matrix).real,
                   cov=0.5 * linalg.trace_product(rho.matrix, (dx @ dz + dz @ dx).matrix).real)

    @classmethod
    def from_raw(cls, jx, jz, jx2, jz2, cross):
        """Moments from <J_x^2>, <J_z^2> and <{J_x, J_z}>."""
        return cls(jx=jx, jz=jz, var_x=jx2 - jx * jx, var_z=jz2 - jz * jz,
                   cov=0.5 * cross - jx * jz)

    @property
    def jx2(self):
        return self.var_x + self.jx ** 2

    @property
    def jz2(self):
        return self.var_z + self.jz ** 2

    @property
    def cross(self):
        """<{J_x, J_z}>."""
        return 2.0 * (self.cov + self.jx * self.jz)

    def mean(self, phi):
        return -math.sin(phi) * self.jx + math.cos(phi) * self.jz

    def second_moment(self, phi):
        return self.variance(phi) + self.mean(phi) ** 2

    def variance(self, phi):
        s, c = math.sin(phi), math.cos(phi)
        var = s * s * self.var_x + c * c * self.var_z - 2.0 * s * c * self.cov
        return _clamped(var, max(self.var_x, self.var_z))

    def slope(self, phi):
        return -math.cos(phi) * self.jx - math.sin(phi) * self.jz

    def delta_phi(self, phi, allow_stationary=False):
        return _error_propagation(math.sqrt(self.variance(phi)), self.slope(phi), phi,
                                  allow_stationary)

    def phase_point(self, phi, allow_stationary=True):
        return PhasePoint(phi, self.mean(phi), self.variance(phi),
                          self.delta_phi(phi, allow_stationary), self.slope(phi))


def fringe(state, phi):
    """<J_z^out(phi)>."""
    return fock.expectation(state, optics.mzi_jz_out(phi, state.cutoff))


def fringe_slope(state, phi):
    """d<J_z^out>/dphi = -cos(phi) <J_x> - sin(phi) <J_z>."""
    jx = fock.expectation(state, fock.schwinger('Jx', state.cutoff))
    jz = fock.expectation(state, fock.schwinger('Jz', state.cutoff))
    return -math.cos(phi) * jx - math.sin(phi) * jz


def fringe_slope_fd(state, phi, step=FD_STEP):
    return (fringe(state, phi + step) - fringe(state, phi - step)) / (2.0 * step)


def phase_error_numeric(state, phi, allow_stationary=False):
    """Delta J_z^out / |d<J_z^out>/dphi| measured on ``state``."""
    return SpinMoments.from_state(state).delta_phi(phi, allow_stationary)


def phase_point(state, phi, allow_stationary=True):
    return SpinMoments.from_state(state).phase_point(phi, allow_stationary)


def optimal_phase_error(state, num=720):
    """Smallest error-propagation phase error over phi, grid search then refinement.

    Delta phi has period pi, so the search covers [-pi/2, pi/2).
    """
    moments = state if isinstance(state, SpinMoments) else SpinMoments.from_state(state)
    phis = np.linspace(-0.5 * math.pi, 0.5 * math.pi, num, endpoint=False)
    values = np.array([moments.delta_phi(p, allow_stationary=True) for p in phis])
    if not np.isfinite(values).any():
        return moments.phase_point(0.0)
    k = int(np.argmin(values))
    h = math.pi / num

    def objective(phi):
        value = moments.delta_phi(phi, allow_stationary=True)
        return value if math.isfinite(value) else 1e300

    res = scipy.optimize.minimize_scalar(objective, bounds=(phis[k] - h, phis[k] + h),
                                         method='bounded', options={'xatol': 1e-12})
    best = float(res.x) if res.fun < values[k] else float(phis[k])
    return moments.phase_point(best)


def _spin_j(n):
    """j of the subtracted twin state, (2n - 1) / 2."""
    if n < 1:
        raise ValueError('photon number must be >= 1, got %r' % (n,))
    return Fraction(2 * n - 1, 2)


def analytic_delta_phi_pure(n, phi, allow_stationary=False):
    """Closed-form phase error of (|n,n-1> +- |n-1,n>)/sqrt2 at phase phi."""
    j = _spin_j(n)
    jj = float(j * (j + 1))
    c, s = math.cos(phi), math.sin(phi)
    if abs(c) < POLE_TOL:
        if allow_stationary:
            return math.inf
        raise StationaryFringeError('closed form has a pole at phi=%.12g' % phi)
    return math.sqrt(jj * s * s + c * c - 0.75 * s * s) / (abs(c) * math.sqrt(jj + 0.25))


# --- losses ---

@dataclass(frozen=True)
class LossyMoments:
    """Closed-form lossy moments of the subtracted twin state, c1..c4 family.

    ``jz_sq_in`` and ``jz_sq_in_alt`` are two alternative expressions for
    <J_z^2>_in that disagree in general; ``exact_lossy_moments`` is the
    binomial-loss result.
    """
    mean_jz: float
    jz_sq_in: float
    jz_sq_in_alt: float
    cross_term: float

    @property
    def mean_jz_sq(self):
        return self.jz_sq_in


def lossy_moments(n, loss, phi):
    t1, t2, r1, r2 = loss.t1, loss.t2, loss.r1, loss.r2
    c, s = math.cos(phi), math.sin(phi)
    mean = -0.5 * (n * t1 * t2 * s + (n - 0.5) * (t1 ** 2 - t2 ** 2) * c)
    first = 0.25 * (n * (n - 1) * (t1 ** 2 - t2 ** 2) ** 2 + 0.5 * (t1 ** 4 + t2 ** 4)
                    + 0.5 * n * (t1 * r1 ** 2 + t2 * r2 ** 2))
    second = 0.25 * ((n - 0.5) * (t1 ** 2 + t2 ** 2) + 2.0 * t1 ** 2 * t2 ** 2 * n * (n - 1))
    cross = 0.5 * n * ((2 * n - 1) * t1 * t2 * (t1 ** 2 - t2 ** 2) + t1 * t2 * (r1 ** 2 - r2 ** 2))
    return LossyMoments(mean, first, second, cross)


def lossy_delta_phi(n, loss, phi, allow_stationary=False):
    """The c1..c4 closed form; NaN where its radicand is negative.

    It is not the lossless curve: at t1 = t2 = 1 the radicand is
    C^2 + (n^2 - 2n - 1) S^2 where ``analytic_delta_phi_pure`` has
    C^2 + (n^2 - 1) S^2, so the two agree only at phi = 0. Under symmetric loss
    at phi = 0 it gives sqrt(1 + n r^2 / t^3) / n, which is neither
    ``symmetric_loss_limit`` nor the binomial-loss ``lossy_delta_phi_exact``.
    """
    c, s = math.cos(phi), math.sin(phi)
    radicand = ((loss.c1 ** 2 / 4.0 + loss.c3 * n / 2.0) * c * c
                + (loss.c1 * (n - 0.5) + n * loss.c2 * (n * loss.c2 - 4.0)) * s * s)
    slope = n * loss.c2 * c + (n - 0.5) * loss.c4 * s
    if radicand < 0.0:
        logger.warning('c1..c4 form has negative radicand %.3g at n=%d, phi=%g', radicand, n, phi)
        return math.nan
    return _error_propagation(math.sqrt(radicand), slope, phi, allow_stationary)


def exact_lossy_moments(n, loss):
    """Input moments of the subtracted twin state after binomial photon loss."""
    t1, t2 = loss.t1, loss.t2
    T1, T2 = t1 ** 2, t2 ** 2
    R1, R2 = 1.0 - T1, 1.0 - T2
    return SpinMoments.from_raw(
        jx=0.5 * n * t1 * t2,
        jz=0.5 * (n - 0.5) * (T1 - T2),
        jx2=0.25 * (2.0 * n * (n - 1) * T1 * T2 + (n - 0.5) * (T1 + T2)),
        jz2=0.25 * (n * (n - 1) * (T1 - T2) ** 2 + 0.5 * (T1 ** 2 + T2 ** 2)
                    + (n - 0.5) * (T1 * R1 + T2 * R2)),
        cross=0.5 * n * (n - 1) * t1 * t2 * (T1 - T2))


def lossy_delta_phi_exact(n, loss, phi, allow_stationary=False):
    return exact_lossy_moments(n, loss).delta_phi(phi, allow_stationary)


def symmetric_loss_limit(n, t):
    """(1/(t n)) sqrt(1 + n (1 - t^2) / t), the small-phi symmetric-loss estimate."""
    if not 0.0 < t <= 1.0:
        raise ValueError('transmission must lie in (0, 1], got %r' % (t,))
    return math.sqrt(1.0 + n * (1.0 - t * t) / t) / (t * n)


def _output_mean(state, loss, phi):
    rho = optics.lossy(optics.mzi_schrodinger(state, phi), loss)
    return rho, fock.expectation(rho, fock.schwinger('Jz', rho.cutoff))


def lossy_phase_point(state, loss, phi, placement='input', allow_stationary=True):
    """Numeric phase point with Kraus losses before or after the interferometer.

    With losses after the MZI the slope comes from central differences.
    """
    if placement == 'input':
        return SpinMoments.from_state(optics.lossy(state, loss)).phase_point(phi, allow_stationary)
    if placement != 'output':
        raise ValueError('Invalid loss placement "%s", expected one of %s'
                         % (placement, ', '.join(PLACEMENTS)))
    rho, mean = _output_mean(state, loss, phi)
    jz = fock.schwinger('Jz', rho.cutoff)
    second = linalg.trace_product(rho.matrix, (jz @ jz).matrix).real
    var = _clamped(second - mean ** 2, second)
    slope = (_output_mean(state, loss, phi + FD_STEP)[1]
             - _output_mean(state, loss, phi - FD_STEP)[1]) / (2.0 * FD_STEP)
    delta = _error_propagation(math.sqrt(var), slope, phi, allow_stationary)
    return PhasePoint(phi, mean, var, delta, slope)


TippingPoint = collections.namedtuple('TippingPoint', ['t', 'one_minus_t2', 'n_loss', 'residual', 'model'])


def tipping_transmission(n, model='ratio'):
    """Transmission where the loss term of the phase error matches the Heisenberg term.

    ``ratio``: n (1 - t^2) / t = 1.  ``exact``: the exact small-phi error
    (1/(n t)) sqrt(t^2 + (2n - 1)(1 - t^2)) has equal terms, 2 n (1 - t^2) = 1.
    Solved for u = 1 - t^2, which stays well conditioned at large n.
    """
    if n < 1:
        raise ValueError('photon number must be >= 1, got %r' % (n,))
    if model == 'ratio':
        def residual(u):
            return n * u / math.sqrt(1.0 - u) - 1.0
    elif model == 'exact':
        def residual(u):
            return (2 * n - 1) * u - (1.0 - u)
    else:
        raise ValueError('Invalid tipping model "%s", expected one of %s'
                         % (model, ', '.join(TIPPING_MODELS)))
    u = scipy.optimize.brentq(residual, 0.0, 1.0 - 1e-12, xtol=1e-300, maxiter=500)
    return TippingPoint(math.sqrt(1.0 - u), u, n * u, residual(u), model)


# --- quantum Fisher information ---

def qfi_pure(state, generator):
    """4 Var(G) for a pure state."""
    if isinstance(state, TwoModeDensity):
        raise MixedStateError('quantum Fisher information is only implemented for pure states')
    psi = state.normalized().amplitudes
    v = generator.matrix @ psi
    mean = np.vdot(psi, v).real
    return 4.0 * max(np.vdot(v, v).real - mean ** 2, 0.0)


def qcrb(state, generator):
    """1 / sqrt(QFI); infinite when the generator leaves the state invariant."""
    q = qfi_pure(state, generator)
    return 1.0 / math.sqrt(q) if q > 0.0 else math.inf


# --- twin-beam mixtures ---

def _mixture_sums(coeffs):
    diagonal = {tj: c for (tj, tjp), c in coeffs.items() if tj == tjp}
    total = sum(float(np.real(c)) for c in diagonal.values())
    if abs(total - 1.0) > COEFF_SUM_TOL:
        raise ValueError('diagonal mixture coefficients sum to %.12g, expected 1' % total)
    mean_n = sum(float(np.real(c)) * (tj + 1) / 2.0 for tj, c in diagonal.items())
    spin = sum(float(np.real(c)) * (tj * (tj + 2) / 4.0 - 0.25) for tj, c in diagonal.items())
    return mean_n, spin


def mixture_mean_photons(coeffs):
    """Mean twin photon number per mode, sum_j c_jj (j + 1/2)."""
    return _mixture_sums(coeffs)[0]


def mixture_delta_phi(coeffs, phi, allow_stationary=False):
    mean_n, spin = _mixture_sums(coeffs)
    c, s = math.cos(phi), math.sin(phi)
    if abs(c) < POLE_TOL:
        if allow_stationary:
            return math.inf
        raise StationaryFringeError('closed form has a pole at phi=%.12g' % phi)
    var = c * c / 4.0 + s * s * spin / 2.0 - s * s * mean_n ** 2 / 4.0
    return math.sqrt(_clamped(var, mean_n ** 2)) / (abs(c) * mean_n / 2.0)


def mixture_delta_phi_min(coeffs):
    return 1.0 / mixture_mean_photons(coeffs)

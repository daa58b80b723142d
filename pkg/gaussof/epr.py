"""
Generalized EPR correlations and the entanglement of formation driver

Entanglement is measured in ebits (base-2 entropy) throughout.
"""
import logging
import warnings
import numpy as np
from scipy import optimize

from .canonical import CanonicalForm, build_V0, canonical_reduce, residual_M
from .covariance import CovMat4, ppt_separability, reduce_to_standard_form, require_physical
from .errors import DivergentDualError, NotSymplecticError, OutsideEprRangeWarning, SeparableStateError, SolverError
from .tolerances import DEFAULT_TOLERANCES


log = logging.getLogger(__name__)

LN2 = np.log(2)
# x log x is taken as zero below this
XLOGX_FLOOR = 1e-300
QUARTER_PI = np.pi / 4
SIGMA_3 = np.diag([1., -1.])


def entanglement_of_squeezing(r):
    """
    Entanglement of the two-mode-squeezed vacuum |psi_r>
        E_r = cosh^2 r log2 cosh^2 r - sinh^2 r log2 sinh^2 r
    evaluated through the mean photon number N = sinh^2 r as log2(1 + N) + N log2(1 + 1/N)
    :param r: squeeze parameter >= 0
    :return: ebits
    """
    if r < 0:
        raise ValueError('Squeeze parameter must be nonnegative, got {}'.format(r))
    N = np.sinh(r) ** 2
    if N < XLOGX_FLOOR:
        return 0.0
    return float((np.log1p(N) + N * np.log1p(1 / N)) / LN2)


def _entanglement_slope(r):
    """dE_r/dr = log2(1 + 1/N) sinh 2r"""
    N = np.sinh(r) ** 2
    return np.log1p(1 / N) / LN2 * np.sinh(2 * r)


def squeezing_of_entanglement(ebits):
    """
    Inverse of entanglement_of_squeezing: bracketing root search followed by a Newton polish
    :param ebits: target entanglement >= 0
    :return: r
    """
    if ebits < 0:
        raise ValueError('Entanglement must be nonnegative, got {}'.format(ebits))
    if ebits == 0:
        return 0.0
    r_hi = 1.0
    while entanglement_of_squeezing(r_hi) < ebits:
        r_hi *= 2

    def excess(r):
        return entanglement_of_squeezing(r) - ebits

    r = optimize.brentq(excess, 0, r_hi, xtol=1e-15)
    if r > 0:
        r = optimize.newton(excess, r, fprime=_entanglement_slope, tol=1e-15, maxiter=20, disp=False)
    log.debug('[squeezing_of_entanglement] E={} -> r={}'.format(ebits, r))
    return float(r)


def lambda_theta_gaussian(V, theta, subtract_mean=True):
    """
    Generalized EPR correlation <x_t^2> + <p_t^2> with x_t = sin t x_A - cos t x_B and p_t = sin t p_A + cos t p_B
        sin^2 t (V11 + V22) + cos^2 t (V33 + V44) - sin 2t (V13 - V24)
    :param V: CovMat4
    :param theta: angle
    :param subtract_mean: False adds the squared first moments of x_t and p_t (raw second moments)
    """
    s, c = np.sin(theta), np.cos(theta)
    entries = V.entries
    value = (s * s * (entries[0, 0] + entries[1, 1]) + c * c * (entries[2, 2] + entries[3, 3])
             - np.sin(2 * theta) * (entries[0, 2] - entries[1, 3]))
    if not subtract_mean:
        mean = V.mean
        value += (s * mean[0] - c * mean[2]) ** 2 + (s * mean[1] + c * mean[3]) ** 2
    return float(value)


def lambda_theta_tmsv(r, theta):
    """Generalized EPR correlation of the two-mode-squeezed vacuum: cosh 2r - sin 2t sinh 2r"""
    return float(np.cosh(2 * r) - np.sin(2 * theta) * np.sinh(2 * r))


def theta_dual(r):
    """
    Angle at which |psi_r> saturates the bound Lambda_t >= cos 2t: t_r = arctan(tanh r)
    Equivalently sin 2t_r = tanh 2r and cos 2t_r = 1/cosh 2r
    """
    if r < 0:
        raise ValueError('Squeeze parameter must be nonnegative, got {}'.format(r))
    return float(np.arctan(np.tanh(r)))


def r_dual(theta):
    """
    Squeeze parameter dual to an angle: r_t = artanh(tan t), for t in [0, pi/4)
    """
    if theta < 0 or theta > QUARTER_PI:
        raise ValueError('Angle must lie in [0, pi/4], got {}'.format(theta))
    t = np.tan(theta)
    if t >= 1.0 or np.isclose(theta, QUARTER_PI, rtol=0, atol=1e-15):
        raise DivergentDualError('Dual squeeze parameter diverges at theta = pi/4', details={'theta': theta})
    return float(np.arctanh(t))


def in_epr_range(r, theta):
    """tan t >= tanh r, the range where squeezing lowers Lambda_t"""
    return bool(np.tan(theta) >= np.tanh(r) - 1e-12)


def _check_single_mode_symplectic(S, name, tol):
    S = np.asarray(S, dtype=float)
    if S.shape != (2, 2) or abs(np.linalg.det(S) - 1) > tol.symplectic * max(1.0, float(np.max(np.abs(S))) ** 2):
        raise NotSymplecticError('{} is not a 2x2 symplectic matrix'.format(name), details={'matrix': S.tolist()})
    return S


def local_squeeze_gap(r, theta, S_A, S_B, tol=DEFAULT_TOLERANCES):
    """
    Change of Lambda_t when local symplectics act on |psi_r>:
        Lambda_t(psi'_r) = 1/2 { cosh 2r [sin^2 t tr(S_A S_A^T) + cos^2 t tr(S_B S_B^T)]
                                 - sin 2t sinh 2r tr(s3 S_A s3 S_B^T) }
    minus Lambda_t(psi_r). Nonnegative whenever tan t >= tanh r; outside that range an
    OutsideEprRangeWarning is issued and negative values can occur.
    """
    S_A = _check_single_mode_symplectic(S_A, 'S_A', tol)
    S_B = _check_single_mode_symplectic(S_B, 'S_B', tol)
    if not (0 < theta <= QUARTER_PI) or not in_epr_range(r, theta):
        warnings.warn('theta={} outside the range tan(theta) >= tanh(r={}); the gap may be negative'.format(
            theta, r), OutsideEprRangeWarning)
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    C, S = np.cosh(2 * r), np.sinh(2 * r)
    local = C * (s2 * np.trace(S_A @ S_A.T) + c2 * np.trace(S_B @ S_B.T))
    cross = np.sin(2 * theta) * S * np.trace(SIGMA_3 @ S_A @ SIGMA_3 @ S_B.T)
    return float(0.5 * (local - cross) - lambda_theta_tmsv(r, theta))


class EofCertificate:
    """
    Both sides of the EOF argument for the canonical form:
    lambda_theta0 = Lambda_t0(V0) equals lambda_reference = Lambda_t0(psi_r0), which bounds the EOF from below
    if no state with less entanglement beats |psi_r0> on Lambda_t0 (conjecture_conditional);
    the residual V0 - V_psi(r0) being PSD of rank <= 2 realizes the upper bound
    """

    def __init__(self, lambda_theta0, lambda_reference, residual_min_eig, residual_rank):
        self.lambda_theta0 = float(lambda_theta0)
        self.lambda_reference = float(lambda_reference)
        self.residual_min_eig = float(residual_min_eig)
        self.residual_rank = int(residual_rank)
        self.conjecture_conditional = True

    def to_dict(self):
        return {'lambda_theta0': self.lambda_theta0, 'lambda_reference': self.lambda_reference,
                'residual_min_eig': self.residual_min_eig, 'residual_rank': self.residual_rank,
                'conjecture_conditional': self.conjecture_conditional}


class EofReport:

    def __init__(self, ebits, r0, separable, ppt, params=None, canonical=None, certificate=None, validity=None):
        self.ebits = float(ebits)
        self.r0 = float(r0)
        self.separable = bool(separable)
        self.ppt = ppt
        self.params = params
        self.canonical = canonical
        self.certificate = certificate
        self.validity = validity

    def to_dict(self):
        return {
            'ebits': self.ebits,
            'r0': self.r0,
            'separable': self.separable,
            'ppt': self.ppt.to_dict(),
            'standard_form': self.params.to_dict() if self.params is not None else None,
            'canonical': self.canonical.to_dict() if self.canonical is not None else None,
            'certificate': self.certificate.to_dict() if self.certificate is not None else None,
            'validity': self.validity.to_dict() if self.validity is not None else None,
        }


def certify(cf, tol=DEFAULT_TOLERANCES):
    """
    :param cf: CanonicalForm
    :rtype: EofCertificate
    """
    V0 = build_V0(cf)
    residual = residual_M(V0, cf.r0, tol=tol)
    return EofCertificate(lambda_theta_gaussian(V0, cf.theta0), lambda_theta_tmsv(cf.r0, cf.theta0),
                          residual.min_eigenvalue, residual.rank)


def eof(V, tol=DEFAULT_TOLERANCES):
    """
    Entanglement of formation of a two-mode Gaussian state

    PPT-separable states have EOF 0. Otherwise the state is reduced to standard form, its canonical form is
    solved and the EOF is E_r0.

    :param V: physical CovMat4
    :rtype: EofReport
    """
    if not isinstance(V, CovMat4):
        V = CovMat4(V, tol=tol)
    validity = require_physical(V, tol=tol)
    ppt = ppt_separability(V, tol=tol)
    if ppt.separable:
        log.debug('[eof] PPT separable, nu_tilde_min={}'.format(ppt.nu_tilde_min))
        return EofReport(0.0, 0.0, True, ppt, validity=validity)

    params, _ = reduce_to_standard_form(V, tol=tol)
    try:
        cf = canonical_reduce(params, tol=tol)
    except SeparableStateError:
        return EofReport(0.0, 0.0, True, ppt, params=params, validity=validity)
    except SolverError as e:
        e.details['validity'] = validity.to_dict()
        e.details['ppt'] = ppt.to_dict()
        raise
    ebits = entanglement_of_squeezing(cf.r0)
    log.debug('[eof] r0={}, ebits={}'.format(cf.r0, ebits))
    return EofReport(ebits, cf.r0, False, ppt, params=params, canonical=cf, certificate=certify(cf, tol=tol),
                     validity=validity)


def eof_of_params(params, tol=DEFAULT_TOLERANCES):
    """eof() of the standard form with alpha = beta = 1"""
    return eof(params.to_covariance(), tol=tol)


def eof_of_canonical(cf, tol=DEFAULT_TOLERANCES):
    """eof() of the canonical form's covariance matrix"""
    if not isinstance(cf, CanonicalForm):
        raise TypeError('Expected CanonicalForm, got {}'.format(type(cf).__name__))
    return eof(build_V0(cf), tol=tol)

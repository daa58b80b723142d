"""
Two-mode Gaussian covariance matrices: data model, validity checks, symplectic actions,
reduction to standard form and the PPT separability test

Conventions: hbar = 1, vacuum covariance (1/2)*identity, phase space ordering (x_A, p_A, x_B, p_B)
"""
import logging
import numpy as np
from cached_property import cached_property
from scipy import linalg

from .errors import (NotSymmetricError, NotStandardBlockForm, NotSymplecticError, DegenerateBlockError,
                     UnphysicalStateError)
from .tolerances import DEFAULT_TOLERANCES


log = logging.getLogger(__name__)

CONVENTION = 'hbar1-vacuum-half'

# symplectic form for (x_A, p_A, x_B, p_B)
OMEGA = np.array([
    [0., 1., 0., 0.],
    [-1., 0., 0., 0.],
    [0., 0., 0., 1.],
    [0., 0., -1., 0.],
])
# partial transpose on B: p_B -> -p_B
PARTIAL_TRANSPOSE = np.diag([1., 1., 1., -1.])
# exchange of the two modes
MODE_SWAP = np.array([
    [0., 0., 1., 0.],
    [0., 0., 0., 1.],
    [1., 0., 0., 0.],
    [0., 1., 0., 0.],
])
# index pairs of the x-x and p-p sub-blocks
X_INDEX = [0, 2]
P_INDEX = [1, 3]
XP_CROSS = [(0, 1), (0, 3), (2, 1), (2, 3)]


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


class CovMat4:
    """
    Covariance matrix of a two-mode Gaussian state, with optional first moments
    Values are immutable after construction
    """

    def __init__(self, entries, mean=None, tol=DEFAULT_TOLERANCES):
        """
        :param entries: 4x4 real symmetric matrix in (x_A, p_A, x_B, p_B) ordering
        :param mean: optional 4-vector of first moments, defaults to zero
        :param tol: Tolerances instance; tol.symmetry is the allowed relative asymmetry
        """
        entries = np.asarray(entries, dtype=float)
        if entries.shape != (4, 4):
            raise NotSymmetricError('Covariance matrix must be 4x4', details={'shape': entries.shape})
        if not np.all(np.isfinite(entries)):
            raise NotSymmetricError('Covariance matrix has non-finite entries')
        scale = max(1.0, float(np.max(np.abs(entries))))
        asymmetry = float(np.max(np.abs(entries - entries.T)))
        if asymmetry > tol.symmetry * scale:
            raise NotSymmetricError('Covariance matrix is not symmetric',
                                    details={'max_asymmetry': asymmetry, 'tolerance': tol.symmetry * scale})
        # drop the rounding-level asymmetry
        self.entries = _frozen((entries + entries.T) / 2)
        self.mean = _frozen(np.zeros(4) if mean is None else mean)
        if self.mean.shape != (4,):
            raise NotSymmetricError('Mean vector must have 4 entries', details={'shape': self.mean.shape})

    def __repr__(self):
        return 'CovMat4({!r})'.format(self.entries.tolist())

    @cached_property
    def symplectic_eigenvalues(self):
        return symplectic_eigenvalues(self.entries)

    def with_mean(self, mean):
        return CovMat4(self.entries, mean=mean)

    def to_dict(self):
        return {'matrix': self.entries.tolist(), 'mean': self.mean.tolist(), 'convention': CONVENTION}


class StandardFormParams:
    """
    The (n, m, k_x, k_p) of the standard form, local scalings stripped (alpha = beta = 1)
    k_p enters the covariance with a minus sign; k_p < 0 means both correlations carry the same sign
    """

    def __init__(self, n, m, k_x, k_p, modes_swapped=False, tol=DEFAULT_TOLERANCES):
        self.n = float(n)
        self.m = float(m)
        self.k_x = float(k_x)
        self.k_p = float(k_p)
        self.modes_swapped = bool(modes_swapped)
        problems = []
        if self.n < self.m - tol.physical:
            problems.append('n < m')
        if self.m < 1 - tol.physical:
            problems.append('m < 1')
        if self.k_x < -tol.physical:
            problems.append('k_x < 0')
        if self.k_x < self.k_p - tol.physical:
            problems.append('k_x < k_p')
        if problems:
            raise UnphysicalStateError('Invalid standard form parameters', details={
                'params': self.to_dict(), 'violations': problems})
        report = validate(self.to_covariance(), tol=tol)
        if not report.is_physical:
            raise UnphysicalStateError('Standard form parameters describe an unphysical state', details={
                'params': self.to_dict(), 'validity': report.to_dict()})

    @property
    def same_sign(self):
        """True if x and p correlations share a sign (always separable)"""
        return self.k_p < 0

    @property
    def is_symmetric(self):
        return np.isclose(self.n, self.m, rtol=0, atol=1e-12)

    @property
    def equal_k(self):
        return np.isclose(self.k_x, self.k_p, rtol=0, atol=1e-12)

    def to_covariance(self, alpha=1.0, beta=1.0):
        """
        Covariance matrix of the standard form with local scale parameters alpha, beta
        :rtype: CovMat4
        """
        n, m, k_x, k_p = self.n, self.m, self.k_x, self.k_p
        a, b = float(alpha), float(beta)
        return CovMat4(0.5 * np.array([
            [a * b * n, 0, b * k_x, 0],
            [0, n / (a * b), 0, -k_p / b],
            [b * k_x, 0, b * m / a, 0],
            [0, -k_p / b, 0, a * m / b],
        ]))

    def as_tuple(self):
        return self.n, self.m, self.k_x, self.k_p

    def to_dict(self):
        return {'n': self.n, 'm': self.m, 'k_x': self.k_x, 'k_p': self.k_p, 'modes_swapped': self.modes_swapped}

    def __repr__(self):
        return 'StandardFormParams(n={!r}, m={!r}, k_x={!r}, k_p={!r})'.format(*self.as_tuple())


class LocalScalePair:
    """
    Local scale freedom (alpha, beta) of the standard form
    Equivalent per-mode squeeze factors: lambda_A = sqrt(alpha*beta), lambda_B = sqrt(beta/alpha)
    """

    def __init__(self, alpha, beta):
        if not (alpha > 0 and beta > 0):
            raise ValueError('Scale parameters must be positive, got alpha={}, beta={}'.format(alpha, beta))
        self.alpha = float(alpha)
        self.beta = float(beta)

    @property
    def lambda_a(self):
        return np.sqrt(self.alpha * self.beta)

    @property
    def lambda_b(self):
        return np.sqrt(self.beta / self.alpha)

    def matrix(self):
        """
        :return: 4x4 diagonal local symplectic diag(lambda_A, 1/lambda_A, lambda_B, 1/lambda_B)
        """
        return np.diag([self.lambda_a, 1 / self.lambda_a, self.lambda_b, 1 / self.lambda_b])

    def inverse(self):
        return LocalScalePair(1 / self.alpha, 1 / self.beta)

    def apply(self, V):
        return apply_symplectic(V, self.matrix())


class BlockPair:
    """
    x-x and p-p blocks of a covariance matrix without x-p correlations
    """

    def __init__(self, X, P):
        self.X = _frozen(X)
        self.P = _frozen(P)

    def to_covariance(self):
        V = np.zeros((4, 4))
        V[np.ix_(X_INDEX, X_INDEX)] = self.X
        V[np.ix_(P_INDEX, P_INDEX)] = self.P
        return CovMat4(V)


class ValidityReport:

    def __init__(self, symplectic_eigs, is_physical, is_pure):
        self.symplectic_eigs = tuple(float(x) for x in symplectic_eigs)
        self.is_physical = bool(is_physical)
        self.is_pure = bool(is_pure)

    def to_dict(self):
        return {'symplectic_eigs': list(self.symplectic_eigs), 'is_physical': self.is_physical,
                'is_pure': self.is_pure}


class PptReport:

    def __init__(self, nu_tilde_min, separable):
        self.nu_tilde_min = float(nu_tilde_min)
        self.separable = bool(separable)

    @property
    def log_negativity(self):
        """Logarithmic negativity in ebits, zero for PPT states"""
        return max(0.0, -np.log2(2 * self.nu_tilde_min))

    def to_dict(self):
        return {'nu_tilde_min': self.nu_tilde_min, 'separable': self.separable,
                'log_negativity': self.log_negativity}


def _entries(V):
    return V.entries if isinstance(V, CovMat4) else np.asarray(V, dtype=float)


def vacuum():
    return CovMat4(0.5 * np.eye(4))


def tmsv_covariance(r):
    """
    Covariance matrix of the two-mode-squeezed vacuum with squeeze parameter r
    :rtype: CovMat4
    """
    C, S = np.cosh(2 * r), np.sinh(2 * r)
    return CovMat4(0.5 * np.array([
        [C, 0, S, 0],
        [0, C, 0, -S],
        [S, 0, C, 0],
        [0, -S, 0, C],
    ]))


def symplectic_eigenvalues(V):
    """
    Symplectic eigenvalues (moduli of the eigenvalues of i*Omega*V), ascending
    Positive definite input goes through the Hermitian form i L^T Omega L with V = L L^T
    :param V: CovMat4 or 4x4 array
    :return: np.array of the two symplectic eigenvalues
    """
    V = _entries(V)
    try:
        L = linalg.cholesky(V, lower=True)
        eigs = np.abs(linalg.eigvalsh(1j * (L.T @ OMEGA @ L)))
    except linalg.LinAlgError:
        eigs = np.abs(np.linalg.eigvals(1j * OMEGA @ V))
    eigs = np.sort(eigs)
    # eigenvalues come in +/- pairs
    return np.array([eigs[0:2].mean(), eigs[2:4].mean()])


def validate(V, tol=DEFAULT_TOLERANCES):
    """
    Uncertainty-principle check of a covariance matrix
    :param V: CovMat4 (or 4x4 array, checked for symmetry)
    :return: ValidityReport
    """
    if not isinstance(V, CovMat4):
        V = CovMat4(V, tol=tol)
    eigs = V.symplectic_eigenvalues
    is_physical = eigs[0] >= 0.5 - tol.physical
    is_pure = bool(np.all(np.abs(eigs - 0.5) <= tol.physical))
    return ValidityReport(eigs, is_physical, is_pure)


def require_physical(V, tol=DEFAULT_TOLERANCES):
    """
    Raise UnphysicalStateError unless V passes validate()
    :return: ValidityReport
    """
    report = validate(V, tol=tol)
    if not report.is_physical:
        raise UnphysicalStateError('Covariance matrix violates the uncertainty principle',
                                   details=report.to_dict())
    return report


def blocks(V, tol=DEFAULT_TOLERANCES):
    """
    Split a covariance matrix without x-p correlations into its X and P blocks
    :rtype: BlockPair
    """
    entries = _entries(V)
    coupling = max(abs(entries[i, j]) for i, j in XP_CROSS)
    if coupling > tol.symmetry * max(1.0, float(np.max(np.abs(entries)))):
        raise NotStandardBlockForm('Covariance matrix has x-p correlations', details={'max_coupling': coupling})
    return BlockPair(entries[np.ix_(X_INDEX, X_INDEX)], entries[np.ix_(P_INDEX, P_INDEX)])


def is_symplectic(S, tol=DEFAULT_TOLERANCES):
    S = np.asarray(S, dtype=float)
    deviation = np.max(np.abs(S.T @ OMEGA @ S - OMEGA))
    return deviation <= tol.symplectic * max(1.0, float(np.max(np.abs(S))) ** 2)


def apply_symplectic(V, S, tol=DEFAULT_TOLERANCES):
    """
    Congruence action V -> S V S^T of a symplectic map; the mean goes to S*mean
    :param V: CovMat4
    :param S: 4x4 symplectic matrix
    :rtype: CovMat4
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (4, 4) or not is_symplectic(S, tol=tol):
        raise NotSymplecticError('Matrix is not symplectic', details={'matrix': S.tolist()})
    if not isinstance(V, CovMat4):
        V = CovMat4(V, tol=tol)
    return CovMat4(S @ V.entries @ S.T, mean=S @ V.mean)


def two_mode_squeeze_matrix(r):
    """
    Phase space representation of the two-mode squeeze U(r): x sector mixes with +sinh r, p sector with -sinh r
    Acting on the vacuum it produces the two-mode-squeezed vacuum covariance
    """
    ch, sh = np.cosh(r), np.sinh(r)
    return np.array([
        [ch, 0, sh, 0],
        [0, ch, 0, -sh],
        [sh, 0, ch, 0],
        [0, -sh, 0, ch],
    ])


def rotation(phi):
    """Single-mode phase space rotation (2x2)"""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def single_mode_squeeze(gamma):
    """Single-mode squeeze diag(e^gamma, e^-gamma) (2x2)"""
    return np.diag([np.exp(gamma), np.exp(-gamma)])


def beam_splitter(phi):
    """Passive two-mode mixing with angle phi"""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([
        [c, 0, s, 0],
        [0, c, 0, s],
        [-s, 0, c, 0],
        [0, -s, 0, c],
    ])


def local_symplectic(S_A, S_B):
    """
    Block-diagonal local symplectic S_A (+) S_B
    :param S_A: 2x2 matrix with unit determinant acting on mode A
    :param S_B: 2x2 matrix with unit determinant acting on mode B
    """
    return linalg.block_diag(np.asarray(S_A, dtype=float), np.asarray(S_B, dtype=float))


def random_local_symplectic(rng, gamma_max=3.0):
    """
    Random S_A (+) S_B, each factor a rotation-squeeze-rotation with squeeze |gamma| <= gamma_max
    :param rng: np.random.Generator
    """
    factors = []
    for _ in range(2):
        phi1, phi2 = rng.uniform(0, 2 * np.pi, size=2)
        gamma = rng.uniform(-gamma_max, gamma_max)
        factors.append(rotation(phi1) @ single_mode_squeeze(gamma) @ rotation(phi2))
    return local_symplectic(*factors)


def random_physical_state(rng, max_squeeze=1.2, max_thermal=1.5, gamma_max=1.0):
    """
    Random mixed two-mode Gaussian state built from its Williamson form
    V = L1 B(phi) S(r) L2 diag(nu1, nu1, nu2, nu2) (...)^T
    :param rng: np.random.Generator
    :rtype: CovMat4
    """
    nu = 0.5 + rng.uniform(0, max_thermal, size=2)
    D = np.diag([nu[0], nu[0], nu[1], nu[1]])
    S = (random_local_symplectic(rng, gamma_max) @ beam_splitter(rng.uniform(0, np.pi))
         @ two_mode_squeeze_matrix(rng.uniform(0, max_squeeze)) @ random_local_symplectic(rng, gamma_max))
    return CovMat4(S @ D @ S.T)


def _williamson_factor(A):
    """
    Symplectic T with T A T^T = sqrt(det A) * identity for a positive 2x2 block A
    """
    w, Q = linalg.eigh(A)
    return np.sqrt(np.sqrt(w[0] * w[1])) * (Q @ np.diag(w ** -0.5) @ Q.T)


def reduce_to_standard_form(V, tol=DEFAULT_TOLERANCES):
    """
    Reduce a covariance matrix to the standard form (n, m, k_x, k_p) by local symplectics
    Local blocks are brought to multiples of the identity, then local rotations diagonalize the correlation block
    with k_x >= |k_p|. If n < m the modes are exchanged (reported as modes_swapped).
    :param V: physical CovMat4
    :return: (StandardFormParams, T) where T is the 4x4 symplectic with T V T^T equal to the standard form
    """
    if not isinstance(V, CovMat4):
        V = CovMat4(V, tol=tol)
    require_physical(V, tol=tol)
    entries = V.entries
    A, B, C = entries[:2, :2], entries[2:, 2:], entries[:2, 2:]
    det_a, det_b = np.linalg.det(A), np.linalg.det(B)
    if det_a <= tol.physical or det_b <= tol.physical:
        raise DegenerateBlockError('Local block is numerically singular', details={'det_A': det_a, 'det_B': det_b})

    T_A, T_B = _williamson_factor(A), _williamson_factor(B)
    U, d, Wt = linalg.svd(T_A @ C @ T_B.T)
    W = Wt.T
    d = d.copy()
    # keep both rotations proper; a reflection flips the sign of the second singular value
    if np.linalg.det(U) < 0:
        U[:, 1] *= -1
        d[1] *= -1
    if np.linalg.det(W) < 0:
        W[:, 1] *= -1
        d[1] *= -1

    T = local_symplectic(U.T @ T_A, W.T @ T_B)
    n, m = 2 * np.sqrt(det_a), 2 * np.sqrt(det_b)
    k_x, k_p = 2 * d[0], -2 * d[1]
    modes_swapped = n < m
    if modes_swapped:
        T = MODE_SWAP @ T
        n, m = m, n
    log.debug('[reduce_to_standard_form] n={}, m={}, k_x={}, k_p={}, swapped={}'.format(n, m, k_x, k_p, modes_swapped))
    if k_p < 0:
        log.debug('[reduce_to_standard_form] same-sign correlations (k_p={}); state is separable'.format(k_p))
    return StandardFormParams(n, m, k_x, k_p, modes_swapped=modes_swapped, tol=tol), T


def ppt_separability(V, tol=DEFAULT_TOLERANCES):
    """
    PPT test: flip p_B and compare the smallest symplectic eigenvalue with 1/2
    Necessary and sufficient for separability of two-mode Gaussian states
    :rtype: PptReport
    """
    entries = _entries(V)
    flipped = PARTIAL_TRANSPOSE @ entries @ PARTIAL_TRANSPOSE
    nu_min = symplectic_eigenvalues(flipped)[0]
    return PptReport(nu_min, nu_min >= 0.5 - tol.physical)


def logarithmic_negativity(V, tol=DEFAULT_TOLERANCES):
    """max(0, -log2(2 nu_tilde_min)) in ebits"""
    return ppt_separability(V, tol=tol).log_negativity


def local_scaling(alpha, beta):
    """
    :return: 4x4 local symplectic diag(lambda_A, 1/lambda_A, lambda_B, 1/lambda_B) of the scale pair (alpha, beta)
    """
    return LocalScalePair(alpha, beta).matrix()


def invert_scaling(pair):
    return pair.inverse()


def standard_form_matrix(params, alpha=1.0, beta=1.0):
    """
    :param params: StandardFormParams
    :rtype: CovMat4
    """
    return params.to_covariance(alpha=alpha, beta=beta)

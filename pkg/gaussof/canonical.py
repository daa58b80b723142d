"""
Canonical form of a two-mode covariance matrix

V0 = V_psi(r0) + (M_X (+) M_P), where M_X = (u/2) w w^T and M_P = (v/2) w' w'^T with w = (cos t0, sin t0),
w' = (cos t0, -sin t0). The squeeze parameter r0 of the canonical form fixes the entanglement of formation.
"""
import logging
import numpy as np
from cached_property import cached_property
from scipy import optimize

from .covariance import (CovMat4, LocalScalePair, StandardFormParams, blocks, ppt_separability, tmsv_covariance,
                         validate)
from .errors import ConstraintViolated, NegativeResidual, NoRootBracketed, SeparableStateError
from .tolerances import DEFAULT_TOLERANCES


log = logging.getLogger(__name__)

QUARTER_PI = np.pi / 4
# resolution of the r scan for the first feasible squeeze at fixed alpha
R_GRID_POINTS = 48
# resolution of the alpha pre-scan for sign changes of theta' - theta
ALPHA_GRID_POINTS = 64
# root finding tolerance on r
R_XTOL = 1e-14
# blocks with trace below this count as absent when reading theta0
BLOCK_TRACE_FLOOR = 1e-10
# largest accepted distance between r0 and the roots of the determinant relations
BRANCH_AGREEMENT = 1e-6
# relative shortfall below a double root still read as touching it
DOUBLE_ROOT_SLACK = 1e-9


class CanonicalForm:
    """
    Canonical parameters (r0, theta0, u, v) plus the local scale pair (alpha0, beta0) that realizes them
    on the standard form the solver started from

    The local rotation R_A(pi/2) (+) R_B(-pi/2) exchanges the X and P blocks, so (r0, theta0, u, v) and
    (r0, theta0, v, u) describe the same state. With k_x >= k_p on the standard form, canonical_reduce returns u >= v.
    """

    def __init__(self, r0, theta0, u, v, alpha0=1.0, beta0=1.0, pure=False):
        if r0 < -1e-12:
            raise ValueError('Canonical squeeze parameter must be nonnegative, got {}'.format(r0))
        if u < -1e-9 or v < -1e-9:
            raise ValueError('Canonical weights u, v must be nonnegative, got u={}, v={}'.format(u, v))
        if not 0 <= theta0 <= QUARTER_PI + 1e-12:
            raise ValueError('Canonical angle must lie in (0, pi/4], got {}'.format(theta0))
        self.r0 = max(float(r0), 0.0)
        self.theta0 = min(float(theta0), QUARTER_PI)
        self.u = max(float(u), 0.0)
        self.v = max(float(v), 0.0)
        self.alpha0 = float(alpha0)
        self.beta0 = float(beta0)
        self.pure = bool(pure)

    @property
    def scales(self):
        return LocalScalePair(self.alpha0, self.beta0)

    @property
    def constraint_slack(self):
        """tan(theta0) - tanh(r0); nonnegative for the smaller-squeeze solution"""
        return np.tan(self.theta0) - np.tanh(self.r0)

    @cached_property
    def covariance(self):
        return build_V0(self)

    def as_tuple(self):
        return self.r0, self.theta0, self.u, self.v

    def to_dict(self):
        return {'r0': self.r0, 'theta0': self.theta0, 'u': self.u, 'v': self.v,
                'alpha0': self.alpha0, 'beta0': self.beta0, 'pure': self.pure}

    def __repr__(self):
        return 'CanonicalForm(r0={!r}, theta0={!r}, u={!r}, v={!r})'.format(*self.as_tuple())


class ResidualM:
    """
    Residual M = V0 - V_psi(r0) with its eigen-decomposition and the canonical data read back from it
    """

    def __init__(self, M, eigenvalues, eigenvectors, rank, u, v, theta0):
        self.M = M
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        self.rank = int(rank)
        self.u = float(u)
        self.v = float(v)
        self.theta0 = float(theta0)

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[-1])

    @property
    def range_eigenvalues(self):
        return self.eigenvalues[:self.rank]

    @property
    def range_basis(self):
        """Orthonormal eigenvectors spanning range(M), as columns"""
        return self.eigenvectors[:, :self.rank]

    def to_dict(self):
        return {'rank': self.rank, 'min_eigenvalue': self.min_eigenvalue, 'u': self.u, 'v': self.v,
                'theta0': self.theta0, 'eigenvalues': self.eigenvalues.tolist()}


class ClosedFormSolution:
    """r0 and realizing scales from one of the closed-form special cases"""

    def __init__(self, r0, alpha=1.0, beta=1.0, separable=False):
        self.r0 = float(r0)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.separable = bool(separable)

    def to_dict(self):
        return {'r0': self.r0, 'alpha': self.alpha, 'beta': self.beta, 'separable': self.separable}


class FeasibilityReport:

    def __init__(self, r, min_eig_found, feasible, local):
        self.r = float(r)
        self.min_eig_found = float(min_eig_found)
        self.feasible = bool(feasible)
        self.local = local

    def to_dict(self):
        return {'r': self.r, 'min_eig_found': self.min_eig_found, 'feasible': self.feasible}


def _largest_generalized_eig(a11, a12, a22, b11, b12, b22):
    """
    Largest mu with det(A - mu*B) = 0 for 2x2 symmetric A and positive definite B (entries may be arrays)
    """
    det_a = a11 * a22 - a12 ** 2
    det_b = b11 * b22 - b12 ** 2
    q = a11 * b22 + a22 * b11 - 2 * a12 * b12
    disc = np.maximum(q ** 2 - 4 * det_a * det_b, 0.0)
    return (q + np.sqrt(disc)) / (2 * det_b)


def _half_angle(m11, m12, m22):
    """Angle t of the range vector (cos t, sin t) of a rank-1 PSD 2x2 matrix"""
    return 0.5 * np.arctan2(2 * m12, m11 - m22)


def _smaller_squeeze_root(a, b, c):
    """
    Smaller r solving a*cosh(2r) - b*sinh(2r) = c, for a > |b|
    The left side equals sqrt(a^2 - b^2) * cosh(2r - y) with tanh(y) = b/a
    :return: the root (possibly negative) or None if there is no real solution
    """
    norm = np.sqrt(a ** 2 - b ** 2)
    if c < norm:
        return None
    y = np.arctanh(b / a)
    return 0.5 * (y - np.arccosh(c / norm))


def _tmsv_blocks(r):
    C, S = np.cosh(2 * r), np.sinh(2 * r)
    return np.array([[C, S], [S, C]]) / 2, np.array([[C, -S], [-S, C]]) / 2


def _theta_from_blocks(MX, MP):
    """
    Read (theta0, u, v) off the residual blocks; theta0 comes from the surviving block if one vanishes
    and defaults to pi/4 if both do
    """
    u, v = 2 * np.trace(MX), 2 * np.trace(MP)
    theta_x = _half_angle(MX[0, 0], MX[0, 1], MX[1, 1])
    theta_p = _half_angle(MP[0, 0], -MP[0, 1], MP[1, 1])
    if u > BLOCK_TRACE_FLOOR and v > BLOCK_TRACE_FLOOR:
        theta0 = (theta_x + theta_p) / 2
    elif u > BLOCK_TRACE_FLOOR:
        theta0 = theta_x
    elif v > BLOCK_TRACE_FLOOR:
        theta0 = theta_p
    else:
        theta0 = QUARTER_PI
    return theta0, theta_x, theta_p, u, v


class _AlphaSolution:
    """First feasible squeeze rho, its beta and the resulting blocks at fixed alpha"""

    def __init__(self, alpha, beta, rho, XG, PG):
        self.alpha = alpha
        self.beta = beta
        self.rho = rho
        self.XG = XG
        self.PG = PG
        X_psi, P_psi = _tmsv_blocks(rho)
        self.MX = XG - X_psi
        self.MP = PG - P_psi

    @property
    def theta(self):
        return _half_angle(self.MX[0, 0], self.MX[0, 1], self.MX[1, 1])

    @property
    def theta_p(self):
        return _half_angle(self.MP[0, 0], -self.MP[0, 1], self.MP[1, 1])

    @property
    def mismatch(self):
        return self.theta_p - self.theta


class _ScaleProblem:
    """
    Fixed-alpha subproblem on a standard form (n, m, k_x, k_p)

    With X_G = beta * Xh(alpha) and P_G = Ph(alpha) / beta, the blocks X_G - X_psi(r) and P_G - P_psi(r) are both
    PSD iff mu_X(r) <= beta <= 1 / mu_P(r), mu being the largest generalized eigenvalue of (block_psi, block_hat).
    The first r with mu_X * mu_P = 1 is the smallest feasible squeeze; beta = mu_X there.
    Feasibility needs cosh(2r) <= m.
    """

    def __init__(self, params, alpha):
        n, m, k_x, k_p = params.as_tuple()
        self.alpha = alpha
        self.x_hat = np.array([[alpha * n, k_x], [k_x, m / alpha]]) / 2
        self.p_hat = np.array([[n / alpha, -k_p], [-k_p, alpha * m]]) / 2
        self.r_hi = 0.5 * np.arccosh(max(m, 1.0))

    def mu_x(self, r):
        C, S = np.cosh(2 * r), np.sinh(2 * r)
        x = self.x_hat
        return _largest_generalized_eig(C / 2, S / 2, C / 2, x[0, 0], x[0, 1], x[1, 1])

    def mu_p(self, r):
        C, S = np.cosh(2 * r), np.sinh(2 * r)
        p = self.p_hat
        return _largest_generalized_eig(C / 2, -S / 2, C / 2, p[0, 0], p[0, 1], p[1, 1])

    def excess(self, r):
        return self.mu_x(r) * self.mu_p(r) - 1

    def first_feasible(self):
        """
        :return: smallest r with excess(r) <= 0, or None if no squeeze is feasible at this alpha
        """
        grid = np.linspace(0, self.r_hi, R_GRID_POINTS)
        values = self.excess(grid)
        below = np.flatnonzero(values <= 0)
        if below.size:
            i = below[0]
            if i == 0:
                return 0.0
            return optimize.brentq(self.excess, grid[i - 1], grid[i], xtol=R_XTOL)
        # narrow feasible windows can fall between grid points
        result = optimize.minimize_scalar(self.excess, bounds=(0, self.r_hi), method='bounded',
                                          options={'xatol': 1e-12})
        if result.fun > 0:
            return None
        return optimize.brentq(self.excess, 0, result.x, xtol=R_XTOL)

    def solve(self):
        rho = self.first_feasible()
        if rho is None:
            return None
        beta = float(self.mu_x(rho))
        return _AlphaSolution(self.alpha, beta, rho, beta * self.x_hat, self.p_hat / beta)


def _mismatch_at(params, alpha):
    solution = _ScaleProblem(params, alpha).solve()
    return np.nan if solution is None else solution.mismatch


def _alpha_roots(params, tol):
    """
    alpha values in [sqrt(m/n), sqrt(n/m)] where theta' - theta changes sign
    The interval is pre-scanned on a geometric grid; every sign change is bisected to tol.bracket
    """
    lo, hi = np.sqrt(params.m / params.n), np.sqrt(params.n / params.m)
    if hi - lo <= tol.bracket:
        return [1.0]
    alphas = np.geomspace(lo, hi, ALPHA_GRID_POINTS)
    mismatch = np.array([_mismatch_at(params, a) for a in alphas])
    finite = np.isfinite(mismatch)
    if not finite.any():
        raise NoRootBracketed('No feasible squeeze anywhere on the alpha interval', details={
            'params': params.to_dict(), 'alpha_interval': (lo, hi)})
    log.debug('[canonical_reduce] alpha scan: {} of {} feasible, mismatch in [{}, {}]'.format(
        np.count_nonzero(finite), len(alphas), np.nanmin(mismatch), np.nanmax(mismatch)))
    roots = []
    for i in range(len(alphas)):
        if mismatch[i] == 0:
            roots.append(alphas[i])
        elif i + 1 < len(alphas) and finite[i] and finite[i + 1] and mismatch[i] * mismatch[i + 1] < 0:
            roots.append(optimize.bisect(lambda a: _mismatch_at(params, a), alphas[i], alphas[i + 1],
                                         xtol=tol.bracket))
    if not roots:
        raise NoRootBracketed("theta' - theta does not change sign over the alpha interval", details={
            'params': params.to_dict(), 'alpha_interval': (lo, hi),
            'mismatch_at_ends': (float(mismatch[0]), float(mismatch[-1]))})
    return roots


def _squeeze_roots(a, b, c):
    """
    Both r solving a*cosh(2r) - b*sinh(2r) = c, for a > |b|; a near-double root counts as one
    :return: (smaller, larger) or () if there is no real solution
    """
    norm = np.sqrt(a ** 2 - b ** 2)
    ratio = c / norm
    if ratio < 1 - DOUBLE_ROOT_SLACK:
        return ()
    y = np.arctanh(b / a)
    spread = np.arccosh(max(ratio, 1.0))
    return 0.5 * (y - spread), 0.5 * (y + spread)


def _check_branch_agreement(solution):
    """
    With (alpha, beta) fixed, recompute r from the linearized determinant conditions
        C tr(X) - 2 S X_12 = 2 det(X) + 1/2,   C tr(P) + 2 S P_12 = 2 det(P) + 1/2
    Both blocks are singular at the solver's r, so r must be a root of each; warns otherwise
    :return: largest distance from r to the nearest root of either relation
    """
    X, P = solution.XG, solution.PG
    roots_x = _squeeze_roots(np.trace(X), 2 * X[0, 1], 2 * np.linalg.det(X) + 0.5)
    roots_p = _squeeze_roots(np.trace(P), -2 * P[0, 1], 2 * np.linalg.det(P) + 0.5)
    distances = [min(abs(solution.rho - r) for r in roots) if roots else np.inf for roots in (roots_x, roots_p)]
    disagreement = float(max(distances))
    if disagreement > BRANCH_AGREEMENT:
        log.warning('[canonical_reduce] r0={} is off the determinant roots: X relation {}, P relation {}'.format(
            solution.rho, roots_x, roots_p))
    else:
        log.debug('[canonical_reduce] branch check: r0={}, X relation roots {}, P relation roots {}'.format(
            solution.rho, roots_x, roots_p))
    return disagreement


def _pure_canonical(params):
    return CanonicalForm(0.5 * np.arccosh(params.n), QUARTER_PI, 0.0, 0.0, pure=True)


def canonical_reduce(params, tol=DEFAULT_TOLERANCES):
    """
    Canonical form of an inseparable standard form

    Outer bisection on alpha over [sqrt(m/n), sqrt(n/m)] for theta' = theta. At each alpha the first feasible
    squeeze r and beta come from the fixed-alpha subproblem. Among several alpha roots the smallest r0 is kept.

    :param params: StandardFormParams, physical and PPT-inseparable
    :rtype: CanonicalForm
    """
    covariance = params.to_covariance()
    if validate(covariance, tol=tol).is_pure:
        log.debug('[canonical_reduce] pure input, r0 = arccosh(n)/2')
        return _pure_canonical(params)
    ppt = ppt_separability(covariance, tol=tol)
    if params.same_sign or ppt.separable:
        raise SeparableStateError('Separable state has no inseparable canonical form (r0 = 0)', details={
            'params': params.to_dict(), 'ppt': ppt.to_dict()})

    solutions = [_ScaleProblem(params, a).solve() for a in _alpha_roots(params, tol)]
    solutions = [s for s in solutions if s is not None]
    if not solutions:
        raise NoRootBracketed('No feasible squeeze at the alpha roots', details={'params': params.to_dict()})
    if len(solutions) > 1:
        log.warning('[canonical_reduce] {} alpha roots with r0 candidates {}; keeping the smallest'.format(
            len(solutions), [s.rho for s in solutions]))
    best = min(solutions, key=lambda s: s.rho)

    theta0, theta_x, theta_p, u, v = _theta_from_blocks(best.MX, best.MP)
    theta0 = float(np.clip(theta0, 0.0, QUARTER_PI))
    log.debug("[canonical_reduce] alpha0={}, beta0={}, r0={}, theta={}, theta'={}, u={}, v={}".format(
        best.alpha, best.beta, best.rho, theta_x, theta_p, u, v))
    _check_branch_agreement(best)

    if np.tan(theta0) < np.tanh(best.rho) - tol.constraint:
        raise ConstraintViolated('Smaller-squeeze solution violates tan(theta0) >= tanh(r0)', details={
            'params': params.to_dict(), 'r0': best.rho, 'theta0': theta0, 'alpha0': best.alpha})
    return CanonicalForm(best.rho, theta0, max(u, 0.0), max(v, 0.0), alpha0=best.alpha, beta0=best.beta)


def canonical_symmetric(n, k_x, k_p):
    """
    Closed form for n = m: alpha = 1, beta = sqrt((n - k_p)/(n - k_x)), exp(-2 r0) = sqrt((n - k_x)(n - k_p))
    theta0 is pi/4
    :rtype: ClosedFormSolution
    """
    if not (n - k_x > 0 and n - k_p > 0):
        raise ValueError('Symmetric closed form needs n > k_x and n > k_p, got n={}, k_x={}, k_p={}'.format(
            n, k_x, k_p))
    product = (n - k_x) * (n - k_p)
    if product >= 1:
        return ClosedFormSolution(0.0, separable=True)
    return ClosedFormSolution(-0.25 * np.log(product), beta=np.sqrt((n - k_p) / (n - k_x)))


def canonical_equal_k(n, m, k, tol=DEFAULT_TOLERANCES):
    """
    Closed form for k_x = k_p = k, realized at alpha = beta = 1:
        cosh(2 eta - 2 r0) = (nm - k^2 + 1) / sqrt((n + m)^2 - 4k^2)
        exp(2 eta) = (n + m + 2k) / sqrt((n + m)^2 - 4k^2)
    :rtype: ClosedFormSolution
    """
    if (n + m) ** 2 <= 4 * k ** 2:
        raise ValueError('Equal-k closed form needs (n + m)^2 > 4k^2, got n={}, m={}, k={}'.format(n, m, k))
    ppt = ppt_separability(StandardFormParams(n, m, k, k, tol=tol).to_covariance(), tol=tol)
    r0 = _smaller_squeeze_root(n + m, 2 * k, n * m - k ** 2 + 1)
    if ppt.separable or r0 is None or r0 <= 0:
        return ClosedFormSolution(0.0, separable=True)
    return ClosedFormSolution(r0)


def build_V0(cf):
    """
    Covariance matrix of a canonical form
        V0 = 1/2 [[C + u c^2, 0, S + u cs, 0],
                  [0, C + v c^2, 0, -S - v cs],
                  [S + u cs, 0, C + u s^2, 0],
                  [0, -S - v cs, 0, C + v s^2]]
    :rtype: CovMat4
    """
    C, S = np.cosh(2 * cf.r0), np.sinh(2 * cf.r0)
    c, s = np.cos(cf.theta0), np.sin(cf.theta0)
    u, v = cf.u, cf.v
    return CovMat4(0.5 * np.array([
        [C + u * c * c, 0, S + u * c * s, 0],
        [0, C + v * c * c, 0, -S - v * c * s],
        [S + u * c * s, 0, C + u * s * s, 0],
        [0, -S - v * c * s, 0, C + v * s * s],
    ]))


def residual_M(V0, r0, tol=DEFAULT_TOLERANCES):
    """
    M = V0 - V_psi(r0), its spectrum and the (u, v, theta0) read back from its blocks
    :param V0: CovMat4 in canonical layout
    :param r0: squeeze parameter to subtract
    :rtype: ResidualM
    """
    entries = V0.entries if isinstance(V0, CovMat4) else np.asarray(V0, dtype=float)
    M = entries - tmsv_covariance(r0).entries
    w, Q = np.linalg.eigh(M)
    w, Q = w[::-1], Q[:, ::-1]
    if w[-1] < -tol.residual:
        raise NegativeResidual('V0 - V_psi(r0) is not positive semidefinite', details={
            'r0': r0, 'min_eigenvalue': float(w[-1]), 'tolerance': tol.residual})
    rank = int(np.count_nonzero(w > tol.rank))
    pair = blocks(M, tol=tol)
    theta0, theta_x, theta_p, u, v = _theta_from_blocks(pair.X, pair.P)
    if u > BLOCK_TRACE_FLOOR and v > BLOCK_TRACE_FLOOR and abs(np.tan(theta_x) - np.tan(theta_p)) > 1e-7:
        log.warning('[residual_M] X and P blocks disagree on theta0: {} vs {}'.format(theta_x, theta_p))
    return ResidualM(M, w, Q, rank, u, v, theta0)


def squeeze_transport(cf, r):
    """
    Canonical form after a two-mode squeeze by r
        r0' = r0 + r,  u' = f u,  v' = f v,  sin 2t' = (sinh 2r + cosh 2r sin 2t) / f
    with f = cosh 2r + sin 2t sinh 2r
    :rtype: CanonicalForm
    """
    if r < -cf.r0 - 1e-12:
        raise ValueError('Cannot un-squeeze below r0 = 0 (r0={}, r={})'.format(cf.r0, r))
    sin2 = np.sin(2 * cf.theta0)
    factor = np.cosh(2 * r) + sin2 * np.sinh(2 * r)
    sin2_new = (np.sinh(2 * r) + np.cosh(2 * r) * sin2) / factor
    theta_new = 0.5 * np.arcsin(np.clip(sin2_new, -1.0, 1.0))
    return CanonicalForm(cf.r0 + r, theta_new, cf.u * factor, cf.v * factor, pure=cf.pure)


def _rotations(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, s], axis=-1), np.stack([-s, c], axis=-1)], axis=-2)


def _local_batch(angles):
    """
    Local symplectics from rows (phi1_A, gamma_A, phi2_A, phi1_B, gamma_B, phi2_B)
    :return: array of shape (k, 4, 4)
    """
    angles = np.atleast_2d(angles)
    S = np.zeros((len(angles), 4, 4))
    for block, offset in ((slice(0, 2), 0), (slice(2, 4), 3)):
        phi1, gamma, phi2 = angles[:, offset], angles[:, offset + 1], angles[:, offset + 2]
        D = np.zeros((len(angles), 2, 2))
        D[:, 0, 0], D[:, 1, 1] = np.exp(gamma), np.exp(-gamma)
        S[:, block, block] = _rotations(phi1) @ D @ _rotations(phi2)
    return S


def _min_residual_eigs(V_G, V_psi, angles):
    S = _local_batch(angles)
    return np.linalg.eigvalsh(V_G - S @ V_psi @ np.swapaxes(S, 1, 2))[:, 0]


def _sample_batch(V_G, V_psi, seed_seq, size, gamma_max):
    rng = np.random.default_rng(seed_seq)
    angles = np.column_stack([
        rng.uniform(0, 2 * np.pi, size), rng.uniform(-gamma_max, gamma_max, size), rng.uniform(0, 2 * np.pi, size),
        rng.uniform(0, 2 * np.pi, size), rng.uniform(-gamma_max, gamma_max, size), rng.uniform(0, 2 * np.pi, size),
    ])
    return angles, _min_residual_eigs(V_G, V_psi, angles)


def falsify_feasibility(V_G, r, n_samples=100000, seed=0, gamma_max=3.0, batch_size=20000, polish=4,
                  tol=DEFAULT_TOLERANCES):
    """
    Sampling check of PSD feasibility: is V_G - S V_psi(r) S^T >= 0 for some local symplectic S = S_A (+) S_B?

    Local symplectics are rotation-squeeze-rotation per mode with |gamma| <= gamma_max; the identity is always
    included. The best candidates are polished by Nelder-Mead. Deterministic for a given seed.

    :param V_G: physical CovMat4
    :param r: trial squeeze parameter
    :rtype: FeasibilityReport
    """
    V_G = V_G.entries if isinstance(V_G, CovMat4) else np.asarray(V_G, dtype=float)
    V_psi = tmsv_covariance(r).entries
    sizes = [batch_size] * (n_samples // batch_size) + ([n_samples % batch_size] if n_samples % batch_size else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    all_angles, all_values = [np.zeros((1, 6))], [_min_residual_eigs(V_G, V_psi, np.zeros((1, 6)))]
    for seed_seq, size in zip(seeds, sizes):
        angles, values = _sample_batch(V_G, V_psi, seed_seq, size, gamma_max)
        all_angles.append(angles)
        all_values.append(values)
    angles, values = np.concatenate(all_angles), np.concatenate(all_values)

    best_value, best_angles = values.max(), angles[values.argmax()]
    for start in angles[np.argsort(values)[::-1][:polish]]:
        result = optimize.minimize(lambda x: -_min_residual_eigs(V_G, V_psi, x)[0], start, method='Nelder-Mead',
                                   options={'xatol': 1e-10, 'fatol': 1e-13, 'maxiter': 4000})
        if -result.fun > best_value:
            best_value, best_angles = -result.fun, result.x
    log.debug('[falsify_feasibility] r={}: best min eigenvalue {} over {} samples'.format(r, best_value, n_samples + 1))
    return FeasibilityReport(r, best_value, best_value >= -tol.residual, _local_batch(best_angles)[0])


def feasibility_boundary(V_G, r_hi=None, n_samples=20000, seed=0, steps=24, xtol=1e-4, tol=DEFAULT_TOLERANCES):
    """
    Independent estimate of r0 as the smallest r at which falsify_feasibility reports feasibility
    A coarse scan up to r_hi finds the first feasible r, then bisection on the verdict narrows it to xtol.
    :param r_hi: end of the scan; defaults to the largest r compatible with the local determinants of V_G
    :return: r
    """
    if not isinstance(V_G, CovMat4):
        V_G = CovMat4(V_G)
    if r_hi is None:
        det_min = min(np.linalg.det(V_G.entries[:2, :2]), np.linalg.det(V_G.entries[2:, 2:]))
        r_hi = 0.5 * np.arccosh(max(2 * np.sqrt(det_min), 1.0))

    def feasible(r):
        return falsify_feasibility(V_G, r, n_samples=n_samples, seed=seed, tol=tol).feasible

    if feasible(0.0):
        return 0.0
    lo = 0.0
    for r in np.linspace(0, r_hi, steps + 1)[1:]:
        if feasible(r):
            hi = r
            break
        lo = r
    else:
        raise NoRootBracketed('No feasible squeeze found up to r_hi', details={'r_hi': r_hi})
    while hi - lo > xtol:
        mid = (lo + hi) / 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    log.debug('[feasibility_boundary] r0 in [{}, {}]'.format(lo, hi))
    return hi

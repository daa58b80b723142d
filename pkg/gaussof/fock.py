"""
Truncated Fock space: the generalized EPR operator, two-mode-squeezed vacua, Schmidt entropies, squeezing and
displacement actions, and a numerical search for states beating the two-mode-squeezed vacuum on Lambda_theta

Two-mode pure states are coefficient matrices psi[n, m] = <n, m|psi>; the product basis index is n * N_B + m.
"""
import logging
import numpy as np
from cached_property import cached_property
from concurrent.futures import ThreadPoolExecutor
from scipy import linalg, optimize, sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import roots_laguerre

from .epr import QUARTER_PI, XLOGX_FLOOR, lambda_theta_tmsv, squeezing_of_entanglement
from .errors import OutsideConjectureRange, SolverError, TruncationOverflow


log = logging.getLogger(__name__)

# extra levels per mode used while applying ladder-raising unitaries
DEFAULT_BUFFER = 8
# largest norm lost to truncation before an action is refused
MAX_DEFICIT = 1e-6
DEFAULT_PROBE_DIM = 25
PENALTY_SCHEDULE = (10.0, 100.0, 1000.0)
# entanglement slack accepted as within budget
BUDGET_SLACK = 1e-6
# margins below this are counterexample candidates
MARGIN_ALERT = -1e-6
# perturbation scale of warm starts around the reference squeezed vacuum
WARM_START_NOISE = 0.1


class FockStateMatrix:
    """
    Coefficient matrix of a two-mode pure state on N_A x N_B levels
    tail_mass is the norm known to be missing from the truncation
    """

    def __init__(self, psi, tail_mass=0.0):
        self.psi = np.asarray(psi, dtype=complex)
        if self.psi.ndim != 2:
            raise ValueError('Coefficient matrix must be 2-dimensional, got shape {}'.format(self.psi.shape))
        self.tail_mass = float(tail_mass)

    @property
    def dims(self):
        return self.psi.shape

    @property
    def norm(self):
        return float(np.linalg.norm(self.psi))

    def vector(self):
        return self.psi.ravel()

    def normalized(self):
        return FockStateMatrix(self.psi / self.norm, tail_mass=self.tail_mass)

    def padded(self, dims):
        """Embed into a larger truncation"""
        N_A, N_B = dims
        if N_A < self.dims[0] or N_B < self.dims[1]:
            raise ValueError('Cannot pad {} to smaller dims {}'.format(self.dims, dims))
        psi = np.zeros((N_A, N_B), dtype=complex)
        psi[:self.dims[0], :self.dims[1]] = self.psi
        return FockStateMatrix(psi, tail_mass=self.tail_mass)

    @cached_property
    def schmidt_coefficients(self):
        return linalg.svdvals(self.psi)


class TruncatedOperator:
    """
    Hermitian operator on the N x N two-mode product basis, stored sparse
    """

    def __init__(self, matrix, theta, N):
        self.matrix = sparse.csr_matrix(matrix)
        self.theta = float(theta)
        self.N = int(N)

    @property
    def dims(self):
        return self.N, self.N

    @cached_property
    def dense(self):
        return self.matrix.toarray()


def annihilation(N):
    """Truncated single-mode annihilation operator (sparse N x N)"""
    return sparse.diags(np.sqrt(np.arange(1, N)), offsets=1, format='csr')


def _mode_operators(N_A, N_B):
    a = sparse.kron(annihilation(N_A), sparse.identity(N_B), format='csr')
    b = sparse.kron(sparse.identity(N_A), annihilation(N_B), format='csr')
    return a, b


def build_lambda_operator(theta, N):
    """
    Generalized EPR operator truncated to N levels per mode
        1 + 2 sin^2 t a^dag a + 2 cos^2 t b^dag b - sin 2t (ab + a^dag b^dag)
    The truncation is a compression of the full operator: every matrix element is exact.
    :rtype: TruncatedOperator
    """
    if N < 2:
        raise ValueError('Truncation needs N >= 2, got {}'.format(N))
    a, b = _mode_operators(N, N)
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    pair = a @ b
    matrix = (sparse.identity(N * N) + 2 * s2 * (a.T @ a) + 2 * c2 * (b.T @ b)
              - np.sin(2 * theta) * (pair + pair.T))
    return TruncatedOperator(matrix, theta, N)


def expectation(op, state):
    """<psi|op|psi> for a normalized state on the operator's truncation"""
    if state.dims != op.dims:
        raise ValueError('State dims {} do not match operator dims {}'.format(state.dims, op.dims))
    vec = state.vector()
    return float(np.real(np.vdot(vec, op.matrix @ vec)))


def tmsv_state(r, N):
    """
    Two-mode-squeezed vacuum sum_n c_n |n, n> with c_n = tanh^n r / cosh r, truncated to N levels and renormalized
    :rtype: FockStateMatrix
    """
    coefficients = np.tanh(r) ** np.arange(N) / np.cosh(r)
    tail_mass = max(0.0, 1 - float(np.sum(coefficients ** 2)))
    if tail_mass > 1e-10:
        log.debug('[tmsv_state] r={}, N={}: truncation tail {}'.format(r, N, tail_mass))
    return FockStateMatrix(np.diag(coefficients / np.linalg.norm(coefficients)), tail_mass=tail_mass)


def entanglement_entropy(state):
    """
    Entropy of either reduced state, from the Schmidt coefficients: -sum s_k^2 log2 s_k^2
    :return: ebits
    """
    p = state.schmidt_coefficients ** 2
    p = p[p > XLOGX_FLOOR]
    return float(-np.sum(p * np.log2(p)))


def _squeeze_generator(N_A, N_B):
    """a^dag b^dag - ab"""
    a, b = _mode_operators(N_A, N_B)
    pair = a @ b
    return (pair.T - pair).tocsr()


def apply_two_mode_squeeze(state, r, buffer=DEFAULT_BUFFER, max_deficit=MAX_DEFICIT):
    """
    U(r) = exp(r (a^dag b^dag - ab)) applied on the state padded by buffer levels, then truncated back
    :return: FockStateMatrix on the input dims with tail_mass the norm lost to the truncation
    """
    N_A, N_B = state.dims
    padded = state.padded((N_A + buffer, N_B + buffer))
    generator = _squeeze_generator(N_A + buffer, N_B + buffer)
    out = expm_multiply(r * generator, padded.vector()).reshape(N_A + buffer, N_B + buffer)
    kept = out[:N_A, :N_B]
    deficit = max(0.0, state.norm ** 2 - float(np.linalg.norm(kept) ** 2))
    if deficit > max_deficit:
        raise TruncationOverflow('Two-mode squeeze pushed norm beyond the truncation', details={
            'r': r, 'dims': (N_A, N_B), 'buffer': buffer, 'deficit': deficit})
    log.debug('[apply_two_mode_squeeze] r={}, dims={}, deficit={}'.format(r, (N_A, N_B), deficit))
    return FockStateMatrix(kept, tail_mass=state.tail_mass + deficit)


def displacement_operator(alpha, N):
    """Truncated exp(alpha a^dag - conj(alpha) a), unitary on the N-level space"""
    a = annihilation(N).toarray()
    return linalg.expm(alpha * a.T - np.conj(alpha) * a)


def displace(state, xi, buffer=DEFAULT_BUFFER):
    """
    Local displacement D_A(alpha_A) (x) D_B(alpha_B) with alpha = (x + i p) / sqrt(2) from xi = (x_A, p_A, x_B, p_B)
    The result lives on the buffered dims; being a local unitary it leaves the Schmidt coefficients unchanged.
    :rtype: FockStateMatrix
    """
    xi = np.asarray(xi, dtype=float)
    N_A, N_B = state.dims[0] + buffer, state.dims[1] + buffer
    padded = state.padded((N_A, N_B))
    D_A = displacement_operator((xi[0] + 1j * xi[1]) / np.sqrt(2), N_A)
    D_B = displacement_operator((xi[2] + 1j * xi[3]) / np.sqrt(2), N_B)
    return FockStateMatrix(D_A @ padded.psi @ D_B.T, tail_mass=state.tail_mass)


def quadrature_means(state):
    """
    First moments (<x_A>, <p_A>, <x_B>, <p_B>) with x = (a + a^dag) / sqrt(2), p = (a - a^dag) / (i sqrt(2))
    """
    psi = state.psi / state.norm
    N_A, N_B = state.dims
    a_mean = np.vdot(psi, annihilation(N_A) @ psi)
    b_mean = np.vdot(psi, (annihilation(N_B) @ psi.T).T)
    return np.sqrt(2) * np.array([a_mean.real, a_mean.imag, b_mean.real, b_mean.imag])


def saturating_state(phi_A, r, N=40, buffer=DEFAULT_BUFFER):
    """
    U(r) (phi_A (x) |0>): every such state attains Lambda_{t_r} = cos 2t_r = 1/cosh 2r
    :param phi_A: normalized single-mode state vector
    :rtype: FockStateMatrix
    """
    phi_A = np.asarray(phi_A, dtype=complex)
    N = max(N, len(phi_A))
    psi = np.zeros((N, N), dtype=complex)
    psi[:len(phi_A), 0] = phi_A
    return apply_two_mode_squeeze(FockStateMatrix(psi), r, buffer=buffer)


def _sector_tridiagonal(theta, N, d):
    """
    Diagonal and off-diagonal of the operator on the sector n - m = d (the operator conserves n - m)
    """
    k = np.arange(N - abs(d))
    n, m = (k + d, k) if d >= 0 else (k, k - d)
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    diagonal = 1 + 2 * s2 * n + 2 * c2 * m
    off = -np.sin(2 * theta) * np.sqrt((n[:-1] + 1) * (m[:-1] + 1))
    return diagonal, off


def lambda_sector_spectrum(theta, N, d=0, select=None):
    """
    Eigenvalues of the truncated operator on the sector n - m = d, by tridiagonal bisection
    :param select: optional (lo, hi) index range, as in scipy.linalg.eigh_tridiagonal
    """
    diagonal, off = _sector_tridiagonal(theta, N, d)
    if len(diagonal) == 1:
        return diagonal
    if select is None:
        return linalg.eigh_tridiagonal(diagonal, off, eigvals_only=True)
    return linalg.eigh_tridiagonal(diagonal, off, eigvals_only=True, select='i', select_range=select)


def min_eig_lambda(theta, N):
    """
    Smallest eigenvalue of the truncated operator, the minimum over its conserved sectors
    Never below cos 2t; non-increasing in N
    """
    if N < 4:
        raise ValueError('min_eig_lambda needs N >= 4, got {}'.format(N))
    return float(min(lambda_sector_spectrum(theta, N, d, select=(0, 0))[0] for d in range(-(N - 1), N)))


def min_eig_sequence(theta, dims):
    """
    :return: list of (N, min_eig, min_eig - cos 2t) for each N in dims
    """
    floor = np.cos(2 * theta)
    sequence = []
    for N in dims:
        value = min_eig_lambda(theta, N)
        sequence.append((N, value, value - floor))
    log.debug('[min_eig_sequence] theta={}: {}'.format(theta, sequence))
    return sequence


def laguerre_floor(N):
    """
    Truncated minimum at t = pi/4: the zero sector is the Laguerre three-term recurrence, so the minimum is the
    smallest zero of L_N
    """
    return float(roots_laguerre(N)[0][0])


def _entropy_and_gradient(Z):
    """
    Schmidt entropy of Z / |Z| and its Wirtinger gradient with respect to conj(Z)
        dE/dZ* = -(1/|Z|^2) U diag((log2 p - sum p log2 p) s) V^dag,   p = s^2 / |Z|^2
    """
    U, s, Vh = np.linalg.svd(Z, full_matrices=False)
    norm2 = np.sum(s ** 2)
    p = s ** 2 / norm2
    log_p = np.log2(np.maximum(p, XLOGX_FLOOR))
    entropy = -float(np.sum(p * log_p))
    grad = -(U * ((log_p + entropy) * s)) @ Vh / norm2
    return entropy, grad


def probe_objective(x, op, ebits_budget, mu):
    """
    Penalized objective <Lambda> + mu max(0, E - E_budget)^2 on real coordinates x = (Re z, Im z) of an
    unnormalized coefficient matrix z
    :return: (f, grad)
    """
    N = op.N
    half = N * N
    z = x[:half] + 1j * x[half:]
    norm2 = float(np.real(np.vdot(z, z)))
    Hz = op.matrix @ z
    value = float(np.real(np.vdot(z, Hz))) / norm2
    grad = (Hz - value * z) / norm2
    entropy, entropy_grad = _entropy_and_gradient(z.reshape(N, N))
    excess = max(0.0, entropy - ebits_budget)
    f = value + mu * excess ** 2
    if excess > 0:
        grad = grad + 2 * mu * excess * entropy_grad.ravel()
    return f, np.concatenate([2 * grad.real, 2 * grad.imag])


def _schmidt_parts(state):
    U, s, Vh = np.linalg.svd(state.psi, full_matrices=False)
    return U, s / np.linalg.norm(s), Vh


def _entropy_of(p):
    p = p[p > XLOGX_FLOOR]
    return float(-np.sum(p * np.log2(p)))


def restore_feasibility(state, ebits_budget):
    """
    Sharpen the Schmidt spectrum p_k -> p_k^(1+s) / sum until the entanglement is within budget
    :rtype: FockStateMatrix
    """
    U, s, Vh = _schmidt_parts(state)
    p = s ** 2
    if _entropy_of(p) <= ebits_budget + BUDGET_SLACK:
        return FockStateMatrix(state.psi / state.norm)
    def entropy_at(t):
        q = p ** (1 + t)
        return _entropy_of(q / q.sum()) - ebits_budget

    t_hi = 1.0
    while ebits_budget > 0 and entropy_at(t_hi) > 0 and t_hi < 1e6:
        t_hi *= 2
    if ebits_budget <= 0 or entropy_at(t_hi) > 0:
        # degenerate leading coefficients never sharpen below log2(degeneracy)
        sharpened = np.zeros_like(p)
        sharpened[0] = 1.0
    else:
        t = optimize.brentq(entropy_at, 0, t_hi, xtol=1e-12)
        sharpened = p ** (1 + t)
        sharpened /= sharpened.sum()
    return FockStateMatrix((U * np.sqrt(sharpened)) @ Vh)


class ProbeReport:
    """
    Outcome of a search for states with E <= E_budget and Lambda_theta below the squeezed-vacuum reference
    """

    def __init__(self, theta, ebits_budget, N, restarts, seed, best_lambda, reference_lambda, argmin_state,
                 argmin_ebits, verified_margin=None, verified_dim=None):
        self.theta = float(theta)
        self.ebits_budget = float(ebits_budget)
        self.N = int(N)
        self.restarts = int(restarts)
        self.seed = seed
        self.best_lambda = float(best_lambda)
        self.reference_lambda = float(reference_lambda)
        self.argmin_state = argmin_state
        self.argmin_ebits = float(argmin_ebits)
        self.verified_margin = verified_margin
        self.verified_dim = verified_dim

    @property
    def margin(self):
        return self.best_lambda - self.reference_lambda

    @property
    def counterexample(self):
        """A negative margin that survived re-verification on a larger truncation"""
        return self.verified_margin is not None and self.verified_margin < MARGIN_ALERT

    def to_dict(self):
        return {
            'theta': self.theta, 'ebits_budget': self.ebits_budget, 'dim': self.N, 'restarts': self.restarts,
            'seed': self.seed, 'best_lambda': self.best_lambda, 'reference_lambda': self.reference_lambda,
            'margin': self.margin, 'argmin_ebits': self.argmin_ebits, 'verified_margin': self.verified_margin,
            'verified_dim': self.verified_dim, 'counterexample': self.counterexample,
        }


def _initial_point(rng, index, N, r_budget):
    """Even restarts: Haar-like random coefficients; odd restarts: perturbed reference squeezed vacuum"""
    noise = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    if index % 2 == 0:
        z = noise
    else:
        z = tmsv_state(r_budget, N).psi + WARM_START_NOISE * noise / N
    z = z.ravel() / np.linalg.norm(z)
    return np.concatenate([z.real, z.imag])


def _state_coordinates(state):
    z = state.psi.ravel() / state.norm
    return np.concatenate([z.real, z.imag])


def _run_restart(op, ebits_budget, r_budget, seed_seq, index, start=None):
    """
    One penalized L-BFGS-B descent followed by a projection back into the budget
    :param start: optional FockStateMatrix on the operator's dims to descend from instead of a random point
    :return: (lambda, ebits, FockStateMatrix)
    """
    N = op.N
    if start is None:
        x = _initial_point(np.random.default_rng(seed_seq), index, N, r_budget)
    else:
        x = _state_coordinates(start)
    for mu in PENALTY_SCHEDULE:
        result = optimize.minimize(probe_objective, x, args=(op, ebits_budget, mu), jac=True, method='L-BFGS-B',
                                   options={'maxiter': 500, 'gtol': 1e-10, 'ftol': 1e-14})
        x = result.x
    half = N * N
    candidate = restore_feasibility(FockStateMatrix((x[:half] + 1j * x[half:]).reshape(N, N)), ebits_budget)
    value, ebits = expectation(op, candidate), entanglement_entropy(candidate)
    log.debug('[conjecture_probe] restart {}: lambda={}, E={}'.format(index, value, ebits))
    return value, ebits, candidate


def check_probe_range(theta, ebits_budget):
    """
    Raise OutsideConjectureRange unless 0 < theta <= pi/4 and tan(theta) >= tanh(r) for the budget's squeeze r
    :return: r
    """
    if ebits_budget < 0:
        raise OutsideConjectureRange('Entanglement budget must be nonnegative', details={'ebits': ebits_budget})
    if not 0 < theta <= QUARTER_PI + 1e-15:
        raise OutsideConjectureRange('theta must lie in (0, pi/4]', details={'theta': theta})
    r_budget = squeezing_of_entanglement(ebits_budget)
    if np.tan(theta) < np.tanh(r_budget) - 1e-12:
        raise OutsideConjectureRange('theta is below the dual angle of the budget: tan(theta) < tanh(r)', details={
            'theta': theta, 'ebits': ebits_budget, 'r': r_budget, 'dual_theta': float(np.arctan(np.tanh(r_budget)))})
    return r_budget


def _best_feasible(results, ebits_budget):
    """(lambda, index) of the lowest restart within budget, or None"""
    feasible = [(value, i) for i, (value, ebits, _) in enumerate(results) if ebits <= ebits_budget + BUDGET_SLACK]
    return min(feasible) if feasible else None


def _run_restarts(op, ebits_budget, r_budget, seeds, workers, starts=None):
    starts = starts or {}

    def run(index):
        return _run_restart(op, ebits_budget, r_budget, seeds[index], index, start=starts.get(index))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run, range(len(seeds))))
    return [run(i) for i in range(len(seeds))]


def reverify_candidate(state, theta, ebits_budget, N, restarts=8, seed=0, workers=1):
    """
    Re-run the search on N levels: restart 0 descends from the candidate embedded in the larger truncation,
    the others start fresh
    :return: (margin, FockStateMatrix) of the best state within budget, or (None, None) if no restart stays within it
    """
    r_budget = check_probe_range(theta, ebits_budget)
    op = build_lambda_operator(theta, N)
    reference = lambda_theta_tmsv(r_budget, theta)
    seeds = np.random.SeedSequence([seed, N]).spawn(max(restarts, 1))
    results = _run_restarts(op, ebits_budget, r_budget, seeds, workers, starts={0: state.padded((N, N))})
    best = _best_feasible(results, ebits_budget)
    if best is None:
        return None, None
    value, index = best
    log.debug('[reverify_candidate] N={}: best={}, margin={}'.format(N, value, value - reference))
    return value - reference, results[index][2]


def conjecture_probe(theta, ebits_budget, N=DEFAULT_PROBE_DIM, restarts=64, seed=0, workers=1, reverify_extra=10,
                     reverify_restarts=8):
    """
    Search for a pure state with E <= ebits_budget and Lambda_theta below that of the squeezed vacuum carrying
    exactly the budget

    Each restart minimizes the penalized objective with L-BFGS-B under the penalty continuation PENALTY_SCHEDULE,
    then sharpens its Schmidt spectrum back into the budget. Restarts use seeds spawned from `seed` and are merged by
    minimum, so results do not depend on `workers`. A margin below MARGIN_ALERT triggers reverify_candidate on
    N + reverify_extra levels with reverify_restarts restarts.

    :rtype: ProbeReport
    """
    r_budget = check_probe_range(theta, ebits_budget)
    if np.tanh(r_budget) ** (2 * N) > 1e-8:
        log.warning('[conjecture_probe] N={} truncates the reference squeezed vacuum (tail {})'.format(
            N, np.tanh(r_budget) ** (2 * N)))
    op = build_lambda_operator(theta, N)
    reference = lambda_theta_tmsv(r_budget, theta)
    results = _run_restarts(op, ebits_budget, r_budget, np.random.SeedSequence(seed).spawn(restarts), workers)

    best = _best_feasible(results, ebits_budget)
    if best is None:
        raise SolverError('No restart stayed within the entanglement budget', details={
            'theta': theta, 'ebits': ebits_budget, 'dim': N, 'restarts': restarts})
    best_value, best_index = best
    _, best_ebits, best_state = results[best_index]
    report = ProbeReport(theta, ebits_budget, N, restarts, seed, best_value, reference, best_state, best_ebits)
    if report.margin < MARGIN_ALERT:
        log.warning('[conjecture_probe] margin {} at N={}; re-verifying at N={}'.format(
            report.margin, N, N + reverify_extra))
        report.verified_margin, _ = reverify_candidate(best_state, theta, ebits_budget, N + reverify_extra,
                                                       restarts=reverify_restarts, seed=seed, workers=workers)
        report.verified_dim = N + reverify_extra
        log.warning('[conjecture_probe] re-verified margin {} at N={}'.format(report.verified_margin,
                                                                           report.verified_dim))
    log.debug('[conjecture_probe] theta={}, E={}: best={}, reference={}, margin={}'.format(
        theta, ebits_budget, best_value, reference, report.margin))
    return report

"""
Optimal decomposition of a canonical-form state: a Gaussian mixture of displaced two-mode-squeezed vacua
D(xi)|psi_r0>, xi distributed with covariance M = V0 - V_psi(r0) on range(M)
"""
import logging
import numpy as np
from concurrent.futures import ThreadPoolExecutor

from .canonical import build_V0, residual_M
from .covariance import tmsv_covariance
from .epr import entanglement_of_squeezing
from .fock import displace, entanglement_entropy, quadrature_means, tmsv_state
from .tolerances import DEFAULT_TOLERANCES


log = logging.getLogger(__name__)

SAMPLE_BATCH = 100000
SPOT_CHECK_XI = (0.7, -0.2, 0.1, 0.4)
SPOT_CHECK_DIM = 40
# largest accepted |<xi> - xi| of the displaced member
SPOT_MEAN_TOLERANCE = 1e-6


class EnsembleSpec:
    """
    Displacement distribution of the decomposition: centered Gaussian with covariance M restricted to range(M),
    normalized there. Rank 0 is a point mass at xi = 0.
    """

    def __init__(self, cf, residual):
        self.cf = cf
        self.residual = residual

    @property
    def r0(self):
        return self.cf.r0

    @property
    def M(self):
        return self.residual.M

    @property
    def rank(self):
        return self.residual.rank

    @property
    def variances(self):
        return self.residual.range_eigenvalues

    @property
    def basis(self):
        return self.residual.range_basis

    @property
    def is_point_mass(self):
        return self.rank == 0

    def to_dict(self):
        return {'r0': self.r0, 'rank': self.rank, 'variances': self.variances.tolist(),
                'basis': self.basis.T.tolist(), 'M': self.M.tolist()}


def make_ensemble(cf, tol=DEFAULT_TOLERANCES):
    """
    :param cf: CanonicalForm
    :rtype: EnsembleSpec
    """
    spec = EnsembleSpec(cf, residual_M(build_V0(cf), cf.r0, tol=tol))
    if spec.is_point_mass:
        log.debug('[make_ensemble] residual vanishes; single squeezed vacuum at r0={}'.format(cf.r0))
    else:
        log.debug('[make_ensemble] rank {} residual, variances {}'.format(spec.rank, spec.variances))
    return spec


def density(spec, xi, rtol=1e-9):
    """
    Normalized weight of displacement xi: exp(-xi^T M^+ xi / 2) / sqrt((2 pi)^k det' M) on range(M), zero off it
    A point mass reports weight 1 at the origin
    """
    xi = np.asarray(xi, dtype=float)
    scale = max(1.0, float(np.linalg.norm(xi)))
    if spec.is_point_mass:
        return 1.0 if np.linalg.norm(xi) <= rtol else 0.0
    coordinates = spec.basis.T @ xi
    if np.linalg.norm(xi - spec.basis @ coordinates) > rtol * scale:
        return 0.0
    variances = spec.variances
    exponent = -0.5 * np.sum(coordinates ** 2 / variances)
    return float(np.exp(exponent) / np.sqrt((2 * np.pi) ** spec.rank * np.prod(variances)))


def _sample_batch(spec, seed_seq, size):
    rng = np.random.default_rng(seed_seq)
    z = rng.standard_normal((size, spec.rank))
    return (z * np.sqrt(spec.variances)) @ spec.basis.T


def sample(spec, count, seed, workers=1):
    """
    Displacements xi drawn from the ensemble, as rows of a (count, 4) array
    Batches of SAMPLE_BATCH get their own spawned seeds, so the draw does not depend on `workers`
    """
    if count < 1:
        raise ValueError('count must be at least 1, got {}'.format(count))
    if spec.is_point_mass:
        return np.zeros((count, 4))
    sizes = [SAMPLE_BATCH] * (count // SAMPLE_BATCH) + ([count % SAMPLE_BATCH] if count % SAMPLE_BATCH else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(lambda job: _sample_batch(spec, *job), zip(seeds, sizes)))
    else:
        batches = [_sample_batch(spec, seed_seq, size) for seed_seq, size in zip(seeds, sizes)]
    return np.concatenate(batches)


def standard_errors(M, count):
    """
    Standard errors of the zero-mean second-moment estimator of a Gaussian covariance M
        se_ij = sqrt((M_ii M_jj + M_ij^2) / count)
    """
    M = np.asarray(M, dtype=float)
    diagonal = np.diag(M)
    return np.sqrt((np.outer(diagonal, diagonal) + M ** 2) / count)


class RealizationReport:

    def __init__(self, V_hat, V0, errors, count, seed, spot_xi, spot_ebits, expected_ebits, sample_mean,
                 spot_means):
        self.V_hat = V_hat
        self.V0 = V0
        self.standard_errors = errors
        self.count = count
        self.seed = seed
        self.spot_xi = spot_xi
        self.spot_ebits = spot_ebits
        self.expected_ebits = expected_ebits
        self.sample_mean = sample_mean
        self.spot_means = spot_means

    @property
    def deviation(self):
        return self.V_hat - self.V0

    @property
    def spot_mean_error(self):
        """Largest |<xi_j> - xi_j| of the displaced member"""
        return float(np.max(np.abs(np.asarray(self.spot_means) - np.asarray(self.spot_xi, dtype=float))))

    @property
    def max_abs_dev(self):
        return float(np.max(np.abs(self.deviation)))

    @property
    def max_z_score(self):
        """Largest |deviation| in units of its standard error, over entries with nonzero error"""
        mask = self.standard_errors > 0
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.deviation[mask]) / self.standard_errors[mask]))

    def to_dict(self):
        return {
            'count': self.count, 'seed': self.seed, 'max_abs_dev': self.max_abs_dev, 'max_z_score': self.max_z_score,
            'V_hat': self.V_hat.tolist(), 'V0': self.V0.tolist(), 'sample_mean': self.sample_mean.tolist(),
            'spot_xi': list(self.spot_xi), 'spot_ebits': self.spot_ebits, 'spot_means': list(self.spot_means),
            'spot_mean_error': self.spot_mean_error, 'expected_ebits': self.expected_ebits,
        }


def verify_realization(spec, count, seed, spot_xi=SPOT_CHECK_XI, dim=SPOT_CHECK_DIM, workers=1):
    """
    Monte Carlo check that V_psi(r0) + Cov(xi) reproduces V0, plus a Fock-space check that a displaced member
    D(xi)|psi_r0> carries E_r0 and has first moments xi
    :rtype: RealizationReport
    """
    xi = sample(spec, count, seed, workers=workers)
    V_psi = tmsv_covariance(spec.r0).entries
    V_hat = V_psi + xi.T @ xi / count
    V0 = build_V0(spec.cf).entries
    member = displace(tmsv_state(spec.r0, dim), spot_xi)
    report = RealizationReport(V_hat, V0, standard_errors(spec.M, count), count, seed, spot_xi,
                               entanglement_entropy(member), entanglement_of_squeezing(spec.r0), xi.mean(axis=0),
                               quadrature_means(member))
    if report.spot_mean_error > SPOT_MEAN_TOLERANCE:
        log.warning('[verify_realization] displaced member has first moments {} instead of {}'.format(
            report.spot_means, list(spot_xi)))
    log.debug('[verify_realization] count={}, max_abs_dev={}, spot E={} vs {}'.format(
        count, report.max_abs_dev, report.spot_ebits, report.expected_ebits))
    return report

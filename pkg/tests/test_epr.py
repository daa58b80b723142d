import numpy as np
import pytest

from gaussof.canonical import CanonicalForm, canonical_reduce
from gaussof.covariance import (CovMat4, StandardFormParams, apply_symplectic, local_symplectic,
                                ppt_separability, random_local_symplectic, random_physical_state, rotation,
                                single_mode_squeeze, tmsv_covariance, vacuum)
from gaussof.epr import (QUARTER_PI, entanglement_of_squeezing, eof, eof_of_canonical, eof_of_params,
                         in_epr_range, lambda_theta_gaussian, lambda_theta_tmsv, local_squeeze_gap, r_dual,
                         squeezing_of_entanglement, theta_dual)
from gaussof.errors import DivergentDualError, OutsideEprRangeWarning


def random_single_mode(rng, gamma_max=1.0):
    return rotation(rng.uniform(0, 2 * np.pi)) @ single_mode_squeeze(rng.uniform(-gamma_max, gamma_max)) \
        @ rotation(rng.uniform(0, 2 * np.pi))


def test_entanglement_of_squeezing_at_one():
    """
    E_1 = cosh^2(1) log2 cosh^2(1) - sinh^2(1) log2 sinh^2(1)
    """
    c2, s2 = np.cosh(1.0) ** 2, np.sinh(1.0) ** 2
    assert entanglement_of_squeezing(1.0) == pytest.approx(c2 * np.log2(c2) - s2 * np.log2(s2), rel=1e-12)
    assert entanglement_of_squeezing(1.0) == pytest.approx(2.3367, abs=5e-4)


def test_entanglement_of_squeezing_edges():
    assert entanglement_of_squeezing(0.0) == 0.0
    assert entanglement_of_squeezing(1e-9) >= 0
    with pytest.raises(ValueError):
        entanglement_of_squeezing(-0.1)


def test_entanglement_is_increasing():
    values = [entanglement_of_squeezing(r) for r in np.linspace(0, 3, 61)]
    assert np.all(np.diff(values) > 0)


@pytest.mark.parametrize('r', [1e-3, 0.2, 1.0, 2.5])
def test_squeezing_of_entanglement_inverts(r):
    assert squeezing_of_entanglement(entanglement_of_squeezing(r)) == pytest.approx(r, abs=1e-8)


def test_squeezing_of_entanglement_zero():
    assert squeezing_of_entanglement(0.0) == 0.0
    with pytest.raises(ValueError):
        squeezing_of_entanglement(-1.0)


@pytest.mark.parametrize('theta', [0.1, 0.4, QUARTER_PI])
def test_lambda_of_tmsv_covariance(theta):
    assert lambda_theta_gaussian(tmsv_covariance(0.6), theta) == pytest.approx(lambda_theta_tmsv(0.6, theta))


def test_lambda_raw_moments():
    V = CovMat4(0.5 * np.eye(4), mean=[1.0, 0.0, 0.0, 0.0])
    theta = 0.3
    centered = lambda_theta_gaussian(V, theta)
    assert centered == pytest.approx(1.0)
    assert lambda_theta_gaussian(V, theta, subtract_mean=False) == pytest.approx(1.0 + np.sin(theta) ** 2)


def test_lambda_bounded_by_uncertainty():
    """
    Lambda_t >= cos 2t for any physical state
    """
    rng = np.random.default_rng(1)
    for _ in range(200):
        V = random_physical_state(rng)
        theta = rng.uniform(0, QUARTER_PI)
        assert lambda_theta_gaussian(V, theta) >= np.cos(2 * theta) - 1e-12


def test_tmsv_saturates_at_dual_angle():
    r = 0.8
    theta = theta_dual(r)
    assert np.sin(2 * theta) == pytest.approx(np.tanh(2 * r))
    assert lambda_theta_tmsv(r, theta) == pytest.approx(np.cos(2 * theta))


@pytest.mark.parametrize('r', [0.0, 0.3, 1.5])
def test_dual_round_trip(r):
    assert r_dual(theta_dual(r)) == pytest.approx(r, abs=1e-10)
    assert in_epr_range(r, theta_dual(r))


def test_dual_diverges_at_quarter_pi():
    with pytest.raises(DivergentDualError):
        r_dual(QUARTER_PI)
    with pytest.raises(ValueError):
        r_dual(1.0)


def test_gap_vanishes_for_identity():
    assert local_squeeze_gap(0.7, 0.6, np.eye(2), np.eye(2)) == pytest.approx(0, abs=1e-14)


def test_gap_matches_phase_space_action():
    rng = np.random.default_rng(4)
    r, theta = 0.5, 0.6
    S_A, S_B = random_single_mode(rng), random_single_mode(rng)
    moved = apply_symplectic(tmsv_covariance(r), local_symplectic(S_A, S_B))
    expected = lambda_theta_gaussian(moved, theta) - lambda_theta_tmsv(r, theta)
    assert local_squeeze_gap(r, theta, S_A, S_B) == pytest.approx(expected, abs=1e-12)


def test_gap_nonnegative_in_range():
    """
    Local symplectics never lower Lambda_t of |psi_r> when tan t >= tanh r
    """
    rng = np.random.default_rng(9)
    for _ in range(500):
        r = rng.uniform(0, 2)
        theta = rng.uniform(theta_dual(r), QUARTER_PI)
        gap = local_squeeze_gap(r, theta, random_single_mode(rng), random_single_mode(rng))
        assert gap >= -1e-10


def test_gap_can_be_negative_out_of_range():
    r = 1.0
    theta = theta_dual(r) / 2
    S_A = single_mode_squeeze(0.2)
    S_B = single_mode_squeeze(0.02)
    with pytest.warns(OutsideEprRangeWarning):
        gap = local_squeeze_gap(r, theta, S_A, S_B)
    assert gap < 0


def test_eof_of_tmsv():
    report = eof(tmsv_covariance(1.0))
    assert not report.separable
    assert report.r0 == pytest.approx(1.0, abs=1e-10)
    assert report.ebits == pytest.approx(entanglement_of_squeezing(1.0), abs=1e-9)


def test_eof_of_vacuum():
    report = eof(vacuum())
    assert report.separable
    assert report.ebits == 0
    assert report.canonical is None


def test_eof_of_symmetric_state():
    """
    Symmetric states: r0 = -ln(2 nu_tilde_min) / 2
    """
    V = StandardFormParams(2.0, 2.0, 1.5, 0.5).to_covariance()
    nu = ppt_separability(V).nu_tilde_min
    report = eof(V)
    assert report.r0 == pytest.approx(-0.5 * np.log(2 * nu), abs=1e-8)


def test_eof_certificate():
    report = eof(StandardFormParams(2.5, 1.5, 1.2, 0.9).to_covariance())
    certificate = report.certificate
    assert certificate.lambda_theta0 == pytest.approx(certificate.lambda_reference, abs=1e-7)
    assert certificate.residual_rank <= 2
    assert certificate.residual_min_eig >= -1e-9
    assert certificate.conjecture_conditional


def test_eof_invariant_under_local_symplectics():
    rng = np.random.default_rng(21)
    params = StandardFormParams(2.5, 1.5, 1.2, 0.9)
    reference = eof_of_params(params).ebits
    for _ in range(5):
        moved = apply_symplectic(params.to_covariance(), random_local_symplectic(rng, 1.0))
        assert eof(moved).ebits == pytest.approx(reference, abs=1e-7)


def test_eof_of_canonical_form():
    cf = CanonicalForm(0.3, 0.5, 0.8, 0.4)
    report = eof_of_canonical(cf)
    assert report.r0 == pytest.approx(0.3, abs=1e-6)
    assert report.ebits == pytest.approx(entanglement_of_squeezing(0.3), abs=1e-6)


def test_eof_of_canonical_rejects_other_types():
    with pytest.raises(TypeError):
        eof_of_canonical(tmsv_covariance(0.3))


def test_eof_matches_canonical_reduce():
    params = StandardFormParams(3.0, 2.0, 1.8, 1.8)
    assert eof_of_params(params).r0 == pytest.approx(canonical_reduce(params).r0, abs=1e-9)


def test_eof_report_serializes():
    document = eof(tmsv_covariance(0.5)).to_dict()
    assert document['separable'] is False
    assert set(document) >= {'ebits', 'r0', 'ppt', 'standard_form', 'canonical', 'certificate', 'validity'}


@pytest.mark.parametrize('theta', [0.2, 0.5, 0.7])
def test_tmsv_lambda_turns_at_dual_squeeze(theta):
    """
    Lambda_t of the squeezed vacuum decreases in r while tanh r < tan t and increases past tanh r = tan t
    """
    turn = np.arctanh(np.tan(theta))
    below = np.linspace(0, turn - 0.01, 50)
    assert np.all(np.diff([lambda_theta_tmsv(r, theta) for r in below]) < 0)
    h = 1e-6
    for r, sign in ((turn - 0.05, -1), (turn + 0.05, 1)):
        slope = (lambda_theta_tmsv(r + h, theta) - lambda_theta_tmsv(r - h, theta)) / (2 * h)
        assert np.sign(slope) == sign
    assert lambda_theta_tmsv(turn, theta) == pytest.approx(np.cos(2 * theta), abs=1e-10)

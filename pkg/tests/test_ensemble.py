import numpy as np
import pytest

from gaussof.canonical import CanonicalForm, canonical_reduce
from gaussof.covariance import StandardFormParams
from gaussof.ensemble import density, make_ensemble, sample, standard_errors, verify_realization


CANONICAL = CanonicalForm(0.3, 0.5, 0.8, 0.4)


def test_ensemble_of_canonical_form():
    spec = make_ensemble(CANONICAL)
    assert spec.rank == 2
    assert np.allclose(sorted(spec.variances), [0.2, 0.4])
    assert not spec.is_point_mass


def test_density_on_and_off_range():
    spec = make_ensemble(CANONICAL)
    c, s = np.cos(0.5), np.sin(0.5)
    peak = density(spec, np.zeros(4))
    assert peak == pytest.approx(1 / np.sqrt((2 * np.pi) ** 2 * 0.4 * 0.2))
    along = density(spec, [c, 0, s, 0])
    assert along == pytest.approx(peak * np.exp(-0.5 / 0.4))
    assert density(spec, [-s, 0, c, 0]) == 0.0


def test_point_mass():
    spec = make_ensemble(CanonicalForm(0.4, 0.7, 0.0, 0.0))
    assert spec.is_point_mass
    assert np.all(sample(spec, 10, seed=0) == 0)
    assert density(spec, np.zeros(4)) == 1.0
    assert density(spec, [0.1, 0, 0, 0]) == 0.0


def test_sample_independent_of_workers():
    spec = make_ensemble(CANONICAL)
    serial = sample(spec, 250000, seed=3)
    threaded = sample(spec, 250000, seed=3, workers=3)
    assert serial.shape == (250000, 4)
    assert np.array_equal(serial, threaded)


def test_samples_stay_in_range():
    spec = make_ensemble(CANONICAL)
    xi = sample(spec, 1000, seed=1)
    projected = xi @ spec.basis @ spec.basis.T
    assert np.allclose(projected, xi, atol=1e-12)


def test_sample_count_must_be_positive():
    with pytest.raises(ValueError):
        sample(make_ensemble(CANONICAL), 0, seed=0)


def test_standard_errors():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    se = standard_errors(M, 100)
    assert se[0, 0] == pytest.approx(np.sqrt(8.0 / 100))
    assert se[0, 1] == pytest.approx(np.sqrt(7.0 / 100))


def test_realization_reproduces_covariance():
    """
    V_psi(r0) + Cov(xi) matches V0 within sampling error, and a displaced member carries E_r0 with mean xi
    """
    spec = make_ensemble(CANONICAL)
    report = verify_realization(spec, 200000, seed=0)
    assert report.max_z_score < 5
    assert report.max_abs_dev < 0.01
    assert report.spot_ebits == pytest.approx(report.expected_ebits, abs=1e-6)
    assert report.spot_mean_error < 1e-6


def test_realization_of_solved_state():
    cf = canonical_reduce(StandardFormParams(2.5, 1.5, 1.2, 0.9))
    report = verify_realization(make_ensemble(cf), 100000, seed=5)
    assert report.max_z_score < 5
    assert report.spot_mean_error < 1e-6
    assert np.allclose(report.to_dict()['spot_means'], report.spot_xi, atol=1e-6)
    assert report.to_dict()['count'] == 100000

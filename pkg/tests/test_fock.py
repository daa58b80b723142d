import numpy as np
import pytest

from gaussof import fock
from gaussof.epr import QUARTER_PI, entanglement_of_squeezing, lambda_theta_tmsv, squeezing_of_entanglement, theta_dual
from gaussof.errors import OutsideConjectureRange, TruncationOverflow
from gaussof.fock import (FockStateMatrix, annihilation, apply_two_mode_squeeze, build_lambda_operator,
                          check_probe_range, conjecture_probe, displace, entanglement_entropy, expectation,
                          laguerre_floor, lambda_sector_spectrum, min_eig_lambda, min_eig_sequence, probe_objective,
                          quadrature_means, restore_feasibility, reverify_candidate, saturating_state, tmsv_state)


def vacuum_state(N):
    psi = np.zeros((N, N))
    psi[0, 0] = 1
    return FockStateMatrix(psi)


def test_annihilation_elements():
    a = annihilation(4).toarray()
    assert np.allclose(np.diag(a, 1), np.sqrt([1, 2, 3]))
    assert np.count_nonzero(a) == 3


def test_lambda_operator_elements():
    """
    <0,0|L|0,0> = 1 and <1,1|L|0,0> = -sin 2t
    """
    theta, N = 0.5, 5
    op = build_lambda_operator(theta, N).dense
    assert np.allclose(op, op.T)
    assert op[0, 0] == pytest.approx(1.0)
    assert op[N + 1, 0] == pytest.approx(-np.sin(2 * theta))
    assert op[N + 1, N + 1] == pytest.approx(3.0)


def test_tmsv_tail():
    assert tmsv_state(1.0, 50).tail_mass < 1e-10
    assert tmsv_state(1.0, 40).tail_mass == pytest.approx(np.tanh(1.0) ** 80, rel=1e-4)


def test_tmsv_entropy():
    assert entanglement_entropy(tmsv_state(1.0, 50)) == pytest.approx(entanglement_of_squeezing(1.0), abs=1e-8)


@pytest.mark.parametrize('theta', [0.2, 0.6, QUARTER_PI])
def test_tmsv_expectation(theta):
    value = expectation(build_lambda_operator(theta, 30), tmsv_state(0.5, 30))
    assert value == pytest.approx(lambda_theta_tmsv(0.5, theta), abs=1e-10)


def test_squeezing_vacuum():
    state = apply_two_mode_squeeze(vacuum_state(30), 0.5)
    assert np.allclose(state.psi, tmsv_state(0.5, 30).psi, atol=1e-8)


def test_squeezes_compose():
    state = apply_two_mode_squeeze(apply_two_mode_squeeze(vacuum_state(30), 0.2), 0.3)
    assert np.allclose(state.psi, tmsv_state(0.5, 30).psi, atol=1e-7)


def test_squeeze_overflow():
    with pytest.raises(TruncationOverflow):
        apply_two_mode_squeeze(vacuum_state(6), 2.0)


def test_displacement_keeps_entropy():
    state = tmsv_state(0.5, 20)
    moved = displace(state, (0.7, -0.2, 0.1, 0.4))
    assert moved.dims == (28, 28)
    assert moved.norm == pytest.approx(1.0, abs=1e-10)
    assert entanglement_entropy(moved) == pytest.approx(entanglement_entropy(state), abs=1e-10)


def test_displacement_moves_first_moments():
    xi = (0.7, -0.2, 0.1, 0.4)
    assert np.allclose(quadrature_means(tmsv_state(0.5, 20)), 0, atol=1e-12)
    assert np.allclose(quadrature_means(displace(tmsv_state(0.5, 20), xi)), xi, atol=1e-6)


def test_saturating_states():
    """
    U(r) (phi (x) |0>) sits at Lambda = cos 2t_r for any phi, and phi = |0> carries the least entanglement
    """
    r = 0.3
    theta = theta_dual(r)
    op = build_lambda_operator(theta, 30)
    vacuum_ebits = entanglement_entropy(saturating_state([1.0], r, N=30))
    assert vacuum_ebits == pytest.approx(entanglement_of_squeezing(r), abs=1e-8)
    rng = np.random.default_rng(11)
    for _ in range(50):
        size = rng.integers(1, 5)
        phi = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        state = saturating_state(phi / np.linalg.norm(phi), r, N=30)
        assert expectation(op, state) == pytest.approx(np.cos(2 * theta), abs=1e-8)
        assert entanglement_entropy(state) >= vacuum_ebits - 1e-8


def test_min_eig_at_quarter_pi_is_laguerre_zero():
    assert min_eig_lambda(QUARTER_PI, 40) == pytest.approx(laguerre_floor(40), rel=1e-10)
    assert 0 < laguerre_floor(40) < 0.05


@pytest.mark.parametrize('theta', [0.3, 0.7])
def test_min_eig_converges_to_floor(theta):
    """
    Truncated minima stay above cos 2t, do not increase with N and are within 1e-3 at N = 40
    """
    sequence = min_eig_sequence(theta, [10, 20, 30, 40])
    excesses = [excess for _, _, excess in sequence]
    values = [value for _, value, _ in sequence]
    assert min(excesses) >= -1e-12
    assert np.all(np.diff(values) <= 1e-12)
    assert excesses[-1] < 1e-3


def test_min_eig_needs_room():
    with pytest.raises(ValueError):
        min_eig_lambda(0.5, 3)


@pytest.mark.parametrize('seed', range(20))
def test_search_objective_gradient(seed):
    """
    Analytic gradient of the penalized objective against central differences
    """
    rng = np.random.default_rng(seed)
    N = 4
    op = build_lambda_operator(rng.uniform(0.1, QUARTER_PI), N)
    x = rng.standard_normal(2 * N * N)
    f, grad = probe_objective(x, op, 0.2, 10.0)
    h = 1e-6
    numeric = np.array([(probe_objective(x + h * e, op, 0.2, 10.0)[0] - probe_objective(x - h * e, op, 0.2, 10.0)[0])
                        / (2 * h) for e in np.eye(len(x))])
    assert f > expectation(op, FockStateMatrix((x[:N * N] + 1j * x[N * N:]).reshape(N, N)).normalized())
    assert np.allclose(grad, numeric, rtol=1e-5, atol=1e-6)


def test_restore_feasibility():
    state = tmsv_state(0.8, 20)
    budget = 0.5
    restored = restore_feasibility(state, budget)
    assert entanglement_entropy(restored) <= budget + 1e-6
    assert restored.norm == pytest.approx(1.0)
    product = restore_feasibility(state, 0.0)
    assert entanglement_entropy(product) == pytest.approx(0.0, abs=1e-12)


def test_restore_keeps_feasible_state():
    state = tmsv_state(0.3, 10)
    restored = restore_feasibility(state, 2.0)
    assert np.allclose(restored.psi, state.psi / state.norm)


def test_probe_range_checks():
    with pytest.raises(OutsideConjectureRange):
        check_probe_range(0.0, 1.0)
    with pytest.raises(OutsideConjectureRange):
        check_probe_range(0.1, 2.0)
    with pytest.raises(ValueError):
        check_probe_range(0.5, -1.0)
    assert check_probe_range(QUARTER_PI, entanglement_of_squeezing(0.5)) == pytest.approx(0.5)


def test_small_probe_finds_no_counterexample():
    report = conjecture_probe(QUARTER_PI, 1.0, N=8, restarts=4, seed=1)
    assert report.margin > -1e-6
    assert not report.counterexample
    assert report.argmin_ebits <= 1.0 + 1e-6


def test_probe_independent_of_workers():
    serial = conjecture_probe(0.6, 0.8, N=6, restarts=3, seed=2)
    threaded = conjecture_probe(0.6, 0.8, N=6, restarts=3, seed=2, workers=3)
    assert threaded.best_lambda == pytest.approx(serial.best_lambda, abs=1e-12)


def test_zero_budget_allows_only_product_states():
    report = conjecture_probe(0.5, 0.0, N=6, restarts=3, seed=4)
    assert report.reference_lambda == pytest.approx(1.0)
    assert report.best_lambda >= 1 - 1e-6
    assert report.argmin_ebits == pytest.approx(0.0, abs=1e-9)


def test_reverify_reoptimizes_on_larger_truncation():
    """
    An over-budget candidate beats the reference at N = 8; descending from it at N = 12 within budget does not
    """
    theta, budget = QUARTER_PI, entanglement_of_squeezing(0.5)
    candidate = tmsv_state(0.9, 8)
    assert expectation(build_lambda_operator(theta, 8), candidate) < lambda_theta_tmsv(0.5, theta)
    margin, state = reverify_candidate(candidate, theta, budget, 12, restarts=2, seed=0)
    assert state.dims == (12, 12)
    assert entanglement_entropy(state) <= budget + 1e-6
    assert margin > -1e-6


def test_alert_triggers_reverification(monkeypatch):
    """
    With the alert threshold raised every search result is re-run on the larger truncation
    """
    monkeypatch.setattr(fock, 'MARGIN_ALERT', 10.0)
    report = conjecture_probe(QUARTER_PI, 0.5, N=6, restarts=2, seed=3, reverify_extra=4, reverify_restarts=2)
    assert report.verified_dim == 10
    assert report.verified_margin is not None
    assert report.verified_margin > -1e-6
    assert report.to_dict()['verified_dim'] == 10


def test_no_alert_skips_reverification():
    report = conjecture_probe(QUARTER_PI, 0.5, N=6, restarts=2, seed=3)
    assert report.verified_margin is None
    assert not report.counterexample


GRID_BUDGETS = (0.25, 0.5, 1.0, 1.5)


def grid_cells():
    for ebits in GRID_BUDGETS:
        lowest = theta_dual(squeezing_of_entanglement(ebits))
        for theta in np.linspace(lowest + 0.02, QUARTER_PI, 4):
            yield ebits, float(theta)


@pytest.mark.slow
@pytest.mark.parametrize('ebits,theta', list(grid_cells()))
def test_no_state_beats_squeezed_vacuum_on_grid(ebits, theta):
    report = conjecture_probe(theta, ebits, N=25, restarts=64, seed=0, workers=4, reverify_extra=10)
    assert not report.counterexample


def test_sectors_cover_the_spectrum():
    """
    The operator conserves n - m; the sector spectra together make up the full spectrum
    """
    theta, N = 0.5, 6
    sectors = np.concatenate([lambda_sector_spectrum(theta, N, d) for d in range(-(N - 1), N)])
    assert len(sectors) == N * N
    assert np.allclose(np.sort(sectors), np.linalg.eigvalsh(build_lambda_operator(theta, N).dense))

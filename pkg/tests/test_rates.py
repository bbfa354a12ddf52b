import numpy as np
import pytest

from flockcert.errors import NegativeDistance
from flockcert.rates import AssumptionReport, CommunicationRate


def test_psi_examples():
    assert CommunicationRate(0.0).psi(7.3) == 1.0
    assert CommunicationRate(1.0).psi(1.0) == pytest.approx(0.5, rel=1e-15)
    assert CommunicationRate(0.25).psi(0.0) == 1.0


def test_psi_prime_examples():
    assert CommunicationRate(0.0).psi_prime(3.0) == 0.0
    assert CommunicationRate(1.0).psi_prime(1.0) == pytest.approx(-0.5, rel=1e-15)
    assert CommunicationRate(0.25).psi_prime(0.0) == 0.0


def test_negative_distance_rejected():
    rate = CommunicationRate(0.5)
    with pytest.raises(NegativeDistance):
        rate.psi(-1e-9)
    with pytest.raises(NegativeDistance):
        rate.psi_prime(np.array([0.2, -0.1]))


@pytest.mark.parametrize("beta", [0.0, 0.1, 0.25, 0.5, 1.0, 2.5])
def test_psi_bounded_and_monotone(beta):
    rate = CommunicationRate(beta)
    grid = np.logspace(-6, 6, 300)
    vals = rate.psi(grid)
    assert np.all(vals > 0.0)
    assert np.all(vals <= 1.0)
    assert np.all(np.diff(vals) <= 0.0)


@pytest.mark.parametrize("beta", [0.1, 0.3, 0.5, 1.0])
def test_psi_prime_matches_finite_difference(beta):
    rate = CommunicationRate(beta)
    h = 1e-6
    for r in np.logspace(-1, 2, 40):
        fd = (rate.psi(r + h) - rate.psi(r - h)) / (2.0 * h)
        assert rate.psi_prime(r) == pytest.approx(fd, abs=1e-8)


@pytest.mark.parametrize("beta", [0.0, 0.2, 0.5, 1.0, 3.0])
def test_log_derivative_bound(beta):
    rate = CommunicationRate(beta)
    grid = np.logspace(-6, 6, 500)
    assert np.all(np.abs(rate.psi_prime(grid)) <= rate.alpha * rate.psi(grid) + 1e-15)


def test_check_assumptions():
    assert CommunicationRate(0.3).check_assumptions() == AssumptionReport(True, True, True)
    assert CommunicationRate(0.5).check_assumptions() == AssumptionReport(True, False, True)
    assert CommunicationRate(0.0).check_assumptions() == AssumptionReport(True, True, True)


def test_alpha_and_tail_metadata():
    rate = CommunicationRate(0.2)
    assert rate.alpha == pytest.approx(0.4)
    tail = rate.tail
    assert tail is not None
    assert tail.gamma == pytest.approx(0.6)
    assert tail.R == 1.0
    # the bound the constants promise: psi(r) >= c * r^(gamma-1) for r >= R
    grid = np.linspace(1.0, 1e3, 200)
    assert np.all(rate.psi(grid) >= tail.c * grid ** (tail.gamma - 1.0) - 1e-15)
    assert CommunicationRate(0.5).tail is None


def test_beta_validation():
    with pytest.raises(ValueError):
        CommunicationRate(-0.1)

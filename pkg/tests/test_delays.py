import math

import numpy as np
import pytest

from flockcert.delays import (
    Dirac,
    Exponential,
    Linear,
    Uniform,
    parse_distribution,
)
from flockcert.errors import DivergentMoment, InvalidOrder

ALL_DISTS = [
    Dirac(0.3),
    Dirac(0.0),
    Exponential(1.0),
    Exponential(0.05),
    Uniform(0.0, 1.0),
    Uniform(0.1, 0.7),
    Linear(1.0),
    Linear(0.35),
]


def quad_oracle(dist, f, order=48, tol=1e-16):
    """Independent evaluation of int f dP by the distribution's own rule."""
    q = dist.quadrature(order, tol)
    return float(np.dot(q.weights, f(q.nodes)))


# ---------------------------------------------------------------- moments


def test_moment_closed_forms():
    assert Exponential(1.0).moment(2) == pytest.approx(2.0, rel=1e-15)
    assert Dirac(0.3).moment(0) == 1.0
    assert Linear(1.0).moment(1) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert Uniform(0.0, 1.0).moment(2) == pytest.approx(1.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=lambda d: d.literal())
@pytest.mark.parametrize("k", range(4))
def test_moment_matches_quadrature(dist, k):
    exact = dist.moment(k)
    approx = quad_oracle(dist, lambda s: s**k, order=32, tol=1e-12)
    tol = 1e-8 if isinstance(dist, Exponential) else 1e-10
    assert approx == pytest.approx(exact, rel=tol, abs=1e-300)


def test_uniform_moment_stable_for_thin_interval():
    # power-sum form must not cancel like (B^(k+1)-A^(k+1))/((k+1)(B-A)) does
    from fractions import Fraction

    a, b = 1.0, 1.0 + 1e-9
    fa, fb = Fraction(a), Fraction(b)
    d = Uniform(a, b)
    for k in (2, 3):
        exact = sum(fa**j * fb ** (k - j) for j in range(k + 1)) / (k + 1)
        assert d.moment(k) == pytest.approx(float(exact), rel=1e-15)
        naive = (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        assert abs(naive - float(exact)) > abs(d.moment(k) - float(exact))


# ------------------------------------------------------------ exp_moment


def test_exp_moment_at_zero_is_one():
    for d in ALL_DISTS:
        assert d.exp_moment(0.0) == 1.0


def test_exp_moment_examples():
    assert Exponential(1.0).exp_moment(0.5) == pytest.approx(2.0, rel=1e-14)
    assert Uniform(0.0, 1.0).exp_moment(1.0) == pytest.approx(math.e - 1.0, rel=1e-14)


def test_exp_moment_divergence():
    with pytest.raises(DivergentMoment):
        Exponential(1.0).exp_moment(1.0)
    with pytest.raises(DivergentMoment):
        Exponential(2.0).exp_moment(0.51)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=lambda d: d.literal())
def test_exp_moment_jensen_and_monotone(dist):
    sup = dist.mgf_domain_sup()
    kmax = 0.8 * sup if math.isfinite(sup) else 2.0 / max(dist.truncation_horizon(1e-12), 0.3)
    grid = np.linspace(0.0, kmax, 25)
    vals = [dist.exp_moment(k) for k in grid]
    assert all(v >= 1.0 for v in vals)
    if dist.moment(1) > 0.0:
        assert all(b > a for a, b in zip(vals, vals[1:]))


# -------------------------------------------------------------- k_moment


def test_k_moment_examples():
    assert Exponential(1.0).k_moment(0.5) == pytest.approx(6.0, rel=1e-14)
    # oracle: quadrature of the defining integral int s (e^s - 1) dP over
    # the triangular density, which integrates to 17/3 - 2e
    lin = Linear(1.0)
    oracle = quad_oracle(lin, lambda s: s * np.expm1(s))
    assert oracle == pytest.approx(17.0 / 3.0 - 2.0 * math.e, rel=1e-13)
    assert lin.k_moment(1.0) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=lambda d: d.literal())
def test_k_moment_limit_is_second_moment(dist):
    m2 = dist.moment(2)
    assert dist.k_moment(0.0) == m2
    assert dist.k_moment(1e-11) == pytest.approx(m2, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=lambda d: d.literal())
def test_k_moment_nondecreasing(dist):
    sup = dist.mgf_domain_sup()
    kmax = 0.8 * sup if math.isfinite(sup) else 2.0 / max(dist.truncation_horizon(1e-12), 0.3)
    grid = np.linspace(0.0, kmax, 25)
    vals = [dist.k_moment(k) for k in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize(
    "dist", [d for d in ALL_DISTS if d.moment(1) > 0], ids=lambda d: d.literal()
)
def test_mexp_and_k_match_defining_integrals(dist):
    sup = dist.mgf_domain_sup()
    if math.isfinite(sup):
        # truncated rule: tail error ~ tol^(1 - kappa*mu), so stay below 0.38/mu
        kmax = 0.38 * sup
    else:
        kmax = 2.0 / dist.truncation_horizon(1e-12)
    for kappa in np.linspace(1e-6, kmax, 20):
        mexp = quad_oracle(dist, lambda s: np.exp(kappa * s))
        kmom = quad_oracle(dist, lambda s: s * np.expm1(kappa * s) / kappa)
        assert dist.exp_moment(kappa) == pytest.approx(mexp, rel=1e-8)
        assert dist.k_moment(kappa) == pytest.approx(kmom, rel=1e-8)


def test_series_closed_form_crossover_is_smooth():
    # values straddling the small-argument series cutoff must agree
    for dist in [Uniform(0.1, 0.7), Linear(0.9)]:
        h = dist.truncation_horizon()
        lo, hi = 0.2499 / h, 0.2501 / h
        for f in [dist.exp_moment, dist.k_moment]:
            slope = (f(hi) - f(lo)) / (hi - lo)
            mid = (f(hi) + f(lo)) / 2.0
            # crude smoothness probe: secant slope bounded by value scale
            assert abs(slope) < 1e4 * abs(mid)
            assert f(hi) > f(lo)


# ------------------------------------------------------------- quadrature


def test_quadrature_dirac_point_mass():
    q = Dirac(0.2).quadrature(7)
    assert q.nodes.tolist() == [0.2]
    assert q.weights.tolist() == [1.0]
    assert q.truncation_tail_mass == 0.0


def test_quadrature_uniform_second_moment():
    q = Uniform(0.0, 1.0).quadrature(8)
    assert abs(float(np.dot(q.weights, q.nodes**2)) - 1.0 / 3.0) <= 1e-12


def test_quadrature_exponential_third_moment():
    q = Exponential(1.0).quadrature(32, 1e-12)
    assert float(np.dot(q.weights, q.nodes**3)) == pytest.approx(6.0, rel=1e-8)


@pytest.mark.parametrize("dist", ALL_DISTS, ids=lambda d: d.literal())
def test_quadrature_structure(dist):
    q = dist.quadrature(16, 1e-12)
    assert (q.weights > 0.0).all()
    assert 1.0 - q.truncation_tail_mass - 1e-14 <= q.weights.sum() <= 1.0 + 1e-14
    assert (np.diff(q.nodes) > 0.0).all() or len(q.nodes) == 1
    assert q.nodes.min() >= 0.0
    assert q.nodes.max() <= dist.truncation_horizon(1e-12) + 1e-14
    expected_tail = 1e-12 if isinstance(dist, Exponential) else 0.0
    assert q.truncation_tail_mass == expected_tail


def test_quadrature_invalid_order():
    with pytest.raises(InvalidOrder):
        Uniform(0.0, 1.0).quadrature(0)
    with pytest.raises(InvalidOrder):
        Exponential(1.0).quadrature(-3)


def test_exponential_rule_scales_with_mu():
    qa = Exponential(0.03).quadrature(24, 1e-12)
    qb = Exponential(1.0).quadrature(24, 1e-12)
    assert np.allclose(qa.nodes, 0.03 * qb.nodes, rtol=1e-13)
    assert np.allclose(qa.weights, qb.weights, rtol=1e-13)


# ------------------------------------------------------ truncation_horizon


def test_truncation_horizon():
    assert Uniform(0.1, 0.3).truncation_horizon(0.5) == 0.3
    assert Dirac(0.0).truncation_horizon(1e-12) == 0.0
    assert Exponential(2.0).truncation_horizon(1e-10) == pytest.approx(
        2.0 * math.log(1e10), rel=1e-14
    )


def test_tail_tol_validation():
    with pytest.raises(ValueError):
        Exponential(1.0).truncation_horizon(0.0)
    with pytest.raises(ValueError):
        Exponential(1.0).quadrature(8, 1.5)


# ------------------------------------------------------------ construction


def test_variant_validation():
    with pytest.raises(ValueError):
        Dirac(-0.1)
    with pytest.raises(ValueError):
        Exponential(0.0)
    with pytest.raises(ValueError):
        Uniform(0.5, 0.5)
    with pytest.raises(ValueError):
        Uniform(-0.1, 0.5)
    with pytest.raises(ValueError):
        Linear(0.0)


def test_parse_distribution_roundtrip():
    for d in ALL_DISTS:
        assert parse_distribution(d.literal()) == d
    assert parse_distribution("dirac:tau=0.3") == Dirac(0.3)
    assert parse_distribution("uniform:a=0.1,b=0.7") == Uniform(0.1, 0.7)


def test_parse_distribution_errors():
    for bad in ["gauss:sigma=1", "exponential:mu", "uniform:a=0.1", "dirac:tau=x", ""]:
        with pytest.raises(ValueError):
            parse_distribution(bad)


def test_moment_values_bundle():
    mv = Exponential(1.0).moments()
    assert (mv.m1, mv.m2, mv.m3) == (1.0, 2.0, 6.0)
    assert mv.mexp_at(0.0) == 1.0
    assert mv.k_at(0.5) == pytest.approx(6.0, rel=1e-14)
    assert mv.m2 >= mv.m1**2

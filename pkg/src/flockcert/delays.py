"""Delay measures on [0, inf): analytic moments and quadrature rules.

Four probability measures are supported: a point mass (``Dirac``), the
exponential density ``exp(-s/mu)/mu``, the uniform density on ``[a, b]``
and the triangular ("linear") density ``2*(A - s)/A**2`` on ``[0, A]``.

Every measure exposes

* ``moment(k)``           -- the k-th raw moment, in closed form,
* ``exp_moment(kappa)``   -- the moment generating function E[e^(kappa*s)],
* ``k_moment(kappa)``     -- the mixed moment E[s*(e^(kappa*s)-1)/kappa],
  which tends to the second moment as kappa -> 0,
* ``quadrature(...)``     -- a Gauss-type rule against the measure itself,
* ``truncation_horizon``  -- the smallest s_max with P((s_max, inf)) <= tol.

The mixed moment interpolates between the second moment (kappa = 0) and an
exponentially weighted delay mass; it is evaluated by series expansion for
small kappa because the closed forms cancel catastrophically there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import roots_jacobi, roots_legendre

from .errors import DivergentMoment, InvalidOrder

__all__ = [
    "DelayDistribution",
    "Dirac",
    "Exponential",
    "Uniform",
    "Linear",
    "Quadrature",
    "MomentValues",
    "parse_distribution",
]

# Below this value of kappa * horizon the closed forms for Mexp/K lose
# precision (difference of near-equal exponential terms); the truncated
# moment series is machine-accurate there and converges in < 25 terms.
_SERIES_CUTOFF = 0.25


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _phi1(u: float) -> float:
    """(e^u - 1)/u, continuous through u = 0."""
    if u == 0.0:
        return 1.0
    if u > 700.0:
        return math.inf
    return math.expm1(u) / u


@dataclass(frozen=True)
class Quadrature:
    """Nodes/weights discretizing integrals against a delay measure.

    Weights are positive and sum to one; for truncated (exponential)
    support ``truncation_tail_mass`` records the probability mass dropped
    beyond the last node before renormalization.
    """

    nodes: np.ndarray
    weights: np.ndarray
    truncation_tail_mass: float

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class MomentValues:
    """Bundle of the low moments of a delay measure plus its kappa maps."""

    m1: float
    m2: float
    m3: float
    _dist: "DelayDistribution"

    def mexp_at(self, kappa: float) -> float:
        return self._dist.exp_moment(kappa)

    def k_at(self, kappa: float) -> float:
        return self._dist.k_moment(kappa)


class DelayDistribution:
    """Base class for the supported delay measures."""

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def exp_moment(self, kappa: float) -> float:
        raise NotImplementedError

    def k_moment(self, kappa: float) -> float:
        raise NotImplementedError

    def quadrature(self, order: int = 32, tail_mass_tol: float = 1e-12) -> Quadrature:
        raise NotImplementedError

    def truncation_horizon(self, tail_mass_tol: float = 1e-12) -> float:
        raise NotImplementedError

    def mgf_domain_sup(self) -> float:
        """Supremum of kappa for which exp_moment converges."""
        return math.inf

    def literal(self) -> str:
        raise NotImplementedError

    def moments(self) -> MomentValues:
        return MomentValues(self.moment(1), self.moment(2), self.moment(3), self)

    # -- shared helpers -------------------------------------------------

    def _check_kappa(self, kappa: float) -> None:
        if kappa < 0.0:
            raise ValueError("kappa must be >= 0")

    def _mexp_series(self, kappa: float) -> float:
        total = 1.0
        term = 1.0
        for n in range(1, 40):
            term *= kappa / n
            contrib = term * self.moment(n)
            total += contrib
            if abs(contrib) < 1e-17 * abs(total):
                break
        return total

    def _k_series(self, kappa: float) -> float:
        # K = sum_{n>=1} kappa^(n-1) M_{n+1} / n!
        total = self.moment(2)
        fact = 1.0
        for n in range(2, 40):
            fact *= n
            contrib = kappa ** (n - 1) * self.moment(n + 1) / fact
            total += contrib
            if abs(contrib) < 1e-17 * abs(total):
                break
        return total


@dataclass(frozen=True)
class Dirac(DelayDistribution):
    """Point mass at a fixed delay tau >= 0; tau = 0 is the no-delay case."""

    tau: float

    def __post_init__(self):
        if not (self.tau >= 0.0 and math.isfinite(self.tau)):
            raise ValueError("Dirac delay tau must be finite and >= 0")

    def moment(self, k: int) -> float:
        if k < 0:
            raise ValueError("moment order must be >= 0")
        return 1.0 if k == 0 else self.tau**k

    def exp_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        return _safe_exp(kappa * self.tau)

    def k_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        return self.tau**2 * _phi1(kappa * self.tau)

    def quadrature(self, order: int = 32, tail_mass_tol: float = 1e-12) -> Quadrature:
        if order < 1:
            raise InvalidOrder(f"order must be >= 1, got {order}")
        return Quadrature(np.array([self.tau]), np.array([1.0]), 0.0)

    def truncation_horizon(self, tail_mass_tol: float = 1e-12) -> float:
        return self.tau

    def literal(self) -> str:
        return f"dirac:tau={self.tau:.17g}"


@dataclass(frozen=True)
class Exponential(DelayDistribution):
    """Exponential delay density exp(-s/mu)/mu with mean mu > 0."""

    mu: float

    def __post_init__(self):
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValueError("Exponential mean mu must be finite and > 0")

    def moment(self, k: int) -> float:
        if k < 0:
            raise ValueError("moment order must be >= 0")
        return math.factorial(k) * self.mu**k

    def mgf_domain_sup(self) -> float:
        return 1.0 / self.mu

    def _check_convergence(self, kappa: float) -> None:
        if kappa * self.mu >= 1.0:
            raise DivergentMoment(
                f"exponential moment diverges for kappa >= 1/mu = {1.0 / self.mu:.17g}"
            )

    def exp_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        self._check_convergence(kappa)
        return 1.0 / (1.0 - kappa * self.mu)

    def k_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        self._check_convergence(kappa)
        y = kappa * self.mu
        return (2.0 - y) / (1.0 - y) ** 2 * self.mu**2

    def truncation_horizon(self, tail_mass_tol: float = 1e-12) -> float:
        _validate_tail_tol(tail_mass_tol)
        return self.mu * math.log(1.0 / tail_mass_tol)

    def quadrature(self, order: int = 32, tail_mass_tol: float = 1e-12) -> Quadrature:
        if order < 1:
            raise InvalidOrder(f"order must be >= 1, got {order}")
        _validate_tail_tol(tail_mass_tol)
        # Gauss rule for the weight e^(-s) on [0, ln(1/tol)], built by the
        # discretized Stieltjes procedure, then rescaled by mu.  Truncating
        # and renormalizing keeps a single bounded-support code path for the
        # simulator's history buffer.
        s_max = math.log(1.0 / tail_mass_tol)
        nodes, weights = _gauss_vs_exp_weight(order, s_max)
        weights = weights / weights.sum()
        return Quadrature(nodes * self.mu, weights, tail_mass_tol)

    def literal(self) -> str:
        return f"exponential:mu={self.mu:.17g}"


@dataclass(frozen=True)
class Uniform(DelayDistribution):
    """Uniform delay density on [a_lo, b_hi], 0 <= a_lo < b_hi."""

    a_lo: float
    b_hi: float

    def __post_init__(self):
        if not (self.a_lo >= 0.0 and math.isfinite(self.a_lo)):
            raise ValueError("Uniform lower endpoint must be finite and >= 0")
        if not (self.b_hi > self.a_lo and math.isfinite(self.b_hi)):
            raise ValueError("Uniform requires a_lo < b_hi strictly")

    def moment(self, k: int) -> float:
        if k < 0:
            raise ValueError("moment order must be >= 0")
        # (B^(k+1) - A^(k+1)) / ((k+1)(B-A)) in the cancellation-free
        # power-sum form sum_j A^j B^(k-j) / (k+1).
        a, b = self.a_lo, self.b_hi
        return sum(a**j * b ** (k - j) for j in range(k + 1)) / (k + 1)

    def exp_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        if kappa * self.b_hi < _SERIES_CUTOFF:
            return self._mexp_series(kappa)
        delta = self.b_hi - self.a_lo
        return _safe_exp(kappa * self.a_lo) * _phi1(kappa * delta)

    def k_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        if kappa * self.b_hi < _SERIES_CUTOFF:
            return self._k_series(kappa)
        if kappa * self.b_hi > 700.0:
            return math.inf
        a, b = self.a_lo, self.b_hi
        delta = b - a
        ea = _safe_exp(kappa * a)
        p1 = _phi1(kappa * delta)
        # Exact rearrangement of the defining integral
        #   K = [B e^(kB) - A e^(kA) - (e^(kB)-e^(kA))/k - k(B^2-A^2)/2]
        #       / ((B-A) k^2),
        # written so the B -> A limit reproduces the point mass at A.
        return ea * (1.0 - p1) / kappa**2 + ea * b * p1 / kappa - (a + b) / (2.0 * kappa)

    def truncation_horizon(self, tail_mass_tol: float = 1e-12) -> float:
        return self.b_hi

    def quadrature(self, order: int = 32, tail_mass_tol: float = 1e-12) -> Quadrature:
        if order < 1:
            raise InvalidOrder(f"order must be >= 1, got {order}")
        x, w = roots_legendre(order)
        nodes = self.a_lo + (x + 1.0) * (self.b_hi - self.a_lo) / 2.0
        return Quadrature(nodes, w / 2.0, 0.0)

    def literal(self) -> str:
        return f"uniform:a={self.a_lo:.17g},b={self.b_hi:.17g}"


@dataclass(frozen=True)
class Linear(DelayDistribution):
    """Triangular delay density 2*(A - s)/A^2 on [0, A] with A > 0."""

    a_max: float

    def __post_init__(self):
        if not (self.a_max > 0.0 and math.isfinite(self.a_max)):
            raise ValueError("Linear endpoint a_max must be finite and > 0")

    def moment(self, k: int) -> float:
        if k < 0:
            raise ValueError("moment order must be >= 0")
        return 2.0 * self.a_max**k / ((k + 1) * (k + 2))

    def exp_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        u = kappa * self.a_max
        if u < _SERIES_CUTOFF:
            return self._mexp_series(kappa)
        return 2.0 * (_phi1(u) - 1.0) / u

    def k_moment(self, kappa: float) -> float:
        self._check_kappa(kappa)
        u = kappa * self.a_max
        if u < _SERIES_CUTOFF:
            return self._k_series(kappa)
        if u > 700.0:
            return math.inf
        a = self.a_max
        eu = math.exp(u)
        return (2.0 * (eu + 1.0) / (a * kappa**2) - 4.0 * math.expm1(u) / (a**2 * kappa**3) - a / 3.0) / kappa

    def truncation_horizon(self, tail_mass_tol: float = 1e-12) -> float:
        return self.a_max

    def quadrature(self, order: int = 32, tail_mass_tol: float = 1e-12) -> Quadrature:
        if order < 1:
            raise InvalidOrder(f"order must be >= 1, got {order}")
        # Gauss-Jacobi with weight (1-x) on [-1,1]; under s = A(x+1)/2 the
        # density 2(A-s)/A^2 ds becomes (1-x)/2 dx, so weights halve.
        x, w = roots_jacobi(order, 1.0, 0.0)
        nodes = self.a_max * (x + 1.0) / 2.0
        return Quadrature(nodes, w / 2.0, 0.0)

    def literal(self) -> str:
        return f"linear:A={self.a_max:.17g}"


def _validate_tail_tol(tol: float) -> None:
    if not (0.0 < tol < 1.0):
        raise ValueError("tail_mass_tol must lie in (0, 1)")


def _gauss_vs_exp_weight(order: int, s_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes/weights for the weight e^(-s) on [0, s_max].

    Discretized Stieltjes procedure: a fine composite Gauss-Legendre grid
    carries the measure, the three-term recurrence coefficients are
    accumulated on it, and the Golub-Welsch eigenproblem yields the rule.
    Weights sum to 1 - e^(-s_max) (the truncated mass).
    """
    pts_per_panel = max(24, order)
    n_panels = max(4, math.ceil(2.0 * s_max))
    gx, gw = roots_legendre(pts_per_panel)
    edges = np.linspace(0.0, s_max, n_panels + 1)
    mid = (edges[1:] + edges[:-1]) / 2.0
    half = (edges[1:] - edges[:-1]) / 2.0
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel() * np.exp(-x)

    beta0 = w.sum()
    alphas = np.empty(order)
    betas = np.empty(max(order - 1, 0))
    pi_prev = np.zeros_like(x)
    pi_cur = np.ones_like(x)
    norm_prev = 0.0
    for k in range(order):
        norm_cur = float(np.dot(w, pi_cur * pi_cur))
        alphas[k] = float(np.dot(w, x * pi_cur * pi_cur)) / norm_cur
        if k > 0:
            betas[k - 1] = norm_cur / norm_prev
        pi_next = (x - alphas[k]) * pi_cur - (betas[k - 1] if k > 0 else 0.0) * pi_prev
        pi_prev, pi_cur = pi_cur, pi_next
        norm_prev = norm_cur

    if order == 1:
        nodes = alphas.copy()
        weights = np.array([beta0])
    else:
        nodes, vecs = eigh_tridiagonal(alphas, np.sqrt(betas))
        weights = beta0 * vecs[0, :] ** 2
    idx = np.argsort(nodes)
    return nodes[idx], weights[idx]


def parse_distribution(text: str) -> DelayDistribution:
    """Parse a distribution literal.

    Accepted forms: ``dirac:tau=<t>``, ``exponential:mu=<t>``,
    ``uniform:a=<t>,b=<t>``, ``linear:A=<t>``.
    """
    builders = {
        "dirac": (("tau",), lambda f: Dirac(tau=f["tau"])),
        "exponential": (("mu",), lambda f: Exponential(mu=f["mu"])),
        "uniform": (("a", "b"), lambda f: Uniform(a_lo=f["a"], b_hi=f["b"])),
        "linear": (("A",), lambda f: Linear(a_max=f["A"])),
    }
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind not in builders:
        raise ValueError(
            f"malformed distribution literal {text!r}: unknown kind {kind!r} "
            "(expected dirac, exponential, uniform or linear)"
        )
    keys, build = builders[kind]
    fields = {}
    try:
        for item in body.split(",") if body else []:
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"expected key=value, got {item!r}")
            fields[key.strip()] = float(val)
        missing = [k for k in keys if k not in fields]
        if missing:
            raise ValueError(f"missing parameter(s) {missing}")
        return build(fields)
    except ValueError as exc:
        raise ValueError(f"malformed distribution literal {text!r}: {exc}") from exc

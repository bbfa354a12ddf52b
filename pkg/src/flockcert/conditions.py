"""Feasibility of the exponential-flocking conditions and critical thresholds.

For coupling strength lambda, delay measure P and log-derivative constant
alpha, alignment is certified when

  (C1)  2*lambda*sqrt(M2) <= 1,
  (C2)  2*lambda*sqrt(K[kappa]) < 1          for some kappa > 0,
  (C3)  kappa - 4*lambda*sqrt(Mexp[kappa]) - alpha*sqrt(2*L0) > 0

hold simultaneously, where L0 aggregates the initial velocity fluctuation
(see ``l_zero``).  The guaranteed exponential contraction factor is then
omega = 2*lambda*(1 - 2*lambda*sqrt(K[kappa])).

``find_kappa`` maximizes the (C3) margin over the kappa interval cut out by
(C2).  The margin kappa - 4*lambda*sqrt(Mexp[kappa]) is concave (sqrt of a
log-convex function is convex), so a golden-section search on the bisected
interval is exact up to tolerance.

Critical initial-fluctuation thresholds invert (C3): the largest admissible
V(0)/lambda^2 is  max_kappa [margin+]^2 / (2 alpha^2 lambda^2 C)  with
C = 1 + 2*lambda^2*M3/sqrt(M2).  For the exponential delay measure a
published closed form for the same threshold exists; it disagrees with the
direct inversion for lambda*mu >~ 0.096, so both are exposed side by side
and curve emission keeps both columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .delays import DelayDistribution, Exponential, Linear, Uniform
from .errors import DivergentMoment, DomainViolation

__all__ = [
    "ConditionInput",
    "ConditionReport",
    "l_zero",
    "check_conditions",
    "find_kappa",
    "kappa_ceiling",
    "critical_v0_exponential_paper",
    "critical_v0_numeric",
    "critical_curve",
    "linear_constraint_f",
    "max_uniform_length",
    "evaluate",
    "CURVE_FAMILIES",
    "LAMBDA_MU_MAX",
]

_GOLDEN_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0

# lambda*mu may not exceed this for the exponential measure (condition C1)
LAMBDA_MU_MAX = 1.0 / (2.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class ConditionInput:
    """Problem data for a feasibility check.

    ``v0`` is the initial velocity fluctuation V(0) and ``d0`` the initial
    dissipation D(0); with constant pre-history and psi <= 1 one always has
    D(0) <= V(0).  When ``d0`` is omitted (or ``use_weak_form`` is set) the
    conservative bound D(0) <= V(0) is substituted.
    """

    lam: float
    dist: DelayDistribution
    alpha: float
    v0: float
    d0: Optional[float] = None
    use_weak_form: bool = False

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError("coupling lam must be finite and > 0")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.v0 < 0.0:
            raise ValueError("v0 must be >= 0")
        if self.d0 is not None and not (0.0 <= self.d0 <= self.v0 * (1.0 + 1e-12)):
            raise ValueError("d0 must satisfy 0 <= d0 <= v0")


@dataclass(frozen=True)
class ConditionReport:
    m2_margin: float
    kappa_star: Optional[float]
    k_margin_at_star: Optional[float]
    mexp_margin_at_star: Optional[float]
    feasible: bool
    omega: Optional[float]
    l_zero: float


def _delay_correction(lam: float, dist: DelayDistribution) -> float:
    """2*lambda^2*M3/sqrt(M2); zero for the degenerate no-delay measure."""
    m2 = dist.moment(2)
    m3 = dist.moment(3)
    if m3 == 0.0:
        return 0.0
    return 2.0 * lam**2 * m3 / math.sqrt(m2)


def l_zero(inp: ConditionInput) -> float:
    """Initial value of the Lyapunov aggregate entering condition (C3)."""
    coef = _delay_correction(inp.lam, inp.dist)
    if inp.use_weak_form or inp.d0 is None:
        return (1.0 + coef) * inp.v0
    return inp.v0 + coef * inp.d0


def check_conditions(inp: ConditionInput, kappa: float) -> ConditionReport:
    """Evaluate all three condition margins at a given kappa > 0."""
    if kappa <= 0.0:
        raise ValueError("kappa must be > 0")
    lam = inp.lam
    m2_margin = 1.0 - 2.0 * lam * math.sqrt(inp.dist.moment(2))
    l0 = l_zero(inp)
    k_margin = 1.0 - 2.0 * lam * math.sqrt(inp.dist.k_moment(kappa))
    mexp_margin = (
        kappa
        - 4.0 * lam * math.sqrt(inp.dist.exp_moment(kappa))
        - inp.alpha * math.sqrt(2.0 * l0)
    )
    feasible = m2_margin >= 0.0 and k_margin > 0.0 and mexp_margin > 0.0
    return ConditionReport(
        m2_margin=m2_margin,
        kappa_star=kappa,
        k_margin_at_star=k_margin,
        mexp_margin_at_star=mexp_margin,
        feasible=feasible,
        omega=2.0 * lam * k_margin,
        l_zero=l0,
    )


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = _GOLDEN_TOL):
    """Golden-section maximizer for a concave f on [lo, hi]."""
    h = hi - lo
    if h <= tol:
        x = (lo + hi) / 2.0
        return x, f(x)
    c = lo + _INV_PHI2 * h
    d = lo + _INV_PHI * h
    fc, fd = f(c), f(d)
    n = max(1, math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    for _ in range(n):
        if fc > fd:
            hi, d, fd = d, c, fc
            h *= _INV_PHI
            c = lo + _INV_PHI2 * h
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            h *= _INV_PHI
            d = lo + _INV_PHI * h
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def kappa_ceiling(dist: DelayDistribution, lam: float) -> float:
    """Supremum of the kappa interval allowed by (C2) and MGF convergence.

    K is increasing in kappa, so the constraint 2*lambda*sqrt(K) < 1 cuts
    (0, ceiling).  Returns 0.0 when the interval is empty (C1 tight or
    violated) and inf for the no-delay point mass (K identically zero).
    """
    m2 = dist.moment(2)
    if m2 == 0.0:
        return math.inf
    cap = 1.0 / (4.0 * lam**2)  # K must stay below this
    if m2 >= cap:
        return 0.0

    def excess(kappa: float) -> float:
        try:
            return dist.k_moment(kappa) - cap
        except DivergentMoment:
            return math.inf

    sup = dist.mgf_domain_sup()
    if math.isfinite(sup):
        hi = sup
    else:
        # Two-term lower Taylor bound K >= M2 + kappa*M3/2 yields a finite
        # bracket: K reaches the cap no later than this kappa.
        hi = (cap - m2) / (0.5 * dist.moment(3))
        if excess(hi) < 0.0:  # safety net; cannot happen for exact arithmetic
            while excess(hi) < 0.0:
                hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return lo


def _max_exp_margin(dist: DelayDistribution, lam: float):
    """Maximize g(kappa) = kappa - 4*lambda*sqrt(Mexp[kappa]) over (0, ceiling).

    Returns (kappa_star, g(kappa_star), ceiling); (nan, -inf, 0) when the
    admissible interval is empty, and an unbounded sentinel for the
    no-delay point mass.
    """
    ceiling = kappa_ceiling(dist, lam)
    if ceiling == 0.0:
        return math.nan, -math.inf, 0.0
    if math.isinf(ceiling):
        return math.inf, math.inf, math.inf

    def g(kappa: float) -> float:
        try:
            return kappa - 4.0 * lam * math.sqrt(dist.exp_moment(kappa))
        except DivergentMoment:
            return -math.inf

    lo = ceiling * 1e-12
    hi = ceiling * (1.0 - 1e-12)
    kappa_star, gmax = _golden_max(g, lo, hi)
    return kappa_star, gmax, ceiling


def find_kappa(inp: ConditionInput) -> Optional[float]:
    """Margin-maximizing kappa for which all conditions hold, if any."""
    m2_margin = 1.0 - 2.0 * inp.lam * math.sqrt(inp.dist.moment(2))
    if m2_margin < 0.0:
        return None
    l0 = l_zero(inp)
    data_term = inp.alpha * math.sqrt(2.0 * l0)
    kappa_star, gmax, ceiling = _max_exp_margin(inp.dist, inp.lam)
    if ceiling == 0.0:
        return None
    if math.isinf(ceiling):
        # no-delay point mass: margin kappa - 4*lambda - data_term grows
        # without bound; return the kappa with unit margin
        return 4.0 * inp.lam + data_term + 1.0
    if gmax - data_term <= 0.0:
        return None
    return kappa_star


def evaluate(inp: ConditionInput) -> ConditionReport:
    """Full report: search for kappa, evaluate margins at the best point."""
    kappa_star = find_kappa(inp)
    if kappa_star is not None:
        return check_conditions(inp, kappa_star)
    m2_margin = 1.0 - 2.0 * inp.lam * math.sqrt(inp.dist.moment(2))
    l0 = l_zero(inp)
    best_kappa, _, ceiling = _max_exp_margin(inp.dist, inp.lam)
    if ceiling == 0.0 or not math.isfinite(best_kappa):
        return ConditionReport(
            m2_margin=m2_margin,
            kappa_star=None,
            k_margin_at_star=None,
            mexp_margin_at_star=None,
            feasible=False,
            omega=None,
            l_zero=l0,
        )
    # report margins at the most favorable kappa even though infeasible
    at_best = check_conditions(inp, best_kappa)
    return ConditionReport(
        m2_margin=m2_margin,
        kappa_star=None,
        k_margin_at_star=at_best.k_margin_at_star,
        mexp_margin_at_star=at_best.mexp_margin_at_star,
        feasible=False,
        omega=None,
        l_zero=l0,
    )


# ----------------------------------------------------------- thresholds


def critical_v0_exponential_paper(lambda_mu: float, alpha: float) -> float:
    """Published closed form for the critical V(0)/lambda^2, exponential delay.

    Valid on 0 < lambda*mu <= 1/(2*sqrt(2)).  Known to overstate the
    directly inverted threshold for lambda*mu >~ 0.096 (the kappa-bracket
    term is dropped when the printed form resolves the inequality); kept
    verbatim for figure reproduction next to the numeric column.
    """
    x = lambda_mu
    if not (0.0 < x <= LAMBDA_MU_MAX + 1e-15):
        raise DomainViolation(
            f"lambda*mu must lie in (0, {LAMBDA_MU_MAX:.6f}], got {x:.6g}"
        )
    if alpha <= 0.0:
        raise DomainViolation("alpha must be > 0 for the closed form")
    bracket = 1.0 - 2.0 * x**2 - 2.0 * x * math.sqrt(x**2 + 1.0)
    prefactor = 1.0 / (2.0 * (1.0 + 12.0 * x**2 / math.sqrt(2.0)))
    return prefactor * (bracket / (alpha * x)) ** 2


def critical_v0_numeric(dist: DelayDistribution, lam: float, alpha: float) -> float:
    """Largest V(0)/lambda^2 for which a feasible kappa exists.

    Inverts (C3) in its conservative D(0) <= V(0) form: the threshold is
    max over admissible kappa of [margin+]^2 / (2 alpha^2 lambda^2 C) with
    C = 1 + 2 lambda^2 M3 / sqrt(M2).  Returns 0.0 when no kappa interval
    exists and the inf sentinel when the threshold is unbounded (no-delay
    point mass, or alpha = 0 with positive margin).
    """
    m2_margin = 1.0 - 2.0 * lam * math.sqrt(dist.moment(2))
    if m2_margin < 0.0:
        return 0.0
    _, gmax, ceiling = _max_exp_margin(dist, lam)
    if ceiling == 0.0:
        return 0.0
    if math.isinf(ceiling):
        return math.inf
    if gmax <= 0.0:
        return 0.0
    if alpha == 0.0:
        return math.inf
    coef = 1.0 + _delay_correction(lam, dist)
    return gmax**2 / (2.0 * alpha**2 * lam**2 * coef)


def linear_constraint_f(a: float, kappa: float) -> float:
    """Constraint function f_a(kappa) = 4*K[kappa] of the triangular measure
    at unit coupling; (C2) holds iff f_a < 1.  Increasing in kappa, with
    f_a(0+) = 2*a^2/3."""
    if a <= 0.0:
        raise DomainViolation("a must be > 0")
    return 4.0 * Linear(a).k_moment(kappa)


# --------------------------------------------------------------- curves


def _fig1_point(lambda_mu: float, alpha: float) -> tuple:
    paper = critical_v0_exponential_paper(lambda_mu, alpha)
    numeric = critical_v0_numeric(Exponential(1.0), lambda_mu, alpha)
    return (lambda_mu, paper, numeric)


def max_uniform_length(a: float, alpha: float, v0_over_lam2: float = 1.0) -> float:
    """Largest interval length b - a keeping the conditions feasible.

    Fixes lambda = 1 (the curve is stated in rescaled parameters), uses the
    conservative form of (C3), and bisects on the length; feasibility is
    monotone in the length because every moment grows with it.
    """
    if not (0.0 <= a < 0.5):
        raise DomainViolation("a must lie in [0, 0.5) for the uniform curve")

    def feasible(length: float) -> bool:
        inp = ConditionInput(
            lam=1.0,
            dist=Uniform(a, a + length),
            alpha=alpha,
            v0=v0_over_lam2,
            use_weak_form=True,
        )
        return find_kappa(inp) is not None

    lo = 1e-9
    if not feasible(lo):
        return 0.0
    # (C1) caps b at the root of 4*(a^2+ab+b^2)/3 = 1
    b_cap = (-a + math.sqrt(3.0 - 3.0 * a**2)) / 2.0
    hi = b_cap - a
    if feasible(hi):
        return hi
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _fig2_point(a: float, alpha: float) -> tuple:
    return (a, max_uniform_length(a, alpha))


def _fig3_point(b: float, alpha: float) -> tuple:
    if not (0.0 < b <= math.sqrt(3.0) / 2.0):
        raise DomainViolation("b must lie in (0, sqrt(3)/2] for the uniform threshold")
    return (b, critical_v0_numeric(Uniform(0.0, b), 1.0, alpha))


def _fig4_point(a: float, alpha: float) -> tuple:
    if not (0.0 < a <= math.sqrt(1.5)):
        raise DomainViolation("a must lie in (0, sqrt(3/2)] for the triangular threshold")
    return (a, critical_v0_numeric(Linear(a), 1.0, alpha))


CURVE_FAMILIES = {
    "exp_fig1": (("lambda_mu", "critical_paper", "critical_numeric"), _fig1_point),
    "uniform_fig2": (("a", "max_length"), _fig2_point),
    "uniform_fig3": (("b", "critical_v0_over_lambda2"), _fig3_point),
    "linear_fig4": (("a", "critical_v0_over_lambda2"), _fig4_point),
}


def critical_curve(family: str, grid, alpha: float = 1.0, jobs: int = 1):
    """Tabulate one critical-threshold curve over the given abscissae.

    Returns (header, rows).  Points are independent; with jobs > 1 they are
    evaluated on a process pool and reassembled in input order, so output is
    identical for any worker count.
    """
    if family not in CURVE_FAMILIES:
        raise DomainViolation(f"unknown curve family {family!r}")
    header, point = CURVE_FAMILIES[family]
    grid = list(grid)
    if jobs > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_CurvePoint(family, alpha), grid, chunksize=8))
    else:
        rows = [point(x, alpha) for x in grid]
    return header, rows


class _CurvePoint:
    """Picklable per-point evaluator for pool workers."""

    def __init__(self, family: str, alpha: float):
        self.family = family
        self.alpha = alpha

    def __call__(self, x: float) -> tuple:
        return CURVE_FAMILIES[self.family][1](x, self.alpha)

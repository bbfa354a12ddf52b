"""Communication rate family psi(r) = (1 + r^2)^(-beta).

The rate is positive, bounded by 1, nonincreasing, and its log-derivative
is bounded: psi'(r) >= -alpha * psi(r) with alpha = 2*beta.  For beta < 1/2
the rate additionally decays no faster than c * r^(gamma - 1) with
gamma = 1 - 2*beta (recorded as tail metadata; it is what makes the
velocity-fluctuation decay integrable in time).

Other nonincreasing rates could be slotted in through the same interface;
only the prototype family is shipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NegativeDistance

__all__ = ["CommunicationRate", "TailBound", "AssumptionReport"]


@dataclass(frozen=True)
class TailBound:
    """Constants of the lower bound psi(r) >= c * r^(gamma-1) for r >= R."""

    gamma: float
    c: float
    R: float


@dataclass(frozen=True)
class AssumptionReport:
    bounded: bool
    tail_ok: bool
    log_derivative_ok: bool


@dataclass(frozen=True)
class CommunicationRate:
    beta: float

    def __post_init__(self):
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ValueError("beta must be finite and >= 0")

    @property
    def alpha(self) -> float:
        """Log-derivative constant: |psi'| <= alpha * psi everywhere."""
        return 2.0 * self.beta

    @property
    def tail(self) -> TailBound | None:
        """Tail metadata, present exactly when beta < 1/2.

        With c = 2^(-beta) and R = 1, (1+r^2)^(-beta) >= c * r^(-2*beta)
        for r >= 1, i.e. the bound holds with gamma = 1 - 2*beta.
        """
        if self.beta < 0.5:
            return TailBound(gamma=1.0 - 2.0 * self.beta, c=2.0**-self.beta, R=1.0)
        return None

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0):
            raise NegativeDistance("psi requires r >= 0")
        out = (1.0 + r * r) ** -self.beta
        return float(out) if out.ndim == 0 else out

    def psi_prime(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0):
            raise NegativeDistance("psi_prime requires r >= 0")
        out = -2.0 * self.beta * r * (1.0 + r * r) ** (-self.beta - 1.0)
        return float(out) if out.ndim == 0 else out

    def check_assumptions(self) -> AssumptionReport:
        # boundedness and the log-derivative bound hold for the whole family:
        # 2*beta*r/(1+r^2) <= 2*beta = alpha; verified numerically as well.
        grid = np.logspace(-6.0, 6.0, 241)
        log_ok = bool(np.all(np.abs(self.psi_prime(grid)) <= self.alpha * self.psi(grid) + 1e-15))
        return AssumptionReport(
            bounded=True,
            tail_ok=self.beta < 0.5,
            log_derivative_ok=log_ok,
        )

"""Fixed-step integration of the velocity-alignment system with delay kernel.

The state of N agents in d dimensions evolves as

    x_i' = v_i
    v_i' = (lambda/N) sum_j int psi(|x_i(t-s) - x_j(t-s)|)
                               (v_j(t-s) - v_i(t-s)) dP(s),

with constant pre-history (x_i, v_i) = (x_i0, v_i0) for t <= 0.  The delay
integral is discretized by the measure's Gauss rule; time stepping is the
classical 4-stage Runge-Kutta scheme with cubic-Hermite dense output over
the committed grid.  Delayed stage queries that land inside the step being
assembled (possible when a quadrature node is shorter than dt) use the
step's first-stage linear predictor; the no-delay point mass short-circuits
to the current stage state, which makes the scheme coincide with classical
RK4 on the undelayed system.

Runs are deterministic: identical inputs produce bit-identical trajectories
and diagnostics.

Diagnostics per sampled step: velocity fluctuation V, delay-averaged
dissipation D, position diameter d_X, total momentum, the Lyapunov
aggregate L (V plus a delay-weighted double time integral of D, normalized
so that L(0) matches the quantity entering the feasibility conditions) and
the guaranteed interaction floor phi_lower = psi(d_X(0) + sqrt(2 L(0)) t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .delays import DelayDistribution, Quadrature
from .errors import (
    ConfigInvalid,
    DegenerateWindow,
    HistoryUnderflow,
    NonFiniteState,
)
from .rates import CommunicationRate

__all__ = [
    "SwarmState",
    "History",
    "SimConfig",
    "DiagnosticsSeries",
    "Violation",
    "ViolationReport",
    "accelerations",
    "run",
    "diagnostics_at",
    "fit_decay_rate",
    "verify_estimates",
    "velocity_fluctuation",
    "write_diagnostics_csv",
    "read_diagnostics_csv",
    "DIAG_FLOAT_FMT",
]

DIAG_FLOAT_FMT = "%.17g"
_BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class SwarmState:
    """Positions and velocities of the swarm at one instant."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.ndim != 2 or x.shape != v.shape:
            raise ValueError("x and v must be N x d arrays of equal shape")
        if x.shape[0] < 2 or x.shape[1] < 1:
            raise ValueError("need N >= 2 agents in d >= 1 dimensions")
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)


@dataclass
class SimConfig:
    lam: float
    rate: CommunicationRate
    dist: DelayDistribution
    t_end: float
    dt: Optional[float] = None
    quad_order: int = 32
    tail_mass_tol: float = 1e-12
    seed: int = 0
    diag_stride: int = 1

    def horizon(self) -> float:
        return self.dist.truncation_horizon(self.tail_mass_tol)

    def resolved_dt(self) -> float:
        """Default step: min(1e-2, horizon/40) when the kernel has extent."""
        if self.dt is not None:
            return self.dt
        h = self.horizon()
        return min(1e-2, h / 40.0) if h > 0.0 else 1e-2

    def quadrature(self) -> Quadrature:
        return self.dist.quadrature(self.quad_order, self.tail_mass_tol)

    def validate(self) -> None:
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ConfigInvalid("coupling lam must be finite and > 0")
        dt = self.resolved_dt()
        if not (dt > 0.0 and math.isfinite(dt)):
            raise ConfigInvalid("dt must be finite and > 0")
        if dt > self.t_end:
            raise ConfigInvalid("dt must not exceed t_end")
        h = self.horizon()
        if h > 0.0 and dt > h / 4.0:
            raise ConfigInvalid(
                f"dt = {dt:g} too coarse for delay horizon {h:g}: need dt <= horizon/4"
            )
        if self.diag_stride < 1:
            raise ConfigInvalid("diag_stride must be >= 1")


class History:
    """Committed trajectory on a uniform grid plus the constant pre-history.

    Evaluation at tau <= 0 returns the pre-history exactly; inside the grid
    a cubic Hermite interpolant built from stored states and stored time
    derivatives is used (positions pair with velocities, velocities with
    accelerations).
    """

    def __init__(self, pre_x: np.ndarray, pre_v: np.ndarray, dt: float, n_steps: int):
        self.pre_x = np.array(pre_x, dtype=float)
        self.pre_v = np.array(pre_v, dtype=float)
        self.dt = float(dt)
        n_pts = n_steps + 1
        shape = (n_pts,) + self.pre_x.shape
        self._x = np.empty(shape)
        self._v = np.empty(shape)
        self._a = np.empty(shape)
        self.n_committed = 0  # number of stored grid points

    @property
    def t_max(self) -> float:
        return (self.n_committed - 1) * self.dt if self.n_committed else -math.inf

    @property
    def t_grid(self) -> np.ndarray:
        return np.arange(self.n_committed) * self.dt

    def commit(self, x: np.ndarray, v: np.ndarray, a: np.ndarray) -> None:
        k = self.n_committed
        self._x[k] = x
        self._v[k] = v
        self._a[k] = a
        self.n_committed = k + 1

    def grid_state(self, k: int):
        return self._x[k], self._v[k], self._a[k]

    def states_at(self, taus: np.ndarray):
        """Vectorized (positions, velocities) lookup at query times taus."""
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        if self.n_committed == 0:
            raise HistoryUnderflow("no committed grid points")
        slack = 1e-9 * max(self.dt, 1.0)
        if np.any(taus > self.t_max + slack):
            raise HistoryUnderflow(
                f"query at t={taus.max():.17g} beyond committed horizon {self.t_max:.17g}"
            )
        X = np.empty(taus.shape + self.pre_x.shape)
        V = np.empty_like(X)
        pre = taus <= 0.0
        if pre.any():
            X[pre] = self.pre_x
            V[pre] = self.pre_v
        mid = ~pre
        if mid.any() and self.n_committed == 1:
            # only the t = 0 point exists; positive queries within slack
            # collapse onto it
            X[mid] = self._x[0]
            V[mid] = self._v[0]
            mid = np.zeros_like(mid)
        if mid.any():
            tq = np.minimum(taus[mid], self.t_max)
            idx = np.minimum(tq / self.dt, self.n_committed - 2).astype(int)
            idx = np.maximum(idx, 0)
            theta = tq / self.dt - idx
            h = self.dt
            t2 = theta * theta
            t3 = t2 * theta
            h00 = (2.0 * t3 - 3.0 * t2 + 1.0)[:, None, None]
            h10 = (t3 - 2.0 * t2 + theta)[:, None, None] * h
            h01 = (-2.0 * t3 + 3.0 * t2)[:, None, None]
            h11 = (t3 - t2)[:, None, None] * h
            x0, x1 = self._x[idx], self._x[idx + 1]
            v0, v1 = self._v[idx], self._v[idx + 1]
            a0, a1 = self._a[idx], self._a[idx + 1]
            X[mid] = h00 * x0 + h10 * v0 + h01 * x1 + h11 * v1
            V[mid] = h00 * v0 + h10 * a0 + h01 * v1 + h11 * a1
        return X, V

    def state_at(self, tau: float) -> SwarmState:
        X, V = self.states_at(np.array([tau]))
        return SwarmState(t=tau, x=X[0], v=V[0])


@dataclass
class DiagnosticsSeries:
    t: np.ndarray
    V: np.ndarray
    D: np.ndarray
    d_X: np.ndarray
    L: np.ndarray
    momentum: np.ndarray  # (n, d)
    phi_lower: np.ndarray

    def row(self, i: int) -> dict:
        return {
            "t": float(self.t[i]),
            "V": float(self.V[i]),
            "D": float(self.D[i]),
            "d_X": float(self.d_X[i]),
            "L": float(self.L[i]),
            "momentum": self.momentum[i].copy(),
            "phi_lower": float(self.phi_lower[i]),
        }


# ------------------------------------------------------- instantaneous sums


def velocity_fluctuation(v: np.ndarray) -> float:
    """Half the sum of squared pairwise velocity differences."""
    vc = v - v.mean(axis=0)
    return float(v.shape[0] * np.sum(vc * vc))


def _pair_dist_sq(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _instantaneous_dissipation(x: np.ndarray, v: np.ndarray, beta: float) -> float:
    psi = (1.0 + _pair_dist_sq(x)) ** -beta
    dv = v[:, None, :] - v[None, :, :]
    dv2 = np.einsum("ijk,ijk->ij", dv, dv)
    return 0.5 * float(np.sum(psi * dv2))


def _diameter(x: np.ndarray) -> float:
    return float(np.sqrt(_pair_dist_sq(x).max()))


# ----------------------------------------------------------------- engine


class _Engine:
    def __init__(self, config: SimConfig, initial: SwarmState):
        config.validate()
        if initial.t != 0.0:
            raise ConfigInvalid("initial state must be given at t = 0")
        self.cfg = config
        self.lam = config.lam
        self.beta = config.rate.beta
        self.dt = config.resolved_dt()
        self.n_steps = max(1, round(config.t_end / self.dt))
        quad = config.quadrature()
        self.nodes = quad.nodes
        self.weights = quad.weights
        self.N = initial.x.shape[0]
        self.history = History(initial.x, initial.v, self.dt, self.n_steps)
        self.speed_guard = _BLOWUP_FACTOR * (
            1.0 + float(np.sqrt((initial.v**2).sum(axis=1)).max())
        )
        # commit first so t = 0 queries resolve, then backfill the derivative
        self.history.commit(initial.x, initial.v, np.zeros_like(initial.x))
        self.history._a[0] = self.accel(0.0)

    # delayed state gathering -------------------------------------------

    def _delayed_states(self, t_stage, stage_x=None, stage_v=None, base=None):
        taus = t_stage - self.nodes
        hist = self.history
        committed_t = hist.t_max
        zero = self.nodes == 0.0
        future = (taus > committed_t) & ~zero
        plain = ~future & ~zero
        Q = taus.shape[0]
        X = np.empty((Q, self.N, hist.pre_x.shape[1]))
        V = np.empty_like(X)
        if plain.any():
            X[plain], V[plain] = hist.states_at(taus[plain])
        if future.any():
            if base is None:
                raise HistoryUnderflow("future query without a step predictor")
            t0, x0, v0, a0 = base
            th = (taus[future] - t0)[:, None, None]
            X[future] = x0 + th * v0
            V[future] = v0 + th * a0
        if zero.any():
            if stage_x is not None:
                X[zero], V[zero] = stage_x, stage_v
            else:
                X[zero], V[zero] = hist.states_at(taus[zero])
        return X, V

    def _accel_from_states(self, Xq, Vq):
        dx = Xq[:, None, :, :] - Xq[:, :, None, :]
        r2 = np.einsum("qijk,qijk->qij", dx, dx)
        psi = (1.0 + r2) ** -self.beta
        dv = Vq[:, None, :, :] - Vq[:, :, None, :]  # dv[q,i,j] = v_j - v_i
        term = np.einsum("qij,qijd->qid", psi, dv)
        return (self.lam / self.N) * np.einsum("q,qid->id", self.weights, term)

    def accel(self, t_stage, stage_x=None, stage_v=None, base=None):
        return self._accel_from_states(
            *self._delayed_states(t_stage, stage_x, stage_v, base)
        )

    # time stepping ------------------------------------------------------

    def step(self, k: int) -> None:
        h = self.dt
        t0 = k * h
        x0, v0, a0 = self.history.grid_state(k)
        base = (t0, x0, v0, a0)

        k1x, k1v = v0, a0
        x2 = x0 + 0.5 * h * k1x
        v2 = v0 + 0.5 * h * k1v
        k2v = self.accel(t0 + 0.5 * h, x2, v2, base)
        k2x = v2
        x3 = x0 + 0.5 * h * k2x
        v3 = v0 + 0.5 * h * k2v
        k3v = self.accel(t0 + 0.5 * h, x3, v3, base)
        k3x = v3
        x4 = x0 + h * k3x
        v4 = v0 + h * k3v
        k4v = self.accel(t0 + h, x4, v4, base)
        k4x = v4

        x1 = x0 + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v1 = v0 + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        # derivative at the new grid point, before committing: queries inside
        # (t0, t0+h) still go through the step predictor, never through the
        # not-yet-filled final segment
        a1 = self.accel(t0 + h, x1, v1, base)
        self.history.commit(x1, v1, a1)

    def check_finite(self, k: int) -> None:
        x, v, _ = self.history.grid_state(k)
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            raise _BlowUp(f"non-finite state at t = {k * self.dt:.6g}")
        speed = float(np.sqrt((v * v).sum(axis=1)).max())
        if speed > self.speed_guard:
            raise _BlowUp(f"speed {speed:.3g} exceeded blow-up guard at t = {k * self.dt:.6g}")


class _BlowUp(Exception):
    pass


# --------------------------------------------------------------- L window


class _LyapunovAccumulator:
    """Incremental evaluation of the delay-weighted double integral in L.

    The triple integral reduces to int s * J(s, t) dP(s) with
    J(s, t) = int_0^s (s - u) D(t - u) du; the inner integral is computed
    from stored D samples by trapezoidal cumulative sums, with the constant
    pre-history contribution D(0) * (s - t)^2 / 2 added in closed form when
    the window reaches below t = 0.
    """

    def __init__(self, nodes, weights, sample_dt, coef):
        self.nodes = nodes
        self.weights = weights
        self.delta = sample_dt
        self.coef = coef
        self.max_node = float(nodes.max()) if len(nodes) else 0.0
        self.window = int(math.ceil(self.max_node / sample_dt)) + 1 if sample_dt > 0 else 0

    def value(self, d_samples: np.ndarray, m: int, d0: float) -> float:
        """Delay term of L at sample index m (time m * delta)."""
        if self.coef == 0.0:
            return 0.0
        w = min(m, self.window)
        drev = d_samples[m - w : m + 1][::-1]
        u = np.arange(w + 1) * self.delta
        if w > 0:
            seg = 0.5 * self.delta * (drev[1:] + drev[:-1])
            c0 = np.concatenate(([0.0], np.cumsum(seg)))
            seg1 = 0.5 * self.delta * (u[1:] * drev[1:] + u[:-1] * drev[:-1])
            c1 = np.concatenate(([0.0], np.cumsum(seg1)))
        else:
            c0 = np.zeros(1)
            c1 = np.zeros(1)
        u_cov = w * self.delta
        s = self.nodes
        s_in = np.minimum(s, u_cov)
        j = s * np.interp(s_in, u, c0) - np.interp(s_in, u, c1)
        tail = s > u_cov
        if tail.any():
            j = j + np.where(tail, 0.5 * d0 * (s - u_cov) ** 2, 0.0)
        return self.coef * float(np.dot(self.weights, s * j))


def _l_coefficient(lam: float, dist: DelayDistribution) -> float:
    """Weight of the delay term in L, normalized so that
    L(0) = V(0) + (2 lambda^2 M3 / sqrt(M2)) D(0)."""
    m2 = dist.moment(2)
    if m2 == 0.0:
        return 0.0
    return 4.0 * lam**2 / math.sqrt(m2)


# ------------------------------------------------------------- public ops


def accelerations(history: History, t: float, config: SimConfig) -> np.ndarray:
    """Right-hand side of the velocity equation at time t.

    The history must cover [t - s_max, t]; queries below zero fall back to
    the constant pre-history.
    """
    quad = config.quadrature()
    taus = t - quad.nodes
    X, V = history.states_at(taus)
    beta = config.rate.beta
    dx = X[:, None, :, :] - X[:, :, None, :]
    r2 = np.einsum("qijk,qijk->qij", dx, dx)
    psi = (1.0 + r2) ** -beta
    dv = V[:, None, :, :] - V[:, :, None, :]
    term = np.einsum("qij,qijd->qid", psi, dv)
    return (config.lam / history.pre_x.shape[0]) * np.einsum(
        "q,qid->id", quad.weights, term
    )


def run(config: SimConfig, initial: SwarmState):
    """Integrate the delay system; returns (history, diagnostics).

    Raises NonFiniteState (with partial history/diagnostics attached) if the
    state blows up or becomes non-finite.
    """
    eng = _Engine(config, initial)
    stride = config.diag_stride
    n_rows = eng.n_steps // stride + 1
    sample_dt = stride * eng.dt

    d_samples = np.empty(n_rows)
    diag = DiagnosticsSeries(
        t=np.empty(n_rows),
        V=np.empty(n_rows),
        D=np.empty(n_rows),
        d_X=np.empty(n_rows),
        L=np.empty(n_rows),
        momentum=np.empty((n_rows, initial.x.shape[1])),
        phi_lower=np.empty(n_rows),
    )
    lyap = _LyapunovAccumulator(
        eng.nodes, eng.weights, sample_dt, _l_coefficient(config.lam, config.dist)
    )
    d0_pre = _instantaneous_dissipation(initial.x, initial.v, eng.beta)
    dx0 = _diameter(initial.x)

    def record(row: int, k: int) -> None:
        t = k * eng.dt
        x, v, _ = eng.history.grid_state(k)
        Xq, Vq = eng._delayed_states(t)
        psi_q = (1.0 + np.einsum(
            "qijk,qijk->qij",
            Xq[:, :, None, :] - Xq[:, None, :, :],
            Xq[:, :, None, :] - Xq[:, None, :, :],
        )) ** -eng.beta
        dv = Vq[:, :, None, :] - Vq[:, None, :, :]
        dv2 = np.einsum("qijk,qijk->qij", dv, dv)
        inst = 0.5 * np.einsum("qij->q", psi_q * dv2)
        d_val = float(np.dot(eng.weights, inst))
        d_samples[row] = d_val
        diag.t[row] = t
        diag.V[row] = velocity_fluctuation(v)
        diag.D[row] = d_val
        diag.d_X[row] = _diameter(x)
        diag.momentum[row] = v.sum(axis=0)
        diag.L[row] = diag.V[row] + lyap.value(d_samples, row, d0_pre)

    def trim(n_rows_done: int):
        for name in ("t", "V", "D", "d_X", "L", "phi_lower"):
            setattr(diag, name, getattr(diag, name)[:n_rows_done])
        diag.momentum = diag.momentum[:n_rows_done]

    record(0, 0)
    l0 = diag.L[0]
    sqrt_2l0 = math.sqrt(2.0 * max(l0, 0.0))
    diag.phi_lower[0] = (1.0 + dx0**2) ** -eng.beta

    row = 1
    try:
        for k in range(eng.n_steps):
            eng.step(k)
            try:
                eng.check_finite(k + 1)
            except _BlowUp as exc:
                trim(row)
                raise NonFiniteState(str(exc), history=eng.history, diagnostics=diag)
            if (k + 1) % stride == 0:
                record(row, k + 1)
                r = dx0 + sqrt_2l0 * diag.t[row]
                diag.phi_lower[row] = (1.0 + r * r) ** -eng.beta
                row += 1
    except NonFiniteState:
        raise
    return eng.history, diag


def _delay_avg_dissipation(history: History, t: float, quad: Quadrature, beta: float) -> float:
    """D(t): quadrature of the instantaneous dissipation over the delay lag."""
    Xq, Vq = history.states_at(t - quad.nodes)
    psi_q = (1.0 + np.einsum(
        "qijk,qijk->qij",
        Xq[:, :, None, :] - Xq[:, None, :, :],
        Xq[:, :, None, :] - Xq[:, None, :, :],
    )) ** -beta
    dv = Vq[:, :, None, :] - Vq[:, None, :, :]
    dv2 = np.einsum("qijk,qijk->qij", dv, dv)
    return float(np.dot(quad.weights, 0.5 * np.einsum("qij->q", psi_q * dv2)))


def diagnostics_at(history: History, t: float, config: SimConfig) -> dict:
    """One diagnostics row recomputed from a stored trajectory."""
    quad = config.quadrature()
    beta = config.rate.beta
    state = history.state_at(t)
    d_val = _delay_avg_dissipation(history, t, quad, beta)

    coef = _l_coefficient(config.lam, config.dist)
    d0_pre = _instantaneous_dissipation(history.pre_x, history.pre_v, beta)
    sample_dt = config.diag_stride * history.dt
    m = int(round(t / sample_dt)) if sample_dt > 0 else 0
    lyap = _LyapunovAccumulator(quad.nodes, quad.weights, sample_dt, coef)
    if coef != 0.0:
        w = min(m, lyap.window)
        sigmas = t - np.arange(w, -1, -1) * sample_dt
        d_samples = np.array(
            [_delay_avg_dissipation(history, sigma, quad, beta) for sigma in sigmas]
        )
        l_term = lyap.value(d_samples, w, d0_pre)
    else:
        l_term = 0.0

    v_val = velocity_fluctuation(state.v)
    dx0 = _diameter(history.pre_x)
    l0 = velocity_fluctuation(history.pre_v) + coef * quad.integrate(
        lambda s: s * 0.5 * d0_pre * s**2
    )
    r = dx0 + math.sqrt(2.0 * max(l0, 0.0)) * t
    return {
        "t": t,
        "V": v_val,
        "D": d_val,
        "d_X": _diameter(state.x),
        "L": v_val + l_term,
        "momentum": state.v.sum(axis=0),
        "phi_lower": (1.0 + r * r) ** -beta,
    }


def fit_decay_rate(series: DiagnosticsSeries, window: tuple) -> float:
    """Exponential decay rate of V from a least-squares fit of log V."""
    t_a, t_b = window
    mask = (series.t >= t_a) & (series.t <= t_b)
    if int(mask.sum()) < 8:
        raise DegenerateWindow(f"need >= 8 samples in window [{t_a}, {t_b}]")
    v = series.V[mask]
    if np.any(v <= 0.0):
        raise DegenerateWindow("V touches zero inside the fit window")
    slope = np.polyfit(series.t[mask], np.log(v), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class Violation:
    kind: str
    t: float
    s: float
    observed: float
    bound: float


@dataclass
class ViolationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self) -> int:
        return len(self.violations)


def verify_estimates(
    series: DiagnosticsSeries,
    kappa: float,
    config: SimConfig,
    run_l_zero: float,
) -> ViolationReport:
    """Check the certified inequalities against a recorded run.

    Verified, with small floating-point slack:
      * two-sided drift bound  e^(-kappa*s) D(t) < D(t-s) < e^(kappa*s) D(t)
        on all sampled t and all quadrature nodes s > 0;
      * monotonicity of the Lyapunov aggregate, L(t) <= L(0);
      * linear diameter growth, d_X(t) <= d_X(0) + sqrt(2 L(0)) t;
      * the integrated decay bound
        V(t) <= V(0) exp(-omega int_0^t psi(d_X(0) + sqrt(2 L(0)) u) du).

    Violations are returned as data, not raised.
    """
    report = ViolationReport()
    t = series.t
    d = series.D
    lam = config.lam
    nodes = config.quadrature().nodes
    for s in nodes[nodes > 0.0]:
        lagged = np.interp(t - s, t, d, left=d[0])
        grow = math.exp(kappa * s) if kappa * s < 700 else math.inf
        shrink = math.exp(-kappa * s)
        upper = grow * d + 1e-9 * d
        lower = shrink * d - 1e-9 * d
        for i in np.nonzero(lagged > upper)[0]:
            report.violations.append(
                Violation("drift_upper", float(t[i]), float(s), float(lagged[i]), float(upper[i]))
            )
        for i in np.nonzero(lagged < lower)[0]:
            report.violations.append(
                Violation("drift_lower", float(t[i]), float(s), float(lagged[i]), float(lower[i]))
            )

    l_bound = run_l_zero * (1.0 + 1e-9)
    for i in np.nonzero(series.L > l_bound)[0]:
        report.violations.append(
            Violation("lyapunov", float(t[i]), math.nan, float(series.L[i]), l_bound)
        )

    dx0 = series.d_X[0]
    sqrt_2l0 = math.sqrt(2.0 * max(run_l_zero, 0.0))
    diam_bound = dx0 + sqrt_2l0 * t + 1e-9
    for i in np.nonzero(series.d_X > diam_bound)[0]:
        report.violations.append(
            Violation("diameter", float(t[i]), math.nan, float(series.d_X[i]), float(diam_bound[i]))
        )

    omega = 2.0 * lam * (1.0 - 2.0 * lam * math.sqrt(config.dist.k_moment(kappa)))
    beta = config.rate.beta
    radius = dx0 + sqrt_2l0 * t
    psi_floor = (1.0 + radius * radius) ** -beta
    seg = 0.5 * np.diff(t) * (psi_floor[1:] + psi_floor[:-1])
    psi_int = np.concatenate(([0.0], np.cumsum(seg)))
    decay_bound = series.V[0] * np.exp(-omega * psi_int) * (1.0 + 1e-9) + 1e-300
    for i in np.nonzero(series.V > decay_bound)[0]:
        report.violations.append(
            Violation("decay", float(t[i]), math.nan, float(series.V[i]), float(decay_bound[i]))
        )
    return report


# --------------------------------------------------------------------- csv


def write_diagnostics_csv(series: DiagnosticsSeries, path: str) -> None:
    dim = series.momentum.shape[1]
    header = ["t", "V", "D", "dX", "L"] + [f"mom_{j + 1}" for j in range(dim)] + ["phi_lower"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(series.t)):
            row = (
                [series.t[i], series.V[i], series.D[i], series.d_X[i], series.L[i]]
                + list(series.momentum[i])
                + [series.phi_lower[i]]
            )
            writer.writerow([DIAG_FLOAT_FMT % v for v in row])


def read_diagnostics_csv(path: str) -> DiagnosticsSeries:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = sum(1 for name in header if name.startswith("mom_"))
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows) if rows else np.empty((0, 6 + dim))
    return DiagnosticsSeries(
        t=data[:, 0],
        V=data[:, 1],
        D=data[:, 2],
        d_X=data[:, 3],
        L=data[:, 4],
        momentum=data[:, 5 : 5 + dim],
        phi_lower=data[:, 5 + dim],
    )

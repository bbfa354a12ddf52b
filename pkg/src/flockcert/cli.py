"""Command-line front end: feasibility checks, figure data, runs, sweeps.

Exit codes: 0 success (and feasible, for ``check``), 2 usage/input error,
3 infeasible (``check`` only), 4 numerical abort (partial CSV retained).

All CSV output is RFC 4180 with a mandatory header row, ``.`` decimal
separator, floats at 17 significant digits and ``inf`` for unbounded
thresholds.  Sweep and curve points are pure functions of their inputs, so
parallel execution (``--jobs`` / ``FLOCKCERT_JOBS``) is bit-identical to
serial.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import conditions
from .conditions import (
    LAMBDA_MU_MAX,
    ConditionInput,
    critical_v0_exponential_paper,
    critical_v0_numeric,
    evaluate,
)
from .delays import Dirac, Exponential, Linear, Uniform, parse_distribution
from .errors import DegenerateWindow, DomainViolation, FlockcertError, NonFiniteState
from .rates import CommunicationRate
from .sim import (
    SimConfig,
    SwarmState,
    fit_decay_rate,
    run,
    velocity_fluctuation,
    verify_estimates,
    write_diagnostics_csv,
)
from .sim import _instantaneous_dissipation

FLOAT_FMT = "%.17g"

FIGURES = {
    "fig1": ("exp_fig1", (0.01, LAMBDA_MU_MAX, 200)),
    "fig2": ("uniform_fig2", (0.0, 0.17, 100)),
    "fig3": ("uniform_fig3", (0.2, 0.3, 100)),
    "fig4": ("linear_fig4", (0.05, 0.4, 100)),
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def _default_jobs() -> int:
    env = os.environ.get("FLOCKCERT_JOBS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _make_initial(n: int, dim: int, seed: int, pos_box: float, vel_dispersion: float) -> SwarmState:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-pos_box, pos_box, (n, dim))
    v = rng.normal(0.0, vel_dispersion, (n, dim))
    v -= v.mean(axis=0)  # prescribed zero mean velocity
    return SwarmState(0.0, x, v)


def _alpha_of(args) -> float:
    return args.alpha if args.alpha is not None else 2.0 * args.beta


# ------------------------------------------------------------------- check


def _condition_input(args):
    dist = parse_distribution(args.dist)
    alpha = _alpha_of(args)
    if args.v0 is not None:
        if args.n_agents is not None:
            raise ValueError("--v0 and --N are mutually exclusive for check")
        v0, d0 = args.v0, args.d0
    else:
        if args.n_agents is None:
            raise ValueError("check needs either --v0 or an initial-condition spec (--N ...)")
        state = _make_initial(args.n_agents, args.dim, args.seed, args.pos_box, args.vel_dispersion)
        v0 = velocity_fluctuation(state.v)
        d0 = min(_instantaneous_dissipation(state.x, state.v, args.beta), v0)
    return ConditionInput(
        lam=args.lam, dist=dist, alpha=alpha, v0=v0, d0=d0, use_weak_form=args.weak
    )


def condition_report_json(inp: ConditionInput) -> dict:
    report = evaluate(inp)
    numeric = critical_v0_numeric(inp.dist, inp.lam, inp.alpha)
    out = {
        "input": {
            "lambda": inp.lam,
            "dist": inp.dist.literal(),
            "beta_or_alpha": inp.alpha,
            "v0": inp.v0,
            "d0": inp.d0,
            "weak": inp.use_weak_form,
        },
        "m2_margin": report.m2_margin,
        "kappa_star": report.kappa_star,
        "k_margin": report.k_margin_at_star,
        "mexp_margin": report.mexp_margin_at_star,
        "feasible": report.feasible,
        "omega": report.omega,
        "l_zero": report.l_zero,
        "critical_v0_numeric": numeric,
    }
    if isinstance(inp.dist, Exponential):
        lm = inp.lam * inp.dist.mu
        if 0.0 < lm <= LAMBDA_MU_MAX and inp.alpha > 0.0:
            out["critical_v0_paper"] = critical_v0_exponential_paper(lm, inp.alpha)
    return out


def cmd_check(args) -> int:
    inp = _condition_input(args)
    payload = condition_report_json(inp)
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if payload["feasible"] else 3


# ---------------------------------------------------------------- critical


def _parse_grid(spec: str):
    lo, hi, count = spec.split(":")
    count = int(count)
    if count < 0:
        raise ValueError("grid count must be >= 0")
    return np.linspace(float(lo), float(hi), count)


def cmd_critical(args) -> int:
    if args.fig not in FIGURES:
        raise ValueError(f"unknown figure id {args.fig!r}; expected fig1..fig4")
    family, (lo, hi, count) = FIGURES[args.fig]
    grid = _parse_grid(args.grid) if args.grid else np.linspace(lo, hi, count)
    header, rows = conditions.critical_curve(family, grid, _alpha_of_critical(args), jobs=args.jobs)
    _write_csv(args.out, header, rows)
    return 0


def _alpha_of_critical(args) -> float:
    return args.alpha if args.alpha is not None else 1.0


# ---------------------------------------------------------------- simulate


def _sim_config(args, dist) -> SimConfig:
    return SimConfig(
        lam=args.lam,
        rate=CommunicationRate(args.beta),
        dist=dist,
        t_end=args.tmax,
        dt=args.dt,
        quad_order=args.quad_order,
        tail_mass_tol=args.tail_tol,
        seed=args.seed,
        diag_stride=args.diag_stride,
    )


def _summarize_run(cfg: SimConfig, initial: SwarmState, diag, alpha: float) -> dict:
    v0 = velocity_fluctuation(initial.v)
    d0 = min(_instantaneous_dissipation(initial.x, initial.v, cfg.rate.beta), v0)
    inp = ConditionInput(lam=cfg.lam, dist=cfg.dist, alpha=alpha, v0=v0, d0=d0)
    report = evaluate(inp)
    try:
        fitted = fit_decay_rate(diag, (cfg.t_end / 4.0, 3.0 * cfg.t_end / 4.0))
    except DegenerateWindow:
        fitted = None
    violations = None
    if report.feasible:
        violations = verify_estimates(diag, report.kappa_star, cfg, report.l_zero).count()
    return {
        "V0": v0,
        "D0": d0,
        "L0": report.l_zero,
        "fitted_decay_rate": fitted,
        "feasible": report.feasible,
        "omega": report.omega,
        "violations_count": violations,
    }


def cmd_simulate(args) -> int:
    dist = parse_distribution(args.dist)
    cfg = _sim_config(args, dist)
    cfg.validate()
    initial = _make_initial(args.n_agents, args.dim, args.seed, args.pos_box, args.vel_dispersion)
    try:
        _, diag = run(cfg, initial)
    except NonFiniteState as exc:
        if exc.diagnostics is not None:
            write_diagnostics_csv(exc.diagnostics, args.out)
        print(f"error: {exc}", file=sys.stderr)
        return 4
    write_diagnostics_csv(diag, args.out)
    print(json.dumps(_summarize_run(cfg, initial, diag, _alpha_of(args)), indent=2))
    return 0


# ------------------------------------------------------------------- sweep

_AXIS_DIST_PARAM = {
    "mu": ("exponential", lambda d, x: Exponential(mu=x)),
    "tau": ("dirac", lambda d, x: Dirac(tau=x)),
    "a": ("uniform", lambda d, x: Uniform(a_lo=x, b_hi=d.b_hi)),
    "b": ("uniform", lambda d, x: Uniform(a_lo=d.a_lo, b_hi=x)),
    "A": ("linear", lambda d, x: Linear(a_max=x)),
}


def _parse_axis(spec: str):
    name, eq, rng = spec.partition("=")
    if not eq:
        raise ValueError(f"malformed axis {spec!r}; expected name=lo:hi:count")
    name = name.strip()
    if name not in {"lambda", "v0", "beta"} | set(_AXIS_DIST_PARAM):
        raise ValueError(f"unknown sweep axis {name!r}")
    return name, np.sort(_parse_grid(rng))


class _SweepPoint:
    """One sweep evaluation; picklable for the worker pool."""

    def __init__(self, args, axis_name: str):
        self.axis = axis_name
        self.dist_literal = args.dist
        self.lam = args.lam
        self.beta = args.beta
        self.alpha = args.alpha
        self.v0 = args.v0
        self.d0 = args.d0
        self.weak = args.weak
        self.sim = args.n_agents is not None
        if self.sim:
            self.sim_args = (
                args.n_agents, args.dim, args.seed, args.pos_box, args.vel_dispersion,
                args.dt, args.tmax, args.quad_order, args.tail_tol, args.diag_stride,
            )

    def __call__(self, x: float) -> tuple:
        x = float(x)
        dist = parse_distribution(self.dist_literal)
        lam, beta, v0 = self.lam, self.beta, self.v0
        if self.axis == "lambda":
            lam = x
        elif self.axis == "v0":
            v0 = x
        elif self.axis == "beta":
            beta = x
        else:
            kind, rebuild = _AXIS_DIST_PARAM[self.axis]
            if not dist.literal().startswith(kind):
                raise ValueError(
                    f"axis {self.axis!r} requires a {kind} base distribution"
                )
            dist = rebuild(dist, x)
        alpha = self.alpha if self.alpha is not None else 2.0 * beta

        fitted = None
        if self.sim:
            n, dim, seed, box, disp, dt, tmax, order, tol, stride = self.sim_args
            cfg = SimConfig(
                lam=lam, rate=CommunicationRate(beta), dist=dist, t_end=tmax, dt=dt,
                quad_order=order, tail_mass_tol=tol, seed=seed, diag_stride=stride,
            )
            cfg.validate()
            initial = _make_initial(n, dim, seed, box, disp)
            v0 = velocity_fluctuation(initial.v)
            d0 = min(_instantaneous_dissipation(initial.x, initial.v, beta), v0)
            inp = ConditionInput(lam=lam, dist=dist, alpha=alpha, v0=v0, d0=d0)
            try:
                _, diag = run(cfg, initial)
                fitted = fit_decay_rate(diag, (tmax / 4.0, 3.0 * tmax / 4.0))
            except (NonFiniteState, DegenerateWindow):
                fitted = None
        else:
            if v0 is None:
                raise ValueError("sweep needs --v0 or an initial-condition spec")
            inp = ConditionInput(
                lam=lam, dist=dist, alpha=alpha, v0=v0, d0=self.d0, use_weak_form=self.weak
            )
        report = evaluate(inp)
        row = (
            x, dist.literal(), lam, alpha, inp.v0,
            report.feasible, report.kappa_star, report.omega,
        )
        return row + ((fitted,) if self.sim else ())


def cmd_sweep(args) -> int:
    axis_name, grid = _parse_axis(args.axis)
    point = _SweepPoint(args, axis_name)
    header = ["axis_value", "dist", "lambda", "alpha", "v0", "feasible", "kappa_star", "omega"]
    if point.sim:
        header.append("fitted_decay_rate")
    if len(grid) == 0:
        _write_csv(args.out, header, [])
        return 0
    if args.jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(point, grid, chunksize=4))
    else:
        rows = [point(x) for x in grid]
    _write_csv(args.out, header, rows)
    return 0


# ----------------------------------------------------------------- figures


def cmd_figures(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for fig, (family, (lo, hi, count)) in FIGURES.items():
        header, rows = conditions.critical_curve(
            family, np.linspace(lo, hi, count), _alpha_of_critical(args), jobs=args.jobs
        )
        _write_csv(os.path.join(args.out, f"{fig}.csv"), header, rows)
    return 0


# ------------------------------------------------------------------ parser


def _add_condition_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", required=True, help="distribution literal, e.g. exponential:mu=0.05")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="coupling strength")
    p.add_argument("--beta", type=float, default=0.0, help="communication rate exponent")
    p.add_argument("--alpha", type=float, default=None, help="override log-derivative constant (default 2*beta)")
    p.add_argument("--v0", type=float, default=None, help="initial velocity fluctuation V(0)")
    p.add_argument("--d0", type=float, default=None, help="initial dissipation D(0)")
    p.add_argument("--weak", action="store_true", help="use the conservative D(0) <= V(0) bound")


def _add_ic_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--N", dest="n_agents", type=int, default=None, required=required, help="number of agents")
    p.add_argument("--dim", type=int, default=2, help="space dimension")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed for initial data")
    p.add_argument("--pos-box", type=float, default=1.0, help="half-width of the initial position box")
    p.add_argument("--vel-dispersion", type=float, default=1.0, help="initial velocity std dev")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, default=None, help="integrator step (default min(1e-2, horizon/40))")
    p.add_argument("--tmax", type=float, default=10.0, help="simulation end time")
    p.add_argument("--quad-order", type=int, default=32, help="delay quadrature order")
    p.add_argument("--tail-tol", type=float, default=1e-12, dest="tail_tol", help="delay tail mass tolerance")
    p.add_argument("--diag-stride", type=int, default=1, help="diagnostics sampling stride")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flockcert",
        description="Certify and simulate exponential flocking under distributed reaction delays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate the flocking conditions, emit a JSON report")
    _add_condition_flags(p)
    _add_ic_flags(p, required=False)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("critical", help="tabulate a critical-threshold curve to CSV")
    p.add_argument("--fig", required=True, help="figure id: fig1..fig4")
    p.add_argument("--grid", default=None, help="override abscissae as lo:hi:count")
    p.add_argument("--alpha", type=float, default=None, help="log-derivative constant (default 1)")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("simulate", help="integrate the delay system, emit diagnostics CSV + JSON summary")
    _add_condition_flags(p)
    _add_ic_flags(p, required=True)
    _add_sim_flags(p)
    p.add_argument("--out", required=True, help="diagnostics CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter axis, emit long-format CSV")
    _add_condition_flags(p)
    _add_ic_flags(p, required=False)
    _add_sim_flags(p)
    p.add_argument("--axis", required=True, help="axis as name=lo:hi:count (lambda, mu, a, b, A, tau, v0, beta)")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="emit all four default figure CSVs into a directory")
    p.add_argument("--alpha", type=float, default=None, help="log-derivative constant (default 1)")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, DomainViolation, FlockcertError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

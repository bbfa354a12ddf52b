"""Certificates and simulation for velocity-alignment swarms with
distributed reaction delays.

The package answers three questions about the delayed alignment model:

1. Do coupling strength, delay measure and initial data satisfy the
   sufficient conditions for exponential flocking?  (``conditions``)
2. How large may the initial velocity fluctuation be before the
   certificate fails?  (critical thresholds and figure curves)
3. Does a direct simulation of the delay system confirm the certified
   behavior?  (``sim`` and its inequality verifiers)
"""

from .conditions import (
    ConditionInput,
    ConditionReport,
    check_conditions,
    critical_curve,
    critical_v0_exponential_paper,
    critical_v0_numeric,
    evaluate,
    find_kappa,
    l_zero,
    linear_constraint_f,
    max_uniform_length,
)
from .delays import (
    DelayDistribution,
    Dirac,
    Exponential,
    Linear,
    MomentValues,
    Quadrature,
    Uniform,
    parse_distribution,
)
from .errors import (
    ConfigInvalid,
    DegenerateWindow,
    DivergentMoment,
    DomainViolation,
    FlockcertError,
    HistoryUnderflow,
    InvalidOrder,
    NegativeDistance,
    NonFiniteState,
)
from .rates import AssumptionReport, CommunicationRate, TailBound
from .sim import (
    DiagnosticsSeries,
    History,
    SimConfig,
    SwarmState,
    Violation,
    ViolationReport,
    accelerations,
    diagnostics_at,
    fit_decay_rate,
    read_diagnostics_csv,
    run,
    velocity_fluctuation,
    verify_estimates,
    write_diagnostics_csv,
)

__version__ = "0.1.0"

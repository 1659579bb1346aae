"""Parallel-in-time ODE solving with ensemble acceleration.

The deterministic solver (:func:`run_parareal`) combines a cheap coarse
integrator with an expensive fine integrator through an iterative
predictor-corrector over time sub-intervals.  The ensemble variant
(:func:`run_stochastic_parareal`) additionally draws candidate initial
values around each unconverged boundary, propagates them all in parallel,
and keeps the best-connected candidates, often converging in far fewer
iterations for the price of more parallel work.

Typical use::

    from pintsol import get_problem, run_parareal

    case = get_problem("lorenz")
    result = run_parareal(case.system, case.mesh, case.config())
    print(result.iterations, result.converged)

Everything is reproducible: sampled runs are a pure function of the
configured seed, independent of scheduling.
"""

from .core import (
    Array,
    BlowUpError,
    FactorizationError,
    OdeSystem,
    SamplingRule,
    SolverConfig,
    TimeMesh,
    make_mesh,
    mesh_from_steps,
    state_vector,
)
from .experiments import (
    CurvePoint,
    ErrorProfile,
    KDistribution,
    SweepEntry,
    coarse_step_sweep,
    error_profile,
    estimate_k_distribution,
    expectation_curve,
)
from .integrators import (
    CallTally,
    Propagator,
    Trajectory,
    coarse_propagator,
    fine_propagator,
    propagate,
    propagate_many,
    propagate_trajectory,
    rk4_step,
    serial_fine_trajectory,
)
from .parareal import RunResult, run_parareal
from .problems import PROBLEM_NAMES, BenchmarkCase, get_problem
from .rng import RandomStream
from .sampling import (
    SampleBatch,
    SamplingMoments,
    correlation_factor,
    moments_for_rule,
    pearson_correlation,
    sample_gaussian,
    sample_tcopula,
)
from .stochastic import ProcessorLedger, run_stochastic_parareal

__version__ = "0.1.0"

__all__ = [
    "Array",
    "BlowUpError",
    "FactorizationError",
    "OdeSystem",
    "SamplingRule",
    "SolverConfig",
    "TimeMesh",
    "make_mesh",
    "mesh_from_steps",
    "state_vector",
    "CallTally",
    "Propagator",
    "Trajectory",
    "coarse_propagator",
    "fine_propagator",
    "propagate",
    "propagate_many",
    "propagate_trajectory",
    "rk4_step",
    "serial_fine_trajectory",
    "RunResult",
    "run_parareal",
    "run_stochastic_parareal",
    "ProcessorLedger",
    "RandomStream",
    "SampleBatch",
    "SamplingMoments",
    "correlation_factor",
    "moments_for_rule",
    "pearson_correlation",
    "sample_gaussian",
    "sample_tcopula",
    "PROBLEM_NAMES",
    "BenchmarkCase",
    "get_problem",
    "CurvePoint",
    "ErrorProfile",
    "KDistribution",
    "SweepEntry",
    "coarse_step_sweep",
    "error_profile",
    "estimate_k_distribution",
    "expectation_curve",
    "__version__",
]

"""Core value types for parallel-in-time ODE solving.

States are plain float64 numpy arrays of shape ``(d,)``.  They are validated
once at the boundary (:func:`state_vector`) and treated as immutable
afterwards; the solvers never write into a state they were handed.

Right-hand sides must broadcast: ``rhs(u, t)`` receives ``u`` of shape
``(d,)`` or ``(m, d)`` together with a scalar or shape-``(m,)`` time and
returns an array of the same shape as ``u``.  All bundled benchmark systems
follow this convention, which is what lets the solvers propagate many
initial values as one vectorized batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable

import numpy as np

__all__ = [
    "Array",
    "RhsFunction",
    "BlowUpError",
    "FactorizationError",
    "state_vector",
    "inf_norm",
    "two_norm",
    "OdeSystem",
    "TimeMesh",
    "make_mesh",
    "mesh_from_steps",
    "SamplingRule",
    "SolverConfig",
]

Array = np.ndarray
RhsFunction = Callable[[Array, "float | Array"], Array]

#: Relative tolerance for "this float ratio is really an integer" checks.
RATIO_RTOL = 1e-9


class BlowUpError(RuntimeError):
    """A propagation produced a non-finite state (NaN or infinity)."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class FactorizationError(RuntimeError):
    """A correlation matrix could not be factorized even after repair."""


def state_vector(values) -> Array:
    """Validate and freeze a d-dimensional state.

    Parameters
    ----------
    values : array_like
        One-dimensional sequence of finite reals, d >= 1.

    Returns
    -------
    numpy.ndarray
        Read-only float64 array of shape ``(d,)``.
    """
    u = np.array(values, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise ValueError(f"state must be a non-empty 1-D vector, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("state components must all be finite")
    u.setflags(write=False)
    return u


def inf_norm(u: Array) -> float:
    """Maximum absolute component.  Used by the convergence checks."""
    return float(np.max(np.abs(u)))


def two_norm(u: Array) -> float:
    """Euclidean length.  Used when ranking sampled initial values."""
    u = np.asarray(u, dtype=np.float64)
    return float(np.sqrt(np.dot(u, u)))


@dataclass(frozen=True)
class OdeSystem:
    """An initial value problem du/dt = rhs(u, t) on [t0, t_end].

    Parameters
    ----------
    rhs : callable
        Vector field following the broadcasting convention in the module
        docstring.
    initial_value : array_like
        State at ``t0``; validated through :func:`state_vector`.
    t0, t_end : float
        Integration window, ``t_end > t0``.
    name : str
        Label used in reports and error messages.
    """

    rhs: RhsFunction
    initial_value: Array
    t0: float
    t_end: float
    name: str = "system"

    def __post_init__(self):
        object.__setattr__(self, "initial_value", state_vector(self.initial_value))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t_end", float(self.t_end))
        if not np.isfinite(self.t0) or not np.isfinite(self.t_end):
            raise ValueError("t0 and t_end must be finite")
        if not self.t_end > self.t0:
            raise ValueError(f"t_end must exceed t0, got [{self.t0}, {self.t_end}]")
        # One-shot sanity probe; full shape correctness is the rhs author's contract.
        probe = np.asarray(self.rhs(self.initial_value, self.t0), dtype=np.float64)
        if probe.shape != self.initial_value.shape:
            raise ValueError(
                f"rhs returned shape {probe.shape} for state shape "
                f"{self.initial_value.shape}"
            )
        if not np.all(np.isfinite(probe)):
            raise ValueError("rhs is non-finite at the initial condition")

    @property
    def dimension(self) -> int:
        return self.initial_value.shape[0]


@dataclass(frozen=True)
class TimeMesh:
    """Three-level time discretization of ``[t0, t_end]``.

    The window splits into ``n_subintervals`` equal sub-intervals; each
    sub-interval holds ``coarse_per_subinterval`` coarse steps and each
    coarse step holds ``fine_per_coarse`` fine steps.  Storing integer
    counts (rather than float step sizes) makes the three grids nest
    exactly, with no accumulated drift.
    """

    t0: float
    t_end: float
    n_subintervals: int
    coarse_per_subinterval: int
    fine_per_coarse: int

    def __post_init__(self):
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t_end", float(self.t_end))
        if not self.t_end > self.t0:
            raise ValueError("mesh needs t_end > t0")
        if self.n_subintervals < 1:
            raise ValueError("need at least one sub-interval")
        if self.coarse_per_subinterval < 1:
            raise ValueError("need at least one coarse step per sub-interval")
        if self.fine_per_coarse < 2:
            # The fine solver must genuinely resolve below the coarse one.
            raise ValueError("fine step must be at least 2x smaller than coarse step")

    @property
    def subinterval_length(self) -> float:
        return (self.t_end - self.t0) / self.n_subintervals

    @property
    def coarse_step(self) -> float:
        return self.subinterval_length / self.coarse_per_subinterval

    @property
    def fine_step(self) -> float:
        return self.subinterval_length / (self.coarse_per_subinterval * self.fine_per_coarse)

    @property
    def fine_per_subinterval(self) -> int:
        return self.coarse_per_subinterval * self.fine_per_coarse

    @property
    def n_fine_total(self) -> int:
        return self.n_subintervals * self.fine_per_subinterval

    def boundary(self, n: int) -> float:
        """Time of the n-th sub-interval boundary, 0 <= n <= N."""
        if not 0 <= n <= self.n_subintervals:
            raise IndexError(f"boundary index {n} outside [0, {self.n_subintervals}]")
        return self.t0 + n * self.subinterval_length

    def boundaries(self) -> Array:
        """All N + 1 sub-interval boundary times."""
        return self.t0 + np.arange(self.n_subintervals + 1) * self.subinterval_length


def make_mesh(
    system: OdeSystem,
    n_subintervals: int,
    coarse_per_subinterval: int,
    fine_per_coarse: int,
) -> TimeMesh:
    """Build the nested mesh for ``system``'s window from integer counts."""
    return TimeMesh(
        t0=system.t0,
        t_end=system.t_end,
        n_subintervals=int(n_subintervals),
        coarse_per_subinterval=int(coarse_per_subinterval),
        fine_per_coarse=int(fine_per_coarse),
    )


def _integer_ratio(value: float, unit: float, what: str) -> int:
    n = round(value / unit)
    if n < 1 or abs(n * unit - value) > RATIO_RTOL * abs(value):
        raise ValueError(f"{what}: {value!r} is not an integer multiple of {unit!r}")
    return n


def mesh_from_steps(
    system: OdeSystem,
    n_subintervals: int,
    coarse_step: float,
    fine_step: float,
) -> TimeMesh:
    """Build a mesh from float step sizes.

    The steps must nest (sub-interval length an integer multiple of the
    coarse step, coarse step an integer multiple of the fine step) to a
    relative deviation below 1e-9, otherwise ValueError is raised.
    """
    n_subintervals = int(n_subintervals)
    if n_subintervals < 1:
        raise ValueError("need at least one sub-interval")
    span = (system.t_end - system.t0) / n_subintervals
    cpsi = _integer_ratio(span, coarse_step, "coarse step per sub-interval")
    fpc = _integer_ratio(coarse_step, fine_step, "fine step per coarse step")
    return TimeMesh(system.t0, system.t_end, n_subintervals, cpsi, fpc)


class SamplingRule(IntEnum):
    """Marginal-moment recipes for drawing initial-value samples.

    Rules 1 and 3 centre the samples on the previous iteration's fine
    propagation (the value before the correction); rules 2 and 4 centre
    them on the corrected value itself.  Rules 1-2 draw from a correlated
    multivariate Gaussian, rules 3-4 from a t-copula with uniform
    marginals over [mean - sqrt(3) sigma, mean + sqrt(3) sigma].
    """

    GAUSSIAN_FINE_MEAN = 1
    GAUSSIAN_CORRECTED_MEAN = 2
    COPULA_FINE_MEAN = 3
    COPULA_CORRECTED_MEAN = 4

    @property
    def uses_fine_mean(self) -> bool:
        return self in (SamplingRule.GAUSSIAN_FINE_MEAN, SamplingRule.COPULA_FINE_MEAN)

    @property
    def uses_copula(self) -> bool:
        return self in (SamplingRule.COPULA_FINE_MEAN, SamplingRule.COPULA_CORRECTED_MEAN)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the deterministic and sampled solvers.

    Notes
    -----
    ``tolerance`` may be zero: that disables convergence entirely and
    forces the run through ``max_iterations`` sweeps, which is how the
    exhaustion equivalence with the serial fine solver is exercised.
    ``n_samples`` is the ensemble size M per unconverged sub-interval;
    M = 1 reduces the sampled solver to the deterministic one exactly.
    ``workers`` is an execution hint only and never changes results.
    """

    tolerance: float
    max_iterations: int | None = None
    n_samples: int = 1
    rule: SamplingRule = SamplingRule.GAUSSIAN_FINE_MEAN
    use_correlations: bool = True
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "rule", SamplingRule(self.rule))
        if not np.isfinite(self.tolerance) or self.tolerance < 0.0:
            raise ValueError("tolerance must be finite and >= 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def resolved_max_iterations(self, n_subintervals: int) -> int:
        """Default iteration cap: one sweep per sub-interval."""
        if self.max_iterations is None:
            return n_subintervals
        return self.max_iterations

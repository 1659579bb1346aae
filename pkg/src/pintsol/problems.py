"""Benchmark initial value problems with their reference discretizations.

Each constructor returns a :class:`BenchmarkCase` bundling the system, the
nested time mesh, and the stopping tolerance the case is studied at.  The
parameters are fixed characteristics of the benchmark, not tuning knobs;
the one exception is the Bernoulli case, whose coarse resolution is an
argument because the coarse-step sweep experiment varies it.

All right-hand sides broadcast over leading batch dimensions (see
:mod:`pintsol.core`), which the solvers rely on for vectorized ensemble
propagation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import Array, OdeSystem, SolverConfig, TimeMesh, make_mesh

__all__ = [
    "BenchmarkCase",
    "scalar_nonlinear",
    "bernoulli",
    "brusselator",
    "square_limit_cycle",
    "lorenz",
    "get_problem",
    "PROBLEM_NAMES",
]


@dataclass(frozen=True)
class BenchmarkCase:
    """A system plus the discretization and tolerance it is studied at."""

    name: str
    system: OdeSystem
    mesh: TimeMesh
    tolerance: float
    analytic: Callable[[Array], Array] | None = None

    def config(self, **overrides) -> SolverConfig:
        """Solver configuration at this case's tolerance."""
        base = SolverConfig(tolerance=self.tolerance)
        return replace(base, **overrides) if overrides else base


def _scalar_rhs(u: Array, t) -> Array:
    x = u[..., 0]
    du = (
        np.sin(x) * np.cos(x)
        - 2.0 * x
        + np.exp(-t / 100.0) * np.sin(5.0 * t)
        + np.log1p(t) * np.cos(t)
    )
    return np.stack([du], axis=-1)


def scalar_nonlinear() -> BenchmarkCase:
    """Scalar equation with slow forced oscillations on [0, 100].

    One state component; 40 sub-intervals, coarse step 100/80, fine step
    100/8000, tolerance 1e-10.
    """
    system = OdeSystem(_scalar_rhs, [1.0], 0.0, 100.0, name="scalar")
    mesh = make_mesh(system, n_subintervals=40, coarse_per_subinterval=2, fine_per_coarse=100)
    return BenchmarkCase("scalar", system, mesh, tolerance=1e-10)


def _bernoulli_rhs(u: Array, t) -> Array:
    x = u[..., 0]
    return np.stack([2.0 * x / (1.0 + t) - (t * t) * (x * x)], axis=-1)


def _bernoulli_exact(t) -> Array:
    t = np.asarray(t, dtype=np.float64)
    num = (1.0 + t) ** 2
    den = t**5 / 5.0 + t**4 / 2.0 + t**3 / 3.0 + 0.5
    return np.stack([num / den], axis=-1)


def bernoulli(total_coarse_steps: int = 20) -> BenchmarkCase:
    """Quadratic-decay equation on [0, 10] with a closed-form solution.

    ``total_coarse_steps`` counts coarse steps over the whole window (the
    sweep experiment uses 20, 40, 60); sub-interval count stays at 20, and
    the fine resolution tracks ~2000 steps total, rounded so the grids
    nest exactly.
    """
    n_sub = 20
    if total_coarse_steps % n_sub != 0:
        raise ValueError(f"total coarse steps must be a multiple of {n_sub}")
    cpsi = total_coarse_steps // n_sub
    fpc = round(2000 / total_coarse_steps)
    system = OdeSystem(_bernoulli_rhs, [2.0], 0.0, 10.0, name="bernoulli")
    mesh = make_mesh(system, n_subintervals=n_sub, coarse_per_subinterval=cpsi, fine_per_coarse=fpc)
    return BenchmarkCase("bernoulli", system, mesh, tolerance=1e-10, analytic=_bernoulli_exact)


_BRUSSELATOR_A = 1.0
_BRUSSELATOR_B = 3.0


def _brusselator_rhs(u: Array, t) -> Array:
    x = u[..., 0]
    y = u[..., 1]
    xxy = x * x * y
    return np.stack(
        [
            _BRUSSELATOR_A + xxy - (_BRUSSELATOR_B + 1.0) * x,
            _BRUSSELATOR_B * x - xxy,
        ],
        axis=-1,
    )


def brusselator() -> BenchmarkCase:
    """Oscillating two-species reaction model on [0, 15.3].

    Starts near the attracting limit cycle; 25 sub-intervals, coarse step
    15.3/25, fine step 15.3/2500, tolerance 1e-6.
    """
    system = OdeSystem(_brusselator_rhs, [1.0, 3.07], 0.0, 15.3, name="brusselator")
    mesh = make_mesh(system, n_subintervals=25, coarse_per_subinterval=1, fine_per_coarse=100)
    return BenchmarkCase("brusselator", system, mesh, tolerance=1e-6)


def _square_rhs(u: Array, t) -> Array:
    x = u[..., 0]
    y = u[..., 1]
    return np.stack(
        [
            -np.sin(x) * (np.cos(x) / 10.0 + np.cos(y)),
            -np.sin(y) * (np.cos(y) / 10.0 - np.cos(x)),
        ],
        axis=-1,
    )


def square_limit_cycle() -> BenchmarkCase:
    """Planar system whose attractor is a square-shaped cycle, on [0, 60].

    30 sub-intervals, coarse step 60/30, fine step 60/3000, tolerance 1e-8.
    """
    system = OdeSystem(_square_rhs, [1.5, 1.5], 0.0, 60.0, name="square")
    mesh = make_mesh(system, n_subintervals=30, coarse_per_subinterval=1, fine_per_coarse=100)
    return BenchmarkCase("square", system, mesh, tolerance=1e-8)


_LORENZ_S = 10.0
_LORENZ_R = 28.0
_LORENZ_B = 8.0 / 3.0


def _lorenz_rhs(u: Array, t) -> Array:
    x = u[..., 0]
    y = u[..., 1]
    z = u[..., 2]
    return np.stack(
        [
            _LORENZ_S * (y - x),
            _LORENZ_R * x - x * z - y,
            x * y - _LORENZ_B * z,
        ],
        axis=-1,
    )


def lorenz() -> BenchmarkCase:
    """Chaotic three-component convection model on [0, 18].

    Classic parameter set (10, 28, 8/3); 50 sub-intervals, coarse step
    18/250, fine step 18/18750, tolerance 1e-8.
    """
    system = OdeSystem(_lorenz_rhs, [-15.0, -15.0, 20.0], 0.0, 18.0, name="lorenz")
    mesh = make_mesh(system, n_subintervals=50, coarse_per_subinterval=5, fine_per_coarse=75)
    return BenchmarkCase("lorenz", system, mesh, tolerance=1e-8)


_CONSTRUCTORS: dict[str, Callable[[], BenchmarkCase]] = {
    "scalar": scalar_nonlinear,
    "bernoulli": bernoulli,
    "brusselator": brusselator,
    "square": square_limit_cycle,
    "lorenz": lorenz,
}

PROBLEM_NAMES = tuple(_CONSTRUCTORS)


def get_problem(name: str) -> BenchmarkCase:
    """Look up a benchmark case by CLI name."""
    try:
        return _CONSTRUCTORS[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}"
        ) from None

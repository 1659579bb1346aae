"""Deterministic parallel-in-time solver (predictor-corrector over sub-intervals).

The window splits into N sub-intervals.  A serial coarse pass seeds boundary
values; each iteration then (a) propagates the fine solver from every
unconverged boundary value in parallel and (b) sweeps a serial coarse
correction::

    U_n  <-  fine(U_prev_{n-1})  +  coarse(U_n-1)  -  coarse_prev(U_{n-1})

Convergence is tracked as a contiguous prefix: once the first I boundary
values have stopped moving (successive-iterate difference below tolerance in
the infinity norm), they are frozen and all later work starts at I + 1.  At
most N iterations are ever needed, at which point the boundary values equal
the serial fine composition exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Array, OdeSystem, SolverConfig, TimeMesh, inf_norm
from .integrators import (
    CallTally,
    Propagator,
    Trajectory,
    coarse_propagator,
    fine_propagator,
    propagate,
    propagate_many,
    rk4_step,
    stitch_subinterval_trajectories,
)

__all__ = [
    "PintState",
    "RunResult",
    "zeroth_iteration",
    "parareal_iteration",
    "run_parareal",
]


@dataclass
class PintState:
    """Mutable per-iteration state shared by both solvers.

    Arrays are indexed by sub-interval boundary (0..N).  ``coarse`` and
    ``coarse_prev`` hold the last two sweeps' coarse arrivals, both computed
    from the corrected iterates (ensemble selection never overwrites them).
    ``fine`` holds the fine arrivals used in the latest correction, which
    are the selected candidates' arrivals in an ensemble run.
    ``converged_prefix`` is I: boundaries 0..I are frozen.
    """

    mesh: TimeMesh
    U: Array             # (N + 1, d) current boundary values
    U_prev: Array        # (N + 1, d) previous iteration's boundary values
    coarse: Array        # (N + 1, d)
    coarse_prev: Array   # (N + 1, d)
    fine: Array          # (N + 1, d); NaN until first computed
    converged_prefix: int = 0
    iteration: int = 0
    last_error: float = np.inf

    @property
    def n_subintervals(self) -> int:
        return self.mesh.n_subintervals

    def boundary_errors(self) -> Array:
        """Infinity-norm change of each boundary value in the last sweep."""
        return np.max(np.abs(self.U - self.U_prev), axis=1)


def zeroth_iteration(
    system: OdeSystem, mesh: TimeMesh, tally: CallTally | None = None
) -> PintState:
    """Serial coarse pass seeding every boundary value.

    Not counted as an iteration: ``state.iteration`` stays 0 and the
    convergence prefix is 0 (only the initial value is trusted).
    """
    n = mesh.n_subintervals
    d = system.dimension
    coarse = coarse_propagator(system, mesh)
    U = np.empty((n + 1, d))
    U[0] = system.initial_value
    for i in range(n):
        U[i + 1] = propagate(coarse, U[i], mesh.boundary(i), mesh.boundary(i + 1), tally)
    return PintState(
        mesh=mesh,
        U=U,
        U_prev=U.copy(),
        coarse=U.copy(),
        coarse_prev=U.copy(),
        fine=np.full((n + 1, d), np.nan),
        converged_prefix=0,
        iteration=0,
    )


def apply_correction(
    state: PintState,
    new_fine: Array,
    coarse_replacements: dict[int, Array],
    coarse: Propagator,
    tolerance: float,
    tally: CallTally | None = None,
) -> PintState:
    """Shared second half of an iteration: correction sweep plus convergence.

    ``new_fine`` carries fine arrivals for boundaries I+1..N (other rows are
    ignored).  ``coarse_replacements`` maps a boundary to the coarse arrival
    of the ensemble-selected value propagated into it; the sweep subtracts
    that in place of the stored ``coarse_prev`` entry.  ``coarse`` and
    ``coarse_prev`` themselves always track the corrected iterates, so the
    sweep-to-sweep history read by the sampling moments never sees selection
    stand-ins.  The deterministic solver passes no replacements.  Mutates
    and returns ``state``.
    """
    mesh = state.mesh
    n = state.n_subintervals
    start = state.converged_prefix  # I

    state.U_prev = state.U.copy()
    state.coarse_prev = state.coarse.copy()
    state.fine[start + 1 :] = new_fine[start + 1 :]

    # Serial corrector sweep: each coarse run starts from the value just
    # corrected at the previous boundary.  The coarse difference is formed
    # first so that when both coarse runs saw identical inputs the terms
    # cancel exactly and the boundary value is the fine arrival, bit for bit.
    # Selection replacements never cover boundary I + 1 (its fine arrival
    # comes from the frozen prefix), so that cancellation is untouched.
    for i in range(start + 1, n + 1):
        g = propagate(coarse, state.U[i - 1], mesh.boundary(i - 1), mesh.boundary(i), tally)
        state.coarse[i] = g
        subtracted = coarse_replacements.get(i, state.coarse_prev[i])
        state.U[i] = state.fine[i] + (g - subtracted)

    # Contiguous-prefix convergence: freeze the run of boundaries past I
    # whose successive-iterate change is below tolerance, plus the first
    # boundary after that run.  The extra boundary is safe to freeze: for
    # the first unconverged index the two coarse terms cancel, so its swept
    # value is exactly the fine continuation of the frozen prefix.  This is
    # also why every sweep advances the prefix by at least one.
    errors = state.boundary_errors()
    prefix = start
    while prefix < n and errors[prefix + 1] < tolerance:
        prefix += 1
    state.converged_prefix = min(prefix + 1, n)
    state.last_error = float(np.max(errors[start + 1 :]))
    state.iteration += 1
    return state


def parareal_iteration(
    state: PintState,
    coarse: Propagator,
    fine: Propagator,
    tolerance: float,
    tally: CallTally | None = None,
) -> PintState:
    """One deterministic iteration: parallel fine pass, then the sweep.

    The fine solver runs from every unconverged boundary value as one batch
    (rows I..N-1, the deterministic analogue of one task per processor).
    """
    mesh = state.mesh
    n = state.n_subintervals
    start = state.converged_prefix
    if start >= n:
        raise ValueError("already converged; nothing to iterate")

    t_starts = mesh.boundaries()[start:n]
    arrivals = propagate_many(fine, state.U[start:n], t_starts, tally)
    if not np.all(np.isfinite(arrivals)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(arrivals), axis=1))[0])
        raise _blow_up(state, start + bad)

    new_fine = np.full_like(state.U, np.nan)
    new_fine[start + 1 :] = arrivals
    return apply_correction(state, new_fine, {}, coarse, tolerance, tally)


def _blow_up(state: PintState, subinterval: int):
    from .core import BlowUpError

    t = state.mesh.boundary(subinterval)
    return BlowUpError(
        f"fine propagation from boundary {subinterval} (t = {t:.6g}) "
        "produced a non-finite state",
        time=t,
    )


@dataclass(frozen=True)
class RunResult:
    """Outcome of a full solver run."""

    solver: str
    iterations: int
    converged: bool
    boundary_values: Array
    fine_solution: Trajectory
    per_iteration_error: tuple[float, ...]
    fine_solver_calls: int
    coarse_solver_calls: int
    max_processors_used: int
    processor_usage: tuple[int, ...] = field(default=(), repr=False)
    prefix_history: tuple[int, ...] = field(default=(), repr=False)

    @property
    def final_error(self) -> float:
        return self.per_iteration_error[-1] if self.per_iteration_error else np.inf


def assemble_fine_solution(
    system: OdeSystem, mesh: TimeMesh, boundary_values: Array, tally: CallTally | None = None
) -> Trajectory:
    """One last parallel fine pass recording full trajectories.

    Restarting each sub-interval from its boundary value makes the reported
    trajectory consistent with the converged boundary values (junction
    mismatches are bounded by the stopping tolerance).  All sub-intervals
    advance as one batch; elementwise stepping keeps each row bit-identical
    to a one-at-a-time recording.
    """
    fine = fine_propagator(system, mesh)
    n = mesh.n_subintervals
    steps = fine.steps_per_subinterval
    h = fine.step_size
    if tally is not None:
        tally.add(fine.role, n)
    state = np.array(boundary_values[:-1], dtype=np.float64)
    t_starts = mesh.boundaries()[:n]
    record = np.empty((steps + 1,) + state.shape)
    record[0] = state
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(steps):
            state = rk4_step(system, state, t_starts + j * h, h)
            record[j + 1] = state
    if not np.all(np.isfinite(record)):
        finite_rows = np.all(np.isfinite(record), axis=(0, 2))
        raise _blow_up_message(mesh, int(np.flatnonzero(~finite_rows)[0]))
    offsets = np.arange(steps + 1) * h
    pieces = [
        Trajectory(times=t_starts[i] + offsets, states=record[:, i, :])
        for i in range(n)
    ]
    return stitch_subinterval_trajectories(mesh, pieces)


def _blow_up_message(mesh: TimeMesh, subinterval: int):
    from .core import BlowUpError

    t = mesh.boundary(subinterval)
    return BlowUpError(
        f"fine trajectory from boundary {subinterval} (t = {t:.6g}) "
        "produced a non-finite state",
        time=t,
    )


def run_parareal(system: OdeSystem, mesh: TimeMesh, config: SolverConfig) -> RunResult:
    """Run the deterministic solver to convergence (or the iteration cap)."""
    n = mesh.n_subintervals
    coarse = coarse_propagator(system, mesh)
    fine = fine_propagator(system, mesh)
    tally = CallTally()
    max_iter = config.resolved_max_iterations(n)

    state = zeroth_iteration(system, mesh, tally)
    errors: list[float] = []
    usage: list[int] = []
    prefixes: list[int] = []
    while state.converged_prefix < n and state.iteration < max_iter:
        usage.append(n - state.converged_prefix)  # one fine task per boundary
        parareal_iteration(state, coarse, fine, config.tolerance, tally)
        errors.append(state.last_error)
        prefixes.append(state.converged_prefix)

    trajectory = assemble_fine_solution(system, mesh, state.U, tally)
    return RunResult(
        solver="parareal",
        iterations=state.iteration,
        converged=state.converged_prefix >= n,
        boundary_values=state.U.copy(),
        fine_solution=trajectory,
        per_iteration_error=tuple(errors),
        fine_solver_calls=tally.fine,
        coarse_solver_calls=tally.coarse,
        max_processors_used=max(usage, default=1),
        processor_usage=tuple(usage),
        prefix_history=tuple(prefixes),
    )

"""Fixed-step classical Runge-Kutta integration over nested time grids.

Both solver levels (coarse and fine) use the same fourth-order scheme and
differ only in step size, so solution-quality differences between them come
from resolution alone.  Step counts are integers fixed by the mesh; step
times are computed as ``t_start + j * h`` (never accumulated), so a
propagation's arithmetic is a pure function of its inputs.

Batched propagation (:func:`propagate_many`) advances many initial values
at once through vectorized right-hand sides.  numpy ufuncs are elementwise,
so results are bit-identical to propagating each row alone; a batch is the
deterministic equivalent of farming rows out to parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Array, BlowUpError, OdeSystem, RATIO_RTOL, TimeMesh

__all__ = [
    "rk4_step",
    "Propagator",
    "coarse_propagator",
    "fine_propagator",
    "propagate",
    "propagate_many",
    "propagate_trajectory",
    "Trajectory",
    "serial_fine_trajectory",
    "serial_fine_boundary_values",
    "CallTally",
]


def rk4_step(system: OdeSystem, u: Array, t, h: float) -> Array:
    """One classical fourth-order Runge-Kutta step from ``(u, t)``.

    Broadcasts over leading batch dimensions of ``u`` (with ``t`` scalar or
    one entry per batch row).  The caller is responsible for finiteness
    checks; non-finite stages propagate into the returned state.
    """
    f = system.rhs
    k1 = f(u, t)
    k2 = f(u + (0.5 * h) * k1, t + 0.5 * h)
    k3 = f(u + (0.5 * h) * k2, t + 0.5 * h)
    k4 = f(u + h * k3, t + h)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Propagator:
    """RK4 flow map at a fixed step size.

    ``steps_per_subinterval`` is the exact number of steps spanning one
    mesh sub-interval, so sub-interval propagations never round float
    ratios.
    """

    system: OdeSystem
    step_size: float
    steps_per_subinterval: int
    role: str = "fine"

    def __post_init__(self):
        if self.step_size <= 0.0:
            raise ValueError("step size must be positive")
        if self.steps_per_subinterval < 1:
            raise ValueError("need at least one step per sub-interval")

    def count_steps(self, t_start: float, t_end: float) -> int:
        """Number of steps covering ``[t_start, t_end]`` exactly."""
        span = t_end - t_start
        if span < 0.0:
            raise ValueError("t_end must not precede t_start")
        n = round(span / self.step_size)
        if abs(n * self.step_size - span) > RATIO_RTOL * max(abs(span), self.step_size):
            raise ValueError(
                f"span [{t_start}, {t_end}] is not an integer number of "
                f"steps of {self.step_size}"
            )
        return n


def coarse_propagator(system: OdeSystem, mesh: TimeMesh) -> Propagator:
    """The mesh's coarse solver over one sub-interval."""
    return Propagator(system, mesh.coarse_step, mesh.coarse_per_subinterval, role="coarse")


def fine_propagator(system: OdeSystem, mesh: TimeMesh) -> Propagator:
    """The mesh's fine solver over one sub-interval."""
    return Propagator(system, mesh.fine_step, mesh.fine_per_subinterval, role="fine")


@dataclass
class CallTally:
    """Counts of single-sub-interval solver invocations (one per batch row)."""

    fine: int = 0
    coarse: int = 0

    def add(self, role: str, n: int) -> None:
        if role == "fine":
            self.fine += n
        else:
            self.coarse += n


def propagate(
    prop: Propagator,
    u: Array,
    t_start: float,
    t_end: float,
    tally: CallTally | None = None,
) -> Array:
    """Advance one state across ``[t_start, t_end]``.

    Raises
    ------
    BlowUpError
        If any step produces a non-finite state.
    """
    n_steps = prop.count_steps(t_start, t_end)
    if tally is not None:
        tally.add(prop.role, 1)
    state = np.asarray(u, dtype=np.float64)
    h = prop.step_size
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(n_steps):
            state = rk4_step(prop.system, state, t_start + j * h, h)
            if not np.all(np.isfinite(state)):
                t_fail = t_start + (j + 1) * h
                raise BlowUpError(
                    f"{prop.system.name}: non-finite state at t = {t_fail:.6g} "
                    f"({prop.role} solver)",
                    time=t_fail,
                )
    return state


def propagate_many(
    prop: Propagator,
    states: Array,
    t_starts: Array,
    tally: CallTally | None = None,
) -> Array:
    """Advance a batch of states, each across one sub-interval.

    ``states`` has shape ``(m, d)`` and ``t_starts`` shape ``(m,)``; every
    row covers ``steps_per_subinterval`` steps from its own start time.
    Rows that blow up are carried through as NaN/inf rather than raising:
    callers decide whether a non-finite row is fatal (deterministic sweep)
    or merely discards a sample (ensemble selection).
    """
    out = np.array(states, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"states must be (m, d), got shape {out.shape}")
    t0s = np.asarray(t_starts, dtype=np.float64)
    if t0s.shape != (out.shape[0],):
        raise ValueError("t_starts must hold one start time per row")
    if tally is not None:
        tally.add(prop.role, out.shape[0])
    h = prop.step_size
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(prop.steps_per_subinterval):
            out = rk4_step(prop.system, out, t0s + j * h, h)
    return out


@dataclass(frozen=True)
class Trajectory:
    """A time-ordered record of states on a uniform grid."""

    times: Array   # (n + 1,)
    states: Array  # (n + 1, d)

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states must have matching lengths")
        if self.times.shape[0] < 1:
            raise ValueError("trajectory cannot be empty")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def dimension(self) -> int:
        return self.states.shape[1]


def propagate_trajectory(
    prop: Propagator,
    u: Array,
    t_start: float,
    t_end: float,
    tally: CallTally | None = None,
) -> Trajectory:
    """Like :func:`propagate` but recording every step.

    The final state is bit-identical to ``propagate`` over the same span
    (same step sequence, same arithmetic).
    """
    n_steps = prop.count_steps(t_start, t_end)
    if tally is not None:
        tally.add(prop.role, 1)
    d = np.asarray(u).shape[0]
    h = prop.step_size
    states = np.empty((n_steps + 1, d))
    states[0] = u
    state = np.asarray(u, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(n_steps):
            state = rk4_step(prop.system, state, t_start + j * h, h)
            if not np.all(np.isfinite(state)):
                t_fail = t_start + (j + 1) * h
                raise BlowUpError(
                    f"{prop.system.name}: non-finite state at t = {t_fail:.6g} "
                    f"({prop.role} solver)",
                    time=t_fail,
                )
            states[j + 1] = state
    times = t_start + np.arange(n_steps + 1) * h
    return Trajectory(times=times, states=states)


def stitch_subinterval_trajectories(mesh: TimeMesh, pieces: list[Trajectory]) -> Trajectory:
    """Concatenate one trajectory per sub-interval into a global one.

    At interior junctions the starting point of the next piece is kept (its
    time is the exact mesh boundary and its state is the value the next
    sub-interval was actually propagated from); the final arrival point of
    the last piece closes the record.
    """
    if len(pieces) != mesh.n_subintervals:
        raise ValueError("need exactly one piece per sub-interval")
    times = np.concatenate(
        [p.times[:-1] for p in pieces] + [pieces[-1].times[-1:]]
    )
    states = np.concatenate(
        [p.states[:-1] for p in pieces] + [pieces[-1].states[-1:]]
    )
    return Trajectory(times=times, states=states)


def serial_fine_trajectory(
    system: OdeSystem, mesh: TimeMesh, tally: CallTally | None = None
) -> Trajectory:
    """Reference solution: the fine solver run serially across the window.

    Composed sub-interval by sub-interval (each restart uses the arrival
    value) so its boundary values are exactly the serial composition the
    parallel-in-time solvers must reproduce at exhaustion.
    """
    prop = fine_propagator(system, mesh)
    pieces: list[Trajectory] = []
    u = system.initial_value
    for n in range(mesh.n_subintervals):
        piece = propagate_trajectory(prop, u, mesh.boundary(n), mesh.boundary(n + 1), tally)
        pieces.append(piece)
        u = piece.states[-1]
    return stitch_subinterval_trajectories(mesh, pieces)


def serial_fine_boundary_values(system: OdeSystem, mesh: TimeMesh) -> Array:
    """Fine-solver values at the mesh boundaries only (serial composition)."""
    prop = fine_propagator(system, mesh)
    out = np.empty((mesh.n_subintervals + 1, system.dimension))
    out[0] = system.initial_value
    u = system.initial_value
    for n in range(mesh.n_subintervals):
        u = propagate(prop, u, mesh.boundary(n), mesh.boundary(n + 1))
        out[n + 1] = u
    return out

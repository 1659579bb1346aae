"""Ensemble-accelerated parallel-in-time solver.

Iteration 1 is exactly one deterministic iteration.  From iteration 2 on,
every unconverged boundary gets a batch of candidate initial values: the
current predictor-corrector value (always candidate 0) plus randomly drawn
alternatives centered on the iteration data.  All candidates propagate
through the fine solver in one parallel batch together with a single
propagation of the last converged value.  A serial pass then picks, boundary
by boundary, the candidate closest to the fine trajectory arriving from the
previous pick, and the corrector sweep runs with the picked values standing
in for the previous iterate.  With one candidate per boundary the picks are
forced and the run reproduces the deterministic solver bit for bit.

The processor ledger is the auditable cost model: one logical processor per
candidate plus one for the converged-boundary propagation.  Blocks freed
when boundaries converge retire, so every surviving boundary keeps the
configured candidate count for the whole run; ``reassign_idle`` is the
bookkeeping for the alternative policy that migrates freed blocks to the
unconverged boundary holding the fewest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Array, BlowUpError, OdeSystem, SolverConfig, TimeMesh, two_norm
from .integrators import CallTally, coarse_propagator, fine_propagator, propagate, propagate_many
from .parareal import (
    PintState,
    RunResult,
    apply_correction,
    assemble_fine_solution,
    parareal_iteration,
    zeroth_iteration,
)
from .rng import RandomStream
from .sampling import SampleBatch, draw_samples, moments_for_rule, pearson_correlation

__all__ = [
    "ProcessorLedger",
    "reassign_idle",
    "select_optimal",
    "run_stochastic_parareal",
]


@dataclass
class ProcessorLedger:
    """Logical processor allocation across one stochastic iteration.

    ``per_subinterval_samples`` maps each unconverged sampled boundary to
    its candidate count; every count is a multiple of ``block_size`` (the
    configured samples-per-boundary M).  Usage is the candidate total plus
    one processor propagating the converged boundary value.
    """

    total_processors: int
    per_subinterval_samples: dict[int, int]
    block_size: int
    peak_usage: int = 0

    @property
    def usage(self) -> int:
        return sum(self.per_subinterval_samples.values()) + 1

    def record_usage(self) -> int:
        used = self.usage
        if used > self.peak_usage:
            self.peak_usage = used
        return used


def new_ledger(n_subintervals: int, prefix: int, samples: int) -> ProcessorLedger:
    """Budget fixed at the first stochastic iteration: M per boundary that
    is unconverged at that point (the last boundary is never sampled), plus
    the one converged-value propagation."""
    sampled = range(prefix + 1, n_subintervals)
    counts = {j: samples for j in sampled}
    return ProcessorLedger(
        total_processors=samples * len(counts) + 1,
        per_subinterval_samples=counts,
        block_size=samples,
    )


def reassign_idle(
    ledger: ProcessorLedger,
    newly_converged: "list[int] | tuple[int, ...]",
    unconverged: "list[int] | tuple[int, ...]",
) -> ProcessorLedger:
    """Redistribute candidate blocks freed by newly converged boundaries.

    Each freed block of ``block_size`` processors goes to the unconverged
    boundary with the fewest candidates, earliest boundary on ties; blocks
    are handed out one at a time so later blocks see the updated counts.
    With no unconverged boundary left to feed, freed blocks simply idle.
    """
    block = ledger.block_size
    counts = {
        j: m
        for j, m in ledger.per_subinterval_samples.items()
        if j not in set(newly_converged)
    }
    freed = sum(ledger.per_subinterval_samples[j] for j in newly_converged) // block
    targets = [j for j in sorted(unconverged) if j in counts]
    for _ in range(freed):
        if not targets:
            break
        best = min(targets, key=lambda j: (counts[j], j))
        counts[best] += block
    return ProcessorLedger(
        total_processors=ledger.total_processors,
        per_subinterval_samples=counts,
        block_size=block,
        peak_usage=ledger.peak_usage,
    )


def select_optimal(batches: list[SampleBatch], anchor_fine: Array) -> None:
    """Pick one candidate per boundary, sweeping left to right.

    The pick at each boundary minimizes the Euclidean distance between the
    candidate value and the fine solution arriving from the previous pick
    (the anchor propagation for the first boundary).  Ties go to the lowest
    candidate index, so the pinned predictor-corrector candidate wins them.
    Candidates whose own fine propagation blew up are never picked; if that
    disqualifies an entire batch the run has lost its fine trajectory and a
    blow-up error is raised.  Fills ``selected_index`` on every batch.
    """
    incoming = anchor_fine
    for batch in batches:
        if batch.fine is None:
            raise ValueError("fine propagations missing; run the batch first")
        distances = np.array([two_norm(s - incoming) for s in batch.samples])
        usable = np.all(np.isfinite(batch.fine), axis=1)
        distances = np.where(usable, distances, np.inf)
        distances[~np.isfinite(distances)] = np.inf
        if not np.any(distances < np.inf):
            raise BlowUpError(
                f"every candidate propagation from boundary {batch.boundary_index} "
                "produced a non-finite state",
                time=None,
            )
        batch.selected_index = int(np.argmin(distances))
        incoming = batch.fine[batch.selected_index]


def _correlation_for(
    prev_arrivals: dict[int, Array], boundary: int, dimension: int, enabled: bool
) -> Array | None:
    """Correlation estimate for sampling at ``boundary``.

    Estimated from the previous iteration's candidate propagations arriving
    there (the candidates were taken one boundary earlier).  Falls back to
    independent components when correlations are disabled, in one dimension,
    on the first stochastic iteration (no previous candidates), or when
    fewer than two of the arrivals are finite.
    """
    if not enabled or dimension < 2:
        return None
    batch = prev_arrivals.get(boundary)
    if batch is None:
        return None
    finite = np.all(np.isfinite(batch), axis=1)
    if np.count_nonzero(finite) < 2:
        return None
    return pearson_correlation(batch[finite])


def run_stochastic_parareal(
    system: OdeSystem, mesh: TimeMesh, config: SolverConfig
) -> RunResult:
    """Run the ensemble solver to convergence (or the iteration cap).

    Reproducible from ``config.seed`` alone: all random candidates are drawn
    by the coordinator in boundary order before any propagation, and the
    batched propagation itself is deterministic, so results do not depend on
    how the batch is scheduled across workers.
    """
    n = mesh.n_subintervals
    d = system.dimension
    coarse = coarse_propagator(system, mesh)
    fine = fine_propagator(system, mesh)
    tally = CallTally()
    stream = RandomStream(config.seed)
    tolerance = config.tolerance
    max_iter = config.resolved_max_iterations(n)

    state = zeroth_iteration(system, mesh, tally)
    errors: list[float] = []
    usage: list[int] = []
    prefixes: list[int] = []

    ledger: ProcessorLedger | None = None
    prev_arrivals: dict[int, Array] = {}

    if max_iter >= 1:
        usage.append(n)  # one fine task per boundary, as in the deterministic run
        parareal_iteration(state, coarse, fine, tolerance, tally)
        errors.append(state.last_error)
        prefixes.append(state.converged_prefix)

    while state.converged_prefix < n and state.iteration < max_iter:
        start = state.converged_prefix
        sampled = list(range(start + 1, n))
        if ledger is None:
            ledger = new_ledger(n, start, config.n_samples)
        usage.append(ledger.record_usage())

        # Draw every candidate batch up front, in boundary order.  The
        # moments come from the two latest sweeps of the corrected iterates:
        # mean per the configured rule, spread from how much the iterate's
        # coarse arrival moved between sweeps.  The previous iterate's fine
        # arrival is row 0 of last iteration's batch (the pinned candidate),
        # not state.fine, which holds whichever candidate selection picked.
        # The one boundary never covered by a previous batch is fed by the
        # anchor propagation of a frozen value, so state.fine is exact there.
        batches = []
        for j in sampled:
            correlation = _correlation_for(prev_arrivals, j, d, config.use_correlations)
            arrived = prev_arrivals.get(j)
            moments = moments_for_rule(
                config.rule,
                fine_arrival=state.fine[j] if arrived is None else arrived[0],
                corrected=state.U[j],
                coarse_new=state.coarse[j],
                coarse_old=state.coarse_prev[j],
                correlation=correlation,
            )
            count = ledger.per_subinterval_samples[j]
            extras = draw_samples(stream, config.rule, moments, count - 1)
            samples = np.vstack([state.U[j][np.newaxis, :], extras])
            batches.append(SampleBatch(boundary_index=j, samples=samples))

        # One parallel fine pass: anchor propagation of the last converged
        # value, then every candidate, boundary-major.  Row layout matches
        # the deterministic batch exactly when each batch has one candidate.
        stacked = np.vstack(
            [state.U[start][np.newaxis, :]] + [b.samples for b in batches]
        )
        t_starts = np.concatenate(
            [np.array([mesh.boundary(start)])]
            + [np.full(b.count, mesh.boundary(b.boundary_index)) for b in batches]
        )
        arrivals = propagate_many(fine, stacked, t_starts, tally)
        anchor_fine = arrivals[0]
        if not np.all(np.isfinite(anchor_fine)):
            raise BlowUpError(
                f"fine propagation from boundary {start} "
                f"(t = {mesh.boundary(start):.6g}) produced a non-finite state",
                time=mesh.boundary(start),
            )
        offset = 1
        for batch in batches:
            batch.fine = arrivals[offset : offset + batch.count]
            offset += batch.count

        select_optimal(batches, anchor_fine)

        # Coarse runs only for picked candidates that differ from the
        # pinned one; the pinned candidate's coarse arrival is already in
        # state.coarse and moves to coarse_prev in the sweep's shift.
        replacements: dict[int, Array] = {}
        for batch in batches:
            j = batch.boundary_index
            if batch.selected_index != 0:
                replacements[j + 1] = propagate(
                    coarse,
                    batch.selected_sample,
                    mesh.boundary(j),
                    mesh.boundary(j + 1),
                    tally,
                )

        new_fine = np.full_like(state.U, np.nan)
        new_fine[start + 1] = anchor_fine
        for batch in batches:
            new_fine[batch.boundary_index + 1] = batch.selected_fine

        apply_correction(state, new_fine, replacements, coarse, tolerance, tally)
        errors.append(state.last_error)
        prefixes.append(state.converged_prefix)

        prev_arrivals = {b.boundary_index + 1: b.fine for b in batches}
        # Boundaries inside the new prefix release their blocks and the
        # ledger shrinks to the survivors.  Freed blocks retire rather than
        # inflating the surviving ensembles: growing them mid-run dilutes
        # the selection step once many boundaries have converged, and a
        # single-candidate run must stay identical to the deterministic
        # solver.  reassign_idle covers the migrating-blocks policy for
        # callers that want to model it.
        remaining = [
            j for j in ledger.per_subinterval_samples if j > state.converged_prefix
        ]
        ledger = ProcessorLedger(
            total_processors=ledger.total_processors,
            per_subinterval_samples={
                j: ledger.per_subinterval_samples[j] for j in remaining
            },
            block_size=ledger.block_size,
            peak_usage=ledger.peak_usage,
        )

    trajectory = assemble_fine_solution(system, mesh, state.U, tally)
    return RunResult(
        solver="stochastic_parareal",
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

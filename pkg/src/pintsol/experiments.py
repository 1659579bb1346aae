"""Monte Carlo harness around the ensemble solver.

Estimates the distribution of the stochastic iteration count over many
independently seeded realizations, expectation/spread curves against the
ensemble size, accuracy bands against the serial fine solution, and the
effect of coarsening the coarse solver on a benchmark family.

Realizations are embarrassingly parallel: realization ``i`` always runs with
seed ``base_seed + i`` and aggregation is order-independent, so results are
identical no matter how many workers execute them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import BlowUpError, SamplingRule, SolverConfig
from .integrators import serial_fine_trajectory
from .parareal import RunResult, run_parareal
from .problems import BenchmarkCase, bernoulli
from .stochastic import run_stochastic_parareal

__all__ = [
    "KDistribution",
    "ErrorProfile",
    "CurvePoint",
    "SweepEntry",
    "estimate_k_distribution",
    "expectation_curve",
    "error_profile",
    "coarse_step_sweep",
]


@dataclass(frozen=True)
class KDistribution:
    """Empirical distribution of the stochastic iteration count.

    ``counts`` maps an iteration count to its number of occurrences;
    realizations that blew up or hit the iteration cap are tallied in
    ``failures`` instead of being dropped, so occurrences plus failures
    always account for every realization.  ``kd_reference`` is the
    deterministic solver's iteration count on the same problem, the yard
    stick for "beating" it.
    """

    counts: dict[int, int]
    n_realizations: int
    kd_reference: int
    failures: int = 0

    def __post_init__(self) -> None:
        total = sum(self.counts.values()) + self.failures
        if total != self.n_realizations:
            raise ValueError("outcome tallies do not cover all realizations")

    def probability(self, k: int) -> float:
        return self.counts.get(k, 0) / self.n_realizations

    def probabilities(self) -> dict[int, float]:
        return {k: c / self.n_realizations for k, c in sorted(self.counts.items())}

    def beat_probability(self) -> float:
        """Fraction of realizations that converged in fewer iterations than
        the deterministic reference."""
        won = sum(c for k, c in self.counts.items() if k < self.kd_reference)
        return won / self.n_realizations

    def expectation(self) -> float:
        if self.failures:
            raise ValueError("expectation undefined with failed realizations")
        return sum(k * c for k, c in self.counts.items()) / self.n_realizations

    def std_dev(self) -> float:
        """Population standard deviation of the empirical distribution."""
        mean = self.expectation()
        var = sum((k - mean) ** 2 * c for k, c in self.counts.items())
        return float(np.sqrt(var / self.n_realizations))


@dataclass(frozen=True)
class CurvePoint:
    """One ensemble size on an expectation curve."""

    n_samples: int
    expectation: float
    std_dev: float


@dataclass(frozen=True)
class SweepEntry:
    """Beat probability for one (coarse resolution, ensemble size) pair."""

    total_coarse_steps: int
    coarse_step: float
    kd_reference: int
    n_samples: int
    beat_probability: float
    failures: int = 0


@dataclass(frozen=True)
class ErrorProfile:
    """Per-fine-time accuracy statistics against the serial fine solution.

    ``mean_abs_error`` and ``sd_band`` (two population standard deviations)
    aggregate the stochastic realizations; ``parareal_error`` is the single
    deterministic run's error for comparison.  All arrays have one row per
    fine time and one column per component.
    """

    times: np.ndarray
    mean_abs_error: np.ndarray
    sd_band: np.ndarray
    parareal_error: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.mean_abs_error, self.sd_band, self.parareal_error):
            if arr.shape[0] != self.times.shape[0]:
                raise ValueError("profile rows must match the time grid")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise ValueError("error statistics must be finite and nonnegative")


def _run_realizations(
    case: BenchmarkCase,
    config: SolverConfig,
    n_realizations: int,
    base_seed: int,
) -> "list[RunResult | None]":
    """Run seeded realizations, possibly concurrently; ``None`` marks a
    blown-up realization.  Output order is by realization index regardless
    of scheduling."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")

    def one(index: int) -> "RunResult | None":
        cfg = replace(config, seed=base_seed + index)
        try:
            return run_stochastic_parareal(case.system, case.mesh, cfg)
        except BlowUpError:
            return None

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, range(n_realizations)))
    return [one(i) for i in range(n_realizations)]


def estimate_k_distribution(
    case: BenchmarkCase,
    config: SolverConfig,
    n_realizations: int,
    base_seed: int,
    kd_reference: int | None = None,
) -> KDistribution:
    """Tally iteration counts over independently seeded realizations.

    ``kd_reference`` defaults to a fresh deterministic run on the same
    problem (at the same tolerance and cap taken from ``config``).
    """
    if kd_reference is None:
        kd_reference = run_parareal(case.system, case.mesh, config).iterations
    results = _run_realizations(case, config, n_realizations, base_seed)
    counts: dict[int, int] = {}
    failures = 0
    for res in results:
        if res is None or not res.converged:
            failures += 1
        else:
            counts[res.iterations] = counts.get(res.iterations, 0) + 1
    return KDistribution(
        counts=dict(sorted(counts.items())),
        n_realizations=n_realizations,
        kd_reference=kd_reference,
        failures=failures,
    )


def expectation_curve(
    case: BenchmarkCase,
    rule: SamplingRule,
    use_correlations: bool,
    sample_counts: "list[int]",
    n_realizations: int,
    base_seed: int,
    workers: int = 1,
) -> "list[CurvePoint]":
    """Expectation and spread of the iteration count per ensemble size."""
    points = []
    for m in sample_counts:
        config = case.config(
            n_samples=m, rule=rule, use_correlations=use_correlations, workers=workers
        )
        dist = estimate_k_distribution(case, config, n_realizations, base_seed)
        points.append(
            CurvePoint(
                n_samples=m, expectation=dist.expectation(), std_dev=dist.std_dev()
            )
        )
    return points


def error_profile(
    case: BenchmarkCase,
    config: SolverConfig,
    n_realizations: int,
    base_seed: int,
) -> ErrorProfile:
    """Accuracy of the ensemble solver against the serial fine solution.

    Every realization's returned trajectory is compared with the serial
    fine oracle at each fine step; the absolute errors aggregate into a
    mean and a two-standard-deviation band (population convention).  A
    failed realization leaves the statistics undefined, so it raises.
    """
    oracle = serial_fine_trajectory(case.system, case.mesh)
    deterministic = run_parareal(case.system, case.mesh, config)
    parareal_error = np.abs(deterministic.fine_solution.states - oracle.states)

    results = _run_realizations(case, config, n_realizations, base_seed)
    total = np.zeros_like(oracle.states)
    total_sq = np.zeros_like(oracle.states)
    for res in results:
        if res is None or not res.converged:
            raise RuntimeError("a realization failed; error profile undefined")
        err = np.abs(res.fine_solution.states - oracle.states)
        total += err
        total_sq += err * err
    mean = total / n_realizations
    variance = np.maximum(total_sq / n_realizations - mean * mean, 0.0)
    return ErrorProfile(
        times=oracle.times,
        mean_abs_error=mean,
        sd_band=2.0 * np.sqrt(variance),
        parareal_error=parareal_error,
    )


def coarse_step_sweep(
    coarse_steps: "list[int]",
    rule: SamplingRule,
    sample_counts: "list[int]",
    n_realizations: int,
    base_seed: int,
    use_correlations: bool = True,
    workers: int = 1,
) -> "list[SweepEntry]":
    """Beat probabilities for the analytic benchmark at coarser and coarser
    coarse solvers.

    Each entry of ``coarse_steps`` is a total number of coarse steps across
    the window; the deterministic reference count is recomputed for each
    resolution before the ensembles run.
    """
    entries = []
    for total in coarse_steps:
        case = bernoulli(total)
        base_config = case.config(workers=workers)
        kd = run_parareal(case.system, case.mesh, base_config).iterations
        for m in sample_counts:
            config = case.config(
                n_samples=m, rule=rule, use_correlations=use_correlations, workers=workers
            )
            dist = estimate_k_distribution(
                case, config, n_realizations, base_seed, kd_reference=kd
            )
            entries.append(
                SweepEntry(
                    total_coarse_steps=total,
                    coarse_step=case.mesh.coarse_step,
                    kd_reference=kd,
                    n_samples=m,
                    beat_probability=dist.beat_probability(),
                    failures=dist.failures,
                )
            )
    return entries

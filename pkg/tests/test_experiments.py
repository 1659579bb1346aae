"""Monte Carlo harness: tallies, curves, error bands, coarse-step sweep."""

import numpy as np
import pytest

import pintsol.experiments as experiments
from pintsol.core import BlowUpError, SamplingRule
from pintsol.experiments import (
    KDistribution,
    coarse_step_sweep,
    error_profile,
    estimate_k_distribution,
    expectation_curve,
)
from pintsol.problems import bernoulli


# --- the distribution type -----------------------------------------------------

def test_kdistribution_hand_values():
    dist = KDistribution(counts={3: 10, 5: 10}, n_realizations=20, kd_reference=5)
    assert dist.probability(3) == 0.5
    assert dist.probability(4) == 0.0
    assert dist.probabilities() == {3: 0.5, 5: 0.5}
    assert dist.beat_probability() == 0.5
    assert dist.expectation() == 4.0
    assert dist.std_dev() == 1.0  # population convention


def test_kdistribution_requires_full_coverage():
    with pytest.raises(ValueError):
        KDistribution(counts={3: 10}, n_realizations=20, kd_reference=5)
    KDistribution(counts={3: 10}, n_realizations=20, kd_reference=5, failures=10)


def test_kdistribution_failures_block_moments():
    dist = KDistribution(counts={3: 9}, n_realizations=10, kd_reference=5, failures=1)
    assert dist.beat_probability() == 0.9
    with pytest.raises(ValueError):
        dist.expectation()
    with pytest.raises(ValueError):
        dist.std_dev()


def test_probabilities_sum_to_one_without_failures():
    dist = KDistribution(counts={2: 3, 3: 4, 7: 13}, n_realizations=20, kd_reference=8)
    assert abs(sum(dist.probabilities().values()) - 1.0) < 1e-12


# --- distribution estimation ------------------------------------------------------

def test_single_sample_distribution_is_point_mass():
    case = bernoulli()
    dist = estimate_k_distribution(case, case.config(n_samples=1), 5, base_seed=0)
    assert dist.kd_reference == 8
    assert dist.counts == {8: 5}
    assert dist.failures == 0
    assert dist.std_dev() == 0.0
    assert dist.beat_probability() == 0.0


def test_distribution_is_worker_invariant():
    case = bernoulli()
    solo = estimate_k_distribution(
        case, case.config(n_samples=2, workers=1), 8, base_seed=11
    )
    pooled = estimate_k_distribution(
        case, case.config(n_samples=2, workers=4), 8, base_seed=11
    )
    assert solo.counts == pooled.counts
    assert solo.failures == pooled.failures


def test_distribution_reference_override():
    case = bernoulli()
    dist = estimate_k_distribution(
        case, case.config(n_samples=1), 3, base_seed=0, kd_reference=100
    )
    assert dist.kd_reference == 100
    assert dist.beat_probability() == 1.0


def test_non_converged_realizations_count_as_failures():
    case = bernoulli()
    dist = estimate_k_distribution(
        case, case.config(n_samples=2, max_iterations=2), 3, base_seed=0
    )
    assert dist.failures == 3
    assert dist.counts == {}


def test_blown_up_realizations_count_as_failures(monkeypatch):
    case = bernoulli()
    real = experiments.run_stochastic_parareal

    def exploding(system, mesh, config):
        if config.seed % 2 == 1:
            raise BlowUpError("synthetic blow-up")
        return real(system, mesh, config)

    monkeypatch.setattr(experiments, "run_stochastic_parareal", exploding)
    dist = estimate_k_distribution(case, case.config(n_samples=2), 6, base_seed=0)
    assert dist.failures == 3
    assert sum(dist.counts.values()) == 3


def test_realization_count_validation():
    case = bernoulli()
    with pytest.raises(ValueError):
        estimate_k_distribution(case, case.config(), 0, base_seed=0)


# --- expectation curve --------------------------------------------------------------

def test_expectation_curve_shapes_and_point_mass():
    case = bernoulli()
    points = expectation_curve(
        case,
        SamplingRule.GAUSSIAN_FINE_MEAN,
        True,
        [1, 2],
        6,
        base_seed=0,
    )
    assert [p.n_samples for p in points] == [1, 2]
    assert points[0].expectation == 8.0
    assert points[0].std_dev == 0.0
    assert points[1].expectation <= 8.0


# --- error profile -------------------------------------------------------------------

def test_error_profile_shapes_and_invariants():
    case = bernoulli()
    profile = error_profile(case, case.config(n_samples=2, rule=2), 4, base_seed=0)
    n_times = case.mesh.n_fine_total + 1
    assert profile.times.shape == (n_times,)
    assert profile.mean_abs_error.shape == (n_times, 1)
    assert profile.sd_band.shape == (n_times, 1)
    assert profile.parareal_error.shape == (n_times, 1)
    for arr in (profile.mean_abs_error, profile.sd_band, profile.parareal_error):
        assert np.all(np.isfinite(arr)) and np.all(arr >= 0.0)
    assert profile.mean_abs_error[0, 0] == 0.0  # exact at the initial value


def test_error_profile_single_sample_band_is_zero():
    # with one candidate every realization is the deterministic run
    case = bernoulli()
    profile = error_profile(case, case.config(n_samples=1), 3, base_seed=0)
    assert np.all(profile.sd_band == 0.0)
    assert np.array_equal(profile.mean_abs_error, profile.parareal_error)


def test_error_profile_rejects_failed_realizations(monkeypatch):
    case = bernoulli()

    def exploding(system, mesh, config):
        raise BlowUpError("synthetic blow-up")

    monkeypatch.setattr(experiments, "run_stochastic_parareal", exploding)
    with pytest.raises(RuntimeError):
        error_profile(case, case.config(n_samples=2), 2, base_seed=0)


# --- coarse-step sweep ----------------------------------------------------------------

def test_sweep_reference_counts_and_trend():
    entries = coarse_step_sweep(
        [20, 40, 60], SamplingRule.GAUSSIAN_FINE_MEAN, [3], 24, base_seed=0
    )
    assert [e.total_coarse_steps for e in entries] == [20, 40, 60]
    assert [e.kd_reference for e in entries] == [8, 5, 4]
    assert np.allclose(
        [e.coarse_step for e in entries], [10 / 20, 10 / 40, 10 / 60], rtol=1e-12
    )
    beats = [e.beat_probability for e in entries]
    assert all(0.0 <= b <= 1.0 for b in beats)
    # finer coarse grids leave less room to beat the deterministic count
    assert beats[0] >= beats[1] >= beats[2]
    assert all(e.failures == 0 for e in entries)
    assert all(e.n_samples == 3 for e in entries)

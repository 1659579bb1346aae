"""Benchmark definitions: parameters, right-hand sides, closed forms."""

import math

import numpy as np
import pytest

from pintsol.core import OdeSystem
from pintsol.integrators import serial_fine_boundary_values
from pintsol.problems import (
    PROBLEM_NAMES,
    bernoulli,
    brusselator,
    get_problem,
    lorenz,
    scalar_nonlinear,
    square_limit_cycle,
)


def test_registry_names_and_lookup():
    assert PROBLEM_NAMES == ("scalar", "bernoulli", "brusselator", "square", "lorenz")
    for name in PROBLEM_NAMES:
        assert get_problem(name).name == name
    with pytest.raises(ValueError):
        get_problem("heat")


def test_scalar_configuration():
    case = scalar_nonlinear()
    assert case.system.t0 == 0.0 and case.system.t_end == 100.0
    assert np.array_equal(case.system.initial_value, [1.0])
    assert case.mesh.n_subintervals == 40
    assert case.mesh.coarse_step == 100.0 / 80.0
    assert np.isclose(case.mesh.fine_step, 100.0 / 8000.0, rtol=1e-15)
    assert case.tolerance == 1e-10


def test_scalar_rhs_spot_value():
    case = scalar_nonlinear()
    # at t = 0 the forcing terms vanish: sin(5t) = 0 and log1p(0) = 0
    got = case.system.rhs(np.array([1.0]), 0.0)
    assert np.isclose(got[0], math.sin(1.0) * math.cos(1.0) - 2.0, rtol=1e-15)
    got = case.system.rhs(np.array([0.0]), 1.0)
    expected = math.exp(-0.01) * math.sin(5.0) + math.log(2.0) * math.cos(1.0)
    assert np.isclose(got[0], expected, rtol=1e-14)


def test_bernoulli_configuration_and_sweep_resolutions():
    case = bernoulli()
    assert np.array_equal(case.system.initial_value, [2.0])
    assert case.mesh.n_subintervals == 20
    assert case.mesh.coarse_per_subinterval == 1
    assert case.mesh.fine_per_coarse == 100
    assert case.tolerance == 1e-10

    finer = bernoulli(40)
    assert finer.mesh.coarse_per_subinterval == 2
    assert finer.mesh.fine_per_coarse == 50
    finest = bernoulli(60)
    assert finest.mesh.coarse_per_subinterval == 3
    assert finest.mesh.fine_per_coarse == 33  # tracks ~2000 fine steps total
    with pytest.raises(ValueError):
        bernoulli(30)


def test_bernoulli_rhs_and_analytic():
    case = bernoulli()
    got = case.system.rhs(np.array([2.0]), 0.0)
    assert np.isclose(got[0], 4.0, rtol=1e-15)
    # closed form: u(t) = (1+t)^2 / (t^5/5 + t^4/2 + t^3/3 + 1/2)
    assert np.isclose(case.analytic(0.0)[0], 2.0, rtol=1e-15)
    t = 10.0
    expected = (1.0 + t) ** 2 / (t**5 / 5.0 + t**4 / 2.0 + t**3 / 3.0 + 0.5)
    assert np.isclose(case.analytic(t)[0], expected, rtol=1e-15)
    batch = case.analytic(np.array([0.0, 1.0, 10.0]))
    assert batch.shape == (3, 1)


def test_brusselator_configuration_and_rhs():
    case = brusselator()
    assert np.array_equal(case.system.initial_value, [1.0, 3.07])
    assert case.system.t_end == 15.3
    assert case.mesh.n_subintervals == 25
    assert np.isclose(case.mesh.coarse_step, 15.3 / 25.0, rtol=1e-15)
    assert np.isclose(case.mesh.fine_step, 15.3 / 2500.0, rtol=1e-15)
    assert case.tolerance == 1e-6
    got = case.system.rhs(np.array([1.0, 3.07]), 0.0)
    assert np.isclose(got[0], 1.0 + 3.07 - 4.0, rtol=1e-12)
    assert np.isclose(got[1], 3.0 - 3.07, rtol=1e-12)


def test_square_configuration_and_rhs():
    case = square_limit_cycle()
    assert np.array_equal(case.system.initial_value, [1.5, 1.5])
    assert case.system.t_end == 60.0
    assert case.mesh.n_subintervals == 30
    assert case.tolerance == 1e-8
    got = case.system.rhs(np.array([1.5, 1.5]), 0.0)
    s, c = math.sin(1.5), math.cos(1.5)
    assert np.isclose(got[0], -s * (c / 10.0 + c), rtol=1e-14)
    assert np.isclose(got[1], -s * (c / 10.0 - c), rtol=1e-14)


def test_lorenz_configuration_and_rhs():
    case = lorenz()
    assert np.array_equal(case.system.initial_value, [-15.0, -15.0, 20.0])
    assert case.system.t_end == 18.0
    assert case.mesh.n_subintervals == 50
    assert np.isclose(case.mesh.coarse_step, 18.0 / 250.0, rtol=1e-15)
    assert np.isclose(case.mesh.fine_step, 18.0 / 18750.0, rtol=1e-15)
    assert case.tolerance == 1e-8
    got = case.system.rhs(np.array([-15.0, -15.0, 20.0]), 0.0)
    assert got[0] == 0.0
    assert np.isclose(got[1], 28.0 * -15.0 - (-15.0 * 20.0) + 15.0, rtol=1e-14)
    assert np.isclose(got[2], 225.0 - (8.0 / 3.0) * 20.0, rtol=1e-14)


def test_rhs_batches_match_rows_bitwise(cases):
    rng = np.random.default_rng(1)
    for case in cases.values():
        d = case.system.dimension
        batch = case.system.initial_value + 0.1 * rng.normal(size=(6, d))
        t = 1.25
        together = case.system.rhs(batch, t)
        rows = np.stack([case.system.rhs(row, t) for row in batch])
        assert np.array_equal(together, rows), case.name


def test_serial_fine_solution_finite_everywhere(serial_boundaries):
    for name, values in serial_boundaries.items():
        assert np.all(np.isfinite(values)), name


def test_lorenz_sensitivity_to_initial_values():
    # chaotic benchmark: a 1e-8 initial perturbation must grow past 1e-2
    case = lorenz()
    nearby = OdeSystem(
        case.system.rhs,
        case.system.initial_value + np.array([1e-8, 0.0, 0.0]),
        case.system.t0,
        case.system.t_end,
        name="lorenz-perturbed",
    )
    ref = serial_fine_boundary_values(case.system, case.mesh)
    per = serial_fine_boundary_values(nearby, case.mesh)
    assert np.max(np.abs(ref[-1] - per[-1])) > 1e-2

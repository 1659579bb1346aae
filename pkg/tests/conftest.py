"""Shared fixtures: the five benchmark cases and their expensive reference
runs, computed once per session."""

import pytest

from pintsol import problems
from pintsol.integrators import serial_fine_boundary_values
from pintsol.parareal import run_parareal


@pytest.fixture(scope="session")
def cases():
    return {name: problems.get_problem(name) for name in problems.PROBLEM_NAMES}


@pytest.fixture(scope="session")
def deterministic_runs(cases):
    """One deterministic solver run per benchmark at its stated tolerance."""
    return {
        name: run_parareal(case.system, case.mesh, case.config())
        for name, case in cases.items()
    }


@pytest.fixture(scope="session")
def serial_boundaries(cases):
    """Serial fine-solver boundary values: the exactness oracle."""
    return {
        name: serial_fine_boundary_values(case.system, case.mesh)
        for name, case in cases.items()
    }

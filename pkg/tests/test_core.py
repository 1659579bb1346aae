"""Value types: state vectors, meshes, solver configuration."""

import numpy as np
import pytest

from pintsol.core import (
    OdeSystem,
    SamplingRule,
    SolverConfig,
    TimeMesh,
    inf_norm,
    make_mesh,
    mesh_from_steps,
    state_vector,
    two_norm,
)


def _expgrowth(u, t):
    return u


def test_state_vector_validates_and_freezes():
    u = state_vector([1.0, -2.5])
    assert u.dtype == np.float64
    assert u.shape == (2,)
    assert not u.flags.writeable
    with pytest.raises(ValueError):
        u[0] = 3.0


@pytest.mark.parametrize("bad", [[], [[1.0, 2.0]], [1.0, np.nan], [np.inf], 3.0])
def test_state_vector_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        state_vector(bad)


def test_norms_hand_values():
    u = np.array([3.0, -4.0])
    assert inf_norm(u) == 4.0
    assert two_norm(u) == 5.0
    assert inf_norm(np.array([0.0])) == 0.0


def test_norm_scaling_property():
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = rng.normal(size=4)
        c = rng.normal()
        assert np.isclose(inf_norm(c * u), abs(c) * inf_norm(u), rtol=1e-12)
        assert np.isclose(two_norm(c * u), abs(c) * two_norm(u), rtol=1e-12)
        v = rng.normal(size=4)
        assert two_norm(u + v) <= two_norm(u) + two_norm(v) + 1e-12


def test_ode_system_validation():
    sys_ok = OdeSystem(_expgrowth, [1.0, 2.0], 0.0, 1.0)
    assert sys_ok.dimension == 2
    assert not sys_ok.initial_value.flags.writeable
    with pytest.raises(ValueError):
        OdeSystem(_expgrowth, [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        OdeSystem(_expgrowth, [1.0], 2.0, 1.0)
    # rhs returning the wrong shape is caught by the construction probe
    with pytest.raises(ValueError):
        OdeSystem(lambda u, t: np.zeros(3), [1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        OdeSystem(lambda u, t: u * np.nan, [1.0], 0.0, 1.0)


def test_mesh_reference_discretizations():
    sys40 = OdeSystem(_expgrowth, [1.0], 0.0, 100.0)
    mesh = make_mesh(sys40, 40, 2, 100)
    assert mesh.subinterval_length == 2.5
    assert mesh.coarse_step == 100.0 / 80.0
    assert np.isclose(mesh.fine_step, 100.0 / 8000.0, rtol=1e-15)
    assert mesh.fine_per_subinterval == 200
    assert mesh.n_fine_total == 8000

    sys18 = OdeSystem(_expgrowth, [1.0], 0.0, 18.0)
    mesh = make_mesh(sys18, 50, 5, 75)
    assert np.isclose(mesh.coarse_step, 18.0 / 250.0, rtol=1e-15)
    assert np.isclose(mesh.fine_step, 18.0 / 18750.0, rtol=1e-15)


def test_mesh_minimal_legal():
    sys1 = OdeSystem(_expgrowth, [1.0], 0.0, 2.0)
    mesh = make_mesh(sys1, 1, 1, 2)
    assert mesh.subinterval_length == mesh.coarse_step == 2.0
    assert mesh.fine_step == 1.0


def test_mesh_boundaries_exact_endpoints():
    sys_ = OdeSystem(_expgrowth, [1.0], 0.3, 17.9)
    mesh = make_mesh(sys_, 7, 3, 4)
    b = mesh.boundaries()
    assert b.shape == (8,)
    assert b[0] == 0.3
    assert abs(b[-1] - 17.9) < 1e-12 * 17.9
    assert mesh.boundary(0) == b[0] and mesh.boundary(7) == b[7]
    with pytest.raises(IndexError):
        mesh.boundary(8)
    with pytest.raises(IndexError):
        mesh.boundary(-1)


def test_mesh_validation():
    with pytest.raises(ValueError):
        TimeMesh(0.0, 1.0, 0, 1, 2)
    with pytest.raises(ValueError):
        TimeMesh(0.0, 1.0, 1, 0, 2)
    # fine must genuinely resolve below coarse
    with pytest.raises(ValueError):
        TimeMesh(0.0, 1.0, 1, 1, 1)
    with pytest.raises(ValueError):
        TimeMesh(1.0, 1.0, 1, 1, 2)


def test_mesh_from_steps_nests():
    sys_ = OdeSystem(_expgrowth, [1.0], 0.0, 100.0)
    mesh = mesh_from_steps(sys_, 40, 100.0 / 80.0, 100.0 / 8000.0)
    assert mesh.coarse_per_subinterval == 2
    assert mesh.fine_per_coarse == 100

    sys10 = OdeSystem(_expgrowth, [1.0], 0.0, 10.0)
    mesh = mesh_from_steps(sys10, 20, 10.0 / 40.0, 10.0 / 2000.0)
    assert mesh.coarse_per_subinterval == 2
    assert mesh.fine_per_coarse == 50


def test_mesh_from_steps_rejects_non_nesting():
    sys_ = OdeSystem(_expgrowth, [1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        mesh_from_steps(sys_, 3, 0.3, 0.1)  # 1/3 not a multiple of 0.3
    with pytest.raises(ValueError):
        mesh_from_steps(sys_, 2, 0.5, 0.21)


def test_sampling_rule_flags():
    assert SamplingRule.GAUSSIAN_FINE_MEAN.uses_fine_mean
    assert SamplingRule.COPULA_FINE_MEAN.uses_fine_mean
    assert not SamplingRule.GAUSSIAN_CORRECTED_MEAN.uses_fine_mean
    assert not SamplingRule.COPULA_CORRECTED_MEAN.uses_fine_mean
    assert SamplingRule.COPULA_FINE_MEAN.uses_copula
    assert SamplingRule.COPULA_CORRECTED_MEAN.uses_copula
    assert not SamplingRule.GAUSSIAN_FINE_MEAN.uses_copula
    assert [r.value for r in SamplingRule] == [1, 2, 3, 4]


def test_solver_config_validation():
    cfg = SolverConfig(tolerance=1e-8, rule=3)
    assert cfg.rule is SamplingRule.COPULA_FINE_MEAN
    assert SolverConfig(tolerance=0.0).tolerance == 0.0  # disables convergence
    with pytest.raises(ValueError):
        SolverConfig(tolerance=-1e-8)
    with pytest.raises(ValueError):
        SolverConfig(tolerance=np.inf)
    with pytest.raises(ValueError):
        SolverConfig(tolerance=1e-8, n_samples=0)
    with pytest.raises(ValueError):
        SolverConfig(tolerance=1e-8, workers=0)
    with pytest.raises(ValueError):
        SolverConfig(tolerance=1e-8, max_iterations=0)


def test_solver_config_iteration_cap_defaults_to_subintervals():
    assert SolverConfig(tolerance=1e-8).resolved_max_iterations(40) == 40
    assert SolverConfig(tolerance=1e-8, max_iterations=5).resolved_max_iterations(40) == 5

"""Grid, coefficients, state construction, load program and validation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasefatigue.errors import InvalidArgument, PreconditionViolation
from phasefatigue.model import (FieldState, Grid1D, LoadProgram, MaterialParams, ThermalParams,
                                cells_to_nodes, initial_state, validate)
from phasefatigue.solver import StepControls, run


@pytest.fixture
def grid():
    return Grid1D(1.0, 10)


def test_grid_geometry(grid):
    assert grid.h == pytest.approx(0.1)
    assert grid.n_nodes == 11
    assert grid.x[0] == 0.0 and grid.x[-1] == 1.0
    assert grid.weights.sum() == pytest.approx(1.0)
    # Trapezoid rule integrates linear functions exactly.
    assert grid.integrate(3 * grid.x + 1) == pytest.approx(2.5, abs=1e-14)


@pytest.mark.parametrize("L, n", [(0.0, 10), (-1.0, 10), (1.0, 3), (1.0, 4.5), (math.inf, 10)])
def test_grid_rejects_bad_input(L, n):
    with pytest.raises(InvalidArgument):
        Grid1D(L, n)


def test_cells_to_nodes_averages_neighbours():
    np.testing.assert_array_equal(cells_to_nodes([1.0, 3.0, 5.0]), [1.0, 2.0, 4.0, 5.0])


def test_uniform_params_expand_scalars_and_copy_arrays(grid):
    rho = np.linspace(1, 2, 10)
    p = MaterialParams.uniform(grid, rho=rho, kappa=2.0)
    assert p.kappa.shape == (10,) and np.all(p.kappa == 2.0)
    rho[0] = -1.0
    assert p.rho[0] == 1.0
    q = p.with_overrides(F0=0.5)
    assert np.all(q.F0 == 0.5) and np.all(q.rho == p.rho)


def test_validate_accepts_admissible_data(grid):
    p = MaterialParams.uniform(grid)
    assert validate(p, grid, initial_state(grid)) == []


def test_validate_reports_zero_density(grid):
    rho = np.ones(10)
    rho[4] = 0.0
    p = MaterialParams.uniform(grid, rho=rho)
    assert "rho must be > 0" in validate(p, grid)


def test_validate_reports_boundary_displacement(grid):
    s = initial_state(grid)
    u = s.u.copy()
    u[0] = 0.1
    assert "boundary displacement must vanish" in validate(MaterialParams.uniform(grid), grid, s.replace(u=u))


def test_validate_collects_every_problem(grid):
    p = MaterialParams.uniform(grid, rho=-1.0, kappa=0.0, F0=-2.0, a=np.nan,
                               thermal=ThermalParams(c=0.0, k_q=-1.0, varkappa=0.0, theta_ref=1.0))
    problems = validate(p, grid)
    for msg in ("rho must be > 0", "kappa must be > 0", "F0 must be >= 0", "a must be finite",
                "thermal.c must be > 0", "thermal.k_q must be >= 0"):
        assert msg in problems
    assert len(problems) == 6


def test_validate_allows_zero_fatigue_threshold(grid):
    assert validate(MaterialParams.uniform(grid, F0=0.0), grid) == []


def test_validate_shape_mismatch(grid):
    p = MaterialParams.uniform(grid)
    problems = validate(p, Grid1D(1.0, 12))
    assert any("must have 12 cell values" in m for m in problems)


def test_initial_state_zero_fields(grid):
    s = initial_state(grid)
    assert s.t == 0.0
    for name in ("u", "v", "phi", "fatigue", "hist_H"):
        assert np.all(getattr(s, name) == 0.0)
    assert s.theta is None


def test_initial_state_half_sine(grid):
    u0 = np.sin(np.pi * grid.x)
    u0[-1] = 0.0
    s = initial_state(grid, u0=u0)
    assert np.all(s.fatigue == 0.0) and np.all(s.hist_H == 0.0)
    assert validate(MaterialParams.uniform(grid), grid, s) == []


@pytest.mark.parametrize("phi0", [1.2, -0.01])
def test_initial_state_rejects_phase_outside_unit_interval(grid, phi0):
    phi = np.zeros(11)
    phi[3] = phi0
    with pytest.raises(PreconditionViolation):
        initial_state(grid, phi0=phi)


def test_initial_state_rejects_boundary_displacement(grid):
    with pytest.raises(PreconditionViolation):
        initial_state(grid, u0=0.1)


def test_initial_state_rejects_nonpositive_temperature(grid):
    with pytest.raises(PreconditionViolation):
        initial_state(grid, theta0=0.0)


def test_initial_state_pins_boundary_velocity(grid):
    s = initial_state(grid, v0=1.0)
    assert s.v[0] == 0.0 and s.v[-1] == 0.0 and s.v[5] == 1.0


def test_state_copy_is_deep(grid):
    s = initial_state(grid, theta0=1.0)
    c = s.copy()
    c.phi[2] = 0.5
    c.theta[2] = 2.0
    assert s.phi[2] == 0.0 and s.theta[2] == 1.0


def test_load_shapes_are_normalised(grid):
    for shape in ("uniform", "half-sine", "gaussian"):
        values = LoadProgram(1.0, 1.0, shape, center=0.5, width=0.2).shape_values(grid)
        assert np.max(np.abs(values)) == pytest.approx(1.0)


def test_load_rejects_bad_programs():
    with pytest.raises(InvalidArgument):
        LoadProgram(1.0, 1.0, "square")
    with pytest.raises(InvalidArgument):
        LoadProgram(1.0, -1.0)
    with pytest.raises(InvalidArgument):
        LoadProgram(math.nan, 1.0)
    with pytest.raises(InvalidArgument):
        LoadProgram(1.0, 1.0, "gaussian", width=0.0)


@given(st.floats(0.1, 10.0), st.floats(0.0, 10.0), st.floats(-10.0, 10.0))
def test_load_is_periodic(omega, t, amp):
    grid = Grid1D(1.0, 8)
    load = LoadProgram(amp, omega, "half-sine")
    b0 = load.body_force(grid, t)
    b1 = load.body_force(grid, t + 2 * math.pi / omega)
    # Relative to the load amplitude: pointwise values near a zero of sin()
    # carry no relative accuracy.
    assert np.max(np.abs(b1 - b0)) <= 1e-12 * abs(amp)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solver_states_revalidate(seed):
    rng = np.random.default_rng(seed)
    grid = Grid1D(1.0, 12)
    params = MaterialParams.uniform(grid, rho=rng.uniform(0.5, 2, 12), kappa=rng.uniform(0.5, 2, 12),
                                    F0=rng.uniform(0, 1, 12), a=rng.uniform(0.5, 2, 12))
    load = LoadProgram(rng.uniform(0, 20), rng.uniform(0, 10), "uniform")
    s0 = initial_state(grid, phi0=rng.uniform(0, 1, 13))
    controls = StepControls(dt=0.002, t_end=0.2, phase_scheme="semi-implicit-diffusion", sample_every=20)
    traj, final = run(params, grid, load, controls, s0, keep_fields=True)
    for s in traj.fields:
        assert validate(params, grid, s) == []

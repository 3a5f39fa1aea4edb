import numpy as np
import pytest

from ksgroove.errors import InvalidArgumentError
from ksgroove.fields import VectorField3, energy
from ksgroove.initial import init_from_potential, potential_datum
from ksgroove.integrator import IntegratorConfig, SimState, pde_rhs, run, step


def initial_state(grid, amplitude=1e-2):
    return SimState(init_from_potential(potential_datum(grid, amplitude=amplitude)))


def energy_of(state, previous):
    return energy(state.u)


def test_config_collects_every_problem():
    with pytest.raises(InvalidArgumentError) as info:
        IntegratorConfig(dt=5.0, cfl_safety=2.0, preconditioner='jacobi')
    message = str(info.value)
    assert 'integrator.dt' in message
    assert 'integrator.cfl_safety' in message
    assert 'integrator.preconditioner' in message


def test_n_steps():
    assert IntegratorConfig(dt=1e-3, t_end=0.05).n_steps == 50
    assert IntegratorConfig(dt=1e-3, t_end=0.0).n_steps == 0


def test_zero_state_stays_zero(grid):
    result = run(SimState(VectorField3.zeros(grid)), IntegratorConfig(dt=1e-3, t_end=0.01))
    assert result.outcome == 'completed'
    assert result.state.step_index == 10
    assert not result.state.u.stack().any()


def test_zero_duration_run_returns_the_initial_state(grid):
    state0 = initial_state(grid)
    result = run(state0, IntegratorConfig(dt=1e-3, t_end=0.0), energy_of)
    assert result.outcome == 'completed'
    assert result.state is state0
    assert result.series == [energy(state0.u)]


def test_pde_rhs_of_zero(grid):
    assert not pde_rhs(VectorField3.zeros(grid)).stack().any()


def test_sample_rows_follow_the_stride(grid):
    cfg = IntegratorConfig(dt=1e-3, t_end=0.05)
    result = run(initial_state(grid), cfg, energy_of, sample_stride=5)
    assert len(result.series) == cfg.n_steps // 5 + 1


def test_sample_stride_must_be_positive(grid):
    with pytest.raises(InvalidArgumentError):
        run(initial_state(grid), IntegratorConfig(dt=1e-3, t_end=0.01), energy_of, sample_stride=0)


def test_small_data_energy_does_not_grow(grid):
    result = run(initial_state(grid), IntegratorConfig(dt=1e-3, t_end=0.02), energy_of)
    energies = result.series
    assert len(energies) == 21
    assert all(b <= a for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]


def test_step_advances_time_and_index(grid):
    state = step(initial_state(grid), IntegratorConfig(dt=1e-3))
    assert state.step_index == 1
    assert state.time == pytest.approx(1e-3)


def test_amplitude_blowup_is_an_outcome(grid):
    cfg = IntegratorConfig(dt=1e-3, t_end=0.01, blowup_threshold=1e-6)
    result = run(initial_state(grid), cfg, energy_of)
    assert result.outcome == 'blowup'
    assert result.error.reason == 'amplitude'
    assert result.error.step_index == 1
    assert len(result.series) == 1
    assert result.state.step_index == 0


def test_transport_step_restriction_is_an_outcome(grid):
    result = run(initial_state(grid, amplitude=1e4), IntegratorConfig(dt=1e-3, t_end=0.01))
    assert result.outcome == 'blowup'
    assert result.error.reason == 'cfl'


def test_solver_failure_is_an_outcome(grid):
    cfg = IntegratorConfig(dt=1e-3, t_end=0.01, preconditioner='none', solver_max_iter=1)
    result = run(initial_state(grid), cfg)
    assert result.outcome == 'solver-failure'
    assert result.error.iterations == 1


def test_linear_run_matches_nonlinear_for_tiny_data(grid):
    linear = IntegratorConfig(dt=1e-3, t_end=0.005, nonlinear=False)
    full = IntegratorConfig(dt=1e-3, t_end=0.005)
    a = run(initial_state(grid, 1e-8), linear).state.u.stack()
    b = run(initial_state(grid, 1e-8), full).state.u.stack()
    assert np.allclose(a, b, rtol=1e-6, atol=1e-20)

"""
First-order IMEX time stepping of the K-S gradient system: backward Euler on the stiff
linear part Delta^2 + Delta, forward Euler on the nonlinearity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ksgroove.errors import BlowupError, InvalidArgumentError, KSGrooveError, SolverFailureError
from ksgroove.fields import ScalarField, VectorField3, bilaplacian, laplacian, nonlinearity
from ksgroove.logger import get_logger
from ksgroove.solver import DT_POSITIVITY_BOUND, PRECONDITIONERS, SolveInfo, solve_stacked

logger = get_logger()

# Keeps the transport step restriction finite on the zero state
EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 2.0
    solver_tol: float = 1e-10
    solver_max_iter: int = 200
    cfl_safety: float = 0.5
    preconditioner: str = 'fourier'
    nonlinear: bool = True
    blowup_threshold: float = 1e10

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InvalidArgumentError('; '.join(problems))

    def problems(self) -> List[str]:
        problems = []
        if not 0.0 < self.dt < DT_POSITIVITY_BOUND:
            problems.append(f'integrator.dt must lie in (0, {DT_POSITIVITY_BOUND:g}), got {self.dt!r}')
        if not (math.isfinite(self.t_end) and self.t_end >= 0.0):
            problems.append(f'integrator.t_end must be non-negative, got {self.t_end!r}')
        if not 0.0 < self.solver_tol <= 1e-6:
            problems.append(f'integrator.solver_tol must lie in (0, 1e-6], got {self.solver_tol!r}')
        if not self.solver_max_iter >= 1:
            problems.append(f'integrator.solver_max_iter must be positive, got {self.solver_max_iter!r}')
        if not 0.0 < self.cfl_safety <= 1.0:
            problems.append(f'integrator.cfl_safety must lie in (0, 1], got {self.cfl_safety!r}')
        if self.preconditioner not in PRECONDITIONERS:
            problems.append(
                f'integrator.preconditioner must be one of {", ".join(PRECONDITIONERS)}, '
                f'got {self.preconditioner!r}'
            )
        if not self.blowup_threshold > 0:
            problems.append(f'integrator.blowup_threshold must be positive, got {self.blowup_threshold!r}')
        return problems

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class SimState:
    u: VectorField3
    time: float = 0.0
    step_index: int = 0

    @property
    def grid(self):
        return self.u.grid


@dataclass
class RunResult:
    """
    Final state, the sampled series, and the physics error that stopped the run, if any.
    """

    state: SimState
    series: list = field(default_factory=list)
    error: Optional[KSGrooveError] = None

    @property
    def outcome(self) -> str:
        if self.error is None:
            return 'completed'
        if isinstance(self.error, BlowupError):
            return 'blowup'
        return 'solver-failure'


def pde_rhs(u: VectorField3, nonlinear: bool = True) -> VectorField3:
    """
    -(Delta^2 u + Delta u + N(u)), the right-hand side of u_t.
    """
    n = nonlinearity(u) if nonlinear else VectorField3.zeros(u.grid)
    return VectorField3(
        *(
            ScalarField(c.grid, -(bilaplacian(c).values + laplacian(c).values + nc.values))
            for c, nc in zip(u, n)
        )
    )


def implicit_solve(rhs: ScalarField, dt: float, cfg: IntegratorConfig) -> ScalarField:
    """
    Solve (I + dt (Delta_h^2 + Delta_h)) x = @rhs to cfg.solver_tol.
    """
    x, _ = solve_stacked(
        rhs.values[np.newaxis],
        rhs.grid,
        dt,
        cfg.solver_tol,
        cfg.solver_max_iter,
        cfg.preconditioner,
    )
    return ScalarField(rhs.grid, x[0])


def _max_speed(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def step(state: SimState, cfg: IntegratorConfig) -> SimState:
    """
    One IMEX step: (I + dt(Delta^2 + Delta)) u^{n+1} = u^n - dt N(u^n).
    """
    u = state.u
    grid = u.grid
    dt = cfg.dt
    values = u.stack()

    speed = _max_speed(values)
    if not math.isfinite(speed):
        raise BlowupError(state.step_index, state.time, 'non-finite')
    if cfg.nonlinear and dt > cfg.cfl_safety * grid.h_min / max(speed, EPS_FLOOR):
        raise BlowupError(state.step_index, state.time, 'cfl')

    rhs = values
    if cfg.nonlinear:
        rhs = values - dt * nonlinearity(u).stack()

    new_values, info = solve_stacked(
        rhs, grid, dt, cfg.solver_tol, cfg.solver_max_iter, cfg.preconditioner
    )  # type: np.ndarray, SolveInfo
    logger.debug(
        f'step {state.step_index + 1}: {info.iterations} solver iterations, residual {info.residual:.2e}'
    )

    index = state.step_index + 1
    time = state.time + dt
    if not np.isfinite(new_values).all():
        raise BlowupError(index, time, 'non-finite')
    if _max_speed(new_values) > cfg.blowup_threshold:
        raise BlowupError(index, time, 'amplitude')
    return SimState(VectorField3.from_stack(grid, new_values), time, index)


Sampler = Callable[[SimState, Optional[SimState]], object]
Checkpointer = Callable[[SimState], None]


def run(
    state0: SimState,
    cfg: IntegratorConfig,
    sampler: Optional[Sampler] = None,
    sample_stride: int = 1,
    checkpointer: Optional[Checkpointer] = None,
    checkpoint_stride: int = 0,
) -> RunResult:
    """
    Step from @state0 to cfg.t_end. @sampler(state, previous) is called on @state0 and on
    every state whose step index is a multiple of @sample_stride; previous is the state
    one step earlier (None for the first sample). Physics failures end the run and are
    returned with the partial series.
    """
    if sample_stride < 1:
        raise InvalidArgumentError(f'sample_stride must be positive, got {sample_stride}')
    result = RunResult(state0)
    if sampler:
        result.series.append(sampler(state0, None))

    remaining = int(round((cfg.t_end - state0.time) / cfg.dt))
    state = state0
    for _ in range(max(remaining, 0)):
        try:
            new_state = step(state, cfg)
        except (BlowupError, SolverFailureError) as e:
            logger.warning(f'Run stopped at step {state.step_index}: {e}')
            result.error = e
            break
        if sampler and new_state.step_index % sample_stride == 0:
            result.series.append(sampler(new_state, state))
        if checkpointer and checkpoint_stride and new_state.step_index % checkpoint_stride == 0:
            checkpointer(new_state)
        state = new_state
    result.state = state
    return result

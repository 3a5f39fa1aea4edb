"""
Order-of-accuracy studies for the stencils and the time stepper, plus the closed-form
single-mode check of the implicit linear solve in the periodic test box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ksgroove.fields import ScalarField, VectorField3, bilaplacian, gradient, laplacian, norm_l2
from ksgroove.geometry import GrooveSpec, Grid
from ksgroove.integrator import IntegratorConfig, SimState, run
from ksgroove.logger import get_logger

logger = get_logger()

SPATIAL_ORDER = 2.0
TEMPORAL_ORDER = 1.0
ORDER_TOL = 0.2

MMS_SPEC = GrooveSpec(2.0)
MMS_LEVELS = (16, 32, 64)

BOX_LENGTH = 2.0 * math.pi


@dataclass
class OrderReport:
    name: str
    steps: List[float]
    errors: List[float]
    expected: float
    tol: float = ORDER_TOL
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def orders(self) -> List[float]:
        return [
            math.log(e0 / e1) / math.log(s0 / s1)
            for (s0, e0), (s1, e1) in zip(zip(self.steps, self.errors), zip(self.steps[1:], self.errors[1:]))
        ]

    @property
    def passed(self) -> bool:
        orders = self.orders
        return bool(orders) and all(abs(p - self.expected) <= self.tol for p in orders)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'pass': self.passed,
            'steps': self.steps,
            'errors': self.errors,
            'orders': self.orders,
            'expected': self.expected,
            'tol': self.tol,
            **self.details,
        }


class ManufacturedProfile:
    """
    f = sin(k1 x1) sin^2(pi x2 / B) sin^2(pi x3 / L3) and its exact derivatives. The
    sin^2 factors are even about every wall, so they lie in the clamped class.
    """

    def __init__(self, spec: GrooveSpec):
        L1, B, L3 = spec.extents()
        self.k1 = 2.0 * math.pi / L1
        self.kappa = (math.pi / B, math.pi / L3)

    @staticmethod
    def _wall(x: np.ndarray, kappa: float) -> Tuple[np.ndarray, ...]:
        """
        sin^2(kappa x) and its first, second and fourth derivatives.
        """
        c = np.cos(2.0 * kappa * x)
        return (
            0.5 * (1.0 - c),
            kappa * np.sin(2.0 * kappa * x),
            2.0 * kappa ** 2 * c,
            -8.0 * kappa ** 4 * c,
        )

    def evaluate(self, grid: Grid) -> Dict[str, Any]:
        x1, x2, x3 = grid.mesh()
        k1 = self.k1
        s1, c1 = np.sin(k1 * x1), np.cos(k1 * x1)
        p2, dp2, ddp2, d4p2 = self._wall(x2, self.kappa[0])
        p3, dp3, ddp3, d4p3 = self._wall(x3, self.kappa[1])
        f = s1 * p2 * p3
        grad = (k1 * c1 * p2 * p3, s1 * dp2 * p3, s1 * p2 * dp3)
        lap = -k1 ** 2 * f + s1 * ddp2 * p3 + s1 * p2 * ddp3
        bilap = (
            k1 ** 4 * f
            + s1 * d4p2 * p3
            + s1 * p2 * d4p3
            - 2.0 * k1 ** 2 * s1 * ddp2 * p3
            - 2.0 * k1 ** 2 * s1 * p2 * ddp3
            + 2.0 * s1 * ddp2 * ddp3
        )
        return {'f': f, 'gradient': grad, 'laplacian': lap, 'bilaplacian': bilap}


def _operator_errors(grid: Grid, profile: ManufacturedProfile) -> Dict[str, float]:
    exact = profile.evaluate(grid)
    f = ScalarField(grid, exact['f'])
    grad = gradient(f)
    return {
        'gradient': math.sqrt(
            sum(norm_l2(ScalarField(grid, g.values - e)) ** 2 for g, e in zip(grad, exact['gradient']))
        ),
        'laplacian': norm_l2(ScalarField(grid, laplacian(f).values - exact['laplacian'])),
        'bilaplacian': norm_l2(ScalarField(grid, bilaplacian(f).values - exact['bilaplacian'])),
        'bilaplacian_direct': norm_l2(
            ScalarField(grid, bilaplacian(f, method='direct').values - exact['bilaplacian'])
        ),
    }


def spatial_order_study(spec: GrooveSpec = MMS_SPEC, levels: Sequence[int] = MMS_LEVELS) -> List[OrderReport]:
    """
    L2 errors of gradient, laplacian and bilaplacian against a manufactured profile on
    groove grids with @levels cells per axis.
    """
    profile = ManufacturedProfile(spec)
    spacings, errors = [], {}  # type: List[float], Dict[str, List[float]]
    for n in levels:
        grid = Grid.for_groove(spec, n, n, n)
        spacings.append(grid.h_min)
        for name, error in _operator_errors(grid, profile).items():
            errors.setdefault(name, []).append(error)
    reports = [OrderReport(name, spacings, errs, SPATIAL_ORDER) for name, errs in errors.items()]
    for report in reports:
        logger.info(f'{report.name}: observed orders {["%.3f" % p for p in report.orders]}')
    return reports


def box_state(grid: Grid, amplitude: float = 0.5) -> SimState:
    """
    grad of a smooth potential in the periodic test box.
    """
    x1, x2, x3 = grid.mesh()
    phi = amplitude * (np.sin(x1) * np.sin(x2) + 0.5 * np.cos(x3) * np.sin(x1 + x2))
    return SimState(gradient(ScalarField(grid, phi)))


def _field_distance(a: VectorField3, b: VectorField3) -> float:
    return math.sqrt(sum(norm_l2(x - y) ** 2 for x, y in zip(a, b)))


def temporal_order_study(
    dts: Sequence[float] = (4e-2, 2e-2, 1e-2, 5e-3),
    t_end: float = 0.4,
    n: int = 16,
) -> OrderReport:
    """
    Successive-difference study of the full nonlinear step in the periodic box:
    e(dt) = ||u_dt(t_end) - u_{dt/2}(t_end)||, which shrinks like dt for a first-order
    scheme.
    """
    grid = Grid.periodic_box([BOX_LENGTH] * 3, [n] * 3)
    state0 = box_state(grid)
    finals = []
    for dt in dts:
        cfg = IntegratorConfig(dt=dt, t_end=t_end)
        result = run(state0, cfg)
        if result.error is not None:
            raise result.error
        finals.append(result.state.u)
    errors = [_field_distance(a, b) for a, b in zip(finals, finals[1:])]
    report = OrderReport('temporal', list(dts[:-1]), errors, TEMPORAL_ORDER)
    logger.info(f'temporal: observed orders {["%.3f" % p for p in report.orders]}')
    return report


def discrete_symbol(k: int, h: float) -> float:
    """
    sigma = (2 - 2 cos kh) / h^2, minus the eigenvalue of the discrete Laplacian.
    """
    return (2.0 - 2.0 * math.cos(k * h)) / (h * h)


def linear_symbol_check(
    k: int = 2,
    n: int = 16,
    dt: float = 1e-2,
    steps: int = 20,
    solver_tol: float = 1e-10,
) -> Dict[str, Any]:
    """
    One x1 Fourier mode in the periodic box with the nonlinearity off decays by exactly
    1 / (1 + dt (sigma^2 - sigma)) per step.
    """
    grid = Grid.periodic_box([BOX_LENGTH] * 3, [n] * 3)
    x1 = grid.mesh()[0]
    u0 = VectorField3(
        ScalarField(grid, np.cos(k * x1)), ScalarField.zeros(grid), ScalarField.zeros(grid)
    )
    cfg = IntegratorConfig(dt=dt, t_end=steps * dt, solver_tol=solver_tol, nonlinear=False)
    result = run(SimState(u0), cfg)
    sigma = discrete_symbol(k, grid.h1)
    factor = (1.0 / (1.0 + dt * (sigma * sigma - sigma))) ** steps
    expected = u0 * factor
    error = _field_distance(result.state.u, expected) / norm_l2(u0.u1)
    limit = 10.0 * steps * solver_tol
    return {
        'name': 'linear_symbol',
        'pass': bool(error <= limit),
        'relative_error': error,
        'limit': limit,
        'factor': factor,
        'sigma': sigma,
    }

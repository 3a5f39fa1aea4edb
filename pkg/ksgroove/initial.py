"""
Initial data for the gradient system: smooth potentials phi0 and u0 = grad phi0.
"""

from typing import Sequence

import numpy as np

from ksgroove.errors import InvalidInitialDataError
from ksgroove.fields import ScalarField, VectorField3, gradient
from ksgroove.geometry import CLAMPED, SUPPORT_MARGIN, Grid


FAMILIES = ('separable', 'random')

# Relative size below which potential values count as outside the support
SUPPORT_TOL = 1e-12


def wall_factor(x: np.ndarray, length: float, power: int = 2) -> np.ndarray:
    """
    sin(pi x / length)^power on [0, length] and zero outside.
    """
    inside = (x >= 0.0) & (x <= length)
    return np.where(inside, np.sin(np.pi * np.clip(x, 0.0, length) / length) ** power, 0.0)


def potential_datum(
    grid: Grid,
    family: str = 'separable',
    amplitude: float = 1e-2,
    modes: Sequence[int] = (1,),
    seed: int = 0,
    wall_power: int = 2,
    support_fraction: float = 1.0 - SUPPORT_MARGIN,
) -> ScalarField:
    """
    Build phi0 on a groove grid.

    separable: eps * sum_m sin(2 pi m x1 / L1) * sin^p(pi x2 / B) * sin^p(pi x3 / S), with
    S = support_fraction * L3 so the support stops short of the truncation plane.
    random: the same wall factors times a seeded combination of low Fourier modes.
    """
    if family not in FAMILIES:
        raise InvalidInitialDataError(f'Unknown initial datum family {family!r}')
    if wall_power < 2 or wall_power % 2:
        raise InvalidInitialDataError(f'wall_power must be an even integer >= 2, got {wall_power}')
    L1, B, L3 = grid.extents
    x1, x2, x3 = grid.mesh()
    support = support_fraction * L3 if grid.bc[2] == CLAMPED else L3
    walls = wall_factor(x2, B, wall_power) * wall_factor(x3, support, wall_power)

    if family == 'separable':
        along = sum(np.sin(2.0 * np.pi * m * x1 / L1) for m in modes)
        return ScalarField(grid, amplitude * along * walls)

    rng = np.random.default_rng(seed)
    phi = np.zeros(grid.shape)
    for _ in range(4):
        k1, k2, k3 = rng.integers(1, 4, size=3)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        coefficient = rng.normal()
        phi += (
            coefficient
            * np.cos(2.0 * np.pi * k1 * x1 / L1 + phase)
            * np.cos(np.pi * (k2 - 1) * x2 / B)
            * np.cos(np.pi * (k3 - 1) * np.clip(x3, 0.0, support) / support)
        )
    scale = np.max(np.abs(phi * walls))
    if scale > 0:
        phi /= scale
    return ScalarField(grid, amplitude * phi * walls)


def check_support(phi0: ScalarField, margin: float = SUPPORT_MARGIN):
    """
    Raise unless @phi0 vanishes on the outer @margin fraction of the clamped x3 extent.
    """
    grid = phi0.grid
    if not phi0.is_finite():
        raise InvalidInitialDataError('Initial potential contains NaN or Inf')
    if grid.bc[2] != CLAMPED:
        return
    x3 = grid.axis_coords(2)
    outer = x3 >= (1.0 - margin) * grid.extents[2]
    peak = float(np.max(np.abs(phi0.values))) if phi0.values.size else 0.0
    if peak == 0.0:
        return
    spill = float(np.max(np.abs(phi0.values[:, :, outer]), initial=0.0))
    if spill > SUPPORT_TOL * peak:
        raise InvalidInitialDataError(
            f'Initial potential reaches into the outer {margin:.0%} of the x3 extent '
            f'(max |phi0| there is {spill:.3e}, peak {peak:.3e})'
        )


def init_from_potential(phi0: ScalarField) -> VectorField3:
    """
    u0 = grad phi0, which is curl free by construction.
    """
    check_support(phi0)
    return gradient(phi0)

"""
Discrete fields on a Grid and the finite-difference operators of the K-S system.

Stencils read from a padded copy of the node array. Along a periodic axis the pad
wraps. Along a clamped axis the pad holds the wall node (value zero) and one ghost
node mirroring the first interior node, so the value and the centered normal
derivative both vanish on the wall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from ksgroove.errors import NonFiniteFieldError, InvalidArgumentError
from ksgroove.geometry import CLAMPED, Grid

PAD = 2


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise InvalidArgumentError(
                f'Field shape {values.shape} does not match grid interior {self.grid.shape}'
            )
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid: Grid) -> 'ScalarField':
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other: 'ScalarField') -> 'ScalarField':
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: 'ScalarField') -> 'ScalarField':
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> 'ScalarField':
        return ScalarField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


@dataclass(frozen=True, eq=False)
class VectorField3:
    u1: ScalarField
    u2: ScalarField
    u3: ScalarField

    def __post_init__(self):
        if not (self.u1.grid == self.u2.grid == self.u3.grid):
            raise InvalidArgumentError('All three components must share one grid')

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def components(self) -> Tuple[ScalarField, ScalarField, ScalarField]:
        return (self.u1, self.u2, self.u3)

    def __iter__(self) -> Iterator[ScalarField]:
        return iter(self.components)

    def stack(self) -> np.ndarray:
        """
        Components as one (3, ...) array.
        """
        return np.stack([c.values for c in self.components])

    @classmethod
    def from_stack(cls, grid: Grid, values: np.ndarray) -> 'VectorField3':
        return cls(*(ScalarField(grid, values[k]) for k in range(3)))

    @classmethod
    def zeros(cls, grid: Grid) -> 'VectorField3':
        return cls(*(ScalarField.zeros(grid) for _ in range(3)))

    def __add__(self, other: 'VectorField3') -> 'VectorField3':
        return VectorField3(*(a + b for a, b in zip(self, other)))

    def __sub__(self, other: 'VectorField3') -> 'VectorField3':
        return VectorField3(*(a - b for a, b in zip(self, other)))

    def __mul__(self, scalar: float) -> 'VectorField3':
        return VectorField3(*(a * scalar for a in self))

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return all(c.is_finite() for c in self)


def _require_finite(f: ScalarField):
    if not f.is_finite():
        raise NonFiniteFieldError('Operator input contains NaN or Inf')


def _face(axis: int, index) -> Tuple:
    """
    Index of the slab at padded position @index along @axis, interior on the other axes.
    """
    key = [slice(PAD, -PAD)] * 3
    key[axis] = index
    return tuple(key)


def _pad(values: np.ndarray, grid: Grid, walls: Optional[Dict[int, Tuple]] = None) -> np.ndarray:
    """
    Ghost extension of @values: two layers per side on every axis. @walls overrides the
    wall values of clamped axes with (low, high) slabs.
    """
    walls = walls or {}
    p = np.zeros(tuple(s + 2 * PAD for s in values.shape))
    p[(slice(PAD, -PAD),) * 3] = values
    for axis, bc in enumerate(grid.bc):
        n = values.shape[axis]
        if bc == CLAMPED:
            lo, hi = walls.get(axis, (0.0, 0.0))
            p[_face(axis, PAD - 1)] = lo
            p[_face(axis, PAD - 2)] = np.take(values, 0, axis=axis)
            p[_face(axis, -PAD)] = hi
            p[_face(axis, -PAD + 1)] = np.take(values, n - 1, axis=axis)
        else:
            p[_face(axis, PAD - 2)] = np.take(values, (n - 2) % n, axis=axis)
            p[_face(axis, PAD - 1)] = np.take(values, n - 1, axis=axis)
            p[_face(axis, -PAD)] = np.take(values, 0, axis=axis)
            p[_face(axis, -PAD + 1)] = np.take(values, 1 % n, axis=axis)
    return p


def _shift(p: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """
    View of the padded array shifted by @offset along @axis, over the interior nodes.
    """
    key = [slice(PAD, -PAD)] * 3
    stop = p.shape[axis] - PAD + offset
    key[axis] = slice(PAD + offset, stop)
    return p[tuple(key)]


def _second_difference(p: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shift(p, axis, 1) - 2.0 * _shift(p, axis, 0) + _shift(p, axis, -1)) / (h * h)


def _fourth_difference(p: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (
        _shift(p, axis, 2)
        - 4.0 * _shift(p, axis, 1)
        + 6.0 * _shift(p, axis, 0)
        - 4.0 * _shift(p, axis, -1)
        + _shift(p, axis, -2)
    ) / h ** 4


def _centered_difference(p: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shift(p, axis, 1) - _shift(p, axis, -1)) / (2.0 * h)


def _laplacian_values(values: np.ndarray, grid: Grid, walls=None) -> np.ndarray:
    p = _pad(values, grid, walls)
    out = _second_difference(p, 0, grid.h1)
    out += _second_difference(p, 1, grid.h2)
    out += _second_difference(p, 2, grid.h3)
    return out


def _wall_laplacian(values: np.ndarray, grid: Grid) -> Dict[int, Tuple]:
    """
    Laplacian on the wall planes of clamped axes. Only the normal second difference
    survives there: (ghost - 0 + first interior) / h^2 = 2 u_1 / h^2.
    """
    walls = {}
    for axis, (bc, h) in enumerate(zip(grid.bc, grid.spacings)):
        if bc == CLAMPED:
            n = values.shape[axis]
            walls[axis] = (
                2.0 * np.take(values, 0, axis=axis) / (h * h),
                2.0 * np.take(values, n - 1, axis=axis) / (h * h),
            )
    return walls


def gradient(f: ScalarField) -> VectorField3:
    """
    Centered second-order differences per axis.
    """
    _require_finite(f)
    grid = f.grid
    p = _pad(f.values, grid)
    return VectorField3(
        *(ScalarField(grid, _centered_difference(p, k, h)) for k, h in enumerate(grid.spacings))
    )


def face_gradient(f: ScalarField) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Forward differences on cell faces, including the half cells next to clamped walls.
    These satisfy sum(f * laplacian(g)) == -sum(face_gradient(f) . face_gradient(g)).
    """
    _require_finite(f)
    grid = f.grid
    diffs = []
    for axis, (bc, h) in enumerate(zip(grid.bc, grid.spacings)):
        v = f.values
        if bc == CLAMPED:
            zero = np.zeros_like(np.take(v, [0], axis=axis))
            ext = np.concatenate([zero, v, zero], axis=axis)
            diffs.append(np.diff(ext, axis=axis) / h)
        else:
            diffs.append((np.roll(v, -1, axis=axis) - v) / h)
    return tuple(diffs)


def laplacian(f: ScalarField) -> ScalarField:
    """
    7-point second-order Laplacian.
    """
    _require_finite(f)
    return ScalarField(f.grid, _laplacian_values(f.values, f.grid))


def bilaplacian(f: ScalarField, method: str = 'composed') -> ScalarField:
    """
    Delta_h^2 f. 'composed' applies the Laplacian twice with the wall values of the
    intermediate refilled from the ghost rule; 'direct' sums fourth differences along
    each axis and mixed second differences. Both give the symmetric clamped operator.
    """
    _require_finite(f)
    grid = f.grid
    v = f.values
    if method == 'composed':
        lap = _laplacian_values(v, grid)
        return ScalarField(grid, _laplacian_values(lap, grid, _wall_laplacian(v, grid)))
    if method == 'direct':
        p = _pad(v, grid)
        out = np.zeros_like(v)
        second = []
        for axis, h in enumerate(grid.spacings):
            out += _fourth_difference(p, axis, h)
            second.append(_second_difference(p, axis, h))
        for k in range(3):
            for l in range(k + 1, 3):
                mixed = _second_difference(_pad(second[l], grid), k, grid.spacings[k])
                out += 2.0 * mixed
        return ScalarField(grid, out)
    raise InvalidArgumentError(f'Unknown bilaplacian method {method!r}')


def nonlinearity(u: VectorField3) -> VectorField3:
    """
    Component j is 1/2 d_j (u1^2 + u2^2 + u3^2), an exact discrete gradient.
    """
    s = u.u1.values ** 2 + u.u2.values ** 2 + u.u3.values ** 2
    return gradient(ScalarField(u.grid, 0.5 * s))


def inner(f: ScalarField, g: ScalarField) -> float:
    """
    Discrete L2 inner product (midpoint rule, zero wall nodes carry no weight).
    """
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def _sum_squares(values: np.ndarray) -> float:
    # np.sum on a contiguous array uses a fixed pairwise order
    return float(np.sum(np.square(np.ascontiguousarray(values))))


def norm_l2(f: ScalarField) -> float:
    return float(np.sqrt(_sum_squares(f.values) * f.grid.cell_volume))


def norm_grad(f: ScalarField) -> float:
    """
    ||grad f|| from face_gradient, not from the centered gradient. With face differences
    ||grad f||^2 == -<f, laplacian(f)> holds exactly on every grid, so the discrete
    Steklov, L4 and Poincare ratios are computed against the same operator the solver
    uses. The centered gradient skips the highest mode and would understate the norm.
    """
    total = sum(_sum_squares(d) for d in face_gradient(f))
    return float(np.sqrt(total * f.grid.cell_volume))


def norm_lap(f: ScalarField) -> float:
    return norm_l2(laplacian(f))


def norm_l4(f: ScalarField) -> float:
    return float((np.sum(np.ascontiguousarray(f.values) ** 4) * f.grid.cell_volume) ** 0.25)


def curl_residual(u: VectorField3) -> float:
    """
    max over i != j of || D_j u_i - D_i u_j ||.
    """
    grid = u.grid
    padded = [_pad(c.values, grid) for c in u]
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            d_j_ui = _centered_difference(padded[i], j, grid.spacings[j])
            d_i_uj = _centered_difference(padded[j], i, grid.spacings[i])
            worst = max(worst, norm_l2(ScalarField(grid, d_j_ui - d_i_uj)))
    return worst


def energy(u: VectorField3) -> float:
    """
    E = sum_j ||u_j||^2.
    """
    return sum(norm_l2(c) ** 2 for c in u)


def outer_mass_fraction(u: VectorField3, margin: float) -> float:
    """
    Share of the energy in the outer @margin fraction of the clamped x3 extent.
    """
    grid = u.grid
    if grid.bc[2] != CLAMPED:
        return 0.0
    x3 = grid.axis_coords(2)
    outer = x3 > (1.0 - margin) * grid.extents[2]
    total = energy(u)
    if total == 0.0:
        return 0.0
    part = sum(_sum_squares(c.values[:, :, outer]) for c in u) * grid.cell_volume
    return part / total

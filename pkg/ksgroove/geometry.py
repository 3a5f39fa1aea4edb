"""
Continuous groove description, its truncation to a computational box, the grid, and
the closed-form constants of the decay theorem.

Everything here is computed in the canonical orientation: axis 1 is the whole line
(periodic cell of length L1), axis 2 carries the bounded width B, and axis 3 is the
half line truncated to (0, L3). Other grooves are relabelings of this one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Sequence, Tuple

import numpy as np
from bidict import bidict

from ksgroove.errors import InadmissibleDomainError, InvalidArgumentError, InvalidSpecError

AXES = ('x1', 'x2', 'x3')

PERIODIC = 'periodic'
CLAMPED = 'clamped'

# Minimum cell count on clamped axes: the 5-wide biharmonic stencil plus ghosts
MIN_CLAMPED_CELLS = 8

# Fraction of the x3 extent that initial data must leave empty
SUPPORT_MARGIN = 0.1

# Keyed by the physical axis that carries the bounded width.
# Maps physical axis label -> canonical axis label. Every entry is an involution.
ORIENTATIONS = {
    'x2': bidict({'x1': 'x1', 'x2': 'x2', 'x3': 'x3'}),
    'x3': bidict({'x1': 'x1', 'x3': 'x2', 'x2': 'x3'}),
    'x1': bidict({'x2': 'x1', 'x1': 'x2', 'x3': 'x3'}),
}


def _permutation(orientation: str) -> bidict:
    try:
        return ORIENTATIONS[orientation]
    except KeyError:
        raise InvalidSpecError(
            f'Unknown orientation {orientation!r}, expected one of {", ".join(ORIENTATIONS)}'
        ) from None


@dataclass(frozen=True)
class GrooveSpec:
    """
    A groove of width @width_B truncated to a periodic cell of length @trunc_x1 and a
    clamped extent @trunc_x3. @orientation names the physical axis carrying the width.
    """

    width_B: float
    trunc_x1: float = 4.0
    trunc_x3: float = 4.0
    orientation: str = 'x2'

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InvalidSpecError('; '.join(problems))

    def problems(self):
        problems = []
        for name in ('width_B', 'trunc_x1', 'trunc_x3'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                problems.append(f'groove.{name} must be a positive finite length, got {value!r}')
        if self.orientation not in ORIENTATIONS:
            problems.append(
                f'groove.orientation must be one of {", ".join(ORIENTATIONS)}, got {self.orientation!r}'
            )
        return problems

    def admissible(self) -> bool:
        return self.width_B < math.pi

    def extents(self) -> Tuple[float, float, float]:
        """
        Canonical extents (L1, B, L3).
        """
        return (self.trunc_x1, self.width_B, self.trunc_x3)

    def physical_extents(self) -> Dict[str, float]:
        """
        Extents keyed by the physical axis label.
        """
        return dict(zip(AXES, to_physical_axes(self.extents(), self.orientation)))


def relabel(spec: GrooveSpec, orientation: str = 'x2') -> GrooveSpec:
    """
    The same groove with its bounded width carried by physical axis @orientation.
    Width, truncations and constants are untouched; only the physical labels move, so
    relabel(relabel(spec, o), spec.orientation) == spec.
    """
    _permutation(orientation)
    return replace(spec, orientation=orientation)


def _axis_order(orientation: str, to_canonical: bool) -> Tuple[int, ...]:
    perm = _permutation(orientation)
    mapping = perm if to_canonical else perm.inverse
    # output axis k takes input axis order[k]
    return tuple(AXES.index(mapping.inverse[axis]) for axis in AXES)


def _permute(values: np.ndarray, order: Tuple[int, ...], vector: bool) -> np.ndarray:
    lead = tuple(range(values.ndim - 3))
    out = np.transpose(values, lead + tuple(len(lead) + k for k in order))
    if vector:
        # components follow their axes
        out = out[list(order)]
    return out


def to_canonical(values: np.ndarray, orientation: str, vector: bool = False) -> np.ndarray:
    """
    Permute the trailing three axes of @values from physical to canonical order. With
    @vector the leading axis holds the three components and is permuted too.
    """
    return _permute(values, _axis_order(orientation, to_canonical=True), vector)


def to_physical(values: np.ndarray, orientation: str, vector: bool = False) -> np.ndarray:
    """
    Permute the trailing three axes of @values from canonical to physical order.
    """
    return _permute(values, _axis_order(orientation, to_canonical=False), vector)


def to_canonical_axes(per_axis: Sequence, orientation: str) -> Tuple:
    """
    Reorder a per-axis triple (sizes, spacings, boundary kinds) from physical to canonical.
    """
    return tuple(per_axis[k] for k in _axis_order(orientation, to_canonical=True))


def to_physical_axes(per_axis: Sequence, orientation: str) -> Tuple:
    return tuple(per_axis[k] for k in _axis_order(orientation, to_canonical=False))


@dataclass(frozen=True)
class GrooveConstants:
    a: float
    theta: float
    decay_rate: float

    def as_dict(self) -> Dict[str, float]:
        return {'a': self.a, 'theta': self.theta, 'decay_rate': self.decay_rate}


def steklov_constant(spec: GrooveSpec) -> float:
    """
    The groove Poincare constant a = pi^2 / B^2.
    """
    if not spec.width_B > 0:
        raise InvalidSpecError(f'Groove width must be positive, got {spec.width_B!r}')
    return math.pi ** 2 / spec.width_B ** 2


def raw_constants(spec: GrooveSpec) -> GrooveConstants:
    """
    a, theta and the decay rate without the admissibility check. theta <= 0 and a
    non-positive decay rate mean no guarantee.
    """
    a = steklov_constant(spec)
    theta = 1.0 - 1.0 / a
    return GrooveConstants(a=a, theta=theta, decay_rate=a * a * theta / 2.0)


def constants(spec: GrooveSpec) -> GrooveConstants:
    if not spec.admissible():
        raise InadmissibleDomainError(spec.width_B)
    return raw_constants(spec)


def _check_energy(energy: float, name: str):
    if not energy >= 0:
        raise InvalidArgumentError(f'{name} must be non-negative, got {energy!r}')


def smallness_margin(c: GrooveConstants, energy0: float) -> float:
    """
    theta - 48/(theta a^{3/2}) E0. Positive means the smallness hypothesis holds.
    """
    _check_energy(energy0, 'energy0')
    return c.theta - 48.0 / (c.theta * c.a ** 1.5) * energy0


def estimate1_margin(c: GrooveConstants, energy: float) -> float:
    """
    theta - 24/(theta a^{3/2}) E, the bracket that must stay positive along the flow.
    """
    _check_energy(energy, 'energy')
    return c.theta - 24.0 / (c.theta * c.a ** 1.5) * energy


def smallness_root(c: GrooveConstants) -> float:
    return c.theta ** 2 * c.a ** 1.5 / 48.0


@dataclass(frozen=True)
class Grid:
    """
    Tensor-product grid. Clamped axes store the n-1 interior nodes (walls sit at node
    0 and node n and are zero); periodic axes store n nodes.
    """

    n1: int
    n2: int
    n3: int
    h1: float
    h2: float
    h3: float
    bc: Tuple[str, str, str] = (PERIODIC, CLAMPED, CLAMPED)

    def __post_init__(self):
        problems = []
        for k, (n, h, bc) in enumerate(zip(self.sizes, self.spacings, self.bc), start=1):
            if not (isinstance(n, (int, np.integer)) and n >= 1):
                problems.append(f'grid.n{k} must be a positive integer, got {n!r}')
            if not (math.isfinite(h) and h > 0):
                problems.append(f'grid.h{k} must be positive, got {h!r}')
            if bc not in (PERIODIC, CLAMPED):
                problems.append(f'axis {k} boundary must be periodic or clamped, got {bc!r}')
            elif bc == CLAMPED and isinstance(n, (int, np.integer)) and n < MIN_CLAMPED_CELLS:
                problems.append(
                    f'grid.n{k} must be at least {MIN_CLAMPED_CELLS} on a clamped axis, got {n}'
                )
        if self.bc[0] != PERIODIC:
            problems.append('axis 1 must be periodic')
        if problems:
            raise InvalidSpecError('; '.join(problems))

    @classmethod
    def for_groove(cls, spec: GrooveSpec, n1: int, n2: int, n3: int) -> 'Grid':
        L1, B, L3 = spec.extents()
        return cls(n1, n2, n3, L1 / n1, B / n2, L3 / n3)

    @classmethod
    def periodic_box(cls, lengths: Sequence[float], sizes: Sequence[int]) -> 'Grid':
        """
        The fully periodic test box. Only for oracle tests, never physics runs.
        """
        n1, n2, n3 = (int(n) for n in sizes)
        return cls(
            n1, n2, n3,
            lengths[0] / n1, lengths[1] / n2, lengths[2] / n3,
            bc=(PERIODIC, PERIODIC, PERIODIC),
        )

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def spacings(self) -> Tuple[float, float, float]:
        return (self.h1, self.h2, self.h3)

    @property
    def extents(self) -> Tuple[float, float, float]:
        return tuple(n * h for n, h in zip(self.sizes, self.spacings))

    @property
    def is_periodic_box(self) -> bool:
        return all(bc == PERIODIC for bc in self.bc)

    @property
    def shape(self) -> Tuple[int, int, int]:
        """
        Shape of the stored (interior) node array.
        """
        return tuple(n if bc == PERIODIC else n - 1 for n, bc in zip(self.sizes, self.bc))

    @property
    def cell_volume(self) -> float:
        return self.h1 * self.h2 * self.h3

    @property
    def h_min(self) -> float:
        return min(self.spacings)

    def axis_coords(self, axis: int) -> np.ndarray:
        """
        Coordinates of the stored nodes along @axis (0-based).
        """
        n, h, bc = self.sizes[axis], self.spacings[axis], self.bc[axis]
        if bc == PERIODIC:
            return np.arange(n) * h
        return np.arange(1, n) * h

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*(self.axis_coords(k) for k in range(3)), indexing='ij'))

    def refined(self, factor: int = 2) -> 'Grid':
        return replace(
            self,
            n1=self.n1 * factor, n2=self.n2 * factor, n3=self.n3 * factor,
            h1=self.h1 / factor, h2=self.h2 / factor, h3=self.h3 / factor,
        )

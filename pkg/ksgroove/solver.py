"""
Implicit solve for (I + dt (Delta_h^2 + Delta_h)) x = b.

The iteration is preconditioned conjugate gradients on the stencil operator. The
default preconditioner is the exact inverse of the same operator: an FFT along the
periodic x1 axis decouples the wavenumbers, and each (x2, x3) block is factorized once
with a sparse LU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np
from scipy import fft, sparse
from scipy.sparse.linalg import splu

from ksgroove.errors import InvalidArgumentError, SolverFailureError
from ksgroove.fields import ScalarField, bilaplacian, laplacian
from ksgroove.geometry import CLAMPED, Grid
from ksgroove.logger import get_logger

logger = get_logger()

PRECONDITIONERS = ('fourier', 'none')

# Continuum minimum of k^4 - k^2 is -1/4, so dt < 4 keeps I + dt(D^2 + D) positive
DT_POSITIVITY_BOUND = 4.0


@dataclass
class SolveInfo:
    iterations: int
    residual_history: List[float] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0


def second_difference_matrix(n_nodes: int, h: float, bc: str) -> sparse.csr_matrix:
    """
    1D second difference on the stored nodes of an axis.
    """
    if bc != CLAMPED and n_nodes == 1:
        return sparse.csr_matrix((1, 1))
    e = np.ones(n_nodes)
    d2 = sparse.diags([e[:-1], -2.0 * e, e[:-1]], [-1, 0, 1], format='lil')
    if bc != CLAMPED and n_nodes > 1:
        d2[0, n_nodes - 1] += 1.0
        d2[n_nodes - 1, 0] += 1.0
    return (d2.tocsr() / (h * h)).tocsr()


def fourth_difference_matrix(n_nodes: int, h: float, bc: str) -> sparse.csr_matrix:
    """
    1D fourth difference. Clamped: the Dirichlet square plus 2/h^4 in both corners,
    which is the 7, -4, 1 wall row of the ghost rule.
    """
    d2 = second_difference_matrix(n_nodes, h, bc)
    d4 = (d2 @ d2).tolil()
    if bc == CLAMPED:
        d4[0, 0] += 2.0 / h ** 4
        d4[n_nodes - 1, n_nodes - 1] += 2.0 / h ** 4
    return d4.tocsr()


def x1_symbol(grid: Grid) -> np.ndarray:
    """
    Eigenvalues of the periodic second difference along x1 for the rfft wavenumbers.
    """
    k = np.arange(grid.n1 // 2 + 1)
    return -(2.0 - 2.0 * np.cos(2.0 * np.pi * k / grid.n1)) / grid.h1 ** 2


def apply_operator(values: np.ndarray, grid: Grid, dt: float) -> np.ndarray:
    """
    (I + dt (Delta_h^2 + Delta_h)) applied to each leading slice of @values.
    """
    out = np.empty_like(values)
    for c in range(values.shape[0]):
        f = ScalarField(grid, values[c])
        out[c] = values[c] + dt * (bilaplacian(f).values + laplacian(f).values)
    return out


class FourierPreconditioner:
    """
    Exact inverse of the implicit operator through x1 wavenumber blocks.
    """

    def __init__(self, grid: Grid, dt: float):
        self.grid = grid
        self.dt = dt
        _, m2, m3 = grid.shape
        d2_2 = second_difference_matrix(m2, grid.h2, grid.bc[1])
        d2_3 = second_difference_matrix(m3, grid.h3, grid.bc[2])
        d4_2 = fourth_difference_matrix(m2, grid.h2, grid.bc[1])
        d4_3 = fourth_difference_matrix(m3, grid.h3, grid.bc[2])
        i2 = sparse.identity(m2, format='csr')
        i3 = sparse.identity(m3, format='csr')
        lap23 = sparse.kron(d2_2, i3) + sparse.kron(i2, d2_3)
        bilap23 = sparse.kron(d4_2, i3) + 2.0 * sparse.kron(d2_2, d2_3) + sparse.kron(i2, d4_3)
        eye = sparse.identity(m2 * m3, format='csc')
        self.factors = []
        for sigma in x1_symbol(grid):
            block = (
                (1.0 + dt * (sigma * sigma + sigma)) * eye
                + dt * (2.0 * sigma + 1.0) * lap23
                + dt * bilap23
            )
            self.factors.append(splu(sparse.csc_matrix(block)))
        logger.debug(f'Factorized {len(self.factors)} x1 wavenumber blocks of size {m2 * m3}')

    def __call__(self, values: np.ndarray) -> np.ndarray:
        c, n1, m2, m3 = values.shape
        spectrum = fft.rfft(values, axis=1)
        out = np.empty_like(spectrum)
        for k, lu in enumerate(self.factors):
            rhs = spectrum[:, k].reshape(c, m2 * m3).T
            solved = lu.solve(np.ascontiguousarray(np.hstack([rhs.real, rhs.imag])))
            out[:, k] = (solved[:, :c] + 1j * solved[:, c:]).T.reshape(c, m2, m3)
        return fft.irfft(out, n=n1, axis=1)


@lru_cache(maxsize=8)
def preconditioner_for(grid: Grid, dt: float, kind: str) -> Optional[Callable]:
    if kind == 'none':
        return None
    if kind == 'fourier':
        return FourierPreconditioner(grid, dt)
    raise InvalidArgumentError(f'Unknown preconditioner {kind!r}')


def conjugate_gradient(
    operator: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float,
    max_iter: int,
    preconditioner: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x0: Optional[np.ndarray] = None,
):
    """
    Preconditioned conjugate gradients. Stops when ||r|| / ||b|| <= @tol; raises
    SolverFailureError with the residual history otherwise.
    """
    b_norm = math.sqrt(float(np.vdot(b, b)))
    if b_norm == 0.0:
        return np.zeros_like(b), SolveInfo(0, [0.0])

    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - operator(x) if x0 is not None else b.copy()
    history = [math.sqrt(float(np.vdot(r, r))) / b_norm]
    if history[-1] <= tol:
        return x, SolveInfo(0, history)

    z = preconditioner(r) if preconditioner else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, max_iter + 1):
        ap = operator(p)
        alpha = rz / float(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        history.append(math.sqrt(float(np.vdot(r, r))) / b_norm)
        if history[-1] <= tol:
            return x, SolveInfo(it, history)
        z = preconditioner(r) if preconditioner else r
        rz_next = float(np.vdot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise SolverFailureError(max_iter, history)


def solve_stacked(
    rhs: np.ndarray,
    grid: Grid,
    dt: float,
    tol: float,
    max_iter: int,
    preconditioner: str = 'fourier',
):
    """
    Solve the implicit system for every component of a (c, ...) array at once.
    """
    if not 0.0 < dt < DT_POSITIVITY_BOUND:
        raise InvalidArgumentError(f'dt must lie in (0, {DT_POSITIVITY_BOUND}), got {dt!r}')
    return conjugate_gradient(
        lambda v: apply_operator(v, grid, dt),
        rhs,
        tol,
        max_iter,
        preconditioner_for(grid, dt, preconditioner),
    )

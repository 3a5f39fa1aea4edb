"""
Quadrature checks of the functional inequalities behind the decay theorem: the 1D
Steklov inequality, the L4 interpolation inequality, and the groove Poincare chain
a||f||^2 <= ||grad f||^2, a^2||f||^2 <= ||Lap f||^2, a||grad f||^2 <= ||Lap f||^2.

Ratios are always "right side over left side" so that 1 is the sharp case and a pass
means ratio >= 1 - quad_tol.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from bidict import bidict

from ksgroove.errors import InvalidArgumentError, UndefinedRatioError
from ksgroove.fields import ScalarField, norm_grad, norm_l2, norm_l4, laplacian
from ksgroove.geometry import GrooveSpec, Grid, raw_constants
from ksgroove.initial import wall_factor
from ksgroove.logger import get_logger

logger = get_logger()

QUAD_TOL = 1e-3
PASS_FRACTION = 0.99
L4_CONSTANT = math.sqrt(2.0)

TEST_FAMILIES = ('separable-sine-bump', 'random-Fourier-bump', 'wall-concentrated')
PROFILE_FAMILIES = ('sine-bump', 'polynomial', 'wall-concentrated')

LEMMAS = ('steklov', 'l4', 'groove-poincare')

# Numbered command line names <-> descriptive names
LEMMA_NUMBERS = bidict({'2.1': 'steklov', '2.3': 'l4', '3.1': 'groove-poincare'})


def lemma_name(name: str) -> str:
    """
    The descriptive name for @name, which may be either form.
    """
    if name in LEMMAS:
        return name
    try:
        return LEMMA_NUMBERS[name]
    except KeyError:
        choices = ', '.join(f'{number} ({LEMMA_NUMBERS[number]})' for number in LEMMA_NUMBERS)
        raise InvalidArgumentError(f'Unknown lemma {name!r}, expected one of {choices}') from None


LAB_SPEC = GrooveSpec(2.0)
LAB_SIZES = (16, 48, 32)
PROFILE_NODES = 64


def lab_grid(spec: GrooveSpec = LAB_SPEC, sizes: Sequence[int] = LAB_SIZES) -> Grid:
    return Grid.for_groove(spec, *sizes)


@dataclass(frozen=True)
class TestFunctionSpec:
    family: str
    seed: int
    amplitude: float = 1.0
    grid: Grid = field(default_factory=lab_grid)

    __test__ = False

    def __post_init__(self):
        if self.family not in TEST_FAMILIES:
            raise InvalidArgumentError(
                f'Unknown test function family {self.family!r}, expected one of {", ".join(TEST_FAMILIES)}'
            )


@dataclass
class RatioReport:
    lemma: str
    seed: Optional[int]
    ratios: Dict[str, float]
    passed: bool
    undefined: bool = False
    refined: bool = False
    family: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lemma': self.lemma,
            'seed': self.seed,
            'family': self.family,
            'ratios': self.ratios,
            'pass': self.passed,
            'undefined': self.undefined,
            'refined': self.refined,
            **self.details,
        }


@dataclass
class LabReport:
    lemma: str
    reports: List[RatioReport]
    quad_tol: float

    @property
    def defined(self) -> List[RatioReport]:
        return [r for r in self.reports if not r.undefined]

    @property
    def pass_fraction(self) -> float:
        defined = self.defined
        if not defined:
            return 1.0
        return sum(r.passed for r in defined) / len(defined)

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= PASS_FRACTION

    def to_dict(self) -> Dict[str, Any]:
        out = {
            'lemma': self.lemma,
            'number': LEMMA_NUMBERS.inverse[self.lemma],
            'checks': len(self.reports),
            'undefined': len(self.reports) - len(self.defined),
            'refined': sum(r.refined for r in self.reports),
            'pass_fraction': self.pass_fraction,
            'pass': self.passed,
            'quad_tol': self.quad_tol,
            'results': [r.to_dict() for r in self.reports],
        }
        if self.lemma == 'l4':
            out['empirical_constant'] = l4_constant_estimate(self.reports)
        return out


def sample_test_function(spec: TestFunctionSpec) -> ScalarField:
    """
    A function in the discrete clamped class: every family is a product with
    sin^2 wall factors in x2 and x3, so value and normal derivative vanish on the walls.
    Deterministic in spec.seed.
    """
    grid = spec.grid
    rng = np.random.default_rng(spec.seed)
    L1, B, L3 = grid.extents
    x1, x2, x3 = grid.mesh()
    walls = wall_factor(x2, B) * wall_factor(x3, L3)

    if spec.family == 'separable-sine-bump':
        m = int(rng.integers(0, 4))
        phase = rng.uniform(0.0, 2.0 * np.pi)
        shape = np.sin(2.0 * np.pi * m * x1 / L1 + phase)
    elif spec.family == 'random-Fourier-bump':
        shape = np.zeros(grid.shape)
        for _ in range(int(rng.integers(2, 7))):
            k1, k2, k3 = rng.integers(0, 4, size=3)
            phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
            shape += (
                rng.normal()
                * np.cos(2.0 * np.pi * k1 * x1 / L1 + phases[0])
                * np.cos(np.pi * k2 * x2 / B + phases[1])
                * np.cos(np.pi * k3 * x3 / L3 + phases[2])
            )
    else:
        m = int(rng.integers(0, 3))
        alpha = rng.uniform(4.0, 12.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        shape = np.sin(2.0 * np.pi * m * x1 / L1 + phase) * np.exp(-alpha * x2 / B)
        if rng.random() < 0.5:
            shape = shape * np.exp(-alpha * (L3 - x3) / L3)

    values = shape * walls
    peak = np.max(np.abs(values))
    if peak > 0:
        values = values / peak
    return ScalarField(grid, spec.amplitude * values)


def sample_profile(family: str, seed: int, length: float = 1.0, n: int = PROFILE_NODES) -> np.ndarray:
    """
    A 1D profile on the n-1 interior nodes of (0, @length), vanishing at both ends.
    """
    rng = np.random.default_rng(seed)
    x = np.arange(1, n) * (length / n)
    y = x / length
    if family == 'sine-bump':
        k = int(rng.integers(1, 5))
        return np.sin(np.pi * k * y) * np.sin(np.pi * y) ** 2 + rng.normal() * np.sin(np.pi * y)
    if family == 'polynomial':
        coefficients = rng.normal(size=int(rng.integers(1, 6)))
        return y * (1.0 - y) * np.polynomial.polynomial.polyval(y, coefficients)
    if family == 'wall-concentrated':
        alpha = rng.uniform(4.0, 12.0)
        return y * (1.0 - y) * np.exp(-alpha * y)
    raise InvalidArgumentError(f'Unknown profile family {family!r}')


def check_steklov(values: np.ndarray, length: float, quad_tol: float = QUAD_TOL) -> RatioReport:
    """
    ||v_x||^2 L^2 / (pi^2 ||v||^2) for a profile given on the interior nodes of (0, L).
    Differences include the half cells to the zero end values.
    """
    values = np.asarray(values, dtype=float)
    h = length / (values.size + 1)
    v2 = float(np.sum(values ** 2)) * h
    if v2 == 0.0:
        raise UndefinedRatioError('Steklov ratio is undefined for the zero profile')
    vx2 = float(np.sum(np.diff(np.concatenate([[0.0], values, [0.0]])) ** 2)) / h
    ratio = vx2 * length ** 2 / (math.pi ** 2 * v2)
    return RatioReport('steklov', None, {'steklov': ratio}, ratio >= 1.0 - quad_tol)


def check_l4(v: ScalarField, quad_tol: float = QUAD_TOL) -> RatioReport:
    """
    sqrt(2) ||v||^{1/4} ||grad v||^{3/4} / ||v||_{L4}. Also reports the empirical
    constant ||v||_{L4} / (||v||^{1/4} ||grad v||^{3/4}).
    """
    lhs = norm_l4(v)
    if lhs == 0.0:
        raise UndefinedRatioError('L4 ratio is undefined for the zero function')
    scale = norm_l2(v) ** 0.25 * norm_grad(v) ** 0.75
    ratio = L4_CONSTANT * scale / lhs
    return RatioReport(
        'l4', None, {'l4': ratio}, ratio >= 1.0 - quad_tol, details={'constant': lhs / scale}
    )


def check_groove_poincare(f: ScalarField, spec: GrooveSpec, quad_tol: float = QUAD_TOL) -> RatioReport:
    """
    The three Poincare chain ratios with a = pi^2/B^2, plus the Cauchy-Schwarz step
    ||Lap f|| ||f|| / ||grad f||^2, which must also be at least 1.
    """
    a = raw_constants(spec).a
    f2 = norm_l2(f) ** 2
    if f2 == 0.0:
        raise UndefinedRatioError('Poincare ratios are undefined for the zero function')
    g2 = norm_grad(f) ** 2
    l2 = norm_l2(laplacian(f)) ** 2
    ratios = {
        'grad_over_l2': g2 / (a * f2),
        'lap_over_l2': l2 / (a * a * f2),
        'lap_over_grad': l2 / (a * g2),
        'cauchy_schwarz': math.sqrt(l2 * f2) / g2,
    }
    passed = all(r >= 1.0 - quad_tol for r in ratios.values())
    return RatioReport('groove-poincare', None, ratios, passed)


def _refine(spec: TestFunctionSpec) -> TestFunctionSpec:
    return TestFunctionSpec(spec.family, spec.seed, spec.amplitude, spec.grid.refined(2))


def _check_function(lemma: str, spec: TestFunctionSpec, groove: GrooveSpec, quad_tol: float) -> RatioReport:
    f = sample_test_function(spec)
    if lemma == 'l4':
        return check_l4(f, quad_tol)
    return check_groove_poincare(f, groove, quad_tol)


def _check_seed(lemma: str, seed: int, grid: Grid, groove: GrooveSpec, quad_tol: float, profile_nodes: int) -> RatioReport:
    """
    One seeded check; a failure is retried once at doubled resolution.
    """
    if lemma == 'steklov':
        family = PROFILE_FAMILIES[seed % len(PROFILE_FAMILIES)]

        def run(refined: bool) -> RatioReport:
            n = 2 * profile_nodes if refined else profile_nodes
            return check_steklov(sample_profile(family, seed, 1.0, n), 1.0, quad_tol)
    else:
        family = TEST_FAMILIES[seed % len(TEST_FAMILIES)]
        spec = TestFunctionSpec(family, seed, 1.0, grid)

        def run(refined: bool) -> RatioReport:
            return _check_function(lemma, _refine(spec) if refined else spec, groove, quad_tol)

    try:
        report = run(False)
        if not report.passed:
            logger.info(f'{lemma} seed {seed} failed ({report.ratios}); retrying at doubled resolution')
            retry = run(True)
            retry.refined = True
            retry.details['coarse_ratios'] = report.ratios
            report = retry
    except UndefinedRatioError as e:
        report = RatioReport(lemma, seed, {}, False, undefined=True, details={'error': str(e)})
    report.seed = seed
    report.family = family
    return report


def run_lemma_batch(
    lemma: str,
    seeds: Sequence[int],
    grid: Optional[Grid] = None,
    groove: GrooveSpec = LAB_SPEC,
    quad_tol: float = QUAD_TOL,
    profile_nodes: int = PROFILE_NODES,
    parallelism: int = 4,
) -> LabReport:
    """
    Check one inequality on a seeded family of test functions. Seeds cycle through the
    test function families.
    """
    lemma = lemma_name(lemma)
    grid = grid or lab_grid(groove)
    with ThreadPoolExecutor(max_workers=max(parallelism, 1)) as pool:
        reports = list(
            pool.map(lambda s: _check_seed(lemma, s, grid, groove, quad_tol, profile_nodes), seeds)
        )
    report = LabReport(lemma, reports, quad_tol)
    logger.info(f'{lemma}: {report.pass_fraction:.2%} of {len(report.defined)} checks pass')
    return report


def l4_constant_estimate(reports: Sequence[RatioReport]) -> Optional[float]:
    """
    Largest observed ||v||_{L4} / (||v||^{1/4} ||grad v||^{3/4}); no claim that it is
    the best constant.
    """
    constants = [r.details['constant'] for r in reports if 'constant' in r.details]
    return max(constants) if constants else None


def sharpness_sequence(
    width_B: float = 2.0,
    stretches: Sequence[float] = (1.0, 2.0, 4.0, 8.0),
    sizes: Sequence[int] = (32, 48, 32),
) -> List[Dict[str, Any]]:
    """
    Poincare ratios of sin(pi x2/B) times sin^2 envelopes of length s*B along x1 and x3.
    As s grows the ratios approach 1 from above; the first one behaves like
    1 + 8/(3 s^2).
    """
    results = []
    for s in stretches:
        spec = GrooveSpec(width_B, trunc_x1=s * width_B, trunc_x3=s * width_B)
        grid = Grid.for_groove(spec, *sizes)
        x1, x2, x3 = grid.mesh()
        f = ScalarField(
            grid,
            np.sin(np.pi * x2 / width_B) * wall_factor(x1, spec.trunc_x1) * wall_factor(x3, spec.trunc_x3),
        )
        report = check_groove_poincare(f, spec)
        results.append({'stretch': float(s), 'ratios': report.ratios, 'pass': report.passed})
    return results


def dilation_scan(
    scales: Sequence[float] = (0.5, 1.0, 2.0),
    box: float = 8.0,
    n: int = 96,
    radius: float = 1.8,
) -> Dict[str, Any]:
    """
    L4 ratio of an interior bump v(x/s). Both sides scale as s^{3/4} in three dimensions,
    so the ratio should not move beyond quadrature error.
    """
    grid = Grid.for_groove(GrooveSpec(box, box, box), n, n, n)
    mesh = grid.mesh()
    ratios = []
    for s in scales:
        values = np.ones(grid.shape)
        for x in mesh:
            y = (x - box / 2.0) / (s * radius)
            values = values * np.where(np.abs(y) < 1.0, np.cos(np.pi * y / 2.0) ** 4, 0.0)
        ratios.append(check_l4(ScalarField(grid, values)).ratios['l4'])
    spread = max(ratios) / min(ratios) - 1.0
    return {'scales': [float(s) for s in scales], 'ratios': ratios, 'spread': spread}

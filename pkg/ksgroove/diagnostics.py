"""
Energy functionals along a run and the discrete counterparts of the decay theorem's
inequalities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from ksgroove.errors import FitDomainError, InsufficientDataError, InvalidArgumentError
from ksgroove.fields import (
    VectorField3,
    curl_residual,
    energy,
    laplacian,
    norm_grad,
    norm_l2,
    outer_mass_fraction,
)
from ksgroove.geometry import SUPPORT_MARGIN, GrooveConstants, estimate1_margin, smallness_margin
from ksgroove.integrator import SimState, pde_rhs
from ksgroove.logger import get_logger

logger = get_logger()

DEFAULT_REL_TOL = 1e-2

# Runs whose x3 boundary strip holds more than this share of the energy are flagged
OUTER_MASS_LIMIT = 1e-6

MIN_FIT_SAMPLES = 8

UT_METHODS = ('backward', 'rhs')


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    energy: float
    dissipation: float
    grad: float
    margin24: float
    margin48: float
    curl_res: float
    outer_mass: float
    energy_t: float = 0.0
    dissipation_t: float = 0.0

    @classmethod
    def csv_header(cls) -> Tuple[str, ...]:
        return (
            't', 'energy', 'dissipation', 'grad', 'margin24', 'margin48',
            'curl_res', 'outer_mass', 'E_t',
        )

    def csv_row(self) -> Tuple[float, ...]:
        return (
            self.t, self.energy, self.dissipation, self.grad, self.margin24,
            self.margin48, self.curl_res, self.outer_mass, self.energy_t,
        )


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_violation: float
    location: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'pass': bool(self.passed),
            'worst_violation': json_float(self.worst_violation),
            'location': json_float(self.location),
            'details': self.details,
        }


@dataclass(frozen=True)
class DecayFit:
    rate_lambda: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]

    def to_dict(self) -> Dict[str, Any]:
        return {k: json_float(v) if isinstance(v, float) else list(v) for k, v in asdict(self).items()}


def json_float(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def _dissipation(u: VectorField3) -> float:
    return sum(norm_l2(laplacian(c)) ** 2 for c in u)


def sample(
    state: SimState,
    c: Optional[GrooveConstants],
    previous: Optional[SimState] = None,
    ut_method: str = 'backward',
    nonlinear: bool = True,
) -> EnergyRecord:
    """
    One diagnostic record. u_t is the backward difference against @previous, or the PDE
    right-hand side when there is no previous state or @ut_method is 'rhs'. Margins are
    NaN when @c is None (inadmissible groove or periodic test box).
    """
    if ut_method not in UT_METHODS:
        raise InvalidArgumentError(f'Unknown u_t method {ut_method!r}')
    u = state.u
    e = energy(u)
    if c is not None:
        margin24 = estimate1_margin(c, e)
        margin48 = smallness_margin(c, e)
    else:
        margin24 = margin48 = float('nan')

    if previous is not None and ut_method == 'backward':
        dt = state.time - previous.time
        ut = (u - previous.u) * (1.0 / dt)
    else:
        ut = pde_rhs(u, nonlinear)

    return EnergyRecord(
        t=state.time,
        energy=e,
        dissipation=_dissipation(u),
        grad=sum(norm_grad(comp) ** 2 for comp in u),
        margin24=margin24,
        margin48=margin48,
        curl_res=curl_residual(u),
        outer_mass=outer_mass_fraction(u, SUPPORT_MARGIN),
        energy_t=energy(ut),
        dissipation_t=_dissipation(ut),
    )


class EnergySampler:
    """
    The callback handed to integrator.run.
    """

    def __init__(self, c: Optional[GrooveConstants], ut_method: str = 'backward', nonlinear: bool = True):
        self.c = c
        self.ut_method = ut_method
        self.nonlinear = nonlinear
        self.flagged_truncation = False

    def __call__(self, state: SimState, previous: Optional[SimState]) -> EnergyRecord:
        record = sample(state, self.c, previous, self.ut_method, self.nonlinear)
        if record.outer_mass > OUTER_MASS_LIMIT and not self.flagged_truncation:
            logger.warning(
                f'Truncation diagnostic: {record.outer_mass:.2e} of the energy sits in the outer '
                f'{SUPPORT_MARGIN:.0%} of x3 at t={record.t:.4g}'
            )
            self.flagged_truncation = True
        return record


def _columns(series: Sequence[EnergyRecord], *names: str) -> List[np.ndarray]:
    if not series:
        raise InsufficientDataError('Empty energy series')
    return [np.array([getattr(r, name) for r in series], dtype=float) for name in names]


def _report(name: str, violations: np.ndarray, t: np.ndarray, rel_tol: float, **details) -> CheckReport:
    worst_index = int(np.argmax(violations))
    worst = float(violations[worst_index])
    failing = np.nonzero(violations > rel_tol)[0]
    location = float(t[failing[0]]) if failing.size else float(t[worst_index])
    details['first_violation_index'] = int(failing[0]) if failing.size else None
    details['rel_tol'] = rel_tol
    return CheckReport(name, not failing.size, worst, location, details)


def truncation_report(series: Sequence[EnergyRecord]) -> CheckReport:
    """
    Flags runs whose x3 boundary strip carries more than OUTER_MASS_LIMIT of the energy.
    """
    t, outer = _columns(series, 't', 'outer_mass')
    return _report('truncation', outer, t, OUTER_MASS_LIMIT)


def check_energy_inequality(
    series: Sequence[EnergyRecord], c: GrooveConstants, rel_tol: float = DEFAULT_REL_TOL
) -> CheckReport:
    """
    E(t) + theta/2 int_0^t D <= E(0), with violations measured relative to E(0).
    """
    t, e, d = _columns(series, 't', 'energy', 'dissipation')
    accumulated = cumulative_trapezoid(d, t, initial=0.0) if len(t) > 1 else np.zeros(1)
    lhs = e + 0.5 * c.theta * accumulated
    scale = e[0] if e[0] > 0 else 1.0
    violations = (lhs - e[0]) / scale
    return _report('energy_inequality', violations, t, rel_tol, initial_energy=float(e[0]))


def check_decay_bound(
    series: Sequence[EnergyRecord], c: GrooveConstants, rel_tol: float = DEFAULT_REL_TOL
) -> CheckReport:
    """
    E(t) <= (1 + rel_tol) E(0) exp(-a^2 theta t / 2) at every sample.
    """
    t, e = _columns(series, 't', 'energy')
    envelope = e[0] * np.exp(-c.decay_rate * t)
    violations = envelope_violations(e, envelope)
    return _report('decay_bound', violations, t, rel_tol, decay_rate=c.decay_rate)


def envelope_violations(values: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    """
    values / envelope - 1, with a zero envelope tolerating only exact zeros.
    """
    out = np.zeros_like(values)
    positive = envelope > 0
    out[positive] = values[positive] / envelope[positive] - 1.0
    out[~positive] = np.where(values[~positive] > 0, np.inf, 0.0)
    return out


def fit_decay(series: Sequence[EnergyRecord], window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """
    Least-squares line through (t, ln E) on @window; the rate is minus the slope. The
    default window drops the first 10% of the run.
    """
    t, e = _columns(series, 't', 'energy')
    if window is None:
        window = (0.1 * t[-1], t[-1])
    lo, hi = window
    if lo > hi:
        raise InvalidArgumentError(f'Fit window ({lo}, {hi}) is empty')
    inside = (t >= lo) & (t <= hi)
    if inside.sum() < MIN_FIT_SAMPLES:
        raise FitDomainError(f'Need at least {MIN_FIT_SAMPLES} samples in ({lo}, {hi}), got {int(inside.sum())}')
    if np.any(e[inside] <= 0):
        raise FitDomainError('Energy must be positive throughout the fit window')
    fit = linregress(t[inside], np.log(e[inside]))
    r_squared = min(max(float(fit.rvalue) ** 2, 0.0), 1.0)
    return DecayFit(
        rate_lambda=-float(fit.slope),
        intercept=float(np.exp(fit.intercept)),
        r_squared=r_squared,
        window=(float(t[inside][0]), float(t[inside][-1])),
    )


def check_ut_decay(
    series: Sequence[EnergyRecord], c: GrooveConstants, rel_tol: float = DEFAULT_REL_TOL
) -> CheckReport:
    """
    The time-derivative energy E_t obeys both the exponential envelope and the
    accumulated form E_t(t) + theta/2 int_0^t sum ||Delta u_jt||^2 <= E_t(0).
    """
    if len(series) < 2:
        raise InsufficientDataError('The u_t checks need at least two states')
    t, et, dt_ = _columns(series, 't', 'energy_t', 'dissipation_t')
    envelope = envelope_violations(et, et[0] * np.exp(-c.decay_rate * t))
    accumulated = et + 0.5 * c.theta * cumulative_trapezoid(dt_, t, initial=0.0)
    scale = et[0] if et[0] > 0 else 1.0
    accumulated_violations = (accumulated - et[0]) / scale
    violations = np.maximum(envelope, accumulated_violations)
    return _report(
        'ut_decay',
        violations,
        t,
        rel_tol,
        envelope_worst=json_float(envelope.max()),
        accumulated_worst=json_float(accumulated_violations.max()),
        initial_energy_t=float(et[0]),
    )


def check_decay_fit(
    series: Sequence[EnergyRecord],
    c: GrooveConstants,
    window: Optional[Tuple[float, float]] = None,
) -> Tuple[CheckReport, Optional[DecayFit]]:
    """
    The fitted rate must reach the guaranteed decay rate, with no tolerance. An
    identically zero series passes.
    """
    e, = _columns(series, 'energy')
    if not np.any(e):
        return CheckReport('decay_fit', True, 0.0, None, {'zero_run': True}), None
    try:
        fit = fit_decay(series, window)
    except FitDomainError as e:
        return CheckReport('decay_fit', False, float('inf'), None, {'error': str(e)}), None
    report = CheckReport(
        'decay_fit',
        bool(fit.rate_lambda >= c.decay_rate),
        (c.decay_rate - fit.rate_lambda) / c.decay_rate,
        fit.window[0],
        {
            'fit': fit.to_dict(),
            'bound_rate': c.decay_rate,
            'shortfall': max(0.0, c.decay_rate - fit.rate_lambda),
        },
    )
    return report, fit

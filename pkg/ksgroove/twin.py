"""
Twin-run contraction: evolve two runs that differ only in their initial perturbation
and watch the difference energy W(t) = sum_j ||u_j - v_j||^2 against the Gronwall
envelope W(0) exp(C int_0^t (||Delta u||^2 + ||Delta v||^2)).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ksgroove.diagnostics import DEFAULT_REL_TOL, CheckReport, envelope_violations, json_float
from ksgroove.errors import BlowupError, ConfigMismatchError, SolverFailureError
from ksgroove.fields import energy, laplacian, norm_l2
from ksgroove.geometry import GrooveConstants, constants
from ksgroove.integrator import SimState, step
from ksgroove.logger import get_logger
from ksgroove.runconfig import OutputConfig, RunConfig, build_state0
from ksgroove.solver import preconditioner_for

logger = get_logger()

# Multiples of the structural Gronwall constant reported alongside the verdict
SENSITIVITY_FACTORS = (0.5, 1.0, 2.0)


@dataclass
class TwinResult:
    report: CheckReport
    t: np.ndarray
    w: np.ndarray
    error: Optional[Exception] = None


def gronwall_constant(c: GrooveConstants) -> float:
    """
    1 / (theta a^{3/2}), the structural constant of the difference estimate.
    """
    return 1.0 / (c.theta * c.a ** 1.5)


def _stripped(cfg: RunConfig) -> RunConfig:
    return replace(
        cfg,
        initial=replace(cfg.initial, perturbation=0.0, perturbation_seed=0),
        output=OutputConfig(),
    )


def check_twin_configs(cfg_a: RunConfig, cfg_b: RunConfig):
    """
    Raise ConfigMismatchError unless the configs differ only in the initial perturbation.
    """
    a, b = _stripped(cfg_a).to_dict(), _stripped(cfg_b).to_dict()
    problems = []  # type: List[str]
    for section in a:
        for key in a[section]:
            if a[section][key] != b[section][key]:
                problems.append(f'{section}.{key} differs: {a[section][key]!r} vs {b[section][key]!r}')
    if problems:
        raise ConfigMismatchError(problems)


def _dissipation(state: SimState) -> float:
    return sum(norm_l2(laplacian(c)) ** 2 for c in state.u)


def twin_run_contraction(
    cfg_a: RunConfig, cfg_b: RunConfig, rel_tol: float = DEFAULT_REL_TOL
) -> TwinResult:
    """
    Step both runs in lockstep, two threads per step. Passes iff W(t) never exceeds
    (1 + @rel_tol) times the envelope; when the runs start identical, W must stay exactly
    zero and the states bitwise equal.
    """
    check_twin_configs(cfg_a, cfg_b)
    c = constants(cfg_a.groove)
    cfg = cfg_a.integrator
    a, b = build_state0(cfg_a), build_state0(cfg_b)
    preconditioner_for(a.grid, cfg.dt, cfg.preconditioner)

    t = [a.time]
    w = [energy(a.u - b.u)]
    dissipation = [_dissipation(a) + _dissipation(b)]
    bitwise = bool(np.array_equal(a.u.stack(), b.u.stack()))
    error = None

    with ThreadPoolExecutor(max_workers=2) as pool:
        for _ in range(cfg.n_steps):
            futures = [pool.submit(step, s, cfg) for s in (a, b)]
            try:
                a, b = (f.result() for f in futures)
            except (BlowupError, SolverFailureError) as e:
                logger.warning(f'Twin run stopped at t={a.time:.6g}: {e}')
                error = e
                break
            t.append(a.time)
            w.append(energy(a.u - b.u))
            dissipation.append(_dissipation(a) + _dissipation(b))
            bitwise = bitwise and bool(np.array_equal(a.u.stack(), b.u.stack()))

    t, w = np.array(t), np.array(w)
    accumulated = cumulative_trapezoid(np.array(dissipation), t, initial=0.0) if len(t) > 1 else np.zeros(1)
    base = gronwall_constant(c)
    sensitivity = {}  # type: Dict[str, float]
    violations = None
    for factor in SENSITIVITY_FACTORS:
        v = envelope_violations(w, w[0] * np.exp(factor * base * accumulated))
        sensitivity[f'{factor:g}'] = json_float(v.max())
        if factor == 1.0:
            violations = v

    worst_index = int(np.argmax(violations))
    passed = error is None and bool(violations.max() <= rel_tol)
    if w[0] == 0.0:
        passed = passed and bitwise
    report = CheckReport(
        'twin_contraction',
        passed,
        float(violations[worst_index]),
        float(t[worst_index]),
        {
            'gronwall_constant': base,
            'sensitivity': sensitivity,
            'bitwise_identical': bitwise,
            'w_initial': float(w[0]),
            'w_final': float(w[-1]),
            'rel_tol': rel_tol,
            'error': str(error) if error else None,
        },
    )
    logger.info(
        f'Twin runs: W(0)={w[0]:.3e}, W({t[-1]:.4g})={w[-1]:.3e}, '
        f'{"pass" if passed else "FAIL"}'
    )
    return TwinResult(report, t, w, error)

import math
from dataclasses import replace

import numpy as np
import pytest

from ksgroove.diagnostics import (
    CheckReport,
    EnergyRecord,
    EnergySampler,
    check_decay_bound,
    check_decay_fit,
    check_energy_inequality,
    check_ut_decay,
    envelope_violations,
    fit_decay,
    sample,
    truncation_report,
)
from ksgroove.errors import FitDomainError, InsufficientDataError, InvalidArgumentError
from ksgroove.fields import ScalarField, VectorField3
from ksgroove.geometry import GrooveSpec, constants
from ksgroove.initial import init_from_potential, potential_datum
from ksgroove.integrator import IntegratorConfig, SimState, run, step


def records(t, energies, dissipation=None, energy_t=None):
    dissipation = np.zeros_like(t) if dissipation is None else dissipation
    energy_t = energies if energy_t is None else energy_t
    return [
        EnergyRecord(
            t=float(ti), energy=float(ei), dissipation=float(di), grad=0.0, margin24=0.0,
            margin48=0.0, curl_res=0.0, outer_mass=0.0, energy_t=float(eti),
        )
        for ti, ei, di, eti in zip(t, energies, dissipation, energy_t)
    ]


@pytest.fixture
def c():
    return constants(GrooveSpec(2.0))


@pytest.fixture
def t():
    return np.linspace(0.0, 1.0, 21)


def test_csv_header():
    assert ','.join(EnergyRecord.csv_header()) == (
        't,energy,dissipation,grad,margin24,margin48,curl_res,outer_mass,E_t'
    )
    assert len(EnergyRecord.csv_header()) == len(records([0.0], [1.0])[0].csv_row())


def test_fit_recovers_an_exact_exponential(t):
    fit = fit_decay(records(t, 2.0 * np.exp(-3.0 * t)))
    assert fit.rate_lambda == pytest.approx(3.0, rel=1e-9)
    assert fit.intercept == pytest.approx(2.0, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.window == pytest.approx((0.1, 1.0))


def test_two_mode_decay_is_not_a_line(t):
    fit = fit_decay(records(t, np.exp(-t) + np.exp(-10.0 * t)), window=(0.0, 1.0))
    assert fit.r_squared < 0.999


def test_fit_needs_enough_positive_samples(t):
    with pytest.raises(FitDomainError):
        fit_decay(records(t[:5], np.exp(-t[:5])))
    energies = np.exp(-t)
    energies[10] = 0.0
    with pytest.raises(FitDomainError):
        fit_decay(records(t, energies))


def test_fit_window_must_not_be_reversed(t):
    with pytest.raises(InvalidArgumentError):
        fit_decay(records(t, np.exp(-t)), window=(0.8, 0.2))


def test_decay_bound_passes_below_the_envelope(t, c):
    report = check_decay_bound(records(t, np.exp(-2.0 * t)), c)
    assert report.passed
    assert report.worst_violation == pytest.approx(0.0)


def test_decay_bound_locates_the_first_violation(t, c):
    report = check_decay_bound(records(t, np.exp(-1.0 * t)), c)
    assert not report.passed
    assert report.location == pytest.approx(0.05)
    assert report.details['first_violation_index'] == 1
    assert report.worst_violation == pytest.approx(math.exp(c.decay_rate - 1.0) - 1.0)


def test_energy_inequality_accounts_for_dissipation(t, c):
    flat = np.ones_like(t)
    assert check_energy_inequality(records(t, np.exp(-t)), c).passed
    report = check_energy_inequality(records(t, flat, dissipation=flat), c)
    assert not report.passed
    assert report.worst_violation == pytest.approx(0.5 * c.theta)


def test_decay_fit_compares_against_the_guaranteed_rate(t, c):
    report, fit = check_decay_fit(records(t, np.exp(-3.0 * t)), c)
    assert report.passed
    assert fit.rate_lambda == pytest.approx(3.0)
    report, _ = check_decay_fit(records(t, np.exp(-1.0 * t)), c)
    assert not report.passed
    assert report.worst_violation == pytest.approx((c.decay_rate - 1.0) / c.decay_rate)


def test_decay_fit_has_no_tolerance_below_the_bound(t, c):
    slow = c.decay_rate * (1.0 - 5e-3)
    report, fit = check_decay_fit(records(t, np.exp(-slow * t)), c)
    assert not report.passed
    assert fit.rate_lambda == pytest.approx(slow, rel=1e-9)
    assert report.details['bound_rate'] == c.decay_rate
    assert report.details['shortfall'] == pytest.approx(5e-3 * c.decay_rate, rel=1e-6)
    assert report.worst_violation == pytest.approx(5e-3, rel=1e-6)

    fast = c.decay_rate * (1.0 + 1e-6)
    report, _ = check_decay_fit(records(t, np.exp(-fast * t)), c)
    assert report.passed
    assert report.details['shortfall'] == 0.0



def test_decay_fit_of_a_zero_run_passes(t, c):
    report, fit = check_decay_fit(records(t, np.zeros_like(t)), c)
    assert report.passed
    assert fit is None


def test_decay_fit_reports_fit_domain_problems(t, c):
    report, fit = check_decay_fit(records(t[:4], np.exp(-t[:4])), c)
    assert not report.passed
    assert fit is None
    assert report.to_dict()['worst_violation'] is None


def test_ut_decay(t, c):
    fast = np.exp(-3.0 * t)
    assert check_ut_decay(records(t, fast, energy_t=fast), c).passed
    slow = np.exp(-0.5 * t)
    assert not check_ut_decay(records(t, fast, energy_t=slow), c).passed


def test_checks_need_data(c):
    with pytest.raises(InsufficientDataError):
        check_energy_inequality([], c)
    with pytest.raises(InsufficientDataError):
        check_ut_decay(records([0.0], [1.0]), c)


def test_envelope_violations_with_a_zero_envelope():
    out = envelope_violations(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.0, 1.0]))
    assert out.tolist() == [0.0, math.inf, 1.0]


def test_report_serialization():
    report = CheckReport('decay_bound', True, float('nan'), 0.5, {'rel_tol': 0.01})
    assert report.to_dict() == {
        'name': 'decay_bound',
        'pass': True,
        'worst_violation': None,
        'location': 0.5,
        'details': {'rel_tol': 0.01},
    }


def test_truncation_report_flags_boundary_mass(t):
    series = records(t, np.ones_like(t))
    assert truncation_report(series).passed
    series[5] = replace(series[5], outer_mass=1e-3)
    report = truncation_report(series)
    assert not report.passed
    assert report.location == pytest.approx(0.25)


def test_sample_of_a_real_state(grid, c):
    state0 = SimState(init_from_potential(potential_datum(grid)))
    state1 = step(state0, IntegratorConfig(dt=1e-3))
    first = sample(state0, c)
    second = sample(state1, c, state0)
    assert first.t == 0.0
    assert second.t == pytest.approx(1e-3)
    assert 0 < second.energy < first.energy
    assert first.margin48 < first.margin24 < c.theta
    assert first.energy_t > 0
    assert first.curl_res < 1e-10


def test_sample_without_constants_has_nan_margins(grid):
    record = sample(SimState(init_from_potential(potential_datum(grid))), None)
    assert math.isnan(record.margin24)
    assert math.isnan(record.margin48)


def test_sample_rejects_unknown_ut_method(grid, c):
    state = SimState(init_from_potential(potential_datum(grid)))
    with pytest.raises(InvalidArgumentError):
        sample(state, c, ut_method='central')


def test_sampler_flags_truncation(grid, c):
    values = np.zeros((3,) + grid.shape)
    values[0, :, :, -1] = 1.0
    sampler = EnergySampler(c)
    record = sampler(SimState(VectorField3.from_stack(grid, values)), None)
    assert record.outer_mass == pytest.approx(1.0)
    assert sampler.flagged_truncation


def test_zero_state_record(grid, c):
    record = sample(SimState(VectorField3.zeros(grid)), c)
    assert record.energy == record.dissipation == record.grad == 0.0
    assert record.energy_t == 0.0
    assert record.margin24 == record.margin48 == c.theta


def test_single_mode_time_derivative_energy_tracks_the_energy(box, c):
    x1 = box.mesh()[0]
    u0 = VectorField3(ScalarField(box, np.cos(2.0 * x1)), ScalarField.zeros(box), ScalarField.zeros(box))
    cfg = IntegratorConfig(dt=1e-2, t_end=0.1, nonlinear=False)
    series = run(SimState(u0), cfg, EnergySampler(c, 'rhs', nonlinear=False)).series
    assert len(series) == 11
    e0, et0 = series[0].energy, series[0].energy_t
    for record in series:
        assert record.energy_t / et0 == pytest.approx(record.energy / e0, rel=1e-8)
    assert series[-1].energy < e0
    assert check_ut_decay(series, c).passed

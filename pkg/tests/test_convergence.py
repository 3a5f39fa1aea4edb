import math

import pytest

from ksgroove.convergence import (
    OrderReport,
    discrete_symbol,
    linear_symbol_check,
    spatial_order_study,
    temporal_order_study,
)


def test_order_report():
    report = OrderReport('synthetic', [0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4], expected=2.0)
    assert report.orders == pytest.approx([2.0, 2.0])
    assert report.passed
    assert not OrderReport('synthetic', [0.1, 0.05], [1e-2, 5e-3], expected=2.0).passed
    assert not OrderReport('synthetic', [0.1], [1e-2], expected=2.0).passed


def test_discrete_symbol():
    assert discrete_symbol(1, 1e-4) == pytest.approx(1.0, rel=1e-6)
    assert discrete_symbol(2, math.pi / 2) == pytest.approx(16.0 / math.pi ** 2)


def test_stencils_are_second_order():
    reports = spatial_order_study(levels=(16, 32))
    assert {r.name for r in reports} == {'gradient', 'laplacian', 'bilaplacian', 'bilaplacian_direct'}
    for report in reports:
        assert report.passed, report.to_dict()
        assert report.errors[1] < report.errors[0]


def test_stepper_is_first_order():
    report = temporal_order_study(dts=(4e-2, 2e-2, 1e-2, 5e-3))
    assert len(report.orders) == 2
    assert report.passed, report.to_dict()


def test_linear_single_mode_decays_by_the_exact_factor():
    result = linear_symbol_check()
    assert result['pass'], result
    assert 0 < result['factor'] < 1

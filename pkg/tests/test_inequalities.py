import math

import numpy as np
import pytest

from ksgroove.errors import InvalidArgumentError, UndefinedRatioError
from ksgroove.fields import ScalarField
from ksgroove.geometry import GrooveSpec
from ksgroove.inequalities import (
    LAB_SPEC,
    LEMMA_NUMBERS,
    TEST_FAMILIES,
    TestFunctionSpec,
    check_groove_poincare,
    check_l4,
    check_steklov,
    dilation_scan,
    lemma_name,
    run_lemma_batch,
    sample_profile,
    sample_test_function,
    sharpness_sequence,
)


def interior(n, length=1.0):
    return np.arange(1, n) * (length / n)


def test_steklov_is_nearly_sharp_for_the_first_sine():
    x = interior(64)
    report = check_steklov(np.sin(np.pi * x), 1.0)
    assert report.passed
    assert 1.0 - 1e-3 <= report.ratios['steklov'] <= 1.0


def test_steklov_ratio_of_the_second_sine():
    x = interior(64, 3.0)
    ratio = check_steklov(np.sin(2.0 * np.pi * x / 3.0), 3.0).ratios['steklov']
    assert ratio == pytest.approx(4.0, abs=1e-2)


def test_steklov_of_zero_is_undefined():
    with pytest.raises(UndefinedRatioError):
        check_steklov(np.zeros(63), 1.0)


@pytest.mark.parametrize('family', ['sine-bump', 'polynomial', 'wall-concentrated'])
def test_profiles_satisfy_steklov(family):
    for seed in range(5):
        assert check_steklov(sample_profile(family, seed), 1.0).passed


def test_unknown_profile_family():
    with pytest.raises(InvalidArgumentError):
        sample_profile('sawtooth', 0)


def test_test_functions_are_seeded():
    a = sample_test_function(TestFunctionSpec('random-Fourier-bump', 3))
    b = sample_test_function(TestFunctionSpec('random-Fourier-bump', 3))
    c = sample_test_function(TestFunctionSpec('random-Fourier-bump', 4))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_zero_amplitude_gives_the_zero_function():
    f = sample_test_function(TestFunctionSpec('separable-sine-bump', 1, amplitude=0.0))
    assert not f.values.any()
    with pytest.raises(UndefinedRatioError):
        check_groove_poincare(f, LAB_SPEC)
    with pytest.raises(UndefinedRatioError):
        check_l4(f)


def test_unknown_test_function_family():
    with pytest.raises(InvalidArgumentError):
        TestFunctionSpec('gaussian', 0)


@pytest.mark.parametrize('family', TEST_FAMILIES)
def test_test_functions_flatten_at_the_walls(family):
    spec = TestFunctionSpec(family, 2)
    fine = TestFunctionSpec(family, 2, grid=spec.grid.refined(2))
    coarse_wall = np.max(np.abs(sample_test_function(spec).values[:, 0, :]))
    fine_wall = np.max(np.abs(sample_test_function(fine).values[:, 0, :]))
    assert coarse_wall > 0
    assert fine_wall <= coarse_wall / 3.0


def test_poincare_ratios_do_not_depend_on_amplitude():
    one = check_groove_poincare(sample_test_function(TestFunctionSpec('wall-concentrated', 5)), LAB_SPEC)
    big = check_groove_poincare(
        sample_test_function(TestFunctionSpec('wall-concentrated', 5, amplitude=7.0)), LAB_SPEC
    )
    for name, ratio in one.ratios.items():
        assert big.ratios[name] == pytest.approx(ratio, rel=1e-12)


def test_cauchy_schwarz_step_holds_for_rough_functions(grid, rng):
    f = ScalarField(grid, rng.normal(size=grid.shape))
    assert check_groove_poincare(f, GrooveSpec(2.0)).ratios['cauchy_schwarz'] >= 1.0


def test_l4_reports_the_empirical_constant():
    f = sample_test_function(TestFunctionSpec('separable-sine-bump', 0))
    report = check_l4(f)
    assert report.passed
    assert report.ratios['l4'] * report.details['constant'] == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize('lemma, name', [('2.1', 'steklov'), ('2.3', 'l4'), ('3.1', 'groove-poincare')])
def test_lemma_batches_pass(lemma, name):
    report = run_lemma_batch(lemma, range(6))
    assert report.lemma == name
    assert report.passed
    assert len(report.reports) == 6
    assert [r.seed for r in report.reports] == list(range(6))
    summary = report.to_dict()
    assert summary['pass']
    assert summary['undefined'] == 0
    assert summary['number'] == lemma
    if name == 'l4':
        assert summary['empirical_constant'] <= math.sqrt(2.0)


def test_unknown_lemma():
    with pytest.raises(InvalidArgumentError):
        run_lemma_batch('hardy', range(3))


def test_lemma_names_accept_numbers_and_descriptions():
    assert [lemma_name(n) for n in ('2.1', '2.3', '3.1')] == ['steklov', 'l4', 'groove-poincare']
    assert lemma_name('l4') == 'l4'
    assert LEMMA_NUMBERS.inverse['groove-poincare'] == '3.1'
    with pytest.raises(InvalidArgumentError, match=r'2\.1 \(steklov\)'):
        lemma_name('9.9')


def test_elongated_eigenfunctions_approach_the_constant():
    results = sharpness_sequence(stretches=(4.0, 8.0))
    first = [r['ratios']['grad_over_l2'] for r in results]
    assert first[0] > first[1]
    assert 1.0 <= first[1] <= 1.05
    assert all(r['pass'] for r in results)


def test_l4_ratio_is_dilation_invariant():
    result = dilation_scan()
    assert len(result['ratios']) == 3
    assert result['spread'] <= 5e-2

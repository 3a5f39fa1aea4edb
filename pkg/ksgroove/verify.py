"""
The verify and lab commands: batched inequality checks, sharpness and dilation studies,
and the convergence studies, each written out as a JSON report.
"""

from __future__ import annotations

import time
from typing import Any, Dict

from ksgroove import config
from ksgroove.convergence import linear_symbol_check, spatial_order_study, temporal_order_study
from ksgroove.errors import InvalidArgumentError, UsageError
from ksgroove.inequalities import LEMMAS, dilation_scan, lemma_name, run_lemma_batch, sharpness_sequence
from ksgroove.logger import get_logger, log_to_output_dir
from ksgroove.runconfig import resolve
from ksgroove.utils import write_json_file

logger = get_logger()

TIERS = {
    'quick': {'seeds': 100, 'levels': (16, 32), 'dts': (4e-2, 2e-2, 1e-2, 5e-3)},
    'full': {'seeds': 1000, 'levels': (16, 32, 64), 'dts': (4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3)},
}

# The elongated sharpness sequence must land in [1, SHARPNESS_CEILING]
SHARPNESS_CEILING = 1.05

DILATION_TOL = 5e-2


def sharpness_suite() -> Dict[str, Any]:
    results = sharpness_sequence()
    first = [r['ratios']['grad_over_l2'] for r in results]
    decreasing = all(a >= b for a, b in zip(first, first[1:]))
    return {
        'name': 'sharpness',
        'pass': decreasing and 1.0 <= first[-1] <= SHARPNESS_CEILING,
        'sequence': results,
    }


def dilation_suite() -> Dict[str, Any]:
    result = dilation_scan()
    result['name'] = 'dilation'
    result['pass'] = result['spread'] <= DILATION_TOL
    return result


def check_lab_args(lemma: str, seeds: int) -> str:
    """
    The descriptive name of @lemma (numbered or descriptive), or UsageError.
    """
    try:
        name = lemma_name(lemma)
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None
    if seeds < 1:
        raise UsageError(f'--seeds must be positive, got {seeds}')
    return name


def check_tier(tier: str):
    if tier not in TIERS:
        raise UsageError(f'Unknown tier {tier!r}, expected one of {", ".join(TIERS)}')


def lab_report(lemma: str, seeds: int) -> Dict[str, Any]:
    """
    One lemma's batch over seeds 0..@seeds-1, with the extra study that belongs to it.
    """
    lemma = check_lab_args(lemma, seeds)
    report = run_lemma_batch(lemma, range(seeds)).to_dict()
    if lemma == 'groove-poincare':
        report['sharpness'] = sharpness_suite()
        report['pass'] = report['pass'] and report['sharpness']['pass']
    elif lemma == 'l4':
        report['dilation'] = dilation_suite()
        report['pass'] = report['pass'] and report['dilation']['pass']
    return report


def cmd_lab(lemma: str, seeds: int, output_dir: str = config.OUTPUT_DIR) -> Dict[str, Any]:
    lemma = check_lab_args(lemma, seeds)
    log_to_output_dir(output_dir)
    report = lab_report(lemma, seeds)
    path = write_json_file(resolve(f'lab_{lemma}.json', output_dir), report)
    logger.info(f'Lab {report["number"]} ({lemma}): {"pass" if report["pass"] else "FAIL"} ({path})')
    return report


def cmd_verify(tier: str, output_dir: str = config.OUTPUT_DIR) -> Dict[str, Any]:
    """
    Every lemma batch plus the spatial, temporal and linear-symbol studies at the
    resolution of @tier. The tier's wall-clock budget is advisory.
    """
    check_tier(tier)
    log_to_output_dir(output_dir)
    settings = TIERS[tier]
    budget = config.VERIFY_BUDGETS[tier]
    started = time.monotonic()

    suites = [lab_report(lemma, settings['seeds']) for lemma in LEMMAS]
    suites.extend(r.to_dict() for r in spatial_order_study(levels=settings['levels']))
    suites.append(temporal_order_study(dts=settings['dts']).to_dict())
    suites.append(linear_symbol_check())

    elapsed = time.monotonic() - started
    report = {
        'tier': tier,
        'pass': all(s['pass'] for s in suites),
        'elapsed_seconds': elapsed,
        'budget_seconds': budget,
        'suites': suites,
    }
    if elapsed > budget:
        logger.warning(f'verify --tier {tier} took {elapsed:.1f}s, over its {budget:.0f}s budget')
    failed = [s.get('name') or s.get('lemma') for s in suites if not s['pass']]
    logger.info(
        f'verify --tier {tier}: {len(suites) - len(failed)}/{len(suites)} suites pass'
        + (f' (failed: {", ".join(failed)})' if failed else '')
    )
    write_json_file(resolve(f'verify_{tier}.json', output_dir), report)
    return report

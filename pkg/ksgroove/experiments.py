"""
The run and sweep commands: a single simulation with its diagnostics, and the (B, eps)
stability map.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

from ksgroove import config
from ksgroove.checkpoint import checkpoint_write
from ksgroove.diagnostics import (
    CheckReport,
    EnergyRecord,
    EnergySampler,
    check_decay_bound,
    check_decay_fit,
    check_energy_inequality,
    check_ut_decay,
    fit_decay,
    truncation_report,
)
from ksgroove.errors import BlowupError, FitDomainError, InsufficientDataError
from ksgroove.fields import energy
from ksgroove.geometry import GrooveConstants, constants, raw_constants, smallness_margin
from ksgroove.integrator import RunResult, run
from ksgroove.logger import get_logger, log_to_output_dir
from ksgroove.runconfig import RunConfig, SweepConfig, build_state0, load_run_config, load_sweep_config, resolve
from ksgroove.utils import write_config_hash, write_csv_file, write_json_file

logger = get_logger()

SWEEP_HEADER = ('B', 'epsilon', 'margin48_at_0', 'outcome', 'fitted_rate', 'bound_rate')

OUTCOMES = ('decayed', 'not-decayed-by-t_end', 'blowup', 'inadmissible', 'error')


def simulate(cfg: RunConfig, output_dir: Optional[str] = None) -> RunResult:
    """
    Build the initial state and integrate it, sampling energies along the way. Admissible
    grooves get stability margins in every record. Checkpoints go to @output_dir when
    output.checkpoint_stride is set.
    """
    c = constants(cfg.groove) if cfg.groove.admissible() else None
    sampler = EnergySampler(c, cfg.checks.ut_method, cfg.integrator.nonlinear)
    checkpointer = None
    if output_dir is not None and cfg.output.checkpoint_stride:
        path = resolve(cfg.output.checkpoint_path, output_dir)
        config_hash = cfg.config_hash()

        def checkpointer(state):
            checkpoint_write(state, path, cfg.groove.orientation)
            write_config_hash(path, config_hash)
    return run(
        build_state0(cfg),
        cfg.integrator,
        sampler=sampler,
        sample_stride=cfg.output.sample_stride,
        checkpointer=checkpointer,
        checkpoint_stride=cfg.output.checkpoint_stride,
    )


def run_checks(cfg: RunConfig, series: List[EnergyRecord], c: GrooveConstants) -> Tuple[List[CheckReport], Any]:
    """
    The enabled checks in configuration order, and the decay fit if one was made.
    """
    rel_tol = cfg.checks.rel_tol
    t_end = series[-1].t if series else 0.0
    window = (cfg.checks.fit_transient * t_end, t_end)
    reports, fit = [], None
    for name in cfg.checks.enabled:
        try:
            if name == 'energy_inequality':
                reports.append(check_energy_inequality(series, c, rel_tol))
            elif name == 'decay_bound':
                reports.append(check_decay_bound(series, c, rel_tol))
            elif name == 'ut_decay':
                reports.append(check_ut_decay(series, c, rel_tol))
            elif name == 'decay_fit':
                report, fit = check_decay_fit(series, c, window)
                reports.append(report)
        except InsufficientDataError as e:
            reports.append(CheckReport(name, False, float('inf'), None, {'error': str(e)}))
    return reports, fit


def execute_run(cfg: RunConfig, output_dir: str) -> Dict[str, Any]:
    """
    Simulate, check, and write the series CSV and summary JSON. A physics blowup is an
    outcome recorded in the summary, not an error.
    """
    config_hash = cfg.config_hash()
    logger.info(f'Starting run {config_hash[:12]} (B={cfg.groove.width_B}, eps={cfg.initial.amplitude})')
    started = time.monotonic()
    result = simulate(cfg, output_dir)
    series = result.series

    summary = {
        'config_hash': config_hash,
        'groove': {
            'width_B': cfg.groove.width_B,
            'orientation': cfg.groove.orientation,
            'physical_extents': cfg.groove.physical_extents(),
        },
        'outcome': result.outcome,
        'final_time': result.state.time,
        'steps': result.state.step_index,
        'admissible': cfg.groove.admissible(),
        'error': str(result.error) if result.error else None,
        'checks': [],
        'decay_fit': None,
    }  # type: Dict[str, Any]
    if cfg.groove.admissible():
        c = constants(cfg.groove)
        summary['constants'] = c.as_dict()
        summary['margin48_at_0'] = series[0].margin48 if series else None
        reports, fit = run_checks(cfg, series, c)
        summary['checks'] = [r.to_dict() for r in reports]
        summary['decay_fit'] = fit.to_dict() if fit else None
    else:
        logger.warning(f'B={cfg.groove.width_B} is not admissible; no decay checks apply')
    if series:
        summary['truncation'] = truncation_report(series).to_dict()

    series_path = resolve(cfg.output.series_path, output_dir)
    write_csv_file(series_path, EnergyRecord.csv_header(), (r.csv_row() for r in series))
    write_config_hash(series_path, config_hash)
    summary_path = resolve(cfg.output.summary_path, output_dir)
    write_json_file(summary_path, summary)

    failed = [r['name'] for r in summary['checks'] if not r['pass']]
    logger.info(
        f'Run {config_hash[:12]} {result.outcome} at t={result.state.time:.6g} '
        f'in {time.monotonic() - started:.1f}s; '
        + (f'failed checks: {", ".join(failed)}' if failed else 'all checks pass')
    )
    return summary


def cmd_run(config_path: str, output_dir: str = config.OUTPUT_DIR) -> Dict[str, Any]:
    cfg = load_run_config(config_path)
    log_to_output_dir(output_dir)
    return execute_run(cfg, output_dir)


def sweep_cell(cfg: RunConfig) -> Tuple[float, float, float, str, float, float]:
    """
    One stability map row. Runs inadmissible cells too, to see what happens there.
    """
    B, eps = cfg.groove.width_B, cfg.initial.amplitude
    c = raw_constants(cfg.groove)
    admissible = cfg.groove.admissible()
    margin = fitted = float('nan')
    try:
        state0 = build_state0(cfg)
        if admissible:
            margin = smallness_margin(c, energy(state0.u))
        result = run(state0, cfg.integrator, sampler=EnergySampler(None, nonlinear=cfg.integrator.nonlinear))
        series = result.series
        try:
            fit = fit_decay(series, (cfg.checks.fit_transient * series[-1].t, series[-1].t))
            fitted = fit.rate_lambda
        except FitDomainError:
            pass
        if not admissible:
            outcome = 'inadmissible'
        elif isinstance(result.error, BlowupError):
            outcome = 'blowup'
        elif result.error is not None:
            outcome = 'error'
        else:
            e0, e_end = series[0].energy, series[-1].energy
            bound = (1.0 + cfg.checks.rel_tol) * e0 * math.exp(-c.decay_rate * series[-1].t)
            outcome = 'decayed' if e_end <= bound else 'not-decayed-by-t_end'
    except Exception as e:
        logger.error(f'Sweep cell B={B}, eps={eps} failed: {e}')
        outcome = 'error'
    logger.info(f'Sweep cell B={B:.4g}, eps={eps:.3g}: {outcome}')
    return (B, eps, margin, outcome, fitted, c.decay_rate)


def error_row(cfg: RunConfig) -> Tuple[float, float, float, str, float, float]:
    return (
        cfg.groove.width_B,
        cfg.initial.amplitude,
        float('nan'),
        'error',
        float('nan'),
        raw_constants(cfg.groove).decay_rate,
    )


def execute_sweep(cells: List[RunConfig], workers: int, cell: Callable = sweep_cell) -> List[Tuple]:
    """
    One row per cell, in cell order. A cell whose worker dies (or takes the pool down
    with it) gets an 'error' row instead of costing the whole map.
    """
    if workers <= 1:
        return [cell(cfg) for cfg in cells]
    rows = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(cell, cfg) for cfg in cells]
        for cfg, future in zip(cells, futures):
            try:
                rows.append(future.result())
            except Exception as e:
                logger.error(f'Sweep cell B={cfg.groove.width_B}, eps={cfg.initial.amplitude} was lost: {e!r}')
                rows.append(error_row(cfg))
    return rows


def execute_sweep_config(sweep: SweepConfig, output_dir: str) -> str:
    """
    Run every (B, eps) cell and write the stability map with its config hash sidecar.
    Rows follow the cell order, so the map is deterministic regardless of parallelism.
    """
    config_hash = sweep.config_hash()
    workers = config.PARALLELISM or sweep.parallelism
    cells = sweep.cells()
    logger.info(f'Sweeping {len(cells)} cells with {workers} worker(s), config {config_hash[:12]}')
    rows = execute_sweep(cells, workers)
    path = write_csv_file(resolve(sweep.map_path, output_dir), SWEEP_HEADER, rows)
    write_config_hash(path, config_hash)
    logger.info(f'Wrote stability map {path}')
    return path

def cmd_sweep(config_path: str, output_dir: str = config.OUTPUT_DIR) -> str:
    sweep = load_sweep_config(config_path)
    log_to_output_dir(output_dir)
    return execute_sweep_config(sweep, output_dir)

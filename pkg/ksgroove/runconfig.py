"""
Experiment descriptions. Run and sweep files are flat "section.key = value" text read
through a decouple repository, so any key can also be overridden from the environment.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
from decouple import Config, Csv, RepositoryEnv, UndefinedValueError

from ksgroove.errors import ConfigError, InvalidArgumentError, InvalidSpecError
from ksgroove.geometry import SUPPORT_MARGIN, GrooveSpec, Grid
from ksgroove.checkpoint import checkpoint_read
from ksgroove.initial import FAMILIES, init_from_potential, potential_datum
from ksgroove.integrator import IntegratorConfig, SimState
from ksgroove.diagnostics import UT_METHODS
from ksgroove.logger import get_logger

logger = get_logger()

CHECKS = ('energy_inequality', 'decay_bound', 'ut_decay', 'decay_fit')
INITIAL_FAMILIES = FAMILIES + ('checkpoint',)


@dataclass(frozen=True)
class GridConfig:
    n1: int = 32
    n2: int = 48
    n3: int = 48


@dataclass(frozen=True)
class InitialConfig:
    family: str = 'separable'
    amplitude: float = 1e-2
    modes: Tuple[int, ...] = (1,)
    seed: int = 0
    wall_power: int = 2
    support_fraction: float = 1.0 - SUPPORT_MARGIN
    perturbation: float = 0.0
    perturbation_seed: int = 1
    checkpoint_path: str = ''


@dataclass(frozen=True)
class OutputConfig:
    sample_stride: int = 1
    series_path: str = 'series.csv'
    summary_path: str = 'summary.json'
    checkpoint_stride: int = 0
    checkpoint_path: str = 'checkpoint.ksg'


@dataclass(frozen=True)
class ChecksConfig:
    enabled: Tuple[str, ...] = CHECKS
    rel_tol: float = 1e-2
    fit_transient: float = 0.1
    ut_method: str = 'backward'


@dataclass(frozen=True)
class RunConfig:
    groove: GrooveSpec = GrooveSpec(2.0)
    grid: GridConfig = GridConfig()
    initial: InitialConfig = InitialConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    output: OutputConfig = OutputConfig()
    checks: ChecksConfig = ChecksConfig()

    def make_grid(self) -> Grid:
        return Grid.for_groove(self.groove, self.grid.n1, self.grid.n2, self.grid.n3)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        return _sha256(self.to_dict())

    def with_cell(self, width_B: float, amplitude: float) -> 'RunConfig':
        return replace(
            self,
            groove=replace(self.groove, width_B=float(width_B)),
            initial=replace(self.initial, amplitude=float(amplitude)),
        )


@dataclass(frozen=True)
class SweepConfig:
    template: RunConfig
    B_values: Tuple[float, ...]
    epsilon_values: Tuple[float, ...]
    parallelism: int = 4
    map_path: str = 'stability_map.csv'

    def cells(self) -> List[RunConfig]:
        return [self.template.with_cell(B, eps) for B in self.B_values for eps in self.epsilon_values]

    def to_dict(self) -> Dict[str, Any]:
        """
        Everything that shapes the map. Parallelism is left out: it never changes a row.
        """
        return {
            'template': self.template.to_dict(),
            'B_values': list(self.B_values),
            'epsilon_values': list(self.epsilon_values),
            'map_path': self.map_path,
        }

    def config_hash(self) -> str:
        return _sha256(self.to_dict())


def _sha256(data: Dict[str, Any]) -> str:
    canonical = json.dumps(data, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


_bool = bool
_ints = Csv(int, post_process=tuple)
_strs = Csv(post_process=tuple)

# key -> (default, cast)
RUN_KEYS = {
    'groove.width_B': (2.0, float),
    'groove.trunc_x1': (4.0, float),
    'groove.trunc_x3': (4.0, float),
    'groove.orientation': ('x2', str),
    'grid.n1': (32, int),
    'grid.n2': (48, int),
    'grid.n3': (48, int),
    'initial.family': ('separable', str),
    'initial.amplitude': (1e-2, float),
    'initial.modes': ('1', _ints),
    'initial.seed': (0, int),
    'initial.wall_power': (2, int),
    'initial.support_fraction': (1.0 - SUPPORT_MARGIN, float),
    'initial.perturbation': (0.0, float),
    'initial.perturbation_seed': (1, int),
    'initial.checkpoint_path': ('', str),
    'integrator.dt': (1e-3, float),
    'integrator.t_end': (2.0, float),
    'integrator.solver_tol': (1e-10, float),
    'integrator.solver_max_iter': (200, int),
    'integrator.cfl_safety': (0.5, float),
    'integrator.preconditioner': ('fourier', str),
    'integrator.nonlinear': (True, _bool),
    'integrator.blowup_threshold': (1e10, float),
    'output.sample_stride': (1, int),
    'output.series_path': ('series.csv', str),
    'output.summary_path': ('summary.json', str),
    'output.checkpoint_stride': (0, int),
    'output.checkpoint_path': ('checkpoint.ksg', str),
    'checks.enabled': (','.join(CHECKS), _strs),
    'checks.rel_tol': (1e-2, float),
    'checks.fit_transient': (0.1, float),
    'checks.ut_method': ('backward', str),
}

SWEEP_KEYS = {
    'sweep.B': ('1.0, 3.5, 6', Csv(float, post_process=tuple)),
    'sweep.epsilon': ('1e-3, 1.0, 6', Csv(float, post_process=tuple)),
    'sweep.epsilon_spacing': ('log', str),
    'sweep.parallelism': (4, int),
    'sweep.map_path': ('stability_map.csv', str),
}


def _lint(path: str) -> List[str]:
    """
    decouple silently skips lines without '='; treat them as malformed instead.
    """
    problems = []
    try:
        with open(path) as f:
            for number, line in enumerate(f, start=1):
                line = line.strip()
                if line and not line.startswith('#') and '=' not in line:
                    problems.append(f'line {number}: expected "key = value", got {line!r}')
    except OSError as e:
        raise ConfigError([f'unable to read {path}: {e}'], source=path) from None
    return problems


def _read(path: str, schema: Dict[str, Tuple[Any, Callable]], allowed: set) -> Tuple[Dict[str, Any], List[str]]:
    problems = _lint(path)
    repository = RepositoryEnv(path)
    unknown = sorted(set(repository.data) - allowed)
    problems.extend(f'unknown key {key!r}' for key in unknown)
    config = Config(repository)
    values = {}
    for key, (default, cast) in schema.items():
        try:
            values[key] = config(key, default=default, cast=cast)
        except (ValueError, UndefinedValueError) as e:
            problems.append(f'{key}: {e}')
    return values, problems


def _build(what: str, factory: Callable, problems: List[str]):
    try:
        return factory()
    except (InvalidSpecError, InvalidArgumentError) as e:
        problems.extend(f'{what}: {p}' for p in str(e).split('; '))
    except (TypeError, ValueError) as e:
        problems.append(f'{what}: {e}')
    return None


def _section(values: Dict[str, Any], section: str) -> Dict[str, Any]:
    prefix = section + '.'
    return {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}


def build_run_config(values: Dict[str, Any], problems: List[str]) -> RunConfig:
    groove = _build('groove', lambda: GrooveSpec(**_section(values, 'groove')), problems)
    grid = GridConfig(**_section(values, 'grid'))
    initial = InitialConfig(**_section(values, 'initial'))
    integrator = _build('integrator', lambda: IntegratorConfig(**_section(values, 'integrator')), problems)
    output = OutputConfig(**_section(values, 'output'))
    checks = ChecksConfig(**_section(values, 'checks'))

    if groove is not None:
        _build('grid', lambda: Grid.for_groove(groove, grid.n1, grid.n2, grid.n3), problems)
    problems.extend(_initial_problems(initial))
    problems.extend(_output_problems(output))
    problems.extend(_checks_problems(checks))

    if problems:
        raise ConfigError(problems)
    return RunConfig(groove, grid, initial, integrator, output, checks)


def _initial_problems(initial: InitialConfig) -> List[str]:
    problems = []
    if initial.family not in INITIAL_FAMILIES:
        problems.append(
            f'initial.family must be one of {", ".join(INITIAL_FAMILIES)}, got {initial.family!r}'
        )
    if initial.family == 'checkpoint' and not initial.checkpoint_path:
        problems.append('initial.checkpoint_path is required when initial.family = checkpoint')
    for name in ('amplitude', 'perturbation'):
        value = getattr(initial, name)
        if not (math.isfinite(value) and value >= 0):
            problems.append(f'initial.{name} must be non-negative, got {value!r}')
    if not initial.modes:
        problems.append('initial.modes must list at least one x1 mode index')
    if initial.wall_power < 2 or initial.wall_power % 2:
        problems.append(f'initial.wall_power must be an even integer >= 2, got {initial.wall_power}')
    if not 0.0 < initial.support_fraction <= 1.0 - SUPPORT_MARGIN:
        problems.append(
            f'initial.support_fraction must lie in (0, {1.0 - SUPPORT_MARGIN:g}], got {initial.support_fraction!r}'
        )
    return problems


def _output_problems(output: OutputConfig) -> List[str]:
    problems = []
    if output.sample_stride < 1:
        problems.append(f'output.sample_stride must be positive, got {output.sample_stride}')
    if output.checkpoint_stride < 0:
        problems.append(f'output.checkpoint_stride must be non-negative, got {output.checkpoint_stride}')
    return problems


def _checks_problems(checks: ChecksConfig) -> List[str]:
    problems = [f'unknown check {name!r}' for name in checks.enabled if name not in CHECKS]
    if not 0.0 < checks.rel_tol < 1.0:
        problems.append(f'checks.rel_tol must lie in (0, 1), got {checks.rel_tol!r}')
    if not 0.0 <= checks.fit_transient < 1.0:
        problems.append(f'checks.fit_transient must lie in [0, 1), got {checks.fit_transient!r}')
    if checks.ut_method not in UT_METHODS:
        problems.append(f'checks.ut_method must be one of {", ".join(UT_METHODS)}, got {checks.ut_method!r}')
    return problems


def load_run_config(path: str) -> RunConfig:
    """
    Read and validate a run file. Raises ConfigError listing every problem found.
    """
    values, problems = _read(path, RUN_KEYS, set(RUN_KEYS))
    try:
        config = build_run_config(values, problems)
    except ConfigError as e:
        raise ConfigError(e.problems, source=path) from None
    logger.info(f'Loaded run config {path} ({config.config_hash()[:12]})')
    return config


def _axis(values: Tuple[float, ...], key: str, spacing: str, problems: List[str]) -> Tuple[float, ...]:
    if len(values) != 3:
        problems.append(f'{key} must be "lo, hi, count", got {values!r}')
        return ()
    lo, hi, count = values
    if count < 1 or count != int(count):
        problems.append(f'{key} count must be a positive integer, got {count!r}')
        return ()
    if spacing == 'log':
        if lo <= 0 or hi <= 0:
            problems.append(f'{key} needs positive bounds for log spacing')
            return ()
        return tuple(float(v) for v in np.geomspace(lo, hi, int(count)))
    return tuple(float(v) for v in np.linspace(lo, hi, int(count)))


def load_sweep_config(path: str) -> SweepConfig:
    """
    A sweep file is a run file (the per-cell template) plus sweep.* keys. Cells may be
    inadmissible; only the template itself must validate.
    """
    schema = dict(RUN_KEYS, **SWEEP_KEYS)
    values, problems = _read(path, schema, set(schema))
    spacing = values.get('sweep.epsilon_spacing', 'log')
    if spacing not in ('log', 'linear'):
        problems.append(f'sweep.epsilon_spacing must be log or linear, got {spacing!r}')
    B_values = _axis(values.get('sweep.B', ()), 'sweep.B', 'linear', problems)
    epsilon_values = _axis(values.get('sweep.epsilon', ()), 'sweep.epsilon', spacing, problems)
    if any(B <= 0 for B in B_values):
        problems.append('sweep.B values must be positive')
    parallelism = values.get('sweep.parallelism', 1)
    if parallelism < 1:
        problems.append(f'sweep.parallelism must be positive, got {parallelism}')
    try:
        template = build_run_config({k: v for k, v in values.items() if k in RUN_KEYS}, problems)
    except ConfigError as e:
        raise ConfigError(e.problems, source=path) from None
    if problems:
        raise ConfigError(problems, source=path)
    return SweepConfig(
        template=template,
        B_values=B_values,
        epsilon_values=epsilon_values,
        parallelism=parallelism,
        map_path=values['sweep.map_path'],
    )


def resolve(path: str, base_dir: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def build_state0(cfg: RunConfig) -> SimState:
    """
    The initial SimState described by cfg.initial: grad of the potential datum plus
    @perturbation times a seeded random potential, or a checkpoint to resume from.
    """
    initial = cfg.initial
    grid = cfg.make_grid()
    if initial.family == 'checkpoint':
        state = checkpoint_read(initial.checkpoint_path, cfg.groove.orientation)
        if state.grid != grid:
            raise ConfigError(
                [f'checkpoint grid {state.grid.sizes} does not match the configured grid {grid.sizes}'],
                source=initial.checkpoint_path,
            )
        return state

    phi0 = potential_datum(
        grid,
        family=initial.family,
        amplitude=initial.amplitude,
        modes=initial.modes,
        seed=initial.seed,
        wall_power=initial.wall_power,
        support_fraction=initial.support_fraction,
    )
    if initial.perturbation:
        phi0 = phi0 + potential_datum(
            grid,
            family='random',
            amplitude=initial.perturbation,
            seed=initial.perturbation_seed,
            wall_power=initial.wall_power,
            support_fraction=initial.support_fraction,
        )
    return SimState(init_from_potential(phi0))

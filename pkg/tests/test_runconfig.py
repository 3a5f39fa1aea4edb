import os

import pytest

from ksgroove.errors import ConfigError
from ksgroove.runconfig import RunConfig, load_run_config, load_sweep_config, resolve

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')

SMALL_SWEEP = """\
grid.n1 = 8
grid.n2 = 16
grid.n3 = 16
integrator.t_end = 0.02
sweep.B = 2.0, 3.5, 2
sweep.epsilon = 1e-3, 1e-2, 2
sweep.parallelism = 1
"""


def test_default_config_is_the_default_run():
    cfg = load_run_config(os.path.join(CONFIGS, 'default.cfg'))
    assert cfg == RunConfig()
    assert cfg.config_hash() == RunConfig().config_hash()
    assert cfg.checks.enabled == ('energy_inequality', 'decay_bound', 'ut_decay', 'decay_fit')


def test_threshold_sweep_has_thirty_six_cells():
    sweep = load_sweep_config(os.path.join(CONFIGS, 'threshold_sweep.cfg'))
    assert sweep.B_values == pytest.approx((1.0, 1.5, 2.0, 2.5, 3.0, 3.5))
    assert sweep.epsilon_values[0] == pytest.approx(1e-3)
    assert sweep.epsilon_values[-1] == pytest.approx(1.0)
    assert sweep.epsilon_values[1] == pytest.approx(10 ** -2.4)
    cells = sweep.cells()
    assert len(cells) == 36
    assert cells[0].groove.width_B == 1.0
    assert cells[0].initial.amplitude == pytest.approx(1e-3)
    assert cells[-1].groove.width_B == 3.5


def test_linear_epsilon_spacing(write_config):
    path = write_config(SMALL_SWEEP + 'sweep.epsilon_spacing = linear\nsweep.epsilon = 0.0, 1.0, 3\n', 'sweep.cfg')
    assert load_sweep_config(path).epsilon_values == (0.0, 0.5, 1.0)


def test_log_spacing_needs_positive_bounds(write_config):
    path = write_config(SMALL_SWEEP + 'sweep.epsilon = 0.0, 1.0, 3\n', 'sweep.cfg')
    with pytest.raises(ConfigError):
        load_sweep_config(path)


def test_small_run_file(small_run_file, small_cfg):
    cfg = load_run_config(small_run_file())
    assert cfg == small_cfg


def test_every_problem_is_reported(write_config):
    path = write_config(
        'grid.n1 32\n'
        'bogus.key = 1\n'
        'integrator.dt = 5\n'
        'groove.width_B = -1\n'
        'grid.n2 = many\n'
    )
    with pytest.raises(ConfigError) as info:
        load_run_config(path)
    problems = info.value.problems
    assert info.value.source == path
    assert any(p.startswith('line 1:') for p in problems)
    assert "unknown key 'bogus.key'" in problems
    assert any('integrator.dt' in p for p in problems)
    assert any('groove.width_B' in p for p in problems)
    assert any(p.startswith('grid.n2') for p in problems)


def test_checkpoint_family_needs_a_path(write_config):
    with pytest.raises(ConfigError) as info:
        load_run_config(write_config('initial.family = checkpoint\n'))
    assert info.value.problems == ['initial.checkpoint_path is required when initial.family = checkpoint']


def test_unknown_check_and_bad_tolerance(write_config):
    with pytest.raises(ConfigError) as info:
        load_run_config(write_config('checks.enabled = decay_bound, vibes\nchecks.rel_tol = 2\n'))
    assert len(info.value.problems) == 2


def test_environment_overrides_the_file(write_config, monkeypatch):
    monkeypatch.setenv('integrator.t_end', '0.5')
    cfg = load_run_config(write_config('integrator.t_end = 1.0\n'))
    assert cfg.integrator.t_end == 0.5


def test_hash_tracks_content():
    base = RunConfig()
    assert base.config_hash() == RunConfig().config_hash()
    assert base.with_cell(2.0, 0.02).config_hash() != base.config_hash()


def test_resolve(tmp_path):
    assert resolve('/abs/series.csv', str(tmp_path)) == '/abs/series.csv'
    assert resolve('series.csv', str(tmp_path)) == os.path.join(str(tmp_path), 'series.csv')

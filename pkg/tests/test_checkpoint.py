import os
from dataclasses import replace

import numpy as np
import pytest

from ksgroove.checkpoint import HEADER, checkpoint_read, checkpoint_write
from ksgroove.errors import ConfigError, CorruptCheckpointError
from ksgroove.experiments import simulate
from ksgroove.fields import VectorField3
from ksgroove.initial import init_from_potential, potential_datum
from ksgroove.integrator import SimState
from ksgroove.runconfig import GridConfig, InitialConfig, OutputConfig, build_state0


@pytest.fixture
def state(grid):
    return SimState(init_from_potential(potential_datum(grid, family='random', seed=5)), 0.125, 125)


@pytest.fixture
def path(tmp_path, state):
    path = str(tmp_path / 'state.ksg')
    checkpoint_write(state, path)
    return path


def test_round_trip_is_bit_exact(state, path):
    restored = checkpoint_read(path)
    assert restored.grid == state.grid
    assert restored.time == state.time
    assert restored.step_index == state.step_index
    assert np.array_equal(restored.u.stack(), state.u.stack())


@pytest.mark.parametrize('orientation', ['x1', 'x3'])
def test_oriented_round_trip_is_bit_exact(state, tmp_path, orientation):
    path = str(tmp_path / 'oriented.ksg')
    checkpoint_write(state, path, orientation)
    restored = checkpoint_read(path, orientation)
    assert restored.grid == state.grid
    assert np.array_equal(restored.u.stack(), state.u.stack())


def test_file_is_laid_out_in_physical_order(state, tmp_path):
    path = str(tmp_path / 'x3.ksg')
    checkpoint_write(state, path, 'x3')
    with open(path, 'rb') as f:
        header = np.frombuffer(f.read(HEADER.itemsize), dtype=HEADER)[0]
    g = state.grid
    assert bytes(header['orientation']) == b'x3'
    assert list(header['n']) == [g.n1, g.n3, g.n2]
    assert list(header['h']) == [g.h1, g.h3, g.h2]
    # the stored x2 component is the canonical x3 one, transposed
    values = np.fromfile(path, dtype='<f8', offset=HEADER.itemsize)
    physical = values.reshape((3, g.shape[0], g.shape[2], g.shape[1]))
    assert np.array_equal(physical[1], np.swapaxes(state.u.stack()[2], 1, 2))


def test_orientation_mismatch_is_a_config_error(state, tmp_path):
    path = str(tmp_path / 'x3.ksg')
    checkpoint_write(state, path, 'x3')
    with pytest.raises(ConfigError):
        checkpoint_read(path)
    with pytest.raises(ConfigError):
        checkpoint_read(path, 'x1')


def test_write_leaves_no_temporary_file(path):
    assert not os.path.exists(path + '.tmp')


def test_truncated_header(path):
    with open(path, 'r+b') as f:
        f.truncate(HEADER.itemsize - 1)
    with pytest.raises(CorruptCheckpointError, match='truncated header'):
        checkpoint_read(path)


def test_bad_magic(path):
    with open(path, 'r+b') as f:
        f.write(b'NOTAGROOV')
    with pytest.raises(CorruptCheckpointError, match='bad magic'):
        checkpoint_read(path)


def test_missing_payload(path):
    with open(path, 'r+b') as f:
        f.truncate(HEADER.itemsize + 8)
    with pytest.raises(CorruptCheckpointError, match='expected'):
        checkpoint_read(path)


def test_non_finite_payload(grid, tmp_path):
    values = np.zeros((3,) + grid.shape)
    values[2, 0, 0, 0] = np.inf
    path = str(tmp_path / 'bad.ksg')
    checkpoint_write(SimState(VectorField3.from_stack(grid, values)), path)
    with pytest.raises(CorruptCheckpointError, match='non-finite'):
        checkpoint_read(path)


def test_resume_matches_an_uninterrupted_run(small_cfg, tmp_path):
    first_half = replace(
        small_cfg,
        integrator=replace(small_cfg.integrator, t_end=0.01),
        output=OutputConfig(checkpoint_stride=10),
    )
    simulate(first_half, str(tmp_path))
    checkpoint = str(tmp_path / 'checkpoint.ksg')

    resumed_cfg = replace(small_cfg, initial=InitialConfig(family='checkpoint', checkpoint_path=checkpoint))
    resumed = simulate(resumed_cfg)
    full = simulate(small_cfg)

    assert resumed.series[0].t == full.series[10].t
    # the first resumed row has no previous state, so only E_t may differ there
    assert resumed.series[0].energy == full.series[10].energy
    assert [r.csv_row() for r in resumed.series[1:]] == [r.csv_row() for r in full.series[11:]]
    assert np.array_equal(resumed.state.u.stack(), full.state.u.stack())


def test_resume_requires_a_matching_grid(small_cfg, path):
    cfg = replace(
        small_cfg,
        grid=GridConfig(8, 16, 24),
        initial=InitialConfig(family='checkpoint', checkpoint_path=path),
    )
    with pytest.raises(ConfigError):
        build_state0(cfg)


def test_resume_carries_the_orientation(small_cfg, tmp_path):
    oriented = replace(small_cfg, groove=replace(small_cfg.groove, orientation='x3'))
    first_half = replace(
        oriented,
        integrator=replace(oriented.integrator, t_end=0.01),
        output=OutputConfig(checkpoint_stride=10),
    )
    written = simulate(first_half, str(tmp_path))
    checkpoint = str(tmp_path / 'checkpoint.ksg')

    state = build_state0(replace(oriented, initial=InitialConfig(family='checkpoint', checkpoint_path=checkpoint)))
    assert state.step_index == 10
    assert np.array_equal(state.u.stack(), written.state.u.stack())

    unoriented = replace(small_cfg, initial=InitialConfig(family='checkpoint', checkpoint_path=checkpoint))
    with pytest.raises(ConfigError):
        build_state0(unoriented)

import logging.handlers
import math
from dataclasses import replace

import numpy as np
import pytest

from ksgroove.geometry import GrooveSpec, Grid
from ksgroove.integrator import IntegratorConfig
from ksgroove.logger import get_logger
from ksgroove.runconfig import GridConfig, InitialConfig, OutputConfig, RunConfig

SMALL_SIZES = (8, 16, 16)

SMALL_RUN = """\
# small admissible run
groove.width_B = 2.0
grid.n1 = 8
grid.n2 = 16
grid.n3 = 16
initial.amplitude = {amplitude}
integrator.dt = 1e-3
integrator.t_end = 0.02
output.sample_stride = 1
"""


@pytest.fixture(autouse=True)
def detach_file_handlers():
    """
    Commands attach a rotating log file under their output directory; drop it after
    each test.
    """
    yield
    logger = get_logger()
    for handler in list(logger.handlers):
        if isinstance(handler, logging.handlers.RotatingFileHandler):
            logger.removeHandler(handler)
            handler.close()


@pytest.fixture
def spec():
    return GrooveSpec(2.0)


@pytest.fixture
def grid(spec):
    return Grid.for_groove(spec, *SMALL_SIZES)


@pytest.fixture
def box():
    return Grid.periodic_box([2.0 * math.pi] * 3, [16] * 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg():
    return RunConfig(
        grid=GridConfig(*SMALL_SIZES),
        initial=InitialConfig(amplitude=1e-2),
        integrator=IntegratorConfig(dt=1e-3, t_end=0.02),
        output=OutputConfig(),
    )


@pytest.fixture
def write_config(tmp_path):
    """
    Write config text to a file under tmp_path and return its path.
    """

    def write(text, name='run.cfg'):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


@pytest.fixture
def perturb():
    """
    Copy a RunConfig with a different initial perturbation.
    """

    def with_perturbation(cfg, delta, seed=1):
        return replace(cfg, initial=replace(cfg.initial, perturbation=delta, perturbation_seed=seed))

    return with_perturbation


@pytest.fixture
def small_run_file(write_config):
    """
    Write the small admissible run with the given initial amplitude.
    """

    def write(amplitude=1e-2, name='run.cfg'):
        return write_config(SMALL_RUN.format(amplitude=amplitude), name)

    return write

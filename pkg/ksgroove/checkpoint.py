"""
KSGROOVE1 checkpoints: a fixed little-endian header followed by the three velocity
components as float64 arrays. The file is laid out in the groove's physical axis order
(sizes, spacings and boundary kinds included) and names the orientation, so reading
maps it back to canonical order.
"""

import os

import numpy as np

from ksgroove.errors import ConfigError, CorruptCheckpointError, InvalidSpecError
from ksgroove.fields import VectorField3
from ksgroove.geometry import (
    CLAMPED,
    ORIENTATIONS,
    PERIODIC,
    Grid,
    to_canonical,
    to_canonical_axes,
    to_physical,
    to_physical_axes,
)
from ksgroove.integrator import SimState
from ksgroove.logger import get_logger

logger = get_logger()

MAGIC = b'KSGROOVE1'

HEADER = np.dtype([
    ('magic', 'S9'),
    ('orientation', 'S2'),
    ('n', '<i8', (3,)),
    ('h', '<f8', (3,)),
    ('bc', 'u1', (3,)),
    ('time', '<f8'),
    ('step', '<i8'),
])

BC_FLAGS = {PERIODIC: 0, CLAMPED: 1}
BC_NAMES = {v: k for k, v in BC_FLAGS.items()}

VALUE_DTYPE = np.dtype('<f8')


def checkpoint_write(state: SimState, path: str, orientation: str = 'x2'):
    """
    Write @state, held in canonical order, as the physical layout of a groove whose
    width lies along @orientation.
    """
    grid = state.grid
    header = np.zeros((), dtype=HEADER)
    header['magic'] = MAGIC
    header['orientation'] = orientation.encode()
    header['n'] = to_physical_axes(grid.sizes, orientation)
    header['h'] = to_physical_axes(grid.spacings, orientation)
    header['bc'] = [BC_FLAGS[bc] for bc in to_physical_axes(grid.bc, orientation)]
    header['time'] = state.time
    header['step'] = state.step_index
    values = to_physical(state.u.stack(), orientation, vector=True)

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    tmp = path + '.tmp'
    with open(tmp, 'wb') as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(values, dtype=VALUE_DTYPE).tobytes())
    os.replace(tmp, path)
    logger.info(f'Wrote checkpoint {path} at step {state.step_index} (t={state.time:.6g})')


def _orientation_from_header(header: np.ndarray) -> str:
    orientation = bytes(header['orientation']).decode('ascii', errors='replace')
    if orientation not in ORIENTATIONS:
        raise CorruptCheckpointError(f'Unknown orientation {orientation!r}')
    return orientation


def _grid_from_header(header: np.ndarray, orientation: str) -> Grid:
    try:
        bc = tuple(BC_NAMES[int(flag)] for flag in header['bc'])
    except KeyError:
        raise CorruptCheckpointError(f'Unknown boundary flags {list(header["bc"])}') from None
    n1, n2, n3 = to_canonical_axes([int(n) for n in header['n']], orientation)
    h1, h2, h3 = to_canonical_axes([float(h) for h in header['h']], orientation)
    try:
        return Grid(n1, n2, n3, h1, h2, h3, bc=to_canonical_axes(bc, orientation))
    except InvalidSpecError as e:
        raise CorruptCheckpointError(f'Checkpoint grid is invalid: {e}') from None


def checkpoint_read(path: str, orientation: str = 'x2') -> SimState:
    """
    Read a state written by checkpoint_write for a groove oriented along @orientation.
    The round trip is bit exact.
    """
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < HEADER.itemsize:
        raise CorruptCheckpointError(f'{path}: truncated header ({len(data)} bytes)')
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if bytes(header['magic']) != MAGIC:
        raise CorruptCheckpointError(f'{path}: bad magic {bytes(header["magic"])!r}')
    stored = _orientation_from_header(header)
    if stored != orientation:
        raise ConfigError(
            [f'checkpoint groove is oriented along {stored}, the configuration along {orientation}'],
            source=path,
        )
    grid = _grid_from_header(header, stored)

    physical_shape = to_physical_axes(grid.shape, stored)
    count = int(np.prod(physical_shape))
    expected = HEADER.itemsize + 3 * count * VALUE_DTYPE.itemsize
    if len(data) != expected:
        raise CorruptCheckpointError(f'{path}: expected {expected} bytes, found {len(data)}')
    values = np.frombuffer(data, dtype=VALUE_DTYPE, offset=HEADER.itemsize).astype(np.float64)
    values = to_canonical(values.reshape((3,) + physical_shape), stored, vector=True)
    if not np.isfinite(values).all():
        raise CorruptCheckpointError(f'{path}: non-finite field values')
    u = VectorField3.from_stack(grid, np.ascontiguousarray(values))
    return SimState(u, float(header['time']), int(header['step']))

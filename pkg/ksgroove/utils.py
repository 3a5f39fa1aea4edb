import csv
import math
import json
import os
from io import StringIO
from typing import Any, Dict, Iterable, Tuple


def _ensure_parent(path: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def format_cell(value: Any) -> Any:
    """
    repr() round-trips floats exactly, so identical runs produce identical bytes.
    """
    if isinstance(value, float):
        return repr(float(value))
    return value


def generate_csv(header: Tuple[Any, ...], rows: Iterable[Tuple[Any, ...]]) -> str:
    """
    Render @header and @rows as CSV text.
    """
    out = StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerows([header, *([format_cell(v) for v in row] for row in rows)])
    return out.getvalue()


def write_csv_file(path: str, header: Tuple[Any, ...], rows: Iterable[Tuple[Any, ...]]) -> str:
    _ensure_parent(path)
    with open(path, 'w', newline='') as f:
        f.write(generate_csv(header, rows))
    return path


def write_json_file(path: str, data: Dict[str, Any]) -> str:
    """
    Write @data as indented JSON with sorted keys. Non-finite floats become null.
    """
    _ensure_parent(path)
    with open(path, 'w') as f:
        json.dump(_finite(data), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def _finite(data: Any) -> Any:
    if isinstance(data, float):
        return float(data) if math.isfinite(data) else None
    if isinstance(data, dict):
        return {str(k): _finite(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite(v) for v in data]
    if hasattr(data, 'tolist'):
        return _finite(data.tolist())
    return data


CONFIG_HASH_SUFFIX = '.sha256'


def config_hash_path(artifact_path: str) -> str:
    return artifact_path + CONFIG_HASH_SUFFIX


def write_config_hash(artifact_path: str, config_hash: str) -> str:
    """
    Write the sidecar tying @artifact_path to the configuration that produced it:
    one line "<config hash>  <artifact file name>".
    """
    path = config_hash_path(artifact_path)
    _ensure_parent(path)
    with open(path, 'w') as f:
        f.write(f'{config_hash}  {os.path.basename(artifact_path)}\n')
    return path


def read_config_hash(artifact_path: str) -> str:
    with open(config_hash_path(artifact_path)) as f:
        return f.read().split()[0]

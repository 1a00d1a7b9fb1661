import os
import json
import enum
import tempfile
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union, Iterable, Callable, List, Any, Sequence

import numpy as np
import pandas as pd

from .errors import InvalidInput


def matrix_from_json(data: Any, name: str = "matrix") -> np.ndarray:
    """
    Convert a row-major list of lists to a finite square float matrix.
    """
    try:
        matrix = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput(f"{name} is not a numeric array")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return matrix


def read_json(file: Union[str, Path]) -> Any:
    try:
        return json.loads(Path(file).read_text())
    except OSError as e:
        raise InvalidInput(f"Can not read '{file}': {e}")
    except json.JSONDecodeError as e:
        raise InvalidInput(f"Malformed json in '{file}': {e}")


def write_json_atomic(file: Union[str, Path], data: Any, indent: Optional[int] = 2):
    """
    Write json to a temporary file next to `file` and rename it.
    """
    _write_atomic(file, json.dumps(data, indent=indent, cls=JsonEncoder))


def write_csv_atomic(file: Union[str, Path], rows: Sequence[dict], columns: Optional[List[str]] = None):
    df = pd.DataFrame(list(rows), columns=columns)
    _write_atomic(file, df.to_csv(index=False))


def _write_atomic(file: Union[str, Path], text: str):
    file = Path(file)
    file.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{file.name}-", dir=str(file.parent))
    try:
        with os.fdopen(fd, "wt") as fp:
            fp.write(text)
        os.replace(tmp_name, file)
    except:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise


def parallel_map(func: Callable, iterable: Iterable, workers: int = 1) -> List:
    """
    `map` that keeps the order of results.

    numpy releases the GIL in the linear algebra routines,
    so threads give a real speedup on the batched calls.
    """
    if workers <= 1:
        return [func(i) for i in iterable]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, iterable))


class JsonEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, enum.Enum):
            return o.value
        if hasattr(o, "to_json"):
            return o.to_json()
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, (set, frozenset, tuple)):
            return list(o)
        return super().default(o)

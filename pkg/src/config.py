import json
import dataclasses
from pathlib import Path
from typing import Optional, Union, List

import numpy as np

from .errors import InvalidConfig


PROJECT_DIR = Path(__file__).resolve().parent.parent

DATA_DIR = PROJECT_DIR / "data"

DEFAULT_OUTPUT_DIR = PROJECT_DIR / "output"

# -- matrices --

MAX_DIM = 12
TOL_GAP = 1e-8
NONINVERTIBLE_RATIO = 1e-12
CONDITION_LIMIT = 1e12
INVERSE_TOL = 1e-10
PROJECTIVE_TOL = 1e-8
NOT_GRAPH = 1e-10
ORTHONORMAL_TOL = 1e-12

# beyond this exterior dimension the wedge products are too large
#   and window logs fall back to plain products
MAX_WEDGE_DIM = 70

# -- sequences --

ELL_MIN = 8
MAX_BG_DEPTH = 500
RESIDUAL_TARGET = 1e-6
LIMIT_RESIDUAL = 1e-8
MIN_CERTIFY_STEPS = 5.

# -- groups --

BALL_CAP = 2_000_000
CONE_RADIUS = 4
# ball radius for automata built on the fly
AUTOMATON_RADIUS = CONE_RADIUS + 4
BURN_IN = 3
# ball radius of the domination check behind boundary limits
DOMINATION_RADIUS = BURN_IN + 5

# -- multicones --

MARGIN_FLOOR = 1e-6
SLOPE_GRID = tuple(np.logspace(-1, 1, 16))
CLUSTER_SPLIT = .5
DEDUPE_RESOLUTION = 1e-6
GOLDEN_LOG_T_RANGE = (-20., 20.)
GOLDEN_ITERATIONS = 60
SLOPE_GROWTH = 1.05
SLOPE_TOLERANCE = 1e-4
MAX_SLOPE = 1e6
MAX_SLOPE_ITERATIONS = 60
MAX_WALKS = 4096

# -- morse --

C_TARGET = 10.
MAX_QUASI_MU = 1e6


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """
    All settings of one command-line run.

    Built from a flat json config file and command-line flags,
    where flags take precedence.
    """
    command: str
    mode: Optional[str] = None
    input: Optional[str] = None
    family: Optional[str] = None
    p: int = 1
    radius: int = 10
    depth: int = 60
    word_length: int = 60
    word: Optional[str] = None
    rays: Optional[List[str]] = None
    max_period: int = 3
    tol_gap: float = TOL_GAP
    residual_target: float = RESIDUAL_TARGET
    margin_floor: float = MARGIN_FLOOR
    c_target: float = C_TARGET
    out: str = str(DEFAULT_OUTPUT_DIR)
    workers: int = 1
    seed: int = 23
    verbose: bool = False

    def __post_init__(self):
        for name in ("tol_gap", "residual_target", "margin_floor", "c_target"):
            value = getattr(self, name)
            if not value > 0:
                raise InvalidConfig(f"'{name}' must be positive, got {value}")
        if self.p < 1:
            raise InvalidConfig(f"'p' must be at least 1, got {self.p}")
        if self.radius < 0:
            raise InvalidConfig(f"'radius' must not be negative, got {self.radius}")
        if self.depth < 1:
            raise InvalidConfig(f"'depth' must be positive, got {self.depth}")
        if self.max_period < 1:
            raise InvalidConfig(f"'max_period' must be positive, got {self.max_period}")
        if self.workers < 1:
            raise InvalidConfig(f"'workers' must be positive, got {self.workers}")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_sources(
            cls,
            flags: dict,
            config_file: Optional[Union[str, Path]] = None,
    ) -> "RunConfig":
        """
        Merge the content of `config_file` with the command-line `flags`.

        Flags that are None do not override the file.
        """
        fields = dict()
        if config_file:
            try:
                file_fields = json.loads(Path(config_file).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise InvalidConfig(f"Can not read config file '{config_file}': {e}")
            if not isinstance(file_fields, dict):
                raise InvalidConfig(f"Config file '{config_file}' must contain a flat object")
            for key, value in file_fields.items():
                key = key.replace("-", "_")
                if key not in cls.field_names():
                    raise InvalidConfig(f"Unknown config field '{key}'")
                fields[key] = value

        for key, value in flags.items():
            if key in cls.field_names() and value is not None:
                fields[key] = value

        if "command" not in fields:
            raise InvalidConfig("No command given")

        return cls(**fields)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

"""
Run configuration: YAML files, CLI overrides and output directories.

Precedence is built-in defaults < ``--config`` file < explicit CLI flags.
Every run writes the resolved configuration as ``config_used.yaml`` next to
its outputs; passing that file back with ``--config`` reproduces the run.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from hhtk.errors import ConfigError
from hhtk.utils import slugify

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = 'HHTK_OUTPUT_ROOT'
DEFAULT_OUTPUT_ROOT = 'runs'
CONFIG_FILENAME = 'config_used.yaml'

OPERATIONS = ('verify', 'integrate', 'poincare', 'sweep', 'lift')


def parse_number(text: Union[str, int, float]) -> float:
    """``0.5``, ``1/6`` or ``-2`` as a float."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"not a number: {text!r}") from e


def parse_vector(text: Union[str, List[Any]]) -> List[float]:
    items = text.split(',') if isinstance(text, str) else list(text)
    return [parse_number(v) for v in items if str(v).strip()]


def parse_assignments(items: Union[None, str, List[str], Mapping[str, Any]]) -> Dict[str, str]:
    """``['alpha=1/2,beta=2', 'delta=1']`` or a mapping, as name -> value text."""
    if items is None:
        return {}
    if isinstance(items, Mapping):
        return {str(k): _value_text(v) for k, v in items.items()}
    if isinstance(items, str):
        items = [items]
    out: Dict[str, str] = {}
    for item in items:
        for part in item.split(','):
            if not part.strip():
                continue
            key, sep, value = part.partition('=')
            if not sep or not key.strip() or not value.strip():
                raise ConfigError(f"parameter binding must look like name=value, got {part!r}")
            out[key.strip()] = value.strip()
    return out


def _value_text(value: Any) -> str:
    if isinstance(value, bool):
        raise ConfigError(f"boolean is not a parameter value: {value!r}")
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_centrifugal(value: Union[None, str, List[Any]]) -> Union[str, List[str]]:
    """``zero``, ``symbolic`` or a list of constants ``b1,b2,...``."""
    if value is None:
        return 'zero'
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ('zero', 'symbolic'):
            return text.lower()
        return [v.strip() for v in text.split(',') if v.strip()]
    return [_value_text(v) for v in value]


@dataclass
class RunConfig:
    """Everything needed to reproduce one command's outputs."""

    operation: str = 'verify'
    model: Optional[str] = None
    params: Dict[str, str] = field(default_factory=dict)
    n: int = 2
    centrifugal: Union[str, List[str]] = 'zero'
    x0: List[float] = field(default_factory=list)
    T: float = 100.0
    dt: float = 1e-3
    method: str = 'verlet'
    rtol: float = 1e-10
    atol: float = 1e-12
    sample_every: int = 1
    plane: str = 'q1=0,+'
    energy: Optional[str] = None
    seeds: int = 4
    grid: List[str] = field(default_factory=list)
    workers: int = 1
    h_file: Optional[str] = None
    i_file: Optional[str] = None
    seed: int = 0
    strict: bool = False
    timing: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.operation not in OPERATIONS:
            raise ConfigError(f"unknown operation {self.operation!r}")
        if self.n < 2:
            raise ConfigError(f"N must be at least 2, got {self.n}")
        if isinstance(self.centrifugal, list) and len(self.centrifugal) != self.n - 1:
            raise ConfigError(
                f"N={self.n} needs {self.n - 1} centrifugal constants, got {len(self.centrifugal)}"
            )
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError('T and dt must be positive')
        if self.workers < 1 or self.seeds < 1:
            raise ConfigError('workers and seeds must be at least 1')

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'RunConfig':
        """Build from a YAML mapping; unknown keys are an error."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**_normalise(data))

    def to_mapping(self) -> Dict[str, Any]:
        return asdict(self)

    def merged(self, overrides: Mapping[str, Any]) -> 'RunConfig':
        """Copy with every override that is not ``None``."""
        given = {k: v for k, v in overrides.items() if v is not None}
        known = {f.name for f in fields(self)}
        unknown = sorted(set(given) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return replace(self, **_normalise(given))

    def run_name(self) -> str:
        if self.model:
            return f"{self.operation}-{slugify(self.model)}"
        return self.operation


def _normalise(data: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(data)
    if 'params' in out:
        out['params'] = parse_assignments(out['params'])
    if 'centrifugal' in out:
        out['centrifugal'] = parse_centrifugal(out['centrifugal'])
    if 'x0' in out:
        out['x0'] = parse_vector(out['x0'])
    for key in ('T', 'dt', 'rtol', 'atol'):
        if key in out:
            out[key] = parse_number(out[key])
    for key in ('n', 'sample_every', 'seeds', 'workers', 'seed'):
        if key in out:
            try:
                out[key] = int(out[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{key} must be an integer, got {out[key]!r}") from e
    if out.get('energy') is not None:
        out['energy'] = _value_text(out['energy'])
    if isinstance(out.get('grid'), str):
        out['grid'] = [out['grid']]
    return out


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML config file into a plain mapping."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    logger.debug(f"Loaded config {path}: {sorted(data)}")
    return data


def resolve_config(
    operation: str,
    config_file: Optional[str],
    overrides: Mapping[str, Any],
) -> RunConfig:
    """Defaults, then the file, then explicit flags."""
    data: Dict[str, Any] = load_config(config_file) if config_file else {}
    file_operation = data.get('operation')
    if file_operation and file_operation != operation:
        logger.info(f"Config file was written by '{file_operation}', running '{operation}'")
    data['operation'] = operation
    return RunConfig.from_mapping(data).merged(overrides)


def resolve_output_root(output_dir: Optional[str] = None) -> Path:
    """``--output-dir``, else ``$HHTK_OUTPUT_ROOT``, else ``./runs``."""
    return Path(output_dir or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)


def run_directory(config: RunConfig, output_dir: Optional[str] = None) -> Path:
    path = resolve_output_root(output_dir) / config.run_name()
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_config_used(config: RunConfig, directory: Union[str, Path]) -> Path:
    path = Path(directory) / CONFIG_FILENAME
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(config.to_mapping(), f, sort_keys=True, default_flow_style=False)
    logger.debug(f"Wrote {path}")
    return path

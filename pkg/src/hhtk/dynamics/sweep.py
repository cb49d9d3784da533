"""
Parameter sweeps over a model family.

A grid maps parameter names (model parameters or centrifugal constants
``b1..``) to value lists. Rows are computed independently, optionally in a
process pool, and returned in lexicographic grid order over the sorted
parameter names.
"""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from hhtk.dynamics.compile import field_for_system
from hhtk.dynamics.integrate import StepPolicy, integrate
from hhtk.dynamics.sections import SectionPlane, random_seeds, section_scan, section_statistic
from hhtk.errors import ConfigError, HHTKError
from hhtk.models.catalog import resolve_model
from hhtk.models.realize import RealizationSpec, build_nd_model

logger = logging.getLogger(__name__)

Grid = Dict[str, List[str]]


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"bad grid value {text!r}") from e


def parse_grid_axis(text: str) -> Tuple[str, List[str]]:
    """``name=start:stop:step`` (stop included) or ``name=v1,v2,...``."""
    name, sep, body = text.partition('=')
    name = name.strip()
    if not sep or not name:
        raise ConfigError(f"grid axis must look like name=values, got {text!r}")
    if ':' in body:
        parts = body.split(':')
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {body!r}")
        start, stop, step = (_fraction(p) for p in parts)
        if step <= 0:
            raise ConfigError(f"range step must be positive, got {step}")
        values = []
        v = start
        while v <= stop:
            values.append(str(v))
            v += step
    else:
        values = [v.strip() for v in body.split(',') if v.strip()]
    if not values:
        raise ConfigError(f"grid axis {name!r} has no values")
    return name, values


def parse_grid(axes: Iterable[str]) -> Grid:
    grid: Grid = {}
    for text in axes:
        name, values = parse_grid_axis(text)
        if name in grid:
            raise ConfigError(f"grid axis {name!r} given twice")
        grid[name] = values
    return grid


def grid_points(grid: Mapping[str, Sequence[str]]) -> List[Tuple[Tuple[str, str], ...]]:
    """Every grid point, lexicographic in the sorted axis names."""
    names = sorted(grid)
    return [tuple(zip(names, combo)) for combo in itertools.product(*(grid[k] for k in names))]


@dataclass(frozen=True)
class SweepTask:
    model_id: str
    n: int
    x0: Tuple[float, ...]
    duration: float
    policy: StepPolicy = field(default_factory=StepPolicy)
    parameters: Tuple[Tuple[str, str], ...] = ()
    centrifugal: Tuple[str, ...] = ()
    coordinates: Tuple[Tuple[str, str], ...] = ()
    energy: Optional[float] = None
    plane: SectionPlane = field(default_factory=SectionPlane)
    seeds: int = 4
    seed: int = 0

    def resolved(self) -> Tuple[Dict[str, str], List[str]]:
        params = dict(self.parameters)
        b = list(self.centrifugal) or ['0'] * (self.n - 1)
        for name, value in self.coordinates:
            if name.startswith('b') and name[1:].isdigit():
                i = int(name[1:])
                if not 1 <= i < self.n:
                    raise ConfigError(f"centrifugal constant {name} needs 1 <= i < N={self.n}")
                b[i - 1] = value
            else:
                params[name] = value
        return params, b


def result_columns(n: int, with_section: bool) -> List[str]:
    drifts = ['driftH', 'driftI'] + [f"driftC{m}" for m in range(2, n)]
    return drifts + (['section'] if with_section else [])


def run_task(task: SweepTask) -> Dict[str, object]:
    """One grid row. Failures are recorded in the status column."""
    row: Dict[str, object] = dict(task.coordinates)
    columns = result_columns(task.n, task.energy is not None)
    row.update({name: '' for name in columns})
    try:
        params, b = task.resolved()
        model = resolve_model(task.model_id, params, exact=False)
        spec = RealizationSpec.with_values(task.n, [_fraction(v) for v in b])
        system = build_nd_model(model, spec, allow_quasi=True)
        fld = field_for_system(system)
        traj = integrate(fld, task.x0, task.duration, task.policy, model.model_id)
        for name, value in traj.drift_summary().items():
            row[f"drift{name}"] = value
        row['status'] = traj.status.value
        if task.energy is not None:
            states = random_seeds(fld, task.energy, task.plane, task.seeds, task.seed)
            section = section_scan(fld, states, task.duration, task.plane, task.policy, model.model_id)
            row['section'] = section_statistic(section).aggregate
    except HHTKError as e:
        logger.warning(f"Sweep row {dict(task.coordinates)} failed: {e}")
        row['status'] = f"error: {e}"
    return row


def sweep(
    base: SweepTask,
    grid: Mapping[str, Sequence[str]],
    workers: int = 1,
) -> List[Dict[str, object]]:
    """Rows for every grid point in deterministic order."""
    points = grid_points(grid)
    if not points:
        raise ConfigError('empty grid')
    tasks = [replace(base, coordinates=coords) for coords in points]
    logger.info(f"Sweeping {base.model_id} over {len(tasks)} grid points with {workers} workers")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_task, tasks))
    else:
        rows = [run_task(t) for t in tasks]
    failed = sum(1 for r in rows if str(r.get('status', '')) != 'completed')
    if failed:
        logger.warning(f"{failed} of {len(rows)} sweep rows did not complete")
    return rows

"""
Poincare sections.

Crossings of a plane ``x_k = value`` are detected on stored samples by a
sign change in the crossing direction and refined with Brent's method on
the cubic Hermite interpolant built from the states and their exact time
derivatives.
"""

import logging
import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from hhtk.dynamics.compile import CompiledField
from hhtk.dynamics.integrate import StepPolicy, Trajectory, integrate
from hhtk.errors import ConfigError

logger = logging.getLogger(__name__)

SECTION_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SectionPlane:
    """``variable = value`` crossed upward (direction +1) or downward (-1)."""

    variable: str = 'q1'
    value: float = 0.0
    direction: int = 1

    @classmethod
    def parse(cls, text: str) -> 'SectionPlane':
        """``q1=0``, ``q2=0.5,-`` or ``p1=0,+``."""
        body, _, sign = text.partition(',')
        variable, sep, value = body.partition('=')
        if not sep:
            raise ConfigError(f"section plane must look like 'q1=0[,+|-]', got {text!r}")
        sign = sign.strip() or '+'
        if sign not in ('+', '-'):
            raise ConfigError(f"crossing direction must be + or -, got {sign!r}")
        return cls(variable.strip(), float(value), 1 if sign == '+' else -1)

    def index(self, n: int) -> int:
        kind, digits = self.variable[:1], self.variable[1:]
        if kind not in ('q', 'p') or not digits.isdigit() or not 1 <= int(digits) <= n:
            raise ConfigError(f"section variable {self.variable!r} is not one of q1..q{n}, p1..p{n}")
        i = int(digits) - 1
        return i if kind == 'q' else n + i

    def conjugate_index(self, n: int) -> int:
        k = self.index(n)
        return k + n if k < n else k - n

    def describe(self) -> str:
        return f"{self.variable}={self.value:g},{'+' if self.direction > 0 else '-'}"


@dataclass
class SectionPoints:
    plane: SectionPlane
    n: int
    points: np.ndarray
    times: np.ndarray
    residuals: np.ndarray
    orbits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def status(self) -> str:
        return 'ok' if len(self.points) else 'no-crossings'

    def columns(self) -> List[str]:
        n = self.n
        names = ['orbit', 't'] + [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
        return names + ['residual']

    def rows(self) -> List[List[object]]:
        out = []
        for k in range(len(self.points)):
            row: List[object] = [int(self.orbits[k]), float(self.times[k])]
            row.extend(float(v) for v in self.points[k])
            row.append(float(self.residuals[k]))
            out.append(row)
        return out

    def projected(self) -> np.ndarray:
        """Points without the plane variable and its conjugate."""
        drop = {self.plane.index(self.n), self.plane.conjugate_index(self.n)}
        keep = [k for k in range(2 * self.n) if k not in drop]
        return self.points[:, keep]

    @classmethod
    def merge(cls, sections: Sequence['SectionPoints']) -> 'SectionPoints':
        if not sections:
            raise ValueError('nothing to merge')
        first = sections[0]
        width = 2 * first.n
        return cls(
            first.plane,
            first.n,
            np.vstack([s.points.reshape(-1, width) for s in sections]),
            np.concatenate([s.times for s in sections]),
            np.concatenate([s.residuals for s in sections]),
            np.concatenate([s.orbits for s in sections]).astype(int),
        )


def _derivatives(traj: Trajectory, fld: Optional[CompiledField]) -> np.ndarray:
    if fld is not None:
        return np.array([fld.vector_field(0.0, x) for x in traj.states])
    return np.gradient(traj.states, traj.times, axis=0, edge_order=2)


def poincare(
    traj: Trajectory,
    plane: Optional[SectionPlane] = None,
    fld: Optional[CompiledField] = None,
    derivatives: Optional[np.ndarray] = None,
    orbit: int = 0,
) -> SectionPoints:
    """Section points of one trajectory.

    Derivatives come from ``derivatives`` when given, else from the compiled
    field, else from second-order finite differences of the samples.
    """
    plane = plane or SectionPlane()
    n = traj.states.shape[1] // 2
    k_var = plane.index(n)
    dx = derivatives if derivatives is not None else _derivatives(traj, fld)
    s = (traj.states[:, k_var] - plane.value) * plane.direction
    hits = np.nonzero((s[:-1] <= 0.0) & (s[1:] > 0.0))[0]

    points, times, residuals = [], [], []
    for k in hits:
        t0, t1 = traj.times[k], traj.times[k + 1]
        spline = CubicHermiteSpline([t0, t1], traj.states[k:k + 2], dx[k:k + 2])

        def offset(t: float) -> float:
            return float(spline(t)[k_var]) - plane.value

        if s[k] == 0.0:
            t_star = float(t0)
        else:
            t_star = brentq(offset, t0, t1, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        state = np.asarray(spline(t_star), dtype=float)
        residual = abs(state[k_var] - plane.value)
        if residual >= SECTION_TOLERANCE:
            logger.warning(f"Dropping crossing at t={t_star:.6g}: residual {residual:.2e}")
            continue
        points.append(state)
        times.append(t_star)
        residuals.append(residual)

    if not points:
        logger.warning(f"No crossings of {plane.describe()} in orbit {orbit}")
    return SectionPoints(
        plane,
        n,
        np.array(points).reshape(-1, 2 * n),
        np.array(times, dtype=float),
        np.array(residuals, dtype=float),
        np.full(len(points), orbit, dtype=int),
    )


def energy_shell_seeds(
    fld: CompiledField,
    energy: float,
    plane: SectionPlane,
    seeds: Sequence[Mapping[str, float]],
) -> List[np.ndarray]:
    """States on ``H = energy`` inside the section plane.

    Each seed fixes the coordinates other than the plane variable and its
    conjugate; the conjugate is solved from the energy for a unit-mass
    kinetic term, with the sign that moves through the plane in the crossing
    direction. Seeds outside the energy surface are skipped.
    """
    n = fld.n
    k_var, k_conj = plane.index(n), plane.conjugate_index(n)
    if k_var >= n:
        raise ConfigError('energy-shell seeds need a position plane such as q1=0')
    names = [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    states = []
    for seed in seeds:
        x = np.zeros(2 * n)
        for name, value in seed.items():
            if name not in names:
                raise ConfigError(f"seed coordinate {name!r} is not a phase-space variable")
            x[names.index(name)] = float(value)
        x[k_var] = plane.value
        x[k_conj] = 0.0
        if not fld.admissible(x):
            logger.debug(f"Seed {dict(seed)} violates a singular guard")
            continue
        excess = energy - fld.energy(x)
        if excess < 0:
            logger.debug(f"Seed {dict(seed)} lies outside H={energy:g}")
            continue
        x[k_conj] = plane.direction * np.sqrt(2.0 * excess)
        states.append(x)
    return states


def random_seeds(
    fld: CompiledField,
    energy: float,
    plane: SectionPlane,
    count: int,
    seed: int = 0,
    box: float = 1.0,
    attempts: int = 10000,
) -> List[np.ndarray]:
    """``count`` energy-shell states drawn uniformly from a box in the free coordinates."""
    rng = random.Random(seed)
    n = fld.n
    drop = {plane.index(n), plane.conjugate_index(n)}
    names = [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    free = [names[k] for k in range(2 * n) if k not in drop]
    out: List[np.ndarray] = []
    for _ in range(attempts):
        if len(out) >= count:
            break
        candidate = {name: rng.uniform(-box, box) for name in free}
        out.extend(energy_shell_seeds(fld, energy, plane, [candidate]))
    if len(out) < count:
        logger.warning(f"Only {len(out)} of {count} seeds found on H={energy:g}")
    return out


def section_scan(
    fld: CompiledField,
    states: Sequence[np.ndarray],
    duration: float,
    plane: Optional[SectionPlane] = None,
    policy: Optional[StepPolicy] = None,
    model_id: str = '',
) -> SectionPoints:
    """Integrate every initial state and merge their sections, one orbit id per state."""
    plane = plane or SectionPlane()
    sections = []
    for orbit, x0 in enumerate(states):
        traj = integrate(fld, x0, duration, policy, model_id)
        if not traj.completed:
            logger.warning(f"Orbit {orbit} ended {traj.status.value}; keeping its crossings")
        sections.append(poincare(traj, plane, fld, orbit=orbit))
    if not sections:
        return SectionPoints(plane, fld.n, np.zeros((0, 2 * fld.n)), np.zeros(0), np.zeros(0))
    return SectionPoints.merge(sections)


@dataclass(frozen=True)
class SectionStatistic:
    """Local curve residual per orbit; the aggregate is the maximum over orbits."""

    per_orbit: Dict[int, float]
    aggregate: float
    k: int = 8


def local_curve_residual(points: np.ndarray, k: int = 8) -> np.ndarray:
    """``sqrt(l_min / (l_min + l_max))`` of the covariance of each point's neighbourhood.

    Near zero for points on a smooth curve, of order 0.5 for area-filling sets.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] < 2 or len(points) <= k:
        return np.zeros(0)
    tree = cKDTree(points)
    _, neighbours = tree.query(points, k=k + 1)
    out = np.empty(len(points))
    for i, idx in enumerate(neighbours):
        local = points[idx] - points[idx].mean(axis=0)
        eig = np.linalg.eigvalsh(local.T @ local / len(idx))
        total = eig[0] + eig[-1]
        out[i] = np.sqrt(max(eig[0], 0.0) / total) if total > 0 else 0.0
    return out


def section_statistic(section: SectionPoints, k: int = 8) -> SectionStatistic:
    projected = section.projected()
    per_orbit: Dict[int, float] = {}
    for orbit in sorted(set(int(o) for o in section.orbits)):
        values = local_curve_residual(projected[section.orbits == orbit], k)
        if len(values):
            per_orbit[orbit] = float(np.median(values))
        else:
            logger.debug(f"Orbit {orbit} has too few crossings for k={k}")
    aggregate = max(per_orbit.values()) if per_orbit else float('nan')
    return SectionStatistic(per_orbit, aggregate, k)


CALIBRATION_POLICY = StepPolicy(method='rk45', dt=0.05, rtol=1e-8, atol=1e-10)
CONTRAST_FACTOR = 10.0


@dataclass
class SectionCalibration:
    """Calibration pair, run settings and the gates of the section statistic.

    ``calibrated`` is set once the gates come from a measurement rather than
    from the shipped defaults.
    """

    integrable_model: str
    chaotic_model: str
    energy: float
    duration: float
    seeds: int
    seed: int
    k: int = 8
    statistic: str = 'local_pca_curve_residual'
    integrable_max: float = 0.05
    chaotic_min: float = 0.2
    separation_min: float = CONTRAST_FACTOR
    calibrated: bool = False
    integrable_measured: Optional[float] = None
    chaotic_measured: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'SectionCalibration':
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown calibration keys: {', '.join(unknown)}")
        return cls(**data)  # type: ignore[arg-type]

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    def separates(self, integrable: float, chaotic: float) -> bool:
        return (
            integrable < self.integrable_max
            and chaotic > self.chaotic_min
            and chaotic >= self.separation_min * integrable
        )

    def record(self, integrable: float, chaotic: float) -> None:
        """Store a measurement and gate at twice the integrable and half the chaotic value.

        Raises:
            ConfigError: if the pair is not separated by ``CONTRAST_FACTOR``
        """
        if not integrable > 0 or chaotic < CONTRAST_FACTOR * integrable:
            raise ConfigError(
                f"calibration pair not separated: integrable {integrable:.3g}, chaotic {chaotic:.3g}"
            )
        self.integrable_measured = integrable
        self.chaotic_measured = chaotic
        self.integrable_max = 2.0 * integrable
        self.chaotic_min = 0.5 * chaotic
        self.separation_min = CONTRAST_FACTOR
        self.calibrated = True


def calibration_statistic(
    fld: CompiledField,
    calibration: SectionCalibration,
    box: float = 0.5,
    policy: Optional[StepPolicy] = None,
) -> float:
    """Aggregate curve residual of seeded ``q1 = 0`` sections at the calibration energy."""
    plane = SectionPlane('q1')
    states = random_seeds(fld, calibration.energy, plane, calibration.seeds, seed=calibration.seed, box=box)
    section = section_scan(fld, states, calibration.duration, plane, policy or CALIBRATION_POLICY)
    return section_statistic(section, calibration.k).aggregate

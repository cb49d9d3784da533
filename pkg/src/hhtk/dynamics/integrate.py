"""
Integration of Hamilton's equations with conserved-quantity monitoring.

Two integrators are provided:

    verlet  Stormer-Verlet on the split H = T(p) + V(q), fixed step
    rk45    scipy's embedded Runge-Kutta 4(5), adaptive step

Runs never raise on a singular or escaping state; the returned Trajectory
records how the run ended.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from hhtk.dynamics.compile import CompiledField
from hhtk.errors import Blowup, ConfigError, NonSeparable, SingularApproach

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e12


class RunStatus(str, Enum):
    COMPLETED = 'completed'
    SINGULAR = 'singular'
    BLOWUP = 'blowup'


@dataclass(frozen=True)
class StepPolicy:
    """How a run advances. ``sample_every`` thins the stored Verlet steps."""

    method: str = 'verlet'
    dt: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-12
    sample_every: int = 1
    blowup: float = BLOWUP_THRESHOLD

    def __post_init__(self) -> None:
        if self.method not in ('verlet', 'rk45'):
            raise ConfigError(f"unknown integrator {self.method!r} (expected verlet or rk45)")
        if not self.dt > 0:
            raise ConfigError(f"time step must be positive, got {self.dt}")
        if self.sample_every < 1:
            raise ConfigError('sample_every must be at least 1')

    def halved(self) -> 'StepPolicy':
        return replace(self, dt=self.dt / 2, sample_every=self.sample_every * 2)

    def describe(self) -> str:
        if self.method == 'verlet':
            return f"verlet dt={self.dt:g}"
        return f"rk45 rtol={self.rtol:g} atol={self.atol:g}"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    drift: Dict[str, np.ndarray] = field(default_factory=dict)
    status: RunStatus = RunStatus.COMPLETED
    message: str = ''
    model_id: str = ''
    n: int = 0
    policy: StepPolicy = field(default_factory=StepPolicy)
    elapsed: float = 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def completed(self) -> bool:
        return self.status is RunStatus.COMPLETED

    def max_drift(self, name: str) -> float:
        series = self.drift.get(name)
        if series is None or not len(series):
            return float('nan')
        return float(np.max(series))

    def drift_summary(self) -> Dict[str, float]:
        return {name: self.max_drift(name) for name in self.drift}

    def columns(self) -> List[str]:
        n = self.n or self.states.shape[1] // 2
        names = ['t'] + [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
        names += [f"drift{name}" for name in self.drift]
        return names + ['status']

    def rows(self) -> List[List[object]]:
        """Table rows; the status column is set on the last row only."""
        out = []
        last = len(self.times) - 1
        for k, t in enumerate(self.times):
            row: List[object] = [float(t)]
            row.extend(float(v) for v in self.states[k])
            row.extend(float(series[k]) for series in self.drift.values())
            row.append(self.status.value if k == last else '')
            out.append(row)
        return out


def relative_drift(values: np.ndarray) -> np.ndarray:
    """``|F(t) - F(0)| / max(1, |F(0)|)``."""
    values = np.asarray(values, dtype=float)
    return np.abs(values - values[0]) / max(1.0, abs(float(values[0])))


def attach_drift(traj: Trajectory, fld: CompiledField, names: Optional[Sequence[str]] = None) -> Trajectory:
    """Evaluate the monitored quantities at every stored state."""
    columns = traj.states.T
    for name in names or _ordered(fld.quantities):
        values = np.asarray(fld.quantity(name, columns), dtype=float)
        values = np.broadcast_to(values, (len(traj.times),))
        traj.drift[name] = relative_drift(values)
    return traj


def _ordered(quantities: Dict[str, object]) -> List[str]:
    head = [name for name in ('H', 'I') if name in quantities]
    rest = sorted(
        (name for name in quantities if name not in head),
        key=lambda s: (len(s), s),
    )
    return head + rest


def _escaped(x: np.ndarray, threshold: float) -> bool:
    return not bool(np.all(np.isfinite(x))) or float(np.max(np.abs(x))) > threshold


def _verlet(fld: CompiledField, x0: np.ndarray, duration: float, policy: StepPolicy) -> Trajectory:
    if not fld.separable:
        raise NonSeparable('Stormer-Verlet needs H = T(p) + V(q); use the rk45 integrator')
    n = fld.n
    steps = max(1, math.ceil(duration / policy.dt - 1e-9))
    h = duration / steps
    q = np.array(x0[:n], dtype=float)
    p = np.array(x0[n:], dtype=float)
    times = [0.0]
    states = [np.concatenate([q, p])]
    status, message = RunStatus.COMPLETED, ''

    x = np.concatenate([q, p])
    dq = np.asarray(fld.dq_fn(x), dtype=float)
    with np.errstate(divide='raise', invalid='raise', over='raise'):
        for k in range(1, steps + 1):
            try:
                p_half = p - 0.5 * h * dq
                q = q + h * np.asarray(fld.dp_fn(np.concatenate([q, p_half])), dtype=float)
                x = np.concatenate([q, p_half])
                fld.check(x)
                dq = np.asarray(fld.dq_fn(x), dtype=float)
                p = p_half - 0.5 * h * dq
            except SingularApproach as e:
                status, message = RunStatus.SINGULAR, f"t={k * h:.6g}: {e}"
                break
            except (FloatingPointError, ZeroDivisionError) as e:
                status = RunStatus.BLOWUP if 'overflow' in str(e) else RunStatus.SINGULAR
                message = f"t={k * h:.6g}: {e}"
                break
            x = np.concatenate([q, p])
            if _escaped(x, policy.blowup):
                status, message = RunStatus.BLOWUP, f"t={k * h:.6g}: |x| exceeded {policy.blowup:g}"
                break
            if k % policy.sample_every == 0 or k == steps:
                times.append(k * h)
                states.append(x)
    return Trajectory(np.array(times), np.array(states), status=status, message=message, n=n, policy=policy)


def _rk45(fld: CompiledField, x0: np.ndarray, duration: float, policy: StepPolicy) -> Trajectory:
    events = []
    for guard in fld.guards:
        def hit(t: float, x: np.ndarray, g=guard) -> float:
            return g.margin(x) - fld.epsilon
        hit.terminal = True  # type: ignore[attr-defined]
        events.append(hit)

    def escape(t: float, x: np.ndarray) -> float:
        return policy.blowup - float(np.max(np.abs(x)))
    escape.terminal = True  # type: ignore[attr-defined]
    events.append(escape)

    sample = policy.dt * policy.sample_every
    count = max(1, math.ceil(duration / sample - 1e-9))
    t_eval = np.linspace(0.0, duration, count + 1)
    with np.errstate(all='ignore'):
        sol = solve_ivp(
            fld.vector_field,
            (0.0, duration),
            np.asarray(x0, dtype=float),
            method='RK45',
            t_eval=t_eval,
            rtol=policy.rtol,
            atol=policy.atol,
            events=events,
        )
    times = np.asarray(sol.t)
    states = np.asarray(sol.y).T
    status, message = RunStatus.COMPLETED, ''
    if sol.status == 1:
        fired = [i for i, te in enumerate(sol.t_events) if len(te)]
        index = fired[0] if fired else len(events) - 1
        t_hit = float(sol.t_events[index][0]) if fired else float(times[-1])
        if index == len(events) - 1:
            status, message = RunStatus.BLOWUP, f"t={t_hit:.6g}: |x| exceeded {policy.blowup:g}"
        else:
            status = RunStatus.SINGULAR
            message = f"t={t_hit:.6g}: {fld.guards[index].label} reached epsilon"
    elif sol.status == -1:
        status, message = RunStatus.BLOWUP, sol.message
    if not len(times):
        times, states = np.array([0.0]), np.asarray(x0, dtype=float)[None, :]
    finite = np.all(np.isfinite(states), axis=1)
    if not finite.all():
        keep = int(np.argmin(finite))
        times, states = times[:keep], states[:keep]
        status = RunStatus.BLOWUP
    return Trajectory(times, states, status=status, message=message, n=fld.n, policy=policy)


def integrate(
    fld: CompiledField,
    x0: Sequence[float],
    duration: float,
    policy: Optional[StepPolicy] = None,
    model_id: str = '',
) -> Trajectory:
    """Integrate from ``x0`` over ``[0, duration]`` and attach drift series.

    Raises:
        SingularApproach: if ``x0`` itself violates a singular guard
        NonSeparable: if Stormer-Verlet is requested for a mixed Hamiltonian
    """
    policy = policy or StepPolicy()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (fld.dimension,):
        raise ConfigError(f"initial state needs {fld.dimension} values, got {x0.size}")
    if duration <= 0:
        raise ConfigError(f"duration must be positive, got {duration}")
    fld.check(x0)
    if _escaped(x0, policy.blowup):
        raise Blowup('initial state is not finite')

    logger.info(f"Integrating {model_id or 'field'} N={fld.n} T={duration:g} with {policy.describe()}")
    start = time.perf_counter()
    if policy.method == 'verlet':
        traj = _verlet(fld, x0, duration, policy)
    else:
        traj = _rk45(fld, x0, duration, policy)
    traj.model_id = model_id
    traj.elapsed = time.perf_counter() - start
    attach_drift(traj, fld)
    if traj.completed:
        logger.info(f"Integration completed in {traj.elapsed:.2f}s, {len(traj.times)} samples")
    else:
        logger.warning(f"Integration ended {traj.status.value}: {traj.message}")
    return traj


def reverse_momenta(x: np.ndarray, n: int) -> np.ndarray:
    out = np.array(x, dtype=float)
    out[n:] = -out[n:]
    return out


def reversibility_error(
    fld: CompiledField,
    x0: Sequence[float],
    duration: float,
    policy: Optional[StepPolicy] = None,
) -> float:
    """Distance to ``x0`` after integrating forward, reversing momenta and integrating again."""
    policy = policy or StepPolicy()
    forward = integrate(fld, x0, duration, policy)
    if not forward.completed:
        _raise_for(forward)
    back = integrate(fld, reverse_momenta(forward.final_state, fld.n), duration, policy)
    if not back.completed:
        _raise_for(back)
    returned = reverse_momenta(back.final_state, fld.n)
    return float(np.max(np.abs(returned - np.asarray(x0, dtype=float))))


def convergence_ratio(
    fld: CompiledField,
    x0: Sequence[float],
    duration: float,
    policy: Optional[StepPolicy] = None,
    quantity: str = 'H',
) -> float:
    """Ratio of maximal drift at ``dt`` to maximal drift at ``dt / 2``."""
    policy = policy or StepPolicy()
    coarse = integrate(fld, x0, duration, policy).max_drift(quantity)
    fine = integrate(fld, x0, duration, policy.halved()).max_drift(quantity)
    logger.info(f"Step halving on {quantity}: {coarse:.3e} -> {fine:.3e}")
    return coarse / fine if fine > 0 else float('inf')


def drift_trend(traj: Trajectory, name: str = 'H') -> float:
    """Slope of a linear fit of the drift series against time."""
    values = np.asarray(traj.drift[name])
    if len(values) < 2:
        return 0.0
    slope, _ = np.polyfit(traj.times, values, 1)
    return float(slope)


def _raise_for(traj: Trajectory) -> None:
    if traj.status is RunStatus.BLOWUP:
        raise Blowup(f"run escaped: {traj.message}")
    raise SingularApproach(f"run ended singular: {traj.message}")

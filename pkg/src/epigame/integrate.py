"""Fixed-step RK4 integration with timescale separation.

The behavioural coordinates of a state evolve ``1/epsilon`` times faster than
the epidemic ones; the epidemic time stays the simulation clock. Every step
is projected back onto the unit box, tolerating only round-off sized
excursions.

The model simulators (:func:`simulate_sis`, :func:`simulate_siri`) step the
behavioural fractions in log-odds form. The ODE is the same, but a fraction
driven towards 0 or 1 no longer rounds onto the invariant boundary and stays
stuck there, which would suppress the delayed switching of fast behaviour.
The generic :func:`simulate` and :func:`rk4_step` work on raw coordinates.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, StepSizeError
from .model import (SIMPLEX_TOL, SiriParams, SisParams, VanillaSiriParams, expit, logit, siri_logodds_rhs, sis_logodds_rhs,
                    thresholds)

Field = Callable[[np.ndarray], np.ndarray]

# behavioural coordinates by state dimension
FAST_COORDS = {3: slice(1, 3), 6: slice(3, 6)}

SIS_COLUMNS = ("y", "z_S", "z_I")
SIRI_COLUMNS = ("s", "y", "r", "z_S", "z_I", "z_R")


def default_dt(epsilon: float) -> float:
    """Step size used when none is given: 0.05, shrunk to ``epsilon/2`` for
    fast behaviour so that ``dt/epsilon`` stays inside the RK4 stability
    region of the logistic replicator terms."""
    return 0.05 if epsilon >= 0.1 else min(0.05, epsilon / 2)


@dataclass(frozen=True)
class IntegrationConfig:
    dt: float = 0.05
    t_end: float = 2000.0
    epsilon: float = 1.0
    projection_tol: float = 1e-9
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValueError(f"t_end must be at least dt, got t_end={self.t_end}, dt={self.dt}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.projection_tol >= 0:
            raise ValueError("projection_tol must be non-negative")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")

    @classmethod
    def for_epsilon(cls, epsilon: float, **kwargs) -> "IntegrationConfig":
        kwargs.setdefault("dt", default_dt(epsilon))
        return cls(epsilon=epsilon, **kwargs)

    @property
    def n_steps(self) -> int:
        return math.ceil(self.t_end / self.dt - 1e-9)


class Event(NamedTuple):
    time: float
    surface: str
    direction: int  # +1 upward crossing, -1 downward


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one run. Arrays are read-only."""

    times: np.ndarray
    states: np.ndarray
    columns: tuple[str, ...]
    events: tuple[Event, ...] = ()
    modes: Optional[tuple[str, ...]] = None
    z_eq: Optional[np.ndarray] = None
    meta: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        for arr in (self.times, self.states, self.z_eq):
            if arr is not None:
                arr.setflags(write=False)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        """Render as CSV: ``t`` plus one column per coordinate, 17 significant
        digits; hybrid runs add ``mode`` and ``z_eq``."""
        buf = io.StringIO()
        header = ["t", *self.columns]
        if self.modes is not None:
            header += ["mode", "z_eq"]
        buf.write(",".join(header) + "\n")
        for i, t in enumerate(self.times):
            row = [_fmt(t), *(_fmt(v) for v in self.states[i])]
            if self.modes is not None:
                z = self.z_eq[i]
                row += [self.modes[i], "" if math.isnan(z) else _fmt(z)]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def read_trajectory_csv(text: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Parse the numeric columns written by :meth:`Trajectory.to_csv`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = tuple(lines[0].split(","))
    numeric = [i for i, h in enumerate(header) if h not in ("mode", "z_eq")]
    rows = [[float(ln.split(",")[i]) for i in numeric] for ln in lines[1:]]
    return tuple(header[i] for i in numeric), np.array(rows)


class WindowStats(NamedTuple):
    mean: float
    max_deviation: float
    lo: float
    hi: float


def window_stats(traj: Trajectory, name: str, start: float, stop: float | None = None) -> WindowStats:
    t = traj.times
    stop = t[-1] if stop is None else stop
    sel = (t >= start) & (t <= stop)
    v = traj[name][sel]
    m = float(v.mean())
    return WindowStats(m, float(np.max(np.abs(v - m))), float(v.min()), float(v.max()))


def final_window(traj: Trajectory, name: str, fraction: float = 0.1) -> WindowStats:
    """Statistics of ``name`` over the last ``fraction`` of the horizon."""
    t_end = traj.times[-1]
    return window_stats(traj, name, t_end * (1.0 - fraction))


def _scaled(field: Field, n: int, epsilon: float, fast) -> Field:
    """Wrap ``field`` so that it maps float lists to float lists with the
    behavioural components divided by ``epsilon``."""
    if fast is None:
        fast = FAST_COORDS.get(n, slice(0, 0))
        if epsilon != 1.0 and n not in FAST_COORDS:
            raise ValueError(f"no default behavioural coordinates for dimension {n}; pass fast=")
    scale = [1.0] * n
    for i in range(n)[fast] if isinstance(fast, slice) else fast:
        scale[i] = 1.0 / epsilon
    if epsilon == 1.0:
        return lambda x: [float(v) for v in field(x)]
    return lambda x: [float(v) * c for v, c in zip(field(x), scale)]


def _rk4(f, x: list, dt: float) -> list:
    h2 = 0.5 * dt
    k1 = f(x)
    k2 = f([a + h2 * b for a, b in zip(x, k1)])
    k3 = f([a + h2 * b for a, b in zip(x, k2)])
    k4 = f([a + dt * b for a, b in zip(x, k3)])
    h6 = dt / 6.0
    return [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]


def _project(x: list, tol: float, t: float) -> list:
    if all(0.0 <= v <= 1.0 for v in x):
        return x
    if any(math.isnan(v) or v < -tol or v > 1.0 + tol for v in x):
        raise StepSizeError(
            f"state left [0,1] (min {min(x):.3g}, max {max(x):.3g}); "
            "use a smaller dt or a larger epsilon", t)
    return [min(max(v, 0.0), 1.0) for v in x]


def rk4_step(field: Field, state, dt: float, epsilon: float = 1.0, *, fast=None,
             projection_tol: float = 1e-9, t: float = 0.0) -> np.ndarray:
    """One classical RK4 step with the behavioural derivatives divided by
    ``epsilon``, followed by projection onto the unit box.

    ``fast`` selects the behavioural coordinates; by default the last two of a
    3-vector (SIS) or the last three of a 6-vector (SIRI). ``t`` only labels
    a :class:`StepSizeError`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    x = [float(v) for v in np.ravel(state)]
    f = _scaled(field, len(x), epsilon, fast)
    return np.array(_project(_rk4(f, x, dt), projection_tol, t + dt))


def detect_events(times: np.ndarray, y: np.ndarray, surfaces: dict[str, float]) -> list[Event]:
    """One event per sign change of ``y - level`` between consecutive
    samples, timed by linear interpolation."""
    events = []
    for name, level in surfaces.items():
        if not math.isfinite(level):
            continue
        g = y - level
        signs = np.sign(g).astype(int).tolist()
        last_sign, last_i = 0, 0
        for i, sgn in enumerate(signs):
            if sgn == 0:
                continue
            if last_sign and sgn != last_sign:
                g0, g1 = g[last_i], g[i]
                t = times[last_i] + (times[i] - times[last_i]) * g0 / (g0 - g1)
                events.append(Event(float(t), name, sgn))
            last_sign, last_i = sgn, i
    events.sort(key=lambda e: e.time)
    return events


def integrate(rhs, state0, config: IntegrationConfig, *, logodds=None) -> tuple[np.ndarray, np.ndarray]:
    """Run the fixed-step loop for a right-hand side that maps float lists to
    float lists and already includes any timescale scaling.

    ``logodds`` (a slice) marks coordinates that ``rhs`` takes in log-odds
    form; they are converted on entry and back on every record, and only the
    remaining coordinates are projected.
    """
    x = [float(v) for v in state0]
    if not all(0.0 <= v <= 1.0 for v in x):
        raise ValueError(f"initial state outside the unit box: {x}")
    dt, tol, stride = config.dt, config.projection_tol, config.record_stride
    n_steps = config.n_steps
    times, states = [0.0], [x]
    if logodds is None:
        for k in range(1, n_steps + 1):
            x = _project(_rk4(rhs, x, dt), tol, k * dt)
            if k % stride == 0 or k == n_steps:
                times.append(k * dt)
                states.append(x)
        return np.array(times), np.array(states)

    lo, hi = logodds.start, logodds.stop
    x = x[:lo] + [logit(v) for v in x[lo:hi]] + x[hi:]
    for k in range(1, n_steps + 1):
        x = _rk4(rhs, x, dt)
        x[:lo] = _project(x[:lo], tol, k * dt)
        if k % stride == 0 or k == n_steps:
            times.append(k * dt)
            states.append(x[:lo] + [expit(u) for u in x[lo:hi]] + x[hi:])
    return np.array(times), np.array(states)


def simulate(field: Field, state0, config: IntegrationConfig, *, surfaces: dict[str, float] | None = None,
             y_index: int = 0, fast=None, columns: Sequence[str] | None = None) -> Trajectory:
    """Integrate ``field`` from ``state0`` over ``[0, config.t_end]``.

    Crossings of the prevalence coordinate ``y_index`` through each level in
    ``surfaces`` are logged as events.
    """
    n = len(state0)
    f = _scaled(field, n, config.epsilon, fast)
    return _trajectory(f, state0, config, surfaces, y_index, columns or [f"x{i}" for i in range(n)])


def _trajectory(rhs, state0, config, surfaces, y_index, columns, logodds=None) -> Trajectory:
    times, states = integrate(rhs, state0, config, logodds=logodds)
    events = detect_events(times, states[:, y_index], surfaces or {})
    return Trajectory(times, states, tuple(columns), tuple(events),
                      meta={"epsilon": config.epsilon, "dt": config.dt})


def simulate_sis(p: SisParams, state0, config: IntegrationConfig) -> Trajectory:
    th = thresholds(p)
    return _trajectory(sis_logodds_rhs(p, config.epsilon), state0, config, {"y_int": th.y_int}, 0,
                       SIS_COLUMNS, logodds=FAST_COORDS[3])


def simulate_siri(p: SiriParams, state0, config: IntegrationConfig) -> Trajectory:
    s, y, r = state0[:3]
    if abs(s + y + r - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"initial compartments sum to {s + y + r!r}, not 1")
    th = thresholds(p)
    return _trajectory(siri_logodds_rhs(p, config.epsilon), state0, config,
                       {"y_int": th.y_int, "y_hat_int": th.y_hat_int}, 1, SIRI_COLUMNS, logodds=FAST_COORDS[6])


def simulate_siri_vanilla(p: VanillaSiriParams, state0, config: IntegrationConfig) -> Trajectory:
    """SIRI epidemic without behaviour; ``config.epsilon`` has no effect."""
    s, y, r = state0
    if abs(s + y + r - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"initial compartments sum to {s + y + r!r}, not 1")
    b, bh, g = p.beta, p.beta_hat, p.gamma

    def rhs(x):
        s, y, r = x
        new_inf, re_inf, recov = b * s * y, bh * r * y, g * y
        return [-new_inf, new_inf + re_inf - recov, recov - re_inf]

    return _trajectory(rhs, state0, config, None, 1, ("s", "y", "r"))


def delta_f(state, p: SisParams) -> float:
    """Payoff advantage of staying unprotected for a susceptible,
    ``F_SU - F_SP``. Positive values drive ``z_S`` to 1."""
    y, _, z_I = state
    return p.c_P - p.L * (1.0 - p.alpha) * (p.beta_u * z_I + p.beta_p * (1.0 - z_I)) * y

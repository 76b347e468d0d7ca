"""Reduced slow dynamics in the limit of instantaneous behavioural response.

With behaviour at its fast equilibrium the epidemic follows a piecewise
smooth field that switches where susceptibles (``y = y_int``) or recovered
individuals (``y = y_hat_int``) become indifferent to protection. On a
switching surface the dynamics are the Filippov convexification of the two
adjacent branches; when both branches push towards the surface the
trajectory slides along it with the *equivalent control*, the convex weight
that makes the flow tangent.

Reduced states are ``y`` for SIS and ``(y, r)`` for SIRI; recorded SIRI
trajectories carry ``(s, y, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import ChatteringError, NoSlidingError, VariantError
from .integrate import IntegrationConfig, Trajectory, Event
from .model import SiriParams, SisParams, thresholds

GRAZING_TOL = 1e-12
CROSSING_TOL = 1e-10
MAX_BISECTIONS = 40
MAX_TRANSITIONS = 10_000

VARIANTS = ("sis", "siri-strong", "siri-weak")


class Inclusion(NamedTuple):
    """Endpoints of the set-valued field on a switching surface: the
    branch with the switched fraction fully protected (``z = 0``) and fully
    unprotected (``z = 1``). Every convex combination is admissible."""

    protected: Union[float, tuple]
    unprotected: Union[float, tuple]


class HybridMode(NamedTuple):
    region: str
    sliding: bool
    equivalent_control: Optional[float] = None

    @property
    def label(self) -> str:
        return f"slide:{self.region}" if self.sliding else self.region


class ReducedOutcome(NamedTuple):
    case_id: int
    limit: float
    monotone: bool
    sliding_limit: bool
    condition: str


def _blend(z: float, alpha: float) -> float:
    return z + alpha * (1.0 - z)


def reduced_sis_field(y: float, p: SisParams, surface_tol: float = GRAZING_TOL):
    """Slow SIS field; an :class:`Inclusion` when ``y`` sits on ``y_int``."""
    th = thresholds(p)

    def branch(z_S):
        return ((1.0 - y) * p.beta_p * _blend(z_S, p.alpha) - p.gamma) * y

    if abs(y - th.y_int) <= surface_tol:
        return Inclusion(branch(0.0), branch(1.0))
    return branch(1.0 if y < th.y_int else 0.0)


def _siri_rates(y: float, r: float, z_S: float, z_R: float, p: SiriParams) -> tuple[float, float]:
    s = 1.0 - y - r
    a = p.alpha
    recovered_risk = _blend(z_R, a) * p.beta_hat_p * r
    return ((_blend(z_S, a) * p.beta_p * s + recovered_risk - p.gamma) * y,
            (p.gamma - recovered_risk) * y)


def _check_variant(p: SiriParams, strong: bool):
    if strong and not p.beta_p > p.beta_hat_p:
        raise VariantError("strengthened-immunity field needs β_p > β̂_p; use the weak variant")
    if not strong and not p.beta_p < p.beta_hat_p:
        raise VariantError("compromised-immunity field needs β_p < β̂_p; use the strong variant")


def _reduced_siri_field(y, r, p: SiriParams, surface_tol):
    th = thresholds(p)
    z_S = 1.0 if y < th.y_int else 0.0
    z_R = 1.0 if y < th.y_hat_int else 0.0
    if abs(y - th.y_int) <= surface_tol:
        return Inclusion(_siri_rates(y, r, 0.0, z_R, p), _siri_rates(y, r, 1.0, z_R, p))
    if abs(y - th.y_hat_int) <= surface_tol:
        return Inclusion(_siri_rates(y, r, z_S, 0.0, p), _siri_rates(y, r, z_S, 1.0, p))
    return _siri_rates(y, r, z_S, z_R, p)


def reduced_siri_strong_field(y: float, r: float, p: SiriParams, surface_tol: float = GRAZING_TOL):
    """``(ẏ, ṙ)`` of the reduced SIRI system when infection strengthens
    immunity (``y_int < y_hat_int``)."""
    _check_variant(p, strong=True)
    return _reduced_siri_field(y, r, p, surface_tol)


def reduced_siri_weak_field(y: float, r: float, p: SiriParams, surface_tol: float = GRAZING_TOL):
    """``(ẏ, ṙ)`` of the reduced SIRI system when infection compromises
    immunity (``y_hat_int < y_int``)."""
    _check_variant(p, strong=False)
    return _reduced_siri_field(y, r, p, surface_tol)


def _weight_for_balance(v_protected: float, v_unprotected: float) -> float:
    # ẏ is affine in the switched fraction z; solve ẏ(z) = 0
    return v_protected / (v_protected - v_unprotected)


def sliding_control_sis(p: SisParams, tol: float = 1e-12) -> float:
    """Equivalent control ``z_S`` that holds ``y`` on ``y_int``."""
    th = thresholds(p)
    if not (th.y_p - tol <= th.y_int <= th.y_u + tol):
        raise NoSlidingError(
            f"y_int={th.y_int:.6g} is not between y_p={th.y_p:.6g} and y_u={th.y_u:.6g}")
    lo = reduced_sis_field(th.y_int, p, surface_tol=math.inf)
    return min(max(_weight_for_balance(lo.protected, lo.unprotected), 0.0), 1.0)


def sliding_control_siri(surface: str, y_surface: float, r: float, p: SiriParams,
                         tol: float = 1e-12) -> float:
    """Equivalent control on ``surface`` (``"y_int"`` for ``z_S``,
    ``"y_hat_int"`` for ``z_R``) at ``(y_surface, r)``."""
    th = thresholds(p)
    if surface == "y_int":
        z_R = 1.0 if y_surface < th.y_hat_int else 0.0
        v0 = _siri_rates(y_surface, r, 0.0, z_R, p)[0]
        v1 = _siri_rates(y_surface, r, 1.0, z_R, p)[0]
    elif surface == "y_hat_int":
        z_S = 1.0 if y_surface < th.y_int else 0.0
        v0 = _siri_rates(y_surface, r, z_S, 0.0, p)[0]
        v1 = _siri_rates(y_surface, r, z_S, 1.0, p)[0]
    else:
        raise ValueError(f"unknown surface {surface!r}")
    # attractive: unprotected side (below) rises, protected side (above) falls
    if not (v1 >= -tol and v0 <= tol) or v0 == v1:
        raise NoSlidingError(f"surface {surface} is not attractive at y={y_surface:.6g}, r={r:.6g}")
    return min(max(_weight_for_balance(v0, v1), 0.0), 1.0)


@dataclass(frozen=True)
class _Surface:
    name: str
    level: float
    control: int  # 0 -> z_S, 1 -> z_R


class _ReducedSystem:
    """Regions, switching surfaces and branch fields of one reduced model."""

    def __init__(self, variant: str, p: SisParams):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        self.p = p
        self.siri = variant != "sis"
        th = thresholds(p)
        if self.siri:
            _check_variant(p, strong=variant == "siri-strong")
            cands = [_Surface("y_int", th.y_int, 0), _Surface("y_hat_int", th.y_hat_int, 1)]
        else:
            cands = [_Surface("y_int", th.y_int, 0)]
        self.surfaces = sorted((s for s in cands if s.level < 1.0), key=lambda s: s.level)
        n = len(self.surfaces)
        self.region_names = {1: ("low", "high"), 2: ("low", "mid", "high")}.get(n, ("all",))
        levels = [-math.inf] + [s.level for s in self.surfaces] + [math.inf]
        self.bounds = [(levels[k], levels[k + 1]) for k in range(n + 1)]
        self.branches = [self._branch(k) for k in range(n + 1)]
        self.region_modes = [HybridMode(name, False, None) for name in self.region_names]

    def _branch(self, k: int):
        """Smooth field of region ``k`` with its controls folded in."""
        z_S, z_R = self.controls(k)
        p = self.p
        if self.siri:
            return lambda x: list(_siri_rates(x[0], x[1], z_S, z_R, p))
        c, g = p.beta_p * _blend(z_S, p.alpha), p.gamma
        return lambda x: [((1.0 - x[0]) * c - g) * x[0]]

    def controls(self, k: int) -> list[float]:
        z = [1.0, 1.0]
        for s in self.surfaces[:k]:
            z[s.control] = 0.0
        return z

    def rates(self, x, z) -> list[float]:
        p = self.p
        if self.siri:
            return list(_siri_rates(x[0], x[1], z[0], z[1], p))
        y = x[0]
        return [((1.0 - y) * p.beta_p * _blend(z[0], p.alpha) - p.gamma) * y]

    def region_of(self, y: float) -> int:
        return sum(1 for s in self.surfaces if y > s.level)

    def one_sided(self, x, j: int) -> tuple[float, float]:
        """ẏ on surface ``j`` from below (unprotected) and above (protected)."""
        z = self.controls(j)
        c = self.surfaces[j].control
        z_up = list(z)
        z_up[c] = 0.0
        return self.rates(x, z)[0], self.rates(x, z_up)[0]

    def equivalent_control(self, x, j: int) -> float:
        below, above = self.one_sided(x, j)
        if below == above:
            return math.nan
        return _weight_for_balance(above, below)

    def sliding_rhs(self, j: int):
        c = self.surfaces[j].control

        def rhs(x):
            z = self.controls(j)
            z[c] = self.equivalent_control(x, j)
            d = self.rates(x, z)
            d[0] = 0.0
            return d

        return rhs


def _rk4(f, x, h):
    h2 = 0.5 * h
    if len(x) == 1:
        y = x[0]
        k1 = f(x)[0]
        k2 = f([y + h2 * k1])[0]
        k3 = f([y + h2 * k2])[0]
        k4 = f([y + h * k3])[0]
        return [y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)]
    k1 = f(x)
    k2 = f([a + h2 * b for a, b in zip(x, k1)])
    k3 = f([a + h2 * b for a, b in zip(x, k2)])
    k4 = f([a + h * b for a, b in zip(x, k3)])
    h6 = h / 6.0
    return [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]


def _bisect(pred, h_max: float) -> float:
    """Smallest ``h`` in ``(0, h_max]`` where ``pred`` flips to true, to
    within the crossing tolerance. ``pred(h_max)`` must be true."""
    lo, hi = 0.0, h_max
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= CROSSING_TOL:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


class _HybridRun:
    def __init__(self, system: _ReducedSystem):
        self.sys = system
        self.sliding_on: Optional[int] = None
        self.region = 0
        self.transitions = 0
        self.events: list[Event] = []

    def mode(self, x) -> HybridMode:
        if self.sliding_on is not None:
            s = self.sys.surfaces[self.sliding_on]
            return HybridMode(s.name, True, self.sys.equivalent_control(x, self.sliding_on))
        return self.sys.region_modes[self.region]

    def settle(self, x, j: int, t: float, came_from: Optional[int]):
        """Decide what happens at surface ``j``: slide or enter a region."""
        below, above = self.sys.one_sided(x, j)
        if abs(below) <= GRAZING_TOL:
            target = j
        elif abs(above) <= GRAZING_TOL:
            target = j + 1
        elif below > 0 and above < 0:
            self.sliding_on = j
            self.transitions = 0
            self.events.append(Event(t, self.sys.surfaces[j].name, 0))
            return
        elif below > 0 and above > 0:
            target = j + 1
        elif below < 0 and above < 0:
            target = j
        else:  # repelling surface, only reachable from an initial condition
            target = j if came_from is None else came_from
        self._count_transition(t)
        if came_from is not None and target != came_from:
            self.events.append(Event(t, self.sys.surfaces[j].name, 1 if target > j else -1))
        self.sliding_on = None
        self.region = target

    def _count_transition(self, t):
        self.transitions += 1
        if self.transitions > MAX_TRANSITIONS:
            raise ChatteringError(
                f"more than {MAX_TRANSITIONS} surface transitions without sliding by t={t:.6g}; "
                "reduce dt")

    def advance(self, x, h: float, t: float):
        """Advance by ``h``; returns the new state and the time consumed."""
        sys = self.sys
        if self.sliding_on is not None:
            j = self.sliding_on
            rhs = sys.sliding_rhs(j)
            x_new = _rk4(rhs, x, h)
            z = sys.equivalent_control(x_new, j)
            if 0.0 <= z <= 1.0:
                return x_new, h

            def escaped(hh):
                zz = sys.equivalent_control(_rk4(rhs, x, hh), j)
                return not (0.0 <= zz <= 1.0)

            h_exit = _bisect(escaped, h)
            x_new = _rk4(rhs, x, h_exit)
            below, above = sys.one_sided(x_new, j)
            # z_eq > 1: even the unprotected branch falls, so leave downwards
            self.region = j if below <= 0 else j + 1
            self.sliding_on = None
            self._count_transition(t + h_exit)
            self.events.append(Event(t + h_exit, sys.surfaces[j].name, 1 if self.region > j else -1))
            return x_new, h_exit

        k = self.region
        rhs = sys.branches[k]
        x_new = _rk4(rhs, x, h)
        lo, hi = sys.bounds[k]
        if lo <= x_new[0] <= hi:
            return x_new, h
        j = k - 1 if x_new[0] < lo else k
        level = sys.surfaces[j].level
        if j == k:
            h_cross = _bisect(lambda hh: _rk4(rhs, x, hh)[0] > level, h)
        else:
            h_cross = _bisect(lambda hh: _rk4(rhs, x, hh)[0] < level, h)
        x_new = _rk4(rhs, x, h_cross)
        x_new[0] = level
        self.settle(x_new, j, t + h_cross, came_from=k)
        return x_new, h_cross


def _initial(variant: str, state0) -> list[float]:
    v = np.atleast_1d(np.asarray(state0, dtype=float)).tolist()
    if variant == "sis":
        if len(v) != 1 or not 0 <= v[0] <= 1:
            raise ValueError(f"reduced SIS state is a single y in [0,1], got {state0!r}")
    else:
        if len(v) != 2 or min(v) < 0 or v[0] + v[1] > 1 + 1e-12:
            raise ValueError(f"reduced SIRI state is (y, r) with y, r >= 0 and y + r <= 1, got {state0!r}")
    return v


def simulate_hybrid(variant: str, p: SisParams, state0, config: IntegrationConfig) -> Trajectory:
    """Filippov solution of a reduced system on the grid ``k * config.dt``.

    Smooth stretches use RK4 on the active branch; surface crossings are
    located by bisection on the step length, the state is placed on the
    surface and the one-sided fields decide between crossing and sliding.
    While sliding ``y`` is frozen and the remaining coordinates follow the
    equivalent-control field until that control leaves ``[0, 1]``.

    ``config.epsilon`` is ignored: this is the ``epsilon -> 0`` limit.
    """
    system = _ReducedSystem(variant, p)
    x = _initial(variant, state0)
    run = _HybridRun(system)
    run.region = system.region_of(x[0])
    for j, s in enumerate(system.surfaces):
        if x[0] == s.level and x[0] > 0:
            run.settle(x, j, 0.0, came_from=None)

    dt, stride, n_steps = config.dt, config.record_stride, config.n_steps
    times, states, modes = [0.0], [list(x)], [run.mode(x)]
    k = 1
    while k <= n_steps:
        t0 = (k - 1) * dt
        remaining, x_prev, mode_prev = dt, x, (run.region, run.sliding_on)
        while remaining > 1e-15:
            x, used = run.advance(x, remaining, t0 + dt - remaining)
            remaining -= used
        if x == x_prev and (run.region, run.sliding_on) == mode_prev:
            # bitwise fixed point of the step map: every later step repeats it
            m = run.mode(x)
            for kk in range(k, n_steps + 1):
                if kk % stride == 0 or kk == n_steps:
                    times.append(kk * dt)
                    states.append(list(x))
                    modes.append(m)
            break
        if k % stride == 0 or k == n_steps:
            times.append(k * dt)
            states.append(list(x))
            modes.append(run.mode(x))
        k += 1

    arr = np.array(states)
    if system.siri:
        arr = np.column_stack([1.0 - arr[:, 0] - arr[:, 1], arr[:, 0], arr[:, 1]])
        columns = ("s", "y", "r")
    else:
        columns = ("y",)
    z_eq = np.array([m.equivalent_control if m.sliding else math.nan for m in modes])
    return Trajectory(np.array(times), arr, columns, tuple(run.events),
                      modes=tuple(m.label for m in modes), z_eq=z_eq,
                      meta={"variant": variant, "dt": dt, "hybrid_modes": tuple(modes)})


def classify_reduced_sis(p: SisParams) -> ReducedOutcome:
    """Long-run behaviour of the reduced SIS system for any ``y(0) > 0``.

    Boundary parameter values fall into the lower-numbered case.
    """
    th = thresholds(p)
    if th.y_u <= 0:
        return ReducedOutcome(1, 0.0, True, False, "y_u <= 0")
    if th.y_u <= th.y_int:
        return ReducedOutcome(2, th.y_u, True, False, "0 < y_u < y_int")
    if th.y_p <= th.y_int:
        return ReducedOutcome(3, th.y_int, False, True, "y_p < y_int < y_u")
    return ReducedOutcome(4, th.y_p, True, False, "y_int < y_p")

"""Parameters, payoffs, thresholds and vector fields of the coupled
epidemic/replicator systems.

State vectors are ordered as in :class:`SisState` ``(y, z_S, z_I)`` and
:class:`SiriState` ``(s, y, r, z_S, z_I, z_R)``; the ``z`` coordinates are the
*unprotected* fractions inside each disease compartment. Population states
fed to the payoff functions are ordered ``(SU, SP, IU, IP[, RU, RP])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, ParameterError

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class SisParams:
    """Rates, protection efficacy and costs of the coupled SIS game.

    ``alpha`` scales the infection probability of a protected susceptible;
    ``c_P`` is the protection cost, ``c_IU``/``c_IP`` the (constant) costs paid
    by unprotected/protected infected individuals and ``L`` the loss upon
    infection.
    """

    beta_u: float
    beta_p: float
    alpha: float
    gamma: float
    c_P: float
    c_IU: float
    c_IP: float
    L: float

    def __post_init__(self):
        self._check()

    def _check(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} finite", (f.name,), f"got {v!r}")
        _require(self.beta_p >= 0, "β_p ≥ 0", ("beta_p",))
        _require(self.beta_u > self.beta_p, "β_u > β_p", ("beta_u", "beta_p"))
        _require(0 < self.alpha < 1, "α ∈ (0,1)", ("alpha",))
        _require(self.gamma > 0, "γ > 0", ("gamma",))
        _require(self.L > 0, "L > 0", ("L",))
        _require(self.c_P > 0, "c_P > 0", ("c_P",))
        _require(self.c_IP >= 0, "c_IP ≥ 0", ("c_IP",))
        _require(self.c_IU > self.c_IP, "c_IU > c_IP", ("c_IU", "c_IP"))

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return type(self)(**values)


@dataclass(frozen=True)
class SiriParams(SisParams):
    """SIS parameters plus the reinfection rates of recovered individuals."""

    beta_hat_u: float
    beta_hat_p: float

    def _check(self):
        super()._check()
        _require(self.beta_hat_p >= 0, "β̂_p ≥ 0", ("beta_hat_p",))
        _require(self.beta_hat_u > self.beta_hat_p, "β̂_u > β̂_p", ("beta_hat_u", "beta_hat_p"))


@dataclass(frozen=True)
class VanillaSiriParams:
    """Infection, reinfection and recovery rates of the SIRI epidemic
    without behaviour."""

    beta: float
    beta_hat: float
    gamma: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} finite", (f.name,), f"got {v!r}")
        _require(self.beta > 0, "β > 0", ("beta",))
        _require(self.beta_hat > 0, "β̂ > 0", ("beta_hat",))
        _require(self.gamma > 0, "γ > 0", ("gamma",))

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return type(self)(**values)


def _require(ok: bool, invariant: str, names: tuple[str, ...]):
    if not ok:
        raise ParameterError(invariant, names)


class SisState(NamedTuple):
    y: float
    z_S: float
    z_I: float


class SiriState(NamedTuple):
    s: float
    y: float
    r: float
    z_S: float
    z_I: float
    z_R: float


@dataclass(frozen=True)
class Thresholds:
    """Prevalence levels that organise the equilibria.

    Values are returned raw: ``y_u`` and ``y_p`` go negative when the
    corresponding endemic level does not exist, and ``y_int`` is ``inf`` when
    protection buys no risk reduction. ``y_hat_int`` is ``None`` for SIS.
    """

    y_int: float
    y_u: float
    y_p: float
    z_S_int: float
    y_hat_int: Optional[float] = None


def _indifference_level(c_P: float, L: float, alpha: float, beta: float) -> float:
    denom = L * (1.0 - alpha) * beta
    if denom <= 0.0:
        return math.inf
    return c_P / denom


def thresholds(p: SisParams) -> Thresholds:
    y_int = _indifference_level(p.c_P, p.L, p.alpha, p.beta_p)
    if p.beta_p > 0:
        y_u = 1.0 - p.gamma / p.beta_p
        y_p = 1.0 - p.gamma / (p.alpha * p.beta_p)
    else:
        y_u = y_p = -math.inf
    slack = p.beta_p * (1.0 - y_int)
    if math.isfinite(y_int) and slack != 0.0:
        z_S_int = (p.gamma / slack - p.alpha) / (1.0 - p.alpha)
    else:
        z_S_int = math.nan
    y_hat_int = None
    if isinstance(p, SiriParams):
        y_hat_int = _indifference_level(p.c_P, p.L, p.alpha, p.beta_hat_p)
    return Thresholds(y_int=y_int, y_u=y_u, y_p=y_p, z_S_int=z_S_int, y_hat_int=y_hat_int)


def _check_simplex(x: Sequence[float], n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DomainError(f"population state must have {n} entries, got shape {x.shape}")
    if np.any(x < 0.0):
        raise DomainError(f"population state has a negative entry: {x}")
    if abs(x.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"population state sums to {x.sum():.17g}, not 1")
    return x


def population_state_sis(y: float, z_S: float, z_I: float) -> np.ndarray:
    """Rebuild ``(x_SU, x_SP, x_IU, x_IP)`` from the reduced coordinates."""
    s = 1.0 - y
    return np.array([z_S * s, (1.0 - z_S) * s, z_I * y, (1.0 - z_I) * y])


def population_state_siri(s, y, r, z_S, z_I, z_R) -> np.ndarray:
    return np.array([z_S * s, (1.0 - z_S) * s, z_I * y, (1.0 - z_I) * y,
                     z_R * r, (1.0 - z_R) * r])


def payoff_sis(x: Sequence[float], p: SisParams) -> np.ndarray:
    """Payoffs ``(F_SU, F_SP, F_IU, F_IP)`` at population state ``x``."""
    x = _check_simplex(x, 4)
    risk = p.beta_u * x[2] + p.beta_p * x[3]
    return np.array([-p.L * risk, -p.c_P - p.L * p.alpha * risk, -p.c_IU, -p.c_IP])


def payoff_siri(x: Sequence[float], p: SiriParams) -> np.ndarray:
    """Payoffs ``(F_SU, F_SP, F_IU, F_IP, F_RU, F_RP)``; recovered individuals
    face the reinfection rates."""
    x = _check_simplex(x, 6)
    risk = p.beta_u * x[2] + p.beta_p * x[3]
    risk_hat = p.beta_hat_u * x[2] + p.beta_hat_p * x[3]
    return np.array([
        -p.L * risk,
        -p.c_P - p.L * p.alpha * risk,
        -p.c_IU,
        -p.c_IP,
        -p.L * risk_hat,
        -p.c_P - p.L * p.alpha * risk_hat,
    ])


def effective_beta(z_S, z_I, p: SisParams):
    return (z_S + p.alpha * (1.0 - z_S)) * (p.beta_u * z_I + p.beta_p * (1.0 - z_I))


def sis_rhs(p: SisParams, epsilon: float = 1.0):
    """Right-hand side of the coupled SIS system as a closure over plain
    floats, with the behavioural rows divided by ``epsilon``."""
    a, b_u, b_p, g = p.alpha, p.beta_u, p.beta_p, p.gamma
    c_P, drift_I = p.c_P, (p.c_IP - p.c_IU) / epsilon
    risk_loss = p.L * (1.0 - a)
    inv_eps = 1.0 / epsilon

    def rhs(x):
        y, z_S, z_I = x
        infectivity = b_u * z_I + b_p * (1.0 - z_I)
        return [
            ((1.0 - y) * (z_S + a * (1.0 - z_S)) * infectivity - g) * y,
            z_S * (1.0 - z_S) * (c_P - risk_loss * infectivity * y) * inv_eps,
            z_I * (1.0 - z_I) * drift_I,
        ]

    return rhs


def siri_rhs(p: SiriParams, epsilon: float = 1.0):
    """Closure form of :func:`field_siri` (no simplex check).

    The compartment derivatives share the two infection fluxes so that they
    cancel up to a single rounding.
    """
    a, b_u, b_p, g = p.alpha, p.beta_u, p.beta_p, p.gamma
    bh_u, bh_p = p.beta_hat_u, p.beta_hat_p
    c_P, drift_I = p.c_P, (p.c_IP - p.c_IU) / epsilon
    risk_loss = p.L * (1.0 - a)
    inv_eps = 1.0 / epsilon

    def rhs(x):
        s, y, r, z_S, z_I, z_R = x
        infectivity = b_u * z_I + b_p * (1.0 - z_I)
        reinfectivity = bh_u * z_I + bh_p * (1.0 - z_I)
        new_inf = infectivity * (z_S + a * (1.0 - z_S)) * s * y
        re_inf = reinfectivity * (z_R + a * (1.0 - z_R)) * r * y
        recov = g * y
        return [
            -new_inf,
            new_inf + re_inf - recov,
            recov - re_inf,
            z_S * (1.0 - z_S) * (c_P - risk_loss * infectivity * y) * inv_eps,
            z_I * (1.0 - z_I) * drift_I,
            z_R * (1.0 - z_R) * (c_P - risk_loss * reinfectivity * y) * inv_eps,
        ]

    return rhs


def expit(u: float) -> float:
    """Logistic function without overflow; ``expit(+-inf)`` is 1 or 0."""
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def logit(z: float) -> float:
    if z <= 0.0:
        return -math.inf
    if z >= 1.0:
        return math.inf
    return math.log(z / (1.0 - z))


def sis_logodds_rhs(p: SisParams, epsilon: float = 1.0):
    """The coupled SIS system with each behavioural fraction ``z`` replaced
    by its log-odds ``u = log(z / (1 - z))``.

    The replicator ``z' = z(1-z) g / epsilon`` becomes ``u' = g / epsilon``,
    so a fraction that gets exponentially close to 0 or 1 keeps its distance
    from the boundary instead of rounding onto it (the boundary is
    invariant, so rounding would freeze it there for good).
    """
    a, b_u, b_p, g = p.alpha, p.beta_u, p.beta_p, p.gamma
    c_P, drift_I = p.c_P, (p.c_IP - p.c_IU) / epsilon
    risk_loss = p.L * (1.0 - a)
    inv_eps = 1.0 / epsilon

    def rhs(x):
        y, u_S, u_I = x
        z_S, z_I = expit(u_S), expit(u_I)
        infectivity = b_u * z_I + b_p * (1.0 - z_I)
        return [
            ((1.0 - y) * (z_S + a * (1.0 - z_S)) * infectivity - g) * y,
            (c_P - risk_loss * infectivity * y) * inv_eps,
            drift_I,
        ]

    return rhs


def siri_logodds_rhs(p: SiriParams, epsilon: float = 1.0):
    """Log-odds form of :func:`siri_rhs`; see :func:`sis_logodds_rhs`."""
    a, b_u, b_p, g = p.alpha, p.beta_u, p.beta_p, p.gamma
    bh_u, bh_p = p.beta_hat_u, p.beta_hat_p
    c_P, drift_I = p.c_P, (p.c_IP - p.c_IU) / epsilon
    risk_loss = p.L * (1.0 - a)
    inv_eps = 1.0 / epsilon

    def rhs(x):
        s, y, r, u_S, u_I, u_R = x
        z_S, z_I, z_R = expit(u_S), expit(u_I), expit(u_R)
        infectivity = b_u * z_I + b_p * (1.0 - z_I)
        reinfectivity = bh_u * z_I + bh_p * (1.0 - z_I)
        new_inf = infectivity * (z_S + a * (1.0 - z_S)) * s * y
        re_inf = reinfectivity * (z_R + a * (1.0 - z_R)) * r * y
        recov = g * y
        return [
            -new_inf,
            new_inf + re_inf - recov,
            recov - re_inf,
            (c_P - risk_loss * infectivity * y) * inv_eps,
            drift_I,
            (c_P - risk_loss * reinfectivity * y) * inv_eps,
        ]

    return rhs


def field_sis(state: Sequence[float], p: SisParams) -> np.ndarray:
    """Time derivative ``(f_y, f_S, f_I)`` of the coupled SIS system."""
    return np.array(sis_rhs(p)(state))


def field_siri(state: Sequence[float], p: SiriParams) -> np.ndarray:
    """Time derivative of ``(s, y, r, z_S, z_I, z_R)``."""
    s, y, r = state[0], state[1], state[2]
    if abs(s + y + r - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"s + y + r = {s + y + r:.17g} is off the simplex")
    return np.array(siri_rhs(p)(state))


def field_siri_vanilla(s, y, r, beta, beta_hat, gamma):
    """SIRI epidemic without behaviour. Works elementwise on arrays."""
    new_inf = beta * s * y
    re_inf = beta_hat * r * y
    recov = gamma * y
    return -new_inf, new_inf + re_inf - recov, recov - re_inf

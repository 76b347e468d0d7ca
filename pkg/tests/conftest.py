import numpy as np
import pytest

from epigame.model import SiriParams, SisParams

SIS_BASE = dict(beta_u=0.3, beta_p=0.15, alpha=0.5, gamma=0.1, c_P=1.0, c_IU=2.0, c_IP=1.0, L=80.0)
STRONG = dict(beta_u=0.4, beta_p=0.3, alpha=0.6, gamma=0.15, c_P=2.0, c_IU=2.0, c_IP=1.0, L=75.0,
              beta_hat_u=0.25, beta_hat_p=0.2)
WEAK = dict(beta_u=0.35, beta_p=0.12, alpha=0.6, gamma=0.14, c_P=2.0, c_IU=2.0, c_IP=1.0, L=125.0,
            beta_hat_u=0.4, beta_hat_p=0.25)


@pytest.fixture
def sis_params():
    return SisParams(**SIS_BASE)


@pytest.fixture
def strong_params():
    return SiriParams(**STRONG)


@pytest.fixture
def weak_params():
    return SiriParams(**WEAK)


def random_sis(rng) -> SisParams:
    beta_p = rng.uniform(0.05, 0.5)
    c_IP = rng.uniform(0.0, 2.0)
    return SisParams(beta_u=beta_p + rng.uniform(0.01, 0.5), beta_p=beta_p, alpha=rng.uniform(0.05, 0.95),
                     gamma=rng.uniform(0.01, 0.6), c_P=rng.uniform(0.1, 3.0), c_IU=c_IP + rng.uniform(0.1, 2.0),
                     c_IP=c_IP, L=rng.uniform(5.0, 200.0))


def random_siri(rng) -> SiriParams:
    q = random_sis(rng)
    bhp = rng.uniform(0.02, 0.5)
    return SiriParams(**{f: getattr(q, f) for f in SIS_BASE}, beta_hat_p=bhp, beta_hat_u=bhp + rng.uniform(0.01, 0.4))


def critical_gammas(p: SisParams):
    """Transcritical values of gamma, computed here from the raw formulas."""
    y_int = p.c_P / (p.L * (1 - p.alpha) * p.beta_p)
    return [p.alpha * p.beta_p, p.beta_p, p.beta_p * (1 - y_int), p.alpha * p.beta_p * (1 - y_int)]


def near_threshold(p: SisParams, tol=1e-6) -> bool:
    return any(abs(p.gamma - g) < tol for g in critical_gammas(p))


def random_sis_off_threshold(rng) -> SisParams:
    while True:
        p = random_sis(rng)
        if not near_threshold(p):
            return p


def table1_oracle(p: SisParams) -> dict:
    """Existence/stability pattern of E1..E4 read off the published table,
    written out row by row."""
    b, a, g = p.beta_p, p.alpha, p.gamma
    y_int = p.c_P / (p.L * (1 - a) * b)
    y_u, y_p = 1 - g / b, 1 - g / (a * b)
    if g > b:
        return {"E1": "stable", "E2": None, "E3": None, "E4": None}
    if g > a * b:
        if y_u < y_int:
            return {"E1": "unstable", "E2": "stable", "E3": None, "E4": None}
        return {"E1": "unstable", "E2": "unstable", "E3": "stable", "E4": None}
    if y_u < y_int:
        return {"E1": "unstable", "E2": "stable", "E3": None, "E4": "unstable"}
    if y_p < y_int:
        return {"E1": "unstable", "E2": "unstable", "E3": "stable", "E4": "unstable"}
    return {"E1": "unstable", "E2": "unstable", "E3": None, "E4": "stable"}


def sign_changes(values) -> int:
    d = np.sign(np.diff(np.asarray(values)))
    d = d[d != 0]
    return int(np.count_nonzero(np.diff(d)))


def prop2_case(p: SisParams) -> int:
    """Reduced SIS regime, recomputed from the raw threshold formulas."""
    y_int = p.c_P / (p.L * (1 - p.alpha) * p.beta_p)
    y_u, y_p = 1 - p.gamma / p.beta_p, 1 - p.gamma / (p.alpha * p.beta_p)
    if y_u <= 0:
        return 1
    if y_u <= y_int:
        return 2
    if y_p <= y_int:
        return 3
    return 4


def draw_sis_case(rng, case: int, margin: float = 0.02) -> SisParams:
    """Random SisParams in a given reduced regime, kept ``margin`` away
    from the case boundaries so that limits are reached in finite time."""
    while True:
        p = random_sis(rng)
        y_int = p.c_P / (p.L * (1 - p.alpha) * p.beta_p)
        y_u, y_p = 1 - p.gamma / p.beta_p, 1 - p.gamma / (p.alpha * p.beta_p)
        if prop2_case(p) != case:
            continue
        gaps = {1: [-y_u], 2: [y_u, y_int - y_u], 3: [y_u - y_int, y_int - y_p], 4: [y_p - y_int]}[case]
        if min(gaps) > margin:
            return p

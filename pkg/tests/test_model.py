import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SIS_BASE, STRONG, random_sis
from epigame.errors import DomainError, ParameterError
from epigame.model import (SiriParams, SisParams, effective_beta, field_siri, field_siri_vanilla, field_sis,
                           payoff_siri, payoff_sis, population_state_sis, thresholds)


@pytest.mark.parametrize("change, invariant", [
    (dict(beta_u=0.1), "β_u > β_p"),
    (dict(beta_p=-0.01), "β_p ≥ 0"),
    (dict(alpha=1.0), "α ∈ (0,1)"),
    (dict(alpha=0.0), "α ∈ (0,1)"),
    (dict(gamma=0.0), "γ > 0"),
    (dict(L=0.0), "L > 0"),
    (dict(c_P=0.0), "c_P > 0"),
    (dict(c_IU=1.0), "c_IU > c_IP"),
    (dict(c_IP=-0.5), "c_IP ≥ 0"),
])
def test_sis_params_name_the_violated_invariant(change, invariant):
    with pytest.raises(ParameterError) as err:
        SisParams(**{**SIS_BASE, **change})
    assert err.value.invariant == invariant
    assert invariant in str(err.value)


def test_siri_params_check_reinfection_ordering():
    with pytest.raises(ParameterError, match="β̂_u > β̂_p"):
        SiriParams(**{**STRONG, "beta_hat_u": 0.1})
    with pytest.raises(ParameterError, match="finite"):
        SisParams(**{**SIS_BASE, "gamma": math.nan})


def test_payoff_sis_examples(sis_params):
    assert np.allclose(payoff_sis((1, 0, 0, 0), sis_params), [0, -1, -2, -1])
    F = payoff_sis((0.5, 0, 0.5, 0), sis_params)
    assert F[0] == pytest.approx(-12) and F[1] == pytest.approx(-7)
    F = payoff_sis((0, 0.5, 0, 0.5), sis_params)
    assert F[0] == pytest.approx(-6) and F[1] == pytest.approx(-4)


@pytest.mark.parametrize("x", [(0.5, 0.6, 0, -0.1), (0.5, 0.5, 0.1, 0), (1, 0, 0)])
def test_payoff_rejects_points_off_the_simplex(sis_params, x):
    with pytest.raises(DomainError):
        payoff_sis(x, sis_params)


def test_payoff_siri_examples(strong_params):
    F = payoff_siri((1, 0, 0, 0, 0, 0), strong_params)
    assert F[4] == 0 and F[5] == -2
    F = payoff_siri((0.8, 0, 0.2, 0, 0, 0), strong_params)
    assert F[4] == pytest.approx(-3.75)
    F = payoff_siri((2 / 3, 0, 0, 1 / 3, 0, 0), strong_params)
    assert F[4] - F[5] == pytest.approx(0, abs=1e-12)


def test_effective_beta(sis_params):
    assert effective_beta(1, 1, sis_params) == pytest.approx(0.3)
    assert effective_beta(0, 0, sis_params) == pytest.approx(0.075)
    assert effective_beta(0.5, 0, sis_params) == pytest.approx(0.1125)


def test_field_sis_examples(sis_params):
    f = field_sis((0, 0.3, 0.4), sis_params)
    assert f[0] == 0 and f[1] == pytest.approx(0.3 * 0.7 * 1.0)
    assert field_sis((0.4, 0.3, 0.0), sis_params)[2] == 0
    assert field_sis((0.4, 0.3, 1.0), sis_params)[2] == 0
    assert np.allclose(field_sis((1 / 6, 0.6, 0), sis_params), 0, atol=1e-15)


def test_field_siri_examples(strong_params):
    assert np.all(field_siri((0.6, 0, 0.4, 0.3, 0.2, 0.1), strong_params)[:3] == 0)
    s, y, r = 0.5, 0.2, 0.3
    f = field_siri((s, y, r, 1, 0, 1), strong_params)
    assert f[1] == pytest.approx((0.3 * s + 0.2 * r - 0.15) * y, abs=1e-15)
    assert field_siri((0, 0.25, 0.75, 0.4, 0, 1), strong_params)[1] == pytest.approx(0, abs=1e-15)
    with pytest.raises(DomainError):
        field_siri((0.5, 0.2, 0.2, 0.5, 0.5, 0.5), strong_params)


def test_field_siri_vanilla_examples():
    assert field_siri_vanilla(0.7, 0, 0.3, 0.3, 0.5, 0.1) == (0, 0, 0)
    g, bh = 0.1, 0.4
    assert np.allclose(field_siri_vanilla(0, 1 - g / bh, g / bh, 0.3, bh, g), 0, atol=1e-16)
    s, y, r, b = 0.5, 0.2, 0.3, 0.25
    assert field_siri_vanilla(s, y, r, b, b, g)[1] == pytest.approx((b * (1 - y) - g) * y)


def test_thresholds_examples(sis_params, strong_params):
    th = thresholds(sis_params)
    assert (th.y_int, th.y_u, th.y_p, th.z_S_int) == pytest.approx((1 / 6, 1 / 3, -1 / 3, 0.6))
    assert th.y_hat_int is None
    th = thresholds(strong_params)
    assert th.y_int == pytest.approx(2 / 9) and th.y_hat_int == pytest.approx(1 / 3)
    assert th.y_int < th.y_hat_int


def test_thresholds_sentinels(sis_params):
    assert thresholds(sis_params.replace(beta_p=0.0)).y_int == math.inf
    near_useless = [thresholds(sis_params.replace(alpha=1 - 10.0 ** -k)).y_int for k in (2, 5, 9)]
    assert near_useless == sorted(near_useless) and near_useless[-1] > 1e7


def test_weak_experiment_threshold_is_not_a_quarter(weak_params):
    # the text quotes 0.25; the formula gives 1/3 for beta_p = 0.12 and 4/15 for 0.15
    assert thresholds(weak_params).y_int == pytest.approx(1 / 3)
    assert thresholds(weak_params.replace(beta_p=0.15)).y_int == pytest.approx(4 / 15)
    assert thresholds(weak_params).y_hat_int == pytest.approx(0.16)


def test_boundary_invariance_random_draws():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        p = random_sis(rng)
        z_S, z_I = rng.uniform(size=2)
        assert field_sis((1, z_S, z_I), p)[0] <= 0
        assert field_sis((0, z_S, z_I), p)[0] == 0
        for b in (0.0, 1.0):
            y = rng.uniform()
            assert field_sis((y, b, z_I), p)[1] == 0
            assert field_sis((y, z_S, b), p)[2] == 0


def test_replicator_matches_payoff_difference():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p = random_sis(rng)
        y, z_S, z_I = rng.uniform(size=3)
        F = payoff_sis(population_state_sis(y, z_S, z_I), p)
        assert field_sis((y, z_S, z_I), p)[1] == pytest.approx(z_S * (1 - z_S) * (F[0] - F[1]), abs=1e-12)


unit = st.floats(0, 1)


@settings(max_examples=300, deadline=None)
@given(unit, unit, unit, unit, unit)
def test_siri_compartments_conserve_mass(a, b, z_S, z_I, z_R):
    p = SiriParams(**STRONG)
    s = a
    y = (1 - a) * b
    r = 1 - s - y
    f = field_siri((s, y, r, z_S, z_I, z_R), p)
    assert abs(f[0] + f[1] + f[2]) <= 1e-14


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit, unit)
def test_siri_reduces_to_sis_when_reinfection_equals_infection(a, b, z, z_I):
    q = SisParams(**SIS_BASE)
    p = SiriParams(**SIS_BASE, beta_hat_u=q.beta_u, beta_hat_p=q.beta_p)
    y = b
    s = (1 - y) * a
    r = 1 - y - s
    assert field_siri((s, y, r, z, z_I, z), p)[1] == pytest.approx(field_sis((y, z, z_I), q)[0], abs=1e-12)

import json
import math

import numpy as np
import pytest

from conftest import random_sis, random_sis_off_threshold, random_siri, table1_oracle
from epigame.equilibria import (
    NONHYPERBOLIC, STABLE, UNSTABLE, eigen3, eigen_verdict, reports_to_json, render_table, siri_fast_equilibria,
    siri_strong_classify, siri_weak_classify, sis_equilibria, sis_jacobian, table1_row, vanilla_siri_classify,
)
from epigame.errors import VariantError
from epigame.hybrid import simulate_hybrid
from epigame.integrate import IntegrationConfig
from epigame.model import field_sis, thresholds


def _by_label(reports):
    return {r.label: r for r in reports}


def test_fig2_parameters_have_interior_attractor(sis_params):
    eq = _by_label(sis_equilibria(sis_params))
    e3 = eq["E3"]
    assert e3.exists and e3.stability == STABLE and e3.eigen_stability == STABLE
    assert e3.coordinates == pytest.approx((1 / 6, 0.6, 0.0), abs=1e-12)
    assert eq["E1"].stability == UNSTABLE and eq["E2"].stability == UNSTABLE
    assert not eq["E4"].exists and eq["E4"].violated
    assert eq["E0"].exists and eq["E0"].stability == UNSTABLE


def test_high_recovery_leaves_disease_free_point(sis_params):
    eq = _by_label(sis_equilibria(sis_params.replace(gamma=0.2)))
    assert [r.label for r in eq.values() if r.exists] == ["E0", "E1"]
    assert eq["E1"].stability == STABLE


def test_low_recovery_gives_fully_protected_endemic_point(sis_params):
    eq = _by_label(sis_equilibria(sis_params.replace(gamma=0.05)))
    assert eq["E4"].exists and eq["E4"].stability == STABLE
    assert eq["E4"].coordinates == pytest.approx((1 / 3, 0.0, 0.0), abs=1e-12)


def test_jacobian_at_corner_points(sis_params):
    p = sis_params
    assert np.allclose(sis_jacobian((0, 0, 0), p), np.diag([0.075 - 0.1, 1.0, -1.0]), atol=1e-15)
    assert np.allclose(sis_jacobian((0, 1, 0), p), np.diag([0.15 - 0.1, -1.0, -1.0]), atol=1e-15)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(21)
    h = 1e-6
    for _ in range(100):
        p = random_sis(rng)
        x = rng.uniform(0, 1, size=3)
        fd = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[:, j] = (field_sis(x + e, p) - field_sis(x - e, p)) / (2 * h)
        assert np.max(np.abs(fd - sis_jacobian(x, p))) < 1e-5


def test_eigen3_examples(sis_params):
    assert eigen3(np.eye(3)) == pytest.approx((1, 1, 1))
    ev = eigen3(sis_jacobian((0, 0, 0), sis_params))
    assert sorted(z.real for z in ev) == pytest.approx([-1.0, -0.025, 1.0], abs=1e-14)
    companion = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    roots = sorted(eigen3(companion), key=lambda z: (z.real, z.imag))
    expect = sorted([1, complex(-0.5, math.sqrt(3) / 2), complex(-0.5, -math.sqrt(3) / 2)],
                    key=lambda z: (z.real, z.imag))
    assert np.allclose(roots, expect, atol=1e-10)


def test_eigen3_residual_bound_and_numpy_agreement():
    rng = np.random.default_rng(9)
    for _ in range(2000):
        A = rng.normal(size=(3, 3)) * 10 ** rng.uniform(-3, 3)
        ev = eigen3(A)
        bound = 1e-8 * (1 + np.linalg.norm(A) ** 3)
        for lam in ev:
            assert abs(np.linalg.det(A - lam * np.eye(3))) < bound
        ref = sorted(np.linalg.eigvals(A), key=lambda z: (z.real, z.imag))
        assert np.allclose(sorted(ev, key=lambda z: (z.real, z.imag)), ref,
                           atol=1e-7 * (1 + np.linalg.norm(A)))


def test_eigen_verdict():
    assert eigen_verdict([-1, -2, complex(-0.1, 3)]) == STABLE
    assert eigen_verdict([-1, 0.5, -2]) == UNSTABLE
    assert eigen_verdict([-1, 1e-12, -2]) == NONHYPERBOLIC
    assert eigen_verdict([1e-12, 0.5, -2]) == UNSTABLE


def test_table1_existence_and_stability_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        p = random_sis_off_threshold(rng)
        want = table1_oracle(p)
        eq = _by_label(sis_equilibria(p))
        for label, verdict in want.items():
            r = eq[label]
            assert r.exists == (verdict is not None), (label, p)
            if r.exists:
                assert r.stability == verdict, (label, p)
                assert r.eigen_stability == verdict, (label, p)
        stable = [lab for lab in want if eq[lab].exists and eq[lab].stability == STABLE]
        assert stable == [table1_row(p)]


def test_existing_equilibria_are_zeros_of_the_field():
    rng = np.random.default_rng(77)
    for _ in range(500):
        p = random_sis(rng)
        for r in sis_equilibria(p):
            if r.exists:
                assert np.max(np.abs(field_sis(r.coordinates, p))) < 1e-12


def test_vanilla_regimes():
    degenerate = vanilla_siri_classify(0.05, 0.05, 0.1)
    assert math.isnan(degenerate.M) and "SIS" in degenerate.notice
    ep = vanilla_siri_classify(2.0, 0.5, 1.0)
    assert ep.regime == "epidemic" and ep.M == pytest.approx(1 / 3)
    bi = vanilla_siri_classify(0.8, 2.0, 1.0)
    M = (1 - 2) / (0.8 - 2)
    assert bi.regime == "bistable" and bi.M == pytest.approx(5 / 6)
    assert bi.basin_threshold == pytest.approx(1 - M * (0.8 * M) ** (-0.4))
    assert vanilla_siri_classify(2.0, 3.0, 1.0).regime == "endemic"
    assert vanilla_siri_classify(0.5, 0.9, 1.0).regime == "infection-free"
    with pytest.raises(ValueError):
        vanilla_siri_classify(0.0, 1.0, 1.0)


def test_fast_behavioural_equilibria(strong_params):
    assert siri_fast_equilibria(0.0, strong_params) == (1.0, 0.0, 1.0)
    assert siri_fast_equilibria(0.3, strong_params) == (0.0, 0.0, 1.0)
    assert siri_fast_equilibria(2 / 9, strong_params)[0] is None
    with pytest.raises(ValueError):
        siri_fast_equilibria(1.5, strong_params)


@pytest.mark.parametrize("gamma,case,limit", [(0.15, 3, 0.25), (0.1, 4, 1 / 3), (0.078, 5, 0.35)])
def test_strong_classifier_examples(strong_params, gamma, case, limit):
    rep = siri_strong_classify(strong_params.replace(gamma=gamma))
    assert rep.case_id == case
    assert rep.attractor_y == pytest.approx(limit, abs=1e-12)
    assert rep.ife_stability == "none" and not rep.bistable


def test_strong_classifier_upper_cases(strong_params):
    assert siri_strong_classify(strong_params.replace(gamma=0.35)).ife_stability == "all"
    rep = siri_strong_classify(strong_params.replace(gamma=0.25))
    assert rep.case_id == 2 and rep.ife_stability == "r>bound"
    assert rep.ife_bound == pytest.approx((0.3 - 0.25) / (0.3 - 0.2))


def test_weak_classifier_examples(weak_params):
    rep = siri_weak_classify(weak_params)
    assert rep.case_id == 3 and rep.bistable
    assert rep.ife_bound == pytest.approx((0.12 - 0.14) / (0.12 - 0.25), abs=1e-12)
    assert rep.attractor_y == pytest.approx(0.16, abs=1e-12)
    rep = siri_weak_classify(weak_params.replace(beta_p=0.15))
    assert not rep.bistable and rep.ife_stability == "none"
    rep = siri_weak_classify(weak_params.replace(gamma=0.3))
    assert rep.case_id == 1 and rep.ife_stability == "all"


def test_classifiers_reject_wrong_variant(strong_params, weak_params):
    with pytest.raises(VariantError):
        siri_strong_classify(weak_params)
    with pytest.raises(VariantError):
        siri_weak_classify(strong_params)


def test_json_and_table_rendering(sis_params, weak_params):
    data = json.loads(reports_to_json(sis_equilibria(sis_params)))
    assert [d["label"] for d in data] == ["E0", "E1", "E2", "E3", "E4"]
    assert data[3]["stability"] == "stable"
    case = json.loads(reports_to_json(siri_weak_classify(weak_params)))
    assert case["case_id"] == 3 and case["bistable"] is True
    table = render_table(sis_equilibria(sis_params))
    assert table.count("\n") >= 6 and "E3" in table


def _draw_siri_case(rng, classify, strong, case):
    while True:
        p = random_siri(rng)
        if (p.beta_p > p.beta_hat_p) != strong or p.beta_p == p.beta_hat_p:
            continue
        rep = classify(p)
        if rep.case_id != case:
            continue
        # keep away from the case boundaries so the limit is reached in time
        g, bh, a = p.gamma, p.beta_hat_p, p.alpha
        yh = thresholds(p).y_hat_int
        edges = [p.beta_p, bh, bh * (1 - yh), a * bh * (1 - yh)]
        if min(abs(g - e) for e in edges) > 0.01 and yh < 0.95:
            return p, rep


@pytest.mark.parametrize("case", [1, 2, 3, 4, 5])
def test_strong_classifier_agrees_with_reduced_simulation(case):
    rng = np.random.default_rng(40 + case)
    for _ in range(3):
        p, rep = _draw_siri_case(rng, siri_strong_classify, True, case)
        tr = simulate_hybrid("siri-strong", p, (0.2, 0.01), IntegrationConfig(t_end=5000.0, record_stride=50))
        assert abs(tr.states[-1, 1] - rep.attractor_y) < 0.01, (p, rep.case_id)


@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_weak_classifier_agrees_with_reduced_simulation_near_attractor(case):
    rng = np.random.default_rng(60 + case)
    for _ in range(3):
        p, rep = _draw_siri_case(rng, siri_weak_classify, False, case)
        y0 = max(rep.attractor_y + rng.uniform(-0.005, 0.005), 0.001)
        r0 = 1 - y0 - 0.005 if case > 1 else 0.3
        tr = simulate_hybrid("siri-weak", p, (y0, r0), IntegrationConfig(t_end=5000.0, record_stride=50))
        assert abs(tr.states[-1, 1] - rep.attractor_y) < 0.01, (p, rep.case_id)

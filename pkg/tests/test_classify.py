"""Branch-equation roots, regimes, and the directional measure."""

import numpy as np
import pytest

from conelab.classify import (
    LABEL_BRANCHES,
    LABEL_MIXED,
    LABEL_NO_CONTACT,
    LABEL_ZERO_ONLY,
    REGIME_CRITICAL,
    REGIME_SUBCRITICAL,
    REGIME_SUPERCRITICAL,
    branch_residual,
    classify_point,
    mean_direction,
    solve_branch_equation,
    solve_nu_p1,
    zero_root_residual,
)
from conelab.errors import DimensionMismatch, ZeroShapeOperator
from conelab.potential import ConicalPotential, singular_geometry


def P(doc):
    return ConicalPotential.from_dict(doc)


def geom_of(doc, sigma=None):
    pot = P(doc)
    return singular_geometry(pot, np.zeros(pot.d) if sigma is None else sigma)


EX1 = {"V_S": "x1/2", "F": "1", "g": ["x1"], "d": 1}
EX2 = {"V_S": "x1/2", "F": "-1", "g": ["x1"], "d": 1}
EX3 = {"V_S": "x1", "F": "1", "g": ["x1"], "d": 1}
EX4 = {"V_S": "x1", "F": "-(1+x1)", "g": ["x1"], "d": 1}
EX5 = {"V_S": "2*x1", "F": "1", "g": ["x1"], "d": 1}
EX6 = {"V_S": "-2*x1", "F": "-1", "g": ["x1/2", "x2", "x3"], "d": 3}
EX7 = {"V_S": "-2*x1", "F": "-1", "g": ["x1/3", "x2", "x3"], "d": 3}
ABS_X = {"V_S": "0", "F": "1", "g": ["x1"], "d": 1}


def test_branch_roots_one_dimensional_catalog():
    assert solve_branch_equation(geom_of(EX1)).empty
    roots2 = solve_branch_equation(geom_of(EX2))
    assert sorted(r[0] for r in roots2.nonzero_roots) == pytest.approx([-1.5, 0.5])
    roots3 = solve_branch_equation(geom_of(EX3))
    assert roots3.nonzero_roots == []
    assert [w[0] for w in roots3.zero_root_directions] == pytest.approx([-1.0])
    roots4 = solve_branch_equation(geom_of(EX4))
    assert [r[0] for r in roots4.nonzero_roots] == pytest.approx([-2.0])
    assert [w[0] for w in roots4.zero_root_directions] == pytest.approx([1.0])


def test_branch_roots_codimension_three():
    roots6 = solve_branch_equation(geom_of(EX6))
    assert len(roots6.nonzero_roots) == 1
    assert roots6.nonzero_roots[0] == pytest.approx([2.5, 0.0, 0.0], abs=1e-12)
    assert roots6.root_manifold_samples == []

    roots7 = solve_branch_equation(geom_of(EX7))
    fit = roots7.manifold_fit
    assert fit is not None
    assert fit.center == pytest.approx([2.25, 0.0, 0.0], abs=1e-12)
    assert fit.radius**2 == pytest.approx(7.0 / 16.0, abs=1e-12)
    assert len(roots7.root_manifold_samples) == 256
    # the continuum coexists with the isolated on-axis root
    assert len(roots7.nonzero_roots) == 1
    assert roots7.nonzero_roots[0] == pytest.approx([7.0 / 3.0, 0.0, 0.0], abs=1e-12)


def test_all_reported_roots_verify_to_tolerance():
    for doc in (EX1, EX2, EX3, EX4, EX5, EX6, EX7, ABS_X):
        geom = geom_of(doc)
        roots = solve_branch_equation(geom)
        for rho in roots.nonzero_roots + roots.root_manifold_samples:
            assert branch_residual(geom, rho) <= 1e-10
        for omega in roots.zero_root_directions:
            assert zero_root_residual(geom, omega) <= 1e-10


def test_regimes_and_labels():
    cases = {
        "ex1": (EX1, REGIME_SUPERCRITICAL, LABEL_NO_CONTACT),
        "ex2": (EX2, REGIME_SUPERCRITICAL, LABEL_BRANCHES),
        "ex3": (EX3, REGIME_CRITICAL, LABEL_ZERO_ONLY),
        "ex4": (EX4, REGIME_CRITICAL, LABEL_MIXED),
        "ex5": (EX5, REGIME_SUBCRITICAL, LABEL_BRANCHES),
        "ex6": (EX6, REGIME_SUBCRITICAL, LABEL_BRANCHES),
        "abs": (ABS_X, REGIME_SUPERCRITICAL, LABEL_NO_CONTACT),
    }
    for name, (doc, regime, label) in cases.items():
        report = classify_point(P(doc), np.zeros(P(doc).d))
        assert report.regime == regime, name
        assert report.label == label, name


def test_mean_direction_catalog():
    md1 = mean_direction(geom_of(EX1))
    assert md1.vector == pytest.approx([-0.5])
    assert md1.feasible
    md5 = mean_direction(geom_of(EX5))
    assert md5.vector == pytest.approx([-2.0])
    assert not md5.feasible
    md_abs = mean_direction(geom_of(ABS_X))
    assert md_abs.vector == pytest.approx([0.0])
    assert md_abs.feasible


def test_mean_direction_zero_shape():
    geom = geom_of({"V_S": "x1", "F": "x1", "g": ["x1"], "d": 1})
    with pytest.raises(ZeroShapeOperator):
        mean_direction(geom)


def test_nu_weights_catalog():
    nu1 = solve_nu_p1(geom_of(EX1), 1.0)
    assert nu1.weight([1.0]) == pytest.approx(0.25)
    assert nu1.weight([-1.0]) == pytest.approx(0.75)
    nu2 = solve_nu_p1(geom_of(EX2), 2.0)
    assert nu2.weight([1.0]) == pytest.approx(1.5)
    assert nu2.weight([-1.0]) == pytest.approx(0.5)
    nu_abs = solve_nu_p1(geom_of(ABS_X), 1.0)
    assert nu_abs.weight([1.0]) == pytest.approx(0.5)
    assert nu_abs.weight([-1.0]) == pytest.approx(0.5)
    nu3 = solve_nu_p1(geom_of(EX3), 1.0)
    assert nu3.weight([-1.0]) == pytest.approx(1.0)


def test_nu_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        solve_nu_p1(geom_of(EX6), 1.0)


def test_subcritical_forces_zero_measure():
    """Norm-dominated points admit no directional mass: zero measure and an
    infeasible mean direction, over the catalog and random potentials."""
    rng = np.random.default_rng(123)
    checked = 0
    while checked < 50:
        a, b = rng.uniform(-3, 3, size=2)
        if abs(b) < 1e-3 or abs(abs(a) - abs(b)) < 1e-6:
            continue
        doc = {"V_S": f"{a}*x1", "F": f"{b}", "g": ["x1"], "d": 1}
        report = classify_point(P(doc), np.zeros(1))
        nu = solve_nu_p1(report.geometry, 1.0)
        if report.regime == REGIME_SUBCRITICAL:
            assert nu.total_mass == 0.0
            assert not report.nu_feasible
            assert not mean_direction(report.geometry).feasible
        else:
            assert nu.total_mass == pytest.approx(1.0)
        checked += 1
    for doc in (EX5, EX6):
        report = classify_point(P(doc), np.zeros(P(doc).d))
        assert report.regime == REGIME_SUBCRITICAL
        assert not report.nu_feasible


def test_scaling_covariance():
    """Scaling V_S and F by the same lambda scales every nonzero root by
    lambda and leaves zero roots and measure weights unchanged."""
    rng = np.random.default_rng(9)
    for _ in range(20):
        a, b = rng.uniform(-2, 2, size=2)
        if abs(b) < 1e-2:
            continue
        lam = rng.uniform(0.2, 5.0)
        base = {"V_S": f"{a}*x1", "F": f"{b}", "g": ["x1"], "d": 1}
        scaled = {"V_S": f"{lam}*({a}*x1)", "F": f"{lam}*{b}", "g": ["x1"], "d": 1}
        r0 = solve_branch_equation(geom_of(base))
        r1 = solve_branch_equation(geom_of(scaled))
        assert sorted(r[0] for r in r1.nonzero_roots) == pytest.approx(
            sorted(lam * r[0] for r in r0.nonzero_roots)
        )
        assert [w[0] for w in r1.zero_root_directions] == pytest.approx(
            [w[0] for w in r0.zero_root_directions]
        )
        nu0 = solve_nu_p1(geom_of(base), 1.0)
        nu1 = solve_nu_p1(geom_of(scaled), 1.0)
        assert nu1.weight([1.0]) == pytest.approx(nu0.weight([1.0]), abs=1e-12)


def test_full_cone_continuum():
    # V = -||x|| in the plane: every direction is a departure direction
    report = classify_point(
        P({"V_S": "0", "F": "-1", "g": ["x1", "x2"], "d": 2}), np.zeros(2)
    )
    assert report.roots.manifold_fit is not None
    assert report.roots.manifold_fit.radius == pytest.approx(1.0)
    assert len(report.roots.root_manifold_samples) == 256
    up = classify_point(
        P({"V_S": "0", "F": "1", "g": ["x1", "x2"], "d": 2}), np.zeros(2)
    )
    assert up.label == LABEL_NO_CONTACT


def test_report_serialization():
    report = classify_point(P(EX4), np.zeros(1))
    doc = report.to_dict()
    assert doc["regime"] == REGIME_CRITICAL
    assert doc["label"] == LABEL_MIXED
    assert doc["roots"]["nonzero_roots"] == [[-2.0]]
    assert doc["mean_direction"]["feasible"]

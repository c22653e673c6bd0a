"""Hoffman constants, dominance constants, moduli, and sampled certification."""

import numpy as np
import pytest

from sella import (BregmanGenerator, GrowthError, GrowthModuli, HoffmanResult,
                   XiConstants, certify_qfg, certify_qgg,
                   compute_growth_moduli, example1_fixture, example2_as_saddle,
                   hoffman_constant, kkt_solution_set, qgg_implies_qfg_check,
                   solution_system, structured_moduli, varsigma_for,
                   xi_constants)

from conftest import make_admissible_quadratic, make_scsc_quadratic, rng_for


# ---------------------------------------------------------------------------
# Hoffman constants
# ---------------------------------------------------------------------------

def test_hoffman_identity():
    assert hoffman_constant(np.eye(3)).theta == pytest.approx(1.0, rel=1e-14)


def test_hoffman_diagonal():
    res = hoffman_constant(np.diag([2.0, 0.5]))
    assert res.theta == pytest.approx(2.0, rel=1e-14)
    assert res.method == "sigma_min"


def test_hoffman_redundant_rows_exact_vs_enumeration():
    # duplicated equality row: the exact constant uses the smallest positive
    # singular value; the pattern enumeration stays a valid upper bound
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    exact = hoffman_constant(A, method="sigma_min").theta
    assert exact == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-12)
    enum = hoffman_constant(A, method="klatte_enumeration").theta
    assert enum >= exact - 1e-12


def test_hoffman_klatte_matches_sigma_min_on_full_row_rank_systems():
    rng = rng_for(21)
    for trial in range(20):
        r = int(rng.integers(1, 7))
        n = r + int(rng.integers(0, 4))
        A = rng.standard_normal((r, n))
        ref = hoffman_constant(A, method="sigma_min").theta
        enum = hoffman_constant(A, method="klatte_enumeration").theta
        assert enum == pytest.approx(ref, rel=1e-8)


def test_hoffman_inequality_sampled_equality_systems():
    rng = rng_for(22)
    for trial in range(10):
        r = int(rng.integers(1, 7))
        n = r + int(rng.integers(0, 4))
        A = rng.standard_normal((r, n))
        theta = hoffman_constant(A).theta
        pinv = np.linalg.pinv(A)
        x0 = rng.standard_normal(n)
        b = A @ x0
        for _ in range(100):
            x = x0 + 3.0 * rng.standard_normal(n)
            dist = np.linalg.norm(pinv @ (A @ x - b))
            viol = np.linalg.norm(A @ x - b)
            assert dist <= theta * viol + 1e-9


def test_hoffman_klatte_with_inequality_vs_sampled_lower_bound():
    rng = rng_for(7)
    A = rng.standard_normal((2, 2))
    C = rng.standard_normal((1, 2))
    res = hoffman_constant(A, C, method="klatte_enumeration",
                           lower_bound_samples=10000, seed=0)
    assert res.sampled_lower is not None
    assert res.sampled_lower <= res.theta + 1e-9
    gap = (res.theta - res.sampled_lower) / res.theta
    assert gap < 0.10


def test_hoffman_witness_attains_unit_image():
    rng = rng_for(23)
    A = rng.standard_normal((2, 3))
    C = rng.standard_normal((2, 3))
    res = hoffman_constant(A, C, method="klatte_enumeration")
    u, v = res.witness
    img = A.T @ u + C.T @ v
    assert np.linalg.norm(img) == pytest.approx(1.0, rel=1e-9)
    assert np.sqrt(np.dot(u, u) + np.dot(v, v)) == pytest.approx(res.theta,
                                                                 rel=1e-9)


def test_hoffman_row_budget():
    with pytest.raises(ValueError):
        hoffman_constant(np.eye(21), np.zeros((0, 21)) + 1.0,
                         method="klatte_enumeration")


def test_hoffman_zero_matrix_rejected():
    from sella import NumericalError
    with pytest.raises(NumericalError):
        hoffman_constant(np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# dominance constants
# ---------------------------------------------------------------------------

def test_xi_identity_map():
    rng = rng_for(24)
    A = rng.standard_normal((3, 3))
    p = make_scsc_quadratic(3, 3, seed=25)
    p2 = type(p)(C1=np.eye(3), b1=p.b1[:3] * 0, A=A, C2=p.C2, b2=p.b2)
    xi = xi_constants(p2)
    assert xi.xi1 == pytest.approx(np.linalg.norm(A, 2) ** 2, rel=1e-12)


def test_xi_equal_matrices():
    rng = rng_for(26)
    C1 = rng.standard_normal((2, 3))
    C2 = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    from sella import StructuredProblem
    p = StructuredProblem(C1=C1, b1=np.zeros(2), A=C1, C2=C2, b2=np.zeros(2))
    xi = xi_constants(p)
    # ||C1 C1^+|| is the norm of the projector onto range(C1) = 1
    assert xi.xi1 == pytest.approx(1.0, rel=1e-10)
    assert xi.kernel_ok


def test_xi_certificate_on_admissible_instances():
    for seed in (27, 28, 29):
        p = make_admissible_quadratic(6, 5, 3, 3, seed=seed)
        xi = xi_constants(p)
        assert xi.kernel_ok
        M = xi.xi1 * p.C1.T @ p.C1 - p.A.T @ p.A
        scale = max(np.linalg.norm(p.A, 2) ** 2, 1.0)
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-9 * scale
        M2 = xi.xi3 * p.C2.T @ p.C2 - p.A @ p.A.T
        assert np.min(np.linalg.eigvalsh(M2)) >= -1e-9 * scale


def test_xi_kernel_violation_reported_and_strict_raises(desk_problem):
    xi = xi_constants(desk_problem)
    assert not xi.kernel_ok
    assert "ker(C1)<=ker(A)" in xi.violations
    mag, direction = xi.violations["ker(C1)<=ker(A)"]
    assert mag > 1e-3
    # the reported direction really lies in ker C1 but not in ker A
    assert np.linalg.norm(desk_problem.C1 @ direction) <= 1e-8
    assert np.linalg.norm(desk_problem.A @ direction) > 1e-3
    with pytest.raises(GrowthError):
        xi_constants(desk_problem, strict=True)


# ---------------------------------------------------------------------------
# moduli
# ---------------------------------------------------------------------------

def test_structured_moduli_formula_arithmetic(desk_problem):
    hof = HoffmanResult(theta=1.0, method="sigma_min")
    xi = XiConstants(xi1=1.0, xi3=1.0, xi2=1.0, xi4=1.0)
    mod = structured_moduli(desk_problem, hof, xi)
    assert mod.mu_x == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert mod.mu_y == mod.mu_x
    assert mod.condition == "both"


def test_structured_moduli_monotone_in_xi(desk_problem):
    hof = HoffmanResult(theta=1.3, method="sigma_min")
    base = structured_moduli(desk_problem, hof, XiConstants(xi1=1.0, xi3=1.0))
    bigger = structured_moduli(desk_problem, hof, XiConstants(xi1=2.0, xi3=1.0))
    assert bigger.mu_x <= base.mu_x


def test_varsigma_rules():
    assert varsigma_for("qfg", 0.75) == (0.75, "two_sided_qfg")
    assert varsigma_for("qgg", 0.75) == (0.5, "two_sided_qgg")
    assert varsigma_for("auto", 0.99) == (0.99, "two_sided_qfg")
    assert varsigma_for("auto", 0.25) == (1.5, "two_sided_qgg")
    with pytest.raises(GrowthError):
        varsigma_for("qfg", 0.0)
    with pytest.raises(GrowthError):
        varsigma_for("qgg", 1.0)
    with pytest.raises(GrowthError):
        varsigma_for("qfg", 0.5, available="two_sided_qgg")


def test_solution_system_shapes(desk_problem):
    D, J = solution_system(desk_problem)
    assert J is None
    n, m = desk_problem.dim_x, desk_problem.dim_y
    p_, q_ = desk_problem.C1.shape[0], desk_problem.C2.shape[0]
    assert D.shape == (p_ + m + q_ + n, n + m)


def test_pipeline_moduli_on_random_desk_instance(desk_problem):
    sol = kkt_solution_set(desk_problem)
    mod, hof, xi = compute_growth_moduli(desk_problem, sol)
    assert mod.mu_x > 0 and mod.condition == "both"
    assert hof.method == "sigma_min"
    qgg = certify_qgg(desk_problem, sol, mod, samples=200, seed=1)
    qfg = certify_qfg(desk_problem, sol, mod, samples=200, seed=1)
    assert qgg.passed and qfg.passed


def test_pipeline_moduli_on_admissible_instance_is_genuinely_valid():
    p = make_admissible_quadratic(6, 5, 3, 3, seed=30)
    sol = kkt_solution_set(p)
    assert sol.kind == "affine"
    mod, _, xi = compute_growth_moduli(p, sol)
    assert xi.kernel_ok
    # oracle: the largest valid gradient-growth modulus is the smallest
    # restricted eigenvalue of blockdiag(C1'C1, C2'C2) over directions
    # orthogonal to the solution set
    H = np.block([
        [p.C1.T @ p.C1, np.zeros((6, 5))],
        [np.zeros((5, 6)), p.C2.T @ p.C2]])
    N = sol.basis
    Q = np.linalg.svd(np.eye(11) - N @ N.T)[0][:, :11 - N.shape[1]]
    lam_min = np.min(np.linalg.eigvalsh(Q.T @ H @ Q))
    assert mod.mu_x <= lam_min + 1e-9
    qgg = certify_qgg(p, sol, mod, samples=300, seed=2)
    qfg = certify_qfg(p, sol, mod, samples=300, seed=2)
    assert qgg.passed and qfg.passed


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def test_certify_qgg_example1_forced_violation():
    p, sol = example1_fixture()
    forced = np.array([0.0, 0.0, 0.0, 0.5])
    for mu in (1e-3, 1.0, 10.0):
        rep = certify_qgg(p, sol, GrowthModuli(mu, mu, "both"), samples=0,
                          extra_points=[forced])
        assert not rep.passed
        assert rep.min_margin == pytest.approx(-0.25 * mu, rel=1e-12)
        assert np.allclose(rep.worst_point, forced)


def test_certify_qfg_example1_passes():
    p, sol = example1_fixture()
    rep = certify_qfg(p, sol, GrowthModuli(1.0, 1.0, "two_sided_qfg"),
                      samples=500, seed=3)
    assert rep.passed
    assert rep.min_margin >= -1e-9


def test_certify_margin_zero_on_solution_set():
    p, sol = example1_fixture()
    rep = certify_qgg(p, sol, GrowthModuli(1.0, 1.0, "both"), samples=0,
                      extra_points=[sol.point])
    assert rep.min_margin == 0.0
    rep2 = certify_qfg(p, sol, GrowthModuli(1.0, 1.0, "both"), samples=0,
                       extra_points=[sol.point])
    assert rep2.min_margin == 0.0


def test_certify_scsc_with_true_strong_convexity_moduli():
    p = make_scsc_quadratic(4, 3, seed=31)
    sol = kkt_solution_set(p)
    mu_x = float(np.min(np.linalg.eigvalsh(p.C1.T @ p.C1)))
    mu_y = float(np.min(np.linalg.eigvalsh(p.C2.T @ p.C2)))
    mod = GrowthModuli(mu_x, mu_y, "both")
    assert certify_qgg(p, sol, mod, samples=400, seed=4).passed
    assert certify_qfg(p, sol, mod, samples=400, seed=4).passed


def test_certify_inflated_moduli_violated_on_rank_deficient_instance():
    p = make_admissible_quadratic(2, 1, 1, 1, seed=32)
    sol = kkt_solution_set(p)
    mod, _, _ = compute_growth_moduli(p, sol)
    H = np.block([
        [p.C1.T @ p.C1, np.zeros((2, 1))],
        [np.zeros((1, 2)), p.C2.T @ p.C2]])
    N = sol.basis
    Q = np.linalg.svd(np.eye(3) - N @ N.T)[0][:, :3 - N.shape[1]]
    lam_min = float(np.min(np.linalg.eigvalsh(Q.T @ H @ Q)))
    bad = GrowthModuli(10.0 * lam_min, 10.0 * lam_min, "both")
    rep = certify_qgg(p, sol, bad, samples=10000, seed=5)
    assert not rep.passed
    rep2 = certify_qfg(p, sol, bad, samples=10000, seed=5)
    assert not rep2.passed


def test_certify_example2_degenerate_qfg_violated_at_three():
    p, sol, fix = example2_as_saddle(3.0)
    mod = GrowthModuli(0.5, 1.0, "both")
    rep = certify_qfg(p, sol, mod, samples=0, geom_x=fix.generator,
                      extra_points=[np.array([3.0])])
    assert not rep.passed
    expected = fix.gap_from_min(3.0) - 0.5 * fix.distance_to_min(3.0)
    assert rep.min_margin == pytest.approx(expected, rel=1e-9)
    assert expected < 0


def test_certify_example2_gradient_growth_holds_exactly():
    p, sol, fix = example2_as_saddle(3.0)
    mod = GrowthModuli(0.5, 1.0, "both")  # identity holds with factor 1 = 2*0.5
    rep = certify_qgg(p, sol, mod, samples=100, seed=6,
                      geom_x=fix.generator)
    assert rep.passed


def test_qgg_implies_qfg_euclidean_is_identity():
    p = make_scsc_quadratic(3, 2, seed=33)
    sol = kkt_solution_set(p)
    mu_x = float(np.min(np.linalg.eigvalsh(p.C1.T @ p.C1)))
    mu_y = float(np.min(np.linalg.eigvalsh(p.C2.T @ p.C2)))
    mod = GrowthModuli(mu_x, mu_y, "two_sided_qgg")
    a = qgg_implies_qfg_check(p, sol, mod, 1.0, 1.0, samples=200, seed=7)
    b = certify_qfg(p, sol, GrowthModuli(mu_x, mu_y, "two_sided_qfg"),
                    samples=200, seed=7)
    assert a.passed and b.passed
    assert a.min_margin == pytest.approx(b.min_margin, rel=1e-12)
    assert a.mu_x == mod.mu_x and a.mu_y == mod.mu_y


def test_qgg_implies_qfg_diag_generator():
    p = make_scsc_quadratic(3, 2, seed=34)
    sol = kkt_solution_set(p)
    rng = rng_for(35)
    wx = rng.uniform(1.0, 4.0, 3)
    wy = rng.uniform(1.0, 4.0, 2)
    gx = BregmanGenerator.diag_quadratic(wx)
    gy = BregmanGenerator.diag_quadratic(wy)
    L = 4.0
    mu_x = float(np.min(np.linalg.eigvalsh(p.C1.T @ p.C1))) / L
    mu_y = float(np.min(np.linalg.eigvalsh(p.C2.T @ p.C2))) / L
    mod = GrowthModuli(mu_x, mu_y, "two_sided_qgg")
    qgg = certify_qgg(p, sol, mod, samples=300, seed=8, geom_x=gx, geom_y=gy)
    assert qgg.passed
    qfg = qgg_implies_qfg_check(p, sol, mod, L, L, samples=300, seed=8,
                                geom_x=gx, geom_y=gy)
    assert qfg.passed
    assert qfg.mu_x == pytest.approx(mu_x / L)


def test_qgg_implies_qfg_requires_finite_lipschitz():
    p, sol = example1_fixture()
    with pytest.raises(ValueError):
        qgg_implies_qfg_check(p, sol, GrowthModuli(1.0, 1.0, "both"),
                              np.inf, 1.0, samples=10)


def test_cert_report_roundtrip():
    p, sol = example1_fixture()
    rep = certify_qfg(p, sol, GrowthModuli(1.0, 1.0, "both"), samples=50,
                      seed=9)
    d = rep.to_dict()
    assert d["condition"] == "two_sided_qfg"
    assert d["samples"] == 50
    assert isinstance(d["worst_point"], list)
    import json
    assert json.loads(rep.to_json()) == d

import numpy as np
import pytest

from lissajous_ref import build_classical
from lpspace.constructor import (
    ConstructionError,
    assemble_rhs,
    build,
    initialize_linear,
    residual_order_max,
    solve_order,
)
from lpspace.model import NAMED_SYSTEMS, frequencies, make_params
from lpspace.orbits import OrbitEvaluator, OrbitSpec
from lpspace.series import eta_eval, eta_max_abs, index_order

MU_SE = NAMED_SYSTEMS["sun-earth"]


def solution_scale(sol):
    top = 0.0
    for series in (sol.x, sol.y, sol.z):
        for c, s in series.terms.values():
            top = max(top, eta_max_abs(c), eta_max_abs(s))
    return top


# ---------------------------------------------------------------------------
# linear initialisation
# ---------------------------------------------------------------------------


def test_initialize_linear_coefficients(se_l1_params):
    sol = initialize_linear(se_l1_params)
    fr = frequencies(se_l1_params)
    assert sol.order == 1
    assert sol.x.terms[(1, 0, 0, 0, 1, 0)] == ((1.0,), ())
    assert sol.x.terms[(0, 0, 1, 0, 0, 0)] == ((1.0,), ())
    assert sol.y.terms[(1, 0, 0, 0, 1, 0)] == ((), (fr.kappa1,))
    assert sol.y.terms[(0, 0, 0, 1, 0, 0)] == ((-fr.kappa2,), ())
    # vertical channel: plain cos(th2) plus the eta-coupled planar/hyperbolic parts
    assert sol.z.terms[(0, 1, 0, 0, 0, 1)] == ((1.0,), ())
    assert sol.z.terms[(1, 0, 0, 0, 1, 0)] == ((0.0, 1.0), ())
    assert sol.z.terms[(0, 0, 1, 0, 0, 0)] == ((0.0, fr.kappa3), ())
    assert sol.delta.get((0, 0, 0, 0)) == (fr.nu0**2 - fr.omega0**2,)
    assert sol.omega.get((0, 0, 0, 0)) == (fr.omega0,)


def test_linear_solution_solves_modified_linear_system(se_l1_params):
    sol = initialize_linear(se_l1_params)
    assert residual_order_max(sol, 1) < 1e-12


def test_linear_reduces_to_classical_at_zero_coupling(se_l1_params):
    """eta = 0, alpha3 = alpha4 = 0 must reproduce the uncoupled ansatz."""
    sol = initialize_linear(se_l1_params)
    fr = frequencies(se_l1_params)
    spec = OrbitSpec(alpha1=0.3, alpha2=0.2, phi1=0.4, phi2=1.1, eta=0.0)
    ev = OrbitEvaluator(sol, spec)
    t = 0.37
    x, y, z = ev.positions(np.array([t]))[0]
    th1 = fr.omega0 * t + spec.phi1
    th2 = fr.nu0 * t + spec.phi2
    assert x == pytest.approx(0.3 * np.cos(th1), abs=1e-15)
    assert y == pytest.approx(fr.kappa1 * 0.3 * np.sin(th1), abs=1e-15)
    assert z == pytest.approx(0.2 * np.cos(th2), abs=1e-15)


# ---------------------------------------------------------------------------
# order-by-order structure
# ---------------------------------------------------------------------------


def test_build_order1_equals_initialize(se_l1_params):
    assert build(se_l1_params, 1).x == initialize_linear(se_l1_params).x


def test_assemble_rhs_order2_structure(se_l1_order3, se_l1_params):
    sol1 = initialize_linear(se_l1_params)
    rhs = assemble_rhs(sol1, 2)
    assert rhs.order == 2
    for sl in (rhs.ex, rhs.ey, rhs.ez):
        for key in sl:
            assert index_order(key) == 2


def test_solve_order_roundtrip(se_l1_params, se_l1_order3):
    sol1 = initialize_linear(se_l1_params)
    sol2 = solve_order(sol1, 2, assemble_rhs(sol1, 2))
    sol3 = solve_order(sol2, 3, assemble_rhs(sol2, 3))
    assert sol3.x == se_l1_order3.x
    assert sol3.delta == se_l1_order3.delta


def test_no_odd_frequency_corrections(se_l1_order5):
    for series in (se_l1_order5.omega, se_l1_order5.nu, se_l1_order5.lam):
        for key in series.terms:
            assert index_order(key) % 2 == 0, key


def test_frequency_indices_have_balanced_exponents(se_l1_order5):
    for series in (se_l1_order5.omega, se_l1_order5.nu, se_l1_order5.lam, se_l1_order5.delta):
        for (i, j, k, m) in series.terms:
            assert k == m


def test_case1_normalization_zeroes_planar_resonant_x(se_l1_order5):
    for (i, j, k, m, p, q) in se_l1_order5.x.terms:
        if p == 1 and q == 0 and k == m:
            assert i + j + k + m == 1, "only the linear seed may carry the resonant planar harmonic"
    # same normalisation for the z coefficient: only the linear eta term survives
    for (i, j, k, m, p, q), (c, s) in se_l1_order5.z.terms.items():
        if p == 1 and q == 0 and k == m and i + j + k + m > 1:
            assert eta_max_abs(c) == 0 and eta_max_abs(s) == 0


def test_residuals_vanish_through_build_order(se_l1_order5):
    scale = solution_scale(se_l1_order5)
    for n in range(1, 6):
        assert residual_order_max(se_l1_order5, n) < 1e-10 * max(scale, 1.0)


def test_delta_order3_index_set(se_l1_order3):
    keys = set(se_l1_order3.delta.terms)
    assert keys == {(0, 0, 0, 0), (2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 1, 1)}


def test_parity_rule_recorded(se_l1_order5):
    """The constructed series obeys p = i (mod 2), q = j (mod 2), |p| <= i, |q| <= j."""
    for series in (se_l1_order5.x, se_l1_order5.y, se_l1_order5.z):
        assert series.parity_violations() == []


def test_planar_lyapunov_exactly_planar(se_l1_order5):
    """z entries with j = 0 carry no eta-free content."""
    for (i, j, k, m, p, q), (c, s) in se_l1_order5.z.terms.items():
        if j == 0:
            if c:
                assert c[0] == 0.0
            if s:
                assert s[0] == 0.0


def test_eta_parity_structure(se_l1_order5):
    """x, y even in eta for even alpha2 power (odd for odd); z the opposite."""
    for series, flip in ((se_l1_order5.x, 0), (se_l1_order5.y, 0), (se_l1_order5.z, 1)):
        for (i, j, k, m, p, q), (c, s) in series.terms.items():
            want = (j + flip) % 2
            for poly in (c, s):
                for deg, v in enumerate(poly):
                    if deg % 2 != want:
                        assert v == 0.0, ((i, j, k, m, p, q), deg, v)


def test_mirror_symmetry_eta_alpha2_flip(se_l1_order5):
    """(eta, alpha2) -> (-eta, -alpha2) maps (x, y, z) to (x, y, -z)."""
    rng = np.random.default_rng(2)
    t = np.linspace(0.0, 2.0, 7)
    for _ in range(4):
        a1, a2 = rng.uniform(0.01, 0.05, size=2)
        eta = rng.uniform(0.2, 1.0)
        plus = OrbitEvaluator(se_l1_order5, OrbitSpec(a1, a2, 0, 0, eta=eta), check=False)
        minus = OrbitEvaluator(se_l1_order5, OrbitSpec(a1, -a2, 0, 0, eta=-eta), check=False)
        pp, pm = plus.positions(t), minus.positions(t)
        assert np.allclose(pp[:, :2], pm[:, :2], atol=1e-12)
        assert np.allclose(pp[:, 2], -pm[:, 2], atol=1e-12)


def test_mirror_symmetry_halo(se_l1_order5):
    """With alpha2 = 0, flipping eta alone mirrors z."""
    t = np.linspace(0.0, 2.0, 9)
    plus = OrbitEvaluator(se_l1_order5, OrbitSpec(0.05, 0.0, 0, 0, eta=0.8), check=False)
    minus = OrbitEvaluator(se_l1_order5, OrbitSpec(0.05, 0.0, 0, 0, eta=-0.8), check=False)
    pp, pm = plus.positions(t), minus.positions(t)
    assert np.allclose(pp[:, :2], pm[:, :2], atol=1e-12)
    assert np.allclose(pp[:, 2], -pm[:, 2], atol=1e-12)


def test_coefficients_finite(se_l1_order9):
    for series in (se_l1_order9.x, se_l1_order9.y, se_l1_order9.z):
        for c, s in series.terms.values():
            assert all(np.isfinite(v) for v in c)
            assert all(np.isfinite(v) for v in s)


def test_numeric_residual_scaling_order3(se_l1_order3):
    from lpspace.validation import residual_scaling

    sc = residual_scaling(se_l1_order3, (1.0, 0.5, 0.0, 0.0), [1e-2, 5e-3, 2.5e-3], dps=None)
    assert sc.slope >= 3.5


def test_build_rejects_small_table():
    p = make_params(MU_SE, "L1", n_max=3)
    with pytest.raises(ConstructionError):
        build(p, 5)


def test_build_term_budget(se_l1_params):
    with pytest.raises(MemoryError):
        build(se_l1_params, 6, max_terms=100)


# ---------------------------------------------------------------------------
# against the classical Lissajous construction
# ---------------------------------------------------------------------------


def test_matches_classical_lissajous(se_l1_params, se_l1_order5):
    """eta^0 part of the center-manifold block == classical construction."""
    cx, cy, cz, com, cnu = build_classical(se_l1_params, 5)
    uni = se_l1_order5
    scale = solution_scale(uni)

    def eta0(poly):
        return poly[0] if poly else 0.0

    # x, y: center terms (k = m = 0) at eta^0
    for classical, unified in ((cx, uni.x), (cy, uni.y), (cz, uni.z)):
        for key, (cc, cs) in classical.terms.items():
            uc, us = unified.terms.get(key, ((), ()))
            assert eta0(uc) == pytest.approx(eta0(cc), abs=2e-11 * scale), key
            assert eta0(us) == pytest.approx(eta0(cs), abs=2e-11 * scale), key
        # and nothing extra at eta^0 in the unified center block
        for key, (uc, us) in unified.terms.items():
            if key[2] == 0 and key[3] == 0 and key not in classical.terms:
                assert abs(eta0(uc)) <= 2e-11 * scale and abs(eta0(us)) <= 2e-11 * scale, key

    for classical, unified in ((com, uni.omega), (cnu, uni.nu)):
        for key, poly in classical.terms.items():
            assert eta0(unified.get(key)) == pytest.approx(eta0(poly), rel=1e-10, abs=1e-11 * scale), key

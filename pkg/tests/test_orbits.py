import numpy as np
import pytest

from lpspace.bifurcation import solve_eta
from lpspace.model import State6, jacobi_constant, synodic_from_local
from lpspace.orbits import (
    InadmissibleSpecError,
    OrbitEvaluator,
    OrbitSpec,
    classify,
    manifold_branch,
    sample_trajectory,
    scalar_frequencies,
)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def test_classify_center_families():
    assert classify(OrbitSpec()).family == "libration point"
    assert classify(OrbitSpec(alpha1=0.1)).family == "planar Lyapunov"
    assert classify(OrbitSpec(alpha2=0.1)).family == "vertical Lyapunov"
    assert classify(OrbitSpec(alpha1=0.1, alpha2=0.1)).family == "Lissajous"
    assert classify(OrbitSpec(alpha1=0.1, eta=1.4)).family == "northern halo"
    assert classify(OrbitSpec(alpha1=0.1, eta=-1.4)).family == "southern halo"
    assert classify(OrbitSpec(alpha1=0.1, alpha2=0.1, eta=1.4)).family == "quasihalo"


def test_classify_hyperbolic_families():
    c = classify(OrbitSpec(alpha1=0.16, alpha2=0.02, alpha3=1e-3))
    assert c == ("unstable manifold", "Lissajous")
    c = classify(OrbitSpec(alpha1=0.16, alpha2=0.02, alpha4=1e-3))
    assert c == ("stable manifold", "Lissajous")
    c = classify(OrbitSpec(alpha3=-0.01, alpha4=0.01))
    assert c == ("transit", "libration point")
    c = classify(OrbitSpec(alpha3=-0.01, alpha4=-0.01))
    assert c == ("non-transit", "libration point")


def test_classify_total_over_sign_lattice():
    vals = (-0.1, 0.0, 0.1)
    seen = set()
    for a1 in vals:
        for a2 in vals:
            for a3 in vals:
                for a4 in vals:
                    for eta in (-1.0, 0.0, 1.0):
                        c = classify(OrbitSpec(a1, a2, a3, a4, eta=eta))
                        assert isinstance(c.family, str) and c.family
                        seen.add(c.family)
    assert "transit" in seen and "quasihalo" in seen


def test_classify_rejects_inadmissible(se_l1_order5):
    with pytest.raises(InadmissibleSpecError):
        classify(OrbitSpec(alpha1=0.16, eta=0.5), se_l1_order5)


# ---------------------------------------------------------------------------
# frequencies and sampling
# ---------------------------------------------------------------------------


def test_scalar_frequencies_at_origin(se_l1_order5):
    fr = se_l1_order5.freqs
    om, nu, lam = scalar_frequencies(se_l1_order5, OrbitSpec())
    assert (om, nu, lam) == (fr.omega0, fr.nu0, fr.lambda0)


def test_scalar_frequency_order3_structure(se_l1_order3):
    """omega = w0 + w_2000(eta) a1^2 at truncation order 3."""
    fr = se_l1_order3.freqs
    a1 = 0.07
    w2000 = se_l1_order3.omega.get((2, 0, 0, 0))
    from lpspace.series import eta_eval

    expect = fr.omega0 + eta_eval(w2000, 0.0) * a1**2
    om, _, _ = scalar_frequencies(se_l1_order3, OrbitSpec(alpha1=a1))
    assert om == pytest.approx(expect, rel=1e-15)


def test_zero_spec_constant_trajectory(se_l1_order5):
    states = sample_trajectory(se_l1_order5, OrbitSpec(), np.linspace(0, 5, 11))
    for st in states:
        assert st.as_array() == pytest.approx(np.zeros(6), abs=1e-300)


def test_planar_lyapunov_stays_planar(se_l1_order5):
    spec = OrbitSpec(alpha1=0.05)
    states = sample_trajectory(se_l1_order5, spec, np.linspace(0, 10, 64))
    assert max(abs(st.z) for st in states) < 1e-14
    assert max(abs(st.vz) for st in states) < 1e-14


def test_velocity_consistency_finite_differences(se_l1_order5):
    spec = OrbitSpec(alpha1=0.04, alpha2=0.03, phi1=0.3, phi2=0.9)
    ev = OrbitEvaluator(se_l1_order5, spec)
    t = np.linspace(0.2, 2.0, 7)
    h = 1e-5
    fd = (ev.positions(t + h) - ev.positions(t - h)) / (2 * h)
    assert np.allclose(fd, ev.velocities(t), rtol=0, atol=5e-10)
    fd2 = (ev.velocities(t + h) - ev.velocities(t - h)) / (2 * h)
    assert np.allclose(fd2, ev.accelerations(t), rtol=0, atol=5e-10)


def test_sample_trajectory_synodic_frame(se_l1_order5):
    spec = OrbitSpec(alpha1=0.03)
    loc = sample_trajectory(se_l1_order5, spec, [0.5], frame="local")[0]
    syn = sample_trajectory(se_l1_order5, spec, [0.5], frame="synodic")[0]
    conv = synodic_from_local(se_l1_order5.params, loc)
    assert syn.as_array() == pytest.approx(conv.as_array(), abs=1e-18)


def test_exponential_overflow_guard(se_l1_order5):
    spec = OrbitSpec(alpha3=1e-3)
    with pytest.raises(OverflowError):
        sample_trajectory(se_l1_order5, spec, [400.0])


def test_halo_mirror_trajectories(se_l1_order9):
    rep = solve_eta(se_l1_order9, (0.16, 0.0, 0.0, 0.0))
    eta = min(rep.positive_roots)
    t = np.linspace(0, 3, 17)
    north = OrbitEvaluator(se_l1_order9, OrbitSpec(alpha1=0.16, eta=eta))
    south = OrbitEvaluator(se_l1_order9, OrbitSpec(alpha1=0.16, eta=-eta))
    pn, ps = north.positions(t), south.positions(t)
    scale = np.abs(pn).max()
    assert np.allclose(pn[:, :2], ps[:, :2], atol=1e-12 * scale)
    assert np.allclose(pn[:, 2], -ps[:, 2], atol=1e-12 * scale)


# ---------------------------------------------------------------------------
# manifolds, transit behaviour
# ---------------------------------------------------------------------------


def test_manifold_branch_lissajous(se_l1_order5):
    center = OrbitSpec(alpha1=0.16, alpha2=0.02)
    b = manifold_branch(se_l1_order5, center, "unstable+", 1e-3)
    assert b.alpha3 == 1e-3 and b.alpha4 == 0.0 and b.eta == 0.0
    b = manifold_branch(se_l1_order5, center, "stable-", 1e-3)
    assert b.alpha4 == -1e-3 and b.alpha3 == 0.0


def test_manifold_branch_epsilon_zero(se_l1_order5):
    center = OrbitSpec(alpha1=0.1, alpha2=0.05)
    assert manifold_branch(se_l1_order5, center, "unstable+", 0.0) is center


def test_manifold_branch_requires_center(se_l1_order5):
    with pytest.raises(ValueError):
        manifold_branch(se_l1_order5, OrbitSpec(alpha3=1e-3), "unstable+", 1e-3)


def test_manifold_branch_resolves_eta(se_l1_order9):
    rep = solve_eta(se_l1_order9, (0.16, 0.02, 0.0, 0.0))
    eta0 = min(rep.positive_roots)
    center = OrbitSpec(alpha1=0.16, alpha2=0.02, eta=eta0)
    b = manifold_branch(se_l1_order9, center, "stable-", 1e-3)
    assert b.alpha4 == -1e-3
    assert b.eta != 0.0 and abs(b.eta - eta0) < 0.05
    from lpspace.orbits import admissibility

    resid, scale = admissibility(se_l1_order9, b)
    assert resid < 1e-8 * scale


def test_transit_vs_nontransit_hyperbolic_sign(se_l1_order5):
    """Non-transit: the hyperbolic part of x keeps one sign over |t| <= 2;
    transit: it crosses zero.  The pure exponential content is isolated by
    averaging out the center part via the eta = 0, a1 = a2 = 0 spec."""
    non_transit = OrbitSpec(alpha3=-1e-3, alpha4=-1e-3)
    transit = OrbitSpec(alpha3=-1e-3, alpha4=1e-3)
    t = np.linspace(-2, 2, 201)
    xs_nt = OrbitEvaluator(se_l1_order5, non_transit).positions(t)[:, 0]
    xs_tr = OrbitEvaluator(se_l1_order5, transit).positions(t)[:, 0]
    assert np.all(xs_nt < 0)  # bounces back on one side
    assert np.sign(xs_tr[0]) != np.sign(xs_tr[-1])  # crosses the bottleneck


def test_transit_matches_integration(se_l1_order9):
    from lpspace.validation import IntegratorConfig, integrate

    spec = OrbitSpec(alpha3=-1e-3, alpha4=1e-3)
    ev = OrbitEvaluator(se_l1_order9, spec)
    state0 = ev.state6(-2.0, frame="synodic")
    sol = integrate(se_l1_order9.params, state0, (-2.0, 2.0), IntegratorConfig())
    t = np.linspace(-2, 2, 41)
    series = np.array([ev.state6(tv, frame="synodic").as_array() for tv in t])
    numeric = sol.sol(t).T
    # the hyperbolic content grows to ~0.15 at |t| = 2, so the order-9
    # truncation dominates the comparison
    assert np.abs(series[:, :3] - numeric[:, :3]).max() < 5e-6


def test_jacobi_of_series_converges_to_point_value(se_l1_order9):
    """C(series state) -> C(L1) as the amplitudes shrink."""
    params = se_l1_order9.params
    from lpspace.model import libration_point_position

    pos = libration_point_position(params)
    c_point = jacobi_constant(params, State6(pos[0], 0, 0, 0, 0, 0, "synodic"))
    errs = []
    for a in (1e-2, 1e-3, 1e-4):
        st = sample_trajectory(se_l1_order9, OrbitSpec(alpha1=a, alpha2=a), [0.7], frame="synodic")[0]
        errs.append(abs(jacobi_constant(params, st) - c_point))
    assert errs[1] < errs[0] and errs[2] < errs[1]
    assert errs[2] < 1e-10

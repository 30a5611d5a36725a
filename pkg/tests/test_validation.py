import math

import numpy as np
import pytest

from lpspace.model import State6, jacobi_constant, libration_point_position
from lpspace.orbits import OrbitSpec
from lpspace.validation import (
    DivergenceRecord,
    IntegratorConfig,
    divergence_grid,
    divergence_time,
    integrate,
    residual_samples,
    residual_scaling,
)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=1e-4)
    with pytest.raises(ValueError):
        IntegratorConfig(atol=1e-15)


def test_equilibrium_stays_put(se_l1_params):
    """The point is a saddle (lambda0 ~ 2.5), so one ulp of initial offset
    grows by e^(lambda0 t); 1e-12 stationarity is attainable through
    t ~ 3.5 and the t = 10 drift stays below the e^25-amplified ulp."""
    pos = libration_point_position(se_l1_params)
    st = State6(pos[0], 0, 0, 0, 0, 0, "synodic")
    sol = integrate(se_l1_params, st, (0.0, 10.0))
    mid = sol.sol(2.5)
    assert np.abs(mid[:3] - pos).max() < 1e-12
    assert np.abs(mid[3:]).max() < 1e-12
    end = sol.sol(10.0)
    assert np.abs(end[:3] - pos).max() < 1e-4


def test_jacobi_drift_bounded(se_l1_params):
    pos = libration_point_position(se_l1_params)
    st = State6(pos[0] + 5e-4, 2e-4, 1e-4, 0.0, 1e-3, 0.0, "synodic")
    sol = integrate(se_l1_params, st, (0.0, 5.0))
    c0 = jacobi_constant(se_l1_params, st)
    drift = 0.0
    for t in np.linspace(0, 5, 41):
        stt = State6.from_array(sol.sol(t), "synodic")
        drift = max(drift, abs(jacobi_constant(se_l1_params, stt) - c0))
    assert drift < 1e-10


def test_forward_backward_reversibility(se_l1_params):
    pos = libration_point_position(se_l1_params)
    st = State6(pos[0] + 1e-3, 0, 5e-4, 0, 5e-4, 0, "synodic")
    fwd = integrate(se_l1_params, st, (0.0, 3.0))
    end = State6.from_array(fwd.y[:, -1], "synodic")
    back = integrate(se_l1_params, end, (3.0, 0.0))
    assert np.abs(back.sol(0.0) - st.as_array()).max() < 1e-9


def test_tolerance_halving_convergence(se_l1_params):
    pos = libration_point_position(se_l1_params)
    st = State6(pos[0] + 1e-3, 0, 0, 0, 1e-3, 0, "synodic")
    coarse = integrate(se_l1_params, st, (0.0, 4.0), IntegratorConfig(rtol=1e-9, atol=1e-9))
    fine = integrate(se_l1_params, st, (0.0, 4.0), IntegratorConfig(rtol=1e-12, atol=1e-12))
    assert np.abs(coarse.sol(4.0) - fine.sol(4.0)).max() < 1e-9


def test_divergence_infinite_threshold(se_l1_order5):
    spec = OrbitSpec(alpha1=0.02, alpha2=0.01)
    rec = divergence_time(se_l1_order5, spec, threshold=math.inf, horizon=3.0)
    assert rec.span == 3.0
    assert not rec.hit


def test_divergence_detects_threshold(se_l1_order3):
    """A coarse series diverges from the true flow within a few units."""
    spec = OrbitSpec(alpha1=0.1, alpha2=0.05, alpha3=1e-3)
    rec = divergence_time(se_l1_order3, spec, threshold=1e-6, horizon=12.0)
    assert rec.hit
    assert 0.0 < rec.span < 12.0


def test_divergence_monotone_with_order(se_l1_order3, se_l1_order9):
    spec = OrbitSpec(alpha1=0.1, alpha2=0.05, alpha3=1e-3)
    lo = divergence_time(se_l1_order3, spec, threshold=1e-6, horizon=12.0)
    hi = divergence_time(se_l1_order9, spec, threshold=1e-6, horizon=12.0)
    assert hi.span > lo.span


def test_divergence_grid_order_and_shape(se_l1_order3):
    specs = [OrbitSpec(alpha1=a, alpha3=1e-3) for a in (0.05, 0.1, 0.15)]
    recs = divergence_grid(se_l1_order3, specs, threshold=1e-6, horizon=6.0)
    assert [r.alpha1 for r in recs] == [0.05, 0.1, 0.15]
    assert all(isinstance(r, DivergenceRecord) for r in recs)


def test_residual_scaling_order1(se_l1_params):
    from lpspace.constructor import initialize_linear

    sol = initialize_linear(se_l1_params)
    sc = residual_scaling(sol, (1.0, 0.7, 0.0, 0.0), [1e-2, 5e-3, 2.5e-3], dps=None)
    assert sc.slope >= 1.5


def test_residual_scaling_monotone_in_order(se_l1_order3, se_l1_order5):
    eps = [1e-2, 5e-3, 2.5e-3]
    s3 = residual_scaling(se_l1_order3, (1.0, 0.5, 0.0, 0.0), eps, dps=None)
    s5 = residual_scaling(se_l1_order5, (1.0, 0.5, 0.0, 0.0), eps, dps=50)
    assert s3.slope >= 3.5
    assert s5.slope >= 5.5
    assert s5.slope > s3.slope


def test_residual_scaling_with_coupling(se_l1_order3):
    sc = residual_scaling(se_l1_order3, (1.0, 0.5, 0.0, 0.0), [1e-2, 5e-3], eta=1.5, dps=50)
    assert sc.slope >= 3.5


def test_residual_mp_matches_float_when_large(se_l1_order3):
    """At amplitudes where the residual is far above the float floor, the
    mpmath and binary64 paths must agree."""
    spec = OrbitSpec(alpha1=0.05, alpha2=0.02)
    times = np.linspace(0, 2, 9)
    rf = residual_samples(se_l1_order3, spec, times, dps=None)
    rm = residual_samples(se_l1_order3, spec, times, dps=40)
    assert np.allclose(rf, rm, rtol=1e-6)

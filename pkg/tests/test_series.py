import numpy as np
import pytest

from lpspace.model import NAMED_SYSTEMS, frequencies, make_params
from lpspace.series import (
    ETA_ONE,
    ETA_ZERO,
    AmplitudeSeries,
    TrigExpSeries,
    canonicalize,
    differentiate,
    eta_add,
    eta_div_eta,
    eta_eval,
    eta_mul,
    eta_trim,
    eval_series,
    multiply,
    potential_gradient,
)


class Spec:
    def __init__(self, a1=0.0, a2=0.0, a3=0.0, a4=0.0, phi1=0.0, phi2=0.0, eta=0.0):
        self.alpha1, self.alpha2, self.alpha3, self.alpha4 = a1, a2, a3, a4
        self.phi1, self.phi2, self.eta = phi1, phi2, eta


FREQ = dict(omega=1.3, nu=0.7, lam=0.4)


def random_series(rng, n_terms=6, max_idx=2, max_deg=2) -> TrigExpSeries:
    terms = {}
    for _ in range(n_terms):
        key = tuple(int(v) for v in rng.integers(0, max_idx + 1, size=4)) + (
            int(rng.integers(-2, 3)),
            int(rng.integers(-2, 3)),
        )
        c = tuple(rng.standard_normal(rng.integers(0, max_deg + 1)))
        s = tuple(rng.standard_normal(rng.integers(0, max_deg + 1)))
        terms[key] = (c, s)
    return TrigExpSeries(terms)


def random_spec(rng):
    return Spec(*rng.uniform(0.1, 0.9, size=4), phi1=rng.uniform(0, 6), phi2=rng.uniform(0, 6), eta=rng.uniform(-1, 1))


# ---------------------------------------------------------------------------
# EtaPoly
# ---------------------------------------------------------------------------


def test_eta_poly_basics():
    assert eta_trim((1.0, 2.0, 0.0, 0.0)) == (1.0, 2.0)
    assert eta_trim((0.0,)) == ()
    assert eta_mul((1.0, 1.0), (1.0, -1.0)) == (1.0, 0.0, -1.0)
    assert eta_mul((), (1.0,)) == ()
    assert eta_eval((2.0, 0.0, 3.0), 2.0) == 14.0
    assert eta_div_eta((0.0, 5.0, 7.0)) == (5.0, 7.0)
    with pytest.raises(ArithmeticError):
        eta_div_eta((1.0, 5.0))
    assert eta_mul((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), max_deg=2) == (1.0, 2.0, 3.0)


# ---------------------------------------------------------------------------
# canonicalize
# ---------------------------------------------------------------------------


def test_canonicalize_examples():
    key, c, s = canonicalize((0, 0, 0, 0, -1, 0), (1.0,), ())
    assert key == (0, 0, 0, 0, 1, 0) and c == (1.0,) and s == ()
    key, c, s = canonicalize((0, 0, 0, 0, -1, 0), (), (1.0,))
    assert key == (0, 0, 0, 0, 1, 0) and c == () and s == (-1.0,)
    key, c, s = canonicalize((0, 0, 0, 0, 0, -2), (2.0,), (3.0,))
    assert key == (0, 0, 0, 0, 0, 2) and c == (2.0,) and s == (-3.0,)
    key, c, s = canonicalize((1, 1, 0, 0, 0, 0), (2.0,), (3.0,))
    assert s == ()  # sin(0) carries nothing


def test_canonical_closure_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = random_series(rng)
        b = random_series(rng)
        assert a.is_canonical()
        assert multiply(a, b, 8).is_canonical()
        assert differentiate(a, "theta1").is_canonical()
        assert a.add(b).is_canonical()


# ---------------------------------------------------------------------------
# multiply
# ---------------------------------------------------------------------------


def test_multiply_product_to_sum():
    cos_t1 = TrigExpSeries({(1, 0, 0, 0, 1, 0): (ETA_ONE, ETA_ZERO)})
    prod = multiply(cos_t1, cos_t1, 4)
    assert prod.terms[(2, 0, 0, 0, 0, 0)] == ((0.5,), ())
    assert prod.terms[(2, 0, 0, 0, 2, 0)] == ((0.5,), ())
    assert len(prod.terms) == 2


def test_multiply_exponent_addition():
    ep = TrigExpSeries({(0, 0, 1, 0, 0, 0): (ETA_ONE, ETA_ZERO)})
    em = TrigExpSeries({(0, 0, 0, 1, 0, 0): (ETA_ONE, ETA_ZERO)})
    prod = multiply(ep, em, 4)
    assert set(prod.terms) == {(0, 0, 1, 1, 0, 0)}
    (c, s) = prod.terms[(0, 0, 1, 1, 0, 0)]
    assert c == (1.0,) and s == ()


def test_multiply_pointwise_oracle():
    rng = np.random.default_rng(17)
    for trial in range(100):
        a = random_series(rng, n_terms=4)
        b = random_series(rng, n_terms=4)
        prod = multiply(a, b, 16)
        spec = random_spec(rng)
        t = rng.uniform(-1, 1)
        va = eval_series(a, spec, t, **FREQ)
        vb = eval_series(b, spec, t, **FREQ)
        vp = eval_series(prod, spec, t, **FREQ)
        assert vp == pytest.approx(va * vb, rel=1e-12, abs=1e-12)


def test_multiply_truncation_consistency():
    rng = np.random.default_rng(23)
    a = random_series(rng, n_terms=5)
    b = random_series(rng, n_terms=5)
    full = multiply(a, b, 16)
    half = multiply(a, b, 8)
    assert half == full.truncate(8)


def test_eval_ring_axioms():
    rng = np.random.default_rng(29)
    for _ in range(25):
        a, b, c = (random_series(rng, n_terms=3) for _ in range(3))
        spec = random_spec(rng)
        t = rng.uniform(-1, 1)

        def ev(s):
            return eval_series(s, spec, t, **FREQ)

        ab_c = multiply(multiply(a, b, 12), c, 12)
        a_bc = multiply(a, multiply(b, c, 12), 12)
        assert ev(ab_c) == pytest.approx(ev(a_bc), rel=1e-11, abs=1e-11)
        assert ev(multiply(a, b, 12)) == pytest.approx(ev(multiply(b, a, 12)), rel=1e-12, abs=1e-12)
        dist = multiply(a, b.add(c), 12)
        exp = multiply(a, b, 12).add(multiply(a, c, 12))
        assert ev(dist) == pytest.approx(ev(exp), rel=1e-11, abs=1e-11)


def test_eval_linearity_in_stored_coefficients():
    key = (1, 0, 0, 0, 1, 0)
    one = TrigExpSeries({key: ((1.0,), ())})
    two = TrigExpSeries({key: ((2.0,), ())})
    spec = Spec(a1=0.5, phi1=0.3)
    t = 0.7
    assert eval_series(two, spec, t, **FREQ) == pytest.approx(2 * eval_series(one, spec, t, **FREQ), rel=1e-15)


def test_eval_series_examples():
    empty = TrigExpSeries()
    assert eval_series(empty, Spec(), 0.0, **FREQ) == 0.0
    single = TrigExpSeries({(1, 0, 0, 0, 1, 0): (ETA_ONE, ETA_ZERO)})
    assert eval_series(single, Spec(a1=0.5), 0.0, **FREQ) == pytest.approx(0.5, abs=1e-16)


# ---------------------------------------------------------------------------
# differentiate
# ---------------------------------------------------------------------------


def test_differentiate_trivia():
    cos_t1 = TrigExpSeries({(1, 0, 0, 0, 1, 0): (ETA_ONE, ETA_ZERO)})
    d = differentiate(cos_t1, "theta1")
    assert d.terms[(1, 0, 0, 0, 1, 0)] == ((), (-1.0,))  # cos -> -sin
    balanced = TrigExpSeries({(0, 0, 1, 1, 0, 0): (ETA_ONE, ETA_ZERO)})
    assert len(differentiate(balanced, "theta3")) == 0


def test_differentiate_finite_difference_oracle():
    rng = np.random.default_rng(31)
    for which in ("theta1", "theta2", "theta3"):
        for _ in range(10):
            a = random_series(rng, n_terms=5)
            d = differentiate(a, which)
            spec = random_spec(rng)
            t = rng.uniform(-0.5, 0.5)
            h = 1e-6
            fd = (_eval_shifted(a, spec, t, which, +h) - _eval_shifted(a, spec, t, which, -h)) / (2 * h)
            assert eval_series(d, spec, t, **FREQ) == pytest.approx(fd, rel=5e-9, abs=5e-9)


def _eval_shifted(series, spec, t, which, h):
    """Evaluate with one angle variable shifted by h (others fixed)."""
    om, nu, lam = FREQ["omega"], FREQ["nu"], FREQ["lam"]
    th1 = om * t + spec.phi1 + (h if which == "theta1" else 0.0)
    th2 = nu * t + spec.phi2 + (h if which == "theta2" else 0.0)
    th3 = lam * t + (h if which == "theta3" else 0.0)
    acc = 0.0
    for (i, j, k, m, p, q), (c, s) in series.terms.items():
        amp = spec.alpha1**i * spec.alpha2**j * spec.alpha3**k * spec.alpha4**m
        if amp == 0.0:
            continue
        amp *= np.exp((k - m) * th3)
        ang = p * th1 + q * th2
        acc += amp * (eta_eval(c, spec.eta) * np.cos(ang) + eta_eval(s, spec.eta) * np.sin(ang))
    return acc


# ---------------------------------------------------------------------------
# potential gradient
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def se_params():
    return make_params(NAMED_SYSTEMS["sun-earth"], "L1", n_max=12)


def _linear_xyz(params):
    fr = frequencies(params)
    x = TrigExpSeries(
        {
            (1, 0, 0, 0, 1, 0): (ETA_ONE, ETA_ZERO),
            (0, 0, 1, 0, 0, 0): (ETA_ONE, ETA_ZERO),
            (0, 0, 0, 1, 0, 0): (ETA_ONE, ETA_ZERO),
        }
    )
    y = TrigExpSeries(
        {
            (1, 0, 0, 0, 1, 0): (ETA_ZERO, (fr.kappa1,)),
            (0, 0, 1, 0, 0, 0): ((fr.kappa2,), ETA_ZERO),
            (0, 0, 0, 1, 0, 0): ((-fr.kappa2,), ETA_ZERO),
        }
    )
    z = TrigExpSeries(
        {
            (0, 1, 0, 0, 0, 1): (ETA_ONE, ETA_ZERO),
            (1, 0, 0, 0, 1, 0): ((0.0, 1.0), ETA_ZERO),
            (0, 0, 1, 0, 0, 0): ((0.0, fr.kappa3), ETA_ZERO),
            (0, 0, 0, 1, 0, 0): ((0.0, fr.kappa3), ETA_ZERO),
        }
    )
    return x, y, z


def test_gradient_zero_inputs(se_params):
    zero = TrigExpSeries()
    px, py, pz = potential_gradient(zero, zero, zero, se_params, 6)
    assert len(px) == 0 and len(py) == 0 and len(pz) == 0


def test_gradient_lowest_x_term(se_params):
    """Leading planar term must be (3/2) c3 (2x^2 - y^2 - z^2)."""
    x = TrigExpSeries({(1, 0, 0, 0, 0, 0): (ETA_ONE, ETA_ZERO)})  # x = a1 (constant harmonic)
    y = TrigExpSeries({(0, 1, 0, 0, 0, 0): (ETA_ONE, ETA_ZERO)})  # y = a2
    z = TrigExpSeries({(0, 0, 1, 1, 0, 0): (ETA_ONE, ETA_ZERO)})  # z = a3 a4
    c3 = se_params.c[3]
    px, py, pz = potential_gradient(x, y, z, se_params, 4)
    assert px.terms[(2, 0, 0, 0, 0, 0)][0][0] == pytest.approx(3.0 * c3, rel=1e-14)
    assert px.terms[(0, 2, 0, 0, 0, 0)][0][0] == pytest.approx(-1.5 * c3, rel=1e-14)
    assert px.terms[(0, 0, 2, 2, 0, 0)][0][0] == pytest.approx(-1.5 * c3, rel=1e-14)
    assert py.terms[(1, 1, 0, 0, 0, 0)][0][0] == pytest.approx(-3.0 * c3, rel=1e-14)
    assert pz.terms[(1, 0, 1, 1, 0, 0)][0][0] == pytest.approx(-3.0 * c3, rel=1e-14)


def test_gradient_min_order(se_params):
    x, y, z = _linear_xyz(se_params)
    px, py, pz = potential_gradient(x, y, z, se_params, 5)
    for series in (px, py, pz):
        for key in series.terms:
            assert sum(key[:4]) >= 2


def test_gradient_numeric_oracle(se_params):
    """Composed gradient versus finite differences of the directly-summed potential."""
    x, y, z = _linear_xyz(se_params)
    px, py, pz = potential_gradient(x, y, z, se_params, 9)
    fr = frequencies(se_params)
    kw = dict(omega=fr.omega0, nu=fr.nu0, lam=fr.lambda0)
    rng = np.random.default_rng(37)

    def U(xv, yv, zv):
        rho2 = xv * xv + yv * yv + zv * zv
        tm2, tm1 = 1.0, xv
        tot = 0.0
        for k in range(2, se_params.n_max + 1):
            tk = ((2 * k - 1) / k) * xv * tm1 - ((k - 1) / k) * rho2 * tm2
            if k >= 3:
                tot += se_params.c[k] * tk
            tm2, tm1 = tm1, tk
        return tot

    def richardson(f, v, h=1e-4):
        d1 = (f(v + h) - f(v - h)) / (2 * h)
        d2 = (f(v + h / 2) - f(v - h / 2)) / h
        return (4 * d2 - d1) / 3

    for _ in range(10):
        spec = Spec(*rng.uniform(0.002, 0.006, size=4), phi1=rng.uniform(0, 6), phi2=rng.uniform(0, 6), eta=rng.uniform(-0.5, 0.5))
        t = rng.uniform(-0.5, 0.5)
        xv = eval_series(x, spec, t, **kw)
        yv = eval_series(y, spec, t, **kw)
        zv = eval_series(z, spec, t, **kw)
        fd = np.array(
            [
                richardson(lambda v: U(v, yv, zv), xv),
                richardson(lambda v: U(xv, v, zv), yv),
                richardson(lambda v: U(xv, yv, v), zv),
            ]
        )
        got = np.array(
            [
                eval_series(px, spec, t, **kw),
                eval_series(py, spec, t, **kw),
                eval_series(pz, spec, t, **kw),
            ]
        )
        scale = max(np.abs(fd).max(), 1e-6)
        assert np.abs(got - fd).max() < 1e-10 * scale

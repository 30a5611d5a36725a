"""Sparse algebra for mixed trigonometric-exponential amplitude series.

A series value is a sum of terms

    [C(eta) * cos(p*th1 + q*th2) + S(eta) * sin(p*th1 + q*th2)]
        * exp((k - m) * th3) * a1^i * a2^j * a3^k * a4^m

keyed by the multi-index (i, j, k, m, p, q).  The scalar coefficients C, S
are real polynomials in the coupling coefficient eta, stored as plain
tuples of floats indexed by eta-power ("EtaPoly"); the zero polynomial is
the empty tuple and trailing zeros are always trimmed.

Canonical index form: p >= 0, and q >= 0 when p == 0 (cos is even and sin
is odd, so every term can be folded into this half-space); terms with
p == q == 0 carry no sine part.

Frequency / bifurcation-factor expansions use the reduced index (i, j, k, m)
only and are handled by :class:`AmplitudeSeries`.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np

from ._fast import (
    Packed,
    SliceAccumulator,
    empty_packed,
    pack_slice,
    packed_clean,
    packed_diff,
    unpack_to_slice,
)
from .model import SystemParams

__all__ = [
    "EtaPoly",
    "ETA_ZERO",
    "ETA_ONE",
    "ETA_VAR",
    "eta_const",
    "eta_add",
    "eta_sub",
    "eta_neg",
    "eta_scale",
    "eta_mul",
    "eta_shift_up",
    "eta_div_eta",
    "eta_eval",
    "eta_trim",
    "eta_max_abs",
    "canonicalize",
    "TrigExpSeries",
    "AmplitudeSeries",
    "multiply",
    "differentiate",
    "eval_series",
    "potential_gradient",
]

# ---------------------------------------------------------------------------
# EtaPoly: dense polynomial in the coupling coefficient, as a float tuple
# ---------------------------------------------------------------------------

EtaPoly = tuple[float, ...]

ETA_ZERO: EtaPoly = ()
ETA_ONE: EtaPoly = (1.0,)
ETA_VAR: EtaPoly = (0.0, 1.0)


def eta_trim(c: Iterable[float]) -> EtaPoly:
    """Drop trailing (near-)zeros; the zero polynomial is the empty tuple."""
    c = tuple(float(v) for v in c)
    n = len(c)
    while n > 0 and c[n - 1] == 0.0:
        n -= 1
    return c[:n]


def eta_const(v: float) -> EtaPoly:
    return (float(v),) if v != 0.0 else ETA_ZERO


def eta_add(a: EtaPoly, b: EtaPoly) -> EtaPoly:
    if not a:
        return b
    if not b:
        return a
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] += v
    return eta_trim(out)


def eta_neg(a: EtaPoly) -> EtaPoly:
    return tuple(-v for v in a)


def eta_sub(a: EtaPoly, b: EtaPoly) -> EtaPoly:
    return eta_add(a, eta_neg(b))


def eta_scale(a: EtaPoly, s: float) -> EtaPoly:
    if s == 0.0 or not a:
        return ETA_ZERO
    return eta_trim(v * s for v in a)


def eta_mul(a: EtaPoly, b: EtaPoly, max_deg: int | None = None) -> EtaPoly:
    if not a or not b:
        return ETA_ZERO
    la, lb = len(a), len(b)
    out = [0.0] * (la + lb - 1)
    for i, av in enumerate(a):
        if av == 0.0:
            continue
        for j, bv in enumerate(b):
            out[i + j] += av * bv
    if max_deg is not None and len(out) > max_deg + 1:
        del out[max_deg + 1 :]
    return eta_trim(out)


def eta_shift_up(a: EtaPoly) -> EtaPoly:
    """Multiply by eta."""
    if not a:
        return ETA_ZERO
    return (0.0,) + a


def eta_div_eta(a: EtaPoly, rel_tol: float = 1e-9) -> EtaPoly:
    """Divide by eta; the constant term must vanish to within rel_tol."""
    if not a:
        return ETA_ZERO
    scale = max(abs(v) for v in a)
    if abs(a[0]) > rel_tol * scale:
        raise ArithmeticError(f"polynomial not divisible by eta: constant term {a[0]!r} (scale {scale!r})")
    return eta_trim(a[1:])


def eta_eval(a: EtaPoly, eta: float) -> float:
    acc = 0.0
    for v in reversed(a):
        acc = acc * eta + v
    return acc


def eta_max_abs(a: EtaPoly) -> float:
    return max((abs(v) for v in a), default=0.0)


# ---------------------------------------------------------------------------
# multi-index canonical form
# ---------------------------------------------------------------------------

Key6 = tuple[int, int, int, int, int, int]
Key4 = tuple[int, int, int, int]
TermPair = tuple[EtaPoly, EtaPoly]


def canonicalize(index: Key6, cos_c: EtaPoly, sin_c: EtaPoly) -> tuple[Key6, EtaPoly, EtaPoly]:
    """Fold an index into the canonical half-space p >= 0 (q >= 0 at p == 0).

    Uses cos(-u) = cos(u), sin(-u) = -sin(u); at p == q == 0 the sine part
    multiplies sin(0) and is dropped.
    """
    i, j, k, m, p, q = index
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
        sin_c = eta_neg(sin_c)
    if p == 0 and q == 0:
        sin_c = ETA_ZERO
    return (i, j, k, m, p, q), cos_c, sin_c


def index_order(index: Key6 | Key4) -> int:
    return index[0] + index[1] + index[2] + index[3]


# ---------------------------------------------------------------------------
# TrigExpSeries
# ---------------------------------------------------------------------------


class TrigExpSeries:
    """Immutable-by-convention sparse series keyed by (i, j, k, m, p, q)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Key6, TermPair] | None = None, *, canonical: bool = False):
        if terms is None:
            self.terms: dict[Key6, TermPair] = {}
        elif canonical:
            self.terms = dict(terms)
        else:
            acc: dict[Key6, TermPair] = {}
            for key, (c, s) in terms.items():
                key, c, s = canonicalize(key, eta_trim(c), eta_trim(s))
                _accumulate(acc, key, c, s)
            self.terms = {k: v for k, v in acc.items() if v[0] or v[1]}

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def zero() -> "TrigExpSeries":
        return TrigExpSeries({}, canonical=True)

    @staticmethod
    def single(index: Key6, cos_c: EtaPoly = ETA_ONE, sin_c: EtaPoly = ETA_ZERO) -> "TrigExpSeries":
        return TrigExpSeries({index: (eta_trim(cos_c), eta_trim(sin_c))})

    # -- basic queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Key6, TermPair]]:
        return iter(sorted(self.terms.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigExpSeries) and self.terms == other.terms

    def max_order(self) -> int:
        return max((index_order(k) for k in self.terms), default=0)

    def order_slices(self) -> dict[int, dict[Key6, TermPair]]:
        out: dict[int, dict[Key6, TermPair]] = {}
        for key, val in self.terms.items():
            out.setdefault(index_order(key), {})[key] = val
        return out

    def truncate(self, max_order: int) -> "TrigExpSeries":
        return TrigExpSeries(
            {k: v for k, v in self.terms.items() if index_order(k) <= max_order}, canonical=True
        )

    # -- arithmetic ------------------------------------------------------------

    def add(self, other: "TrigExpSeries") -> "TrigExpSeries":
        acc = dict(self.terms)
        for key, (c, s) in other.terms.items():
            _accumulate(acc, key, c, s)
        return TrigExpSeries({k: v for k, v in acc.items() if v[0] or v[1]}, canonical=True)

    def scale(self, s: float) -> "TrigExpSeries":
        return TrigExpSeries(
            {k: (eta_scale(c, s), eta_scale(sn, s)) for k, (c, sn) in self.terms.items()},
            canonical=True,
        )

    def scale_poly(self, poly: EtaPoly, max_deg: int | None = None) -> "TrigExpSeries":
        out = {}
        for k, (c, sn) in self.terms.items():
            c2 = eta_mul(c, poly, max_deg)
            s2 = eta_mul(sn, poly, max_deg)
            if c2 or s2:
                out[k] = (c2, s2)
        return TrigExpSeries(out, canonical=True)

    def multiply(self, other: "TrigExpSeries", max_order: int, max_eta: int | None = None) -> "TrigExpSeries":
        return multiply(self, other, max_order, max_eta)

    def differentiate(self, which: str) -> "TrigExpSeries":
        return differentiate(self, which)

    # -- verification helpers ----------------------------------------------------

    def is_canonical(self) -> bool:
        for (i, j, k, m, p, q), (c, s) in self.terms.items():
            if p < 0 or (p == 0 and q < 0):
                return False
            if p == 0 and q == 0 and s:
                return False
            if not (c or s):
                return False
            if c != eta_trim(c) or s != eta_trim(s):
                return False
        return True

    def parity_violations(self) -> list[Key6]:
        """Indices breaking the empirical rule p = i (mod 2), q = j (mod 2), |p| <= i, |q| <= j."""
        bad = []
        for (i, j, k, m, p, q) in self.terms:
            if (p - i) % 2 or (q - j) % 2 or abs(p) > i or abs(q) > j:
                bad.append((i, j, k, m, p, q))
        return bad


def _accumulate(acc: dict[Key6, TermPair], key: Key6, c: EtaPoly, s: EtaPoly) -> None:
    old = acc.get(key)
    if old is None:
        if c or s:
            acc[key] = (c, s)
    else:
        acc[key] = (eta_add(old[0], c), eta_add(old[1], s))


# ---------------------------------------------------------------------------
# slice-level product kernel (shared by multiply and the constructor)
# ---------------------------------------------------------------------------

Slice = dict[Key6, TermPair]


def mul_slice(a: Slice, b: Slice, max_eta: int | None = None, out: Slice | None = None) -> Slice:
    """Accumulate the full product of two term groups into ``out``.

    Harmonics combine through the product-to-sum identities; amplitude
    powers and exponential exponents add.
    """
    acc = SliceAccumulator(max_eta)
    acc.add_product(a, b)
    prod = acc.result()
    if out is None:
        return prod
    for key, (c, s) in prod.items():
        _accumulate(out, key, c, s)
    return out


def amp_to_slice(terms: Mapping[Key4, EtaPoly]) -> Slice:
    """View an amplitude expansion as a harmonic-free series slice."""
    return {(i, j, k, m, 0, 0): (poly, ETA_ZERO) for (i, j, k, m), poly in terms.items() if poly}


def clean_slice(sl: Slice, rel_tol: float = 1e-16) -> Slice:
    """Drop coefficients below rel_tol times the largest coefficient in the group."""
    top = 0.0
    for c, s in sl.values():
        top = max(top, eta_max_abs(c), eta_max_abs(s))
    if top == 0.0:
        return {}
    cut = rel_tol * top
    out: Slice = {}
    for key, (c, s) in sl.items():
        c2 = eta_trim(v if abs(v) >= cut else 0.0 for v in c)
        s2 = eta_trim(v if abs(v) >= cut else 0.0 for v in s)
        if c2 or s2:
            out[key] = (c2, s2)
    return out


def multiply(a: TrigExpSeries, b: TrigExpSeries, max_order: int, max_eta: int | None = None) -> TrigExpSeries:
    """Product truncated at total amplitude order ``max_order``."""
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    sa = a.order_slices()
    sb = b.order_slices()
    acc = SliceAccumulator(max_eta)
    for da, slice_a in sa.items():
        for db, slice_b in sb.items():
            if da + db <= max_order:
                acc.add_product(slice_a, slice_b)
    return TrigExpSeries(acc.result(), canonical=True)


_DIFF_WHICH = ("theta1", "theta2", "theta3")


def differentiate(series: TrigExpSeries, which: str) -> TrigExpSeries:
    """Partial derivative with respect to one of the three angle variables."""
    if which not in _DIFF_WHICH:
        raise ValueError(f"which must be one of {_DIFF_WHICH}, got {which!r}")
    out: Slice = {}
    for key, (c, s) in series.terms.items():
        i, j, k, m, p, q = key
        if which == "theta3":
            f = float(k - m)
            if f == 0.0:
                continue
            out[key] = (eta_scale(c, f), eta_scale(s, f))
        else:
            h = float(p) if which == "theta1" else float(q)
            if h == 0.0:
                continue
            # d/dth [C cos + S sin] = (h S) cos + (-h C) sin
            out[key] = (eta_scale(s, h), eta_scale(c, -h))
    return TrigExpSeries(out, canonical=True)


def diff_slice(sl: Slice, which: str) -> Slice:
    """Slice-level version of :func:`differentiate` (same key set and order)."""
    out: Slice = {}
    for key, (c, s) in sl.items():
        i, j, k, m, p, q = key
        if which == "theta3":
            f = float(k - m)
            if f == 0.0:
                continue
            out[key] = (eta_scale(c, f), eta_scale(s, f))
        else:
            h = float(p) if which == "theta1" else float(q)
            if h == 0.0:
                continue
            out[key] = (eta_scale(s, h), eta_scale(c, -h))
    return out


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_series(
    series: TrigExpSeries,
    spec,
    t: float,
    *,
    omega: float,
    nu: float,
    lam: float,
    max_order: int | None = None,
) -> float:
    """Numeric value of the series for one orbit selection at time t.

    ``spec`` provides amplitudes (alpha1..alpha4), phases (phi1, phi2) and
    the coupling coefficient eta; the scalar frequencies must already be
    evaluated for the same spec.
    """
    th1 = omega * t + spec.phi1
    th2 = nu * t + spec.phi2
    th3 = lam * t
    a1, a2, a3, a4 = spec.alpha1, spec.alpha2, spec.alpha3, spec.alpha4
    eta = spec.eta
    acc = 0.0
    for (i, j, k, m, p, q), (c, s) in series.terms.items():
        if max_order is not None and i + j + k + m > max_order:
            continue
        amp = a1**i * a2**j * a3**k * a4**m
        if amp == 0.0:
            continue
        e = k - m
        if e:
            arg = e * th3
            if abs(arg) > 700.0:
                raise OverflowError(f"exponential exponent {arg!r} out of range")
            amp *= np.exp(arg)
        ang = p * th1 + q * th2
        val = 0.0
        if c:
            val += eta_eval(c, eta) * np.cos(ang)
        if s:
            val += eta_eval(s, eta) * np.sin(ang)
        acc += val * amp
    return float(acc)


# ---------------------------------------------------------------------------
# AmplitudeSeries: expansions in amplitude powers only (frequencies, Delta)
# ---------------------------------------------------------------------------


class AmplitudeSeries:
    """Sparse map (i, j, k, m) -> EtaPoly."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Key4, EtaPoly] | None = None):
        self.terms: dict[Key4, EtaPoly] = {}
        if terms:
            for key, poly in terms.items():
                poly = eta_trim(poly)
                if poly:
                    self.terms[tuple(key)] = poly

    def __iter__(self) -> Iterator[tuple[Key4, EtaPoly]]:
        return iter(sorted(self.terms.items()))

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, AmplitudeSeries) and self.terms == other.terms

    def get(self, key: Key4) -> EtaPoly:
        return self.terms.get(tuple(key), ETA_ZERO)

    def copy_with(self, key: Key4, poly: EtaPoly) -> "AmplitudeSeries":
        out = dict(self.terms)
        poly = eta_trim(poly)
        if poly:
            out[tuple(key)] = poly
        else:
            out.pop(tuple(key), None)
        return AmplitudeSeries(out)

    def truncate(self, max_order: int) -> "AmplitudeSeries":
        return AmplitudeSeries({k: v for k, v in self.terms.items() if index_order(k) <= max_order})

    def order_slice(self, order: int) -> dict[Key4, EtaPoly]:
        return {k: v for k, v in self.terms.items() if index_order(k) == order}

    def eval(self, alphas: tuple[float, float, float, float], eta: float, max_order: int | None = None) -> float:
        a1, a2, a3, a4 = alphas
        acc = 0.0
        for (i, j, k, m), poly in self.terms.items():
            if max_order is not None and i + j + k + m > max_order:
                continue
            amp = a1**i * a2**j * a3**k * a4**m
            if amp != 0.0:
                acc += eta_eval(poly, eta) * amp
        return acc

    def eta_poly_at(self, alphas: tuple[float, float, float, float], max_order: int | None = None) -> EtaPoly:
        """Collapse the amplitude dependence, leaving a polynomial in eta."""
        a1, a2, a3, a4 = alphas
        acc: EtaPoly = ETA_ZERO
        for (i, j, k, m), poly in self.terms.items():
            if max_order is not None and i + j + k + m > max_order:
                continue
            amp = a1**i * a2**j * a3**k * a4**m
            if amp != 0.0:
                acc = eta_add(acc, eta_scale(poly, amp))
        return acc

    def max_order(self) -> int:
        return max((index_order(k) for k in self.terms), default=0)


def amplitude_product_slice(a: AmplitudeSeries, b: AmplitudeSeries, order: int, max_eta: int | None = None) -> dict[Key4, EtaPoly]:
    """Order-``order`` part of the product of two amplitude expansions."""
    out: dict[Key4, EtaPoly] = {}
    for (i1, j1, k1, m1), p1 in a.terms.items():
        d1 = i1 + j1 + k1 + m1
        if d1 > order:
            continue
        for (i2, j2, k2, m2), p2 in b.terms.items():
            if i2 + j2 + k2 + m2 != order - d1:
                continue
            key = (i1 + i2, j1 + j2, k1 + k2, m1 + m2)
            prod = eta_mul(p1, p2, max_eta)
            if prod:
                out[key] = eta_add(out.get(key, ETA_ZERO), prod)
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------------------
# Legendre-potential gradient
# ---------------------------------------------------------------------------


class _Chain:
    """Incremental per-order slices of the Legendre solid-harmonic chain.

    T_n = rho^n P_n(x/rho) obeys T_n = ((2n-1)/n) x T_{n-1} - ((n-1)/n) rho^2 T_{n-2};
    the gradient of the potential U = sum_{n>=3} c_n T_n is

        dU/dx = sum c_n n T_{n-1},
        dU/dy = -y * sum c_n D_{n-1},   dU/dz = -z * sum c_n D_{n-1},

    with D_n = rho^{n-1} P_n'(x/rho) and D_n = x D_{n-1} + n T_{n-1}, D_1 = 1.

    All slices live in packed array form.  Entries are cached; a T_k[d]
    (k >= 2) or rho2[d] entry only references position slices of order
    <= d-1, and a D_k[d] or S[d] entry only references orders <= d, so
    during an order-n assembly (positions final through n-1) it is safe to
    cache T/rho2 through order n and D/S through order n-1 -- exactly what
    gradient_slice requests.
    """

    def __init__(self, params: SystemParams, max_eta: int | None = None):
        self.params = params
        self.max_eta = max_eta
        one = pack_slice({(0, 0, 0, 0, 0, 0): (ETA_ONE, ETA_ZERO)})
        self.T: dict[int, dict[int, Packed]] = {0: {0: one}}  # T[k][d]
        self.D: dict[int, dict[int, Packed]] = {1: {0: one}}  # D[k][d]
        self.S: dict[int, Packed] = {}  # sum_{k>=3} c_k D_{k-1}, per order
        self.rho2: dict[int, Packed] = {}
        self._t_done = 0
        self._d_done = 0

    @staticmethod
    def _var_slice(slices: list[Packed], d: int) -> Packed:
        return slices[d] if 0 <= d < len(slices) else empty_packed()

    def _chain_T(self, k: int, d: int, x: list[Packed]) -> Packed:
        if k == 0:
            return self.T[0][0] if d == 0 else empty_packed()
        if k == 1:
            return self._var_slice(x, d)
        return self.T.get(k, {}).get(d, empty_packed())

    def _chain_D(self, k: int, d: int, x: list[Packed]) -> Packed:
        if k <= 0:
            return empty_packed()
        if k == 1:
            return self.D[1][0] if d == 0 else empty_packed()
        return self.D.get(k, {}).get(d, empty_packed())

    def _extend_T(self, x: list[Packed], y: list[Packed], z: list[Packed], upto: int) -> None:
        me = self.max_eta
        for d in range(self._t_done + 1, upto + 1):
            acc = SliceAccumulator(me)
            for v in (x, y, z):
                for d1 in range(1, d):
                    acc.add_packed_product(self._var_slice(v, d1), self._var_slice(v, d - d1))
            self.rho2[d] = packed_clean(acc.result_packed())
            for k in range(2, d + 1):
                tk = self.T.setdefault(k, {})
                ak = (2 * k - 1) / k
                bk = (k - 1) / k
                acc = SliceAccumulator(me)
                for d1 in range(1, d):
                    acc.add_packed_product(self._var_slice(x, d1), self._chain_T(k - 1, d - d1, x), ak)
                for d1 in range(2, d + 1):
                    acc.add_packed_product(self.rho2.get(d1, empty_packed()), self._chain_T(k - 2, d - d1, x), -bk)
                tk[d] = packed_clean(acc.result_packed())
        self._t_done = max(self._t_done, upto)

    def _extend_D(self, x: list[Packed], upto: int) -> None:
        me = self.max_eta
        for d in range(self._d_done + 1, upto + 1):
            for k in range(2, d + 2):
                dk = self.D.setdefault(k, {})
                acc = SliceAccumulator(me)
                for d1 in range(1, d + 1):
                    acc.add_packed_product(self._var_slice(x, d1), self._chain_D(k - 1, d - d1, x))
                acc.add_packed(self._chain_T(k - 1, d, x), float(k))
                dk[d] = packed_clean(acc.result_packed())
            acc = SliceAccumulator(me)
            for kk in range(3, min(d + 3, self.params.n_max + 1)):
                acc.add_packed(self._chain_D(kk - 1, d, x), self.params.c[kk])
            self.S[d] = acc.result_packed()
        self._d_done = max(self._d_done, upto)

    def gradient_slice(self, x: list[Packed], y: list[Packed], z: list[Packed], n: int) -> tuple[Packed, Packed, Packed]:
        """Order-n slice of (dU/dx, dU/dy, dU/dz) in packed form; needs c up to n+1."""
        params = self.params
        if params.n_max < n + 1:
            raise ValueError(f"Legendre table too short: need c_{n + 1}, have n_max={params.n_max}")
        me = self.max_eta
        self._extend_T(x, y, z, n)
        self._extend_D(x, n - 1)
        accx = SliceAccumulator(me)
        for kk in range(3, n + 2):
            accx.add_packed(self._chain_T(kk - 1, n, x), params.c[kk] * kk)
        accy = SliceAccumulator(me)
        accz = SliceAccumulator(me)
        for d1 in range(1, n):
            ssum = self.S.get(n - d1)
            if ssum is None or len(ssum[0]) == 0:
                continue
            accy.add_packed_product(self._var_slice(y, d1), ssum, -1.0)
            accz.add_packed_product(self._var_slice(z, d1), ssum, -1.0)
        return (
            packed_clean(accx.result_packed()),
            packed_clean(accy.result_packed()),
            packed_clean(accz.result_packed()),
        )

    def term_count(self) -> int:
        total = 0
        for bank in (self.T, self.D):
            for per_order in bank.values():
                total += sum(len(keys) for keys, _ in per_order.values())
        return total


def _series_to_packed(series: TrigExpSeries, max_order: int) -> list[Packed]:
    slices: list[Slice] = [{} for _ in range(max_order + 1)]
    for key, val in series.terms.items():
        d = index_order(key)
        if d <= max_order:
            slices[d][key] = val
    return [pack_slice(sl) for sl in slices]


def potential_gradient(
    x: TrigExpSeries,
    y: TrigExpSeries,
    z: TrigExpSeries,
    params: SystemParams,
    max_order: int,
    max_eta: int | None = None,
) -> tuple[TrigExpSeries, TrigExpSeries, TrigExpSeries]:
    """Gradient of the cubic-and-higher Legendre potential composed with (x, y, z)."""
    xs = _series_to_packed(x, max_order)
    ys = _series_to_packed(y, max_order)
    zs = _series_to_packed(z, max_order)
    chain = _Chain(params, max_eta)
    gx: Slice = {}
    gy: Slice = {}
    gz: Slice = {}
    for n in range(2, max_order + 1):
        px, py, pz = chain.gradient_slice(xs, ys, zs, n)
        gx.update(unpack_to_slice(px))
        gy.update(unpack_to_slice(py))
        gz.update(unpack_to_slice(pz))
    return (
        TrigExpSeries(gx, canonical=True),
        TrigExpSeries(gy, canonical=True),
        TrigExpSeries(gz, canonical=True),
    )

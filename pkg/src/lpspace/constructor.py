"""Order-by-order construction of the coupled series solution.

The modified local equations of motion carry a coupling correction in the
vertical channel,

    x'' - 2y' - (1 + 2 c2) x = dU/dx
    y'' + 2x' + (c2 - 1)  y = dU/dy
    z''            + c2   z = dU/dz + eta * Delta * x,

and the solution is sought as a mixed trig-exponential expansion in the four
amplitudes, with amplitude-dependent frequencies (omega, nu, lambda) and a
bifurcation factor Delta = sum d_ijkm a1^i a2^j a3^k a4^m.  Time derivatives
act through the angle variables,

    v' = omega dv/dth1 + nu dv/dth2 + lambda dv/dth3,

so the order-n part of each equation splits into a linear action on the new
order-n coefficients, a few "channel" terms that are linear in the order-(n-1)
frequency/Delta corrections, and fully known lower-order content.  The solver
normalises exactly as follows (see docs/derivation.md for the algebra):

    resonant (p, q, k-m) = (1, 0, 0):  x := 0, z := 0; solve (y_sin, omega'),
        then Delta' from the vertical row (divided by eta);
    (0, 1, 0): in-plane solved directly; z := 0, nu' from the degenerate row;
    (0, 0, +1) and (0, 0, -1): x := 0, solve (y_cos, lambda'); vertical row
        yields z using the Delta' fixed by the (1,0,0) pass of the same order;
    everything else: nonsingular 4x4 and 2x2 solves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._fast import Packed, SliceAccumulator, empty_packed, pack_slice, packed_diff
from .model import Frequencies, SystemParams, frequencies
from .series import (
    ETA_ONE,
    ETA_VAR,
    ETA_ZERO,
    AmplitudeSeries,
    EtaPoly,
    Key4,
    Key6,
    Slice,
    TrigExpSeries,
    _Chain,
    amp_to_slice,
    amplitude_product_slice,
    clean_slice,
    diff_slice,
    eta_add,
    eta_div_eta,
    eta_max_abs,
    eta_mul,
    eta_neg,
    eta_scale,
    eta_shift_up,
    eta_sub,
    eta_trim,
    index_order,
)

__all__ = [
    "SolutionSet",
    "OrderRHS",
    "ConstructionError",
    "ResonanceError",
    "initialize_linear",
    "assemble_rhs",
    "solve_order",
    "build",
    "residual_order_slices",
    "residual_order_max",
]


class ConstructionError(RuntimeError):
    """The order-n solve hit an inconsistent or unsupported structure."""


class ResonanceError(ConstructionError):
    """A generic-case system is numerically singular for this mu/point."""


@dataclass(frozen=True)
class SolutionSet:
    """Completed series solution through ``order``."""

    params: SystemParams
    x: TrigExpSeries
    y: TrigExpSeries
    z: TrigExpSeries
    omega: AmplitudeSeries
    nu: AmplitudeSeries
    lam: AmplitudeSeries
    delta: AmplitudeSeries
    order: int

    @property
    def freqs(self) -> Frequencies:
        return frequencies(self.params)


@dataclass(frozen=True)
class OrderRHS:
    """Known order-n forcing of the three equations, keyed by multi-index.

    Values are (cos, sin) coefficient pairs; they are what the order-n
    unknowns (new coefficients plus the order-(n-1) frequency / coupling
    corrections) must reproduce.
    """

    order: int
    ex: Slice
    ey: Slice
    ez: Slice


_D2_COMBOS = (
    ("oo", "theta1", "theta1", 1.0),
    ("nn", "theta2", "theta2", 1.0),
    ("ll", "theta3", "theta3", 1.0),
    ("on", "theta1", "theta2", 2.0),
    ("ol", "theta1", "theta3", 2.0),
    ("nl", "theta2", "theta3", 2.0),
)

_D1_COMBOS = (("o", "theta1"), ("n", "theta2"), ("l", "theta3"))


class _WorkState:
    """Mutable scratch state shared by build / assemble / solve / verify."""

    def __init__(self, params: SystemParams, target_order: int, max_terms: int = 5_000_000):
        if params.n_max < target_order + 1:
            raise ConstructionError(
                f"params.n_max={params.n_max} too small for order {target_order} (need >= order + 1)"
            )
        self.params = params
        self.N = target_order
        self.max_eta = 2 * max(target_order, 2)
        self.max_terms = max_terms
        self.fr = frequencies(params)
        n = target_order
        self.xs: list[Slice] = [{} for _ in range(n + 1)]
        self.ys: list[Slice] = [{} for _ in range(n + 1)]
        self.zs: list[Slice] = [{} for _ in range(n + 1)]
        self.xp: list[Packed] = [empty_packed() for _ in range(n + 1)]
        self.yp: list[Packed] = [empty_packed() for _ in range(n + 1)]
        self.zp: list[Packed] = [empty_packed() for _ in range(n + 1)]
        self.omega = AmplitudeSeries()
        self.nu = AmplitudeSeries()
        self.lam = AmplitudeSeries()
        self.delta = AmplitudeSeries()
        self.filled = 0
        self.chain = _Chain(params, self.max_eta)
        self._freq_prod_cache: dict[tuple[str, int], Packed] = {}
        self._deriv_cache: dict[tuple[str, int, str], Packed] = {}
        self._lam_assigned: set[Key4] = set()

    # -- construction of the linear solution ---------------------------------

    def set_linear(self) -> None:
        fr = self.fr
        k1, k2, k3 = fr.kappa1, fr.kappa2, fr.kappa3
        self.xs[1] = {
            (1, 0, 0, 0, 1, 0): (ETA_ONE, ETA_ZERO),
            (0, 0, 1, 0, 0, 0): (ETA_ONE, ETA_ZERO),
            (0, 0, 0, 1, 0, 0): (ETA_ONE, ETA_ZERO),
        }
        self.ys[1] = {
            (1, 0, 0, 0, 1, 0): (ETA_ZERO, (k1,)),
            (0, 0, 1, 0, 0, 0): ((k2,), ETA_ZERO),
            (0, 0, 0, 1, 0, 0): ((-k2,), ETA_ZERO),
        }
        self.zs[1] = {
            (0, 1, 0, 0, 0, 1): (ETA_ONE, ETA_ZERO),
            (1, 0, 0, 0, 1, 0): (ETA_VAR, ETA_ZERO),
            (0, 0, 1, 0, 0, 0): ((0.0, k3), ETA_ZERO),
            (0, 0, 0, 1, 0, 0): ((0.0, k3), ETA_ZERO),
        }
        self.omega = AmplitudeSeries({(0, 0, 0, 0): (fr.omega0,)})
        self.nu = AmplitudeSeries({(0, 0, 0, 0): (fr.nu0,)})
        self.lam = AmplitudeSeries({(0, 0, 0, 0): (fr.lambda0,)})
        self.delta = AmplitudeSeries({(0, 0, 0, 0): (fr.nu0**2 - fr.omega0**2,)})
        self._repack(1)
        self.filled = 1

    @staticmethod
    def from_solution(
        solution: SolutionSet,
        target_order: int | None = None,
        keep_upto: int | None = None,
        max_terms: int = 5_000_000,
    ) -> "_WorkState":
        """Rebuild scratch state; ``keep_upto`` truncates the position orders
        retained (frequencies/Delta are cut one order lower, matching the
        bookkeeping of an in-progress build)."""
        n = target_order if target_order is not None else solution.order
        keep = min(solution.order, n) if keep_upto is None else min(keep_upto, solution.order, n)
        st = _WorkState(solution.params, n, max_terms)
        for series, slices in ((solution.x, st.xs), (solution.y, st.ys), (solution.z, st.zs)):
            for key, val in series.terms.items():
                d = index_order(key)
                if d <= keep:
                    slices[d][key] = val
        fcut = keep - 1 if keep_upto is not None else n
        st.omega = solution.omega.truncate(fcut)
        st.nu = solution.nu.truncate(fcut)
        st.lam = solution.lam.truncate(fcut)
        st.delta = solution.delta.truncate(fcut)
        for d in range(1, keep + 1):
            st._repack(d)
        st.filled = keep
        return st

    def to_solution(self, order: int) -> SolutionSet:
        def merge(slices: list[Slice]) -> TrigExpSeries:
            out: Slice = {}
            for d in range(order + 1):
                out.update(slices[d])
            return TrigExpSeries(out, canonical=True)

        return SolutionSet(
            params=self.params,
            x=merge(self.xs),
            y=merge(self.ys),
            z=merge(self.zs),
            omega=self.omega.truncate(order - 1),
            nu=self.nu.truncate(order - 1),
            lam=self.lam.truncate(order - 1),
            delta=self.delta.truncate(order - 1),
            order=order,
        )

    def _repack(self, d: int) -> None:
        self.xp[d] = pack_slice(self.xs[d])
        self.yp[d] = pack_slice(self.ys[d])
        self.zp[d] = pack_slice(self.zs[d])

    # -- frequency products ---------------------------------------------------

    def _freq(self, tag: str) -> AmplitudeSeries:
        return {"o": self.omega, "n": self.nu, "l": self.lam}[tag]

    def _freq_product_slice(self, tag: str, a: int) -> Packed:
        got = self._freq_prod_cache.get((tag, a))
        if got is None:
            amp = amplitude_product_slice(self._freq(tag[0]), self._freq(tag[1]), a, self.max_eta)
            got = pack_slice(amp_to_slice(amp))
            self._freq_prod_cache[(tag, a)] = got
        return got

    def invalidate_freq_cache(self) -> None:
        self._freq_prod_cache.clear()

    # -- derivatives -----------------------------------------------------------

    def _packed(self, var: str) -> list[Packed]:
        return {"x": self.xp, "y": self.yp, "z": self.zp}[var]

    def _deriv(self, var: str, d: int, which: tuple[str, ...]) -> Packed:
        """d-th order slice of a repeated angle derivative of one variable."""
        tag = "".join(which)
        key = (var, d, tag)
        got = self._deriv_cache.get(key)
        if got is not None:
            return got
        sl = self._packed(var)[d] if d <= self.N else empty_packed()
        for w in which:
            sl = packed_diff(sl, w)
        if d <= self.filled:
            self._deriv_cache[key] = sl
        return sl

    # -- the order-n operator slice ---------------------------------------------

    def equation_slices(self, n: int) -> tuple[Slice, Slice, Slice]:
        """Order-n coefficients of the three equation residuals.

        Every term present in the state contributes; absent orders contribute
        nothing, so the same routine serves assembly (state truncated below n)
        and verification (state complete through n).
        """
        params = self.params
        c2 = params.c2
        me = self.max_eta
        if n >= 2:
            px, py, pz = self.chain.gradient_slice(self.xp, self.yp, self.zp, n)
        else:
            px, py, pz = empty_packed(), empty_packed(), empty_packed()

        ex = SliceAccumulator(me)
        ey = SliceAccumulator(me)
        ez = SliceAccumulator(me)

        # second time derivatives of x, y, z
        for var, acc in (("x", ex), ("y", ey), ("z", ez)):
            for tag, w1, w2, f in _D2_COMBOS:
                for a in range(0, n):
                    amp = self._freq_product_slice(tag, a)
                    if len(amp[0]) == 0:
                        continue
                    acc.add_packed_product(amp, self._deriv(var, n - a, (w1, w2)), f)

        # Coriolis terms -2y', +2x'
        for var, acc, f0 in (("y", ex, -2.0), ("x", ey, 2.0)):
            for tag, w in _D1_COMBOS:
                freq = self._freq(tag)
                for (i1, j1, k1, m1), poly in freq.terms.items():
                    a = i1 + j1 + k1 + m1
                    if a >= n:
                        continue
                    amp = pack_slice(amp_to_slice({(i1, j1, k1, m1): poly}))
                    acc.add_packed_product(amp, self._deriv(var, n - a, (w,)), f0)

        # linear restoring terms
        if n <= self.N:
            ex.add_packed(self.xp[n], -(1.0 + 2.0 * c2))
            ey.add_packed(self.yp[n], c2 - 1.0)
            ez.add_packed(self.zp[n], c2)

        # gradient of the cubic-and-higher potential moves to the left
        ex.add_packed(px, -1.0)
        ey.add_packed(py, -1.0)
        ez.add_packed(pz, -1.0)

        # coupling correction -eta * Delta * x in the vertical equation
        for (i1, j1, k1, m1), poly in self.delta.terms.items():
            a = i1 + j1 + k1 + m1
            if a >= n:
                continue
            if n - a <= self.N:
                amp = pack_slice(amp_to_slice({(i1, j1, k1, m1): eta_shift_up(poly)}))
                ez.add_packed_product(amp, self.xp[n - a], -1.0)

        return ex.result(), ey.result(), ez.result()

    # -- order-n solve ------------------------------------------------------------

    def solve(self, n: int, rhs: OrderRHS) -> None:
        if rhs.order != n:
            raise ConstructionError(f"RHS is for order {rhs.order}, expected {n}")
        if self.filled != n - 1:
            raise ConstructionError(f"solution filled through {self.filled}, cannot solve order {n}")
        fr = self.fr
        c2 = self.params.c2
        w0, n0, l0 = fr.omega0, fr.nu0, fr.lambda0
        k1, k2, k3 = fr.kappa1, fr.kappa2, fr.kappa3
        g1 = -1.0 - 2.0 * c2
        g2 = c2 - 1.0
        d0 = n0**2 - w0**2  # constant coupling coefficient of Delta

        keys = sorted(set(rhs.ex) | set(rhs.ey) | set(rhs.ez))
        scale = 0.0
        for sl in (rhs.ex, rhs.ey, rhs.ez):
            for c, s in sl.values():
                scale = max(scale, eta_max_abs(c), eta_max_abs(s))
        drop_tol = 1e-8 * max(scale, 1e-300)

        def get(sl: Slice, key: Key6) -> tuple[EtaPoly, EtaPoly]:
            return sl.get(key, (ETA_ZERO, ETA_ZERO))

        def check_zero(poly: EtaPoly, what: str, key: Key6) -> None:
            if eta_max_abs(poly) > drop_tol:
                raise ConstructionError(
                    f"expected vanishing {what} at {key}: |coef|={eta_max_abs(poly):.3e} vs scale {scale:.3e}"
                )

        nx: Slice = {}
        ny: Slice = {}
        nz: Slice = {}

        def put(sl: Slice, key: Key6, c: EtaPoly, s: EtaPoly) -> None:
            c, s = eta_trim(c), eta_trim(s)
            if c or s:
                sl[key] = (c, s)

        case1, case2, case3, case4, generic = [], [], [], [], []
        for key in keys:
            i, j, k, m, p, q = key
            if p == 1 and q == 0 and k == m:
                case1.append(key)
            elif p == 0 and q == 1 and k == m:
                case2.append(key)
            elif p == 0 and q == 0 and k == m + 1:
                case3.append(key)
            elif p == 0 and q == 0 and m == k + 1:
                case4.append(key)
            else:
                generic.append(key)

        # (1, 0, 0): resonant with the planar frequency
        A1 = np.array([[-2.0 * w0, -2.0 * (w0 + k1)], [g2 - w0**2, -2.0 * (1.0 + k1 * w0)]])
        for key in case1:
            i, j, k, m, p, q = key
            if i < 1:
                raise ConstructionError(f"planar-resonant index with i=0: {key}")
            r, rbar = get(rhs.ex, key)
            s, sbar = get(rhs.ey, key)
            t, tbar = get(rhs.ez, key)
            check_zero(rbar, "sin part of the x equation", key)
            check_zero(s, "cos part of the y equation", key)
            sy, wcorr = _solve_const_system(A1, (r, sbar))
            put(ny, key, ETA_ZERO, sy)
            self._assign(self.omega, (i - 1, j, k, k), wcorr, "omega")
            # vertical row: z := 0, the correction factor takes the残 full load
            u = eta_add(t, eta_shift_up(eta_scale(wcorr, 2.0 * w0)))
            try:
                dcorr = eta_neg(eta_div_eta(u, rel_tol=1e-7))
            except ArithmeticError as exc:
                raise ConstructionError(f"vertical forcing at {key} has an eta-free part: {exc}") from exc
            self._assign(self.delta, (i - 1, j, k, k), dcorr, "delta")
            sz = eta_scale(tbar, 1.0 / d0)
            put(nz, key, ETA_ZERO, sz)

        # (0, 1, 0): resonant with the vertical frequency
        M2a = np.array([[g1 - n0**2, -2.0 * n0], [-2.0 * n0, g2 - n0**2]])
        M2b = np.array([[g1 - n0**2, 2.0 * n0], [2.0 * n0, g2 - n0**2]])
        for key in case2:
            i, j, k, m, p, q = key
            if j < 1:
                raise ConstructionError(f"vertical-resonant index with j=0: {key}")
            r, rbar = get(rhs.ex, key)
            s, sbar = get(rhs.ey, key)
            t, tbar = get(rhs.ez, key)
            cx, sy = _solve_const_system(M2a, (r, sbar))
            sx, cy = _solve_const_system(M2b, (rbar, s))
            put(nx, key, cx, sx)
            put(ny, key, cy, sy)
            # degenerate vertical row: z := 0, solve the frequency correction
            tcos = eta_add(t, eta_mul(eta_shift_up(cx), (d0,), self.max_eta))
            ncorr = eta_scale(tcos, -1.0 / (2.0 * n0))
            self._assign(self.nu, (i, j - 1, k, k), ncorr, "nu")
            tsin = eta_add(tbar, eta_mul(eta_shift_up(sx), (d0,), self.max_eta))
            check_zero(tsin, "sin part of the degenerate vertical row", key)

        # (0, 0, +-1): resonant with the hyperbolic rate
        A3 = np.array([[-2.0 * l0, 2.0 * (l0 - k2)], [l0**2 + g2, 2.0 * (k2 * l0 + 1.0)]])
        A4 = np.array([[2.0 * l0, 2.0 * (l0 - k2)], [l0**2 + g2, -2.0 * (k2 * l0 + 1.0)]])
        for key in case3 + case4:
            i, j, k, m, p, q = key
            is3 = k == m + 1
            r, rbar = get(rhs.ex, key)
            s, sbar = get(rhs.ey, key)
            t, tbar = get(rhs.ez, key)
            check_zero(rbar, "sin part of the x equation", key)
            check_zero(sbar, "sin part of the y equation", key)
            check_zero(tbar, "sin part of the z equation", key)
            cy, lcorr = _solve_const_system(A3 if is3 else A4, (r, s))
            put(ny, key, cy, ETA_ZERO)
            lkey = (i, j, m, m) if is3 else (i, j, k, k)
            existing = self.lam.terms.get(lkey)
            if existing is None and not (lkey in self._lam_assigned):
                self._assign(self.lam, lkey, lcorr, "lambda")
            else:
                ref = self.lam.get(lkey)
                diff = eta_max_abs(eta_sub(ref, lcorr))
                if diff > 1e-6 * max(eta_max_abs(ref), eta_max_abs(lcorr), scale * 1e-8, 1e-300):
                    raise ConstructionError(
                        f"inconsistent hyperbolic frequency correction at {lkey}: mismatch {diff:.3e}"
                    )
                lcorr = ref
            dpoly = self.delta.get(lkey)
            num = eta_add(
                t,
                eta_sub(
                    eta_shift_up(dpoly),
                    eta_shift_up(eta_scale(lcorr, 2.0 * l0 * k3)),
                ),
            )
            put(nz, key, eta_scale(num, 1.0 / (l0**2 + c2)), ETA_ZERO)

        # everything else: nonsingular solves
        for key in generic:
            i, j, k, m, p, q = key
            wpq = p * w0 + q * n0
            ell = (k - m) * l0
            psi2 = ell**2 - wpq**2
            r, rbar = get(rhs.ex, key)
            s, sbar = get(rhs.ey, key)
            t, tbar = get(rhs.ez, key)
            if p == 0 and q == 0:
                A = np.array([[psi2 + g1, -2.0 * ell], [2.0 * ell, psi2 + g2]])
                cx, cy = _solve_poly_system(A, (r, s))
                put(nx, key, cx, ETA_ZERO)
                put(ny, key, cy, ETA_ZERO)
                tz = eta_add(t, eta_mul(eta_shift_up(cx), (d0,), self.max_eta))
                put(nz, key, eta_scale(tz, 1.0 / (psi2 + c2)), ETA_ZERO)
            else:
                A = np.array(
                    [
                        [psi2 + g1, -2.0 * wpq, 2.0 * ell * wpq, -2.0 * ell],
                        [-2.0 * wpq, psi2 + g2, 2.0 * ell, -2.0 * ell * wpq],
                        [-2.0 * ell * wpq, -2.0 * ell, psi2 + g1, 2.0 * wpq],
                        [2.0 * ell, 2.0 * ell * wpq, 2.0 * wpq, psi2 + g2],
                    ]
                )
                cx, sy, sx, cy = _solve_poly_system(A, (r, sbar, rbar, s))
                put(nx, key, cx, sx)
                put(ny, key, cy, sy)
                Az = np.array([[psi2 + c2, 2.0 * ell * wpq], [-2.0 * ell * wpq, psi2 + c2]])
                tz = eta_add(t, eta_mul(eta_shift_up(cx), (d0,), self.max_eta))
                tzbar = eta_add(tbar, eta_mul(eta_shift_up(sx), (d0,), self.max_eta))
                cz, sz = _solve_poly_system(Az, (tz, tzbar))
                put(nz, key, cz, sz)

        self.xs[n] = clean_slice(nx)
        self.ys[n] = clean_slice(ny)
        self.zs[n] = clean_slice(nz)
        self._repack(n)
        self.filled = n
        self.invalidate_freq_cache()
        self._lam_assigned.clear()
        self._check_budget()
        bad = [k for sl in (self.xs[n], self.ys[n], self.zs[n]) for k in _parity_violations(sl)]
        if bad:
            raise ConstructionError(f"order-{n} coefficients break the harmonic parity rule: {bad[:5]}")

    def _assign(self, series: AmplitudeSeries, key: Key4, poly: EtaPoly, what: str) -> None:
        if key in series.terms:
            raise ConstructionError(f"duplicate assignment of {what}[{key}]")
        poly = eta_trim(poly)
        if poly:
            series.terms[key] = poly
        if what == "lambda":
            self._lam_assigned.add(key)

    def _check_budget(self) -> None:
        total = sum(len(s) for s in self.xs) + sum(len(s) for s in self.ys) + sum(len(s) for s in self.zs)
        total += self.chain.term_count()
        if total > self.max_terms:
            raise MemoryError(f"series term budget exceeded: {total} > {self.max_terms}")


def _parity_violations(sl: Slice) -> list[Key6]:
    return [
        (i, j, k, m, p, q)
        for (i, j, k, m, p, q) in sl
        if (p - i) % 2 or (q - j) % 2 or abs(p) > i or abs(q) > j
    ]


def _solve_const_system(A: np.ndarray, rhs: tuple[EtaPoly, ...]) -> list[EtaPoly]:
    det = float(np.linalg.det(A))
    norm = float(np.abs(A).max()) ** A.shape[0]
    if abs(det) < 1e-12 * max(norm, 1e-300):
        raise ResonanceError(f"singular normalisation system (det={det:.3e})")
    return _stacked_solve(A, rhs)


def _solve_poly_system(A: np.ndarray, rhs: tuple[EtaPoly, ...]) -> list[EtaPoly]:
    det = float(np.linalg.det(A))
    norm = float(np.abs(A).max()) ** A.shape[0]
    if abs(det) < 1e-10 * max(norm, 1e-300):
        raise ResonanceError(f"near-singular generic system (det={det:.3e}): resonance for this mu/point")
    return _stacked_solve(A, rhs)


def _stacked_solve(A: np.ndarray, rhs: tuple[EtaPoly, ...]) -> list[EtaPoly]:
    nrow = A.shape[0]
    deg = max((len(p) for p in rhs), default=0)
    if deg == 0:
        return [ETA_ZERO] * nrow
    B = np.zeros((nrow, deg))
    for irow, poly in enumerate(rhs):
        if poly:
            B[irow, : len(poly)] = poly
    X = np.linalg.solve(A, B)
    return [eta_trim(X[irow]) for irow in range(nrow)]


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def initialize_linear(params: SystemParams) -> SolutionSet:
    """Order-1 solution of the coupling-modified linear system."""
    st = _WorkState(params, 1)
    st.set_linear()
    return st.to_solution(1)


def assemble_rhs(solution: SolutionSet, n: int) -> OrderRHS:
    """Collect all known order-n forcing terms from a solution complete to n-1."""
    if solution.order < n - 1:
        raise ConstructionError(f"solution complete through {solution.order}, cannot assemble order {n}")
    st = _WorkState.from_solution(solution, target_order=n, keep_upto=n - 1)
    return _assemble(st, n)


def _assemble(st: _WorkState, n: int) -> OrderRHS:
    ex, ey, ez = st.equation_slices(n)

    def negate(sl: Slice) -> Slice:
        return {k: (eta_neg(c), eta_neg(s)) for k, (c, s) in sl.items()}

    return OrderRHS(order=n, ex=negate(ex), ey=negate(ey), ez=negate(ez))


def solve_order(solution: SolutionSet, n: int, rhs: OrderRHS) -> SolutionSet:
    """Extend a solution complete through n-1 to order n."""
    st = _WorkState.from_solution(solution, target_order=n, keep_upto=n - 1)
    st.solve(n, rhs)
    return st.to_solution(n)


def build(params: SystemParams, order: int, *, max_terms: int = 5_000_000, check: bool = False) -> SolutionSet:
    """Run the full recursion up to ``order``.

    With ``check=True`` every completed order is verified by substituting the
    series back into the equations (roughly doubles the run time).
    """
    if order < 1:
        raise ConstructionError(f"order must be >= 1, got {order}")
    st = _WorkState(params, order, max_terms)
    st.set_linear()
    for n in range(2, order + 1):
        rhs = _assemble(st, n)
        st.solve(n, rhs)
        if check:
            _verify_order(st, n)
    return st.to_solution(order)


def _verify_order(st: _WorkState, n: int, rel_tol: float = 1e-9) -> None:
    ex, ey, ez = st.equation_slices(n)
    top = 0.0
    for d in range(1, n + 1):
        for sl in (st.xs[d], st.ys[d], st.zs[d]):
            for c, s in sl.values():
                top = max(top, eta_max_abs(c), eta_max_abs(s))
    worst = 0.0
    for sl in (ex, ey, ez):
        for c, s in sl.values():
            worst = max(worst, eta_max_abs(c), eta_max_abs(s))
    if worst > rel_tol * max(top, 1.0):
        raise ConstructionError(f"order-{n} residual {worst:.3e} exceeds {rel_tol:.1e} x scale {top:.3e}")


def residual_order_slices(solution: SolutionSet, n: int) -> tuple[Slice, Slice, Slice]:
    """Order-n coefficients left over when the series is substituted back."""
    st = _WorkState.from_solution(solution, target_order=max(n, solution.order))
    return st.equation_slices(n)


def residual_order_max(solution: SolutionSet, n: int) -> float:
    """Largest order-n residual coefficient (should vanish for n <= order)."""
    worst = 0.0
    for sl in residual_order_slices(solution, n):
        for c, s in sl.values():
            worst = max(worst, eta_max_abs(c), eta_max_abs(s))
    return worst

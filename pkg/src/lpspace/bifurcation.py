"""Coupling-coefficient bifurcation analysis.

The vertical-correction factor Delta collapses, once amplitudes are fixed,
to an even polynomial in the coupling coefficient eta.  Real roots of
Delta(eta) = 0 are the admissible nonzero couplings; eta = 0 is always
admissible (it removes the coupling term altogether).  At truncation
order 3 the polynomial is a quadratic in u = eta^2,

    a u^2 + b u + c = 0,
    a = l1 A1 + l2 A34,
    b = l3 A1 + l4 A2 + l5 A34,
    c = l6 A1 + l7 A2 + l8 A34 - (w0^2 - n0^2),

with A1 = alpha1^2, A2 = alpha2^2, A34 = alpha3*alpha4, which makes the
critical-surface classification (c = 0 fold, a = 0 degeneracy, D = 0
tangency) explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constructor import SolutionSet
from .series import AmplitudeSeries, EtaPoly, eta_eval, eta_max_abs

__all__ = [
    "BifurcationSlice",
    "CriticalCase",
    "EtaSolutionReport",
    "third_order_constants",
    "delta_eta_polynomial",
    "solve_eta",
    "classify_critical",
    "analytic_root_count",
    "solution_count_map",
    "brute_force_root_count",
]


class CriticalCase(Enum):
    NO_ROOT = "no_root"
    TRIVIAL_ONLY = "trivial_only"
    HYPERBOLOID_C0 = "hyperboloid_c0"
    PARABOLOID_A0 = "paraboloid_a0"
    DISCRIMINANT_D0 = "discriminant_D0"
    GENERIC = "generic"


@dataclass(frozen=True)
class BifurcationSlice:
    """Third-order bifurcation constants for one system."""

    l1: float
    l2: float
    l3: float
    l4: float
    l5: float
    l6: float
    l7: float
    l8: float
    freq_gap: float  # w0^2 - n0^2
    delta: AmplitudeSeries
    order: int

    def quadratic_coeffs(self, alphas) -> tuple[float, float, float]:
        """(a, b, c) of the quadratic in eta^2 at the given amplitudes."""
        a1, a2, a3, a4 = alphas
        A1, A2, A34 = a1 * a1, a2 * a2, a3 * a4
        a = self.l1 * A1 + self.l2 * A34
        b = self.l3 * A1 + self.l4 * A2 + self.l5 * A34
        c = self.l6 * A1 + self.l7 * A2 + self.l8 * A34 - self.freq_gap
        return a, b, c


@dataclass(frozen=True)
class EtaSolutionReport:
    """Real roots of the collapsed bifurcation polynomial at fixed amplitudes."""

    alphas: tuple[float, float, float, float]
    roots: tuple[float, ...]  # real roots, ascending (negative twins included)
    multiplicities: tuple[int, ...]
    case: CriticalCase
    discriminant: float
    eta_poly: EtaPoly
    rejected_u: tuple[complex, ...]  # complex / negative roots in u = eta^2
    zero_admissible: bool = True  # eta = 0 always satisfies eta * Delta = 0

    @property
    def positive_roots(self) -> tuple[float, ...]:
        return tuple(r for r in self.roots if r > 0)


def third_order_constants(solution: SolutionSet, tol: float = 1e-9) -> BifurcationSlice:
    """Extract l1..l8 from the order-3 part of the Delta expansion."""
    if solution.order < 3:
        raise ValueError(f"solution order {solution.order} < 3: no bifurcation content")
    delta = solution.delta
    need = [(0, 0, 0, 0), (2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 1, 1)]
    if not delta.get((0, 0, 0, 0)):
        raise ValueError("Delta series lacks its constant entry; built without coupling machinery?")
    d0000, d2000, d0200, d0011 = (delta.get(k) for k in need)

    def coef(poly: EtaPoly, deg: int) -> float:
        return poly[deg] if deg < len(poly) else 0.0

    scale = max(eta_max_abs(d2000), eta_max_abs(d0200), eta_max_abs(d0011), 1e-300)
    for poly, name in ((d2000, "alpha1^2"), (d0200, "alpha2^2"), (d0011, "alpha3*alpha4")):
        for deg, v in enumerate(poly):
            if deg % 2 == 1 and abs(v) > tol * scale:
                raise ValueError(f"odd eta power in the {name} bifurcation entry: degree {deg}")
    if abs(coef(d0200, 4)) > tol * scale:
        raise ValueError("unexpected eta^4 content in the alpha2^2 entry")
    fr = solution.freqs
    return BifurcationSlice(
        l1=coef(d2000, 4),
        l2=coef(d0011, 4),
        l3=coef(d2000, 2),
        l4=coef(d0200, 2),
        l5=coef(d0011, 2),
        l6=coef(d2000, 0),
        l7=coef(d0200, 0),
        l8=coef(d0011, 0),
        freq_gap=fr.omega0**2 - fr.nu0**2,
        delta=solution.delta,
        order=solution.order,
    )


def delta_eta_polynomial(
    solution: SolutionSet, alphas, max_order: int | None = None, odd_tol: float = 1e-9
) -> EtaPoly:
    """Collapse Delta at fixed amplitudes to an even polynomial in eta.

    Odd eta powers must cancel (they do up to round-off); they are checked
    against ``odd_tol`` relative to the largest coefficient and dropped.
    """
    poly = solution.delta.eta_poly_at(tuple(alphas), max_order=max_order)
    if not poly:
        return poly
    arr = np.asarray(poly)
    scale = np.abs(arr).max()
    odd = arr[1::2]
    if len(odd) and np.abs(odd).max() > odd_tol * scale:
        raise ValueError(f"Delta(eta) has odd content {np.abs(odd).max():.3e} vs scale {scale:.3e}")
    arr[1::2] = 0.0
    n = len(arr)
    while n > 0 and arr[n - 1] == 0.0:
        n -= 1
    return tuple(arr[:n])


def _eta_roots_of_even_poly(poly: EtaPoly, back_tol: float = 1e-10):
    """Real eta roots via companion-matrix roots in u = eta^2, Newton polished."""
    u_coeffs = np.asarray(poly[0::2], dtype=float)  # ascending powers of u
    nz = np.nonzero(u_coeffs)[0]
    if len(nz) == 0 or nz[-1] == 0:
        return [], []
    u_coeffs = u_coeffs[: nz[-1] + 1]
    u_roots = np.roots(u_coeffs[::-1])
    scale = np.abs(u_coeffs).max()
    d_poly = np.asarray(poly)
    dd_poly = np.arange(1, len(d_poly)) * d_poly[1:]
    etas = []
    rejected = []
    for u in u_roots:
        if abs(u.imag) > 1e-10 * max(1.0, abs(u)) or u.real < -1e-14:
            rejected.append(complex(u))
            continue
        eta = float(np.sqrt(max(u.real, 0.0)))
        for _ in range(8):  # Newton polish on the eta polynomial
            f = float(np.polyval(d_poly[::-1], eta))
            df = float(np.polyval(dd_poly[::-1], eta))
            if df == 0.0:
                break
            step = f / df
            eta -= step
            if abs(step) < 1e-15 * max(1.0, abs(eta)):
                break
        val = abs(np.polyval(d_poly[::-1], eta))
        if val > back_tol * scale:
            rejected.append(complex(u))
            continue
        etas.append(eta)
    return etas, rejected


def solve_eta(
    solution: SolutionSet,
    alphas,
    max_order: int | None = None,
    back_tol: float = 1e-10,
) -> EtaSolutionReport:
    """All real coupling coefficients solving Delta = 0 at fixed amplitudes."""
    alphas = tuple(float(a) for a in alphas)
    if not all(np.isfinite(alphas)):
        raise ValueError(f"amplitudes must be finite, got {alphas}")
    poly = delta_eta_polynomial(solution, alphas, max_order=max_order)
    etas, rejected = _eta_roots_of_even_poly(poly, back_tol)
    roots: list[float] = []
    mults: list[int] = []
    for eta in sorted(etas):
        if eta <= 1e-13:
            continue  # the trivial eta = 0 is reported through zero_admissible
        if roots and abs(eta - roots[-1]) < 1e-9 * max(1.0, abs(eta)):
            mults[-1] += 1
            continue
        roots.append(eta)
        mults.append(1)
    # roots come in +- pairs by evenness
    full = [-r for r in reversed(roots)] + roots
    full_m = list(reversed(mults)) + mults
    sl = third_order_constants(solution) if solution.order >= 3 else None
    if sl is None:
        case, disc = CriticalCase.GENERIC, float("nan")
    else:
        case, disc = _classify(sl, alphas)
    return EtaSolutionReport(
        alphas=alphas,
        roots=tuple(full),
        multiplicities=tuple(full_m),
        case=case,
        discriminant=disc,
        eta_poly=poly,
        rejected_u=tuple(rejected),
    )


def _classify(sl: BifurcationSlice, alphas, tol: float = 1e-12) -> tuple[CriticalCase, float]:
    a, b, c = sl.quadratic_coeffs(alphas)
    disc = b * b - 4.0 * a * c
    scale = max(abs(sl.l1), abs(sl.l3), abs(sl.l6), sl.freq_gap)
    amp2 = max(abs(alphas[0]) ** 2, abs(alphas[1]) ** 2, abs(alphas[2] * alphas[3]), 0.0)
    s = tol * scale * max(amp2, 1.0)
    if amp2 == 0.0:
        return CriticalCase.TRIVIAL_ONLY, disc
    if abs(c) <= s:
        return CriticalCase.HYPERBOLOID_C0, disc
    if abs(a) <= s * 1e-4 and alphas[2] * alphas[3] != 0.0:
        return CriticalCase.PARABOLOID_A0, disc
    if abs(disc) <= (s * max(abs(b), 1.0)):
        return CriticalCase.DISCRIMINANT_D0, disc
    if analytic_root_count(a, b, c) == 0:
        return CriticalCase.NO_ROOT, disc
    return CriticalCase.GENERIC, disc


def classify_critical(sl: BifurcationSlice, alphas, tol: float = 1e-12) -> CriticalCase:
    """Which third-order critical condition (if any) holds at these amplitudes."""
    return _classify(sl, alphas, tol)[0]


def analytic_root_count(a: float, b: float, c: float) -> int:
    """Count of real nonzero eta with a*eta^4 + b*eta^2 + c = 0 (transversal roots).

    Counted via the sign structure of the quadratic in u = eta^2: each
    simple positive u root contributes the pair +-sqrt(u).
    """
    if a == 0.0:
        if b == 0.0:
            return 0
        u = -c / b
        return 2 if u > 0.0 else 0
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return 0
    sq = float(np.sqrt(disc))
    count = 0
    for u in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
        if u > 0.0:
            count += 2
    return count


def brute_force_root_count(poly: EtaPoly, eta_max: float = 100.0, step: float = 1e-3) -> int:
    """Sign-change scan of the even polynomial over [-eta_max, eta_max].

    Exploits evenness: scans (0, eta_max] once and doubles the count.
    """
    arr = np.asarray(poly)
    if len(arr) == 0:
        return 0
    grid = np.arange(step, eta_max + step, step)
    vals = np.polyval(arr[::-1], grid)
    signs = np.sign(vals)
    changes = int(np.count_nonzero(signs[1:] * signs[:-1] < 0))
    return 2 * changes


def solution_count_map(
    solution: SolutionSet,
    alpha1_grid,
    alpha2_grid,
    a34_grid,
) -> np.ndarray:
    """Root-count table over (alpha1, alpha2, alpha3*alpha4) from the order-3 slice.

    Returns an integer array of shape (len(alpha1), len(alpha2), len(a34)).
    """
    sl = third_order_constants(solution)
    a1 = np.asarray(alpha1_grid, dtype=float)
    a2 = np.asarray(alpha2_grid, dtype=float)
    a34 = np.asarray(a34_grid, dtype=float)
    A1 = (a1**2)[:, None, None]
    A2 = (a2**2)[None, :, None]
    A34 = a34[None, None, :]
    a = sl.l1 * A1 + sl.l2 * A34
    b = sl.l3 * A1 + sl.l4 * A2 + sl.l5 * A34
    c = sl.l6 * A1 + sl.l7 * A2 + sl.l8 * A34 - sl.freq_gap
    disc = b * b - 4 * a * c
    count = np.zeros(np.broadcast_shapes(a.shape, b.shape, c.shape), dtype=np.int64)
    lin = a == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        u_lin = np.where(b != 0.0, -c / np.where(b == 0.0, 1.0, b), -1.0)
        sq = np.sqrt(np.where(disc > 0, disc, 0.0))
        u_minus = (-b - sq) / np.where(lin, 1.0, 2 * a)
        u_plus = (-b + sq) / np.where(lin, 1.0, 2 * a)
    quad = (~lin) & (disc > 0)
    count += np.where(lin & (u_lin > 0), 2, 0)
    count += np.where(quad & (u_minus > 0), 2, 0)
    count += np.where(quad & (u_plus > 0), 2, 0)
    return count

"""Concrete orbits from the series solution: classification, sampling, manifolds.

An orbit selection fixes the four amplitudes, two phases and the coupling
coefficient.  Center-part amplitudes (alpha1, alpha2) select the torus,
hyperbolic amplitudes (alpha3, alpha4) the unstable/stable content, and a
nonzero coupling must satisfy the bifurcation constraint Delta = 0 for the
series to solve the unmodified equations of motion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .bifurcation import delta_eta_polynomial, solve_eta
from .constructor import SolutionSet
from .model import State6, synodic_from_local
from .series import eta_eval, eta_max_abs

__all__ = [
    "OrbitSpec",
    "OrbitClass",
    "InadmissibleSpecError",
    "admissibility",
    "require_admissible",
    "classify",
    "scalar_frequencies",
    "OrbitEvaluator",
    "sample_trajectory",
    "manifold_branch",
]

ADMISSIBILITY_REL_TOL = 1e-8


class InadmissibleSpecError(ValueError):
    """eta is nonzero but Delta(eta) does not vanish for this spec."""


@dataclass(frozen=True)
class OrbitSpec:
    """One concrete orbit/trajectory selection."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    alpha4: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    eta: float = 0.0
    order: int | None = None  # truncation order; None = solution order

    @property
    def alphas(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)


class OrbitClass(NamedTuple):
    """Orbit family, optionally tagged with the center part it attaches to."""

    family: str
    center: str | None = None

    def __str__(self) -> str:
        return f"{self.family} of {self.center}" if self.center else self.family


def admissibility(solution: SolutionSet, spec: OrbitSpec) -> tuple[float, float]:
    """(|Delta(eta)|, coefficient scale) of the constraint at this spec."""
    poly = delta_eta_polynomial(solution, spec.alphas, max_order=spec.order)
    scale = max(eta_max_abs(poly), 1e-300)
    return abs(eta_eval(poly, spec.eta)), scale


def require_admissible(solution: SolutionSet, spec: OrbitSpec, rel_tol: float = ADMISSIBILITY_REL_TOL) -> None:
    if spec.eta == 0.0:
        return
    resid, scale = admissibility(solution, spec)
    if resid > rel_tol * scale:
        raise InadmissibleSpecError(
            f"eta={spec.eta!r} violates the coupling constraint: |Delta|={resid:.3e} vs scale {scale:.3e}"
        )


def _center_family(alpha1: float, alpha2: float, eta: float) -> str:
    has1, has2 = alpha1 != 0.0, alpha2 != 0.0
    if not has1 and not has2:
        return "libration point"
    if eta == 0.0:
        if has1 and has2:
            return "Lissajous"
        return "planar Lyapunov" if has1 else "vertical Lyapunov"
    if has1 and not has2:
        return "northern halo" if eta > 0 else "southern halo"
    return "quasihalo"


def classify(spec: OrbitSpec, solution: SolutionSet | None = None) -> OrbitClass:
    """Orbit family from the sign pattern of the amplitudes and the coupling.

    With a solution given, a nonzero coupling is first checked against the
    bifurcation constraint.
    """
    if solution is not None:
        require_admissible(solution, spec)
    center = _center_family(spec.alpha1, spec.alpha2, spec.eta)
    a3, a4 = spec.alpha3, spec.alpha4
    if a3 == 0.0 and a4 == 0.0:
        return OrbitClass(center)
    if a3 != 0.0 and a4 == 0.0:
        return OrbitClass("unstable manifold", center)
    if a3 == 0.0 and a4 != 0.0:
        return OrbitClass("stable manifold", center)
    if a3 * a4 < 0.0:
        return OrbitClass("transit", center)
    return OrbitClass("non-transit", center)


def scalar_frequencies(solution: SolutionSet, spec: OrbitSpec) -> tuple[float, float, float]:
    """(omega, nu, lambda) evaluated at the spec's amplitudes and coupling."""
    mo = spec.order
    om = solution.omega.eval(spec.alphas, spec.eta, max_order=mo)
    nu = solution.nu.eval(spec.alphas, spec.eta, max_order=mo)
    lam = solution.lam.eval(spec.alphas, spec.eta, max_order=mo)
    if not (np.isfinite(om) and np.isfinite(nu) and np.isfinite(lam)):
        raise ValueError(f"non-finite frequencies for spec {spec}")
    return om, nu, lam


class OrbitEvaluator:
    """Series collapsed at one spec for fast repeated evaluation.

    Per variable the surviving terms are grouped into harmonic rows
    (p, q, e = k - m) with scalar cos/sin weights; positions, velocities and
    accelerations come from the closed-form time derivative of each row.
    """

    def __init__(self, solution: SolutionSet, spec: OrbitSpec, check: bool = True):
        if check:
            require_admissible(solution, spec)
        self.solution = solution
        self.spec = spec
        self.params = solution.params
        self.omega, self.nu, self.lam = scalar_frequencies(solution, spec)
        a1, a2, a3, a4 = spec.alphas
        eta = spec.eta
        mo = spec.order if spec.order is not None else solution.order
        self._rows = []
        for series in (solution.x, solution.y, solution.z):
            rows: dict[tuple[int, int, int], tuple[float, float]] = {}
            for (i, j, k, m, p, q), (c, s) in series.terms.items():
                if i + j + k + m > mo:
                    continue
                amp = a1**i * a2**j * a3**k * a4**m
                if amp == 0.0:
                    continue
                cw = eta_eval(c, eta) * amp
                sw = eta_eval(s, eta) * amp
                if cw == 0.0 and sw == 0.0:
                    continue
                key = (p, q, k - m)
                oc, os = rows.get(key, (0.0, 0.0))
                rows[key] = (oc + cw, os + sw)
            keys = sorted(rows)
            self._rows.append(
                (
                    np.array([k[0] for k in keys], dtype=float),
                    np.array([k[1] for k in keys], dtype=float),
                    np.array([k[2] for k in keys], dtype=float),
                    np.array([rows[k][0] for k in keys]),
                    np.array([rows[k][1] for k in keys]),
                )
            )

    def _var(self, idx: int, t: np.ndarray, n_deriv: int) -> np.ndarray:
        p, q, e, cw, sw = self._rows[idx]
        if len(p) == 0:
            return np.zeros_like(t)
        spec = self.spec
        wpq = p * self.omega + q * self.nu
        rate = e * self.lam
        arg = np.outer(t, rate)
        if arg.size and np.abs(arg).max() > 700.0:
            raise OverflowError("exponential factor out of binary64 range; shorten the time span")
        c, s = cw.copy(), sw.copy()
        for _ in range(n_deriv):
            c, s = rate * c + wpq * s, rate * s - wpq * c
        theta = np.outer(t, wpq) + (p * spec.phi1 + q * spec.phi2)
        return (np.exp(arg) * (c * np.cos(theta) + s * np.sin(theta))).sum(axis=1)

    def positions(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self._var(i, t, 0) for i in range(3)], axis=1)

    def velocities(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self._var(i, t, 1) for i in range(3)], axis=1)

    def accelerations(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self._var(i, t, 2) for i in range(3)], axis=1)

    def states(self, t) -> np.ndarray:
        """(N, 6) local-frame states."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.hstack([self.positions(t), self.velocities(t)])

    def state6(self, t: float, frame: str = "local") -> State6:
        row = self.states(np.array([t]))[0]
        st = State6.from_array(row, "local")
        return st if frame == "local" else synodic_from_local(self.params, st)


def sample_trajectory(
    solution: SolutionSet,
    spec: OrbitSpec,
    t_grid,
    frame: str = "local",
) -> list[State6]:
    """Evaluate the series orbit on a time grid in the requested frame."""
    if frame not in ("local", "synodic"):
        raise ValueError(f"frame must be 'local' or 'synodic', got {frame!r}")
    ev = OrbitEvaluator(solution, spec)
    t = np.asarray(list(t_grid), dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("time grid contains non-finite values")
    rows = ev.states(t)
    out = []
    for row in rows:
        st = State6.from_array(row, "local")
        out.append(st if frame == "local" else synodic_from_local(solution.params, st))
    return out


_BRANCHES = {
    "unstable+": ("alpha3", +1.0),
    "unstable-": ("alpha3", -1.0),
    "stable+": ("alpha4", +1.0),
    "stable-": ("alpha4", -1.0),
}


def manifold_branch(
    solution: SolutionSet,
    center_spec: OrbitSpec,
    branch: str,
    epsilon: float,
) -> OrbitSpec:
    """Perturb a center orbit onto one manifold branch.

    Unstable branches set alpha3 = +-epsilon (follow forward in time),
    stable branches alpha4 = +-epsilon (backward in time).  A nonzero
    coupling is re-solved at the perturbed amplitudes, keeping the root
    closest to the center value.
    """
    if branch not in _BRANCHES:
        raise ValueError(f"branch must be one of {sorted(_BRANCHES)}, got {branch!r}")
    if center_spec.alpha3 != 0.0 or center_spec.alpha4 != 0.0:
        raise ValueError("center spec must have alpha3 = alpha4 = 0")
    if epsilon == 0.0:
        return center_spec
    field, sign = _BRANCHES[branch]
    spec = replace(center_spec, **{field: sign * abs(epsilon)})
    if spec.eta != 0.0:
        report = solve_eta(solution, spec.alphas, max_order=spec.order)
        if not report.roots:
            raise InadmissibleSpecError(
                f"no admissible coupling at perturbed amplitudes {spec.alphas} (center eta={center_spec.eta!r})"
            )
        eta = min(report.roots, key=lambda r: abs(r - center_spec.eta))
        spec = replace(spec, eta=eta)
        require_admissible(solution, spec)
    return spec

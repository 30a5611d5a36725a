"""CRTBP dynamical model: constants, collinear-point geometry, frames, motion.

Conventions (nondimensional synodic frame):
    - the larger primary (mass 1-mu) sits at (mu, 0, 0),
    - the smaller primary (mass mu) sits at (mu-1, 0, 0),
    - the frame rotates with unit angular rate, unit primary separation.

The local frame of a collinear point translates the origin to the point and
rescales lengths by gamma (distance point -> closest primary).  For L1/L2 the
in-plane axes are flipped (scale -gamma), for L3 they are kept (scale +gamma):

    L1:  X = -gamma*x + mu - 1 + gamma
    L2:  X = -gamma*x + mu - 1 - gamma
    L3:  X =  gamma*x + mu     + gamma
    Y = -+gamma*y,  Z = gamma*z  (same sign pattern as X on y, +gamma on z)

In the local frame the equations of motion read

    x'' - 2y' - (1 + 2*c2)*x = dU/dx
    y'' + 2x' + (c2 - 1)*y  = dU/dy
    z'' + c2*z              = dU/dz

with U = sum_{n>=3} c_n rho^n P_n(x/rho), rho^2 = x^2+y^2+z^2, and the
Legendre coefficients c_n(mu) given in closed form per point
(see _legendre_cn).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "LPoint",
    "SystemParams",
    "State6",
    "Frequencies",
    "NAMED_SYSTEMS",
    "make_params",
    "euler_quintic",
    "frequencies",
    "libration_point_position",
    "local_from_synodic",
    "synodic_from_local",
    "eom_rhs",
    "jacobi_constant",
    "effective_potential",
]

# mass ratios of the two systems used throughout the examples
NAMED_SYSTEMS = {
    "sun-earth": 3.040423398444176e-6,
    "earth-moon": 1.215058191870689e-2,
}


class LPoint(Enum):
    L1 = 1
    L2 = 2
    L3 = 3


class ModelError(ValueError):
    """Invalid parameters or states for the CRTBP model."""


@dataclass(frozen=True)
class SystemParams:
    """All constants of one (mu, libration point) configuration.

    ``c[n]`` is the Legendre coefficient c_n, valid for 2 <= n <= n_max;
    entries 0 and 1 are unused placeholders.
    """

    mu: float
    point: LPoint
    gamma: float
    c: tuple[float, ...]
    n_max: int

    @property
    def c2(self) -> float:
        return self.c[2]

    @property
    def axis_sign(self) -> float:
        """Scale applied to local x, y when mapping to synodic (z always +gamma)."""
        return -self.gamma if self.point in (LPoint.L1, LPoint.L2) else self.gamma


@dataclass(frozen=True)
class State6:
    """Position and velocity with an explicit frame tag."""

    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float
    frame: str = "synodic"  # "synodic" | "local"

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.vz], dtype=float)

    @staticmethod
    def from_array(a, frame: str) -> "State6":
        return State6(float(a[0]), float(a[1]), float(a[2]), float(a[3]), float(a[4]), float(a[5]), frame)


@dataclass(frozen=True)
class Frequencies:
    """Linear-solution constants at a collinear point."""

    omega0: float
    nu0: float
    lambda0: float
    kappa1: float
    kappa2: float
    kappa3: float


def euler_quintic(gamma: float, mu: float, point: LPoint) -> float:
    """Residual of the collinear-point quintic at ``gamma``."""
    g = gamma
    if point is LPoint.L1:
        return g**5 - (3 - mu) * g**4 + (3 - 2 * mu) * g**3 - mu * g**2 + 2 * mu * g - mu
    if point is LPoint.L2:
        return g**5 + (3 - mu) * g**4 + (3 - 2 * mu) * g**3 - mu * g**2 - 2 * mu * g - mu
    return g**5 + (2 + mu) * g**4 + (1 + 2 * mu) * g**3 - (1 - mu) * g**2 - 2 * (1 - mu) * g - (1 - mu)


def _quintic_derivative(gamma: float, mu: float, point: LPoint) -> float:
    g = gamma
    if point is LPoint.L1:
        return 5 * g**4 - 4 * (3 - mu) * g**3 + 3 * (3 - 2 * mu) * g**2 - 2 * mu * g + 2 * mu
    if point is LPoint.L2:
        return 5 * g**4 + 4 * (3 - mu) * g**3 + 3 * (3 - 2 * mu) * g**2 - 2 * mu * g - 2 * mu
    return 5 * g**4 + 4 * (2 + mu) * g**3 + 3 * (1 + 2 * mu) * g**2 - 2 * (1 - mu) * g - 2 * (1 - mu)


def _gamma_root(mu: float, point: LPoint) -> float:
    """Unique root of the quintic in (0, 1): bracketed bisection, Newton polish."""
    lo, hi = 1e-9, 1.0 - 1e-9
    flo = euler_quintic(lo, mu, point)
    fhi = euler_quintic(hi, mu, point)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ModelError(f"no sign change for the {point.name} quintic with mu={mu!r}")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = euler_quintic(mid, mu, point)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    for _ in range(6):
        f = euler_quintic(g, mu, point)
        df = _quintic_derivative(g, mu, point)
        step = f / df
        g_new = g - step
        if not (0.0 < g_new < 1.0):
            break
        g = g_new
        if abs(step) < 1e-17 * max(g, 1.0):
            break
    return g


def _legendre_cn(mu: float, gamma: float, point: LPoint, n: int) -> float:
    g = gamma
    if point is LPoint.L1:
        return (mu + (-1) ** n * (1 - mu) * g ** (n + 1) / (1 - g) ** (n + 1)) / g**3
    if point is LPoint.L2:
        return ((-1) ** n * mu + (-1) ** n * (1 - mu) * g ** (n + 1) / (1 + g) ** (n + 1)) / g**3
    return (-1) ** n * (1 - mu + mu * g ** (n + 1) / (1 + g) ** (n + 1)) / g**3


def make_params(mu: float, point: LPoint | str, n_max: int = 12) -> SystemParams:
    """Build the constants table for one mass ratio and collinear point.

    ``n_max`` is the highest Legendre coefficient retained; a series built to
    order N needs n_max >= N + 1.
    """
    if isinstance(point, str):
        point = LPoint[point.upper()]
    if not (0.0 < mu <= 0.5):
        raise ModelError(f"mass ratio must satisfy 0 < mu <= 0.5, got {mu!r}")
    if n_max < 2:
        raise ModelError(f"n_max must be >= 2, got {n_max}")
    gamma = _gamma_root(mu, point)
    c = [0.0, 0.0] + [_legendre_cn(mu, gamma, point, n) for n in range(2, n_max + 1)]
    if c[2] <= 1.0:
        raise ModelError(f"degenerate linear type: c2={c[2]!r} <= 1 for mu={mu!r}, {point.name}")
    return SystemParams(mu=float(mu), point=point, gamma=gamma, c=tuple(c), n_max=n_max)


def frequencies(params: SystemParams) -> Frequencies:
    """Planar/vertical frequencies, hyperbolic rate and mode-shape constants.

    omega0, lambda0 solve u^2 +- (c2-2) u - (1+2c2)(c2-1) = 0; nu0^2 = c2.
    kappa1/kappa2 make (x, y) = (cos, kappa1 sin) resp. (exp, kappa2 exp)
    exact eigen-solutions of the in-plane linear system; kappa3 scales the
    coupled vertical response of the hyperbolic component.
    """
    c2 = params.c2
    if c2 <= 1.0:
        raise ModelError(f"c2={c2!r} <= 1: linear type is not saddle x center x center")
    disc = math.sqrt(9 * c2 * c2 - 8 * c2)
    omega0 = math.sqrt((2 - c2 + disc) / 2)
    lambda0 = math.sqrt((c2 - 2 + disc) / 2)
    nu0 = math.sqrt(c2)
    kappa1 = -(omega0**2 + 1 + 2 * c2) / (2 * omega0)
    kappa2 = (lambda0**2 - 1 - 2 * c2) / (2 * lambda0)
    kappa3 = (nu0**2 - omega0**2) / (nu0**2 + lambda0**2)
    return Frequencies(omega0, nu0, lambda0, kappa1, kappa2, kappa3)


def libration_point_position(params: SystemParams) -> np.ndarray:
    """Synodic position of the collinear point."""
    mu, g = params.mu, params.gamma
    if params.point is LPoint.L1:
        x = mu - 1 + g
    elif params.point is LPoint.L2:
        x = mu - 1 - g
    else:
        x = mu + g
    return np.array([x, 0.0, 0.0])


def _require_frame(state: State6, frame: str) -> None:
    if state.frame != frame:
        raise ModelError(f"expected a {frame!r} state, got {state.frame!r}")


def local_from_synodic(params: SystemParams, state: State6) -> State6:
    """Translate/rescale a synodic state into the point-centred local frame."""
    _require_frame(state, "synodic")
    s = params.axis_sign
    g = params.gamma
    origin = libration_point_position(params)
    return State6(
        (state.x - origin[0]) / s,
        state.y / s,
        state.z / g,
        state.vx / s,
        state.vy / s,
        state.vz / g,
        frame="local",
    )


def synodic_from_local(params: SystemParams, state: State6) -> State6:
    """Inverse of :func:`local_from_synodic`."""
    _require_frame(state, "local")
    s = params.axis_sign
    g = params.gamma
    origin = libration_point_position(params)
    return State6(
        s * state.x + origin[0],
        s * state.y,
        g * state.z,
        s * state.vx,
        s * state.vy,
        g * state.vz,
        frame="synodic",
    )


def _primary_distances(mu: float, X, Y, Z):
    r1 = np.sqrt((X - mu) ** 2 + Y**2 + Z**2)
    r2 = np.sqrt((X - mu + 1) ** 2 + Y**2 + Z**2)
    return r1, r2


def effective_potential(params: SystemParams, X, Y, Z):
    """Synodic effective potential Omega (includes the mu(1-mu)/2 constant)."""
    mu = params.mu
    r1, r2 = _primary_distances(mu, X, Y, Z)
    return 0.5 * (X**2 + Y**2) + (1 - mu) / r1 + mu / r2 + 0.5 * mu * (1 - mu)


def _synodic_accel(mu: float, X, Y, Z, VX, VY):
    r1, r2 = _primary_distances(mu, X, Y, Z)
    if np.any(np.asarray(abs(r1)) < 1e-12) or np.any(np.asarray(abs(r2)) < 1e-12):
        raise ModelError("state coincides with a primary (singular distance)")
    r13, r23 = r1**3, r2**3
    ox = X - (1 - mu) * (X - mu) / r13 - mu * (X - mu + 1) / r23
    oy = Y - (1 - mu) * Y / r13 - mu * Y / r23
    oz = -(1 - mu) * Z / r13 - mu * Z / r23
    return 2 * VY + ox, -2 * VX + oy, oz


def eom_rhs(params: SystemParams, state: State6) -> tuple[float, float, float]:
    """Acceleration of the full nonlinear model, in the state's own frame."""
    if state.frame == "synodic":
        ax, ay, az = _synodic_accel(params.mu, state.x, state.y, state.z, state.vx, state.vy)
        return float(ax), float(ay), float(az)
    if state.frame != "local":
        raise ModelError(f"unknown frame {state.frame!r}")
    syn = synodic_from_local(params, state)
    AX, AY, AZ = _synodic_accel(params.mu, syn.x, syn.y, syn.z, syn.vx, syn.vy)
    s, g = params.axis_sign, params.gamma
    return float(AX / s), float(AY / s), float(AZ / g)


def eom_rhs_array(params: SystemParams, t: float, y: np.ndarray) -> np.ndarray:
    """Synodic first-order RHS for integrators: y = (X, Y, Z, VX, VY, VZ)."""
    ax, ay, az = _synodic_accel(params.mu, y[0], y[1], y[2], y[3], y[4])
    return np.array([y[3], y[4], y[5], ax, ay, az])


def jacobi_constant(params: SystemParams, state: State6) -> float:
    """Jacobi integral C = 2*Omega - v^2 of a synodic state."""
    _require_frame(state, "synodic")
    omega = effective_potential(params, state.x, state.y, state.z)
    v2 = state.vx**2 + state.vy**2 + state.vz**2
    return float(2 * omega - v2)

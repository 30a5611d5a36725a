"""Numerical validation: integration of the full model and accuracy protocols.

Everything here checks the series against machinery it does not share with
the constructor: an adaptive Runge-Kutta integration of the exact synodic
equations, and pointwise residuals of the (coupling-modified) local
equations evaluated in configurable precision.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .constructor import SolutionSet
from .model import State6, SystemParams, eom_rhs_array, synodic_from_local
from .orbits import OrbitEvaluator, OrbitSpec, scalar_frequencies
from .series import eta_eval

__all__ = [
    "IntegratorConfig",
    "DivergenceRecord",
    "IntegrationError",
    "integrate",
    "divergence_time",
    "divergence_grid",
    "residual_samples",
    "residual_scaling",
    "ResidualScaling",
]


class IntegrationError(RuntimeError):
    """The integrator failed (step-size underflow or collision)."""


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float = math.inf
    method: str = "DOP853"

    def __post_init__(self):
        for name, v in (("rtol", self.rtol), ("atol", self.atol)):
            if not (1e-14 <= v <= 1e-6):
                raise ValueError(f"{name}={v!r} outside [1e-14, 1e-6]")


@dataclass(frozen=True)
class DivergenceRecord:
    alpha1: float
    alpha2: float
    order: int
    span: float  # first time |position error| reaches the threshold, else the horizon
    threshold: float
    eta: float = 0.0
    hit: bool = False  # True if the threshold was actually reached within the horizon


def integrate(
    params: SystemParams,
    state0: State6,
    t_span: tuple[float, float],
    config: IntegratorConfig = IntegratorConfig(),
    events=None,
    dense_output: bool = True,
):
    """Integrate the exact synodic equations with dense output.

    Negative spans integrate backward (stable-manifold checks).  Close
    approaches to either primary terminate with IntegrationError.
    """
    if state0.frame != "synodic":
        raise ValueError("integration starts from a synodic state")
    mu = params.mu

    def collision(t, y):
        r1 = math.hypot(y[0] - mu, y[1], y[2])
        r2 = math.hypot(y[0] - mu + 1, y[1], y[2])
        return min(r1, r2) - 1e-4

    collision.terminal = True
    all_events = [collision] + (list(events) if events else [])
    sol = solve_ivp(
        lambda t, y: eom_rhs_array(params, t, y),
        t_span,
        state0.as_array(),
        method=config.method,
        rtol=config.rtol,
        atol=config.atol,
        max_step=config.max_step,
        dense_output=dense_output,
        events=all_events,
    )
    if not sol.success and sol.status != 1:
        raise IntegrationError(f"integration failed: {sol.message}")
    if sol.status == 1 and len(sol.t_events[0]):
        raise IntegrationError("trajectory collided with a primary")
    return sol


def divergence_time(
    solution: SolutionSet,
    spec: OrbitSpec,
    threshold: float = 1e-6,
    config: IntegratorConfig = IntegratorConfig(),
    horizon: float = 10.0,
    frame: str = "synodic",
) -> DivergenceRecord:
    """First time the synodic (or local) position error reaches the threshold.

    The numerical trajectory starts from the series state at t = 0; the
    crossing is located by the integrator's event root-finding on the dense
    output.  If the error never reaches the threshold the record carries the
    full horizon with ``hit=False``.
    """
    if frame not in ("synodic", "local"):
        raise ValueError(f"frame must be 'synodic' or 'local', got {frame!r}")
    ev = OrbitEvaluator(solution, spec)
    params = solution.params
    state0 = ev.state6(0.0, frame="synodic")
    scale = abs(params.axis_sign)

    def error_at(t, y) -> float:
        pos = ev.positions(np.array([t]))[0]
        syn = np.array(
            [
                params.axis_sign * pos[0] + _origin_x(params),
                params.axis_sign * pos[1],
                params.gamma * pos[2],
            ]
        )
        err = float(np.linalg.norm(syn - y[:3]))
        return err if frame == "synodic" else err / scale

    events = None
    if math.isfinite(threshold):

        def crossing(t, y):
            return error_at(t, y) - threshold

        crossing.terminal = True
        crossing.direction = 1.0
        events = [crossing]

    sol = integrate(params, state0, (0.0, horizon), config, events=events)
    if events is not None and len(sol.t_events[1]):
        span = abs(float(sol.t_events[1][0]))
        hit = True
    else:
        span = abs(horizon)
        hit = False
    return DivergenceRecord(
        alpha1=spec.alpha1,
        alpha2=spec.alpha2,
        order=spec.order if spec.order is not None else solution.order,
        span=span,
        threshold=threshold,
        eta=spec.eta,
        hit=hit,
    )


def _origin_x(params: SystemParams) -> float:
    from .model import libration_point_position

    return float(libration_point_position(params)[0])


def _grid_cell(args):
    solution, spec, threshold, config, horizon, frame = args
    try:
        return divergence_time(solution, spec, threshold, config, horizon, frame)
    except (OverflowError, IntegrationError):
        return DivergenceRecord(spec.alpha1, spec.alpha2, spec.order or solution.order, 0.0, threshold, spec.eta, False)


def divergence_grid(
    solution: SolutionSet,
    specs: list[OrbitSpec],
    threshold: float = 1e-6,
    config: IntegratorConfig = IntegratorConfig(),
    horizon: float = 10.0,
    frame: str = "synodic",
    workers: int = 1,
) -> list[DivergenceRecord]:
    """Divergence times for a batch of specs, in input order."""
    jobs = [(solution, s, threshold, config, horizon, frame) for s in specs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_grid_cell, jobs, chunksize=8))
    return [_grid_cell(j) for j in jobs]


# ---------------------------------------------------------------------------
# residuals of the coupling-modified equations along a series trajectory
# ---------------------------------------------------------------------------


def _legendre_rhs(params: SystemParams, x, y, z):
    """(dU/dx, dU/dy, dU/dz) of the cubic-and-higher potential, generic scalars.

    Works elementwise on numpy arrays and on mpmath scalars alike; uses the
    same two-term recurrences as the series composition but on plain values.
    """
    rho2 = x * x + y * y + z * z
    tm2, tm1 = 1.0, x
    dm1 = 1.0  # D_1
    px = 0.0
    ssum = 0.0
    for k in range(2, params.n_max + 1):
        tk = ((2 * k - 1) / k) * x * tm1 - ((k - 1) / k) * rho2 * tm2
        dk = x * dm1 + k * tm1
        if k >= 3:
            px = px + params.c[k] * k * tm1
            ssum = ssum + params.c[k] * dm1
        tm2, tm1 = tm1, tk
        dm1 = dk
    return px, -y * ssum, -z * ssum


def residual_samples(
    solution: SolutionSet,
    spec: OrbitSpec,
    times,
    dps: int | None = None,
) -> np.ndarray:
    """Max-norm residual of the modified local equations at sample times.

    The coupling term uses the series' own bifurcation factor, so the
    residual measures the formal construction order for any eta, not only
    admissible ones.  ``dps`` switches the evaluation to mpmath with that
    many decimal digits (needed to see residuals below the binary64
    cancellation floor).
    """
    ev = OrbitEvaluator(solution, spec, check=False)
    params = solution.params
    c2 = params.c2
    om, nu, lam = ev.omega, ev.nu, ev.lam
    dpoly = solution.delta.eta_poly_at(spec.alphas, max_order=spec.order)
    if dps is None:
        t = np.asarray(list(times), dtype=float)
        pos = ev.positions(t)
        vel = ev.velocities(t)
        acc = ev.accelerations(t)
        px, py, pz = _legendre_rhs(params, pos[:, 0], pos[:, 1], pos[:, 2])
        dval = eta_eval(dpoly, spec.eta)
        r1 = acc[:, 0] - 2 * vel[:, 1] - (1 + 2 * c2) * pos[:, 0] - px
        r2 = acc[:, 1] + 2 * vel[:, 0] + (c2 - 1) * pos[:, 1] - py
        r3 = acc[:, 2] + c2 * pos[:, 2] - pz - spec.eta * dval * pos[:, 0]
        return np.max(np.abs(np.stack([r1, r2, r3], axis=1)), axis=1)

    out = []
    with mpmath.workdps(dps):
        eta = mpmath.mpf(spec.eta)
        dval = mpmath.mpf(0)
        for deg, cv in enumerate(dpoly):
            dval += mpmath.mpf(cv) * eta**deg
        mom, mnu, mlam = mpmath.mpf(om), mpmath.mpf(nu), mpmath.mpf(lam)
        for tval in times:
            t = mpmath.mpf(float(tval))
            th1 = mom * t + mpmath.mpf(spec.phi1)
            th2 = mnu * t + mpmath.mpf(spec.phi2)
            th3 = mlam * t
            vals = []
            for p_arr, q_arr, e_arr, cw, sw in ev._rows:
                v0 = v1 = v2 = mpmath.mpf(0)
                for p, q, e, c, s in zip(p_arr, q_arr, e_arr, cw, sw):
                    wpq = mpmath.mpf(p) * mom + mpmath.mpf(q) * mnu
                    rate = mpmath.mpf(e) * mlam
                    theta = mpmath.mpf(p) * th1 + mpmath.mpf(q) * th2
                    expf = mpmath.exp(mpmath.mpf(e) * th3)
                    c0, s0 = mpmath.mpf(c), mpmath.mpf(s)
                    c1, s1 = rate * c0 + wpq * s0, rate * s0 - wpq * c0
                    ca, sa = rate * c1 + wpq * s1, rate * s1 - wpq * c1
                    ct, st = mpmath.cos(theta), mpmath.sin(theta)
                    v0 += expf * (c0 * ct + s0 * st)
                    v1 += expf * (c1 * ct + s1 * st)
                    v2 += expf * (ca * ct + sa * st)
                vals.append((v0, v1, v2))
            (x, vx, ax), (y, vy, ay), (z, vz, az) = vals
            px, py, pz = _legendre_rhs(params, x, y, z)
            r1 = ax - 2 * vy - (1 + 2 * c2) * x - px
            r2 = ay + 2 * vx + (c2 - 1) * y - py
            r3 = az + c2 * z - pz - eta * dval * x
            out.append(float(max(abs(r1), abs(r2), abs(r3))))
    return np.asarray(out)


@dataclass(frozen=True)
class ResidualScaling:
    epsilons: tuple[float, ...]
    residuals: tuple[float, ...]
    slope: float


def residual_scaling(
    solution: SolutionSet,
    direction,
    epsilons,
    eta: float = 0.0,
    points: int = 33,
    dps: int | None = 50,
) -> ResidualScaling:
    """Log-log slope of the max trajectory residual versus amplitude scale.

    The direction is scaled by each epsilon; residuals are sampled over one
    planar period.  A solution built to order N should give slope >= N + 0.5.
    """
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (4,) or not np.any(direction):
        raise ValueError("direction must be a nonzero amplitude 4-tuple")
    eps = sorted(float(e) for e in epsilons)
    if len(eps) < 2:
        raise ValueError("need at least two epsilon values")
    res = []
    for e in eps:
        alphas = tuple(direction * e)
        spec = OrbitSpec(*alphas, eta=eta)
        om, _, _ = scalar_frequencies(solution, spec)
        period = 2 * math.pi / om
        times = np.linspace(0.0, period, points)
        res.append(float(residual_samples(solution, spec, times, dps=dps).max()))
    slope = float(np.polyfit(np.log(eps), np.log(res), 1)[0])
    return ResidualScaling(tuple(eps), tuple(res), slope)

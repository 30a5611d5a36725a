"""Command-line front end.

Subcommands:
    build     construct a series solution and write the coefficient file
    eta       solve the bifurcation constraint (single report or count grid)
    orbit     sample one orbit / manifold pair into CSV (optionally a figure)
    validate  divergence-time campaigns and residual-order measurements

Exit codes: 0 success, 2 usage error, 3 mathematical-domain failure
(resonance, inadmissible coupling, degenerate parameters), 4 I/O failure.
All CSV output uses '.' decimals and 17-significant-digit floats; files are
written atomically.  LPSPACE_WORKERS caps process parallelism (default 1).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bifurcation import brute_force_root_count, solution_count_map, solve_eta, third_order_constants
from .constructor import ConstructionError, ResonanceError, build
from .io import FormatError, read_coefficients, write_coefficients
from .model import NAMED_SYSTEMS, LPoint, ModelError, make_params
from .orbits import InadmissibleSpecError, OrbitSpec, admissibility, classify, manifold_branch, sample_trajectory
from .validation import DivergenceRecord, IntegratorConfig, divergence_grid, residual_scaling

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MATH = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lpspace-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LPSPACE_WORKERS", "1")))
    except ValueError:
        return 1


def _resolve_mu(args) -> float:
    if args.system:
        return NAMED_SYSTEMS[args.system]
    if args.mu is None:
        raise UsageError("either --system or --mu is required")
    return args.mu


def _spec_from_args(args, eta: float) -> OrbitSpec:
    return OrbitSpec(
        alpha1=args.alpha1,
        alpha2=args.alpha2,
        alpha3=args.alpha3,
        alpha4=args.alpha4,
        phi1=args.phi1,
        phi2=args.phi2,
        eta=eta,
        order=args.order,
    )


def _pick_eta(solution, args, alphas) -> float:
    if args.eta is not None and args.eta_root is not None:
        raise UsageError("--eta and --eta-root are mutually exclusive")
    if args.eta is not None:
        return args.eta
    if args.eta_root is not None:
        report = solve_eta(solution, alphas, max_order=args.order)
        if not report.roots:
            raise InadmissibleSpecError(f"no real coupling roots at amplitudes {alphas}")
        if not (0 <= args.eta_root < len(report.roots)):
            raise UsageError(
                f"--eta-root {args.eta_root} out of range; {len(report.roots)} roots: "
                + ", ".join(f"{r:.7f}" for r in report.roots)
            )
        return report.roots[args.eta_root]
    return 0.0


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    mu = _resolve_mu(args)
    if args.order < 1:
        raise UsageError(f"--order must be >= 1, got {args.order}")
    n_max = args.nmax if args.nmax is not None else args.order + 3
    params = make_params(mu, args.point, n_max)
    solution = build(params, args.order, check=args.check)
    write_coefficients(args.output, solution)
    print(f"wrote {args.output}: {args.point} mu={mu:.17g} order={args.order} nmax={n_max}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eta
# ---------------------------------------------------------------------------


def cmd_eta(args) -> int:
    solution = read_coefficients(args.coef)
    if args.grid:
        a1 = np.linspace(args.alpha1_range[0], args.alpha1_range[1], args.grid_n)
        a2 = np.linspace(args.alpha2_range[0], args.alpha2_range[1], args.grid_n)
        a34 = np.linspace(args.a34_range[0], args.a34_range[1], args.grid_n)
        counts = solution_count_map(solution, a1, a2, a34)
        lines = ["alpha1,alpha2,a34,root_count"]
        for i1, v1 in enumerate(a1):
            for i2, v2 in enumerate(a2):
                for i3, v3 in enumerate(a34):
                    lines.append(f"{_fmt(v1)},{_fmt(v2)},{_fmt(v3)},{counts[i1, i2, i3]}")
        out = args.output or "eta_counts.csv"
        _atomic_write(out, "\n".join(lines) + "\n")
        print(f"wrote {out}: {counts.size} cells, counts {sorted(set(counts.ravel().tolist()))}")
        if args.plot:
            from .plotting import save_count_slices

            save_count_slices(args.plot, a1, a2, a34, counts, title="coupling-root counts")
            print(f"wrote {args.plot}")
        return EXIT_OK

    alphas = (args.alpha1, args.alpha2, args.alpha3, args.alpha4)
    report = solve_eta(solution, alphas, max_order=args.order)
    print(f"amplitudes: alpha1={alphas[0]} alpha2={alphas[1]} alpha3={alphas[2]} alpha4={alphas[3]}")
    print(f"third-order case: {report.case.value}   discriminant={report.discriminant:.6e}")
    if report.roots:
        print(f"{len(report.roots)} real nonzero roots (index: eta):")
        for idx, (r, mult) in enumerate(zip(report.roots, report.multiplicities)):
            tag = f" (multiplicity {mult})" if mult > 1 else ""
            print(f"  [{idx}] {r:.7f}{tag}")
    else:
        print("no nonzero roots; eta = 0 admissible")
    if args.oracle:
        n = brute_force_root_count(report.eta_poly)
        print(f"sign-scan oracle count: {n}")
    if args.output:
        lines = ["index,eta,multiplicity"]
        for idx, (r, mult) in enumerate(zip(report.roots, report.multiplicities)):
            lines.append(f"{idx},{_fmt(r)},{mult}")
        _atomic_write(args.output, "\n".join(lines) + "\n")
        print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# orbit
# ---------------------------------------------------------------------------


def _orbit_csv(solution, spec: OrbitSpec, args) -> str:
    t = np.linspace(args.t0, args.t1, args.steps)
    states = sample_trajectory(solution, spec, t, frame=args.frame)
    cls = classify(spec, solution)
    resid, scale = admissibility(solution, spec)
    lines = [
        f"# lpspace orbit v{__version__}",
        f"# mu={solution.params.mu:.17g} point={solution.params.point.name} order={solution.order}",
        f"# alpha1={_fmt(spec.alpha1)} alpha2={_fmt(spec.alpha2)} alpha3={_fmt(spec.alpha3)} alpha4={_fmt(spec.alpha4)}",
        f"# phi1={_fmt(spec.phi1)} phi2={_fmt(spec.phi2)} eta={_fmt(spec.eta)}",
        f"# classification={cls}",
        f"# coupling_residual={resid:.3e} (scale {scale:.3e})",
        f"# frame={args.frame}",
        "t,x,y,z,vx,vy,vz",
    ]
    for tv, st in zip(t, states):
        lines.append(
            ",".join(_fmt(v) for v in (tv, st.x, st.y, st.z, st.vx, st.vy, st.vz))
        )
    return "\n".join(lines) + "\n"


def _with_suffix(path: str, tag: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}{tag}{ext or '.csv'}"


def cmd_orbit(args) -> int:
    solution = read_coefficients(args.coef)
    eta = _pick_eta(solution, args, (args.alpha1, args.alpha2, args.alpha3, args.alpha4))
    spec = _spec_from_args(args, eta)
    written = []
    if args.manifold:
        if spec.alpha3 != 0.0 or spec.alpha4 != 0.0:
            raise UsageError("--manifold needs a center spec (alpha3 = alpha4 = 0)")
        for sign in ("+", "-"):
            branch_spec = manifold_branch(solution, spec, f"{args.manifold}{sign}", args.epsilon)
            path = _with_suffix(args.output, f".{args.manifold}{sign}")
            _atomic_write(path, _orbit_csv(solution, branch_spec, args))
            written.append(path)
    else:
        _atomic_write(args.output, _orbit_csv(solution, spec, args))
        written.append(args.output)
    for path in written:
        print(f"wrote {path}")
    if args.plot:
        from .plotting import save_trajectory_figure

        trajs = []
        for path in written:
            data = np.loadtxt(path, delimiter=",", skiprows=8)
            trajs.append((os.path.basename(path), data[:, 1:7]))
        save_trajectory_figure(args.plot, trajs, title=str(classify(spec)))
        print(f"wrote {args.plot}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _divergence_csv(records: list[DivergenceRecord]) -> str:
    lines = ["alpha1,alpha2,order,eta,span,hit"]
    for r in records:
        lines.append(
            f"{_fmt(r.alpha1)},{_fmt(r.alpha2)},{r.order},{_fmt(r.eta)},{_fmt(r.span)},{int(r.hit)}"
        )
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> int:
    solutions = [read_coefficients(path) for path in args.coef]
    config = IntegratorConfig(rtol=args.rtol, atol=args.atol)

    if args.mode == "residual":
        lines = ["order,epsilon,residual,slope"]
        for sol in solutions:
            sc = residual_scaling(
                sol,
                direction=(args.dir1, args.dir2, args.dir3, args.dir4),
                epsilons=args.epsilons,
                eta=args.eta if args.eta is not None else 0.0,
                dps=args.dps,
            )
            for e, r in zip(sc.epsilons, sc.residuals):
                lines.append(f"{sol.order},{_fmt(e)},{_fmt(r)},{_fmt(sc.slope)}")
            print(f"order {sol.order}: slope {sc.slope:.3f} over eps {sc.epsilons}")
        if args.output:
            _atomic_write(args.output, "\n".join(lines) + "\n")
            print(f"wrote {args.output}")
        return EXIT_OK

    # divergence-time campaigns
    a1 = np.linspace(args.alpha1_range[0], args.alpha1_range[1], args.grid_n)
    a2 = np.linspace(args.alpha2_range[0], args.alpha2_range[1], args.grid_n)
    if args.mode == "cell":
        a1, a2 = a1[:1], a2[:1]
    all_grids = {}
    for sol in solutions:
        specs = []
        for v1 in a1:
            for v2 in a2:
                eta = 0.0
                if args.family == "quasihalo":
                    rep = solve_eta(sol, (v1, v2, args.alpha3, args.alpha4))
                    pos = [r for r in rep.roots if r > 0]
                    eta = min(pos) if pos else math.nan
                specs.append(
                    OrbitSpec(v1, v2, args.alpha3, args.alpha4, phi1=0.0, phi2=0.0, eta=eta)
                )
        solvable = [s for s in specs if not math.isnan(s.eta)]
        computed = iter(
            divergence_grid(
                sol,
                solvable,
                threshold=args.threshold,
                config=config,
                horizon=args.horizon,
                frame=args.frame,
                workers=_workers(),
            )
        )
        final = [
            DivergenceRecord(s.alpha1, s.alpha2, sol.order, 0.0, args.threshold, math.nan, False)
            if math.isnan(s.eta)
            else next(computed)
            for s in specs
        ]
        all_grids[sol.order] = final
        path = _with_suffix(args.output, f".order{sol.order}") if len(solutions) > 1 else args.output
        _atomic_write(path, _divergence_csv(final))
        print(f"wrote {path}")
        if args.plot:
            from .plotting import save_grid_heatmap

            spans = np.array([r.span for r in final]).reshape(len(a1), len(a2))
            ppath = _with_suffix(args.plot, f".order{sol.order}") if len(solutions) > 1 else args.plot
            save_grid_heatmap(
                ppath, a1, a2, spans, title=f"divergence time, order {sol.order}", cbar_label="span"
            )
            print(f"wrote {ppath}")

    if len(solutions) == 2:
        lo, hi = sorted(all_grids)
        spans_lo = np.array([r.span for r in all_grids[lo]])
        spans_hi = np.array([r.span for r in all_grids[hi]])
        improved = float(np.mean(spans_hi >= spans_lo))
        print(f"fraction of cells with order-{hi} span >= order-{lo} span: {improved:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_spec_args(sp, with_eta: bool = True) -> None:
    sp.add_argument("--alpha1", type=float, default=0.0)
    sp.add_argument("--alpha2", type=float, default=0.0)
    sp.add_argument("--alpha3", type=float, default=0.0)
    sp.add_argument("--alpha4", type=float, default=0.0)
    sp.add_argument("--phi1", type=float, default=0.0)
    sp.add_argument("--phi2", type=float, default=0.0)
    sp.add_argument("--order", type=int, default=None, help="truncation order (default: file order)")
    if with_eta:
        sp.add_argument("--eta", type=float, default=None, help="explicit coupling coefficient")
        sp.add_argument("--eta-root", type=int, default=None, help="index into the sorted root list")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpspace", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"lpspace {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a series solution")
    b.add_argument("--system", choices=sorted(NAMED_SYSTEMS), default=None)
    b.add_argument("--mu", type=float, default=None)
    b.add_argument("--point", choices=["L1", "L2", "L3"], required=True)
    b.add_argument("--order", type=int, required=True)
    b.add_argument("--nmax", type=int, default=None, help="Legendre table size (default: order + 3)")
    b.add_argument("--check", action="store_true", help="verify each order by back-substitution")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eta", help="solve the bifurcation constraint")
    e.add_argument("--coef", required=True)
    _add_spec_args(e, with_eta=False)
    e.add_argument("--grid", action="store_true", help="emit a root-count grid instead of one report")
    e.add_argument("--grid-n", type=int, default=50)
    e.add_argument("--alpha1-range", type=float, nargs=2, default=(0.0, 0.5))
    e.add_argument("--alpha2-range", type=float, nargs=2, default=(0.0, 1.0))
    e.add_argument("--a34-range", type=float, nargs=2, default=(-0.5, 0.5))
    e.add_argument("--oracle", action="store_true", help="also run the sign-scan root-count oracle")
    e.add_argument("--plot", default=None, help="write a figure of the count map")
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_eta)

    o = sub.add_parser("orbit", help="sample an orbit into CSV")
    o.add_argument("--coef", required=True)
    _add_spec_args(o)
    o.add_argument("--manifold", choices=["unstable", "stable"], default=None, help="emit both +/- branches")
    o.add_argument("--epsilon", type=float, default=1e-3, help="manifold amplitude")
    o.add_argument("--t0", type=float, default=0.0)
    o.add_argument("--t1", type=float, default=6.28)
    o.add_argument("--steps", type=int, default=400)
    o.add_argument("--frame", choices=["local", "synodic"], default="synodic")
    o.add_argument("--plot", default=None, help="write a trajectory figure")
    o.add_argument("-o", "--output", required=True)
    o.set_defaults(func=cmd_orbit)

    v = sub.add_parser("validate", help="accuracy campaigns")
    v.add_argument("--coef", action="append", required=True, help="repeat for several orders")
    v.add_argument("--mode", choices=["divergence", "cell", "residual"], default="divergence")
    v.add_argument("--family", choices=["lissajous", "quasihalo"], default="lissajous")
    v.add_argument("--alpha3", type=float, default=1e-3)
    v.add_argument("--alpha4", type=float, default=0.0)
    v.add_argument("--alpha1-range", type=float, nargs=2, default=(0.02, 0.42))
    v.add_argument("--alpha2-range", type=float, nargs=2, default=(0.02, 0.42))
    v.add_argument("--grid-n", type=int, default=40)
    v.add_argument("--threshold", type=float, default=1e-6)
    v.add_argument("--horizon", type=float, default=10.0)
    v.add_argument("--frame", choices=["synodic", "local"], default="synodic")
    v.add_argument("--rtol", type=float, default=1e-12)
    v.add_argument("--atol", type=float, default=1e-12)
    v.add_argument("--eta", type=float, default=None)
    v.add_argument("--dir1", type=float, default=1.0)
    v.add_argument("--dir2", type=float, default=0.5)
    v.add_argument("--dir3", type=float, default=0.0)
    v.add_argument("--dir4", type=float, default=0.0)
    v.add_argument("--epsilons", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3])
    v.add_argument("--dps", type=int, default=50, help="decimal digits for residual evaluation")
    v.add_argument("--plot", default=None, help="write heatmaps of the divergence grids")
    v.add_argument("-o", "--output", default="validate.csv")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, ConstructionError, ResonanceError, InadmissibleSpecError, OverflowError, ValueError) as exc:
        print(f"math-domain error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (OSError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

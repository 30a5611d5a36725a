"""Coefficient-file serialization.

Plain UTF-8 text, one nonzero coefficient per line:

    #crtbp-series v1
    mu=<17-significant-digit decimal>
    point=<L1|L2|L3>
    order=<N>
    nmax=<N>
    <var> <i> <j> <k> <m> <p> <q> <part> <etadeg> <value>

``var`` is one of x, y, z, omega, nu, lambda, delta; ``part`` is c/s for the
cosine/sine coefficient of the position series and '-' for the amplitude
expansions (which also carry p = q = 0).  Values use %.16e (17 significant
digits), so reading a file back reproduces every binary64 bit; lines are
emitted in sorted order, making the writer idempotent.
"""

from __future__ import annotations

import os
import tempfile
from typing import Iterable

from .constructor import SolutionSet
from .model import LPoint, make_params
from .series import AmplitudeSeries, TrigExpSeries

__all__ = ["write_coefficients", "read_coefficients", "FormatError", "MAGIC"]

MAGIC = "#crtbp-series v1"


class FormatError(ValueError):
    """Malformed coefficient file."""


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _series_lines(name: str, series: TrigExpSeries) -> Iterable[str]:
    for (i, j, k, m, p, q) in sorted(series.terms):
        c, s = series.terms[(i, j, k, m, p, q)]
        for part, poly in (("c", c), ("s", s)):
            for deg, v in enumerate(poly):
                if v != 0.0:
                    yield f"{name} {i} {j} {k} {m} {p} {q} {part} {deg} {_fmt(v)}"


def _amp_lines(name: str, series: AmplitudeSeries) -> Iterable[str]:
    for (i, j, k, m) in sorted(series.terms):
        poly = series.terms[(i, j, k, m)]
        for deg, v in enumerate(poly):
            if v != 0.0:
                yield f"{name} {i} {j} {k} {m} 0 0 - {deg} {_fmt(v)}"


def write_coefficients(path: str, solution: SolutionSet) -> None:
    """Write the solution atomically (temp file + rename)."""
    params = solution.params
    lines = [
        MAGIC,
        f"mu={params.mu:.17g}",
        f"point={params.point.name}",
        f"order={solution.order}",
        f"nmax={params.n_max}",
    ]
    for name, series in (("x", solution.x), ("y", solution.y), ("z", solution.z)):
        lines.extend(_series_lines(name, series))
    for name, series in (
        ("omega", solution.omega),
        ("nu", solution.nu),
        ("lambda", solution.lam),
        ("delta", solution.delta),
    ):
        lines.extend(_amp_lines(name, series))
    text = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".coef-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_coefficients(path: str) -> SolutionSet:
    """Parse a coefficient file back into a SolutionSet.

    System constants (gamma, Legendre table) are recomputed from the header;
    the computation is deterministic, so round trips are bit-exact.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise FormatError(f"{path}: missing magic line {MAGIC!r}")
    header: dict[str, str] = {}
    body_start = 1
    for idx in range(1, len(lines)):
        line = lines[idx]
        if "=" in line and line.split("=", 1)[0] in ("mu", "point", "order", "nmax"):
            key, val = line.split("=", 1)
            header[key] = val
            body_start = idx + 1
        else:
            break
    for key in ("mu", "point", "order", "nmax"):
        if key not in header:
            raise FormatError(f"{path}: missing header field {key!r}")
    try:
        mu = float(header["mu"])
        point = LPoint[header["point"]]
        order = int(header["order"])
        n_max = int(header["nmax"])
    except (ValueError, KeyError) as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    params = make_params(mu, point, n_max)

    pos: dict[str, dict] = {"x": {}, "y": {}, "z": {}}
    amp: dict[str, dict] = {"omega": {}, "nu": {}, "lambda": {}, "delta": {}}
    for ln, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 10:
            raise FormatError(f"{path}:{ln}: expected 10 fields, got {len(fields)}")
        name, si, sj, sk, sm, sp, sq, part, sdeg, sval = fields
        try:
            i, j, k, m, p, q, deg = int(si), int(sj), int(sk), int(sm), int(sp), int(sq), int(sdeg)
            val = float(sval)
        except ValueError as exc:
            raise FormatError(f"{path}:{ln}: {exc}") from exc
        if name in pos:
            if part not in ("c", "s"):
                raise FormatError(f"{path}:{ln}: position part must be c or s, got {part!r}")
            entry = pos[name].setdefault((i, j, k, m, p, q), ([], []))
            polylist = entry[0] if part == "c" else entry[1]
            if len(polylist) <= deg:
                polylist.extend([0.0] * (deg + 1 - len(polylist)))
            polylist[deg] = val
        elif name in amp:
            if part != "-" or p != 0 or q != 0:
                raise FormatError(f"{path}:{ln}: amplitude lines need p=q=0 and part '-'")
            polylist = amp[name].setdefault((i, j, k, m), [])
            if len(polylist) <= deg:
                polylist.extend([0.0] * (deg + 1 - len(polylist)))
            polylist[deg] = val
        else:
            raise FormatError(f"{path}:{ln}: unknown variable {name!r}")

    def fix_pos(d: dict) -> TrigExpSeries:
        return TrigExpSeries({k: (tuple(c), tuple(s)) for k, (c, s) in d.items()})

    return SolutionSet(
        params=params,
        x=fix_pos(pos["x"]),
        y=fix_pos(pos["y"]),
        z=fix_pos(pos["z"]),
        omega=AmplitudeSeries({k: tuple(v) for k, v in amp["omega"].items()}),
        nu=AmplitudeSeries({k: tuple(v) for k, v in amp["nu"].items()}),
        lam=AmplitudeSeries({k: tuple(v) for k, v in amp["lambda"].items()}),
        delta=AmplitudeSeries({k: tuple(v) for k, v in amp["delta"].items()}),
        order=order,
    )

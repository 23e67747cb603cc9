"""Command-line front end.

Subcommands write CSV or JSON with a run manifest embedded in the file.
Exit codes: 0 success, 1 usage, 2 numeric-quality failure, 3 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .basis import DEFAULT_MAX_DEGREE, Basis, DegreeOutOfRangeError, get_basis
from .intensity import (BRANCH_CUT_TOLERANCE, NegativeIntensityError, SingularPointError,
                        general_density, limit_density, oprl_density)
from .montecarlo import RootFailureError, mc_expectation
from .quadrature import (InconsistencyError, NonConvergenceError, QuadConfig,
                         area_expectation, contour_expectation, parse_region)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
MAX_GRID_POINTS = 10 ** 8
GRID_CHUNK = 4096
# options whose values may start with '-' (argparse would read them as flags)
_VALUE_OPTS = {"--grid", "--region", "--points", "--degrees"}


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    """Computation finished but failed a quality check; output is still written."""


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise UsageError("grid bounds must satisfy x_min < x_max and y_min < y_max")
        if self.nx < 2 or self.ny < 2:
            raise UsageError("grid needs nx >= 2 and ny >= 2")
        if self.nx * self.ny > MAX_GRID_POINTS:
            raise UsageError(f"grid has more than {MAX_GRID_POINTS} points")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(",")
        if len(parts) != 6:
            raise UsageError(f"grid {text!r}: expected xmin,xmax,ymin,ymax,nx,ny")
        try:
            return cls(*(float(p) for p in parts[:4]), int(parts[4]), int(parts[5]))
        except ValueError as exc:
            raise UsageError(f"grid {text!r}: {exc}") from None

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major ``(x, y)`` arrays: ``y`` outer, ``x`` inner."""
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        X, Y = np.meshgrid(xs, ys)
        return X.ravel(), Y.ravel()

    def as_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min,
                "y_max": self.y_max, "nx": self.nx, "ny": self.ny}


def parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def _parse_degrees(text: str) -> list[int]:
    try:
        degs = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad degree list {text!r}") from None
    if not degs:
        raise UsageError("degree list is empty")
    if any(d < 0 for d in degs):
        raise UsageError("degrees must be non-negative")
    return degs


def _load_basis(name: str, max_degree: int) -> Basis:
    try:
        return get_basis(name, max(DEFAULT_MAX_DEGREE, max_degree))
    except OSError:
        raise
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# ------------------------------------------------------------- serialization

def _manifest(args, command: str, extra: dict, t0: float) -> dict:
    m = {
        "command": command,
        "version": __version__,
        "basis": getattr(args, "basis", None),
        "degree": getattr(args, "n", None),
        "seed": getattr(args, "seed", None) if command == "mc-compare" else None,
        "tolerances": None,
    }
    m.update(extra)
    m["wall_time"] = time.perf_counter() - t0
    return m


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_csv(manifest: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    for k, v in manifest.items():
        buf.write(f"# {k}: {json.dumps(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _parse_cell(s: str):
    if s == "":
        return None
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def parse_csv(text: str):
    """Inverse of ``format_csv``: ``(manifest, header, rows)``."""
    manifest, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# "):
            key, _, val = line[2:].rstrip("\n").partition(": ")
            manifest[key] = json.loads(val)
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return manifest, header, [[_parse_cell(c) for c in r] for r in reader]


def format_json(payload: dict) -> str:
    return json.dumps(payload, indent=1, allow_nan=False) + "\n"


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _write(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
        return
    Path(args.out).write_text(text)


def _emit_table(args, manifest, header, rows, json_body: dict) -> None:
    if args.format == "json":
        _write(args, format_json({"manifest": manifest, **json_body}))
    else:
        _write(args, format_csv(manifest, header, rows))


def _result_rows(rec: dict):
    header = list(rec)
    return header, [[_json_safe(rec[k]) for k in header]]


# ----------------------------------------------------------------- commands

def _grid_values(basis, n, formula, z, threads):
    """Values and per-point reason codes (``None`` where valid)."""
    reasons = np.full(z.shape, None, dtype=object)

    def chunk(part):
        if formula == "limit":
            return limit_density(part, on_invalid="nan")
        fn = general_density if formula == "general" else oprl_density
        try:
            return fn(basis, n, part)
        except SingularPointError:
            out = np.empty(part.shape)
            for i, p in enumerate(part):
                try:
                    out[i] = fn(basis, n, p)
                except SingularPointError:
                    out[i] = np.nan
            return out

    parts = [z[s:s + GRID_CHUNK] for s in range(0, len(z), GRID_CHUNK)]
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            h = np.concatenate(list(pool.map(chunk, parts)))
    else:
        h = np.concatenate([chunk(p) for p in parts])
    bad = ~np.isfinite(h)
    if formula == "limit":
        on_cut = np.abs(z - np.clip(z.real, -1, 1)) <= BRANCH_CUT_TOLERANCE
        reasons[bad & on_cut] = "branch_cut"
        reasons[bad & ~on_cut] = "real_axis"
    else:
        reasons[bad] = "singular"
    return h, reasons


def cmd_intensity_grid(args) -> int:
    t0 = time.perf_counter()
    grid = GridSpec.parse(args.grid)
    basis = _load_basis(args.basis, args.n + 1)
    if args.formula == "oprl" and not basis.is_oprl:
        raise UsageError(f"formula=oprl needs an orthonormal recurrence basis; "
                         f"{basis.name} is not one")
    basis.check_degree(args.n, extra=1 if args.formula == "oprl" else 0)
    x, y = grid.points()
    h, reasons = _grid_values(basis, args.n, args.formula, x + 1j * y, args.threads)
    values = [None if not math.isfinite(v) else float(v) for v in h]
    counts: dict[str, int] = {}
    for r in reasons:
        if r is not None:
            counts[r] = counts.get(r, 0) + 1
    manifest = _manifest(args, "intensity-grid", {
        "formula": args.formula, "grid": grid.as_dict(),
        "null_count": sum(counts.values()), "null_reasons": counts}, t0)
    rows = ([float(a), float(b), v] for a, b, v in zip(x, y, values))
    _emit_table(args, manifest, ["x", "y", "h"], rows,
                {"grid": grid.as_dict(), "values": values})
    return EXIT_OK


def _quad_config(args) -> QuadConfig:
    try:
        return QuadConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                          max_depth=args.max_depth, contour_panels=args.contour_panels)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _tolerances(cfg: QuadConfig) -> dict:
    return {"abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol, "max_depth": cfg.max_depth,
            "contour_panels": cfg.contour_panels, "min_depth": cfg.min_depth}


def cmd_region_expect(args) -> int:
    t0 = time.perf_counter()
    region = _region(args.region)
    cfg = _quad_config(args)
    basis = _load_basis(args.basis, args.n + 1)
    rec: dict = {"region": str(region)}
    failure = None
    methods = ("area", "contour") if args.method == "both" else (args.method,)
    for name in methods:
        fn = area_expectation if name == "area" else contour_expectation
        try:
            r = fn(basis, args.n, region, cfg)
            rec[name] = r.value
            rec[f"{name}_error"] = r.error
            if name == "contour":
                rec["contour_imag"] = r.imag
        except NonConvergenceError as exc:
            rec[name] = exc.estimate
            rec[f"{name}_error"] = exc.error_bound
            rec[f"{name}_status"] = "non_convergence"
            failure = str(exc)
    if args.method == "both":
        disc = abs(rec["area"] - rec["contour"])
        rec["discrepancy"] = disc
        tol = cfg.abs_tol + cfg.rel_tol * abs(rec["area"])
        if failure is None and disc > 100 * tol:
            failure = f"area/contour discrepancy {disc:.3e} exceeds 100x tolerance"
    manifest = _manifest(args, "region-expect", {
        "method": args.method, "region": str(region)}, t0)
    manifest["tolerances"] = _tolerances(cfg)
    manifest["wall_time"] = time.perf_counter() - t0
    header, rows = _result_rows(rec)
    _emit_table(args, manifest, header, rows,
                {"result": {k: _json_safe(v) for k, v in rec.items()}})
    if failure:
        raise NumericFailure(failure)
    return EXIT_OK


def cmd_mc_compare(args) -> int:
    t0 = time.perf_counter()
    if args.trials < 2:
        raise UsageError("trials must be at least 2 (standard error is undefined)")
    region = _region(args.region)
    cfg = _quad_config(args)
    basis = _load_basis(args.basis, args.n + 1)
    mc = mc_expectation(basis, args.n, region, args.trials, args.seed, args.threads)
    area = area_expectation(basis, args.n, region, cfg)
    if mc.stderr > 0:
        z = (mc.mean - area.value) / mc.stderr
    else:
        z = 0.0 if abs(mc.mean - area.value) <= area.error else math.inf
    rec = {"mc_mean": mc.mean, "mc_stderr": mc.stderr, "trials": mc.trials,
           "failed_trials": len(mc.failed), "area": area.value,
           "area_error": area.error, "z_score": z}
    manifest = _manifest(args, "mc-compare", {"region": str(region),
                                             "trials": args.trials}, t0)
    manifest["tolerances"] = _tolerances(cfg)
    manifest["wall_time"] = time.perf_counter() - t0
    header, rows = _result_rows(rec)
    _emit_table(args, manifest, header, rows,
                {"result": {k: _json_safe(v) for k, v in rec.items()}})
    if not abs(z) <= 5.0:
        raise NumericFailure(f"|z-score| = {abs(z):.2f} exceeds 5")
    return EXIT_OK


def cmd_limit_convergence(args) -> int:
    t0 = time.perf_counter()
    degrees = _parse_degrees(args.degrees)
    points = [parse_complex(p) for p in args.points.split(";") if p.strip()]
    if not points:
        raise UsageError("point list is empty")
    basis = _load_basis(args.basis, max(degrees) + 1)
    if not basis.is_oprl:
        raise UsageError(f"{basis.name} is not an orthonormal recurrence basis")
    zs = np.array(points, dtype=complex)
    h_inf = limit_density(zs, on_invalid="nan")
    rows = []
    for z, hi in zip(zs, h_inf):
        on_cut = abs(z - min(max(z.real, -1.0), 1.0)) <= BRANCH_CUT_TOLERANCE
        reason = None if math.isfinite(hi) else ("branch_cut" if on_cut else "real_axis")
        for n in degrees:
            if reason is None:
                hn = float(oprl_density(basis, n, z))
                hi_f = float(hi)
                gap = abs(hn - hi_f)
                row = [n, float(z.real), float(z.imag), hn, hi_f, gap, None]
            else:
                row = [n, float(z.real), float(z.imag), None, None, None, reason]
            rows.append(row)
    header = ["n", "x", "y", "h_n", "h_inf", "gap", "reason"]
    records = [dict(zip(header, r)) for r in rows]
    manifest = _manifest(args, "limit-convergence", {
        "degrees": degrees, "points": [[p.real, p.imag] for p in points]}, t0)
    _emit_table(args, manifest, header, rows, {"rows": records})
    return EXIT_OK


def _region(text):
    try:
        return parse_region(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zerodensity",
                description="Expected zero densities of random Gaussian sums.")
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads (results do not depend on this)")
    common.add_argument("--seed", type=int, default=1, help="Monte Carlo seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--out", default="-", help="output path ('-' is stdout)")

    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def basis_args(sp, degree=True):
        sp.add_argument("--basis", required=True,
                        help="monomial, legendre, chebyshev, hermite or a basis file")
        if degree:
            sp.add_argument("-n", type=int, required=True, help="degree")

    def quad_args(sp):
        d = QuadConfig()
        sp.add_argument("--abs-tol", type=float, default=d.abs_tol)
        sp.add_argument("--rel-tol", type=float, default=d.rel_tol)
        sp.add_argument("--max-depth", type=int, default=d.max_depth)
        sp.add_argument("--contour-panels", type=int, default=d.contour_panels)

    g = sub.add_parser("intensity-grid", parents=[common], help="density on a lattice")
    basis_args(g)
    g.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,nx,ny")
    g.add_argument("--formula", choices=("general", "oprl", "limit"), default="general")
    g.set_defaults(func=cmd_intensity_grid)

    r = sub.add_parser("region-expect", parents=[common], help="expected count in a region")
    basis_args(r)
    r.add_argument("--region", required=True, help="rect:... or poly:...")
    r.add_argument("--method", choices=("area", "contour", "both"), default="both")
    quad_args(r)
    r.set_defaults(func=cmd_region_expect)

    m = sub.add_parser("mc-compare", parents=[common], help="Monte Carlo versus quadrature")
    basis_args(m)
    m.add_argument("--region", required=True)
    m.add_argument("--trials", type=int, default=20000)
    quad_args(m)
    m.set_defaults(func=cmd_mc_compare)

    c = sub.add_parser("limit-convergence", parents=[common],
                       help="gap to the large-degree limit")
    basis_args(c, degree=False)
    c.add_argument("--degrees", required=True, help="comma-separated degrees")
    c.add_argument("--points", required=True,
                   help="semicolon-separated complex points, e.g. '1.5+0.5i;0.4+0.8i'")
    c.set_defaults(func=cmd_limit_convergence)
    return p


def _join_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if getattr(args, "n", 0) is not None and getattr(args, "n", 0) < 0:
            raise UsageError("degree must be non-negative")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegreeOutOfRangeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericFailure, NonConvergenceError, InconsistencyError, SingularPointError,
            NegativeIntensityError, RootFailureError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 when the check passes, 1 on a mathematical failure, 2 on
unusable input.  Every report records the seed, and identical arguments
produce byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .constructions import (
    BranchPlan,
    GluedSpace,
    alternative_geodesic,
    branch_truncated,
    cross_geodesic,
    some_geodesic,
    splice,
)
from .core import (
    GeodesyError,
    InconsistentMetric,
    curves_disjoint,
    curves_distinct,
    first_deviation,
    verify_geodesic,
    verify_geodesic_upper,
)
from .laakso import LaaksoGraph, count_geodesics, enumerate_geodesics
from .normed import (
    NormedSpace,
    PiecewiseFunction,
    PiecewiseFunctionSpace,
    PNormSpace,
    family_geodesic,
    find_witness,
    segment_geodesic,
    witness_geodesics,
)
from .scalar import format_decimal, format_scalar, parse_scalar, resolve_tol
from .serialize import curve_from_json, curve_to_json, dumps, load_json, space_from_json, verdict_to_json

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


class InputError(GeodesyError):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _csv_cell(value) -> str:
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, Fraction):
        return format_decimal(value)
    if isinstance(value, float):
        return format_decimal(value)
    if isinstance(value, str) and _RATIONAL.match(value) and "/" in value:
        return format_decimal(Fraction(value))
    return str(value)


def _flatten(doc, prefix=""):
    if isinstance(doc, dict):
        for k in sorted(doc):
            yield from _flatten(doc[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(doc, list):
        for i, item in enumerate(doc):
            yield from _flatten(item, f"{prefix}[{i}]")
    else:
        yield prefix, doc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    return _csv_text(["key", "value"], _flatten(report))


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit_curves(curves, directory: str | None, stem: str) -> list[str]:
    """Write each curve to ``directory/stem_KKK.json``; returns the file names."""
    if directory is None:
        return []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for k, c in enumerate(curves):
        name = f"{stem}_{k:03d}.json"
        (d / name).write_text(dumps(curve_to_json(c)), encoding="utf-8")
        names.append(name)
    return names


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------

def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required for '{args.command}'")
    return value


def _space(args):
    return space_from_json(load_json(_need(args, "space")))


def _point(space, text, label):
    try:
        return space.decode_point(load_json(text))
    except ValueError as exc:
        raise InputError(f"{label}: {exc}") from exc


def _curve(text, label="--curve"):
    try:
        return curve_from_json(load_json(text))
    except ValueError as exc:
        raise InputError(f"{label}: {exc}") from exc


def _scalar(text, label):
    try:
        return parse_scalar(text)
    except ValueError as exc:
        raise InputError(f"{label}: {exc}") from exc


def _base_report(args) -> dict:
    return {"command": args.command, "seed": args.seed, "grid": args.grid,
            "tol": resolve_tol(args.tol), "version": __version__}


# ---------------------------------------------------------------------------
# commands; each returns (report, exit code)
# ---------------------------------------------------------------------------

def cmd_verify(args):
    curve = _curve(_need(args, "curve"))
    check = verify_geodesic_upper if args.check == "upper" else verify_geodesic
    verdict = check(curve, args.grid, args.tol)
    report = _base_report(args)
    report.update(verdict_to_json(verdict))
    report["space"] = curve.space.describe()
    return report, EXIT_PASS if verdict.ok else EXIT_FAIL


def cmd_witness(args):
    space = _space(args)
    if not isinstance(space, NormedSpace):
        raise InputError("witness search needs a normed space")
    x = _point(space, _need(args, "x"), "--x")
    w = find_witness(space, x, args.tol, args.seed, args.tries)
    report = _base_report(args)
    report["witness"] = w.to_json()
    curves = []
    if w.found and w.space == space:
        pair = witness_geodesics(space, space.zero(), x, args.tol, args.seed)
        if pair:
            curves = list(pair)
    report["curve_files"] = _emit_curves(curves, args.curves_dir, "witness")
    return report, EXIT_PASS


def _lambdas(text):
    if text is None:
        return [Fraction(k, 10) for k in range(11)]
    return [_scalar(s, "--lambdas") for s in text.split(",")]


def cmd_family(args):
    space = _space(args)
    if not isinstance(space, NormedSpace):
        raise InputError("the convex family construction needs a normed space")
    u = _point(space, _need(args, "u"), "--u")
    v = _point(space, _need(args, "v"), "--v")
    if args.x is not None or args.y is not None:
        x = _point(space, _need(args, "x"), "--x")
        y = _point(space, _need(args, "y"), "--y")
        C = _scalar(_need(args, "C"), "--C")
    else:
        pair = witness_geodesics(space, u, v, args.tol, args.seed)
        if pair is None:
            raise InputError("no witness for this direction; pass --x, --y and --C explicitly")
        seg, two = pair
        C, y = two.params[1], two.points[1]
        x = space.interpolate(u, v, C)
    lams = _lambdas(args.lambdas)
    curves = [family_geodesic(space, u, v, x, y, C, lam, args.tol) for lam in lams]
    verdicts = [verify_geodesic(c, args.grid, args.tol) for c in curves]
    disjoint = []
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            r = curves_disjoint(curves[i], curves[j], args.grid, args.tol)
            disjoint.append({"i": i, "j": j, "disjoint": r.disjoint, "exact": r.exact})
    report = _base_report(args)
    report.update({
        "C": format_scalar(C),
        "lambdas": [format_scalar(l) for l in lams],
        "verdicts": [v.verdict for v in verdicts],
        "pairs": disjoint,
        "all_disjoint": all(p["disjoint"] for p in disjoint),
        "curve_files": _emit_curves(curves, args.curves_dir, "family"),
    })
    ok = all(v.ok for v in verdicts)
    return report, EXIT_PASS if ok else EXIT_FAIL


def _laakso_endpoints(g, args):
    a = g.start if args.a is None else _point(g, args.a, "--a")
    b = g.end if args.b is None else _point(g, args.b, "--b")
    return a, b


def cmd_laakso(args):
    g = LaaksoGraph(args.level)
    report = _base_report(args)
    report["level"] = args.level
    code = EXIT_PASS
    if args.action == "build":
        report["graph"] = g.to_json(layout=not args.no_layout)
        report["num_vertices"] = g.num_vertices
        report["num_edges"] = g.num_edges
    else:
        a, b = _laakso_endpoints(g, args)
        report["a"], report["b"] = g.encode_point(a), g.encode_point(b)
        if args.action == "dist":
            report["distance"] = format_scalar(g.distance(a, b))
        elif args.action == "count":
            report["count"] = str(count_geodesics(g, a, b))
        else:
            en = enumerate_geodesics(g, a, b, cap=args.cap)
            verdicts = [verify_geodesic(c, args.grid, args.tol) for c in en.curves]
            report["count"] = str(en.count)
            report["emitted"] = len(en.curves)
            report["complete"] = en.complete
            report["verdicts"] = [v.verdict for v in verdicts]
            report["curve_files"] = _emit_curves(en.curves, args.curves_dir, "laakso")
            code = EXIT_PASS if all(v.ok for v in verdicts) else EXIT_FAIL
    return report, code


def cmd_glue(args):
    base = _space(args)
    gs = GluedSpace(base, _point(base, _need(args, "glue"), "--glue"))
    x = _point(base, _need(args, "x"), "--x")
    y = _point(base, _need(args, "y"), "--y")
    p, q = gs.point(args.x_copy, x), gs.point(args.y_copy, y)
    report = _base_report(args)
    report["space"] = gs.describe()
    report["distance"] = format_scalar(gs.distance(p, q))
    if p.copy != q.copy and not (gs.is_glue(p) or gs.is_glue(q)):
        first = some_geodesic(base, x, gs.glue)
        second = some_geodesic(base, gs.glue, y)
        curve = cross_geodesic(gs, first, second, (args.x_copy, args.y_copy), args.tol)
    else:
        c = some_geodesic(base, x, y)
        curve = type(c)(gs, tuple((s, gs.point(p.copy if not gs.is_glue(p) else q.copy, pt))
                                   for s, pt in c.breakpoints))
    verdict = verify_geodesic(curve, args.grid, args.tol)
    report["verdict"] = verdict.verdict
    report["through_glue"] = any(gs.is_glue(pt) for pt in curve.points)
    report["curve_files"] = _emit_curves([curve], args.curves_dir, "glue")
    return report, EXIT_PASS if verdict.ok else EXIT_FAIL


def cmd_splice(args):
    curve = _curve(_need(args, "curve"))
    s, t = _scalar(_need(args, "s"), "--s"), _scalar(_need(args, "t"), "--t")
    if args.sigma is not None:
        sigma = _curve(args.sigma, "--sigma")
    else:
        sigma = alternative_geodesic(curve.space, curve(s), curve(t), curve.restrict(s, t),
                                     args.grid, args.tol)
    out = splice(curve, s, t, sigma, args.tol)
    verdict = verify_geodesic(out, args.grid, args.tol)
    report = _base_report(args)
    report.update({"s": format_scalar(s), "t": format_scalar(t), "verdict": verdict.verdict,
                   "differs_from_input": curves_distinct(out, curve, args.grid, args.tol).distinct,
                   "curve_files": _emit_curves([out], args.curves_dir, "splice")})
    return report, EXIT_PASS if verdict.ok else EXIT_FAIL


def cmd_branch(args):
    curve = _curve(_need(args, "curve"))
    t = _scalar(_need(args, "t"), "--t")
    plan = BranchPlan(curve, t, args.depth, args.start)
    out = branch_truncated(plan, args.grid, args.tol)
    verdict = verify_geodesic(out, args.grid, args.tol)
    last = plan.window(plan.depth)
    agree = not curves_distinct(out.restrict(0, last[0]), curve.restrict(0, last[0]),
                                args.grid, args.tol).distinct
    dev = first_deviation(out, curve, args.grid, args.tol)
    report = _base_report(args)
    report.update({
        "plan": {"t": format_scalar(plan.t), "n": plan.start, "M": plan.depth},
        "verdict": verdict.verdict,
        "agrees_before": format_scalar(last[0]),
        "agrees": agree,
        "first_deviation": None if dev is None else {"agree": format_scalar(dev.agree),
                                                     "differ": format_scalar(dev.differ)},
        "window": [format_scalar(last[0]), format_scalar(last[1])],
        "curve_files": _emit_curves([out], args.curves_dir, "branch"),
    })
    return report, EXIT_PASS if verdict.ok and agree else EXIT_FAIL


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

def _l1_length(curve):
    sp = curve.space
    return sum(sp.distance(p, q) for (_, p), (_, q) in zip(curve.breakpoints, curve.breakpoints[1:]))


def figure_onenorm(args):
    """λ-family between (0,0) and (1,1) plus the segment to (-1,0), in the l1 plane."""
    sp = PNormSpace(2, 1)
    u, v = (Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))
    x, y = (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))
    lams = _lambdas(args.lambdas)
    curves = [family_geodesic(sp, u, v, x, y, Fraction(1, 2), lam) for lam in lams]
    rows, summary = [], []
    for k, (lam, c) in enumerate(zip(lams, curves)):
        for s, p in c.breakpoints:
            rows.append([f"lambda_{k}", lam, s, p[0], p[1]])
        summary.append([f"lambda_{k}", lam, _l1_length(c), verify_geodesic(c, args.grid).ok])
    seg = segment_geodesic(sp, u, (Fraction(-1), Fraction(0)))
    for s, p in seg.breakpoints:
        rows.append(["segment", "", s, p[0], p[1]])
    summary.append(["segment", "", _l1_length(seg), verify_geodesic(seg, args.grid).ok])
    tables = {
        "polylines": (["curve", "lambda", "s", "x", "y"], rows),
        "curves": (["curve", "lambda", "l1_length", "geodesic"], summary),
    }
    return tables, {}, curves + [seg]


def figure_laakso(args):
    g = LaaksoGraph(args.level)
    vertices = [[v, g.arc[v], g.layout[v][0], g.layout[v][1]] for v in range(g.num_vertices)]
    edges = [[e, a, b, "".join(map(str, g.words[e])), g.layout[a][0], g.layout[a][1],
              g.layout[b][0], g.layout[b][1]] for e, (a, b) in enumerate(g.edges)]
    tables = {
        "vertices": (["id", "arc", "x", "y"], vertices),
        "edges": (["id", "tail", "head", "address", "x0", "y0", "x1", "y1"], edges),
    }
    return tables, {"level": args.level, "num_edges": g.num_edges}, []


def figure_cts(args):
    """``g``, ``C g`` and ``h = x g`` sampled on [0, 1], with the two regions between them."""
    coeffs = [_scalar(c, "--g") for c in (args.g or "0,2").split(",")]
    g = PiecewiseFunction.polynomial(*coeffs)
    sp = PiecewiseFunctionSpace(1)
    n = sp.norm(g)
    if n == 0:
        raise InputError("g must be nonzero")
    g = g * (1 / n) if n != 1 else g
    w = find_witness(sp, g, args.tol, args.seed)
    if not w.found:
        raise InputError(f"no witness for g: {w.reason}")
    C, h = w.C, w.y
    cg = g * C
    above, below = (h - cg).parts_integrals()
    K = args.samples
    rows = []
    for k in range(K + 1):
        t = Fraction(k, K)
        rows.append([t, g(t), cg(t), h(t), C])
    identity = sp.norm(h) + sp.norm(g - h) - sp.norm(g)
    extras = {
        "C": format_scalar(C),
        "area_h_above_Cg": format_scalar(above),
        "area_Cg_above_h": format_scalar(below),
        "areas_equal": above == below or abs(float(above) - float(below)) <= 1e-12,
        "norm_identity_residual": format_scalar(identity),
    }
    tables = {"samples": (["x", "g", "Cg", "h", "C"], rows)}
    return tables, extras, []


FIGURES = {"onenorm": figure_onenorm, "laakso": figure_laakso, "cts": figure_cts}


def cmd_plot_data(args):
    tables, extras, curves = FIGURES[args.figure](args)
    report = _base_report(args)
    report["figure"] = args.figure
    report.update(extras)
    if args.format == "csv":
        if args.out is None:
            text = "".join(f"# {name}\n" + _csv_text(*tab) for name, tab in tables.items())
            text += f"# summary\n" + render(report, "csv")
            return text, EXIT_PASS
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for name, tab in tables.items():
            (d / f"{args.figure}_{name}.csv").write_text(_csv_text(*tab), encoding="utf-8")
        report["files"] = [f"{args.figure}_{name}.csv" for name in tables]
        report["curve_files"] = _emit_curves(curves, args.curves_dir, args.figure)
        (d / f"{args.figure}_summary.json").write_text(dumps(report), encoding="utf-8")
        return None, EXIT_PASS
    report["tables"] = {name: {"columns": head, "rows": [[_json_cell(c) for c in r] for r in rows]}
                        for name, (head, rows) in tables.items()}
    report["curve_files"] = _emit_curves(curves, args.curves_dir, args.figure)
    return report, EXIT_PASS


def _json_cell(v):
    if isinstance(v, (Fraction, float)):
        return format_scalar(v)
    return v


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--grid", type=int, default=100, help="grid resolution N (default 100)")
    p.add_argument("--tol", type=float, default=None,
                   help="tolerance for inexact arithmetic (default 1e-9 or $GEODESY_TOL)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (plot-data with csv: a directory)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--curves-dir", default=None, help="directory for emitted curve files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodesy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"geodesy {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a curve file is a geodesic")
    _common(p)
    p.add_argument("--curve", help="curve JSON (path or inline)")
    p.add_argument("--check", choices=("equality", "upper"), default="equality")

    p = sub.add_parser("witness", help="search for (C, y) certifying several geodesics 0 -> x")
    _common(p)
    p.add_argument("--space")
    p.add_argument("--x", help="unit vector as point JSON")
    p.add_argument("--tries", type=int, default=200)

    p = sub.add_parser("family", help="convex family of two-leg geodesics")
    _common(p)
    for name in ("space", "u", "v", "x", "y", "C"):
        p.add_argument(f"--{name}")
    p.add_argument("--lambdas", help="comma separated, default 0,0.1,...,1")

    p = sub.add_parser("laakso", help="Laakso graph queries")
    p.add_argument("action", choices=("build", "dist", "count", "enumerate"))
    _common(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--a", help="start point JSON, default the left endpoint")
    p.add_argument("--b", help="end point JSON, default the right endpoint")
    p.add_argument("--cap", type=int, default=1000)
    p.add_argument("--no-layout", action="store_true")

    p = sub.add_parser("glue", help="geodesic between points of two glued copies")
    _common(p)
    for name in ("space", "glue", "x", "y"):
        p.add_argument(f"--{name}")
    p.add_argument("--x-copy", type=int, default=0, choices=(0, 1))
    p.add_argument("--y-copy", type=int, default=1, choices=(0, 1))

    p = sub.add_parser("splice", help="replace a piece of a geodesic")
    _common(p)
    for name in ("curve", "s", "t", "sigma"):
        p.add_argument(f"--{name}")

    p = sub.add_parser("branch", help="truncated branching at time t")
    _common(p)
    p.add_argument("--curve")
    p.add_argument("--t")
    p.add_argument("--depth", type=int, required=True, help="truncation depth M")
    p.add_argument("--start", type=int, default=None, help="first index n (default minimal)")

    p = sub.add_parser("plot-data", help="figure data as CSV or JSON")
    _common(p)
    p.add_argument("--figure", choices=sorted(FIGURES), required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--lambdas")
    p.add_argument("--g", help="polynomial coefficients, constant first (default 0,2)")
    p.add_argument("--samples", type=int, default=100)
    return parser


COMMANDS = {
    "verify": cmd_verify, "witness": cmd_witness, "family": cmd_family, "laakso": cmd_laakso,
    "glue": cmd_glue, "splice": cmd_splice, "branch": cmd_branch, "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_PASS
    if args.grid < 1:
        print("geodesy: error: --grid must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        report, code = COMMANDS[args.command](args)
    except InconsistentMetric as exc:
        print(f"geodesy: inconsistent metric: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError) as exc:
        print(f"geodesy: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report is not None:
        _write(report if isinstance(report, str) else render(report, args.format), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())

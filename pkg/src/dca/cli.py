"""Command-line interface: ``dca <subcommand> ...``.

Exit codes: 0 on success, 1 on domain errors (bad lattices, failed checks,
solver failures), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import analysis, fem, lattice, measure, operators, solver
from .domains import Disk, parse_domain
from .errors import DCAError
from .expr import parse_expr
from .svg import emit_svg

log = logging.getLogger("dca")

SYNOPSIS = "dca {build,validate,solve,conjugate,network,fem,kite,measure,walk,study,check} ..."


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"usage: {SYNOPSIS}\n{self.prog}: error: {message}\n")
        raise SystemExit(2)


def _expr(text):
    try:
        return parse_expr(text)
    except DCAError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _domain(text):
    try:
        return parse_domain(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _arc(text):
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("arc must be START:STOP (boundary vertex indices)")
    try:
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("arc endpoints must be integers") from None


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _write_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _arc_vertices(L, arc):
    return lattice.boundary_arcs(L, *arc) if arc else []


# subcommands ------------------------------------------------------------


def cmd_build(a):
    if a.kind == "tikhomirov":
        L, f = lattice.tikhomirov_lattice(a.M)
        lattice.save(L, a.output)
        if a.values:
            operators.save_function(L, f, a.values)
        return 0
    if a.domain is None or a.step is None:
        raise _usage("build --kind square|kite|mesh needs --domain and --step")
    if a.kind == "square":
        lattice.save(lattice.build_square_lattice(a.domain, a.step), a.output)
        return 0
    if not isinstance(a.domain, Disk):
        raise _usage("kite and mesh builds support disk domains only")
    T = fem.disk_mesh(a.step, seed=a.seed, radius=a.domain.r, center=a.domain.center)
    if a.kind == "mesh":
        fem.save_triangulation(T, a.output)
    else:
        lattice.save(fem.build_kite_lattice(T), a.output)
        if a.mesh:
            fem.save_triangulation(T, a.mesh)
    return 0


def cmd_validate(a):
    L = lattice.load(a.lattice, check=False)
    report = lattice.validate(L)
    for v in report.violations:
        print(v)
    ecc = lattice.eccentricity(L) if report.ok and L.n_faces else None
    print(
        f"vertices {L.n_vertices} faces {L.n_faces} kind {L.kind} h {L.h:.6g}"
        + (f" eccentricity {ecc.e:.6g}" if ecc else "")
    )
    print("valid" if report.ok else f"invalid: {len(report.violations)} violation(s)")
    return 0 if report.ok else 1


def cmd_solve(a):
    L = lattice.load(a.lattice)
    rep = solver.solve_dirichlet(solver.DirichletProblem.from_function(L, a.g), tol=a.tol)
    operators.save_function(L, rep.solution, a.output)
    if a.report:
        _write_json(rep.to_json(), a.report)
    if a.svg:
        emit_svg(L, rep.solution, a.svg, labels=a.labels)
    return 0


def cmd_conjugate(a):
    L = lattice.load(a.lattice)
    u = operators.load_function(a.values, L.n_vertices)
    if np.iscomplexobj(u):
        raise _usage("conjugate expects a real vertex function")
    if a.analytic:
        out = solver.analytic_completion(L, u, a.anchor, a.anchor_value)
    else:
        out = solver.conjugate(L, u, a.anchor, a.anchor_value)
    operators.save_function(L, out, a.output)
    return 0


def cmd_network(a):
    L = lattice.load(a.lattice)
    f = operators.load_function(a.values, L.n_vertices).astype(complex)
    e = solver.network_energy(L, f)
    seq_b, seq_w = solver.boundary_sequences(L)
    drops = f[seq_b] - f[np.roll(seq_b, -1)]
    currents = 1j * f[np.roll(seq_w, -1)] - 1j * f[seq_w]
    doc = {
        "energy": e,
        "energy_dirichlet": operators.energy(L, f.real),
        "boundary_b": seq_b.tolist(),
        "boundary_w": seq_w.tolist(),
        "boundary_voltage_drops": [[z.real, z.imag] for z in drops],
        "boundary_currents": [[z.real, z.imag] for z in currents],
    }
    _write_json(doc, a.output)
    return 0


def cmd_fem(a):
    T = fem.load_triangulation(a.mesh)
    u = fem.solve_fem(T, a.g, tol=a.tol)
    doc = {
        "n_vertices": T.n_vertices,
        "kite_equivalence": fem.kite_equivalence(T, a.g, tol=a.tol),
    }
    with open(a.output, "w", encoding="utf-8") as fh:
        fh.write("index,x,y,value\n")
        for k, ((x, y), v) in enumerate(zip(T.points, u)):
            fh.write(f"{k},{x:.17g},{y:.17g},{v:.17g}\n")
    if a.report:
        _write_json(doc, a.report)
    return 0


def cmd_kite(a):
    T = fem.load_triangulation(a.mesh)
    rep = fem.delaunay_report(T)
    Q = fem.build_kite_lattice(T)
    lattice.save(Q, a.output)
    kite, poly = fem.kite_area_balance(T, Q)
    doc = {
        "is_delaunay": rep.is_delaunay,
        "min_slack": rep.min_slack,
        "regular_boundary": rep.regular_boundary,
        "faces": Q.n_faces,
        "conductance_gap": fem.kite_conductance_gap(T, Q),
        "area_kite": kite,
        "area_polygon": poly,
    }
    _write_json(doc, a.report)
    return 0


def cmd_measure(a):
    L = lattice.load(a.lattice)
    w = measure.harmonic_measure_exact(L, _arc_vertices(L, a.arc), tol=a.tol)
    if a.output:
        operators.save_function(L, w, a.output)
    if a.at is not None:
        print(f"{w[a.at]:.17g}")
    return 0


def cmd_walk(a):
    L = lattice.load(a.lattice)
    cfg = measure.WalkConfig(n_walks=a.n_walks, seed=a.seed, max_steps=a.max_steps or 100 * L.n_vertices**2)
    est = measure.random_walk_measure(L, _arc_vertices(L, a.arc), a.start, cfg, graph=a.graph)
    _write_json(est.to_json(), a.output)
    return 0


def cmd_study(a):
    hs = a.levels
    if not hs or any(not h > 0 for h in hs):
        raise _usage("--levels needs positive values")
    if a.lattices == "square":
        Ls = analysis.square_sequence(a.domain, hs)
    else:
        if not isinstance(a.domain, Disk):
            raise _usage("kite studies support disk domains only")
        Ls = analysis.kite_sequence(a.domain, hs, seed=a.seed)
    if a.kind == "energy":
        records, target = analysis.energy_convergence_study(a.domain, a.g, Ls)
        print(f"E_domain {target:.17g}", file=sys.stderr)
    else:
        exact = a.exact or a.g
        records = analysis.dirichlet_convergence_study(a.domain, a.g, Ls, exact, tol=a.tol)
    if a.no_timing:
        records = [analysis.StudyRecord(r.h, r.eccentricity, r.max_error, r.energy, 0.0) for r in records]
    analysis.write_study_csv(records, a.output)
    return 0


def cmd_check(a):
    L = lattice.load(a.lattice)
    results = analysis.identity_suite(L, a.g, seed=a.seed, tol=a.tol)
    if not a.all:
        wanted = set(a.only or [])
        results = [r for r in results if r.name in wanted]
        if not results:
            raise _usage("choose --all or --only NAME")
    print(f"{'check':<22} {'value':>12} {'threshold':>12}  status")
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed and not r.note]
    return 1 if failed else 0


class _UsageError(Exception):
    pass


def _usage(msg):
    return _UsageError(msg)


# parser -----------------------------------------------------------------


def build_parser():
    p = _Parser(prog="dca", description="Discrete complex analysis on quadrilateral lattices.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help):
        s = sub.add_parser(name, help=help)
        s.set_defaults(func=fn)
        return s

    def common(s, seed=False, steps=False):
        s.add_argument("--tol", type=float, default=1e-12)
        if seed:
            s.add_argument("--seed", type=int, default=0)
        if steps:
            s.add_argument("--max-steps", type=int, default=None)

    s = add("build", cmd_build, "build a lattice or mesh")
    s.add_argument("--kind", choices=["square", "kite", "mesh", "tikhomirov"], required=True)
    s.add_argument("--domain", type=_domain)
    s.add_argument("--step", type=float, help="grid step (square) or mesh spacing (kite, mesh)")
    s.add_argument("--M", type=float, default=2.0)
    s.add_argument("--mesh", help="also save the triangulation (kite)")
    s.add_argument("--values", help="save the example function (tikhomirov)")
    s.add_argument("-o", "--output", required=True)
    common(s, seed=True)

    s = add("validate", cmd_validate, "check a lattice file")
    s.add_argument("-l", "--lattice", required=True)

    s = add("solve", cmd_solve, "solve the Dirichlet problem")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("-g", type=_expr, required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--report")
    s.add_argument("--svg")
    s.add_argument("--labels", action="store_true")
    common(s)

    s = add("conjugate", cmd_conjugate, "conjugate of a harmonic function")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("-u", "--values", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--anchor", type=int, default=0)
    s.add_argument("--anchor-value", type=float, default=0.0)
    s.add_argument("--analytic", action="store_true", help="write u + iv instead of v")
    common(s)

    s = add("network", cmd_network, "network energy and boundary phasors of an analytic function")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("-f", "--values", required=True)
    s.add_argument("-o", "--output", default="-")
    common(s)

    s = add("fem", cmd_fem, "cotangent finite elements on a triangulation")
    s.add_argument("-m", "--mesh", required=True)
    s.add_argument("-g", type=_expr, required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--report")
    common(s)

    s = add("kite", cmd_kite, "kite lattice of a Delaunay triangulation")
    s.add_argument("-m", "--mesh", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--report", default="-")

    s = add("measure", cmd_measure, "exact harmonic measure of a boundary arc")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("--arc", type=_arc, required=True)
    s.add_argument("--at", type=int)
    s.add_argument("-o", "--output")
    common(s)

    s = add("walk", cmd_walk, "random-walk estimate of harmonic measure")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("--arc", type=_arc, required=True)
    s.add_argument("--start", type=int, required=True)
    s.add_argument("--n-walks", type=int, default=10_000)
    s.add_argument("--graph", choices=["B", "W"], default="B")
    s.add_argument("-o", "--output", default="-")
    common(s, seed=True, steps=True)

    s = add("study", cmd_study, "convergence study")
    s.add_argument("--kind", choices=["dirichlet", "energy"], required=True)
    s.add_argument("--lattices", choices=["square", "kite"], default="square")
    s.add_argument("--domain", type=_domain, required=True)
    s.add_argument("--levels", type=_floats, default=[0.2, 0.1, 0.05])
    s.add_argument("-g", type=_expr, required=True)
    s.add_argument("--exact", type=_expr)
    s.add_argument("--no-timing", action="store_true", help="write 0 in the timing column")
    s.add_argument("-o", "--output", required=True)
    common(s, seed=True)

    s = add("check", cmd_check, "identity suite")
    s.add_argument("-l", "--lattice", required=True)
    s.add_argument("--all", action="store_true")
    s.add_argument("--only", action="append")
    s.add_argument("-g", type=_expr)
    common(s, seed=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage: {SYNOPSIS}\ndca {args.command}: error: {exc}\n")
        return 2
    except (DCAError, ValueError, OSError) as exc:
        sys.stderr.write(f"dca {args.command}: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``spinthermo <command> [options]``.

Exit codes: 0 pass, 2 property violated (witness printed), 3 resource cap
exceeded, 4 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import gibbs, kernel, transfer
from .gibbs import VolumeError
from .potential import (
    ClassCheckError,
    CouplingSpec,
    Couplings,
    Kind,
    Potential,
    class_E_check_ising,
    class_F_check,
    is_mirrored,
)
from .space import BoundaryTail, configurations, embedding

EXIT_OK, EXIT_VIOLATION, EXIT_CAP, EXIT_CONFIG = 0, 2, 3, 4
DEFAULT_TRUNCATION = 16
EIGEN_ITER_CAP = 12


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    return format(float(v), ".17g")


# -- potential resolution ------------------------------------------------------------


def resolve_spec(args) -> CouplingSpec:
    """Build a CouplingSpec from ``--potential`` plus the numeric flags.

    ``--potential`` is a JSON file, inline JSON, or one of ``dyson``, ``product``,
    ``binary``, ``zero``, ``ising:a1,a2,...``, ``product:a1,...``,
    ``geometric:lam`` and ``product-geometric:lam``.
    """
    text = args.potential or "dyson"
    gamma = 2.2 if args.gamma is None else args.gamma
    beta = 1.0 if args.beta is None else args.beta
    h = 0.0 if args.field is None else args.field
    K = DEFAULT_TRUNCATION if args.truncation is None else args.truncation
    try:
        if text.lstrip().startswith("{") or (text.endswith(".json") and Path(text).is_file()):
            raw = Path(text).read_text() if not text.lstrip().startswith("{") else text
            spec = CouplingSpec.from_json(raw)
            d = spec.to_dict()
            for key, val in (("beta", args.beta), ("h", args.field), ("truncation_K", args.truncation)):
                if val is not None:
                    d[key] = val
            return CouplingSpec.from_dict(d)
        name, _, params = text.partition(":")
        values = [float(v) for v in params.split(",") if v] if params else []
        if name == "dyson":
            return CouplingSpec(Kind.ISING, h, beta, Couplings.power_law(gamma), K)
        if name == "product" and not values:
            return CouplingSpec(Kind.PRODUCT, h, beta, Couplings.power_law(gamma), K)
        if name == "product":
            return CouplingSpec(Kind.PRODUCT, h, beta, Couplings.of(values), args.truncation or len(values))
        if name == "ising":
            return CouplingSpec(Kind.ISING, h, beta, Couplings.of(values), args.truncation or len(values))
        if name == "geometric":
            return CouplingSpec(Kind.ISING, h, beta, Couplings.geometric(values[0] if values else 0.5), K)
        if name == "product-geometric":
            return CouplingSpec(Kind.PRODUCT, h, beta, Couplings.geometric(values[0] if values else 0.5), K)
        if name == "binary":
            return CouplingSpec(Kind.BINARY, K=K)
        if name == "zero":
            return CouplingSpec(Kind.ISING, 0.0, 1.0, Couplings.of([0.0]), 1)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad potential specification: {exc}") from exc
    raise ConfigError(f"unknown potential {text!r}")


def _potential(args) -> Potential:
    return Potential(resolve_spec(args))


# -- output helpers --------------------------------------------------------------------


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(args, text: str, suffix: str | None = None) -> None:
    """Write to ``--out`` (or a sibling file with ``suffix``), else stdout."""
    if args.out:
        path = Path(args.out)
        if suffix is not None:
            path = path.with_suffix(suffix)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- commands ----------------------------------------------------------------------------


def cmd_fkg_verify(args) -> int:
    p = _potential(args)
    vmax = args.volume or 4
    if vmax > 4:
        raise ConfigError("FKG enumeration supports volumes up to 4")
    boundaries = [BoundaryTail.parse(args.boundary)] if args.boundary else None
    report = gibbs.fkg_suite([("potential", p)], range(1, vmax + 1), boundaries)
    fs = {n: None for n in range(1, vmax + 1)}
    rows = []
    for r in report.records:
        if fs[r.n] is None:
            fs[r.n] = gibbs.enumerate_monotone_indicators(r.n)
        f, g = (fs[r.n][i] for i in r.witness)
        rows.append({
            "n": r.n,
            "boundary": r.boundary,
            "min_covariance": r.min_covariance,
            "witness_f": "".join(str(int(v)) for v in f.values),
            "witness_g": "".join(str(int(v)) for v in g.values),
        })
    if args.format == "csv":
        text = _csv_text(["n", "boundary", "min_covariance", "witness_f", "witness_g"],
                         [[r["n"], r["boundary"], float(r["min_covariance"]), r["witness_f"], r["witness_g"]] for r in rows])
    else:
        text = _json_text({"status": report.status, "tolerance": report.tol, "records": rows})
    _emit(args, text)
    worst = report.worst()
    _summary(f"fkg-verify: {report.status}; min covariance {fmt(worst.min_covariance)} at n={worst.n} boundary={worst.boundary}")
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_eigen_approx(args) -> int:
    p = _potential(args)
    n = args.iters or 7
    if n > EIGEN_ITER_CAP:
        raise transfer.DepthCapError(f"iteration count above cap {EIGEN_ITER_CAP}")
    depth = args.depth or 10
    z0 = args.boundary or "plus"
    est, z = transfer.power_iterate(p, n, z0, depth=depth)
    _, zprev = transfer.power_iterate(p, n - 1, z0, depth=depth) if n > 1 else (None, transfer.TabulatedFunction(depth, np.ones(1 << depth)))
    extra = {"z_prev": zprev.values}
    info = est.to_dict()
    info["sup_diff_prev"] = float(np.max(np.abs(z.values - zprev.values)))
    info["depth"] = depth
    if p.kind is Kind.PRODUCT:
        lam, phi = transfer.product_eigenpair(p)
        rows = configurations(depth, BoundaryTail.plus(), max(depth, p.K)).astype(np.float64)
        phiv = phi(rows) / phi(np.ones((1, p.K)))[0]
        extra["phi_explicit"] = phiv
        ratio = z.values / phiv
        info["lambda_explicit"] = lam
        info["ratio_spread"] = float(np.ptp(ratio) / np.mean(ratio))
    if args.out:
        transfer.export_zn_csv(z, args.out, extra)
        _emit(args, _json_text(info), ".json")
    else:
        t = embedding(depth)
        order = np.argsort(t, kind="stable")
        text = _csv_text(["t", "z_value", *extra], [[float(t[k]), float(z.values[k]), *(float(v[k]) for v in extra.values())] for k in order])
        sys.stdout.write(text if args.format != "json" else _json_text(info))
    _summary(f"eigen-approx: lambda {fmt(est.lam)} pressure {fmt(est.pressure)} residual {fmt(est.residual)}")
    return EXIT_OK


def cmd_pressure(args) -> int:
    spec = resolve_spec(args)
    if spec.kind is not Kind.ISING or spec.couplings.rule.value != "power_law":
        raise ConfigError("pressure bound applies to Dyson potentials")
    p = Potential(spec)
    bound = kernel.pressure_upper_bound(spec.couplings.gamma, spec.beta, spec.K)
    est, _ = transfer.power_iterate(p, args.iters or 12, "plus", depth=1)
    report = kernel.pressure_report(est.pressure, bound)
    _emit(args, _json_text(report))
    _summary(f"pressure: estimate {fmt(est.pressure)} bound {fmt(bound.truncated)} margin {fmt(report['margin'])}")
    return EXIT_OK if report["margin"] > 0 else EXIT_VIOLATION


def cmd_phase(args) -> int:
    p = _potential(args)
    nmax = args.volume or 14
    rows, violated = [], False
    sites = (0, 1, 2)
    for n in range(4, nmax + 1):
        rep = transfer.uniqueness_diagnostic(p, n, sites, threads=args.threads)
        violated |= bool(np.min(rep.all_gaps) < -1e-12)
        rows.append([n, rep.max_gap, *(float(v) for v in rep.gaps)])
    text = _csv_text(["n", "max_gap", *(f"gap_site{i}" for i in sites)], rows)
    _emit(args, text)
    gaps = [r[1] for r in rows]
    trend = "decreasing" if all(b <= a for a, b in zip(gaps, gaps[1:])) else "not monotone"
    _summary(f"phase: max gap {fmt(gaps[0])} -> {fmt(gaps[-1])} ({trend})")
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_kernel_eigen(args) -> int:
    p = _potential(args)
    w = kernel.KernelSpec.from_potential(p)
    depth = args.depth or 10
    if args.quadrature == "mc":
        q = kernel.MonteCarlo(args.samples, args.seed)
    else:
        q = kernel.ExactCylinder(args.qdepth)
    tail = BoundaryTail.alternating() if w.needs_alternating else BoundaryTail.plus()
    t, phi = kernel.kernel_eigenfunction_table(p, w, depth, tail, q)
    header = ["t_embedding", "phi_value", "quadrature_kind", "depth_or_samples"]
    cols = [t, phi]
    if p.kind is Kind.PRODUCT:
        _, exact = transfer.product_eigenpair(p)
        rows = configurations(depth, tail, max(depth, p.K)).astype(np.float64)
        header.append("phi_explicit")
        cols.append(exact(rows))
    order = np.argsort(t, kind="stable")
    body = [[float(t[k]), float(phi[k]), q.kind, q.size, *(float(c[k]) for c in cols[2:])] for k in order]
    _emit(args, _csv_text(header, body))
    _summary(f"kernel-eigen: {q.kind} ({q.size}); phi in [{fmt(phi.min())}, {fmt(phi.max())}]")
    return EXIT_OK


def cmd_binary(args) -> int:
    grid = kernel.binary_grid(args.grid)
    c = kernel.BINARY_EIGENVALUE
    lphi = kernel.binary_apply(kernel.binary_quadratic, grid)
    cphi = c * kernel.binary_quadratic(grid)
    coeffs = kernel.taylor_coefficients(kernel.binary_operator(kernel.binary_quadratic))
    target = c * np.array([kernel.binary_quadratic(0.0), 0.0, 0.75])
    if args.format == "json":
        text = _json_text({
            "eigenvalue_c": c,
            "taylor_L_phi": [float(v) for v in coeffs],
            "taylor_c_phi": [float(v) for v in target],
            "max_grid_gap": float(np.max(np.abs(lphi - cphi))),
        })
    else:
        text = _csv_text(["t", "c_phi", "L_phi"], [[float(a), float(b), float(d)] for a, b, d in zip(grid, cphi, lphi)])
    _emit(args, text)
    ok = bool(np.all(np.abs(coeffs - target) < 1e-6))
    _summary(f"binary: Taylor gap {fmt(np.max(np.abs(coeffs - target)))}; max grid gap {fmt(np.max(np.abs(lphi - cphi)))}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_class_check(args) -> int:
    p = _potential(args)
    depth = args.depth or 10
    try:
        class_e = class_E_check_ising(p)
    except ClassCheckError as exc:
        class_e = None
        _summary(f"class-check: {exc}")
    f = class_F_check(p, depth)
    out = {
        "class_E": class_e,
        "class_F": {"member": f.member, "depth": f.depth, "witness": list(f.witness) if f.witness else None},
        "mirrored": is_mirrored(p, depth).mirrored,
    }
    _emit(args, _json_text(out))
    _summary(f"class-check: class_E={class_e} class_F={f.member} mirrored={out['mirrored']}")
    return EXIT_OK


def cmd_potential_graph(args) -> int:
    p = _potential(args)
    depth = args.depth or 12
    rows = configurations(depth, BoundaryTail.plus(), max(depth, p.support))
    vals = p.eval_rows(rows[:, : p.support])
    t = embedding(depth)
    order = np.argsort(t, kind="stable")
    _emit(args, _csv_text(["t", "A_value"], [[float(t[k]), float(vals[k])] for k in order]))
    _summary(f"potential-graph: {len(order)} points, K={p.K}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", help="JSON file, inline JSON or inline form (dyson, product, ising:a1,a2, ...)")
    common.add_argument("--gamma", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--field", type=float)
    common.add_argument("--truncation", type=int, help=f"number of retained couplings K (default {DEFAULT_TRUNCATION})")
    common.add_argument("--volume", type=int)
    common.add_argument("--iters", type=int)
    common.add_argument("--depth", type=int, help="table depth of the output")
    common.add_argument("--boundary", help="plus, minus, alt, alt:- or word:<+- string>")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json"])

    parser = argparse.ArgumentParser(prog="spinthermo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fkg-verify", parents=[common], help="covariances of all increasing indicator pairs")
    sub.add_parser("eigen-approx", parents=[common], help="z_n table and eigenvalue estimate")
    sub.add_parser("pressure", parents=[common], help="pressure estimate against the cosh bound")
    sub.add_parser("phase", parents=[common], help="magnetization gaps m+ - m- over volumes")
    ke = sub.add_parser("kernel-eigen", parents=[common], help="eigenfunction from the involution kernel")
    ke.add_argument("--quadrature", choices=["exact", "mc"], default="exact")
    ke.add_argument("--qdepth", type=int, default=12)
    ke.add_argument("--samples", type=int, default=100_000)
    b = sub.add_parser("binary", parents=[common], help="binary model on [-1, 1]")
    b.add_argument("--grid", type=int, default=kernel.GRID_POINTS)
    sub.add_parser("class-check", parents=[common], help="class E / class F / mirror membership")
    sub.add_parser("potential-graph", parents=[common], help="potential values against the [-1, 1] embedding")
    return parser


COMMANDS = {
    "fkg-verify": cmd_fkg_verify,
    "eigen-approx": cmd_eigen_approx,
    "pressure": cmd_pressure,
    "phase": cmd_phase,
    "kernel-eigen": cmd_kernel_eigen,
    "binary": cmd_binary,
    "class-check": cmd_class_check,
    "potential-graph": cmd_potential_graph,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (transfer.DepthCapError, VolumeError) as exc:
        _summary(f"error: {exc}")
        return EXIT_CAP
    except (ValueError, ConfigError, OSError) as exc:
        _summary(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

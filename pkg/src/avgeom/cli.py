"""Command-line front end.

Usage::

    avgeom average  --metric randers-flat --b 0.2,0 --x 0,0 --order 256
    avgeom classify --metric euclidean --x 0,0 --format jsonl
    avgeom ode-average --k 1 --omega 1 --g "sin(phi1)" --eps 0.05 --t-end 20
    avgeom fiber-integrate --expr "x1^2*exp(-t1^2)" --dim 1 --k 1 --x 2
    avgeom check

Exit status: 0 on success, 1 on a computation error, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
import warnings

import numpy as np

from . import __version__
from .averaging import average_connection, average_metric, deviation_tensors
from .config import FORMATS, build_config, load_file
from .errors import AvgeomError, ConfigError
from .expr import ExpressionError, parse
from .finsler import FinslerStructure, make_structure, sample_directions
from .forms import FiberForm, FormTerm, commutation_residual, fiber_integrate
from .indicatrix import build_quadrature
from .ode import TorusSystem, compare, default_dt, integrate_averaged, integrate_perturbed

# -- serialisation ---------------------------------------------------------------------


def to_plain(obj):
    """Numpy-free nested structure (lists, dicts, floats, ints, bools, str)."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj) -> str:
    """Compact JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ",".join(f"{dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, list):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value {obj!r} in report")
        return format(obj, ".17g")
    import json

    return json.dumps(obj)


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(value, list) and value and isinstance(value[0], (list, dict)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            rows.append((f"{prefix}[{i}]", v))
    else:
        rows.append((prefix, value))


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render(report: dict, fmt: str) -> str:
    if fmt == "jsonl":
        payload = {k: v for k, v in report.items() if k != "timing"}
        return dumps(to_plain(payload)) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        table = report.get("table")
        if table:
            writer.writerow(list(table[0].keys()))
            for row in table:
                writer.writerow([_fmt(to_plain(v)) for v in row.values()])
        else:
            rows = []
            _flatten("", to_plain(report["results"]), rows)
            writer.writerow(["key", "value"])
            for key, value in rows:
                writer.writerow([key, _fmt(value)])
        return buf.getvalue()
    return _render_text(report)


def _render_text(report):
    lines = [f"== {report['job']} =="]
    plain = to_plain(report)
    for section in ("results", "diagnostics"):
        if not plain.get(section):
            continue
        lines.append(f"[{section}]")
        for key, value in plain[section].items():
            if isinstance(value, dict) and "passed" in value:
                status = "PASS" if value["passed"] else "FAIL"
                lines.append(f"  {status} {key:<44} {value['value']:.3e} (tol {value['tolerance']:.0e})")
            elif isinstance(value, list) and value and isinstance(value[0], list):
                lines.append(f"  {key}:")
                block = np.array2string(np.asarray(value), precision=10)
                lines.extend("    " + row for row in block.splitlines())
            elif isinstance(value, float):
                lines.append(f"  {key:<32} {value:.12g}")
            else:
                lines.append(f"  {key:<32} {value}")
    if "timing" in plain:
        lines.append(f"[timing] {plain['timing']:.3f} s")
    return "\n".join(lines) + "\n"


# -- jobs --------------------------------------------------------------------------------


def structure_from_config(c) -> FinslerStructure:
    if c.expr is not None:
        structure = FinslerStructure.from_expression(c.expr, c.dim)
        if structure.params.get("uses_abs"):
            warnings.warn("expression uses abs(); F may fail to be smooth", RuntimeWarning)
        return structure
    params = {}
    if c.metric in ("randers-flat", "randers-general"):
        params["b"] = c.b
    elif c.metric == "riemannian-constant":
        params["a"] = c.a
    elif c.metric == "minkowski-perturbed-quartic":
        params = {"eps": c.eps_quartic, "n": c.dim}
    elif c.metric in ("euclidean", "quartic-degenerate"):
        params["n"] = c.dim
    return make_structure(c.metric, **params)


def _coarser(order):
    if isinstance(order, (list, tuple)):
        return [max(2, order[0] // 2), max(3, order[1] // 2)]
    return max(3, order // 2)


def _quadrature_diagnostics(F, x, q):
    coarse = build_quadrature(F, x, _coarser(q.order))
    return {"volume_self_convergence": abs(q.volume - coarse.volume), "nodes": len(q)}


def run_average(c):
    F = structure_from_config(c)
    q = build_quadrature(F, c.x, c.order)
    results = {
        "volume": q.volume,
        "averaged_metric": average_metric(F, c.x, q).h,
        "averaged_connection": average_connection(F, c.x, q).gamma,
    }
    return results, _quadrature_diagnostics(F, c.x, q)


def run_classify(c):
    F = structure_from_config(c)
    q = build_quadrature(F, c.x, c.order)
    report = deviation_tensors(
        F,
        c.x,
        q,
        probes=sample_directions(F.dim, c.probes),
        base_step=c.base_step,
        tol_riemannian=c.tol_riemannian,
        tol_berwald=c.tol_berwald,
    )
    results = {
        "volume": report.volume,
        "averaged_metric": report.averaged_metric,
        "averaged_connection": report.averaged_connection,
        "delta_g_sup_frobenius": report.norms["delta_g_sup_frobenius"],
        "delta_gamma_sup_frobenius": report.norms["delta_gamma_sup_frobenius"],
        "T": report.T,
        "T_frobenius": report.norms["T_frobenius"],
        "delta_g_operator_norm": report.delta_g_operator_norm,
        "riemannian": report.flags["riemannian"],
        "berwald": report.flags["berwald"],
        "delta_g_norm_at_least_one": report.flags["delta_g_norm_at_least_one"],
    }
    diagnostics = _quadrature_diagnostics(F, c.x, q)
    diagnostics.update(report.checks)
    return results, diagnostics


def torus_system_from_config(c, eps) -> TorusSystem:
    omega_e = [parse(s, {"I": c.m}) for s in c.omega.split(";")]
    g_e = [parse(s, {"I": c.m, "phi": c.k}) for s in c.g.split(";")]
    f_e = [parse(s, {"I": c.m, "phi": c.k}) for s in c.f.split(";")] if c.f else None
    if len(omega_e) != c.k:
        raise ConfigError(f"--omega needs {c.k} ';'-separated expressions")
    if len(g_e) != c.m:
        raise ConfigError(f"--g needs {c.m} ';'-separated expressions")
    if f_e is not None and len(f_e) != c.k:
        raise ConfigError(f"--f needs {c.k} ';'-separated expressions")

    def bind(I, phi=None):
        env = {f"I{i + 1}": I[i] for i in range(c.m)}
        if phi is not None:
            env.update({f"phi{i + 1}": phi[i] for i in range(c.k)})
        return env

    omega = lambda I: [e(bind(I)) for e in omega_e]
    g = lambda I, phi: [e(bind(I, phi)) for e in g_e]
    f = (lambda I, phi: [e(bind(I, phi)) for e in f_e]) if f_e else None
    return TorusSystem(c.k, c.m, omega, g, eps, f, label=f"g={c.g}")


def run_ode(c):
    table = []
    for eps in c.eps:
        system = torus_system_from_config(c, eps)
        t_end = c.t_end if c.t_end is not None else 1.0 / eps
        dt = c.dt if c.dt is not None else default_dt(eps)
        full = integrate_perturbed(system, c.I0, c.phi0, t_end, dt)
        averaged = integrate_averaged(system, c.I0, t_end, dt, c.grid)
        err = compare(full, averaged)
        table.append({"eps": eps, "t_end": t_end, "dt": dt, "sup_error": err, "error_over_eps": err / eps})
    results = {"sup_error": [r["sup_error"] for r in table], "eps": list(c.eps)}
    if len(c.eps) > 1:
        results["loglog_slope"] = float(np.polyfit(np.log(c.eps), np.log(results["sup_error"]), 1)[0])
    return results, {}, table


def run_fiber(c):
    expr = parse(c.expr, {"x": c.dim, "t": c.k})
    names_x = [f"x{i + 1}" for i in range(c.dim)]
    names_t = [f"t{i + 1}" for i in range(c.k)]

    def coefficient(x, t):
        env = dict(zip(names_x, x))
        env.update(zip(names_t, t))
        return expr.evaluate(env)

    base = tuple(sorted(i - 1 for i in c.base_index))
    form = FiberForm(c.dim, c.k, [FormTerm(base, tuple(range(c.k)), coefficient, c.radius)])
    table = fiber_integrate(form, c.x, c.order)
    results = {
        "base_index": [i + 1 for i in base],
        "integral": table.get(base, 0.0),
        "commutation_residual": commutation_residual(form, c.x, c.order, c.step),
    }
    return results, {}


def run_check(c):
    from .suite import run_suite

    outcomes = run_suite(seed=c.seed)
    results = {name: {"value": value, "tolerance": tol, "passed": ok} for name, value, tol, ok in outcomes}
    return results, {"failed": sum(1 for *_, ok in outcomes if not ok)}


# -- entry point -------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="flat TOML file with job settings")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--seed", type=int)


def _add_metric(p):
    p.add_argument("--metric", help="catalog id")
    p.add_argument("--expr", help="expression for F over x1..xn, y1..yn")
    p.add_argument("--dim", type=int)
    p.add_argument("--b", help="Randers covector, e.g. 0.2,0")
    p.add_argument("--a", help="constant metric matrix, e.g. '4,0;0,1'")
    p.add_argument("--eps-quartic", type=float)
    p.add_argument("--x", help="base point, e.g. 0,0")
    p.add_argument("--order", help="quadrature order (3-d: 32x64)")
    p.add_argument("--probes", type=int)
    p.add_argument("--tol-riemannian", type=float)
    p.add_argument("--tol-berwald", type=float)
    p.add_argument("--base-step", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="avgeom", description="Averaging of Finsler structures and friends")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="job", required=True)

    for name, text in (("average", "averaged metric and connection"), ("classify", "deviation tensors and flags")):
        p = sub.add_parser(name, help=text)
        _add_metric(p)
        _add_common(p)

    p = sub.add_parser("ode-average", help="averaging principle on U x T^k")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--omega", help="frequencies over I1..Im, ';'-separated")
    p.add_argument("--g", help="slow right-hand side over I and phi, ';'-separated")
    p.add_argument("--f", help="angle perturbation, ';'-separated")
    p.add_argument("--eps", help="one value or a comma-separated sweep")
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--I0")
    p.add_argument("--phi0")
    _add_common(p)

    p = sub.add_parser("fiber-integrate", help="integrate a full-fiber term along R^k")
    p.add_argument("--expr", help="coefficient over x1..xn, t1..tk")
    p.add_argument("--dim", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--base-index", help="1-based base multi-index, e.g. 1,2")
    p.add_argument("--x")
    p.add_argument("--order", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--step", type=float)
    _add_common(p)

    p = sub.add_parser("check", help="run the invariant suite")
    _add_common(p)
    return parser


RUNNERS = {
    "average": run_average,
    "classify": run_classify,
    "ode-average": run_ode,
    "fiber-integrate": run_fiber,
    "check": run_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("job", "config") and v is not None}
    try:
        file_values = load_file(args.config) if args.config else {}
        config = build_config(args.job, file_values, flags)
    except (ConfigError, ExpressionError, ValueError) as exc:
        print(f"avgeom: config error: {exc}", file=sys.stderr)
        return 2

    start = time.perf_counter()
    try:
        outcome = RUNNERS[config.job](config)
    except (ConfigError, ExpressionError) as exc:
        print(f"avgeom: config error in {config.job}: {exc}", file=sys.stderr)
        return 2
    except (AvgeomError, ArithmeticError, ValueError) as exc:
        print(f"avgeom: {config.job} failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    results, diagnostics = outcome[0], outcome[1]
    report = {"job": config.job, "config": config.as_dict(), "results": results, "diagnostics": diagnostics}
    if len(outcome) > 2:
        report["table"] = outcome[2]
    report["timing"] = time.perf_counter() - start

    text = render(report, config.format)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if config.job == "check" and diagnostics.get("failed"):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

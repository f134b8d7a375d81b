"""Command-line front end.

Subcommands: ``threshold``, ``witness``, ``verify``, ``constraints``, ``nogo``.
Exit status is 0 when every checked claim holds, 1 when one is violated
(the offending row goes to stderr) and 2 on usage errors.

When ``--out`` is omitted, reports go to stdout unless ``QMOVERS_OUTPUT_DIR``
is set, in which case they are written there as ``<command>.<format>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .channels import (
    SuperOperator,
    convex_combine,
    is_completely_positive,
    is_trace_preserving,
)
from .movers import (
    K,
    KP,
    appendix_a_solve,
    appendix_b_G,
    check_gqm_constraints,
    constraint_tensor,
    cp_threshold,
    critical_p,
    equo_residuals,
    is_gqm,
    output_purity,
    purity_check,
    qubit_witness,
    random_amplitudes,
    universal_inverter,
    unit_axis,
    witness_bloch_output,
    witness_eigen_scan,
    witness_positivity_d2,
)
from .states import bloch_vector, projector, random_pure_state

OUTPUT_DIR_ENV = "QMOVERS_OUTPUT_DIR"
WITNESS_COLUMNS = ["q", "p", "lambda_formula", "lambda_numeric", "min_other", "detected"]
BOUNDARY_MARGIN = 1e-8
DEFAULT_TOL = {"threshold": 1e-9}


class UsageError(Exception):
    pass


@dataclass
class Report:
    """Rendered output plus the list of violated claims."""

    command: str
    meta: dict
    rows: list[dict]
    columns: list[str]
    violations: list[str]


def _fmt_csv(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        body = {"meta": report.meta}
        if report.command == "witness":
            body["rows"] = report.rows
        else:
            body["result"] = report.rows[0]
        body["violations"] = report.violations
        return json.dumps(_jsonable(body), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(report.meta), sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_fmt_csv(row[c]) for c in report.columns])
    return buf.getvalue()


# -- argument handling -----------------------------------------------------


def _axis(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
        unit_axis(parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"axis must be 'x,y,z' with non-zero norm: {exc}")
    return parts


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _grid(lo: float, hi: float, steps: int, name: str) -> list[float]:
    if steps < 1:
        raise UsageError(f"--{name}-steps must be >= 1")
    if hi < lo:
        raise UsageError(f"--{name}-max must not be below --{name}-min")
    if steps == 1:
        return [float(lo)]
    return [float(x) for x in np.linspace(lo, hi, steps)]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=2, help="Hilbert-space dimension (default 2)")
    common.add_argument("--p", type=float, default=None, help="mover fidelity p")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_positive_float, default=None,
                        help="tolerance (default 1e-10; 1e-9 for threshold)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)

    parser = argparse.ArgumentParser(prog="qmovers", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("threshold", parents=[common], help="CP threshold of the universal inverter")

    w = sub.add_parser("witness", parents=[common], help="Werner-state witness scan")
    w.add_argument("--q", type=float, default=None, help="single q value (overrides the q grid)")
    w.add_argument("--q-min", type=float, default=0.0)
    w.add_argument("--q-max", type=float, default=1.0)
    w.add_argument("--q-steps", type=int, default=21)
    w.add_argument("--p-min", type=float, default=0.0)
    w.add_argument("--p-max", type=float, default=0.95)
    w.add_argument("--p-steps", type=int, default=20)
    w.add_argument("--axis", type=_axis, default=(0.0, 0.0, 1.0))
    w.add_argument("--random-axes", type=int, default=0,
                   help="also require lambda to be unchanged for this many random axes per cell")
    w.add_argument("--workers", type=int, default=1)

    for name, help_ in (("verify", "check TP/CP/GQM/purity of a map"),
                        ("constraints", "constraint-tensor residuals of a map")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--map", choices=["inverter", "witness", "mix"], default="inverter")
        s.add_argument("--axis", type=_axis, default=(0.0, 0.0, 1.0))
        s.add_argument("--samples", type=int, default=100, help="Haar samples (verify)")
        s.add_argument("--pairs", type=int, default=50, help="random orthonormal pairs (constraints)")

    n = sub.add_parser("nogo", parents=[common], help="pure-output mover falsifiers")
    n.add_argument("--trials", type=int, default=1000)
    n.add_argument("--samples", type=int, default=100, help="random amplitudes for the G check")
    return parser


# -- commands --------------------------------------------------------------


def _meta(args, **extra) -> dict:
    meta = {"tool": "qmovers", "version": __version__, "command": args.command}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "out", "format", "workers"):
            continue
        meta[key] = list(value) if isinstance(value, tuple) else value
    meta.update(extra)
    return meta


def cmd_threshold(args) -> Report:
    if args.d < 2:
        raise UsageError(f"--d must be >= 2, got {args.d}")
    res = cp_threshold(args.d, tol=args.tol)
    row = {
        "d": res.d,
        "empirical_threshold": res.empirical,
        "analytic_upper": res.analytic_upper,
        "analytic_lower": res.analytic_lower,
        "bisection_iterations": res.iterations,
    }
    violations = []
    if abs(res.empirical - res.analytic_upper) > args.tol:
        violations.append(f"empirical threshold {res.empirical!r} differs from 1/(d+1)")
    return Report("threshold", _meta(args), [row], list(row), violations)


def cmd_witness(args) -> Report:
    qs = [args.q] if args.q is not None else _grid(args.q_min, args.q_max, args.q_steps, "q")
    ps = [args.p] if args.p is not None else _grid(args.p_min, args.p_max, args.p_steps, "p")
    if any(not 0.0 <= q <= 1.0 for q in qs):
        raise UsageError("q values must lie in [0, 1]")
    if any(not 0.0 <= p < 1.0 for p in ps):
        raise UsageError("p values must lie in [0, 1)")
    if args.random_axes < 0:
        raise UsageError("--random-axes must be >= 0")
    tol = args.tol
    cells = [(q, p) for q in qs for p in ps]

    def run(idx_cell):
        idx, (q, p) = idx_cell
        res = witness_eigen_scan(q, p, args.axis)
        spread = 0.0
        if args.random_axes:
            rng = np.random.default_rng(np.random.SeedSequence([args.seed, idx]))
            for _ in range(args.random_axes):
                axis = rng.standard_normal(3)
                other = witness_eigen_scan(q, p, axis)
                spread = max(spread, abs(other.lambda_numeric - res.lambda_numeric))
        return res, spread

    if args.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(run, enumerate(cells)))
    else:
        results = [run(c) for c in enumerate(cells)]

    rows, violations = [], []
    for res, spread in results:
        detected = res.lambda_numeric < -tol
        row = {
            "q": res.q,
            "p": res.p,
            "lambda_formula": res.lambda_formula,
            "lambda_numeric": res.lambda_numeric,
            "min_other": res.min_other,
            "detected": detected,
        }
        rows.append(row)
        crit = critical_p(res.q)
        off_boundary = abs(res.p - crit) > BOUNDARY_MARGIN and abs(3.0 * res.q - 1.0) > BOUNDARY_MARGIN
        expected = res.q > 1.0 / 3.0 and res.p < crit
        problems = []
        if abs(res.lambda_formula - res.lambda_numeric) > tol:
            problems.append("lambda mismatch")
        if res.min_other < -tol:
            problems.append("negative non-lambda eigenvalue")
        if off_boundary and detected != expected:
            problems.append("detection disagrees with q > 1/3 and p < (3q-1)/2q")
        if spread > tol:
            problems.append(f"lambda depends on the axis (spread {spread:.3e})")
        if problems:
            violations.append(f"{_fmt_row(row)}: {', '.join(problems)}")
    return Report("witness", _meta(args), rows, WITNESS_COLUMNS, violations)


def _fmt_row(row: dict) -> str:
    return ",".join(_fmt_csv(row[c]) for c in WITNESS_COLUMNS)


def _select_map(args) -> tuple[SuperOperator, float, dict]:
    p, d = args.p, args.d
    if p is None:
        raise UsageError("--p is required")
    if d < 2:
        raise UsageError(f"--d must be >= 2, got {d}")
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"--p must lie in [0, 1], got {p}")
    if args.map == "inverter":
        return universal_inverter(d, p), p, {}
    if args.map == "witness":
        if d != 2:
            raise UsageError("the witness map is available for --d 2 only")
        if p >= 1.0:
            raise UsageError("the witness map needs --p < 1")
        return qubit_witness(p, args.axis), p, {}
    # mix: two inverters bracketing p with weights averaging to p
    rng = np.random.default_rng(args.seed)
    p1, p2 = rng.uniform(0.0, p), rng.uniform(p, 1.0)
    lam = 1.0 if p2 == p1 else (p2 - p) / (p2 - p1)
    mix = convex_combine([(universal_inverter(d, p1), lam), (universal_inverter(d, p2), 1.0 - lam)])
    return mix, p, {"mix_components": [[p1, lam], [p2, 1.0 - lam]]}


def cmd_verify(args) -> Report:
    e, p, extra = _select_map(args)
    tol = args.tol
    tp = is_trace_preserving(e, tol=tol)
    gqm = is_gqm(e, p, samples=args.samples, seed=args.seed, tol=tol)
    cp = is_completely_positive(e, tol=1e-9)
    psi = random_pure_state(e.d, args.seed)
    purity_numeric = purity_check(e, psi)
    if args.map == "witness":
        w = witness_bloch_output(p, bloch_vector(projector(psi)), args.axis)
        purity_formula = 0.5 + 2.0 * float(w @ w)
        expected_cp = False
    else:
        purity_formula = output_purity(e.d, p)
        expected_cp = p >= 1.0 / (e.d + 1.0) - 1e-12
    row = {
        "map": args.map,
        "d": e.d,
        "p": p,
        "is_tp": tp.ok,
        "tp_residual": tp.value,
        "is_gqm": gqm.ok,
        "max_fidelity_deviation": gqm.max_deviation,
        "is_cp": cp.ok,
        "expected_cp": expected_cp,
        "min_choi_eigenvalue": cp.value,
        "purity_formula": purity_formula,
        "purity_numeric": purity_numeric,
    }
    if args.map == "witness":
        row["min_output_eigenvalue_grid"] = witness_positivity_d2(p, args.axis)
    row.update(extra)
    violations = []
    if not tp.ok:
        violations.append("map is not trace preserving")
    if not gqm.ok:
        violations.append(f"fidelity deviates from p by {gqm.max_deviation:.3e}")
    if cp.ok != expected_cp:
        violations.append(f"CP verdict {cp.ok} but expected {expected_cp}")
    if abs(purity_formula - purity_numeric) > tol:
        violations.append("purity formula and numeric purity disagree")
    if row.get("min_output_eigenvalue_grid", 0.0) < -tol:
        violations.append("witness map is not positive on the Bloch grid")
    return Report("verify", _meta(args), [row], list(row), violations)


_LABELS = ("k", "k'")


def cmd_constraints(args) -> Report:
    e, p, extra = _select_map(args)
    tol = args.tol
    t = constraint_tensor(e, 0, 1)
    l1, l2, l3 = equo_residuals(t, p)
    rep = check_gqm_constraints(e, p, pairs=args.pairs, seed=args.seed, tol=tol)
    entries = {}
    for idx in np.ndindex(2, 2, 2, 2):
        v = t[idx]
        entries["<" + " ".join(_LABELS[i] for i in idx) + ">"] = [v.real, v.imag]
    row = {
        "map": args.map,
        "d": e.d,
        "p": p,
        "kkkpkp": t[K, K, KP, KP].real,
        "canonical_equo_line1": l1,
        "canonical_equo_line2": l2,
        "canonical_equo_line3": l3,
        "equo_line1": rep.equo_line1,
        "equo_line2": rep.equo_line2,
        "equo_line3": rep.equo_line3,
        "trace_identity": rep.trace_identity,
        "sum_rule": rep.sum_rule,
        "sum_rule_value": rep.sum_rule_value,
        "sum_rule_expected": e.d * (e.d * p - 1.0),
        "kraus_available": rep.kraus_available,
        "max_abs_kkkpkp": rep.max_abs_kkkpkp,
        "cauchy_schwarz_excess": rep.cauchy_schwarz_excess,
        "pairs": rep.pairs,
    }
    row.update(extra)
    columns = list(row)
    if args.format != "csv":
        row["tensor"] = entries
    violations = [] if rep.passed else ["constraint residual above tolerance"]
    if max(l1, l2, l3) > tol:
        violations.append("canonical pair violates the constraints")
    return Report("constraints", _meta(args), [row], columns, violations)


def cmd_nogo(args) -> Report:
    p = 0.5 if args.p is None else args.p
    if not 0.0 <= p < 1.0:
        raise UsageError(f"--p must lie in [0, 1), got {p}")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.d < 2:
        raise UsageError(f"--d must be >= 2, got {args.d}")
    tol = args.tol
    rep = appendix_a_solve(p, trials=args.trials, seed=args.seed)
    t = constraint_tensor(universal_inverter(args.d, p), 0, 1)
    alpha, beta = random_amplitudes(args.samples, args.seed)
    g_dev = float(np.max(np.abs(appendix_b_G(t, p, alpha, beta) - p)))
    row = {
        "p": p,
        "branch": "p=0" if p == 0.0 else "p>0",
        "trials": rep.trials,
        "falsified_count": rep.falsified_count,
        "min_falsifying_residual": rep.min_falsifying_residual,
        "max_constancy_residual_at_solution": rep.max_constancy_residual_at_solution,
        "reconstructed_norm": rep.reconstructed_norm,
        "appendix_b_max_deviation": g_dev,
    }
    violations = []
    if rep.falsified_count != rep.trials:
        violations.append(f"only {rep.falsified_count}/{rep.trials} models falsified")
    if rep.max_constancy_residual_at_solution > tol:
        violations.append("eta = 0 solution is not constant")
    if g_dev > tol:
        violations.append("G differs from p for the inverter tensor")
    return Report("nogo", _meta(args), [row], list(row), violations)


COMMANDS = {
    "threshold": cmd_threshold,
    "witness": cmd_witness,
    "verify": cmd_verify,
    "constraints": cmd_constraints,
    "nogo": cmd_nogo,
}


def _destination(args, fmt: str) -> str | None:
    if args.out:
        return args.out
    out_dir = os.environ.get(OUTPUT_DIR_ENV)
    if out_dir:
        return os.path.join(out_dir, f"{args.command}.{fmt}")
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is None:
        args.tol = DEFAULT_TOL.get(args.command, 1e-10)
    fmt = args.format or ("csv" if args.command == "witness" else "json")
    args.format = fmt
    try:
        report = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"qmovers {args.command}: error: {exc}", file=sys.stderr)
        return 2
    text = render(report, fmt)
    dest = _destination(args, fmt)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())

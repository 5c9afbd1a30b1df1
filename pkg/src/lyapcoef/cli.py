"""Command line interface.

    lyapcoef analyze FILE [--order K] [--format json|text] [--tol-eig X] [--tol-res X] [--no-timing]
    lyapcoef sweep FILE --param NAME --from A --to B --steps N [--locate l1|..] [--independent]
    lyapcoef transversality FILE [--order K]
    lyapcoef check FILE [--order K]

Exit codes: 0 success, 2 parse/schema error, 3 numerical failure,
4 precondition violation, 5 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .analysis import analyze, emit_report, emit_sweep, sweep
from .checks import run_checks
from .errors import LyapError, SchemaError
from .hopf import transversality
from .problem import load_problem

EXIT_CHECK_FAILED = 3


def _parser():
    ap = argparse.ArgumentParser(prog="lyapcoef", description="Lyapunov coefficients at Hopf points.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="compute l1..lk at the equilibrium of a problem file")
    a.add_argument("file")
    a.add_argument("--order", type=int, help="coefficient level 1..4 (overrides the file)")
    a.add_argument("--format", choices=("json", "text"), default="json")
    a.add_argument("--tol-eig", type=float, help="zero-real-part tolerance for eigenvalues")
    a.add_argument("--tol-res", type=float, help="equilibrium residual tolerance")
    a.add_argument("--no-timing", action="store_true", help="report duration_ms as 0 (byte-reproducible output)")

    s = sub.add_parser("sweep", help="evaluate eta and l1..lk along one parameter")
    s.add_argument("file")
    s.add_argument("--param", required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--locate", choices=("eta", "l1", "l2", "l3", "l4"))
    s.add_argument("--independent", action="store_true", help="fresh Newton from the file's start at every row")
    s.add_argument("--order", type=int)
    s.add_argument("--format", choices=("json", "text"), default="json")

    t = sub.add_parser("transversality", help="rank of mu -> (eta, l1, .., l_(k-1))")
    t.add_argument("file")
    t.add_argument("--order", type=int)

    c = sub.add_parser("check", help="analyze and run the invariant suite")
    c.add_argument("file")
    c.add_argument("--order", type=int)
    return ap


def _run(args, out):
    prob = load_problem(args.file)
    if args.order is not None and not 1 <= args.order <= 4:
        raise SchemaError("level must be 1..4", "--order")
    level = args.order or prob.level

    if args.command == "analyze":
        rep = analyze(prob, level, args.tol_eig, args.tol_res)
        out.write(emit_report(rep, args.format, timing=not args.no_timing))
        return 0
    if args.command == "sweep":
        res = sweep(prob, args.param, args.start, args.stop, args.steps, args.locate, args.independent, level)
        out.write(emit_sweep(res, args.format))
        return 0
    if args.command == "transversality":
        # perturbed parameters always need Newton; at mu0 it is a no-op for exact values
        res = transversality(prob.spec, prob.start, prob.mu, level)
        doc = {
            "rows": res.rows,
            "parameters": res.parameters,
            "jacobian": res.jacobian.tolist(),
            "singular_values": res.singular_values.tolist(),
            "ratio": res.ratio,
            "full_rank": res.full_rank,
            "omega0": res.omega0,
        }
        out.write((json.dumps(doc, indent=2) + "\n").encode())
        return 0
    rep = analyze(prob, level)
    checks = run_checks(prob, rep)
    out.write(emit_report(rep, "text"))
    for ch in checks:
        out.write((ch.line() + "\n").encode())
    return 0 if all(ch.ok for ch in checks) else EXIT_CHECK_FAILED


def main(argv=None):
    args = _parser().parse_args(argv)
    out = sys.stdout.buffer
    try:
        code = _run(args, out)
    except LyapError as exc:
        sys.stderr.write(f"lyapcoef: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())

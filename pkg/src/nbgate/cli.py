"""Command line entry point: ``nbgate {solve,verify,profile,table,emit}``.

Angles cross this boundary in units of pi. Exit codes: 0 success/PASS,
1 numeric failure or FAIL, 2 no solution found, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from contextlib import contextmanager
from typing import Sequence

import numpy as np

from . import analysis, design
from .matcore import ContractError
from .sequence import CompositeSequence, composite_propagator, emit_gate_list

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_NO_SOLUTION = 2
EXIT_USAGE = 64

THETAS = {"pi/4": 0.25, "pi/2": 0.5}
# Residual ceilings for `table --check`: exact rationals vs. 4-decimal rows.
EXACT_ROW_TOL = 1e-12
ROUNDED_ROW_TOL = 5e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _theta(text: str) -> float:
    try:
        return THETAS[text.strip().lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"theta must be one of {', '.join(THETAS)}") from None


def _phase_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed phase list {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("phases must be finite")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of standard output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="residual tolerance (default 1e-10)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="nbgate", description="Narrowband composite two-qubit XX/CPHASE gates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve the narrowband equations for the phases")
    s.add_argument("--n", type=int, required=True, help="number of segments (odd, >= 3)")
    s.add_argument("--theta", type=_theta, required=True)
    s.add_argument("--order", type=int, help="compression order (default (N-1)/2)")
    s.add_argument("--restarts", type=int, default=200)
    s.add_argument("--max-iterations", type=int, default=200)
    s.add_argument("--free-endpoints", action="store_true", help="do not pin the first/last phase to pi/4")
    s.add_argument("--adaptive", action="store_true", help="raise the order while solutions exist")

    v = sub.add_parser("verify", parents=[common], help="check a phase vector against the equations")
    v.add_argument("--phases", type=_phase_list, required=True, help="comma separated, units of pi")
    v.add_argument("--theta", type=_theta, required=True)
    v.add_argument("--order", type=int)
    v.add_argument("--phase-invariant", action="store_true")

    for name, hlp in (("profile", "fidelity profile as CSV"), ("emit", "gate list of the telescoped circuit")):
        q = sub.add_parser(name, parents=[common], help=hlp)
        q.add_argument("--theta", type=_theta, required=True)
        q.add_argument("--n", type=int)
        src = q.add_mutually_exclusive_group()
        src.add_argument("--phases", type=_phase_list)
        src.add_argument("--from-table", type=int, metavar="N")
        if name == "profile":
            q.add_argument("--eps-min", type=float, default=analysis.DEFAULT_EPS_RANGE[0])
            q.add_argument("--eps-max", type=float, default=analysis.DEFAULT_EPS_RANGE[1])
            q.add_argument("--samples", type=int, default=analysis.DEFAULT_SAMPLES)
            q.add_argument("--band", type=float, nargs=2, default=(-1.0, -0.5), metavar=("LO", "HI"))
        else:
            q.add_argument("--check", action="store_true")

    t = sub.add_parser("table", parents=[common], help="print (and optionally re-verify) the reference table")
    t.add_argument("--theta", type=_theta)
    t.add_argument("--check", action="store_true")
    return p


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _sequence(args) -> CompositeSequence:
    theta = args.theta * math.pi
    if args.from_table is not None:
        try:
            row = design.table_row(args.from_table, args.theta)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        return row.sequence()
    if args.phases is not None:
        if args.n is not None and args.n != len(args.phases):
            raise UsageError(f"--n {args.n} does not match {len(args.phases)} phases")
        return CompositeSequence.from_pi_units(theta, args.phases)
    if args.n == 1:
        return CompositeSequence.single(theta)
    raise UsageError("give --phases, --from-table N, or --n 1")


def run_solve(args) -> int:
    if args.n < 3 or args.n % 2 == 0:
        raise UsageError("--n must be odd and >= 3")
    if args.restarts < 0:
        raise UsageError("--restarts must be >= 0")
    opts = design.SolverOptions(
        restarts=args.restarts, seed=args.seed,
        residual_tol=1e-10 if args.tol is None else args.tol,
        max_iterations=args.max_iterations, free_endpoints=args.free_endpoints,
    )
    spec = design.DesignSpec(args.n, args.theta * math.pi, args.order, opts)
    if args.adaptive:
        order, records = design.solve_adaptive(spec)
        logging.getLogger(__name__).info("largest feasible order: %d", order)
    else:
        records = design.solve(spec)
    with _output(args.out) as fh:
        fh.write(design.dumps_solutions(records))
    return EXIT_OK if records else EXIT_NO_SOLUTION


def run_verify(args) -> int:
    n = len(args.phases)
    if n < 3 or n % 2 == 0:
        raise UsageError("need an odd number (>= 3) of phases")
    seq = CompositeSequence.from_pi_units(args.theta * math.pi, args.phases)
    order = design.default_order(n) if args.order is None else args.order
    tol = 1e-10 if args.tol is None else args.tol
    norm = float(np.linalg.norm(design.nb_residuals(seq, order, args.phase_invariant)))
    parts = design.residual_breakdown(seq, order, args.phase_invariant)
    ok = norm < tol
    with _output(args.out) as fh:
        fh.write(f"N={n} theta={args.theta:g}pi order={order}\n")
        for k, val in parts.items():
            fh.write(f"  {k}: {val:.3e}\n")
        fh.write(f"residual_norm={norm:.6e} tol={tol:g} {'PASS' if ok else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_FAIL


def run_profile(args) -> int:
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    if not args.eps_min < args.eps_max:
        raise UsageError("--eps-min must be below --eps-max")
    seq = _sequence(args)
    prof = analysis.profile(seq, args.eps_min, args.eps_max, args.samples)
    try:
        width = f"{analysis.fwhm(prof):.12g}"
    except analysis.FwhmUndefined:
        width = "undefined"
    try:
        xt = f"{analysis.crosstalk_metric(prof, *args.band):.12g}"
    except ContractError:
        xt = "undefined"
    with _output(args.out) as fh:
        fh.write(prof.to_csv())
    print(f"fwhm={width} crosstalk_min={xt}", file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def _table_tol(row: design.TableRow, override: float | None) -> float:
    if override is not None:
        return override
    return EXACT_ROW_TOL if row.exact else ROUNDED_ROW_TOL


def run_table(args) -> int:
    rows = [r for r in design.reference_table() if args.theta is None or r.theta_pi == args.theta]
    doc = []
    all_ok = True
    for r in rows:
        item = {"n_segments": r.n_segments, "theta_target_pi": r.theta_pi, "phases_pi": list(r.phases_pi)}
        if args.check:
            order = design.default_order(r.n_segments)
            norm = float(np.linalg.norm(design.nb_residuals(r.sequence(), order)))
            tol = _table_tol(r, args.tol)
            item.update(order=order, residual_norm=float(f"{norm:.6g}"), tol=tol, status="PASS" if norm < tol else "FAIL")
            all_ok &= norm < tol
        doc.append(item)
    with _output(args.out) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if all_ok else EXIT_FAIL


def run_emit(args) -> int:
    seq = _sequence(args)
    gates = emit_gate_list(seq)
    with _output(args.out) as fh:
        fh.write(gates.to_text())
    if args.check:
        diff = float(np.linalg.norm(gates.unitary() - composite_propagator(seq, 0.0)))
        print(f"frobenius_distance={diff:.3e}", file=sys.stderr)
        if diff > 1e-12:
            return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"solve": run_solve, "verify": run_verify, "profile": run_profile,
            "table": run_table, "emit": run_emit}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ContractError) as exc:
        parser.print_usage(sys.stderr)
        print(f"nbgate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"nbgate: numeric failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

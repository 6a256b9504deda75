"""Command-line front end: solve, sweep, compare, generate, export."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from . import bench
from .extract import RANK_TOL
from .pipeline import REPORT_VERSION, RelaxationReport, is_monotone, solve_relaxation
from .sdpbuild import BuildError, InfeasibleOrder, build
from .sdpsolve.sdpa import write_sdpa
from .sdpsolve.solver import Tolerances
from .sparsity import PopProblem, detect_pattern, validate

log = logging.getLogger("sparse_bsos")

HIERARCHIES = ("sparse-bsos", "dense-bsos", "sparse-put")


class UsageError(Exception):
    """Bad input: unreadable file, invalid pattern or configuration."""


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="POP JSON file (omit to generate with --family)")
    p.add_argument("--family", choices=bench.FAMILIES, help="generate a benchmark problem")
    p.add_argument("--n", type=int, help="number of variables for test functions")
    p.add_argument("--nvec", help='block sizes for QP families, e.g. "50,50" or "11x10"')
    p.add_argument("--o", type=int, default=0, help="overlap between consecutive blocks")
    p.add_argument("--s", type=int, default=2, help="power in the per-block constraints")
    p.add_argument("--seed", type=int, default=0)


def _add_solve_args(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--hierarchy", choices=HIERARCHIES, default="sparse-bsos")
    p.add_argument("--d", type=int, default=1,
                   help="relaxation order (highest order for sweep/compare)")
    p.add_argument("--k", type=int, default=None, help="half-degree of the SOS part (BSOS)")
    p.add_argument("--tol-gap", type=float, default=1e-7)
    p.add_argument("--tol-feas", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparse-bsos",
                                 description="Sparse bounded-degree SOS relaxations")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="build, solve and certify one relaxation")
    _add_problem_args(p)
    _add_solve_args(p)
    p.add_argument("--sdpa-out", help="also export the SDP in SDPA sparse format")

    p = sub.add_parser("sweep", help="solve d = 1..D and check monotonicity")
    _add_problem_args(p)
    _add_solve_args(p)

    p = sub.add_parser("compare", help="side-by-side table over hierarchies")
    _add_problem_args(p)
    _add_solve_args(p)
    p.add_argument("--hierarchies", default="sparse-bsos,sparse-put",
                   help="comma-separated list of hierarchies")

    p = sub.add_parser("generate", help="write a benchmark problem as POP JSON")
    _add_problem_args(p)
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("export", help="write the SDP of one relaxation in SDPA format")
    _add_problem_args(p)
    p.add_argument("--hierarchy", choices=HIERARCHIES, default="sparse-bsos")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sdpa-out", required=True)
    return ap


def load_problem(args) -> PopProblem:
    if args.input:
        try:
            with open(args.input, encoding="utf-8") as fh:
                prob = PopProblem.from_json(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read problem {args.input}: {exc}") from exc
        if prob.pattern is None:
            prob = prob.with_pattern(detect_pattern(prob))
    elif args.family:
        try:
            spec = bench.BenchSpec(args.family, n=args.n,
                                   nvec=bench.parse_nvec(args.nvec) if args.nvec else (),
                                   o=args.o, s=args.s, seed=args.seed)
            prob = bench.generate(spec)
        except (ValueError, RuntimeError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("give a problem file or --family")
    rep = validate(prob.pattern, prob)
    if not rep.ok:
        raise UsageError("invalid sparsity pattern: " + "; ".join(rep.failures))
    return prob


def _tol(args) -> Tolerances:
    return Tolerances(gap=args.tol_gap, feas=args.tol_feas, max_iter=args.max_iter)


def _k(args, hierarchy: str) -> Optional[int]:
    if hierarchy == "sparse-put":
        return None
    if args.k is None:
        raise UsageError("--k is required for BSOS hierarchies")
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    return args.k


def format_table(reports: Sequence[RelaxationReport]) -> str:
    head = ("hierarchy", "d", "k", "solution", "rk", "time", "nonneg", "free", "psd", "constr")
    rows = [head]
    for r in reports:
        sol = r.bound_str()
        if r.certified:
            sol = f"**{sol}**"
        c = r.counts
        rows.append((
            r.hierarchy, str(r.d), "-" if r.k is None else str(r.k), sol,
            "-" if r.avg_rank is None else f"{r.avg_rank:.1f}",
            "-" if r.status == "infeasible-order" else f"{r.time_s:.1f}s",
            str(c.get("nonneg", "-")), str(c.get("free", "-")), r.psd_label or "-",
            str(c.get("constraints", "-")),
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _emit(args, payload: dict, table: str) -> None:
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text if args.json else table)


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BuildError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    prob = load_problem(args)
    if getattr(args, "d", 1) < 1:
        raise UsageError("--d must be >= 1")

    if args.command == "generate":
        text = json.dumps(prob.to_json(), indent=1)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0

    if args.command == "export":
        try:
            program, _ = build(prob, args.hierarchy, args.d, _k(args, args.hierarchy))
        except InfeasibleOrder as exc:
            raise UsageError(f"infeasible relaxation order: {exc}") from exc
        write_sdpa(program, args.sdpa_out)
        print(f"wrote {args.sdpa_out}: {program.counts()}")
        return 0

    tol = _tol(args)
    if args.command == "solve":
        k = _k(args, args.hierarchy)
        rep = solve_relaxation(prob, args.hierarchy, args.d, k, tol, args.rank_tol)
        if args.sdpa_out and rep.status != "infeasible-order":
            write_sdpa(build(prob, args.hierarchy, args.d, k)[0], args.sdpa_out)
        _emit(args, rep.to_json(), format_table([rep]))
        return 0

    if args.command == "sweep":
        k = _k(args, args.hierarchy)
        reps = [solve_relaxation(prob, args.hierarchy, d, k, tol, args.rank_tol)
                for d in range(1, args.d + 1)]
        mono = is_monotone(reps)
        payload = {"version": REPORT_VERSION, "monotone": mono,
                   "reports": [r.to_json() for r in reps]}
        table = format_table(reps) + f"\nmonotone in d: {'yes' if mono else 'NO'}"
        _emit(args, payload, table)
        return 0

    if args.command == "compare":
        names = [h.strip() for h in args.hierarchies.split(",") if h.strip()]
        bad = [h for h in names if h not in HIERARCHIES]
        if bad:
            raise UsageError(f"unknown hierarchies: {bad}")
        reps: List[RelaxationReport] = []
        for h in names:
            k = _k(args, h)
            reps.extend(solve_relaxation(prob, h, d, k, tol, args.rank_tol)
                        for d in range(1, args.d + 1))
        payload = {"version": REPORT_VERSION, "reports": [r.to_json() for r in reps]}
        _emit(args, payload, format_table(reps))
        return 0
    raise UsageError(f"unknown command {args.command!r}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

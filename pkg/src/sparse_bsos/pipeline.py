"""Build, solve and certify one relaxation; sweeps over the relaxation order."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

from .extract import RANK_TOL, CertificateReport, certify, recover_moments
from .sdpbuild import InfeasibleOrder, build
from .sdpsolve.solver import ConicSolution, Tolerances, solve
from .sparsity import PopProblem

REPORT_VERSION = 1


@dataclass
class RelaxationReport:
    problem: str
    hierarchy: str
    d: int
    k: Optional[int]
    status: str
    bound: Optional[float] = None
    dual_bound: Optional[float] = None
    counts: dict = field(default_factory=dict)
    psd_label: str = ""
    certificate: Optional[CertificateReport] = None
    time_s: float = 0.0
    iterations: int = 0
    # heavy objects, kept only on request
    program: object = field(default=None, repr=False)
    ledger: object = field(default=None, repr=False)
    solution: Optional[ConicSolution] = field(default=None, repr=False)

    @property
    def starred(self) -> bool:
        """Solver did not reach the requested accuracy."""
        return self.status in ("near-optimal", "numerical-trouble")

    @property
    def certified(self) -> bool:
        return bool(self.certificate and self.certificate.certified)

    @property
    def avg_rank(self) -> Optional[float]:
        return self.certificate.avg_rank if self.certificate else None

    def bound_str(self) -> str:
        if self.status == "infeasible-order":
            return "inf"
        if self.bound is None:
            return "-"
        return f"{self.bound:.4e}" + ("*" if self.starred else "")

    def to_json(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "problem": self.problem,
            "hierarchy": self.hierarchy,
            "d": self.d,
            "k": self.k,
            "status": self.status,
            "bound": self.bound,
            "dual_bound": self.dual_bound,
            "starred": self.starred,
            "certified": self.certified,
            "avg_rank": self.avg_rank,
            "counts": self.counts,
            "psd": self.psd_label,
            "time_s": round(self.time_s, 3),
            "iterations": self.iterations,
            "certificate": self.certificate.to_json() if self.certificate else None,
        }


def solve_relaxation(problem: PopProblem, hierarchy: str, d: int, k: Optional[int] = None,
                     tol: Optional[Tolerances] = None, rank_tol: float = RANK_TOL,
                     keep: bool = False) -> RelaxationReport:
    """Time covers build, solve and the optimality check together."""
    if hierarchy != "sparse-put" and k is None:
        raise ValueError("k is required for the BSOS hierarchies")
    kk = None if hierarchy == "sparse-put" else k
    t0 = time.perf_counter()
    try:
        program, ledger = build(problem, hierarchy, d, kk)
    except InfeasibleOrder:
        return RelaxationReport(problem.name, hierarchy, d, kk, "infeasible-order",
                                time_s=time.perf_counter() - t0)
    sol = solve(program, tol)
    rep = RelaxationReport(problem.name, hierarchy, d, kk, sol.status,
                           bound=sol.primal_objective, dual_bound=sol.dual_objective,
                           counts=program.counts(), psd_label=program.psd_label(),
                           iterations=sol.iterations)
    if sol.ok:
        moments = recover_moments(sol, ledger)
        pattern = problem.pattern if hierarchy != "dense-bsos" else None
        if pattern is None:
            from .sparsity import SparsityPattern
            pattern = SparsityPattern.trivial(problem.n, problem.m)
        rep.certificate = certify(moments, problem, pattern, rank_tol,
                                  upper=hierarchy != "sparse-put")
    rep.time_s = time.perf_counter() - t0
    if keep:
        rep.program, rep.ledger, rep.solution = program, ledger, sol
    return rep


def sweep(problem: PopProblem, hierarchy: str, d_max: int, k: Optional[int] = None,
          tol: Optional[Tolerances] = None, rank_tol: float = RANK_TOL,
          d_min: int = 1) -> List[RelaxationReport]:
    return [solve_relaxation(problem, hierarchy, d, k, tol, rank_tol)
            for d in range(d_min, d_max + 1)]


def is_monotone(reports: List[RelaxationReport], atol: float = 1e-6) -> bool:
    vals = [r.bound for r in reports if r.bound is not None and r.status != "infeasible-order"]
    return all(b >= a - atol for a, b in zip(vals, vals[1:]))

"""Moment recovery from row multipliers and the rank-one optimality test.

With the solver's sign convention (``min b.y`` s.t. ``A'y - c`` in the dual
cone) the multiplier of a linking row is the global moment ``y_g`` and the
negated multiplier of a certificate row of block ``l`` is ``theta^l_g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .poly import ONE, Exponent, enumerate_monomials
from .sparsity import PopProblem, SparsityPattern

RANK_TOL = 1e-4
FEAS_TOL = 1e-6


@dataclass
class MomentData:
    theta: List[Dict[Exponent, float]]
    y: Dict[Exponent, float]
    y0: float
    bound: Optional[float] = None
    hierarchy: str = ""

    def consistency(self) -> float:
        """Largest ``|y_g - theta^l_g|`` over all blocks."""
        worst = 0.0
        for th in self.theta:
            for g, v in th.items():
                if g in self.y:
                    worst = max(worst, abs(self.y[g] - v))
        return worst


@dataclass
class CertificateReport:
    bound: Optional[float]
    status: str
    ranks: List[Optional[int]]
    avg_rank: Optional[float]
    certified: bool
    xstar: Optional[np.ndarray] = None
    feas_residual: Optional[float] = None
    obj_residual: Optional[float] = None
    omega: int = 1
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "status": self.status,
            "ranks": list(self.ranks),
            "avg_rank": self.avg_rank,
            "certified": self.certified,
            "xstar": None if self.xstar is None else [float(v) for v in self.xstar],
            "residuals": {"feasibility": self.feas_residual, "objective": self.obj_residual},
            "omega": self.omega,
            "notes": list(self.notes),
        }


def recover_moments(solution, ledger) -> MomentData:
    """Turn row multipliers into per-block and global moment sequences."""
    if solution.status not in ("optimal", "near-optimal"):
        raise ValueError(f"cannot recover moments from a {solution.status} solution")
    y = np.asarray(solution.y, dtype=float)
    if len(y) != len(ledger.row_labels):
        raise ValueError("multiplier vector does not match the ledger rows")
    theta: List[Dict[Exponent, float]] = [dict() for _ in ledger.blocks]
    glob: Dict[Exponent, float] = {}
    for r, (kind, l, g) in enumerate(ledger.row_labels):
        if kind == "link":
            glob[g] = y[r]
        elif kind == "cert":
            theta[l][g] = -y[r]
        else:
            raise ValueError(f"unknown row kind {kind!r}")
    # monomials owned by one block lost their linking row; their global
    # moment is the block moment
    for l, ms in enumerate(ledger.block_monomials):
        for g in ms:
            if g not in glob and g in theta[l]:
                glob[g] = theta[l][g]
    if ONE not in glob:
        raise ValueError("ledger lacks the constant linking row")
    y0 = glob[ONE]
    if abs(y0) < 1e-12:
        raise ValueError("degenerate normalization: y_0 is zero")
    glob = {g: v / y0 for g, v in glob.items()}
    theta = [{g: v / y0 for g, v in th.items()} for th in theta]
    return MomentData(theta, glob, 1.0, solution.primal_objective, ledger.hierarchy)


def moment_matrix(theta: Dict[Exponent, float], a: int, block_vars: Sequence[int]) -> np.ndarray:
    """Matrix with entries ``theta[alpha + beta]`` over monomials of degree <= a."""
    from .poly import expo_add

    basis = enumerate_monomials(len(block_vars), a, sorted(block_vars))
    s = len(basis)
    M = np.empty((s, s))
    for i in range(s):
        for j in range(i, s):
            g = expo_add(basis[i], basis[j])
            if g not in theta:
                raise KeyError(f"missing moment for exponent {g}")
            M[i, j] = M[j, i] = theta[g]
    return M


def numeric_rank(M: np.ndarray, rel_tol: float = RANK_TOL) -> int:
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def omega(problem: PopProblem) -> int:
    deg = max([problem.objective.degree] + [g.degree for g in problem.constraints])
    return max(1, math.ceil(deg / 2))


def certify(moments: MomentData, problem: PopProblem, pattern: SparsityPattern | None = None,
            rank_tol: float = RANK_TOL, upper: bool = True,
            bound: Optional[float] = None) -> CertificateReport:
    """Rank-one test on every block's ``M_omega`` plus a check of the extracted point.

    ``upper`` also enforces ``g_j <= 1`` at the point (the bounded-degree
    setting); the Putinar-type hierarchy only needs ``g_j >= 0``.
    """
    pattern = pattern or problem.pattern
    if pattern is None:
        raise ValueError("a sparsity pattern is required")
    bound = moments.bound if bound is None else bound
    w = omega(problem)
    ranks: List[Optional[int]] = []
    notes: List[str] = []
    for l, blk in enumerate(pattern.blocks):
        try:
            ranks.append(numeric_rank(moment_matrix(moments.theta[l], w, blk), rank_tol))
        except KeyError:
            ranks.append(None)
            notes.append(f"block {l}: moments up to degree {2 * w} unavailable")
    known = [r for r in ranks if r is not None]
    avg = round(float(np.mean(known)), 1) if known else None
    rep = CertificateReport(bound, "incomplete" if notes else "ranked", ranks, avg, False,
                            omega=w, notes=notes)
    if notes or any(r != 1 for r in ranks):
        return rep

    x = np.array([moments.y.get(((i, 1),), np.nan) for i in range(problem.n)])
    if not np.all(np.isfinite(x)):
        rep.notes.append("first-order moments missing")
        return rep
    rep.xstar = x
    resid = 0.0
    for g in problem.constraints:
        v = g.evaluate(x)
        resid = max(resid, -v, (v - 1.0) if upper else 0.0)
    rep.feas_residual = max(resid, 0.0)
    fx = problem.objective.evaluate(x)
    if bound is not None:
        rep.obj_residual = abs(fx - bound)
    feasible = rep.feas_residual <= FEAS_TOL
    matches = bound is not None and rep.obj_residual <= max(1e-6, 1e-5 * abs(bound))
    rep.certified = feasible and matches
    rep.status = "certified" if rep.certified else "rank-one-unverified"
    if not feasible:
        rep.notes.append("extracted point is infeasible")
    if not matches:
        rep.notes.append("objective at extracted point does not match the bound")
    return rep

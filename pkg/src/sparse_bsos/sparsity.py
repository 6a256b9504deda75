"""Sparsity patterns, the running intersection property, and problem setup.

Variable and constraint indices are 0-based throughout the code; the JSON
forms and printed reports use the same 0-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .poly import Polynomial, expo_vars


@dataclass(frozen=True)
class SparsityPattern:
    """Blocks ``I_l`` of variables and ``J_l`` of constraint indices."""

    blocks: Tuple[Tuple[int, ...], ...]
    cons_blocks: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(sorted(set(b))) for b in self.blocks))
        cons = self.cons_blocks or tuple(() for _ in self.blocks)
        object.__setattr__(self, "cons_blocks", tuple(tuple(sorted(set(c))) for c in cons))
        if len(self.cons_blocks) != len(self.blocks):
            raise ValueError("blocks and cons_blocks must have the same length")
        if not self.blocks:
            raise ValueError("a pattern needs at least one block")

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return max((max(b) for b in self.blocks if b), default=-1) + 1

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "cons_blocks": [list(c) for c in self.cons_blocks]}

    @classmethod
    def from_json(cls, data: dict) -> "SparsityPattern":
        return cls(tuple(tuple(b) for b in data["blocks"]),
                   tuple(tuple(c) for c in data.get("cons_blocks", ())))

    @classmethod
    def trivial(cls, n: int, m: int) -> "SparsityPattern":
        return cls((tuple(range(n)),), (tuple(range(m)),))


@dataclass(frozen=True)
class PopProblem:
    """min f(x) s.t. 0 <= g_j(x) <= 1 for all j."""

    n: int
    objective: Polynomial
    constraints: Tuple[Polynomial, ...] = ()
    pattern: Optional[SparsityPattern] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for q in (self.objective, *self.constraints):
            if q.num_vars != self.n:
                raise ValueError("polynomial num_vars does not match problem n")

    @property
    def m(self) -> int:
        return len(self.constraints)

    def with_pattern(self, pattern: Optional[SparsityPattern]) -> "PopProblem":
        return replace(self, pattern=pattern)

    def is_feasible(self, x, tol: float = 1e-9, upper: bool = True) -> bool:
        for g in self.constraints:
            v = g.evaluate(x)
            if v < -tol or (upper and v > 1 + tol):
                return False
        return True

    def to_json(self) -> dict:
        out = {
            "num_vars": self.n,
            "objective": self.objective.to_records(),
            "constraints": [g.to_records() for g in self.constraints],
        }
        if self.name:
            out["name"] = self.name
        if self.pattern is not None:
            out["pattern"] = self.pattern.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PopProblem":
        n = int(data["num_vars"])
        pattern = SparsityPattern.from_json(data["pattern"]) if data.get("pattern") else None
        return cls(
            n=n,
            objective=Polynomial.from_records(n, data["objective"]),
            constraints=tuple(Polynomial.from_records(n, g) for g in data.get("constraints", [])),
            pattern=pattern,
            name=data.get("name", ""),
        )


@dataclass
class ValidationReport:
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok


def rip_check(blocks: Sequence[Sequence[int]]) -> Tuple[bool, Optional[int]]:
    """Running intersection property.

    Returns ``(True, None)`` or ``(False, l)`` where ``l`` is the 0-based index
    of the first block whose intersection with its predecessors is not
    contained in a single earlier block.
    """
    if not blocks:
        raise ValueError("rip_check needs at least one block")
    sets = [set(b) for b in blocks]
    seen = set(sets[0])
    for l in range(1, len(sets)):
        inter = sets[l] & seen
        if not any(inter <= sets[s] for s in range(l)):
            return False, l
        seen |= sets[l]
    return True, None


def validate(pattern: SparsityPattern, problem: PopProblem) -> ValidationReport:
    rep = ValidationReport()
    n, m = problem.n, problem.m
    blocks = [set(b) for b in pattern.blocks]

    covered = set().union(*blocks)
    if covered != set(range(n)):
        missing = sorted(set(range(n)) - covered)
        extra = sorted(covered - set(range(n)))
        rep.failures.append(f"variable cover: missing {missing[:10]} extra {extra[:10]}")

    ccover = set().union(*(set(c) for c in pattern.cons_blocks))
    if ccover != set(range(m)):
        missing = sorted(set(range(m)) - ccover)
        extra = sorted(ccover - set(range(m)))
        rep.failures.append(f"constraint cover: missing {missing[:10]} extra {extra[:10]}")

    for l, (blk, cons) in enumerate(zip(blocks, pattern.cons_blocks)):
        for j in cons:
            if 0 <= j < m and not problem.constraints[j].support_vars() <= blk:
                rep.failures.append(f"constraint {j} not supported in block {l}")

    for e in problem.objective.terms:
        sv = set(expo_vars(e))
        if not any(sv <= b for b in blocks):
            rep.failures.append(f"objective monomial on variables {sorted(sv)} fits no block")
            break

    ok, where = rip_check(pattern.blocks)
    if not ok:
        rep.failures.append(f"running intersection property fails at block {where}")
    return rep


def banded_blocks(nvec: Sequence[int], o: int) -> List[Tuple[int, ...]]:
    if o < 0:
        raise ValueError("overlap must be nonnegative")
    blocks = []
    c = 0
    for l, nl in enumerate(nvec):
        if nl <= o:
            raise ValueError(f"block size {nl} must exceed overlap {o}")
        c = nl if l == 0 else c + nl - o
        blocks.append(tuple(range(c - nl, c)))
    return blocks


def banded_pattern(nvec: Sequence[int], o: int) -> SparsityPattern:
    """Consecutive blocks of sizes ``nvec`` sharing ``o`` variables pairwise."""
    return SparsityPattern(tuple(banded_blocks(nvec, o)))


def assign_constraints(problem: PopProblem, blocks: Sequence[Sequence[int]],
                       mode: str = "all") -> SparsityPattern:
    """Build ``J_l`` from constraint supports.

    ``mode="all"`` puts every constraint into every block containing its
    support (this is what the benchmark tables count); ``mode="first"`` uses
    only the lowest-index containing block.
    """
    sets = [set(b) for b in blocks]
    cons: List[List[int]] = [[] for _ in blocks]
    for j, g in enumerate(problem.constraints):
        sv = g.support_vars()
        hits = [l for l, b in enumerate(sets) if sv <= b]
        if not hits:
            raise ValueError(f"constraint {j} is supported in no block")
        if mode == "first":
            hits = hits[:1]
        elif mode != "all":
            raise ValueError(f"unknown mode {mode!r}")
        for l in hits:
            cons[l].append(j)
    return SparsityPattern(tuple(tuple(b) for b in blocks), tuple(tuple(c) for c in cons))


def _csp_graph(problem: PopProblem) -> List[set]:
    adj = [set() for _ in range(problem.n)]

    def clique(vs):
        vs = list(vs)
        for a in vs:
            adj[a].update(v for v in vs if v != a)

    for e in problem.objective.terms:
        clique(expo_vars(e))
    for g in problem.constraints:
        clique(g.support_vars())
    return adj


def _clique_tree_order(cliques: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    # Prim on the clique intersection graph (max weight) gives a clique tree;
    # visiting parents before children satisfies the running intersection property.
    if not cliques:
        return []
    sets = [set(c) for c in cliques]
    p = len(cliques)
    visited = [False] * p
    best = [-1] * p
    start = min(range(p), key=lambda i: cliques[i])
    order = []
    cur = start
    for _ in range(p):
        visited[cur] = True
        order.append(cur)
        for j in range(p):
            if not visited[j]:
                w = len(sets[cur] & sets[j])
                if w > best[j]:
                    best[j] = w
        rest = [j for j in range(p) if not visited[j]]
        if not rest:
            break
        cur = min(rest, key=lambda j: (-best[j], cliques[j]))
    return [cliques[i] for i in order]


def detect_pattern(problem: PopProblem) -> SparsityPattern:
    """Maximal cliques of a minimum-degree chordal extension of the csp graph."""
    n = problem.n
    adj = _csp_graph(problem)
    work = [set(a) for a in adj]
    remaining = set(range(n))
    order: List[int] = []
    candidates: List[Tuple[int, frozenset]] = []
    while remaining:
        v = min(remaining, key=lambda u: (len(work[u]), u))
        nb = work[v]
        candidates.append((v, frozenset(nb | {v})))
        for a in nb:
            work[a] |= nb - {a}
            work[a].discard(v)
        remaining.discard(v)
        order.append(v)
        work[v] = set()

    maximal: List[frozenset] = []
    for pos, (v, c) in enumerate(candidates):
        if not any(c < other or (c == other and q < pos) for q, (_, other) in enumerate(candidates) if q != pos):
            maximal.append(c)
    blocks = _clique_tree_order([tuple(sorted(c)) for c in maximal])
    ok, _ = rip_check(blocks)
    assert ok, "perfect elimination ordering must give RIP cliques"
    pattern = assign_constraints(problem, blocks, mode="first")
    return pattern


def decompose_objective(problem: PopProblem, pattern: SparsityPattern) -> List[Polynomial]:
    n = problem.n
    sets = [set(b) for b in pattern.blocks]
    parts: List[Dict] = [{} for _ in sets]
    for e, c in problem.objective.terms.items():
        sv = set(expo_vars(e))
        for l, b in enumerate(sets):
            if sv <= b:
                parts[l][e] = c
                break
        else:
            raise ValueError(f"objective monomial {e} is supported in no block")
    return [Polynomial(n, t) for t in parts]


def add_ball_constraints(problem: PopProblem, radii: Sequence[float]) -> PopProblem:
    """Append ``1 - sum_{i in I_l} x_i^2 / M_l`` to each block's constraints."""
    if problem.pattern is None:
        raise ValueError("problem needs a sparsity pattern")
    pat = problem.pattern
    if len(radii) != pat.p:
        raise ValueError("need one radius per block")
    n = problem.n
    cons = list(problem.constraints)
    cons_blocks = [list(c) for c in pat.cons_blocks]
    for l, (blk, M) in enumerate(zip(pat.blocks, radii)):
        if M <= 0:
            raise ValueError("ball radius must be positive")
        g = Polynomial(n, {((i, 2),): -1.0 / M for i in blk}) + 1.0
        cons_blocks[l].append(len(cons))
        cons.append(g)
    newpat = SparsityPattern(pat.blocks, tuple(tuple(c) for c in cons_blocks))
    return replace(problem, constraints=tuple(cons), pattern=newpat)


def scale_constraints(problem: PopProblem, upper_bounds: Sequence[float]) -> PopProblem:
    if len(upper_bounds) != problem.m:
        raise ValueError("need one bound per constraint")
    cons = []
    for g, ub in zip(problem.constraints, upper_bounds):
        if ub <= 0:
            raise ValueError("constraint bound must be positive")
        cons.append(g if ub == 1 else g / ub)
    return replace(problem, constraints=tuple(cons))


def check_normalization(problem: PopProblem, samples: np.ndarray, tol: float = 1e-9) -> List[int]:
    """Indices of constraints exceeding 1 at sampled feasible points.

    Points violating ``g_j >= 0`` are skipped, so callers can pass a raw box
    sample and only the feasible ones count.
    """
    bad = set()
    for x in np.atleast_2d(samples):
        vals = [g.evaluate(x) for g in problem.constraints]
        if min(vals, default=0.0) < -tol:
            continue
        bad.update(j for j, v in enumerate(vals) if v > 1 + tol)
    return sorted(bad)

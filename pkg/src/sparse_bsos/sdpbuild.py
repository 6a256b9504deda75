"""Assembly of the Sparse-BSOS and Sparse-PUT semidefinite programs.

Programs are produced in a solver-agnostic standard form::

    maximize    c . x_lin
    subject to  A_lin x_lin + sum_b <A_b, X_b> = rhs
                x_lin = (free part, nonnegative part),  X_b psd

Symmetric coefficient matrices ``A_b`` are stored as upper-triangular entries
``(row, i, j, value)`` with ``i <= j``; an off-diagonal entry stands for both
``(i, j)`` and ``(j, i)``, so it contributes ``2 * value * X_ij`` to the row.
This is exactly the SDPA convention.

Rows come in two kinds: linking rows ``sum_l f^l_g = f_g`` (one per monomial g
of the union of the block monomial sets, with ``t`` added to the constant
row) followed by certificate rows ``f^l_g - <certificate>_g = 0``, one per
block and per monomial of that block.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .certificate import HProducts, PairIndex, dmax as compute_dmax, enumerate_pairs
from .poly import ONE, Exponent, Polynomial, enumerate_monomials, expo_add, expo_vars, grlex_key
from .sparsity import PopProblem, SparsityPattern, validate

HIERARCHIES = ("sparse-bsos", "dense-bsos", "sparse-put")

RowLabel = Tuple[str, int, Exponent]  # (kind, block or -1, monomial)


class BuildError(ValueError):
    """The requested program cannot be assembled."""


class InfeasibleOrder(BuildError):
    """The relaxation order is too small for the problem degree."""


@dataclass
class ConicProgram:
    n_free: int
    n_nonneg: int
    psd_sizes: List[int]
    A_lin: sp.csr_matrix
    psd_entries: List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    rhs: np.ndarray
    c: np.ndarray
    row_labels: List[RowLabel] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def n_lin(self) -> int:
        return self.n_free + self.n_nonneg

    def counts(self) -> dict:
        sizes: Dict[int, int] = {}
        for s in self.psd_sizes:
            sizes[s] = sizes.get(s, 0) + 1
        return {
            "nonneg": self.n_nonneg,
            "free": self.n_free,
            "psd": len(self.psd_sizes),
            "psd_sizes": sizes,
            "constraints": self.n_rows,
        }

    def psd_label(self) -> str:
        """Table-style "2(51)" or "1(51)/1(43)" summary, sizes in order of first appearance."""
        cnt: Dict[int, int] = {}
        for s in self.psd_sizes:
            cnt[s] = cnt.get(s, 0) + 1
        return "/".join(f"{c}({s})" for s, c in cnt.items())

    def psd_matrix(self, b: int, row: int) -> np.ndarray:
        """Dense symmetric coefficient matrix of block ``b`` in row ``row``."""
        s = self.psd_sizes[b]
        rows, ii, jj, vv = self.psd_entries[b]
        M = np.zeros((s, s))
        sel = rows == row
        M[ii[sel], jj[sel]] += vv[sel]
        off = sel & (ii != jj)
        M[jj[off], ii[off]] += vv[off]
        return M

    def apply(self, x_lin: np.ndarray, X: Sequence[np.ndarray]) -> np.ndarray:
        """Left-hand side of every row at the given point."""
        out = self.A_lin @ x_lin
        for b, Xb in enumerate(X):
            rows, ii, jj, vv = self.psd_entries[b]
            w = np.where(ii == jj, 1.0, 2.0) * vv * Xb[ii, jj]
            out += np.bincount(rows, weights=w, minlength=self.n_rows)
        return out

    def fingerprint(self) -> str:
        """SHA-256 of the canonical SDPA serialization."""
        from .sdpsolve.sdpa import write_sdpa

        buf = io.StringIO()
        write_sdpa(self, buf)
        return hashlib.sha256(buf.getvalue().encode()).hexdigest()


@dataclass
class VariableLedger:
    """Maps program variables and rows back to the relaxation's objects."""

    hierarchy: str
    d: int
    k: Optional[int]
    dmax: int
    blocks: Tuple[Tuple[int, ...], ...]
    cons_blocks: Tuple[Tuple[int, ...], ...]
    free_roles: List[tuple]
    nonneg_roles: List[Tuple[int, PairIndex]]
    psd_roles: List[Tuple[int, Optional[int], List[Exponent]]]
    row_labels: List[RowLabel]
    block_monomials: List[List[Exponent]]
    eliminated: Dict[Tuple[int, Exponent], float] = field(default_factory=dict)
    removed_rows: List[RowLabel] = field(default_factory=list)
    objective: Optional[Polynomial] = None

    def row_index(self) -> Dict[RowLabel, int]:
        return {lab: r for r, lab in enumerate(self.row_labels)}


class _Rows:
    """Accumulates sparse row entries before the final matrices are formed."""

    def __init__(self):
        self.labels: List[RowLabel] = []
        self.index: Dict[RowLabel, int] = {}
        self.rhs: List[float] = []
        self.lin_r: List[int] = []
        self.lin_c: List[int] = []
        self.lin_v: List[float] = []

    def add_row(self, label: RowLabel, rhs: float = 0.0) -> int:
        r = len(self.labels)
        self.labels.append(label)
        self.index[label] = r
        self.rhs.append(rhs)
        return r

    def lin(self, r: int, col: int, v: float) -> None:
        self.lin_r.append(r)
        self.lin_c.append(col)
        self.lin_v.append(v)


def _block_monomials(blocks, deg) -> List[List[Exponent]]:
    return [enumerate_monomials(len(b), deg, b) for b in blocks]


def _gram_entries(basis: List[Exponent], rowmap: Dict[Exponent, int], mult: Polynomial | None,
                  scale: float = -1.0):
    """Rows/positions of <Q, (v v^T mult)_g> for all upper-triangular (a, b)."""
    s = len(basis)
    rows, ii, jj, vv = [], [], [], []
    mterms = list(mult.terms.items()) if mult is not None else [(ONE, 1.0)]
    for a in range(s):
        for b in range(a, s):
            base = expo_add(basis[a], basis[b])
            for e, c in mterms:
                g = expo_add(base, e)
                rows.append(rowmap[g])
                ii.append(a)
                jj.append(b)
                vv.append(scale * c)
    return (np.asarray(rows, dtype=np.int64), np.asarray(ii, dtype=np.int64),
            np.asarray(jj, dtype=np.int64), np.asarray(vv, dtype=float))


def _skeleton(problem: PopProblem, pattern: SparsityPattern, deg: int):
    """Free variables, linking rows and empty certificate rows shared by both hierarchies."""
    f = problem.objective
    blocks = pattern.blocks
    mons = _block_monomials(blocks, deg)
    owners: Dict[Exponent, List[int]] = {}
    for l, ms in enumerate(mons):
        for g in ms:
            owners.setdefault(g, []).append(l)
    gamma = sorted(owners, key=grlex_key)

    free_roles: List[tuple] = [("t",)]
    fcol: Dict[Tuple[int, Exponent], int] = {}
    for l, ms in enumerate(mons):
        for g in ms:
            fcol[(l, g)] = len(free_roles)
            free_roles.append(("f", l, g))

    rows = _Rows()
    for g in gamma:
        r = rows.add_row(("link", -1, g), f.coef(g))
        for l in owners[g]:
            rows.lin(r, fcol[(l, g)], 1.0)
        if g == ONE:
            rows.lin(r, 0, 1.0)
    certmaps: List[Dict[Exponent, int]] = []
    for l, ms in enumerate(mons):
        cm = {}
        for g in ms:
            r = rows.add_row(("cert", l, g), 0.0)
            rows.lin(r, fcol[(l, g)], 1.0)
            cm[g] = r
        certmaps.append(cm)
    return mons, owners, free_roles, rows, certmaps


def _finish(rows: _Rows, n_free: int, n_nonneg: int, psd_sizes, psd_entries) -> ConicProgram:
    n_lin = n_free + n_nonneg
    A = sp.csr_matrix((rows.lin_v, (rows.lin_r, rows.lin_c)), shape=(len(rows.labels), n_lin))
    A.sum_duplicates()
    A.sort_indices()
    c = np.zeros(n_lin)
    c[0] = 1.0
    return ConicProgram(n_free, n_nonneg, list(psd_sizes), A, psd_entries,
                        np.asarray(rows.rhs, dtype=float), c, list(rows.labels))


def _check_pattern(problem: PopProblem, pattern: SparsityPattern) -> None:
    rep = validate(pattern, problem)
    if not rep.ok:
        raise BuildError("invalid sparsity pattern: " + "; ".join(rep.failures))


def build_sparse_bsos(problem: PopProblem, pattern: SparsityPattern | None, d: int, k: int,
                      reduce_program: bool = True):
    """Sparse-BSOS relaxation of order ``d`` with psd blocks of half-degree ``k``."""
    pattern = pattern or problem.pattern
    if pattern is None:
        raise BuildError("a sparsity pattern is required")
    if d < 1 or k < 1:
        raise BuildError("d and k must be >= 1")
    _check_pattern(problem, pattern)
    f, g = problem.objective, problem.constraints
    gdeg = max((q.degree for q in g), default=0)
    if f.degree > max(2 * k, d * gdeg):
        raise InfeasibleOrder(
            f"deg f = {f.degree} exceeds both 2k = {2 * k} and d*max deg g = {d * gdeg}")
    dm = compute_dmax(f, g, d, k)

    mons, owners, free_roles, rows, certmaps = _skeleton(problem, pattern, dm)
    n_free = len(free_roles)

    hp = HProducts(g, problem.n)
    nonneg_roles: List[Tuple[int, PairIndex]] = []
    for l, cons in enumerate(pattern.cons_blocks):
        cm = certmaps[l]
        for pair in enumerate_pairs(cons, d):
            col = n_free + len(nonneg_roles)
            nonneg_roles.append((l, pair))
            for e, coef in hp(pair).terms.items():
                rows.lin(cm[e], col, -coef)

    psd_sizes, psd_entries, psd_roles = [], [], []
    for l, blk in enumerate(pattern.blocks):
        basis = enumerate_monomials(len(blk), k, blk)
        psd_sizes.append(len(basis))
        psd_entries.append(_gram_entries(basis, certmaps[l], None))
        psd_roles.append((l, None, basis))

    prog = _finish(rows, n_free, len(nonneg_roles), psd_sizes, psd_entries)
    ledger = VariableLedger("sparse-bsos", d, k, dm, pattern.blocks, pattern.cons_blocks,
                            free_roles, nonneg_roles, psd_roles, list(rows.labels), mons,
                            objective=f)
    if reduce_program:
        prog, ledger = reduce(prog, ledger)
    return prog, ledger


def build_dense_bsos(problem: PopProblem, d: int, k: int, reduce_program: bool = True):
    pattern = SparsityPattern.trivial(problem.n, problem.m)
    prog, ledger = build_sparse_bsos(problem, pattern, d, k, reduce_program)
    ledger.hierarchy = "dense-bsos"
    return prog, ledger


def put_multiplier_degrees(problem: PopProblem, d: int) -> List[int]:
    return [(2 * d - q.degree) // 2 for q in problem.constraints]


def build_sparse_put(problem: PopProblem, pattern: SparsityPattern | None, d: int,
                     reduce_program: bool = True):
    """Sparse Putinar-type relaxation of order ``d`` (SOS weights on each g_j)."""
    pattern = pattern or problem.pattern
    if pattern is None:
        raise BuildError("a sparsity pattern is required")
    if d < 1:
        raise BuildError("d must be >= 1")
    _check_pattern(problem, pattern)
    f, g = problem.objective, problem.constraints
    if f.degree > 2 * d or any(q.degree > 2 * d for q in g):
        raise InfeasibleOrder(f"order d = {d} too small: need 2d >= every degree in the problem")
    dm = 2 * d
    dj = put_multiplier_degrees(problem, d)

    mons, owners, free_roles, rows, certmaps = _skeleton(problem, pattern, dm)
    n_free = len(free_roles)

    psd_sizes, psd_entries, psd_roles = [], [], []
    for l, blk in enumerate(pattern.blocks):
        basis = enumerate_monomials(len(blk), d, blk)
        psd_sizes.append(len(basis))
        psd_entries.append(_gram_entries(basis, certmaps[l], None))
        psd_roles.append((l, None, basis))
        for j in pattern.cons_blocks[l]:
            bj = enumerate_monomials(len(blk), dj[j], blk)
            psd_sizes.append(len(bj))
            psd_entries.append(_gram_entries(bj, certmaps[l], g[j]))
            psd_roles.append((l, j, bj))

    prog = _finish(rows, n_free, 0, psd_sizes, psd_entries)
    ledger = VariableLedger("sparse-put", d, None, dm, pattern.blocks, pattern.cons_blocks,
                            free_roles, [], psd_roles, list(rows.labels), mons, objective=f)
    if reduce_program:
        prog, ledger = reduce(prog, ledger)
    return prog, ledger


def reduce(program: ConicProgram, ledger: VariableLedger, tol: float = 1e-9):
    """Fix coefficients of monomials owned by a single block; drop ``0 = 0`` rows."""
    owners: Dict[Exponent, int] = {}
    for l, ms in enumerate(ledger.block_monomials):
        for g in ms:
            owners[g] = owners.get(g, 0) + 1
    f = ledger.objective
    fixed_cols, fixed_vals, keep_cols = [], [], []
    eliminated = dict(ledger.eliminated)
    for col, role in enumerate(ledger.free_roles):
        if role[0] == "f" and role[2] != ONE and owners[role[2]] == 1:
            val = f.coef(role[2])
            fixed_cols.append(col)
            fixed_vals.append(val)
            eliminated[(role[1], role[2])] = val
        else:
            keep_cols.append(col)
    if not fixed_cols:
        return program, ledger

    A = program.A_lin.tocsc()
    rhs = program.rhs - A[:, fixed_cols] @ np.asarray(fixed_vals)
    keep_all = keep_cols + list(range(program.n_free, program.n_lin))
    A = A[:, keep_all].tocsr()

    has_psd = np.zeros(program.n_rows, dtype=bool)
    for rows_b, *_ in program.psd_entries:
        has_psd[rows_b] = True
    empty = (np.diff(A.indptr) == 0) & ~has_psd
    bad = empty & (np.abs(rhs) > tol)
    if bad.any():
        r = int(np.flatnonzero(bad)[0])
        raise BuildError(f"row {program.row_labels[r]} reduces to 0 = {rhs[r]:.3g}")
    keep_rows = np.flatnonzero(~empty)
    newidx = -np.ones(program.n_rows, dtype=np.int64)
    newidx[keep_rows] = np.arange(len(keep_rows))

    psd_entries = []
    for rows_b, ii, jj, vv in program.psd_entries:
        psd_entries.append((newidx[rows_b], ii, jj, vv))
    labels = [program.row_labels[r] for r in keep_rows]
    removed = list(ledger.removed_rows) + [program.row_labels[r] for r in np.flatnonzero(empty)]

    A = A[keep_rows]
    A.sort_indices()
    c = program.c[keep_all]
    out = ConicProgram(len(keep_cols), program.n_nonneg, list(program.psd_sizes), A,
                       psd_entries, rhs[keep_rows], c, labels)
    new_ledger = VariableLedger(
        ledger.hierarchy, ledger.d, ledger.k, ledger.dmax, ledger.blocks, ledger.cons_blocks,
        [ledger.free_roles[c_] for c_ in keep_cols], ledger.nonneg_roles, ledger.psd_roles,
        labels, ledger.block_monomials, eliminated, removed, ledger.objective)
    return out, new_ledger


def build(problem: PopProblem, hierarchy: str, d: int, k: Optional[int] = None,
          pattern: SparsityPattern | None = None):
    if hierarchy == "sparse-bsos":
        return build_sparse_bsos(problem, pattern, d, k if k is not None else 1)
    if hierarchy == "dense-bsos":
        return build_dense_bsos(problem, d, k if k is not None else 1)
    if hierarchy == "sparse-put":
        return build_sparse_put(problem, pattern, d)
    raise ValueError(f"unknown hierarchy {hierarchy!r}")


def certificate_polynomial(problem: PopProblem, ledger: VariableLedger, x_lin: np.ndarray,
                           X: Sequence[np.ndarray]) -> Polynomial:
    """``t + sum_l [sum lambda h + v^T Q v (+ sum_j g_j v_j^T Q_j v_j)]`` at a primal point.

    When the point satisfies every row this polynomial equals the objective.
    """
    n = problem.n
    x_free = x_lin[: len(ledger.free_roles)]
    x_nn = x_lin[len(ledger.free_roles):]
    t = x_free[0]
    acc: Dict[Exponent, float] = {ONE: float(t)}

    def bump(e, c):
        acc[e] = acc.get(e, 0.0) + c

    hp = HProducts(problem.constraints, n)
    for val, (l, pair) in zip(x_nn, ledger.nonneg_roles):
        if val != 0.0:
            for e, c in hp(pair).terms.items():
                bump(e, val * c)
    for Xb, (l, j, basis) in zip(X, ledger.psd_roles):
        mult = problem.constraints[j].terms.items() if j is not None else [(ONE, 1.0)]
        s = len(basis)
        for a in range(s):
            for b in range(s):
                q = Xb[a, b]
                if q == 0.0:
                    continue
                base = expo_add(basis[a], basis[b])
                for e, c in mult:
                    bump(expo_add(base, e), q * c)
    return Polynomial(n, acc)

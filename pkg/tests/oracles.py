"""Independent reference computations used by the tests.

Nothing here reuses the package's solver or SDPA reader: the SDPA file is
parsed from scratch and handed to Clarabel through cvxpy, minimizers come
from scipy's SLSQP, and tiny problems are brute-forced on a grid.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize


def parse_sdpa(path):
    """Return (m, sizes, c, entries) where entries = list of (mat, blk, i, j, v), 1-based."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    m = int(lines[0])
    nblk = int(lines[1])
    sizes = [int(t) for t in lines[2].split()][:nblk]
    c = np.array([float(t) for t in lines[3].split()])
    assert len(c) == m
    entries = []
    for ln in lines[4:]:
        a, b, i, j, v = ln.split()
        entries.append((int(a), int(b), int(i), int(j), float(v)))
    return m, sizes, c, entries


def solve_sdpa_clarabel(path) -> float:
    """Optimal value of ``max <F0,Y> s.t. <Fr,Y> = c_r, Y psd`` via cvxpy + Clarabel."""
    import cvxpy as cp

    m, sizes, c, entries = parse_sdpa(path)
    variables, rows, obj = [], [], 0
    parts = {}
    for (mat, blk, i, j, v) in entries:
        parts.setdefault(blk, []).append((mat, i - 1, j - 1, v))
    lhs = 0
    for b, s in enumerate(sizes, start=1):
        ent = parts.get(b, [])
        if s > 0:
            Y = cp.Variable((s, s), PSD=True)
            variables.append(Y)
            dim = s * s
            ri, ci, vi = [], [], []
            oi, ov = [], []
            for mat, i, j, v in ent:
                # column-major vec index as used by cp.vec
                pos = [i + j * s] if i == j else [i + j * s, j + i * s]
                for q in pos:
                    if mat == 0:
                        oi.append(q)
                        ov.append(v)
                    else:
                        ri.append(mat - 1)
                        ci.append(q)
                        vi.append(v)
            x = cp.vec(Y, order="F")
        else:
            s = -s
            y = cp.Variable(s, nonneg=True)
            variables.append(y)
            dim = s
            ri, ci, vi, oi, ov = [], [], [], [], []
            for mat, i, j, v in ent:
                if mat == 0:
                    oi.append(i)
                    ov.append(v)
                else:
                    ri.append(mat - 1)
                    ci.append(i)
                    vi.append(v)
            x = y
        if vi:
            lhs = lhs + sp.csr_matrix((vi, (ri, ci)), shape=(m, dim)) @ x
        if ov:
            w = np.zeros(dim)
            np.add.at(w, oi, ov)
            obj = obj + w @ x
    prob = cp.Problem(cp.Maximize(obj), [lhs == c])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10,
               max_iter=400)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solver status {prob.status}")
    return float(prob.value)


def slsqp_min(problem, starts, upper=True):
    """Best local minimum of the POP from several starts (polynomials evaluated directly)."""
    f = problem.objective
    cons = [{"type": "ineq", "fun": (lambda x, g=g: g.evaluate(x))} for g in problem.constraints]
    if upper:
        cons += [{"type": "ineq", "fun": (lambda x, g=g: 1.0 - g.evaluate(x))}
                 for g in problem.constraints]
    best = None
    for x0 in starts:
        r = minimize(f.evaluate, np.asarray(x0, float), method="SLSQP", constraints=cons,
                     options={"ftol": 1e-15, "maxiter": 2000})
        if best is None or r.fun < best.fun:
            best = r
    return best


def convex_qp_min(A, b, constraints, n, starts=None):
    """Minimizer of x'Ax + b'x over the constraint set (convex instances)."""
    cons = [{"type": "ineq", "fun": (lambda x, g=g: g.evaluate(x))} for g in constraints]
    starts = starts or [np.zeros(n), np.full(n, 0.2)]
    best = None
    for x0 in starts:
        r = minimize(lambda x: x @ A @ x + b @ x, x0, jac=lambda x: 2 * A @ x + b,
                     method="SLSQP", constraints=cons, options={"ftol": 1e-15, "maxiter": 1000})
        if best is None or r.fun < best.fun:
            best = r
    return best


def grid_min(poly, n: int, step: float = 1e-3) -> float:
    """Minimum of ``poly`` over the grid of [0, 1]^n with the given step."""
    g = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    terms = list(poly.terms.items())

    def ev(X):
        out = 0.0
        for e, c in terms:
            t = c
            for i, p in e:
                t = t * X[i] ** p
            out = out + t
        return out

    if n == 1:
        return float(np.min(ev([g])))
    if n == 2:
        X1, X2 = np.meshgrid(g, g, indexing="ij")
        return float(np.min(ev([X1, X2])))
    if n == 3:
        X2, X3 = np.meshgrid(g, g, indexing="ij")
        return float(min(np.min(ev([np.full_like(X2, a), X2, X3])) for a in g))
    raise ValueError("grid oracle supports n <= 3")

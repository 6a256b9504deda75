"""Primal-dual interior-point method for the conic programs built in ``sdpbuild``.

Primal (max form) and dual::

    max  c_f.x_f + c_l.x_l          min  b.y
    s.t. A_f x_f + A_l x_l            s.t. A_f' y = c_f
         + sum_b A_b(X_b) = b              z = A_l' y - c_l >= 0
         x_l >= 0, X_b psd                 Z_b = A_b*(y) psd

The search direction is HKM with Mehrotra's predictor-corrector. Each
iteration solves the saddle-point system::

    [ M     A_f ] [ dy ]   [ rhs ]
    [ A_f'  -dI ] [ -dx_f ] = [ r_f ]

where ``M = A_l diag(x/z) A_l' + sum_b M_b`` is the Schur complement of the
cone part. Free variables therefore never need splitting. Small shifts on
both diagonal blocks keep the matrix nonsingular when rows are linearly
dependent; iterative refinement removes them again.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

STATUSES = ("optimal", "near-optimal", "numerical-trouble", "infeasible-order")


@dataclass
class Tolerances:
    gap: float = 1e-7
    feas: float = 1e-7
    max_iter: int = 100
    # accepted as "near-optimal" when progress stalls below these
    near_gap: float = 1e-5
    near_feas: float = 1e-5
    reg: float = 1e-10
    # relative diagonal shift on M, used only once M is exactly singular
    shift: float = 1e-14


@dataclass
class ConicSolution:
    status: str
    x_lin: np.ndarray
    X: List[np.ndarray]
    y: np.ndarray
    z_lin: np.ndarray
    Z: List[np.ndarray]
    primal_objective: float
    dual_objective: float
    iterations: int
    pinf: float
    dinf: float
    relgap: float
    history: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")

    @property
    def bound(self) -> float:
        """Objective value reported for the relaxation (dual side is a valid bound)."""
        return self.primal_objective


class _PsdBlock:
    """Precomputed operator data of one psd block."""

    def __init__(self, size, rows, ii, jj, vv, n_rows):
        self.s = s = size
        off = ii != jj
        r = np.concatenate([rows, rows[off]])
        p = np.concatenate([ii, jj[off]])
        q = np.concatenate([jj, ii[off]])
        v = np.concatenate([vv, vv[off]])
        self.rows, loc = np.unique(r, return_inverse=True)
        self.m = len(self.rows)
        # P has one row per touched constraint and one column per (p, q)
        self.P = sp.csr_matrix((v, (loc, p * s + q)), shape=(self.m, s * s))
        self.PT = self.P.T.tocsr()
        self.Pc = self.P.tocsc()

    def op(self, X: np.ndarray) -> np.ndarray:
        return self.P @ X.ravel()

    def adj(self, yloc: np.ndarray) -> np.ndarray:
        return (self.PT @ yloc).reshape(self.s, self.s)

    def schur(self, X: np.ndarray, Zi: np.ndarray) -> np.ndarray:
        """M[r, t] = <A_r, X A_t Zi>, i.e. P (X kron Zi) P'."""
        s = self.s
        N = s * s
        if N <= 2500:
            K = np.kron(X, Zi)
            return self.P @ (self.P @ K).T
        out = np.zeros((self.m, self.m))
        chunk = max(1, int(4_000_000 // N))
        for c0 in range(0, N, chunk):
            cols = np.arange(c0, min(N, c0 + chunk))
            u, w = np.divmod(cols, s)
            Kc = (X[:, None, u] * Zi[None, :, w]).reshape(N, len(cols))
            PK = self.P @ Kc
            out += (self.Pc[:, cols] @ PK.T).T
        return out


def _sym(W: np.ndarray) -> np.ndarray:
    return 0.5 * (W + W.T)


def _psd_inv(X: np.ndarray):
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    return Li.T @ Li, L


def _max_step_psd(L: np.ndarray, D: np.ndarray) -> float:
    W = sla.solve_triangular(L, D, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W))[0]
    return -1.0 / lam if lam < 0 else math.inf


def _max_step_lin(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not neg.any():
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


class _KKT:
    """Factorization of the saddle-point matrix with iterative refinement."""

    def __init__(self, M: sp.spmatrix, A_f: sp.csc_matrix, reg: float, shift: float,
                 shifted: bool = False):
        nf = A_f.shape[1]
        self.delta = reg
        self.m = M.shape[0]
        self.nf = nf
        K0 = sp.bmat([[M, A_f], [A_f.T, None]], format="csc") if nf else M.tocsc()
        self.K0 = K0
        n = K0.shape[0]
        self.dense = n <= 2500 or K0.nnz > 0.15 * n * n
        # relaxations often have linearly dependent (but consistent) rows, which
        # makes M singular; a tiny shift relative to its scale restores a
        # usable factorization and refinement removes the bias elsewhere
        self.rho = shift * max(1.0, float(np.max(np.abs(M.diagonal()), initial=0.0)))
        self.shifted = shifted
        if not (shifted or self._factor(0.0)):
            self.shifted = True
        if self.shifted and not self._factor(self.rho):
            log.debug("KKT matrix remains nearly singular after the shift")

    def _factor(self, rho: float) -> bool:
        """Factor the regularized matrix; False on an exactly zero or non-finite pivot.

        Only exact breakdown counts: tiny pivots also appear late in well-posed
        runs, and shifting those stalls convergence.
        """
        diag = np.concatenate([np.full(self.m, rho), np.full(self.nf, -self.delta)])
        Kr = (self.K0 + sp.diags(diag, format="csc")).tocsc()
        if self.dense:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self.lu = sla.lu_factor(Kr.toarray(), check_finite=False)
            piv = np.abs(np.diag(self.lu[0]))
        else:
            try:
                # quasi-definite once delta > 0, so diagonal pivots keep the ordering
                self.lu = spla.splu(Kr, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                    options={"SymmetricMode": True})
            except RuntimeError:
                return False
            piv = np.abs(self.lu.U.diagonal())
        top = piv.max(initial=0.0)
        return bool(top > 0 and np.isfinite(top) and np.all(np.isfinite(piv)) and piv.min() > 0)

    def _solve(self, r):
        if self.dense:
            return sla.lu_solve(self.lu, r, check_finite=False)
        return self.lu.solve(r)

    def solve(self, r: np.ndarray, steps: int = 3) -> np.ndarray:
        x = self._solve(r)
        nr = np.linalg.norm(r)
        for _ in range(steps):
            res = r - self.K0 @ x
            if np.linalg.norm(res) <= 1e-14 * max(1.0, nr):
                break
            x = x + self._solve(res)
        return x


def solve(program, tol: Optional[Tolerances] = None, verbose: bool = False) -> ConicSolution:
    tol = tol or Tolerances()
    m = program.n_rows
    if m == 0:
        raise ValueError("program has no equality rows")
    nf, nl = program.n_free, program.n_nonneg
    if program.A_lin.shape != (m, nf + nl) or len(program.c) != nf + nl:
        raise ValueError("dimension mismatch in conic program")
    A = program.A_lin.tocsc()
    A_f = A[:, :nf].tocsc()
    A_l = A[:, nf:].tocsc()
    A_lT = A_l.T.tocsr()
    A_fT = A_f.T.tocsr()
    b = np.asarray(program.rhs, dtype=float)
    c_f, c_l = program.c[:nf], program.c[nf:]
    blocks = [_PsdBlock(s, *ent, m) for s, ent in zip(program.psd_sizes, program.psd_entries)]
    for blk in blocks:
        if blk.m and blk.rows[-1] >= m:
            raise ValueError("psd entry references a missing row")
    n_cone = nl + sum(blk.s for blk in blocks)

    def A_op(xf, xl, X):
        out = A_f @ xf + A_l @ xl
        for blk, Xb in zip(blocks, X):
            out[blk.rows] += blk.op(Xb)
        return out

    # initial point, sized by problem norms
    normb = np.linalg.norm(b)
    normc = np.linalg.norm(program.c)
    xi = max(10.0, math.sqrt(max(n_cone, 1)), normb)
    eta = max(10.0, math.sqrt(max(n_cone, 1)), normc)
    xf = np.zeros(nf)
    xl = np.full(nl, xi)
    X = [xi * np.eye(blk.s) for blk in blocks]
    y = np.zeros(m)
    zl = np.full(nl, eta)
    Z = [eta * np.eye(blk.s) for blk in blocks]

    history = []
    status = "numerical-trouble"
    best = None
    shifted = False  # sticky once dependent rows show up
    it = 0
    for it in range(tol.max_iter + 1):
        # residuals
        rp = b - A_op(xf, xl, X)
        rdf = c_f - A_fT @ y
        rdl = zl + c_l - A_lT @ y
        RD = []
        for blk, Zb in zip(blocks, Z):
            RD.append(Zb - blk.adj(y[blk.rows]))
        pobj = float(program.c[:nf] @ xf + c_l @ xl)
        dobj = float(b @ y)
        comp = float(xl @ zl + sum(np.vdot(Xb, Zb) for Xb, Zb in zip(X, Z)))
        mu = comp / max(n_cone, 1)
        pinf = np.linalg.norm(rp) / (1.0 + normb)
        dinf = math.sqrt(np.linalg.norm(rdf) ** 2 + np.linalg.norm(rdl) ** 2
                         + sum(np.linalg.norm(R) ** 2 for R in RD)) / (1.0 + normc)
        relgap = abs(dobj - pobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append((it, pobj, dobj, pinf, dinf, relgap, mu))
        if verbose:
            log.info("it %3d pobj % .8e dobj % .8e pinf %.1e dinf %.1e gap %.1e",
                     it, pobj, dobj, pinf, dinf, relgap)
        score = max(pinf, dinf, relgap)
        if best is None or score < best[0]:
            best = (score, it, xf.copy(), xl.copy(), [Xb.copy() for Xb in X], y.copy(),
                    zl.copy(), [Zb.copy() for Zb in Z], pobj, dobj, pinf, dinf, relgap)
        if relgap <= tol.gap and pinf <= tol.feas and dinf <= tol.feas:
            status = "optimal"
            break
        if it == tol.max_iter:
            break

        try:
            Zinv, LZ, LX = [], [], []
            for Xb, Zb in zip(X, Z):
                Zi, Lz = _psd_inv(Zb)
                Zinv.append(Zi)
                LZ.append(Lz)
                LX.append(np.linalg.cholesky(Xb))
            dl = xl / zl
            M = (A_l @ sp.diags(dl) @ A_lT).tocoo()
            ri, ci, vi = [M.row], [M.col], [M.data]
            for blk, Xb, Zi in zip(blocks, X, Zinv):
                Mb = blk.schur(Xb, Zi)
                Mb = _sym(Mb)
                rr = np.repeat(blk.rows, blk.m)
                cc = np.tile(blk.rows, blk.m)
                ri.append(rr)
                ci.append(cc)
                vi.append(Mb.ravel())
            Mfull = sp.csc_matrix((np.concatenate(vi), (np.concatenate(ri), np.concatenate(ci))),
                                  shape=(m, m))
            kkt = _KKT(Mfull, A_f, tol.reg, tol.shift, shifted)
            shifted = kkt.shifted
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("factorization failed at iteration %d: %s", it, exc)
            break

        def direction(Rc_l, Rc):
            # rhs1 = rp - A_l(Rc_l/z + D rdl) - A(Rc + X RD Zi)
            r1 = rp - A_l @ (Rc_l / zl + dl * rdl)
            for blk, Xb, Zi, Rcb, RDb in zip(blocks, X, Zinv, Rc, RD):
                r1[blk.rows] -= blk.op(Rcb + Xb @ RDb @ Zi)
            sol = kkt.solve(np.concatenate([-r1, rdf]))
            dy = sol[:m]
            dxf = -sol[m:]
            dzl = A_lT @ dy - rdl
            dxl = Rc_l / zl - dl * dzl
            dZ, dX = [], []
            for blk, Xb, Zi, Rcb, RDb in zip(blocks, X, Zinv, Rc, RD):
                dZb = blk.adj(dy[blk.rows]) - RDb
                dX.append(Rcb - _sym(Xb @ dZb @ Zi))
                dZ.append(dZb)
            return dxf, dxl, dX, dy, dzl, dZ

        def steps(dxl, dX, dzl, dZ):
            ap = _max_step_lin(xl, dxl)
            ad = _max_step_lin(zl, dzl)
            for Lx, Lz, dXb, dZb in zip(LX, LZ, dX, dZ):
                ap = min(ap, _max_step_psd(Lx, dXb))
                ad = min(ad, _max_step_psd(Lz, dZb))
            return ap, ad

        # predictor
        Rc_l = -xl * zl
        Rc = [-Xb for Xb in X]
        try:
            dxf, dxl, dX, dy, dzl, dZ = direction(Rc_l, Rc)
            ap, ad = steps(dxl, dX, dzl, dZ)
            ap, ad = min(1.0, ap), min(1.0, ad)
            comp_aff = float((xl + ap * dxl) @ (zl + ad * dzl)
                             + sum(np.vdot(Xb + ap * dXb, Zb + ad * dZb)
                                   for Xb, dXb, Zb, dZb in zip(X, dX, Z, dZ)))
            sigma = min(1.0, max(0.0, comp_aff / max(comp, 1e-300))) ** 3
            # corrector
            Rc_l = sigma * mu - xl * zl - dxl * dzl
            Rc = [sigma * mu * Zi - Xb - _sym(dXb @ dZb @ Zi)
                  for Xb, Zi, dXb, dZb in zip(X, Zinv, dX, dZ)]
            dxf, dxl, dX, dy, dzl, dZ = direction(Rc_l, Rc)
            ap, ad = steps(dxl, dX, dzl, dZ)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("direction failed at iteration %d: %s", it, exc)
            break
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < 1e-12:
            break
        xf = xf + ap * dxf
        xl = xl + ap * dxl
        X = [_sym(Xb + ap * dXb) for Xb, dXb in zip(X, dX)]
        y = y + ad * dy
        zl = zl + ad * dzl
        Z = [_sym(Zb + ad * dZb) for Zb, dZb in zip(Z, dZ)]

    if status != "optimal":
        (_, it_b, xf, xl, X, y, zl, Z, pobj, dobj, pinf, dinf, relgap) = best
        if relgap <= tol.near_gap and pinf <= tol.near_feas and dinf <= tol.near_feas:
            status = "near-optimal"
    return ConicSolution(status, np.concatenate([xf, xl]), X, y, zl, Z, pobj, dobj, it,
                         pinf, dinf, relgap, history)

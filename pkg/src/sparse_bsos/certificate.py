"""Index sets ``N^l_d`` and the products h_ab = prod_j g_j^a_j (1 - g_j)^b_j."""
from __future__ import annotations

from dataclasses import dataclass
from threading import Lock
from typing import Dict, List, Sequence, Tuple

from .poly import Polynomial, enumerate_monomials

# sparse (constraint index, power) pairs, sorted by constraint index
SparseCount = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class PairIndex:
    alpha: SparseCount
    beta: SparseCount

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.alpha) + sum(p for _, p in self.beta)

    def support(self) -> set:
        return {j for j, _ in self.alpha} | {j for j, _ in self.beta}

    def dense(self, m: int) -> Tuple[List[int], List[int]]:
        a, b = [0] * m, [0] * m
        for j, p in self.alpha:
            a[j] = p
        for j, p in self.beta:
            b[j] = p
        return a, b

    def label(self) -> str:
        fa = "".join(f"g{j}^{p}" if p > 1 else f"g{j}" for j, p in self.alpha)
        fb = "".join(f"(1-g{j})^{p}" if p > 1 else f"(1-g{j})" for j, p in self.beta)
        return (fa + fb) or "1"


def enumerate_pairs(cons: Sequence[int], d: int) -> List[PairIndex]:
    """All (alpha, beta) supported in ``cons`` with total degree <= d.

    Ordered graded-lex over the concatenated vector (alpha|beta) restricted to
    ``cons``; the length is C(2 m_l + d, d).
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    cons = sorted(cons)
    m = len(cons)
    out = []
    for e in enumerate_monomials(2 * m, d):
        alpha = tuple((cons[t], p) for t, p in e if t < m)
        beta = tuple((cons[t - m], p) for t, p in e if t >= m)
        out.append(PairIndex(alpha, beta))
    return out


class HProducts:
    """Expanded h_ab polynomials for a fixed constraint list, memoized.

    The cache is guarded by a lock so a single instance can be shared by
    workers assembling different blocks.
    """

    def __init__(self, constraints: Sequence[Polynomial], n: int):
        self.n = n
        self.g = list(constraints)
        self.one_minus_g = [1.0 - g for g in self.g]
        self._cache: Dict[Tuple[SparseCount, SparseCount], Polynomial] = {}
        self._lock = Lock()

    def __call__(self, pair: PairIndex) -> Polynomial:
        return self._get(pair.alpha, pair.beta)

    def _get(self, alpha: SparseCount, beta: SparseCount) -> Polynomial:
        key = (alpha, beta)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not alpha and not beta:
            val = Polynomial.constant(self.n, 1.0)
        elif alpha:
            j, p = alpha[-1]
            rest = alpha[:-1] + (((j, p - 1),) if p > 1 else ())
            val = self._get(rest, beta) * self.g[j]
        else:
            j, p = beta[-1]
            rest = beta[:-1] + (((j, p - 1),) if p > 1 else ())
            val = self._get(alpha, rest) * self.one_minus_g[j]
        with self._lock:
            self._cache[key] = val
        return val


def h_poly(pair: PairIndex, g: Sequence[Polynomial]) -> Polynomial:
    if not g:
        raise ValueError("need at least one constraint to infer num_vars")
    return HProducts(g, g[0].num_vars)(pair)


def dmax(f: Polynomial, g: Sequence[Polynomial], d: int, k: int) -> int:
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    gdeg = max((q.degree for q in g), default=0)
    return max(f.degree, 2 * k, d * gdeg)

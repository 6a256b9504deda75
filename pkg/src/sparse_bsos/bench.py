"""Deterministic benchmark problem generators.

Random families draw from numpy's PCG64 with a ``SeedSequence`` spawned into
three independent streams: one for the matrix ``A``, one for ``b`` and one for
the quartic weights ``a``. Identical ``(spec, seed)`` inputs give identical
problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .poly import Polynomial
from .sparsity import PopProblem, SparsityPattern, assign_constraints, banded_blocks

FAMILIES = (
    "qp",
    "qp-quartic",
    "chained-wood",
    "chained-singular",
    "gen-rosenbrock",
    "discrete-boundary",
    "broyden-banded",
)
TEST_FUNCTIONS = FAMILIES[2:]


@dataclass(frozen=True)
class BenchSpec:
    family: str
    n: Optional[int] = None
    nvec: Tuple[int, ...] = ()
    o: int = 0
    s: int = 2
    seed: int = 0
    convex: bool = False
    options: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "nvec", tuple(int(v) for v in self.nvec))
        if self.family in ("qp", "qp-quartic"):
            if not self.nvec:
                raise ValueError("QP families need a banded pattern (nvec, o)")
            if self.family == "qp" and self.s not in (1, 2):
                raise ValueError("s must be 1 or 2")
        elif self.n is None:
            raise ValueError("test functions need n")


def parse_nvec(text: str) -> Tuple[int, ...]:
    """Parse "50,50", "11x10" or "(11x10),5" style block size lists."""
    out: List[int] = []
    for part in text.replace("(", "").replace(")", "").split(","):
        part = part.strip().lower().replace("×", "x")
        if not part:
            continue
        if "x" in part:
            cnt, size = part.split("x")
            out.extend([int(size)] * int(cnt))
        else:
            out.append(int(part))
    return tuple(out)


def _streams(seed: int):
    ss = np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3)]


def _block_mask(n: int, blocks) -> np.ndarray:
    mask = np.zeros((n, n), dtype=bool)
    for b in blocks:
        idx = np.asarray(b)
        mask[np.ix_(idx, idx)] = True
    return mask


def _draw_matrix(rng, mask: np.ndarray, convex: bool, max_tries: int) -> np.ndarray:
    n = mask.shape[0]
    iu = np.triu_indices(n)
    for _ in range(max_tries):
        U = np.zeros((n, n))
        U[iu] = rng.uniform(-1.0, 1.0, size=len(iu[0]))
        A = np.triu(U) + np.triu(U, 1).T
        A[~mask] = 0.0
        ev = np.linalg.eigvalsh(A)
        if convex:
            if ev[0] >= 0.0:
                return A
        elif ev[0] < 0.0 < ev[-1]:
            return A
    kind = "positive semidefinite" if convex else "indefinite"
    raise RuntimeError(f"no {kind} matrix found in {max_tries} draws")


def _quadratic(n: int, A: np.ndarray, b: np.ndarray) -> Polynomial:
    terms = {}
    for i in range(n):
        if A[i, i] != 0.0:
            terms[((i, 2),)] = A[i, i]
        for j in range(i + 1, n):
            if A[i, j] != 0.0:
                terms[((i, 1), (j, 1))] = 2.0 * A[i, j]
        if b[i] != 0.0:
            terms[((i, 1),)] = b[i]
    return Polynomial(n, terms)


def _nonneg_constraints(n: int) -> List[Polynomial]:
    return [Polynomial.var(n, i) for i in range(n)]


def gen_qp(nvec: Sequence[int], o: int, s: int = 2, seed: int = 0, convex: bool = False,
           max_tries: int = 100, cons_mode: str = "all") -> PopProblem:
    """Random banded ``x'Ax + b'x`` on ``{1 - sum_{I_l} x_i^s >= 0, x >= 0}``.

    ``A`` is redrawn until indefinite, or until positive semidefinite when
    ``convex`` is set.
    """
    if s not in (1, 2):
        raise ValueError("s must be 1 or 2")
    blocks = banded_blocks(nvec, o)
    n = blocks[-1][-1] + 1
    rA, rb, _ = _streams(seed)
    A = _draw_matrix(rA, _block_mask(n, blocks), convex, max_tries)
    b = rb.uniform(-1.0, 1.0, size=n)
    f = _quadratic(n, A, b)
    cons = [1.0 - Polynomial(n, {((i, s),): 1.0 for i in blk}) for blk in blocks]
    cons += _nonneg_constraints(n)
    prob = PopProblem(n, f, tuple(cons), name=f"qp(s={s})", meta={"A": A, "b": b, "seed": seed})
    return prob.with_pattern(assign_constraints(prob, blocks, cons_mode))


def gen_qp_quartic(nvec: Sequence[int], o: int, seed: int = 0, max_tries: int = 100,
                   cons_mode: str = "all") -> PopProblem:
    """``sum a_i x_i^4 + x'Ax + b'x`` on ``{1 - x_i^2 >= 0, x_i >= 0}``."""
    blocks = banded_blocks(nvec, o)
    n = blocks[-1][-1] + 1
    rA, rb, ra = _streams(seed)
    A = _draw_matrix(rA, _block_mask(n, blocks), False, max_tries)
    b = rb.uniform(-1.0, 1.0, size=n)
    a = ra.uniform(-1.0, 1.0, size=n)
    f = _quadratic(n, A, b) + Polynomial(n, {((i, 4),): a[i] for i in range(n)})
    cons = _nonneg_constraints(n) + [1.0 - Polynomial(n, {((i, 2),): 1.0}) for i in range(n)]
    prob = PopProblem(n, f, tuple(cons), name="qp-quartic",
                      meta={"A": A, "b": b, "a": a, "seed": seed})
    return prob.with_pattern(assign_constraints(prob, blocks, cons_mode))


def _x(n: int, i: int) -> Polynomial:
    """Variable x_i with the 1-based index used in the function definitions."""
    return Polynomial.var(n, i - 1)


def chained_wood(n: int) -> Polynomial:
    _check_chained(n)
    f = Polynomial(n)
    for j in range(1, n - 2, 2):
        x1, x2, x3, x4 = (_x(n, j + t) for t in range(4))
        f = f + (100 * (x2 - x1 ** 2) ** 2 + (1 - x1) ** 2 + 90 * (x4 - x3 ** 2) ** 2
                 + (1 - x3) ** 2 + 10 * (x2 + x4 - 2) ** 2 + 0.1 * (x2 - x4) ** 2)
    return f


def chained_singular(n: int) -> Polynomial:
    _check_chained(n)
    f = Polynomial(n)
    for j in range(1, n - 2, 2):
        x1, x2, x3, x4 = (_x(n, j + t) for t in range(4))
        f = f + ((x1 + 10 * x2) ** 2 + 5 * (x3 - x4) ** 2 + (x2 - 2 * x3) ** 4
                 + 10 * (x1 - x4) ** 4)
    return f


def gen_rosenbrock(n: int) -> Polynomial:
    if n < 2:
        raise ValueError("Rosenbrock needs n >= 2")
    f = Polynomial(n)
    for i in range(2, n + 1):
        f = f + 100 * (_x(n, i) - _x(n, i - 1) ** 2) ** 2 + (1 - _x(n, i)) ** 2
    return f


def discrete_boundary(n: int, boundary: float = 0.0) -> Polynomial:
    """Discrete boundary value function with ``x_0 = x_{n+1} = boundary``."""
    if n < 3:
        raise ValueError("discrete boundary value function needs n >= 3")
    h = 1.0 / (n + 1)

    def xb(i):
        if i in (0, n + 1):
            return Polynomial.constant(n, boundary)
        return _x(n, i)

    f = Polynomial(n)
    for i in range(1, n + 1):
        r = 2 * xb(i) - xb(i - 1) - xb(i + 1) + 0.5 * h * h * (xb(i) + i * h + 1) ** 3
        f = f + r ** 2
    return f


def broyden_banded(n: int) -> Polynomial:
    if n < 2:
        raise ValueError("Broyden banded function needs n >= 2")
    f = Polynomial(n)
    for i in range(1, n + 1):
        xi = _x(n, i)
        r = xi * (2 + 10 * xi ** 2) + 1
        for j in range(max(1, i - 5), min(n, i + 1) + 1):
            if j != i:
                r = r - (1 + _x(n, j)) * _x(n, j)
        f = f + r ** 2
    return f


def _check_chained(n: int) -> None:
    if n < 4 or n % 4:
        raise ValueError("chained functions need n divisible by 4")


# family -> (builder, block size, overlap)
_TEST_FUNCTIONS = {
    "chained-wood": (chained_wood, 4, 2),
    "chained-singular": (chained_singular, 4, 2),
    "gen-rosenbrock": (gen_rosenbrock, 2, 1),
    "discrete-boundary": (discrete_boundary, 3, 2),
    "broyden-banded": (broyden_banded, 7, 6),
}


def function_blocks(family: str, n: int) -> List[Tuple[int, ...]]:
    _, size, o = _TEST_FUNCTIONS[family]
    if n <= size:
        return [tuple(range(n))]
    p = (n - o) // (size - o)
    if o + p * (size - o) != n:
        raise ValueError(f"n={n} does not fit blocks of {size} with overlap {o}")
    return banded_blocks([size] * p, o)


def gen_test_function(family: str, n: int, s: int = 2, cons_mode: str = "all",
                      **kwargs) -> PopProblem:
    """One of the named test functions on ``{1 - sum_{I_l} x_i^s >= 0, x >= 0}``.

    The default ``s = 2`` (a unit ball per block) is the feasible set whose
    optima match the published benchmark values; ``s = 1`` gives the simplex
    variant.
    """
    if family not in _TEST_FUNCTIONS:
        raise ValueError(f"unknown test function {family!r}")
    if s not in (1, 2):
        raise ValueError("s must be 1 or 2")
    build = _TEST_FUNCTIONS[family][0]
    f = build(n, **kwargs)
    blocks = function_blocks(family, n)
    cons = [1.0 - Polynomial(n, {((i, s),): 1.0 for i in blk}) for blk in blocks]
    cons += _nonneg_constraints(n)
    prob = PopProblem(n, f, tuple(cons), name=f"{family}(n={n})")
    return prob.with_pattern(assign_constraints(prob, blocks, cons_mode))


def repattern(problem: PopProblem, blocks: Sequence[Sequence[int]],
              cons_mode: str = "all") -> PopProblem:
    """Attach a different block structure, re-deriving ``J_l`` by containment."""
    return problem.with_pattern(assign_constraints(problem, blocks, cons_mode))


def generate(spec: BenchSpec) -> PopProblem:
    opts = dict(spec.options)
    if spec.family == "qp":
        return gen_qp(spec.nvec, spec.o, spec.s, spec.seed, convex=spec.convex, **opts)
    if spec.family == "qp-quartic":
        return gen_qp_quartic(spec.nvec, spec.o, spec.seed, **opts)
    return gen_test_function(spec.family, spec.n, spec.s, **opts)


def single_block(problem: PopProblem) -> PopProblem:
    return problem.with_pattern(SparsityPattern.trivial(problem.n, problem.m))

"""Sparse multivariate polynomials over double-precision coefficients.

An exponent is stored sparsely as a tuple of ``(variable, power)`` pairs sorted
by variable index, with no zero powers. This keeps monomials of very long
variable vectors (thousands of variables, each monomial touching a handful of
them) cheap to hash and compare.
"""
from __future__ import annotations

import math
from itertools import combinations_with_replacement
from numbers import Real
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

Exponent = Tuple[Tuple[int, int], ...]

ONE: Exponent = ()

# tolerance used when comparing two polynomials coefficient-wise
COEF_TOL = 1e-9


def expo_degree(e: Exponent) -> int:
    return sum(p for _, p in e)


def expo_add(a: Exponent, b: Exponent) -> Exponent:
    """Product of two monomials, i.e. the sum of their exponents."""
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for i, p in b:
        out[i] = out.get(i, 0) + p
    return tuple(sorted(out.items()))


def expo_vars(e: Exponent) -> Tuple[int, ...]:
    return tuple(i for i, _ in e)


def expo_from_dense(powers: Sequence[int]) -> Exponent:
    out = []
    for i, p in enumerate(powers):
        p = int(p)
        if p < 0:
            raise ValueError("negative power in exponent")
        if p:
            out.append((i, p))
    return tuple(out)


def expo_to_dense(e: Exponent, n: int) -> List[int]:
    dense = [0] * n
    for i, p in e:
        dense[i] = p
    return dense


def expo_var(i: int, power: int = 1) -> Exponent:
    return ((i, power),) if power else ()


def grlex_key(e: Exponent):
    """Sort key for graded lexicographic order (x_1 > x_2 > ... within a degree)."""
    return (expo_degree(e), tuple((i, -p) for i, p in e))


def enumerate_monomials(n: int, d: int, variables: Sequence[int] | None = None) -> List[Exponent]:
    """All exponents of total degree <= d in graded lex order.

    ``variables`` optionally names the (sorted) global indices to build the
    monomials over; by default they are ``0..n-1``. The result has exactly
    ``C(n + d, d)`` entries.
    """
    if variables is None:
        variables = range(n)
    variables = sorted(variables)
    if len(variables) != n:
        raise ValueError("variables must have length n")
    out: List[Exponent] = []
    for deg in range(d + 1):
        # combinations_with_replacement over sorted vars emits lex-descending
        # dense exponents, i.e. x1^2, x1x2, ..., x2^2, ...
        for combo in combinations_with_replacement(variables, deg):
            counts: Dict[int, int] = {}
            for v in combo:
                counts[v] = counts.get(v, 0) + 1
            out.append(tuple(sorted(counts.items())))
    return out


def num_monomials(n: int, d: int) -> int:
    return math.comb(n + d, d)


class Polynomial:
    """Polynomial in ``num_vars`` variables with exponent-keyed coefficients.

    Instances are treated as immutable values; arithmetic returns new objects.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, float] | None = None):
        if num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        self.num_vars = int(num_vars)
        clean: Dict[Exponent, float] = {}
        if terms:
            for e, c in terms.items():
                c = float(c)
                if c == 0.0:
                    continue
                for i, p in e:
                    if not 0 <= i < num_vars:
                        raise ValueError(f"variable index {i} out of range for n={num_vars}")
                    if p <= 0:
                        raise ValueError("exponent powers must be positive")
                clean[e] = c
        self.terms: Dict[Exponent, float] = clean

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, n: int, c: float) -> "Polynomial":
        return cls(n, {ONE: c})

    @classmethod
    def var(cls, n: int, i: int, coef: float = 1.0) -> "Polynomial":
        return cls(n, {((i, 1),): coef})

    @classmethod
    def from_dense_terms(cls, n: int, items: Iterable[Tuple[Sequence[int], float]]) -> "Polynomial":
        acc: Dict[Exponent, float] = {}
        for powers, c in items:
            if len(powers) != n:
                raise ValueError("exponent length does not match num_vars")
            e = expo_from_dense(powers)
            acc[e] = acc.get(e, 0.0) + float(c)
        return cls(n, acc)

    # inspection -----------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((expo_degree(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coef(self, e: Exponent) -> float:
        return self.terms.get(e, 0.0)

    def support_vars(self) -> set:
        out = set()
        for e in self.terms:
            out.update(i for i, _ in e)
        return out

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial({self.num_vars}, 0)"
        parts = []
        for e in sorted(self.terms, key=grlex_key):
            mono = "*".join(f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in e) or "1"
            parts.append(f"{self.terms[e]:+g}*{mono}")
        return f"Polynomial({self.num_vars}, {' '.join(parts)})"

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "Polynomial") -> None:
        if self.num_vars != other.num_vars:
            raise ValueError(f"num_vars mismatch: {self.num_vars} vs {other.num_vars}")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, Real):
            return Polynomial.constant(self.num_vars, float(other))
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.num_vars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.num_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Real):
            return Polynomial(self.num_vars, {e: c * other for e, c in self.terms.items()})
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out: Dict[Exponent, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = expo_add(e1, e2)
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(self.num_vars, out)

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "Polynomial":
        return self * (1.0 / float(other))

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.num_vars, 1.0)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def allclose(self, other: "Polynomial", atol: float = COEF_TOL) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coef(e) - other.coef(e)) <= atol for e in keys)

    def max_coef_diff(self, other: "Polynomial") -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.coef(e) - other.coef(e)) for e in keys), default=0.0)

    # evaluation -----------------------------------------------------------
    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape != (self.num_vars,):
            raise ValueError(f"point must have length {self.num_vars}")
        total = 0.0
        for e, c in self.terms.items():
            m = c
            for i, p in e:
                m *= x[i] ** p
            total += m
        return float(total)

    __call__ = evaluate

    def substitute(self, values: Mapping[int, float]) -> "Polynomial":
        """Fix some variables to constants, keeping num_vars unchanged."""
        out: Dict[Exponent, float] = {}
        for e, c in self.terms.items():
            keep = []
            for i, p in e:
                if i in values:
                    c *= values[i] ** p
                else:
                    keep.append((i, p))
            k = tuple(keep)
            out[k] = out.get(k, 0.0) + c
        return Polynomial(self.num_vars, out)

    # serialization --------------------------------------------------------
    def to_records(self) -> List[dict]:
        return [
            {"expo": expo_to_dense(e, self.num_vars), "coef": c}
            for e, c in sorted(self.terms.items(), key=lambda t: grlex_key(t[0]))
        ]

    @classmethod
    def from_records(cls, n: int, records: Iterable[Mapping]) -> "Polynomial":
        return cls.from_dense_terms(n, ((r["expo"], r["coef"]) for r in records))


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def pow(p: Polynomial, e: int) -> Polynomial:  # noqa: A001 - mirrors the operation name
    return p ** e


def evaluate(p: Polynomial, point: Sequence[float]) -> float:
    return p.evaluate(point)


def support_vars(p: Polynomial) -> set:
    return p.support_vars()

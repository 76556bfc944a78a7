"""Generic matrices of indeterminates, their maximal minors, and derivations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .algebra import Polynomial, PrimeField, VariableOrder


class NonReducedError(ValueError):
    """An arrangement listed the same minor twice."""


@dataclass(frozen=True)
class MatrixShape:
    m: int = 3
    n: int = 5

    def __post_init__(self):
        if not (2 <= self.m < self.n):
            raise ValueError(f"need 2 <= m < n, got {self.m}x{self.n}")
        if self.m > 3 or self.n > 6 or (self.m == 3 and self.n > 5):
            raise ValueError(f"shape {self.m}x{self.n} outside the supported range")

    @classmethod
    def parse(cls, text: str) -> "MatrixShape":
        m, n = text.lower().split("x")
        return cls(int(m), int(n))

    def __str__(self) -> str:
        return f"{self.m}x{self.n}"

    @property
    def nvars(self) -> int:
        return self.m * self.n

    @cached_property
    def order(self) -> VariableOrder:
        return VariableOrder.generic(self.m, self.n)

    def var_index(self, row: int, col: int) -> int:
        """0-based row and column."""
        return row * self.n + col

    def row_col(self, v: int) -> Tuple[int, int]:
        return divmod(v, self.n)

    @cached_property
    def column_sets(self) -> Tuple[Tuple[int, ...], ...]:
        """All m-subsets of 1..n in colex order (largest element compared first)."""
        subsets = itertools.combinations(range(1, self.n + 1), self.m)
        return tuple(sorted(subsets, key=lambda c: tuple(reversed(c))))

    @property
    def minor_count(self) -> int:
        return len(self.column_sets)


DEFAULT_SHAPE = MatrixShape(3, 5)


@dataclass(frozen=True, order=True)
class MinorLabel:
    id: int
    columns: Tuple[int, ...]


def label_colex(columns: Sequence[int], shape: MatrixShape = DEFAULT_SHAPE) -> MinorLabel:
    cols = tuple(sorted(columns))
    if len(cols) != shape.m or len(set(cols)) != shape.m:
        raise ValueError(f"expected {shape.m} distinct columns, got {tuple(columns)}")
    try:
        idx = shape.column_sets.index(cols)
    except ValueError:
        raise ValueError(f"columns {cols} out of range for shape {shape}") from None
    return MinorLabel(idx + 1, cols)


def label_from_id(i: int, shape: MatrixShape = DEFAULT_SHAPE) -> MinorLabel:
    if not 1 <= i <= shape.minor_count:
        raise ValueError(f"minor label {i} out of range 1..{shape.minor_count}")
    return MinorLabel(i, shape.column_sets[i - 1])


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _minor_cached(shape: MatrixShape, columns: Tuple[int, ...]) -> Polynomial:
    order = shape.order
    terms = {}
    for perm in itertools.permutations(range(shape.m)):
        exps = [0] * shape.nvars
        for r in range(shape.m):
            exps[shape.var_index(r, columns[perm[r]] - 1)] += 1
        terms[order.pack(exps)] = _perm_sign(perm)
    return Polynomial(order, terms)


def minor(label, shape: MatrixShape = DEFAULT_SHAPE) -> Polynomial:
    """Determinant of the chosen columns, rows in order and columns increasing."""
    if isinstance(label, int):
        label = label_from_id(label, shape)
    return _minor_cached(shape, tuple(label.columns))


@dataclass(frozen=True)
class Arrangement:
    labels: Tuple[MinorLabel, ...]
    shape: MatrixShape = DEFAULT_SHAPE

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(lb.id for lb in self.labels)

    @property
    def degree(self) -> int:
        return self.shape.m * len(self.labels)

    @property
    def column_support(self) -> Tuple[int, ...]:
        return tuple(sorted(set().union(*(lb.columns for lb in self.labels))))

    @property
    def active_variables(self) -> Tuple[int, ...]:
        cols = set(self.column_support)
        return tuple(v for v in range(self.shape.nvars) if self.shape.row_col(v)[1] + 1 in cols)

    @property
    def factors(self) -> List[Polynomial]:
        return [minor(lb, self.shape) for lb in self.labels]

    @property
    def nvars(self) -> int:
        return self.shape.nvars

    def __len__(self) -> int:
        return len(self.labels)

    def name(self) -> str:
        return "F[" + ",".join(str(i) for i in self.ids) + "]"

    def evaluate(self, point, field: Optional[PrimeField] = None):
        """Evaluate F = prod f_i in factored form."""
        val = 1
        for f in self.factors:
            v = f.evaluate(point) if field is None else f.reduce_mod(field).evaluate(point)
            val = val * v
            if field is not None:
                val %= field.p
        return val


def arrangement(labels: Iterable, shape: MatrixShape = DEFAULT_SHAPE) -> Arrangement:
    items = []
    for lb in labels:
        if isinstance(lb, MinorLabel):
            items.append(lb)
        else:
            items.append(label_from_id(int(lb), shape))
    if not items:
        raise ValueError("an arrangement needs at least one factor")
    ids = [lb.id for lb in items]
    if len(set(ids)) != len(ids):
        raise NonReducedError(f"repeated minor in {ids}: the divisor would not be reduced")
    return Arrangement(tuple(sorted(items)), shape)


def expand_defining(arr: Arrangement) -> Polynomial:
    out = Polynomial.constant(arr.shape.order, 1)
    for f in arr.factors:
        out = out * f
    return out


# --------------------------------------------------------------------------
# Derivations
# --------------------------------------------------------------------------


class Derivation:
    """theta = sum_u a_u d/dx_u with homogeneous coefficients of one degree."""

    __slots__ = ("coefficients", "order", "name")

    def __init__(self, coefficients: Sequence[Polynomial], name: str = ""):
        coefficients = tuple(coefficients)
        if not coefficients:
            raise ValueError("empty derivation")
        order = coefficients[0].order
        for a in coefficients:
            if a.order != order:
                raise ValueError("coefficients over different variable orders")
        if len(coefficients) != order.nvars:
            raise ValueError("need one coefficient per variable")
        self.coefficients = coefficients
        self.order = order
        self.name = name
        degs = {a.degree() for a in coefficients if not a.is_zero()}
        if len(degs) > 1 or not all(a.is_homogeneous() for a in coefficients):
            raise ValueError("derivation coefficients must be homogeneous of one degree")

    @classmethod
    def euler(cls, order: VariableOrder) -> "Derivation":
        return cls([Polynomial.variable(order, i) for i in range(order.nvars)], name="E")

    @classmethod
    def from_dict(cls, order: VariableOrder, coeffs: Dict[int, Polynomial], name: str = "") -> "Derivation":
        zero = Polynomial.zero(order)
        return cls([coeffs.get(i, zero) for i in range(order.nvars)], name=name)

    @classmethod
    def parse(cls, order: VariableOrder, spec: Dict[str, str], name: str = "") -> "Derivation":
        """``{"x5": "5*x5", "z1": "-z1", ...}`` keyed by the variable differentiated."""
        coeffs = {order.index(v): Polynomial.parse(order, text) for v, text in spec.items()}
        return cls.from_dict(order, coeffs, name)

    @property
    def degree(self) -> int:
        for a in self.coefficients:
            if not a.is_zero():
                return a.degree()
        return -1

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.coefficients)

    def __call__(self, g: Polynomial) -> Polynomial:
        return apply_derivation(self, g)

    def __add__(self, other: "Derivation") -> "Derivation":
        return Derivation([a + b for a, b in zip(self.coefficients, other.coefficients)])

    def __sub__(self, other: "Derivation") -> "Derivation":
        return Derivation([a - b for a, b in zip(self.coefficients, other.coefficients)])

    def scale(self, c) -> "Derivation":
        return Derivation([a.scale(c) for a in self.coefficients], name=self.name)

    def times(self, g: Polynomial) -> "Derivation":
        return Derivation([g * a for a in self.coefficients])

    def rename_variables(self, perm: Sequence[int]) -> "Derivation":
        """Image under the variable substitution x_u -> x_{perm[u]}."""
        order = self.order
        new = [Polynomial.zero(order)] * order.nvars
        for u, a in enumerate(self.coefficients):
            new[perm[u]] = permute_polynomial(a, perm)
        return Derivation(new, name=self.name)

    def __eq__(self, other) -> bool:
        return isinstance(other, Derivation) and self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __str__(self) -> str:
        parts = []
        for u, a in enumerate(self.coefficients):
            if a.is_zero():
                continue
            parts.append(f"({a})*d{self.order.names[u]}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"Derivation({self.name or str(self)})"


def permute_polynomial(a: Polynomial, perm: Sequence[int]) -> Polynomial:
    order = a.order
    terms = {}
    for k, c in a.terms.items():
        exps = order.unpack(k)
        new = [0] * order.nvars
        for i, e in enumerate(exps):
            new[perm[i]] = e
        terms[order.pack(new)] = c
    return Polynomial(order, terms, a.field)


def apply_derivation(theta: Derivation, g: Polynomial) -> Polynomial:
    out = Polynomial.zero(g.order, g.field)
    for u, a in enumerate(theta.coefficients):
        if a.is_zero():
            continue
        dg = g.diff(u)
        if dg.is_zero():
            continue
        if g.field is not None and a.field is None:
            a = a.reduce_mod(g.field)
        out = out + a * dg
    return out


# --------------------------------------------------------------------------
# Tangency
# --------------------------------------------------------------------------


@dataclass
class CofactorCertificate:
    """theta(f_i) = cofactors[i] * f_i for every factor."""

    arrangement: Arrangement
    derivation: Derivation
    cofactors: List[Polynomial]

    def verify(self) -> bool:
        for f, g in zip(self.arrangement.factors, self.cofactors):
            if apply_derivation(self.derivation, f) != g * f:
                return False
        return True


@dataclass
class TangencyFailure:
    factor_index: int
    label: MinorLabel
    residue_leading: Tuple[str, object]

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        mono, c = self.residue_leading
        return (f"not tangent to f{self.label.id} (factor {self.factor_index + 1} of the arrangement); "
                f"non-divisible residue has leading term {c}*{mono}")


def tangency(theta: Derivation, arr: Arrangement):
    """Per-factor membership theta(f_i) in (f_i); returns a certificate or a failure."""
    cofactors = []
    for i, (lb, f) in enumerate(zip(arr.labels, arr.factors)):
        h = apply_derivation(theta, f)
        q, witness = h.divide_with_witness(f)
        if q is None:
            k, c = witness
            return TangencyFailure(i, lb, (f.order.mono_str(k), c))
        cofactors.append(q)
    return CofactorCertificate(arr, theta, cofactors)


# --------------------------------------------------------------------------
# Column permutations
# --------------------------------------------------------------------------


def column_permutation_vars(shape: MatrixShape, sigma: Dict[int, int]) -> List[int]:
    """Variable permutation induced by a column permutation (1-based columns)."""
    perm = []
    for v in range(shape.nvars):
        r, c = shape.row_col(v)
        perm.append(shape.var_index(r, sigma[c + 1] - 1))
    return perm

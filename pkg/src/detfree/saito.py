"""Saito's criterion: det of (E | theta_1 | ... | theta_{N-1}) equals c * F.

Two modes.  ``pit`` evaluates the matrix at random points over random large
primes and checks that det / F is one constant (Schwartz-Zippel).  ``exact``
expands the determinant symbolically by a Laplace recursion over row subsets
and compares with the expanded product of the factors.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

from .algebra import Polynomial, PrimeField, lift_rational, random_prime
from .kernels import det_mod
from .model import Arrangement, Derivation, TangencyFailure, expand_defining, tangency


class SaitoRefusal(Exception):
    """Certification stopped at a named stage (tangency, degree-sum, determinant)."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


class ResamplingExhausted(SaitoRefusal):
    pass


class MemoryBudgetExceeded(RuntimeError):
    """Exact determinant too large; use the probabilistic mode instead."""


@dataclass
class SaitoMatrix:
    columns: List[List[Polynomial]]  # columns[0] is the coordinate vector

    @property
    def size(self) -> int:
        return len(self.columns)

    def entry(self, i: int, j: int) -> Polynomial:
        return self.columns[j][i]

    @property
    def column_degrees(self) -> List[int]:
        out = []
        for col in self.columns:
            degs = [a.degree() for a in col if not a.is_zero()]
            out.append(max(degs) if degs else -1)
        return out


def saito_matrix(derivs: Sequence[Derivation]) -> SaitoMatrix:
    if not derivs:
        raise ValueError("no derivations")
    order = derivs[0].order
    if len(derivs) != order.nvars - 1:
        raise ValueError(f"expected {order.nvars - 1} derivations, got {len(derivs)}")
    cols = [list(Derivation.euler(order).coefficients)]
    cols.extend(list(th.coefficients) for th in derivs)
    return SaitoMatrix(cols)


@dataclass
class PitConfig:
    primes: int = 2
    points: int = 4
    seed: int = 0
    prime_bits: int = 62
    max_resample: int = 64

    def __post_init__(self):
        if self.primes < 2 or self.points < 2:
            raise ValueError("need at least 2 primes and 2 points per prime")


@dataclass
class SaitoCertificate:
    arrangement: Arrangement
    derivations: List[Derivation]
    c: Fraction
    mode: str
    evidence: Dict[str, object] = field(default_factory=dict)

    @property
    def exponents(self) -> List[int]:
        return sorted(th.degree for th in self.derivations)

    @property
    def abs_c(self) -> Fraction:
        return abs(self.c)


def error_bound_log2(deg_f: int, primes: Sequence[int], points: int) -> int:
    """Integer e with prod_p (deg_f / p)^(points - 1) <= 2^e (conservative)."""
    num = deg_f ** ((points - 1) * len(primes))
    den = 1
    for p in primes:
        den *= p ** (points - 1)
    # ceil(log2(num/den)) from bit lengths: num < 2^num.bit_length(), den >= 2^(den.bit_length()-1)
    return num.bit_length() - (den.bit_length() - 1)


def _degree_precheck(arr: Arrangement, derivs: Sequence[Derivation]) -> None:
    total = sum(th.degree for th in derivs)
    if any(th.is_zero() for th in derivs):
        raise SaitoRefusal("degree-sum", "a derivation is zero")
    if total != arr.degree - 1:
        raise SaitoRefusal("degree-sum", f"sum of degrees {total} != deg F - 1 = {arr.degree - 1}")


def _eval_matrix(mat: SaitoMatrix, point: Sequence[int], field_: PrimeField) -> List[List[int]]:
    n = mat.size
    rows = [[0] * n for _ in range(n)]
    for j, col in enumerate(mat.columns):
        for i, a in enumerate(col):
            if not a.is_zero():
                rows[i][j] = _eval_mod(a, point, field_)
    return rows


def _eval_mod(a: Polynomial, point, field_: PrimeField) -> int:
    p = field_.p
    total = 0
    order = a.order
    for k, c in a.terms.items():
        v = field_.reduce(c)
        exps = k.to_bytes(order.nvars + 2, "little")
        for i in range(order.nvars):
            e = exps[i]
            if e:
                v = v * pow(point[i], e, p) % p
        total += v
    return total % p


def pit_certify(arr: Arrangement, derivs: Sequence[Derivation], cfg: PitConfig = None) -> SaitoCertificate:
    """Monte Carlo check of det(Saito matrix) = c * F; returns c as a rational."""
    cfg = cfg or PitConfig()
    _degree_precheck(arr, derivs)
    mat = saito_matrix(derivs)
    rng = random.Random(repr(("saito", cfg.seed, arr.ids)))
    nv = arr.nvars
    factors = arr.factors
    primes: List[int] = []
    residues: List[int] = []
    n_points = 0
    while len(primes) < cfg.primes:
        p = random_prime(rng, cfg.prime_bits, avoid=primes)
        field_ = PrimeField(p, check=False)
        try:
            red_factors = [f.reduce_mod(field_) for f in factors]
            ratio = None
            for _ in range(cfg.points):
                for _attempt in range(cfg.max_resample):
                    point = [rng.randrange(p) for _ in range(nv)]
                    fval = 1
                    for f in red_factors:
                        fval = fval * f.evaluate(point) % p
                    if fval:
                        break
                else:
                    raise ResamplingExhausted("determinant", "every sampled point lies on the arrangement")
                det = det_mod(_eval_matrix(mat, point, field_), p)
                r = det * pow(fval, -1, p) % p
                n_points += 1
                if ratio is None:
                    ratio = r
                elif r != ratio:
                    raise SaitoRefusal("determinant", "det / F is not constant: not a basis")
        except ZeroDivisionError:
            continue  # a coefficient denominator vanishes mod p; draw another prime
        if ratio == 0:
            raise SaitoRefusal("determinant", "Saito determinant vanishes identically")
        primes.append(p)
        residues.append(ratio)
    c = lift_rational(residues, primes)
    if c is None:
        raise SaitoRefusal("determinant", "constant did not reconstruct over the chosen primes")
    evidence = {
        "primes": [str(p) for p in primes],
        "points_per_prime": cfg.points,
        "seed": cfg.seed,
        "error_bound_log2": error_bound_log2(arr.degree, primes, cfg.points),
    }
    return SaitoCertificate(arr, list(derivs), c, "pit", evidence)


def exact_det(mat: SaitoMatrix, term_budget: int = 5_000_000) -> Polynomial:
    """Exact determinant by Laplace expansion with memoisation over row subsets.

    Columns are consumed sparsest first; ``term_budget`` caps the total number
    of stored terms across live subsets.
    """
    n = mat.size
    order = mat.columns[0][0].order
    nz = [[i for i in range(n) if not mat.columns[j][i].is_zero()] for j in range(n)]
    col_order = sorted(range(n), key=lambda j: (len(nz[j]), j))
    # sign of the column permutation
    sign = 1
    seq = list(col_order)
    for a in range(n):
        for b in range(a + 1, n):
            if seq[a] > seq[b]:
                sign = -sign
    layer: Dict[int, Dict[int, object]] = {0: {0: 1}}
    for j in col_order:
        nxt: Dict[int, Dict[int, object]] = {}
        col = [list(a.terms.items()) for a in mat.columns[j]]
        for rs, terms in layer.items():
            for i in nz[j]:
                bit = 1 << i
                if rs & bit:
                    continue
                negate = bin(rs >> (i + 1)).count("1") & 1
                acc = nxt.get(rs | bit)
                if acc is None:
                    acc = nxt[rs | bit] = {}
                get = acc.get
                for ka, ca in col[i]:
                    if negate:
                        ca = -ca
                    for kb, cb in terms.items():
                        k = ka + kb
                        acc[k] = get(k, 0) + ca * cb
        layer = {}
        total = 0
        for rs, terms in nxt.items():
            terms = {k: c for k, c in terms.items() if c}
            if terms:
                layer[rs] = terms
                total += len(terms)
        if total > term_budget:
            raise MemoryBudgetExceeded(f"{total} live terms exceed the budget; use pit mode")
    det = Polynomial(order, layer.get((1 << n) - 1, {}))
    return det if sign > 0 else -det


def exact_certify(arr: Arrangement, derivs: Sequence[Derivation], term_budget: int = 5_000_000) -> SaitoCertificate:
    _degree_precheck(arr, derivs)
    det = exact_det(saito_matrix(derivs), term_budget)
    F = expand_defining(arr)
    if det.is_zero():
        raise SaitoRefusal("determinant", "Saito determinant is zero")
    k_det, c_det = det.leading()
    k_f, c_f = F.leading()
    if k_det != k_f:
        raise SaitoRefusal("determinant", "det is not a constant multiple of F")
    c = Fraction(c_det) / Fraction(c_f)
    if det != F.scale(c):
        raise SaitoRefusal("determinant", "det is not a constant multiple of F")
    digest = hashlib.sha256(str(det).encode()).hexdigest()
    c = c.numerator if c.denominator == 1 else c
    return SaitoCertificate(arr, list(derivs), Fraction(c), "exact",
                            {"det_terms": len(det), "det_sha256": digest})


def check_tangency(arr: Arrangement, derivs: Sequence[Derivation]) -> None:
    for idx, th in enumerate(derivs):
        res = tangency(th, arr)
        if isinstance(res, TangencyFailure):
            raise SaitoRefusal("tangency", f"derivation {idx + 1} ({th.name or 'unnamed'}): {res}")


def certify_free(arr: Arrangement, derivs: Sequence[Derivation], mode: str = "pit",
                 cfg: Optional[PitConfig] = None, term_budget: int = 5_000_000) -> SaitoCertificate:
    """Tangency, degree-sum precheck, then the determinant test; raises SaitoRefusal."""
    if len(derivs) != arr.nvars - 1:
        raise SaitoRefusal("count", f"expected {arr.nvars - 1} derivations, got {len(derivs)}")
    check_tangency(arr, derivs)
    _degree_precheck(arr, derivs)
    if mode == "pit":
        return pit_certify(arr, derivs, cfg)
    if mode == "exact":
        return exact_certify(arr, derivs, term_budget)
    raise ValueError(f"unknown mode {mode!r}")

"""Graded pieces of the module of tangent derivations, by modular linear algebra.

For a degree ``d`` the conditions theta(f_i) = g_i * f_i are linear in the
coefficients of theta (on the degree-``d`` monomials) and of the cofactors
g_i (degree ``d - 1``).  The minors are homogeneous for the row and column
torus gradings of the generic matrix, so the system splits into independent
blocks, one per multidegree.  Each block is solved modulo two primes; the
reduced echelon bases are prime independent, which is what makes CRT lifting
of individual basis vectors possible.

Certification ("sandwich"): the mod-p nullity bounds the rational dimension
from above; the mod-p rank of ``S_1 * D_{d-1}`` (with ``D_{d-1}`` already
certified) together with lifted, exactly verified new generators bounds it
from below.  A degree is certified when the two agree.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import (Polynomial, count_monomials, crt, monomial_keys_of_degree, prime_stream,
                      rational_reconstruction)
from .kernels import nullspace_mod, rank_profile_mod
from .model import Arrangement, Derivation

log = logging.getLogger(__name__)

_B = 64  # radix of the multidegree code; components stay in [0, 64)


class UncertifiedError(RuntimeError):
    """A computation needed a graded dimension that is not certified."""


class PrimeInstabilityError(RuntimeError):
    """Two primes disagree on a dimension; the caller should draw fresh primes."""


# --------------------------------------------------------------------------
# System assembly
# --------------------------------------------------------------------------


@dataclass
class Block:
    code: int
    theta: List[int]  # global derivation-unknown indices u * nmon_d + pos(M)
    cof: List[Tuple[int, int]]  # (factor, pos of monomial in degree d-1)
    nrows: int
    rows: List[int]
    cols: List[int]  # cofactor columns first, then derivation columns
    vals: List[int]
    row_keys: List[Tuple[int, int]]  # (factor, packed monomial of theta(f_i))

    @property
    def ncols(self) -> int:
        return len(self.cof) + len(self.theta)


@dataclass
class TangencySystem:
    arrangement: Arrangement
    degree: int
    prime: Optional[int]
    blocks: List[Block]
    n_theta: int
    n_cofactor: int
    n_equations: int
    nnz: int

    @property
    def n_unknowns(self) -> int:
        return self.n_theta + self.n_cofactor

    def dump(self, path) -> None:
        """Write the integer system as ``row col value`` triplets.

        Columns: derivation unknown (u, M) is ``u * nmon_d + pos(M)``; cofactor
        (i, M') follows at ``n_theta + i * nmon_{d-1} + pos(M')``.  Rows: the
        coefficient of monomial ``n`` in theta(f_i) - g_i f_i is
        ``i * nmon_{d+m-1} + pos(n)``; positions index the descending grevlex
        list of monomials of that degree.
        """
        arr = self.arrangement
        order = arr.shape.order
        m = arr.shape.m
        eq_monos = monomial_keys_of_degree(order, self.degree + m - 1)
        eq_pos = {k: i for i, k in enumerate(eq_monos)}
        ncof_mon = count_monomials(order.nvars, self.degree - 1)
        with open(path, "w") as fh:
            fh.write(f"% detfree tangency system: arrangement {list(arr.ids)} degree {self.degree}\n")
            fh.write(f"% rows {self.n_equations} cols {self.n_unknowns} nnz {self.nnz}\n")
            for b in self.blocks:
                ncof = len(b.cof)
                gcols = [self.n_theta + i * ncof_mon + j for i, j in b.cof] + list(b.theta)
                grows = [i * len(eq_monos) + eq_pos[k] for i, k in b.row_keys]
                for r, c, v in zip(b.rows, b.cols, b.vals):
                    fh.write(f"{grows[r]} {gcols[c]} {v}\n")


class _Grading:
    """Multidegree codes for one shape."""

    def __init__(self, shape):
        self.shape = shape
        m, n = shape.m, shape.n
        self.weights = [_B ** r + _B ** (m + c) for r, c in (shape.row_col(v) for v in range(shape.nvars))]
        self.offset = sum(_B ** k for k in range(m + n))
        self._cache: Dict[int, Tuple[List[int], Dict[int, int], List[int]]] = {}

    def code(self, key: int) -> int:
        nv = self.shape.nvars
        exps = key.to_bytes(nv + 2, "little")
        w = self.weights
        return sum(exps[i] * w[i] for i in range(nv) if exps[i])

    def monomials(self, d: int):
        """(keys, position map, codes) for degree d."""
        hit = self._cache.get(d)
        if hit is None:
            if d < 0:
                hit = ([], {}, [])
            else:
                keys = monomial_keys_of_degree(self.shape.order, d)
                hit = (keys, {k: i for i, k in enumerate(keys)}, [self.code(k) for k in keys])
            self._cache[d] = hit
        return hit


_GRADINGS: Dict[object, _Grading] = {}


def _grading(shape) -> _Grading:
    g = _GRADINGS.get(shape)
    if g is None:
        g = _GRADINGS[shape] = _Grading(shape)
    return g


def _factor_partials(arr: Arrangement):
    """dfac[u] = [(factor index, [(key, coef), ...]), ...] for nonzero partials."""
    nv = arr.nvars
    dfac = [[] for _ in range(nv)]
    for i, f in enumerate(arr.factors):
        for u in range(nv):
            df = f.diff(u)
            if not df.is_zero():
                dfac[u].append((i, list(df.terms.items())))
    return dfac


def build_tangency_system(arr: Arrangement, d: int, p: Optional[int] = None) -> TangencySystem:
    """Linear system for D(C)_d, split into multigraded blocks."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    gr = _grading(arr.shape)
    nv = arr.nvars
    m = arr.shape.m
    keys_d, _, codes_d = gr.monomials(d)
    keys_c, _, codes_c = gr.monomials(d - 1)
    nmon = len(keys_d)
    off = gr.offset
    dfac = _factor_partials(arr)
    factor_terms = [list(f.terms.items()) for f in arr.factors]

    theta_groups: Dict[int, List[int]] = defaultdict(list)
    for u in range(nv):
        shift = off - gr.weights[u]
        base = u * nmon
        for j, c in enumerate(codes_d):
            theta_groups[c + shift].append(base + j)
    cof_groups: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for i in range(len(arr.factors)):
        for j, c in enumerate(codes_c):
            cof_groups[c + off].append((i, j))

    blocks = []
    nnz = 0
    for code in sorted(set(theta_groups) | set(cof_groups)):
        theta = theta_groups.get(code, [])
        cof = cof_groups.get(code, [])
        row_index: Dict[Tuple[int, int], int] = {}
        rows: List[int] = []
        cols: List[int] = []
        vals: List[int] = []
        for col, (i, j) in enumerate(cof):
            mk = keys_c[j]
            for sk, sc in factor_terms[i]:
                rk = (i, mk + sk)
                r = row_index.get(rk)
                if r is None:
                    r = row_index[rk] = len(row_index)
                rows.append(r)
                cols.append(col)
                vals.append(-sc)
        ncof = len(cof)
        for local, g in enumerate(theta):
            u, j = divmod(g, nmon)
            mk = keys_d[j]
            col = ncof + local
            for i, terms in dfac[u]:
                for tk, tc in terms:
                    rk = (i, mk + tk)
                    r = row_index.get(rk)
                    if r is None:
                        r = row_index[rk] = len(row_index)
                    rows.append(r)
                    cols.append(col)
                    vals.append(tc)
        nnz += len(vals)
        blocks.append(Block(code, theta, cof, len(row_index), rows, cols, vals, list(row_index)))

    n_theta = nv * nmon
    n_cof = len(arr.factors) * len(keys_c)
    n_eq = len(arr.factors) * count_monomials(nv, d + m - 1)
    max_partial_terms = max((len(t) for row in dfac for _, t in row), default=0)
    max_factor_terms = max(len(t) for t in factor_terms)
    bound = n_theta * max_partial_terms * len(arr.factors) + n_cof * max_factor_terms
    assert nnz <= bound, "tangency system denser than its structural bound"
    return TangencySystem(arr, d, p, blocks, n_theta, n_cof, n_eq, nnz)


# --------------------------------------------------------------------------
# Solving
# --------------------------------------------------------------------------


@dataclass
class BlockSolution:
    block: Block
    free: List[int]  # local columns (all derivation columns)
    basis: List[List[int]]  # dense mod-p vectors over the block's columns


@dataclass
class Nullspace:
    system: TangencySystem
    prime: int
    solutions: Dict[int, BlockSolution]

    @property
    def dimension(self) -> int:
        return sum(len(s.free) for s in self.solutions.values())

    def vectors(self):
        """Derivation parts of the canonical basis as {global index: value} dicts."""
        for code, sol in sorted(self.solutions.items()):
            ncof = len(sol.block.cof)
            theta = sol.block.theta
            for vec in sol.basis:
                yield code, {theta[c - ncof]: v for c, v in enumerate(vec[ncof:], start=ncof) if v}


def solve_block(block: Block, p: int) -> BlockSolution:
    free, basis = nullspace_mod(block.nrows, block.ncols, block.rows, block.cols, block.vals, p)
    ncof = len(block.cof)
    if free and free[0] < ncof:
        raise AssertionError("cofactor unknown came out free; factors are not nonzerodivisors?")
    return BlockSolution(block, list(free), [list(v) for v in basis])


def nullspace(sys: TangencySystem, p: Optional[int] = None) -> Nullspace:
    """Canonical nullspace of the whole system, block by block."""
    p = p if p is not None else sys.prime
    if p is None:
        raise ValueError("a prime is required")
    sols = {}
    for b in sys.blocks:
        if not b.theta:
            continue
        sols[b.code] = solve_block(b, p)
    return Nullspace(sys, p, sols)


# --------------------------------------------------------------------------
# Lifting
# --------------------------------------------------------------------------


def verify_block_vector(block: Block, vec: Sequence) -> bool:
    """Exact check A * vec == 0 over the rationals."""
    den = 1
    for v in vec:
        if isinstance(v, Fraction):
            den = lcm(den, v.denominator)
    ivec = [int(v * den) for v in vec]
    acc = [0] * block.nrows
    for r, c, a in zip(block.rows, block.cols, block.vals):
        x = ivec[c]
        if x:
            acc[r] += a * x
    return not any(acc)


@dataclass
class LiftReport:
    primes: List[int]
    bound: int
    success: List[bool]
    verified: List[bool]

    @property
    def ok(self) -> bool:
        return all(self.success) and all(self.verified)


def lift_vector(residue_vectors: Sequence[Sequence[int]], primes: Sequence[int]):
    """CRT + rational reconstruction per coordinate; None if any coordinate fails."""
    out = []
    for coords in zip(*residue_vectors):
        if not any(coords):
            out.append(0)
            continue
        x, mod = crt(coords, primes)
        q = rational_reconstruction(x, mod)
        if q is None:
            return None
        out.append(q.numerator if q.denominator == 1 else q)
    return out


# --------------------------------------------------------------------------
# Graded analysis
# --------------------------------------------------------------------------


@dataclass
class DegreeReport:
    degree: int
    dim_upper: int
    dim_lower: int
    dims_by_prime: List[int]
    euler_part: int
    new_generators: int  # minimal generators of AR in this degree
    unstable: bool = False

    @property
    def certified(self) -> bool:
        return self.dim_lower == self.dim_upper and not self.unstable

    @property
    def dim_d(self) -> int:
        return self.dim_upper

    @property
    def dim_ar(self) -> int:
        return self.dim_upper - self.euler_part

    def as_dict(self) -> dict:
        return {"degree": self.degree, "dim_D_upper": self.dim_upper, "dim_D_lower": self.dim_lower,
                "dim_AR": self.dim_ar, "certified": self.certified, "new_generators": self.new_generators,
                "dims_by_prime": list(self.dims_by_prime), "unstable": self.unstable}


@dataclass
class DimReport:
    arrangement: Arrangement
    primes: List[int]
    degrees: List[DegreeReport] = field(default_factory=list)

    def dim_ar(self, d: int) -> int:
        return self.degrees[d].dim_ar

    def certified_through(self) -> int:
        """Largest d such that degrees 0..d are all certified (-1 if none)."""
        top = -1
        for rep in self.degrees:
            if not rep.certified:
                break
            top = rep.degree
        return top

    def ar_dims(self) -> List[int]:
        return [r.dim_ar for r in self.degrees]

    def as_dict(self) -> dict:
        return {"arrangement": list(self.arrangement.ids), "primes": [str(p) for p in self.primes],
                "degrees": [r.as_dict() for r in self.degrees]}


@dataclass
class GeneratorSet:
    """Minimal generators of AR (modulo the Euler derivation), by degree."""

    counts: Dict[int, int]
    generators: Dict[int, List[Derivation]]
    field: str = "rational-lifted"

    def exponents(self) -> List[int]:
        out = []
        for d in sorted(self.counts):
            out.extend([d] * self.counts[d])
        return out

    def derivations(self) -> List[Derivation]:
        out = []
        for d in sorted(self.generators):
            out.extend(self.generators[d])
        return out


class GradedAnalysis:
    """Degree-by-degree dimensions and generators for one arrangement.

    Degrees are computed lazily and cached; ``extend(d)`` computes through d.
    """

    def __init__(self, arr: Arrangement, primes: Sequence[int], extra_primes: Sequence[int] = ()):
        if len(primes) < 2:
            raise ValueError("need at least two primes")
        self.arr = arr
        self.primes = list(primes)
        self.extra_primes = list(extra_primes)
        self.report = DimReport(arr, list(primes))
        self.gens = GeneratorSet({}, {})
        self._systems: Dict[int, TangencySystem] = {}
        self._bases: Dict[int, Nullspace] = {}  # first prime only
        self._nv = arr.nvars
        self._lift_failures: List[Tuple[int, int]] = []

    # -- helpers ------------------------------------------------------------

    def _euler_vector(self) -> Dict[int, int]:
        keys_1, pos_1, _ = _grading(self.arr.shape).monomials(1)
        nmon = len(keys_1)
        order = self.arr.shape.order
        return {u * nmon + pos_1[order.var(u)]: 1 for u in range(self._nv)}

    def _span_vectors(self, d: int) -> Dict[int, List[Dict[int, int]]]:
        """S_1 * D_{d-1} (first prime), plus E in degree 1, grouped by block code."""
        gr = _grading(self.arr.shape)
        keys_prev, _, _ = gr.monomials(d - 1)
        keys_d, pos_d, codes_d = gr.monomials(d)
        nprev, nmon = len(keys_prev), len(keys_d)
        order = self.arr.shape.order
        out: Dict[int, List[Dict[int, int]]] = defaultdict(list)
        if d == 1:
            ev = self._euler_vector()
            out[gr.offset].append(ev)
        if d == 0:
            return out
        prev = self._bases[d - 1]
        var_keys = [order.var(w) for w in range(self._nv)]
        for code, vec in prev.vectors():
            for w in range(self._nv):
                xw = var_keys[w]
                shifted = {}
                for g, v in vec.items():
                    u, j = divmod(g, nprev)
                    shifted[u * nmon + pos_d[keys_prev[j] + xw]] = v
                out[code + gr.weights[w]].append(shifted)
        return out

    def _solve_all(self, sys: TangencySystem) -> List[Nullspace]:
        return [nullspace(sys, p) for p in self.primes]

    # -- main entry ---------------------------------------------------------

    def extend(self, d_max: int) -> DimReport:
        while len(self.report.degrees) <= d_max:
            self._compute_degree(len(self.report.degrees))
        return self.report

    def system(self, d: int) -> TangencySystem:
        sys = self._systems.get(d)
        if sys is None:
            sys = build_tangency_system(self.arr, d)
            self._systems[d] = sys
        return sys

    def _compute_degree(self, d: int) -> None:
        sys = self.system(d)
        spaces = self._solve_all(sys)
        dims = [ns.dimension for ns in spaces]
        unstable = False
        for ns in spaces[1:]:
            for code, sol in spaces[0].solutions.items():
                if ns.solutions[code].free != sol.free:
                    unstable = True
        if unstable:
            log.warning("primes disagree on %s in degree %d", self.arr.name(), d)
        base = spaces[0]
        self._bases[d] = base
        p = base.prime
        nv = self._nv
        euler = count_monomials(nv, d - 1)

        span = self._span_vectors(d)
        prev_ok = d == 0 or self.report.degrees[d - 1].certified
        lower = 0
        new_gens: List[Derivation] = []
        n_new = 0
        for code, sol in sorted(base.solutions.items()):
            if not sol.free:
                continue
            ncof = len(sol.block.cof)
            theta = sol.block.theta
            local = {g: i for i, g in enumerate(theta)}
            w_rows = []
            for vec in span.get(code, ()):
                row = [0] * len(theta)
                for g, v in vec.items():
                    row[local[g]] = v
                w_rows.append(row)
            cand_rows = [vec[ncof:] for vec in sol.basis]
            keep = rank_profile_mod(w_rows + cand_rows, p)
            n_w = sum(1 for k in keep if k < len(w_rows))
            new_idx = [k - len(w_rows) for k in keep if k >= len(w_rows)]
            n_new += len(new_idx)
            verified = 0
            for k in new_idx:
                th = self._lift_generator(d, spaces, code, k)
                if th is not None:
                    verified += 1
                    new_gens.append(th)
            lower += (n_w if prev_ok else 0) + verified
        # in degree 1 the Euler derivation sits in the span rows, so n_new counts AR generators only
        upper = dims[0]
        rep = DegreeReport(d, upper, lower, dims, euler, n_new, unstable)
        self.report.degrees.append(rep)
        self.gens.counts[d] = rep.new_generators
        self.gens.generators[d] = new_gens

    def _lift_generator(self, d: int, spaces: List[Nullspace], code: int, k: int) -> Optional[Derivation]:
        """Lift the k-th canonical basis vector of a block and verify it exactly."""
        sols = [ns.solutions[code] for ns in spaces]
        free = sols[0].free
        if any(s.free != free for s in sols):
            return None
        residues = [s.basis[k] for s in sols]
        primes = [ns.prime for ns in spaces]
        block = sols[0].block
        vec = lift_vector(residues, primes)
        extra = list(self.extra_primes)
        while (vec is None or not verify_block_vector(block, vec)) and extra:
            q = extra.pop(0)
            s = solve_block(block, q)
            if s.free != free:
                continue
            residues.append(s.basis[k])
            primes.append(q)
            vec = lift_vector(residues, primes)
        if vec is None or not verify_block_vector(block, vec):
            self._lift_failures.append((d, code))
            return None
        return self._to_derivation(d, block, vec)

    def _to_derivation(self, d: int, block: Block, vec: Sequence) -> Derivation:
        """Derivation from a block vector, projected to theta(F) = 0 and normalized.

        With g = sum of the cofactors, theta(F) = g * F, so theta - g/deg F * E
        kills F.  Subtracting a multiple of E leaves Saito determinants alone.
        """
        gr = _grading(self.arr.shape)
        keys_d, _, _ = gr.monomials(d)
        keys_c, _, _ = gr.monomials(d - 1)
        nmon = len(keys_d)
        order = self.arr.shape.order
        ncof = len(block.cof)
        coeffs: Dict[int, Dict[int, Fraction]] = defaultdict(dict)
        for g, v in zip(block.theta, vec[ncof:]):
            if v:
                u, j = divmod(g, nmon)
                coeffs[u][keys_d[j]] = Fraction(v)
        cof_sum: Dict[int, Fraction] = defaultdict(Fraction)
        for (_, j), v in zip(block.cof, vec[:ncof]):
            if v:
                cof_sum[keys_c[j]] += Fraction(v)
        deg_f = self.arr.degree
        for k, c in cof_sum.items():
            if not c:
                continue
            for u in range(self._nv):
                key = k + order.var(u)
                val = coeffs[u].get(key, 0) - c / deg_f
                if val:
                    coeffs[u][key] = val
                else:
                    coeffs[u].pop(key, None)
        first = None
        for g in block.theta:
            u, j = divmod(g, nmon)
            c = coeffs.get(u, {}).get(keys_d[j])
            if c:
                first = c
                break
        polys = {u: Polynomial(order, {k: c / first for k, c in terms.items()}) for u, terms in coeffs.items()
                 if terms}
        return Derivation.from_dict(order, polys, name=f"g{d}")

    # -- derived quantities -------------------------------------------------

    def minimal_generators(self, d_max: int) -> GeneratorSet:
        self.extend(d_max)
        for rep in self.report.degrees[: d_max + 1]:
            if not rep.certified:
                raise UncertifiedError(f"degree {rep.degree} is not certified")
        return GeneratorSet({d: self.gens.counts[d] for d in range(d_max + 1)},
                            {d: self.gens.generators[d] for d in range(d_max + 1)})


def default_primes(seed: int = 0, count: int = 2, bits: int = 62) -> List[int]:
    return prime_stream(("detfree", seed), count, bits)


def graded_dimensions(arr: Arrangement, d_max: int = 4, primes: Optional[Sequence[int]] = None,
                      seed: int = 0, max_degree_guard: int = 6) -> DimReport:
    if d_max > max_degree_guard:
        raise ValueError(f"d_max={d_max} exceeds the budget guard {max_degree_guard}")
    primes = list(primes) if primes else default_primes(seed, 2)
    return GradedAnalysis(arr, primes).extend(d_max)


def minimal_generators(arr: Arrangement, d_max: int = 4, primes: Optional[Sequence[int]] = None,
                       seed: int = 0) -> GeneratorSet:
    primes = list(primes) if primes else default_primes(seed, 2)
    return GradedAnalysis(arr, primes).minimal_generators(d_max)


def lift_generators(arr: Arrangement, d: int, primes: Optional[Sequence[int]] = None,
                    seed: int = 0) -> Tuple[LiftReport, List[Derivation]]:
    """Lift the new minimal generators of degree d and verify each one exactly."""
    primes = list(primes) if primes else default_primes(seed, 2)
    ga = GradedAnalysis(arr, primes, extra_primes=default_primes(seed + 1, 2))
    ga.extend(d)
    gens = ga.gens.generators[d]
    failed = sum(1 for f in ga._lift_failures if f[0] == d)
    modulus = 1
    for p in primes:
        modulus *= p
    flags = [True] * len(gens) + [False] * failed
    return LiftReport(primes, isqrt(modulus // 2), flags, flags), gens

import os
import random
from fractions import Fraction

import pytest

from detfree import _kernels_py, kernels
from detfree.algebra import PrimeField, count_monomials
from detfree.bases import load_basis
from detfree.model import Derivation, arrangement, tangency
from detfree.syzygy import (GradedAnalysis, UncertifiedError, build_tangency_system, default_primes,
                            graded_dimensions, lift_generators, lift_vector, nullspace, solve_block)

PRIMES = default_primes(0, 2)
F5 = arrangement([1, 2, 3, 4, 5])
Q7 = arrangement([1, 2, 3, 4, 5, 7])
C1 = arrangement([1, 2, 3, 4])


def span_rank(derivs, p=PRIMES[0]):
    F = PrimeField(p, check=False)
    keys = {}
    rows = []
    for th in derivs:
        row = {}
        for u, a in enumerate(th.coefficients):
            for k, c in a.terms.items():
                row[keys.setdefault((u, k), len(keys))] = F.reduce(Fraction(c))
        rows.append(row)
    dense = [[r.get(i, 0) for i in range(len(keys))] for r in rows]
    return len(kernels.rank_profile_mod(dense, p))


class TestSystemCounts:
    def test_f5_degree_one(self):
        sys = build_tangency_system(F5, 1)
        assert sys.n_unknowns == 230 and sys.n_theta == 225 and sys.n_cofactor == 5
        assert sys.n_equations == 3400

    def test_degree_zero(self):
        sys = build_tangency_system(F5, 0)
        assert sys.n_unknowns == 15 and sys.n_cofactor == 0
        assert all(not b.cof for b in sys.blocks)

    @pytest.mark.slow
    def test_six_factors_degree_four(self):
        sys = build_tangency_system(arrangement([1, 2, 3, 4, 5, 6]), 4)
        assert sys.n_unknowns == 49980 and sys.n_equations == 232560
        assert sys.nnz <= sys.n_theta * 2 * 6 + sys.n_cofactor * 6

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            build_tangency_system(F5, -1)


class TestNullspace:
    def test_f5_degree_one(self):
        assert nullspace(build_tangency_system(F5, 1), PRIMES[0]).dimension == 15

    def test_empty_block_full_dimension(self):
        free, basis = kernels.nullspace_mod(0, 4, [], [], [], PRIMES[0])
        assert list(free) == [0, 1, 2, 3] and len(basis) == 4

    def test_requires_prime(self):
        with pytest.raises(ValueError):
            nullspace(build_tangency_system(F5, 0))

    def test_repeat_identical(self):
        sys = build_tangency_system(Q7, 2)
        a = nullspace(sys, PRIMES[0])
        b = nullspace(sys, PRIMES[0])
        assert [(c, s.free, s.basis) for c, s in sorted(a.solutions.items())] == \
               [(c, s.free, s.basis) for c, s in sorted(b.solutions.items())]

    def test_backends_agree_on_blocks(self):
        sys = build_tangency_system(arrangement([1, 2, 6, 9, 10]), 2)
        for b in sys.blocks[:400]:
            ref = _kernels_py.nullspace_mod(b.nrows, b.ncols, b.rows, b.cols, b.vals, PRIMES[1])
            got = kernels.nullspace_mod(b.nrows, b.ncols, b.rows, b.cols, b.vals, PRIMES[1])
            assert list(ref[0]) == list(got[0]) and [list(v) for v in ref[1]] == [list(v) for v in got[1]]


class TestDimensions:
    def test_small_arrangement_dims(self):
        assert graded_dimensions(arrangement([6, 7, 8, 9, 10]), 1).dim_ar(1) == 16
        assert graded_dimensions(arrangement([1, 2, 3, 5, 10]), 1).dim_ar(1) == 13
        assert graded_dimensions(arrangement([1, 2, 3, 4, 5, 10]), 1).dim_ar(1) == 12

    def test_h10_through_three(self):
        rep = graded_dimensions(arrangement([1, 2, 3, 4, 5, 10]), 3)
        assert rep.ar_dims() == [0, 12, 180, 1440] and rep.certified_through() == 3

    def test_f5_certified_and_primes_agree(self):
        rep = graded_dimensions(F5, 3)
        assert rep.certified_through() == 3
        for r in rep.degrees:
            assert r.dim_lower == r.dim_upper and len(set(r.dims_by_prime)) == 1
            if r.degree >= 1:
                assert r.dim_ar == r.dim_d - count_monomials(15, r.degree - 1)

    def test_budget_guard(self):
        with pytest.raises(ValueError):
            graded_dimensions(F5, 7)

    def test_z0_bound(self):
        for ids in ([1], [1, 2, 3], [1, 2, 3, 4], [1, 5]):
            arr = arrangement(ids)
            unused = 5 - len(arr.column_support)
            assert graded_dimensions(arr, 0).dim_ar(0) >= 3 * unused


class TestGenerators:
    def test_f5(self):
        ga = GradedAnalysis(F5, PRIMES)
        gens = ga.minimal_generators(4)
        assert [gens.counts[d] for d in range(5)] == [0, 14, 0, 0, 0]

    def test_q7(self):
        gens = GradedAnalysis(Q7, PRIMES).minimal_generators(4)
        assert gens.counts[1] == 13 and gens.counts[4] == 1
        assert gens.exponents() == [1] * 13 + [4]

    def test_c1(self):
        gens = GradedAnalysis(C1, PRIMES).minimal_generators(2)
        assert gens.counts[0] == 3 and gens.counts[1] == 11

    def test_uncertified_refusal(self):
        ga = GradedAnalysis(F5, PRIMES)
        ga.extend(1)
        ga.report.degrees[1].dim_lower -= 1
        with pytest.raises(UncertifiedError):
            ga.minimal_generators(1)


class TestLifting:
    def test_f5_span_matches_printed_basis(self):
        rep, gens = lift_generators(F5, 1)
        assert rep.ok and len(gens) == 14
        printed = load_basis("ThmA(5)")
        assert span_rank(gens) == span_rank(printed) == span_rank(gens + printed) == 14

    def test_q7_degree_four(self):
        rep, gens = lift_generators(Q7, 4)
        assert rep.ok and len(gens) == 1
        assert gens[0].degree == 4 and tangency(gens[0], Q7)

    def test_single_small_prime_fails(self):
        # 12345/6789 is not recoverable from one 20-bit prime
        p = 1000003
        r = 12345 * pow(6789, -1, p) % p
        vec = lift_vector([[r, 1]], [p])
        assert vec is None or vec[0] != Fraction(12345, 6789)
        primes = default_primes(1, 2)
        res = [[12345 * pow(6789, -1, q) % q, 1] for q in primes]
        assert lift_vector(res, primes) == [Fraction(12345, 6789), 1]

    def test_lifted_generators_are_normalised(self):
        _, gens = lift_generators(C1, 1)
        for th in gens:
            first = next(c for a in th.coefficients for c in a.terms.values())
            assert first == 1 and tangency(th, C1)


def test_dump_format(tmp_path):
    sys = build_tangency_system(arrangement([1, 2]), 1)
    path = tmp_path / "sys.txt"
    sys.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("% detfree tangency system")
    assert lines[1] == f"% rows {sys.n_equations} cols {sys.n_unknowns} nnz {sys.nnz}"
    body = [tuple(map(int, ln.split())) for ln in lines[2:]]
    assert len(body) == sys.nnz
    assert all(0 <= r < sys.n_equations and 0 <= c < sys.n_unknowns and v for r, c, v in body)
    assert len(set((r, c) for r, c, _ in body)) == len(body)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    if os.environ.get("DETFREE_KERNELS") == "python":
        assert kernels.BACKEND == "python"


def test_determinism_many_blocks():
    # canonical block bases are identical across backends and repeated runs
    rng = random.Random(7)
    count = 0
    for ids in ([1, 2, 3, 4, 5], [6, 7, 8, 9, 10], [1, 4, 7, 10]):
        sys = build_tangency_system(arrangement(ids), 2)
        for b in sys.blocks:
            if not b.theta:
                continue
            p = rng.choice(PRIMES)
            ref = _kernels_py.nullspace_mod(b.nrows, b.ncols, b.rows, b.cols, b.vals, p)
            s = solve_block(b, p)
            assert list(ref[0]) == s.free and [list(v) for v in ref[1]] == s.basis
            count += 1
    assert count > 1000


def test_lifted_generators_kill_f():
    _, gens = lift_generators(Q7, 1)
    for th in gens:
        cert = tangency(th, Q7)
        total = cert.cofactors[0]
        for g in cert.cofactors[1:]:
            total = total + g
        assert total.is_zero()

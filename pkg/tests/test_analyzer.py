import random

import pytest

from detfree.analyzer import (AnalyzeConfig, ExponentMultiset, Free, NearlyFree, Resolution, VerdictKind, analyze,
                              brute_force_exponents, consistent_exponents, degree_count_test, essential_defect,
                              experimental_scan, free_prediction, nearly_free_consistent, parse_exponents,
                              regularity, regularity_from_exponents, shape_consistency)
from detfree.io import verify_certificate, certificate_to_dict
from detfree.model import arrangement
from detfree.survey import FINGERPRINT_58
from detfree.syzygy import GradedAnalysis, default_primes

F5 = arrangement([1, 2, 3, 4, 5])
H10 = arrangement([1, 2, 3, 4, 5, 10])


@pytest.fixture(scope="module")
def f5_dims():
    return GradedAnalysis(F5, default_primes()).extend(4)


@pytest.fixture(scope="module")
def fingerprint_dims():
    # {1,2,3,7} has the (0,15,225,1800,10199) signature
    return GradedAnalysis(arrangement([1, 2, 3, 7]), default_primes()).extend(4)


class TestDefect:
    @pytest.mark.parametrize("ids,z0", [([1, 2, 3], 3), (list(range(1, 11)), 0), ([1, 2, 3, 4], 3)])
    def test_examples(self, ids, z0):
        assert essential_defect(arrangement(ids)) == z0


class TestDegreeCount:
    def test_triple(self):
        assert degree_count_test(arrangement([1, 2, 3]), 3) is not None

    def test_wide_quadruple(self):
        arr = arrangement([1, 2, 3, 5])
        assert essential_defect(arr) == 0 and degree_count_test(arr, 0) is not None

    def test_boundary(self):
        assert degree_count_test(F5, 0) is None

    def test_oracle_small_parameters(self):
        # NotFreeByDegreeCount exactly when no multiset with z0 zeros and positive rest sums to deg F - 1
        from detfree.analyzer import _partitions
        for k in range(1, 6):
            for z0 in range(0, 8):
                arr = arrangement(list(range(1, k + 1)))
                pos = 14 - z0
                exists = any(True for _ in _partitions(arr.degree - 1, pos, 1)) if pos else arr.degree - 1 == 0
                assert (degree_count_test(arr, z0) is None) == exists


class TestExponentSearch:
    def test_matches_brute_force(self):
        rng = random.Random(3)
        for _ in range(40):
            nv = rng.randint(3, 5)
            deg_f = rng.randint(2, 9)
            # dims of a random free module, sometimes perturbed
            parts = sorted(rng.randint(0, 3) for _ in range(nv - 1))
            dims = [free_prediction(parts, d, nv) for d in range(rng.randint(1, 4))]
            if rng.random() < 0.3:
                dims[-1] += rng.choice([-1, 1])
            got = sorted(e.values for e in consistent_exponents(dims, nv, deg_f))
            ref = sorted(e.values for e in brute_force_exponents(dims, nv, deg_f))
            assert got == ref

    def test_parse(self):
        assert parse_exponents("1^9,4^5") == (1,) * 9 + (4,) * 5
        assert ExponentMultiset((4, 1, 1)).compact() == "(1^2,4)"


class TestRegularity:
    @pytest.mark.parametrize("exps,deg,reg", [((1,) * 14, 15, 13), ((1,) * 13 + (4,), 18, 19),
                                              ((0,) * 3 + (1,) * 11, 12, 10)])
    def test_formula(self, exps, deg, reg):
        assert regularity_from_exponents(ExponentMultiset(exps, certified=True), deg) == reg

    def test_refuses_uncertified(self):
        with pytest.raises(ValueError):
            regularity_from_exponents(ExponentMultiset((1,) * 14), 15)
        with pytest.raises(ValueError):
            regularity_from_exponents((1,) * 14, 15)


class TestShapes:
    def test_f5_free(self, f5_dims):
        assert shape_consistency(f5_dims, Free((1,) * 14), through=4)

    def test_fingerprint_not_free(self, fingerprint_dims):
        assert fingerprint_dims.ar_dims() == [0, 15, 225, 1800, 10199]
        assert shape_consistency(fingerprint_dims, FINGERPRINT_58)
        assert consistent_exponents(fingerprint_dims.ar_dims(), 15, 12) == []
        for parts in [(1,) * 11 + (0,) * 3, (0,) * 3 + (1,) * 10 + (2,)]:
            assert not shape_consistency(fingerprint_dims, Free(parts))

    def test_fingerprint_not_nearly_free(self, fingerprint_dims):
        assert nearly_free_consistent(fingerprint_dims.ar_dims(), 15) == []

    def test_nearly_free_detects_its_own_shape(self):
        hyp = NearlyFree((1,) * 13 + (2,), 2)
        dims = [hyp.predict(d, 15) for d in range(5)]
        assert hyp in nearly_free_consistent(dims, 15)

    def test_requires_certified(self, f5_dims):
        dims = GradedAnalysis(F5, default_primes()).extend(1)
        with pytest.raises(ValueError):
            shape_consistency(dims, Free((1,) * 14), through=3)

    def test_resolution_prediction(self):
        assert [FINGERPRINT_58.predict(d, 15) for d in range(5)] == [0, 15, 225, 1800, 10199]
        h10 = Resolution(18, ((5, 21), (12, 18)), ())
        assert h10.predict(1, 15) == 12


class TestAnalyze:
    def test_f5(self):
        v = analyze(F5)
        assert v.kind is VerdictKind.CERTIFIED_FREE and v.exponents.values == (1,) * 14
        assert v.certificate.abs_c == 9375 and regularity(v).value == 13
        assert verify_certificate(certificate_to_dict(v.certificate), seed=1)

    def test_h10(self):
        v = analyze(H10)
        assert v.kind is VerdictKind.NOT_FREE_GRADED
        assert v.dims.dim_ar(1) == 12
        assert v.dims.certified_through() >= v.d_explored

    def test_seven_factors(self):
        v = analyze(arrangement([1, 2, 3, 4, 7, 8, 9]))
        assert v.is_free and v.exponents.values == (1,) * 12 + (4, 4)

    def test_without_printed_basis(self):
        v = analyze(F5, AnalyzeConfig(use_registered_basis=False))
        assert v.is_free and v.basis_source != "ThmA(5)"
        assert verify_certificate(certificate_to_dict(v.certificate), seed=2)

    def test_undetermined_when_budget_too_small(self):
        v = analyze(arrangement([1, 2, 3, 4, 5, 7]), AnalyzeConfig(d_max=2, use_registered_basis=False))
        assert v.kind is VerdictKind.UNDETERMINED and v.d_explored == 2

    def test_degree_count_verdict(self):
        v = analyze(arrangement([1, 2, 3]))
        assert v.kind is VerdictKind.NOT_FREE_DEGREE_COUNT and v.z0 == 3

    def test_regularity_refused_for_not_free(self):
        with pytest.raises(ValueError):
            regularity(analyze(arrangement([1, 2, 3])))

    def test_free_invariants(self):
        for ids in ([1, 2, 3, 4], [1, 5, 6, 7]):
            v = analyze(arrangement(ids))
            assert v.is_free
            e = v.exponents
            assert len(e) == 14 and e.zeros == v.z0 and sum(e) == v.deg_f - 1

    def test_monotone_in_d_max(self):
        cases = [F5, H10, arrangement([6, 7, 8, 9, 10]), arrangement([1, 2, 3]), arrangement([1, 2, 3, 4]),
                 arrangement([1, 2, 3, 4, 5, 7])]
        for arr in cases:
            kinds = [analyze(arr, AnalyzeConfig(d_max=d, use_registered_basis=False)).kind for d in range(1, 5)]
            decided = [k for k in kinds if k is not VerdictKind.UNDETERMINED]
            assert len(set(k is VerdictKind.CERTIFIED_FREE for k in decided)) <= 1
            first = next((i for i, k in enumerate(kinds) if k is not VerdictKind.UNDETERMINED), len(kinds))
            assert all(k is not VerdictKind.UNDETERMINED for k in kinds[first:])


def test_experimental_scan_reports_without_verdict():
    ev = experimental_scan(arrangement(range(1, 11)), d_max=1, conjecture=parse_exponents("1^9,4^5"))
    doc = ev.as_dict()
    assert doc["verdict"] is None and doc["consistent"] is False
    assert doc["witness"] == {"degree": 1, "predicted": 9, "certified": 12}

"""Acceptance criteria 1-10, one summary line each (see the terminal summary)."""

import json
import random
import time
from itertools import islice
from math import comb

import pytest

from detfree import _kernels_py, kernels
from detfree.algebra import PrimeField, VariableOrder, count_monomials, monomials_of_degree
from detfree.analyzer import AnalyzeConfig, VerdictKind, analyze, nearly_free_consistent, regularity
from detfree.bases import load_basis, verify_basis
from detfree.cli import main
from detfree.io import certificate_to_dict, verify_certificate
from detfree.model import Derivation, MatrixShape, apply_derivation, arrangement, tangency
from detfree.saito import certify_free, saito_matrix
from detfree.survey import (FINGERPRINT_58, FREE_4_TUPLES, SurveyConfig, column_orbits, enumerate_arrangements,
                            run_survey)
from detfree.syzygy import (GradedAnalysis, default_primes, lift_vector, nullspace, solve_block,
                            verify_block_vector)

from conftest import ORDER, random_poly

CASES = 10_000
PRIMES = default_primes(0, 2)


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def all_minors(shape):
    return arrangement(range(1, shape.minor_count + 1), shape)


# ---------------------------------------------------------------- 1. f1 f2 f3 f4 fj


@pytest.mark.parametrize("j", range(5, 11))
def test_criterion_1_four_plus_one(accept, j):
    v, dt = timed(analyze, arrangement([1, 2, 3, 4, j]))
    ok = v.is_free and v.exponents.values == (1,) * 14 and dt <= 60
    detail = f"j={j} {v.kind.value} {v.exponents.compact() if v.exponents else '-'} in {dt:.1f}s"
    if j == 5:
        eb = v.certificate.evidence["error_bound_log2"]
        exact = certify_free(v.arrangement, v.certificate.derivations, mode="exact")
        ok = ok and v.certificate.abs_c == 9375 and eb < -100 and exact.c == v.certificate.c
        detail += f", |c|={v.certificate.abs_c}, error<=2^{eb}, exact c={exact.c}"
    accept.record(1, f"ThmA j={j}", ok, detail)
    assert ok, detail


def test_criterion_1_discovered_basis_agrees(accept):
    v = analyze(arrangement([1, 2, 3, 4, 5]), AnalyzeConfig(use_registered_basis=False))
    ok = v.is_free and v.exponents.values == (1,) * 14
    accept.record(1, "ThmA j=5 from graded search", ok, f"{v.kind.value}, basis {v.basis_source}")
    assert ok


# ---------------------------------------------------------------- 2. f1 ... f5 fk


@pytest.mark.parametrize("k", [6, 7, 8, 9])
def test_criterion_2_mid(accept, k):
    v, dt = timed(analyze, arrangement([1, 2, 3, 4, 5, k]))
    ok = v.is_free and v.exponents.values == (1,) * 13 + (4,) and dt <= 1800
    detail = f"k={k} {v.kind.value} {v.exponents.compact() if v.exponents else '-'} in {dt:.1f}s ({v.basis_source})"
    if k == 7:
        chk = verify_basis("Mid(7)")
        ok = ok and chk.ok and v.certificate.abs_c == 23328
        detail += f", |c|={v.certificate.abs_c}, {chk.describe()}"
    accept.record(2, f"Mid k={k}", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 3. non-free cases


def test_criterion_3_non_free(accept):
    h10 = analyze(arrangement([1, 2, 3, 4, 5, 10]))
    a_prime = GradedAnalysis(arrangement([1, 2, 3, 5, 10]), PRIMES).extend(1)
    b = analyze(arrangement([6, 7, 8, 9, 10]))
    checks = {
        "H10": (h10.kind.is_not_free and h10.dims.dim_ar(1) == 12 and h10.dims.degrees[1].certified,
                f"{h10.kind.value}, AR_1={h10.dims.dim_ar(1)}"),
        "A'": (a_prime.dim_ar(1) == 13 and a_prime.degrees[1].certified, f"AR_1={a_prime.dim_ar(1)}"),
        "B": (b.kind.is_not_free and b.dims.dim_ar(1) == 16 and b.dims.degrees[1].certified,
              f"{b.kind.value}, AR_1={b.dims.dim_ar(1)}"),
    }
    for name, (ok, detail) in checks.items():
        accept.record(3, name, ok, detail)
    assert all(ok for ok, _ in checks.values())


# ---------------------------------------------------------------- 4. k = 3


def test_criterion_4_triples(accept):
    rep, dt = timed(run_survey, SurveyConfig(k=3))
    by_count = sum(1 for e in rep.entries if e.kind == VerdictKind.NOT_FREE_DEGREE_COUNT.value)
    ok = len(rep.entries) == 120 and by_count == 120 and dt <= 10
    accept.record(4, "k=3 survey", ok, f"{len(rep.entries)} arrangements, {by_count} NotFreeByDegreeCount, {dt:.2f}s")
    assert ok


# ---------------------------------------------------------------- 5. k = 4


@pytest.fixture(scope="module")
def survey_k4():
    return timed(run_survey, SurveyConfig(k=4, d_max=4))


def test_criterion_5_survey(accept, survey_k4):
    rep, dt = survey_k4
    free = [(e.ids, tuple(e.exponents)) for e in rep.free]
    ok_free = [ids for ids, _ in free] == FREE_4_TUPLES and {ex for _, ex in free} == {(0,) * 3 + (1,) * 11}
    ok_count = len(rep.entries) == 210 and not rep.errors and all(e.certified_through == 4 for e in rep.entries)
    accept.record(5, "210 arrangements", ok_count, f"{len(rep.entries)} analyzed in {dt:.0f}s (budget 4h)")
    accept.record(5, "5 free", ok_free, f"{[list(i) for i, _ in free]} exponents (0^3,1^11)")
    assert ok_count and ok_free and dt <= 4 * 3600


def test_criterion_5_free_certificates_reverify(accept):
    ok = True
    for ids in FREE_4_TUPLES:
        v = analyze(arrangement(ids))
        ok = ok and bool(verify_certificate(certificate_to_dict(v.certificate), seed=11))
    accept.record(5, "free certificates re-verify", ok, "5 of 5 from stored certificates")
    assert ok


def test_criterion_5_fingerprint_not_nearly_free(accept, survey_k4):
    rep, _ = survey_k4
    fp = rep.fingerprint_class()
    nf = [e.ids for e in fp if nearly_free_consistent(e.ar_dims, 15)]
    orbit_ok = True
    sig = {e.ids: e.signature() for e in rep.entries}
    for orbit in column_orbits(enumerate_arrangements(4)):
        orbit_ok = orbit_ok and len({sig[ids] for ids in orbit}) == 1
    ok = bool(fp) and not nf and orbit_ok
    accept.record(5, "fingerprint class fails every nearly-free shape", ok,
                  f"{len(fp)} checked, {len(nf)} nearly-free-consistent, signatures constant on S5 column orbits")
    assert ok


@pytest.mark.xfail(strict=True, reason="60 arrangements carry the fingerprint; the class is one S5 orbit of size 60")
def test_criterion_5_fingerprint_count_is_58(accept, survey_k4):
    rep, _ = survey_k4
    fp = rep.fingerprint_class()
    ok = len(fp) == 58
    accept.record(5, "fingerprint class size", ok,
                  f"observed {len(fp)}, expected 58 (dims {FINGERPRINT_58.predict(4, 15)} at degree 4)")
    assert ok


def test_criterion_5_quick_mode(accept):
    rep, dt = timed(run_survey, SurveyConfig(k=4, quick=True))
    ok = len(rep.entries) == 210 and len(rep.free) == 5 and dt <= 600
    accept.record(5, "--quick", ok, f"{rep.summary()} in {dt:.0f}s (budget 10 min)")
    assert ok


# ---------------------------------------------------------------- 6. regularity


def test_criterion_6_regularity(accept):
    a = regularity(analyze(arrangement([1, 2, 3, 4, 5]))).value
    m = regularity(analyze(arrangement([1, 2, 3, 4, 5, 7]))).value
    ok = a == 13 and m == 19
    accept.record(6, "regularity", ok, f"ThmA {a}, Mid {m}")
    assert ok


# ---------------------------------------------------------------- 7. seven factors


def test_criterion_7_seven_factors(accept):
    v = analyze(arrangement([1, 2, 3, 4, 7, 8, 9]))
    ok = v.is_free and v.exponents.values == (1,) * 12 + (4, 4)
    accept.record(7, "{1,2,3,4,7,8,9}", ok, f"{v.kind.value} {v.exponents.compact() if v.exponents else '-'}")
    assert ok


# ---------------------------------------------------------------- 8. two-row matrices


@pytest.mark.parametrize("shape,d_max,exps", [("2x3", 4, (1,) * 5), ("2x4", 5, (1,) * 6 + (5,))])
def test_criterion_8_two_rows(accept, shape, d_max, exps):
    v = analyze(all_minors(MatrixShape.parse(shape)), AnalyzeConfig(d_max=d_max))
    ok = v.is_free and v.exponents.values == exps
    accept.record(8, f"all minors {shape}", ok, f"{v.kind.value} {v.exponents.compact() if v.exponents else '-'} (derived)")
    assert ok


# ---------------------------------------------------------------- 9. property suites


def _property(accept, name, fn):
    failures = 0
    rng = random.Random(name)
    count = 0
    for ok in islice(fn(rng), CASES):
        count += 1
        failures += not ok
    good = failures == 0 and count == CASES
    accept.record(9, name, good, f"{count} cases, {failures} failures")
    assert good


def _leibniz(rng):
    while True:
        a = random_poly(rng, terms=3, max_deg=2)
        b = random_poly(rng, terms=3, max_deg=2)
        coeffs = {rng.randrange(15): random_poly(rng, terms=2, homogeneous=1) for _ in range(3)}
        th = Derivation.from_dict(ORDER, coeffs)
        yield apply_derivation(th, a * b) == a * apply_derivation(th, b) + b * apply_derivation(th, a)


def _per_factor(rng):
    pool = load_basis("ThmA(5)") + load_basis("Mid(7)")
    lin = [th for th in pool if th.degree == 1]
    while True:
        th = rng.choice(lin)
        if rng.random() < 0.7:
            th = th + rng.choice(lin).scale(rng.randint(-3, 3))
        if th.is_zero():
            continue
        ids = rng.sample(range(1, 11), rng.randint(1, 4))
        whole = bool(tangency(th, arrangement(ids)))
        yield whole == all(bool(tangency(th, arrangement([i]))) for i in ids)


def _division(rng):
    while True:
        q = random_poly(rng, terms=4, max_deg=3)
        f = random_poly(rng, terms=3, max_deg=2)
        if f.is_zero():
            continue
        yield (q * f).exact_divide(f) == q


def _evaluation(rng):
    while True:
        a = random_poly(rng, terms=4, max_deg=3)
        b = random_poly(rng, terms=4, max_deg=3)
        pt = [rng.randint(-100, 100) for _ in range(15)]
        ea, eb = a.evaluate(pt), b.evaluate(pt)
        yield (a * b).evaluate(pt) == ea * eb and (a + b).evaluate(pt) == ea + eb


def _monomial_counts(rng):
    for d in range(7):
        yield len(monomials_of_degree(ORDER, d)) == comb(d + 14, 14)
    orders = {n: VariableOrder([f"v{i}" for i in range(n)]) for n in range(1, 7)}
    while True:
        n, d = rng.randint(1, 6), rng.randint(0, 5)
        yield count_monomials(n, d) == comb(d + n - 1, n - 1) == len(monomials_of_degree(orders[n], d))


def _c_invariance(rng):
    for name, arr, c in (("ThmA(5)", arrangement([1, 2, 3, 4, 5]), 9375), ("Mid(7)", arrangement([1, 2, 3, 4, 5, 7]), 23328)):
        mat = saito_matrix(load_basis(name))
        for p in PRIMES:
            F = PrimeField(p, check=False)
            cols = [[a.reduce_mod(F) for a in col] for col in mat.columns]
            for _ in range(CASES // 4):
                pt = [rng.randrange(p) for _ in range(15)]
                ev = [[a.evaluate(pt) for a in col] for col in cols]
                fval = arr.evaluate(pt, F)
                order = list(range(1, 15))
                rng.shuffle(order)
                perm = [0] + order
                rows = [[ev[j][i] for j in perm] for i in range(15)]
                ratio = kernels.det_mod(rows, p) * pow(fval, -1, p) % p
                yield ratio in (c % p, -c % p)


def _sandwich(rng):
    arrs = [arrangement(ids) for ids in ([1, 2, 3, 4, 5], [6, 7, 8, 9, 10], [1, 2, 3, 7], [1, 2, 3, 4, 5, 10])]
    for arr in arrs:
        ga = GradedAnalysis(arr, PRIMES)
        rep = ga.extend(3)
        yield all(r.dim_lower == r.dim_upper for r in rep.degrees)
        for d in range(4):
            spaces = [nullspace(ga.system(d), p) for p in PRIMES]
            for code, sol in spaces[0].solutions.items():
                other = spaces[1].solutions[code]
                lower = 0
                if other.free == sol.free:
                    for k in range(len(sol.free)):
                        vec = lift_vector([sol.basis[k], other.basis[k]], PRIMES)
                        lower += vec is not None and verify_block_vector(sol.block, vec)
                yield lower == len(sol.free)


def _determinism(rng):
    one = run_survey(SurveyConfig(family=[(1, 2, 3, 4), (1, 2, 3, 7), (1, 4, 7, 10), (6, 7, 8, 9)], d_max=2, threads=1))
    two = run_survey(SurveyConfig(family=[(1, 2, 3, 4), (1, 2, 3, 7), (1, 4, 7, 10), (6, 7, 8, 9)], d_max=2, threads=2))
    yield [e.as_dict() for e in one.entries] == [e.as_dict() for e in two.entries]
    for ids in ([1, 2, 3, 4, 5], [1, 4, 7, 10], [2, 3, 5, 8, 9], [6, 7, 8, 9, 10], [1, 2, 3, 4, 5, 6]):
        for d in (2, 3):
            sys = GradedAnalysis(arrangement(ids), PRIMES).system(d)
            for b in sys.blocks:
                if not b.theta:
                    continue
                p = rng.choice(PRIMES)
                ref = _kernels_py.nullspace_mod(b.nrows, b.ncols, b.rows, b.cols, b.vals, p)
                s = solve_block(b, p)
                yield list(ref[0]) == s.free and [list(v) for v in ref[1]] == s.basis


PROPERTIES = {
    "Leibniz rule": _leibniz,
    "per-factor tangency": _per_factor,
    "exact-division oracle": _division,
    "evaluation homomorphism": _evaluation,
    "monomial counts vs binomials": _monomial_counts,
    "|c| invariance under column permutation": _c_invariance,
    "sandwich lower = upper": _sandwich,
    "determinism across kernels and worker counts": _determinism,
}


@pytest.mark.parametrize("name", list(PROPERTIES))
def test_criterion_9_properties(accept, name):
    _property(accept, name, PROPERTIES[name])


# ---------------------------------------------------------------- 10. experimental


def _experimental_run(capsys):
    code = main(["analyze", "--experimental", "--factors", "1..10", "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def test_criterion_10_no_verdict_claimed(accept, capsys):
    code, doc = _experimental_run(capsys)
    ok = code == 20 and doc["verdict"] is None
    accept.record(10, "no verdict claimed", ok, f"exit {code}, certified through degree {doc['certified_through']}")
    assert ok


@pytest.mark.xfail(strict=True, reason="certified AR_1 = 12 while (1^9,4^5) predicts 9")
def test_criterion_10_consistent_with_conjecture(accept, capsys):
    code, doc = _experimental_run(capsys)
    ok = doc["consistent"] or bool(doc["budget_note"])
    w = doc.get("witness", {})
    accept.record(10, "consistency with (1^9,4^5)", ok,
                  f"experimental, not required: inconsistent at degree {w.get('degree')}: "
                  f"predicted {w.get('predicted')}, certified {w.get('certified')}")
    assert ok

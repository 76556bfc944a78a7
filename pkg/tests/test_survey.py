import json
from math import comb

import pytest

from detfree.io import certificate_to_dict, verify_certificate
from detfree.analyzer import analyze
from detfree.model import arrangement
from detfree.survey import (FREE_4_TUPLES, SurveyConfig, SurveyEntry, column_orbits, enumerate_arrangements,
                            in_fingerprint_class, run_survey)

SAMPLE_4 = [(1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 3, 7), (1, 4, 7, 10), (2, 5, 8, 9), (6, 7, 8, 9)]


class TestEnumerate:
    @pytest.mark.parametrize("k,n", [(3, 120), (4, 210), (10, 1), (1, 10)])
    def test_counts(self, k, n):
        arrs = enumerate_arrangements(k)
        assert len(arrs) == n == comb(10, k)
        assert arrs == sorted(arrs)

    def test_range(self):
        with pytest.raises(ValueError):
            enumerate_arrangements(0)
        with pytest.raises(ValueError):
            enumerate_arrangements(11)


class TestOrbits:
    def test_four_subset_orbits(self):
        orbits = column_orbits(enumerate_arrangements(4))
        assert sorted(len(o) for o in orbits) == [5, 10, 15, 60, 60, 60]
        free_orbit = next(o for o in orbits if (1, 2, 3, 4) in o)
        assert sorted(free_orbit) == FREE_4_TUPLES

    def test_three_subset_orbits_have_uniform_z0(self):
        rep = run_survey(SurveyConfig(k=3))
        by_ids = {e.ids: e for e in rep.entries}
        for orbit in column_orbits(enumerate_arrangements(3)):
            assert len({by_ids[ids].signature() for ids in orbit}) == 1


class TestRunSurvey:
    def test_k3(self):
        rep = run_survey(SurveyConfig(k=3))
        assert len(rep.entries) == 120
        assert all(e.kind == "NotFreeByDegreeCount" for e in rep.entries)
        assert all(e.certified_through == 0 for e in rep.entries)
        assert rep.summary().startswith("120 analyzed, 0 free, 120 not free")
        assert sum(rep.signature_counts().values()) == 120

    def test_threads_do_not_change_results(self):
        one = run_survey(SurveyConfig(family=SAMPLE_4, d_max=2, threads=1))
        two = run_survey(SurveyConfig(family=SAMPLE_4, d_max=2, threads=2))
        assert [e.as_dict() for e in one.entries] == [e.as_dict() for e in two.entries]
        assert one.signature_csv() == two.signature_csv()

    def test_free_entries_reverify(self):
        rep = run_survey(SurveyConfig(family=[(1, 2, 3, 4), (4, 7, 9, 10)], d_max=1))
        for e in rep.free:
            assert e.exponents == [0, 0, 0] + [1] * 11
            v = analyze(arrangement(e.ids))
            assert verify_certificate(certificate_to_dict(v.certificate), seed=5)

    def test_quick_caps_degree(self):
        cfg = SurveyConfig(family=SAMPLE_4[:2], quick=True)
        assert cfg.d_max == 2
        assert "quick mode" in run_survey(cfg).summary()

    def test_errors_are_recorded(self):
        rep = run_survey(SurveyConfig(family=[(1, 2, 3), (1, 1, 2)], d_max=1))
        assert [e.kind for e in rep.entries] == ["NotFreeByDegreeCount", "Error"]
        assert "NonReducedError" in rep.entries[1].error

    def test_needs_k_or_family(self):
        with pytest.raises(ValueError):
            SurveyConfig()
        with pytest.raises(ValueError):
            SurveyConfig(k=3, family=[(1, 2, 3)])


class TestCheckpoint:
    def test_resume(self, tmp_path):
        path = str(tmp_path / "ck.jsonl")
        first = run_survey(SurveyConfig(family=SAMPLE_4[:3], d_max=1, checkpoint=path))
        lines = open(path).read().splitlines()
        assert len(lines) == 4 and "config_hash" in json.loads(lines[0])
        # drop the last entry to simulate an interrupted run
        with open(path, "w") as fh:
            fh.write("\n".join(lines[:3]) + "\n")
        seen = []
        again = run_survey(SurveyConfig(family=SAMPLE_4[:3], d_max=1, checkpoint=path), progress=seen.append)
        assert [e.ids for e in seen] == [SAMPLE_4[2]]
        assert [e.as_dict() for e in again.entries] == [e.as_dict() for e in first.entries]

    def test_mismatch(self, tmp_path):
        path = str(tmp_path / "ck.jsonl")
        run_survey(SurveyConfig(family=SAMPLE_4[:1], d_max=1, checkpoint=path))
        with pytest.raises(ValueError):
            run_survey(SurveyConfig(family=SAMPLE_4[:1], d_max=2, checkpoint=path))


def test_fingerprint_membership_needs_certified_degree_four():
    e = SurveyEntry((1, 2, 3, 7), "NotFreeByDegreeCount", 0, [0, 15, 225, 1800, 10199], 4)
    assert in_fingerprint_class(e)
    e.certified_through = 3
    assert not in_fingerprint_class(e)
    assert not in_fingerprint_class(SurveyEntry((1, 2, 3, 4), "CertifiedFree", 3, [3, 56, 525, 3360, 16660], 4))

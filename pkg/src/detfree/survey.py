"""Exhaustive k-subset surveys and the reproduction checklist."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .analyzer import (AnalyzeConfig, Resolution, VerdictKind, analyze, consistent_exponents,
                       nearly_free_consistent, regularity)
from .model import DEFAULT_SHAPE, MatrixShape, arrangement
from .syzygy import GradedAnalysis, default_primes

log = logging.getLogger(__name__)

FORMAT_VERSION = "detfree-survey/1"

# 0 <- S <- S^15(-11) <- S^15(-12) <- S(-15) <- 0, for the degree-12 four-factor class
FINGERPRINT_58 = Resolution(12, ((15, 12),), ((1, 15),))

FREE_4_TUPLES = [(1, 2, 3, 4), (1, 5, 6, 7), (2, 5, 8, 9), (3, 6, 8, 10), (4, 7, 9, 10)]


def enumerate_arrangements(k: int, shape: MatrixShape = DEFAULT_SHAPE) -> List[Tuple[int, ...]]:
    total = shape.minor_count
    if not 1 <= k <= total:
        raise ValueError(f"k must lie in 1..{total}")
    return list(itertools.combinations(range(1, total + 1), k))


def column_orbits(family: Sequence[Tuple[int, ...]], shape: MatrixShape = DEFAULT_SHAPE) -> List[List[Tuple[int, ...]]]:
    """Split a family of arrangements into orbits of the column permutation group.

    Permuting columns is a linear change of coordinates, so every invariant
    computed here (dimensions, verdicts, resolutions) is constant on orbits.
    """
    cols = shape.column_sets
    index = {c: i + 1 for i, c in enumerate(cols)}
    perms = list(itertools.permutations(range(1, shape.n + 1)))

    def act(p, ids):
        return tuple(sorted(index[tuple(sorted(p[c - 1] for c in cols[i - 1]))] for i in ids))

    members = {tuple(sorted(f)) for f in family}
    seen = set()
    orbits = []
    for ids in sorted(members):
        if ids in seen:
            continue
        orb = sorted({act(p, ids) for p in perms})
        seen.update(orb)
        orbits.append(orb)
    return orbits


@dataclass
class SurveyConfig:
    k: Optional[int] = None
    family: Optional[List[Tuple[int, ...]]] = None
    d_max: int = 4
    seed: int = 0
    threads: int = 1
    quick: bool = False
    signatures: Optional[bool] = None  # graded dims past the verdict; default: 4+ factors
    shape: MatrixShape = DEFAULT_SHAPE
    checkpoint: Optional[str] = None

    def __post_init__(self):
        if (self.k is None) == (self.family is None):
            raise ValueError("give exactly one of k or family")
        if self.quick:
            self.d_max = min(self.d_max, 2)
        if self.signatures is None:
            self.signatures = max(len(a) for a in self.arrangements) >= 4

    @property
    def arrangements(self) -> List[Tuple[int, ...]]:
        if self.family is not None:
            return [tuple(sorted(f)) for f in self.family]
        return enumerate_arrangements(self.k, self.shape)

    def config_hash(self) -> str:
        """Hash of everything that influences results (not threads or paths)."""
        key = {"shape": f"{self.shape.m}x{self.shape.n}", "d_max": self.d_max, "seed": self.seed,
               "signatures": self.signatures, "arrangements": [list(a) for a in self.arrangements],
               "format": FORMAT_VERSION}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class SurveyEntry:
    ids: Tuple[int, ...]
    kind: str
    z0: int
    ar_dims: List[int]
    certified_through: int
    exponents: Optional[List[int]] = None
    c: Optional[str] = None
    reason: str = ""
    error: Optional[str] = None
    seconds: float = 0.0

    def signature(self, d_max: int = 4) -> Tuple:
        dims = [self.ar_dims[d] if d <= self.certified_through else None for d in range(1, d_max + 1)]
        return (self.z0, *dims, self.kind)

    def as_dict(self) -> dict:
        return {"ids": list(self.ids), "kind": self.kind, "z0": self.z0, "ar_dims": list(self.ar_dims),
                "certified_through": self.certified_through, "exponents": self.exponents, "c": self.c,
                "reason": self.reason, "error": self.error}

    @classmethod
    def from_dict(cls, d: dict) -> "SurveyEntry":
        return cls(tuple(d["ids"]), d["kind"], d["z0"], list(d["ar_dims"]), d["certified_through"],
                   d.get("exponents"), d.get("c"), d.get("reason", ""), d.get("error"), d.get("seconds", 0.0))


def fingerprint_dims(d_max: int = 4, nvars: int = 15) -> List[int]:
    return [FINGERPRINT_58.predict(d, nvars) for d in range(d_max + 1)]


def in_fingerprint_class(entry: SurveyEntry, d_max: int = 4) -> bool:
    if entry.certified_through < d_max or entry.kind == VerdictKind.CERTIFIED_FREE.value:
        return False
    return entry.ar_dims[: d_max + 1] == fingerprint_dims(d_max)


def _survey_one(ids: Tuple[int, ...], shape_key: Tuple[int, int], d_max: int, seed: int,
                signatures: bool) -> dict:
    t0 = time.perf_counter()
    shape = MatrixShape(*shape_key)
    try:
        arr = arrangement(ids, shape)
        ga = GradedAnalysis(arr, default_primes(seed), extra_primes=default_primes(seed + 1, 2))
        verdict = analyze(arr, AnalyzeConfig(d_max=d_max, seed=seed, use_registered_basis=False), analysis=ga)
        ga = verdict.analysis or ga
        if signatures:
            ga.extend(d_max)
        rep = ga.report
        entry = SurveyEntry(tuple(ids), verdict.kind.value, verdict.z0, rep.ar_dims(), rep.certified_through(),
                            list(verdict.exponents.values) if verdict.exponents else None,
                            str(verdict.certificate.c) if verdict.certificate else None, verdict.reason)
    except Exception as exc:  # recorded, never fatal for the survey
        log.exception("survey entry %s failed", ids)
        entry = SurveyEntry(tuple(ids), "Error", -1, [], -1, error=f"{type(exc).__name__}: {exc}")
    entry.seconds = time.perf_counter() - t0
    out = entry.as_dict()
    out["seconds"] = round(entry.seconds, 3)
    return out


@dataclass
class SurveyReport:
    config: SurveyConfig
    entries: List[SurveyEntry]
    wall_seconds: float = 0.0

    def count(self, kind: str) -> int:
        return sum(1 for e in self.entries if e.kind == kind)

    @property
    def free(self) -> List[SurveyEntry]:
        return [e for e in self.entries if e.kind == VerdictKind.CERTIFIED_FREE.value]

    @property
    def not_free(self) -> List[SurveyEntry]:
        return [e for e in self.entries if e.kind.startswith("NotFree")]

    @property
    def errors(self) -> List[SurveyEntry]:
        return [e for e in self.entries if e.error]

    def fingerprint_class(self) -> List[SurveyEntry]:
        if self.config.d_max < 4:
            return []
        return [e for e in self.entries if in_fingerprint_class(e)]

    def signature_counts(self) -> Counter:
        return Counter(e.signature(self.config.d_max) for e in self.entries)

    def summary(self) -> str:
        parts = [f"{len(self.entries)} analyzed", f"{len(self.free)} free", f"{len(self.not_free)} not free"]
        und = self.count(VerdictKind.UNDETERMINED.value)
        if und:
            parts.append(f"{und} undetermined")
        if self.config.d_max >= 4 and self.config.signatures:
            parts.append(f"{len(self.fingerprint_class())} fingerprint-class")
        elif self.config.quick:
            parts.append("quick mode: degree <= 2 signatures only, fingerprint class not resolved")
        if self.errors:
            parts.append(f"{len(self.errors)} errors")
        return ", ".join(parts)

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "format": FORMAT_VERSION,
            "config": {"k": cfg.k, "d_max": cfg.d_max, "seed": cfg.seed, "quick": cfg.quick,
                       "shape": f"{cfg.shape.m}x{cfg.shape.n}", "signatures": cfg.signatures,
                       "config_hash": cfg.config_hash(),
                       "primes": [str(p) for p in default_primes(cfg.seed)]},
            "entries": [e.as_dict() for e in self.entries],
            "summary": self.summary(),
            "signatures": [{"signature": [None if x is None else x for x in sig], "count": n}
                           for sig, n in sorted(self.signature_counts().items(), key=lambda kv: repr(kv[0]))],
            "fingerprint_class": [list(e.ids) for e in self.fingerprint_class()],
            "timing": {"wall_ms": int(self.wall_seconds * 1000),
                       "per_entry_ms": {",".join(map(str, e.ids)): int(e.seconds * 1000) for e in self.entries}},
        }

    def signature_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d_max = self.config.d_max
        w.writerow(["z0"] + [f"AR{d}" for d in range(1, d_max + 1)] + ["verdict", "count"])
        for sig, n in sorted(self.signature_counts().items(), key=lambda kv: repr(kv[0])):
            w.writerow(["" if x is None else x for x in sig] + [n])
        return buf.getvalue()


def _load_checkpoint(path: str, chash: str) -> Dict[Tuple[int, ...], SurveyEntry]:
    done: Dict[Tuple[int, ...], SurveyEntry] = {}
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        header = fh.readline()
        if not header.strip():
            return done
        if json.loads(header).get("config_hash") != chash:
            raise ValueError(f"checkpoint {path} belongs to a different survey configuration")
        for line in fh:
            line = line.strip()
            if line:
                e = SurveyEntry.from_dict(json.loads(line))
                done[e.ids] = e
    return done


def run_survey(cfg: SurveyConfig, progress: Optional[Callable[[SurveyEntry], None]] = None) -> SurveyReport:
    """Analyze every arrangement; order and results do not depend on ``threads``."""
    t0 = time.perf_counter()
    todo = cfg.arrangements
    chash = cfg.config_hash()
    done: Dict[Tuple[int, ...], SurveyEntry] = {}
    ckpt = None
    if cfg.checkpoint:
        done = _load_checkpoint(cfg.checkpoint, chash)
        fresh = not os.path.exists(cfg.checkpoint) or os.path.getsize(cfg.checkpoint) == 0
        ckpt = open(cfg.checkpoint, "a")
        if fresh:
            ckpt.write(json.dumps({"config_hash": chash, "format": FORMAT_VERSION}, sort_keys=True) + "\n")
            ckpt.flush()
    pending = [ids for ids in todo if ids not in done]
    shape_key = (cfg.shape.m, cfg.shape.n)
    args = [(ids, shape_key, cfg.d_max, cfg.seed, cfg.signatures) for ids in pending]

    def results() -> Iterable[dict]:
        if cfg.threads <= 1 or len(args) <= 1:
            for a in args:
                yield _survey_one(*a)
        else:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                yield from pool.map(_survey_one, *zip(*args), chunksize=1)

    try:
        for raw in results():
            e = SurveyEntry.from_dict(raw)
            done[e.ids] = e
            if ckpt:
                ckpt.write(json.dumps(raw, sort_keys=True) + "\n")
                ckpt.flush()
            if progress:
                progress(e)
    finally:
        if ckpt:
            ckpt.close()
    entries = [done[ids] for ids in todo]
    return SurveyReport(cfg, entries, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# Reproduction checklist
# --------------------------------------------------------------------------


@dataclass
class CheckItem:
    name: str
    passed: bool
    observed: object
    expected: object
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: observed {self.observed!r}, expected {self.expected!r} ({self.seconds:.1f}s)"

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "observed": _jsonable(self.observed),
                "expected": _jsonable(self.expected), "ms": int(self.seconds * 1000)}


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if x is None or isinstance(x, (bool, int, str)):
        return x
    return str(x)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def exponent_string(exps: Sequence[int]) -> str:
    parts = []
    for v, grp in itertools.groupby(sorted(exps)):
        n = len(list(grp))
        parts.append(f"{v}^{n}" if n > 1 else str(v))
    return "(" + ",".join(parts) + ")"


def reproduction_suite(seed: int = 0, include_k4: bool = False, quick_k4: bool = False, threads: int = 1,
                             emit: Optional[Callable[[CheckItem], None]] = None) -> List[CheckItem]:
    """Named checks for the headline computations; ``include_k4`` adds the long 4-subset survey."""
    items: List[CheckItem] = []

    def add(name, passed, observed, expected, seconds=0.0):
        item = CheckItem(name, bool(passed), observed, expected, seconds)
        items.append(item)
        if emit:
            emit(item)

    cfg = AnalyzeConfig(seed=seed)
    for j in range(5, 11):
        v, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 4, j]), cfg))
        exps = exponent_string(v.exponents.values) if v.exponents else None
        add(f"ThmA-j{j}-free", v.is_free and exps == "(1^14)", [v.kind.value, exps], ["CertifiedFree", "(1^14)"], dt)
        if j == 5:
            add("ThmA-j5-constant", v.is_free and v.certificate.abs_c == 9375,
                str(v.certificate.abs_c) if v.certificate else None, "9375")
            eb = v.certificate.evidence.get("error_bound_log2") if v.certificate else None
            add("ThmA-j5-pit-error-bound", eb is not None and eb < -100, eb, "< -100")
            ex, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 4, 5]),
                                            AnalyzeConfig(seed=seed, mode="exact")))
            add("ThmA-j5-exact-agrees", ex.is_free and ex.certificate.abs_c == 9375,
                str(ex.certificate.abs_c) if ex.certificate else None, "9375", dt)
            add("ThmA-regularity", v.is_free and regularity(v).value == 13,
                regularity(v).value if v.is_free else None, 13)

    from .bases import BasisId, verify_basis
    chk, dt = _timed(lambda: verify_basis(BasisId("Mid", 7)))
    add("Mid-k7-printed-basis-tangency", chk.ok, chk.describe(), "all 14 tangent", dt)
    for k in (6, 7, 8, 9):
        v, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 4, 5, k]), cfg))
        exps = exponent_string(v.exponents.values) if v.exponents else None
        add(f"Mid-k{k}-free", v.is_free and exps == "(1^13,4)", [v.kind.value, exps],
            ["CertifiedFree", "(1^13,4)"], dt)
        if k == 7:
            add("Mid-k7-constant", v.is_free and v.certificate.abs_c == 23328,
                str(v.certificate.abs_c) if v.certificate else None, "23328")
            add("Mid-regularity", v.is_free and regularity(v).value == 19,
                regularity(v).value if v.is_free else None, 19)

    v, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 4, 5, 10]), cfg))
    ar1 = v.dims.dim_ar(1) if v.dims and v.dims.certified_through() >= 1 else None
    add("Mid-k10-notfree", v.kind.is_not_free and ar1 == 12, [v.kind.value, ar1], ["NotFree*", 12], dt)
    v, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 5, 10]), AnalyzeConfig(seed=seed, d_max=1)))
    ar1 = v.dims.dim_ar(1) if v.dims and v.dims.certified_through() >= 1 else None
    add("Aprime-AR1", ar1 == 13, ar1, 13, dt)
    v, dt = _timed(lambda: analyze(arrangement([6, 7, 8, 9, 10]), cfg))
    ar1 = v.dims.dim_ar(1) if v.dims and v.dims.certified_through() >= 1 else None
    add("B-notfree", v.kind.is_not_free and ar1 == 16, [v.kind.value, ar1], ["NotFree*", 16], dt)

    rep, dt = _timed(lambda: run_survey(SurveyConfig(k=3, seed=seed)))
    by_count = rep.count(VerdictKind.NOT_FREE_DEGREE_COUNT.value)
    add("k3-never-free", len(rep.entries) == 120 and by_count == 120,
        [len(rep.entries), by_count], [120, 120], dt)

    v, dt = _timed(lambda: analyze(arrangement([1, 2, 3, 4, 7, 8, 9]), cfg))
    exps = exponent_string(v.exponents.values) if v.exponents else None
    add("Seven-factor-free", v.is_free and exps == "(1^12,4^2)", [v.kind.value, exps],
        ["CertifiedFree", "(1^12,4^2)"], dt)

    for n, d_max in ((3, 4), (4, 5)):
        shape = MatrixShape(2, n)
        v, dt = _timed(lambda: analyze(arrangement(range(1, shape.minor_count + 1), shape),
                                       AnalyzeConfig(seed=seed, d_max=d_max)))
        exps = exponent_string(v.exponents.values) if v.exponents else None
        add(f"generic-2x{n}", v.is_free, [v.kind.value, exps], ["CertifiedFree", "derived"], dt)

    if include_k4:
        rep, dt = _timed(lambda: run_survey(SurveyConfig(k=4, seed=seed, quick=quick_k4, threads=threads)))
        add("Survey-k4-count", len(rep.entries) == 210, len(rep.entries), 210, dt)
        free_ids = sorted(e.ids for e in rep.free)
        free_exps = sorted({exponent_string(e.exponents) for e in rep.free})
        add("Survey-k4-free", free_ids == FREE_4_TUPLES and free_exps == ["(0^3,1^11)"],
            [[list(i) for i in free_ids], free_exps], [[list(i) for i in FREE_4_TUPLES], ["(0^3,1^11)"]])
        if not quick_k4:
            fp = rep.fingerprint_class()
            add("Survey-k4-fingerprint-58", len(fp) == 58, len(fp), 58)
            nf_fail = all(not nearly_free_consistent(e.ar_dims[:5], 15) and
                          not consistent_exponents(e.ar_dims[:5], 15, 12) for e in fp)
            add("Survey-k4-fingerprint-not-nearly-free", bool(fp) and nf_fail, nf_fail, True)
    return items

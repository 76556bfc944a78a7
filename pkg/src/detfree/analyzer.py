"""Freeness verdicts: degree counting, graded obstructions, Saito certificates."""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .algebra import count_monomials
from .bases import registered_basis_for, load_basis
from .model import Arrangement
from .saito import PitConfig, SaitoCertificate, SaitoRefusal, certify_free
from .syzygy import DimReport, GradedAnalysis, default_primes

log = logging.getLogger(__name__)


class VerdictKind(str, enum.Enum):
    CERTIFIED_FREE = "CertifiedFree"
    NOT_FREE_DEGREE_COUNT = "NotFreeByDegreeCount"
    NOT_FREE_GRADED = "NotFreeByGradedObstruction"
    UNDETERMINED = "Undetermined"

    @property
    def is_not_free(self) -> bool:
        return self in (VerdictKind.NOT_FREE_DEGREE_COUNT, VerdictKind.NOT_FREE_GRADED)


@dataclass(frozen=True)
class ExponentMultiset:
    values: Tuple[int, ...]
    certified: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(sorted(self.values)))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def zeros(self) -> int:
        return self.values.count(0)

    def compact(self) -> str:
        parts = []
        for v, grp in itertools.groupby(self.values):
            n = len(list(grp))
            parts.append(f"{v}^{n}" if n > 1 else str(v))
        return "(" + ",".join(parts) + ")"


@dataclass
class FreenessVerdict:
    kind: VerdictKind
    arrangement: Arrangement
    z0: int
    deg_f: int
    exponents: Optional[ExponentMultiset] = None
    certificate: Optional[SaitoCertificate] = None
    dims: Optional[DimReport] = None
    d_explored: int = -1
    reason: str = ""
    basis_source: str = ""
    notes: List[str] = field(default_factory=list)
    candidates_exhausted: int = 0
    analysis: Optional[GradedAnalysis] = field(default=None, repr=False, compare=False)

    @property
    def is_free(self) -> bool:
        return self.kind is VerdictKind.CERTIFIED_FREE


@dataclass
class RegularityReport:
    value: int
    formula: str


# --------------------------------------------------------------------------
# Hilbert-data predictions
# --------------------------------------------------------------------------


def free_prediction(exponents: Sequence[int], d: int, nvars: int) -> int:
    """dim AR_d of a free module with the given generator degrees."""
    return sum(count_monomials(nvars, d - e) for e in exponents)


def nearly_free_prediction(exponents: Sequence[int], extra: int, d: int, nvars: int) -> int:
    """Generators in degrees ``exponents`` and ``extra``, one relation in degree extra + 1."""
    return (free_prediction(exponents, d, nvars) + count_monomials(nvars, d - extra)
            - count_monomials(nvars, d - extra - 1))


def resolution_prediction(deg_f: int, second: Sequence[Tuple[int, int]], third: Sequence[Tuple[int, int]],
                          d: int, nvars: int) -> int:
    """dim AR_d read off a minimal resolution of S/J_F.

    ``second`` and ``third`` are (multiplicity, twist) pairs of the modules in
    homological degrees 2 and 3, e.g. S^{12}(-18) -> (12, 18).  A summand
    S(-t) there sits in derivation degree t - (deg_f - 1).
    """
    shift = deg_f - 1
    pos = sum(mult * count_monomials(nvars, d - (t - shift)) for mult, t in second)
    neg = sum(mult * count_monomials(nvars, d - (t - shift)) for mult, t in third)
    return pos - neg


class ShapeHypothesis:
    def predict(self, d: int, nvars: int) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Free(ShapeHypothesis):
    exponents: Tuple[int, ...]

    def predict(self, d: int, nvars: int) -> int:
        return free_prediction(self.exponents, d, nvars)


@dataclass(frozen=True)
class NearlyFree(ShapeHypothesis):
    exponents: Tuple[int, ...]
    extra: int

    def predict(self, d: int, nvars: int) -> int:
        return nearly_free_prediction(self.exponents, self.extra, d, nvars)


@dataclass(frozen=True)
class Resolution(ShapeHypothesis):
    deg_f: int
    second: Tuple[Tuple[int, int], ...]
    third: Tuple[Tuple[int, int], ...] = ()

    def predict(self, d: int, nvars: int) -> int:
        return resolution_prediction(self.deg_f, self.second, self.third, d, nvars)


@dataclass
class ShapeResult:
    consistent: bool
    witness_degree: Optional[int] = None
    expected: Optional[int] = None
    observed: Optional[int] = None

    def __bool__(self) -> bool:
        return self.consistent


def shape_consistency(dims: DimReport, hyp: ShapeHypothesis, through: Optional[int] = None) -> ShapeResult:
    """Compare certified dim AR_d with the hypothesis, degree by degree."""
    nv = dims.arrangement.nvars
    top = dims.certified_through() if through is None else through
    if top > dims.certified_through():
        raise ValueError("dimensions are not certified through the requested degree")
    for rep in dims.degrees[: top + 1]:
        want = hyp.predict(rep.degree, nv)
        if want != rep.dim_ar:
            return ShapeResult(False, rep.degree, want, rep.dim_ar)
    return ShapeResult(True)


# --------------------------------------------------------------------------
# Exponent enumeration
# --------------------------------------------------------------------------


def _partitions(total: int, parts: int, minimum: int) -> Iterator[Tuple[int, ...]]:
    """Nondecreasing tuples of ``parts`` integers >= minimum summing to total."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(minimum, total // parts + 1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def forced_low_exponents(ar_dims: Sequence[int], nvars: int) -> Optional[List[int]]:
    """Multiplicities of exponents 0..len(ar_dims)-1 forced by the dims of a free module.

    None when some multiplicity would be negative.
    """
    counts: List[int] = []
    for d, dim in enumerate(ar_dims):
        seen = sum(n * count_monomials(nvars, d - e) for e, n in enumerate(counts))
        n_d = dim - seen
        if n_d < 0:
            return None
        counts.append(n_d)
    return counts


def consistent_exponents(ar_dims: Sequence[int], nvars: int, deg_f: int, limit: int = 10_000) -> List[ExponentMultiset]:
    """All free exponent multisets matching dim AR_0..AR_D, with N-1 parts summing to deg F - 1."""
    rank = nvars - 1
    counts = forced_low_exponents(ar_dims, nvars)
    if counts is None:
        return []
    low = [e for e, n in enumerate(counts) for _ in range(n)]
    r = rank - len(low)
    rem = deg_f - 1 - sum(low)
    if r < 0 or rem < 0:
        return []
    out = []
    for tail in _partitions(rem, r, len(ar_dims)):
        out.append(ExponentMultiset(tuple(low) + tail))
        if len(out) >= limit:
            break
    return out


def brute_force_exponents(ar_dims: Sequence[int], nvars: int, deg_f: int) -> List[ExponentMultiset]:
    """Oracle: scan every multiset of N-1 parts summing to deg F - 1."""
    out = []
    for parts in _partitions(deg_f - 1, nvars - 1, 0):
        if all(free_prediction(parts, d, nvars) == dim for d, dim in enumerate(ar_dims)):
            out.append(ExponentMultiset(parts))
    return out


def nearly_free_consistent(ar_dims: Sequence[int], nvars: int) -> List[NearlyFree]:
    """Nearly-free shapes (any generator degrees, any extra degree) matching the dims.

    The sum condition on exponents is not imposed, so an empty answer rules out
    every nearly-free resolution.
    """
    top = len(ar_dims) - 1
    out = []
    for extra in range(0, top + 2):
        adj = [dim - count_monomials(nvars, d - extra) + count_monomials(nvars, d - extra - 1)
               for d, dim in enumerate(ar_dims)]
        counts = forced_low_exponents(adj, nvars)
        if counts is None or sum(counts) > nvars - 1:
            continue
        low = tuple(e for e, n in enumerate(counts) for _ in range(n))
        out.append(NearlyFree(low, extra))
    return out


# --------------------------------------------------------------------------
# Verdict pipeline
# --------------------------------------------------------------------------


def essential_defect(arr: Arrangement, analysis: Optional[GradedAnalysis] = None) -> int:
    """dim AR_0: constant-coefficient derivations killing every factor."""
    ga = analysis or GradedAnalysis(arr, default_primes())
    rep = ga.extend(0).degrees[0]
    if not rep.certified:
        raise RuntimeError("degree-0 dimension not certified")
    return rep.dim_ar


def degree_count_test(arr: Arrangement, z0: int) -> Optional[str]:
    """Obstruction text when N-1-z0 positive exponents cannot sum to deg F - 1."""
    positive = arr.nvars - 1 - z0
    budget = arr.degree - 1
    if budget < positive:
        return f"deg F - 1 = {budget} < {positive} = N - 1 - z0"
    if positive == 0 and budget != 0:
        return f"no positive exponents left but deg F - 1 = {budget}"
    return None


def regularity_from_exponents(exponents, deg_f: int) -> int:
    """reg(S/J_F) = max exponent + deg F - 3 for a certified free arrangement."""
    if not isinstance(exponents, ExponentMultiset) or not exponents.certified:
        raise ValueError("regularity is only defined here for certified exponents")
    return max(exponents.values) + deg_f - 3


def regularity(verdict: FreenessVerdict) -> RegularityReport:
    if not verdict.is_free:
        raise ValueError("regularity requires a CertifiedFree verdict")
    value = regularity_from_exponents(verdict.exponents, verdict.deg_f)
    return RegularityReport(value, f"max(d_i) + deg F - 3 = {max(verdict.exponents.values)} + {verdict.deg_f} - 3")


@dataclass
class AnalyzeConfig:
    d_max: int = 4
    primes: Optional[List[int]] = None
    seed: int = 0
    mode: str = "pit"
    use_registered_basis: bool = True
    pit: Optional[PitConfig] = None
    retries: int = 2


def _certify(arr, derivs, cfg: AnalyzeConfig) -> SaitoCertificate:
    pit = cfg.pit or PitConfig(seed=cfg.seed)
    return certify_free(arr, derivs, mode=cfg.mode, cfg=pit)


def analyze(arr: Arrangement, config: Optional[AnalyzeConfig] = None,
            analysis: Optional[GradedAnalysis] = None) -> FreenessVerdict:
    """Degree count, then graded search with Saito certification or obstruction."""
    cfg = config or AnalyzeConfig()
    primes = cfg.primes or default_primes(cfg.seed)
    ga = analysis or GradedAnalysis(arr, primes, extra_primes=default_primes(cfg.seed + 1, 2))
    nv = arr.nvars
    rank = nv - 1
    deg_f = arr.degree
    z0 = essential_defect(arr, ga)

    obstruction = degree_count_test(arr, z0)
    if obstruction:
        return _attach(ga, FreenessVerdict(VerdictKind.NOT_FREE_DEGREE_COUNT, arr, z0, deg_f, dims=ga.report,
                               d_explored=0, reason=obstruction))

    notes: List[str] = []
    n_cands = len(consistent_exponents([z0], nv, deg_f))
    if cfg.use_registered_basis:
        pid = registered_basis_for(arr)
        if pid is not None:
            derivs = load_basis(pid)
            try:
                cert = _certify(arr, derivs, cfg)
            except SaitoRefusal as exc:
                notes.append(f"registered basis {pid} refused at {exc.stage}: {exc.detail}")
            else:
                exps = ExponentMultiset(tuple(cert.exponents), certified=True)
                return _attach(ga, FreenessVerdict(VerdictKind.CERTIFIED_FREE, arr, z0, deg_f, exps, cert, ga.report,
                                       d_explored=0, reason="Saito determinant = c * F",
                                       basis_source=str(pid), notes=notes))

    retries = cfg.retries
    d = 0
    while d <= cfg.d_max:
        ga.extend(d)
        rep = ga.report.degrees[d]
        if rep.unstable and retries > 0:
            retries -= 1
            attempt = cfg.retries - retries
            notes.append(f"primes disagreed in degree {d}; retrying with fresh primes")
            ga = GradedAnalysis(arr, default_primes(cfg.seed + 1000 * attempt),
                                extra_primes=default_primes(cfg.seed + 1000 * attempt + 1, 2))
            d = 0
            continue
        if not rep.certified:
            return _attach(ga, FreenessVerdict(VerdictKind.UNDETERMINED, arr, z0, deg_f, dims=ga.report, d_explored=d,
                                   reason=f"degree {d} not certified (lower {rep.dim_lower}, upper {rep.dim_upper})",
                                   notes=notes))
        counts = [ga.gens.counts[e] for e in range(d + 1)]
        total = sum(counts)
        weight = sum(e * n for e, n in enumerate(counts))
        if total == rank and weight == deg_f - 1:
            derivs = [th for e in range(d + 1) for th in ga.gens.generators[e]]
            if len(derivs) == rank:
                try:
                    cert = _certify(arr, derivs, cfg)
                except SaitoRefusal as exc:
                    notes.append(f"discovered generators refused at {exc.stage}: {exc.detail}")
                else:
                    exps = ExponentMultiset(tuple(cert.exponents), certified=True)
                    return _attach(ga, FreenessVerdict(VerdictKind.CERTIFIED_FREE, arr, z0, deg_f, exps, cert, ga.report,
                                           d_explored=d, reason="Saito determinant = c * F",
                                           basis_source="discovered", notes=notes))
            else:
                notes.append(f"only {len(derivs)} of {rank} generators lifted")
        cands = consistent_exponents(ga.report.ar_dims()[: d + 1], nv, deg_f)
        if not cands:
            return _attach(ga, FreenessVerdict(VerdictKind.NOT_FREE_GRADED, arr, z0, deg_f, dims=ga.report, d_explored=d,
                                   reason=_obstruction_text(ga.report, d, nv, deg_f), notes=notes,
                                   candidates_exhausted=n_cands))
        n_cands = len(cands)
        d += 1
    return _attach(ga, FreenessVerdict(VerdictKind.UNDETERMINED, arr, z0, deg_f, dims=ga.report, d_explored=cfg.d_max,
                           reason=f"no verdict through degree {cfg.d_max}", notes=notes))


def _attach(ga: GradedAnalysis, verdict: FreenessVerdict) -> FreenessVerdict:
    verdict.analysis = ga
    return verdict


def _obstruction_text(report: DimReport, d: int, nv: int, deg_f: int) -> str:
    dims = report.ar_dims()[: d + 1]
    counts = forced_low_exponents(dims, nv)
    shown = ", ".join(f"AR_{e}={v}" for e, v in enumerate(dims))
    if counts is None:
        return f"certified {shown}: no free module has these dimensions"
    low = sum(counts)
    if low > nv - 1:
        return f"certified {shown} force {low} minimal generators, more than the rank {nv - 1}"
    rem_parts = nv - 1 - low
    rem_sum = deg_f - 1 - sum(e * n for e, n in enumerate(counts))
    return (f"certified {shown} force {low} exponents <= {d}; the remaining {rem_parts} must be >= {d + 1} "
            f"and sum to {rem_sum}: impossible")


# --------------------------------------------------------------------------
# Experimental evidence (no verdict)
# --------------------------------------------------------------------------


@dataclass
class EvidenceReport:
    arrangement: Arrangement
    dims: DimReport
    conjecture: Optional[Tuple[int, ...]]
    consistency: Optional[ShapeResult]
    budget_note: str = ""

    def as_dict(self) -> dict:
        out = {"arrangement": list(self.arrangement.ids), "dims": self.dims.as_dict(),
               "certified_through": self.dims.certified_through(), "verdict": None,
               "budget_note": self.budget_note}
        if self.conjecture is not None:
            c = self.consistency
            out["conjecture"] = list(self.conjecture)
            out["consistent"] = c.consistent
            if not c.consistent:
                out["witness"] = {"degree": c.witness_degree, "predicted": c.expected, "certified": c.observed}
        return out


def parse_exponents(text: str) -> Tuple[int, ...]:
    """'1^9,4^5' -> (1,)*9 + (4,)*5."""
    out: List[int] = []
    for part in text.replace("(", "").replace(")", "").split(","):
        part = part.strip()
        if not part:
            continue
        if "^" in part:
            v, n = part.split("^")
            out.extend([int(v)] * int(n))
        else:
            out.append(int(part))
    return tuple(sorted(out))


def experimental_scan(arr: Arrangement, d_max: int = 4, conjecture: Optional[Sequence[int]] = None,
                      seed: int = 0, degree_budget: int = 6) -> EvidenceReport:
    """Certified graded data plus a comparison with a conjectured free shape; never a verdict."""
    ga = GradedAnalysis(arr, default_primes(seed), extra_primes=default_primes(seed + 1, 2))
    note = ""
    top = min(d_max, degree_budget)
    if top < d_max:
        note = f"degree budget {degree_budget} reached before {d_max}"
    ga.extend(top)
    if ga.report.certified_through() < top:
        note = (note + "; " if note else "") + f"certified only through degree {ga.report.certified_through()}"
    cons = None
    if conjecture is not None:
        cons = shape_consistency(ga.report, Free(tuple(conjecture)), through=ga.report.certified_through())
    return EvidenceReport(arr, ga.report, tuple(conjecture) if conjecture else None, cons, note)

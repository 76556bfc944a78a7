"""Certificate and report files (canonical JSON, exact numbers only)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple, Union

from . import __version__
from .analyzer import FreenessVerdict, regularity
from .bases import derivations_from_json, derivations_to_json
from .model import Arrangement, Derivation, MatrixShape, arrangement
from .saito import PitConfig, SaitoCertificate, SaitoRefusal, certify_free

CERT_FORMAT = "detfree-certificate/1"
REPORT_FORMAT = "detfree-report/1"


class CertificateFormatError(ValueError):
    pass


def _check_exact(obj, path="$"):
    if isinstance(obj, float):
        raise TypeError(f"float at {path}; persisted numbers must be exact")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_exact(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_exact(v, f"{path}[{i}]")


def canonical_json(obj) -> str:
    """UTF-8, sorted keys, LF line ends, no floats."""
    _check_exact(obj)
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def write_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(obj))


def rational_str(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# --------------------------------------------------------------------------
# Certificates
# --------------------------------------------------------------------------


def certificate_to_dict(cert: SaitoCertificate) -> dict:
    arr = cert.arrangement
    shape = arr.shape
    return {
        "format": CERT_FORMAT,
        "shape": [shape.m, shape.n],
        "variables": list(shape.order.names),
        "arrangement": list(arr.ids),
        "derivations": derivations_to_json(cert.derivations, shape),
        "exponents": list(cert.exponents),
        "c": rational_str(cert.c),
        "abs_c": rational_str(cert.abs_c),
        "mode": cert.mode,
        "evidence": {k: (v if isinstance(v, (int, str, list)) else str(v)) for k, v in cert.evidence.items()},
        "created_by": {"tool": "detfree", "version": __version__},
    }


def certificate_from_dict(doc: dict) -> Tuple[Arrangement, List[Derivation], dict]:
    if doc.get("format") != CERT_FORMAT:
        raise CertificateFormatError(f"unsupported certificate format {doc.get('format')!r}")
    try:
        shape, derivs = derivations_from_json(doc)
        arr = arrangement(doc["arrangement"], shape)
    except (KeyError, TypeError) as exc:
        raise CertificateFormatError(f"malformed certificate: {exc}") from exc
    return arr, derivs, doc


def write_certificate(cert: SaitoCertificate, path: str) -> dict:
    doc = certificate_to_dict(cert)
    write_json(doc, path)
    return doc


def read_certificate(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class VerifyResult:
    ok: bool
    stage: str
    detail: str
    c: Optional[Fraction] = None

    def __bool__(self) -> bool:
        return self.ok


def verify_certificate(doc: Union[str, dict], seed: Optional[int] = None, mode: Optional[str] = None) -> VerifyResult:
    """Re-run tangency, degree bookkeeping and the determinant test from the file alone.

    Fresh randomness is drawn unless ``seed`` is given.
    """
    if isinstance(doc, str):
        doc = read_certificate(doc)
    try:
        arr, derivs, doc = certificate_from_dict(doc)
    except (CertificateFormatError, ValueError) as exc:
        return VerifyResult(False, "format", str(exc))
    claimed = sorted(doc.get("exponents", []))
    if claimed != sorted(th.degree for th in derivs):
        return VerifyResult(False, "exponents", f"claimed {claimed} differ from the derivation degrees")
    if seed is None:
        seed = int.from_bytes(os.urandom(8), "little")
    mode = mode or doc.get("mode", "pit")
    try:
        cert = certify_free(arr, derivs, mode=mode, cfg=PitConfig(seed=seed))
    except SaitoRefusal as exc:
        return VerifyResult(False, exc.stage, exc.detail)
    try:
        stored = Fraction(doc["c"])
    except (KeyError, ValueError):
        return VerifyResult(False, "determinant", "certificate has no readable constant c")
    if cert.c != stored:
        return VerifyResult(False, "determinant", f"recomputed c = {rational_str(cert.c)} but file says {doc['c']}",
                            cert.c)
    return VerifyResult(True, "ok", f"det = {rational_str(cert.c)} * F ({mode})", cert.c)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def verdict_to_dict(v: FreenessVerdict) -> dict:
    out = {
        "arrangement": list(v.arrangement.ids),
        "shape": str(v.arrangement.shape),
        "verdict": v.kind.value,
        "z0": v.z0,
        "deg_F": v.deg_f,
        "reason": v.reason,
        "d_explored": v.d_explored,
        "dims": v.dims.as_dict() if v.dims else None,
        "notes": list(v.notes),
    }
    if v.is_free:
        out["exponents"] = list(v.exponents.values)
        out["c"] = rational_str(v.certificate.c)
        out["abs_c"] = rational_str(v.certificate.abs_c)
        out["basis_source"] = v.basis_source
        out["mode"] = v.certificate.mode
        out["evidence"] = certificate_to_dict(v.certificate)["evidence"]
        out["regularity"] = regularity(v).value
    if v.kind.is_not_free and v.candidates_exhausted:
        out["candidates_exhausted"] = v.candidates_exhausted
    return out


def report_document(verdicts: Iterable[FreenessVerdict], config: dict, timings_ms: Optional[List[int]] = None) -> dict:
    doc = {"format": REPORT_FORMAT, "config": config, "verdicts": [verdict_to_dict(v) for v in verdicts]}
    if timings_ms is not None:
        doc["timings_ms"] = list(timings_ms)
    return doc


def verdict_table(v: FreenessVerdict) -> str:
    lines = [f"arrangement  {list(v.arrangement.ids)} ({v.arrangement.shape}, deg F = {v.deg_f})",
             f"verdict      {v.kind.value}", f"z0           {v.z0}"]
    if v.dims:
        lines.append("dim AR_d     " + ", ".join(
            f"{r.degree}:{r.dim_ar}{'' if r.certified else '?'}" for r in v.dims.degrees))
    if v.is_free:
        lines.append(f"exponents    {v.exponents.compact()}")
        lines.append(f"c            {rational_str(v.certificate.c)} (|c| = {rational_str(v.certificate.abs_c)}, "
                     f"{v.certificate.mode}, basis {v.basis_source})")
        eb = v.certificate.evidence.get("error_bound_log2")
        if eb is not None:
            lines.append(f"error bound  2^{eb}")
        lines.append(f"regularity   {regularity(v).value}")
    if v.reason:
        lines.append(f"reason       {v.reason}")
    for n in v.notes:
        lines.append(f"note         {n}")
    return "\n".join(lines)

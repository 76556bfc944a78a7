"""Command line interface.

Exit codes: 0 free / pass, 10 not free / fail, 20 undetermined, >= 64 errors.
Every flag has a ``DETFREE_<FLAG>`` environment default; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from typing import List, Optional

from . import __version__
from .analyzer import AnalyzeConfig, VerdictKind, analyze, experimental_scan, parse_exponents
from .bases import BasisId, UnknownBasisError, derivations_from_json, load_basis, registered_basis_for
from .crosscheck import emit_crosscheck
from .io import (canonical_json, certificate_to_dict, report_document, verdict_table, verdict_to_dict,
                 verify_certificate, write_certificate, write_json)
from .model import DEFAULT_SHAPE, MatrixShape, NonReducedError, arrangement, minor
from .saito import PitConfig, SaitoRefusal, certify_free
from .syzygy import default_primes

EXIT_FREE = 0
EXIT_NOT_FREE = 10
EXIT_UNDETERMINED = 20
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

CONJECTURED_FULL = "1^9,4^5"


class UsageError(Exception):
    pass


def parse_factors(text: str) -> List[int]:
    """'1,2,3', '1..10', '6-10' or mixtures such as '1..4,7'."""
    out: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        for sep in ("..", "-"):
            if sep in part:
                a, b = part.split(sep)
                out.extend(range(int(a), int(b) + 1))
                break
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty factor list")
    return out


def _env(name: str, default=None, cast=str):
    raw = os.environ.get(f"DETFREE_{name}")
    if raw is None or raw == "":
        return default
    return cast(raw)


def _shape(text: str) -> MatrixShape:
    try:
        return MatrixShape.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _arr(args):
    if not args.factors:
        raise UsageError("--factors is required")
    try:
        return arrangement(parse_factors(args.factors), _shape(args.shape))
    except NonReducedError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _common(p: argparse.ArgumentParser, factors: bool = True) -> None:
    p.add_argument("--shape", default=_env("SHAPE", "3x5"), help="matrix shape MxN (default 3x5)")
    if factors:
        p.add_argument("--factors", default=_env("FACTORS"), help="minor labels, e.g. 1,2,3,4,5 or 1..10")
    p.add_argument("--max-degree", type=int, default=_env("MAX_DEGREE", 4, int), help="graded search depth")
    p.add_argument("--primes", type=int, default=_env("PRIMES", 2, int), help="number of primes")
    p.add_argument("--prime-bits", type=int, default=_env("PRIME_BITS", 62, int))
    p.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    p.add_argument("--threads", type=int, default=_env("THREADS", os.cpu_count() or 1, int))
    p.add_argument("--mode", choices=["pit", "exact"], default=_env("MODE", "pit"))
    p.add_argument("--format", choices=["table", "json"], default=_env("FORMAT", "table"))
    p.add_argument("--experimental", action="store_true", default=_env("EXPERIMENTAL", False, _truthy))


def _truthy(s: str) -> bool:
    return s.lower() in ("1", "true", "yes", "on")


def _pit(args) -> PitConfig:
    if args.primes < 2:
        raise UsageError("--primes must be at least 2")
    if not 32 <= args.prime_bits <= 63:
        raise UsageError("--prime-bits must lie in 32..63")
    return PitConfig(primes=args.primes, seed=args.seed, prime_bits=args.prime_bits)


def _analyze_config(args) -> AnalyzeConfig:
    primes = default_primes(args.seed, args.primes, args.prime_bits)
    return AnalyzeConfig(d_max=args.max_degree, primes=primes, seed=args.seed, mode=args.mode, pit=_pit(args),
                         use_registered_basis=not getattr(args, "no_registered_basis", False))


def _config_echo(args) -> dict:
    keys = ("shape", "factors", "max_degree", "primes", "prime_bits", "seed", "mode", "experimental")
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def _emit(args, doc: dict, table: str) -> None:
    if args.format == "json":
        sys.stdout.write(canonical_json(doc))
    else:
        print(table)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_minors(args) -> int:
    shape = _shape(args.shape)
    if args.format == "json":
        doc = {"shape": str(shape), "minors": [
            {"id": i + 1, "columns": list(cols), "polynomial": str(minor(i + 1, shape))}
            for i, cols in enumerate(shape.column_sets)]}
        sys.stdout.write(canonical_json(doc))
    else:
        for i, cols in enumerate(shape.column_sets):
            print(f"f{i + 1} {{{','.join(map(str, cols))}}} = {minor(i + 1, shape)}")
    return 0


def _verdict_exit(kind: VerdictKind) -> int:
    if kind is VerdictKind.CERTIFIED_FREE:
        return EXIT_FREE
    if kind.is_not_free:
        return EXIT_NOT_FREE
    return EXIT_UNDETERMINED


def cmd_analyze(args) -> int:
    arr = _arr(args)
    if args.experimental:
        conj = parse_exponents(args.conjecture) if args.conjecture else (
            parse_exponents(CONJECTURED_FULL) if arr.ids == tuple(range(1, 11)) and arr.shape == DEFAULT_SHAPE
            else None)
        ev = experimental_scan(arr, args.max_degree, conj, seed=args.seed)
        doc = {"format": "detfree-evidence/1", "config": _config_echo(args), **ev.as_dict()}
        lines = [f"arrangement  {list(arr.ids)} (experimental: data only, no verdict)",
                 "dim AR_d     " + ", ".join(f"{r.degree}:{r.dim_ar}{'' if r.certified else '?'}"
                                             for r in ev.dims.degrees)]
        if conj is not None:
            c = ev.consistency
            lines.append(f"conjecture   {args.conjecture or CONJECTURED_FULL}: "
                         + ("consistent with certified data" if c.consistent else
                            f"inconsistent at degree {c.witness_degree} "
                            f"(predicts {c.expected}, certified {c.observed})"))
        if ev.budget_note:
            lines.append(f"budget       {ev.budget_note}")
        _emit(args, doc, "\n".join(lines))
        if args.output:
            write_json(doc, args.output)
        return EXIT_UNDETERMINED
    t0 = time.perf_counter()
    v = analyze(arr, _analyze_config(args))
    ms = int((time.perf_counter() - t0) * 1000)
    doc = report_document([v], _config_echo(args), [ms])
    _emit(args, doc, verdict_table(v))
    if args.output:
        write_json(doc, args.output)
    if args.certify:
        if not v.is_free:
            print(f"no certificate written: verdict is {v.kind.value}", file=sys.stderr)
        else:
            write_certificate(v.certificate, args.certify)
            if args.format != "json":
                print(f"certificate  {args.certify}")
    return _verdict_exit(v.kind)


def cmd_certify(args) -> int:
    arr = _arr(args)
    if args.basis_file:
        with open(args.basis_file, encoding="utf-8") as fh:
            _, derivs = derivations_from_json(json.load(fh))
        source = args.basis_file
    else:
        pid = BasisId.parse(args.basis) if args.basis else registered_basis_for(arr)
        if pid is None:
            raise UsageError("no registered basis for this arrangement; give --basis or --basis-file")
        derivs = load_basis(pid)
        source = str(pid)
    try:
        cert = certify_free(arr, derivs, mode=args.mode, cfg=_pit(args))
    except SaitoRefusal as exc:
        doc = {"arrangement": list(arr.ids), "basis": source, "certified": False, "stage": exc.stage,
               "detail": exc.detail}
        _emit(args, doc, f"refused at {exc.stage}: {exc.detail}")
        return EXIT_NOT_FREE
    doc = certificate_to_dict(cert)
    _emit(args, doc, f"certified: det = {cert.c} * F (|c| = {cert.abs_c}, {cert.mode}, basis {source})\n"
                     f"exponents {cert.exponents}")
    if args.certify:
        write_certificate(cert, args.certify)
    return EXIT_FREE


def cmd_verify(args) -> int:
    seed = args.seed if args.seed_given else None
    res = verify_certificate(args.path, seed=seed, mode=args.verify_mode)
    doc = {"path": args.path, "ok": res.ok, "stage": res.stage, "detail": res.detail}
    _emit(args, doc, ("PASS " if res.ok else f"FAIL at {res.stage}: ") + res.detail)
    return EXIT_FREE if res.ok else EXIT_NOT_FREE


def cmd_survey(args) -> int:
    from .survey import SurveyConfig, run_survey
    family = None
    if args.family:
        family = [tuple(parse_factors(f)) for f in args.family.split(";") if f.strip()]
    if args.k is None and family is None:
        raise UsageError("give --k or --family")
    if args.k is not None and args.k >= 5 and not args.experimental:
        raise UsageError("surveys with k >= 5 need --experimental")
    cfg = SurveyConfig(k=args.k, family=family, d_max=args.max_degree, seed=args.seed, threads=args.threads,
                       quick=args.quick, shape=_shape(args.shape), checkpoint=args.checkpoint)

    def progress(e):
        if args.verbose:
            print(f"  {list(e.ids)} {e.kind} {e.ar_dims} {e.seconds:.1f}s", file=sys.stderr)

    rep = run_survey(cfg, progress)
    doc = rep.as_dict()
    if args.output:
        write_json(doc, args.output)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.signature_csv())
    if args.format == "json":
        sys.stdout.write(canonical_json(doc))
    else:
        print(rep.summary())
        print(rep.signature_csv().rstrip())
        fp = rep.fingerprint_class()
        if fp:
            print("fingerprint class (derived data): " + " ".join("{" + ",".join(map(str, e.ids)) + "}" for e in fp))
    return 0 if not rep.errors else EXIT_INTERNAL


def cmd_reproduce(args) -> int:
    from .survey import reproduction_suite

    def show(item):
        if args.format != "json":
            print(item.line(), flush=True)

    items = reproduction_suite(seed=args.seed, include_k4=args.include_k4, quick_k4=args.quick,
                                     threads=args.threads, emit=show)
    doc = {"format": "detfree-checklist/1", "seed": args.seed, "items": [i.as_dict() for i in items],
           "passed": all(i.passed for i in items)}
    if args.format == "json":
        sys.stdout.write(canonical_json(doc))
    else:
        print(f"{sum(i.passed for i in items)}/{len(items)} checks passed")
    if args.output:
        write_json(doc, args.output)
    return 0 if doc["passed"] else EXIT_NOT_FREE


def cmd_emit_crosscheck(args) -> int:
    arr = _arr(args)
    derivs = None
    pid = registered_basis_for(arr)
    if args.with_basis and pid is not None:
        derivs = load_basis(pid)
    emit_crosscheck(arr, args.output, derivs)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="detfree", description="Freeness of determinantal arrangements.")
    ap.add_argument("--version", action="version", version=f"detfree {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minors", help="print the labeled maximal minors")
    p.add_argument("--shape", default=_env("SHAPE", "3x5"))
    p.add_argument("--format", choices=["table", "json"], default=_env("FORMAT", "table"))
    p.set_defaults(func=cmd_minors)

    p = sub.add_parser("analyze", help="freeness verdict for one arrangement")
    _common(p)
    p.add_argument("--certify", metavar="PATH", help="write the Saito certificate here when free")
    p.add_argument("--output", metavar="PATH", help="write the JSON report here")
    p.add_argument("--no-registered-basis", action="store_true", help="always search for generators")
    p.add_argument("--conjecture", help="exponents to compare against in --experimental mode, e.g. 1^9,4^5")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="run Saito's criterion on a given basis")
    _common(p)
    p.add_argument("--basis", help="registered basis id, e.g. ThmA(5) or Mid(7)")
    p.add_argument("--basis-file", help="basis JSON file (detfree-basis/1)")
    p.add_argument("--certify", metavar="PATH", help="write the certificate here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="re-verify a certificate file")
    p.add_argument("path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", dest="verify_mode", choices=["pit", "exact"], default=None)
    p.add_argument("--format", choices=["table", "json"], default=_env("FORMAT", "table"))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("survey", help="analyze every k-subset of the minors")
    _common(p, factors=False)
    p.add_argument("--k", type=int)
    p.add_argument("--family", help="explicit arrangements separated by ';'")
    p.add_argument("--quick", action="store_true", help="stop at degree 2")
    p.add_argument("--checkpoint", help="resumable JSONL checkpoint")
    p.add_argument("--output", help="JSON report path")
    p.add_argument("--csv", help="signature table path")
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("reproduce", help="run the reproduction checklist")
    _common(p, factors=False)
    p.add_argument("--include-k4", action="store_true", help="also run the 4-subset survey")
    p.add_argument("--quick", action="store_true", help="degree <= 2 for the 4-subset survey")
    p.add_argument("--output", help="JSON checklist path")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("emit-crosscheck", help="write a Singular script for independent validation")
    p.add_argument("--shape", default=_env("SHAPE", "3x5"))
    p.add_argument("--factors", default=_env("FACTORS"))
    p.add_argument("--output", required=True)
    p.add_argument("--with-basis", action="store_true", help="include the Saito matrix of the registered basis")
    p.set_defaults(func=cmd_emit_crosscheck)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    if args.command == "verify":
        args.seed_given = args.seed is not None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, UnknownBasisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - reported, not swallowed silently
        logging.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

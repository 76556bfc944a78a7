"""Derivation bases shipped as data, plus their column-permutation transports.

File format (``detfree-basis/1``): a JSON object with ``shape``,
``variables``, ``arrangement`` (minor labels) and ``derivations``; each
derivation holds ``terms``, a list of ``[variable index, exponent vector,
numerator, denominator]`` entries meaning ``num/den * x^exps * d/dx_var``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Tuple

from .algebra import Polynomial
from .model import (DEFAULT_SHAPE, Arrangement, Derivation, MatrixShape, TangencyFailure, arrangement,
                    column_permutation_vars, label_colex, tangency)


class UnknownBasisError(KeyError):
    pass


@dataclass(frozen=True)
class BasisId:
    family: str  # "ThmA" or "Mid"
    index: int

    def __str__(self) -> str:
        return f"{self.family}({self.index})"

    @classmethod
    def parse(cls, text: str) -> "BasisId":
        fam, rest = text.split("(")
        return cls(fam.strip(), int(rest.rstrip(")")))


def derivations_from_json(doc: dict) -> Tuple[MatrixShape, List[Derivation]]:
    shape = MatrixShape(*doc["shape"])
    order = shape.order
    if list(order.names) != list(doc["variables"]):
        raise ValueError("variable order in file does not match the shape")
    out = []
    for d in doc["derivations"]:
        coeffs: Dict[int, Dict[int, object]] = {}
        for var, exps, num, den in d["terms"]:
            c = Fraction(int(num), int(den))
            bucket = coeffs.setdefault(int(var), {})
            k = order.pack(exps)
            bucket[k] = bucket.get(k, 0) + c
        polys = {v: Polynomial(order, t) for v, t in coeffs.items()}
        out.append(Derivation.from_dict(order, polys, name=d.get("name", "")))
    return shape, out


def derivations_to_json(derivs: List[Derivation], shape: MatrixShape) -> List[dict]:
    out = []
    order = shape.order
    for th in derivs:
        entries = []
        for u, a in enumerate(th.coefficients):
            for k, c in a.terms.items():
                c = Fraction(c)
                entries.append([u, list(order.unpack(k)), c.numerator, c.denominator])
        out.append({"name": th.name, "terms": entries})
    return out


def _load(fname: str) -> Tuple[List[int], List[Derivation]]:
    text = resources.files("detfree").joinpath("data", fname).read_text()
    doc = json.loads(text)
    _, derivs = derivations_from_json(doc)
    return doc["arrangement"], derivs


# The transcribed ThmA(5) basis is for f_j = f5 (columns 1,2,5).  The other
# f_j (j = 6..10) have columns {a,b,5} with {a,b} in {1,2,3,4}; a permutation
# of columns 1..4 sending {1,2} to {a,b} fixes {f1,..,f4} and sends f5 to f_j.
def _thm_a_column_map(j: int) -> Dict[int, int]:
    cols = DEFAULT_SHAPE.column_sets[j - 1]
    a, b = cols[0], cols[1]
    rest = [c for c in (1, 2, 3, 4) if c not in (a, b)]
    return {1: a, 2: b, 3: rest[0], 4: rest[1], 5: 5}


def load_basis(pid) -> List[Derivation]:
    """The 14 derivations of a registered basis.

    ``ThmA(5)`` and ``Mid(7)`` are transcriptions; ``ThmA(j)`` for j = 6..10
    is the image of ``ThmA(5)`` under a column permutation.
    """
    if isinstance(pid, str):
        pid = BasisId.parse(pid)
    if pid.family == "ThmA" and 5 <= pid.index <= 10:
        _, derivs = _load("thmA_5.json")
        if pid.index == 5:
            return derivs
        perm = column_permutation_vars(DEFAULT_SHAPE, _thm_a_column_map(pid.index))
        return [th.rename_variables(perm) for th in derivs]
    if pid.family == "Mid" and pid.index == 7:
        return _load("mid_7.json")[1]
    raise UnknownBasisError(f"no registered basis {pid}")


def basis_arrangement(pid) -> Arrangement:
    if isinstance(pid, str):
        pid = BasisId.parse(pid)
    if pid.family == "ThmA":
        return arrangement([1, 2, 3, 4, pid.index])
    if pid.family == "Mid":
        return arrangement([1, 2, 3, 4, 5, pid.index])
    raise UnknownBasisError(str(pid))


def registered_basis_for(arr: Arrangement):
    """BasisId registered for this arrangement, if any."""
    if arr.shape != DEFAULT_SHAPE:
        return None
    ids = arr.ids
    if len(ids) == 5 and ids[:4] == (1, 2, 3, 4) and 5 <= ids[4] <= 10:
        return BasisId("ThmA", ids[4])
    if ids == (1, 2, 3, 4, 5, 7):
        return BasisId("Mid", 7)
    return None


@dataclass
class BasisCheck:
    basis: BasisId
    ok: bool
    failures: List[Tuple[str, TangencyFailure]]

    def describe(self) -> str:
        if self.ok:
            return f"{self.basis}: all 14 derivations tangent"
        return "; ".join(f"{self.basis} {name}: {fail}" for name, fail in self.failures)


def verify_basis(pid) -> BasisCheck:
    """Exact tangency of every transcribed derivation; reports offending entries."""
    if isinstance(pid, str):
        pid = BasisId.parse(pid)
    arr = basis_arrangement(pid)
    failures = []
    for th in load_basis(pid):
        res = tangency(th, arr)
        if isinstance(res, TangencyFailure):
            failures.append((th.name, res))
    return BasisCheck(pid, not failures, failures)

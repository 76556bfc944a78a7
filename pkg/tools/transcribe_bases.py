"""Regenerate src/detfree/data/*.json from the hand transcriptions below.

Each derivation is written as {differentiated variable: coefficient}.  The
JSON files store (variable index, exponent vector, numerator, denominator)
entries; the human-readable text is kept alongside for review.
"""

import json
import pathlib

from detfree.algebra import Polynomial, VariableOrder

ORDER = VariableOrder.generic(3, 5)


def _row_sum(src, dst, cols=range(1, 6)):
    return {f"{dst}{i}": f"{src}{i}" for i in cols}


def _scaling(weights):
    return {v: f"{w}*{v}" for v, w in weights.items()}


THM_A_5 = [
    _row_sum("z", "x"),
    _row_sum("z", "y"),
    _row_sum("y", "x"),
    _row_sum("y", "z"),
    _row_sum("x", "y"),
    _row_sum("x", "z"),
    {"x5": "x2", "y5": "y2", "z5": "z2"},
    {"x5": "x1", "y5": "y1", "z5": "z1"},
    _scaling({**{f"y{i}": 1 for i in range(1, 6)}, **{f"z{i}": -1 for i in range(1, 6)}}),
    _scaling({"x5": 5, "y5": 5, "z1": -1, "z2": -1, "z3": -1, "z4": -1, "z5": 4}),
    _scaling({"x4": 5, "y4": 5, "z1": -3, "z2": -3, "z3": -3, "z4": 2, "z5": -3}),
    _scaling({"x3": 5, "y1": -3, "y2": -3, "y3": 2, "y4": -3, "y5": -3, "z3": 5}),
    _scaling({"x1": 5, "y1": 5, "z1": 1, "z2": -4, "z3": -4, "z4": -4, "z5": -4}),
    _scaling({"x2": 5, "y1": -3, "y2": 2, "y3": -3, "y4": -3, "y5": -3,
              "z1": -1, "z2": 4, "z3": -1, "z4": -1, "z5": -1}),
]

MID_7 = [
    _row_sum("z", "x"),
    _row_sum("z", "y"),
    _row_sum("y", "x"),
    _row_sum("y", "z"),
    _scaling({"x5": 3, "y5": 3, "z1": -1, "z2": -1, "z3": -1, "z4": -1, "z5": 2}),
    _scaling({"x4": 2, "y4": 2, "z1": -1, "z2": -1, "z3": -1, "z4": 1, "z5": -1}),
    _scaling({"x3": 3, "y3": 3, "z1": -2, "z2": -2, "z3": 1, "z4": -2, "z5": -2}),
    _scaling({"x2": 6, "y2": 6, "z1": -5, "z2": 1, "z3": -5, "z4": -5, "z5": -5}),
    {"x5": "x2", "y5": "y2", "z5": "z2"},
    _scaling({"x1": 3, "y1": 3, "z1": 1, "z2": -2, "z3": -2, "z4": -2, "z5": -2}),
    _row_sum("x", "y"),
    _row_sum("x", "z"),
    _scaling({**{f"y{i}": 1 for i in range(1, 6)}, **{f"z{i}": -1 for i in range(1, 6)}}),
    {
        "x2": "3 x1 x3 y2 z2",
        "x3": "180 x1 x2 y3 z3",
        "x4": "192 x1 x2 y4 z3 - 9 x1 x3 y4 z2 + 12 x1 x3 y2 z4 - 12 x1 x2 y3 z4",
        "x5": "15 x1 x3 y5 z2 - 12 x1 x3 y2 z5",
        "y2": "3 x3 y1 y2 z2 + 60 x2 y1 y2 z3 - 60 x1 y2^2 z3",
        "y3": "3 x3 y1 y3 z2 - 3 x1 y3^2 z2 - 120 x3 y1 y2 z3 + 180 x2 y1 y3 z3 + 120 x1 y2 y3 z3",
        "y4": ("12 x4 y1 y3 z2 - 9 x3 y1 y4 z2 - 12 x1 y3 y4 z2 - 132 x4 y1 y2 z3 + 192 x2 y1 y4 z3"
               " + 132 x1 y2 y4 z3 + 12 x3 y1 y2 z4 - 12 x2 y1 y3 z4"),
        "y5": ("15 x3 y1 y5 z2 - 12 x5 y1 y3 z2 + 12 x1 y3 y5 z2 + 60 x2 y1 y5 z3 - 60 x1 y2 y5 z3"
               " - 12 x3 y1 y2 z5 + 12 x2 y1 y3 z5 - 12 x1 y2 y3 z5"),
        "z2": ("4 x1 y3 z2^2 - x3 y1 z2^2 + 4 x3 y2 z1 z2 - 4 x2 y3 z1 z2 + 176 x2 y2 z1 z3"
               " - 204 x2 y1 z2 z3 + 28 x1 y2 z2 z3"),
        "z3": ("204 x2 y3 z1 z3 - 28 x3 y2 z1 z3 - 24 x2 y1 z3^2 + 28 x1 y2 z3^2 + 181 x1 y3 z2 z3"
               " - 181 x3 y1 z2 z3"),
        "z4": ("8 x4 y3 z1 z2 - 8 x3 y4 z1 z2 - 40 x4 y2 z1 z3 + 216 x2 y4 z1 z3 - 180 x4 y1 z2 z3"
               " + 180 x1 y4 z2 z3 + 12 x3 y2 z1 z4 - 12 x2 y3 z1 z4 - x3 y1 z2 z4 - 8 x1 y3 z2 z4"
               " - 24 x2 y1 z3 z4 + 40 x1 y2 z3 z4"),
        "z5": ("16 x3 y5 z1 z2 - 16 x5 y3 z1 z2 - 16 x5 y2 z1 z3 + 192 x2 y5 z1 z3 - 72 x5 y1 z2 z3"
               " + 12 x1 y5 z2 z3 - 12 x3 y2 z1 z5 + 12 x2 y3 z1 z5 - x3 y1 z2 z5 + 4 x1 y3 z2 z5"
               " - 132 x2 y1 z3 z5 + 16 x1 y2 z3 z5"),
    },
]


def encode(derivs, arrangement, title):
    out = {"format": "detfree-basis/1", "shape": [3, 5], "variables": list(ORDER.names),
           "arrangement": arrangement, "title": title, "derivations": []}
    for i, spec in enumerate(derivs, start=1):
        entries = []
        for var, text in spec.items():
            poly = Polynomial.parse(ORDER, text)
            for key, c in poly.terms.items():
                entries.append([ORDER.index(var), list(ORDER.unpack(key)), int(c), 1])
        entries.sort(key=lambda e: (e[0], [-x for x in e[1]]))
        out["derivations"].append({"name": f"theta{i}", "source": spec, "terms": entries})
    return out


def main():
    here = pathlib.Path(__file__).resolve().parent.parent / "src" / "detfree" / "data"
    for fname, derivs, arr, title in [
        ("thmA_5.json", THM_A_5, [1, 2, 3, 4, 5], "degree-1 basis for f1 f2 f3 f4 f5"),
        ("mid_7.json", MID_7, [1, 2, 3, 4, 5, 7], "basis for f1 f2 f3 f4 f5 f7 (one generator of degree 4)"),
    ]:
        doc = encode(derivs, arr, title)
        (here / fname).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

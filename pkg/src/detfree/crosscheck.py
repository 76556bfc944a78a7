"""Scripts for an external computer algebra system (Singular); written, never run."""

from __future__ import annotations

from typing import Optional, Sequence

from .model import Arrangement, Derivation


def singular_script(arr: Arrangement, derivs: Optional[Sequence[Derivation]] = None) -> str:
    order = arr.shape.order
    names = ",".join(order.names)
    lines = [
        f"// cross-check for arrangement {list(arr.ids)} on the generic {arr.shape} matrix",
        f"ring R = 0,({names}),dp;",
    ]
    fnames = []
    for label, f in zip(arr.labels, arr.factors):
        fname = f"f{label.id}"
        fnames.append(fname)
        lines.append(f"poly {fname} = {f};")
    lines += [
        f"poly F = {'*'.join(fnames)};",
        "ideal J = jacob(F);",
        "module AR = syz(J);",
        "// minimal generators of the Jacobian syzygies and their degrees",
        "module ARm = minbase(AR);",
        "intvec degs; int i;",
        "for (i = 1; i <= ncols(ARm); i++) { degs[i] = deg(ARm[i]); }",
        'print("generator degrees of AR:"); print(degs);',
        "// Hilbert series of the Milnor algebra S/J",
        "hilb(std(J));",
    ]
    lines += [
        "resolution res = mres(J, 0);",
        'print(betti(res), "betti");',
    ]
    if derivs:
        n = order.nvars
        lines.append(f"matrix A[{n}][{n}];")
        for i, v in enumerate(order.names):
            lines.append(f"A[{i + 1}][1] = {v};")
        for j, th in enumerate(derivs, start=2):
            for i, a in enumerate(th.coefficients, start=1):
                if not a.is_zero():
                    lines.append(f"A[{i}][{j}] = {_singular_poly(a)};")
        lines += [
            "poly D = det(A);",
            'print("det(A) / F (should be a nonzero constant):");',
            "print(D / F);",
            'print("remainder (should be 0):");',
            "print(reduce(D, std(ideal(F))));",
        ]
    return "\n".join(lines) + "\n"


def _singular_poly(a) -> str:
    # Singular reads rational coefficients written as num/den
    return str(a)


def emit_crosscheck(arr: Arrangement, path: str, derivs: Optional[Sequence[Derivation]] = None) -> str:
    text = singular_script(arr, derivs)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text

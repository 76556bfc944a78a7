"""Pure-Python modular elimination kernels (fallback for the compiled core).

All inputs are reduced modulo ``p``; outputs are canonical (reduced row
echelon based), so both implementations return identical results.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

BACKEND = "python"


def _echelon(rows: List[Dict[int, int]], p: int) -> Dict[int, Dict[int, int]]:
    """Row-insertion echelon form; each pivot row is monic at its smallest column."""
    pivots: Dict[int, Dict[int, int]] = {}
    for row in rows:
        row = {c: v % p for c, v in row.items() if v % p}
        while row:
            c = min(row)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(row[c], -1, p)
                pivots[c] = {k: v * inv % p for k, v in row.items()}
                break
            f = row[c]
            for k, v in prow.items():
                nv = (row.get(k, 0) - f * v) % p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return pivots


def _reduce_fully(pivots: Dict[int, Dict[int, int]], p: int) -> None:
    """Turn an echelon form into the reduced row echelon form, in place."""
    cols = sorted(pivots)
    for c in reversed(cols):
        prow = pivots[c]
        for c2 in cols:
            if c2 >= c:
                break
            other = pivots[c2]
            f = other.get(c)
            if f:
                for k, v in prow.items():
                    nv = (other.get(k, 0) - f * v) % p
                    if nv:
                        other[k] = nv
                    else:
                        other.pop(k, None)


def nullspace_mod(nrows: int, ncols: int, rows: Sequence[int], cols: Sequence[int],
                  vals: Sequence[int], p: int) -> Tuple[List[int], List[List[int]]]:
    """Canonical nullspace basis of a sparse matrix given as COO triplets.

    Returns the free columns (ascending) and one dense vector per free
    column, with 1 at its own free column and 0 at the other free columns.
    """
    mat: List[Dict[int, int]] = [dict() for _ in range(nrows)]
    for r, c, v in zip(rows, cols, vals):
        d = mat[r]
        d[c] = d.get(c, 0) + v
    pivots = _echelon(mat, p)
    _reduce_fully(pivots, p)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for j in free:
        vec = [0] * ncols
        vec[j] = 1
        for c, prow in pivots.items():
            v = prow.get(j)
            if v:
                vec[c] = (-v) % p
        basis.append(vec)
    return free, basis


def rank_profile_mod(vectors: Sequence[Sequence[int]], p: int) -> List[int]:
    """Indices of the rows that are independent of all earlier rows."""
    pivots: Dict[int, Dict[int, int]] = {}
    keep = []
    for idx, vec in enumerate(vectors):
        row = {c: v % p for c, v in enumerate(vec) if v % p}
        while row:
            c = min(row)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(row[c], -1, p)
                pivots[c] = {k: v * inv % p for k, v in row.items()}
                keep.append(idx)
                break
            f = row[c]
            for k, v in prow.items():
                nv = (row.get(k, 0) - f * v) % p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return keep


def det_mod(matrix: Sequence[Sequence[int]], p: int) -> int:
    """Determinant of a square matrix over GF(p)."""
    m = [[v % p for v in row] for row in matrix]
    n = len(m)
    det = 1
    for c in range(n):
        piv = None
        for r in range(c, n):
            if m[r][c]:
                piv = r
                break
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        pv = m[c][c]
        det = det * pv % p
        inv = pow(pv, -1, p)
        rowc = m[c]
        for r in range(c + 1, n):
            f = m[r][c] * inv % p
            if f:
                rowr = m[r]
                for k in range(c, n):
                    rowr[k] = (rowr[k] - f * rowc[k]) % p
    return det % p

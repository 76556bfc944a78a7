# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled modular elimination kernels.

Same contract and outputs as ``_kernels_py``: results are reduced row echelon
based and therefore independent of pivot choices.  Blocks are small and
dense enough that dense uint64 storage wins over sparse dictionaries.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef extern from *:
    """
    typedef unsigned __int128 dfz_u128;
    static inline uint64_t dfz_mulmod(uint64_t a, uint64_t b, uint64_t p) {
        return (uint64_t)(((dfz_u128)a * b) % p);
    }
    static inline uint64_t dfz_submul(uint64_t x, uint64_t f, uint64_t y, uint64_t p) {
        /* (x - f*y) mod p */
        uint64_t t = (uint64_t)(((dfz_u128)f * y) % p);
        return x >= t ? x - t : x + (p - t);
    }
    """
    uint64_t dfz_mulmod(uint64_t a, uint64_t b, uint64_t p) nogil
    uint64_t dfz_submul(uint64_t x, uint64_t f, uint64_t y, uint64_t p) nogil


cdef uint64_t _inv(uint64_t a, uint64_t p) nogil:
    cdef int64_t t = 0, newt = 1, q, tmp
    cdef int64_t r = <int64_t>p, newr = <int64_t>a
    while newr != 0:
        q = r // newr
        tmp = t - q * newt
        t = newt
        newt = tmp
        tmp = r - q * newr
        r = newr
        newr = tmp
    if t < 0:
        t += <int64_t>p
    return <uint64_t>t


cdef inline uint64_t _red(object v, uint64_t p):
    return <uint64_t>(v % p)


cdef Py_ssize_t _rref(uint64_t[:, ::1] m, Py_ssize_t nrows, Py_ssize_t ncols, uint64_t p,
                      Py_ssize_t[::1] pivcol) nogil:
    """Gauss-Jordan in place; returns the rank, pivot columns in pivcol[:rank]."""
    cdef Py_ssize_t rank = 0, c, r, k, piv
    cdef uint64_t inv, f, tmp
    for c in range(ncols):
        if rank == nrows:
            break
        piv = -1
        for r in range(rank, nrows):
            if m[r, c] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(c, ncols):
                tmp = m[piv, k]
                m[piv, k] = m[rank, k]
                m[rank, k] = tmp
        inv = _inv(m[rank, c], p)
        if inv != 1:
            for k in range(c, ncols):
                if m[rank, k] != 0:
                    m[rank, k] = dfz_mulmod(m[rank, k], inv, p)
        for r in range(nrows):
            if r != rank:
                f = m[r, c]
                if f != 0:
                    for k in range(c, ncols):
                        if m[rank, k] != 0:
                            m[r, k] = dfz_submul(m[r, k], f, m[rank, k], p)
        pivcol[rank] = c
        rank += 1
    return rank


def nullspace_mod(Py_ssize_t nrows, Py_ssize_t ncols, rows, cols, vals, p_):
    """Canonical nullspace basis of a sparse matrix given as COO triplets."""
    cdef uint64_t p = p_
    cdef Py_ssize_t n = len(vals), i, r, c, j, rank
    cdef cnp.ndarray[cnp.uint64_t, ndim=2] arr = np.zeros((max(nrows, 1), max(ncols, 1)), dtype=np.uint64)
    cdef uint64_t[:, ::1] m = arr
    cdef uint64_t v
    for i in range(n):
        r = rows[i]
        c = cols[i]
        v = _red(vals[i], p)
        if v:
            m[r, c] = (m[r, c] + v) % p
    cdef cnp.ndarray[Py_ssize_t, ndim=1] piv_arr = np.empty(max(min(nrows, ncols), 1), dtype=np.intp)
    cdef Py_ssize_t[::1] pivcol = piv_arr
    with nogil:
        rank = _rref(m, nrows, ncols, p, pivcol)
    is_piv = [False] * ncols
    for i in range(rank):
        is_piv[pivcol[i]] = True
    free = [c for c in range(ncols) if not is_piv[c]]
    basis = []
    for j in free:
        vec = [0] * ncols
        vec[j] = 1
        for i in range(rank):
            v = m[i, j]
            if v:
                vec[pivcol[i]] = int(p - v)
        basis.append(vec)
    return free, basis


def rank_profile_mod(vectors, p_):
    """Indices of the rows that are independent of all earlier rows."""
    cdef uint64_t p = p_
    cdef Py_ssize_t nvec = len(vectors)
    if nvec == 0:
        return []
    cdef Py_ssize_t width = len(vectors[0]), i, k, c, npiv = 0, lead
    cdef cnp.ndarray[cnp.uint64_t, ndim=2] arr = np.zeros((nvec, max(width, 1)), dtype=np.uint64)
    cdef uint64_t[:, ::1] m = arr
    for i in range(nvec):
        vec = vectors[i]
        for k in range(width):
            x = vec[k]
            if x:
                m[i, k] = _red(x, p)
    cdef cnp.ndarray[Py_ssize_t, ndim=1] pc_arr = np.empty(max(min(nvec, width), 1), dtype=np.intp)
    cdef cnp.ndarray[Py_ssize_t, ndim=1] pr_arr = np.empty(max(min(nvec, width), 1), dtype=np.intp)
    cdef Py_ssize_t[::1] pc = pc_arr
    cdef Py_ssize_t[::1] pr = pr_arr
    cdef uint64_t f, inv
    keep = []
    for i in range(nvec):
        with nogil:
            for k in range(npiv):
                c = pc[k]
                f = m[i, c]
                if f != 0:
                    for lead in range(width):
                        if m[pr[k], lead] != 0:
                            m[i, lead] = dfz_submul(m[i, lead], f, m[pr[k], lead], p)
            lead = -1
            for c in range(width):
                if m[i, c] != 0:
                    lead = c
                    break
            if lead >= 0:
                inv = _inv(m[i, lead], p)
                for c in range(lead, width):
                    if m[i, c] != 0:
                        m[i, c] = dfz_mulmod(m[i, c], inv, p)
                pc[npiv] = lead
                pr[npiv] = i
                npiv += 1
        if lead >= 0:
            keep.append(i)
        if npiv == width:
            break
    return keep


def det_mod(matrix, p_):
    """Determinant of a square matrix over GF(p)."""
    cdef uint64_t p = p_
    cdef Py_ssize_t n = len(matrix), r, c, k, piv
    if n == 0:
        return 1
    cdef cnp.ndarray[cnp.uint64_t, ndim=2] arr = np.zeros((n, n), dtype=np.uint64)
    cdef uint64_t[:, ::1] m = arr
    for r in range(n):
        row = matrix[r]
        for c in range(n):
            x = row[c]
            if x:
                m[r, c] = _red(x, p)
    cdef uint64_t det = 1, inv, f, tmp
    cdef bint neg = False
    with nogil:
        for c in range(n):
            piv = -1
            for r in range(c, n):
                if m[r, c] != 0:
                    piv = r
                    break
            if piv < 0:
                det = 0
                break
            if piv != c:
                for k in range(c, n):
                    tmp = m[piv, k]
                    m[piv, k] = m[c, k]
                    m[c, k] = tmp
                neg = not neg
            det = dfz_mulmod(det, m[c, c], p)
            inv = _inv(m[c, c], p)
            for r in range(c + 1, n):
                f = m[r, c]
                if f != 0:
                    f = dfz_mulmod(f, inv, p)
                    for k in range(c, n):
                        m[r, k] = dfz_submul(m[r, k], f, m[c, k], p)
    if neg and det:
        det = p - det
    return int(det)

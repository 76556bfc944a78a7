"""Exact coefficient arithmetic and sparse multivariate polynomials.

Monomials are packed into Python integers: byte ``i`` holds the exponent of
variable ``i`` and byte ``nvars`` holds the total degree.  With that layout

* multiplying monomials is integer addition,
* the graded reverse lexicographic order is the integer order of
  ``key ^ mask`` where ``mask`` covers the exponent bytes,
* divisibility is a borrow test on the exponent bytes.

Exponents must stay below 128 (degrees in scope are at most 30).
"""

from __future__ import annotations

import heapq
import re
import random
from fractions import Fraction
from functools import reduce
from math import comb, gcd, isqrt
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

Coeff = object  # int | Fraction over QQ, int in [0, p) over GF(p)


class DomainMismatchError(ValueError):
    """Operands live over different coefficient domains or variable orders."""


# --------------------------------------------------------------------------
# Variables and monomials
# --------------------------------------------------------------------------


class VariableOrder:
    """Immutable ordered list of variable names; index 0 is the largest."""

    __slots__ = ("names", "_index", "nvars", "mask", "high", "deg_unit")

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(names)})
        n = len(names)
        object.__setattr__(self, "nvars", n)
        object.__setattr__(self, "mask", (1 << (8 * n)) - 1)
        object.__setattr__(self, "high", int.from_bytes(b"\x80" * n, "little") if n else 0)
        object.__setattr__(self, "deg_unit", 1 << (8 * n))

    def __setattr__(self, key, value):
        raise AttributeError("VariableOrder is immutable")

    @classmethod
    def generic(cls, m: int, n: int) -> "VariableOrder":
        """Row-major names for an m x n matrix: x1..xn, y1..yn, z1..zn (then w, v)."""
        letters = "xyzwv"
        if m > len(letters):
            raise ValueError("at most %d rows supported" % len(letters))
        return cls([f"{letters[r]}{c + 1}" for r in range(m) for c in range(n)])

    def index(self, name: str) -> int:
        return self._index[name]

    def __len__(self) -> int:
        return self.nvars

    def __eq__(self, other) -> bool:
        return isinstance(other, VariableOrder) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"VariableOrder({list(self.names)!r})"

    # packed monomial helpers ------------------------------------------------

    def pack(self, exps: Sequence[int]) -> int:
        if len(exps) != self.nvars:
            raise ValueError("exponent vector has wrong length")
        key = 0
        for i in range(self.nvars - 1, -1, -1):
            e = exps[i]
            if not 0 <= e < 128:
                raise ValueError("exponent out of range")
            key = (key << 8) | e
        return key | (sum(exps) << (8 * self.nvars))

    def unpack(self, key: int) -> Tuple[int, ...]:
        return tuple(key.to_bytes(self.nvars + 2, "little")[: self.nvars])

    def var(self, i: int) -> int:
        """Packed monomial of the i-th variable."""
        return (1 << (8 * i)) | self.deg_unit

    def degree_of(self, key: int) -> int:
        return key >> (8 * self.nvars)

    def exponent(self, key: int, i: int) -> int:
        return (key >> (8 * i)) & 0xFF

    def grevlex(self, key: int) -> int:
        """Sort key: larger means larger in grevlex."""
        return key ^ self.mask

    def divides(self, a: int, b: int) -> bool:
        """True if monomial a divides monomial b."""
        h = self.high
        m = self.mask
        return (((b & m) | h) - (a & m)) & h == h

    def mono_str(self, key: int) -> str:
        parts = []
        for i, e in enumerate(self.unpack(key)):
            if e == 1:
                parts.append(self.names[i])
            elif e > 1:
                parts.append(f"{self.names[i]}^{e}")
        return "*".join(parts) if parts else "1"


class Monomial:
    """Exponent vector with cached degree, ordered by grevlex."""

    __slots__ = ("order", "key")

    def __init__(self, order: VariableOrder, key: int):
        self.order = order
        self.key = key

    @classmethod
    def from_exponents(cls, order: VariableOrder, exps: Sequence[int]) -> "Monomial":
        return cls(order, order.pack(exps))

    @property
    def exponents(self) -> Tuple[int, ...]:
        return self.order.unpack(self.key)

    @property
    def degree(self) -> int:
        return self.order.degree_of(self.key)

    def _cmp_key(self):
        return self.order.grevlex(self.key)

    def __lt__(self, other: "Monomial") -> bool:
        return self._cmp_key() < other._cmp_key()

    def __gt__(self, other: "Monomial") -> bool:
        return self._cmp_key() > other._cmp_key()

    def __le__(self, other: "Monomial") -> bool:
        return self._cmp_key() <= other._cmp_key()

    def __ge__(self, other: "Monomial") -> bool:
        return self._cmp_key() >= other._cmp_key()

    def __eq__(self, other) -> bool:
        return isinstance(other, Monomial) and self.key == other.key and self.order == other.order

    def __hash__(self) -> int:
        return hash(self.key)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.order, self.key + other.key)

    def __repr__(self) -> str:
        return f"Monomial({self.order.mono_str(self.key)})"


def monomial_keys_of_degree(order: VariableOrder, d: int) -> List[int]:
    """Packed monomials of total degree d, descending grevlex."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    n = order.nvars
    # build by appending variables in nondecreasing index order
    layer = [0]
    for _ in range(d):
        nxt = []
        for key in layer:
            # smallest index already used may not exceed the new one; track via last byte
            last = _last_var(key, n)
            for i in range(last, n):
                nxt.append(key + (1 << (8 * i)))
        layer = nxt
    du = order.deg_unit * d
    mask = order.mask
    keys = [k + du for k in layer]
    keys.sort(key=lambda k: k ^ mask, reverse=True)
    return keys


def _last_var(key: int, n: int) -> int:
    if key == 0:
        return 0
    return (key.bit_length() - 1) // 8


def monomials_of_degree(order: VariableOrder, d: int) -> List[Monomial]:
    return [Monomial(order, k) for k in monomial_keys_of_degree(order, d)]


def count_monomials(nvars: int, d: int) -> int:
    """dim of the degree-d part of a polynomial ring in nvars variables."""
    if d < 0:
        return 0
    return comb(d + nvars - 1, nvars - 1)


# --------------------------------------------------------------------------
# Coefficient domains
# --------------------------------------------------------------------------

_MR_BASES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; the fixed base set is deterministic below 2**64."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = _MR_BASES if n < (1 << 64) else _MR_BASES + tuple(range(41, 41 + 2 * 40, 2))
    for a in bases:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeField:
    """GF(p) for a prime 2**31 < p < 2**63 (smaller primes allowed for tests)."""

    __slots__ = ("p",)

    def __init__(self, p: int, check: bool = True):
        if check and not is_probable_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF", self.p))

    def __repr__(self) -> str:
        return f"GF({self.p})"

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("zero has no inverse mod p")
        return pow(a, -1, self.p)

    def reduce(self, c) -> int:
        """Image of a rational in GF(p); raises ZeroDivisionError on bad denominators."""
        if isinstance(c, Fraction):
            return c.numerator % self.p * self.inv(c.denominator) % self.p
        return c % self.p


def random_prime(rng: random.Random, bits: int = 62, avoid: Iterable[int] = ()) -> int:
    """Uniformly drawn prime with exactly ``bits`` bits."""
    avoid = set(avoid)
    lo, hi = 1 << (bits - 1), (1 << bits) - 1
    while True:
        c = rng.randrange(lo, hi) | 1
        if c not in avoid and is_probable_prime(c):
            return c


def _rng(seed) -> random.Random:
    # tuples are not valid seeds any more; their repr is stable
    return random.Random(seed if isinstance(seed, (int, str, bytes)) else repr(seed))


def prime_stream(seed, count: int, bits: int = 62) -> List[int]:
    rng = _rng(seed)
    out: List[int] = []
    while len(out) < count:
        out.append(random_prime(rng, bits, avoid=out))
    return out


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


# --------------------------------------------------------------------------
# CRT and rational reconstruction
# --------------------------------------------------------------------------


def crt(residues: Sequence[int], moduli: Sequence[int]) -> Tuple[int, int]:
    """Combine residues; returns (x, lcm).  Inconsistent residues raise."""
    x, mod = 0, 1
    for r, m in zip(residues, moduli):
        g = gcd(mod, m)
        if (r - x) % g:
            raise ValueError("inconsistent residues")
        m_g = m // g
        t = ((r - x) // g) * pow(mod // g, -1, m_g) % m_g if m_g > 1 else 0
        x += mod * t
        mod *= m_g
        x %= mod
    return x, mod


def rational_reconstruction(a: int, m: int, num_bound: Optional[int] = None,
                            den_bound: Optional[int] = None) -> Optional[Fraction]:
    """Find n/d congruent to a mod m with |n| <= num_bound, 0 < d <= den_bound.

    Defaults: num_bound = floor(sqrt(m/2)), den_bound the largest value with
    2 * num_bound * den_bound < m, which keeps the answer unique.
    """
    if num_bound is None:
        num_bound = isqrt(m // 2)
    if den_bound is None:
        den_bound = (m - 1) // (2 * max(num_bound, 1))
    a %= m
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > num_bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > den_bound:
        return None
    if gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1)


def lift_rational(residues: Sequence[int], moduli: Sequence[int]) -> Optional[Fraction]:
    """CRT followed by rational reconstruction; None when nothing fits the bound."""
    x, mod = crt(residues, moduli)
    return rational_reconstruction(x, mod)


# --------------------------------------------------------------------------
# Polynomials
# --------------------------------------------------------------------------


class Polynomial:
    """Sparse polynomial, immutable, terms held in descending grevlex order.

    ``field`` is ``None`` for rational coefficients (ints or Fractions) or a
    :class:`PrimeField`.
    """

    __slots__ = ("order", "field", "_terms")

    def __init__(self, order: VariableOrder, terms: Dict[int, Coeff] = None, field: PrimeField = None,
                 _canonical: bool = False):
        self.order = order
        self.field = field
        if terms is None:
            terms = {}
        if not _canonical:
            terms = _canonicalize(terms, order.mask, field)
        self._terms = terms

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, order: VariableOrder, field: PrimeField = None) -> "Polynomial":
        return cls(order, {}, field, _canonical=True)

    @classmethod
    def constant(cls, order: VariableOrder, c, field: PrimeField = None) -> "Polynomial":
        return cls(order, {0: c}, field)

    @classmethod
    def variable(cls, order: VariableOrder, i: int, field: PrimeField = None) -> "Polynomial":
        return cls(order, {order.var(i): 1}, field, _canonical=True)

    @classmethod
    def from_terms(cls, order, items: Iterable[Tuple[Sequence[int], Coeff]], field=None) -> "Polynomial":
        acc: Dict[int, Coeff] = {}
        for exps, c in items:
            k = order.pack(exps)
            acc[k] = acc.get(k, 0) + c
        return cls(order, acc, field)

    @classmethod
    def parse(cls, order: VariableOrder, text: str, field: PrimeField = None) -> "Polynomial":
        return parse_polynomial(order, text, field)

    # basic properties -------------------------------------------------------

    @property
    def terms(self) -> Dict[int, Coeff]:
        """Packed monomial -> coefficient, descending grevlex (read-only by convention)."""
        return self._terms

    def items(self) -> List[Tuple[Monomial, Coeff]]:
        return [(Monomial(self.order, k), c) for k, c in self._terms.items()]

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def leading(self) -> Tuple[int, Coeff]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return next(iter(self._terms.items()))

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(self.order.degree_of(k) for k in self._terms)

    def is_homogeneous(self) -> bool:
        degs = {self.order.degree_of(k) for k in self._terms}
        return len(degs) <= 1

    def support(self) -> set:
        """Indices of variables occurring in the polynomial."""
        seen = 0
        for k in self._terms:
            seen |= k & self.order.mask
        out = set()
        for i in range(self.order.nvars):
            if (seen >> (8 * i)) & 0xFF:
                out.add(i)
        return out

    # arithmetic -------------------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self.order != other.order:
            raise DomainMismatchError("different variable orders")
        if self.field != other.field:
            raise DomainMismatchError("different coefficient domains")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.order, other, self.field)
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return Polynomial(self.order, acc, self.field)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return self.scale(-1)

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) - c
        return Polynomial(self.order, acc, self.field)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        if self.field is not None:
            c = self.field.reduce(c)
            p = self.field.p
            if c == 0:
                return Polynomial.zero(self.order, self.field)
            return Polynomial(self.order, {k: v * c % p for k, v in self._terms.items()}, self.field,
                              _canonical=True)
        if c == 0:
            return Polynomial.zero(self.order)
        return Polynomial(self.order, {k: _norm(v * c) for k, v in self._terms.items()}, None,
                          _canonical=True)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        acc: Dict[int, Coeff] = {}
        get = acc.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                acc[k] = get(k, 0) + ca * cb
        return Polynomial(self.order, acc, self.field)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.order, 1, self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def mul_monomial(self, key: int, c=1) -> "Polynomial":
        if self.field is not None:
            p = self.field.p
            c = self.field.reduce(c)
            return Polynomial(self.order, {k + key: v * c % p for k, v in self._terms.items()}, self.field,
                              _canonical=c != 0)
        return Polynomial(self.order, {k + key: v * c for k, v in self._terms.items()}, None,
                          _canonical=(c != 0 and isinstance(c, int)))

    def diff(self, v: int) -> "Polynomial":
        """Formal partial derivative with respect to variable index v."""
        order = self.order
        if not 0 <= v < order.nvars:
            raise IndexError("variable index out of range")
        shift = 8 * v
        step = (1 << shift) + order.deg_unit
        out: Dict[int, Coeff] = {}
        p = self.field.p if self.field is not None else None
        for k, c in self._terms.items():
            e = (k >> shift) & 0xFF
            if e:
                nc = c * e if p is None else c * e % p
                if nc:
                    out[k - step] = nc
        # dividing by x_v is order preserving, so the result is already sorted
        return Polynomial(order, out, self.field, _canonical=True)

    def exact_divide(self, f: "Polynomial") -> Optional["Polynomial"]:
        """Quotient q with self == q * f, or None if f does not divide self."""
        self._check(f)
        if f.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        q, rem_lead = _divide(self, f)
        if rem_lead is not None:
            return None
        return q

    def divide_with_witness(self, f: "Polynomial") -> Tuple[Optional["Polynomial"], Optional[Tuple[int, Coeff]]]:
        """Like exact_divide but also returns the first non-reducible term."""
        self._check(f)
        if f.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return _divide(self, f)

    def evaluate(self, point: Sequence):
        """Evaluate at a point (ints/Fractions, or residues when over GF(p))."""
        order = self.order
        if len(point) != order.nvars:
            raise ValueError("point has wrong length")
        p = self.field.p if self.field is not None else None
        powers: List[Dict[int, object]] = [dict() for _ in range(order.nvars)]
        total = 0
        for k, c in self._terms.items():
            val = c
            exps = k.to_bytes(order.nvars + 2, "little")
            for i in range(order.nvars):
                e = exps[i]
                if e:
                    cache = powers[i]
                    pw = cache.get(e)
                    if pw is None:
                        pw = point[i] ** e if p is None else pow(point[i], e, p)
                        cache[e] = pw
                    val = val * pw
                    if p is not None:
                        val %= p
            total += val
        if p is not None:
            return total % p
        return _norm(total)

    def reduce_mod(self, field: PrimeField) -> "Polynomial":
        if self.field is not None:
            raise DomainMismatchError("already a modular polynomial")
        return Polynomial(self.order, {k: field.reduce(c) for k, c in self._terms.items()}, field,
                          _canonical=False)

    def map_coefficients(self, fn) -> "Polynomial":
        return Polynomial(self.order, {k: fn(c) for k, c in self._terms.items()}, self.field)

    # comparison / display ---------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.order, other, self.field)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (self.order == other.order and self.field == other.field
                and list(self._terms.items()) == list(other._terms.items()))

    def __hash__(self) -> int:
        return hash((self.order, self.field, tuple(self._terms.items())))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for k, c in self._terms.items():
            neg = c < 0 if self.field is None else False
            mag = -c if neg else c
            mono = self.order.mono_str(k)
            if mono == "1":
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not out:
                out.append(("-" if neg else "") + body)
            else:
                out.append((" - " if neg else " + ") + body)
        return "".join(out)

    def __repr__(self) -> str:
        return f"Polynomial({self})"


def _canonicalize(terms: Dict[int, Coeff], mask: int, field: Optional[PrimeField]) -> Dict[int, Coeff]:
    if field is not None:
        p = field.p
        items = [(k, c % p) for k, c in terms.items()]
        items = [(k, c) for k, c in items if c]
    else:
        items = [(k, _norm(c)) for k, c in terms.items() if c != 0]
    items.sort(key=lambda kv: kv[0] ^ mask, reverse=True)
    return dict(items)


def _divide(g: Polynomial, f: Polynomial):
    """Single-divisor reduction under grevlex.

    Returns (quotient, None) on exact division, (None, leading remainder
    term) otherwise.
    """
    order = g.order
    mask = order.mask
    field = g.field
    p = field.p if field is not None else None
    lead_key, lead_c = f.leading()
    inv_lead = field.inv(lead_c) if p is not None else None
    f_rest = list(f.terms.items())[1:]
    work: Dict[int, Coeff] = dict(g.terms)
    heap = [-(k ^ mask) for k in work]
    heapq.heapify(heap)
    quotient: Dict[int, Coeff] = {}
    while heap:
        gk = -heapq.heappop(heap)
        k = gk ^ mask
        c = work.pop(k, 0)
        if p is not None:
            c %= p
        if c == 0:
            continue
        # drop duplicates of the same key still in the heap
        while heap and -heap[0] == gk:
            heapq.heappop(heap)
        if not order.divides(lead_key, k):
            return None, (k, _norm(c))
        qk = k - lead_key
        if p is not None:
            qc = c * inv_lead % p
        else:
            if isinstance(c, int) and isinstance(lead_c, int) and c % lead_c == 0:
                qc = c // lead_c
            else:
                qc = _norm(Fraction(c) / lead_c)
        quotient[qk] = qc
        for fk, fc in f_rest:
            nk = qk + fk
            old = work.get(nk)
            if old is None:
                work[nk] = -qc * fc
                heapq.heappush(heap, -(nk ^ mask))
            else:
                work[nk] = old - qc * fc
    return Polynomial(order, quotient, field), None


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def parse_polynomial(order: VariableOrder, text: str, field: PrimeField = None) -> Polynomial:
    """Parse sums of terms like ``-3*x1*y2^2 + 5/2*z3`` (``*`` optional, spaces allowed)."""
    s = text.replace("−", "-").replace("**", "^")
    terms: Dict[int, Coeff] = {}
    for sign, body in _split_terms(s):
        coeff = Fraction(sign)
        exps = [0] * order.nvars
        for tok in body.replace("*", " ").split():
            if "^" in tok:
                base, e = tok.split("^")
                e = int(e)
            else:
                base, e = tok, 1
            if base[0].isdigit():
                coeff *= Fraction(base) ** e
            else:
                name = base.replace("_", "")
                exps[order.index(name)] += e
        k = order.pack(exps)
        terms[k] = terms.get(k, 0) + coeff
    return Polynomial(order, terms, field) if field is None else Polynomial(
        order, {k: field.reduce(c) for k, c in terms.items()}, field)


def _split_terms(s: str) -> Iterator[Tuple[int, str]]:
    # exponents are nonnegative and coefficients unsigned, so every +/- separates terms
    for sign, body in re.findall(r"([+-]?)\s*([^+-]+)", s):
        body = body.strip()
        if body:
            yield (-1 if sign == "-" else 1), body


def product(polys: Sequence[Polynomial]) -> Polynomial:
    return reduce(lambda a, b: a * b, polys)

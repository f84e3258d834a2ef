"""Exact arithmetic in the cyclotomic field Q(zeta_N).

Elements are stored in the power basis 1, zeta, ..., zeta^(phi(N)-1), reduced
modulo the N-th cyclotomic polynomial.  Coefficients are Python ints or
:class:`fractions.Fraction`, so every operation is exact.

Two layers are provided.  :class:`CycloField` works on raw coefficient tuples
and is what the polynomial code uses in its inner loops.  :class:`CycloNum`
wraps a tuple together with its field and supports the usual operators.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

Rational = Union[int, Fraction]


def _poly_divmod_int(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Divide integer polynomials (low degree first) by a monic divisor."""
    num = list(num)
    dq = len(den) - 1
    if len(num) - 1 < dq:
        return [0], num
    quot = [0] * (len(num) - dq)
    for i in range(len(num) - 1, dq - 1, -1):
        c = num[i]
        if c:
            quot[i - dq] = c
            for j, d in enumerate(den):
                num[i - dq + j] -= c * d
    rem = num[:dq] or [0]
    return quot, rem


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, constant term first."""
    if n < 1:
        raise ValueError("n must be positive")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod_int(poly, list(cyclotomic_polynomial(d)))
            assert not any(rem)
    return tuple(poly)


def euler_phi(n: int) -> int:
    return len(cyclotomic_polynomial(n)) - 1


def _trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _qpoly_divmod(a: list, b: list) -> tuple[list, list]:
    a = [Fraction(x) for x in a]
    b = _trim([Fraction(x) for x in b])
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    a = _trim(a)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        c = a[-1] / b[-1]
        q[shift] = c
        for j, d in enumerate(b):
            a[shift + j] -= c * d
        a.pop()
        _trim(a)
    return _trim(q), a


def _qpoly_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _qpoly_sub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)]
    return _trim(out)


class CycloField:
    """The field Q(zeta_N) acting on coefficient tuples of length phi(N)."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("conductor must be positive")
        self.N = N
        self.modulus = cyclotomic_polynomial(N)
        self.degree = len(self.modulus) - 1
        d = self.degree
        # x^k mod Phi_N for 0 <= k < max(N, 2d - 1)
        top = max(N, 2 * d - 1)
        table = []
        cur = [0] * d
        cur[0] = 1
        for _ in range(top):
            table.append(tuple(cur))
            # multiply by x and reduce with the monic modulus
            carry = cur[-1]
            cur = [0] + cur[:-1]
            if carry:
                for j in range(d):
                    cur[j] -= carry * self.modulus[j]
        self._pow = table
        self.zero = (0,) * d
        self.one = table[0]
        self._embed = [cmath.exp(2j * math.pi * k / N) for k in range(d)]

    def __repr__(self):
        return f"CycloField({self.N})"

    def __eq__(self, other):
        return isinstance(other, CycloField) and other.N == self.N

    def __hash__(self):
        return hash(("CycloField", self.N))

    # raw tuple arithmetic -------------------------------------------------
    def root(self, k: int) -> tuple:
        """zeta_N^k."""
        return self._pow[k % self.N]

    def from_rational(self, q: Rational) -> tuple:
        return (q,) + (0,) * (self.degree - 1)

    def add(self, a: tuple, b: tuple) -> tuple:
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a: tuple, b: tuple) -> tuple:
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a: tuple) -> tuple:
        return tuple(-x for x in a)

    def scale(self, a: tuple, q: Rational) -> tuple:
        return tuple(x * q for x in a)

    def mul(self, a: tuple, b: tuple) -> tuple:
        d = self.degree
        if d == 1:
            return (a[0] * b[0],)
        conv = [0] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        conv[i + j] += x * y
        out = list(conv[:d])
        for k in range(d, 2 * d - 1):
            c = conv[k]
            if c:
                row = self._pow[k]
                for j in range(d):
                    if row[j]:
                        out[j] += c * row[j]
        return tuple(out)

    def is_zero(self, a: tuple) -> bool:
        return not any(a)

    def conj(self, a: tuple) -> tuple:
        """Complex conjugation zeta -> zeta^(N-1)."""
        out = [0] * self.degree
        for k, c in enumerate(a):
            if c:
                row = self._pow[(-k) % self.N]
                for j in range(self.degree):
                    if row[j]:
                        out[j] += c * row[j]
        return tuple(out)

    def inv(self, a: tuple) -> tuple:
        """Multiplicative inverse by the extended Euclidean algorithm over Q[x]."""
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero in cyclotomic field")
        r0, r1 = [Fraction(x) for x in self.modulus], _trim([Fraction(x) for x in a])
        s0, s1 = [], [Fraction(1)]
        while len(r1) > 1:
            q, r = _qpoly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _qpoly_sub(s0, _qpoly_mul(q, s1))
        c = r1[0]
        out = [x / c for x in s1] + [Fraction(0)] * self.degree
        _, rem = _qpoly_divmod(out, list(self.modulus))
        rem = rem + [Fraction(0)] * (self.degree - len(rem))
        return tuple(_simplify(x) for x in rem[: self.degree])

    def embed(self, a: tuple) -> complex:
        return sum(complex(float(c)) * e for c, e in zip(a, self._embed) if c)

    def normalize(self, a: Sequence[Rational]) -> tuple:
        return tuple(_simplify(x) for x in a)


def _simplify(x: Rational) -> Rational:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


@lru_cache(maxsize=None)
def field(N: int) -> CycloField:
    return CycloField(N)


class CycloNum:
    """An element of Q(zeta_N) with operator support."""

    __slots__ = ("F", "coeffs")

    def __init__(self, coeffs: Sequence[Rational], N: int):
        F = field(N)
        coeffs = tuple(coeffs)
        if len(coeffs) != F.degree:
            raise ValueError(f"expected {F.degree} coefficients for N={N}")
        self.F = F
        self.coeffs = F.normalize(coeffs)

    @classmethod
    def _raw(cls, F: CycloField, coeffs: tuple) -> "CycloNum":
        obj = cls.__new__(cls)
        obj.F = F
        obj.coeffs = F.normalize(coeffs)
        return obj

    @classmethod
    def root_of_unity(cls, k: int, N: int) -> "CycloNum":
        F = field(N)
        return cls._raw(F, F.root(k))

    @classmethod
    def rational(cls, q: Rational, N: int) -> "CycloNum":
        F = field(N)
        return cls._raw(F, F.from_rational(q))

    @property
    def N(self) -> int:
        return self.F.N

    def _coerce(self, other) -> tuple:
        if isinstance(other, CycloNum):
            if other.F.N != self.F.N:
                raise ValueError("mixed conductors")
            return other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.F.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.add(self.coeffs, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.sub(self.coeffs, o))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.sub(o, self.coeffs))

    def __neg__(self):
        return CycloNum._raw(self.F, self.F.neg(self.coeffs))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.mul(self.coeffs, o))

    __rmul__ = __mul__

    def inverse(self) -> "CycloNum":
        return CycloNum._raw(self.F, self.F.inv(self.coeffs))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.mul(self.coeffs, self.F.inv(o)))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CycloNum._raw(self.F, self.F.mul(o, self.F.inv(self.coeffs)))

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.F.one
        base = self.coeffs
        while k:
            if k & 1:
                out = self.F.mul(out, base)
            base = self.F.mul(base, base)
            k >>= 1
        return CycloNum._raw(self.F, out)

    def conjugate(self) -> "CycloNum":
        return CycloNum._raw(self.F, self.F.conj(self.coeffs))

    def is_zero(self) -> bool:
        return self.F.is_zero(self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __complex__(self):
        return self.F.embed(self.coeffs)

    def embed(self) -> complex:
        return self.F.embed(self.coeffs)

    def __eq__(self, other):
        o = self._coerce(other) if isinstance(other, (CycloNum, int, Fraction)) else NotImplemented
        if o is NotImplemented:
            return NotImplemented
        return all(x == y for x, y in zip(self.coeffs, o))

    def __hash__(self):
        return hash((self.F.N, self.coeffs))

    def __repr__(self):
        return f"CycloNum({list(map(str, self.coeffs))}, N={self.F.N})"


def recognize(x: complex, N: int, tol: float = 1e-10) -> CycloNum | None:
    """Find an exact element of Q(zeta_N) matching the complex number ``x``.

    Only a small search space is tried: 0, roots of unity, and the forms
    (a + b*zeta^k)/d with |a|, |b| <= 2 and d <= 4.  Returns None otherwise.
    """
    F = field(N)
    if abs(x) <= tol:
        return CycloNum._raw(F, F.zero)
    if abs(abs(x) - 1.0) <= tol:
        k = round(cmath.phase(x) * N / (2 * math.pi))
        if abs(cmath.exp(2j * math.pi * k / N) - x) <= tol:
            return CycloNum._raw(F, F.root(k))
    for d in (1, 2, 3, 4):
        for k in range(N):
            zk = cmath.exp(2j * math.pi * k / N)
            for b in (-2, -1, 1, 2):
                rest = x * d - b * zk
                a = round(rest.real)
                if abs(rest - a) <= tol * d and abs(a) <= 2:
                    val = F.add(F.from_rational(a), F.scale(F.root(k), b))
                    return CycloNum._raw(F, F.scale(val, Fraction(1, d)))
    return None

"""Polynomials in (z1, z2, u1, u2) over Q(zeta_N).

The u-variables stand for the conjugates of w, so a polynomial P(z, u)
represents a function holomorphic in z and antiholomorphic in w.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .cyclotomic import CycloField, CycloNum, field

Exps = tuple  # (a, b, c, d): degrees of z1, z2, u1, u2


class MPoly:
    """Sparse polynomial; ``terms`` maps exponent 4-tuples to raw coefficient tuples.

    Zero coefficients are never stored.
    """

    __slots__ = ("F", "terms")

    def __init__(self, terms: Optional[Mapping] = None, N: int = 1):
        self.F: CycloField = field(N)
        clean = {}
        for e, c in (terms or {}).items():
            if isinstance(c, CycloNum):
                if c.N != N:
                    raise ValueError("coefficient conductor mismatch")
                c = c.coeffs
            elif isinstance(c, (int, Fraction)):
                c = self.F.from_rational(c)
            if any(c):
                clean[tuple(e)] = tuple(c)
        self.terms = clean

    @classmethod
    def _raw(cls, F: CycloField, terms: dict) -> "MPoly":
        obj = cls.__new__(cls)
        obj.F = F
        obj.terms = terms
        return obj

    # constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, N: int) -> "MPoly":
        return cls({}, N)

    @classmethod
    def const(cls, c, N: int) -> "MPoly":
        return cls({(0, 0, 0, 0): c}, N)

    @classmethod
    def one(cls, N: int) -> "MPoly":
        return cls.const(1, N)

    @classmethod
    def var(cls, i: int, N: int) -> "MPoly":
        e = [0, 0, 0, 0]
        e[i] = 1
        return cls({tuple(e): 1}, N)

    @classmethod
    def linear_form(cls, coeffs: Sequence, side: str, N: int) -> "MPoly":
        """a1*x1 + a2*x2 with x = z (side 'z') or x = u (side 'u')."""
        off = 0 if side == "z" else 2
        terms = {}
        for k, a in enumerate(coeffs):
            e = [0, 0, 0, 0]
            e[off + k] = 1
            terms[tuple(e)] = a
        return cls(terms, N)

    # basic properties ----------------------------------------------------------
    @property
    def N(self) -> int:
        return self.F.N

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def coeff(self, exps) -> CycloNum:
        return CycloNum._raw(self.F, self.terms.get(tuple(exps), self.F.zero))

    def items(self):
        for e in sorted(self.terms):
            yield e, CycloNum._raw(self.F, self.terms[e])

    def __repr__(self):
        return f"MPoly(N={self.N}, terms={len(self.terms)}, degree={self.total_degree()})"

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "MPoly"):
        if other.F.N != self.F.N:
            raise ValueError("mixed conductors")

    def __add__(self, other: "MPoly") -> "MPoly":
        self._check(other)
        F = self.F
        out = dict(self.terms)
        for e, c in other.terms.items():
            prev = out.get(e)
            if prev is None:
                out[e] = c
            else:
                s = F.add(prev, c)
                if any(s):
                    out[e] = s
                else:
                    del out[e]
        return MPoly._raw(F, out)

    def __neg__(self) -> "MPoly":
        return MPoly._raw(self.F, {e: self.F.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self + (-other)

    def scale(self, c) -> "MPoly":
        F = self.F
        if isinstance(c, CycloNum):
            c = c.coeffs
        elif isinstance(c, (int, Fraction)):
            c = F.from_rational(c)
        if not any(c):
            return MPoly._raw(F, {})
        out = {}
        for e, v in self.terms.items():
            p = F.mul(v, c)
            if any(p):
                out[e] = p
        return MPoly._raw(F, out)

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            return self.scale(other)
        self._check(other)
        F = self.F
        mul, add = F.mul, F.add
        a, b = (self.terms, other.terms) if len(self.terms) >= len(other.terms) else (other.terms, self.terms)
        out: dict = {}
        get = out.get
        for e2, c2 in b.items():
            for e1, c1 in a.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                p = mul(c1, c2)
                prev = get(e)
                out[e] = p if prev is None else add(prev, p)
        return MPoly._raw(F, {e: c for e, c in out.items() if any(c)})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MPoly":
        out = MPoly.one(self.N)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        if other.F.N != self.F.N or self.terms.keys() != other.terms.keys():
            return False
        return all(all(x == y for x, y in zip(c, other.terms[e])) for e, c in self.terms.items())

    def __hash__(self):
        return hash((self.N, frozenset(self.terms.items())))

    # structural operations ----------------------------------------------------
    def conj_swap(self) -> "MPoly":
        """Swap z <-> u and conjugate every coefficient."""
        F = self.F
        return MPoly._raw(F, {(e[2], e[3], e[0], e[1]): F.conj(c) for e, c in self.terms.items()})

    def substitute(self, zmap: Optional[Sequence] = None, umap: Optional[Sequence] = None) -> "MPoly":
        """Linear substitution x_i -> sum_j map[i][j] * x_j on the z and/or u pair.

        Map entries may be CycloNum, ints or Fractions.
        """
        F = self.F
        zpow = _LinearPowers(F, zmap) if zmap is not None else None
        upow = _LinearPowers(F, umap) if umap is not None else None
        out: dict = {}
        get = out.get
        mul, add = F.mul, F.add
        for e, c in self.terms.items():
            zpart = zpow.monomial(e[0], e[1]) if zpow else {(e[0], e[1]): F.one}
            upart = upow.monomial(e[2], e[3]) if upow else {(e[2], e[3]): F.one}
            for (a, b), cz in zpart.items():
                czc = mul(c, cz)
                for (cc, d), cu in upart.items():
                    key = (a, b, cc, d)
                    p = mul(czc, cu)
                    prev = get(key)
                    out[key] = p if prev is None else add(prev, p)
        return MPoly._raw(F, {e: F.normalize(c) for e, c in out.items() if any(c)})

    # numerics ---------------------------------------------------------------
    def evaluate(self, z, w) -> np.ndarray | complex:
        """Numeric value at z, w (u = conj(w)); accepts batches (..., 2)."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        scalar = z.ndim == 1 and w.ndim == 1
        z = np.atleast_2d(z)
        u = np.atleast_2d(w).conj()
        n = max(z.shape[0], u.shape[0])
        z = np.broadcast_to(z, (n, 2))
        u = np.broadcast_to(u, (n, 2))
        if not self.terms:
            out = np.zeros(n, dtype=complex)
            return complex(out[0]) if scalar else out
        exps = np.array(sorted(self.terms), dtype=int)
        coeffs = np.array([self.F.embed(self.terms[tuple(e)]) for e in exps], dtype=complex)
        deg = int(exps.max())
        vars_ = np.concatenate([z, u], axis=1)  # (n, 4)
        out = np.empty(n, dtype=complex)
        step = max(1, 2_000_000 // len(exps))
        for lo in range(0, n, step):
            v = vars_[lo:lo + step]
            powers = np.ones((deg + 1, v.shape[0], 4), dtype=complex)
            for k in range(1, deg + 1):
                powers[k] = powers[k - 1] * v
            mono = (powers[exps[:, 0], :, 0] * powers[exps[:, 1], :, 1]
                    * powers[exps[:, 2], :, 2] * powers[exps[:, 3], :, 3])  # (T, chunk)
            out[lo:lo + step] = coeffs @ mono
        return complex(out[0]) if scalar else out

    # serialisation ------------------------------------------------------------
    def to_json(self) -> list:
        return [
            {"exps": list(e), "coeff": [_rat_str(x) for x in self.terms[e]], "N": self.N}
            for e in sorted(self.terms)
        ]

    @classmethod
    def from_json(cls, data: list, N: Optional[int] = None) -> "MPoly":
        if not data:
            return cls.zero(N or 1)
        N = N or data[0]["N"]
        return cls({tuple(t["exps"]): tuple(Fraction(x) for x in t["coeff"]) for t in data}, N)


def _rat_str(x) -> str:
    return str(Fraction(x))


class _LinearPowers:
    """Caches powers of the two linear forms x_i -> m[i][0] x1 + m[i][1] x2."""

    def __init__(self, F: CycloField, m: Sequence):
        self.F = F
        forms = []
        for row in m:
            form = {}
            for j, a in enumerate(row):
                if isinstance(a, CycloNum):
                    a = a.coeffs
                elif isinstance(a, (int, Fraction)):
                    a = F.from_rational(a)
                if any(a):
                    form[(1, 0) if j == 0 else (0, 1)] = tuple(a)
            forms.append(form)
        self.forms = forms
        self._pows = [[{(0, 0): F.one}], [{(0, 0): F.one}]]
        self._mono: dict = {}

    def _mul(self, p: dict, q: dict) -> dict:
        F = self.F
        out: dict = {}
        for e1, c1 in p.items():
            for e2, c2 in q.items():
                e = (e1[0] + e2[0], e1[1] + e2[1])
                v = F.mul(c1, c2)
                prev = out.get(e)
                out[e] = v if prev is None else F.add(prev, v)
        return {e: c for e, c in out.items() if any(c)}

    def power(self, i: int, k: int) -> dict:
        pw = self._pows[i]
        while len(pw) <= k:
            pw.append(self._mul(pw[-1], self.forms[i]))
        return pw[k]

    def monomial(self, a: int, b: int) -> dict:
        key = (a, b)
        hit = self._mono.get(key)
        if hit is None:
            hit = self._mul(self.power(0, a), self.power(1, b))
            self._mono[key] = hit
        return hit

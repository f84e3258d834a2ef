"""Exact expansions and divisions for the averaged-kernel numerators.

Inner products are written with u = conj(w), so that

    <g.z, w> = sum_{i,j} g_ij z_j u_i

is bilinear in (z, u).  Every polynomial below has coefficients in
Q(zeta_N), N being the conductor of the group.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..errors import DivisionFailed, NotCyclotomic, NotReflection, ZeroForm
from ..groups import (GroupElement, ReflectionGroup, close_generators, coset_representatives, exact_root,
                      is_reflection)
from .cyclotomic import CycloNum
from .mpoly import MPoly


def _require_exact(G: ReflectionGroup) -> int:
    if not G.is_exact:
        raise NotCyclotomic(f"group {G.label or '?'} has numeric-only entries")
    return G.conductor


def kernel_factor(g: GroupElement, N: int) -> MPoly:
    """The polynomial 1 - <g.z, w> in (z, u)."""
    a, b, c, d = g.exact
    terms = {(0, 0, 0, 0): 1}
    # row i, column j contributes g_ij z_j u_i
    for (i, j), entry in zip(((0, 0), (0, 1), (1, 0), (1, 1)), (a, b, c, d)):
        if entry.is_zero():
            continue
        e = [0, 0, 0, 0]
        e[j] += 1
        e[2 + i] += 1
        terms[tuple(e)] = -entry
    return MPoly(terms, N)


def _cubes(elements: Sequence[GroupElement], N: int) -> list[MPoly]:
    out = []
    for g in elements:
        f = kernel_factor(g, N)
        out.append(f * f * f)
    return out


def _skew_numerator(elements: Sequence[GroupElement], N: int) -> MPoly:
    """sum_m J(m) prod_{l != m} (1 - <l.z, w>)^3 over the given element list."""
    cubes = _cubes(elements, N)
    total = MPoly.zero(N)
    prefix = MPoly.one(N)
    for m, g in enumerate(elements):
        term = prefix
        for k in range(m + 1, len(elements)):
            term = term * cubes[k]
        total = total + term.scale(g.exact_det)
        prefix = prefix * cubes[m]
    return total


def expand_Q(G: ReflectionGroup) -> MPoly:
    """Numerator Q(z, w) of |G| times the averaged kernel over its common denominator."""
    N = _require_exact(G)
    return _skew_numerator(G.elements, N)


def denominator(G: ReflectionGroup, elements: Optional[Sequence[GroupElement]] = None) -> MPoly:
    N = _require_exact(G)
    out = MPoly.one(N)
    for c in _cubes(G.elements if elements is None else elements, N):
        out = out * c
    return out


def skew_check(P: MPoly, G: ReflectionGroup, H: Optional[ReflectionGroup] = None,
               use_generators: bool = True) -> bool:
    """True iff P(g.z, conj(h).u) == conj(J(g)) * J(h) * P for (g, h) in G x H.

    With ``use_generators`` only the pairs (g, id) and (id, h) for generators
    are checked, which suffices because the relation is multiplicative.
    """
    H = G if H is None else H
    N = _require_exact(G)
    _require_exact(H)
    if P.N != N:
        raise ValueError("polynomial conductor differs from the group's")
    ident = GroupElement.identity(N)
    if use_generators:
        pairs = [(g, ident) for g in G.generators] + [(ident, h) for h in H.generators]
    else:
        pairs = list(itertools.product(G.elements, H.elements))
    for g, h in pairs:
        lhs = P.substitute(zmap=_rows(g), umap=_rows(h, conj=True))
        factor = g.exact_det.conjugate() * h.exact_det
        if lhs != P.scale(factor):
            return False
    return True


def _rows(g: GroupElement, conj: bool = False):
    a, b, c, d = g.exact
    if conj:
        a, b, c, d = a.conjugate(), b.conjugate(), c.conjugate(), d.conjugate()
    return ((a, b), (c, d))


@dataclass
class DivisionResult:
    quotient: MPoly
    remainder: MPoly
    remainder_zero: bool

    def __iter__(self):
        yield self.quotient
        yield self.remainder_zero


def _as_cyclo(a, N: int) -> CycloNum:
    if isinstance(a, CycloNum):
        return a
    return CycloNum.rational(a, N)


def exact_divide(P: MPoly, form: Sequence, power: int = 1, side: str = "z") -> DivisionResult:
    """Divide P by (a1*x1 + a2*x2)^power, x being the z pair or the u pair.

    The form is sent to a single coordinate by an invertible linear change of
    variables, the division is read off the exponents of that coordinate and
    the result is mapped back.
    """
    if side not in ("z", "u"):
        raise ValueError("side must be 'z' or 'u'")
    N = P.N
    a1, a2 = (_as_cyclo(a, N) for a in form)
    if a1.is_zero() and a2.is_zero():
        raise ZeroForm("linear form is identically zero")
    one, zero = CycloNum.rational(1, N), CycloNum.rational(0, N)
    # new coordinates y = A x with y1 the form
    if not a1.is_zero():
        A = ((a1, a2), (zero, one))
    else:
        A = ((a1, a2), (one, zero))
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    dinv = det.inverse()
    Ainv = ((A[1][1] * dinv, -A[0][1] * dinv), (-A[1][0] * dinv, A[0][0] * dinv))
    off = 0 if side == "z" else 2

    def sub(poly, M):
        return poly.substitute(zmap=M) if side == "z" else poly.substitute(umap=M)

    moved = sub(P, Ainv)
    quot, rem = {}, {}
    for e, c in moved.terms.items():
        if e[off] >= power:
            e2 = list(e)
            e2[off] -= power
            quot[tuple(e2)] = c
        else:
            rem[e] = c
    q = sub(MPoly._raw(P.F, quot), A)
    r = sub(MPoly._raw(P.F, rem), A)
    return DivisionResult(quotient=q, remainder=r, remainder_zero=r.is_zero())


def z_form(root: Sequence[CycloNum]) -> tuple:
    """Coefficients of <z, rho> = conj(rho1) z1 + conj(rho2) z2."""
    return tuple(r.conjugate() for r in root)


def u_form(root: Sequence[CycloNum]) -> tuple:
    """Coefficients of conj(<w, rho>) = rho1 u1 + rho2 u2."""
    return tuple(root)


def jacobian_polys(G: ReflectionGroup) -> tuple[MPoly, MPoly]:
    """prod_Y <z, rho_Y>^(m_Y - 1) and its u-side conjugate, with exact unnormalised roots."""
    N = _require_exact(G)
    jz, ju = MPoly.one(N), MPoly.one(N)
    for Y in G.hyperplanes:
        k = Y.multiplicity - 1
        jz = jz * MPoly.linear_form(z_form(Y.exact_root), "z", N) ** k
        ju = ju * MPoly.linear_form(u_form(Y.exact_root), "u", N) ** k
    return jz, ju


@dataclass
class MResult:
    M: MPoly
    Q: MPoly
    divisions: list = field(default_factory=list)  # (hyperplane index, side, power)


def compute_M(G: ReflectionGroup, order: Optional[Sequence[tuple]] = None, Q: Optional[MPoly] = None) -> MResult:
    """Divide Q by every <z, rho_Y>^(m_Y-1) and conj(<w, rho_Y>)^(m_Y-1).

    ``order`` optionally lists (hyperplane index, side) pairs to fix the
    division sequence; the default is all z-forms then all u-forms.
    """
    _require_exact(G)
    Q = expand_Q(G) if Q is None else Q
    if order is None:
        order = [(i, "z") for i in range(len(G.hyperplanes))] + [(i, "u") for i in range(len(G.hyperplanes))]
    cur = Q
    done = []
    for i, side in order:
        Y = G.hyperplanes[i]
        form = z_form(Y.exact_root) if side == "z" else u_form(Y.exact_root)
        res = exact_divide(cur, form, Y.multiplicity - 1, side)
        if not res.remainder_zero:
            raise DivisionFailed(f"hyperplane {i} ({side}-side) does not divide the numerator")
        cur = res.quotient
        done.append((i, side, Y.multiplicity - 1))
    return MResult(M=cur, Q=Q, divisions=done)


@dataclass
class BFactorization:
    P_H: MPoly
    Q_H: MPoly
    numerator: MPoly
    L: MPoly
    reflection_index: int
    power: int
    root: tuple
    coset_representatives: list  # indices into G.elements
    outside_H: list  # indices of G \ H, the factors of L


def compute_B_factorization(G: ReflectionGroup, r_index: int) -> BFactorization:
    """Factor B = sum_{g in G minus H} J(g) K(g.z, w) over L, with H generated by the reflection r."""
    N = _require_exact(G)
    r = G.elements[r_index]
    if is_reflection(r) is None:
        raise NotReflection(f"element {r_index} is not a reflection")
    H = close_generators([r], cap=len(G))
    reps = coset_representatives(G, H)
    ordered = []
    for g in reps:
        if g in H:
            continue
        for h in H.elements:
            ordered.append(G.index_of(g @ h))
    outside = ordered
    elements = [G.elements[i] for i in outside]
    numerator = _skew_numerator(elements, N) if elements else MPoly.zero(N)
    L = denominator(G, elements)
    root = exact_root(r)
    k = len(H) - 1
    res_z = exact_divide(numerator, z_form(root), k, "z")
    if not res_z.remainder_zero:
        raise DivisionFailed("<z, rho_r>^(m_r - 1) does not divide the B numerator")
    res_u = exact_divide(res_z.quotient, u_form(root), k, "u")
    if not res_u.remainder_zero:
        raise DivisionFailed("conj(<w, rho_r>)^(m_r - 1) does not divide P_H")
    return BFactorization(
        P_H=res_z.quotient, Q_H=res_u.quotient, numerator=numerator, L=L,
        reflection_index=r_index, power=k, root=root,
        coset_representatives=[G.index_of(g) for g in reps], outside_H=outside,
    )


def hermitian_symmetry_check(P: MPoly) -> bool:
    """True iff P(z, u) equals P with z <-> u swapped and coefficients conjugated."""
    return P == P.conj_swap()


def eval_mpoly(P: MPoly, z, w):
    return P.evaluate(z, w)

"""Finite unitary reflection groups in U(2).

Elements carry a numeric 2x2 matrix and, when available, exact entries in a
cyclotomic field.  Exact entries are the source of truth: the numeric matrix
is derived from them.  Groups built by :func:`family_G` and by
:func:`cyclic_group` along a coordinate axis are always exact; groups given by
arbitrary numeric generators are exact only when every entry is recognised as
a simple cyclotomic number (see :func:`rudin_lab.symbolic.cyclotomic.recognize`).
"""
from __future__ import annotations

import cmath
import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BadDivisor, NotFinite, NotSubgroup, NotUnitary, SpecError
from .symbolic.cyclotomic import CycloNum, recognize

UNITARY_TOL = 1e-12
EQUAL_TOL = 1e-10
DEFAULT_CAP = 10_000

_I2 = np.eye(2, dtype=complex)


def _check_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> None:
    err = np.max(np.abs(m @ m.conj().T - _I2))
    if err > tol or abs(abs(np.linalg.det(m)) - 1.0) > tol:
        raise NotUnitary(f"matrix fails unitarity check (max deviation {err:.3g})")


def _exact_mul(a: tuple, b: tuple) -> tuple:
    return (
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    )


def _order(m: np.ndarray, cap: int) -> int:
    acc = m.copy()
    for k in range(1, cap + 1):
        if np.max(np.abs(acc - _I2)) <= EQUAL_TOL:
            return k
        acc = acc @ m
    raise NotFinite(f"element order exceeds {cap}")


class GroupElement:
    """A unitary 2x2 matrix, optionally with exact cyclotomic entries.

    ``exact`` holds the entries row-major as four :class:`CycloNum` sharing
    one conductor.
    """

    __slots__ = ("matrix", "exact", "det", "exact_det", "_order")

    def __init__(self, matrix=None, exact: Optional[Sequence[CycloNum]] = None, *, check: bool = True):
        if exact is not None:
            exact = tuple(exact)
            if len(exact) != 4:
                raise ValueError("exact entries must be four cyclotomic numbers")
            mat = np.array([[exact[0].embed(), exact[1].embed()],
                            [exact[2].embed(), exact[3].embed()]], dtype=complex)
        else:
            mat = np.array(matrix, dtype=complex).reshape(2, 2)
        if check:
            _check_unitary(mat)
        mat.setflags(write=False)
        self.matrix = mat
        self.exact = exact
        if exact is not None:
            self.exact_det = exact[0] * exact[3] - exact[1] * exact[2]
            self.det = self.exact_det.embed()
        else:
            self.exact_det = None
            self.det = complex(np.linalg.det(mat))
        self._order = None

    @classmethod
    def identity(cls, N: Optional[int] = None) -> "GroupElement":
        if N is None:
            return cls(_I2)
        one, zero = CycloNum.rational(1, N), CycloNum.rational(0, N)
        return cls(exact=(one, zero, zero, one))

    @property
    def N(self) -> Optional[int]:
        return None if self.exact is None else self.exact[0].N

    @property
    def order(self) -> int:
        if self._order is None:
            self._order = _order(self.matrix, DEFAULT_CAP)
        return self._order

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if self.exact is not None and other.exact is not None and self.N == other.N:
            return GroupElement(exact=_exact_mul(self.exact, other.exact), check=False)
        return GroupElement(self.matrix @ other.matrix, check=False)

    def inverse(self) -> "GroupElement":
        if self.exact is not None:
            a, b, c, d = self.exact
            return GroupElement(exact=(a.conjugate(), c.conjugate(), b.conjugate(), d.conjugate()),
                                check=False)
        return GroupElement(self.matrix.conj().T, check=False)

    def act(self, z) -> np.ndarray:
        """g.z for a point or a batch of points (last axis of length 2)."""
        return np.asarray(z, dtype=complex) @ self.matrix.T

    def is_identity(self) -> bool:
        return bool(np.max(np.abs(self.matrix - _I2)) <= EQUAL_TOL)

    def key(self):
        """Hashable identity key: exact coefficients, else rounded entries."""
        if self.exact is not None:
            return ("x", self.N) + tuple(e.coeffs for e in self.exact)
        flat = self.matrix.ravel()
        return ("n",) + tuple((round(v.real, 8) + 0.0, round(v.imag, 8) + 0.0) for v in flat)

    def same_as(self, other: "GroupElement") -> bool:
        if self.exact is not None and other.exact is not None and self.N == other.N:
            return all(a == b for a, b in zip(self.exact, other.exact))
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= EQUAL_TOL)

    def __repr__(self):
        rows = ", ".join("[" + ", ".join(f"{v:.4g}" for v in row) + "]" for row in self.matrix)
        return f"GroupElement([{rows}])"


@dataclass(frozen=True)
class ReflectionData:
    root: np.ndarray
    angle: float  # argument of the non-unit eigenvalue, in (0, 2*pi)


def _canonical_root(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    for c in v:
        if abs(c) > 1e-12:
            v = v * (abs(c) / c)
            break
    return v


def is_reflection(g: GroupElement) -> Optional[ReflectionData]:
    """Return root and rotation angle if ``g`` is a reflection, else None."""
    if g.is_identity():
        return None
    A = g.matrix - _I2
    if abs(np.linalg.det(A)) > 1e-9:
        return None
    col = A[:, int(np.argmax(np.linalg.norm(A, axis=0)))]
    theta = cmath.phase(g.det) % (2 * math.pi)
    if theta <= 1e-12:
        return None
    return ReflectionData(root=_canonical_root(col), angle=theta)


def exact_root(g: GroupElement) -> Optional[tuple]:
    """Unnormalised exact root (first nonzero coordinate equal to 1)."""
    if g.exact is None:
        return None
    a, b, c, d = g.exact
    one = CycloNum.rational(1, g.N)
    cols = [(a - one, c), (b, d - one)]
    for col in cols:
        for k, entry in enumerate(col):
            if not entry.is_zero():
                lead = entry.inverse()
                return tuple(x * lead for x in col)
    return None


@dataclass(frozen=True)
class HyperplaneData:
    root: np.ndarray
    multiplicity: int
    members: tuple
    angles: tuple  # folded into (0, pi]; 2*sin(angle/2) is unchanged by folding
    exact_root: Optional[tuple] = None


def _fold(theta: float) -> float:
    return theta if theta <= math.pi else 2 * math.pi - theta


class ReflectionGroup:
    """A finite subgroup of U(2) together with its reflection data.

    ``elements[0]`` is always the identity.
    """

    def __init__(self, elements: Sequence[GroupElement], generators: Sequence[GroupElement],
                 label: str = "", conductor: Optional[int] = None):
        self.elements = tuple(elements)
        self.generators = tuple(generators)
        self.label = label
        self._index = {g.key(): i for i, g in enumerate(self.elements)}
        self.exponent = math.lcm(*(g.order for g in self.elements))
        if conductor is None and all(g.exact is not None for g in self.elements):
            conductor = self.elements[0].N
        self.conductor = conductor if all(g.exact is not None for g in self.elements) else None
        self.hyperplanes = reflecting_hyperplanes(self)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"ReflectionGroup({self.label or '?'}, order={len(self)})"

    @property
    def is_exact(self) -> bool:
        return self.conductor is not None

    def index_of(self, g: GroupElement) -> Optional[int]:
        i = self._index.get(g.key())
        if i is not None:
            return i
        for j, h in enumerate(self.elements):
            if h.same_as(g):
                return j
        return None

    def __contains__(self, g: GroupElement) -> bool:
        return self.index_of(g) is not None

    @cached_property
    def matrices(self) -> np.ndarray:
        return np.stack([g.matrix for g in self.elements])

    @cached_property
    def dets(self) -> np.ndarray:
        return np.array([g.det for g in self.elements], dtype=complex)

    @cached_property
    def reflections(self) -> list[tuple[int, ReflectionData]]:
        out = []
        for i, g in enumerate(self.elements):
            data = is_reflection(g)
            if data is not None:
                out.append((i, data))
        return out

    def describe(self) -> dict:
        return {
            "label": self.label,
            "order": len(self),
            "exponent": self.exponent,
            "conductor": self.conductor,
            "reflections": len(self.reflections),
            "hyperplanes": [
                {
                    "root": [[float(c.real), float(c.imag)] for c in Y.root],
                    "multiplicity": Y.multiplicity,
                    "members": list(Y.members),
                    "angles": list(Y.angles),
                }
                for Y in self.hyperplanes
            ],
        }


def reflecting_hyperplanes(G: ReflectionGroup) -> list[HyperplaneData]:
    """Group the reflections of ``G`` by their fixed hyperplane."""
    buckets: list[list] = []
    for i, g in enumerate(G.elements):
        data = is_reflection(g)
        if data is None:
            continue
        for b in buckets:
            if np.max(np.abs(b[0] - data.root)) <= EQUAL_TOL:
                b[1].append(i)
                b[2].append(_fold(data.angle))
                break
        else:
            buckets.append([data.root, [i], [_fold(data.angle)]])
    out = []
    for root, members, angles in buckets:
        ex = exact_root(G.elements[members[0]]) if G.elements[members[0]].exact is not None else None
        out.append(HyperplaneData(root=root, multiplicity=len(members) + 1,
                                  members=tuple(members), angles=tuple(angles), exact_root=ex))
    return out


def close_generators(gens: Iterable[GroupElement], cap: int = DEFAULT_CAP, label: str = "") -> ReflectionGroup:
    """Multiplicative closure of a generator list."""
    gens = list(gens)
    for g in gens:
        _check_unitary(g.matrix)
    exact = bool(gens) and all(g.exact is not None for g in gens) and len({g.N for g in gens}) == 1
    if not exact:
        gens = [GroupElement(g.matrix, check=False) for g in gens]
    ident = GroupElement.identity(gens[0].N if exact else None)
    if not gens:
        return ReflectionGroup([ident], [ident], label=label)
    elements = [ident]
    seen = {ident.key(): 0}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                prod = h @ g
                k = prod.key()
                if k in seen:
                    continue
                seen[k] = len(elements)
                elements.append(prod)
                nxt.append(prod)
                if len(elements) > cap:
                    raise NotFinite(f"closure exceeds cap={cap}")
        frontier = nxt
    return ReflectionGroup(elements, gens, label=label)


def _family_matrices(m: int, l: int):
    theta = cmath.exp(2j * math.pi / m)
    out = []
    for tau in ((0, 1), (1, 0)):
        for nu1 in range(m):
            for nu2 in range(m):
                if (nu1 + nu2) % l:
                    continue
                out.append((tau, nu1, nu2))
    # identity first
    out.sort(key=lambda t: (t[0] != (0, 1), t[1], t[2]))
    mats = []
    for tau, nu1, nu2 in out:
        M = np.zeros((2, 2), dtype=complex)
        M[0, tau[0]] = theta ** nu1
        M[1, tau[1]] = theta ** nu2
        mats.append(M)
    return out, mats


def _family_exact(m: int, N: int, tau, nu1: int, nu2: int) -> tuple:
    zero = CycloNum.rational(0, N)
    entries = [zero] * 4
    step = N // m
    entries[0 * 2 + tau[0]] = CycloNum.root_of_unity(nu1 * step, N)
    entries[1 * 2 + tau[1]] = CycloNum.root_of_unity(nu2 * step, N)
    return tuple(entries)


def family_G(m: int, l: int) -> ReflectionGroup:
    """The imprimitive group G(m, l, 2) by direct enumeration."""
    if m < 1 or l < 1 or m % l:
        raise BadDivisor(f"l={l} does not divide m={m}")
    data, mats = _family_matrices(m, l)
    N = math.lcm(*(_order(M, DEFAULT_CAP) for M in mats))
    elements = [GroupElement(exact=_family_exact(m, N, *d), check=False) for d in data]
    gens = [elements[data.index(d)] for d in _generator_data(m, l)]
    return ReflectionGroup(elements, gens, label=f"G({m},{l},2)", conductor=N)


def _generator_data(m: int, l: int):
    gens = [((1, 0), 0, 0)]
    if m > 1:
        gens.append(((1, 0), m - 1, 1))
    if l < m:
        gens.append(((0, 1), l, 0))
    return gens


def family_generators(m: int, l: int) -> list[GroupElement]:
    """Reflection generators of G(m, l, 2), for closure cross-checks."""
    if m < 1 or l < 1 or m % l:
        raise BadDivisor(f"l={l} does not divide m={m}")
    data, mats = _family_matrices(m, l)
    N = math.lcm(*(_order(M, DEFAULT_CAP) for M in mats))
    return [GroupElement(exact=_family_exact(m, N, *d), check=False) for d in _generator_data(m, l)]


def _try_exact(mats: Sequence[np.ndarray]) -> Optional[list[GroupElement]]:
    base = math.lcm(*(_order(np.asarray(M, dtype=complex), DEFAULT_CAP) for M in mats))
    candidates = []
    for extra in (1, 2, 3, 4, 6, 8, 12, 24):
        N = math.lcm(base, extra)
        if N not in candidates and N <= 48:
            candidates.append(N)
    for N in candidates:
        out = []
        for M in mats:
            entries = [recognize(complex(v), N) for v in np.asarray(M, dtype=complex).ravel()]
            if any(e is None for e in entries):
                break
            out.append(GroupElement(exact=entries, check=False))
        else:
            if all(np.max(np.abs(g.matrix - np.asarray(M))) <= 1e-10 for g, M in zip(out, mats)):
                return out
    return None


def from_matrices(mats: Sequence, cap: int = DEFAULT_CAP, label: str = "") -> ReflectionGroup:
    """Close numeric generator matrices, promoting to exact entries when recognisable."""
    mats = [np.asarray(M, dtype=complex).reshape(2, 2) for M in mats]
    for M in mats:
        _check_unitary(M)
    exact = _try_exact(mats) if mats else None
    gens = exact if exact is not None else [GroupElement(M) for M in mats]
    if not gens:
        gens = [GroupElement.identity()]
    return close_generators(gens, cap=cap, label=label)


def cyclic_group(m: int, root=(1.0, 0.0), cap: int = DEFAULT_CAP) -> ReflectionGroup:
    """Cyclic group generated by the order-m reflection with the given root."""
    rho = np.asarray(root, dtype=complex)
    rho = rho / np.linalg.norm(rho)
    if m == 1:
        return from_matrices([_I2], cap=cap, label="cyclic(1)")
    r = _I2 + (cmath.exp(2j * math.pi / m) - 1) * np.outer(rho, rho.conj())
    return from_matrices([r], cap=cap, label=f"cyclic({m})")


def trivial_group() -> ReflectionGroup:
    e = GroupElement.identity(1)
    return ReflectionGroup([e], [e], label="trivial", conductor=1)


def conjugate_group(G: ReflectionGroup, u) -> ReflectionGroup:
    """The conjugate group {u g u^-1}."""
    u = u if isinstance(u, GroupElement) else GroupElement(np.asarray(u, dtype=complex))
    _check_unitary(u.matrix)
    uinv = u.inverse()
    if G.is_exact and u.exact is not None and u.N == G.conductor:
        els = [u @ g @ uinv for g in G.elements]
        gens = [u @ g @ uinv for g in G.generators]
    else:
        els = [GroupElement(u.matrix @ g.matrix @ uinv.matrix, check=False) for g in G.elements]
        gens = [GroupElement(u.matrix @ g.matrix @ uinv.matrix, check=False) for g in G.generators]
    return ReflectionGroup(els, gens, label=f"conj({G.label})")


def subgroup_generated(G: ReflectionGroup, gens: Sequence[GroupElement]) -> ReflectionGroup:
    return close_generators(gens, cap=len(G), label="sub")


def coset_representatives(G: ReflectionGroup, H: ReflectionGroup) -> list[GroupElement]:
    """Left coset representatives g with G = disjoint union of gH."""
    for h in H.elements:
        if h not in G:
            raise NotSubgroup("H is not contained in G")
    covered = set()
    reps = []
    for i, g in enumerate(G.elements):
        if i in covered:
            continue
        reps.append(g)
        for h in H.elements:
            j = G.index_of(g @ h)
            if j is None:
                raise NotSubgroup("coset leaves G")
            covered.add(j)
    if len(reps) * len(H) != len(G):
        raise NotSubgroup("H is not a subgroup of G")
    return reps


# group-spec files --------------------------------------------------------

def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise SpecError(f"cannot parse complex value {v!r}")


def group_from_spec(spec: dict) -> ReflectionGroup:
    """Build a group from a parsed group-spec dictionary."""
    if not isinstance(spec, dict):
        raise SpecError("group spec must be a JSON object")
    fam = spec.get("family")
    try:
        if fam == "G":
            return family_G(int(spec["m"]), int(spec["l"]))
        if fam == "cyclic":
            root = spec.get("root", [[1, 0], [0, 0]])
            return cyclic_group(int(spec["m"]), [_parse_complex(c) for c in root])
        if fam == "trivial":
            return trivial_group()
        if "generators" in spec:
            mats = [[[_parse_complex(c) for c in row] for row in M] for M in spec["generators"]]
            return from_matrices(mats, cap=int(spec.get("cap", DEFAULT_CAP)), label="custom")
    except KeyError as exc:
        raise SpecError(f"missing field {exc}") from exc
    raise SpecError("unrecognised group spec")


def load_group_spec(path) -> tuple[ReflectionGroup, dict, str]:
    """Read a JSON group-spec file; returns (group, spec dict, sha256 of the file)."""
    raw = Path(path).read_bytes()
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from exc
    return group_from_spec(spec), spec, hashlib.sha256(raw).hexdigest()

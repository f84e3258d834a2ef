"""The lifted projection Q f(z) = ∫ K_G(z, w) f(w) dV(w) on polynomial test functions.

Test functions are polynomials in (w, conj w).  For those the Bergman
projection of the ball is known in closed form,

    P(w^a conj(w)^b)(z) = (2+|c|)! a! / (c! (2+|a|)!) z^c   if c = a - b >= 0,  else 0,

and Q f(z) = (1/|G|) sum_g J(g) (P f)(g.z).  ``operator_apply`` estimates the
same integral by importance-sampled Monte Carlo, which is what the
reproducing-property checks exercise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import sampling as smp
from ..errors import QuadratureUnstable
from ..groups import ReflectionGroup
from ..kernels import BALL_CONSTANT, averaged_kernel_batch, jacobian_batch, orbit

BALL_VOLUME = math.pi**2 / 2
DEFAULT_BUDGET = 200_000
UNSTABLE_FRACTION = 0.1


@dataclass(frozen=True)
class TestFunction:
    """sum of c * w1^a1 w2^a2 conj(w1)^b1 conj(w2)^b2 over ``terms`` {(a1, a2, b1, b2): c}."""

    __test__ = False  # not a pytest class

    name: str
    terms: tuple  # sorted ((a1, a2, b1, b2), complex) pairs

    @classmethod
    def from_dict(cls, name: str, terms: dict) -> "TestFunction":
        clean = tuple(sorted((tuple(int(x) for x in e), complex(c)) for e, c in terms.items() if c != 0))
        return cls(name, clean)

    @property
    def is_holomorphic(self) -> bool:
        return all(e[2] == 0 and e[3] == 0 for e, _ in self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def __call__(self, W) -> np.ndarray:
        W = np.asarray(W, dtype=complex).reshape(-1, 2)
        U = np.conj(W)
        out = np.zeros(len(W), dtype=complex)
        for (a1, a2, b1, b2), c in self.terms:
            out += c * W[:, 0] ** a1 * W[:, 1] ** a2 * U[:, 0] ** b1 * U[:, 1] ** b2
        return out

    def projection_terms(self) -> dict:
        """Coefficients of the holomorphic polynomial P f, keyed by exponent pairs."""
        out: dict = {}
        for (a1, a2, b1, b2), c in self.terms:
            g1, g2 = a1 - b1, a2 - b2
            if g1 < 0 or g2 < 0:
                continue
            coef = (math.factorial(2 + g1 + g2) * math.factorial(a1) * math.factorial(a2)
                    / (math.factorial(g1) * math.factorial(g2) * math.factorial(2 + a1 + a2)))
            out[(g1, g2)] = out.get((g1, g2), 0) + c * coef
        return out

    def project(self, Z) -> np.ndarray:
        """Bergman projection P f evaluated at the rows of Z."""
        Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
        out = np.zeros(len(Z), dtype=complex)
        for (g1, g2), c in self.projection_terms().items():
            out += c * Z[:, 0] ** g1 * Z[:, 1] ** g2
        return out


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def jacobian_terms(G: ReflectionGroup) -> dict:
    """prod_Y <w, rho_Y>^(m_Y - 1) as a polynomial in w (unit modulus constant)."""
    out = {(0, 0, 0, 0): 1.0 + 0j}
    for Y in G.hyperplanes:
        form = {(1, 0, 0, 0): np.conj(Y.root[0]), (0, 1, 0, 0): np.conj(Y.root[1])}
        for _ in range(Y.multiplicity - 1):
            out = poly_mul(out, form)
    return out


def monomial(a1: int, a2: int, b1: int = 0, b2: int = 0) -> TestFunction:
    name = f"w^({a1},{a2})" + (f"*conj(w)^({b1},{b2})" if b1 or b2 else "")
    return TestFunction.from_dict(name, {(a1, a2, b1, b2): 1})


def holomorphic_monomials(max_degree: int = 4) -> list[TestFunction]:
    return [monomial(a, d - a) for d in range(max_degree + 1) for a in range(d, -1, -1)]


MIXED = (((1, 0), (1, 0)), ((0, 1), (1, 0)), ((2, 0), (0, 1)))


def default_family(G: ReflectionGroup, seed: int = 42, max_degree: int = 4) -> list[TestFunction]:
    """J_pi(w) w^a for |a| <= max(0, 4 - deg J_pi), J_pi(w) w^a conj(w)^b for three
    fixed mixed pairs, and three seeded random combinations of all of these.

    The J_pi factor keeps every member in L^p(sigma) for the whole p grid;
    plain monomials fail to be there once (m_Y - 1)(p - 2) >= 2.
    """
    J = jacobian_terms(G)
    deg = max(sum(e) for e in J)
    tag = "J*" if deg else ""
    fam = []
    for d in range(max(0, max_degree - deg) + 1):
        for a in range(d, -1, -1):
            fam.append(TestFunction.from_dict(f"{tag}w^({a},{d - a})", poly_mul(J, {(a, d - a, 0, 0): 1})))
    for (a, b) in MIXED:
        fam.append(TestFunction.from_dict(f"{tag}w^({a[0]},{a[1]})*conj(w)^({b[0]},{b[1]})", poly_mul(J, {(a[0], a[1], b[0], b[1]): 1})))
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=smp.stream_key("family")))
    base = list(fam)
    for i in range(3):
        coeffs = rng.standard_normal(len(base)) + 1j * rng.standard_normal(len(base))
        terms: dict = {}
        for c, f in zip(coeffs, base):
            for e, v in f.terms:
                terms[e] = terms.get(e, 0) + c * v
        fam.append(TestFunction.from_dict(f"combo{i}", terms))
    return fam


def _linear_power(a: complex, b: complex, k: int) -> dict:
    """(a z1 + b z2)^k as {(i, j): coeff}."""
    return {(i, k - i): math.comb(k, i) * a**i * b ** (k - i) for i in range(k + 1)}


def q_polynomial(G: ReflectionGroup, f: TestFunction, rel_tol: float = 1e-13) -> dict:
    """Coefficients of Q f = (1/|G|) sum_g J(g) (P f)(g.z) as a holomorphic polynomial.

    Coefficients below rel_tol times the largest coefficient of P f are
    round-off from cancelling group terms and are dropped.
    """
    pf = f.projection_terms()
    out: dict = {}
    for g, det in zip(G.matrices, G.dets):
        (a, b), (c, d) = g
        for (i, j), coef in pf.items():
            for (i1, j1), c1 in _linear_power(a, b, i).items():
                for (i2, j2), c2 in _linear_power(c, d, j).items():
                    e = (i1 + i2, j1 + j2)
                    out[e] = out.get(e, 0) + det * coef * c1 * c2 / len(G)
    scale = max((abs(c) for c in pf.values()), default=0.0)
    return {e: c for e, c in sorted(out.items()) if abs(c) > rel_tol * scale}


def eval_holomorphic(terms: dict, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    out = np.zeros(len(Z), dtype=complex)
    for (i, j), c in terms.items():
        out += c * Z[:, 0] ** i * Z[:, 1] ** j
    return out


def exact_Q(G: ReflectionGroup, f: TestFunction, Z) -> np.ndarray:
    """(1/|G|) sum_g J(g) (P f)(g.z) for the rows of Z."""
    return eval_holomorphic(q_polynomial(G, f), Z)


# Monte Carlo application ---------------------------------------------------------------

def singular_normalizer(r: float, tol: float = 1e-17) -> float:
    """∫_B |1 - <a, w>|^-3 dV(w) for |a| = r < 1.

    sum_k ((3/2)_k / k!)^2 pi^2 / ((k+1)(k+2)) r^(2k); the value at r = 0 is the ball volume.
    """
    if not 0 <= r < 1:
        raise ValueError("need 0 <= r < 1")
    total, c, k, rr = 0.0, 1.0, 0, r * r
    power = 1.0
    while True:
        term = c * c * math.pi**2 / ((k + 1) * (k + 2)) * power
        total += term
        if term < tol * total or power == 0.0:
            return total
        c *= (1.5 + k) / (k + 1)
        power *= rr
        k += 1


@dataclass
class QuadResult:
    value: complex
    stderr: float
    scale: float
    nodes: int

    @property
    def unstable(self) -> bool:
        return self.stderr > UNSTABLE_FRACTION * max(abs(self.value), self.scale)

    def to_dict(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "stderr": self.stderr, "scale": self.scale,
                "nodes": self.nodes}


def _sample_singular(rng, a: np.ndarray, n: int) -> np.ndarray:
    """Exact draws from the density ∝ |1 - <a, w>|^-3 on the ball, by rejection from uniform."""
    r = float(np.linalg.norm(a))
    bound = (1.0 - r) ** -3
    out, got = [], 0
    while got < n:
        k = max(64, int(1.3 * (n - got) * min(bound, 1e4)))
        W = smp.uniform_ball(rng, k)
        dens = np.abs(1 - W @ np.conj(a)) ** -3
        acc = rng.random(k) * bound < dens
        out.append(W[acc])
        got += int(acc.sum())
    return np.concatenate(out)[:n]


def operator_apply(G: ReflectionGroup, f: TestFunction, z, budget: int = DEFAULT_BUDGET, seed: int = 42,
                   raise_unstable: bool = True) -> QuadResult:
    """Importance-sampled estimate of ∫ K_G(z, w) f(w) dV(w) with the normalised kernel.

    The proposal is the 50/50 mixture of the uniform density and
    (1/|G|) sum_g |1 - <g.z, w>|^-3 / Z(|z|), drawn exactly by rejection.
    """
    z = np.asarray(z, dtype=complex).reshape(2)
    r = float(np.linalg.norm(z))
    Zr = singular_normalizer(r)
    anchors = orbit(G, z[None, :])[:, 0, :]
    n_el = len(G)

    def work(rng, n):
        pick = rng.random(n) < 0.5
        n_s = int(pick.sum())
        W = np.empty((n, 2), dtype=complex)
        W[~pick] = smp.uniform_ball(rng, n - n_s)
        which = rng.integers(0, n_el, n_s)
        Ws = np.empty((n_s, 2), dtype=complex)
        for gi in range(n_el):
            sel = which == gi
            if sel.any():
                Ws[sel] = _sample_singular(rng, anchors[gi], int(sel.sum()))
        W[pick] = Ws
        s = np.mean(np.abs(1 - W @ np.conj(anchors).T) ** -3, axis=1) / Zr
        q = 0.5 / BALL_VOLUME + 0.5 * s
        h = averaged_kernel_batch(G, np.broadcast_to(z, W.shape), W, BALL_CONSTANT) * f(W) / q
        return h.sum(), float(np.sum(np.abs(h) ** 2)), float(np.sum(np.abs(h))), n

    parts = smp.run_chunked(work, budget, seed, smp.stream_key("operator", f.name))
    n = sum(p[3] for p in parts)
    s1 = sum((p[0] for p in parts), 0j)
    s2 = sum(p[1] for p in parts)
    sa = sum(p[2] for p in parts)
    mean = s1 / n
    var = max(s2 / n - abs(mean) ** 2, 0.0) * n / max(n - 1, 1)
    res = QuadResult(value=complex(mean), stderr=math.sqrt(var / n), scale=sa / n, nodes=n)
    if raise_unstable and res.unstable:
        raise QuadratureUnstable(f"standard error {res.stderr:.3g} too large for |value| {abs(res.value):.3g}",
                                 value=res.value, stderr=res.stderr)
    return res


# weighted norms -----------------------------------------------------------------------

@dataclass
class ScanCell:
    p: float
    function: str
    norm_Qf: float
    norm_f: float
    ratio: float
    ratio_stderr: float
    unstable: bool


@dataclass
class ScanResult:
    group: str
    p_grid: list
    family: list
    nodes: int
    seed: int
    inner: str
    cells: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(c.ratio) for c in self.cells)

    @property
    def any_unstable(self) -> bool:
        return any(c.unstable for c in self.cells)

    def max_ratio(self, p: Optional[float] = None) -> float:
        vals = [c.ratio for c in self.cells if p is None or c.p == p]
        return max(vals) if vals else math.nan


def weighted_norm_scan(G: ReflectionGroup, p_grid: Sequence[float], family: Optional[Sequence[TestFunction]] = None,
                       nodes: int = DEFAULT_BUDGET, seed: int = 42, inner: str = "exact",
                       inner_budget: int = 20_000) -> ScanResult:
    """Ratios ||Q f||_{L^p(sigma)} / ||f||_{L^p(sigma)}, sigma = |J_pi|^(2-p).

    Both norms use the same uniform nodes.  ``inner="exact"`` evaluates Q f
    through the closed-form projection; ``inner="mc"`` calls operator_apply at
    every node instead (slow, meant for small ``nodes``).
    """
    if inner not in ("exact", "mc"):
        raise ValueError("inner must be 'exact' or 'mc'")
    ps = [float(p) for p in p_grid]
    for p in ps:
        if not 1 < p < math.inf:
            raise ValueError(f"p must lie in (1, inf), got {p}")
    family = default_family(G, seed) if family is None else list(family)

    qpolys = {f.name: q_polynomial(G, f) for f in family} if inner == "exact" else {}

    def work(rng, n):
        W = smp.uniform_ball(rng, n)
        J = np.abs(jacobian_batch(G, W))
        out = {}
        for f in family:
            fv = np.abs(f(W))
            if inner == "exact":
                qv = np.abs(eval_holomorphic(qpolys[f.name], W))
            else:
                qv = np.array([abs(operator_apply(G, f, w, inner_budget, seed, raise_unstable=False).value)
                               for w in W])
            for p in ps:
                with np.errstate(divide="ignore", invalid="ignore"):
                    sig = J ** (2.0 - p)
                    a = np.where(qv == 0, 0.0, qv**p * sig)
                    b = np.where(fv == 0, 0.0, fv**p * sig)
                out[(p, f.name)] = (a.sum(), (a * a).sum(), b.sum(), (b * b).sum())
        return out, n

    parts = smp.run_chunked(work, nodes, seed, smp.stream_key("weighted", inner))
    n = sum(p[1] for p in parts)
    cells = []
    for p in ps:
        for f in family:
            sums = np.sum([pt[0][(p, f.name)] for pt in parts], axis=0)
            a1, a2, b1, b2 = (float(x) for x in sums)
            ma, mb = a1 / n, b1 / n
            sa = math.sqrt(max(a2 / n - ma * ma, 0.0) / n)
            sb = math.sqrt(max(b2 / n - mb * mb, 0.0) / n)
            ra = sa / ma if ma > 0 else math.inf
            rb = sb / mb if mb > 0 else math.inf
            nq = (BALL_VOLUME * ma) ** (1 / p)
            nf = (BALL_VOLUME * mb) ** (1 / p)
            ratio = nq / nf if nf > 0 else math.inf
            # delta method on (A/B)^(1/p); a Q f that vanishes identically is exact
            rel = math.hypot(ra if ma > 0 else 0.0, rb) / p
            unstable = (ma > 0 and ra > UNSTABLE_FRACTION) or rb > UNSTABLE_FRACTION
            cells.append(ScanCell(p=p, function=f.name, norm_Qf=nq, norm_f=nf, ratio=ratio,
                                  ratio_stderr=ratio * rel, unstable=bool(unstable)))
    return ScanResult(group=G.label, p_grid=ps, family=[f.name for f in family], nodes=n, seed=seed, inner=inner,
                      cells=cells)

"""Boundary-diagonal regions U_g(eps), S_g(eps) and the audits built on them.

For a group element g and eps > 0,

    U_g(eps) = {(z, w) : d(z) + d(w) + |g.z - w| < eps},   d(z) = 1 - |z|,
    S_g(eps) = {(z, w) : |1 - <g.z, w>| < eps}.

The audits are falsification harnesses: they sample hard near the thin
region geometry and count points that contradict a claimed inclusion,
emptiness or slab bound.  All sampling goes through :mod:`rudin_lab.sampling`
so results depend only on the seed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import sampling as smp
from .errors import IsIdentity, IsReflection, NoReflections, NotReflection
from .groups import GroupElement, ReflectionGroup, is_reflection

DEFAULT_GRID = (0.2, 0.1, 0.05, 0.02, 0.01)
MIN_DIST = 1e-6

ElementLike = Union[GroupElement, int]


@dataclass(frozen=True)
class RegionQuery:
    g: GroupElement
    epsilon: float
    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex).reshape(2))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=complex).reshape(2))


def u_measure(M: np.ndarray, Z, W) -> np.ndarray:
    """d(z) + d(w) + |M z - w| row-wise."""
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    W = np.asarray(W, dtype=complex).reshape(-1, 2)
    return (1 - np.linalg.norm(Z, axis=1)) + (1 - np.linalg.norm(W, axis=1)) + np.linalg.norm(Z @ M.T - W, axis=1)


def s_measure(M: np.ndarray, Z, W) -> np.ndarray:
    """|1 - <M z, w>| row-wise."""
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    W = np.asarray(W, dtype=complex).reshape(-1, 2)
    return np.abs(1 - np.sum((Z @ M.T) * np.conj(W), axis=1))


def in_U(q: RegionQuery) -> bool:
    return bool(u_measure(q.g.matrix, q.z, q.w)[0] < q.epsilon)


def in_S(q: RegionQuery) -> bool:
    return bool(s_measure(q.g.matrix, q.z, q.w)[0] < q.epsilon)


@dataclass
class RegionReport:
    audit: str
    group: str
    epsilon: float
    samples: int
    seed: int
    hits: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    witness: Optional[dict] = None
    passed: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def pair_dict(z, w) -> dict:
    return {"z": [[float(c.real), float(c.imag)] for c in z], "w": [[float(c.real), float(c.imag)] for c in w]}


def _element(G: Optional[ReflectionGroup], g: ElementLike) -> GroupElement:
    if isinstance(g, GroupElement):
        return g
    return G.elements[int(g)]


# targeted sampling -------------------------------------------------------------

def _near_image(rng, M: np.ndarray, n: int, eps: float, spread: float) -> tuple[np.ndarray, np.ndarray]:
    """z near the sphere, w = M z + delta with |delta| log-uniform up to spread*eps."""
    dz = smp.log_uniform(rng, MIN_DIST, eps, n)
    Z = smp.set_boundary_distance(smp.sphere(rng, n), dz)
    delta = smp.complex_direction(rng, n) * smp.log_uniform(rng, MIN_DIST, spread * eps, n)[:, None]
    dw = smp.log_uniform(rng, MIN_DIST, eps, n)
    W = smp.clip_to_ball(Z @ M.T + delta, dw)
    return Z, W


def _tangential(rng, M: np.ndarray, n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Pairs with |1 - <M z, w>| small along the complex-tangential direction.

    The unit direction of w makes angle t with M z (t up to sqrt(4 eps)), and a
    small phase is added, so the pairs fill the anisotropic S_g region.
    """
    dz = smp.log_uniform(rng, MIN_DIST, eps, n)
    dw = smp.log_uniform(rng, MIN_DIST, eps, n)
    a = smp.sphere(rng, n)
    b = np.stack([-np.conj(a[:, 1]), np.conj(a[:, 0])], axis=1)  # <b, a> = 0
    t = smp.log_uniform(rng, 1e-4, math.sqrt(4 * eps), n)
    phi = smp.log_uniform(rng, MIN_DIST, eps, n) * rng.choice([-1.0, 1.0], n)
    wdir = a * (np.cos(t) * np.exp(1j * phi))[:, None] + b * np.sin(t)[:, None]
    Z = np.linalg.solve(M, a.T).T * (1 - dz)[:, None]
    W = wdir * (1 - dw)[:, None]
    return Z, W


def nesting_audit(G: ReflectionGroup, epsilon: float, sample_count: int = 100_000, seed: int = 42) -> RegionReport:
    """Count violations of U_g(eps) in S_g(3 eps) and of S_g(3 eps) in U_g(12 eps).

    Half of the budget targets U_g (w close to g.z), half targets the
    tangential extent of S_g(3 eps).  A third inclusion,
    S_g(3 eps) in U_g(6 eps + sqrt(6 eps)), which follows from
    |g.z - w|^2 <= 2 |1 - <g.z, w>|, is audited alongside.
    """
    eps = float(epsilon)
    loose = 6 * eps + math.sqrt(6 * eps)
    per_g = smp.chunk_sizes(sample_count, max(1, -(-sample_count // len(G))))
    counts = {"in_U": 0, "in_S3": 0}
    viol = {"U_in_S3": 0, "S3_in_U12": 0, "S3_in_U_loose": 0}
    worst = None
    for gi, (g, n) in enumerate(zip(G.elements, per_g)):
        M = g.matrix

        def work(rng, k, M=M):
            h = k // 2
            Z1, W1 = _near_image(rng, M, h, eps, 2.0)
            Z2, W2 = _tangential(rng, M, k - h, 3 * eps)
            Z = np.concatenate([Z1, Z2])
            W = np.concatenate([W1, W2])
            um, sm = u_measure(M, Z, W), s_measure(M, Z, W)
            inU, inS3 = um < eps, sm < 3 * eps
            bad2 = inS3 & ~(um < 12 * eps)
            cand = None
            if bad2.any():
                idx = np.nonzero(bad2)[0]
                j = idx[smp.lex_argmax(um[idx], Z[idx], W[idx])]
                cand = (float(um[j]), Z[j], W[j])
            return (int(inU.sum()), int(inS3.sum()), int((inU & ~inS3).sum()), int(bad2.sum()),
                    int((inS3 & ~(um < loose)).sum()), cand)

        parts = smp.run_chunked(work, n, seed, smp.stream_key("nesting", gi, round(eps * 1e9)))
        for a, b, c, d, e, cand in parts:
            counts["in_U"] += a
            counts["in_S3"] += b
            viol["U_in_S3"] += c
            viol["S3_in_U12"] += d
            viol["S3_in_U_loose"] += e
        best = smp.merge_max([p[5] for p in parts])
        if best is not None and (worst is None or best[0] > worst[0]):
            worst = (best[0], best[1], best[2], gi)
    witness = None
    if worst is not None:
        witness = dict(pair_dict(worst[1], worst[2]), element=worst[3], u_measure=worst[0],
                       s_measure=float(s_measure(G.elements[worst[3]].matrix, worst[1], worst[2])[0]))
    return RegionReport(
        audit="nesting", group=G.label, epsilon=eps, samples=sample_count, seed=seed, hits=counts,
        violations=viol, witness=witness, passed=viol["U_in_S3"] == 0 and viol["S3_in_U12"] == 0,
        details={"loose_radius": loose, "loose_passed": viol["S3_in_U_loose"] == 0},
    )


def tangential_counterexample(epsilon: float, t: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:
    """A pair in S_id(3 eps) outside U_id(12 eps): two sphere points at angle t."""
    t = math.sqrt(5 * epsilon) if t is None else t
    return np.array([1.0, 0.0], dtype=complex), np.array([math.cos(t), math.sin(t)], dtype=complex)


@dataclass
class DisjointnessReport:
    g: int
    l: int
    grid: list
    hits: dict
    largest_clear_epsilon: Optional[float]
    witness: Optional[dict]
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def disjointness_search(G: ReflectionGroup, g: ElementLike, l: ElementLike, eps_grid: Sequence[float] = DEFAULT_GRID,
                        sample_count: int = 100_000, seed: int = 42) -> DisjointnessReport:
    """Largest grid eps for which no sampled pair lies in U_g(eps) and U_l(eps).

    Half of each cell's samples sit near U_g; the other half put z on the
    sphere along the eigenvector of l^-1 g whose eigenvalue is closest to 1
    and take w halfway between g.z and l.z, which is where the two regions
    come closest.
    """
    ge, le = _element(G, g), _element(G, l)
    q = le.inverse() @ ge
    if q.is_identity():
        raise IsIdentity("l^-1 g is the identity")
    if is_reflection(q) is not None:
        raise IsReflection("l^-1 g is a reflection; the regions always meet (see witness_pair)")
    gi = G.index_of(ge) if isinstance(g, GroupElement) else int(g)
    li = G.index_of(le) if isinstance(l, GroupElement) else int(l)
    vals, vecs = np.linalg.eig(q.matrix)
    v = vecs[:, int(np.argmin(np.abs(vals - 1)))]
    v = v / np.linalg.norm(v)
    Mg, Ml = ge.matrix, le.matrix
    hits, witness = {}, None
    for eps in sorted(eps_grid, reverse=True):
        def work(rng, k, eps=eps):
            h = k // 2
            Z1, W1 = _near_image(rng, Mg, h, eps, 2.0)
            m = k - h
            d = smp.log_uniform(rng, MIN_DIST, eps, m)
            phase = np.exp(2j * np.pi * rng.random(m))
            Z2 = (v[None, :] * phase[:, None]) * (1 - d)[:, None]
            Z2 = Z2 + smp.complex_direction(rng, m) * smp.log_uniform(rng, MIN_DIST, eps, m)[:, None]
            Z2 = smp.clip_to_ball(Z2, d)
            W2 = smp.clip_to_ball(0.5 * (Z2 @ Mg.T + Z2 @ Ml.T), smp.log_uniform(rng, MIN_DIST, eps, m))
            Z, W = np.concatenate([Z1, Z2]), np.concatenate([W1, W2])
            both = (u_measure(Mg, Z, W) < eps) & (u_measure(Ml, Z, W) < eps)
            cand = None
            if both.any():
                idx = np.nonzero(both)[0]
                j = idx[smp.lex_argmax(-u_measure(Mg, Z[idx], W[idx]), Z[idx], W[idx])]
                cand = (0.0, Z[j], W[j])
            return int(both.sum()), cand

        parts = smp.run_chunked(work, sample_count, seed, smp.stream_key("disjoint", gi, li, round(eps * 1e9)))
        n_hits = sum(p[0] for p in parts)
        hits[eps] = n_hits
        if n_hits:
            best = smp.merge_max([p[1] for p in parts])
            witness = dict(pair_dict(best[1], best[2]), epsilon=eps)
    # the largest eps such that it and every smaller grid value had no hits
    clear = None
    for eps in sorted(eps_grid, reverse=True):
        if all(hits[e] == 0 for e in eps_grid if e <= eps):
            clear = eps
            break
    return DisjointnessReport(g=gi, l=li, grid=sorted(eps_grid, reverse=True), hits=hits,
                              largest_clear_epsilon=clear, witness=witness, samples=sample_count, seed=seed)


def _hyperplane_vector(root: np.ndarray) -> np.ndarray:
    """A unit vector v with <v, root> = 0."""
    v = np.array([-np.conj(root[1]), np.conj(root[0])], dtype=complex)
    return v / np.linalg.norm(v)


def witness_pair(l: GroupElement, r: GroupElement, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """(z, l.z) with z on the hyperplane of r and 1 - |z| = eps/4 (clamped at |z| >= 0)."""
    data = is_reflection(r)
    if data is None:
        raise NotReflection("witness_pair needs a reflection")
    z = max(1.0 - epsilon / 4.0, 0.0) * _hyperplane_vector(data.root)
    return z, l.act(z)


def witness_memberships(l: GroupElement, r: GroupElement, epsilon: float) -> dict:
    z, w = witness_pair(l, r, epsilon)
    return {
        "U_lr": in_U(RegionQuery(l @ r, epsilon, z, w)),
        "U_l": in_U(RegionQuery(l, epsilon, z, w)),
        **pair_dict(z, w),
    }


def triple_intersection_audit(G: ReflectionGroup, epsilon: float, sample_count: int = 100_000,
                              seed: int = 42) -> RegionReport:
    """Three-fold intersections U_g, U_h, U_id for distinct g, h != id.

    With a reflection r of order m >= 3 the pairs (z, r^j.z), z on Y_r, are
    checked against every U_{r^k}; otherwise pairs are sampled near each
    U_r(eps) ∩ U_id(eps) (the only places two regions meet) and tested
    against every third region.
    """
    eps = float(epsilon)
    refl = G.reflections
    if not refl:
        return RegionReport(audit="triple", group=G.label, epsilon=eps, samples=0, seed=seed,
                            passed=True, details={"mode": "vacuous"})
    high = [Y for Y in G.hyperplanes if Y.multiplicity >= 3]
    if high:
        results = []
        ok = True
        for Y in high:
            # a generator of the cyclic hyperplane subgroup
            r = next(G.elements[i] for i in Y.members if G.elements[i].order == Y.multiplicity)
            z = max(1.0 - eps / 4.0, 0.0) * _hyperplane_vector(Y.root)
            powers = [GroupElement.identity(r.N)]
            for _ in range(Y.multiplicity - 1):
                powers.append(powers[-1] @ r)
            for j, rj in enumerate(powers):
                w = rj.act(z)
                member = [in_U(RegionQuery(rk, eps, z, w)) for rk in powers]
                ok &= all(member)
                results.append({"j": j, "memberships": member, **pair_dict(z, w)})
        return RegionReport(audit="triple", group=G.label, epsilon=eps, samples=0, seed=seed,
                            hits={"witness_pairs": len(results)}, passed=ok,
                            witness=results[0] if results else None,
                            details={"mode": "witness", "pairs": results})
    mats = G.matrices
    n_el = len(G)
    per_r = smp.chunk_sizes(sample_count, max(1, -(-sample_count // len(refl))))
    total_hits, seen, witness = 0, 0, None
    for (ri, data), n in zip(refl, per_r):
        v = _hyperplane_vector(data.root)

        def work(rng, k, v=v, rho=data.root):
            d = smp.log_uniform(rng, MIN_DIST, eps, k)
            s = smp.log_uniform(rng, MIN_DIST, eps, k) * np.exp(2j * np.pi * rng.random(k))
            ph = np.exp(2j * np.pi * rng.random(k))
            Z = smp.set_boundary_distance(v[None, :] * ph[:, None] + rho[None, :] * s[:, None], d)
            W = Z + smp.complex_direction(rng, k) * smp.log_uniform(rng, MIN_DIST, eps, k)[:, None]
            W = smp.clip_to_ball(W, smp.log_uniform(rng, MIN_DIST, eps, k))
            memb = np.stack([u_measure(mats[i], Z, W) < eps for i in range(n_el)])  # (|G|, k)
            count = memb.sum(axis=0)
            inside = memb[0] & (count >= 3)
            cand = None
            if inside.any():
                idx = np.nonzero(inside)[0]
                j = idx[smp.lex_argmax(count[idx].astype(float), Z[idx], W[idx])]
                cand = (float(count[j]), Z[j], W[j])
            return int(inside.sum()), int(memb[0].sum()), cand

        parts = smp.run_chunked(work, n, seed, smp.stream_key("triple", ri, round(eps * 1e9)))
        total_hits += sum(p[0] for p in parts)
        seen += sum(p[1] for p in parts)
        best = smp.merge_max([p[2] for p in parts])
        if best is not None and witness is None:
            witness = pair_dict(best[1], best[2])
    return RegionReport(audit="triple", group=G.label, epsilon=eps, samples=sample_count, seed=seed,
                        hits={"triple": total_hits, "in_U_id": seen}, passed=total_hits == 0, witness=witness,
                        details={"mode": "sampling"})


@dataclass(frozen=True)
class DisplacementConstants:
    C1: float
    C2: float
    per_reflection: tuple  # (element index, theta_r, 2 sin(theta_r / 2))

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def displacement_factor(theta: float) -> float:
    """|r.z - z| / |<z, rho>| for a reflection with non-unit eigenvalue e^{i theta}."""
    return 2.0 * math.sin(theta / 2.0)


def displacement_constants(G: ReflectionGroup) -> DisplacementConstants:
    refl = G.reflections
    if not refl:
        raise NoReflections(f"group {G.label or '?'} has no reflections")
    per = tuple((i, d.angle, displacement_factor(d.angle)) for i, d in refl)
    vals = [p[2] for p in per]
    return DisplacementConstants(C1=min(vals), C2=max(vals), per_reflection=per)


def displacement_audit(G: ReflectionGroup, sample_count: int = 10_000, seed: int = 42) -> dict:
    """Max deviation of |r.z - z| / |<z, rho>| from 2 sin(theta/2), per reflection."""
    out = {}
    for i, data in G.reflections:
        rng = smp.chunk_rng(seed, smp.stream_key("displacement", i), 0)
        Z = smp.uniform_ball(rng, sample_count)
        ip = np.abs(Z @ np.conj(data.root))
        keep = ip > 1e-8
        ratio = np.linalg.norm(Z @ G.elements[i].matrix.T - Z, axis=1)[keep] / ip[keep]
        out[i] = float(np.max(np.abs(ratio - displacement_factor(data.angle))))
    return out


def slab_audit(r: GroupElement, epsilon: float, sample_count: int = 100_000, seed: int = 42,
               c: Optional[float] = None) -> RegionReport:
    """Check |<z, rho>| <= c eps and |<w, rho>| <= c eps on U_r(eps) ∩ U_id(eps), c = 2 / C1."""
    data = is_reflection(r)
    if data is None:
        raise NotReflection("slab_audit needs a reflection")
    eps = float(epsilon)
    c = 2.0 / displacement_factor(data.angle) if c is None else float(c)
    rho, v, M = data.root, _hyperplane_vector(data.root), r.matrix
    eye = np.eye(2, dtype=complex)

    def work(rng, k):
        d = smp.log_uniform(rng, MIN_DIST, eps, k)
        # reach past the slab so that a wrong constant would show up
        s = smp.log_uniform(rng, MIN_DIST, 3 * c * eps, k) * np.exp(2j * np.pi * rng.random(k))
        ph = np.exp(2j * np.pi * rng.random(k))
        Z = smp.set_boundary_distance(v[None, :] * ph[:, None] + rho[None, :] * s[:, None], d)
        base = np.where(rng.random(k)[:, None] < 0.5, Z, Z @ M.T)
        W = base + smp.complex_direction(rng, k) * smp.log_uniform(rng, MIN_DIST, 2 * eps, k)[:, None]
        W = smp.clip_to_ball(W, smp.log_uniform(rng, MIN_DIST, eps, k))
        inside = (u_measure(M, Z, W) < eps) & (u_measure(eye, Z, W) < eps)
        zr = np.abs(Z @ np.conj(rho))
        wr = np.abs(W @ np.conj(rho))
        bad = inside & ((zr > c * eps) | (wr > c * eps))
        top = float(np.max(np.maximum(zr, wr)[inside])) if inside.any() else 0.0
        return int(inside.sum()), int(bad.sum()), top

    parts = smp.run_chunked(work, sample_count, seed, smp.stream_key("slab", round(eps * 1e9)))
    hits = sum(p[0] for p in parts)
    bad = sum(p[1] for p in parts)
    top = max((p[2] for p in parts), default=0.0)
    return RegionReport(audit="slab", group="", epsilon=eps, samples=sample_count, seed=seed,
                        hits={"intersection": hits}, violations={"slab": bad}, passed=bad == 0 and hits > 0,
                        details={"c": c, "max_abs_inner_over_eps": top / eps, "theta": data.angle})

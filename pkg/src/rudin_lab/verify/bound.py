"""Stratified certification of the kernel bound |K_{G,p}| <= C sum_g |K(g.z, w)|.

Samples are organised by strategy and boundary stratum k: a stratum-k point
has boundary distance in [2^(-k-1), 2^(-k)].  The ratio

    R(z, w) = |K_{G,p}(z, w)| / sum_g |K(g.z, w)|

is free of the orbit-map constant and of the kernel normalisation, so the
report's sup is an empirical value for the constant C.
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from .. import sampling as smp
from ..groups import ReflectionGroup, cyclic_group, is_reflection
from ..kernels import (KernelConfig, averaged_kernel_batch, bound_ratio_batch, ball_kernel_batch, cyclic_closed_form,
                       dominating_sum, dominating_sum_batch, jacobian_batch, k_gp, k_gp_batch)
from ..regions import _hyperplane_vector, _jsonable, _near_image, pair_dict, u_measure

K_MAX = 12
EXACT_DIGITS_LOST = 4.0
DEFAULT_SAMPLES = 1_000_000


@dataclass(frozen=True)
class SampleStrategy:
    """kind is 'uniform', 'boundary', 'near_singular' (element index) or 'slab' (reflection index)."""

    kind: str
    count: int
    element: Optional[int] = None
    k_max: int = K_MAX
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "boundary", "near_singular", "slab"):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.kind in ("near_singular", "slab") and self.element is None:
            raise ValueError(f"{self.kind} needs an element index")

    @property
    def name(self) -> str:
        return self.kind if self.element is None else f"{self.kind}({self.element})"


@dataclass
class BoundReport:
    group: str
    p: float
    strategy: str
    sup_ratio: float
    argmax_pair: Optional[dict]
    per_stratum: list  # (k, sup_k, count_k)
    failures: int
    samples: int
    seed: int
    per_strategy: dict = field(default_factory=dict)
    stratum_argmax: dict = field(default_factory=dict)  # k -> pair dict

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def stratum_sups(self) -> dict:
        return {k: s for k, s, _ in self.per_stratum}


def default_strategies(G: ReflectionGroup, total: int = DEFAULT_SAMPLES) -> list[SampleStrategy]:
    """5% uniform, 25% boundary, the rest split between near_singular(g) and slab(r)."""
    refl = [i for i, _ in G.reflections]
    uni = max(1, total // 20)
    bnd = max(1, total // 4)
    rest = total - uni - bnd
    ns_share = rest if not refl else rest * 4 // 7
    out = [SampleStrategy("uniform", uni, k_max=0), SampleStrategy("boundary", bnd)]
    per_g = smp.chunk_sizes(ns_share, -(-ns_share // len(G)))
    out += [SampleStrategy("near_singular", n, element=i) for i, n in enumerate(per_g) if n]
    if refl:
        sl = rest - ns_share
        per_r = smp.chunk_sizes(sl, -(-sl // len(refl)))
        out += [SampleStrategy("slab", n, element=i) for i, n in zip(refl, per_r) if n]
    return out


# point generation per (strategy, stratum) ------------------------------------------

def _stratum_dist(rng, k: int, n: int) -> np.ndarray:
    return smp.log_uniform(rng, 2.0 ** (-k - 1), 2.0 ** (-k), n)


def generate(G: ReflectionGroup, s: SampleStrategy, k: int, rng, n: int) -> tuple[np.ndarray, np.ndarray]:
    if s.kind == "uniform":
        return smp.uniform_ball(rng, n), smp.uniform_ball(rng, n)
    dz, dw = _stratum_dist(rng, k, n), _stratum_dist(rng, k, n)
    scale = 2.0 ** (-k)
    if s.kind == "boundary":
        Z = smp.set_boundary_distance(smp.sphere(rng, n), dz)
        pert = smp.complex_direction(rng, n) * smp.log_uniform(rng, scale / 2, 2.0, n)[:, None]
        W = smp.set_boundary_distance(Z + pert, dw)
        return Z, W
    if s.kind == "near_singular":
        M = G.elements[s.element].matrix
        Z = smp.set_boundary_distance(smp.sphere(rng, n), dz)
        delta = smp.complex_direction(rng, n) * smp.log_uniform(rng, scale * 1e-3, 4 * scale, n)[:, None]
        return Z, smp.set_boundary_distance(Z @ M.T + delta, dw)
    # slab: z close to the hyperplane of the reflection, w close to z or r.z
    r = G.elements[s.element]
    rho = is_reflection(r).root
    v = _hyperplane_vector(rho)
    ph = np.exp(2j * np.pi * rng.random(n))
    off = smp.log_uniform(rng, scale * 1e-3, 4 * scale, n) * np.exp(2j * np.pi * rng.random(n))
    Z = smp.set_boundary_distance(v[None, :] * ph[:, None] + rho[None, :] * off[:, None], dz)
    base = np.where(rng.random(n)[:, None] < 0.5, Z, Z @ r.matrix.T)
    delta = smp.complex_direction(rng, n) * smp.log_uniform(rng, scale * 1e-3, 4 * scale, n)[:, None]
    return Z, smp.set_boundary_distance(base + delta, dw)


def _ratio_parts(G: ReflectionGroup, Z, W):
    kg = np.abs(averaged_kernel_batch(G, Z, W))
    jz = np.abs(jacobian_batch(G, Z))
    jw = np.abs(jacobian_batch(G, W))
    dom = dominating_sum_batch(G, Z, W)
    return kg, jz, jw, dom


def _ratio_from_parts(parts, p: float) -> np.ndarray:
    kg, jz, jw, dom = parts
    a = 2.0 / p - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = np.ones_like(jz) if a == 0 else jz**a * jw ** (-a)
        r = kg * w / dom
    bad = ((jz == 0) & (a < 0)) | ((jw == 0) & (a > 0)) | ~np.isfinite(r)
    return np.where(bad, np.nan, r)


def bound_ratio_reports(G: ReflectionGroup, ps: Sequence[float], strategies: Optional[Sequence[SampleStrategy]] = None,
                        samples: int = DEFAULT_SAMPLES, seed: int = 42) -> dict:
    """One BoundReport per p, all computed on the same sample points."""
    ps = [float(p) for p in ps]
    for p in ps:
        KernelConfig(p=p)
    strategies = default_strategies(G, samples) if strategies is None else list(strategies)
    # acc[p][k] = [best candidate, count, failures]; strat_best[p][name] = sup
    acc = {p: {} for p in ps}
    strat_best = {p: {} for p in ps}
    total = 0
    for s in strategies:
        strata = [0] if s.kind == "uniform" else list(range(1, s.k_max + 1))
        sizes = smp.chunk_sizes(s.count, -(-s.count // len(strata)))
        sseed = seed if s.seed is None else s.seed
        for k, n in zip(strata, sizes):
            def work(rng, m, s=s, k=k):
                Z, W = generate(G, s, k, rng, m)
                parts = _ratio_parts(G, Z, W)
                out = []
                for p in ps:
                    R = _ratio_from_parts(parts, p)
                    fails = int(np.count_nonzero(np.isnan(R)))
                    j = smp.lex_argmax(R, Z, W)
                    cand = None if j < 0 else (float(R[j]), Z[j].copy(), W[j].copy())
                    out.append((cand, m - fails, fails))
                return out

            chunks = smp.run_chunked(work, n, sseed, smp.stream_key("bound", s.kind, -1 if s.element is None else s.element, k))
            total += n
            for pi, p in enumerate(ps):
                cands = [c[pi][0] for c in chunks]
                best = smp.merge_max(cands)
                slot = acc[p].setdefault(k, [None, 0, 0])
                slot[0] = smp.merge_max([slot[0], best])
                slot[1] += sum(c[pi][1] for c in chunks)
                slot[2] += sum(c[pi][2] for c in chunks)
                prev = strat_best[p].get(s.name)
                if best is not None and (prev is None or best[0] > prev):
                    strat_best[p][s.name] = best[0]
    reports = {}
    for p in ps:
        per = []
        cands = []
        where = {}
        fails = 0
        for k in sorted(acc[p]):
            best, cnt, f = acc[p][k]
            per.append((k, None if best is None else best[0], cnt))
            if best is not None:
                where[k] = pair_dict(best[1], best[2])
            cands.append(best)
            fails += f
        top = smp.merge_max(cands)
        reports[p] = BoundReport(
            group=G.label, p=p, strategy="+".join(sorted({s.kind for s in strategies})),
            sup_ratio=math.nan if top is None else top[0],
            argmax_pair=None if top is None else pair_dict(top[1], top[2]),
            per_stratum=per, failures=fails, samples=total, seed=seed,
            per_strategy=dict(sorted(strat_best[p].items())), stratum_argmax=where,
        )
    return reports


def bound_ratio_report(G: ReflectionGroup, p: float, strategies: Optional[Sequence[SampleStrategy]] = None,
                       samples: int = DEFAULT_SAMPLES, seed: int = 42) -> BoundReport:
    return bound_ratio_reports(G, [p], strategies, samples, seed)[float(p)]


def pair_from_dict(d: dict) -> tuple[np.ndarray, np.ndarray]:
    z = np.array([complex(*c) for c in d["z"]])
    w = np.array([complex(*c) for c in d["w"]])
    return z, w


def reevaluate(G: ReflectionGroup, report: BoundReport) -> float:
    """R at the report's argmax pair through the scalar kernel functions."""
    z, w = pair_from_dict(report.argmax_pair)
    return abs(k_gp(G, z, w, KernelConfig(p=report.p))) / dominating_sum(G, z, w)


def stratum_spread(report: BoundReport, ks: Sequence[int] = (9, 10, 11, 12)) -> float:
    """max/min of the per-stratum sups over ``ks``; inf if any is missing or zero."""
    sups = report.stratum_sups()
    vals = [sups.get(k) for k in ks]
    if any(v is None or not v > 0 for v in vals):
        return math.inf
    return max(vals) / min(vals)


def r_invariance_check(G: ReflectionGroup, p: float, sample_count: int = 2000, seed: int = 42) -> dict:
    """Max relative deviations of R under z -> g.z, c_pi rescaling and normalisation toggling.

    Points are drawn from the boundary strategy at strata 1..6 and from the
    uniform ball; relative deviations are taken against max(R, R') and only
    where R exceeds 1e-6, below which the ratio is pure cancellation noise.
    """
    rng = smp.chunk_rng(seed, smp.stream_key("r-invariance", round(p * 1e6)), 0)
    Z, W = smp.uniform_ball(rng, sample_count), smp.uniform_ball(rng, sample_count)
    Zs, Ws = [Z], [W]
    for k in range(1, 7):
        z2, w2 = generate(G, SampleStrategy("boundary", 1), k, rng, sample_count // 6)
        Zs.append(z2)
        Ws.append(w2)
    Z, W = np.concatenate(Zs), np.concatenate(Ws)
    base = bound_ratio_batch(G, Z, W, p)
    keep = np.isfinite(base) & (base > 1e-6)

    def rel(other):
        m = keep & np.isfinite(other)
        if not m.any():
            return 0.0
        return float(np.max(np.abs(other[m] - base[m]) / np.maximum(base[m], other[m])))

    group_dev = 0.0
    for g in G.elements:
        group_dev = max(group_dev, rel(bound_ratio_batch(G, Z @ g.matrix.T, W, p)))
    const_dev = 0.0
    for mod in (0.1, 10.0):
        for norm in (False, True):
            cfg = KernelConfig(p=p, jac_constant_modulus=mod, normalized=norm)
            num = np.abs(k_gp_batch(G, Z, W, cfg))
            den = dominating_sum_batch(G, Z, W, cfg.constant)
            const_dev = max(const_dev, rel(num / den))
    return {"group_action": group_dev, "constants": const_dev, "points": int(keep.sum())}


# cyclic series residual ------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _mp_roots(m: int, digits: int) -> tuple:
    with mpmath.workdps(digits):
        return tuple(mpmath.exp(2j * mpmath.pi * j / m) for j in range(m))


def _direct_cyclic_mp(m: int, z, w) -> complex:
    """(1/m) sum_j zeta^j (1 - zeta^j x - z2 conj(w2))^-3 in extended precision."""
    x = complex(z[0] * np.conj(w[0]))
    y = complex(1 - z[1] * np.conj(w[1]))
    t = abs(x) / abs(y) if y != 0 else 1.0
    digits = 24 + (int(math.ceil((m - 1) * -math.log10(t))) if 0 < t < 1 else 0)
    digits = 8 * -(-digits // 8)  # coarse buckets keep the root cache small
    roots = _mp_roots(m, digits)
    with mpmath.workdps(digits):
        xm, ym = mpmath.mpc(x), mpmath.mpc(y)
        total = mpmath.mpc(0)
        for zj in roots:
            d = ym - zj * xm
            total += zj / (d * d * d)
        return complex(total / m)


def sample_Gc(rng, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs with |z1 conj(w1)| < |1 - z2 conj(w2)| / 2, mixing interior and near-boundary points."""
    Zs, Ws, got = [], [], 0
    while got < n:
        k = 2 * (n - got) + 16
        Z = np.concatenate([smp.uniform_ball(rng, k // 2),
                            smp.set_boundary_distance(smp.sphere(rng, k - k // 2), smp.log_uniform(rng, 1e-6, 0.5, k - k // 2))])
        W = np.concatenate([smp.uniform_ball(rng, k // 2),
                            smp.set_boundary_distance(smp.sphere(rng, k - k // 2), smp.log_uniform(rng, 1e-6, 0.5, k - k // 2))])
        ok = np.abs(Z[:, 0] * np.conj(W[:, 0])) < 0.5 * np.abs(1 - Z[:, 1] * np.conj(W[:, 1]))
        Zs.append(Z[ok])
        Ws.append(W[ok])
        got += int(ok.sum())
    return np.concatenate(Zs)[:n], np.concatenate(Ws)[:n]


@dataclass
class SeriesResidualResult:
    m: int
    samples: int
    max_relative_residual: float
    max_absolute_on_axis: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def cyclic_series_residual(m: int, sample_count: int = 10_000, seed: int = 42) -> SeriesResidualResult:
    """Max relative gap between the direct m-term average and the series form on G^c.

    In double precision the direct sum loses about (m-1) log10(1/|t|) digits to
    cancellation, t = x/y; where that exceeds EXACT_DIGITS_LOST it is
    re-evaluated in extended precision.
    Pairs with z1 conj(w1) = 0 are checked absolutely instead.
    """
    rng = smp.chunk_rng(seed, smp.stream_key("cyclic-series", m), 0)
    Z, W = sample_Gc(rng, sample_count)
    C = cyclic_group(m)
    fast = averaged_kernel_batch(C, Z, W)
    x = np.abs(Z[:, 0] * np.conj(W[:, 0]))
    y = np.abs(1 - Z[:, 1] * np.conj(W[:, 1]))
    with np.errstate(divide="ignore"):
        lost = (m - 1) * -np.log10(x / y)
    worst = 0.0
    for i, (z, w) in enumerate(zip(Z, W)):
        direct = complex(fast[i]) if lost[i] <= EXACT_DIGITS_LOST else _direct_cyclic_mp(m, z, w)
        if abs(direct) < 1e-300:
            continue
        worst = max(worst, abs(direct - cyclic_closed_form(m, z, w)) / abs(direct))
    # points on {z1 = 0}: both sides vanish
    axis = 0.0
    for j in range(10):
        z = np.array([0.0, 0.7 * np.exp(0.6j * j)])
        w = np.array([0.3 * np.exp(1.1j * j), 0.6 * np.exp(-0.4j * j)])
        axis = max(axis, float(abs(cyclic_closed_form(m, z, w))), float(abs(averaged_kernel_batch(C, z, w)[0])))
    return SeriesResidualResult(m=m, samples=len(Z), max_relative_residual=worst, max_absolute_on_axis=axis, seed=seed)


# region-restricted bounds ------------------------------------------------------------

def _region_report(label: str, G, p, values, Z, W, seed, fails) -> BoundReport:
    """Fold arrays of ratios into a BoundReport, stratified by d(z) + d(w)."""
    d = (1 - np.linalg.norm(Z, axis=1)) + (1 - np.linalg.norm(W, axis=1))
    ks = np.clip(np.floor(-np.log2(np.maximum(d, 2.0 ** -40))), 0, 40).astype(int)
    per, cands = [], []
    for k in sorted(set(ks.tolist())):
        m = ks == k
        j = smp.lex_argmax(values[m], Z[m], W[m])
        best = None if j < 0 else (float(values[m][j]), Z[m][j], W[m][j])
        per.append((k, None if best is None else best[0], int(np.count_nonzero(m & np.isfinite(values)))))
        cands.append(best)
    top = smp.merge_max(cands)
    return BoundReport(group=G.label, p=p, strategy=label, sup_ratio=math.nan if top is None else top[0],
                       argmax_pair=None if top is None else pair_dict(top[1], top[2]), per_stratum=per,
                       failures=fails, samples=len(values), seed=seed)


def _slab_pairs(rng, r_matrix, rho, eps, n):
    v = _hyperplane_vector(rho)
    d = smp.log_uniform(rng, 1e-6, eps, n)
    s = smp.log_uniform(rng, 1e-6, eps, n) * np.exp(2j * np.pi * rng.random(n))
    ph = np.exp(2j * np.pi * rng.random(n))
    Z = smp.set_boundary_distance(v[None, :] * ph[:, None] + rho[None, :] * s[:, None], d)
    base = np.where(rng.random(n)[:, None] < 0.5, Z, Z @ r_matrix.T)
    W = base + smp.complex_direction(rng, n) * smp.log_uniform(rng, 1e-6, eps, n)[:, None]
    return Z, smp.clip_to_ball(W, smp.log_uniform(rng, 1e-6, eps, n))


def region_bound_audit(G: ReflectionGroup, p: float, epsilon: float, sample_count: int = 20_000,
                       seed: int = 42) -> dict:
    """Region-by-region sups.

    Keys are ``I_g`` (|K_{G,p}| / |K(g.z, w)| on the carved region I_g),
    ``U_r&U_id`` (R on the reflection intersections) and ``U_g&U_h`` (R on
    U_g ∩ U_h with h^-1 g a reflection, sampled directly and through the
    transport (z, w) -> (h.z, w)).  A region whose sampler produced no
    points is reported as an entry in ``empty``.
    """
    cfg = KernelConfig(p=p)
    eps = float(epsilon)
    mats = G.matrices
    eye = np.eye(2, dtype=complex)
    out = {"I_g": {}, "U_r&U_id": {}, "U_g&U_h": {}, "U_g&U_h_transported": {}, "empty": []}
    refl = dict(G.reflections)
    n_el = len(G)
    # reflection neighbours: lr[g] = indices l with l^-1 g a reflection
    inv = [G.index_of(g.inverse()) for g in G.elements]
    mult = np.array([[G.index_of(a @ b) for b in G.elements] for a in G.elements])
    nbrs = {gi: [li for li in range(n_el) if mult[inv[li], gi] in refl] for gi in range(n_el)}
    for gi in range(n_el):
        rng = smp.chunk_rng(seed, smp.stream_key("region-I", gi, round(eps * 1e9)), 0)
        Z, W = _near_image(rng, mats[gi], sample_count, eps, 1.0)
        keep = u_measure(mats[gi], Z, W) < eps
        for li in nbrs[gi]:
            keep &= ~(u_measure(mats[li], Z, W) < eps)
        Z, W = Z[keep], W[keep]
        if not len(Z):
            out["empty"].append(f"I_{gi}")
            continue
        num = np.abs(k_gp_batch(G, Z, W, cfg))
        den = np.abs(ball_kernel_batch(Z @ mats[gi].T, W))
        vals = num / den
        out["I_g"][gi] = _region_report(f"I_{gi}", G, p, vals, Z, W, seed, int(np.isnan(vals).sum()))
    for ri, data in sorted(refl.items()):
        rng = smp.chunk_rng(seed, smp.stream_key("region-r", ri, round(eps * 1e9)), 0)
        Z, W = _slab_pairs(rng, mats[ri], data.root, eps, sample_count)
        keep = (u_measure(mats[ri], Z, W) < eps) & (u_measure(eye, Z, W) < eps)
        Z, W = Z[keep], W[keep]
        if not len(Z):
            out["empty"].append(f"U_{ri}&U_id")
            continue
        vals = bound_ratio_batch(G, Z, W, p)
        out["U_r&U_id"][ri] = _region_report(f"U_{ri}&U_id", G, p, vals, Z, W, seed, int(np.isnan(vals).sum()))
    for gi in range(n_el):
        for hi in range(n_el):
            ri = mult[inv[hi], gi]
            if ri not in refl:
                continue
            H = mats[hi]
            # direct: (z, h.w') with (z, w') in U_r ∩ U_id, r = h^-1 g
            rng = smp.chunk_rng(seed, smp.stream_key("region-gh", gi, hi, round(eps * 1e9)), 0)
            Z, Wp = _slab_pairs(rng, mats[ri], refl[ri].root, eps, sample_count // 4)
            W = Wp @ H.T
            keep = (u_measure(mats[gi], Z, W) < eps) & (u_measure(H, Z, W) < eps)
            # transported: (zeta, omega) in U_{g h^-1} ∩ U_id, mapped back to (h^-1 zeta, omega)
            q = mult[gi, inv[hi]]
            rng2 = smp.chunk_rng(seed, smp.stream_key("region-gh-t", gi, hi, round(eps * 1e9)), 0)
            Zt, Wt = _slab_pairs(rng2, mats[q], refl[q].root, eps, sample_count // 4)
            keep_t = (u_measure(mats[q], Zt, Wt) < eps) & (u_measure(eye, Zt, Wt) < eps)
            Zb = Zt @ np.conj(H)  # h^-1 zeta, rows
            key = f"{gi},{hi}"
            if not keep.any() or not keep_t.any():
                out["empty"].append(f"U_{gi}&U_{hi}")
                continue
            v1 = bound_ratio_batch(G, Z[keep], W[keep], p)
            v2 = bound_ratio_batch(G, Zb[keep_t], Wt[keep_t], p)
            out["U_g&U_h"][key] = _region_report(f"U_{gi}&U_{hi}", G, p, v1, Z[keep], W[keep], seed,
                                                 int(np.isnan(v1).sum()))
            out["U_g&U_h_transported"][key] = _region_report(f"T(U_{gi}&U_{hi})", G, p, v2, Zb[keep_t], Wt[keep_t],
                                                             seed, int(np.isnan(v2).sum()))
    return out

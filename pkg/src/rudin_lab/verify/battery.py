"""The acceptance battery: criteria 1 to 11, plus a per-group variant for ``suite --spec``.

Every criterion returns a :class:`CriterionResult` whose ``details`` are plain
JSON values.  Runtimes live outside ``details`` so that two runs with the
same seed can be compared byte for byte (criterion 11).
"""
from __future__ import annotations

import json
import math
import os
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import sampling as smp
from ..groups import (ReflectionGroup, close_generators, cyclic_group, family_G, family_generators,
                      trivial_group)
from ..kernels import (averaged_kernel_batch, closed_form_jacobian_Gml, jacobian_product)
from ..regions import (_jsonable, displacement_audit, displacement_constants, nesting_audit, slab_audit,
                       tangential_counterexample, triple_intersection_audit, u_measure, s_measure,
                       witness_memberships)
from ..symbolic.factor import (compute_B_factorization, compute_M, hermitian_symmetry_check,
                               jacobian_polys, skew_check, denominator, z_form, u_form)
from ..symbolic.mpoly import MPoly
from .bound import bound_ratio_reports, cyclic_series_residual, r_invariance_check, reevaluate, stratum_spread
from .operator import holomorphic_monomials, operator_apply, weighted_norm_scan
from .symmetry import mutated_dets, symmetry_suite

SEED = 42
FAMILY_LIST = ((1, 1), (2, 1), (2, 2), (3, 3), (4, 2), (6, 2), (6, 6))
NESTING_EPS = (0.01, 0.05, 0.1)
BOUND_PS = (1.1, 2.0, 4.0)
PGRID = (1.1, 1.5, 2.0, 3.0, 5.0)
REPRODUCING_POINTS = ((0.3 + 0.1j, -0.2 + 0.25j), (-0.45 + 0.2j, 0.1 - 0.5j))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def line(self) -> str:
        tag = f"criterion {self.number:>2}" if self.number else "check       "
        return f"[{'PASS' if self.passed else 'FAIL'}] {tag}: {self.name} ({self.runtime:.2f} s)"


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _timed(number: int, name: str, fn: Callable[[], tuple[bool, dict]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, details = fn()
    return CriterionResult(number, name, bool(ok), _jsonable(details), time.perf_counter() - t0)


@contextmanager
def workers(n: int):
    """Temporarily set the worker count used by the chunked samplers."""
    old = os.environ.get("RUDIN_LAB_WORKERS")
    os.environ["RUDIN_LAB_WORKERS"] = str(n)
    try:
        yield
    finally:
        if old is None:
            os.environ.pop("RUDIN_LAB_WORKERS", None)
        else:
            os.environ["RUDIN_LAB_WORKERS"] = old


def _rel(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(a), 1e-300)


def _interior_pairs(seed: int, label: str, n: int = 100, radius: float = 0.9):
    rng = smp.chunk_rng(seed, smp.stream_key("interior", label), 0)
    return smp.uniform_ball(rng, n) * radius, smp.uniform_ball(rng, n) * radius


# 1 -------------------------------------------------------------------------------------

def _enumeration() -> tuple[bool, dict]:
    out, ok = {}, True
    for m, l in FAMILY_LIST:
        G = family_G(m, l)
        C = close_generators(family_generators(m, l))
        expected = 2 * m * m // l
        same = len(G) == len(C) and all(C.index_of(g) is not None for g in G.elements)
        row = {"order": len(G), "expected": expected, "closure_order": len(C), "same_elements": same}
        ok &= len(G) == expected and same
        out[f"G({m},{l},2)"] = row
    return ok, out


# 2 -------------------------------------------------------------------------------------

def _jacobian_cross_check(seed: int = SEED, n: int = 1000) -> tuple[bool, dict]:
    out, ok = {}, True
    for m, l in FAMILY_LIST:
        G = family_G(m, l)
        rng = smp.chunk_rng(seed, smp.stream_key("jacobian", m, l), 0)
        ratios = []
        while len(ratios) < n:
            z = smp.uniform_ball(rng, 1)[0]
            # stay away from every reflecting hyperplane
            if G.hyperplanes and min(abs(np.vdot(Y.root, z)) for Y in G.hyperplanes) < 1e-3:
                continue
            jp = jacobian_product(G, z)
            if jp == 0:
                continue
            ratios.append(closed_form_jacobian_Gml(m, l, z) / jp)
        ratios = np.array(ratios)
        c = np.median(ratios.real) + 1j * np.median(ratios.imag)
        spread = float(np.max(np.abs(ratios - c)) / abs(c))
        ok &= spread <= 1e-10
        out[f"G({m},{l},2)"] = {"constant": [c.real, c.imag], "modulus": abs(c), "relative_spread": spread}
    return ok, out


# 3 -------------------------------------------------------------------------------------

def _cyclic_series(seed: int = SEED) -> tuple[bool, dict]:
    out, ok = {}, True
    for m in (2, 3, 4, 6):
        r = cyclic_series_residual(m, 10_000, seed)
        ok &= r.max_relative_residual < 1e-10 and r.max_absolute_on_axis < 1e-14
        out[f"m={m}"] = r.to_dict()
    return ok, out


# 4 -------------------------------------------------------------------------------------

FACTOR_GROUPS = (("trivial", trivial_group), ("cyclic(2)", lambda: cyclic_group(2)),
                 ("cyclic(3)", lambda: cyclic_group(3)), ("cyclic(4)", lambda: cyclic_group(4)),
                 ("G(2,1,2)", lambda: family_G(2, 1)), ("G(2,2,2)", lambda: family_G(2, 2)),
                 ("G(3,3,2)", lambda: family_G(3, 3)))


def factorization_check(G: ReflectionGroup, seed: int = SEED) -> tuple[bool, dict]:
    res = compute_M(G)
    skew = skew_check(res.Q, G)
    jz, ju = jacobian_polys(G)
    Z, W = _interior_pairs(seed, "factor:" + G.label)
    q_sym = res.Q.evaluate(Z, W)
    q_fact = jz.evaluate(Z, W) * ju.evaluate(Z, W) * res.M.evaluate(Z, W)
    q_kernel = len(G) * averaged_kernel_batch(G, Z, W) * denominator(G).evaluate(Z, W)
    d1 = float(np.max(_rel(q_sym, q_fact)))
    d2 = float(np.max(_rel(q_sym, q_kernel)))
    ok = skew and d1 <= 1e-9 and d2 <= 1e-9
    return ok, {"divisions": len(res.divisions), "skew_check": skew, "M_terms": len(res.M.terms),
                "reconstruction_rel": d1, "kernel_rel": d2}


def _factorizations(seed: int = SEED) -> tuple[bool, dict]:
    out, ok = {}, True
    for label, make in FACTOR_GROUPS:
        good, row = factorization_check(make(), seed)
        ok &= good
        out[label] = row
    return ok, out


# 5 -------------------------------------------------------------------------------------

def b_factorization_check(G: ReflectionGroup, r_index: int, seed: int = SEED) -> tuple[bool, dict]:
    b = compute_B_factorization(G, r_index)
    herm = {"numerator": hermitian_symmetry_check(b.numerator), "L": hermitian_symmetry_check(b.L)}
    Z, W = _interior_pairs(seed, f"bfactor:{G.label}:{r_index}")
    k = b.power
    lz = MPoly.linear_form(z_form(b.root), "z", G.conductor) ** k
    lu = MPoly.linear_form(u_form(b.root), "u", G.conductor) ** k
    num = b.numerator.evaluate(Z, W)
    d1 = float(np.max(_rel(num, lz.evaluate(Z, W) * lu.evaluate(Z, W) * b.Q_H.evaluate(Z, W))))
    mats, dets = G.matrices, G.dets
    direct = np.zeros(len(Z), dtype=complex)
    for i in b.outside_H:
        direct += dets[i] * (1 - np.sum((Z @ mats[i].T) * np.conj(W), axis=1)) ** -3
    d2 = float(np.max(_rel(direct, num / b.L.evaluate(Z, W))))
    ok = all(herm.values()) and d1 <= 1e-9 and d2 <= 1e-9
    return ok, {"power": k, "hermitian": herm, "factored_rel": d1, "B_rel": d2,
                "coset_representatives": b.coset_representatives}


def _b_factorizations(seed: int = SEED) -> tuple[bool, dict]:
    out, ok = {}, True
    for G in (family_G(2, 1), family_G(2, 2)):
        for ri, _ in G.reflections:
            good, row = b_factorization_check(G, ri, seed)
            ok &= good
            out[f"{G.label}:r{ri}"] = row
    return ok, out


# 6 -------------------------------------------------------------------------------------

def _nesting(seed: int = SEED, samples: int = 100_000) -> tuple[bool, dict]:
    out, ok = {}, True
    for G in (family_G(2, 1), family_G(2, 2)):
        for eps in NESTING_EPS:
            rep = nesting_audit(G, eps, samples, seed)
            ok &= rep.passed
            out[f"{G.label}@{eps}"] = rep.to_dict()
    z, w = tangential_counterexample(0.01, 0.2)
    eye = np.eye(2)
    out["counterexample"] = {
        "epsilon": 0.01, "z": z, "w": w,
        "s_measure": float(s_measure(eye, z, w)[0]), "u_measure": float(u_measure(eye, z, w)[0]),
        "note": "identity element, two sphere points at angle 0.2: inside S(3 eps), outside U(12 eps)",
    }
    return ok, out


# 7 -------------------------------------------------------------------------------------

def _witnesses(seed: int = SEED, samples: int = 100_000) -> tuple[bool, dict]:
    G = family_G(2, 1)
    ok, rows = True, []
    for eps in (0.01, 0.1):
        for ri, _ in G.reflections:
            for li, l in enumerate(G.elements):
                m = witness_memberships(l, G.elements[ri], eps)
                ok &= m["U_l"] and m["U_lr"]
                rows.append({"epsilon": eps, "r": ri, "l": li, "U_l": m["U_l"], "U_lr": m["U_lr"]})
    c3 = triple_intersection_audit(cyclic_group(3), 0.01, samples, seed)
    g212 = triple_intersection_audit(G, 0.01, samples, seed)
    found = c3.details.get("mode") == "witness" and c3.passed and c3.hits.get("witness_pairs", 0) > 0
    absent = g212.hits.get("triple", 1) == 0 and g212.samples >= samples
    ok &= found and absent
    return ok, {"witness_pairs": rows, "cyclic(3)": c3.to_dict(), "G(2,1,2)": g212.to_dict(),
                "triple_found_cyclic3": found, "triple_absent_G212": absent}


# 8 -------------------------------------------------------------------------------------

def _displacement(seed: int = SEED, samples: int = 100_000) -> tuple[bool, dict]:
    out, ok = {}, True
    for G in (family_G(2, 1), family_G(2, 2), cyclic_group(3), cyclic_group(4)):
        dev = displacement_audit(G, 10_000, seed)
        C = displacement_constants(G)
        row = {"max_deviation": dev, "C1": C.C1, "C2": C.C2}
        ok &= max(dev.values()) <= 1e-12
        if G.label in ("G(2,1,2)", "G(2,2,2)"):
            slabs = {}
            per = max(1, samples // len(G.reflections))
            for ri, _ in G.reflections:
                rep = slab_audit(G.elements[ri], 0.05, per, seed, c=2.0 / C.C1)
                ok &= rep.passed
                slabs[ri] = rep.to_dict()
            row["slab"] = slabs
        out[G.label] = row
    return ok, out


# 9 -------------------------------------------------------------------------------------

BOUND_GROUPS = (("G(2,1,2)", lambda: family_G(2, 1)), ("G(2,2,2)", lambda: family_G(2, 2)),
                ("cyclic(4)", lambda: cyclic_group(4)))


def bound_check(G: ReflectionGroup, ps: Sequence[float] = BOUND_PS, samples: int = 1_000_000,
                seed: int = SEED) -> tuple[bool, dict]:
    reps = bound_ratio_reports(G, ps, samples=samples, seed=seed)
    ok, out = True, {}
    for p, rep in reps.items():
        finite = math.isfinite(rep.sup_ratio)
        spread = stratum_spread(rep)
        reeval = reevaluate(G, rep) if rep.argmax_pair else math.nan
        reeval_rel = abs(reeval - rep.sup_ratio) / rep.sup_ratio if finite and rep.sup_ratio > 0 else math.inf
        inv = r_invariance_check(G, p, seed=seed)
        row = {"sup_ratio": rep.sup_ratio, "argmax_pair": rep.argmax_pair, "failures": rep.failures,
               "per_stratum": rep.per_stratum, "per_strategy": rep.per_strategy, "stratum_spread_9_12": spread,
               "reevaluation_rel": reeval_rel, "invariance": inv}
        good = finite and reeval_rel <= 1e-10 and inv["group_action"] <= 1e-10 and inv["constants"] <= 1e-14
        if p == 2.0:
            good &= rep.sup_ratio <= 1.0
        else:
            good &= spread < 10.0
        row["passed"] = bool(good)
        ok &= good
        out[f"p={p}"] = row
    return ok, out


def _main_bound(seed: int = SEED, samples: int = 1_000_000) -> tuple[bool, dict]:
    out, ok = {}, True
    for label, make in BOUND_GROUPS:
        good, row = bound_check(make(), BOUND_PS, samples, seed)
        ok &= good
        out[label] = row
    return ok, out


# 10 ------------------------------------------------------------------------------------

def reproducing_check(seed: int = SEED, budget: int = 200_000) -> tuple[bool, dict]:
    T = trivial_group()
    ok, rows = True, []
    for z in REPRODUCING_POINTS:
        z = np.array(z, dtype=complex)
        for f in holomorphic_monomials(4):
            res = operator_apply(T, f, z, budget, seed, raise_unstable=False)
            truth = complex(f(z[None, :])[0])
            err = abs(res.value - truth)
            good = err <= 3 * res.stderr
            ok &= good
            rows.append({"function": f.name, "z": z, "estimate": res.value, "exact": truth,
                         "stderr": res.stderr, "z_score": err / res.stderr if res.stderr else math.inf})
    return ok, {"checks": rows}


def _weighted(seed: int = SEED) -> tuple[bool, dict]:
    ok_r, rep = reproducing_check(seed)
    scan = weighted_norm_scan(family_G(2, 2), PGRID, seed=seed)
    ok_s = scan.finite and not scan.any_unstable
    return ok_r and ok_s, {"reproducing": rep, "scan": scan.to_dict(),
                           "max_ratio_per_p": {str(p): scan.max_ratio(p) for p in PGRID}}


# 11 ------------------------------------------------------------------------------------

DETERMINISM_CRITERIA = (6, 7, 8, 9, 10)


def _determinism(seed: int, previous: Optional[dict] = None) -> tuple[bool, dict]:
    """Rerun 6..10 twice, at one worker and at three, and compare canonical JSON bytes."""
    runs = {}
    if previous is not None:
        runs["first"] = previous
    for tag, n in (("workers=1", 1), ("workers=3", 3)):
        with workers(n):
            runs[tag] = {c: canonical_json(CRITERIA[c][1](seed)[1]) for c in DETERMINISM_CRITERIA}
    ref = runs["workers=1"]
    out, ok = {}, True
    for c in DETERMINISM_CRITERIA:
        same = all(r[c] == ref[c] for r in runs.values())
        ok &= same
        out[str(c)] = {"identical": same, "bytes": len(ref[c])}
    return ok, {"runs": list(runs), "criteria": out}


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("group enumeration", lambda seed: _enumeration()),
    2: ("Jacobian cross-check", _jacobian_cross_check),
    3: ("cyclic series identity", _cyclic_series),
    4: ("exact factorizations", _factorizations),
    5: ("B-factorization", _b_factorizations),
    6: ("region nesting", _nesting),
    7: ("intersection witnesses", _witnesses),
    8: ("displacement constants and slab", _displacement),
    9: ("main bound", _main_bound),
    10: ("weighted estimate", _weighted),
    11: ("determinism", None),
}


def run_criterion(number: int, seed: int = SEED, previous: Optional[dict] = None) -> CriterionResult:
    name, fn = CRITERIA[number]
    if number == 11:
        return _timed(11, name, lambda: _determinism(seed, previous))
    return _timed(number, name, lambda: fn(seed))


def run_battery(numbers: Optional[Sequence[int]] = None, seed: int = SEED,
                progress: Optional[Callable[[CriterionResult], None]] = None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else sorted(numbers)
    results, previous = [], {}
    for n in numbers:
        res = run_criterion(n, seed, previous if previous.keys() >= set(DETERMINISM_CRITERIA) else None)
        if n in DETERMINISM_CRITERIA:
            previous[n] = canonical_json(res.details)
        results.append(res)
        if progress is not None:
            progress(res)
    return results


# per-group suite -------------------------------------------------------------------------

def group_battery(G: ReflectionGroup, seed: int = SEED, samples: int = 100_000,
                  progress: Optional[Callable[[CriterionResult], None]] = None) -> list[CriterionResult]:
    """The criteria that make sense for one group, numbered as in the full battery.

    Region nesting is judged by the first inclusion and the corrected second
    inclusion S(3 eps) in U(6 eps + sqrt(6 eps)); the count for the
    12 eps radius is reported alongside (see criterion 6 of the full battery).
    """
    checks: list[tuple[int, str, Callable[[], tuple[bool, dict]]]] = []

    def closure():
        C = close_generators(G.generators)
        same = len(C) == len(G) and all(C.index_of(g) is not None for g in G.elements)
        return same, {"order": len(G), "closure_order": len(C), "same_elements": same}

    def symmetry():
        rep = symmetry_suite(G, 10_000, seed)
        det = {"report": rep.to_dict()}
        ok = rep.all_passed
        if len(G) > 1:
            mut = symmetry_suite(G, 2_000, seed, dets=mutated_dets(G))
            det["mutation_detected"] = not mut.passed["two_forms"]
            ok &= det["mutation_detected"]
        return ok, det

    checks.append((1, "generator closure", closure))
    checks.append((0, "symmetry suite", symmetry))
    if G.is_exact and len(G) <= 12:
        checks.append((4, "exact factorization", lambda: factorization_check(G, seed)))
        if G.reflections:
            def bfact():
                rows = {f"r{ri}": b_factorization_check(G, ri, seed) for ri, _ in G.reflections}
                return all(ok for ok, _ in rows.values()), {k: v for k, (_, v) in rows.items()}
            checks.append((5, "B-factorization", bfact))

    def nesting():
        rows, ok = {}, True
        for eps in NESTING_EPS:
            rep = nesting_audit(G, eps, samples, seed)
            ok &= rep.violations["U_in_S3"] == 0 and rep.details["loose_passed"]
            rows[str(eps)] = rep.to_dict()
        return ok, rows

    checks.append((6, "region nesting (corrected second radius)", nesting))
    if G.reflections:
        def displacement():
            dev = displacement_audit(G, 10_000, seed)
            C = displacement_constants(G)
            slabs = {ri: slab_audit(G.elements[ri], 0.05, max(1, samples // len(G.reflections)), seed,
                                    c=2.0 / C.C1) for ri, _ in G.reflections}
            ok = max(dev.values()) <= 1e-12 and all(r.passed for r in slabs.values())
            return ok, {"max_deviation": dev, "C1": C.C1, "slab": {k: v.to_dict() for k, v in slabs.items()}}
        checks.append((8, "displacement constants and slab", displacement))
    checks.append((9, "main bound", lambda: bound_check(G, BOUND_PS, max(samples, 10_000), seed)))

    def weighted():
        scan = weighted_norm_scan(G, PGRID, seed=seed)
        return scan.finite and not scan.any_unstable, scan.to_dict()

    checks.append((10, "weighted scan", weighted))
    results = []
    for number, name, fn in checks:
        res = _timed(number, name, fn)
        results.append(res)
        if progress is not None:
            progress(res)
    return results

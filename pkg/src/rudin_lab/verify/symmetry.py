"""Sampled checks of the algebraic identities satisfied by K_G and K_{G,p}.

Each check is an exact identity, so what is measured is floating-point
agreement.  Deviations are divided by the size of the summands,
(1/|G|) sum_g |K(g.z, w)|, rather than by |K_G| itself: near a reflecting
hyperplane K_G is a cancellation of much larger terms and its own relative
accuracy is meaningless there.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .. import sampling as smp
from ..groups import ReflectionGroup
from ..kernels import (KernelConfig, averaged_kernel_batch, averaged_kernel_conj_form_batch, dominating_sum_batch,
                       k_gp_batch)
from ..regions import _hyperplane_vector

REL_TOL = 1e-12
ABS_TOL = 1e-12


@dataclass
class SymmetryReport:
    group: str
    samples: int
    seed: int
    deviations: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return asdict(self)


def _points(rng, n: int, radius: float = 0.95) -> np.ndarray:
    """Half uniform in the ball of the given radius, half in the shell near it."""
    h = n // 2
    Z1 = smp.uniform_ball(rng, h) * radius
    Z2 = smp.set_boundary_distance(smp.sphere(rng, n - h), smp.log_uniform(rng, 1 - radius, 0.5, n - h))
    return np.concatenate([Z1, Z2])


def mutated_dets(G: ReflectionGroup, index: int = 1, factor: complex = 1 + 0.01j) -> np.ndarray:
    """The determinant table with one entry perturbed by 1 percent (harness self-test)."""
    d = G.dets.copy()
    d[index] *= factor
    return d


def symmetry_suite(G: ReflectionGroup, sample_count: int = 10_000, seed: int = 42, p: float = 4.0,
                   dets: Optional[np.ndarray] = None) -> SymmetryReport:
    """Two written forms, Hermitian symmetry, skew covariance, |K_{G,p}| invariance, hyperplane vanishing.

    ``dets`` replaces the determinant table in the kernel evaluations; with
    :func:`mutated_dets` the two-forms and Hermitian checks must fail.
    """
    rng = smp.chunk_rng(seed, smp.stream_key("symmetry", G.label), 0)
    Z, W = _points(rng, sample_count), _points(rng, sample_count)
    dets = G.dets if dets is None else np.asarray(dets)
    scale = dominating_sum_batch(G, Z, W) / len(G)
    k1 = averaged_kernel_batch(G, Z, W, dets=dets)
    k2 = averaged_kernel_conj_form_batch(G, Z, W, dets=dets)
    dev = {"two_forms": float(np.max(np.abs(k1 - k2) / scale))}
    kswap = averaged_kernel_batch(G, W, Z, dets=dets)
    dev["hermitian"] = float(np.max(np.abs(k1 - np.conj(kswap)) / scale))
    skew = 0.0
    for g, det in zip(G.matrices, G.dets):
        kg = averaged_kernel_batch(G, Z @ g.T, W, dets=dets)
        skew = max(skew, float(np.max(np.abs(kg * det - k1) / scale)))
    dev["skew_covariance"] = skew
    cfg = KernelConfig(p=p)
    base = np.abs(k_gp_batch(G, Z, W, cfg))
    weight_scale = np.where(np.isfinite(base), base / np.maximum(np.abs(averaged_kernel_batch(G, Z, W)), 1e-300), 0.0)
    mod = 0.0
    for g in G.matrices:
        other = np.abs(k_gp_batch(G, Z @ g.T, W, cfg))
        ok = np.isfinite(base) & np.isfinite(other)
        mod = max(mod, float(np.max(np.abs(other[ok] - base[ok]) / (weight_scale[ok] * scale[ok]), initial=0.0)))
    dev["modulus_invariance"] = mod
    vanish = 0.0
    if G.hyperplanes:
        per = max(1, sample_count // len(G.hyperplanes))
        for Y in G.hyperplanes:
            v = _hyperplane_vector(Y.root)
            s = rng.uniform(0, 0.9, per) * np.exp(2j * np.pi * rng.random(per))
            Zh = s[:, None] * v[None, :]
            Wh = smp.uniform_ball(rng, per) * 0.9
            vanish = max(vanish, float(np.max(np.abs(averaged_kernel_batch(G, Zh, Wh, dets=dets)))))
    dev["hyperplane_vanishing"] = vanish
    passed = {k: (v <= ABS_TOL if k == "hyperplane_vanishing" else v <= REL_TOL) for k, v in dev.items()}
    return SymmetryReport(group=G.label, samples=sample_count, seed=seed, deviations=dev, passed=passed)

"""Numeric Bergman-kernel evaluation on the unit ball of C^2.

Scalar entry points (``ball_kernel``, ``averaged_kernel``, ...) validate their
input and raise on singular or degenerate points.  The ``*_batch`` variants
work on arrays of shape (n, 2), never raise, and return NaN where a value is
undefined; they are what the sampling code uses.

Kernels are unnormalised unless ``KernelConfig.normalized`` is set, in which
case the factor 2/pi^2 of the ball kernel is included.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import BadDivisor, JacobianZero, NotConverged, OutsideBall, OutsideRegion, SingularPoint
from .groups import ReflectionGroup

BALL_TOL = 1e-12
SINGULAR_TOL = 1e-300
BALL_CONSTANT = 2.0 / math.pi**2  # n!/pi^n for n = 2


@dataclass(frozen=True)
class BallPoint:
    z1: complex
    z2: complex

    def __post_init__(self):
        object.__setattr__(self, "z1", complex(self.z1))
        object.__setattr__(self, "z2", complex(self.z2))
        if abs(self.z1) ** 2 + abs(self.z2) ** 2 > 1 + BALL_TOL:
            raise OutsideBall(f"({self.z1}, {self.z2}) lies outside the closed unit ball")

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2], dtype=complex)

    @property
    def norm(self) -> float:
        return math.hypot(abs(self.z1), abs(self.z2))


@dataclass(frozen=True)
class KernelConfig:
    normalized: bool = False
    p: float = 2.0
    jac_constant_modulus: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not self.jac_constant_modulus > 0:
            raise ValueError("jac_constant_modulus must be positive")

    @property
    def constant(self) -> float:
        return BALL_CONSTANT if self.normalized else 1.0


PointLike = Union[BallPoint, np.ndarray, tuple, list]
_DEFAULT = KernelConfig()


def as_point(z: PointLike) -> np.ndarray:
    if isinstance(z, BallPoint):
        return z.as_array()
    arr = np.asarray(z, dtype=complex).reshape(2)
    BallPoint(arr[0], arr[1])
    return arr


def inner(z, w) -> np.ndarray:
    """Hermitian product <z, w> = z1 conj(w1) + z2 conj(w2), batched on the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


# batch layer -----------------------------------------------------------------

def orbit(G: ReflectionGroup, Z: np.ndarray) -> np.ndarray:
    """g.z for all g and all points: shape (|G|, n, 2)."""
    return np.einsum("gij,nj->gni", G.matrices, np.asarray(Z, dtype=complex).reshape(-1, 2))


def ball_kernel_batch(Z, W, constant: float = 1.0) -> np.ndarray:
    d = 1.0 - inner(Z, W)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = constant / d**3
    return np.where(np.abs(d) < SINGULAR_TOL, np.nan + 0j, out)


def averaged_kernel_batch(G: ReflectionGroup, Z, W, constant: float = 1.0, dets=None) -> np.ndarray:
    """(1/|G|) sum_g J(g) K(g.z, w) for each row pair."""
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    W = np.asarray(W, dtype=complex).reshape(-1, 2)
    dets = G.dets if dets is None else np.asarray(dets)
    # the constant is applied after the sum so that it scales the result exactly
    terms = ball_kernel_batch(orbit(G, Z), W[None, :, :])
    return constant * (np.einsum("g,gn->n", dets, terms) / len(G))


def averaged_kernel_conj_form_batch(G: ReflectionGroup, Z, W, constant: float = 1.0, dets=None) -> np.ndarray:
    """(1/|G|) sum_g K(z, g.w) conj(J(g)), the other written form of the same kernel."""
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    W = np.asarray(W, dtype=complex).reshape(-1, 2)
    dets = G.dets if dets is None else np.asarray(dets)
    terms = ball_kernel_batch(Z[None, :, :], orbit(G, W))
    return constant * (np.einsum("g,gn->n", np.conj(dets), terms) / len(G))


def dominating_sum_batch(G: ReflectionGroup, Z, W, constant: float = 1.0) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    W = np.asarray(W, dtype=complex).reshape(-1, 2)
    return constant * np.sum(np.abs(ball_kernel_batch(orbit(G, Z), W[None, :, :])), axis=0)


def jacobian_batch(G: ReflectionGroup, Z, modulus: float = 1.0) -> np.ndarray:
    """c_pi * prod_Y <z, rho_Y>^(m_Y - 1) with unit canonical roots."""
    Z = np.asarray(Z, dtype=complex).reshape(-1, 2)
    out = np.full(Z.shape[0], modulus, dtype=complex)
    for Y in G.hyperplanes:
        out = out * inner(Z, Y.root[None, :]) ** (Y.multiplicity - 1)
    return out


def k_gp_batch(G: ReflectionGroup, Z, W, cfg: KernelConfig = _DEFAULT) -> np.ndarray:
    """Weighted kernel; NaN where a Jacobian vanishes under a negative power."""
    a = 2.0 / cfg.p - 1.0
    jz = np.abs(jacobian_batch(G, Z, cfg.jac_constant_modulus))
    jw = np.abs(jacobian_batch(G, W, cfg.jac_constant_modulus))
    kg = averaged_kernel_batch(G, Z, W, cfg.constant)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if a == 0.0:
            weight = np.ones_like(jz)
        else:
            weight = jz**a * jw ** (-a)
        bad = ((jz == 0) & (a < 0)) | ((jw == 0) & (a > 0))
        return np.where(bad, np.nan + 0j, weight * kg)


def bound_ratio_batch(G: ReflectionGroup, Z, W, p: float) -> np.ndarray:
    """R(z, w) = |K_{G,p}(z, w)| / sum_g |K(g.z, w)|; NaN where undefined."""
    cfg = KernelConfig(p=p)
    num = np.abs(k_gp_batch(G, Z, W, cfg))
    den = dominating_sum_batch(G, Z, W)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(np.isfinite(out), out, np.nan)


# scalar layer ------------------------------------------------------------------

def _check_singular(G: Optional[ReflectionGroup], z: np.ndarray, w: np.ndarray) -> None:
    pts = orbit(G, z[None, :])[:, 0, :] if G is not None else z[None, :]
    d = np.abs(1.0 - inner(pts, w[None, :]))
    bad = np.nonzero(d < SINGULAR_TOL)[0]
    if bad.size:
        idx = int(bad[0]) if G is not None else None
        raise SingularPoint(f"1 - <g.z, w> vanishes (element {idx})", element_index=idx)


def ball_kernel(z: PointLike, w: PointLike, cfg: KernelConfig = _DEFAULT) -> complex:
    """Ball kernel c / (1 - <z, w>)^3."""
    z, w = as_point(z), as_point(w)
    _check_singular(None, z, w)
    return complex(ball_kernel_batch(z, w, cfg.constant))


def averaged_kernel(G: ReflectionGroup, z: PointLike, w: PointLike, cfg: KernelConfig = _DEFAULT) -> complex:
    z, w = as_point(z), as_point(w)
    _check_singular(G, z, w)
    return complex(averaged_kernel_batch(G, z, w, cfg.constant)[0])


def jacobian_product(G: ReflectionGroup, z: PointLike, cfg: KernelConfig = _DEFAULT) -> complex:
    return complex(jacobian_batch(G, as_point(z), cfg.jac_constant_modulus)[0])


def closed_form_jacobian_Gml(m: int, l: int, z: PointLike) -> complex:
    """Jacobian determinant of the orbit map (z1^m + z2^m, (z1 z2)^(m/l))."""
    if m < 1 or l < 1 or m % l:
        raise BadDivisor(f"l={l} does not divide m={m}")
    z1, z2 = np.asarray(z, dtype=complex).reshape(2)
    k = m // l
    return complex((m * m / l) * (z1 * z2) ** (k - 1) * (z1**m - z2**m))


def orbit_map_constant(m: int, l: int) -> float:
    """|c_pi| for which the product formula reproduces the closed-form G(m,l,2) Jacobian."""
    from .groups import family_G

    z = np.array([0.31 + 0.17j, -0.22 + 0.41j])
    return abs(closed_form_jacobian_Gml(m, l, z) / jacobian_product(family_G(m, l), z))


def k_gp(G: ReflectionGroup, z: PointLike, w: PointLike, cfg: KernelConfig = _DEFAULT) -> complex:
    """|J(z)|^(2/p-1) K_G(z, w) |J(w)|^(1-2/p)."""
    z, w = as_point(z), as_point(w)
    a = 2.0 / cfg.p - 1.0
    jz = abs(jacobian_product(G, z, cfg))
    jw = abs(jacobian_product(G, w, cfg))
    if a < 0 and jz == 0:
        raise JacobianZero("J(pi)(z) = 0 under a negative power", side="z")
    if a > 0 and jw == 0:
        raise JacobianZero("J(pi)(w) = 0 under a negative power", side="w")
    kg = averaged_kernel(G, z, w, cfg)
    if a == 0:
        return kg
    return jz**a * kg * jw ** (-a)


def weight_sigma(G: ReflectionGroup, z: PointLike, p: float, cfg: KernelConfig = _DEFAULT) -> float:
    """|J(pi)(z)|^(2 - p); p may be any value >= 1 here."""
    j = abs(jacobian_product(G, z, cfg))
    if p > 2 and j == 0:
        raise JacobianZero("J(pi)(z) = 0 with p > 2", side="z")
    if p == 2:
        return 1.0
    return j ** (2.0 - p)


def dominating_sum(G: ReflectionGroup, z: PointLike, w: PointLike, cfg: KernelConfig = _DEFAULT) -> float:
    z, w = as_point(z), as_point(w)
    _check_singular(G, z, w)
    return float(dominating_sum_batch(G, z, w, cfg.constant)[0])


def cyclic_closed_form(m: int, z: PointLike, w: PointLike, truncation: int = 10_000) -> complex:
    """Series form of the averaged kernel of the order-m cyclic group with root (1, 0).

    Valid where |z1 conj(w1)| < |1 - z2 conj(w2)| / 2.  Writing x = z1 conj(w1),
    y = 1 - z2 conj(w2) and t = x / y, the value is

        x^(m-1) / y^(m+2) * sum_{j>=0} C((j+1)m + 1, 2) t^(jm).
    """
    z, w = as_point(z), as_point(w)
    x = z[0] * np.conj(w[0])
    y = 1.0 - z[1] * np.conj(w[1])
    if not abs(x) < 0.5 * abs(y):
        raise OutsideRegion("point violates |z1 conj(w1)| < |1 - z2 conj(w2)| / 2")
    if x == 0:
        return 0j
    t_m = (x / y) ** m
    at = abs(t_m)

    def coef(j):
        n = (j + 1) * m
        return (n + 1) * n / 2.0

    total = 0j
    power = 1.0 + 0j
    for j in range(truncation):
        total += coef(j) * power
        power *= t_m
        nxt = coef(j + 1) * abs(power)
        ratio = coef(j + 2) / coef(j + 1) * at
        if ratio < 1 and nxt / (1 - ratio) <= 1e-16 * abs(total):
            return complex(x ** (m - 1) / y ** (m + 2) * total)
    raise NotConverged(f"series not converged after {truncation} terms")

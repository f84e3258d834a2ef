import numpy as np
import pytest

from rudin_lab.errors import DivisionFailed, NotCyclotomic, NotReflection, ZeroForm
from rudin_lab.groups import cyclic_group, family_G
from rudin_lab.kernels import averaged_kernel_batch
from rudin_lab.symbolic.cyclotomic import CycloNum
from rudin_lab.symbolic.factor import (compute_B_factorization, compute_M, denominator, eval_mpoly, exact_divide,
                                       expand_Q, hermitian_symmetry_check, jacobian_polys, skew_check)
from rudin_lab.symbolic.mpoly import MPoly
from conftest import random_ball

z1, z2, u1, u2 = (MPoly.var(i, 2) for i in range(4))


def test_expand_Q_trivial_is_one(trivial):
    assert expand_Q(trivial) == MPoly.one(1)


def test_expand_Q_flip_direct_expansion(flip_group):
    # Q = (1 + z1 u1 - z2 u2)^3 - (1 - z1 u1 - z2 u2)^3, written independently here
    one = MPoly.one(2)
    oracle = (one + z1 * u1 - z2 * u2) ** 3 - (one - z1 * u1 - z2 * u2) ** 3
    Q = expand_Q(flip_group)
    assert Q == oracle
    assert all(e[0] % 2 == 1 and e[0] == e[2] for e in Q.terms)


@pytest.mark.parametrize("make", [lambda: family_G(2, 1), lambda: family_G(2, 2), lambda: cyclic_group(3)])
def test_expand_Q_matches_kernel_numerics(make, rng):
    G = make()
    Q = expand_Q(G)
    assert Q.total_degree() <= 3 * (2 * len(G) - 2)
    Z, W = random_ball(rng, 50), random_ball(rng, 50)
    num = len(G) * averaged_kernel_batch(G, Z, W) * denominator(G).evaluate(Z, W)
    assert np.max(np.abs(num - Q.evaluate(Z, W)) / np.abs(num)) < 1e-9


def test_eval_mpoly_examples():
    assert eval_mpoly(MPoly.one(2), np.zeros(2), np.zeros(2)) == 1
    assert eval_mpoly(z1 * u1, np.array([0.3, 0]), np.array([0.5, 0])) == pytest.approx(0.15)


def test_skew_check_examples(flip_group, g212, cyc3):
    assert skew_check(z1 * u1, flip_group)
    assert not skew_check(MPoly.one(2), flip_group)
    for G in (flip_group, g212, cyc3):
        assert skew_check(expand_Q(G), G)


def test_skew_check_generators_agree_with_full_pairs(g222):
    Q = expand_Q(g222)
    assert skew_check(Q, g222, use_generators=True) == skew_check(Q, g222, use_generators=False)


def test_exact_divide_examples():
    q = exact_divide(z1 ** 3 * u2, (1, 0), 2, "z")
    assert q.remainder_zero and q.quotient == z1 * u2
    assert not exact_divide(z1 + z2, (1, -1), 1, "z").remainder_zero


def test_exact_divide_zero_form():
    with pytest.raises(ZeroForm):
        exact_divide(z1, (0, 0))


def test_exact_divide_reconstructs(rng):
    # (z1 - i z2)^2 * P divided back out
    N = 4
    i = CycloNum.root_of_unity(1, N)
    a, b, c, d = (MPoly.var(k, N) for k in range(4))
    P = a * d + b * b * c + MPoly.one(N)
    L = MPoly.linear_form((1, -i), "z", N)
    res = exact_divide(L * L * P, (1, -i), 2, "z")
    assert res.remainder_zero and res.quotient == P


def test_flip_Q_divisible_by_z1_then_u1(flip_group):
    Q = expand_Q(flip_group)
    r1 = exact_divide(Q, (1, 0), 1, "z")
    r2 = exact_divide(r1.quotient, (1, 0), 1, "u")
    assert r1.remainder_zero and r2.remainder_zero


def test_compute_M_trivial_and_flip(trivial, flip_group):
    assert compute_M(trivial).M == MPoly.one(1)
    M = compute_M(flip_group).M
    assert M.total_degree() == 4
    # joint degree 4 in (z1 u1, z2 u2): exponents pair up
    assert all(e[0] == e[2] and e[1] == e[3] for e in M.terms)


def test_compute_M_g222_numeric(g222, rng):
    res = compute_M(g222)
    assert len(res.divisions) == 4
    jz, ju = jacobian_polys(g222)
    Z, W = random_ball(rng, 40), random_ball(rng, 40)
    lhs = res.Q.evaluate(Z, W)
    rhs = jz.evaluate(Z, W) * ju.evaluate(Z, W) * res.M.evaluate(Z, W)
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-9


def test_compute_M_rejects_wrong_divisor(flip_group):
    # asking for a hyperplane that is not there: z2 does not divide Q
    Q = expand_Q(flip_group)
    assert not exact_divide(Q, (0, 1), 1, "z").remainder_zero


def test_division_failure_raises_on_bad_numerator(flip_group):
    with pytest.raises(DivisionFailed):
        compute_M(flip_group, Q=MPoly.one(2))


def test_numeric_group_is_not_cyclotomic():
    # a reflection whose root has no small cyclotomic form stays numeric
    G = cyclic_group(2, root=(np.cos(0.3), np.sin(0.3)))
    assert not G.is_exact
    with pytest.raises(NotCyclotomic):
        expand_Q(G)


def test_B_factorization_single_reflection_group_is_empty(flip_group):
    b = compute_B_factorization(flip_group, 1)
    assert b.numerator.is_zero() and b.Q_H.is_zero() and b.P_H.is_zero()


def test_B_factorization_g212_flip(g212, rng):
    ri = next(i for i, g in enumerate(g212.elements) if np.allclose(g.matrix, np.diag([-1, 1])))
    b = compute_B_factorization(g212, ri)
    assert not b.Q_H.is_zero()
    assert len(b.coset_representatives) == 4
    assert hermitian_symmetry_check(b.numerator) and hermitian_symmetry_check(b.L)
    Z, W = random_ball(rng, 100), random_ball(rng, 100)
    direct = sum(g212.dets[i] * (1 - np.sum((Z @ g212.matrices[i].T) * np.conj(W), axis=1)) ** -3
                 for i in b.outside_H)
    rho = (1, 0)
    lz = MPoly.linear_form(rho, "z", g212.conductor)
    lu = MPoly.linear_form(rho, "u", g212.conductor)
    via = (lz * lu * b.Q_H).evaluate(Z, W) / b.L.evaluate(Z, W)
    assert np.max(np.abs(direct - via) / np.abs(direct)) < 1e-9


def test_B_factorization_needs_reflection(g212):
    with pytest.raises(NotReflection):
        compute_B_factorization(g212, 0)


def test_hermitian_symmetry_examples():
    assert hermitian_symmetry_check(z1 * u1)
    i4 = CycloNum.root_of_unity(1, 4)
    assert not hermitian_symmetry_check((MPoly.var(0, 4) * MPoly.var(2, 4)).scale(i4))

import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rudin_lab.symbolic.cyclotomic import CycloNum, cyclotomic_polynomial, euler_phi, recognize

CONDUCTORS = [1, 2, 3, 4, 6, 8, 12]


@pytest.mark.parametrize("n, coeffs", [
    (1, (-1, 1)),
    (2, (1, 1)),
    (3, (1, 1, 1)),
    (4, (1, 0, 1)),
    (6, (1, -1, 1)),
    (8, (1, 0, 0, 0, 1)),
    (12, (1, 0, -1, 0, 1)),
])
def test_cyclotomic_polynomials_known_values(n, coeffs):
    assert cyclotomic_polynomial(n) == coeffs


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 8, 9, 12, 24])
def test_phi_is_degree(n):
    assert len(cyclotomic_polynomial(n)) - 1 == euler_phi(n)


@pytest.mark.parametrize("N", CONDUCTORS)
def test_root_embeds_to_exponential(N):
    for k in range(N):
        z = CycloNum.root_of_unity(k, N)
        assert abs(z.embed() - cmath.exp(2j * math.pi * k / N)) < 1e-13


@pytest.mark.parametrize("N", [3, 4, 8, 12])
def test_root_power_is_one(N):
    z = CycloNum.root_of_unity(1, N)
    assert z ** N == CycloNum.rational(1, N)
    assert z ** (N - 1) * z == 1


def small_cyclo(N):
    phi = euler_phi(N)
    frac = st.fractions(min_value=-3, max_value=3, max_denominator=5)
    return st.lists(frac, min_size=phi, max_size=phi).map(lambda c: CycloNum(c, N))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([3, 4, 8, 12]).flatmap(lambda N: st.tuples(small_cyclo(N), small_cyclo(N))))
def test_field_axioms_exact(pair):
    a, b = pair
    assert (a + b) - b == a
    if not b.is_zero():
        assert (a * b) / b == a
    assert a.conjugate().conjugate() == a
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([3, 4, 8, 12]).flatmap(lambda N: st.tuples(small_cyclo(N), small_cyclo(N))))
def test_embedding_is_a_homomorphism(pair):
    a, b = pair
    assert abs((a * b).embed() - a.embed() * b.embed()) <= 1e-12 * max(1.0, abs(a.embed() * b.embed()))
    assert abs((a + b).embed() - a.embed() - b.embed()) <= 1e-12
    assert abs(a.conjugate().embed() - a.embed().conjugate()) <= 1e-12


def test_conjugate_of_root_is_inverse_root():
    z = CycloNum.root_of_unity(1, 8)
    assert z.conjugate() == CycloNum.root_of_unity(7, 8)


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        CycloNum.rational(0, 4).inverse()


def test_mixed_conductors_rejected():
    with pytest.raises(ValueError):
        CycloNum.rational(1, 3) + CycloNum.rational(1, 4)


@pytest.mark.parametrize("x, N", [
    (1j, 4),
    (-1, 4),
    (0.5, 3),
    (cmath.exp(2j * math.pi / 3), 3),
    ((1 + cmath.exp(2j * math.pi / 8)) / 2, 8),
    (0, 6),
])
def test_recognize_round_trip(x, N):
    c = recognize(x, N)
    assert c is not None
    assert abs(c.embed() - x) < 1e-12


def test_recognize_gives_up_on_transcendental():
    assert recognize(math.pi / 7, 4) is None


def test_sqrt2_lives_in_q_zeta8():
    z = CycloNum.root_of_unity(1, 8)
    r2 = z + z.conjugate()
    assert r2 * r2 == CycloNum.rational(2, 8)
    assert r2 * Fraction(1, 2) * r2 == 1

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rudin_lab.errors import BadDivisor, NotFinite, NotSubgroup, NotUnitary, SpecError
from rudin_lab.groups import (GroupElement, close_generators, conjugate_group, coset_representatives, cyclic_group,
                              family_G, family_generators, from_matrices, group_from_spec, is_reflection,
                              load_group_spec, subgroup_generated)
from conftest import FLIP, SWAP

FAMILY = [(1, 1), (2, 1), (2, 2), (3, 3), (4, 2), (6, 2), (6, 6)]


def brute_force_G(m, l):
    """Monomial matrices with m-th root entries whose exponent sum is divisible by l."""
    th = np.exp(2j * np.pi / m)
    out = []
    for perm in (np.eye(2), SWAP.real):
        for a in range(m):
            for b in range(m):
                if (a + b) % l == 0:
                    out.append(np.diag([th ** a, th ** b]) @ perm)
    return out


@pytest.mark.parametrize("m, l", FAMILY)
def test_family_order_formula_and_brute_force(m, l):
    G = family_G(m, l)
    assert len(G) == 2 * m * m // l
    oracle = brute_force_G(m, l)
    assert len(oracle) == len(G)
    for M in oracle:
        assert any(np.allclose(M, g.matrix) for g in G.elements)


@pytest.mark.parametrize("m, l", FAMILY)
def test_generator_closure_matches_enumeration(m, l):
    G = family_G(m, l)
    C = close_generators(family_generators(m, l))
    assert len(C) == len(G)
    assert all(C.index_of(g) is not None for g in G.elements)


def test_family_bad_divisor():
    with pytest.raises(BadDivisor):
        family_G(4, 3)


def test_identity_comes_first(g212):
    assert g212.elements[0].is_identity()


def test_close_generators_examples():
    e = GroupElement(np.eye(2))
    assert len(close_generators([e])) == 1
    assert len(close_generators([GroupElement(FLIP)])) == 2


def test_close_generators_cap():
    rot = np.array([[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]])
    with pytest.raises(NotFinite):
        close_generators([GroupElement(rot)], cap=50)


def test_non_unitary_rejected():
    with pytest.raises(NotUnitary):
        GroupElement(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_is_reflection_examples():
    d = is_reflection(GroupElement(FLIP))
    assert d.angle == pytest.approx(np.pi)
    assert np.allclose(d.root, [1, 0])
    assert is_reflection(GroupElement(np.eye(2))) is None
    s = is_reflection(GroupElement(SWAP))
    assert s.angle == pytest.approx(np.pi)
    # root up to a phase
    assert abs(abs(np.vdot(s.root, np.array([1, -1]) / np.sqrt(2))) - 1) < 1e-12


def test_minus_identity_is_not_a_reflection():
    assert is_reflection(GroupElement(-np.eye(2))) is None


def test_hyperplanes_g212(g212):
    Ys = g212.hyperplanes
    assert len(Ys) == 4 and all(Y.multiplicity == 2 for Y in Ys)
    roots = {tuple(np.round(np.abs(Y.root), 6)) for Y in Ys}
    s = round(1 / np.sqrt(2), 6)
    assert roots == {(1.0, 0.0), (0.0, 1.0), (s, s)}


def test_hyperplanes_g222_only_diagonals(g222):
    assert len(g222) == 4
    for Y in g222.hyperplanes:
        assert abs(abs(Y.root[0]) - abs(Y.root[1])) < 1e-12


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_cyclic_single_hyperplane(m):
    C = cyclic_group(m)
    assert len(C) == m
    assert len(C.hyperplanes) == 1 and C.hyperplanes[0].multiplicity == m


def test_trivial_has_no_hyperplanes(trivial):
    assert trivial.hyperplanes == []


@pytest.mark.parametrize("make", [lambda: family_G(2, 1), lambda: family_G(3, 3), lambda: cyclic_group(4)])
def test_hyperplane_invariants(make):
    G = make()
    for Y in G.hyperplanes:
        assert abs(np.linalg.norm(Y.root) - 1) < 1e-12
        assert Y.multiplicity == len(Y.members) + 1
        v = np.array([-np.conj(Y.root[1]), np.conj(Y.root[0])])
        for i in Y.members:
            assert np.linalg.norm(G.elements[i].act(v) - v) <= 1e-12


@pytest.mark.parametrize("make", [lambda: family_G(2, 1), lambda: family_G(6, 2), lambda: cyclic_group(3)])
def test_group_axioms(make):
    G = make()
    for g in G.elements:
        assert G.index_of(g.inverse()) is not None
        assert len(G) % g.order == 0
        assert abs(abs(g.det) - 1) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(30):
        a, b = rng.integers(0, len(G), 2)
        assert G.index_of(G.elements[a] @ G.elements[b]) is not None


@pytest.mark.parametrize("make", [lambda: family_G(2, 1), lambda: family_G(3, 3), lambda: family_G(4, 2)])
def test_generated_by_reflections(make):
    G = make()
    R = close_generators([G.elements[i] for i, _ in G.reflections])
    assert len(R) == len(G)


def test_conjugate_examples(g222):
    same = conjugate_group(g222, np.eye(2))
    assert all(same.index_of(g) is not None for g in g222.elements)
    c = conjugate_group(cyclic_group(3), SWAP)
    assert len(c.hyperplanes) == 1
    assert abs(abs(c.hyperplanes[0].root[1]) - 1) < 1e-12
    u = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]]) * np.exp(0.2j)
    assert len(conjugate_group(g222, u)) == 4


def test_conjugate_rejects_non_unitary(g222):
    with pytest.raises(NotUnitary):
        conjugate_group(g222, np.diag([2.0, 1.0]))


def test_coset_examples(g212, trivial):
    assert len(coset_representatives(g212, g212)) == 1
    H1 = subgroup_generated(g212, [g212.elements[0]])
    assert len(coset_representatives(g212, H1)) == 8
    H = subgroup_generated(g212, [GroupElement(FLIP)])
    reps = coset_representatives(g212, H)
    assert len(reps) == 4
    # the cosets partition G
    cover = {g212.index_of(r @ h) for r in reps for h in H.elements}
    assert cover == set(range(8))


def test_coset_not_subgroup(g222):
    H = from_matrices([FLIP])
    with pytest.raises(NotSubgroup):
        coset_representatives(g222, H)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 7), st.floats(-1, 1), st.floats(-1, 1))
def test_action_is_unitary(i, a, b):
    from rudin_lab.groups import family_G as fg
    G = fg(2, 1)
    z = np.array([a + 0.3j, b - 0.1j]) / 2
    assert np.linalg.norm(G.elements[i].act(z)) == pytest.approx(np.linalg.norm(z))


def test_spec_files(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"family": "G", "m": 2, "l": 1}))
    G, spec, sha = load_group_spec(p)
    assert len(G) == 8 and spec["m"] == 2 and len(sha) == 64
    G2 = group_from_spec({"generators": [[[0, 1], [1, 0]]]})
    assert len(G2) == 2 and G2.is_exact
    assert len(group_from_spec({"family": "cyclic", "m": 3, "root": [[0, 0], [1, 0]]})) == 3


@pytest.mark.parametrize("spec", [{"family": "G", "m": 2}, {"family": "nope"}, [1, 2]])
def test_bad_specs(spec):
    with pytest.raises(SpecError):
        group_from_spec(spec)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SpecError):
        load_group_spec(p)

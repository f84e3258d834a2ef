import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rudin_lab.errors import QuadratureUnstable
from rudin_lab.groups import cyclic_group, family_G, from_matrices, trivial_group
from rudin_lab.kernels import dominating_sum_batch, k_gp_batch, KernelConfig
from rudin_lab.verify.battery import canonical_json, factorization_check, run_criterion, workers
from rudin_lab.verify.bound import (SampleStrategy, bound_ratio_report, bound_ratio_reports, cyclic_series_residual,
                                    reevaluate, r_invariance_check, region_bound_audit, stratum_spread)
from rudin_lab.verify.operator import (BALL_VOLUME, TestFunction, default_family, exact_Q, monomial, operator_apply,
                                       singular_normalizer, weighted_norm_scan)
from rudin_lab.verify.symmetry import mutated_dets, symmetry_suite
from conftest import FLIP, random_ball


# main bound ---------------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.1, 2.0, 4.0])
def test_trivial_group_ratio_is_one(trivial, p):
    rep = bound_ratio_report(trivial, p, samples=5000)
    assert rep.sup_ratio == pytest.approx(1.0, abs=1e-12)
    assert rep.failures == 0


@pytest.mark.parametrize("make", [lambda: family_G(2, 1), lambda: family_G(2, 2), lambda: cyclic_group(4)])
def test_p2_ratio_never_exceeds_one(make, rng):
    G = make()
    Z, W = random_ball(rng, 4000, 0.999), random_ball(rng, 4000, 0.999)
    R = np.abs(k_gp_batch(G, Z, W, KernelConfig(p=2.0))) / dominating_sum_batch(G, Z, W)
    assert np.all(R <= 1 + 1e-12)
    assert bound_ratio_report(G, 2.0, samples=20_000).sup_ratio <= 1.0


coord = st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))


@settings(max_examples=60, deadline=None)
@given(coord, coord, coord, coord)
def test_p2_pointwise_property(a, b, c, d):
    G = family_G(2, 2)
    z = np.array([[complex(*a), complex(*b)]])
    w = np.array([[complex(*c), complex(*d)]])
    R = abs(k_gp_batch(G, z, w, KernelConfig(p=2.0))[0]) / dominating_sum_batch(G, z, w)[0]
    assert R <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 0.95))
def test_singular_normalizer_increasing(r1, r2):
    lo, hi = sorted((r1, r2))
    assert singular_normalizer(lo) <= singular_normalizer(hi) * (1 + 1e-15)


def test_report_argmax_reevaluates(g212):
    for p, rep in bound_ratio_reports(g212, [1.1, 4.0], samples=20_000).items():
        assert math.isfinite(rep.sup_ratio)
        assert abs(reevaluate(g212, rep) - rep.sup_ratio) <= 1e-10 * rep.sup_ratio
        assert set(rep.stratum_argmax) == {k for k, s, _ in rep.per_stratum if s is not None}


def test_stratum_spread_is_moderate(g222):
    rep = bound_ratio_report(g222, 4.0, samples=50_000)
    assert 1.0 <= stratum_spread(rep) < 10.0


def test_stratum_spread_missing_stratum_is_infinite(g222):
    rep = bound_ratio_report(g222, 4.0, strategies=[SampleStrategy("uniform", 100)])
    assert stratum_spread(rep) == math.inf


def test_bound_reports_are_reproducible(cyc4):
    a = bound_ratio_report(cyc4, 1.1, samples=10_000, seed=3).to_dict()
    b = bound_ratio_report(cyc4, 1.1, samples=10_000, seed=3).to_dict()
    c = bound_ratio_report(cyc4, 1.1, samples=10_000, seed=4).to_dict()
    assert canonical_json(a) == canonical_json(b) != canonical_json(c)


def test_bound_reports_independent_of_workers(g212):
    with workers(1):
        a = canonical_json(bound_ratio_report(g212, 4.0, samples=30_000).to_dict())
    with workers(3):
        b = canonical_json(bound_ratio_report(g212, 4.0, samples=30_000).to_dict())
    assert a == b


def test_strategy_validation():
    with pytest.raises(ValueError):
        SampleStrategy("nowhere", 10)
    with pytest.raises(ValueError):
        SampleStrategy("slab", 10)
    with pytest.raises(ValueError):
        SampleStrategy("uniform", 0)


@pytest.mark.parametrize("make", [lambda: family_G(2, 2), lambda: cyclic_group(4)])
def test_r_invariance(make):
    inv = r_invariance_check(make(), 4.0, 600)
    assert inv["group_action"] <= 1e-10 and inv["constants"] <= 1e-14 and inv["points"] > 0


# cyclic series ------------------------------------------------------------------------

@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_cyclic_series_residual(m):
    r = cyclic_series_residual(m, 1500)
    assert r.max_relative_residual < 1e-10
    assert r.max_absolute_on_axis < 1e-14


# region bounds ------------------------------------------------------------------------

def test_region_audit_trivial():
    out = region_bound_audit(trivial_group(), 4.0, 0.05, 2000)
    assert list(out["I_g"]) == [0] and out["I_g"][0].sup_ratio == pytest.approx(1.0)
    assert not out["U_r&U_id"] and not out["empty"]


def test_region_audit_swap_reflection_is_sampled(g222):
    swap = next(i for i, r in g222.reflections if np.allclose(g222.elements[i].matrix, [[0, 1], [1, 0]]))
    out = region_bound_audit(g222, 4.0, 0.05, 2000)
    assert swap in out["U_r&U_id"] and out["U_r&U_id"][swap].samples > 0


def test_region_audit_transport_within_factor_two(g212):
    out = region_bound_audit(g212, 4.0, 0.05, 4000)
    assert not out["empty"]
    for key, rep in out["U_g&U_h"].items():
        other = out["U_g&U_h_transported"][key]
        assert math.isfinite(rep.sup_ratio) and math.isfinite(other.sup_ratio)
        assert 0.5 <= rep.sup_ratio / other.sup_ratio <= 2.0
    assert all(math.isfinite(r.sup_ratio) for r in out["I_g"].values())


# operator -----------------------------------------------------------------------------

def test_singular_normalizer_at_zero_is_ball_volume():
    assert singular_normalizer(0.0) == pytest.approx(math.pi**2 / 2, rel=1e-15)
    with pytest.raises(ValueError):
        singular_normalizer(1.0)


def test_singular_normalizer_monte_carlo(rng):
    a = np.array([0.5, 0.0])
    W = random_ball(rng, 400_000, 1.0)
    # random_ball samples uniformly; estimate the integral by volume * mean
    est = BALL_VOLUME * np.mean(np.abs(1 - W @ np.conj(a)) ** -3)
    assert est == pytest.approx(singular_normalizer(0.5), rel=5e-3)


@pytest.mark.parametrize("f,truth", [(monomial(0, 0), lambda z: 1.0), (monomial(1, 0), lambda z: z[0])])
def test_reproducing_property_trivial(trivial, f, truth):
    z = np.array([0.3 + 0.1j, -0.2j])
    res = operator_apply(trivial, f, z, budget=40_000)
    assert abs(res.value - truth(z)) <= 3 * res.stderr + 1e-12


def test_flip_group_keeps_skew_function():
    G = from_matrices([FLIP])
    z = np.array([0.4, 0.2 + 0.3j])
    res = operator_apply(G, monomial(1, 0), z, budget=40_000)
    assert abs(res.value - z[0]) <= 3 * res.stderr
    # the exact projection gives the same answer
    assert exact_Q(G, monomial(1, 0), z[None, :])[0] == pytest.approx(z[0])


def test_flip_group_kills_invariant_function():
    G = from_matrices([FLIP])
    z = np.array([0.4, 0.2 + 0.3j])
    assert abs(exact_Q(G, monomial(0, 1), z[None, :])[0]) < 1e-14


def test_operator_unstable_raises(trivial):
    # a wildly oscillating function with a tiny budget cannot be resolved
    f = TestFunction.from_dict("osc", {(9, 9, 0, 0): 1.0})
    with pytest.raises(QuadratureUnstable):
        operator_apply(trivial, f, np.array([0.1, 0.1]), budget=200)


def test_operator_result_reproducible(trivial):
    z = np.array([0.2, 0.1j])
    a = operator_apply(trivial, monomial(0, 1), z, budget=10_000, seed=5)
    b = operator_apply(trivial, monomial(0, 1), z, budget=10_000, seed=5)
    assert a.to_dict() == b.to_dict()


def test_test_function_projection_of_mixed_term():
    # P(w1 conj(w1)) = 1/3 on the ball
    f = TestFunction.from_dict("m", {(1, 0, 1, 0): 1.0})
    assert f.projection_terms() == {(0, 0): pytest.approx(1 / 3)}
    assert not f.is_holomorphic and f.degree == 2


# weighted norms -----------------------------------------------------------------------

def test_weighted_scan_trivial_at_most_one(trivial):
    # projection fixes holomorphic functions, and the weight is 1 for the trivial group
    family = default_family(trivial)
    scan = weighted_norm_scan(trivial, [1.5, 2.0, 3.0], family=family, nodes=20_000)
    holo = {f.name for f in family if f.is_holomorphic}
    assert holo and scan.finite
    for c in scan.cells:
        if c.function in holo or c.p == 2.0:
            assert c.ratio <= 1 + 3 * c.ratio_stderr + 1e-12


def test_weighted_scan_g222_finite(g222):
    scan = weighted_norm_scan(g222, [1.1, 1.5, 2, 3, 5], nodes=20_000)
    assert scan.finite and not scan.any_unstable
    for c in scan.cells:
        if c.p == 2.0:
            assert c.ratio <= 1 + 3 * c.ratio_stderr + 1e-12


def test_weighted_scan_rejects_bad_p(g222):
    with pytest.raises(ValueError):
        weighted_norm_scan(g222, [1.0])
    with pytest.raises(ValueError):
        weighted_norm_scan(g222, [2.0], inner="guess")


# symmetry -----------------------------------------------------------------------------

@pytest.mark.parametrize("make", [trivial_group, lambda: family_G(2, 1), lambda: family_G(2, 2),
                                  lambda: cyclic_group(3)])
def test_symmetry_suite_passes(make):
    rep = symmetry_suite(make(), 2000)
    assert rep.all_passed, rep.deviations


def test_symmetry_suite_detects_mutation(g212):
    rep = symmetry_suite(g212, 2000, dets=mutated_dets(g212))
    assert not rep.passed["two_forms"] and not rep.passed["hermitian"]


# factorization check used by the battery --------------------------------------------

def test_factorization_check_cyclic3(cyc3):
    ok, det = factorization_check(cyc3)
    assert ok, det
    json.dumps(det, default=str)


# battery determinism ------------------------------------------------------------------

def test_criterion_8_deterministic_across_workers():
    with workers(1):
        a = canonical_json(run_criterion(8).details)
    with workers(3):
        b = canonical_json(run_criterion(8).details)
    assert a == b


def test_canonical_json_sorted_and_compact():
    assert canonical_json({"b": 1, "a": [1.5, None]}) == '{"a":[1.5,null],"b":1}'

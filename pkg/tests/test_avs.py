import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avsrd import models
from avsrd.avs import (
    DecompositionError,
    ModelError,
    RuleFamily,
    StateModel,
    SubsourceEnsemble,
    build_set,
    canonical_subsets,
    decompose_into_rules,
    directed_hausdorff,
    dump_model,
    load_model,
    mask_members,
    max_rule_distribution,
    mobius,
    model_from_dict,
    model_to_dict,
    set_distance,
    subset_sums,
    to_mask,
)


def _outcomes(ens):
    J = ens.joint_tensor()
    for idx in itertools.product(range(ens.n), repeat=ens.m):
        yield idx, J[idx]


def _kappa_oracle(ens, V):
    return sum(w for idx, w in _outcomes(ens) if set(idx) <= set(V))


def _beta_oracle(ens, V):
    return sum(w for idx, w in _outcomes(ens) if set(idx) == set(V))


def _max_rule_oracle(ens, order):
    rank = {x: i for i, x in enumerate(order)}
    q = np.zeros(ens.n)
    for idx, w in _outcomes(ens):
        q[max(idx, key=rank.__getitem__)] += w
    return q


def _in_core(ens, p, tol=1e-9):
    for r in range(1, ens.n + 1):
        for V in itertools.combinations(range(ens.n), r):
            if p[list(V)].sum() < _kappa_oracle(ens, V) - tol:
                return False
    return abs(p.sum() - 1) < 1e-9 and p.min() >= -tol


@st.composite
def ensembles(draw, max_n=4, max_m=3):
    n = draw(st.integers(2, max_n))
    m = draw(st.integers(1, max_m))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    if draw(st.booleans()):
        return SubsourceEnsemble.from_independent(rng.dirichlet(np.ones(n), size=m)), rng
    J = rng.dirichlet(np.full(n**m, 0.5))
    return SubsourceEnsemble.from_joint(J, n, m), rng


def test_two_bernoulli_tables():
    ens = models.two_bernoulli()
    assert ens.kappa({0}) == pytest.approx(0.5)
    assert ens.kappa({1}) == pytest.approx(1 / 12)
    assert ens.beta({0, 1}) == pytest.approx(5 / 12)
    np.testing.assert_allclose(max_rule_distribution(ens, [1, 0]), [11 / 12, 1 / 12])
    np.testing.assert_allclose(max_rule_distribution(ens, [0, 1]), [0.5, 0.5])


def test_cheating_set_for_two_bernoulli():
    ens = models.two_bernoulli()
    C = build_set(ens, "cheating")
    assert C.support([0, 1]) == pytest.approx(0.5)
    assert C.support([0, 1], maximize=False) == pytest.approx(1 / 12)
    G = build_set(ens, "strictly_causal")
    assert directed_hausdorff(G, C) <= 1e-9
    assert directed_hausdorff(C, G) == pytest.approx(1 / 3, abs=1e-9)


@settings(max_examples=40)
@given(ensembles())
def test_kappa_beta_against_enumeration(case):
    ens, _ = case
    for r in range(1, ens.n + 1):
        for V in itertools.combinations(range(ens.n), r):
            assert ens.kappa(V) == pytest.approx(_kappa_oracle(ens, V), abs=1e-12)
            if r <= ens.m:
                assert ens.beta(V) == pytest.approx(_beta_oracle(ens, V), abs=1e-12)
    assert ens.beta_table.sum() == pytest.approx(1.0)


@settings(max_examples=40)
@given(ensembles())
def test_max_rule_law_against_enumeration(case):
    ens, rng = case
    order = list(rng.permutation(ens.n))
    np.testing.assert_allclose(max_rule_distribution(ens, order), _max_rule_oracle(ens, order), atol=1e-12)
    np.testing.assert_allclose(
        RuleFamily.max_rule(ens.n, order).induced(ens), _max_rule_oracle(ens, order), atol=1e-12
    )


@settings(max_examples=30)
@given(ensembles())
def test_core_set_samples_and_vertices_satisfy_inequalities(case):
    ens, rng = case
    C = build_set(ens, "cheating")
    for p in np.vstack([C.vertices(), C.sample(rng, 10)]):
        assert _in_core(ens, p)
        assert C.contains(p)
    # marginals always belong to the core
    assert directed_hausdorff(build_set(ens, "strictly_causal"), C) <= 1e-9


@settings(max_examples=30)
@given(ensembles())
def test_support_matches_vertex_enumeration(case):
    ens, rng = case
    C = build_set(ens, "cheating")
    V = C.vertices()
    for _ in range(5):
        a = rng.normal(size=ens.n)
        assert C.support(a) == pytest.approx((V @ a).max(), abs=1e-9)
        assert C.support(a, maximize=False) == pytest.approx((V @ a).min(), abs=1e-9)


@settings(max_examples=30)
@given(ensembles(max_n=3, max_m=2))
def test_decomposition_round_trip(case):
    ens, rng = case
    C = build_set(ens, "cheating")
    target = C.sample(rng, 1)[0]
    fam = decompose_into_rules(target, ens)
    assert np.abs(fam.induced(ens) - target).sum() <= 1e-8


def test_decomposition_rejects_outside_point():
    ens = models.two_bernoulli()
    with pytest.raises(DecompositionError):
        decompose_into_rules([0.1, 0.9], ens)


@settings(max_examples=30)
@given(ensembles())
def test_random_rules_land_in_core(case):
    ens, rng = case
    fam = RuleFamily.random(ens.n, rng)
    assert build_set(ens, "cheating").distance(fam.induced(ens)) <= 1e-9


def test_rule_family_validation():
    T = np.zeros((4, 2))
    T[1, 0] = T[2, 1] = 1.0
    T[3] = [0.5, 0.5]
    RuleFamily(2, T)
    bad = T.copy()
    bad[1] = [0.5, 0.5]  # mass outside {0}
    with pytest.raises(ModelError):
        RuleFamily(2, bad)
    with pytest.raises(ModelError):
        RuleFamily(2, np.zeros((3, 2)))


def test_rule_cumulative_rows_end_at_two(rng):
    fam = RuleFamily.random(3, rng)
    C = fam.cumulative()
    for mask in range(1, 8):
        top = mask.bit_length() - 1
        assert C[mask, top] == 2.0


def test_state_sets_of_worked_models():
    X = models.xor_state()
    np.testing.assert_allclose(X.alpha, [7 / 12, 5 / 12])
    S = build_set(X, "states")
    assert S.support([0, 1]) == pytest.approx(1 / 3)
    assert S.support([0, 1], maximize=False) == pytest.approx(1 / 4)
    assert build_set(models.observe_second(), "states").support([0, 1]) == pytest.approx(0.5)
    for delta in [0.0, 0.1, 0.2, 0.3, 0.4, 0.45]:
        top = build_set(models.noisy_second(delta), "states").support([0, 1])
        assert top == pytest.approx(models.noisy_second_closed_form(delta), abs=1e-9)


@settings(max_examples=20)
@given(ensembles(max_n=3, max_m=2))
def test_state_observation_nesting(case):
    ens, rng = case
    C = build_set(ens, "cheating")
    G = build_set(ens, "strictly_causal")
    full = build_set(StateModel.perfect_observation(ens), "states")
    blind = build_set(StateModel.blind(ens), "states")
    assert set_distance(full, C) <= 1e-9
    assert set_distance(blind, G) <= 1e-9
    T = int(rng.integers(1, 4))
    chan = rng.dirichlet(np.ones(T), size=ens.n**ens.m)
    mid = StateModel.from_observation(ens, lambda idx: chan[np.ravel_multi_index(idx, (ens.n,) * ens.m)])
    S = build_set(mid, "states")
    assert directed_hausdorff(S, C) <= 1e-9
    assert directed_hausdorff(G, S) <= 1e-9
    np.testing.assert_allclose(mid.marginals, ens.marginals, atol=1e-12)


def test_compound_set_is_finite():
    ens = models.two_bernoulli()
    S = build_set(ens, "compound")
    assert S.kind == "finite"
    assert S.distance([0.5, 0.5]) == pytest.approx(1 / 3)


def test_build_set_errors():
    with pytest.raises(ModelError):
        build_set(models.two_bernoulli(), "telepathic")
    with pytest.raises(ModelError):
        build_set(models.two_bernoulli(), "states")


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_mobius_inverts_subset_sums(n, seed):
    v = np.random.default_rng(seed).random(1 << n)
    np.testing.assert_allclose(mobius(subset_sums(v, n), n), v, atol=1e-10)


def test_canonical_subset_order():
    subs = [mask_members(mk, 3) for mk in canonical_subsets(3, 2)]
    assert subs == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]
    assert to_mask({0, 2}) == 5


def test_beta_warns_outside_candidate_sets():
    ens = models.two_bernoulli()
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert ens.beta(()) == 0.0
    assert w


def test_json_round_trip(tmp_path):
    for model in [models.two_bernoulli(), models.xor_state(),
                  SubsourceEnsemble.from_joint(np.arange(1, 9) / 36, 2, 3)]:
        path = tmp_path / "m.json"
        dump_model(model, path)
        back = load_model(path)
        assert json.dumps(model_to_dict(back)) == json.dumps(model_to_dict(model))
        np.testing.assert_allclose(back.marginals, model.marginals)


@pytest.mark.parametrize(
    "desc",
    [
        {"alphabet_size": 2, "m": 2, "law": {"independent": [[0.5, 0.5]]}},
        {"alphabet_size": 2, "m": 1, "law": {"independent": [[0.5, 0.6]]}},
        {"alphabet_size": 2, "m": 2, "law": {"joint": [0.5, 0.5]}},
        {"alphabet_size": 2, "m": 1, "law": {"telepathy": 1}},
        {"alphabet_size": 2, "law": {}},
        {"alphabet_size": 2, "m": 1, "law": {"state": {"alpha": [1.0], "cond": [[[0.5, 0.5]], [[1, 0]]]}}},
        [1, 2],
    ],
)
def test_json_rejects_malformed(desc):
    with pytest.raises(ModelError):
        model_from_dict(desc)


def test_state_model_validation():
    with pytest.raises(ModelError):
        StateModel([0.5, 0.5], np.full((1, 3, 2), 0.5))
    with pytest.raises(ModelError):
        StateModel([1.0, 0.0], np.full((1, 2, 2), 0.5))

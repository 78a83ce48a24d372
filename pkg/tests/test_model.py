import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_inference.model import (
    HIERARCHICAL,
    P_MAX,
    P_MIN,
    PROTOTYPICAL,
    ChainParameters,
    JointDistribution,
    ZeroConditioningMass,
    marginal,
    posterior_table,
    sample_true_model,
    to_joint,
)

from conftest import PAIR

TOPOLOGIES = [PROTOTYPICAL, HIERARCHICAL]


def brute_force_mass(values, assignment):
    """Chain-rule product for one assignment, written out term by term."""
    offsets = [0, 1, 3, 7, 15]
    p = 1.0
    for k, bit in enumerate(assignment):
        ctx = 0
        for b in assignment[:k]:
            ctx = ctx * 2 + b
        q = values[offsets[k] + ctx]
        p *= q if bit else 1.0 - q
    return p


def test_sample_true_model_is_deterministic():
    a = sample_true_model(np.random.default_rng(7))
    b = sample_true_model(np.random.default_rng(7))
    assert a == b


def test_prototypical_chain_has_31_entries():
    params = sample_true_model(np.random.default_rng(0))
    assert len(params) == 31
    assert [len(params.table(k)) for k in range(5)] == [1, 2, 4, 8, 16]


def test_sampled_entries_average_one_half():
    rng = np.random.default_rng(1)
    draws = np.array([sample_true_model(rng).values for _ in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0) - 0.5) < 0.02)
    assert draws.min() >= P_MIN and draws.max() <= P_MAX


def test_uniform_chain_gives_uniform_joint():
    joint = to_joint(ChainParameters(np.full(31, 0.5)))
    np.testing.assert_array_equal(joint.mass, np.full(32, 1 / 32))


def test_near_certain_prior_leaves_complement_mass():
    vals = np.full(31, 0.3)
    vals[0] = 0.99999
    joint = to_joint(ChainParameters(vals))
    assert abs(joint.probability({"H": False}) - 0.00001) < 1e-12


@pytest.mark.parametrize("topology", TOPOLOGIES)
def test_joint_matches_term_by_term_chain_rule(topology, rng):
    params = sample_true_model(rng, topology)
    joint = to_joint(params, topology)
    for i, bits in enumerate(itertools.product([0, 1], repeat=5)):
        assert joint.mass[i] == pytest.approx(brute_force_mass(params.values, bits), rel=1e-14)
    assert abs(joint.mass.sum() - 1.0) < 1e-12


def test_marginal_examples():
    uniform = to_joint(ChainParameters(np.full(31, 0.5)))
    assert uniform.marginal({"H": True}) == pytest.approx(0.5, abs=1e-15)
    assert marginal(uniform, {"B": True, "C": False}, {"B": True, "C": False}) == pytest.approx(1.0)

    # P(H,A): TT .4, TF .1, FT .2, FF .3; state index packs H as the high bit
    hand = JointDistribution(np.array([0.3, 0.2, 0.1, 0.4]), PAIR)
    assert hand.marginal({"H": True}, {"A": True}) == pytest.approx(0.4 / 0.6, abs=1e-15)


def test_zero_conditioning_mass_raises():
    hand = JointDistribution(np.array([0.5, 0.0, 0.5, 0.0]), PAIR)
    with pytest.raises(ZeroConditioningMass):
        hand.marginal({"H": True}, {"A": True})


def test_posterior_table_uniform_and_limit():
    uniform = to_joint(ChainParameters(np.full(31, 0.5)))
    np.testing.assert_allclose(posterior_table(uniform), 0.5, atol=1e-15)

    sure = to_joint(ChainParameters(np.full(31, 0.99999)))
    post = sure.posterior_table()
    assert post[-1] > 0.999


def test_posterior_table_flags_zero_mass_states():
    hand = JointDistribution(np.array([0.5, 0.0, 0.5, 0.0]), PAIR)
    post = hand.posterior_table()
    assert np.isnan(post[1])
    assert post[0] == pytest.approx(0.5)


@pytest.mark.parametrize("topology", TOPOLOGIES)
def test_posterior_table_matches_marginal_state_by_state(topology, rng):
    joint = to_joint(sample_true_model(rng, topology), topology)
    post = joint.posterior_table()
    assert post.shape == (topology.n_evidential_states,)
    for e, state in enumerate(topology.evidential_states()):
        assert post[e] == pytest.approx(joint.marginal({"H": True}, state), abs=1e-12)


@pytest.mark.parametrize("topology", TOPOLOGIES)
def test_evidence_marginals_sum_to_one(topology, rng):
    joint = to_joint(sample_true_model(rng, topology), topology)
    t, f = joint.split_by_hypothesis()
    assert abs((t + f).sum() - 1.0) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(TOPOLOGIES))
def test_chain_round_trip(seed, topology):
    params = sample_true_model(np.random.default_rng(seed), topology)
    joint = to_joint(params, topology)
    assert abs(joint.mass.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(joint.to_chain().values, params.values, atol=1e-9, rtol=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marginal_reproduces_each_chain_entry(seed):
    params = sample_true_model(np.random.default_rng(seed))
    joint = to_joint(params)
    for k in range(5):
        for ctx, p in enumerate(params.table(k)):
            given_ = {j: bool((ctx >> (k - 1 - j)) & 1) for j in range(k)}
            assert joint.marginal({k: True}, given_) == pytest.approx(p, abs=1e-9)


def test_hierarchical_has_eight_evidential_states():
    assert HIERARCHICAL.evidence == (2, 3, 4)
    assert HIERARCHICAL.n_evidential_states == 8
    assert PROTOTYPICAL.n_evidential_states == 16


def test_csv_dump_lists_every_state():
    joint = to_joint(ChainParameters(np.full(31, 0.5)))
    lines = joint.to_csv().splitlines()
    assert lines[0] == "H,A,B,C,D,mass"
    assert len(lines) == 33
    assert lines[-1].startswith("T,T,T,T,T,")


def test_invalid_chain_rejected():
    with pytest.raises(ValueError):
        ChainParameters(np.full(30, 0.5))
    with pytest.raises(ValueError):
        ChainParameters(np.full(31, 1.5))

"""Observational inference: enumeration oracle and variable elimination."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idiombn import CPT, Role, Variable, build_network
from idiombn.errors import ImpossibleEvidenceError, TooLargeError
from idiombn.inference import batch_query, enumerate_posterior, posterior

from netgen import prior_node, random_evidence, random_network, table_cpt

# Closed-form Bayes for the bleeding/X-ray measurement model with a 1%
# false-positive and 5% false-negative test and prior 0.1:
#   P(yes | pos) = (0.1 * 0.95) / (0.1 * 0.95 + 0.9 * 0.01) = 0.095 / 0.104
XRAY_POSTERIOR_YES = 0.095 / 0.104


def xray_net():
    b_var, b_cpt = prior_node("Bleeding", 0.1)
    x_var = Variable("Xray", ("pos", "neg"))
    x_cpt = table_cpt("Xray", ("Bleeding",), {("yes",): 0.95, ("no",): 0.01})
    return build_network([b_var, x_var], [("Bleeding", "Xray")], [b_cpt, x_cpt])


def explaining_away_net():
    a_var, a_cpt = prior_node("A", 0.1)
    b_var, b_cpt = prior_node("B", 0.1)
    e_var = Variable("E", ("yes", "no"))
    e_cpt = table_cpt(
        "E",
        ("A", "B"),
        {
            ("yes", "yes"): 0.99,
            ("yes", "no"): 0.9,
            ("no", "yes"): 0.9,
            ("no", "no"): 0.01,
        },
    )
    return build_network(
        [a_var, b_var, e_var], [("A", "E"), ("B", "E")], [a_cpt, b_cpt, e_cpt]
    )


class TestEnumerationOracle:
    def test_xray_posterior_matches_closed_form(self):
        dist = enumerate_posterior(xray_net(), "Bleeding", {"Xray": "pos"})
        assert dist.prob("yes") == pytest.approx(XRAY_POSTERIOR_YES, abs=1e-12)
        assert dist.prob("yes") == pytest.approx(0.913462, abs=1e-6)

    def test_empty_evidence_gives_marginal_prior(self):
        dist = enumerate_posterior(xray_net(), "Bleeding", {})
        assert dist.prob("yes") == pytest.approx(0.1, abs=1e-12)

    def test_evidence_on_target_gives_point_mass(self):
        dist = enumerate_posterior(xray_net(), "Bleeding", {"Bleeding": "no"})
        assert dist.probs == (0.0, 1.0)

    def test_too_large_guard(self):
        variables = [Variable(f"V{i}", ("t", "f")) for i in range(21)]
        cpts = [CPT(v.name, (), {(): (0.5, 0.5)}) for v in variables]
        net = build_network(variables, [], cpts)
        with pytest.raises(TooLargeError):
            enumerate_posterior(net, "V0", {})

    def test_impossible_evidence(self):
        s_var, s_cpt = prior_node("S", 1.0)
        l_var = Variable("L", ("yes", "no"))
        l_cpt = table_cpt("L", ("S",), {("yes",): 1.0, ("no",): 0.0})
        net = build_network([s_var, l_var], [("S", "L")], [s_cpt, l_cpt])
        with pytest.raises(ImpossibleEvidenceError):
            enumerate_posterior(net, "S", {"L": "no"})


class TestVariableElimination:
    def test_agrees_with_oracle_on_xray(self):
        dist = posterior(xray_net(), "Bleeding", {"Xray": "pos"})
        oracle = enumerate_posterior(xray_net(), "Bleeding", {"Xray": "pos"})
        assert dist.max_delta(oracle) <= 1e-9

    def test_explaining_away_values(self):
        net = explaining_away_net()
        one_observed = posterior(net, "A", {"E": "yes"})
        both_observed = posterior(net, "A", {"E": "yes", "B": "yes"})
        # frozen from the enumeration oracle: 0.0909/0.18 and 0.0099/0.0909
        assert one_observed.prob("yes") == pytest.approx(0.505, abs=1e-6)
        assert both_observed.prob("yes") == pytest.approx(0.0099 / 0.0909, abs=1e-6)
        assert both_observed.prob("yes") < one_observed.prob("yes")
        for dist, ev in (
            (one_observed, {"E": "yes"}),
            (both_observed, {"E": "yes", "B": "yes"}),
        ):
            assert dist.max_delta(enumerate_posterior(net, "A", ev)) <= 1e-9

    def test_forward_chain_reads_cpt_row(self):
        s_var, s_cpt = prior_node("S", 0.5)
        l_var = Variable("L", ("yes", "no"))
        l_cpt = table_cpt("L", ("S",), {("yes",): 0.1, ("no",): 0.01})
        net = build_network([s_var, l_var], [("S", "L")], [s_cpt, l_cpt])
        dist = posterior(net, "L", {"S": "yes"})
        assert dist.probs == pytest.approx((0.1, 0.9), abs=1e-12)

    def test_evidence_on_target_point_mass(self):
        dist = posterior(xray_net(), "Xray", {"Xray": "neg"})
        assert dist.probs == (0.0, 1.0)

    def test_impossible_evidence(self):
        s_var, s_cpt = prior_node("S", 1.0)
        l_var = Variable("L", ("yes", "no"))
        l_cpt = table_cpt("L", ("S",), {("yes",): 1.0, ("no",): 0.0})
        net = build_network([s_var, l_var], [("S", "L")], [s_cpt, l_cpt])
        with pytest.raises(ImpossibleEvidenceError):
            posterior(net, "S", {"L": "no"})
        with pytest.raises(ImpossibleEvidenceError):
            posterior(net, "L", {"L": "no"})

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000))
    def test_oracle_equivalence_random_nets(self, seed):
        rng = random.Random(seed)
        net = random_network(rng, max_nodes=9)
        evidence = random_evidence(rng, net)
        target = rng.choice([n for n in net.names if n not in evidence])
        fast = posterior(net, target, evidence)
        slow = enumerate_posterior(net, target, evidence)
        assert fast.max_delta(slow) <= 1e-9


class TestBatchQuery:
    def test_matches_per_target_calls(self):
        net = xray_net()
        evidence = {"Xray": "pos"}
        out = batch_query(net, ["Bleeding", "Xray"], evidence)
        assert out["Bleeding"].probs == posterior(net, "Bleeding", evidence).probs
        assert out["Xray"].probs == (1.0, 0.0)

    def test_empty_target_set(self):
        assert batch_query(xray_net(), [], {}) == {}


class TestQualitativeDirections:
    def test_reliability_attenuation(self):
        # condition -> actual -> reported <- reliability; the unreliable row
        # of the report CPT is closer to uniform, so an unreliable report
        # moves the condition posterior less.
        c_var, c_cpt = prior_node("Cond", 0.2)
        a_var = Variable("Actual", ("present", "absent"))
        a_cpt = table_cpt(
            "Actual", ("Cond",), {("yes",): 0.7, ("no",): 0.2},
        )
        r_var = Variable("Rel", ("reliable", "unreliable"))
        r_cpt = CPT("Rel", (), {(): (0.8, 0.2)})
        rep_var = Variable("Reported", ("present", "absent"))
        rep_cpt = table_cpt(
            "Reported",
            ("Actual", "Rel"),
            {
                ("present", "reliable"): 0.95,
                ("present", "unreliable"): 0.6,
                ("absent", "reliable"): 0.05,
                ("absent", "unreliable"): 0.4,
            },
        )
        net = build_network(
            [c_var, a_var, r_var, rep_var],
            [("Cond", "Actual"), ("Actual", "Reported"), ("Rel", "Reported")],
            [c_cpt, a_cpt, r_cpt, rep_cpt],
        )
        prior = posterior(net, "Cond", {}).prob("yes")
        with_reliable = posterior(
            net, "Cond", {"Reported": "present", "Rel": "reliable"}
        ).prob("yes")
        with_unreliable = posterior(
            net, "Cond", {"Reported": "present", "Rel": "unreliable"}
        ).prob("yes")
        assert abs(with_reliable - prior) >= abs(with_unreliable - prior)

    def test_observing_manifestation_raises_condition(self):
        # any manifestation model where P(M|C=present) > P(M|C=absent)
        c_var, c_cpt = prior_node("C", 0.2, role=Role.CONDITION)
        m_var = Variable("M", ("present", "absent"), Role.SYMPTOM)
        m_cpt = table_cpt(
            "M", ("C",), {("yes",): 0.7, ("no",): 0.1}
        )
        net = build_network([c_var, m_var], [("C", "M")], [c_cpt, m_cpt])
        assert posterior(net, "C", {"M": "present"}).prob("yes") > 0.2


class TestJointMarginal:
    def test_matches_enumeration(self):
        from collections import defaultdict
        from idiombn import joint_probability
        from idiombn.inference import joint_marginal
        from netgen import all_assignments

        rng = random.Random(555)
        for _ in range(10):
            net = random_network(rng, max_nodes=6, min_nodes=3)
            names = tuple(rng.sample(list(net.names), 2))
            table = joint_marginal(net, names)
            oracle = defaultdict(float)
            for assignment in all_assignments(net):
                key = tuple(assignment[n] for n in names)
                oracle[key] += joint_probability(net, assignment)
            for key, value in table.items():
                assert value == pytest.approx(oracle[key], abs=1e-9)
            assert sum(table.values()) == pytest.approx(1.0, abs=1e-9)

    def test_with_evidence(self):
        from idiombn.inference import joint_marginal

        net = xray_net()
        table = joint_marginal(net, ("Bleeding",), {"Xray": "pos"})
        assert table[("yes",)] == pytest.approx(0.095 / 0.104, abs=1e-9)
        # evidence-inconsistent rows are zeroed
        both = joint_marginal(net, ("Bleeding", "Xray"), {"Xray": "pos"})
        assert both[("yes", "neg")] == 0.0

"""Lint rules against the role-direction conventions."""

import itertools

import pytest

from idiombn import CPT, Role, Variable, build_network
from idiombn.idioms import IdiomInstance, TemplateId, catalog, instantiate
from idiombn.lint import LintConfig, coverage, lint

from netgen import table_cpt


def head_injury_net(corrected: bool):
    """Outcome (condition), BrainScan (medical test), DelayArrival (risk factor).

    The uncorrected variant points the scan at the outcome and the outcome
    at the delay; the corrected variant reverses both.
    """
    outcome = Variable("Outcome", ("severe", "mild"), Role.CONDITION)
    scan = Variable("BrainScan", ("abnormal", "normal"), Role.MEDICAL_TEST)
    delay = Variable("DelayArrival", ("yes", "no"), Role.RISK_FACTOR)
    if corrected:
        edges = [("DelayArrival", "Outcome"), ("Outcome", "BrainScan")]
        cpts = [
            CPT("DelayArrival", (), {(): (0.3, 0.7)}),
            table_cpt("Outcome", ("DelayArrival",), {("yes",): 0.5, ("no",): 0.2}),
            table_cpt("BrainScan", ("Outcome",), {("severe",): 0.9, ("mild",): 0.1}),
        ]
    else:
        edges = [("BrainScan", "Outcome"), ("Outcome", "DelayArrival")]
        cpts = [
            CPT("BrainScan", (), {(): (0.3, 0.7)}),
            table_cpt("Outcome", ("BrainScan",), {("abnormal",): 0.7, ("normal",): 0.1}),
            table_cpt("DelayArrival", ("Outcome",), {("severe",): 0.5, ("mild",): 0.3}),
        ]
    return build_network([outcome, scan, delay], edges, cpts)


class TestRuleFiring:
    def test_head_injury_anti_pattern_yields_r1_and_r2(self):
        report = lint(head_injury_net(corrected=False))
        assert [f.rule for f in report.findings] == ["R1", "R2"]
        assert report.findings[0].edges == (("BrainScan", "Outcome"),)
        assert report.findings[1].edges == (("Outcome", "DelayArrival"),)
        assert report.summary() == {"errors": 2, "warnings": 0}

    def test_corrected_structure_is_clean(self):
        report = lint(head_injury_net(corrected=True))
        assert report.findings == ()

    def test_empty_network(self):
        net = build_network([], [], [])
        assert lint(net).findings == ()

    def test_r3_direct_arc_with_mediated_route(self):
        rf = Variable("Obesity", ("yes", "no"), Role.RISK_FACTOR)
        pm = Variable("Plaque", ("yes", "no"), Role.PATHOGENIC_MECHANISM)
        c = Variable("CAD", ("yes", "no"), Role.CONDITION)
        net = build_network(
            [rf, pm, c],
            [("Obesity", "Plaque"), ("Plaque", "CAD"), ("Obesity", "CAD")],
            [
                CPT("Obesity", (), {(): (0.4, 0.6)}),
                table_cpt("Plaque", ("Obesity",), {("yes",): 0.6, ("no",): 0.2}),
                table_cpt(
                    "CAD",
                    ("Plaque", "Obesity"),
                    {
                        ("yes", "yes"): 0.5,
                        ("yes", "no"): 0.4,
                        ("no", "yes"): 0.15,
                        ("no", "no"): 0.05,
                    },
                ),
            ],
        )
        report = lint(net)
        assert [f.rule for f in report.findings] == ["R3"]
        assert report.findings[0].severity == "warning"
        assert "Plaque" in report.findings[0].nodes

    def test_r4_mechanism_with_manifestation_child(self):
        pm = Variable("Perfusion", ("low", "normal"), Role.PATHOGENIC_MECHANISM)
        test = Variable("Lactate", ("high", "normal"), Role.MEDICAL_TEST)
        net = build_network(
            [pm, test],
            [("Perfusion", "Lactate")],
            [
                CPT("Perfusion", (), {(): (0.2, 0.8)}),
                table_cpt("Lactate", ("Perfusion",), {("low",): 0.8, ("normal",): 0.1}),
            ],
        )
        report = lint(net)
        assert [f.rule for f in report.findings] == ["R4"]
        off = lint(net, config=LintConfig(disabled=frozenset({"R4"})))
        assert off.findings == ()

    def test_r5_orphan_complication(self):
        cm = Variable("HeartAttack", ("yes", "no"), Role.COMPLICATION)
        rf = Variable("Age", ("old", "young"), Role.RISK_FACTOR)
        net = build_network(
            [rf, cm],
            [("Age", "HeartAttack")],
            [
                CPT("Age", (), {(): (0.5, 0.5)}),
                table_cpt("HeartAttack", ("Age",), {("old",): 0.2, ("young",): 0.05}),
            ],
        )
        report = lint(net)
        assert [f.rule for f in report.findings] == ["R5"]
        assert report.findings[0].nodes == ("HeartAttack",)

    def test_r6_reliability_must_not_cause_condition(self):
        rel = Variable("Reporting", ("good", "poor"), Role.RELIABILITY)
        cond = Variable("CAD", ("yes", "no"), Role.CONDITION)
        net = build_network(
            [rel, cond],
            [("Reporting", "CAD")],
            [
                CPT("Reporting", (), {(): (0.8, 0.2)}),
                table_cpt("CAD", ("Reporting",), {("good",): 0.2, ("poor",): 0.2}),
            ],
        )
        report = lint(net)
        assert [f.rule for f in report.findings] == ["R6"]

    def test_r7_null_effect_violation_detected(self):
        c = Variable("CAD", ("yes", "no"), Role.CONDITION)
        t = Variable("Med", ("given", "not_given"), Role.TREATMENT)
        r = Variable("Adherence", ("reliable", "unreliable"), Role.RELIABILITY)
        cm = Variable("HeartAttack", ("yes", "no"), Role.COMPLICATION)
        rows_bad = {
            ("given", "yes", "reliable"): 0.2,
            ("given", "yes", "unreliable"): 0.45,
            ("given", "no", "reliable"): 0.05,
            ("given", "no", "unreliable"): 0.12,
            ("not_given", "yes", "reliable"): 0.6,
            ("not_given", "yes", "unreliable"): 0.7,  # differs: violation
            ("not_given", "no", "reliable"): 0.2,
            ("not_given", "no", "unreliable"): 0.2,
        }
        net = build_network(
            [c, t, r, cm],
            [("CAD", "Med"), ("Med", "HeartAttack"), ("CAD", "HeartAttack"),
             ("Adherence", "HeartAttack")],
            [
                CPT("CAD", (), {(): (0.3, 0.7)}),
                table_cpt("Med", ("CAD",), {("yes",): 0.8, ("no",): 0.2}),
                CPT("Adherence", (), {(): (0.7, 0.3)}),
                table_cpt("HeartAttack", ("Med", "CAD", "Adherence"), rows_bad),
            ],
            decision_edges=[("CAD", "Med")],
        )
        instance = IdiomInstance(
            template=TemplateId.TREATMENT_RELIABILITY,
            bindings={
                "condition": ("CAD",),
                "treatment": ("Med",),
                "outcome": ("HeartAttack",),
                "reliability": ("Adherence",),
            },
            label="tr1",
        )
        report = lint(net, idiom_instances=[instance])
        assert "R7" in [f.rule for f in report.findings]
        # without instances the rule cannot run
        assert "R7" not in [f.rule for f in lint(net).findings]
        # a conformant CPT stays silent
        rows_good = dict(rows_bad)
        rows_good[("not_given", "yes", "unreliable")] = 0.6
        net_good = build_network(
            net.variables,
            net.edges,
            [net.cpts["CAD"], net.cpts["Med"], net.cpts["Adherence"],
             table_cpt("HeartAttack", ("Med", "CAD", "Adherence"), rows_good)],
            net.decision_edges,
        )
        assert "R7" not in [f.rule for f in lint(net_good, idiom_instances=[instance]).findings]

    def test_r8_orphan_treatment(self):
        t = Variable("Med", ("given", "not_given"), Role.TREATMENT)
        cm = Variable("Rash", ("yes", "no"), Role.COMPLICATION)
        net = build_network(
            [t, cm],
            [("Med", "Rash")],
            [
                CPT("Med", (), {(): (0.5, 0.5)}),
                table_cpt("Rash", ("Med",), {("given",): 0.2, ("not_given",): 0.01}),
            ],
        )
        assert "R8" in [f.rule for f in lint(net).findings]

    def test_unclassified_nodes_exempt(self):
        a = Variable("A", ("yes", "no"), Role.MEDICAL_TEST)
        b = Variable("B", ("yes", "no"), Role.UNCLASSIFIED)
        net = build_network(
            [a, b],
            [("A", "B")],
            [
                CPT("A", (), {(): (0.5, 0.5)}),
                table_cpt("B", ("A",), {("yes",): 0.5, ("no",): 0.5}),
            ],
        )
        assert lint(net).findings == ()


class TestConfig:
    def test_errors_cannot_be_disabled(self):
        with pytest.raises(ValueError):
            LintConfig(disabled=frozenset({"R1"}))

    def test_deterministic_ordering(self):
        net = head_injury_net(corrected=False)
        first = lint(net)
        for _ in range(3):
            assert lint(net) == first


class TestTemplateSoundness:
    def test_error_rules_never_fire_on_role_conforming_instantiations(self):
        # every template, every combination of allowed slot roles
        for tpl in catalog():
            role_choices = [sorted(s.roles, key=lambda r: r.value) for s in tpl.slots]
            for combo in itertools.product(*role_choices):
                bindings = {}
                declared = {}
                for slot, role in zip(tpl.slots, combo):
                    count = max(slot.min_count, 2) if slot.many else 1
                    names = [f"{slot.name}_{i}" for i in range(count)]
                    bindings[slot.name] = names if slot.many else names[0]
                    for n in names:
                        declared[n] = role
                fragment = instantiate(tpl, bindings, declared_roles=declared)
                net = _fragment_to_net(fragment, declared)
                fired = {f.rule for f in lint(net).findings}
                assert not (fired & {"R1", "R2", "R5", "R6"}), (
                    f"{tpl.id.value} with roles {combo} fired {fired}"
                )


def _fragment_to_net(fragment, declared):
    variables = [
        Variable(name, ("a", "b"), declared[name]) for name in fragment.variables
    ]
    parents = {name: [] for name in fragment.variables}
    for p, c, _ in fragment.edges:
        parents[c].append(p)
    cpts = []
    for name in fragment.variables:
        ps = tuple(parents[name])
        rows = {
            combo: (0.5, 0.5)
            for combo in itertools.product(*([("a", "b")] * len(ps)))
        }
        cpts.append(CPT(name, ps, rows))
    decision = [(p, c) for p, c, d in fragment.edges if d]
    # decision arcs require a treatment child; drop the flag otherwise so
    # the soundness sweep can cover mismatched role combinations too
    decision = [
        (p, c) for p, c in decision if declared[c] is Role.TREATMENT
    ]
    return build_network(
        variables, [(p, c) for p, c, _ in fragment.edges], cpts, decision
    )


class TestCoverage:
    def _simple_net(self):
        c = Variable("CAD", ("yes", "no"), Role.CONDITION)
        m = Variable("ChestPain", ("yes", "no"), Role.SYMPTOM)
        e = Variable("ECG", ("abnormal", "normal"), Role.MEDICAL_TEST)
        net = build_network(
            [c, m, e],
            [("CAD", "ChestPain"), ("CAD", "ECG")],
            [
                CPT("CAD", (), {(): (0.2, 0.8)}),
                table_cpt("ChestPain", ("CAD",), {("yes",): 0.7, ("no",): 0.2}),
                table_cpt("ECG", ("CAD",), {("yes",): 0.8, ("no",): 0.1}),
            ],
        )
        instance = IdiomInstance(
            template=TemplateId.MANIFESTATION,
            bindings={"condition": ("CAD",), "manifestations": ("ChestPain", "ECG")},
            label="m1",
        )
        return net, instance

    def test_idiom_built_net_is_fully_covered(self):
        net, instance = self._simple_net()
        report = coverage(net, [instance])
        assert report.uncovered == ()
        assert report.fraction() == 1.0

    def test_extra_raw_edge_listed(self):
        c = Variable("CAD", ("yes", "no"), Role.CONDITION)
        m = Variable("ChestPain", ("yes", "no"), Role.SYMPTOM)
        rf = Variable("Age", ("old", "young"), Role.RISK_FACTOR)
        net = build_network(
            [c, m, rf],
            [("CAD", "ChestPain"), ("Age", "CAD")],
            [
                table_cpt("CAD", ("Age",), {("old",): 0.3, ("young",): 0.05}),
                table_cpt("ChestPain", ("CAD",), {("yes",): 0.7, ("no",): 0.2}),
                CPT("Age", (), {(): (0.4, 0.6)}),
            ],
        )
        instance = IdiomInstance(
            template=TemplateId.MANIFESTATION,
            bindings={"condition": ("CAD",), "manifestations": ("ChestPain",)},
            label="m1",
        )
        report = coverage(net, [instance])
        assert report.uncovered == (("Age", "CAD"),)

    def test_overlapping_instances_both_credited(self):
        net, manifestation = self._simple_net()
        shared = IdiomInstance(
            template=TemplateId.CAUSE_CONSEQUENCE,
            bindings={"cause": ("CAD",), "consequences": ("ChestPain",)},
            label="cc1",
        )
        report = coverage(net, [manifestation, shared])
        assert report.credited(("CAD", "ChestPain")) == ("m1", "cc1")
        assert len([e for e, _ in report.covered]) == 2

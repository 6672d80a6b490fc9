"""The shipped fixture corpus: loads, behaves, and stays canonical."""

import pytest

from idiombn.errors import UnknownFixtureError
from idiombn.fixtures import (
    check_expectation,
    fixture_ids,
    fixture_source,
    load_fixture,
)
from idiombn.inference import posterior
from idiombn.lint import coverage, lint
from idiombn.modelfile import parse, serialize
from idiombn.network import d_separated

EXPECTED_IDS = {
    "xray_measurement",
    "smoking_chain",
    "manifestation_cad",
    "reliability_symptom",
    "common_reliability",
    "pathogenesis_plaque",
    "comorbidity_cause",
    "comorbidity_symptom",
    "complication_mi",
    "treatment_triangle",
    "treatment_reliability",
    "counterfactual_medication",
    "cad_composite",
    "head_injury_bad",
    "head_injury_good",
    "coagulopathy_sketch",
}


def test_registry_complete():
    assert set(fixture_ids()) == EXPECTED_IDS


def test_unknown_fixture():
    with pytest.raises(UnknownFixtureError):
        load_fixture("nonexistent")


@pytest.mark.parametrize("fixture_id", sorted(EXPECTED_IDS))
def test_fixture_loads_and_meets_expectations(fixture_id):
    fixture = load_fixture(fixture_id)
    report = lint(fixture.net, idiom_instances=fixture.instances)
    assert [f.rule for f in report.errors] == list(fixture.spec.lint_errors)
    assert [f.rule for f in report.warnings] == list(fixture.spec.lint_warnings)
    for expected in fixture.spec.expectations:
        got = check_expectation(fixture, expected)
        assert got == pytest.approx(expected.value, abs=expected.tolerance), (
            f"{fixture_id}: {expected}"
        )


@pytest.mark.parametrize("fixture_id", sorted(EXPECTED_IDS))
def test_fixture_files_are_canonical(fixture_id):
    source = fixture_source(fixture_id)
    assert serialize(parse(source).document) == source


def test_treatment_triangle_has_decision_arc():
    fixture = load_fixture("treatment_triangle")
    assert fixture.net.decision_edges == {("CAD", "Medication")}
    assert len(fixture.net.variables) == 3


def test_cad_composite_fully_covered_and_clean():
    fixture = load_fixture("cad_composite")
    assert len(fixture.instances) >= 5
    assert lint(fixture.net, idiom_instances=fixture.instances).findings == ()
    report = coverage(fixture.net, fixture.instances)
    assert report.uncovered == ()
    assert report.fraction() == 1.0


def test_common_reliability_shares_one_reliability_node():
    fixture = load_fixture("common_reliability")
    assert set(fixture.net.children("Reporting")) == {"PainReported", "BreathReported"}


def test_comorbidity_cause_decouples_given_cause():
    fixture = load_fixture("comorbidity_cause")
    net = fixture.net
    assert d_separated(net, {"CAD"}, {"LungCancer"}, {"Smoking"}) is True
    assert d_separated(net, {"CAD"}, {"LungCancer"}, set()) is False


def test_smoking_chain_directions():
    net = load_fixture("smoking_chain").net
    prior = posterior(net, "LungCancer", {}).prob("yes")
    assert posterior(net, "LungCancer", {"Smoking": "yes"}).prob("yes") > prior
    assert posterior(net, "LungCancer", {"Xray": "pos"}).prob("yes") > prior


def test_manifestation_fixture_supports_condition():
    net = load_fixture("manifestation_cad").net
    prior = posterior(net, "CAD", {}).prob("yes")
    for manifestation, state in (
        ("ChestPain", "yes"), ("ShortBreath", "yes"), ("ECG", "abnormal"),
    ):
        assert posterior(net, "CAD", {manifestation: state}).prob("yes") > prior


def test_reliability_fixture_attenuates():
    net = load_fixture("reliability_symptom").net
    prior = posterior(net, "CAD", {}).prob("yes")
    reliable = posterior(
        net, "CAD", {"PainReported": "present", "Reporting": "reliable"}
    ).prob("yes")
    unreliable = posterior(
        net, "CAD", {"PainReported": "present", "Reporting": "unreliable"}
    ).prob("yes")
    assert abs(reliable - prior) >= abs(unreliable - prior)


def test_coagulopathy_sketch_flags_marker_arcs_only():
    fixture = load_fixture("coagulopathy_sketch")
    report = lint(fixture.net, idiom_instances=fixture.instances)
    flagged = {edge for f in report.findings for edge in f.edges}
    assert flagged == {
        ("TissuePerfusion", "Lactate"),
        ("TissuePerfusion", "BaseExcess"),
    }

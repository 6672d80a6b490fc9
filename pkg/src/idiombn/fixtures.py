"""Registry of shipped ``.idbn`` models with their expected behaviour.

Each fixture reconstructs one worked scenario at desk scale and records
what must hold for it: exact lint findings and, where a number is pinned,
query expectations with tolerances. The corpus doubles as documentation
and as format-regression armor (every file is canonical under
serialization).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from .causal import QueryMode, counterfactual_query, interventional_query
from .errors import UnknownFixtureError
from .idioms import IdiomInstance
from .inference import posterior
from .modelfile import LoadResult, ModelDocument, load_model
from .network import BayesNet


@dataclass(frozen=True)
class ExpectedPosterior:
    """One pinned probability for a fixture query."""

    target: str
    state: str
    value: float
    tolerance: float
    evidence: tuple[tuple[str, str], ...] = ()
    intervention: tuple[tuple[str, str], ...] = ()
    mode: QueryMode = QueryMode.OBSERVATIONAL


@dataclass(frozen=True)
class FixtureSpec:
    id: str
    description: str
    lint_errors: tuple[str, ...] = ()
    lint_warnings: tuple[str, ...] = ()
    expectations: tuple[ExpectedPosterior, ...] = ()


@dataclass(frozen=True)
class LoadedFixture:
    spec: FixtureSpec
    source: str
    document: ModelDocument
    net: BayesNet
    instances: tuple[IdiomInstance, ...]


_REGISTRY: tuple[FixtureSpec, ...] = (
    FixtureSpec(
        id="xray_measurement",
        description="internal bleeding assessed by an imperfect X-ray "
        "(1% false-positive, 5% false-negative, prior 0.1)",
        expectations=(
            ExpectedPosterior(
                target="Bleeding",
                state="yes",
                value=0.095 / 0.104,
                tolerance=1e-6,
                evidence=(("Xray", "pos"),),
            ),
        ),
    ),
    FixtureSpec(
        id="smoking_chain",
        description="risk factor, condition, and test in a chain; "
        "directions only, the numbers are illustrative",
    ),
    FixtureSpec(
        id="manifestation_cad",
        description="a condition with three manifestations",
    ),
    FixtureSpec(
        id="reliability_symptom",
        description="a reported symptom weighted by reporter reliability",
    ),
    FixtureSpec(
        id="common_reliability",
        description="one reliability variable shared by two reported symptoms",
    ),
    FixtureSpec(
        id="pathogenesis_plaque",
        description="risk factors reaching a condition through a hidden mechanism",
    ),
    FixtureSpec(
        id="comorbidity_cause",
        description="two conditions sharing a cause",
    ),
    FixtureSpec(
        id="comorbidity_symptom",
        description="two conditions sharing a symptom (explaining away)",
        expectations=(
            ExpectedPosterior(
                target="CAD",
                state="yes",
                value=0.505,
                tolerance=1e-6,
                evidence=(("ChestPain", "yes"),),
            ),
            ExpectedPosterior(
                target="CAD",
                state="yes",
                value=0.0099 / 0.0909,
                tolerance=1e-6,
                evidence=(("ChestPain", "yes"), ("LungCancer", "yes")),
            ),
        ),
    ),
    FixtureSpec(
        id="complication_mi",
        description="a late unfavourable consequence of a condition",
    ),
    FixtureSpec(
        id="treatment_triangle",
        description="confounded treatment triangle with a decision arc",
        expectations=(
            ExpectedPosterior(
                target="HeartAttack",
                state="yes",
                value=0.16,
                tolerance=1e-9,
                intervention=(("Medication", "given"),),
                mode=QueryMode.INTERVENTIONAL,
            ),
            ExpectedPosterior(
                target="HeartAttack",
                state="yes",
                value=0.086 / 0.38,
                tolerance=1e-9,
                evidence=(("Medication", "given"),),
            ),
        ),
    ),
    FixtureSpec(
        id="treatment_reliability",
        description="treatment effect modulated by application reliability; "
        "reliability is inert when the treatment is not given",
    ),
    FixtureSpec(
        id="counterfactual_medication",
        description="twin-network what-if over the treatment choice",
        expectations=(
            ExpectedPosterior(
                target="HeartAttack",
                state="yes",
                value=0.3,
                tolerance=1e-9,
                evidence=(
                    ("CAD", "yes"),
                    ("Medication", "not_given"),
                    ("HeartAttack", "yes"),
                ),
                intervention=(("Medication", "given"),),
                mode=QueryMode.COUNTERFACTUAL,
            ),
        ),
    ),
    FixtureSpec(
        id="cad_composite",
        description="compact diagnostic model from six overlapping idiom "
        "instances; lint-clean and fully idiom-covered",
    ),
    FixtureSpec(
        id="head_injury_bad",
        description="anti-pattern structure that must produce exactly R1 and R2",
        lint_errors=("R1", "R2"),
    ),
    FixtureSpec(
        id="head_injury_good",
        description="corrected head-injury structure; no findings",
    ),
    FixtureSpec(
        id="coagulopathy_sketch",
        description="trauma coagulopathy sketch; two tolerated "
        "mechanism-to-marker arcs reported as R4 warnings",
        lint_warnings=("R4", "R4"),
    ),
)

_BY_ID: Mapping[str, FixtureSpec] = {spec.id: spec for spec in _REGISTRY}


def fixture_ids() -> list[str]:
    return [spec.id for spec in _REGISTRY]


def fixture_spec(fixture_id: str) -> FixtureSpec:
    try:
        return _BY_ID[fixture_id]
    except KeyError:
        raise UnknownFixtureError(f"no fixture registered as {fixture_id!r}") from None


def fixture_source(fixture_id: str) -> str:
    spec = fixture_spec(fixture_id)
    path = resources.files(__package__) / "fixtures" / f"{spec.id}.idbn"
    return path.read_text(encoding="utf-8")


def load_fixture(fixture_id: str) -> LoadedFixture:
    """Load and elaborate a fixture; registry contract: this never fails."""
    spec = fixture_spec(fixture_id)
    source = fixture_source(fixture_id)
    result: LoadResult = load_model(source)
    if result.net is None:
        raise UnknownFixtureError(
            f"fixture {fixture_id!r} no longer elaborates: "
            + "; ".join(str(d) for d in result.diagnostics)
        )
    return LoadedFixture(
        spec=spec,
        source=source,
        document=result.document,
        net=result.net,
        instances=result.instances,
    )


def check_expectation(fixture: LoadedFixture, expected: ExpectedPosterior) -> float:
    """Run one pinned query and return the computed probability."""
    evidence = dict(expected.evidence)
    intervention = dict(expected.intervention)
    if expected.mode is QueryMode.OBSERVATIONAL:
        dist = posterior(fixture.net, expected.target, evidence)
    elif expected.mode is QueryMode.INTERVENTIONAL:
        dist = interventional_query(
            fixture.net, expected.target, intervention, evidence
        ).distribution
    else:
        dist = counterfactual_query(
            fixture.net, evidence, intervention, expected.target
        ).distribution
    return dist.prob(expected.state)

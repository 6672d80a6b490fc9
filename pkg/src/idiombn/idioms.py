"""Idiom templates: reusable graph-fragment reasoning patterns.

Fourteen templates (ten clinical, four generic) describe how role-tagged
variables connect. Instantiating a template with concrete variable names
yields a :class:`Fragment`; fragments compose into a network skeleton.
:func:`suggest_idiom` ranks templates for a group of role-tagged
variables via a fixed rule table.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    ArityViolationError,
    CompositionCycleError,
    IdiomBNError,
    MissingSlotError,
    UnknownTemplateError,
)
from .network import CONDITION_ROLES, MANIFESTATION_ROLES, Role, _find_cycle


class EmptyGroupError(IdiomBNError):
    """suggest_idiom called with no variables."""


class TemplateId(str, Enum):
    MANIFESTATION = "manifestation"
    MANIFESTATION_RELIABILITY = "manifestation_reliability"
    RISK_FACTOR = "risk_factor"
    PATHOGENESIS = "pathogenesis"
    COMORBIDITY_COMMON_CAUSE = "comorbidity_common_cause"
    COMORBIDITY_COMMON_SYMPTOMOLOGY = "comorbidity_common_symptomology"
    COMPLICATION = "complication"
    TREATMENT = "treatment"
    TREATMENT_RELIABILITY = "treatment_reliability"
    COUNTERFACTUAL_TREATMENT = "counterfactual_treatment"
    CAUSE_CONSEQUENCE = "cause_consequence"
    MEASUREMENT = "measurement"
    DEFINITION_SYNTHESIS = "definition_synthesis"
    INDUCTION = "induction"


@dataclass(frozen=True)
class Slot:
    """A named role position of a template.

    ``many`` slots bind a list of variables; ``min_count`` 0 makes the
    slot optional. Binding a variable whose declared role falls outside
    ``roles`` is a warning, never an error: roles are context-dependent.
    """

    name: str
    roles: frozenset[Role]
    many: bool = False
    min_count: int = 1


@dataclass(frozen=True)
class IdiomTemplate:
    id: TemplateId
    slots: tuple[Slot, ...]
    # (source slot, destination slot, decision flag); expands to one edge
    # per bound variable pair.
    edge_rules: tuple[tuple[str, str, bool], ...]
    summary: str
    tags: frozenset[str] = frozenset()

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise MissingSlotError(f"template {self.id.value!r} has no slot {name!r}")


@dataclass(frozen=True)
class IdiomInstance:
    """A template bound to concrete variable names."""

    template: TemplateId
    bindings: Mapping[str, tuple[str, ...]]
    label: str = ""


@dataclass(frozen=True)
class Fragment:
    """A graph piece: variables with expected roles plus flagged edges."""

    variables: tuple[str, ...]
    expected_roles: Mapping[str, frozenset[Role]]
    edges: tuple[tuple[str, str, bool], ...]
    warnings: tuple[str, ...] = ()
    label: str = ""

    def edge_pairs(self) -> set[tuple[str, str]]:
        return {(p, c) for p, c, _ in self.edges}

    def decision_pairs(self) -> set[tuple[str, str]]:
        return {(p, c) for p, c, d in self.edges if d}


_GENERIC_CAUSE_ROLES = frozenset(
    {
        Role.CONDITION,
        Role.COMORBIDITY,
        Role.RISK_FACTOR,
        Role.PATHOGENIC_MECHANISM,
        Role.TREATMENT,
        Role.SYNTHETIC,
        Role.UNCLASSIFIED,
    }
)
_GENERIC_CONSEQUENCE_ROLES = frozenset(
    {
        Role.CONDITION,
        Role.COMORBIDITY,
        Role.SYMPTOM,
        Role.SIGN,
        Role.MEDICAL_TEST,
        Role.PATHOGENIC_MECHANISM,
        Role.SYNTHETIC,
        Role.UNCLASSIFIED,
    }
)

_CATALOG: tuple[IdiomTemplate, ...] = (
    IdiomTemplate(
        id=TemplateId.MANIFESTATION,
        slots=(
            Slot("condition", CONDITION_ROLES),
            Slot("manifestations", MANIFESTATION_ROLES, many=True),
        ),
        edge_rules=(("condition", "manifestations", False),),
        summary="a condition causes its observable symptoms, signs, and test results",
    ),
    IdiomTemplate(
        id=TemplateId.MANIFESTATION_RELIABILITY,
        slots=(
            Slot("condition", CONDITION_ROLES),
            Slot("actual", MANIFESTATION_ROLES),
            Slot("reported", MANIFESTATION_ROLES),
            Slot("reliability", frozenset({Role.RELIABILITY})),
            Slot(
                "factors",
                frozenset({Role.RELIABILITY, Role.RISK_FACTOR}),
                many=True,
                min_count=0,
            ),
        ),
        edge_rules=(
            ("condition", "actual", False),
            ("actual", "reported", False),
            ("reliability", "reported", False),
            ("factors", "reliability", False),
        ),
        summary="a human-reported manifestation filtered through reporter reliability",
    ),
    IdiomTemplate(
        id=TemplateId.RISK_FACTOR,
        slots=(
            Slot("risk_factor", frozenset({Role.RISK_FACTOR})),
            Slot(
                "affected",
                CONDITION_ROLES | MANIFESTATION_ROLES | {Role.TREATMENT},
                many=True,
            ),
        ),
        edge_rules=(("risk_factor", "affected", False),),
        summary="an observable attribute raises the chance of conditions, "
        "manifestations, or treatment choices",
    ),
    IdiomTemplate(
        id=TemplateId.PATHOGENESIS,
        slots=(
            Slot("risk_factors", frozenset({Role.RISK_FACTOR}), many=True),
            Slot("mechanism", frozenset({Role.PATHOGENIC_MECHANISM})),
            Slot("condition", CONDITION_ROLES),
        ),
        edge_rules=(
            ("risk_factors", "mechanism", False),
            ("mechanism", "condition", False),
        ),
        summary="risk factors act on a condition through an unobserved mechanism",
    ),
    IdiomTemplate(
        id=TemplateId.COMORBIDITY_COMMON_CAUSE,
        slots=(
            Slot("cause", frozenset({Role.RISK_FACTOR, Role.PATHOGENIC_MECHANISM})),
            Slot(
                "conditions",
                CONDITION_ROLES | {Role.PATHOGENIC_MECHANISM},
                many=True,
                min_count=2,
            ),
        ),
        edge_rules=(("cause", "conditions", False),),
        summary="two co-occurring conditions share a cause",
    ),
    IdiomTemplate(
        id=TemplateId.COMORBIDITY_COMMON_SYMPTOMOLOGY,
        slots=(
            Slot(
                "conditions",
                CONDITION_ROLES | {Role.PATHOGENIC_MECHANISM},
                many=True,
                min_count=2,
            ),
            Slot("shared", MANIFESTATION_ROLES, many=True),
        ),
        edge_rules=(("conditions", "shared", False),),
        summary="two co-occurring conditions share consequences, so observing "
        "one can explain away the other",
    ),
    IdiomTemplate(
        id=TemplateId.COMPLICATION,
        slots=(
            Slot("source", CONDITION_ROLES | {Role.TREATMENT}),
            Slot("complications", frozenset({Role.COMPLICATION}), many=True),
        ),
        edge_rules=(("source", "complications", False),),
        summary="a condition or treatment leads to an unfavourable late effect",
    ),
    IdiomTemplate(
        id=TemplateId.TREATMENT,
        slots=(
            Slot("condition", CONDITION_ROLES),
            Slot("treatment", frozenset({Role.TREATMENT})),
            Slot("outcome", frozenset({Role.COMPLICATION})),
        ),
        edge_rules=(
            ("condition", "treatment", True),
            ("treatment", "outcome", False),
            ("condition", "outcome", False),
        ),
        summary="the condition drives the treatment decision; treatment and "
        "condition both drive the outcome",
    ),
    IdiomTemplate(
        id=TemplateId.TREATMENT_RELIABILITY,
        slots=(
            Slot("condition", CONDITION_ROLES),
            Slot("treatment", frozenset({Role.TREATMENT})),
            Slot("outcome", frozenset({Role.COMPLICATION})),
            Slot("reliability", frozenset({Role.RELIABILITY})),
        ),
        edge_rules=(
            ("condition", "treatment", True),
            ("treatment", "outcome", False),
            ("condition", "outcome", False),
            ("reliability", "outcome", False),
        ),
        summary="treatment idiom plus how reliably the treatment was applied; "
        "reliability modulates the effect only when the treatment is given",
    ),
    IdiomTemplate(
        id=TemplateId.COUNTERFACTUAL_TREATMENT,
        slots=(
            Slot("condition", CONDITION_ROLES),
            Slot("treatment", frozenset({Role.TREATMENT})),
            Slot("outcome", frozenset({Role.COMPLICATION})),
        ),
        edge_rules=(
            ("condition", "treatment", True),
            ("treatment", "outcome", False),
            ("condition", "outcome", False),
        ),
        summary="treatment idiom marked for twin-network what-if comparison of "
        "an observed and a hypothetical treatment",
        tags=frozenset({"counterfactual"}),
    ),
    IdiomTemplate(
        id=TemplateId.CAUSE_CONSEQUENCE,
        slots=(
            Slot("cause", _GENERIC_CAUSE_ROLES),
            Slot("consequences", _GENERIC_CONSEQUENCE_ROLES, many=True),
        ),
        edge_rules=(("cause", "consequences", False),),
        summary="generic: a causal process with observable consequences",
    ),
    IdiomTemplate(
        id=TemplateId.MEASUREMENT,
        slots=(
            Slot(
                "actual",
                CONDITION_ROLES
                | MANIFESTATION_ROLES
                | {Role.PATHOGENIC_MECHANISM, Role.SYNTHETIC, Role.UNCLASSIFIED},
            ),
            Slot(
                "assessed",
                MANIFESTATION_ROLES | {Role.SYNTHETIC, Role.UNCLASSIFIED},
            ),
            Slot("accuracy", frozenset({Role.RELIABILITY})),
        ),
        edge_rules=(
            ("actual", "assessed", False),
            ("accuracy", "assessed", False),
        ),
        summary="generic: an assessed value tracks the actual value up to the "
        "accuracy of the measuring process",
    ),
    IdiomTemplate(
        id=TemplateId.DEFINITION_SYNTHESIS,
        slots=(
            Slot(
                "parts",
                frozenset(set(Role) - {Role.COMPLICATION}),
                many=True,
            ),
            Slot("synthetic", frozenset({Role.SYNTHETIC})),
        ),
        edge_rules=(("parts", "synthetic", False),),
        summary="generic: several nodes combined into one synthetic node",
    ),
    IdiomTemplate(
        id=TemplateId.INDUCTION,
        slots=(
            Slot("parameter", frozenset({Role.SYNTHETIC, Role.UNCLASSIFIED})),
            Slot(
                "observations",
                CONDITION_ROLES | MANIFESTATION_ROLES | {Role.UNCLASSIFIED},
                many=True,
            ),
        ),
        edge_rules=(("parameter", "observations", False),),
        summary="generic: a population parameter explains exchangeable "
        "observations (structural only, not quantified)",
    ),
)

_BY_ID = {t.id: t for t in _CATALOG}
_CATALOG_ORDER = {t.id: i for i, t in enumerate(_CATALOG)}


def catalog() -> list[IdiomTemplate]:
    """All fourteen templates, in fixed catalog order."""
    return list(_CATALOG)


def template(template_id: Union[str, TemplateId]) -> IdiomTemplate:
    try:
        return _BY_ID[TemplateId(template_id)]
    except ValueError:
        raise UnknownTemplateError(f"no idiom template {template_id!r}") from None


def normalize_bindings(
    tpl: IdiomTemplate, bindings: Mapping[str, Union[str, Sequence[str]]]
) -> dict[str, tuple[str, ...]]:
    """Validate arities and return slot -> tuple-of-names."""
    normalized: dict[str, tuple[str, ...]] = {}
    for name in bindings:
        tpl.slot(name)  # raises MissingSlotError on unknown slots
    for slot in tpl.slots:
        raw = bindings.get(slot.name)
        if raw is None:
            if slot.min_count == 0:
                normalized[slot.name] = ()
                continue
            raise MissingSlotError(
                f"binding for template {tpl.id.value!r} omits slot {slot.name!r}"
            )
        names = (raw,) if isinstance(raw, str) else tuple(raw)
        if not slot.many and len(names) != 1:
            raise ArityViolationError(
                f"slot {slot.name!r} of {tpl.id.value!r} takes exactly one "
                f"variable, got {len(names)}"
            )
        required = slot.min_count if slot.many else 1
        if len(names) < required:
            raise ArityViolationError(
                f"slot {slot.name!r} of {tpl.id.value!r} needs at least "
                f"{required} variable(s), got {len(names)}"
            )
        if len(set(names)) != len(names):
            raise ArityViolationError(
                f"slot {slot.name!r} of {tpl.id.value!r} binds a variable twice"
            )
        normalized[slot.name] = names
    return normalized


def instantiate(
    template_id: Union[str, TemplateId, IdiomTemplate],
    bindings: Mapping[str, Union[str, Sequence[str]]],
    declared_roles: Optional[Mapping[str, Role]] = None,
    label: str = "",
) -> Fragment:
    """Expand a template over a binding into a concrete graph fragment.

    Role-mismatched bindings succeed with a warning attached; bindings
    that would produce a self-loop or cycle are rejected.
    """
    tpl = template_id if isinstance(template_id, IdiomTemplate) else template(template_id)
    normalized = normalize_bindings(tpl, bindings)

    warnings: list[str] = []
    variables: list[str] = []
    expected: dict[str, frozenset[Role]] = {}
    for slot in tpl.slots:
        for name in normalized[slot.name]:
            if name not in expected:
                variables.append(name)
                expected[name] = slot.roles
            else:
                expected[name] = expected[name] | slot.roles
            if declared_roles is not None:
                declared = declared_roles.get(name)
                if declared is not None and declared not in slot.roles:
                    allowed = ", ".join(sorted(r.value for r in slot.roles))
                    warnings.append(
                        f"variable {name!r} bound to slot {slot.name!r} of "
                        f"{tpl.id.value!r} has role {declared.value!r} "
                        f"(slot expects {allowed})"
                    )

    edges: list[tuple[str, str, bool]] = []
    seen_pairs: set[tuple[str, str]] = set()
    for src_slot, dst_slot, decision in tpl.edge_rules:
        for src in normalized[src_slot]:
            for dst in normalized[dst_slot]:
                if src == dst:
                    raise CompositionCycleError(
                        [src], {(src, dst): [label or tpl.id.value]}
                    )
                if (src, dst) in seen_pairs:
                    continue
                seen_pairs.add((src, dst))
                edges.append((src, dst, decision))

    cycle = _fragment_cycle(variables, edges)
    if cycle:
        raise CompositionCycleError(
            cycle,
            {
                (p, c): [label or tpl.id.value]
                for p, c, _ in edges
                if p in cycle and c in cycle
            },
        )

    if tpl.id is TemplateId.INDUCTION:
        warnings.append(
            "induction idiom is structural only: no probability table is implied"
        )

    return Fragment(
        variables=tuple(variables),
        expected_roles=expected,
        edges=tuple(edges),
        warnings=tuple(warnings),
        label=label,
    )


def compose(fragments: Sequence[Fragment]) -> Fragment:
    """Union fragments into one, merging duplicate edges.

    A duplicate edge keeps the decision flag if any contributor set it.
    Disjoint role expectations for the same variable are retained as a
    multi-role annotation with a warning. A cyclic union is rejected,
    naming the cycle and the fragments that contributed each edge.
    """
    variables: list[str] = []
    expected: dict[str, frozenset[Role]] = {}
    warnings: list[str] = []
    edge_decision: dict[tuple[str, str], bool] = {}
    edge_order: list[tuple[str, str]] = []
    contributors: dict[tuple[str, str], list[str]] = {}

    for index, fragment in enumerate(fragments):
        source = fragment.label or f"fragment {index}"
        for name in fragment.variables:
            roles = fragment.expected_roles.get(name, frozenset())
            if name not in expected:
                variables.append(name)
                expected[name] = roles
            else:
                if roles and expected[name] and not (roles & expected[name]):
                    old = ", ".join(sorted(r.value for r in expected[name]))
                    new = ", ".join(sorted(r.value for r in roles))
                    warnings.append(
                        f"variable {name!r} plays multiple roles across idioms "
                        f"({old} vs {new}); annotation retained"
                    )
                expected[name] = expected[name] | roles
        for parent, child, decision in fragment.edges:
            key = (parent, child)
            if key not in edge_decision:
                edge_decision[key] = decision
                edge_order.append(key)
                contributors[key] = [source]
            else:
                edge_decision[key] = edge_decision[key] or decision
                contributors[key].append(source)
        warnings.extend(w for w in fragment.warnings if w not in warnings)

    edges = tuple((p, c, edge_decision[(p, c)]) for p, c in edge_order)
    cycle = _fragment_cycle(variables, list(edges))
    if cycle:
        cycle_set = set(cycle)
        raise CompositionCycleError(
            cycle,
            {
                (p, c): contributors[(p, c)]
                for p, c in edge_order
                if p in cycle_set and c in cycle_set
            },
        )
    return Fragment(
        variables=tuple(variables),
        expected_roles=expected,
        edges=edges,
        warnings=tuple(warnings),
        label="",
    )


def _fragment_cycle(variables: Sequence[str], edges: Sequence[tuple[str, str, bool]]):
    adjacency: dict[str, list[str]] = {v: [] for v in variables}
    for parent, child, _ in edges:
        adjacency.setdefault(parent, []).append(child)
        adjacency.setdefault(child, [])
    return _find_cycle(list(adjacency), adjacency)


def suggest_idiom(
    group: Iterable[tuple[str, Role]],
    mediator_observable: Optional[bool] = None,
    human_reported: Optional[bool] = None,
    temporal_late_effect: Optional[bool] = None,
) -> list[TemplateId]:
    """Rank templates for a group of role-tagged variables.

    A fixed rule table evaluated most-specific first; the generic
    cause-consequence idiom is always the final fallback. Pure function:
    the same group and hints always produce the same ranking.
    """
    group = list(group)
    if not group:
        raise EmptyGroupError("cannot suggest an idiom for an empty group")
    counts = Counter(role for _, role in group)
    conditions = counts[Role.CONDITION] + counts[Role.COMORBIDITY]
    manifests = sum(counts[r] for r in MANIFESTATION_ROLES)
    risk_factors = counts[Role.RISK_FACTOR]
    mechanisms = counts[Role.PATHOGENIC_MECHANISM]
    treatments = counts[Role.TREATMENT]
    complications = counts[Role.COMPLICATION]
    reliabilities = counts[Role.RELIABILITY]
    synthetics = counts[Role.SYNTHETIC]

    ranked: list[TemplateId] = []

    def add(template_id: TemplateId) -> None:
        if template_id not in ranked:
            ranked.append(template_id)

    if conditions >= 2 and risk_factors >= 1:
        add(TemplateId.COMORBIDITY_COMMON_CAUSE)
    if conditions >= 2 and manifests >= 1:
        add(TemplateId.COMORBIDITY_COMMON_SYMPTOMOLOGY)
    if conditions >= 1 and manifests >= 1:
        if human_reported or reliabilities >= 1:
            add(TemplateId.MANIFESTATION_RELIABILITY)
        add(TemplateId.MANIFESTATION)
    if temporal_late_effect and (conditions >= 1 or treatments >= 1) and complications >= 1:
        add(TemplateId.COMPLICATION)
    if risk_factors >= 1 and conditions >= 1:
        if mediator_observable is False or mechanisms >= 1:
            add(TemplateId.PATHOGENESIS)
            add(TemplateId.RISK_FACTOR)
        else:
            add(TemplateId.RISK_FACTOR)
            add(TemplateId.PATHOGENESIS)
    elif risk_factors >= 1 and (manifests >= 1 or treatments >= 1):
        add(TemplateId.RISK_FACTOR)
    if conditions >= 1 and treatments >= 1:
        add(TemplateId.TREATMENT)
        if human_reported or reliabilities >= 1:
            add(TemplateId.TREATMENT_RELIABILITY)
    if synthetics >= 1:
        add(TemplateId.DEFINITION_SYNTHESIS)
    add(TemplateId.CAUSE_CONSEQUENCE)
    return ranked

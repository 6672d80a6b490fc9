"""Structural lint rules for role-tagged networks.

Eight rules (R1-R8) check edge directions and mediation conventions.
Rule ids are frozen: new rules append, never renumber. Unclassified
variables are exempt everywhere, so incomplete elicitation is not
punished. R7 is the one parameter-level rule and needs the idiom
instances to locate treatment-reliability outcomes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .idioms import IdiomInstance, TemplateId, instantiate
from .network import (
    CONDITION_ROLES,
    MANIFESTATION_ROLES,
    BayesNet,
    Role,
    ancestors,
    descendants,
    topological_order,
)

ERROR = "error"
WARNING = "warning"

# Rules whose severity is error; these can never be disabled.
ERROR_RULES = frozenset({"R1", "R2", "R5", "R6"})
WARNING_RULES = frozenset({"R3", "R4", "R7", "R8"})

# Roles a reliability node may legitimately point at: reported
# observations, treatment outcomes it modulates, and synthesis nodes
# (including reliability decomposition).
_RELIABILITY_CHILD_ROLES = (
    MANIFESTATION_ROLES
    | {Role.COMPLICATION, Role.SYNTHETIC, Role.RELIABILITY, Role.UNCLASSIFIED}
)

_ANCHORS = {
    "R1": "a symptom, sign, or test result is a consequence of a condition, "
    "never its cause",
    "R2": "risk factors precede what they influence; a condition cannot "
    "produce its own risk factor",
    "R3": "risk factors usually act on a condition through a pathogenic "
    "mechanism; a direct arc next to a mediated route is suspect",
    "R4": "pathogenic mechanisms are hidden processes and normally do not "
    "explain manifestations directly (counterexamples exist)",
    "R5": "a complication is an unfavourable consequence of a condition or "
    "treatment, so one must sit upstream of it",
    "R6": "reliability qualifies how observations are reported or how a "
    "treatment lands; it cannot cause clinical state",
    "R7": "how reliably a treatment was applied must not matter in rows "
    "where the treatment is not applied",
    "R8": "an observational model should show what drives a treatment "
    "decision, normally via a decision arc",
}

# Conventional labels for a treatment's "not applied" state; fallback is
# the last declared state.
_NOT_APPLIED_LABELS = frozenset(
    {"no", "none", "not_given", "not_applied", "not_taken", "untreated",
     "absent", "false", "off"}
)


@dataclass(frozen=True)
class Finding:
    rule: str
    severity: str
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    message: str
    anchor: str


@dataclass(frozen=True)
class LintReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == ERROR)

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == WARNING)

    def summary(self) -> dict[str, int]:
        return {"errors": len(self.errors), "warnings": len(self.warnings)}

    def to_text(self) -> str:
        lines = []
        for f in self.findings:
            where = ", ".join(f"{p}->{c}" for p, c in f.edges) or ", ".join(f.nodes)
            lines.append(f"{f.rule} {f.severity}: {f.message} [{where}]")
        counts = self.summary()
        lines.append(f"{counts['errors']} error(s), {counts['warnings']} warning(s)")
        return "\n".join(lines)

    def to_json(self) -> str:
        payload = {
            "findings": [
                {
                    "rule": f.rule,
                    "severity": f.severity,
                    "nodes": list(f.nodes),
                    "edges": [list(e) for e in f.edges],
                    "message": f.message,
                    "anchor": f.anchor,
                }
                for f in self.findings
            ],
            "summary": self.summary(),
        }
        return json.dumps(payload, indent=2)


@dataclass(frozen=True)
class LintConfig:
    """Which warning rules run. Error rules cannot be disabled."""

    disabled: frozenset[str] = frozenset()

    def __post_init__(self):
        blocked = set(self.disabled) & ERROR_RULES
        if blocked:
            raise ValueError(
                "error rules cannot be disabled: " + ", ".join(sorted(blocked))
            )

    def active(self, rule: str) -> bool:
        return rule not in self.disabled


def lint(
    net: BayesNet,
    idiom_instances: Optional[Sequence[IdiomInstance]] = None,
    config: Optional[LintConfig] = None,
) -> LintReport:
    """Evaluate every rule; always completes, never raises on content."""
    config = config or LintConfig()
    findings: list[Finding] = []
    role = {v.name: v.role for v in net.variables}

    def add(rule, severity, nodes, edges, message):
        findings.append(
            Finding(rule, severity, tuple(nodes), tuple(edges), message, _ANCHORS[rule])
        )

    for parent, child in net.edges:
        parent_role, child_role = role[parent], role[child]
        if parent_role is Role.UNCLASSIFIED or child_role is Role.UNCLASSIFIED:
            continue
        if parent_role in MANIFESTATION_ROLES and child_role in CONDITION_ROLES:
            add(
                "R1", ERROR, (parent, child), [(parent, child)],
                f"{parent!r} ({parent_role.value}) is drawn as a cause of "
                f"{child!r} ({child_role.value}); reverse the arc",
            )
        if (
            parent_role in CONDITION_ROLES or parent_role is Role.COMPLICATION
        ) and child_role is Role.RISK_FACTOR:
            add(
                "R2", ERROR, (parent, child), [(parent, child)],
                f"{child!r} is a risk factor but is drawn as a consequence "
                f"of {parent!r} ({parent_role.value}); reverse the arc",
            )

    if config.active("R3"):
        for parent, child in net.edges:
            if role[parent] is not Role.RISK_FACTOR or role[child] not in CONDITION_ROLES:
                continue
            mediators = sorted(
                m
                for m in descendants(net, parent) & ancestors(net, child)
                if role[m] is Role.PATHOGENIC_MECHANISM
            )
            if mediators:
                add(
                    "R3", WARNING, (parent, child, *mediators), [(parent, child)],
                    f"{parent!r} also reaches {child!r} through "
                    f"{', '.join(repr(m) for m in mediators)}; the direct arc "
                    "may double-count the mediated route",
                )

    if config.active("R4"):
        for parent, child in net.edges:
            if (
                role[parent] is Role.PATHOGENIC_MECHANISM
                and role[child] in MANIFESTATION_ROLES
            ):
                add(
                    "R4", WARNING, (parent, child), [(parent, child)],
                    f"pathogenic mechanism {parent!r} directly explains "
                    f"manifestation {child!r}",
                )

    for name in net.names:
        if role[name] is not Role.COMPLICATION:
            continue
        upstream = ancestors(net, name)
        if not any(
            role[a] in CONDITION_ROLES or role[a] is Role.TREATMENT for a in upstream
        ):
            add(
                "R5", ERROR, (name,), [],
                f"complication {name!r} has no condition, comorbidity, or "
                "treatment among its ancestors",
            )

    for name in net.names:
        if role[name] is not Role.RELIABILITY:
            continue
        for child in net.children(name):
            if role[child] not in _RELIABILITY_CHILD_ROLES:
                add(
                    "R6", ERROR, (name, child), [(name, child)],
                    f"reliability {name!r} is drawn as a cause of {child!r} "
                    f"({role[child].value}); it may only qualify reported "
                    "observations or treatment outcomes",
                )

    if config.active("R7") and idiom_instances:
        for instance in idiom_instances:
            if instance.template is not TemplateId.TREATMENT_RELIABILITY:
                continue
            finding = _check_null_effect(net, instance)
            if finding is not None:
                add("R7", WARNING, *finding)

    if config.active("R8"):
        for name in net.names:
            if role[name] is not Role.TREATMENT:
                continue
            if not net.parents(name):
                add(
                    "R8", WARNING, (name,), [],
                    f"treatment {name!r} has no parents and no decision arc",
                )

    topo_pos = {n: i for i, n in enumerate(topological_order(net))}
    findings.sort(
        key=lambda f: (
            int(f.rule[1:]),
            min((topo_pos[n] for n in f.nodes if n in topo_pos), default=0),
            f.message,
        )
    )
    return LintReport(tuple(findings))


def _not_applied_state(states: tuple[str, ...]) -> str:
    matches = [s for s in states if s.lower() in _NOT_APPLIED_LABELS]
    if len(matches) == 1:
        return matches[0]
    return states[-1]


def _check_null_effect(net: BayesNet, instance: IdiomInstance):
    """R7 body: outcome rows must agree across reliability states whenever
    the treatment is at its not-applied state."""
    treatment = instance.bindings["treatment"][0]
    outcome = instance.bindings["outcome"][0]
    reliability = instance.bindings["reliability"][0]
    cpt = net.cpts.get(outcome)
    if cpt is None or treatment not in cpt.parents or reliability not in cpt.parents:
        return None
    t_idx = cpt.parents.index(treatment)
    r_idx = cpt.parents.index(reliability)
    off_state = _not_applied_state(net.states(treatment))

    groups: dict[tuple[str, ...], list[tuple[float, ...]]] = {}
    for key, row in cpt.rows.items():
        if key[t_idx] != off_state:
            continue
        rest = tuple(s for i, s in enumerate(key) if i != r_idx)
        groups.setdefault(rest, []).append(row)
    worst = 0.0
    for rows in groups.values():
        for other in rows[1:]:
            worst = max(
                worst, max(abs(a - b) for a, b in zip(rows[0], other))
            )
    if worst > 1e-9:
        return (
            (outcome, treatment, reliability),
            [],
            f"outcome {outcome!r} rows differ across {reliability!r} states "
            f"by up to {worst:.3g} while {treatment!r} = {off_state!r}",
        )
    return None


@dataclass(frozen=True)
class CoverageReport:
    """Partition of the edge set into idiom-covered and raw edges."""

    covered: tuple[tuple[tuple[str, str], tuple[str, ...]], ...]
    uncovered: tuple[tuple[str, str], ...]

    def fraction(self) -> float:
        total = len(self.covered) + len(self.uncovered)
        return 1.0 if total == 0 else len(self.covered) / total

    def credited(self, edge: tuple[str, str]) -> tuple[str, ...]:
        for covered_edge, labels in self.covered:
            if covered_edge == edge:
                return labels
        return ()


def coverage(
    net: BayesNet, idiom_instances: Sequence[IdiomInstance]
) -> CoverageReport:
    """Which edges at least one idiom instance accounts for.

    An edge shared by several instances is counted once with every
    contributing instance credited; leftover raw edges are listed for
    reviewer attention.
    """
    claimed: dict[tuple[str, str], list[str]] = {}
    for index, instance in enumerate(idiom_instances):
        label = instance.label or f"{instance.template.value}#{index}"
        fragment = instantiate(instance.template, instance.bindings)
        for pair in sorted(fragment.edge_pairs()):
            claimed.setdefault(pair, []).append(label)

    covered = []
    uncovered = []
    for edge in net.edges:
        if edge in claimed:
            covered.append((edge, tuple(claimed[edge])))
        else:
            uncovered.append(edge)
    return CoverageReport(tuple(covered), tuple(uncovered))

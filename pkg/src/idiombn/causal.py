"""Interventional and counterfactual machinery.

Graph surgery, backdoor checking and adjustment, twin-network
construction, and one dispatcher for the three query modes. Every
transformation returns a new network; the input is never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .errors import (
    BackdoorOpenError,
    InvalidAdjustmentSetError,
)
from .inference import Distribution, Evidence, joint_marginal, posterior
from .network import (
    CPT,
    BayesNet,
    Role,
    Variable,
    _d_separated_maps,
    build_network,
    descendants,
)

Intervention = Mapping[str, str]


class QueryMode(str, Enum):
    OBSERVATIONAL = "observational"
    INTERVENTIONAL = "interventional"
    COUNTERFACTUAL = "counterfactual"


@dataclass(frozen=True)
class Query:
    """Targets plus evidence, intervention, and mode."""

    targets: tuple[str, ...]
    evidence: Mapping[str, str] = field(default_factory=dict)
    intervention: Mapping[str, str] = field(default_factory=dict)
    mode: QueryMode = QueryMode.OBSERVATIONAL


@dataclass(frozen=True)
class QueryProvenance:
    """How a causal result was produced."""

    mode: QueryMode
    intervention: tuple[tuple[str, str], ...] = ()
    removed_edges: tuple[tuple[str, str], ...] = ()
    adjustment_set: Optional[tuple[str, ...]] = None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class CausalQueryResult:
    distribution: Distribution
    provenance: QueryProvenance


@dataclass(frozen=True)
class TwinNetwork:
    """Paired actual/hypothetical worlds sharing background variables.

    Non-descendants of the intervention targets appear once and are
    shared; targets and their descendants get a hypothetical copy. The
    hypothetical targets are parentless and forced to the intervention
    states.
    """

    net: BayesNet
    shared: frozenset[str]
    actual_to_hypothetical: Mapping[str, str]
    intervention: Mapping[str, str]
    counterfactual_treatment_mode: bool
    removed_actual_edges: tuple[tuple[str, str], ...] = ()

    def hypothetical_name(self, name: str) -> str:
        """Node carrying ``name`` in the hypothetical world."""
        return self.actual_to_hypothetical.get(name, name)


def _check_intervention(net: BayesNet, intervention: Intervention) -> dict[str, str]:
    if not intervention:
        raise ValueError("intervention must name at least one variable")
    checked = {}
    for name, state in intervention.items():
        net.variable(name).state_index(state)
        checked[name] = state
    return checked


def do_surgery(net: BayesNet, intervention: Intervention) -> BayesNet:
    """Sever each intervened variable from its causes and force its state.

    Every in-edge of an intervened variable is removed and its CPT is
    replaced by a parentless point mass; all other CPTs are untouched.
    Returns a new network.
    """
    intervention = _check_intervention(net, intervention)
    edges = [e for e in net.edges if e[1] not in intervention]
    cpts = []
    for name in net.names:
        if name in intervention:
            var = net.variable_map[name]
            row = tuple(
                1.0 if s == intervention[name] else 0.0 for s in var.states
            )
            cpts.append(CPT(name, (), {(): row}))
        else:
            cpts.append(net.cpts[name])
    decision = frozenset(e for e in net.decision_edges if e[1] not in intervention)
    return build_network(net.variables, edges, cpts, decision)


def interventional_query(
    net: BayesNet,
    target: str,
    intervention: Intervention,
    evidence: Evidence = {},
) -> CausalQueryResult:
    """Posterior of ``target`` under do(intervention), given evidence.

    Computed on the surgically mutilated network with the intervention
    entered as observation there; diagnostic reasoning from the
    intervened variables is thereby cut off.
    """
    intervention = _check_intervention(net, intervention)
    overlap = set(evidence) & set(intervention)
    if overlap:
        raise ValueError(
            "evidence and intervention overlap on " + ", ".join(sorted(overlap))
        )
    mutilated = do_surgery(net, intervention)
    removed = tuple(e for e in net.edges if e[1] in intervention)
    combined = {**evidence, **intervention}
    dist = posterior(mutilated, target, combined)
    return CausalQueryResult(
        distribution=dist,
        provenance=QueryProvenance(
            mode=QueryMode.INTERVENTIONAL,
            intervention=tuple(sorted(intervention.items())),
            removed_edges=removed,
        ),
    )


def backdoor_blocked(
    net: BayesNet, treatment: str, target: str, adjustment: set[str]
) -> bool:
    """True iff ``adjustment`` blocks every backdoor path treatment->target.

    Tested as d-separation in the graph with the treatment's outgoing
    edges removed. The adjustment set must not contain the treatment,
    the target, or any descendant of the treatment; that is reported,
    never silently repaired.
    """
    net.variable(treatment)
    net.variable(target)
    if treatment == target:
        raise ValueError("treatment and target must differ")
    adjustment = set(adjustment)
    for name in adjustment:
        net.variable(name)
    if treatment in adjustment or target in adjustment:
        raise InvalidAdjustmentSetError(
            "adjustment set must not contain the treatment or the target"
        )
    downstream = descendants(net, treatment)
    tainted = sorted(adjustment & downstream)
    if tainted:
        raise InvalidAdjustmentSetError(
            "adjustment set contains descendant(s) of the treatment: "
            + ", ".join(tainted)
        )
    parents = {n: net.parents(n) for n in net.names}
    children = {n: net.children(n) for n in net.names}
    for child in children[treatment]:
        parents[child] = tuple(p for p in parents[child] if p != treatment)
    children[treatment] = ()
    return _d_separated_maps(parents, children, {treatment}, {target}, adjustment)


def backdoor_adjust(
    net: BayesNet,
    target: str,
    treatment: str,
    forced_state: str,
    adjustment: set[str],
) -> Distribution:
    """Causal effect of treatment on target by backdoor adjustment.

    Sums the target posterior given the forced treatment and each joint
    state of the adjustment set, weighted by the set's prior. Refuses
    when the set leaves a backdoor path open: the equality to the
    interventional distribution holds only under blocking.
    """
    net.variable(treatment).state_index(forced_state)
    if not backdoor_blocked(net, treatment, target, adjustment):
        raise BackdoorOpenError(
            f"{{{', '.join(sorted(adjustment))}}} leaves a backdoor path open "
            f"between {treatment!r} and {target!r}"
        )
    if not adjustment:
        dist = posterior(net, target, {treatment: forced_state})
        return Distribution(target, dist.states, dist.probs)

    ordered = tuple(sorted(adjustment, key=net._decl_index.__getitem__))
    prior = joint_marginal(net, ordered)
    target_states = net.states(target)
    weights = [0.0] * len(target_states)
    for combo, p_z in prior.items():
        if p_z <= 0.0:
            continue
        evidence = {treatment: forced_state}
        evidence.update(dict(zip(ordered, combo)))
        term = posterior(net, target, evidence)
        for i, value in enumerate(term.probs):
            weights[i] += p_z * value
    total = sum(weights)
    return Distribution(target, target_states, tuple(w / total for w in weights))


def build_twin(
    net: BayesNet,
    intervention: Intervention,
    counterfactual_treatment_mode: bool = False,
) -> TwinNetwork:
    """Construct the paired actual/hypothetical network for a what-if query.

    The intervention targets and their descendants are duplicated into a
    hypothetical copy whose targets are parentless and forced; all other
    variables are shared background. With
    ``counterfactual_treatment_mode`` set, decision arcs into a
    treatment-role target are removed in the actual world as well, so the
    observed treatment choice cannot leak diagnostic weight back onto its
    causes while its effect is compared across worlds.
    """
    intervention = _check_intervention(net, intervention)
    duplicated: set[str] = set()
    for name in intervention:
        duplicated.add(name)
        duplicated |= descendants(net, name)
    shared = frozenset(n for n in net.names if n not in duplicated)

    taken = set(net.names)
    mapping: dict[str, str] = {}
    for name in net.names:
        if name not in duplicated:
            continue
        copy = f"{name}__hyp"
        while copy in taken:
            copy += "_"
        taken.add(copy)
        mapping[name] = copy

    removed_actual: list[tuple[str, str]] = []
    if counterfactual_treatment_mode:
        for name in intervention:
            if net.variable(name).role is Role.TREATMENT:
                for edge in net.decision_edges:
                    if edge[1] == name:
                        removed_actual.append(edge)
    removed_set = set(removed_actual)

    variables = list(net.variables)
    hyp_order = [n for n in net.names if n in duplicated]
    for name in hyp_order:
        origin = net.variable_map[name]
        variables.append(Variable(mapping[name], origin.states, origin.role))

    edges: list[tuple[str, str]] = [e for e in net.edges if e not in removed_set]
    decision: set[tuple[str, str]] = {
        e for e in net.decision_edges if e not in removed_set
    }
    cpts: list[CPT] = []
    for name in net.names:
        cpt = net.cpts[name]
        dropped = tuple(p for (p, c) in removed_actual if c == name)
        if dropped:
            cpts.append(_drop_parents_by_average(net, cpt, dropped))
        else:
            cpts.append(cpt)

    for name in hyp_order:
        copy = mapping[name]
        if name in intervention:
            var = net.variable_map[name]
            row = tuple(1.0 if s == intervention[name] else 0.0 for s in var.states)
            cpts.append(CPT(copy, (), {(): row}))
            continue
        cpt = net.cpts[name]
        new_parents = tuple(mapping.get(p, p) for p in cpt.parents)
        cpts.append(CPT(copy, new_parents, cpt.rows))
        for p in cpt.parents:
            edge = (mapping.get(p, p), copy)
            edges.append(edge)
            if (p, name) in net.decision_edges:
                decision.add(edge)

    twin_net = build_network(variables, edges, cpts, frozenset(decision))
    return TwinNetwork(
        net=twin_net,
        shared=shared,
        actual_to_hypothetical=mapping,
        intervention=intervention,
        counterfactual_treatment_mode=counterfactual_treatment_mode,
        removed_actual_edges=tuple(removed_actual),
    )


def _drop_parents_by_average(net: BayesNet, cpt: CPT, dropped: tuple[str, ...]) -> CPT:
    """Remove parents from a CPT by unweighted averaging over their states.

    Keeps the dependence on the remaining parents. The averaged values
    cancel under conditioning whenever the child is observed, which is
    the normal case for an actual-world treatment in a counterfactual
    query.
    """
    kept = tuple(p for p in cpt.parents if p not in dropped)
    kept_idx = [i for i, p in enumerate(cpt.parents) if p not in dropped]
    groups: dict[tuple[str, ...], list[tuple[float, ...]]] = {}
    for key, row in cpt.rows.items():
        reduced = tuple(key[i] for i in kept_idx)
        groups.setdefault(reduced, []).append(row)
    rows = {
        key: tuple(sum(col) / len(col) for col in zip(*stacked))
        for key, stacked in groups.items()
    }
    return CPT(cpt.child, kept, rows)


def counterfactual_query(
    net: BayesNet,
    actual_evidence: Evidence,
    intervention: Intervention,
    target: str,
) -> CausalQueryResult:
    """What the target would have looked like under a different intervention.

    Built on the twin network: actual evidence is entered in the actual
    world, the intervention is forced on the hypothetical copies, and the
    hypothetical copy of the target is read off. Degenerate cases
    collapse: with no evidence this is the interventional query; when the
    intervention matches the observed states, the worlds coincide and the
    factual posterior is returned.
    """
    intervention = _check_intervention(net, intervention)
    net.variable(target)
    for name, state in actual_evidence.items():
        net.variable(name).state_index(state)

    treatment_mode = any(
        net.variable(name).role is Role.TREATMENT for name in intervention
    )

    if not actual_evidence:
        base = interventional_query(net, target, intervention)
        return CausalQueryResult(
            distribution=base.distribution,
            provenance=QueryProvenance(
                mode=QueryMode.COUNTERFACTUAL,
                intervention=tuple(sorted(intervention.items())),
                removed_edges=base.provenance.removed_edges,
                notes=("no actual evidence: twin collapses to the interventional query",),
            ),
        )

    if all(actual_evidence.get(n) == s for n, s in intervention.items()):
        dist = posterior(net, target, actual_evidence)
        return CausalQueryResult(
            distribution=dist,
            provenance=QueryProvenance(
                mode=QueryMode.COUNTERFACTUAL,
                intervention=tuple(sorted(intervention.items())),
                notes=(
                    "intervention matches the observed states: worlds coincide, "
                    "factual posterior returned",
                ),
            ),
        )

    twin = build_twin(net, intervention, counterfactual_treatment_mode=treatment_mode)
    hyp_target = twin.hypothetical_name(target)
    dist = posterior(twin.net, hyp_target, actual_evidence)
    notes = [
        "evidence on descendants of the intervention reaches the hypothetical "
        "world only through shared non-descendants (no exogenous noise terms)",
    ]
    if twin.removed_actual_edges:
        notes.append(
            "decision arcs into the intervened treatment removed in both worlds"
        )
    return CausalQueryResult(
        distribution=Distribution(target, dist.states, dist.probs),
        provenance=QueryProvenance(
            mode=QueryMode.COUNTERFACTUAL,
            intervention=tuple(sorted(intervention.items())),
            removed_edges=twin.removed_actual_edges,
            notes=tuple(notes),
        ),
    )


def run_query(net: BayesNet, query: Query) -> dict[str, CausalQueryResult]:
    """Dispatch a query in any of the three modes, one result per target."""
    results: dict[str, CausalQueryResult] = {}
    for target in query.targets:
        if query.mode is QueryMode.OBSERVATIONAL:
            dist = posterior(net, target, query.evidence)
            results[target] = CausalQueryResult(
                distribution=dist,
                provenance=QueryProvenance(mode=QueryMode.OBSERVATIONAL),
            )
        elif query.mode is QueryMode.INTERVENTIONAL:
            results[target] = interventional_query(
                net, target, query.intervention, query.evidence
            )
        else:
            results[target] = counterfactual_query(
                net, query.evidence, query.intervention, target
            )
    return results

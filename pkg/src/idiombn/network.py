"""Discrete Bayesian network data model and pure graph algorithms.

A network is an immutable DAG of role-tagged discrete variables, one
conditional probability table per variable. Everything downstream
(inference, causal transforms, linting) builds on the primitives here:
validation, topological order, reachability, d-separation, and the
chain-rule joint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import (
    EmptyQuerySetError,
    IncompleteAssignmentError,
    InvalidNetworkError,
    OverlappingSetsError,
    UnknownStateError,
    UnknownVariableError,
)

# Single normalization tolerance, used at build time and by inference checks.
NORM_TOL = 1e-9


class Role(str, Enum):
    """Clinical-reasoning role of a variable.

    Symptom, Sign and MedicalTest are the observable-manifestation roles;
    Synthetic marks definition/synthesis nodes; Unclassified is allowed
    and exempts a variable from role-based lint rules.
    """

    CONDITION = "condition"
    SYMPTOM = "symptom"
    SIGN = "sign"
    MEDICAL_TEST = "medical_test"
    RISK_FACTOR = "risk_factor"
    PATHOGENIC_MECHANISM = "pathogenic_mechanism"
    TREATMENT = "treatment"
    COMORBIDITY = "comorbidity"
    COMPLICATION = "complication"
    RELIABILITY = "reliability"
    SYNTHETIC = "synthetic"
    UNCLASSIFIED = "unclassified"


# Observable consequences of a condition.
MANIFESTATION_ROLES = frozenset({Role.SYMPTOM, Role.SIGN, Role.MEDICAL_TEST})
# Condition-like roles (the primary condition or a comorbid one).
CONDITION_ROLES = frozenset({Role.CONDITION, Role.COMORBIDITY})

# A (partial or full) state assignment: variable name -> state label.
Assignment = Mapping[str, str]


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with >= 2 distinct states and a role."""

    name: str
    states: tuple[str, ...]
    role: Role = Role.UNCLASSIFIED

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownStateError(
                f"variable {self.name!r} has no state {state!r}"
            ) from None


@dataclass(frozen=True)
class CPT:
    """Conditional probability table for one child variable.

    ``rows`` maps a full parent-state assignment (tuple aligned with
    ``parents``) to a probability vector over the child's states. A
    parentless variable has the single key ``()``.
    """

    child: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], tuple[float, ...]]

    def row(self, parent_states: tuple[str, ...]) -> tuple[float, ...]:
        return self.rows[parent_states]


@dataclass(frozen=True)
class NetworkIssue:
    """One validation violation found while building a network."""

    code: str
    message: str
    nodes: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class BayesNet:
    """Validated, immutable discrete Bayesian network.

    Construct through :func:`build_network`; direct instantiation skips
    validation. Safe to share across threads: all queries are pure reads.
    """

    variables: tuple[Variable, ...]
    edges: tuple[tuple[str, str], ...]
    cpts: Mapping[str, CPT]
    decision_edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    @cached_property
    def variable_map(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _decl_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {v.name: [] for v in self.variables}
        for parent, child in self.edges:
            out[parent].append(child)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        # Parent order follows the CPT declaration, which validation pins
        # to the in-edge set.
        return {name: self.cpts[name].parents for name in self.names}

    def variable(self, name: str) -> Variable:
        try:
            return self.variable_map[name]
        except KeyError:
            raise UnknownVariableError(f"no variable named {name!r}") from None

    def parents(self, name: str) -> tuple[str, ...]:
        self.variable(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.variable(name)
        return self._children[name]

    def states(self, name: str) -> tuple[str, ...]:
        return self.variable(name).states

    def has_edge(self, parent: str, child: str) -> bool:
        return (parent, child) in set(self.edges)


def build_network(
    variables: Sequence[Variable],
    edges: Iterable[tuple[str, str]],
    cpts: Iterable[CPT],
    decision_edges: Iterable[tuple[str, str]] = (),
) -> BayesNet:
    """Validate and assemble a network.

    Collects every violation before failing: the raised
    :class:`InvalidNetworkError` carries the complete issue list, so a
    caller reviewing a model gets all problems in one pass.
    """
    issues = validate_network(variables, edges, cpts, decision_edges)
    if issues:
        raise InvalidNetworkError(issues)

    frozen_vars = tuple(
        Variable(v.name, tuple(v.states), Role(v.role)) for v in variables
    )
    frozen_cpts = {
        c.child: CPT(c.child, tuple(c.parents), {tuple(k): tuple(r) for k, r in c.rows.items()})
        for c in cpts
    }
    return BayesNet(
        variables=frozen_vars,
        edges=tuple((p, c) for p, c in edges),
        cpts=frozen_cpts,
        decision_edges=frozenset(tuple(e) for e in decision_edges),
    )


def validate_network(
    variables: Sequence[Variable],
    edges: Iterable[tuple[str, str]],
    cpts: Iterable[CPT],
    decision_edges: Iterable[tuple[str, str]] = (),
) -> list[NetworkIssue]:
    """Return every violation of the network invariants (empty if valid)."""
    issues: list[NetworkIssue] = []
    edges = [tuple(e) for e in edges]
    decision_edges = [tuple(e) for e in decision_edges]
    cpts = list(cpts)

    by_name: dict[str, Variable] = {}
    for v in variables:
        if not v.name:
            issues.append(NetworkIssue("BadVariable", "variable with empty name"))
            continue
        if v.name in by_name:
            issues.append(
                NetworkIssue(
                    "DuplicateVariable",
                    f"variable {v.name!r} declared more than once",
                    nodes=(v.name,),
                )
            )
            continue
        if len(v.states) < 2:
            issues.append(
                NetworkIssue(
                    "BadVariable",
                    f"variable {v.name!r} needs at least 2 states",
                    nodes=(v.name,),
                )
            )
        if len(set(v.states)) != len(v.states):
            issues.append(
                NetworkIssue(
                    "BadVariable",
                    f"variable {v.name!r} has duplicate state labels",
                    nodes=(v.name,),
                )
            )
        by_name[v.name] = v

    seen_edges: set[tuple[str, str]] = set()
    adjacency: dict[str, list[str]] = {n: [] for n in by_name}
    in_parents: dict[str, list[str]] = {n: [] for n in by_name}
    for parent, child in edges:
        missing = [n for n in (parent, child) if n not in by_name]
        if missing:
            issues.append(
                NetworkIssue(
                    "UnknownVariable",
                    f"edge {parent}->{child} names unknown variable(s) "
                    + ", ".join(repr(m) for m in missing),
                    nodes=tuple(missing),
                    edges=((parent, child),),
                )
            )
            continue
        if parent == child:
            issues.append(
                NetworkIssue(
                    "SelfLoop",
                    f"self-loop on {parent!r}",
                    nodes=(parent,),
                    edges=((parent, child),),
                )
            )
            continue
        if (parent, child) in seen_edges:
            issues.append(
                NetworkIssue(
                    "DuplicateEdge",
                    f"duplicate edge {parent}->{child}",
                    edges=((parent, child),),
                )
            )
            continue
        seen_edges.add((parent, child))
        adjacency[parent].append(child)
        in_parents[child].append(parent)

    cycle = _find_cycle(list(by_name), adjacency)
    if cycle:
        issues.append(
            NetworkIssue(
                "CycleDetected",
                "cycle: " + " -> ".join(cycle + cycle[:1]),
                nodes=tuple(cycle),
            )
        )

    for parent, child in decision_edges:
        if (parent, child) not in seen_edges:
            issues.append(
                NetworkIssue(
                    "InvalidDecisionEdge",
                    f"decision edge {parent}=>{child} is not an edge of the network",
                    edges=((parent, child),),
                )
            )
        elif child in by_name and by_name[child].role is not Role.TREATMENT:
            issues.append(
                NetworkIssue(
                    "InvalidDecisionEdge",
                    f"decision edge {parent}=>{child} points at a non-treatment "
                    f"variable (role {by_name[child].role.value})",
                    edges=((parent, child),),
                )
            )

    cpt_by_child: dict[str, CPT] = {}
    for c in cpts:
        if c.child not in by_name:
            issues.append(
                NetworkIssue(
                    "UnknownVariable",
                    f"CPT for unknown variable {c.child!r}",
                    nodes=(c.child,),
                )
            )
            continue
        if c.child in cpt_by_child:
            issues.append(
                NetworkIssue(
                    "DuplicateCpt",
                    f"more than one CPT for {c.child!r}",
                    nodes=(c.child,),
                )
            )
            continue
        cpt_by_child[c.child] = c

    for name, var in by_name.items():
        cpt = cpt_by_child.get(name)
        if cpt is None:
            issues.append(
                NetworkIssue("MissingCpt", f"no CPT for variable {name!r}", nodes=(name,))
            )
            continue
        if set(cpt.parents) != set(in_parents.get(name, ())) or len(
            set(cpt.parents)
        ) != len(cpt.parents):
            issues.append(
                NetworkIssue(
                    "CptMismatch",
                    f"CPT for {name!r} conditions on ({', '.join(cpt.parents)}) "
                    f"but in-edges give ({', '.join(in_parents.get(name, ()))})",
                    nodes=(name,),
                )
            )
            continue
        unknown_parent = [p for p in cpt.parents if p not in by_name]
        if unknown_parent:
            continue  # already reported via edges
        issues.extend(_validate_rows(var, cpt, by_name))

    return issues


def _validate_rows(var: Variable, cpt: CPT, by_name: dict[str, Variable]) -> list[NetworkIssue]:
    issues: list[NetworkIssue] = []
    expected = set(_parent_space(cpt.parents, by_name))
    seen: set[tuple[str, ...]] = set()
    for key, row in cpt.rows.items():
        key = tuple(key)
        if key not in expected:
            issues.append(
                NetworkIssue(
                    "UnknownRow",
                    f"CPT for {var.name!r} has row({', '.join(key)}) which matches "
                    "no parent-state combination",
                    nodes=(var.name,),
                )
            )
            continue
        seen.add(key)
        if len(row) != len(var.states):
            issues.append(
                NetworkIssue(
                    "BadProbability",
                    f"CPT row({', '.join(key)}) for {var.name!r} has {len(row)} "
                    f"entries, expected {len(var.states)}",
                    nodes=(var.name,),
                )
            )
            continue
        if any(not (0.0 <= p <= 1.0) for p in row):
            issues.append(
                NetworkIssue(
                    "BadProbability",
                    f"CPT row({', '.join(key)}) for {var.name!r} has an entry "
                    "outside [0, 1]",
                    nodes=(var.name,),
                )
            )
            continue
        total = sum(row)
        if abs(total - 1.0) > NORM_TOL:
            issues.append(
                NetworkIssue(
                    "RowNotNormalized",
                    f"CPT row({', '.join(key)}) for {var.name!r} sums to {total:.9g}",
                    nodes=(var.name,),
                )
            )
    for key in sorted(expected - seen):
        issues.append(
            NetworkIssue(
                "MissingRow",
                f"CPT for {var.name!r} is missing row({', '.join(key)})",
                nodes=(var.name,),
            )
        )
    return issues


def _parent_space(
    parents: Sequence[str], by_name: Mapping[str, Variable]
) -> list[tuple[str, ...]]:
    combos: list[tuple[str, ...]] = [()]
    for p in parents:
        combos = [c + (s,) for c in combos for s in by_name[p].states]
    return combos


def _find_cycle(nodes: list[str], adjacency: dict[str, list[str]]) -> list[str]:
    """Return one directed cycle as an ordered node list, or [] if acyclic."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    for start in nodes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path: list[str] = []
        while stack:
            node, idx = stack[-1]
            if idx == 0:
                color[node] = GRAY
                path.append(node)
            succs = adjacency.get(node, [])
            if idx < len(succs):
                stack[-1] = (node, idx + 1)
                nxt = succs[idx]
                if color[nxt] == GRAY:
                    return path[path.index(nxt):]
                if color[nxt] == WHITE:
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return []


def topological_order(net: BayesNet) -> list[str]:
    """Variable names with every parent before every child.

    Ties broken by declaration order, so the result is deterministic.
    """
    indegree = {n: len(net.parents(n)) for n in net.names}
    ready = [n for n in net.names if indegree[n] == 0]
    order: list[str] = []
    while ready:
        # names list is in declaration order; ready preserves it
        node = ready.pop(0)
        order.append(node)
        newly = []
        for child in net.children(node):
            indegree[child] -= 1
            if indegree[child] == 0:
                newly.append(child)
        newly.sort(key=net._decl_index.__getitem__)
        ready = sorted(ready + newly, key=net._decl_index.__getitem__)
    return order


def descendants(net: BayesNet, name: str) -> set[str]:
    """Transitive successors of ``name`` (excluding itself)."""
    net.variable(name)
    seen: set[str] = set()
    stack = [name]
    while stack:
        for child in net.children(stack.pop()):
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen


def ancestors(net: BayesNet, name: str) -> set[str]:
    """Transitive predecessors of ``name`` (excluding itself)."""
    net.variable(name)
    seen: set[str] = set()
    stack = [name]
    while stack:
        for parent in net.parents(stack.pop()):
            if parent not in seen:
                seen.add(parent)
                stack.append(parent)
    return seen


def d_separated(net: BayesNet, x: set[str], y: set[str], z: set[str]) -> bool:
    """True iff every path between ``x`` and ``y`` is blocked given ``z``.

    Serial and diverging nodes block when observed; a converging node is
    active when it or any of its descendants is observed. Linear-time
    reachability over (node, arrival-direction) pairs.
    """
    x, y, z = set(x), set(y), set(z)
    if not x or not y:
        raise EmptyQuerySetError("query sets X and Y must be non-empty")
    if x & y or x & z or y & z:
        raise OverlappingSetsError("X, Y, Z must be pairwise disjoint")
    for name in x | y | z:
        net.variable(name)
    parents = {n: net.parents(n) for n in net.names}
    children = {n: net.children(n) for n in net.names}
    return _d_separated_maps(parents, children, x, y, z)


def _d_separated_maps(
    parents: Mapping[str, tuple[str, ...]],
    children: Mapping[str, tuple[str, ...]],
    x: set[str],
    y: set[str],
    z: set[str],
) -> bool:
    """Separation test over explicit adjacency maps (no CPTs needed)."""
    # z together with all its ancestors: a collider is active iff in here.
    anc_z = set(z)
    stack = list(z)
    while stack:
        for p in parents[stack.pop()]:
            if p not in anc_z:
                anc_z.add(p)
                stack.append(p)

    UP, DOWN = 0, 1  # arrived from a child / from a parent
    visited: set[tuple[str, int]] = set()
    reachable: set[str] = set()
    queue: deque[tuple[str, int]] = deque((s, UP) for s in x)
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in z:
            reachable.add(node)
        if direction == UP and node not in z:
            for p in parents[node]:
                queue.append((p, UP))
            for c in children[node]:
                queue.append((c, DOWN))
        elif direction == DOWN:
            if node not in z:
                for c in children[node]:
                    queue.append((c, DOWN))
            if node in anc_z:
                for p in parents[node]:
                    queue.append((p, UP))
    return not (reachable & y)


def joint_probability(net: BayesNet, assignment: Assignment) -> float:
    """Chain-rule joint of one full assignment."""
    for name in assignment:
        net.variable(name)
    missing = [n for n in net.names if n not in assignment]
    if missing:
        raise IncompleteAssignmentError(
            "assignment missing " + ", ".join(repr(m) for m in missing)
        )
    prob = 1.0
    for name in net.names:
        var = net.variable_map[name]
        cpt = net.cpts[name]
        key = tuple(assignment[p] for p in cpt.parents)
        prob *= cpt.rows[key][var.state_index(assignment[name])]
        if prob == 0.0:
            return 0.0
    return prob

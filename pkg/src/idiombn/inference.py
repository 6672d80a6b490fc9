"""Exact observational inference.

Two routes to every posterior: :func:`enumerate_posterior` sums the
chain-rule joint over all completions and is the independent oracle;
:func:`posterior` runs variable elimination with a min-fill ordering and
must agree with the oracle to 1e-9 wherever enumeration is feasible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    ImpossibleEvidenceError,
    TooLargeError,
    UnknownStateError,
)
from .network import Assignment, BayesNet, joint_probability

# Evidence with marginal probability below this is treated as impossible;
# distinguishes a true contradiction from round-off.
EVIDENCE_EPS = 1e-12

# Size guard for the enumeration oracle.
ENUM_MAX_VARS = 20

Evidence = Assignment


@dataclass(frozen=True)
class Distribution:
    """Normalized probabilities over one variable's states."""

    variable: str
    states: tuple[str, ...]
    probs: tuple[float, ...]

    def prob(self, state: str) -> float:
        try:
            return self.probs[self.states.index(state)]
        except ValueError:
            raise UnknownStateError(
                f"{self.variable!r} has no state {state!r}"
            ) from None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.states, self.probs))

    def max_delta(self, other: "Distribution") -> float:
        """Largest per-state absolute difference against another
        distribution over the same states."""
        return max(abs(a - b) for a, b in zip(self.probs, other.probs))


def _check_evidence(net: BayesNet, evidence: Evidence) -> dict[str, str]:
    checked = {}
    for name, state in evidence.items():
        var = net.variable(name)
        var.state_index(state)
        checked[name] = state
    return checked


def _normalized(variable: str, states: tuple[str, ...], weights: list[float]) -> Distribution:
    total = sum(weights)
    if total < EVIDENCE_EPS:
        raise ImpossibleEvidenceError(
            f"evidence has probability {total:.3g}, below {EVIDENCE_EPS:g}"
        )
    return Distribution(variable, states, tuple(w / total for w in weights))


def enumerate_posterior(net: BayesNet, target: str, evidence: Evidence = {}) -> Distribution:
    """Posterior of ``target`` by brute-force joint enumeration.

    This is the oracle every other inference result is checked against;
    it never shares code with variable elimination. Guarded to networks
    of at most 20 variables.
    """
    if len(net.variables) > ENUM_MAX_VARS:
        raise TooLargeError(
            f"enumeration limited to {ENUM_MAX_VARS} variables, "
            f"network has {len(net.variables)}"
        )
    evidence = _check_evidence(net, evidence)
    target_var = net.variable(target)

    free = [v for v in net.variables if v.name not in evidence]
    weights = [0.0] * len(target_var.states)
    for combo in itertools.product(*(v.states for v in free)):
        assignment = dict(evidence)
        assignment.update({v.name: s for v, s in zip(free, combo)})
        p = joint_probability(net, assignment)
        if p:
            weights[target_var.state_index(assignment[target])] += p
    return _normalized(target, target_var.states, weights)


def posterior(net: BayesNet, target: str, evidence: Evidence = {}) -> Distribution:
    """Exact posterior of ``target`` given hard evidence.

    Variable elimination; elimination order chosen by the min-fill
    heuristic with declaration-order tie-breaks, so results are
    deterministic across runs and platforms.
    """
    evidence = _check_evidence(net, evidence)
    target_var = net.variable(target)

    factors, constant = _evidence_reduced_factors(net, evidence)
    keep = {target} - set(evidence)
    order = _min_fill_order(net, factors, keep)
    for name in order:
        touching = [f for f in factors if name in f.vars]
        if not touching:
            continue
        factors = [f for f in factors if name not in f.vars]
        product = touching[0]
        for f in touching[1:]:
            product = _multiply(product, f, net)
        factors.append(_sum_out(product, name))

    if target in evidence:
        # Point mass on the observed state, once the evidence itself is
        # confirmed possible.
        z = constant
        for f in factors:
            z *= sum(f.table.values())
        if z < EVIDENCE_EPS:
            raise ImpossibleEvidenceError(
                f"evidence has probability {z:.3g}, below {EVIDENCE_EPS:g}"
            )
        probs = [0.0] * len(target_var.states)
        probs[target_var.state_index(evidence[target])] = 1.0
        return Distribution(target, target_var.states, tuple(probs))

    result = _Factor((target,), {(s,): 1.0 for s in target_var.states})
    for f in factors:
        result = _multiply(result, f, net)
    weights = [result.table.get((s,), 0.0) for s in target_var.states]
    # The scalar constant cancels under normalization; it only decides
    # whether the evidence is possible at all.
    if constant * sum(weights) < EVIDENCE_EPS:
        raise ImpossibleEvidenceError(
            f"evidence has probability {constant * sum(weights):.3g}, "
            f"below {EVIDENCE_EPS:g}"
        )
    return _normalized(target, target_var.states, weights)


def batch_query(
    net: BayesNet, targets: Iterable[str], evidence: Evidence = {}
) -> dict[str, Distribution]:
    """Posterior for each target; identical to per-target calls."""
    return {t: posterior(net, t, evidence) for t in targets}


def joint_marginal(
    net: BayesNet, names: tuple[str, ...], evidence: Evidence = {}
) -> dict[tuple[str, ...], float]:
    """Normalized joint over ``names`` given evidence, by elimination.

    Keys are state tuples aligned with ``names``.
    """
    evidence = _check_evidence(net, evidence)
    keep = {n for n in names if n not in evidence}
    for n in names:
        net.variable(n)
    factors, constant = _evidence_reduced_factors(net, evidence)
    for name in _min_fill_order(net, factors, keep):
        touching = [f for f in factors if name in f.vars]
        if not touching:
            continue
        factors = [f for f in factors if name not in f.vars]
        product = touching[0]
        for f in touching[1:]:
            product = _multiply(product, f, net)
        factors.append(_sum_out(product, name))

    result = _Factor((), {(): 1.0})
    for f in factors:
        result = _multiply(result, f, net)
    total = sum(result.table.values())
    if constant * total < EVIDENCE_EPS:
        raise ImpossibleEvidenceError(
            f"evidence has probability {constant * total:.3g}, below {EVIDENCE_EPS:g}"
        )
    out: dict[tuple[str, ...], float] = {}
    spaces = [net.variable_map[n].states for n in names]
    for combo in itertools.product(*spaces):
        if any(n in evidence and evidence[n] != s for n, s in zip(names, combo)):
            out[combo] = 0.0
            continue
        by_name = dict(zip(names, combo))
        key = tuple(by_name[v] for v in result.vars)
        out[combo] = result.table.get(key, 0.0) / total
    return out


# ---------------------------------------------------------------------------
# Factor machinery (desk-scale: state-label-keyed tables)
# ---------------------------------------------------------------------------


class _Factor:
    __slots__ = ("vars", "table")

    def __init__(self, vars: tuple[str, ...], table: dict[tuple[str, ...], float]):
        self.vars = vars
        self.table = table


def _evidence_reduced_factors(
    net: BayesNet, evidence: Mapping[str, str]
) -> tuple[list[_Factor], float]:
    """One factor per CPT, with evidence variables sliced out.

    Fully-instantiated factors collapse into the returned scalar.
    """
    factors: list[_Factor] = []
    constant = 1.0
    for name in net.names:
        cpt = net.cpts[name]
        scope = cpt.parents + (name,)
        states = net.variable_map[name].states
        kept = tuple(v for v in scope if v not in evidence)
        table: dict[tuple[str, ...], float] = {}
        for key, row in cpt.rows.items():
            if any(p in evidence and evidence[p] != s for p, s in zip(cpt.parents, key)):
                continue
            for child_state, p in zip(states, row):
                if name in evidence and evidence[name] != child_state:
                    continue
                full = dict(zip(scope, key + (child_state,)))
                reduced = tuple(full[v] for v in kept)
                table[reduced] = p
        if kept:
            factors.append(_Factor(kept, table))
        else:
            constant *= table[()]
    return factors, constant


def _multiply(f: _Factor, g: _Factor, net: BayesNet) -> _Factor:
    merged = f.vars + tuple(v for v in g.vars if v not in f.vars)
    f_idx = [merged.index(v) for v in f.vars]
    g_idx = [merged.index(v) for v in g.vars]
    table: dict[tuple[str, ...], float] = {}
    spaces = [net.variable_map[v].states for v in merged]
    for combo in itertools.product(*spaces):
        fv = f.table.get(tuple(combo[i] for i in f_idx), 0.0)
        if fv == 0.0:
            continue
        gv = g.table.get(tuple(combo[i] for i in g_idx), 0.0)
        if gv == 0.0:
            continue
        table[combo] = fv * gv
    return _Factor(merged, table)


def _sum_out(f: _Factor, name: str) -> _Factor:
    pos = f.vars.index(name)
    kept = f.vars[:pos] + f.vars[pos + 1:]
    table: dict[tuple[str, ...], float] = {}
    for key, value in f.table.items():
        reduced = key[:pos] + key[pos + 1:]
        table[reduced] = table.get(reduced, 0.0) + value
    return _Factor(kept, table)


def _min_fill_order(net: BayesNet, factors: list[_Factor], keep: set[str]) -> list[str]:
    """Elimination order minimizing fill-in, declaration order on ties."""
    adjacency: dict[str, set[str]] = {}
    for f in factors:
        for v in f.vars:
            adjacency.setdefault(v, set())
        for a, b in itertools.combinations(f.vars, 2):
            adjacency[a].add(b)
            adjacency[b].add(a)
    to_eliminate = {v for v in adjacency if v not in keep}
    decl = net._decl_index

    def fill_count(v: str) -> int:
        neighbors = [n for n in adjacency[v] if n in adjacency]
        return sum(
            1
            for a, b in itertools.combinations(neighbors, 2)
            if b not in adjacency[a]
        )

    order: list[str] = []
    while to_eliminate:
        best = min(to_eliminate, key=lambda v: (fill_count(v), decl[v]))
        neighbors = list(adjacency[best])
        for a, b in itertools.combinations(neighbors, 2):
            adjacency[a].add(b)
            adjacency[b].add(a)
        for n in neighbors:
            adjacency[n].discard(best)
        del adjacency[best]
        to_eliminate.remove(best)
        order.append(best)
    return order

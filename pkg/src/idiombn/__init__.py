"""Discrete Bayesian networks from clinical idiom templates.

Build networks from reusable idiom templates or from ``.idbn`` model
files, lint their structure against idiomatic direction rules, and
answer observational, interventional, and counterfactual queries with
exact inference.
"""

__version__ = "0.1.0"

from .network import (
    CPT,
    Assignment,
    BayesNet,
    NetworkIssue,
    Role,
    Variable,
    ancestors,
    build_network,
    d_separated,
    descendants,
    joint_probability,
    topological_order,
    validate_network,
)
from .idioms import (
    Fragment,
    IdiomInstance,
    IdiomTemplate,
    TemplateId,
    catalog,
    compose,
    instantiate,
    suggest_idiom,
)
from .inference import (
    Distribution,
    batch_query,
    enumerate_posterior,
    joint_marginal,
    posterior,
)
from .causal import (
    CausalQueryResult,
    Query,
    QueryMode,
    TwinNetwork,
    backdoor_adjust,
    backdoor_blocked,
    build_twin,
    counterfactual_query,
    do_surgery,
    interventional_query,
    run_query,
)
from .lint import CoverageReport, Finding, LintConfig, LintReport, coverage, lint
from .modelfile import (
    Diagnostic,
    LoadResult,
    ModelDocument,
    document_from_network,
    document_to_json,
    elaborate,
    export_dot,
    load_model,
    parse,
    serialize,
)
from .fixtures import fixture_ids, fixture_source, load_fixture

__all__ = [
    "CPT",
    "Assignment",
    "BayesNet",
    "CausalQueryResult",
    "CoverageReport",
    "Diagnostic",
    "Distribution",
    "Finding",
    "Fragment",
    "IdiomInstance",
    "IdiomTemplate",
    "LintConfig",
    "LintReport",
    "LoadResult",
    "ModelDocument",
    "NetworkIssue",
    "Query",
    "QueryMode",
    "Role",
    "TemplateId",
    "TwinNetwork",
    "Variable",
    "ancestors",
    "backdoor_adjust",
    "backdoor_blocked",
    "batch_query",
    "build_network",
    "build_twin",
    "catalog",
    "compose",
    "counterfactual_query",
    "coverage",
    "d_separated",
    "descendants",
    "do_surgery",
    "document_from_network",
    "document_to_json",
    "elaborate",
    "enumerate_posterior",
    "export_dot",
    "fixture_ids",
    "fixture_source",
    "instantiate",
    "interventional_query",
    "joint_marginal",
    "joint_probability",
    "lint",
    "load_fixture",
    "load_model",
    "parse",
    "posterior",
    "run_query",
    "serialize",
    "suggest_idiom",
    "topological_order",
    "validate_network",
]

"""HTTP service over the toolkit.

Every endpoint takes model source text and returns JSON; the underlying
library is pure, so one process serves concurrent clients safely. Run
with ``python -m idiombn.service`` or mount ``app`` in any ASGI server.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .causal import QueryMode, counterfactual_query, interventional_query
from .errors import (
    IdiomBNError,
    ImpossibleEvidenceError,
    TooLargeError,
    UnknownFixtureError,
)
from .idioms import suggest_idiom
from .inference import posterior
from .lint import coverage, lint
from .modelfile import LoadResult, document_to_json, export_dot, load_model


class DiagnosticModel(BaseModel):
    severity: str
    line: int
    column: int
    code: str
    message: str


class FindingModel(BaseModel):
    rule: str
    severity: str
    nodes: list[str]
    edges: list[list[str]]
    message: str
    anchor: str


class CheckRequest(BaseModel):
    source: str


class CheckResponse(BaseModel):
    ok: bool
    diagnostics: list[DiagnosticModel]
    findings: list[FindingModel]
    summary: dict[str, int]


class QueryRequest(BaseModel):
    source: str
    targets: list[str] = Field(min_length=1)
    evidence: dict[str, str] = Field(default_factory=dict)
    do: dict[str, str] = Field(default_factory=dict)
    counterfactual: bool = False


class QueryResponse(BaseModel):
    mode: str
    distributions: dict[str, dict[str, float]]
    notes: list[str] = Field(default_factory=list)


class ClassifyRequest(BaseModel):
    source: str


class GroupSuggestion(BaseModel):
    variables: list[str]
    ranking: list[str]


class ClassifyResponse(BaseModel):
    fully_covered: bool
    groups: list[GroupSuggestion]


class ExportRequest(BaseModel):
    source: str
    format: str = Field(pattern="^(dot|json)$")


class ExportResponse(BaseModel):
    format: str
    output: str


class FixtureSummary(BaseModel):
    id: str
    description: str


class FixtureDetail(BaseModel):
    id: str
    description: str
    source: str


def _diagnostics(result: LoadResult) -> list[DiagnosticModel]:
    return [
        DiagnosticModel(
            severity=d.severity,
            line=d.line,
            column=d.column,
            code=d.code,
            message=d.message,
        )
        for d in result.diagnostics
    ]


def _load_or_400(source: str) -> LoadResult:
    result = load_model(source)
    if result.net is None:
        raise HTTPException(
            status_code=400,
            detail={
                "message": "model does not elaborate",
                "diagnostics": [d.model_dump() for d in _diagnostics(result)],
            },
        )
    return result


def create_app() -> FastAPI:
    app = FastAPI(
        title="idiombn",
        version=__version__,
        description="Idiom-based Bayesian network toolkit: check, query, "
        "classify, and export .idbn models",
    )

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/check", response_model=CheckResponse)
    def check(request: CheckRequest) -> CheckResponse:
        result = load_model(request.source)
        if result.net is None:
            return CheckResponse(
                ok=False,
                diagnostics=_diagnostics(result),
                findings=[],
                summary={"errors": 0, "warnings": 0},
            )
        report = lint(result.net, idiom_instances=result.instances)
        findings = [
            FindingModel(
                rule=f.rule,
                severity=f.severity,
                nodes=list(f.nodes),
                edges=[list(e) for e in f.edges],
                message=f.message,
                anchor=f.anchor,
            )
            for f in report.findings
        ]
        ok = result.ok and not report.errors
        return CheckResponse(
            ok=ok,
            diagnostics=_diagnostics(result),
            findings=findings,
            summary=report.summary(),
        )

    @app.post("/query", response_model=QueryResponse)
    def query(request: QueryRequest) -> QueryResponse:
        if request.counterfactual and not request.do:
            raise HTTPException(
                status_code=422, detail="counterfactual queries require do"
            )
        result = _load_or_400(request.source)
        if request.do and request.counterfactual:
            mode = QueryMode.COUNTERFACTUAL
        elif request.do:
            mode = QueryMode.INTERVENTIONAL
        else:
            mode = QueryMode.OBSERVATIONAL

        distributions: dict[str, dict[str, float]] = {}
        notes: list[str] = []
        try:
            for target in request.targets:
                if mode is QueryMode.OBSERVATIONAL:
                    dist = posterior(result.net, target, request.evidence)
                elif mode is QueryMode.INTERVENTIONAL:
                    dist = interventional_query(
                        result.net, target, request.do, request.evidence
                    ).distribution
                else:
                    outcome = counterfactual_query(
                        result.net, request.evidence, request.do, target
                    )
                    dist = outcome.distribution
                    for note in outcome.provenance.notes:
                        if note not in notes:
                            notes.append(note)
                distributions[target] = dict(zip(dist.states, dist.probs))
        except (ImpossibleEvidenceError, TooLargeError) as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except (IdiomBNError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return QueryResponse(mode=mode.value, distributions=distributions, notes=notes)

    @app.post("/classify", response_model=ClassifyResponse)
    def classify(request: ClassifyRequest) -> ClassifyResponse:
        result = _load_or_400(request.source)
        net = result.net
        report = coverage(net, result.instances)
        if not report.uncovered:
            return ClassifyResponse(fully_covered=True, groups=[])
        neighbors: dict[str, set[str]] = {}
        for parent, child in report.uncovered:
            neighbors.setdefault(parent, set()).add(child)
            neighbors.setdefault(child, set()).add(parent)
        decl = net._decl_index
        seen: set[str] = set()
        groups: list[GroupSuggestion] = []
        for start in sorted(neighbors, key=decl.__getitem__):
            if start in seen:
                continue
            component = {start}
            queue = [start]
            while queue:
                for other in neighbors[queue.pop()]:
                    if other not in component:
                        component.add(other)
                        queue.append(other)
            seen |= component
            ordered = sorted(component, key=decl.__getitem__)
            ranking = suggest_idiom(
                [(name, net.variable(name).role) for name in ordered]
            )
            groups.append(
                GroupSuggestion(
                    variables=ordered, ranking=[t.value for t in ranking]
                )
            )
        return ClassifyResponse(fully_covered=False, groups=groups)

    @app.post("/export", response_model=ExportResponse)
    def export(request: ExportRequest) -> ExportResponse:
        result = _load_or_400(request.source)
        if request.format == "dot":
            output = export_dot(result.net, result.instances)
        else:
            output = document_to_json(result.document)
        return ExportResponse(format=request.format, output=output)

    @app.get("/fixtures", response_model=list[FixtureSummary])
    def fixtures() -> list[FixtureSummary]:
        from .fixtures import fixture_ids, fixture_spec

        return [
            FixtureSummary(id=f, description=fixture_spec(f).description)
            for f in fixture_ids()
        ]

    @app.get("/fixtures/{fixture_id}", response_model=FixtureDetail)
    def fixture(fixture_id: str) -> FixtureDetail:
        from .fixtures import fixture_source, fixture_spec

        try:
            spec = fixture_spec(fixture_id)
            source = fixture_source(fixture_id)
        except UnknownFixtureError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return FixtureDetail(
            id=spec.id, description=spec.description, source=source
        )

    return app


app = create_app()


def main() -> None:
    import uvicorn

    uvicorn.run("idiombn.service:app", host="127.0.0.1", port=8000)


if __name__ == "__main__":
    main()

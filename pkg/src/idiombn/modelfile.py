"""The ``.idbn`` model description language.

A model file declares variables with roles and states, idiom instances,
raw edges (``->``, or ``=>`` for decision arcs), and CPTs. The parser
never stops at the first problem: every diagnostic is collected with its
source position, so a model file gets a complete review in one run.

Canonical serialization sorts declarations (variables, idioms, edges,
CPTs, each alphabetically), renders numbers with up to 12 significant
digits, and re-emits the leading comment block, so a canonical file is
byte-stable under parse/serialize round trips.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Sequence

from .errors import (
    ArityViolationError,
    CompositionCycleError,
    InvalidNetworkError,
    MissingSlotError,
    UnknownTemplateError,
)
from .idioms import (
    Fragment,
    IdiomInstance,
    compose,
    instantiate,
    normalize_bindings,
    template,
)
from .network import NORM_TOL, BayesNet, CPT, Role, Variable, build_network

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    column: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity} [{self.code}] {self.message}"


@dataclass(frozen=True)
class VariableDecl:
    name: str
    states: tuple[str, ...]
    role: Role
    line: int
    column: int


@dataclass(frozen=True)
class IdiomDecl:
    template: str
    name: str
    bindings: tuple[tuple[str, tuple[str, ...]], ...]  # slot -> names, file order
    line: int
    column: int


@dataclass(frozen=True)
class EdgeDecl:
    parent: str
    child: str
    decision: bool
    line: int
    column: int


@dataclass(frozen=True)
class CptRowDecl:
    key: tuple[str, ...]
    values: tuple[float, ...]
    line: int
    column: int


@dataclass(frozen=True)
class CptDecl:
    child: str
    parents: tuple[str, ...]
    has_given: bool
    rows: tuple[CptRowDecl, ...]
    line: int
    column: int


@dataclass(frozen=True)
class ModelDocument:
    """Declarations in file order, plus the leading comment block."""

    header: tuple[str, ...] = ()
    variables: tuple[VariableDecl, ...] = ()
    idioms: tuple[IdiomDecl, ...] = ()
    edges: tuple[EdgeDecl, ...] = ()
    cpts: tuple[CptDecl, ...] = ()

    def is_empty(self) -> bool:
        return not (self.header or self.variables or self.idioms or self.edges or self.cpts)


@dataclass
class ParseResult:
    document: ModelDocument
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not any(d.severity == ERROR for d in self.diagnostics)


@dataclass
class Elaboration:
    net: Optional[BayesNet]
    instances: tuple[IdiomInstance, ...]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.net is not None and not any(
            d.severity == ERROR for d in self.diagnostics
        )


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_PUNCT = "{}()[]:;,"
_KEYWORDS = {"variable", "idiom", "edge", "cpt"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "number", a punctuation literal, "->", "=>", "eof"
    value: str
    line: int
    column: int


def _lex(text: str, diagnostics: list[Diagnostic]) -> tuple[list[_Token], list[str]]:
    text = text.replace("\r\n", "\n")
    tokens: list[_Token] = []
    header: list[str] = []
    header_open = True
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            end = text.find("\n", i)
            end = n if end == -1 else end
            if header_open and col == 1 and not tokens:
                comment = text[i + 1:end]
                header.append(comment[1:] if comment.startswith(" ") else comment)
            i = end
            col = 1
            continue
        header_open = False
        if ch == "-" and text[i + 1:i + 2] == ">":
            tokens.append(_Token("->", "->", line, col))
            i += 2
            col += 2
            continue
        if ch == "=" and text[i + 1:i + 2] == ">":
            tokens.append(_Token("=>", "=>", line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "." and text[i + 1:i + 2].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        diagnostics.append(
            Diagnostic(ERROR, line, col, "lex-error", f"unexpected character {ch!r}")
        )
        i += 1
        col += 1
    tokens.append(_Token("eof", "", line, col))
    return tokens, header


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], diagnostics: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics = diagnostics

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def error(self, token: _Token, message: str, code: str = "syntax-error") -> None:
        self.diagnostics.append(
            Diagnostic(ERROR, token.line, token.column, code, message)
        )

    def expect(self, kind: str, what: str) -> Optional[_Token]:
        token = self.peek()
        if token.kind != kind:
            shown = token.value or "end of input"
            self.error(token, f"expected {what}, found {shown!r}")
            return None
        return self.advance()

    def recover(self) -> None:
        """Skip to the next top-level declaration keyword."""
        depth = 0
        while True:
            token = self.peek()
            if token.kind == "eof":
                return
            if token.kind == "{":
                depth += 1
            elif token.kind == "}":
                depth = max(0, depth - 1)
                self.advance()
                if depth == 0:
                    # a closing brace at top level usually ends the broken decl
                    if self.peek().kind == "ident" and self.peek().value in _KEYWORDS:
                        return
                continue
            elif (
                depth == 0
                and token.kind == "ident"
                and token.value in _KEYWORDS
            ):
                return
            self.advance()

    def parse_document(self) -> ModelDocument:
        variables: list[VariableDecl] = []
        idioms: list[IdiomDecl] = []
        edges: list[EdgeDecl] = []
        cpts: list[CptDecl] = []
        while self.peek().kind != "eof":
            token = self.peek()
            if token.kind != "ident" or token.value not in _KEYWORDS:
                self.error(
                    token,
                    f"expected a declaration (variable, idiom, edge, cpt), "
                    f"found {token.value or token.kind!r}",
                )
                self.advance()
                self.recover()
                continue
            start = self.pos
            try:
                if token.value == "variable":
                    decl = self.parse_variable()
                    if decl:
                        variables.append(decl)
                elif token.value == "idiom":
                    idiom = self.parse_idiom()
                    if idiom:
                        idioms.append(idiom)
                elif token.value == "edge":
                    edge = self.parse_edge()
                    if edge:
                        edges.append(edge)
                else:
                    cpt = self.parse_cpt()
                    if cpt:
                        cpts.append(cpt)
            except _Bail:
                self.recover()
            if self.pos == start:  # defensive: never loop in place
                self.advance()
        return ModelDocument(
            header=(),
            variables=tuple(variables),
            idioms=tuple(idioms),
            edges=tuple(edges),
            cpts=tuple(cpts),
        )

    def need(self, kind: str, what: str) -> _Token:
        token = self.expect(kind, what)
        if token is None:
            raise _Bail()
        return token

    def parse_ident_list(self, what: str) -> list[_Token]:
        items = [self.need("ident", what)]
        while self.peek().kind == ",":
            self.advance()
            items.append(self.need("ident", what))
        return items

    def parse_variable(self) -> Optional[VariableDecl]:
        keyword = self.advance()
        name = self.need("ident", "variable name")
        self.need("{", "'{'")
        states: list[str] = []
        role = Role.UNCLASSIFIED
        saw_role = False
        while self.peek().kind != "}":
            clause = self.need("ident", "'states' or 'role'")
            self.need(":", "':'")
            if clause.value == "states":
                states = [t.value for t in self.parse_ident_list("state label")]
            elif clause.value == "role":
                role_token = self.need("ident", "role name")
                saw_role = True
                try:
                    role = Role(role_token.value)
                except ValueError:
                    self.error(
                        role_token,
                        f"unknown role {role_token.value!r}",
                        code="unknown-role",
                    )
            else:
                self.error(clause, f"unknown clause {clause.value!r} in variable")
                raise _Bail()
            if self.peek().kind == ";":
                self.advance()
        self.need("}", "'}'")
        if not states:
            self.error(keyword, f"variable {name.value!r} declares no states")
        if len(states) < 2:
            self.error(
                keyword,
                f"variable {name.value!r} needs at least 2 states",
            )
        if len(set(states)) != len(states):
            self.error(keyword, f"variable {name.value!r} repeats a state label")
        if not saw_role:
            self.error(keyword, f"variable {name.value!r} declares no role")
        return VariableDecl(
            name=name.value,
            states=tuple(states),
            role=role,
            line=keyword.line,
            column=keyword.column,
        )

    def parse_idiom(self) -> Optional[IdiomDecl]:
        keyword = self.advance()
        template_token = self.need("ident", "template id")
        name = self.need("ident", "instance name")
        self.need("{", "'{'")
        bindings: list[tuple[str, tuple[str, ...]]] = []
        while self.peek().kind != "}":
            slot = self.need("ident", "slot name")
            self.need(":", "':'")
            if self.peek().kind == "[":
                self.advance()
                if self.peek().kind == "]":
                    self.advance()
                    names: tuple[str, ...] = ()
                else:
                    names = tuple(t.value for t in self.parse_ident_list("variable name"))
                    self.need("]", "']'")
            else:
                names = (self.need("ident", "variable name").value,)
            bindings.append((slot.value, names))
            if self.peek().kind == ";":
                self.advance()
        self.need("}", "'}'")
        return IdiomDecl(
            template=template_token.value,
            name=name.value,
            bindings=tuple(bindings),
            line=keyword.line,
            column=keyword.column,
        )

    def parse_edge(self) -> Optional[EdgeDecl]:
        keyword = self.advance()
        parent = self.need("ident", "parent variable")
        arrow = self.peek()
        if arrow.kind not in ("->", "=>"):
            self.error(arrow, f"expected '->' or '=>', found {arrow.value!r}")
            raise _Bail()
        self.advance()
        child = self.need("ident", "child variable")
        return EdgeDecl(
            parent=parent.value,
            child=child.value,
            decision=arrow.kind == "=>",
            line=keyword.line,
            column=keyword.column,
        )

    def parse_cpt(self) -> Optional[CptDecl]:
        keyword = self.advance()
        child = self.need("ident", "variable name")
        parents: tuple[str, ...] = ()
        has_given = False
        if self.peek().kind == "ident" and self.peek().value == "given":
            self.advance()
            has_given = True
            self.need("(", "'('")
            parents = tuple(t.value for t in self.parse_ident_list("parent name"))
            self.need(")", "')'")
        self.need("{", "'{'")
        rows: list[CptRowDecl] = []
        while self.peek().kind != "}":
            head = self.need("ident", "'row' or 'prior'")
            if head.value == "row":
                self.need("(", "'('")
                key = tuple(t.value for t in self.parse_ident_list("state label"))
                self.need(")", "')'")
            elif head.value == "prior":
                key = ()
            else:
                self.error(head, f"expected 'row' or 'prior', found {head.value!r}")
                raise _Bail()
            self.need(":", "':'")
            values = [self.parse_number()]
            while self.peek().kind == ",":
                self.advance()
                values.append(self.parse_number())
            rows.append(
                CptRowDecl(key=key, values=tuple(values), line=head.line, column=head.column)
            )
            if self.peek().kind == ";":
                self.advance()
        self.need("}", "'}'")
        return CptDecl(
            child=child.value,
            parents=parents,
            has_given=has_given,
            rows=tuple(rows),
            line=keyword.line,
            column=keyword.column,
        )

    def parse_number(self) -> float:
        token = self.need("number", "a probability")
        return float(token.value)


class _Bail(Exception):
    """Internal: abandon the current declaration and resynchronize."""


# ---------------------------------------------------------------------------
# parse = syntax + local semantic validation (two-pass name resolution)
# ---------------------------------------------------------------------------


def parse(text: str) -> ParseResult:
    """Parse source text, collecting every diagnostic.

    Forward references are legal: names are resolved in a second pass
    over the collected declarations.
    """
    diagnostics: list[Diagnostic] = []
    tokens, header = _lex(text, diagnostics)
    parser = _Parser(tokens, diagnostics)
    document = parser.parse_document()
    document = ModelDocument(
        header=tuple(header),
        variables=document.variables,
        idioms=document.idioms,
        edges=document.edges,
        cpts=document.cpts,
    )
    _resolve(document, diagnostics)
    return ParseResult(document, diagnostics)


def _resolve(doc: ModelDocument, diagnostics: list[Diagnostic]) -> None:
    def err(decl, code, message):
        diagnostics.append(Diagnostic(ERROR, decl.line, decl.column, code, message))

    by_name: dict[str, VariableDecl] = {}
    for decl in doc.variables:
        if decl.name in by_name:
            err(decl, "duplicate-name", f"variable {decl.name!r} already declared")
        else:
            by_name[decl.name] = decl

    seen_idioms: set[str] = set()
    for decl in doc.idioms:
        if decl.name in seen_idioms:
            err(decl, "duplicate-name", f"idiom instance {decl.name!r} already declared")
        seen_idioms.add(decl.name)
        try:
            tpl = template(decl.template)
        except UnknownTemplateError:
            err(decl, "unknown-template", f"unknown idiom template {decl.template!r}")
            continue
        seen_slots: set[str] = set()
        for slot_name, names in decl.bindings:
            if slot_name in seen_slots:
                err(decl, "duplicate-slot", f"slot {slot_name!r} bound twice")
            seen_slots.add(slot_name)
            try:
                tpl.slot(slot_name)
            except MissingSlotError:
                err(
                    decl,
                    "unknown-slot",
                    f"template {decl.template!r} has no slot {slot_name!r}",
                )
                continue
            for var_name in names:
                if var_name not in by_name:
                    err(
                        decl,
                        "unknown-variable",
                        f"idiom {decl.name!r} binds undeclared variable {var_name!r}",
                    )
        try:
            _decl_bindings(tpl, decl)
        except (MissingSlotError, ArityViolationError) as exc:
            err(decl, "arity", str(exc))
        except CompositionCycleError as exc:
            err(decl, "composition-cycle", str(exc))

    for decl in doc.edges:
        for end in (decl.parent, decl.child):
            if end not in by_name:
                err(decl, "unknown-variable", f"edge references undeclared variable {end!r}")

    seen_cpts: set[str] = set()
    for decl in doc.cpts:
        if decl.child in seen_cpts:
            err(decl, "duplicate-name", f"second cpt for {decl.child!r}")
            continue
        seen_cpts.add(decl.child)
        child = by_name.get(decl.child)
        if child is None:
            err(decl, "unknown-variable", f"cpt for undeclared variable {decl.child!r}")
            continue
        unknown_parent = False
        for parent in decl.parents:
            if parent not in by_name:
                err(decl, "unknown-variable", f"cpt conditions on undeclared {parent!r}")
                unknown_parent = True
        if len(set(decl.parents)) != len(decl.parents):
            err(decl, "duplicate-name", f"cpt for {decl.child!r} repeats a parent")
            unknown_parent = True
        if unknown_parent:
            continue
        _check_cpt_rows(decl, child, [by_name[p] for p in decl.parents], diagnostics)


def _check_cpt_rows(
    decl: CptDecl,
    child: VariableDecl,
    parents: list[VariableDecl],
    diagnostics: list[Diagnostic],
) -> None:
    def report(severity, line, column, code, message):
        diagnostics.append(Diagnostic(severity, line, column, code, message))

    expected: set[tuple[str, ...]] = {()}
    for parent in parents:
        expected = {k + (s,) for k in expected for s in parent.states}
    seen: set[tuple[str, ...]] = set()
    for row in decl.rows:
        if len(row.key) != len(parents):
            report(
                ERROR, row.line, row.column, "bad-row",
                f"row names {len(row.key)} state(s) but cpt has {len(parents)} parent(s)",
            )
            continue
        bad_state = False
        for parent, state in zip(parents, row.key):
            if state not in parent.states:
                report(
                    ERROR, row.line, row.column, "unknown-state",
                    f"{parent.name!r} has no state {state!r}",
                )
                bad_state = True
        if bad_state:
            continue
        if row.key in seen:
            report(
                ERROR, row.line, row.column, "duplicate-row",
                f"row({', '.join(row.key)}) repeated",
            )
            continue
        seen.add(row.key)
        if len(row.values) != len(child.states):
            report(
                ERROR, row.line, row.column, "bad-row",
                f"{len(row.values)} probabilities for {len(child.states)} states",
            )
            continue
        if any(not (0.0 <= v <= 1.0) for v in row.values):
            report(
                ERROR, row.line, row.column, "bad-probability",
                "probability outside [0, 1]",
            )
            continue
        total = sum(row.values)
        if abs(total - 1.0) > NORM_TOL:
            label = f"row({', '.join(row.key)})" if row.key else "prior"
            report(
                ERROR, row.line, row.column, "row-sum",
                f"{label} sums to {total:.9g}",
            )
    for key in sorted(expected - seen):
        label = f"row({', '.join(key)})" if key else "prior"
        report(
            ERROR, decl.line, decl.column, "missing-row",
            f"cpt for {decl.child!r} is missing {label}",
        )


def _decl_bindings(tpl, decl: IdiomDecl) -> dict[str, tuple[str, ...]]:
    raw = {slot: list(names) for slot, names in decl.bindings if _slot_exists(tpl, slot)}
    return normalize_bindings(tpl, raw)


def _slot_exists(tpl, name: str) -> bool:
    try:
        tpl.slot(name)
        return True
    except MissingSlotError:
        return False


# ---------------------------------------------------------------------------
# Elaboration: expand idioms, compose, attach CPTs, build the network
# ---------------------------------------------------------------------------


def elaborate(doc: ModelDocument) -> Elaboration:
    """Expand idiom declarations, merge with raw edges, and build the net.

    Build failures come back as diagnostics carrying the position of the
    responsible declaration; idiom provenance is retained for the linter
    and coverage reports.
    """
    diagnostics: list[Diagnostic] = []
    declared_roles = {v.name: v.role for v in doc.variables}

    fragments: list[Fragment] = []
    instances: list[IdiomInstance] = []
    positions: dict[str, tuple[int, int]] = {}
    for decl in doc.idioms:
        try:
            tpl = template(decl.template)
            bindings = _decl_bindings(tpl, decl)
            fragment = instantiate(tpl, bindings, declared_roles, label=decl.name)
        except (UnknownTemplateError, MissingSlotError, ArityViolationError,
                CompositionCycleError) as exc:
            diagnostics.append(
                Diagnostic(ERROR, decl.line, decl.column, "bad-idiom", str(exc))
            )
            continue
        positions[decl.name] = (decl.line, decl.column)
        for warning in fragment.warnings:
            diagnostics.append(
                Diagnostic(WARNING, decl.line, decl.column, "role-mismatch", warning)
            )
        fragments.append(fragment)
        instances.append(
            IdiomInstance(template=tpl.id, bindings=bindings, label=decl.name)
        )

    for decl in doc.edges:
        label = f"edge {decl.parent}->{decl.child}"
        positions[label] = (decl.line, decl.column)
        fragments.append(
            Fragment(
                variables=(decl.parent, decl.child),
                expected_roles={},
                edges=((decl.parent, decl.child, decl.decision),),
                label=label,
            )
        )

    try:
        skeleton = compose(fragments)
    except CompositionCycleError as exc:
        first = sorted(
            (positions.get(label, (1, 1)) for labels in exc.contributors.values()
             for label in labels),
        )[0]
        diagnostics.append(
            Diagnostic(ERROR, first[0], first[1], "composition-cycle", str(exc))
        )
        return Elaboration(None, tuple(instances), diagnostics)
    for warning in skeleton.warnings:
        if "multiple roles" in warning:
            diagnostics.append(Diagnostic(WARNING, 1, 1, "multi-role", warning))

    variables = [Variable(v.name, v.states, v.role) for v in doc.variables]
    cpt_positions = {c.child: (c.line, c.column) for c in doc.cpts}
    var_positions = {v.name: (v.line, v.column) for v in doc.variables}
    cpts = [
        CPT(
            child=c.child,
            parents=c.parents,
            rows={r.key: r.values for r in c.rows},
        )
        for c in doc.cpts
    ]
    missing = [v.name for v in doc.variables if v.name not in cpt_positions]
    for name in missing:
        line, column = var_positions[name]
        diagnostics.append(
            Diagnostic(ERROR, line, column, "missing-cpt", f"no cpt for variable {name!r}")
        )
    if missing:
        return Elaboration(None, tuple(instances), diagnostics)

    edge_positions = {(e.parent, e.child): (e.line, e.column) for e in doc.edges}
    edges = sorted(skeleton.edge_pairs())
    decision = skeleton.decision_pairs()
    try:
        net = build_network(variables, edges, cpts, decision)
    except InvalidNetworkError as exc:
        for issue in exc.issues:
            line, column = (1, 1)
            for pair in issue.edges:
                if pair in edge_positions:
                    line, column = edge_positions[pair]
                    break
            else:
                for node in issue.nodes:
                    if issue.code in ("CptMismatch", "RowNotNormalized", "MissingRow",
                                      "UnknownRow", "BadProbability") and node in cpt_positions:
                        line, column = cpt_positions[node]
                        break
                    if node in var_positions:
                        line, column = var_positions[node]
                        break
            diagnostics.append(
                Diagnostic(ERROR, line, column, issue.code, issue.message)
            )
        return Elaboration(None, tuple(instances), diagnostics)
    return Elaboration(net, tuple(instances), diagnostics)


@dataclass
class LoadResult:
    document: ModelDocument
    net: Optional[BayesNet]
    instances: tuple[IdiomInstance, ...]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.net is not None and not any(
            d.severity == ERROR for d in self.diagnostics
        )


def load_model(text: str) -> LoadResult:
    """Parse then elaborate; elaboration is skipped on parse errors."""
    parsed = parse(text)
    if not parsed.ok:
        return LoadResult(parsed.document, None, (), list(parsed.diagnostics))
    result = elaborate(parsed.document)
    return LoadResult(
        parsed.document,
        result.net,
        result.instances,
        list(parsed.diagnostics) + result.diagnostics,
    )


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def format_number(x: float) -> str:
    """Up to 12 significant digits, trailing zeros trimmed, no exponent."""
    s = format(float(x), ".12g")
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


def serialize(doc: ModelDocument) -> str:
    """Canonical text form; parse(serialize(doc)) gives the same network."""
    if doc.is_empty():
        return ""
    blocks: list[str] = []
    if doc.header:
        blocks.append("\n".join(f"# {line}" if line else "#" for line in doc.header))

    if doc.variables:
        lines = []
        for v in sorted(doc.variables, key=lambda d: d.name):
            states = ", ".join(v.states)
            lines.append(
                f"variable {v.name} {{ states: {states}; role: {v.role.value} }}"
            )
        blocks.append("\n".join(lines))

    if doc.idioms:
        lines = []
        for decl in sorted(doc.idioms, key=lambda d: d.name):
            parts = []
            try:
                tpl = template(decl.template)
                order = {s.name: i for i, s in enumerate(tpl.slots)}
                many = {s.name: s.many for s in tpl.slots}
                bindings = sorted(
                    decl.bindings, key=lambda b: order.get(b[0], len(order))
                )
            except UnknownTemplateError:
                many = {}
                bindings = list(decl.bindings)
            for slot, names in bindings:
                if not names:
                    continue
                if many.get(slot, len(names) > 1):
                    parts.append(f"{slot}: [{', '.join(names)}];")
                else:
                    parts.append(f"{slot}: {names[0]};")
            body = " ".join(parts)
            lines.append(f"idiom {decl.template} {decl.name} {{ {body} }}")
        blocks.append("\n".join(lines))

    if doc.edges:
        lines = []
        for decl in sorted(doc.edges, key=lambda d: (d.parent, d.child)):
            arrow = "=>" if decl.decision else "->"
            lines.append(f"edge {decl.parent} {arrow} {decl.child}")
        blocks.append("\n".join(lines))

    if doc.cpts:
        declared_states = {v.name: list(v.states) for v in doc.variables}
        lines = []
        for decl in sorted(doc.cpts, key=lambda d: d.child):
            lines.append(_serialize_cpt(decl, declared_states))
        blocks.append("\n".join(lines))

    return "\n\n".join(blocks) + "\n"


def _serialize_cpt(decl: CptDecl, declared_states: dict[str, list[str]]) -> str:
    if not decl.parents:
        row = next((r for r in decl.rows if r.key == ()), None)
        values = ", ".join(format_number(v) for v in (row.values if row else ()))
        return f"cpt {decl.child} {{\n  prior: {values};\n}}"

    order = sorted(range(len(decl.parents)), key=lambda i: decl.parents[i])
    parents = tuple(decl.parents[i] for i in order)
    rows = {tuple(r.key[i] for i in order): r.values for r in decl.rows}

    # row order: product of the parents' declared state orders; states of
    # undeclared parents (invalid docs) fall back to first appearance
    state_order: dict[str, list[str]] = {}
    for p in parents:
        state_order[p] = list(declared_states.get(p, []))
    for r in decl.rows:
        for i, p in zip(order, parents):
            state = r.key[i]
            if state not in state_order[p]:
                state_order[p].append(state)
    combos: list[tuple[str, ...]] = [()]
    for p in parents:
        combos = [c + (s,) for c in combos for s in state_order[p]]

    lines = [f"cpt {decl.child} given ({', '.join(parents)}) {{"]
    for combo in combos:
        if combo not in rows:
            continue
        values = ", ".join(format_number(v) for v in rows[combo])
        lines.append(f"  row({', '.join(combo)}): {values};")
    lines.append("}")
    return "\n".join(lines)


def document_from_network(
    net: BayesNet,
    instances: Sequence[IdiomInstance] = (),
    header: Sequence[str] = (),
) -> ModelDocument:
    """Rebuild a document from a network (used to write canonical files)."""
    variables = tuple(
        VariableDecl(v.name, v.states, v.role, 0, 0) for v in net.variables
    )
    idioms = tuple(
        IdiomDecl(
            template=i.template.value,
            name=i.label or f"i{k}",
            bindings=tuple(sorted(i.bindings.items())),
            line=0,
            column=0,
        )
        for k, i in enumerate(instances)
    )
    covered: set[tuple[str, str]] = set()
    covered_decision: set[tuple[str, str]] = set()
    for i in instances:
        fragment = instantiate(i.template, i.bindings)
        covered |= fragment.edge_pairs()
        covered_decision |= fragment.decision_pairs()
    edges = []
    for p, c in net.edges:
        decision = (p, c) in net.decision_edges
        if (p, c) in covered:
            # keep a raw decl only if the idiom edge would lose the flag
            if not decision or (p, c) in covered_decision:
                continue
        edges.append(EdgeDecl(p, c, decision, 0, 0))
    edges = tuple(edges)
    cpts = []
    for name in net.names:
        cpt = net.cpts[name]
        rows = tuple(
            CptRowDecl(key, values, 0, 0) for key, values in cpt.rows.items()
        )
        cpts.append(
            CptDecl(
                child=name,
                parents=cpt.parents,
                has_given=bool(cpt.parents),
                rows=rows,
                line=0,
                column=0,
            )
        )
    return ModelDocument(
        header=tuple(header),
        variables=variables,
        idioms=idioms,
        edges=edges,
        cpts=tuple(cpts),
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def export_dot(net: BayesNet, instances: Sequence[IdiomInstance] = ()) -> str:
    """DOT rendering with one cluster per idiom instance.

    DOT clusters cannot overlap, so a variable belongs to the first
    instance that binds it; additional memberships are recorded as
    ``// idiom overlap:`` comments.
    """
    owner: dict[str, int] = {}
    members: dict[int, list[str]] = {}
    extra: dict[str, list[str]] = {}
    labels: list[str] = []
    for index, instance in enumerate(instances):
        label = instance.label or f"{instance.template.value}#{index}"
        labels.append(label)
        members[index] = []
        bound = []
        for _, names in sorted(instance.bindings.items()):
            bound.extend(names)
        for name in bound:
            if name not in net.variable_map:
                continue
            if name in owner:
                extra.setdefault(name, []).append(label)
            elif name not in members[index]:
                owner[name] = index
                members[index].append(name)

    def node_stmt(name: str) -> str:
        var = net.variable_map[name]
        return f'"{name}" [label="{name}\\n[{var.role.value}]"];'

    lines = ["digraph model {"]
    for index in range(len(instances)):
        if not members[index]:
            continue
        lines.append(f"  subgraph cluster_{index} {{")
        lines.append(f'    label="{labels[index]}";')
        for name in members[index]:
            lines.append("    " + node_stmt(name))
        lines.append("  }")
    for name in net.names:
        if name not in owner:
            lines.append("  " + node_stmt(name))
    for parent, child in net.edges:
        style = " [style=dashed]" if (parent, child) in net.decision_edges else ""
        lines.append(f'  "{parent}" -> "{child}"{style};')
    for name in sorted(extra):
        also = ", ".join(extra[name])
        primary = labels[owner[name]]
        lines.append(f'  // idiom overlap: "{name}" in {primary} also in {also}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def document_to_json(doc: ModelDocument) -> str:
    """Machine-readable mirror of the document with stable key order."""
    def idiom_bindings(decl: IdiomDecl) -> dict[str, list[str]]:
        return {slot: list(names) for slot, names in sorted(decl.bindings)}

    payload = {
        "variables": [
            {"name": v.name, "states": list(v.states), "role": v.role.value}
            for v in sorted(doc.variables, key=lambda d: d.name)
        ],
        "idioms": [
            {"template": d.template, "name": d.name, "bindings": idiom_bindings(d)}
            for d in sorted(doc.idioms, key=lambda d: d.name)
        ],
        "edges": [
            {"parent": d.parent, "child": d.child, "decision": d.decision}
            for d in sorted(doc.edges, key=lambda d: (d.parent, d.child))
        ],
        "cpts": [
            {
                "child": d.child,
                "parents": list(d.parents),
                "rows": [
                    {"given": list(r.key), "probs": list(r.values)}
                    for r in d.rows
                ],
            }
            for d in sorted(doc.cpts, key=lambda d: d.child)
        ],
    }
    return json.dumps(payload, indent=2)

"""The ``.morph`` text format: parsing, canonical serialization, DOT export.

A file is a sequence of ``structure`` and ``network`` blocks, optionally
preceded by a ``morphfile 1`` version line.  Statements are keyword-led and
may share lines; ``#`` starts a comment.  Example::

    morphfile 1
    structure demo {
      scale 3
      component A { alt A1 priority 1  alt A2 priority 2 "spare" }
      component B { alt B1 priority 1 }
      node S = A * B
      compat A1 B1 = 3
      compat A2 B1 = 2 assumed "estimated"
    }
    network flow chain {
      point p uses demo solutions { P1 = A1*B1 }
      point q uses demo
      edge p -> q
    }

References to alternatives may be bare (``A1``) when unambiguous or
qualified by their owner (``A.A1``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .model import (
    DEFAULT_SCALE,
    SHAPES,
    AnalysisPoint,
    CompatTable,
    Component,
    CompositeNode,
    DeclaredSolution,
    DesignAlternative,
    MorphError,
    MorphPoint,
    MorphStructure,
    PointSolution,
    Ref,
    TopLevelNetwork,
)

FORMAT_VERSION = 1

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->)
  | (?P<sym>[{}=*.])
    """,
    re.VERBOSE,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class ParseIssue:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class MorphParseError(MorphError):
    def __init__(self, errors: list[ParseIssue]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Assumption:
    owner: str  # structure or network name
    pair: tuple[Ref, Ref]
    value: int
    note: str


@dataclass
class MorphDocument:
    structures: dict[str, MorphStructure] = field(default_factory=dict)
    networks: dict[str, TopLevelNetwork] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def assumptions(self) -> list[Assumption]:
        out = []
        for s in self.structures.values():
            for table in s.compat.values():
                for key, note in table.assumed.items():
                    a, b = sorted(key)
                    out.append(Assumption(s.name, (a, b), table.entries[key], note))
        for g in self.networks.values():
            for key, note in g.compat.assumed.items():
                a, b = sorted(key)
                out.append(Assumption(g.name, (a, b), g.compat.entries[key], note))
        return out


# --------------------------------------------------------------------------
# tokens
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | arrow | sym | eof
    text: str
    line: int
    col: int

    @property
    def value(self) -> str:
        if self.kind == "string":
            return re.sub(r"\\(.)", r"\1", self.text[1:-1])
        return self.text


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise MorphParseError([ParseIssue(line, col, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, tok: Token, message: str):
        raise MorphParseError([ParseIssue(tok.line, tok.col, message)])

    def expect(self, kind: str, text: Optional[str] = None, what: str = "") -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = what or (repr(text) if text else kind)
            found = "end of file" if tok.kind == "eof" else repr(tok.text)
            self.fail(tok, f"expected {want}, found {found}")
        return tok

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            self.i += 1
            return tok
        return None

    def ident(self, what: str = "identifier") -> Token:
        return self.expect("ident", what=what)

    def integer(self, what: str = "integer") -> tuple[int, Token]:
        tok = self.expect("int", what=what)
        return int(tok.text), tok


# --------------------------------------------------------------------------
# raw syntax
# --------------------------------------------------------------------------


@dataclass
class _RawRef:
    owner: Optional[str]
    item: str
    tok: Token


@dataclass
class _RawCompat:
    a: _RawRef
    b: _RawRef
    value: int
    assumed: Optional[str]
    tok: Token


@dataclass
class _RawSolution:
    name: Token
    refs: list[_RawRef]
    priority: Optional[int]


@dataclass
class _RawStructure:
    name: Token
    partial: bool
    scale: Optional[tuple[int, Token]] = None
    root: Optional[Token] = None
    components: list[tuple[Token, list[tuple[Token, int, str]]]] = field(default_factory=list)
    nodes: list[tuple[Token, list[Token]]] = field(default_factory=list)
    compat: list[_RawCompat] = field(default_factory=list)
    solutions: list[tuple[Token, list[_RawSolution]]] = field(default_factory=list)


@dataclass
class _RawPoint:
    id: Token
    label: str
    uses: Token
    solutions: Optional[list[_RawSolution]]


@dataclass
class _RawAnalysis:
    id: Token
    label: str
    branches: list[tuple[Token, Token]]


@dataclass
class _RawNetwork:
    name: Token
    shape: str
    scale: Optional[tuple[int, Token]] = None
    roots: list[Token] = field(default_factory=list)
    nodes: list[Union[_RawPoint, _RawAnalysis]] = field(default_factory=list)
    edges: list[tuple[Token, Token]] = field(default_factory=list)
    compat: list[_RawCompat] = field(default_factory=list)


def _ref(cur: _Cursor) -> _RawRef:
    first = cur.ident("reference")
    if cur.accept("sym", "."):
        second = cur.ident("reference")
        return _RawRef(first.text, second.text, first)
    return _RawRef(None, first.text, first)


def _compat(cur: _Cursor, start: Token) -> _RawCompat:
    a = _ref(cur)
    b = _ref(cur)
    cur.expect("sym", "=")
    value, _ = cur.integer("compatibility value")
    assumed = None
    if cur.accept("ident", "assumed"):
        note = cur.accept("string")
        assumed = note.value if note else ""
    return _RawCompat(a, b, value, assumed, start)


def _solution_block(cur: _Cursor) -> list[_RawSolution]:
    cur.expect("sym", "{")
    out = []
    while not cur.accept("sym", "}"):
        name = cur.ident("solution name or '}'")
        cur.expect("sym", "=")
        refs = [_ref(cur)]
        while cur.accept("sym", "*"):
            refs.append(_ref(cur))
        priority = None
        if cur.accept("ident", "priority"):
            priority, _ = cur.integer("priority")
        out.append(_RawSolution(name, refs, priority))
    return out


def _structure(cur: _Cursor) -> _RawStructure:
    name = cur.ident("structure name")
    raw = _RawStructure(name, partial=bool(cur.accept("ident", "partial")))
    cur.expect("sym", "{")
    while True:
        tok = cur.next()
        if tok.kind == "sym" and tok.text == "}":
            return raw
        if tok.kind != "ident":
            cur.fail(tok, "expected a structure statement" if tok.kind != "eof"
                     else f"unterminated structure {name.text}")
        if tok.text == "scale":
            raw.scale = cur.integer("scale")
        elif tok.text == "root":
            raw.root = cur.ident("root node")
        elif tok.text == "component":
            cid = cur.ident("component id")
            cur.expect("sym", "{")
            alts = []
            while not cur.accept("sym", "}"):
                cur.expect("ident", "alt", what="'alt' or '}'")
                aid = cur.ident("alternative id")
                cur.expect("ident", "priority")
                prio, _ = cur.integer("priority")
                label = cur.accept("string")
                alts.append((aid, prio, label.value if label else ""))
            raw.components.append((cid, alts))
        elif tok.text == "node":
            nid = cur.ident("node id")
            cur.expect("sym", "=")
            children = [cur.ident("child id")]
            while cur.accept("sym", "*"):
                children.append(cur.ident("child id"))
            raw.nodes.append((nid, children))
        elif tok.text == "compat":
            raw.compat.append(_compat(cur, tok))
        elif tok.text == "solutions":
            nid = cur.ident("node id")
            raw.solutions.append((nid, _solution_block(cur)))
        else:
            cur.fail(tok, f"unknown structure statement {tok.text!r}")


def _network(cur: _Cursor) -> _RawNetwork:
    name = cur.ident("network name")
    shape = "general"
    tok = cur.peek()
    if tok.kind == "ident":
        if tok.text not in SHAPES:
            cur.fail(tok, f"unknown network shape {tok.text!r}")
        shape = cur.next().text
    raw = _RawNetwork(name, shape)
    cur.expect("sym", "{")
    while True:
        tok = cur.next()
        if tok.kind == "sym" and tok.text == "}":
            return raw
        if tok.kind != "ident":
            cur.fail(tok, "expected a network statement" if tok.kind != "eof"
                     else f"unterminated network {name.text}")
        if tok.text == "scale":
            raw.scale = cur.integer("scale")
        elif tok.text == "root":
            raw.roots.append(cur.ident("root node"))
        elif tok.text == "point":
            pid = cur.ident("point id")
            label = cur.accept("string")
            cur.expect("ident", "uses")
            uses = cur.ident("structure name")
            sols = _solution_block(cur) if cur.accept("ident", "solutions") else None
            raw.nodes.append(_RawPoint(pid, label.value if label else "", uses, sols))
        elif tok.text == "analysis":
            aid = cur.ident("analysis point id")
            label = cur.accept("string")
            cur.expect("sym", "{")
            branches = []
            while not cur.accept("sym", "}"):
                cur.expect("ident", "on", what="'on' or '}'")
                outcome = cur.expect("string", what="outcome label")
                cur.expect("arrow", what="'->'")
                branches.append((outcome, cur.ident("successor id")))
            raw.nodes.append(_RawAnalysis(aid, label.value if label else "", branches))
        elif tok.text == "edge":
            src = cur.ident("edge source")
            cur.expect("arrow", what="'->'")
            raw.edges.append((src, cur.ident("edge target")))
        elif tok.text == "compat":
            raw.compat.append(_compat(cur, tok))
        else:
            cur.fail(tok, f"unknown network statement {tok.text!r}")


# --------------------------------------------------------------------------
# resolution
# --------------------------------------------------------------------------


class _Errors:
    def __init__(self) -> None:
        self.items: list[ParseIssue] = []

    def add(self, tok: Token, message: str) -> None:
        self.items.append(ParseIssue(tok.line, tok.col, message))


def _resolve_ref(ref: _RawRef, options: dict[str, Optional[set[str]]], errors: _Errors) -> Optional[Ref]:
    """``options`` maps owner -> known items (None: any item accepted)."""
    if ref.owner is not None:
        if ref.owner not in options:
            errors.add(ref.tok, f"unknown reference {ref.owner}.{ref.item}")
            return None
        known = options[ref.owner]
        if known is not None and ref.item not in known:
            errors.add(ref.tok, f"unknown reference {ref.owner}.{ref.item}")
            return None
        return (ref.owner, ref.item)
    hits = [owner for owner, known in options.items() if known is not None and ref.item in known]
    if not hits:
        errors.add(ref.tok, f"unknown reference {ref.item}")
        return None
    if len(hits) > 1:
        errors.add(ref.tok, f"ambiguous reference {ref.item} (owned by {', '.join(hits)})")
        return None
    return (hits[0], ref.item)


def _add_entry(entries: dict, assumed: dict, key: frozenset, raw: _RawCompat,
               errors: _Errors) -> None:
    if key in entries:
        if entries[key] != raw.value:
            errors.add(raw.tok, f"contradictory duplicate compatibility entry "
                                f"({raw.a.item},{raw.b.item}): {entries[key]} vs {raw.value}")
        return
    entries[key] = raw.value
    if raw.assumed is not None:
        assumed[key] = raw.assumed


def _build_structure(raw: _RawStructure, errors: _Errors) -> Optional[MorphStructure]:
    before = len(errors.items)
    scale = raw.scale[0] if raw.scale else DEFAULT_SCALE
    if raw.scale and scale < 1:
        errors.add(raw.scale[1], f"scale must be >= 1, got {scale}")

    components: dict[str, Component] = {}
    for cid, alts in raw.components:
        if cid.text in components:
            errors.add(cid, f"duplicate definition of component {cid.text}")
            continue
        seen: set[str] = set()
        built = []
        for aid, prio, label in alts:
            if aid.text in seen:
                errors.add(aid, f"duplicate alternative id {aid.text} in component {cid.text}")
                continue
            seen.add(aid.text)
            built.append(DesignAlternative(aid.text, prio, label))
        components[cid.text] = Component(cid.text, tuple(built))

    nodes: dict[str, CompositeNode] = {}
    for nid, children in raw.nodes:
        if nid.text in nodes or nid.text in components:
            errors.add(nid, f"duplicate definition of node {nid.text}")
            continue
        for child in children:
            if child.text not in components and child.text not in {n.text for n, _ in raw.nodes}:
                errors.add(child, f"unknown child {child.text} of node {nid.text}")
        nodes[nid.text] = CompositeNode(nid.text, tuple(c.text for c in children))

    if raw.root is not None:
        root = raw.root.text
        if root not in nodes:
            errors.add(raw.root, f"unknown root node {root}")
    else:
        referenced = {c for n in nodes.values() for c in n.children}
        tops = [n for n in nodes if n not in referenced]
        root = tops[0] if tops else (next(iter(nodes)) if nodes else "")
        if len(tops) > 1:
            errors.add(raw.name, f"structure {raw.name.text} has several top nodes "
                                 f"({', '.join(tops)}); declare one with 'root'")
        if not nodes:
            errors.add(raw.name, f"structure {raw.name.text} has no composite node")

    # declared solutions first, so compat rows may reference them
    declared: dict[str, tuple[DeclaredSolution, ...]] = {}
    options: dict[str, Optional[set[str]]] = {c.id: {a.id for a in c.alternatives}
                                              for c in components.values()}
    for nid, _ in raw.solutions:
        if nid.text in nodes:
            options[nid.text] = set()
    for nid, sols in raw.solutions:
        if nid.text not in nodes:
            errors.add(nid, f"solutions declared for unknown node {nid.text}")
            continue
        options[nid.text] |= {s.name.text for s in sols}
    for nid in nodes:
        options.setdefault(nid, None)

    for nid, sols in raw.solutions:
        if nid.text not in nodes:
            continue
        if nid.text in declared:
            errors.add(nid, f"duplicate solutions block for node {nid.text}")
            continue
        node = nodes[nid.text]
        scope = {c: options.get(c) for c in node.children}
        built_sols = []
        for sol in sols:
            sel = _resolve_selection(sol, scope, node.children, errors)
            if sel is not None:
                built_sols.append(DeclaredSolution(sol.name.text, sel, sol.priority))
        declared[nid.text] = tuple(built_sols)

    parent = {c: n.id for n in nodes.values() for c in n.children}
    entries: dict[str, dict] = {}
    assumed: dict[str, dict] = {}
    for rc in raw.compat:
        a = _resolve_ref(rc.a, options, errors)
        b = _resolve_ref(rc.b, options, errors)
        if a is None or b is None:
            continue
        if a[0] == b[0]:
            errors.add(rc.tok, f"compatibility entry ({a[1]},{b[1]}) relates two items of {a[0]}")
            continue
        host = parent.get(a[0])
        if host is None or host != parent.get(b[0]):
            errors.add(rc.tok, f"compatibility entry ({a[1]},{b[1]}) relates non-siblings {a[0]}, {b[0]}")
            continue
        if rc.value > scale:
            errors.add(rc.tok, f"value exceeds scale: ({a[1]},{b[1]}) = {rc.value} > {scale}")
            continue
        _add_entry(entries.setdefault(host, {}), assumed.setdefault(host, {}),
                   frozenset((a, b)), rc, errors)

    if len(errors.items) > before:
        return None
    tables = {nid: CompatTable(scale, entries.get(nid, {}), assumed.get(nid, {}))
              for nid in nodes if nid in entries}
    return MorphStructure(raw.name.text, root, components, nodes, tables, declared, scale, raw.partial)


def _resolve_selection(sol: _RawSolution, scope: dict[str, Optional[set[str]]],
                       children: Iterable[str], errors: _Errors) -> Optional[tuple[Ref, ...]]:
    picked: dict[str, Ref] = {}
    ok = True
    for ref in sol.refs:
        r = _resolve_ref(ref, scope, errors)
        if r is None:
            ok = False
            continue
        if r[0] in picked:
            errors.add(ref.tok, f"solution {sol.name.text} selects {r[0]} twice")
            ok = False
        picked[r[0]] = r
    missing = [c for c in children if c not in picked]
    if missing and ok:
        errors.add(sol.name, f"solution {sol.name.text} selects nothing for {', '.join(missing)}")
        ok = False
    if not ok:
        return None
    return tuple(picked[c] for c in children)


def _build_network(raw: _RawNetwork, structures: dict[str, MorphStructure],
                   errors: _Errors) -> Optional[TopLevelNetwork]:
    before = len(errors.items)
    scale = raw.scale[0] if raw.scale else DEFAULT_SCALE
    if raw.scale and scale < 1:
        errors.add(raw.scale[1], f"scale must be >= 1, got {scale}")
    ids: set[str] = set()
    for node in raw.nodes:
        if node.id.text in ids:
            errors.add(node.id, f"duplicate definition of node {node.id.text}")
        ids.add(node.id.text)

    built: list = []
    point_sols: dict[str, Optional[set[str]]] = {}
    for node in raw.nodes:
        if isinstance(node, _RawPoint):
            s = structures.get(node.uses.text)
            if s is None:
                errors.add(node.uses, f"unknown structure {node.uses.text}")
                continue
            sols: list[PointSolution] = []
            if node.solutions is not None:
                root = s.nodes[s.root]
                scope: dict[str, Optional[set[str]]] = {}
                for c in root.children:
                    if c in s.components:
                        scope[c] = {a.id for a in s.components[c].alternatives}
                    else:
                        names = {d.name for d in s.declared.get(c, ())}
                        scope[c] = names or None
                seen: set[str] = set()
                for rs in node.solutions:
                    if rs.name.text in seen:
                        errors.add(rs.name, f"duplicate solution {rs.name.text} at point {node.id.text}")
                        continue
                    seen.add(rs.name.text)
                    sel = _resolve_selection(rs, scope, root.children, errors)
                    if sel is not None:
                        sols.append(PointSolution(rs.name.text, sel, rs.priority))
            point_sols[node.id.text] = {p.name for p in sols} if node.solutions is not None else None
            built.append(MorphPoint(node.id.text, s, tuple(sols), node.label))
        else:
            labels: set[str] = set()
            for outcome, succ in node.branches:
                if outcome.value in labels:
                    errors.add(outcome, f"duplicate outcome {outcome.value!r} at {node.id.text}")
                labels.add(outcome.value)
                if succ.text not in ids:
                    errors.add(succ, f"unknown successor {succ.text} of {node.id.text}")
            built.append(AnalysisPoint(node.id.text, tuple((o.value, s.text) for o, s in node.branches),
                                       node.label))

    # analysis branches imply their edges; explicit edges follow them
    edges: list[tuple[str, str]] = []
    for node in raw.nodes:
        if isinstance(node, _RawAnalysis):
            for _, succ in node.branches:
                if (node.id.text, succ.text) not in edges:
                    edges.append((node.id.text, succ.text))
    for src, dst in raw.edges:
        for end in (src, dst):
            if end.text not in ids:
                errors.add(end, f"edge references unknown node {end.text}")
        edge = (src.text, dst.text)
        if edge in edges and not any(isinstance(n, _RawAnalysis) and n.id.text == src.text
                                     for n in raw.nodes):
            errors.add(src, f"duplicate edge {src.text}->{dst.text}")
        elif edge not in edges:
            edges.append(edge)

    for root in raw.roots:
        if root.text not in ids:
            errors.add(root, f"unknown root {root.text}")

    entries: dict = {}
    assumed: dict = {}
    for rc in raw.compat:
        refs = []
        for r in (rc.a, rc.b):
            if r.owner is None:
                errors.add(r.tok, f"inter-point reference {r.item} must be written point.solution")
                break
            if r.owner not in point_sols:
                errors.add(r.tok, f"unknown morph point {r.owner}")
                break
            known = point_sols[r.owner]
            if known is not None and r.item not in known:
                errors.add(r.tok, f"unknown solution {r.owner}.{r.item}")
                break
            refs.append((r.owner, r.item))
        if len(refs) != 2:
            continue
        if refs[0][0] == refs[1][0]:
            errors.add(rc.tok, f"compatibility entry relates two solutions of point {refs[0][0]}")
            continue
        if rc.value > scale:
            errors.add(rc.tok, f"value exceeds scale: {rc.value} > {scale}")
            continue
        _add_entry(entries, assumed, frozenset(refs), rc, errors)

    if len(errors.items) > before:
        return None
    return TopLevelNetwork(raw.name.text, raw.shape, tuple(built), tuple(edges),
                           CompatTable(scale, entries, assumed), tuple(r.text for r in raw.roots))


def parse(text: str) -> MorphDocument:
    """Parse ``.morph`` text; raises ``MorphParseError`` with positioned issues."""
    cur = _Cursor(tokenize(text.replace("\r\n", "\n")))
    version = FORMAT_VERSION
    if cur.peek().kind == "ident" and cur.peek().text == "morphfile":
        cur.next()
        version, tok = cur.integer("format version")
        if version != FORMAT_VERSION:
            cur.fail(tok, f"unsupported morphfile version {version}")

    raw_structures: list[_RawStructure] = []
    raw_networks: list[_RawNetwork] = []
    while cur.peek().kind != "eof":
        tok = cur.next()
        if tok.kind == "ident" and tok.text == "structure":
            raw_structures.append(_structure(cur))
        elif tok.kind == "ident" and tok.text == "network":
            raw_networks.append(_network(cur))
        else:
            cur.fail(tok, f"expected 'structure' or 'network', found {tok.text!r}")

    errors = _Errors()
    doc = MorphDocument(version=version)
    names: set[str] = set()
    for raw in raw_structures:
        if raw.name.text in names:
            errors.add(raw.name, f"duplicate definition of {raw.name.text}")
            continue
        names.add(raw.name.text)
        s = _build_structure(raw, errors)
        if s is not None:
            doc.structures[s.name] = s
    for raw in raw_networks:
        if raw.name.text in names:
            errors.add(raw.name, f"duplicate definition of {raw.name.text}")
            continue
        names.add(raw.name.text)
        g = _build_network(raw, doc.structures, errors)
        if g is not None:
            doc.networks[g.name] = g
    if errors.items:
        raise MorphParseError(sorted(errors.items, key=lambda e: (e.line, e.col)))
    return doc


def parse_file(path) -> MorphDocument:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _assumed_suffix(note: Optional[str]) -> str:
    if note is None:
        return ""
    return " assumed" + (f" {_quote(note)}" if note else "")


def _selection_text(selection) -> str:
    return " * ".join(f"{owner}.{item}" for owner, item in selection)


def _serialize_structure(s: MorphStructure) -> list[str]:
    lines = [f"structure {s.name}{' partial' if s.partial else ''} {{", f"  scale {s.scale}", f"  root {s.root}"]
    for comp in s.components.values():
        lines.append(f"  component {comp.id} {{")
        for alt in comp.alternatives:
            label = f" {_quote(alt.label)}" if alt.label else ""
            lines.append(f"    alt {alt.id} priority {alt.priority}{label}")
        lines.append("  }")
    for node in s.nodes.values():
        lines.append(f"  node {node.id} = {' * '.join(node.children)}")
    for node_id, sols in s.declared.items():
        lines.append(f"  solutions {node_id} {{")
        for sol in sols:
            prio = f" priority {sol.priority}" if sol.priority is not None else ""
            lines.append(f"    {sol.name} = {_selection_text(sol.selection)}{prio}")
        lines.append("  }")
    for node in s.nodes.values():
        table = s.compat.get(node.id)
        if table is None:
            continue
        rank = _option_rank(s, node.children)
        for key in sorted(table.entries, key=lambda k: sorted(rank(r) for r in k)):
            a, b = sorted(key, key=rank)
            lines.append(f"  compat {a[0]}.{a[1]} {b[0]}.{b[1]} = {table.entries[key]}"
                         f"{_assumed_suffix(table.assumed.get(key))}")
    lines.append("}")
    return lines


def _option_rank(s: MorphStructure, children):
    order: dict[Ref, tuple] = {}
    for ci, child in enumerate(children):
        if child in s.components:
            items = [a.id for a in s.components[child].alternatives]
        else:
            items = [d.name for d in s.declared.get(child, ())]
        for ai, item in enumerate(items):
            order[(child, item)] = (ci, ai, "")

    def rank(ref: Ref) -> tuple:
        if ref in order:
            return order[ref]
        ci = children.index(ref[0]) if ref[0] in children else len(children)
        return (ci, 1 << 30, ref[1])

    return rank


def _serialize_network(g: TopLevelNetwork) -> list[str]:
    lines = [f"network {g.name} {g.shape_hint} {{", f"  scale {g.compat.scale_max}"]
    for root in g.roots:
        lines.append(f"  root {root}")
    analysis_ids = set()
    for node in g.nodes:
        label = f" {_quote(node.label)}" if node.label else ""
        if isinstance(node, MorphPoint):
            head = f"  point {node.id}{label} uses {node.structure.name if node.structure else '?'}"
            if node.solutions:
                lines.append(head + " solutions {")
                for sol in node.solutions:
                    prio = f" priority {sol.priority}" if sol.priority is not None else ""
                    lines.append(f"    {sol.name} = {_selection_text(sol.selection)}{prio}")
                lines.append("  }")
            else:
                lines.append(head)
        else:
            analysis_ids.add(node.id)
            lines.append(f"  analysis {node.id}{label} {{")
            for outcome, succ in node.branches:
                lines.append(f"    on {_quote(outcome)} -> {succ}")
            lines.append("  }")
    for src, dst in g.edges:
        if src in analysis_ids and any(b[1] == dst for b in g.node(src).branches):
            continue
        lines.append(f"  edge {src} -> {dst}")
    point_order = {n.id: i for i, n in enumerate(g.nodes)}
    sol_order: dict[Ref, int] = {}
    for p in g.morph_points:
        for i, sol in enumerate(p.solutions):
            sol_order[(p.id, sol.name)] = i

    def rank(ref: Ref) -> tuple:
        return (point_order.get(ref[0], len(point_order)), sol_order.get(ref, 1 << 30), ref[1])

    for key in sorted(g.compat.entries, key=lambda k: sorted(rank(r) for r in k)):
        a, b = sorted(key, key=rank)
        lines.append(f"  compat {a[0]}.{a[1]} {b[0]}.{b[1]} = {g.compat.entries[key]}"
                     f"{_assumed_suffix(g.compat.assumed.get(key))}")
    lines.append("}")
    return lines


def serialize(doc: MorphDocument) -> str:
    """Canonical text: structures, then networks, each sorted by name."""
    lines = [f"morphfile {doc.version}"]
    for name in sorted(doc.structures):
        lines.append("")
        lines.extend(_serialize_structure(doc.structures[name]))
    for name in sorted(doc.networks):
        lines.append("")
        lines.extend(_serialize_network(doc.networks[name]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# graph export
# --------------------------------------------------------------------------


def _dot_id(text: str) -> str:
    return _quote(text)


def export_graph(obj, trajectory=None) -> str:
    """DOT text for a network, optionally annotated with a trajectory.

    Passing a ``Trajectory`` alone draws just the points and edges it covers.
    """
    from .trajectory import Trajectory

    if isinstance(obj, Trajectory):
        name = obj.name
        assignment = obj.assignment_map
        nodes = [(n, "box", f"{n}: {assignment[n]}" if n in assignment else n) for n in obj.nodes]
        edges = [(a, b, None) for a, b in obj.edges]
    else:
        net: TopLevelNetwork = obj
        name = net.name
        assignment = trajectory.assignment_map if trajectory is not None else {}
        nodes = []
        for node in net.nodes:
            if isinstance(node, AnalysisPoint):
                nodes.append((node.id, "diamond", node.id))
            else:
                label = f"{node.id}: {assignment[node.id]}" if node.id in assignment else node.id
                nodes.append((node.id, "box", label))
        edges = []
        for src, dst in net.edges:
            label = None
            if net.has_node(src) and isinstance(net.node(src), AnalysisPoint):
                label = ", ".join(o for o, s in net.node(src).branches if s == dst) or None
            edges.append((src, dst, label))

    out = [f"digraph {_dot_id(name)} {{"]
    for node_id, shape, label in nodes:
        out.append(f"  {_dot_id(node_id)} [shape={shape}, label={_quote(label)}];")
    for src, dst, label in edges:
        attr = f" [label={_quote(label)}]" if label else ""
        out.append(f"  {_dot_id(src)} -> {_dot_id(dst)}{attr};")
    out.append("}")
    return "\n".join(out) + "\n"

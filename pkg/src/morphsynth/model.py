"""Morphological structures, top-level networks and their validation.

A structure is a tree of composite nodes whose leaves are components; every
component carries prioritized design alternatives (priority 1 is best).
Compatibility estimates live on the composite node whose two *distinct*
children own the related alternatives.  At a composite node with composite
children the "alternatives" of a child are that child's solutions, so the
same table shape covers every level of the hierarchy.

All values here are plain frozen dataclasses; nothing validates on
construction.  ``validate_structure`` / ``validate_network`` report problems
instead of raising.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

# (owner id, item id): owner is a component (item = alternative) or a
# composite node (item = one of its solutions).  For inter-point tables the
# owner is a morph point and the item a local solution.
Ref = tuple[str, str]
PairKey = frozenset

DEFAULT_SCALE = 3

SHAPES = ("chain", "tree", "dag", "general")


class MorphError(Exception):
    """Base class for engine errors."""


def pair_key(a: Ref, b: Ref) -> PairKey:
    if a == b:
        raise ValueError(f"compatibility pair needs two distinct items, got {a}")
    return frozenset((a, b))


def format_ref(ref: Ref) -> str:
    return f"{ref[0]}.{ref[1]}"


@dataclass(frozen=True)
class DesignAlternative:
    id: str
    priority: int
    label: str = ""


@dataclass(frozen=True)
class Component:
    id: str
    alternatives: tuple[DesignAlternative, ...]

    def alternative(self, alt_id: str) -> Optional[DesignAlternative]:
        for alt in self.alternatives:
            if alt.id == alt_id:
                return alt
        return None


@dataclass(frozen=True)
class CompositeNode:
    id: str
    children: tuple[str, ...]


@dataclass(frozen=True)
class CompatTable:
    """Symmetric ordinal compatibility, 0 (incompatible) .. scale_max (best)."""

    scale_max: int = DEFAULT_SCALE
    entries: Mapping[PairKey, int] = field(default_factory=dict)
    # pair -> free-text note, for estimates that were supplied by assumption
    assumed: Mapping[PairKey, str] = field(default_factory=dict)

    def get(self, a: Ref, b: Ref) -> Optional[int]:
        return self.entries.get(frozenset((a, b)))

    def __len__(self) -> int:
        return len(self.entries)


# Inter-point tables have the same shape; refs are (point id, solution name).
InterPointCompat = CompatTable


@dataclass(frozen=True)
class DeclaredSolution:
    """A named selection over the children of one composite node."""

    name: str
    selection: tuple[Ref, ...]
    priority: Optional[int] = None

    @property
    def label(self) -> str:
        return "*".join(item for _, item in self.selection)


@dataclass(frozen=True)
class MorphStructure:
    name: str
    root: str
    components: Mapping[str, Component]
    nodes: Mapping[str, CompositeNode]
    compat: Mapping[str, CompatTable] = field(default_factory=dict)
    declared: Mapping[str, tuple[DeclaredSolution, ...]] = field(default_factory=dict)
    scale: int = DEFAULT_SCALE
    partial: bool = False

    @property
    def priority_depth(self) -> int:
        """Largest priority declared anywhere (the number of quality tiers)."""
        depth = 1
        for comp in self.components.values():
            for alt in comp.alternatives:
                depth = max(depth, alt.priority)
        for sols in self.declared.values():
            for sol in sols:
                if sol.priority is not None:
                    depth = max(depth, sol.priority)
        return depth

    def is_component(self, item_id: str) -> bool:
        return item_id in self.components

    def table(self, node_id: str) -> CompatTable:
        return self.compat.get(node_id) or CompatTable(self.scale)

    def parent_of(self, child_id: str) -> Optional[str]:
        for node in self.nodes.values():
            if child_id in node.children:
                return node.id
        return None

    def bottom_up(self, start: Optional[str] = None) -> list[str]:
        """Composite nodes under ``start`` (default: root) in post-order."""
        order: list[str] = []
        seen: set[str] = set()

        def visit(node_id: str) -> None:
            if node_id in seen or node_id not in self.nodes:
                return
            seen.add(node_id)
            for child in self.nodes[node_id].children:
                visit(child)
            order.append(node_id)

        visit(start or self.root)
        return order

    def leaf_components(self, node_id: Optional[str] = None) -> list[str]:
        out: list[str] = []
        stack = [node_id or self.root]
        seen: set[str] = set()
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            if cur in self.components:
                out.append(cur)
            elif cur in self.nodes:
                stack.extend(reversed(self.nodes[cur].children))
        return out

    def item_priority(self, ref: Ref) -> Optional[int]:
        owner, item = ref
        if owner in self.components:
            alt = self.components[owner].alternative(item)
            return alt.priority if alt else None
        for sol in self.declared.get(owner, ()):
            if sol.name == item:
                return sol.priority
        return None


@dataclass(frozen=True)
class PointSolution:
    name: str
    selection: tuple[Ref, ...]
    priority: Optional[int] = None

    @property
    def label(self) -> str:
        return "*".join(item for _, item in self.selection)


@dataclass(frozen=True)
class MorphPoint:
    id: str
    structure: Optional[MorphStructure] = None
    solutions: tuple[PointSolution, ...] = ()
    label: str = ""


@dataclass(frozen=True)
class AnalysisPoint:
    id: str
    branches: tuple[tuple[str, str], ...]  # (outcome label, successor id)
    label: str = ""

    def target(self, outcome: str) -> Optional[str]:
        for label, succ in self.branches:
            if label == outcome:
                return succ
        return None


NetworkNode = Union[MorphPoint, AnalysisPoint]


@dataclass(frozen=True)
class TopLevelNetwork:
    name: str
    shape_hint: str = "general"
    nodes: tuple[NetworkNode, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()
    compat: CompatTable = field(default_factory=CompatTable)
    roots: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        # Edges are kept grouped by source in node order; the order of the
        # out-edges of one node is the declaration order (used for tie-breaks).
        index = {node.id: i for i, node in enumerate(self.nodes)}
        ordered = sorted(
            enumerate(self.edges),
            key=lambda item: (index.get(item[1][0], len(index)), item[0]),
        )
        object.__setattr__(self, "edges", tuple(edge for _, edge in ordered))

    def node(self, node_id: str) -> NetworkNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def has_node(self, node_id: str) -> bool:
        return any(node.id == node_id for node in self.nodes)

    @property
    def node_ids(self) -> list[str]:
        return [node.id for node in self.nodes]

    @property
    def morph_points(self) -> list[MorphPoint]:
        return [node for node in self.nodes if isinstance(node, MorphPoint)]

    @property
    def analysis_points(self) -> list[AnalysisPoint]:
        return [node for node in self.nodes if isinstance(node, AnalysisPoint)]

    def successors(self, node_id: str) -> list[str]:
        return [dst for src, dst in self.edges if src == node_id]

    def predecessors(self, node_id: str) -> list[str]:
        return [src for src, dst in self.edges if dst == node_id]

    def start_nodes(self) -> list[str]:
        """Declared roots, else in-degree-0 nodes, else the first node."""
        if self.roots:
            return list(self.roots)
        targets = {dst for _, dst in self.edges}
        starts = [node.id for node in self.nodes if node.id not in targets]
        if not starts and self.nodes:
            starts = [self.nodes[0].id]
        return starts


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    subject: str
    issues: tuple[Issue, ...] = ()

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def valid(self) -> bool:
        return not self.errors

    def messages(self) -> list[str]:
        return [i.message for i in self.issues]


def child_options(structure: MorphStructure, child_id: str) -> list[str]:
    """Statically known alternative ids for a child (declared solutions for
    composite children; empty when they only come from synthesis)."""
    if child_id in structure.components:
        return [alt.id for alt in structure.components[child_id].alternatives]
    return [sol.name for sol in structure.declared.get(child_id, ())]


def validate_structure(s: MorphStructure, strict: Optional[bool] = None) -> ValidationReport:
    """Report every well-formedness problem of ``s``.

    ``strict=None`` follows the structure's own ``partial`` flag: missing
    compatibility entries are warnings for partial structures, errors
    otherwise.
    """
    if strict is None:
        strict = not s.partial
    issues: list[Issue] = []

    def err(code: str, msg: str) -> None:
        issues.append(Issue("error", code, msg))

    def warn(code: str, msg: str) -> None:
        issues.append(Issue("warning", code, msg))

    if s.scale < 1:
        err("scale", f"compatibility scale must be >= 1, got {s.scale}")

    for cid in s.components:
        if cid in s.nodes:
            err("duplicate-id", f"duplicate id {cid} (component and node)")

    for comp in s.components.values():
        if not comp.alternatives:
            err("empty-component", f"empty component {comp.id}")
        seen: set[str] = set()
        for alt in comp.alternatives:
            if alt.id in seen:
                err("duplicate-id", f"duplicate alternative id {alt.id} in component {comp.id}")
            seen.add(alt.id)
            if alt.priority < 1:
                err("priority", f"priority of {comp.id}.{alt.id} must be >= 1, got {alt.priority}")

    # tree shape over composite nodes
    parents: dict[str, list[str]] = {}
    for node in s.nodes.values():
        if not node.children:
            err("empty-node", f"composite node {node.id} has no children")
        for child in node.children:
            parents.setdefault(child, []).append(node.id)
            if child not in s.components and child not in s.nodes:
                err("dangling", f"node {node.id} references unknown child {child}")
    for child, ps in parents.items():
        if len(ps) > 1:
            err("not-a-tree", f"{child} is referenced more than once ({', '.join(ps)})")

    for cycle_node in _node_cycles(s):
        err("cycle", f"cyclic child reference through {cycle_node}")

    if s.root not in s.nodes:
        err("root", f"root {s.root} is not a composite node")
    else:
        if s.root in parents:
            err("root", f"root {s.root} is a child of {parents[s.root][0]}")
        reachable = set(s.leaf_components()) | set(s.bottom_up())
        for cid in s.components:
            if cid not in reachable:
                warn("unused", f"component {cid} is not under root {s.root}")
        for nid in s.nodes:
            if nid not in reachable:
                warn("unused", f"node {nid} is not under root {s.root}")

    # declared solutions
    for node_id, sols in s.declared.items():
        if node_id not in s.nodes:
            err("dangling", f"solutions declared for unknown node {node_id}")
            continue
        names: set[str] = set()
        for sol in sols:
            if sol.name in names:
                err("duplicate-id", f"duplicate solution name {sol.name} at node {node_id}")
            names.add(sol.name)
            _check_selection(s, node_id, sol.name, sol.selection, err)
            if sol.priority is not None and sol.priority < 1:
                err("priority", f"priority of solution {sol.name} must be >= 1")

    # compatibility tables
    for node_id, table in s.compat.items():
        if node_id not in s.nodes:
            err("dangling", f"compatibility table for unknown node {node_id}")
            continue
        children = s.nodes[node_id].children
        for key, value in table.entries.items():
            a, b = sorted(key)
            where = f"({a[1]},{b[1]})"
            if not 0 <= value <= table.scale_max:
                err("scale", f"compatibility {where} = {value} exceeds scale {table.scale_max}")
            if a[0] == b[0]:
                err("same-component", f"entry {where} relates two alternatives of {a[0]}")
            for owner, item in (a, b):
                if owner not in children:
                    err("not-siblings", f"entry {where} references {owner}, not a child of {node_id}")
                elif item not in child_options(s, owner) and owner in s.components:
                    err("dangling", f"entry {where} references unknown alternative {owner}.{item}")

    for node_id in s.bottom_up() if s.root in s.nodes else []:
        table = s.table(node_id)
        children = s.nodes[node_id].children
        for i, ci in enumerate(children):
            for cj in children[i + 1:]:
                for ai in child_options(s, ci):
                    for aj in child_options(s, cj):
                        if table.get((ci, ai), (cj, aj)) is None:
                            msg = f"missing compatibility entry ({ai},{aj})"
                            if strict:
                                err("missing-compat", msg)
                            else:
                                warn("missing-compat", msg)

    return ValidationReport(s.name, tuple(issues))


def _check_selection(s: MorphStructure, node_id: str, name: str,
                     selection: Sequence[Ref], err) -> None:
    children = s.nodes[node_id].children
    owners = [owner for owner, _ in selection]
    for child in children:
        if owners.count(child) != 1:
            err("selection", f"solution {name} must select exactly one item of {child}")
    for owner, item in selection:
        if owner not in children:
            err("selection", f"solution {name} selects {owner}.{item} outside node {node_id}")
        elif owner in s.components and s.components[owner].alternative(item) is None:
            err("dangling", f"solution {name} references unknown alternative {owner}.{item}")
        elif owner in s.nodes and item not in child_options(s, owner):
            err("dangling", f"solution {name} references undeclared solution {owner}.{item}")


def _node_cycles(s: MorphStructure) -> list[str]:
    state: dict[str, int] = {}
    found: list[str] = []

    def visit(node_id: str) -> None:
        state[node_id] = 1
        for child in s.nodes[node_id].children:
            if child not in s.nodes:
                continue
            if state.get(child) == 1:
                found.append(child)
            elif child not in state:
                visit(child)
        state[node_id] = 2

    for node_id in s.nodes:
        if node_id not in state:
            visit(node_id)
    return found


def find_back_edges(net: TopLevelNetwork) -> list[tuple[str, str]]:
    """Back edges of an iterative depth-first search.

    Searches start at ``net.start_nodes()`` and then at any node still
    unvisited, in declaration order; out-edges are explored in declaration
    order, so the result is deterministic.
    """
    succ: dict[str, list[str]] = {node.id: [] for node in net.nodes}
    for src, dst in net.edges:
        succ.setdefault(src, []).append(dst)
        succ.setdefault(dst, [])
    state: dict[str, int] = {}
    back: list[tuple[str, str]] = []
    starts = list(net.start_nodes()) + list(succ)
    for start in starts:
        if start in state or start not in succ:
            continue
        state[start] = 1
        stack: list[tuple[str, Iterator[str]]] = [(start, iter(succ[start]))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                continue
            mark = state.get(nxt)
            if mark == 1:
                back.append((node, nxt))
            elif mark is None:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
    return back


def reachable_from(net: TopLevelNetwork, starts: Iterable[str]) -> set[str]:
    seen: set[str] = set()
    queue = deque(s for s in starts if net.has_node(s))
    seen.update(queue)
    while queue:
        cur = queue.popleft()
        for nxt in net.successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def validate_network(g: TopLevelNetwork) -> ValidationReport:
    issues: list[Issue] = []

    def err(code: str, msg: str) -> None:
        issues.append(Issue("error", code, msg))

    ids = [node.id for node in g.nodes]
    seen: set[str] = set()
    for node_id in ids:
        if node_id in seen:
            err("duplicate-id", f"duplicate node id {node_id}")
        seen.add(node_id)
    if g.shape_hint not in SHAPES:
        err("shape", f"unknown shape hint {g.shape_hint}")

    edge_set = set()
    for src, dst in g.edges:
        for end in (src, dst):
            if end not in seen:
                err("dangling", f"edge {src}->{dst} references unknown node {end}")
        if (src, dst) in edge_set:
            err("duplicate-edge", f"duplicate edge {src}->{dst}")
        edge_set.add((src, dst))

    for node in g.analysis_points:
        labels: set[str] = set()
        for label, succ in node.branches:
            if label in labels:
                err("duplicate-outcome", f"analysis point {node.id} repeats outcome {label!r}")
            labels.add(label)
            if succ not in seen:
                err("dangling", f"branch {node.id} on {label!r} targets unknown node {succ}")
            elif (node.id, succ) not in edge_set:
                err("branch-edge", f"branch {node.id} on {label!r} has no edge {node.id}->{succ}")
        targets = {succ for _, succ in node.branches}
        for dst in g.successors(node.id):
            if dst not in targets:
                err("branch-edge", f"edge {node.id}->{dst} leaves analysis point without a branch")

    for root in g.roots:
        if root not in seen:
            err("dangling", f"declared root {root} is not a node")

    starts = g.start_nodes()
    reach = reachable_from(g, starts)
    for node_id in ids:
        if node_id not in reach:
            err("unreachable", f"node {node_id} is unreachable from {', '.join(starts)}")

    back = find_back_edges(g)
    indeg = {node_id: 0 for node_id in ids}
    outdeg = {node_id: 0 for node_id in ids}
    for src, dst in g.edges:
        if dst in indeg:
            indeg[dst] += 1
        if src in outdeg:
            outdeg[src] += 1
    graph_roots = [n for n in ids if indeg[n] == 0]

    if g.shape_hint in ("chain", "tree", "dag"):
        for src, dst in back:
            err("cycle", f"cycle detected ({src}→{dst})")
    if g.shape_hint in ("chain", "tree") and ids:
        if len(graph_roots) != 1:
            err("shape", f"{g.shape_hint} needs exactly one root, found {len(graph_roots)}")
        for n in ids:
            if indeg[n] > 1:
                err("shape", f"node {n} has in-degree {indeg[n]} in a {g.shape_hint}")
        if len(g.edges) != len(ids) - 1:
            err("shape", f"{g.shape_hint} with {len(ids)} nodes needs {len(ids) - 1} edges, has {len(g.edges)}")
    if g.shape_hint == "chain":
        for n in ids:
            if outdeg[n] > 1:
                err("shape", f"node {n} has out-degree {outdeg[n]} in a chain")

    # inter-point compatibility refs
    points = {p.id: {s.name for s in p.solutions} for p in g.morph_points}
    for key, value in g.compat.entries.items():
        a, b = sorted(key)
        where = f"({format_ref(a)},{format_ref(b)})"
        if not 0 <= value <= g.compat.scale_max:
            err("scale", f"compatibility {where} = {value} exceeds scale {g.compat.scale_max}")
        if a[0] == b[0]:
            err("same-point", f"entry {where} relates two solutions of point {a[0]}")
        for pid, sol in (a, b):
            if pid not in points:
                err("dangling", f"entry {where} references unknown morph point {pid}")
            elif points[pid] and sol not in points[pid]:
                err("dangling", f"entry {where} references unknown solution {pid}.{sol}")

    for p in g.morph_points:
        if p.structure is None or not p.structure.root in p.structure.nodes:
            continue
        root = p.structure.root
        names: set[str] = set()
        for sol in p.solutions:
            if sol.name in names:
                err("duplicate-id", f"duplicate solution {sol.name} at point {p.id}")
            names.add(sol.name)
            _check_selection(p.structure, root, f"{p.id}.{sol.name}", sol.selection, err)

    return ValidationReport(g.name, tuple(issues))


def is_acyclic(net: TopLevelNetwork) -> bool:
    return not find_back_edges(net)

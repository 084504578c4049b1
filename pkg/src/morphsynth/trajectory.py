"""Multistage trajectories over top-level networks.

A trajectory picks one local solution per covered morph point.  Its quality
is a quality vector one level up: w is the minimum inter-point
compatibility over the counted pairs (consecutive points, all pairs, or
network edges) and n counts the chosen solutions by priority.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from .model import (
    AnalysisPoint,
    CompatTable,
    MorphError,
    MorphPoint,
    PointSolution,
    TopLevelNetwork,
    find_back_edges,
)
from .quality import MissingCompatError, QualityVector, pareto_layers, tier_counts
from .synthesis import SynthesisConfig, check_assumed_value, synthesize_hierarchy


class AggregationMode(enum.Enum):
    ADJACENT = "adjacent"
    ALL_PAIRS = "all-pairs"


class TrajectoryError(MorphError):
    pass


@dataclass(frozen=True)
class Trajectory:
    name: str
    assignment: tuple[tuple[str, str], ...]  # (point id, solution name)
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    quality: QualityVector
    layer: int

    @property
    def assignment_map(self) -> dict[str, str]:
        return dict(self.assignment)

    @property
    def label(self) -> str:
        return "<" + " * ".join(sol for _, sol in self.assignment) + ">"


@dataclass(frozen=True)
class DecisionPath:
    points: tuple[str, ...]  # morph points in visiting order
    nodes: tuple[str, ...]  # every visited node, analysis points included
    truncated: bool = False


OutcomeAssignment = Mapping[str, str]


def solution_priority(sol: PointSolution) -> int:
    return sol.priority if sol.priority is not None else 1


def trajectory_depth(points: Iterable[MorphPoint]) -> int:
    depth = 1
    for p in points:
        if p.structure is not None:
            depth = max(depth, p.structure.priority_depth)
        for sol in p.solutions:
            depth = max(depth, solution_priority(sol))
    return depth


def _synthesize(points: Sequence[MorphPoint], pairs: Sequence[tuple[int, int]],
                compat: CompatTable, cfg: SynthesisConfig,
                edges: Sequence[tuple[str, str]]) -> list[Trajectory]:
    check_assumed_value(cfg, compat.scale_max)
    for p in points:
        if not p.solutions:
            raise TrajectoryError(f"morph point {p.id} has no local solutions")
    ids = [p.id for p in points]
    if len(set(ids)) != len(ids):
        raise TrajectoryError("a morph point appears twice")
    depth = trajectory_depth(points)

    # incoming[i] lists earlier indices k whose pair (k, i) counts toward w
    incoming: list[list[int]] = [[] for _ in points]
    for a, b in pairs:
        if a == b:
            continue
        lo, hi = min(a, b), max(a, b)
        if lo not in incoming[hi]:
            incoming[hi].append(lo)

    def value(k: int, sk: str, i: int, si: str) -> int:
        v = compat.get((ids[k], sk), (ids[i], si))
        if v is None:
            if cfg.assume_missing is None:
                raise MissingCompatError((ids[k], sk), (ids[i], si))
            return cfg.assume_missing
        return v

    if cfg.assume_missing is None:
        for i, preds in enumerate(incoming):
            for k in preds:
                for a in points[k].solutions:
                    for b in points[i].solutions:
                        value(k, a.name, i, b.name)

    found: list[tuple[tuple[tuple[str, str], ...], QualityVector]] = []
    chosen: list[PointSolution] = []

    def walk(w: int) -> None:
        i = len(chosen)
        if i == len(points):
            assignment = tuple((ids[k], chosen[k].name) for k in range(i))
            n = tier_counts((solution_priority(s) for s in chosen), depth)
            found.append((assignment, QualityVector(w, n)))
            return
        for sol in points[i].solutions:
            nw = w
            for k in incoming[i]:
                nw = min(nw, value(k, chosen[k].name, i, sol.name))
            if nw < cfg.min_w:
                continue
            chosen.append(sol)
            walk(nw)
            chosen.pop()

    if points:
        walk(compat.scale_max)
    layers = pareto_layers(
        found, cfg.layer_depth,
        quality=lambda item: item[1],
        ident=lambda item: tuple(sol for _, sol in item[0]),
    )
    out = []
    for index, layer in enumerate(layers, start=1):
        for assignment, q in layer:
            out.append(Trajectory(f"T{len(out) + 1}", assignment, tuple(ids), tuple(edges), q, index))
    return out


def chain_trajectories(points: Sequence[MorphPoint], compat: CompatTable,
                       mode: AggregationMode = AggregationMode.ADJACENT,
                       cfg: SynthesisConfig = SynthesisConfig()) -> list[Trajectory]:
    n = len(points)
    if mode is AggregationMode.ADJACENT:
        pairs = [(i, i + 1) for i in range(n - 1)]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = [(points[i].id, points[i + 1].id) for i in range(n - 1)]
    return _synthesize(points, pairs, compat, cfg, edges)


def _require_morph_only(net: TopLevelNetwork, what: str) -> list[MorphPoint]:
    if net.analysis_points:
        raise TrajectoryError(f"{what} must contain morph points only "
                              f"(found analysis point {net.analysis_points[0].id})")
    return net.morph_points


def tree_trajectories(tree: TopLevelNetwork, compat: CompatTable,
                      cfg: SynthesisConfig = SynthesisConfig()) -> list[Trajectory]:
    """Pareto trajectories of a tree of morph points; w counts tree edges only."""
    points = _require_morph_only(tree, "tree network")
    if not points:
        return []
    ids = [p.id for p in points]
    indeg = {i: 0 for i in ids}
    for _, dst in tree.edges:
        indeg[dst] += 1
    roots = [i for i in ids if indeg[i] == 0]
    if (len(roots) != 1 or any(d > 1 for d in indeg.values())
            or len(tree.edges) != len(ids) - 1 or find_back_edges(tree)):
        raise TrajectoryError(f"network {tree.name} is not a tree")
    if len(_bfs_order(tree, roots[0])) != len(ids):
        raise TrajectoryError(f"network {tree.name} is not a tree")
    return _over_edges(tree, points, compat, cfg)


def dag_trajectories(net: TopLevelNetwork, compat: CompatTable,
                     cfg: SynthesisConfig = SynthesisConfig()) -> list[Trajectory]:
    """Pareto trajectories of an acyclic network; w counts network edges."""
    points = _require_morph_only(net, "network")
    if find_back_edges(net):
        raise TrajectoryError(f"cyclic network {net.name}")
    return _over_edges(net, points, compat, cfg)


def _over_edges(net: TopLevelNetwork, points: Sequence[MorphPoint], compat: CompatTable,
                cfg: SynthesisConfig) -> list[Trajectory]:
    index = {p.id: i for i, p in enumerate(points)}
    pairs = [(index[a], index[b]) for a, b in net.edges]
    return _synthesize(points, pairs, compat, cfg, net.edges)


def _bfs_order(net: TopLevelNetwork, root: str) -> list[str]:
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for nxt in net.successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return order


def chain_order(net: TopLevelNetwork) -> list[str]:
    """Nodes of a chain network from its start to its end."""
    starts = net.start_nodes()
    return _bfs_order(net, starts[0]) if starts else []


def _linked(net: TopLevelNetwork, src: str, dst: str) -> bool:
    """True when ``dst`` follows ``src`` directly or through analysis points."""
    queue = deque(net.successors(src))
    seen: set[str] = set()
    while queue:
        cur = queue.popleft()
        if cur == dst:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        if isinstance(net.node(cur), AnalysisPoint):
            queue.extend(net.successors(cur))
    return False


def chain_for_path(net: TopLevelNetwork, path: Sequence[str], compat: CompatTable,
                   mode: AggregationMode = AggregationMode.ADJACENT,
                   cfg: SynthesisConfig = SynthesisConfig()) -> list[Trajectory]:
    """Chain trajectories along a walk of morph points of ``net``.

    Consecutive points must be joined by an edge, possibly through analysis
    points.  A walk that comes back to a point is synthesized over its
    distinct points; each consecutive visit contributes one adjacent pair.
    """
    if not path:
        return []
    nodes = []
    for node_id in path:
        if not net.has_node(node_id):
            raise TrajectoryError(f"unknown node {node_id}")
        node = net.node(node_id)
        if not isinstance(node, MorphPoint):
            raise TrajectoryError("path must contain morph points only")
        nodes.append(node)
    for a, b in zip(path, path[1:]):
        if not _linked(net, a, b):
            raise TrajectoryError(f"no edge from {a} to {b}")

    distinct: list[MorphPoint] = []
    index: dict[str, int] = {}
    for node in nodes:
        if node.id not in index:
            index[node.id] = len(distinct)
            distinct.append(node)
    if len(distinct) == len(nodes):
        return chain_trajectories(distinct, compat, mode, cfg)

    edges: list[tuple[str, str]] = []
    for a, b in zip(path, path[1:]):
        if a != b and (a, b) not in edges:
            edges.append((a, b))
    if mode is AggregationMode.ADJACENT:
        pairs = [(index[a], index[b]) for a, b in edges]
    else:
        n = len(distinct)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return _synthesize(distinct, pairs, compat, cfg, edges)


def execute_decision_path(net: TopLevelNetwork, start: str, outcomes: OutcomeAssignment,
                          step_limit: int = 100) -> DecisionPath:
    """Walk from ``start`` resolving analysis points by ``outcomes``.

    Each edge traversal is one step; when ``step_limit`` steps have been
    taken and the walk could go on, the result is flagged ``truncated``.
    """
    if step_limit < 1:
        raise ValueError("step_limit must be positive")
    if not net.has_node(start):
        raise TrajectoryError(f"unknown start node {start}")
    for point_id, label in outcomes.items():
        if not net.has_node(point_id) or not isinstance(net.node(point_id), AnalysisPoint):
            raise TrajectoryError(f"{point_id} is not an analysis point")
        if net.node(point_id).target(label) is None:
            raise TrajectoryError(f"analysis point {point_id} has no outcome {label!r}")

    visited = [start]
    steps = 0
    cur = start
    while True:
        node = net.node(cur)
        succ = net.successors(cur)
        if isinstance(node, AnalysisPoint):
            if cur not in outcomes:
                raise TrajectoryError(f"unresolved analysis point {cur}: no outcome given")
            nxt = node.target(outcomes[cur])
        else:
            if not succ:
                break
            if len(succ) > 1:
                raise TrajectoryError(f"ambiguous successor at morph point {cur}: {', '.join(succ)}")
            nxt = succ[0]
        if steps >= step_limit:
            return _decision(net, visited, truncated=True)
        steps += 1
        visited.append(nxt)
        cur = nxt
    return _decision(net, visited, truncated=False)


def _decision(net: TopLevelNetwork, visited: list[str], truncated: bool) -> DecisionPath:
    points = tuple(n for n in visited if isinstance(net.node(n), MorphPoint))
    return DecisionPath(points, tuple(visited), truncated)


def _restrict(net: TopLevelNetwork, keep_nodes: Sequence[str],
              keep_edges: Sequence[tuple[str, str]], shape: str,
              roots: Sequence[str] = ()) -> TopLevelNetwork:
    edge_set = set(keep_edges)
    nodes = []
    for node in net.nodes:
        if node.id not in keep_nodes:
            continue
        if isinstance(node, AnalysisPoint):
            branches = tuple(b for b in node.branches if (node.id, b[1]) in edge_set)
            node = replace(node, branches=branches)
        nodes.append(node)
    kept = set(keep_nodes)
    compat = CompatTable(
        net.compat.scale_max,
        {k: v for k, v in net.compat.entries.items() if all(ref[0] in kept for ref in k)},
        {k: v for k, v in net.compat.assumed.items() if all(ref[0] in kept for ref in k)},
    )
    return TopLevelNetwork(net.name, shape, tuple(nodes), tuple(keep_edges), compat, tuple(roots))


def spanning_tree(net: TopLevelNetwork, root: str,
                  prune_unreachable: bool = False) -> TopLevelNetwork:
    """Breadth-first spanning arborescence of ``net`` rooted at ``root``.

    Out-edges are taken in declaration order.  Nodes not reachable from the
    root are an error, or are dropped with ``prune_unreachable``.
    """
    if not net.has_node(root):
        raise TrajectoryError(f"unknown root {root}")
    seen = {root}
    queue = deque([root])
    tree_edges: list[tuple[str, str]] = []
    while queue:
        cur = queue.popleft()
        for nxt in net.successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                tree_edges.append((cur, nxt))
                queue.append(nxt)
    missing = [n for n in net.node_ids if n not in seen]
    if missing and not prune_unreachable:
        raise TrajectoryError(f"unreachable node {missing[0]} from root {root}")
    keep = [n for n in net.node_ids if n in seen]
    return _restrict(net, keep, tree_edges, "tree", (root,))


def back_edges(net: TopLevelNetwork) -> list[tuple[str, str]]:
    return find_back_edges(net)


def simplify_network(net: TopLevelNetwork) -> TopLevelNetwork:
    """Drop every depth-first back edge; the result is acyclic."""
    removed = set(find_back_edges(net))
    if not removed:
        return net
    edges = [e for e in net.edges if e not in removed]
    shape = "dag" if net.shape_hint == "general" else net.shape_hint
    return _restrict(net, net.node_ids, edges, shape, net.roots)


def contract_analysis(net: TopLevelNetwork) -> TopLevelNetwork:
    """Replace analysis points by direct edges to every branch target."""
    if not net.analysis_points:
        return net

    def targets(node_id: str, seen: frozenset) -> list[str]:
        out: list[str] = []
        for nxt in net.successors(node_id):
            if isinstance(net.node(nxt), AnalysisPoint):
                if nxt not in seen:
                    out.extend(targets(nxt, seen | {nxt}))
            else:
                out.append(nxt)
        return out

    edges: list[tuple[str, str]] = []
    for p in net.morph_points:
        for dst in targets(p.id, frozenset()):
            if (p.id, dst) not in edges:
                edges.append((p.id, dst))
    roots: list[str] = []
    for r in net.roots:
        found = [r] if isinstance(net.node(r), MorphPoint) else targets(r, frozenset({r}))
        roots.extend(x for x in found if x not in roots)
    keep = [p.id for p in net.morph_points]
    return _restrict(net, keep, edges, net.shape_hint, roots)


def resolve_solutions(net: TopLevelNetwork,
                      cfg: SynthesisConfig = SynthesisConfig()) -> TopLevelNetwork:
    """Fill in local solutions of points that declare none.

    Such points get the first Pareto layer of their structure's root, each
    with the default trajectory priority.
    """
    nodes = []
    changed = False
    for node in net.nodes:
        if isinstance(node, MorphPoint) and not node.solutions and node.structure is not None:
            local = SynthesisConfig(assume_missing=cfg.assume_missing, admit_zero=cfg.admit_zero,
                                    priority_rule=cfg.priority_rule, workers=cfg.workers)
            s = node.structure
            if s.partial and local.assume_missing is None:
                local = replace(local, assume_missing=0)
            results = synthesize_hierarchy(s, local)[s.root]
            sols = tuple(PointSolution(r.name, r.selection) for r in results if r.layer == 1)
            node = replace(node, solutions=sols)
            changed = True
        nodes.append(node)
    if not changed:
        return net
    return TopLevelNetwork(net.name, net.shape_hint, tuple(nodes), net.edges, net.compat, net.roots)


def network_trajectories(net: TopLevelNetwork,
                         mode: AggregationMode = AggregationMode.ADJACENT,
                         cfg: SynthesisConfig = SynthesisConfig()) -> list[Trajectory]:
    """Dispatch on the network's shape: chain, tree, or any acyclic network."""
    net = contract_analysis(net)
    if find_back_edges(net):
        raise TrajectoryError(f"cyclic network {net.name}")
    if net.shape_hint == "chain":
        return chain_trajectories([net.node(i) for i in chain_order(net)], net.compat, mode, cfg)
    if net.shape_hint == "tree":
        return tree_trajectories(net, net.compat, cfg)
    return dag_trajectories(net, net.compat, cfg)

"""Brute-force reference implementation.

Everything here is computed straight from the definitions: materialize
every combination, evaluate it, keep the feasible ones and peel layers by
comparing every pair.  No code is shared with the engine modules apart
from the plain data types, so agreement between the two is meaningful.
"""

from __future__ import annotations

import itertools
from typing import Optional, Sequence, Union

from .model import AnalysisPoint, CompatTable, MorphError, MorphPoint, MorphStructure, TopLevelNetwork
from .quality import QualityVector
from .synthesis import CompositeSolution, SynthesisConfig
from .trajectory import AggregationMode, Trajectory

DEFAULT_CAP = 1_000_000


class OracleCapExceeded(MorphError):
    pass


def _at_least(a: QualityVector, b: QualityVector, tiers: int) -> bool:
    if a.w < b.w:
        return False
    an = list(a.n) + [0] * (tiers - len(a.n))
    bn = list(b.n) + [0] * (tiers - len(b.n))
    for j in range(1, tiers + 1):
        if sum(an[:j]) < sum(bn[:j]):
            return False
    return True


def _same(a: QualityVector, b: QualityVector, tiers: int) -> bool:
    return _at_least(a, b, tiers) and _at_least(b, a, tiers)


def _peel(items: list, tiers: int, limit: Optional[int]) -> list[list]:
    """items: (ident, quality, payload).  Layers sorted as the engine promises."""
    # items with the same vector always share a layer, so compare vectors
    groups: list[tuple[QualityVector, list]] = []
    for x in items:
        for q, members in groups:
            if _same(q, x[1], tiers):
                members.append(x)
                break
        else:
            groups.append((x[1], [x]))

    layers = []
    rest = groups
    while rest and (limit is None or len(layers) < limit):
        front = []
        for g in rest:
            beaten = any(
                _at_least(h[0], g[0], tiers) and not _same(h[0], g[0], tiers)
                for h in rest if h is not g
            )
            if not beaten:
                front.append(g)
        layer = [x for _, members in front for x in members]
        layer.sort(key=lambda x: _sort_key(x, tiers))
        layers.append(layer)
        rest = [g for g in rest if all(g is not f for f in front)]
    return layers


def _sort_key(item, tiers: int):
    q = item[1]
    n = list(q.n) + [0] * (tiers - len(q.n))
    sums = [sum(n[:j]) for j in range(1, tiers + 1)]
    return (-q.w, [-s for s in sums], item[0])


def _pair_value(compat: CompatTable, a, b, assume: Optional[int]) -> int:
    v = compat.entries.get(frozenset((a, b)))
    if v is None:
        if assume is None:
            raise MorphError(f"missing compatibility entry ({a[0]}.{a[1]},{b[0]}.{b[1]})")
        return assume
    return v


def _counts(priorities: Sequence[int], tiers: int) -> tuple[int, ...]:
    return tuple(sum(1 for p in priorities if p == r) for r in range(1, tiers + 1))


def oracle_synthesize(structure: MorphStructure, node_id: str,
                      cfg: SynthesisConfig = SynthesisConfig(),
                      cap: int = DEFAULT_CAP) -> list[CompositeSolution]:
    """Exhaustive layers of one composite node.

    Components offer their alternatives; composite children offer their
    declared solutions with declared priorities.
    """
    children = structure.nodes[node_id].children
    columns = []
    for child in children:
        if child in structure.components:
            columns.append([(a.id, a.priority) for a in structure.components[child].alternatives])
        else:
            columns.append([(d.name, d.priority) for d in structure.declared.get(child, ())])
    total = 1
    for col in columns:
        total *= len(col)
    if total > cap:
        raise OracleCapExceeded(f"{total} compositions exceed the cap of {cap}")

    tiers = structure.priority_depth
    for col in columns:
        for _, p in col:
            if p is None:
                raise MorphError("declared solution without priority")
            tiers = max(tiers, p)
    table = structure.compat.get(node_id) or CompatTable(structure.scale)
    items = []
    for combo in itertools.product(*columns):
        refs = [(children[k], combo[k][0]) for k in range(len(children))]
        values = [_pair_value(table, refs[i], refs[j], cfg.assume_missing)
                  for i, j in itertools.combinations(range(len(refs)), 2)]
        w = min(values) if values else table.scale_max
        if w < 1 and not cfg.admit_zero:
            continue
        q = QualityVector(w, _counts([p for _, p in combo], tiers))
        items.append((tuple(item for item, _ in combo), q, tuple(refs)))

    out = []
    for index, layer in enumerate(_peel(items, tiers, cfg.layer_depth), start=1):
        for ident, q, refs in layer:
            out.append(CompositeSolution("*".join(ident), node_id, refs, q, index))
    return out


def oracle_trajectories(
    points_or_net: Union[Sequence[MorphPoint], TopLevelNetwork],
    compat: CompatTable,
    mode: AggregationMode = AggregationMode.ADJACENT,
    cfg: SynthesisConfig = SynthesisConfig(),
    cap: int = DEFAULT_CAP,
) -> list[Trajectory]:
    """Exhaustive trajectory layers.

    A list of points is a chain (``mode`` picks consecutive or all pairs);
    a network counts exactly its edges.
    """
    if isinstance(points_or_net, TopLevelNetwork):
        net = points_or_net
        if any(isinstance(n, AnalysisPoint) for n in net.nodes):
            raise MorphError("oracle needs a network of morph points only")
        points = [n for n in net.nodes if isinstance(n, MorphPoint)]
        pos = {p.id: i for i, p in enumerate(points)}
        pairs = {tuple(sorted((pos[a], pos[b]))) for a, b in net.edges if a != b}
        edges = tuple(net.edges)
    else:
        points = list(points_or_net)
        k = len(points)
        if mode is AggregationMode.ADJACENT:
            pairs = {(i, i + 1) for i in range(k - 1)}
        else:
            pairs = set(itertools.combinations(range(k), 2))
        edges = tuple((points[i].id, points[i + 1].id) for i in range(k - 1))

    total = 1
    for p in points:
        total *= len(p.solutions)
    if total > cap:
        raise OracleCapExceeded(f"{total} assignments exceed the cap of {cap}")

    tiers = 1
    for p in points:
        if p.structure is not None:
            for comp in p.structure.components.values():
                for alt in comp.alternatives:
                    tiers = max(tiers, alt.priority)
            for sols in p.structure.declared.values():
                for d in sols:
                    tiers = max(tiers, d.priority or 1)
        for s in p.solutions:
            tiers = max(tiers, s.priority or 1)

    items = []
    if points:
        for combo in itertools.product(*[p.solutions for p in points]):
            refs = [(points[i].id, combo[i].name) for i in range(len(points))]
            values = [_pair_value(compat, refs[i], refs[j], cfg.assume_missing)
                      for i, j in sorted(pairs)]
            w = min(values) if values else compat.scale_max
            if w < 1 and not cfg.admit_zero:
                continue
            q = QualityVector(w, _counts([s.priority or 1 for s in combo], tiers))
            items.append((tuple(s.name for s in combo), q, tuple(refs)))

    out = []
    for index, layer in enumerate(_peel(items, tiers, cfg.layer_depth), start=1):
        for _, q, refs in layer:
            out.append(Trajectory(f"T{len(out) + 1}", refs, tuple(p.id for p in points), edges, q, index))
    return out

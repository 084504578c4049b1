"""Cross-checks: stated quality claims and engine/oracle agreement.

A claims file has one claim per line (``#`` comments allowed)::

    "stage one best" solution tau1 L2*R1*E2*M0 = (2;4,0,0) pareto
    "subsystem X3" solution treatment/X J8*M2 = (3;2,0)
    "whole plan" trajectory stages all-pairs tau0.tau0_1*tau1.tau1_2 = (3;4,0)

``solution STRUCTURE[/NODE]`` evaluates a selection at a composite node
(the root by default); the optional ``pareto`` flag also requires it to be
in the first Pareto layer.  ``trajectory NETWORK [MODE]`` evaluates an
assignment of local solutions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional

from .model import MorphError, MorphPoint, MorphStructure, Ref, find_back_edges
from .morphfile import MorphDocument
from .oracle import oracle_synthesize, oracle_trajectories
from .quality import QualityVector, quality_of
from .synthesis import SynthesisConfig, synthesize_node
from .trajectory import (
    AggregationMode,
    chain_for_path,
    chain_order,
    contract_analysis,
    network_trajectories,
    resolve_solutions,
)

_CLAIM = re.compile(
    r"""^"(?P<label>[^"]*)"\s+
    (?P<kind>solution|trajectory)\s+
    (?P<target>[A-Za-z_]\w*(?:/[A-Za-z_]\w*)?)\s+
    (?:(?P<mode>adjacent|all-pairs)\s+)?
    (?P<sel>[^=]+?)\s*=\s*
    (?P<q>\([^)]*\))
    (?:\s+(?P<flag>pareto))?\s*$""",
    re.VERBOSE,
)

ALL_LAYERS = 1 << 30


class ClaimSyntaxError(MorphError):
    pass


@dataclass(frozen=True)
class Claim:
    label: str
    kind: str
    target: str
    node: Optional[str]
    mode: AggregationMode
    selection: tuple[str, ...]
    claimed: QualityVector
    pareto: bool = False
    line: int = 0


@dataclass(frozen=True)
class ClaimResult:
    claim: Claim
    status: str  # MATCH | MISMATCH | ERROR
    recomputed: Optional[QualityVector] = None
    detail: str = ""

    def render(self) -> str:
        label = self.claim.label
        if self.status == "ERROR":
            return f"{label}: ERROR {self.detail}"
        shown = _shape_like(self.recomputed, self.claim.claimed)
        if self.status == "MATCH":
            return f"{label}: MATCH {shown}"
        extra = f"{self.detail}, " if self.detail else ""
        return f"{label}: MISMATCH({extra}recomputed={shown}) claimed={self.claim.claimed}"


def _shape_like(q: QualityVector, like: QualityVector) -> QualityVector:
    try:
        return q.padded(len(like.n))
    except ValueError:
        return q


def parse_claims(text: str) -> list[Claim]:
    claims = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        close = line.find('"', 1)
        if close > 0:  # trailing comment, the label itself may contain '#'
            line = line[:close + 1] + line[close + 1:].split("#", 1)[0].rstrip()
        m = _CLAIM.match(line)
        if m is None:
            raise ClaimSyntaxError(f"line {lineno}: cannot read claim: {raw.strip()}")
        target, _, node = m["target"].partition("/")
        try:
            claimed = QualityVector.parse(m["q"])
        except ValueError as exc:
            raise ClaimSyntaxError(f"line {lineno}: {exc}") from None
        mode = AggregationMode(m["mode"]) if m["mode"] else AggregationMode.ADJACENT
        items = tuple(part.strip() for part in m["sel"].split("*"))
        claims.append(Claim(m["label"], m["kind"], target, node or None, mode, items,
                            claimed, m["flag"] == "pareto", lineno))
    return claims


def _structure_cfg(s: MorphStructure, **kw) -> SynthesisConfig:
    return SynthesisConfig(assume_missing=0 if s.partial else None, workers=1, **kw)


def _resolve_item(s: MorphStructure, children, text: str) -> Ref:
    owner, dot, item = text.partition(".")
    if dot:
        if owner not in children:
            raise MorphError(f"{owner} is not a child of the claimed node")
        return (owner, item)
    hits = []
    for child in children:
        if child in s.components:
            if s.components[child].alternative(text) is not None:
                hits.append(child)
        elif any(d.name == text for d in s.declared.get(child, ())):
            hits.append(child)
    if len(hits) != 1:
        raise MorphError(f"cannot resolve {text!r}")
    return (hits[0], text)


def _check_solution(doc: MorphDocument, claim: Claim) -> ClaimResult:
    s = doc.structures.get(claim.target)
    if s is None:
        raise MorphError(f"unknown structure {claim.target}")
    node = claim.node or s.root
    if node not in s.nodes:
        raise MorphError(f"unknown node {node} in {s.name}")
    children = s.nodes[node].children
    refs = [_resolve_item(s, children, item) for item in claim.selection]
    if sorted(r[0] for r in refs) != sorted(children):
        raise MorphError("selection must pick exactly one item per child")
    picks = []
    for ref in refs:
        p = s.item_priority(ref)
        if p is None:
            raise MorphError(f"no priority known for {ref[0]}.{ref[1]}")
        picks.append((ref, p))
    cfg = _structure_cfg(s)
    q = quality_of(picks, s.table(node), s.priority_depth, cfg.assume_missing)
    if q != claim.claimed:
        return ClaimResult(claim, "MISMATCH", q)
    if claim.pareto:
        front = synthesize_node(s, node, cfg)
        if not any(set(sol.selection) == set(refs) for sol in front):
            return ClaimResult(claim, "MISMATCH", q, "not in layer 1")
    return ClaimResult(claim, "MATCH", q)


def _check_trajectory(doc: MorphDocument, claim: Claim) -> ClaimResult:
    net = doc.networks.get(claim.target)
    if net is None:
        raise MorphError(f"unknown network {claim.target}")
    net = resolve_solutions(net)
    chosen: dict[str, str] = {}
    order: list[str] = []
    for item in claim.selection:
        point, dot, sol = item.partition(".")
        if not dot:
            raise MorphError(f"trajectory items are written point.solution, got {item!r}")
        if not net.has_node(point) or not isinstance(net.node(point), MorphPoint):
            raise MorphError(f"unknown morph point {point}")
        if all(s.name != sol for s in net.node(point).solutions):
            raise MorphError(f"unknown solution {item}")
        chosen[point] = sol
        order.append(point)

    # keep only the claimed solution at each claimed point
    nodes = tuple(
        replace(n, solutions=tuple(s for s in n.solutions if s.name == chosen[n.id]))
        if n.id in chosen else n
        for n in net.nodes
    )
    fixed = replace(net, nodes=nodes)
    cfg = SynthesisConfig(admit_zero=True, layer_depth=ALL_LAYERS, workers=1)
    if set(chosen) == {p.id for p in net.morph_points}:
        found = network_trajectories(fixed, claim.mode, cfg)
    else:
        found = chain_for_path(fixed, order, fixed.compat, claim.mode, cfg)
    (traj,) = found
    q = traj.quality
    return ClaimResult(claim, "MATCH" if q == claim.claimed else "MISMATCH", q)


def check_claim(doc: MorphDocument, claim: Claim) -> ClaimResult:
    try:
        if claim.kind == "solution":
            return _check_solution(doc, claim)
        return _check_trajectory(doc, claim)
    except MorphError as exc:
        return ClaimResult(claim, "ERROR", detail=str(exc))


def _solution_rows(sols):
    return [(tuple(s.selection), s.quality, s.layer) for s in sols]


def _traj_rows(trajs):
    return [(t.assignment, t.quality, t.layer) for t in trajs]


def _outcome(fn):
    try:
        return ("ok", fn())
    except MorphError:
        return ("error", None)


def cross_check(doc: MorphDocument) -> tuple[int, list[str]]:
    """Run engine and oracle on every checkable instance of ``doc``.

    Returns the number of instances compared and a description of each
    disagreement.
    """
    compared = 0
    problems: list[str] = []
    for s in doc.structures.values():
        cfg = _structure_cfg(s, layer_depth=ALL_LAYERS)
        for node_id, node in s.nodes.items():
            if any(c in s.nodes and not s.declared.get(c) for c in node.children):
                continue  # options only exist after synthesis
            engine = _outcome(lambda: _solution_rows(synthesize_node(s, node_id, cfg)))
            oracle = _outcome(lambda: _solution_rows(oracle_synthesize(s, node_id, cfg)))
            compared += 1
            if engine != oracle:
                problems.append(f"structure {s.name} node {node_id}: engine and oracle disagree")

    for g in doc.networks.values():
        try:
            net = contract_analysis(resolve_solutions(g))
        except MorphError:
            continue
        if find_back_edges(net):
            continue
        cfg = SynthesisConfig(layer_depth=ALL_LAYERS, workers=1)
        if net.shape_hint == "chain":
            points = [net.node(i) for i in chain_order(net)]
            for mode in AggregationMode:
                engine = _outcome(lambda: _traj_rows(network_trajectories(net, mode, cfg)))
                oracle = _outcome(lambda: _traj_rows(oracle_trajectories(points, net.compat, mode, cfg)))
                compared += 1
                if engine != oracle:
                    problems.append(f"network {g.name} ({mode.value}): engine and oracle disagree")
        else:
            engine = _outcome(lambda: _traj_rows(network_trajectories(net, AggregationMode.ADJACENT, cfg)))
            oracle = _outcome(lambda: _traj_rows(oracle_trajectories(net, net.compat, cfg=cfg)))
            compared += 1
            if engine != oracle:
                problems.append(f"network {g.name}: engine and oracle disagree")
    return compared, problems

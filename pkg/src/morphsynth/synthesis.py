"""Composition of design alternatives at composite nodes.

The engine enumerates one option per child depth-first, dropping partial
selections as soon as they contain an incompatible (0) pair, and peels
Pareto layers from what survives.  Hierarchical synthesis runs the same
procedure bottom-up, turning each child node's retained solutions into the
options of a virtual component one level higher.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .model import CompatTable, MorphError, MorphStructure, Ref
from .quality import MissingCompatError, QualityVector, pareto_layers, tier_counts

log = logging.getLogger(__name__)

PRIORITY_RULES = ("pareto-layer", "declared")
THREADS_ENV = "MORPHSYNTH_THREADS"


@dataclass(frozen=True)
class SynthesisConfig:
    layer_depth: int = 1
    # None: a missing compatibility entry is an error; otherwise the value used
    assume_missing: Optional[int] = None
    admit_zero: bool = False
    priority_rule: str = "pareto-layer"
    # None: take MORPHSYNTH_THREADS from the environment, default 1
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.layer_depth < 1:
            raise ValueError("layer_depth must be >= 1")
        if self.priority_rule not in PRIORITY_RULES:
            raise ValueError(f"unknown priority rule {self.priority_rule!r}")
        if self.assume_missing is not None and self.assume_missing < 0:
            raise ValueError("assumed compatibility must be >= 0")

    @property
    def min_w(self) -> int:
        return 0 if self.admit_zero else 1

    def thread_count(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        raw = os.environ.get(THREADS_ENV, "")
        try:
            return max(1, int(raw)) if raw else 1
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
            return 1


@dataclass(frozen=True)
class CompositeSolution:
    name: str
    node: str
    selection: tuple[Ref, ...]
    quality: QualityVector
    layer: int
    priority: Optional[int] = None

    @property
    def label(self) -> str:
        return "*".join(item for _, item in self.selection)

    @property
    def selection_map(self) -> dict[str, str]:
        return dict(self.selection)


@dataclass(frozen=True)
class Option:
    """One choice for a child of a composite node."""

    item: str
    priority: int


class SynthesisError(MorphError):
    pass


def check_assumed_value(cfg: SynthesisConfig, scale: int) -> None:
    if cfg.assume_missing is not None and cfg.assume_missing > scale:
        raise SynthesisError(f"assumed compatibility {cfg.assume_missing} exceeds scale {scale}")


def static_options(structure: MorphStructure, child: str) -> list[Option]:
    """Options of ``child`` known without synthesis."""
    if child in structure.components:
        return [Option(a.id, a.priority) for a in structure.components[child].alternatives]
    if child not in structure.nodes:
        raise SynthesisError(f"unknown child {child}")
    declared = structure.declared.get(child, ())
    if not declared:
        raise SynthesisError(f"node {child} has no declared solutions to choose from")
    out = []
    for sol in declared:
        if sol.priority is None:
            raise SynthesisError(f"declared solution {child}.{sol.name} has no priority")
        out.append(Option(sol.name, sol.priority))
    return out


def _require_entries(children: Sequence[str], options: Sequence[Sequence[Option]],
                     table: CompatTable) -> None:
    for i, ci in enumerate(children):
        for j in range(i + 1, len(children)):
            cj = children[j]
            for a in options[i]:
                for b in options[j]:
                    if table.get((ci, a.item), (cj, b.item)) is None:
                        raise MissingCompatError((ci, a.item), (cj, b.item))


def enumerate_feasible(
    children: Sequence[str],
    options: Sequence[Sequence[Option]],
    table: CompatTable,
    cfg: SynthesisConfig,
    depth: int,
) -> list[tuple[tuple[Ref, ...], QualityVector]]:
    """All feasible selections with their quality, in enumeration order."""
    m = len(children)
    if m == 0 or any(not opts for opts in options):
        return []
    if cfg.assume_missing is None:
        _require_entries(children, options, table)
    scale = table.scale_max
    min_w = cfg.min_w

    # value(i, a, j, b) lookups dominate the running time; resolve them once
    values: dict[tuple[int, int, int, int], int] = {}
    for i in range(m):
        for j in range(i + 1, m):
            for ai, a in enumerate(options[i]):
                for bi, b in enumerate(options[j]):
                    v = table.get((children[i], a.item), (children[j], b.item))
                    values[(i, ai, j, bi)] = cfg.assume_missing if v is None else v

    def walk(prefix: list[int], w: int, out: list) -> None:
        i = len(prefix)
        if i == m:
            sel = tuple((children[k], options[k][prefix[k]].item) for k in range(m))
            prios = [options[k][prefix[k]].priority for k in range(m)]
            out.append((sel, QualityVector(w, tier_counts(prios, depth))))
            return
        for oi in range(len(options[i])):
            nw = w
            for k in range(i):
                nw = min(nw, values[(k, prefix[k], i, oi)])
            if nw < min_w:
                continue
            prefix.append(oi)
            walk(prefix, nw, out)
            prefix.pop()

    workers = cfg.thread_count()
    if workers <= 1 or len(options[0]) <= 1:
        result: list = []
        walk([], scale, result)
        return result

    def branch(first: int) -> list:
        out: list = []
        walk([first], scale, out)
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(branch, range(len(options[0]))))
    return [item for part in parts for item in part]


def _layered(node: str, found, depth_limit: Optional[int],
             declared_names: Mapping[frozenset, str],
             priorities: Optional[Mapping[frozenset, Optional[int]]] = None,
             prefix: Optional[str] = None) -> list[CompositeSolution]:
    prefix = prefix or node
    layers = pareto_layers(
        found, depth_limit,
        quality=lambda item: item[1],
        ident=lambda item: tuple(x for _, x in item[0]),
    )
    taken = set(declared_names.values())
    out: list[CompositeSolution] = []
    counter = 0
    for index, layer in enumerate(layers, start=1):
        for sel, q in layer:
            name = declared_names.get(frozenset(sel))
            if name is None:
                counter += 1
                name = f"{prefix}_{counter}"
                while name in taken:
                    counter += 1
                    name = f"{prefix}_{counter}"
            taken.add(name)
            prio = priorities.get(frozenset(sel)) if priorities else None
            out.append(CompositeSolution(name, node, sel, q, index, prio))
    return out


def synthesize_node(
    structure: MorphStructure,
    node_id: str,
    cfg: SynthesisConfig = SynthesisConfig(),
    options: Optional[Mapping[str, Sequence[Option]]] = None,
) -> list[CompositeSolution]:
    """Pareto-layered composite solutions of one composite node.

    ``options`` overrides the choices for some children (hierarchical
    synthesis passes the synthesized solutions of composite children here);
    the remaining children use their alternatives or declared solutions.
    """
    if node_id not in structure.nodes:
        raise SynthesisError(f"unknown node {node_id}")
    check_assumed_value(cfg, structure.scale)
    children = structure.nodes[node_id].children
    opts = [list(options[c]) if options and c in options else static_options(structure, c)
            for c in children]
    depth = max([structure.priority_depth] + [o.priority for row in opts for o in row])
    found = enumerate_feasible(children, opts, structure.table(node_id), cfg, depth)
    declared = {frozenset(sol.selection): sol.name for sol in structure.declared.get(node_id, ())}
    prefix = structure.name if node_id == structure.root else node_id
    return _layered(node_id, found, cfg.layer_depth, declared, prefix=prefix)


def evaluate_declared(structure: MorphStructure, node_id: str,
                      cfg: SynthesisConfig = SynthesisConfig()) -> list[CompositeSolution]:
    """Quality and layer of every declared solution of ``node_id``.

    Solutions are evaluated as declared, so an infeasible one still shows up
    (with its w); layers are peeled among the declared set only.
    """
    check_assumed_value(cfg, structure.scale)
    table = structure.table(node_id)
    depth = structure.priority_depth
    found = []
    prios = {}
    for sol in structure.declared.get(node_id, ()):
        opts = []
        for owner, item in sol.selection:
            p = structure.item_priority((owner, item))
            if p is None:
                raise SynthesisError(f"{owner}.{item} in {sol.name} has no priority")
            opts.append([Option(item, p)])
        owners = [owner for owner, _ in sol.selection]
        relaxed = SynthesisConfig(assume_missing=cfg.assume_missing, admit_zero=True, workers=1)
        (entry,) = enumerate_feasible(owners, opts, table, relaxed, depth)
        found.append(entry)
        prios[frozenset(sol.selection)] = sol.priority
    names = {frozenset(sol.selection): sol.name for sol in structure.declared.get(node_id, ())}
    return _layered(node_id, found, None, names, prios)


def synthesize_hierarchy(structure: MorphStructure,
                         cfg: SynthesisConfig = SynthesisConfig(),
                         start: Optional[str] = None) -> dict[str, list[CompositeSolution]]:
    """Bottom-up synthesis of every composite node under ``start``.

    With the pareto-layer rule a child's retained solutions enter the parent
    with priority equal to their layer index.  With the declared rule the
    parent chooses among the child's declared solutions and their declared
    priorities; for such children the result lists the declared solutions
    with recomputed quality.
    """
    results: dict[str, list[CompositeSolution]] = {}
    for node_id in structure.bottom_up(start):
        overrides: dict[str, list[Option]] = {}
        for child in structure.nodes[node_id].children:
            if child not in structure.nodes:
                continue
            if cfg.priority_rule == "declared":
                overrides[child] = static_options(structure, child)
            else:
                overrides[child] = [Option(s.name, s.layer) for s in results[child]]
        if (cfg.priority_rule == "declared" and structure.declared.get(node_id)
                and node_id != (start or structure.root)):
            results[node_id] = evaluate_declared(structure, node_id, cfg)
        else:
            results[node_id] = synthesize_node(structure, node_id, cfg, overrides)
    return results


def expand(structure: MorphStructure, results: Mapping[str, Sequence[CompositeSolution]],
           solution: CompositeSolution) -> list[Ref]:
    """Leaf alternatives behind a (possibly nested) solution."""
    out: list[Ref] = []
    for owner, item in solution.selection:
        if owner in structure.components:
            out.append((owner, item))
            continue
        inner = next((s for s in results.get(owner, ()) if s.name == item), None)
        if inner is None:
            decl = next((d for d in structure.declared.get(owner, ()) if d.name == item), None)
            if decl is None:
                out.append((owner, item))
                continue
            inner = CompositeSolution(decl.name, owner, decl.selection, QualityVector(0, ()), 0)
        out.extend(expand(structure, results, inner))
    return out

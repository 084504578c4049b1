"""Command-line front end.

Exit codes: 0 success, 1 validation or parse failure, 2 empty result,
3 engine/oracle disagreement.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .model import MorphError, find_back_edges, validate_network, validate_structure
from .morphfile import MorphDocument, MorphParseError, export_graph, parse_file
from .synthesis import SynthesisConfig, synthesize_hierarchy
from .trajectory import (
    AggregationMode,
    Trajectory,
    chain_for_path,
    execute_decision_path,
    network_trajectories,
    resolve_solutions,
    simplify_network,
    spanning_tree,
)
from .verify import ClaimSyntaxError, check_claim, cross_check, parse_claims

log = logging.getLogger("morphsynth")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_EMPTY = 2
EXIT_BREACH = 3


class CliFailure(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


class Output:
    """Collects text lines and a JSON mirror; prints one of them at the end."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: list[str] = []
        self.data: dict = {}

    def line(self, text: str) -> None:
        self.lines.append(text)

    def emit(self) -> None:
        if self.as_json:
            print(json.dumps(self.data, indent=2, sort_keys=True))
        else:
            for text in self.lines:
                print(text)


def _load(path: str) -> MorphDocument:
    try:
        return parse_file(path)
    except MorphParseError as exc:
        for issue in exc.errors:
            print(f"{path}:{issue.line}:{issue.col}: error: {issue.message}", file=sys.stderr)
        raise CliFailure(f"cannot parse {path}") from None
    except OSError as exc:
        raise CliFailure(f"cannot read {path}: {exc.strerror}") from None


def _quality_json(q) -> dict:
    return {"w": q.w, "n": list(q.n), "text": str(q)}


def cmd_validate(args, out: Output) -> int:
    doc = _load(args.file)
    failed = False
    out.data["structures"] = {}
    out.data["networks"] = {}
    for s in doc.structures.values():
        strict = True if args.strict else (False if args.partial else None)
        report = validate_structure(s, strict=strict)
        failed |= not report.valid
        _report(out, "structure", s.name, report)
        out.data["structures"][s.name] = _report_json(report)
    for g in doc.networks.values():
        report = validate_network(g)
        failed |= not report.valid
        _report(out, "network", g.name, report)
        out.data["networks"][g.name] = _report_json(report)
    out.data["valid"] = not failed
    out.line("invalid" if failed else "valid")
    return EXIT_INVALID if failed else EXIT_OK


def _report(out: Output, kind: str, name: str, report) -> None:
    state = "ok" if report.valid else "FAILED"
    out.line(f"{kind} {name}: {state}")
    for issue in report.issues:
        out.line(f"  {issue}")


def _report_json(report) -> dict:
    return {
        "valid": report.valid,
        "issues": [{"severity": i.severity, "code": i.code, "message": i.message} for i in report.issues],
    }


def cmd_synth(args, out: Output) -> int:
    doc = _load(args.file)
    s = doc.structures.get(args.structure)
    if s is None:
        raise CliFailure(f"unknown structure {args.structure}")
    if args.node is not None and args.node not in s.nodes:
        raise CliFailure(f"unknown node {args.node} in structure {s.name}")
    assume = args.assume_missing
    if assume is None and (args.partial or s.partial):
        assume = 0
    cfg = SynthesisConfig(
        layer_depth=args.layers,
        assume_missing=assume,
        admit_zero=args.admit_zero,
        priority_rule="declared" if args.declared else "pareto-layer",
    )
    results = synthesize_hierarchy(s, cfg, start=args.node)
    target = args.node or s.root
    out.data = {"structure": s.name, "nodes": {}}
    for node_id, sols in results.items():
        out.line(f"node {node_id}")
        rows = []
        for sol in sols:
            out.line(f"{sol.name} = {sol.label} N={sol.quality} layer={sol.layer}")
            rows.append({
                "name": sol.name,
                "selection": {owner: item for owner, item in sol.selection},
                "label": sol.label,
                "quality": _quality_json(sol.quality),
                "layer": sol.layer,
            })
        out.data["nodes"][node_id] = rows
    if not results.get(target):
        out.line("no feasible solution")
        return EXIT_EMPTY
    return EXIT_OK


def _parse_outcomes(text: str) -> dict[str, str]:
    outcomes = {}
    for part in text.split(","):
        if not part.strip():
            continue
        point, eq, label = part.partition("=")
        if not eq:
            raise CliFailure(f"bad outcome {part!r}; expected point=label")
        outcomes[point.strip()] = label.strip()
    return outcomes


def _trajectory_json(t: Trajectory) -> dict:
    return {
        "name": t.name,
        "assignment": dict(t.assignment),
        "label": t.label,
        "quality": _quality_json(t.quality),
        "layer": t.layer,
    }


def _compute_trajectories(args, doc: MorphDocument, out: Output):
    net = doc.networks.get(args.network)
    if net is None:
        raise CliFailure(f"unknown network {args.network}")
    cfg = SynthesisConfig(layer_depth=args.layers, assume_missing=args.assume_missing)
    mode = AggregationMode(args.mode)
    out.data.update({"network": net.name, "mode": mode.value, "transforms": []})

    if getattr(args, "spanning_tree", None):
        net = spanning_tree(net, args.spanning_tree, prune_unreachable=True)
        text = f"transform: spanning tree rooted at {args.spanning_tree}"
        dropped = [n for n in doc.networks[args.network].node_ids if not net.has_node(n)]
        if dropped:
            text += f" (unreachable, dropped: {', '.join(dropped)})"
        out.line(text)
        out.data["transforms"].append(text)
    elif getattr(args, "simplify", False):
        removed = find_back_edges(net)
        net = simplify_network(net)
        text = "transform: simplified, removed " + (
            ", ".join(f"{a}->{b}" for a, b in removed) if removed else "nothing")
        out.line(text)
        out.data["transforms"].append(text)

    net = resolve_solutions(net, cfg)
    outcomes = getattr(args, "outcomes", None)
    if outcomes:
        start = args.start or net.start_nodes()[0]
        path = execute_decision_path(net, start, _parse_outcomes(outcomes), args.step_limit)
        note = " (truncated at step limit)" if path.truncated else ""
        out.line("path " + " -> ".join(path.points) + note)
        out.data["path"] = {"points": list(path.points), "nodes": list(path.nodes),
                            "truncated": path.truncated}
        return net, chain_for_path(net, path.points, net.compat, mode, cfg)

    if find_back_edges(net):
        raise CliFailure(f"cyclic network {net.name}; use --simplify or --spanning-tree")
    return net, network_trajectories(net, mode, cfg)


def cmd_trajectory(args, out: Output) -> int:
    doc = _load(args.file)
    net, trajectories = _compute_trajectories(args, doc, out)
    out.line(f"network {net.name} ({net.shape_hint}, mode {args.mode})")
    for t in trajectories:
        out.line(f"{t.name} {t.label} N={t.quality} layer={t.layer}")
    out.data["trajectories"] = [_trajectory_json(t) for t in trajectories]
    if not trajectories:
        out.line("no feasible trajectory")
        return EXIT_EMPTY
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    doc = _load(args.file)
    results = []
    if args.claims:
        try:
            with open(args.claims, encoding="utf-8") as fh:
                claims = parse_claims(fh.read())
        except OSError as exc:
            raise CliFailure(f"cannot read {args.claims}: {exc.strerror}") from None
        except ClaimSyntaxError as exc:
            raise CliFailure(str(exc)) from None
        results = [check_claim(doc, c) for c in claims]
    for r in results:
        out.line(r.render())
    compared, problems = cross_check(doc)
    for p in problems:
        out.line(p)
    agree = not problems
    out.line(f"engine/oracle: {'agree' if agree else 'DISAGREE'} on {compared} instances")
    out.data = {
        "claims": [{
            "label": r.claim.label,
            "status": r.status,
            "claimed": str(r.claim.claimed),
            "recomputed": str(r.recomputed) if r.recomputed is not None else None,
            "detail": r.detail,
            "text": r.render(),
        } for r in results],
        "engine_oracle": {"compared": compared, "agree": agree, "problems": problems},
    }
    if any(r.status == "ERROR" for r in results):
        return EXIT_INVALID if agree else EXIT_BREACH
    return EXIT_OK if agree else EXIT_BREACH


def cmd_export(args, out: Output) -> int:
    doc = _load(args.file)
    net = doc.networks.get(args.network)
    if net is None:
        raise CliFailure(f"unknown network {args.network}")
    chosen = None
    if args.trajectory:
        scratch = Output(False)
        targs = argparse.Namespace(network=args.network, mode=args.mode, layers=args.layers,
                                   assume_missing=None, outcomes=None)
        _, trajectories = _compute_trajectories(targs, doc, scratch)
        chosen = next((t for t in trajectories if t.name == args.trajectory), None)
        if chosen is None:
            raise CliFailure(f"unknown trajectory {args.trajectory}")
    text = export_graph(net, chosen)
    out.lines.append(text.rstrip("\n"))
    out.data = {"network": net.name, "trajectory": args.trajectory, "dot": text}
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morphsynth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help=".morph input file")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("validate", help="parse and check well-formedness")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--strict", action="store_true", help="missing compatibility entries are errors")
    group.add_argument("--partial", action="store_true", help="missing compatibility entries are warnings")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="Pareto-efficient composite solutions of a structure")
    common(p)
    p.add_argument("--structure", required=True)
    p.add_argument("--node", help="synthesize this composite node (default: the root)")
    p.add_argument("--layers", type=int, default=1, help="number of Pareto layers to keep")
    p.add_argument("--partial", action="store_true", help="treat missing entries as 0")
    p.add_argument("--assume-missing", type=int, metavar="V", help="value for missing entries")
    p.add_argument("--admit-zero", action="store_true", help="keep solutions with w = 0")
    p.add_argument("--declared", action="store_true",
                   help="parents choose among declared child solutions and priorities")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("trajectory", help="Pareto-efficient trajectories over a network")
    common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--mode", choices=[m.value for m in AggregationMode], default="adjacent")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--assume-missing", type=int, metavar="V")
    p.add_argument("--outcomes", help="decision outcomes, e.g. a0=good,a1=insufficient")
    p.add_argument("--start", help="start node for --outcomes (default: the network's first root)")
    p.add_argument("--step-limit", type=int, default=100)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--spanning-tree", metavar="ROOT", help="replace the network by a BFS spanning tree")
    group.add_argument("--simplify", action="store_true", help="drop DFS back edges first")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("verify", help="check claims and engine/oracle agreement")
    common(p)
    p.add_argument("--claims", help="claims file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="DOT text of a network")
    common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--trajectory", help="annotate with this trajectory (T1, T2, ...)")
    p.add_argument("--mode", choices=[m.value for m in AggregationMode], default="adjacent")
    p.add_argument("--layers", type=int, default=1)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if getattr(args, "layers", 1) < 1:
        parser.error("--layers must be >= 1")
    out = Output(args.json)
    try:
        code = args.func(args, out)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.json:
            print(json.dumps({"error": str(exc)}, indent=2, sort_keys=True))
        return exc.code
    except (MorphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.json:
            print(json.dumps({"error": str(exc)}, indent=2, sort_keys=True))
        return EXIT_INVALID
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())

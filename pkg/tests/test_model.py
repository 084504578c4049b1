from __future__ import annotations

from dataclasses import replace

import pytest

from morphsynth.model import (
    AnalysisPoint,
    CompatTable,
    Component,
    CompositeNode,
    DeclaredSolution,
    DesignAlternative,
    MorphPoint,
    MorphStructure,
    TopLevelNetwork,
    find_back_edges,
    pair_key,
    validate_network,
    validate_structure,
)


def two_components(**kw) -> MorphStructure:
    comps = {
        "A": Component("A", (DesignAlternative("A1", 1), DesignAlternative("A2", 2))),
        "B": Component("B", (DesignAlternative("B1", 1),)),
    }
    entries = {
        frozenset({("A", "A1"), ("B", "B1")}): 3,
        frozenset({("A", "A2"), ("B", "B1")}): 2,
    }
    base = dict(name="two", root="S", components=comps, nodes={"S": CompositeNode("S", ("A", "B"))},
                compat={"S": CompatTable(3, entries)})
    base.update(kw)
    return MorphStructure(**base)


def test_pair_key_is_unordered():
    assert pair_key(("A", "x"), ("B", "y")) == pair_key(("B", "y"), ("A", "x"))
    with pytest.raises(ValueError):
        pair_key(("A", "x"), ("A", "x"))


def test_priority_depth(team):
    assert two_components().priority_depth == 2
    assert team.structures["tau1"].priority_depth == 3
    assert team.structures["tau2"].priority_depth == 2


def test_valid_structure_has_no_issues(team):
    report = validate_structure(team.structures["tau1"])
    assert report.valid and report.issues == ()


def test_empty_component():
    s = two_components()
    s = replace(s, components={**s.components, "B": Component("B", ())})
    report = validate_structure(s)
    assert not report.valid
    assert any("empty component B" in m for m in report.messages())


def test_duplicate_alternative_and_bad_priority():
    comps = {"A": Component("A", (DesignAlternative("A1", 1), DesignAlternative("A1", 0))),
             "B": Component("B", (DesignAlternative("B1", 1),))}
    report = validate_structure(two_components(components=comps))
    codes = {i.code for i in report.errors}
    assert {"duplicate-id", "priority"} <= codes


def test_cyclic_child_references():
    nodes = {"S": CompositeNode("S", ("X",)), "X": CompositeNode("X", ("A", "S"))}
    report = validate_structure(two_components(nodes=nodes, compat={}))
    assert any(i.code == "cycle" for i in report.errors)


def test_shared_child_is_not_a_tree():
    nodes = {"S": CompositeNode("S", ("X", "Y")), "X": CompositeNode("X", ("A", "B")),
             "Y": CompositeNode("Y", ("A",))}
    report = validate_structure(two_components(nodes=nodes, compat={}))
    assert any(i.code == "not-a-tree" for i in report.errors)


def test_entry_out_of_scale_and_same_component():
    s = two_components()
    entries = dict(s.compat["S"].entries)
    entries[frozenset({("A", "A1"), ("B", "B1")})] = 5
    entries[frozenset({("A", "A1"), ("A", "A2")})] = 1
    report = validate_structure(replace(s, compat={"S": CompatTable(3, entries)}))
    codes = {i.code for i in report.errors}
    assert {"scale", "same-component"} <= codes


def test_missing_entry_strict_versus_partial(team):
    # drop the assumed E3-M1 estimate too, leaving both M1 column gaps
    s = team.structures["tau2"]
    table = s.compat["S"]
    key = frozenset({("E", "E3"), ("M", "M1")})
    entries = {k: v for k, v in table.entries.items() if k != key}
    s = replace(s, compat={"S": CompatTable(3, entries)})

    partial = validate_structure(s, strict=False)
    assert partial.valid
    assert "missing compatibility entry (E3,M1)" in [i.message for i in partial.warnings]

    strict = validate_structure(s, strict=True)
    assert not strict.valid
    assert "missing compatibility entry (E3,M1)" in [i.message for i in strict.errors]


def test_partial_flag_sets_default_mode(team):
    s = team.structures["tau2"]
    assert s.partial
    assert validate_structure(s).valid
    assert not validate_structure(replace(s, partial=False)).valid


def test_validation_is_pure(medical):
    s = medical.structures["treatment"]
    assert validate_structure(s) == validate_structure(s)


def test_strictly_valid_structure_has_total_compat(team):
    for s in team.structures.values():
        if not validate_structure(s, strict=True).valid:
            continue
        for node in s.nodes.values():
            table = s.table(node.id)
            for i, ci in enumerate(node.children):
                for cj in node.children[i + 1:]:
                    for a in s.components[ci].alternatives:
                        for b in s.components[cj].alternatives:
                            assert table.get((ci, a.id), (cj, b.id)) is not None


def test_declared_solution_must_cover_children(medical):
    s = medical.structures["treatment"]
    assert validate_structure(s).valid
    bad = DeclaredSolution("Xbad", (("J", "J1"),), 1)
    report = validate_structure(replace(s, declared={**s.declared, "X": (bad,)}))
    assert any(i.code == "selection" for i in report.errors)


def test_fixture_networks_valid(team, medical, illustrative):
    for doc in (team, medical, illustrative):
        for g in doc.networks.values():
            assert validate_network(g).valid, (g.name, validate_network(g).messages())


def test_decision_network_with_tree_hint(illustrative):
    g = illustrative.networks["decision"]
    assert g.shape_hint == "tree"
    assert validate_network(g).valid


def test_feedback_network_with_tree_hint(medical):
    g = replace(medical.networks["feedback"], shape_hint="tree")
    messages = validate_network(g).messages()
    assert "cycle detected (a4→mu0)" in messages


def test_single_node_chain():
    g = TopLevelNetwork("one", "chain", (MorphPoint("p"),), ())
    assert validate_network(g).valid


def test_tree_hint_requires_edge_count():
    pts = tuple(MorphPoint(f"p{i}") for i in range(3))
    diamond = TopLevelNetwork("t", "tree", pts, (("p0", "p1"), ("p0", "p2"), ("p1", "p2")))
    assert not validate_network(diamond).valid
    tree = TopLevelNetwork("t", "tree", pts, (("p0", "p1"), ("p0", "p2")))
    assert validate_network(tree).valid


def test_chain_hint_rejects_branching():
    pts = tuple(MorphPoint(f"p{i}") for i in range(3))
    g = TopLevelNetwork("c", "chain", pts, (("p0", "p1"), ("p0", "p2")))
    assert any("out-degree" in m for m in validate_network(g).messages())


def test_dangling_and_unreachable():
    pts = (MorphPoint("p0"), MorphPoint("p1"), AnalysisPoint("a", (("ok", "ghost"),)))
    g = TopLevelNetwork("g", "general", pts, (("p0", "p1"),), roots=("p0",))
    messages = validate_network(g).messages()
    assert any("unknown node ghost" in m for m in messages)
    assert any("node a is unreachable" in m for m in messages)


def test_duplicate_outcome_labels():
    pts = (AnalysisPoint("a", (("ok", "p"), ("ok", "q"))), MorphPoint("p"), MorphPoint("q"))
    g = TopLevelNetwork("g", "tree", pts, (("a", "p"), ("a", "q")))
    assert any(i.code == "duplicate-outcome" for i in validate_network(g).errors)


def test_edges_grouped_by_source_in_node_order():
    pts = (MorphPoint("x"), MorphPoint("y"), MorphPoint("z"))
    g = TopLevelNetwork("g", "general", pts, (("y", "z"), ("x", "z"), ("x", "y")))
    assert g.edges == (("x", "z"), ("x", "y"), ("y", "z"))


def test_back_edges_of_feedback_network(medical):
    # depth-first from mu0 in declaration order: a4 sees mu2 and mu1 already
    # finished and mu0 still open, so only a4->mu0 closes a cycle
    assert find_back_edges(medical.networks["feedback"]) == [("a4", "mu0")]


def test_self_loop_is_back_edge():
    g = TopLevelNetwork("g", "general", (MorphPoint("p"),), (("p", "p"),))
    assert find_back_edges(g) == [("p", "p")]

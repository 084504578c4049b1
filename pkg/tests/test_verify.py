from __future__ import annotations

import pytest

from morphsynth import verify
from morphsynth.quality import QualityVector
from morphsynth.trajectory import AggregationMode
from morphsynth.verify import ClaimSyntaxError, check_claim, cross_check, parse_claims


def results(doc, path):
    return {r.claim.label: r for r in (check_claim(doc, c) for c in parse_claims(path.read_text()))}


def test_parse_claim_line():
    (c,) = parse_claims('"x # y" solution treatment/X J1*M2 = (3;2,0) pareto  # note\n')
    assert c.label == "x # y"
    assert (c.kind, c.target, c.node) == ("solution", "treatment", "X")
    assert c.selection == ("J1", "M2")
    assert c.claimed == QualityVector(3, (2,))
    assert c.pareto


def test_parse_trajectory_claim_mode():
    (c,) = parse_claims('"t" trajectory stages all-pairs a.b*c.d = (2;2)')
    assert c.mode is AggregationMode.ALL_PAIRS


def test_bad_claim_line():
    with pytest.raises(ClaimSyntaxError, match="line 2"):
        parse_claims('# header\n"x" solution tau0 = 3\n')


def test_team_claims(team, fixtures_dir):
    got = results(team, fixtures_dir / "team.claims")
    assert all(got[f"tau{k} S1"].status == "MATCH" for k in range(4))
    alpha = got["alpha_team"]
    assert alpha.status == "MISMATCH"
    assert alpha.render() == "alpha_team: MISMATCH(recomputed=(2;4,0,0)) claimed=(3;4,0,0)"
    assert got["alpha_team all-pairs"].recomputed == QualityVector(2, (4,))


def test_medical_claims(medical, fixtures_dir):
    got = results(medical, fixtures_dir / "medical.claims")
    assert got["X3"].render() == "X3: MISMATCH(recomputed=(2;2,0)) claimed=(3;2,0)"
    assert got["mu1 S1"].recomputed == QualityVector(3, (2, 1))
    assert got["Y1"].render() == "Y1: MATCH (3;2,1,0)"
    mismatched = {label for label, r in got.items() if r.status != "MATCH"}
    assert mismatched == {"X3", "mu1 S1"}


def test_pareto_flag_checks_first_layer(team):
    (c,) = parse_claims('"low" solution tau1 L2*R2*E2*M0 = (2;3,1,0) pareto')
    r = check_claim(team, c)
    assert r.status == "MISMATCH" and r.detail == "not in layer 1"


def test_claim_errors(team):
    for line in ['"a" solution nowhere A1 = (1;1)',
                 '"b" solution tau1 L2*R1 = (3;2)',
                 '"c" trajectory stages tau0.nope = (3;1)']:
        (c,) = parse_claims(line)
        assert check_claim(team, c).status == "ERROR"


@pytest.mark.parametrize("name, count", [("team", 6), ("medical", 9), ("illustrative", 4)])
def test_cross_check_fixtures(request, name, count):
    compared, problems = cross_check(request.getfixturevalue(name))
    assert (compared, problems) == (count, [])


def test_cross_check_reports_disagreement(team, monkeypatch):
    monkeypatch.setattr(verify, "oracle_synthesize", lambda *a, **k: [])
    compared, problems = cross_check(team)
    assert problems and all("engine and oracle disagree" in p for p in problems)

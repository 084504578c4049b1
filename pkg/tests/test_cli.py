from __future__ import annotations

import json
import subprocess
import sys

import pytest

from morphsynth import verify
from morphsynth.cli import EXIT_BREACH, EXIT_EMPTY, EXIT_INVALID, EXIT_OK, main


@pytest.fixture
def run(fixtures_dir, capsys):
    def go(*argv):
        args = [str(fixtures_dir / a) if a.endswith((".morph", ".claims")) else a for a in argv]
        code = main(args)
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return go


def test_validate_ok_and_strict(run):
    code, out, _ = run("validate", "team.morph")
    assert code == EXIT_OK
    assert "warning: missing compatibility entry (E2,M1)" in out
    code, out, _ = run("validate", "team.morph", "--strict")
    assert code == EXIT_INVALID
    assert "error: missing compatibility entry (E2,M1)" in out


def test_validate_partial_flag(tmp_path):
    text = ("structure s {\n  component A { alt A1 priority 1 }\n  component B { alt B1 priority 1 }\n"
            "  node S = A * B\n}\n")
    path = tmp_path / "gap.morph"
    path.write_text(text)
    assert main(["validate", str(path)]) == EXIT_INVALID
    assert main(["validate", str(path), "--partial"]) == EXIT_OK


def test_parse_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.morph"
    path.write_text("structure s {\n  scale 3\n  component A { alt A1 priority 1 }\n"
                    "  component B { alt B1 priority 1 }\n  node S = A * B\n  compat A1 B1 = 5\n}\n")
    assert main(["validate", str(path)]) == EXIT_INVALID
    assert f"{path}:6:3: error: value exceeds scale" in capsys.readouterr().err


def test_missing_file(run):
    code, _, err = run("validate", "/nonexistent/x.morph")
    assert code == EXIT_INVALID and "cannot read" in err


def test_synth_lines(run):
    code, out, _ = run("synth", "team.morph", "--structure", "tau1")
    assert code == EXIT_OK
    assert out.splitlines() == [
        "node S",
        "tau1_1 = L2*R1*E1*M0 N=(3;3,1,0) layer=1",
        "tau1_2 = L2*R1*E2*M0 N=(2;4,0,0) layer=1",
    ]


def test_synth_more_layers(run):
    _, out, _ = run("synth", "team.morph", "--structure", "tau1", "--layers", "2")
    assert "tau1_3 = L2*R2*E2*M0 N=(2;3,1,0) layer=2" in out


def test_synth_partial_structure_defaults_to_zero(run):
    code, out, _ = run("synth", "team.morph", "--structure", "tau2")
    assert code == EXIT_OK
    assert "L2*R2*E3*M1 N=(3;4,0) layer=1" in out


def test_synth_declared_rule(run):
    _, out, _ = run("synth", "medical.morph", "--structure", "treatment", "--declared")
    assert "= X3*Y1*Z1 N=(3;3,0,0,0) layer=1" in out
    assert "= X3*Y1*Z2 N=(3;3,0,0,0) layer=1" in out


def test_synth_json(run):
    code, out, _ = run("synth", "team.morph", "--structure", "tau0", "--json")
    data = json.loads(out)
    assert code == EXIT_OK
    first = data["nodes"]["S"][0]
    assert first["label"] == "L2*R1*E0*M0"
    assert first["quality"] == {"w": 3, "n": [4, 0, 0], "text": "(3;4,0,0)"}


def test_synth_empty_exit(tmp_path):
    path = tmp_path / "dead.morph"
    path.write_text("structure s {\n  component A { alt A1 priority 1 }\n  component B { alt B1 priority 1 }\n"
                    "  node S = A * B\n  compat A1 B1 = 0\n}\n")
    assert main(["synth", str(path), "--structure", "s"]) == EXIT_EMPTY
    assert main(["synth", str(path), "--structure", "s", "--admit-zero"]) == EXIT_OK


def test_synth_unknown_structure(run):
    code, _, err = run("synth", "team.morph", "--structure", "nope")
    assert code == EXIT_INVALID and "unknown structure nope" in err


def test_trajectory_chain(run):
    code, out, _ = run("trajectory", "team.morph", "--network", "stages", "--mode", "all-pairs")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "network stages (chain, mode all-pairs)"
    assert len(lines) == 5 and all("N=(2;4,0,0) layer=1" in ln for ln in lines[1:])


def test_trajectory_decision_path(run):
    code, out, _ = run("trajectory", "medical.morph", "--network", "plan",
                       "--outcomes", "a0=insufficient,a4=good")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "path mu0 -> mu4 -> mu5"
    assert "T1 <S_mu0_1 * S_mu4_3 * S_mu5_2> N=(3;3,0,0,0) layer=1" in out


def test_trajectory_truncated(run):
    _, out, _ = run("trajectory", "medical.morph", "--network", "feedback",
                    "--outcomes", "a0=insufficient,a4=insufficient", "--step-limit", "10")
    assert out.splitlines()[0] == "path mu0 -> mu4 -> mu0 -> mu4 -> mu0 -> mu4 (truncated at step limit)"


def test_trajectory_cyclic_refused(run):
    code, _, err = run("trajectory", "medical.morph", "--network", "feedback")
    assert code == EXIT_INVALID
    assert "cyclic network feedback" in err


def test_trajectory_simplify(run):
    code, out, _ = run("trajectory", "medical.morph", "--network", "feedback", "--simplify")
    assert code == EXIT_OK
    assert "transform: simplified, removed a4->mu0" in out
    assert "network feedback (dag, mode adjacent)" in out


def test_trajectory_spanning_tree_prunes(run):
    # routes only rates mu4-mu7 and mu7-mu8, so the other tree edges read as 0
    code, out, _ = run("trajectory", "illustrative.morph", "--network", "routes",
                       "--spanning-tree", "mu4", "--assume-missing", "0")
    assert "transform: spanning tree rooted at mu4 (unreachable, dropped: mu0)" in out
    assert code == EXIT_EMPTY


def test_trajectory_bad_outcome(run):
    code, _, err = run("trajectory", "medical.morph", "--network", "plan", "--outcomes", "a0")
    assert code == EXIT_INVALID and "bad outcome" in err


def test_trajectory_json(run):
    _, out, _ = run("trajectory", "medical.morph", "--network", "plan", "--json")
    data = json.loads(out)
    (t,) = data["trajectories"]
    assert t["assignment"]["mu4"] == "S_mu4_3"


def test_verify_reports_mismatch(run):
    code, out, _ = run("verify", "team.morph", "--claims", "team.claims")
    assert code == EXIT_OK
    assert "alpha_team: MISMATCH(recomputed=(2;4,0,0)) claimed=(3;4,0,0)" in out
    assert out.splitlines()[-1] == "engine/oracle: agree on 6 instances"


def test_verify_json(run):
    _, out, _ = run("verify", "medical.morph", "--claims", "medical.claims", "--json")
    data = json.loads(out)
    statuses = {c["label"]: c["status"] for c in data["claims"]}
    assert statuses["X3"] == "MISMATCH" and statuses["Y1"] == "MATCH"
    assert data["engine_oracle"] == {"compared": 9, "agree": True, "problems": []}


def test_verify_claim_error_exit(run, tmp_path):
    claims = tmp_path / "x.claims"
    claims.write_text('"ghost" solution nowhere A1 = (1;1)\n')
    code, out, _ = run("verify", "team.morph", "--claims", str(claims))
    assert code == EXIT_INVALID
    assert "ghost: ERROR unknown structure nowhere" in out


def test_verify_breach_exit(run, monkeypatch):
    monkeypatch.setattr(verify, "oracle_synthesize", lambda *a, **k: [])
    code, out, _ = run("verify", "team.morph")
    assert code == EXIT_BREACH
    assert "engine/oracle: DISAGREE" in out


def test_export_with_trajectory(run):
    code, out, _ = run("export", "medical.morph", "--network", "plan", "--trajectory", "T1")
    assert code == EXIT_OK
    assert '"mu4" [shape=box, label="mu4: S_mu4_3"];' in out


def test_export_unknown_trajectory(run):
    code, _, err = run("export", "medical.morph", "--network", "plan", "--trajectory", "T9")
    assert code == EXIT_INVALID and "unknown trajectory T9" in err


def test_layers_must_be_positive(run):
    with pytest.raises(SystemExit):
        run("synth", "team.morph", "--structure", "tau1", "--layers", "0")


def test_module_entry_point(fixtures_dir):
    proc = subprocess.run([sys.executable, "-m", "morphsynth", "validate", str(fixtures_dir / "team.morph")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "valid"


def test_export_decision_points_and_unknown_network(run):
    code, out, _ = run("export", "medical.morph", "--network", "plan")
    assert code == EXIT_OK
    for a in ("a0", "a1", "a4"):
        assert f'"{a}" [shape=diamond, label="{a}"];' in out
    code, _, err = run("export", "medical.morph", "--network", "nope")
    assert code == EXIT_INVALID and "unknown network nope" in err


@pytest.mark.parametrize("argv", [
    ("synth", "medical.morph", "--structure", "treatment", "--layers", "3"),
    ("trajectory", "illustrative.morph", "--network", "tree8", "--layers", "2", "--json"),
    ("verify", "medical.morph", "--claims", "medical.claims"),
])
def test_output_is_byte_identical(run, argv):
    assert run(*argv) == run(*argv)

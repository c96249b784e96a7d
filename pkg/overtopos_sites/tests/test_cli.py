import json
from types import SimpleNamespace

import pytest

from overtopos_sites.check_sites import main
from overtopos_sites.src.documents import commands
from overtopos_sites.src.documents.commands import COMMANDS, RunOptions, run

EMPTY_COVER = """{
    "format-version": 1,
    "categories": {"one": {"objects": ["*"]}},
    "bases": {"empty-cover": {"category": "one", "families": {"*": [[], ["id_*"]]}}},
    "presheaves": {"two-sections": {"category": "one", "basis": "empty-cover", "sections": {"*": ["s", "t"]}}}
}
"""

UNRESOLVED = """{
    "format-version": 1,
    "bases": {"dangling": {"category": "nowhere", "kind": "trivial"}}
}
"""


def test_validate_objects(workspace_path, capsys):
    status = main(["validate", workspace_path("objects")])
    out = capsys.readouterr().out
    assert status == 0
    assert "overtopos-sites validate (format-version 1)" in out
    assert out.rstrip().endswith("status: ok (0 failures, 0 warnings)")


def test_non_sheaf_fails(write_workspace, capsys):
    status = main(["sheaf", write_workspace("empty.json", EMPTY_COVER)])
    out = capsys.readouterr().out
    assert status == 1
    assert "failure: two-sections is not a sheaf for empty-cover" in out
    assert "has 2 amalgamations" in out


def test_malformed_document(write_workspace, capsys):
    path = write_workspace("broken.json", '{"format-version": 1,\n  "categories": }')
    status = main(["validate", path])
    out = capsys.readouterr().out
    assert status == 2
    assert out.startswith(f"error: {path}:2:")


def test_unresolved_reference_is_an_input_error(write_workspace):
    status, text = run("validate", [write_workspace("dangling.json", UNRESOLVED)])
    assert status == 2
    assert text.startswith("error: ")
    assert "nowhere" in text


def test_report_document(workspace_path, tmp_path, capsys):
    target = tmp_path / "reports" / "antecedent.json"
    status = main(["antecedent", workspace_path("objects"), "--report", str(target)])
    capsys.readouterr()
    assert status == 0
    document = json.loads(target.read_text())
    assert document["command"] == "antecedent"
    assert document["format-version"] == 1
    assert document["status"] == "ok"
    assert document["warnings"]


def test_strict_turns_warnings_into_failures(workspace_path, capsys):
    assert main(["antecedent", workspace_path("objects"), "--strict"]) == 1
    assert "status: failed" in capsys.readouterr().out


def test_limits_on_the_terminal_category(workspace_path, capsys):
    assert main(["limits", workspace_path("terminal")]) == 0
    assert "apex: *" in capsys.readouterr().out


@pytest.mark.parametrize("command", ["validate", "limits", "descent", "giraud", "lifted", "sheaf"])
def test_stack_workspace(workspace_path, command, capsys):
    status = main([command, workspace_path("stack")])
    out = capsys.readouterr().out
    assert status == 0, out


def test_meet_in_the_lattice(workspace_path, capsys):
    main(["limits", workspace_path("stack"), "--name", "meet-of-a-and-b"])
    out = capsys.readouterr().out
    assert "apex: 0" in out


def test_name_filter_must_match(workspace_path, capsys):
    assert main(["antecedent", workspace_path("objects"), "--name", "missing"]) == 1
    assert "no fragments entry named 'missing'" in capsys.readouterr().out


def test_negative_bound(workspace_path, capsys):
    assert main(["points", workspace_path("objects"), "--bound", "-1"]) == 2
    assert capsys.readouterr().out == ""


def test_unknown_command(workspace_path):
    with pytest.raises(SystemExit):
        main(["sheafify", workspace_path("objects")])


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_reports_are_deterministic(workspace_path, command, capsys):
    path = workspace_path("objects")
    first = main([command, path])
    first_out = capsys.readouterr().out
    second = main([command, path])
    second_out = capsys.readouterr().out
    assert first == second
    assert first_out == second_out
    assert first_out.startswith("=" * 80)


def test_correspondence_command(workspace_path):
    status, text = run("correspondence", [workspace_path("objects")], RunOptions(bound=1))
    assert status == 0, text


def test_emitted_theory_validates(workspace_path, tmp_path, capsys):
    emitted = tmp_path / "tm.json"
    assert main(["tm", workspace_path("objects"), "--report", str(emitted)]) == 0
    document = json.loads(emitted.read_text())
    assert sorted(document["theories"]) == ["T_pairs"]
    assert sorted(document["structures"]) == ["S_pairs_fold", "S_pairs_id_M"]
    assert main(["validate", str(emitted)]) == 0
    assert "failing axioms: 0" in capsys.readouterr().out


def test_representable_that_is_not_a_sheaf_fails(workspace_path, monkeypatch, capsys):
    monkeypatch.setattr(commands, "sheaf_report", lambda P, basis: SimpleNamespace(valid=False))
    assert main(["sheaf", workspace_path("objects")]) == 1
    out = capsys.readouterr().out
    assert "failure: pairs: the representable at" in out
    assert out.rstrip().endswith("(1 failures, 0 warnings)")

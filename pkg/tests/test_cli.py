import json
import subprocess
import sys

import pytest

from flopqlh.cli import COMMANDS, main, parse_box, UsageError


def run(*args, out=None):
    argv = list(args) + (["--out", str(out)] if out else [])
    return main(argv)


def run_proc(*args):
    return subprocess.run([sys.executable, "-m", "flopqlh.cli", *args], capture_output=True, text=True)


@pytest.mark.parametrize("cmd", [c for c in COMMANDS if c not in ("golden", "regularize", "flop-check")])
def test_every_command_passes_on_hirzebruch(cmd, capsys):
    assert run(cmd, "--scenario", "hirzebruch") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["command"] == cmd and payload["ok"] is True


def test_flop_check(capsys):
    assert run("flop-check", "--scenario", "p1flop_00_01") == 0
    assert run("flop-check", "--scenario", "hirzebruch") == 2
    assert "double-bundle" in capsys.readouterr().err


def test_output_is_deterministic():
    a = run_proc("invariants", "--scenario", "hirzebruch")
    b = run_proc("invariants", "--scenario", "hirzebruch")
    assert a.returncode == 0 and a.stdout == b.stdout


def test_out_directory(tmp_path, capsys):
    assert run("mirror-map", "--scenario", "hirzebruch", out=tmp_path) == 0
    data = json.loads((tmp_path / "mirror-map.json").read_text())
    text = (tmp_path / "mirror-map.txt").read_text().splitlines()
    assert data["ok"] and text[-1] == "PASS"
    assert capsys.readouterr().out.rstrip().endswith("PASS")


def test_resolved_weight_mask(capsys):
    run("gauge", "--scenario", "hirzebruch", "--weight-bound", "1")
    mask = json.loads(capsys.readouterr().out)["resolved_weights"]
    assert mask["weight_bound"] == 1
    assert len(mask["resolved"]) == len(set(mask["resolved"])) >= 1


@pytest.mark.parametrize("name", ["hirzebruch", "p1flop_00_01"])
def test_golden(name, capsys):
    assert run("golden", name) == 0
    assert json.loads(capsys.readouterr().out)["ok"]


def test_regularize_steps(capsys):
    assert run("regularize", "--scenario", "regfibre_r1", "--beta-s", "1", "--d2", "0") == 0
    assert run("regularize", "--scenario", "regfibre_r1", "--beta-s", "1", "--d2", "0", "--step", "2") == 0


def test_verification_failure_exit_code(capsys):
    # r even without the sign twist: the first step does not close up
    code = run("regularize", "--scenario", "regfibre_r2", "--beta-s", "1", "--d2", "0", "--sign-twist", "off")
    assert code == 1
    assert json.loads(capsys.readouterr().out)["ok"] is False


@pytest.mark.parametrize("args", [
    ["ifunc"],
    ["ifunc", "--scenario", "no_such_scenario"],
    ["ifunc", "--scenario", "hirzebruch", "--box", "1,2"],
    ["ifunc", "--scenario", "hirzebruch", "--box", "0,1,1"],
    ["ifunc", "--scenario", "hirzebruch", "--box", "a,b,c"],
    ["gauge", "--scenario", "hirzebruch", "--weight-bound", "-1"],
    ["ifunc", "--scenario", "/nonexistent/x.json"],
])
def test_usage_errors(args, capsys):
    assert main(args) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_scenario_file(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"r": 1}))
    assert main(["ifunc", "--scenario", str(f)]) == 2
    assert "error:" in capsys.readouterr().err


def test_parse_box():
    assert parse_box("1,2,3") == (1, 2, 3)
    with pytest.raises(UsageError):
        parse_box("1,2,-3")


def test_console_script():
    p = subprocess.run(["flopqlh", "--help"], capture_output=True, text=True)
    assert p.returncode == 0
    for c in COMMANDS:
        assert c in p.stdout

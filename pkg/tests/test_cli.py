import json

import pytest

from pfmirror.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_no_command(capsys):
    assert main([]) == 2


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_bps(capsys):
    code, out = run(capsys, "bps", "--side", "x", "--genus", "0", "--degree", "3")
    assert code == 0
    assert json.loads(out) == {"1": "50", "2": "325", "3": "1475"}


def test_gw_genus1(capsys):
    code, out = run(capsys, "gw", "--side", "z", "--genus", "1", "--degree", "3")
    payload = json.loads(out)
    assert code == 0 and payload["genus1"]["exponents"]["1/32"] == "-1/3"
    assert payload["bps"]["2"] == "50"


def test_psymbol(capsys):
    code, out = run(capsys, "psymbol")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 6


def test_frobenius_and_mirror_map(capsys, tmp_path):
    target = tmp_path / "fb.json"
    assert main(["frobenius", "--order", "8", "--out", str(target)]) == 0
    assert json.loads(target.read_text())
    code, out = run(capsys, "mirror-map", "--side", "z", "--order", "8")
    assert code == 0 and json.loads(out)["scale"] == "1/32"


def test_yukawa(capsys):
    code, out = run(capsys, "yukawa")
    assert code == 0 and json.loads(out)["closed_form_verified"] is True


def test_error_exit(capsys):
    code, out = run(capsys, "frobenius", "--center", "1/32", "--order", "8")
    assert code == 1 and json.loads(out)["error"]


def test_bad_precision(capsys):
    code, out = run(capsys, "psymbol", "--prec", "8")
    assert code == 1 and "error" in json.loads(out)


def test_verify_subset(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, _ = run(capsys, "verify", "--only", "psymbol", "--only", "numerology", "--report", str(report))
    assert code == 0
    ids = {r["id"]: r["status"] for r in json.loads(report.read_text())["reports"]}
    assert ids["psymbol"] == "pass" and ids["gkz"] == "skipped"


def test_verify_unknown_check(capsys):
    code, out = run(capsys, "verify", "--only", "nope")
    assert code == 1


def test_monodromy_integer_matrix(capsys):
    code, out = run(capsys, "monodromy", "--point", "1/32")
    payload = json.loads(out)
    assert code == 0 and payload["matrix"] == [[1, 0, 0, 2], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]

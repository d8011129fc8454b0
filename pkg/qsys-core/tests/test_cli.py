import json

import pytest

from src.main import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def _report(out: str) -> dict:
    return json.loads(out)


def _failed(report: dict) -> list[str]:
    return [check["id"] for check in report["checks"] if not check["pass"]]


@pytest.fixture(scope="module")
def workspace_file(data_dir):
    return str(data_dir / "z2_workspace.json")


# -- validate -------------------------------------------------------------------


@pytest.mark.parametrize("source", ["bundled:vec_z2", "bundled:fibonacci", "vec.json", "vec_z2.json"])
def test_validate_passes(capsys, data_dir, source):
    if not source.startswith("bundled:"):
        source = str(data_dir / source)
    code, out = _run(capsys, "validate", source)
    assert code == EXIT_PASS
    report = _report(out)
    assert report["schema_version"] == "1"
    assert report["summary"] == "pass"
    assert [c["id"] for c in report["checks"]] == sorted(c["id"] for c in report["checks"])


def test_validate_reports_corrupted_associator(capsys, data_dir, tmp_path):
    data = json.loads((data_dir / "vec_z2.json").read_text(encoding="utf-8"))
    for entry in data["assoc"]:
        if (entry["i"], entry["j"], entry["k"], entry["l"]) == ("g", "g", "g", "g"):
            entry["F"] = [[[2.0, 0.0]]]
    path = tmp_path / "corrupted.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    code, out = _run(capsys, "validate", str(path))
    assert code == EXIT_FAIL
    failed = _failed(_report(out))
    assert any(check_id.startswith("pentagon[") for check_id in failed)


def test_validate_flags_perturbed_ising(capsys):
    code, out = _run(capsys, "validate", "bundled:perturbed_ising")
    assert code == EXIT_FAIL
    failed = _failed(_report(out))
    assert "F-unitary[sigma,sigma,sigma;sigma]" in failed
    assert any(check_id.startswith("pentagon[") for check_id in failed)


def test_validate_schema_errors(capsys, tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"objects": [], "simples": [], "unit": {}}), encoding="utf-8")
    assert _run(capsys, "validate", str(empty))[0] == EXIT_USAGE

    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert _run(capsys, "validate", str(broken))[0] == EXIT_USAGE

    assert _run(capsys, "validate", str(tmp_path / "missing.json"))[0] == EXIT_USAGE
    assert _run(capsys, "validate", "bundled:su2")[0] == EXIT_USAGE


def test_usage_errors(capsys):
    assert _run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert _run(capsys, "validate")[0] == EXIT_USAGE
    assert _run(capsys, "validate", "bundled:vec", "--tol", "-1")[0] == EXIT_USAGE


# -- check ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "kind,name",
    [
        ("qsystem", "A"),
        ("qsystem", "A_explicit"),
        ("qsystem", "triv"),
        ("bimodule", "A_regular"),
        ("functor", "twist"),
        ("functor", "id_explicit"),
        ("transformation", "beta"),
        ("transformation", "twist_identity"),
        ("modification", "phase"),
    ],
)
def test_check_passes(capsys, workspace_file, kind, name):
    code, out = _run(capsys, "check", workspace_file, f"--{kind}", name)
    assert code == EXIT_PASS, _failed(_report(out))


def test_check_scaled_qsystem_fails_separability(capsys, workspace_file):
    code, out = _run(capsys, "check", workspace_file, "--qsystem", "A_scaled")
    assert code == EXIT_FAIL
    assert "Q4-separability" in _failed(_report(out))


def test_check_unknown_id(capsys, workspace_file):
    assert _run(capsys, "check", workspace_file, "--qsystem", "B")[0] == EXIT_USAGE
    assert _run(capsys, "check", workspace_file)[0] == EXIT_USAGE


# -- complete -------------------------------------------------------------------


def test_complete_writes_a_valid_presentation(capsys, workspace_file, tmp_path):
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    code, out = _run(capsys, "complete", workspace_file, "--qsystems", "triv,A", "--out", str(first))
    assert code == EXIT_PASS
    assert _report(out)["summary"] == "pass"
    assert _run(capsys, "complete", workspace_file, "--qsystems", "triv,A", "--out", str(second))[0] == EXIT_PASS
    assert first.read_bytes() == second.read_bytes()

    doc = json.loads(first.read_text(encoding="utf-8"))
    assert doc["objects"] == ["1_*", "A"]
    assert len(doc["simples"]) == 6
    assert _run(capsys, "validate", str(first))[0] == EXIT_PASS


def test_complete_prints_presentation_without_out(capsys):
    code, out = _run(capsys, "complete", "bundled:vec_z2")
    assert code == EXIT_PASS
    doc = json.loads(out)
    assert doc["objects"] == ["1_*"]
    assert doc["name"] == "QSys(Vec_Z2)"


def test_complete_rejects_invalid_qsystem(capsys, workspace_file):
    assert _run(capsys, "complete", workspace_file, "--qsystems", "A_scaled")[0] == EXIT_FAIL
    assert _run(capsys, "complete", workspace_file, "--qsystems", "nope")[0] == EXIT_USAGE


# -- find-qsystems --------------------------------------------------------------


def test_find_qsystems_on_vec(capsys):
    code, out = _run(capsys, "find-qsystems", "bundled:vec", "--object", "*", "--dim-bound", "1")
    assert code == EXIT_PASS
    result = json.loads(out)
    assert [c["multiplicities"] for c in result["candidates"]] == [{"1": 1}]


def test_find_qsystems_usage(capsys):
    assert _run(capsys, "find-qsystems", "bundled:vec", "--object", "*", "--dim-bound", "0.5")[0] == EXIT_USAGE
    assert _run(capsys, "find-qsystems", "bundled:vec", "--object", "x", "--dim-bound", "1")[0] == EXIT_USAGE


# -- verify-theorems ------------------------------------------------------------


def test_verify_theorems_usage(capsys, workspace_file):
    assert _run(capsys, "verify-theorems", "--suite", "bogus")[0] == EXIT_USAGE
    assert _run(capsys, "verify-theorems")[0] == EXIT_USAGE
    assert _run(capsys, "verify-theorems", workspace_file, "--suite", "vec")[0] == EXIT_USAGE


def test_vec_suite_passes(capsys):
    code, out = _run(capsys, "verify-theorems", "--suite", "vec")
    report = _report(out)
    assert code == EXIT_PASS, _failed(report)
    assert report["summary"] == "pass"
    assert "timing" not in report


def test_z2_suite_passes(capsys):
    code, out = _run(capsys, "verify-theorems", "--suite", "z2")
    report = _report(out)
    assert code == EXIT_PASS, _failed(report)
    ids = {check["id"] for check in report["checks"]}
    assert {
        "census",
        "strictness[twist,twist]",
        "strictness[twist,incl]",
        "qsys-functor[twist]",
        "qsys-transformation[beta]",
        "qsys-modification[phase]",
        "tensorator[beta,beta^-1]",
        "lift[incl]",
        "dominance[C[Z2]]",
    } <= ids


def test_perturbed_suite_fails_only_dominance(capsys):
    code, out = _run(capsys, "verify-theorems", "--suite", "z2-perturbed")
    assert code == EXIT_FAIL
    assert _failed(_report(out)) == ["dominance[C[Z2]x1.1]"]


def test_verify_workspace_flags_scaled_qsystem(capsys, workspace_file):
    code, out = _run(capsys, "verify-theorems", workspace_file)
    assert code == EXIT_FAIL
    failed = _failed(_report(out))
    assert "qsystem[A_scaled]" in failed
    assert "dominance[A_scaled]" in failed
    assert all("A_scaled" in check_id for check_id in failed)

import json

import numpy as np
import pytest

from mint.cli import REPORT_KEYS, check_report, main
from mint.fixtures import domino_basis, random_povm
from mint.io import result_from_doc, write_json
from mint.measurement import Measurement, von_neumann


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for name in ("domino", "augmented-domino", "peel-off-extended", "peel-off-completion", "bell"):
        paths[name] = tmp_path / f"{name}.json"
        assert main(["fixtures", name, "--out", str(paths[name])]) == 0
    paths["vn"] = tmp_path / "vn.json"
    write_json(paths["vn"], von_neumann(domino_basis()))
    capsys.readouterr()
    return paths


class TestReports:
    def test_fixture_to_validate_pipeline(self, files, capsys):
        code, rep = run(capsys, "basis", "validate", str(files["domino"]))
        assert code == 0 and rep["status"] == "pass"
        assert set(rep) == set(REPORT_KEYS)
        assert rep["metrics"]["orthonormality_error"] <= 1e-12
        assert check_report(rep) == []

    def test_povm_validate(self, files, capsys):
        code, rep = run(capsys, "povm", "validate", str(files["vn"]))
        assert code == 0 and rep["command"] == "povm validate"

    def test_broken_povm_fails(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        write_json(path, Measurement([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])]))
        code, rep = run(capsys, "povm", "validate", str(path))
        assert code == 1 and rep["status"] == "fail"
        assert rep["metrics"]["completeness_residual"] == pytest.approx(0.5)
        assert rep["artifacts"]["failures"]

    def test_unknown_flag(self, capsys):
        assert main(["povm", "validate", "x.json", "--bogus"]) == 2

    def test_missing_file(self, tmp_path, capsys):
        code, rep = run(capsys, "povm", "validate", str(tmp_path / "absent.json"))
        assert code == 2 and rep["status"] == "error"

    def test_wrong_document_kind(self, files, capsys):
        code, rep = run(capsys, "povm", "validate", str(files["domino"]))
        assert code == 2

    def test_deterministic(self, files, capsys):
        _, a = run(capsys, "analyze", "diagonality", "--basis", str(files["domino"]))
        _, b = run(capsys, "analyze", "diagonality", "--basis", str(files["domino"]))
        assert a == b


class TestTolerances:
    def test_flag_accepted(self, files, capsys):
        code, _ = run(capsys, "basis", "validate", str(files["domino"]), "--tolerance-completeness", "1e-6")
        assert code == 0

    def test_invalid_environment(self, files, capsys, monkeypatch):
        monkeypatch.setenv("MINT_TOLERANCE_COMPLETENESS", "5")
        code, rep = run(capsys, "basis", "validate", str(files["domino"]))
        assert code == 2 and rep["status"] == "error"


class TestInterpolate:
    def test_interpolate_writes_result(self, tmp_path, capsys):
        m_path, b_path, out = tmp_path / "m.json", tmp_path / "b.json", tmp_path / "r.json"
        write_json(m_path, random_povm(4, 3, 7).with_dims(2, 2))
        assert main(["fixtures", "computational-2x2", "--out", str(b_path)]) == 0
        capsys.readouterr()
        code, rep = run(capsys, "interpolate", "--measurement", str(m_path), "--basis", str(b_path),
                        "--epsilon", "0.01", "--out", str(out))
        assert code == 0, rep
        doc = json.loads(out.read_text())
        assert doc["verification"]["ok"]
        assert doc["epsilon"] == pytest.approx(0.01)


class TestAnalyze:
    def test_non_disturbing(self, files, capsys):
        code, rep = run(capsys, "analyze", "non-disturbing", "--measurement", str(files["vn"]),
                        "--basis", str(files["domino"]))
        assert code in (0, 1) and rep["command"] == "analyze non-disturbing"

    def test_diagonality_dimension(self, files, capsys):
        code, rep = run(capsys, "analyze", "diagonality", "--basis", str(files["domino"]))
        assert code == 0 and rep["metrics"]["dimension"] == 1

    def test_extract_from_interpolated_stage(self, files, capsys, tmp_path):
        locc = tmp_path / "locc.json"
        code, rep = run(capsys, "protocol", "interpolate", str(files["peel-off-extended"]),
                        "--m2", str(files["peel-off-completion"]), "--basis", str(files["augmented-domino"]),
                        "--epsilon", str(1 / 480), "--out", str(locc))
        assert code == 0, rep
        assert rep["metrics"]["epsilon_achieved"] == pytest.approx(1 / 480, abs=1e-9)
        assert rep["metrics"]["zero_margin"] <= 1e-9
        stage = tmp_path / "stage.json"
        write_json(stage, result_from_doc(json.loads(locc.read_text())).m1)
        code, rep = run(capsys, "analyze", "extract", "--stage", str(stage),
                        "--basis", str(files["augmented-domino"]), "--epsilon-check")
        assert code == 0, rep
        assert rep["metrics"]["min_progress"] >= rep["metrics"]["mu0"] - 1e-9


class TestProtocol:
    def test_leaf_povm(self, files, capsys, tmp_path):
        out = tmp_path / "povm.json"
        code, rep = run(capsys, "protocol", "povm", str(files["peel-off-extended"]), "--out", str(out))
        assert code == 0
        code, rep = run(capsys, "povm", "validate", str(out))
        assert code == 0

    def test_extended_tree_alone_does_not_discriminate(self, files, capsys):
        code, rep = run(capsys, "protocol", "discriminate", str(files["peel-off-extended"]),
                        "--basis", str(files["augmented-domino"]))
        assert code == 1 and rep["status"] == "fail"


class TestReportCheck:
    def test_valid_and_invalid(self, files, capsys, tmp_path):
        good = tmp_path / "good.json"
        _, rep = run(capsys, "basis", "validate", str(files["domino"]))
        good.write_text(json.dumps(rep))
        code, out = run(capsys, "report", "check", str(good))
        assert code == 0 and out["status"] == "pass"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"command": "x", "status": "maybe"}))
        code, out = run(capsys, "report", "check", str(bad))
        assert code == 1

    def test_check_report_messages(self):
        assert check_report([]) == ["report must be a JSON object"]
        problems = check_report({"command": "x", "status": "pass", "metrics": {"a": "b"}, "artifacts": {},
                                 "seed": None, "tool_version": "0"})
        assert problems


@pytest.mark.slow
def test_suite_is_reproducible(capsys):
    code, a = run(capsys, "suite", "--scale", "desk")
    _, b = run(capsys, "suite", "--scale", "desk")
    assert code == 0 and a == b
    assert len([k for k in a["metrics"] if k.startswith("criterion_")]) >= 8


def test_suite_unknown_scale(capsys):
    code, _ = run(capsys, "suite", "--scale", "cluster")
    assert code == 2

import json

import pytest

from bimetric.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    payload = json.loads(captured.out) if captured.out.strip() else None
    return code, payload, captured.err


def test_expand_flat_curvature_is_zero(capsys):
    code, doc, _ = _run(capsys, "expand", "--scene", "euclidean4",
                        "--point", "0.1,0.2,0.3,0.4", "--quantity", "r")
    assert code == 0
    assert doc["schema"] == 1
    (check,) = doc["checks"]
    assert check["values"]["series"] == [0.0, 0.0, 0.0]


def test_missing_scene_file_is_config_error(capsys):
    code, doc, err = _run(capsys, "expand", "--scene", "/no/such.json",
                          "--point", "0,0,0,0")
    assert code == 2
    assert doc is None
    assert "not found" in err


def test_bad_point_is_config_error(capsys):
    code, _, _ = _run(capsys, "expand", "--scene", "euclidean4",
                      "--point", "1,2")
    assert code == 2


def test_unknown_suite_is_usage_error(capsys):
    code, _, _ = _run(capsys, "verify", "--scene", "euclidean4",
                      "--suite", "mystery")
    assert code == 2


def test_verify_appendix_is_informational(capsys):
    code, doc, _ = _run(capsys, "verify", "--scene", "conformally_flat",
                        "--suite", "appendix", "--seed", "3")
    assert code == 0
    assert all(c["status"] == "info" for c in doc["checks"])


def test_verify_intertwining_passes(capsys):
    code, doc, _ = _run(capsys, "verify", "--scene", "conformally_flat",
                        "--suite", "intertwining", "--seed", "3")
    assert code == 0
    assert doc["passed"] is True


def test_tolerance_override_recorded_and_can_gate(capsys):
    code, doc, _ = _run(capsys, "verify", "--scene", "conformally_flat",
                        "--suite", "intertwining", "--seed", "3",
                        "--tol", "intertwining=1e-30")
    assert code == 1
    assert doc["parameters"]["tolerances"]["intertwining"] == 1e-30
    assert doc["passed"] is False


def test_bad_tolerance_name_is_config_error(capsys):
    code, _, _ = _run(capsys, "verify", "--scene", "euclidean4",
                      "--suite", "oracle", "--tol", "mystery=1")
    assert code == 2


def test_report_is_deterministic_given_seed(capsys):
    def payload():
        code, doc, _ = _run(capsys, "verify", "--scene", "conformally_flat",
                            "--suite", "covariance", "--seed", "42")
        assert code == 0
        doc.pop("timing_seconds")
        return json.dumps(doc, sort_keys=True)

    assert payload() == payload()


def test_out_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code = main(["expand", "--scene", "euclidean4", "--point", "0,0,0,0",
                 "--quantity", "c", "--out", str(path)])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["checks"][0]["name"] == "expand/c"

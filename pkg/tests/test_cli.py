import json

from modelhub.cli import main
from modelhub.server import ModelHubService, Storage

from support import CORPUS_DIR


def test_parse_table_output(capsys):
    rc = main(["parse", str(CORPUS_DIR / "dcopf_extract.py")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "P_limits" in out and "Constraint" in out


def test_parse_json_output(capsys):
    rc = main(["parse", str(CORPUS_DIR / "dcopf_extract.py"), "--format", "json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["manifest"]["components"]) == 6
    assert doc["diagnostics"] == []


def test_parse_exit_code_on_errors(tmp_path, capsys):
    bad = tmp_path / "bad.py"
    bad.write_text("#@ Description: orphan\n", encoding="utf-8")
    assert main(["parse", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_parse_unknown_extension(tmp_path, capsys):
    f = tmp_path / "model.xyz"
    f.write_text("x = 1\n", encoding="utf-8")
    assert main(["parse", str(f)]) == 2
    assert main(["parse", str(f), "--tag", "#"]) == 0


def test_parse_explicit_tag_override(tmp_path, capsys):
    f = tmp_path / "model.dat"
    f.write_text("//@ Variable: x\nx = 1\n", encoding="utf-8")
    assert main(["parse", str(f), "--tag", "//"]) == 0
    out = capsys.readouterr().out
    assert "x" in out


def test_token_create_round_trips(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    assert main(["token", "create", "alice", "--data-dir", data_dir]) == 0
    user_token = capsys.readouterr().out.strip()
    assert len(user_token) == 40
    assert main(["token", "create", "bench", "--worker", "--data-dir", data_dir]) == 0
    worker_token = capsys.readouterr().out.strip()

    service = ModelHubService(Storage(data_dir))
    assert service.authenticate(user_token, "user") == "alice"
    assert service.authenticate(worker_token, "worker") == "bench"

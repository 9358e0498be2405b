"""Command line behavior: reports, exports, terminal chat, serve wiring."""
import io
import json

import pytest

from conftest import fixture_path, fixture_text
from dmnchat import cli


def run(capsys, argv, stdin_text=None, monkeypatch=None):
    if stdin_text is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -------------------------------------------------------------- validate

def test_validate_clean_model(capsys):
    code, out, _ = run(capsys, ["validate", fixture_path("membership.dmn")])
    assert code == 0
    assert out == "0 errors, 0 warnings\n"


def test_validate_reports_overlaps(capsys, tmp_path):
    bad = fixture_text("membership.dmn").replace("&lt;18", "&lt;=18", 1)
    path = tmp_path / "bad.dmn"
    path.write_text(bad)
    code, out, _ = run(capsys, ["validate", str(path)])
    assert code == 1
    lines = out.splitlines()
    assert lines[0] == ("error OVERLAP [membership]: rules 1 and 5 both "
                        "match (age=18, hired=False, contribution='none')")
    assert len([l for l in lines if l.startswith("error OVERLAP")]) == 6
    assert lines[-1] == "6 errors, 0 warnings"


def test_validate_parse_failure(capsys, tmp_path):
    path = tmp_path / "junk.dmn"
    path.write_text("<not dmn")
    code, out, _ = run(capsys, ["validate", str(path)])
    assert code == 1
    assert out.startswith("error PARSE: not well-formed XML")
    assert out.splitlines()[-1] == "1 errors, 0 warnings"


def test_validate_missing_file(capsys):
    code, out, err = run(capsys, ["validate", "/no/such/file.dmn"])
    assert code == 1
    assert out == ""
    assert "No such file" in err


# -------------------------------------------------------------- generate

def test_generate_writes_agent(capsys, tmp_path):
    out_dir = tmp_path / "agent"
    code, out, _ = run(capsys, ["generate", fixture_path("membership.dmn"),
                                "-o", str(out_dir), "--seed", "42"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "0 errors, 0 warnings"
    assert lines[1] == "agent.json"
    assert lines[-1] == f"16 files -> {out_dir}"
    assert (out_dir / "agent.json").is_file()
    meta = json.loads((out_dir / "agent.json").read_text())
    assert meta["seed"] == 42


def test_generate_refuses_broken_model(capsys, tmp_path):
    bad = fixture_text("membership.dmn").replace("&lt;18", "&lt;=18", 1)
    path = tmp_path / "bad.dmn"
    path.write_text(bad)
    out_dir = tmp_path / "agent"
    code, out, _ = run(capsys, ["generate", str(path), "-o", str(out_dir)])
    assert code == 1
    assert not out_dir.exists()
    assert "6 errors, 0 warnings" in out


def test_generate_rejects_bad_customization(capsys, tmp_path):
    custom = tmp_path / "c.json"
    custom.write_text(json.dumps({"inputs": {"zzz": {}}}))
    out_dir = tmp_path / "agent"
    code, _, err = run(capsys, ["generate", fixture_path("membership.dmn"),
                                "-o", str(out_dir), "--custom", str(custom)])
    assert code == 1
    assert err == "customization error: unknown input 'zzz'\n"


# ------------------------------------------------------------------ chat

def chat(capsys, monkeypatch, stdin_text, source=None):
    argv = ["chat", source or fixture_path("membership.dmn"), "--seed", "42"]
    return run(capsys, argv, stdin_text, monkeypatch)


def test_chat_full_conversation(capsys, monkeypatch):
    code, out, _ = chat(capsys, monkeypatch,
                        "membership\n40\n/context\n/help\nno\nminimum\n")
    assert code == 0
    assert out == (
        "bot> Hello! I can help you with these decisions: Membership. "
        "Which one would you like to make?\n"
        "[suggestions: Membership]\n"
        "you> membership\n"
        "bot> What is the Age value?\n"
        "you> 40\n"
        "bot> What is the Hired value?\n"
        "[suggestions: yes | no]\n"
        "you> /context\n"
        "bot> Deciding: Membership. You told me: Age = 40.\n"
        "you> /help\n"
        "bot> Hired is a yes/no question. Answer yes or no.\n"
        "[suggestions: yes | no]\n"
        "you> no\n"
        "bot> What is the Contribution value?\n"
        "[suggestions: none | minimum | maximum]\n"
        "you> minimum\n"
        "bot> The result is: conditionally accepted\n")


def test_chat_cancel_meta_command(capsys, monkeypatch):
    code, out, _ = chat(capsys, monkeypatch,
                        "membership\n/cancel\nnever reached\n")
    assert code == 0
    assert out.endswith("you> /cancel\n"
                        "bot> Okay, I cancelled this conversation.\n")
    assert "never reached" not in out


def test_chat_spoken_cancel_stops_loop(capsys, monkeypatch):
    code, out, _ = chat(capsys, monkeypatch, "cancel\nafterwards\n")
    assert code == 0
    assert "you> cancel\nbot> Okay, I cancelled this conversation.\n" in out
    assert "afterwards" not in out


def test_chat_skips_blank_lines(capsys, monkeypatch):
    code, out, _ = chat(capsys, monkeypatch, "\n  \nmembership\n")
    assert code == 0
    assert "you> membership\nbot> What is the Age value?\n" in out


def test_chat_eof_only_greets(capsys, monkeypatch):
    code, out, _ = chat(capsys, monkeypatch, "")
    assert code == 0
    assert out == ("bot> Hello! I can help you with these decisions: "
                   "Membership. Which one would you like to make?\n"
                   "[suggestions: Membership]\n")


def test_chat_from_exported_agent_dir(capsys, monkeypatch, tmp_path):
    out_dir = tmp_path / "agent"
    run(capsys, ["generate", fixture_path("membership.dmn"),
                 "-o", str(out_dir), "--seed", "42"])
    code, out, _ = chat(capsys, monkeypatch, "membership\n60\nyes\n",
                        source=str(out_dir))
    assert code == 0
    assert out.endswith("bot> The result is: accepted\n")


def test_chat_bad_source(capsys, monkeypatch, tmp_path):
    path = tmp_path / "junk.dmn"
    path.write_text("<not dmn")
    code, _, err = chat(capsys, monkeypatch, "", source=str(path))
    assert code == 1
    assert err.startswith("cannot load agent: not well-formed XML")


# ----------------------------------------------------------------- serve

def test_serve_wires_uvicorn(monkeypatch, tmp_path):
    seen = {}

    def fake_run(app, host, port):
        seen["app"] = app
        seen["host"] = host
        seen["port"] = port

    monkeypatch.setattr("uvicorn.run", fake_run)
    code = cli.main(["serve", "--bind", "0.0.0.0:9100",
                     "--data-dir", str(tmp_path), "--seed", "7"])
    assert code == 0
    assert (seen["host"], seen["port"]) == ("0.0.0.0", 9100)
    assert seen["app"].title == "dmnchat"


def test_serve_default_bind(monkeypatch):
    seen = {}
    monkeypatch.setattr("uvicorn.run",
                        lambda app, host, port: seen.update(host=host,
                                                            port=port))
    assert cli.main(["serve"]) == 0
    assert seen == {"host": "127.0.0.1", "port": 8000}

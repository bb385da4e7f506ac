import filecmp
import json
import os
import shutil

import pytest

from conftest import FIXTURES
from opinionsim.cli import main


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def tree(root):
    out = {}
    for d, _, files in os.walk(root):
        for f in files:
            p = os.path.join(d, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


def small_run(capsys, out, *extra):
    return cli(capsys, "run", "--mock-llm", "--seed", "7", "--agents", "10", "--steps", "6", "--out-dir", str(out),
               *extra)


def test_run_twice_identical_trees(tmp_path, capsys):
    assert small_run(capsys, tmp_path / "a")[0] == 0
    assert small_run(capsys, tmp_path / "b")[0] == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b and "action_log.jsonl" in a and "checkpoints/ckpt_00006.json" in a


def test_run_requires_backend(tmp_path, capsys):
    code, _, err = cli(capsys, "run", "--steps", "1", "--out-dir", str(tmp_path))
    assert code == 1
    msg = json.loads(err)
    assert msg["command"] == "run" and "--mock-llm" in msg["message"]


def test_resume_continues(tmp_path, capsys):
    small_run(capsys, tmp_path / "full")
    small_run(capsys, tmp_path / "part", "--config", _config(tmp_path, {"max_steps": 3}))
    code, out, _ = cli(capsys, "run", "--mock-llm", "--seed", "7", "--steps", "6", "--resume",
                       "--out-dir", str(tmp_path / "part"))
    assert code == 0 and json.loads(out)["step"] == 6
    for name in ("step_log.jsonl", "action_log.jsonl", "trace.jsonl"):
        assert filecmp.cmp(tmp_path / "full" / name, tmp_path / "part" / name, shallow=False)


def _config(tmp_path, d):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    return str(p)


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["teleport"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["run", "--no-such-flag"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_evaluate_schema_mismatch(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps({"post_id": "x", "user_id": "u", "timestamp": 3, "text": "", "kind": "like"}) + "\n")
    code, _, err = cli(capsys, "evaluate", "--sim", os.path.join(FIXTURES, "golden_sim.jsonl"), "--real", str(bad),
                       "--out-dir", str(tmp_path))
    assert code == 1
    msg = json.loads(err)
    assert msg["error"] == "SchemaError" and "timestamp" in msg["message"]


def test_evaluate_writes_report(tmp_path, capsys):
    code, out, _ = cli(capsys, "evaluate", "--sim", os.path.join(FIXTURES, "golden_sim.jsonl"),
                       "--real", os.path.join(FIXTURES, "golden_real.jsonl"), "--out-dir", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "report" / "report.json").read_text())
    assert set(rep) == {"header", "behavior", "content", "topology", "emergence"}
    assert json.loads(out)["behavior"] == rep["behavior"]


def test_branch_five_arm_fixture(tmp_path, capsys):
    base = tmp_path / "base"
    small_run(capsys, base, "--config", _config(tmp_path, {"checkpoint_period": 4}))
    shutil.copy(base / "checkpoints" / "ckpt_00004.json", tmp_path / "ckpt.json")
    shutil.copy(os.path.join(FIXTURES, "five_arm_plan.json"), tmp_path / "plan.json")
    code, out, _ = cli(capsys, "branch", "--mock-llm", "--plan", str(tmp_path / "plan.json"),
                       "--out-dir", str(tmp_path / "arms"))
    assert code == 0
    arms = sorted(p.name for p in (tmp_path / "arms").iterdir() if p.is_dir())
    assert arms == ["actual", "apology", "dialogue", "silence", "transparency"]
    assert (tmp_path / "arms" / "manifest.json").exists()
    comp = json.loads((tmp_path / "arms" / "comparison.json").read_text())
    assert len(comp["comparisons"]) == 4


def test_inspect_checkpoint(tmp_path, capsys):
    small_run(capsys, tmp_path)
    code, out, _ = cli(capsys, "inspect-checkpoint", str(tmp_path / "checkpoints" / "ckpt_00006.json"))
    info = json.loads(out)
    assert code == 0 and info["step"] == 6 and info["agents"] == 10 and info["seed"] == 7
    bad = tmp_path / "bad.json"
    bad.write_text("garbage\n{}\n")
    code, _, err = cli(capsys, "inspect-checkpoint", str(bad))
    assert code == 1 and json.loads(err)["error"] == "CheckpointError"


def test_generate_preprocess_init_run(tmp_path, capsys):
    data = tmp_path / "data"
    code, out, _ = cli(capsys, "generate", "--agents", "12", "--steps", "5", "--seed", "1", "--out-dir", str(data))
    assert code == 0 and json.loads(out)["users"] == 12
    code, out, _ = cli(capsys, "preprocess", "--users", str(data / "users.jsonl"), "--posts", str(data / "posts.jsonl"),
                       "--activity-threshold", "0", "--min-length", "1", "--out-dir", str(tmp_path / "clean"))
    summary = json.loads(out)
    assert code == 0 and summary["posts_in"] >= summary["posts_out"] > 0
    code, out, _ = cli(capsys, "init", "--mock-llm", "--users", str(tmp_path / "clean" / "users.jsonl"),
                       "--posts", str(tmp_path / "clean" / "posts.jsonl"), "--scenario", str(data / "scenario.json"),
                       "--out-dir", str(tmp_path / "roster"))
    assert code == 0 and json.loads(out)["agents"] == 12
    code, out, _ = cli(capsys, "run", "--mock-llm", "--roster", str(tmp_path / "roster" / "roster.json"),
                       "--scenario", str(data / "scenario.json"), "--out-dir", str(tmp_path / "sim"))
    assert code == 0
    steps = (tmp_path / "sim" / "step_log.jsonl").read_text().splitlines()
    assert len(steps) == 5


def test_preprocess_fixture_counts(tmp_path, capsys):
    code, out, _ = cli(capsys, "preprocess", "--users", os.path.join(FIXTURES, "raw_users.jsonl"),
                       "--posts", os.path.join(FIXTURES, "raw_posts.jsonl"), "--keywords", "factory fire",
                       "--blacklist", "cheap followers", "free coupons", "--activity-threshold", "1",
                       "--out-dir", str(tmp_path))
    s = json.loads(out)
    assert code == 0 and s["posts_out"] == 6 and s["unparseable"] == 1
    assert len((tmp_path / "posts.jsonl").read_text().splitlines()) == 6

import json
import subprocess
import sys

import pytest

from softpercept.cli import COMMANDS, main


def files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file() and p.suffix != ".png"}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["simulate", "--frames", "60", "--duration", "3", "--seed", "2", "--out", str(root / "data")]) == 0
    code = main(["train", "--data", str(root / "data"), "--inputs", "proprio,vision", "--outputs", "proprio,force,flow",
                 "--latent-dim", "4", "--epochs", "1", "--batch-size", "16", "--seed", "1", "--out", str(root / "ck")])
    assert code == 0
    return root


def test_frames_zero_is_usage_error(tmp_path, capsys):
    assert main(["simulate", "--frames", "0", "--out", str(tmp_path / "d")]) == 2
    assert "--frames" in capsys.readouterr().err


def test_missing_required_flag(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "d")]) == 2


def test_simulate_frame_count_and_determinism(tmp_path, workspace):
    assert main(["simulate", "--frames", "60", "--duration", "3", "--seed", "2", "--out", str(tmp_path / "again")]) == 0
    assert files(tmp_path / "again") == files(workspace / "data")
    manifest = json.loads((workspace / "data" / "manifest.json").read_text())
    assert manifest["frame_count"] + manifest["dropped_frames"] == 60


@pytest.mark.parametrize("d", [16, 64, 128])
def test_latent_dims_from_the_grid_are_accepted(workspace, tmp_path, d):
    args = ["train", "--data", str(workspace / "data"), "--latent-dim", str(d), "--epochs", "0", "--out", str(tmp_path / "ck")]
    assert main(args) == 0
    assert json.loads((tmp_path / "ck" / "model.json").read_text())["config"]["latent_dim"] == d


def test_invalid_modality_is_usage_error(workspace, tmp_path):
    args = ["train", "--data", str(workspace / "data"), "--inputs", "sonar", "--out", str(tmp_path / "ck")]
    assert main(args) == 2


def test_missing_dataset_is_data_error(tmp_path):
    assert main(["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "ck")]) == 3


def test_train_writes_loss_log(workspace):
    lines = (workspace / "ck" / "loss.csv").read_text().splitlines()
    assert lines[0].startswith("epoch,train_elbo,val_elbo") and len(lines) == 3


@pytest.mark.parametrize("name", list(COMMANDS))
def test_help_lists_every_flag(name, capsys):
    assert main([name, "--help"]) == 0
    text = capsys.readouterr().out
    for key in [*COMMANDS[name][1], "seed", "config"]:
        assert "--" + key.replace("_", "-") in text, key
    assert "default" in text


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "softpercept.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout


def run_twice(tmp_path, args):
    outs = []
    for tag in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / tag)]) == 0
        outs.append(files(tmp_path / tag))
    assert outs[0], "no output written"
    assert outs[0] == outs[1]
    return tmp_path / "a"


def model_args(ws, *rest):
    return ["--checkpoint", str(ws / "ck"), "--data", str(ws / "data"), *rest]


def test_train_is_byte_deterministic(workspace, tmp_path):
    run_twice(tmp_path, ["train", "--data", str(workspace / "data"), "--inputs", "proprio,vision",
                         "--outputs", "proprio,force,flow", "--latent-dim", "4", "--epochs", "1", "--batch-size", "16"])


def test_eval_is_byte_deterministic(workspace, tmp_path):
    out = run_twice(tmp_path, ["eval", *model_args(workspace, "--timing-calls", "0")])
    assert (out / "rmse.csv").read_text().splitlines()[0] == "modality,rmse,frame_mean,frame_std,n"


def test_eval_timing_is_separate(workspace, tmp_path):
    assert main(["eval", *model_args(workspace, "--timing-calls", "5"), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "timing.json").read_text())["calls"] == 5


@pytest.mark.parametrize("method", ["pca", "tsne"])
def test_embed_is_byte_deterministic(workspace, tmp_path, method):
    out = run_twice(tmp_path, ["embed", *model_args(workspace, "--method", method, "--iterations", "250", "--png")])
    rows = (out / "embedding.csv").read_text().splitlines()
    summary = json.loads((out / "embed.json").read_text())
    assert len(rows) == summary["n"] + 1 and rows[0] == "point_id,y1,y2,force,distance"
    assert (out / "embedding.png").exists()


def test_mi_grid_report(workspace, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([str(workspace / "ck"), str(tmp_path / "absent")]))
    out = run_twice(tmp_path, ["mi", "--grid", str(grid), "--data", str(workspace / "data"),
                               "--bins", "4", "--iterations", "250"])
    report = json.loads((out / "mi_report.json").read_text())
    cell = report["rows"]["vision-in-out"]["4"]
    assert {"encoded_mi", "conditioned_mi", "gain_percent", "seeds"} <= set(cell)
    assert len(report["notices"]) == 1


def test_mi_needs_exactly_one_source(workspace, tmp_path):
    assert main(["mi", "--data", str(workspace / "data"), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "extra",
    [
        ["--kind", "resample", "--k", "10"],
        ["--kind", "resample", "--k", "5", "--clamp-variance"],
        ["--kind", "action"],
        ["--kind", "synthetic", "--draws", "10", "--png"],
        ["--kind", "sweep", "--grid-shape", "3,2,2"],
        ["--kind", "rollout", "--horizon", "3", "--png"],
    ],
)
def test_probe_is_byte_deterministic(workspace, tmp_path, extra):
    out = run_twice(tmp_path, ["probe", *model_args(workspace, *extra)])
    assert (out / ("rollout.json" if "rollout" in extra else "probe.json")).exists()


def test_rollout_three_steps(workspace, tmp_path):
    out = run_twice(tmp_path, ["rollout", *model_args(workspace, "--actions", "zero")])
    rep = json.loads((out / "rollout.json").read_text())
    assert rep["config"]["horizon"] == 3 and len(rep["extra"]["force_per_step"]) == 3


def test_bad_probe_kind(workspace, tmp_path):
    assert main(["probe", *model_args(workspace, "--kind", "dream"), "--out", str(tmp_path)]) == 2


def test_config_file_precedence(workspace, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "resample", "k": 7, "seed": 3}))
    assert main(["probe", "--config", str(cfg), *model_args(workspace), "--out", str(tmp_path / "a")]) == 0
    rep = json.loads((tmp_path / "a" / "probe.json").read_text())
    assert rep["config"]["k"] == 7 and rep["config"]["seed"] == 3
    assert main(["probe", "--config", str(cfg), *model_args(workspace, "--k", "4"), "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "probe.json").read_text())["config"]["k"] == 4


def test_config_unknown_key(workspace, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"temperature": 2}))
    assert main(["probe", "--config", str(cfg), *model_args(workspace), "--out", str(tmp_path)]) == 2
    assert "temperature" in capsys.readouterr().err

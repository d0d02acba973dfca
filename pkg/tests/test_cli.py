import json
import subprocess
import sys

import numpy as np
import pytest

from curvesig.cli import run
from curvesig.curves import load_curve, save_curve
from curvesig.groups import apply, sample_group_element


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "data"
    assert run(["dataset", "synth", "--count", "8", "--out", str(d), "--size", "256", "--min-points", "150"]) == 0
    return d


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    assert run(["bogus"]) == 2
    assert run(["train", "curvature", "--nope"]) == 2
    assert run([]) == 2


def test_module_error_exits_one(tmp_path, capsys):
    code = run(["baseline", "--curve", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "b")])
    assert code == 1
    assert "missing.csv" in capsys.readouterr().err


def test_dataset_synth_outputs(data):
    files = sorted(data.glob("*/*.csv"))
    assert len(files) == 8
    assert (data / "manifest.json").is_file() and (data / "config.json").is_file()
    cfg = json.loads((data / "config.json").read_text())
    assert cfg["count"] == 8 and cfg["seed"] == 0


def test_dataset_info(data, capsys, monkeypatch):
    assert run(["dataset", "info", str(data)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert sum(v["curves"] for v in info.values()) == 8
    monkeypatch.setenv("CURVESIG_DATA", str(data))
    assert run(["dataset", "info"]) == 0
    monkeypatch.delenv("CURVESIG_DATA")
    assert run(["dataset", "info"]) == 1


def test_dataset_extract(tmp_path):
    from PIL import Image

    from curvesig.dataset import synth_blob_image

    src = tmp_path / "img"
    src.mkdir()
    rng = np.random.default_rng(0)
    for k in range(3):
        a = synth_blob_image(rng, 200).pixels
        Image.fromarray(np.round(a * 255).astype(np.uint8)).save(src / f"{k}.png")
    out = tmp_path / "ds"
    code = run(["dataset", "extract", "--input", str(src), "--out", str(out), "--min-points", "50"])
    assert code == 0
    assert len(list(out.glob("*/*.csv"))) >= 1
    assert json.loads((out / "config.json").read_text())["min_points"] == 50


def test_end_to_end(data, tmp_path, capsys):
    mk, ms = tmp_path / "mk", tmp_path / "ms"
    common = ["--data", str(data), "--steps", "200", "--eval-every", "100", "--group", "se2"]
    assert run(["train", "curvature", "--out", str(mk), *common]) == 0
    cfg = tmp_path / "al.json"
    cfg.write_text(json.dumps({"gap_range": [40, 60]}))
    assert run(["train", "arclength", "--out", str(ms), "--config", str(cfg), *common]) == 0
    for d in (mk, ms):
        assert {"model.npz", "loss.csv", "config.json", "train.log"} <= {p.name for p in d.iterdir()}
    snap = json.loads((ms / "config.json").read_text())
    assert snap["resolved_config"]["gap_range"] == [40, 60] and snap["steps"] == 200

    curve_file = sorted((data / "test").glob("*.csv"))[0]
    c = load_curve(curve_file)
    moved = tmp_path / "moved.csv"
    save_curve(apply(sample_group_element("se2", np.random.default_rng(1)), c), moved)
    a, b = tmp_path / "sig" / "a", tmp_path / "sig" / "b"
    for curve, out in ((curve_file, a), (moved, b)):
        code = run(["signature", "--model-k", str(mk / "model.npz"), "--model-s", str(ms / "model.npz"),
                    "--curve", str(curve), "--ref", "0", "--out", str(out)])
        assert code == 0
    assert (tmp_path / "sig" / "a.csv").is_file() and (tmp_path / "sig" / "a.config.json").is_file()
    rep = tmp_path / "report.json"
    assert run(["compare", f"{a}.csv", f"{b}.csv", "--out", str(rep)]) == 0
    r = json.loads(rep.read_text())
    assert np.isfinite(r["discrepancy"]) and r["discrepancy"] < 1e-6

    base = tmp_path / "base"
    assert run(["baseline", "--curve", str(curve_file), "--out", str(base)]) == 0
    svg = tmp_path / "p.svg"
    assert run(["plot", f"{a}.csv", f"{base}.csv", "--out", str(svg), "--labels", "learned", "axiomatic"]) == 0
    text = svg.read_text()
    assert text.count("<polyline") == 2 and "learned" in text
    assert run(["plot", f"{a}.csv", "--out", str(svg), "--labels", "x", "y"]) == 1
    # swapped model roles are rejected
    code = run(["signature", "--model-k", str(ms / "model.npz"), "--model-s", str(mk / "model.npz"),
                "--curve", str(curve_file), "--out", str(tmp_path / "bad")])
    assert code == 1


def test_train_without_data(tmp_path, monkeypatch):
    monkeypatch.delenv("CURVESIG_DATA", raising=False)
    assert run(["train", "curvature", "--out", str(tmp_path / "m"), "--steps", "1"]) == 1


def test_inputs_untouched(data, tmp_path):
    before = {p: p.read_bytes() for p in data.rglob("*") if p.is_file()}
    run(["train", "curvature", "--data", str(data), "--out", str(tmp_path / "m"), "--steps", "5", "--eval-every", "5"])
    after = {p: p.read_bytes() for p in data.rglob("*") if p.is_file()}
    assert before == after


def test_module_entrypoint():
    out = subprocess.run([sys.executable, "-m", "curvesig", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "curvesig" in out.stdout

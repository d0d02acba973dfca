"""Shared fixtures: a synthetic dataset and trained models for the acceptance suite.

Both are cached under ``.model_cache/`` (or ``$CURVESIG_MODEL_CACHE``), keyed by a
hash of the settings that produce them, so only the first run pays for training.
"""

import hashlib
import json
import os
import shutil
from pathlib import Path

import pytest

from curvesig import __version__
from curvesig.dataset import load_dataset, load_dataset_index, synth_dataset
from curvesig.nn import load_model, save_model
from curvesig.training import ArcLengthConfig, CurvatureConfig, TrainSettings, train

ROOT = Path(__file__).resolve().parents[1]
CACHE = Path(os.environ.get("CURVESIG_MODEL_CACHE", ROOT / ".model_cache"))

DATA = {"count": 800, "seed": 0, "size": 448, "sigma": 2.0, "level": 0.5, "min_points": 200}
TRAIN = {"steps": 20000, "batch_size": 64, "lr": 1e-3, "lr_final": 1e-4, "seed": 0, "eval_every": 1000}

ACCEPTANCE_LINES: list[str] = []


def _key(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_data():
    """Train/validation/test curve lists of the acceptance dataset."""
    d = CACHE / f"data-{_key(DATA)}"
    if not (d / "manifest.json").is_file():
        tmp = d.with_name(d.name + ".partial")
        shutil.rmtree(tmp, ignore_errors=True)
        synth_dataset(tmp, **DATA)
        shutil.rmtree(d, ignore_errors=True)
        tmp.rename(d)
    index = load_dataset_index(d)
    return {split: load_dataset(m) for split, m in index.items()}


@pytest.fixture(scope="session")
def trained_model(acceptance_data):
    """``get(task, group)`` returns a model trained with the acceptance settings."""
    def get(task: str, group: str):
        cfg = CurvatureConfig(group) if task == "curvature" else ArcLengthConfig(group)
        key = _key({"data": DATA, "train": TRAIN, "task": task, "group": group, "version": __version__})
        path = CACHE / f"{task}-{group}-{key}.npz"
        if not path.is_file():
            model, _ = train(task, acceptance_data["train"], acceptance_data["validation"], cfg,
                             TrainSettings(**TRAIN))
            CACHE.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.stem + ".partial.npz")
            save_model(model, tmp)
            os.replace(tmp, path)
        return load_model(path)

    return get

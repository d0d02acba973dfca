"""``curvesig`` command line: dataset, train, baseline, signature, compare, plot.

Every run writes a JSON snapshot of its resolved configuration next to its
outputs. Exit status is 0 on success, 1 on a library or I/O error and 2 on
a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .errors import CurveSigError

log = logging.getLogger("curvesig")

DATA_ENV = "CURVESIG_DATA"


def _default_data():
    return os.environ.get(DATA_ENV) or None


def _snapshot(args, path: Path, extra: dict | None = None) -> None:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg = {k: str(v) if isinstance(v, Path) else v for k, v in cfg.items()}
    cfg["version"] = __version__
    cfg["backend"] = kernels.BACKEND
    if extra:
        cfg.update(extra)
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True))


def _attach_log(path: Path) -> logging.Handler:
    h = logging.FileHandler(path, mode="w")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger("curvesig").addHandler(h)
    return h


def _prefix_paths(prefix) -> tuple[Path, str]:
    p = Path(prefix)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p.parent, p.name


# -- dataset -------------------------------------------------------------------

def cmd_dataset_synth(args) -> int:
    from .dataset import synth_dataset

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = _attach_log(out / "run.log")
    try:
        ms = synth_dataset(out, args.count, args.seed, args.size, args.sigma, args.level,
                           args.min_points, args.random_level)
    finally:
        logging.getLogger("curvesig").removeHandler(h)
        h.close()
    _snapshot(args, out / "config.json")
    print(" ".join(f"{k}={len(m.files)}" for k, m in ms.items()))
    return 0


def cmd_dataset_extract(args) -> int:
    from .dataset import extract_dataset

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = _attach_log(out / "run.log")
    try:
        ms = extract_dataset(args.input, out, args.sigma, args.level, args.min_points,
                             args.random_level, args.seed)
    finally:
        logging.getLogger("curvesig").removeHandler(h)
        h.close()
    _snapshot(args, out / "config.json")
    print(" ".join(f"{k}={len(m.files)}" for k, m in ms.items()))
    return 0


def cmd_dataset_info(args) -> int:
    from .dataset import load_dataset, load_dataset_index

    target = args.manifest or _default_data()
    if target is None:
        raise CurveSigError(f"no manifest given and {DATA_ENV} is not set")
    info = {}
    for name, m in load_dataset_index(target).items():
        lens = [len(c) for c in load_dataset(m)]
        info[name] = {
            "curves": len(lens),
            "points_min": int(min(lens)) if lens else 0,
            "points_median": float(np.median(lens)) if lens else 0.0,
            "points_max": int(max(lens)) if lens else 0,
            "params": m.params,
        }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


# -- training ------------------------------------------------------------------

def cmd_train(args) -> int:
    from .dataset import load_dataset, load_dataset_index
    from .nn import save_model
    from .training import TrainSettings, config_from_dict, default_spec, train

    data = args.data or _default_data()
    if data is None:
        raise CurveSigError(f"--data not given and {DATA_ENV} is not set")
    overrides = {}
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
    overrides["group"] = args.group
    cfg = config_from_dict(args.task, overrides)
    settings = TrainSettings(
        steps=args.steps, batch_size=args.batch_size, lr=args.lr, lr_final=args.lr_final,
        seed=args.seed, workers=args.workers, eval_every=args.eval_every,
    )
    splits = load_dataset_index(data)
    if "train" not in splits or "validation" not in splits:
        raise CurveSigError(f"{data} must provide train and validation splits")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = _attach_log(out / "train.log")
    try:
        model, tlog = train(args.task, load_dataset(splits["train"]), load_dataset(splits["validation"]),
                            cfg, settings, default_spec(args.task, cfg))
    finally:
        logging.getLogger("curvesig").removeHandler(h)
        h.close()
    model.meta["name"] = f"{args.task}-{cfg.group}"
    save_model(model, out / "model.npz")
    tlog.to_csv(out / "loss.csv")
    _snapshot(args, out / "config.json", {"resolved_config": model.meta["config"]})
    print(f"saved {out / 'model.npz'} (best val loss {model.meta.get('best_val_loss', float('nan')):.6g})")
    return 0


# -- signatures ------------------------------------------------------------------

def _write_prefixed(args, prefix, sig) -> None:
    from .signature import save_signature

    parent, name = _prefix_paths(prefix)
    save_signature(sig, parent / f"{name}.csv")
    _snapshot(args, parent / f"{name}.config.json")


def cmd_baseline(args) -> int:
    from .axiomatic import axiomatic_euclidean_signature
    from .curves import load_curve

    sig = axiomatic_euclidean_signature(load_curve(args.curve), args.ref)
    _write_prefixed(args, args.out, sig)
    print(f"{len(sig)} entries, total length {sig.total:.6g}")
    return 0


def cmd_signature(args) -> int:
    from .curves import load_curve
    from .nn import load_model
    from .signature import build_signature

    k_model = load_model(args.model_k)
    s_model = load_model(args.model_s)
    if k_model.task != "curvature" or s_model.task != "arclength":
        raise CurveSigError("--model-k needs a curvature model and --model-s an arc-length model")
    if k_model.group != s_model.group:
        log.warning("curvature model group %s differs from arc-length group %s", k_model.group, s_model.group)
    curve = load_curve(args.curve)
    sig = build_signature(curve, k_model, s_model, args.ref)
    _write_prefixed(args, args.out, sig)
    print(f"{len(sig)} entries, total arc-length {sig.total:.6g}")
    return 0


def cmd_compare(args) -> int:
    from .signature import index_discrepancy, load_signature, signature_discrepancy

    a = load_signature(args.sig1)
    b = load_signature(args.sig2)
    report = {
        "sig1": str(args.sig1),
        "sig2": str(args.sig2),
        "discrepancy": signature_discrepancy(a, b, args.grid),
        "index_discrepancy": index_discrepancy(a, b, args.grid),
        "entries": [len(a), len(b)],
        "total_s": [float(a.s[-1]), float(b.s[-1])],
        "grid": args.grid,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2))
    _snapshot(args, out.with_suffix(".config.json"))
    print(f"discrepancy {report['discrepancy']:.6g} (index {report['index_discrepancy']:.6g})")
    return 0


def cmd_plot(args) -> int:
    from .plot import PlotStyle, emit_plot, signature_series
    from .signature import load_signature

    labels = args.labels or [Path(p).stem for p in args.sigs]
    if len(labels) != len(args.sigs):
        raise CurveSigError("--labels needs one label per signature")
    series = [signature_series(load_signature(p), lab, args.by_index) for p, lab in zip(args.sigs, labels)]
    style = PlotStyle(title=args.title or "", xlabel="index" if args.by_index else "s", ylabel="kappa")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_plot(series, style, out)
    _snapshot(args, out.with_suffix(".config.json"))
    print(f"wrote {out}")
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvesig", description="Learned differential invariants of planar curves.")
    p.add_argument("--version", action="version", version=f"curvesig {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="build or inspect curve datasets")
    dsub = ds.add_subparsers(dest="action", required=True)

    def extraction_flags(q):
        q.add_argument("--out", required=True, help="output directory")
        q.add_argument("--sigma", type=float, default=2.0, help="blur sigma in pixels")
        q.add_argument("--level", type=float, default=0.5, help="iso-intensity level")
        q.add_argument("--min-points", type=int, default=200)
        q.add_argument("--random-level", action="store_true", help="draw the level per image from U[0.3, 0.7]")
        q.add_argument("--seed", type=int, default=0)

    q = dsub.add_parser("synth", help="random blob images -> level curves")
    q.add_argument("--count", type=int, required=True)
    q.add_argument("--size", type=int, default=448, help="image side in pixels")
    extraction_flags(q)
    q.set_defaults(func=cmd_dataset_synth)

    q = dsub.add_parser("extract", help="level curves from a directory of images")
    q.add_argument("--input", required=True)
    extraction_flags(q)
    q.set_defaults(func=cmd_dataset_extract)

    q = dsub.add_parser("info", help="summarize a dataset manifest")
    q.add_argument("manifest", nargs="?", help=f"manifest or dataset root (default ${DATA_ENV})")
    q.set_defaults(func=cmd_dataset_info)

    q = sub.add_parser("train", help="train a curvature or arc-length network")
    q.add_argument("task", choices=("curvature", "arclength"))
    q.add_argument("--group", default="se2", choices=("se2", "e2", "sa2", "a2"))
    q.add_argument("--data", help=f"dataset root (default ${DATA_ENV})")
    q.add_argument("--out", required=True, help="output directory")
    q.add_argument("--steps", type=int, default=20000)
    q.add_argument("--batch-size", type=int, default=64)
    q.add_argument("--lr", type=float, default=1e-3)
    q.add_argument("--lr-final", type=float, default=1e-4, help="learning rate reached at the last step")
    q.add_argument("--eval-every", type=int, default=500)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--config", help="JSON file with tuplet-generation overrides")
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("baseline", help="axiomatic Euclidean signature of a curve")
    q.add_argument("--curve", required=True)
    q.add_argument("--ref", type=int, default=0)
    q.add_argument("--out", required=True, help="output prefix")
    q.set_defaults(func=cmd_baseline)

    q = sub.add_parser("signature", help="learned signature of a curve")
    q.add_argument("--model-k", required=True)
    q.add_argument("--model-s", required=True)
    q.add_argument("--curve", required=True)
    q.add_argument("--ref", type=int, default=0)
    q.add_argument("--out", required=True, help="output prefix")
    q.set_defaults(func=cmd_signature)

    q = sub.add_parser("compare", help="discrepancy between two signatures")
    q.add_argument("sig1")
    q.add_argument("sig2")
    q.add_argument("--out", required=True, help="report JSON path")
    q.add_argument("--grid", type=int, default=512)
    q.set_defaults(func=cmd_compare)

    q = sub.add_parser("plot", help="SVG of one or more signatures")
    q.add_argument("sigs", nargs="+")
    q.add_argument("--out", required=True, help="SVG path")
    q.add_argument("--by-index", action="store_true", help="plot kappa against sample index")
    q.add_argument("--labels", nargs="+")
    q.add_argument("--title")
    q.set_defaults(func=cmd_plot)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("curvesig").setLevel(logging.INFO)
    try:
        return args.func(args)
    except (CurveSigError, OSError, ValueError) as exc:
        print(f"curvesig: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())

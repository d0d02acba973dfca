"""Curve datasets: grayscale images -> blur -> closed level curves -> CSV files.

Layout on disk::

    root/manifest.json                 index of the splits
    root/{train,validation,test}/manifest.json
    root/{train,validation,test}/curve_00000.csv
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d

from . import kernels
from .curves import PlanarCurve, load_curve, save_curve

log = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")
IMAGE_SUFFIXES = (".pgm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major intensities in [0, 1]; ``pixels[row, col]``."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.array(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("gray image must be 2-D")
        if p.size and (p.min() < 0 or p.max() > 1):
            raise ValueError("intensities must lie in [0, 1]")
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    """Separable Gaussian, radius ``ceil(3 sigma)``, clamped edges."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return img
    k = gaussian_kernel(sigma)
    out = correlate1d(img.pixels, k, axis=0, mode="nearest")
    out = correlate1d(out, k, axis=1, mode="nearest")
    return GrayImage(np.clip(out, 0.0, 1.0))


def _dedupe(p: np.ndarray) -> np.ndarray:
    keep = np.any(p != np.roll(p, 1, axis=0), axis=1)
    return p[keep]


def extract_level_curves(img: GrayImage, level: float, min_points: int = 200) -> list[PlanarCurve]:
    """Closed iso-contours at ``level`` with interior (brighter side) on the left.

    Points are ``(x, y) = (column, row)``, linearly interpolated along cell
    edges. Contours that run into the image border are dropped.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if min_points < 3:
        raise ValueError("min_points must be >= 3")
    pts, offsets, closed = kernels.trace_isolines(img.pixels, level)
    curves = []
    for k in range(len(closed)):
        if not closed[k]:
            continue
        p = _dedupe(pts[offsets[k] : offsets[k + 1]])
        if len(p) >= min_points:
            curves.append(PlanarCurve(p, closed=True))
    return curves


def load_gray_image(path) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    path = os.fspath(path)
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I"):
                a = np.asarray(im, dtype=np.float64) / 65535.0
            else:
                a = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except (OSError, UnidentifiedImageError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    return GrayImage(a)


def synth_blob_image(rng: np.random.Generator, size: int = 448) -> GrayImage:
    """Random smooth blob: a few positive Gaussians, dented by negative ones."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2.0
    f = np.zeros((size, size))
    for _ in range(rng.integers(2, 7)):
        cx, cy = c + rng.uniform(-0.16, 0.16, 2) * size
        s = rng.uniform(0.05, 0.16) * size
        f += rng.uniform(0.6, 1.0) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s))
    for _ in range(rng.integers(0, 4)):
        cx, cy = c + rng.uniform(-0.3, 0.3, 2) * size
        s = rng.uniform(0.03, 0.08) * size
        f -= rng.uniform(0.2, 0.5) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s))
    f = np.clip(f / f.max(), 0.0, 1.0)
    return GrayImage(f)


# -- manifests ---------------------------------------------------------------

@dataclass
class DatasetManifest:
    split: str
    files: list[str]
    params: dict = field(default_factory=dict)
    sources: list[str] = field(default_factory=list)
    path: Path | None = field(default=None, repr=False, compare=False)

    def resolve(self, name: str) -> Path:
        base = self.path.parent if self.path is not None else Path(".")
        return base / name


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    d = asdict(manifest)
    d.pop("path")
    path.write_text(json.dumps(d, indent=2))
    manifest.path = path


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        d = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    if "splits" in d:
        raise ValueError(f"{path} indexes several splits; use load_dataset_index")
    m = DatasetManifest(d["split"], list(d["files"]), d.get("params", {}), d.get("sources", []), path)
    for name in m.files:
        if not m.resolve(name).is_file():
            raise OSError(f"manifest {path} references missing file {m.resolve(name)}")
    return m


def load_dataset(manifest) -> list[PlanarCurve]:
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    return [load_curve(manifest.resolve(name)) for name in manifest.files]


def load_dataset_index(path) -> dict[str, DatasetManifest]:
    """Split manifests named by a root ``manifest.json`` (or a split manifest)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        d = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    if "splits" not in d:
        m = load_manifest(path)
        return {m.split: m}
    return {name: load_manifest(path.parent / rel) for name, rel in d["splits"].items()}


def split_counts(n: int, fractions=(0.7, 0.15, 0.15)) -> tuple[int, int, int]:
    if n < 3:
        return n, 0, 0
    n_val = max(1, int(round(fractions[1] * n)))
    n_test = max(1, int(round(fractions[2] * n)))
    return n - n_val - n_test, n_val, n_test


def write_dataset(
    out_dir, curves: list[PlanarCurve], params: dict, sources: list[str] | None = None,
    fractions=(0.7, 0.15, 0.15),
) -> dict[str, DatasetManifest]:
    """Write curves in order into train/validation/test splits."""
    out = Path(out_dir)
    sources = sources if sources is not None else [""] * len(curves)
    counts = split_counts(len(curves), fractions)
    manifests = {}
    start = 0
    for split, cnt in zip(SPLITS, counts):
        d = out / split
        d.mkdir(parents=True, exist_ok=True)
        files, srcs = [], []
        for k in range(start, start + cnt):
            name = f"curve_{k:05d}.csv"
            save_curve(curves[k], d / name)
            files.append(name)
            srcs.append(sources[k])
        start += cnt
        m = DatasetManifest(split, files, dict(params), srcs)
        save_manifest(m, d / "manifest.json")
        manifests[split] = m
    index = {"splits": {s: f"{s}/manifest.json" for s in SPLITS}, "params": dict(params)}
    (out / "manifest.json").write_text(json.dumps(index, indent=2))
    return manifests


def curve_from_image(img: GrayImage, sigma: float, level: float, min_points: int) -> PlanarCurve | None:
    """Longest closed level curve of the blurred image, if any."""
    curves = extract_level_curves(gaussian_blur(img, sigma), level, min_points)
    if not curves:
        return None
    return max(curves, key=len)


def synth_dataset(
    out_dir, count: int, seed: int = 0, size: int = 448, sigma: float = 2.0,
    level: float = 0.5, min_points: int = 200, random_level: bool = False,
) -> dict[str, DatasetManifest]:
    rng = np.random.default_rng(seed)
    curves, sources = [], []
    attempts = 0
    while len(curves) < count:
        attempts += 1
        if attempts > 20 * count + 100:
            raise RuntimeError("synthetic generator keeps failing; check min_points")
        lvl = rng.uniform(0.3, 0.7) if random_level else level
        c = curve_from_image(synth_blob_image(rng, size), sigma, lvl, min_points)
        if c is None:
            continue
        curves.append(c)
        sources.append(f"synth:seed={seed}:draw={attempts - 1}:level={lvl:.6g}")
    params = {
        "generator": "synth-blobs", "seed": seed, "size": size, "blur_sigma": sigma,
        "level": "random" if random_level else level, "min_points": min_points,
    }
    return write_dataset(out_dir, curves, params, sources)


def extract_dataset(
    input_dir, out_dir, sigma: float = 2.0, level: float = 0.5, min_points: int = 200,
    random_level: bool = False, seed: int = 0,
) -> dict[str, DatasetManifest]:
    rng = np.random.default_rng(seed)
    paths = sorted(p for p in Path(input_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    curves, sources = [], []
    for p in paths:
        lvl = rng.uniform(0.3, 0.7) if random_level else level
        c = curve_from_image(load_gray_image(p), sigma, lvl, min_points)
        if c is None:
            log.info("no closed level curve in %s", p)
            continue
        curves.append(c)
        sources.append(f"{p.name}:level={lvl:.6g}")
    # shuffle so splits do not follow file name order
    order = rng.permutation(len(curves))
    curves = [curves[i] for i in order]
    sources = [sources[i] for i in order]
    params = {
        "generator": "images", "input": str(input_dir), "blur_sigma": sigma,
        "level": "random" if random_level else level, "min_points": min_points, "seed": seed,
    }
    return write_dataset(out_dir, curves, params, sources)

"""Self-supervised tuplet generation, tuplet losses and the training loop."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .curves import PlanarCurve, PointSample, downsample_indices, random_pmf
from .errors import ConfigurationError, SkipCurve, TrainingDivergence
from .groups import GroupKind, sample_linear
from .nn import MLPParams, MLPSpec, Model, adam_init, mlp_backward, mlp_forward, mlp_init, optimizer_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvatureConfig:
    group: str = "se2"
    half_width: int = 6
    keep_range: tuple[float, float] = (0.3, 0.9)
    m_neg: int = 4
    neg_offset: tuple[int, int] = (5, 30)
    concentration: float = 1.0
    cond_max: float = 3.0
    det_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if self.half_width < 2:
            raise ConfigurationError("half_width must be >= 2")
        if self.m_neg < 1:
            raise ConfigurationError("m_neg must be >= 1")
        if self.neg_offset[0] < 1 or self.neg_offset[1] < self.neg_offset[0]:
            raise ConfigurationError("negative offsets must be a positive range (0 excluded)")
        if not 0 < self.keep_range[0] <= self.keep_range[1] <= 1:
            raise ConfigurationError("keep_range must lie in (0, 1]")

    @property
    def window(self) -> int:
        return 2 * self.half_width + 1


@dataclass(frozen=True)
class ArcLengthConfig:
    group: str = "se2"
    m_anchors: int = 5
    n_section: int = 40
    gap_range: tuple[int, int] = (40, 120)
    concentration: float = 1.0
    cond_max: float = 3.0
    det_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if self.m_anchors < 3:
            raise ConfigurationError("m_anchors must be >= 3")
        if self.n_section < 4:
            raise ConfigurationError("n_section must be >= 4")
        if self.gap_range[0] + 1 < self.n_section:
            raise ConfigurationError("smallest anchor gap leaves fewer than n_section raw points")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Section index pairs: adjacent ones first (set A), then the rest (B)."""
        m = self.m_anchors
        adj = [(i, i + 1) for i in range(m - 1)]
        far = [(i, j) for i in range(m) for j in range(i + 2, m)]
        return adj + far


def config_from_dict(task: str, d: dict):
    cls = CurvatureConfig if task == "curvature" else ArcLengthConfig
    d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    return cls(**d)


# -- tuplets -----------------------------------------------------------------

@dataclass
class CurvatureTuplet:
    anchor: PointSample
    positive: PointSample
    negatives: list[PointSample]  # last one is the flipped anchor

    def stacked(self) -> np.ndarray:
        return np.stack([s.points for s in (self.anchor, self.positive, *self.negatives)])


@dataclass
class ArcLengthTuplet:
    A: dict[tuple[int, int], PointSample]
    B: dict[tuple[int, int], PointSample]


def _keep_count(n: int, ratio: float) -> int:
    return int(round(ratio * n))


def _linear(cfg, rng, size):
    return sample_linear(GroupKind.parse(cfg.group), rng, size, cfg.cond_max, cfg.det_range)


def curvature_windows(points: np.ndarray, closed: bool, cfg: CurvatureConfig, rng: np.random.Generator,
                      center: int | None = None):
    """Raw-index windows and linear maps for one tuplet (flip not included).

    Returns ``(index, linear)`` with ``index`` of shape (m_neg + 2, window).
    """
    n = len(points)
    N = cfg.half_width
    L = cfg.window
    if _keep_count(n, cfg.keep_range[0]) < L + 2:
        raise SkipCurve(f"curve of {n} points too short for windows of {L}")
    c = int(rng.integers(n)) if center is None else center
    lo, hi = cfg.neg_offset
    span = hi - lo + 1
    if cfg.m_neg > 2 * span:
        raise ConfigurationError("not enough distinct negative offsets")
    # distinct signed offsets for the negatives
    picks = rng.choice(2 * span, size=cfg.m_neg, replace=False)
    offs = np.where(picks < span, lo + picks, -(lo + picks - span))
    centers = np.concatenate([[c, c], c + offs])
    if closed:
        centers %= n
    elif np.any(centers < 0) or np.any(centers >= n):
        raise SkipCurve("negative centre falls off an open curve")

    ratios = rng.uniform(cfg.keep_range[0], cfg.keep_range[1], len(centers))
    index = np.empty((len(centers), L), dtype=np.int64)
    rel = np.arange(-N, N + 1)
    for k, (ck, r) in enumerate(zip(centers, ratios)):
        keep = max(_keep_count(n, r), L + 2)
        w = random_pmf(n, cfg.concentration, rng)
        idx = downsample_indices(w, keep, (ck,), rng)
        pos = int(np.searchsorted(idx, ck))
        if closed:
            index[k] = idx[(pos + rel) % keep]
        else:
            if pos - N < 0 or pos + N >= keep:
                raise SkipCurve("window leaves the open curve")
            index[k] = idx[pos + rel]
    return index, _linear(cfg, rng, len(centers))


def curvature_batch(curves, cfg: CurvatureConfig, rng: np.random.Generator, batch_size: int) -> np.ndarray:
    """Normalized tuplets, shape (batch, m_neg + 3, window, 2).

    Per tuplet the order is anchor, positive, m_neg negatives, flipped anchor.
    """
    windows, lins, owners = [], [], []
    made = 0
    tries = 0
    while made < batch_size:
        tries += 1
        if tries > 50 * batch_size:
            raise SkipCurve("no curve in the dataset supports curvature tuplets")
        ci = int(rng.integers(len(curves)))
        pts, closed = curves[ci]
        try:
            idx, A = curvature_windows(pts, closed, cfg, rng)
        except SkipCurve:
            continue
        windows.append(idx)
        lins.append(A)
        owners.append(ci)
        made += 1
    k = cfg.m_neg + 2
    L = cfg.window
    out = np.empty((batch_size, k + 1, L, 2))
    # gather per curve so each kernel call sees one point array
    for ci in set(owners):
        rows = [b for b, o in enumerate(owners) if o == ci]
        idx = np.concatenate([windows[b] for b in rows])
        A = np.concatenate([lins[b] for b in rows])
        t = np.zeros((len(idx), 2))
        w = kernels.gather_normalize(curves[ci][0], idx, A, t, cfg.half_width).reshape(len(rows), k, L, 2)
        out[rows, :k] = w
    out[:, k] = kernels.normalize_windows(out[:, 0, ::-1].copy(), cfg.half_width)
    return out


def make_curvature_tuplet(curve: PlanarCurve, cfg: CurvatureConfig, rng: np.random.Generator,
                          center: int | None = None) -> CurvatureTuplet:
    idx, A = curvature_windows(curve.points, curve.closed, cfg, rng, center)
    w = kernels.gather_normalize(curve.points, idx, A, np.zeros((len(idx), 2)), cfg.half_width)
    flipped = kernels.normalize_windows(w[:1, ::-1].copy(), cfg.half_width)[0]
    samples = [PointSample(w[i], "neighborhood", idx[i]) for i in range(len(w))]
    negs = samples[2:] + [PointSample(flipped, "neighborhood", idx[0][::-1])]
    return CurvatureTuplet(samples[0], samples[1], negs)


def arclength_windows(points: np.ndarray, closed: bool, cfg: ArcLengthConfig, rng: np.random.Generator):
    """Raw-index sections (A pairs then B pairs) and their linear maps."""
    n = len(points)
    m = cfg.m_anchors
    gaps = rng.integers(cfg.gap_range[0], cfg.gap_range[1] + 1, m - 1)
    span = int(gaps.sum())
    if span >= n - 1:
        raise SkipCurve(f"anchors spanning {span} points do not fit a curve of {n}")
    if closed:
        a0 = int(rng.integers(n))
    else:
        a0 = int(rng.integers(n - span))
    anchors = a0 + np.concatenate([[0], np.cumsum(gaps)])
    pairs = cfg.pairs
    index = np.empty((len(pairs), cfg.n_section), dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        raw = np.arange(anchors[i], anchors[j] + 1)
        if len(raw) < cfg.n_section:
            raise SkipCurve("section has fewer raw points than n_section")
        w = random_pmf(len(raw), cfg.concentration, rng)
        sel = downsample_indices(w, cfg.n_section, (0, len(raw) - 1), rng)
        index[k] = raw[sel] % n
    gA, gB = _linear(cfg, rng, 2)
    n_adj = m - 1
    A = np.empty((len(pairs), 2, 2))
    A[:n_adj] = gA
    A[n_adj:] = gB
    return index, A


def arclength_batch(curves, cfg: ArcLengthConfig, rng: np.random.Generator, batch_size: int) -> np.ndarray:
    """Normalized sections, shape (batch, len(cfg.pairs), n_section, 2)."""
    P = len(cfg.pairs)
    out = np.empty((batch_size, P, cfg.n_section, 2))
    made = 0
    tries = 0
    while made < batch_size:
        tries += 1
        if tries > 50 * batch_size:
            raise SkipCurve("no curve in the dataset supports arc-length tuplets")
        pts, closed = curves[int(rng.integers(len(curves)))]
        try:
            idx, A = arclength_windows(pts, closed, cfg, rng)
        except SkipCurve:
            continue
        out[made] = kernels.gather_normalize(pts, idx, A, np.zeros((P, 2)), cfg.n_section // 2)
        made += 1
    return out


def make_arclength_tuplet(curve: PlanarCurve, cfg: ArcLengthConfig, rng: np.random.Generator) -> ArcLengthTuplet:
    idx, A = arclength_windows(curve.points, curve.closed, cfg, rng)
    w = kernels.gather_normalize(curve.points, idx, A, np.zeros((len(idx), 2)), cfg.n_section // 2)
    n_adj = cfg.m_anchors - 1
    samples = {p: PointSample(w[k], "section", idx[k]) for k, p in enumerate(cfg.pairs)}
    pairs = cfg.pairs
    return ArcLengthTuplet({p: samples[p] for p in pairs[:n_adj]}, {p: samples[p] for p in pairs[n_adj:]})


# -- losses ------------------------------------------------------------------

def curvature_tuplet_loss(k_a: float, k_p: float, k_n) -> float:
    """``log(1 + sum_i exp(|k_a - k_p| - |k_a - k_n_i|))``, overflow safe."""
    z = abs(k_a - k_p) - np.abs(k_a - np.asarray(k_n, dtype=np.float64))
    return float(np.logaddexp.reduce(np.concatenate([[0.0], z])))


def curvature_loss_grad(k: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean tuplet loss over rows of ``k`` = [anchor, positive, negatives...]
    and its gradient w.r.t. ``k``."""
    ka, kp, kn = k[:, :1], k[:, 1:2], k[:, 2:]
    dp = ka - kp
    dn = ka - kn
    z = np.abs(dp) - np.abs(dn)
    zmax = np.maximum(z.max(axis=1, keepdims=True), 0.0)
    ez = np.exp(z - zmax)
    denom = np.exp(-zmax) + ez.sum(axis=1, keepdims=True)
    loss = zmax[:, 0] + np.log(denom[:, 0])
    pi = ez / denom
    sp, sn = np.sign(dp), np.sign(dn)
    g = np.empty_like(k)
    g[:, 0] = (pi * (sp - sn)).sum(axis=1)
    g[:, 1] = -(pi * sp).sum(axis=1)
    g[:, 2:] = pi * sn
    B = len(k)
    return float(loss.mean()), g / B


def arclength_loss(s: dict, m_s: int) -> float:
    """Additivity plus monotonicity loss for one tuplet.

    ``s`` maps 1-based ``(i, j)`` pairs, ``i < j <= m_s``, to model outputs.
    """
    total = 0.0
    for i in range(1, m_s - 1):
        for j in range(i + 2, m_s + 1):
            total += abs(s[(i, j)] - sum(s[(k, k + 1)] for k in range(i, j)))
        total += float(np.exp(s[(i, i + 1)] - s[(i, i + 2)]))
    return total


def arclength_loss_grad(s: np.ndarray, cfg: ArcLengthConfig) -> tuple[float, np.ndarray]:
    """Vectorized ``arclength_loss`` over a batch, columns ordered as ``cfg.pairs``."""
    pairs = cfg.pairs
    col = {p: k for k, p in enumerate(pairs)}
    n_adj = cfg.m_anchors - 1
    csum = np.concatenate([np.zeros((len(s), 1)), np.cumsum(s[:, :n_adj], axis=1)], axis=1)
    g = np.zeros_like(s)
    loss = np.zeros(len(s))
    for (i, j), k in col.items():
        if j - i < 2:
            continue
        r = s[:, k] - (csum[:, j] - csum[:, i])
        loss += np.abs(r)
        sg = np.sign(r)
        g[:, k] += sg
        g[:, i:j] -= sg[:, None]
    for i in range(cfg.m_anchors - 2):
        e = np.exp(s[:, col[(i, i + 1)]] - s[:, col[(i, i + 2)]])
        loss += e
        g[:, col[(i, i + 1)]] += e
        g[:, col[(i, i + 2)]] -= e
    return float(loss.mean()), g / len(s)


# -- training loop -----------------------------------------------------------

@dataclass
class TrainingLog:
    rows: list[tuple[int, float, float]] = field(default_factory=list)

    def add(self, step, train_loss, val_loss):
        self.rows.append((int(step), float(train_loss), float(val_loss)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "train_loss", "val_loss"])
            for r in self.rows:
                w.writerow([r[0], repr(r[1]), repr(r[2])])

    def __len__(self):
        return len(self.rows)


@dataclass
class TrainSettings:
    steps: int = 20000
    batch_size: int = 64
    lr: float = 1e-4
    lr_final: float | None = None  # geometric decay target; None keeps lr fixed
    seed: int = 0
    workers: int = 1
    eval_every: int = 500
    val_tuplets: int = 256
    val_seed: int = 12345


def default_spec(task: str, cfg) -> MLPSpec:
    if task == "curvature":
        return MLPSpec(2 * cfg.window, (128, 128, 64), "tanh", input_scale=0.1)
    return MLPSpec(2 * cfg.n_section, (128, 128, 64), "tanh", input_scale=0.01)


def _as_arrays(curves):
    return [(np.asarray(c.points), bool(c.closed)) for c in curves]


def _make_batch(task, curves, cfg, seed, batch_index, batch_size):
    rng = np.random.default_rng(np.random.SeedSequence([seed, batch_index]))
    if task == "curvature":
        return curvature_batch(curves, cfg, rng, batch_size)
    return arclength_batch(curves, cfg, rng, batch_size)


def _loss_grad(task, cfg, out):
    if task == "curvature":
        return curvature_loss_grad(out)
    return arclength_loss_grad(out, cfg)


def evaluate_loss(task, params: MLPParams, cfg, batch: np.ndarray) -> float:
    B, K = batch.shape[:2]
    out = mlp_forward(params, batch.reshape(B * K, -1)).reshape(B, K)
    return _loss_grad(task, cfg, out)[0]


def _worker_batch(args):
    return _make_batch(*args)


def _batches(task, curves, cfg, settings: TrainSettings):
    jobs = ((task, curves, cfg, settings.seed, b, settings.batch_size) for b in range(settings.steps))
    if settings.workers <= 1:
        yield from map(_worker_batch, jobs)
        return
    import multiprocessing as mp

    with mp.get_context("fork").Pool(settings.workers) as pool:
        # imap keeps batch order, so results do not depend on the worker count
        yield from pool.imap(_worker_batch, jobs, chunksize=4)


def manifest_hash(curves) -> str:
    h = hashlib.sha256()
    for pts, closed in curves:
        h.update(np.ascontiguousarray(pts).tobytes())
        h.update(b"1" if closed else b"0")
    return h.hexdigest()[:16]


def train(task: str, train_curves, val_curves, cfg, settings: TrainSettings | None = None,
          spec: MLPSpec | None = None, init: MLPParams | None = None, progress=None):
    """Train a curvature or arc-length network; returns ``(Model, TrainingLog)``.

    The returned parameters are the ones with the lowest validation loss.
    Each batch is drawn from its own seed derived from ``settings.seed`` and
    the batch number, so runs are reproducible for any worker count.
    """
    if task not in ("curvature", "arclength"):
        raise ConfigurationError(f"unknown task {task!r}")
    settings = settings or TrainSettings()
    train_c = _as_arrays(train_curves)
    val_c = _as_arrays(val_curves)
    if not train_c or not val_c:
        raise ConfigurationError("training needs non-empty train and validation sets")
    spec = spec or default_spec(task, cfg)
    params = init.copy() if init is not None else mlp_init(spec, np.random.default_rng(settings.seed))
    window = cfg.half_width if task == "curvature" else cfg.n_section
    meta = {
        "config": asdict(cfg),
        "settings": asdict(settings),
        "train_hash": manifest_hash(train_c),
    }
    log_ = TrainingLog()
    if settings.steps <= 0:
        return Model(params, task, GroupKind.parse(cfg.group).value, window, meta), log_

    vrng = np.random.default_rng(settings.val_seed)
    if task == "curvature":
        val_batch = curvature_batch(val_c, cfg, vrng, settings.val_tuplets)
    else:
        val_batch = arclength_batch(val_c, cfg, vrng, settings.val_tuplets)

    state = adam_init(params, lr=settings.lr)
    best = (evaluate_loss(task, params, cfg, val_batch), params)
    running = []
    t0 = time.time()
    for step, batch in enumerate(_batches(task, train_c, cfg, settings), start=1):
        if settings.lr_final is not None:
            frac = (step - 1) / max(settings.steps - 1, 1)
            state.lr = settings.lr * (settings.lr_final / settings.lr) ** frac
        B, K = batch.shape[:2]
        X = batch.reshape(B * K, -1)
        out = mlp_forward(params, X).reshape(B, K)
        loss, g = _loss_grad(task, cfg, out)
        if not np.isfinite(loss):
            raise TrainingDivergence(f"non-finite loss at step {step}")
        grads = mlp_backward(params, X, g.reshape(-1))
        state, params = optimizer_step(state, params, grads)
        running.append(loss)
        if step % settings.eval_every == 0 or step == settings.steps:
            vl = evaluate_loss(task, params, cfg, val_batch)
            tl = float(np.mean(running))
            running = []
            log_.add(step, tl, vl)
            if vl < best[0]:
                best = (vl, params)
            msg = f"{task} {cfg.group} step {step}: train {tl:.5f} val {vl:.5f} ({time.time() - t0:.0f}s)"
            log.info(msg)
            if progress is not None:
                progress(msg)
    meta["best_val_loss"] = best[0]
    return Model(best[1], task, GroupKind.parse(cfg.group).value, window, meta), log_

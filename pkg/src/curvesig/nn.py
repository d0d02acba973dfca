"""Feed-forward network with hand-written reverse-mode gradients and Adam.

One parameter set is shared by every head of a Siamese tuplet, so a whole
tuplet batch is evaluated as a single stacked forward pass.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InvalidSizeError, TrainingDivergence

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MLPSpec:
    input_dim: int
    hidden_dims: tuple[int, ...] = (128, 128, 64)
    activation: str = "tanh"
    # fixed multiplier applied to raw coordinates before the first layer
    input_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def output_dim(self) -> int:
        return 1

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_dim, *self.hidden_dims, 1]


@dataclass
class MLPParams:
    spec: MLPSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    @classmethod
    def from_arrays(cls, spec: MLPSpec, arrays) -> "MLPParams":
        k = len(arrays) // 2
        return cls(spec, list(arrays[:k]), list(arrays[k:]))

    def copy(self) -> "MLPParams":
        return MLPParams.from_arrays(self.spec, [a.copy() for a in self.arrays()])


def mlp_init(spec: MLPSpec, rng: np.random.Generator) -> MLPParams:
    """Uniform weights with variance ``1 / fan_in``, zero biases."""
    dims = spec.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(3.0 / fan_in)
        weights.append(rng.uniform(-lim, lim, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPParams(spec, weights, biases)


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(name, z, a):
    if name == "tanh":
        return 1.0 - a * a
    return (z > 0).astype(z.dtype)


def _as_batch(params: MLPParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x.reshape(len(x), -1)
    if X.shape[1] != params.spec.input_dim:
        raise InvalidSizeError(f"expected input dim {params.spec.input_dim}, got {X.shape[1]}")
    return X, single


def _forward_cache(params: MLPParams, X: np.ndarray):
    act = params.spec.activation
    h = X * params.spec.input_scale
    zs, hs = [], [h]
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W + b
        h = z if i == last else _act(act, z)
        zs.append(z)
        hs.append(h)
    return zs, hs


def mlp_forward(params: MLPParams, x):
    """Scalar output for one flattened sample, or an array for a batch."""
    X, single = _as_batch(params, x)
    _, hs = _forward_cache(params, X)
    y = hs[-1][:, 0]
    return float(y[0]) if single else y


def mlp_backward(params: MLPParams, x, upstream, wrt_input: bool = False):
    """Gradients of ``sum_b upstream[b] * y[b]`` w.r.t. every parameter.

    Returns a list of arrays ordered like ``params.arrays()``; with
    ``wrt_input`` a second item holds the input gradient.
    """
    X, single = _as_batch(params, x)
    g = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    if len(g) == 1 and len(X) > 1:
        g = np.broadcast_to(g, (len(X), 1))
    zs, hs = _forward_cache(params, X)
    act = params.spec.activation
    nl = len(params.weights)
    gW = [None] * nl
    gb = [None] * nl
    delta = g
    for i in range(nl - 1, -1, -1):
        if i != nl - 1:
            delta = delta * _act_grad(act, zs[i], hs[i + 1])
        gW[i] = hs[i].T @ delta
        gb[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i].T
    grads = [*gW, *gb]
    if not wrt_input:
        return grads
    gx = delta * params.spec.input_scale
    return grads, (gx[0] if single else gx)


@dataclass
class AdamState:
    step: int
    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: MLPParams, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    arrs = params.arrays()
    return AdamState(0, [np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs], lr, beta1, beta2, eps)


def optimizer_step(state: AdamState, params: MLPParams, grads) -> tuple[AdamState, MLPParams]:
    """One bias-corrected Adam update; inputs are left untouched."""
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDivergence("non-finite gradient")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m = [b1 * mi + (1 - b1) * g for mi, g in zip(state.m, grads)]
    v = [b2 * vi + (1 - b2) * g * g for vi, g in zip(state.v, grads)]
    c1 = 1 - b1**t
    c2 = 1 - b2**t
    new = [
        p - state.lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps)
        for p, mi, vi in zip(params.arrays(), m, v)
    ]
    return replace(state, step=t, m=m, v=v), MLPParams.from_arrays(params.spec, new)


# -- model files -------------------------------------------------------------

@dataclass
class Model:
    """Trained parameters plus everything needed to use them."""

    params: MLPParams
    task: str  # "curvature" | "arclength"
    group: str
    window: int  # N_nbhd for curvature, N_s for arc-length
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return mlp_forward(self.params, x)


def save_model(model: Model, path) -> None:
    header = {
        "format": "curvesig-model",
        "version": MODEL_FORMAT_VERSION,
        "spec": asdict(model.params.spec),
        "task": model.task,
        "group": model.group,
        "window": model.window,
        "meta": model.meta,
    }
    arrays = {f"a{i}": a for i, a in enumerate(model.params.arrays())}
    buf = io.BytesIO()
    np.savez(buf, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> Model:
    path = os.fspath(path)
    try:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(bytes(z["header"]).decode())
            n = len([k for k in z.files if k.startswith("a")])
            arrays = [z[f"a{i}"] for i in range(n)]
    except (OSError, KeyError, ValueError) as exc:
        raise OSError(f"cannot read model file {path}: {exc}") from exc
    if header.get("format") != "curvesig-model":
        raise OSError(f"{path} is not a curvesig model file")
    spec = MLPSpec(**header["spec"])
    params = MLPParams.from_arrays(spec, arrays)
    return Model(params, header["task"], header["group"], int(header["window"]), header.get("meta", {}))

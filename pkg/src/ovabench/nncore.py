"""Minimal dense feed-forward network with exact reverse-mode gradients.

The body is a stack of fully connected layers with ReLU between them; the raw
output of the last layer is the embedding consumed by the probability heads
(no trailing nonlinearity).  All arithmetic is float64, training is SGD with
momentum, and every operation is deterministic given its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DenseLayer",
    "ForwardTrace",
    "ModelParams",
    "OptimizerState",
    "backward",
    "copy_params",
    "forward",
    "gradient_check",
    "init_params",
    "load_checkpoint",
    "make_optimizer",
    "save_checkpoint",
    "sgd_step",
    "tensor_items",
    "zeros_like",
]

CHECKPOINT_FORMAT = "ovabench-checkpoint-v1"


def _as_matrix(x, name: str = "inputs") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    return arr


@dataclass
class DenseLayer:
    """Weights [fan_in x fan_out] and biases [fan_out] of one dense layer."""

    weights: np.ndarray
    biases: np.ndarray


@dataclass
class ModelParams:
    """All learnable parameters: body layers plus the classification head.

    ``head_weights`` is [embed_dim x K] with column j belonging to class j.
    ``head_biases`` is a length-K vector for affine heads and None for
    distance heads, whose weight columns act as class centers instead.
    """

    layers: list[DenseLayer]
    head_weights: np.ndarray
    head_biases: np.ndarray | None = None

    @property
    def embed_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    @property
    def num_classes(self) -> int:
        return self.head_weights.shape[1]

    def validate(self) -> None:
        """Check dimension chaining and that every entry is finite."""
        if not self.layers:
            raise ValueError("model needs at least one dense layer")
        for i, layer in enumerate(self.layers):
            if layer.weights.ndim != 2:
                raise ValueError(f"layer {i}: weights must be a matrix")
            if layer.biases.shape != (layer.weights.shape[1],):
                raise ValueError(f"layer {i}: bias shape {layer.biases.shape} "
                                 f"does not match fan_out {layer.weights.shape[1]}")
            if i > 0 and layer.weights.shape[0] != self.layers[i - 1].weights.shape[1]:
                raise ValueError(f"layer {i}: fan_in {layer.weights.shape[0]} does not "
                                 f"chain with layer {i - 1} fan_out "
                                 f"{self.layers[i - 1].weights.shape[1]}")
        if self.head_weights.shape[0] != self.embed_dim:
            raise ValueError(f"head_weights rows {self.head_weights.shape[0]} "
                             f"do not match embed_dim {self.embed_dim}")
        if self.head_biases is not None and self.head_biases.shape != (self.num_classes,):
            raise ValueError("head_biases shape does not match number of classes")
        for name, tensor in tensor_items(self):
            if not np.isfinite(tensor).all():
                raise ValueError(f"non-finite values in {name}")


@dataclass
class ForwardTrace:
    """Per-layer activations cached by :func:`forward` for backpropagation."""

    inputs: np.ndarray
    pre_activations: list[np.ndarray]
    post_activations: list[np.ndarray]
    embedding: np.ndarray


@dataclass
class OptimizerState:
    """SGD-with-momentum state; velocity mirrors the parameter shapes."""

    velocity: ModelParams
    learning_rate: float
    momentum: float


def tensor_items(params: ModelParams) -> list[tuple[str, np.ndarray]]:
    """All parameter tensors with stable dotted names, in a fixed order."""
    items = []
    for i, layer in enumerate(params.layers):
        items.append((f"layers.{i}.weights", layer.weights))
        items.append((f"layers.{i}.biases", layer.biases))
    items.append(("head_weights", params.head_weights))
    if params.head_biases is not None:
        items.append(("head_biases", params.head_biases))
    return items


def _map_tensors(fn, params: ModelParams) -> ModelParams:
    return ModelParams(
        layers=[DenseLayer(fn(l.weights), fn(l.biases)) for l in params.layers],
        head_weights=fn(params.head_weights),
        head_biases=None if params.head_biases is None else fn(params.head_biases),
    )


def zeros_like(params: ModelParams) -> ModelParams:
    return _map_tensors(np.zeros_like, params)


def copy_params(params: ModelParams) -> ModelParams:
    return _map_tensors(lambda t: np.array(t, dtype=np.float64, copy=True), params)


def init_params(layer_dims: list[int], num_classes: int, *, head_biases: bool,
                head_init: str = "glorot", seed: int = 0) -> ModelParams:
    """Build a fresh parameter set from a seeded PRNG.

    Body weights are Glorot-uniform (+-sqrt(6 / (fan_in + fan_out))), biases
    zero.  ``head_init`` is "glorot" or "zeros"; distance heads conventionally
    start their class centers at zero.
    """
    if len(layer_dims) < 2:
        raise ValueError("layer_dims must list the input width and at least one layer")
    if head_init not in ("glorot", "zeros"):
        raise ValueError(f"unknown head_init {head_init!r}")
    rng = np.random.default_rng(seed)

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    layers = [DenseLayer(glorot(a, b), np.zeros(b))
              for a, b in zip(layer_dims[:-1], layer_dims[1:])]
    embed_dim = layer_dims[-1]
    if head_init == "zeros":
        head_w = np.zeros((embed_dim, num_classes))
    else:
        head_w = glorot(embed_dim, num_classes)
    head_b = np.zeros(num_classes) if head_biases else None
    params = ModelParams(layers=layers, head_weights=head_w, head_biases=head_b)
    params.validate()
    return params


def forward(params: ModelParams, inputs) -> ForwardTrace:
    """Run the body on a batch and cache activations.

    ReLU is applied between layers; the last layer's raw output is the
    embedding.
    """
    x = _as_matrix(inputs)
    if x.shape[0] < 1:
        raise ValueError("batch must contain at least one row")
    pre, post = [], []
    a = x
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        if a.shape[1] != layer.weights.shape[0]:
            raise ValueError(f"layer {i}: input width {a.shape[1]} does not match "
                             f"fan_in {layer.weights.shape[0]}")
        z = a @ layer.weights + layer.biases
        a = np.maximum(z, 0.0) if i < last else z
        pre.append(z)
        post.append(a)
    return ForwardTrace(inputs=x, pre_activations=pre, post_activations=post,
                        embedding=post[-1])


def backward(params: ModelParams, trace: ForwardTrace,
             embedding_grad) -> list[DenseLayer]:
    """Backpropagate an embedding gradient through the body.

    Returns per-layer gradients shaped like ``params.layers``.  The caller's
    ``embedding_grad`` must already carry the loss reduction (e.g. 1/batch for
    a mean), so no extra averaging happens here.  The ReLU subgradient at
    exactly zero is zero.
    """
    g = _as_matrix(embedding_grad, "embedding_grad")
    if g.shape != trace.embedding.shape:
        raise ValueError(f"embedding_grad shape {g.shape} does not match "
                         f"embedding shape {trace.embedding.shape}")
    grads: list[DenseLayer | None] = [None] * len(params.layers)
    for i in range(len(params.layers) - 1, -1, -1):
        a_in = trace.post_activations[i - 1] if i > 0 else trace.inputs
        grads[i] = DenseLayer(weights=a_in.T @ g, biases=g.sum(axis=0))
        if i > 0:
            g = (g @ params.layers[i].weights.T) * (trace.pre_activations[i - 1] > 0.0)
    return grads  # type: ignore[return-value]


def gradient_check(loss_fn, params: ModelParams, step: float = 1e-5) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` maps a ModelParams to ``(loss, grads)`` where ``grads`` is
    ModelParams-shaped; only the loss is used for the numeric side.  Returns
    the worst relative error over all entries, with denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    _, analytic = loss_fn(params)
    work = copy_params(params)
    worst = 0.0
    for (name, p_t), (_, a_t) in zip(tensor_items(work), tensor_items(analytic)):
        flat_p = p_t.reshape(-1)
        flat_a = a_t.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            loss_plus = loss_fn(work)[0]
            flat_p[i] = orig - step
            loss_minus = loss_fn(work)[0]
            flat_p[i] = orig
            if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
                raise ValueError(f"non-finite loss while perturbing {name}[{i}]")
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            a = flat_a[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst


def make_optimizer(params: ModelParams, learning_rate: float,
                   momentum: float = 0.0) -> OptimizerState:
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if not 0.0 <= momentum < 1.0:
        raise ValueError("momentum must lie in [0, 1)")
    return OptimizerState(velocity=zeros_like(params), learning_rate=learning_rate,
                          momentum=momentum)


def sgd_step(params: ModelParams, grads: ModelParams,
             state: OptimizerState) -> tuple[ModelParams, OptimizerState]:
    """One momentum-SGD update: v <- m*v - lr*g, p <- p + v.

    Refuses non-finite gradients and checks the updated parameters are
    finite, naming the offending tensor in either case.
    """
    for name, g in tensor_items(grads):
        if not np.isfinite(g).all():
            raise ValueError(f"non-finite gradient for {name}; update refused")
    m, lr = state.momentum, state.learning_rate

    def update(p, g, v):
        v_new = m * v - lr * g
        return p + v_new, v_new

    new_layers, new_vel = [], []
    for layer, glayer, vlayer in zip(params.layers, grads.layers, state.velocity.layers):
        w, vw = update(layer.weights, glayer.weights, vlayer.weights)
        b, vb = update(layer.biases, glayer.biases, vlayer.biases)
        new_layers.append(DenseLayer(w, b))
        new_vel.append(DenseLayer(vw, vb))
    hw, vhw = update(params.head_weights, grads.head_weights, state.velocity.head_weights)
    if params.head_biases is not None:
        hb, vhb = update(params.head_biases, grads.head_biases, state.velocity.head_biases)
    else:
        hb, vhb = None, None
    new_params = ModelParams(layers=new_layers, head_weights=hw, head_biases=hb)
    for name, t in tensor_items(new_params):
        if not np.isfinite(t).all():
            raise ValueError(f"non-finite parameter {name} after update")
    new_state = OptimizerState(
        velocity=ModelParams(layers=new_vel, head_weights=vhw, head_biases=vhb),
        learning_rate=lr, momentum=m)
    return new_params, new_state


def save_checkpoint(path, params: ModelParams, head: str, seed: int) -> None:
    """Write parameters to a JSON checkpoint that round-trips bitwise.

    Each tensor is stored as name, shape, and a row-major flat list; float
    values go through Python's shortest-repr serialization, which parses back
    to the identical double.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "head": head,
        "seed": int(seed),
        "tensors": [
            {"name": name, "shape": list(t.shape), "data": t.ravel(order="C").tolist()}
            for name, t in tensor_items(params)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[ModelParams, str, int]:
    """Read a checkpoint back into (params, head string, seed)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format in {path}")
    tensors = {
        entry["name"]: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for entry in doc["tensors"]
    }
    layers = []
    for i in range(sum(1 for n in tensors if n.endswith(".weights") and n.startswith("layers."))):
        layers.append(DenseLayer(tensors[f"layers.{i}.weights"], tensors[f"layers.{i}.biases"]))
    params = ModelParams(layers=layers, head_weights=tensors["head_weights"],
                         head_biases=tensors.get("head_biases"))
    params.validate()
    return params, doc["head"], int(doc["seed"])

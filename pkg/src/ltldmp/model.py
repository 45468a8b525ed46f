"""Network mapping a scenario input to DMP forcing weights, plus the losses.

The scenario input is one flat vector [start, goal, o1, ..., oK] of length
d * (2 + K).  A three-layer ReLU net (two hidden layers of 256) turns it
into the (N, d) forcing-weight matrix of the movement primitive, so one set
of network parameters covers a whole family of scenarios.

Imitation loss compares the rollout from a demonstration's endpoints with
the demonstrated points, averaging the squared step errors over time.  The
full training loss adds the constraint loss of the spec on the rolled-out
trajectory, weighted by eta, averaged over the batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import dmp as dmp_mod
from . import ltl, quantloss


HIDDEN = 256


@dataclass(frozen=True)
class NetworkDims:
    input_len: int
    n_basis: int
    d: int
    hidden: int = HIDDEN

    def __post_init__(self):
        if min(self.input_len, self.n_basis, self.d, self.hidden) < 1:
            raise ValueError(f"bad network dims: {self}")

    @classmethod
    def for_schema(cls, d: int, k_objects: int, n_basis: int) -> "NetworkDims":
        return cls(input_len=d * (2 + k_objects), n_basis=n_basis, d=d)


@dataclass
class NetworkParams:
    dims: NetworkDims
    layers: list[np.ndarray]  # W1, b1, W2, b2, W3, b3


def _xavier(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_params(dims: NetworkDims, seed: int) -> NetworkParams:
    rng = np.random.default_rng(seed)
    out_len = dims.n_basis * dims.d
    layers = [
        _xavier(rng, dims.hidden, dims.input_len),
        np.zeros(dims.hidden),
        _xavier(rng, dims.hidden, dims.hidden),
        np.zeros(dims.hidden),
        _xavier(rng, out_len, dims.hidden),
        np.zeros(out_len),
    ]
    return NetworkParams(dims=dims, layers=layers)


def layer_nodes(tape: ad.Tape, params: NetworkParams, trainable: bool) -> list[ad.Node]:
    make = tape.leaf if trainable else tape.const
    return [make(arr) for arr in params.layers]


def forward(input_node: ad.Node, layers: list[ad.Node], dims: NetworkDims) -> ad.Node:
    """Map (B, input_len) to forcing weights (B, N, d)."""
    if input_node.value.ndim != 2 or input_node.value.shape[1] != dims.input_len:
        raise ad.GraphError(
            f"input must be (B, {dims.input_len}), got {input_node.value.shape}"
        )
    w1, b1, w2, b2, w3, b3 = layers
    h = ad.relu(ad.affine(input_node, w1, b1))
    h = ad.relu(ad.affine(h, w2, b2))
    out = ad.affine(h, w3, b3)
    B = input_node.value.shape[0]
    return ad.reshape(out, (B, dims.n_basis, dims.d))


# ---------------------------------------------------------------------------
# scenario input layout


def input_vector(start, goal, objects) -> np.ndarray:
    """Flatten one scenario to [start, goal, o1..oK]."""
    parts = [np.asarray(start, float).ravel(), np.asarray(goal, float).ravel()]
    for obj in np.asarray(objects, float).reshape(len(objects), -1):
        parts.append(obj)
    return np.concatenate(parts)


def split_input(input_node: ad.Node, d: int, k_objects: int):
    """Slice a (B, L) scenario node into start, goal and static object nodes."""
    L = input_node.value.shape[1]
    if L != d * (2 + k_objects):
        raise ad.GraphError(f"input length {L} does not match d={d}, K={k_objects}")
    start = ad.slice_cols(input_node, 0, d)
    goal = ad.slice_cols(input_node, d, 2 * d)
    statics = [
        ad.slice_cols(input_node, (2 + k) * d, (3 + k) * d) for k in range(k_objects)
    ]
    return start, goal, statics


def objects_from_input(vec: np.ndarray, d: int, k_objects: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    return vec[2 * d :].reshape(k_objects, d)


def endpoints_from_input(vec: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    vec = np.asarray(vec, dtype=np.float64)
    return vec[:d], vec[d : 2 * d]


# ---------------------------------------------------------------------------
# losses


def imitation_loss(nt: quantloss.NodeTrace, demo_points: np.ndarray) -> ad.Node:
    """Mean over steps of squared pointwise error, shape (B,).

    demo_points is (T, d) for a shared target or (B, T, d) per example.
    """
    T = nt.steps
    B = nt.batch
    d = nt.d
    demo = np.asarray(demo_points, dtype=np.float64)
    if demo.shape == (T, d):
        demo = np.broadcast_to(demo[:, None, :], (T, B, d))
    elif demo.shape == (B, T, d):
        demo = np.transpose(demo, (1, 0, 2))
    else:
        raise ad.GraphError(f"demo points {demo.shape} do not fit trace ({T}, {B}, {d})")
    rolled = ad.stack(nt.points)  # (T, B, d)
    err = ad.sub(rolled, nt.tape.const(demo))
    return ad.scale(ad.sum_axes(ad.square(err), (0, 2)), 1.0 / T)


def rollout_for_inputs(
    tape: ad.Tape,
    layers: list[ad.Node],
    dims: NetworkDims,
    dmp_params: dmp_mod.DmpParams,
    inputs: np.ndarray | ad.Node,
    coeffs: np.ndarray | None = None,
):
    """Forward + rollout for a batch of scenario vectors.

    Returns (trace nodes, static object nodes); start and goal come from the
    input vector itself, so gradients reach it when it is a leaf.
    """
    input_node = inputs if isinstance(inputs, ad.Node) else tape.const(inputs)
    k_objects = input_node.value.shape[1] // dims.d - 2
    start, goal, statics = split_input(input_node, dims.d, k_objects)
    weights = forward(input_node, layers, dims)
    nt = dmp_mod.rollout(dmp_params, weights, start, goal, coeffs=coeffs)
    return nt, statics


def full_loss(
    params: NetworkParams,
    dmp_params: dmp_mod.DmpParams,
    inputs: np.ndarray,
    demos: np.ndarray,
    formula: ltl.Formula | None,
    cfg: quantloss.LossConfig,
    eta: float,
) -> tuple[float, dict]:
    """Batch objective value (1/M) * sum(L_d + eta * L_c at step 0).

    Convenience evaluation entry; training builds its own graphs to control
    which parts receive gradients.  Returns the scalar and per-part means.
    """
    tape = ad.Tape()
    layers = layer_nodes(tape, params, trainable=False)
    nt, statics = rollout_for_inputs(tape, layers, params.dims, dmp_params, inputs)
    li = imitation_loss(nt, demos)
    parts = {"imitation": float(np.mean(li.value))}
    total = float(np.mean(li.value))
    if formula is not None:
        lc = quantloss.constraint_loss(formula, nt, 0, cfg, statics)
        parts["constraint"] = float(np.mean(lc.value))
        total += eta * parts["constraint"]
    parts["total"] = total
    return total, parts


# ---------------------------------------------------------------------------
# checkpoints


def save_model(path, params: NetworkParams, dmp_params: dmp_mod.DmpParams) -> None:
    blob = {
        "version": 1,
        "dims": {
            "input_len": params.dims.input_len,
            "n_basis": params.dims.n_basis,
            "d": params.dims.d,
            "hidden": params.dims.hidden,
        },
        "dmp": {
            "alpha_y": dmp_params.alpha_y,
            "beta_y": dmp_params.beta_y,
            "alpha_x": dmp_params.alpha_x,
            "n_basis": dmp_params.n_basis,
            "steps": dmp_params.steps,
        },
        "layers": [arr.tolist() for arr in params.layers],
    }
    Path(path).write_text(json.dumps(blob))


def load_model(path) -> tuple[NetworkParams, dmp_mod.DmpParams]:
    blob = json.loads(Path(path).read_text())
    if blob.get("version") != 1:
        raise ValueError(f"unsupported model version {blob.get('version')!r}")
    dims = NetworkDims(**blob["dims"])
    dmp_params = dmp_mod.DmpParams(**blob["dmp"])
    if dmp_params.n_basis != dims.n_basis:
        raise ValueError("model and primitive disagree on basis count")
    layers = [np.asarray(arr, dtype=np.float64) for arr in blob["layers"]]
    expected = [
        (dims.hidden, dims.input_len),
        (dims.hidden,),
        (dims.hidden, dims.hidden),
        (dims.hidden,),
        (dims.n_basis * dims.d, dims.hidden),
        (dims.n_basis * dims.d,),
    ]
    got = [arr.shape for arr in layers]
    if got != expected:
        raise ValueError(f"layer shapes {got} do not match dims {expected}")
    return NetworkParams(dims=dims, layers=layers), dmp_params

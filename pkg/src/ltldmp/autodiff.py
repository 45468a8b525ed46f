"""Reverse-mode automatic differentiation on a flat tape of numpy values.

Every node holds a dense float64 array (a scalar is a zero-dimensional
array).  Operations append nodes in the order they are computed, so the
tape is already topologically sorted and ``backward`` is a single reverse
sweep.  Values may carry a leading batch axis; ops never broadcast
silently, shapes must match exactly where the math says they do.

Subgradient conventions at kinks are fixed so runs are reproducible:
relu and sqrt use 0 at the origin, hard max/min route the adjoint to the
first extremal argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Malformed graph construction: shape conflict, mixed tapes, bad root."""


class NonFiniteError(ArithmeticError):
    """A forward operation produced NaN or Inf."""


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Node:
    """One recorded value.  Do not build directly, go through a Tape."""

    __slots__ = ("tape", "idx", "value", "_parents", "_vjp", "needs_grad")

    def __init__(self, tape, idx, value, parents, vjp, needs_grad):
        self.tape = tape
        self.idx = idx
        self.value = value
        self._parents = parents
        self._vjp = vjp
        self.needs_grad = needs_grad

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Node(idx={self.idx}, shape={self.value.shape}, grad={self.needs_grad})"


class Tape:
    """Append-only operation record shared by all nodes of one graph."""

    __slots__ = ("nodes", "grad_leaves", "check_finite")

    def __init__(self, check_finite: bool = True):
        self.nodes: list[Node] = []
        self.grad_leaves: list[Node] = []
        self.check_finite = check_finite

    def leaf(self, value) -> Node:
        """Record an input that gradients will be requested for."""
        node = self.record(_as_f64(value), (), None)
        node.needs_grad = True
        self.grad_leaves.append(node)
        return node

    def const(self, value) -> Node:
        """Record an input that never receives a gradient."""
        return self.record(_as_f64(value), (), None)

    def record(self, value, parents, vjp) -> Node:
        if self.check_finite and not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite value in node {len(self.nodes)}")
        needs = any(p.needs_grad for p in parents)
        node = Node(self, len(self.nodes), value, parents, vjp, needs)
        self.nodes.append(node)
        return node


def _same_tape(*nodes) -> Tape:
    tape = nodes[0].tape
    for n in nodes[1:]:
        if n.tape is not tape:
            raise GraphError("nodes belong to different tapes")
    return tape


def _same_shape(a: Node, b: Node, op: str):
    if a.value.shape != b.value.shape:
        raise GraphError(f"{op}: shape mismatch {a.value.shape} vs {b.value.shape}")


def backward(root: Node) -> dict[Node, np.ndarray]:
    """Accumulate d(root)/d(leaf) for every gradient leaf on root's tape.

    The root must be scalar.  Nodes are visited exactly once, in reverse
    recording order; leaves the root does not depend on get zeros.
    """
    if root.value.shape != ():
        raise GraphError(f"backward root must be scalar, got shape {root.value.shape}")
    tape = root.tape
    grads: list = [None] * (root.idx + 1)
    grads[root.idx] = np.ones(())
    for i in range(root.idx, -1, -1):
        g = grads[i]
        if g is None:
            continue
        node = tape.nodes[i]
        if node._vjp is None:
            continue
        for parent, contrib in node._vjp(g):
            if not parent.needs_grad:
                continue
            slot = grads[parent.idx]
            if slot is None:
                # own the buffer: vjps may hand back views or shared arrays
                grads[parent.idx] = np.array(contrib)
            else:
                slot += contrib
    out = {}
    for leaf in tape.grad_leaves:
        g = grads[leaf.idx] if leaf.idx <= root.idx else None
        out[leaf] = np.zeros_like(leaf.value) if g is None else g
    return out


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b)
    _same_shape(a, b, "add")
    return tape.record(a.value + b.value, (a, b), lambda g: ((a, g), (b, g)))


def sub(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b)
    _same_shape(a, b, "sub")
    return tape.record(a.value - b.value, (a, b), lambda g: ((a, g), (b, -g)))


def mul(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b)
    _same_shape(a, b, "mul")
    return tape.record(
        a.value * b.value, (a, b), lambda g: ((a, g * b.value), (b, g * a.value))
    )


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return a.tape.record(a.value * c, (a,), lambda g: ((a, g * c),))


def matvec(m: Node, x: Node) -> Node:
    tape = _same_tape(m, x)
    if m.value.ndim != 2 or x.value.ndim != 1 or m.value.shape[1] != x.value.shape[0]:
        raise GraphError(f"matvec: bad shapes {m.value.shape} @ {x.value.shape}")
    return tape.record(
        m.value @ x.value,
        (m, x),
        lambda g: ((m, np.outer(g, x.value)), (x, m.value.T @ g)),
    )


def dot(a: Node, b: Node) -> Node:
    tape = _same_tape(a, b)
    if a.value.ndim != 1:
        raise GraphError("dot expects 1-d operands")
    _same_shape(a, b, "dot")
    return tape.record(
        np.dot(a.value, b.value),
        (a, b),
        lambda g: ((a, g * b.value), (b, g * a.value)),
    )


def affine(x: Node, w: Node, b: Node) -> Node:
    """Batched dense layer: x (B, n) times w (m, n) transposed, plus b (m,)."""
    tape = _same_tape(x, w, b)
    bs, n = x.value.shape
    m, n2 = w.value.shape
    if n != n2 or b.value.shape != (m,):
        raise GraphError(
            f"affine: shapes {x.value.shape}, {w.value.shape}, {b.value.shape}"
        )
    return tape.record(
        x.value @ w.value.T + b.value,
        (x, w, b),
        lambda g: ((x, g @ w.value), (w, g.T @ x.value), (b, g.sum(axis=0))),
    )


# ---------------------------------------------------------------------------
# elementwise


def relu(a: Node) -> Node:
    out = np.maximum(a.value, 0.0)
    # subgradient at 0 is 0
    return a.tape.record(out, (a,), lambda g: ((a, g * (a.value > 0.0)),))


def exp(a: Node) -> Node:
    with np.errstate(over="ignore"):
        out = np.exp(a.value)
    return a.tape.record(out, (a,), lambda g: ((a, g * out),))


def ln(a: Node) -> Node:
    if np.any(a.value <= 0.0):
        raise NonFiniteError("ln of non-positive value")
    return a.tape.record(np.log(a.value), (a,), lambda g: ((a, g / a.value),))


def square(a: Node) -> Node:
    # overflow surfaces as NonFiniteError from record, not as a warning
    with np.errstate(over="ignore"):
        value = np.square(a.value)
    return a.tape.record(value, (a,), lambda g: ((a, 2.0 * a.value * g),))


def sqrt(a: Node) -> Node:
    if np.any(a.value < 0.0):
        raise NonFiniteError("sqrt of negative value")
    out = np.sqrt(a.value)
    safe = np.where(out > 0.0, out, 1.0)
    # subgradient at 0 is 0
    return a.tape.record(
        out, (a,), lambda g: ((a, np.where(out > 0.0, g / (2.0 * safe), 0.0)),)
    )


def clamp(a: Node, lo: float, hi: float) -> Node:
    lo, hi = float(lo), float(hi)
    out = np.clip(a.value, lo, hi)
    inside = (a.value >= lo) & (a.value <= hi)
    return a.tape.record(out, (a,), lambda g: ((a, g * inside),))


# ---------------------------------------------------------------------------
# shape and reduction


def vsum(a: Node) -> Node:
    shape = a.value.shape
    return a.tape.record(
        a.value.sum(), (a,), lambda g: ((a, np.broadcast_to(g, shape)),)
    )


def sum_axes(a: Node, axes: tuple[int, ...]) -> Node:
    axes = tuple(ax % a.value.ndim for ax in axes)
    out = a.value.sum(axis=axes)
    shape = a.value.shape

    def vjp(g):
        expanded = np.expand_dims(g, axes)
        return ((a, np.broadcast_to(expanded, shape)),)

    return a.tape.record(out, (a,), vjp)


def mean_all(a: Node) -> Node:
    return scale(vsum(a), 1.0 / a.value.size)


def reshape(a: Node, shape: tuple[int, ...]) -> Node:
    old = a.value.shape
    return a.tape.record(
        a.value.reshape(shape), (a,), lambda g: ((a, g.reshape(old)),)
    )


def concat(nodes: list[Node], axis: int = 0) -> Node:
    tape = _same_tape(*nodes)
    sizes = [n.value.shape[axis] for n in nodes]
    out = np.concatenate([n.value for n in nodes], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        pieces = []
        for k, n in enumerate(nodes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[k], offsets[k + 1])
            pieces.append((n, g[tuple(sl)]))
        return pieces

    return tape.record(out, tuple(nodes), vjp)


def stack(nodes: list[Node]) -> Node:
    """Stack equal-shaped nodes along a new leading axis."""
    tape = _same_tape(*nodes)
    shape = nodes[0].value.shape
    for n in nodes:
        if n.value.shape != shape:
            raise GraphError("stack: ragged shapes")
    out = np.stack([n.value for n in nodes], axis=0)

    def vjp(g):
        return tuple((n, g[k]) for k, n in enumerate(nodes))

    return tape.record(out, tuple(nodes), vjp)


def index(a: Node, i: int) -> Node:
    """Take row i along the leading axis."""
    i = int(i)

    def vjp(g):
        z = np.zeros_like(a.value)
        z[i] = g
        return ((a, z),)

    return a.tape.record(a.value[i], (a,), vjp)


def col(a: Node, j: int) -> Node:
    """Take component j along the trailing axis."""
    j = int(j)

    def vjp(g):
        z = np.zeros_like(a.value)
        z[..., j] = g
        return ((a, z),)

    return a.tape.record(a.value[..., j], (a,), vjp)


def slice_cols(a: Node, lo: int, hi: int) -> Node:
    lo, hi = int(lo), int(hi)

    def vjp(g):
        z = np.zeros_like(a.value)
        z[..., lo:hi] = g
        return ((a, z),)

    return a.tape.record(a.value[..., lo:hi], (a,), vjp)


def sqnorm_diff(a: Node, b: Node) -> Node:
    """Squared euclidean distance over the trailing axis."""
    tape = _same_tape(a, b)
    _same_shape(a, b, "sqnorm_diff")
    if a.value.ndim < 1:
        raise GraphError("sqnorm_diff expects at least 1-d operands")
    d = a.value - b.value
    out = np.square(d).sum(axis=-1)

    def vjp(g):
        gd = 2.0 * d * g[..., None]
        return ((a, gd), (b, -gd))

    return tape.record(out, (a, b), vjp)


def basis_mix(w: Node, coeffs: np.ndarray) -> Node:
    """Contract weights (..., N, d) with fixed coefficients (N,) to (..., d)."""
    c = _as_f64(coeffs)
    if w.value.shape[-2] != c.shape[0]:
        raise GraphError(f"basis_mix: {w.value.shape} with {c.shape}")
    out = np.tensordot(c, w.value, axes=(0, w.value.ndim - 2))

    def vjp(g):
        return ((w, c[:, None] * g[..., None, :]),)

    return w.tape.record(out, (w,), vjp)


# ---------------------------------------------------------------------------
# list max / min, smoothed and exact


def _stack_values(nodes):
    shape = nodes[0].value.shape
    for n in nodes[1:]:
        if n.value.shape != shape:
            raise GraphError("max/min over differently shaped nodes")
    return np.stack([n.value for n in nodes], axis=0)


def soft_max_list(nodes: list[Node], gamma: float) -> Node:
    """Temperature-gamma log-sum-exp upper approximation of the max."""
    tape = _same_tape(*nodes)
    gamma = float(gamma)
    if gamma <= 0.0:
        raise GraphError("gamma must be positive")
    x = _stack_values(nodes)
    m = x.max(axis=0)
    e = np.exp((x - m) / gamma)
    s = e.sum(axis=0)
    out = m + gamma * np.log(s)

    def vjp(g):
        wts = e / s
        return tuple((n, g * wts[k]) for k, n in enumerate(nodes))

    return tape.record(out, tuple(nodes), vjp)


def soft_min_list(nodes: list[Node], gamma: float) -> Node:
    """Temperature-gamma log-sum-exp lower approximation of the min."""
    tape = _same_tape(*nodes)
    gamma = float(gamma)
    if gamma <= 0.0:
        raise GraphError("gamma must be positive")
    x = _stack_values(nodes)
    m = (-x).max(axis=0)
    e = np.exp((-x - m) / gamma)
    s = e.sum(axis=0)
    out = -(m + gamma * np.log(s))

    def vjp(g):
        wts = e / s
        return tuple((n, g * wts[k]) for k, n in enumerate(nodes))

    return tape.record(out, tuple(nodes), vjp)


def hard_max_list(nodes: list[Node]) -> Node:
    """Exact elementwise max; ties route the adjoint to the first argument."""
    tape = _same_tape(*nodes)
    x = _stack_values(nodes)
    win = x.argmax(axis=0)
    out = x.max(axis=0)

    def vjp(g):
        return tuple((n, g * (win == k)) for k, n in enumerate(nodes))

    return tape.record(out, tuple(nodes), vjp)


def hard_min_list(nodes: list[Node]) -> Node:
    """Exact elementwise min; ties route the adjoint to the first argument."""
    tape = _same_tape(*nodes)
    x = _stack_values(nodes)
    win = x.argmin(axis=0)
    out = x.min(axis=0)

    def vjp(g):
        return tuple((n, g * (win == k)) for k, n in enumerate(nodes))

    return tape.record(out, tuple(nodes), vjp)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, applied to the arrays in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise GraphError("adam_step: params/grads/state length mismatch")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise GraphError(f"adam_step: grad shape {g.shape} vs param {p.shape}")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)

"""Dynamic movement primitives: a learned forcing term on top of a stable
goal attractor, integrated with explicit Euler.

The transformation system per axis is

    y'' = alpha_y * (beta_y * (y_goal - y) - y') + f(x)

driven by the canonical phase x' = -alpha_x * x, x(0) = 1.  The forcing term
mixes Gaussian basis functions of the phase,

    f(x) = (sum_i w_i psi_i(x) / sum_i psi_i(x)) * x * (y_goal - y_start),

so it dies out with x and the attractor takes over near the end.  With the
default critically damped gains (alpha_y = 4 * beta_y) a zero-forcing rollout
settles on the goal well within the horizon.

Basis centers are spread as the canonical phase visits them: c_i =
exp(-alpha_x * i / (N - 1)).  Widths make neighbouring bases cross at half
height, h_i = 4 ln 2 / (c_{i+1} - c_i)^2, the last width repeated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .quantloss import NodeTrace
from .ltl import Trace


@dataclass(frozen=True)
class DmpParams:
    # Attractor gains critically damped (alpha_y = 4 * beta_y).  The gentle
    # canonical decay keeps the forcing term alive across the whole horizon;
    # sharper decay rates force enormous basis weights for late-trajectory
    # shape and stall gradient training on the demos this package targets.
    alpha_y: float = 25.0
    beta_y: float = 6.25
    alpha_x: float = 1.0
    n_basis: int = 30
    steps: int = 100

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"need at least 2 steps, got {self.steps}")
        if self.n_basis < 2:
            raise ValueError(f"need at least 2 bases, got {self.n_basis}")
        if min(self.alpha_y, self.beta_y, self.alpha_x) <= 0:
            raise ValueError("gains must be positive")
        if self.alpha_x * self.dt >= 1.0:
            raise ValueError(
                f"canonical Euler step unstable: alpha_x * dt = "
                f"{self.alpha_x * self.dt:.3f} >= 1"
            )

    @property
    def dt(self) -> float:
        return 1.0 / (self.steps - 1)

    def centers(self) -> np.ndarray:
        i = np.arange(self.n_basis)
        return np.exp(-self.alpha_x * i / (self.n_basis - 1))

    def widths(self) -> np.ndarray:
        c = self.centers()
        gaps = np.diff(c)
        h = 4.0 * np.log(2.0) / np.square(gaps)
        return np.append(h, h[-1])


def canonical_rollout(params: DmpParams) -> np.ndarray:
    """Phase variable at every step: x_{t+1} = x_t * (1 - alpha_x * dt)."""
    decay = 1.0 - params.alpha_x * params.dt
    return np.power(decay, np.arange(params.steps))


def basis_activations(params: DmpParams, x: np.ndarray) -> np.ndarray:
    """Gaussian activations psi_i(x), shape (len(x), N)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    c = params.centers()
    h = params.widths()
    return np.exp(-h * np.square(x[:, None] - c))


def mix_coefficients(params: DmpParams) -> np.ndarray:
    """Per-step weight mix (T, N): normalized activations times the phase.

    Row t dotted with the weights of one axis gives that axis's forcing
    before the (goal - start) amplitude.
    """
    x = canonical_rollout(params)
    psi = basis_activations(params, x)
    return psi / psi.sum(axis=1, keepdims=True) * x[:, None]


def forcing(
    params: DmpParams,
    weights: np.ndarray,
    x,
    y_start: np.ndarray,
    y_goal: np.ndarray,
) -> np.ndarray:
    """Forcing values for phase samples x; weights (N, d) -> (len(x), d)."""
    w = np.asarray(weights, dtype=np.float64)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    psi = basis_activations(params, x)
    mix = psi / psi.sum(axis=1, keepdims=True) * x[:, None]
    amp = np.asarray(y_goal, dtype=np.float64) - np.asarray(y_start, dtype=np.float64)
    return (mix @ w) * amp


def rollout(
    params: DmpParams,
    weights: ad.Node,
    y_start: ad.Node,
    y_goal: ad.Node,
    coeffs: np.ndarray | None = None,
) -> NodeTrace:
    """Differentiable batched rollout.

    weights (B, N, d), y_start and y_goal (B, d).  Returns the trajectory as
    a NodeTrace of T point nodes; gradients flow to all three inputs.
    """
    if weights.value.ndim != 3:
        raise ad.GraphError(f"weights must be (B, N, d), got {weights.value.shape}")
    B, N, d = weights.value.shape
    if y_start.value.shape != (B, d) or y_goal.value.shape != (B, d):
        raise ad.GraphError(
            f"endpoints must be ({B}, {d}), got {y_start.value.shape} "
            f"and {y_goal.value.shape}"
        )
    if N != params.n_basis:
        raise ad.GraphError(f"expected {params.n_basis} bases, got {N}")
    if coeffs is None:
        coeffs = mix_coefficients(params)

    tape = weights.tape
    dt = params.dt
    amp = ad.sub(y_goal, y_start)
    y = y_start
    v = tape.const(np.zeros((B, d)))
    points = [y]
    for t in range(params.steps - 1):
        f_t = ad.mul(ad.basis_mix(weights, coeffs[t]), amp)
        spring = ad.scale(ad.sub(y_goal, y), params.beta_y)
        acc = ad.add(ad.scale(ad.sub(spring, v), params.alpha_y), f_t)
        y = ad.add(y, ad.scale(v, dt))
        v = ad.add(v, ad.scale(acc, dt))
        points.append(y)
    return NodeTrace.from_point_nodes(points)


def rollout_trace(
    params: DmpParams,
    weights: np.ndarray,
    y_start: np.ndarray,
    y_goal: np.ndarray,
) -> Trace:
    """Plain-numpy rollout of a single trajectory as a Trace."""
    tape = ad.Tape()
    nt = rollout(
        params,
        tape.const(np.asarray(weights)[None]),
        tape.const(np.asarray(y_start)[None]),
        tape.const(np.asarray(y_goal)[None]),
    )
    pts = np.stack([p.value[0] for p in nt.points], axis=0)
    return Trace(pts, dt=params.dt)

"""Differentiable violation losses for temporal-logic formulas.

The loss of a formula on a trajectory is a nonnegative number that is zero
exactly when the formula holds (in hard mode) and positive otherwise.
Conjunction becomes a max over clause losses, disjunction a min, G a max
over suffix steps, F a min, so minimizing the loss pushes every violated
clause toward satisfaction.  In soft mode max and min are replaced by
temperature-gamma log-sum-exp so the loss stays differentiable everywhere;
hard mode uses exact extrema and is the one with the zero-iff-satisfied
guarantee.

Comparison atoms: the loss of ``a <= b`` is max(a - b, 0); ``a != b`` costs
a constant zeta while the operands are exactly equal (its gradient is zero,
the term only breaks ties); ``<``, ``>`` and ``=`` are composed from those.

Two until readings are provided.  The default ``witness`` form scores
min over witness steps j of max(loss(b at j), losses of a on [i, j]) and
matches the boolean semantics; ``as_printed`` swaps the roles of the two
subformulas' aggregation and is kept for comparison because written-out
definitions of the until loss commonly take that shape even though it can
report zero on unsatisfied traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import ltl


UNTIL_VARIANTS = ("witness", "as_printed")
MODES = ("soft", "hard")


@dataclass
class LossConfig:
    gamma: float = 0.005
    zeta: float = 1e-3
    mode: str = "soft"
    until_variant: str = "witness"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.until_variant not in UNTIL_VARIANTS:
            raise ValueError(
                f"until_variant must be one of {UNTIL_VARIANTS}, got {self.until_variant!r}"
            )
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")


def soft_max(xs, gamma: float):
    """Smooth upper bound of the elementwise max of a list of arrays."""
    x = np.stack([np.asarray(v, dtype=np.float64) for v in xs], axis=0)
    m = x.max(axis=0)
    return m + gamma * np.log(np.exp((x - m) / gamma).sum(axis=0))


def soft_min(xs, gamma: float):
    """Smooth lower bound of the elementwise min of a list of arrays."""
    x = np.stack([np.asarray(v, dtype=np.float64) for v in xs], axis=0)
    m = x.min(axis=0)
    return m - gamma * np.log(np.exp((m - x) / gamma).sum(axis=0))


# ---------------------------------------------------------------------------
# differentiable traces


@dataclass
class NodeTrace:
    """A trajectory living on a tape: T point nodes of shape (B, d)."""

    points: list[ad.Node]
    velocity: list[ad.Node]

    @classmethod
    def from_point_nodes(cls, points: list[ad.Node]) -> "NodeTrace":
        if len(points) < 2:
            raise ValueError("a trace needs at least 2 steps")
        velocity = [ad.sub(points[t + 1], points[t]) for t in range(len(points) - 1)]
        velocity.append(velocity[-1])
        return cls(points=points, velocity=velocity)

    @classmethod
    def from_trace(cls, tape: ad.Tape, trace: ltl.Trace, batch: int = 1) -> "NodeTrace":
        points = [
            tape.const(np.tile(trace.points[t], (batch, 1))) for t in range(trace.steps)
        ]
        return cls.from_point_nodes(points)

    @property
    def tape(self) -> ad.Tape:
        return self.points[0].tape

    @property
    def steps(self) -> int:
        return len(self.points)

    @property
    def batch(self) -> int:
        return self.points[0].value.shape[0]

    @property
    def d(self) -> int:
        return self.points[0].value.shape[1]


def static_nodes(tape: ad.Tape, objects: np.ndarray, batch: int) -> list[ad.Node]:
    objs = np.asarray(objects, dtype=np.float64)
    return [tape.const(np.tile(objs[k], (batch, 1))) for k in range(objs.shape[0])]


# ---------------------------------------------------------------------------
# terms


def eval_term(
    term: ltl.Term,
    nt: NodeTrace,
    i: int,
    statics: list[ad.Node],
    _memo: dict | None = None,
) -> ad.Node:
    """Term value at step i as a node: (B,) for scalars, (B, dim) for vectors."""
    memo = {} if _memo is None else _memo
    key = (id(term), i)
    got = memo.get(key)
    if got is not None:
        return got

    tape = nt.tape
    B = nt.batch
    if isinstance(term, ltl.TrajPos):
        out = nt.points[i]
    elif isinstance(term, ltl.TrajVel):
        out = nt.velocity[i]
    elif isinstance(term, ltl.ObjectRef):
        out = statics[term.index]
    elif isinstance(term, ltl.Component):
        out = ad.col(eval_term(term.term, nt, i, statics, memo), term.axis)
    elif isinstance(term, ltl.SliceSel):
        out = ad.slice_cols(eval_term(term.term, nt, i, statics, memo), term.lo, term.hi)
    elif isinstance(term, ltl.VecConst):
        out = tape.const(np.tile(np.asarray(term.values), (B, 1)))
    elif isinstance(term, ltl.ScalarConst):
        out = tape.const(np.full(B, term.value))
    elif isinstance(term, (ltl.SqNorm, ltl.Norm)):
        v = eval_term(term.term, nt, i, statics, memo)
        sq = ad.square(v) if v.value.ndim == 1 else ad.sum_axes(ad.square(v), (1,))
        out = ad.sqrt(sq) if isinstance(term, ltl.Norm) else sq
    elif isinstance(term, ltl.Add):
        out = ad.add(
            eval_term(term.left, nt, i, statics, memo),
            eval_term(term.right, nt, i, statics, memo),
        )
    elif isinstance(term, ltl.Sub):
        out = ad.sub(
            eval_term(term.left, nt, i, statics, memo),
            eval_term(term.right, nt, i, statics, memo),
        )
    elif isinstance(term, ltl.Scale):
        out = ad.scale(eval_term(term.term, nt, i, statics, memo), term.factor)
    else:
        raise ltl.SpecSemanticsError(f"not a term: {term!r}")
    memo[key] = out
    return out


# ---------------------------------------------------------------------------
# formulas


def _conj(nodes: list[ad.Node], cfg: LossConfig) -> ad.Node:
    if len(nodes) == 1:
        return nodes[0]
    if cfg.mode == "soft":
        return ad.soft_max_list(nodes, cfg.gamma)
    return ad.hard_max_list(nodes)


def _disj(nodes: list[ad.Node], cfg: LossConfig) -> ad.Node:
    if len(nodes) == 1:
        return nodes[0]
    if cfg.mode == "soft":
        return ad.soft_min_list(nodes, cfg.gamma)
    return ad.hard_min_list(nodes)


def _equality_mask(a: ad.Node, b: ad.Node, zeta: float) -> ad.Node:
    # constant penalty while exactly equal; zero gradient by construction
    if a.value.ndim == 1:
        eq = a.value == b.value
    else:
        eq = np.all(a.value == b.value, axis=-1)
    return a.tape.const(zeta * eq.astype(np.float64))


def atom_loss(
    atom: ltl.Atom,
    nt: NodeTrace,
    i: int,
    cfg: LossConfig,
    statics: list[ad.Node],
    negated: bool = False,
    _memo: dict | None = None,
) -> ad.Node:
    """Violation loss of one comparison (or its negation) at step i."""
    memo = {} if _memo is None else _memo
    left = eval_term(atom.left, nt, i, statics, memo)
    right = eval_term(atom.right, nt, i, statics, memo)
    if left.value.shape != right.value.shape:
        raise ltl.SpecSemanticsError(
            f"comparison between shapes {left.value.shape} and {right.value.shape}"
        )
    vector = left.value.ndim > 1
    op = atom.op
    if negated:
        if vector and op not in ("=", "!="):
            # not(every component holds) = some component violates
            losses = [
                _scalar_pair_loss(ad.col(left, k), ad.col(right, k), ltl.FLIP[op], cfg)
                for k in range(left.value.shape[1])
            ]
            return _disj(losses, cfg)
        op = ltl.FLIP[op]

    if not vector:
        return _scalar_pair_loss(left, right, op, cfg)
    if op == "!=":
        return _equality_mask(left, right, cfg.zeta)
    if op == "=":
        d = ad.sub(left, right)
        comps = []
        for k in range(left.value.shape[1]):
            comps.append(ad.relu(ad.col(d, k)))
            comps.append(ad.relu(ad.scale(ad.col(d, k), -1.0)))
        return _conj(comps, cfg)
    losses = [
        _scalar_pair_loss(ad.col(left, k), ad.col(right, k), op, cfg)
        for k in range(left.value.shape[1])
    ]
    return _conj(losses, cfg)


def _scalar_pair_loss(a: ad.Node, b: ad.Node, op: str, cfg: LossConfig) -> ad.Node:
    if op == "<=":
        return ad.relu(ad.sub(a, b))
    if op == ">=":
        return ad.relu(ad.sub(b, a))
    if op == "!=":
        return _equality_mask(a, b, cfg.zeta)
    if op == "<":
        return _conj([ad.relu(ad.sub(a, b)), _equality_mask(a, b, cfg.zeta)], cfg)
    if op == ">":
        return _conj([ad.relu(ad.sub(b, a)), _equality_mask(a, b, cfg.zeta)], cfg)
    if op == "=":
        return _conj([ad.relu(ad.sub(a, b)), ad.relu(ad.sub(b, a))], cfg)
    raise ltl.SpecSemanticsError(f"unknown comparison {op!r}")


def constraint_loss(
    formula: ltl.Formula,
    nt: NodeTrace,
    i: int,
    cfg: LossConfig,
    statics: list[ad.Node],
) -> ad.Node:
    """Violation loss of a formula in negation normal form, shape (B,)."""
    T = nt.steps
    if not 0 <= i < T:
        raise ValueError(f"step {i} outside trace of length {T}")
    memo: dict = {}
    term_memo: dict = {}

    def lo(f: ltl.Formula, j: int) -> ad.Node:
        key = (id(f), j)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(f, ltl.Atom):
            out = atom_loss(f, nt, j, cfg, statics, _memo=term_memo)
        elif isinstance(f, ltl.Not):
            if not isinstance(f.arg, ltl.Atom):
                raise ValueError("loss needs negation normal form, apply to_nnf first")
            out = atom_loss(f.arg, nt, j, cfg, statics, negated=True, _memo=term_memo)
        elif isinstance(f, ltl.Implies):
            raise ValueError("loss needs negation normal form, apply to_nnf first")
        elif isinstance(f, ltl.And):
            out = _conj([lo(f.left, j), lo(f.right, j)], cfg)
        elif isinstance(f, ltl.Or):
            out = _disj([lo(f.left, j), lo(f.right, j)], cfg)
        elif isinstance(f, ltl.Next):
            out = lo(f.arg, min(j + 1, T - 1))
        elif isinstance(f, ltl.Always):
            out = _conj([lo(f.arg, k) for k in range(j, T)], cfg)
        elif isinstance(f, ltl.Eventually):
            out = _disj([lo(f.arg, k) for k in range(j, T)], cfg)
        elif isinstance(f, ltl.Until):
            if cfg.until_variant == "witness":
                bundles = [
                    _conj([lo(f.right, k)] + [lo(f.left, m) for m in range(j, k + 1)], cfg)
                    for k in range(j, T)
                ]
                out = _disj(bundles, cfg)
            else:
                bundles = [
                    _disj([lo(f.left, k)] + [lo(f.right, m) for m in range(j, k + 1)], cfg)
                    for k in range(j, T)
                ]
                out = _conj(bundles, cfg)
        else:
            raise ltl.SpecSemanticsError(f"not a formula: {f!r}")
        memo[key] = out
        return out

    return lo(formula, i)


def constraint_loss_on_trace(
    formula: ltl.Formula,
    trace: ltl.Trace,
    objects: np.ndarray,
    cfg: LossConfig,
    i: int = 0,
) -> float:
    """Loss of a stored trace, no gradients; handy for metrics and checking."""
    tape = ad.Tape()
    nt = NodeTrace.from_trace(tape, trace, batch=1)
    statics = static_nodes(tape, objects, batch=1)
    return float(constraint_loss(formula, nt, i, cfg, statics).value[0])

"""Training loop: imitation plus constraint loss, optional input adversary.

Each update minimizes the batch mean of L_d on the clean scenario inputs
plus eta times L_c of the spec on trajectories rolled out from (possibly
perturbed) inputs.  The adversary searches the L-inf ball around each input
for the scenario whose rollout violates the spec most: projected gradient
descent on the loss of the negated formula, sign steps, coordinate clamp
back into the ball.  When the negation cannot be put in negation normal
form (until under negation), the adversary instead ascends the loss of the
formula itself, which pursues the same objective.

Setting epsilon to 0 or disabling the adversary trains against the clean
inputs ("train-only"); omitting the formula gives plain imitation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import dmp as dmp_mod
from . import ltl, model, quantloss


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass
class TrainConfig:
    epochs: int = 200
    lr: float = 1e-3
    eta: float = 1.0
    gamma: float = 0.005
    zeta: float = 1e-3
    epsilon: float = 0.0
    adv_iterations: int = 10
    adv_lr: float | None = None  # default 0.1 * epsilon
    batch_size: int = 32
    seed: int = 0
    until_variant: str = "witness"
    adversary_enabled: bool = False
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.adv_iterations < 0:
            raise ValueError(f"adv_iterations must be >= 0, got {self.adv_iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")

    def loss_config(self, mode: str) -> quantloss.LossConfig:
        return quantloss.LossConfig(
            gamma=self.gamma, zeta=self.zeta, mode=mode, until_variant=self.until_variant
        )

    @property
    def adv_step(self) -> float:
        return 0.1 * self.epsilon if self.adv_lr is None else self.adv_lr


@dataclass
class RobustBall:
    """Closed L-inf neighbourhood of one scenario input."""

    center: np.ndarray
    radius: float

    def contains(self, z) -> bool:
        return float(np.max(np.abs(np.asarray(z) - self.center))) <= self.radius

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.center + rng.uniform(-self.radius, self.radius, self.center.shape)

    def project(self, z) -> np.ndarray:
        return np.clip(z, self.center - self.radius, self.center + self.radius)


def _adversary_target(formula: ltl.Formula) -> tuple[ltl.Formula, bool]:
    """Loss to push down: prefer the negated spec; ascend the spec itself
    when its negation has no NNF."""
    try:
        return ltl.to_nnf(ltl.Not(formula)), False
    except ltl.UnsupportedNegation:
        return formula, True


def adversarial_input(
    params: model.NetworkParams,
    dmp_params: dmp_mod.DmpParams,
    inputs: np.ndarray,
    formula: ltl.Formula | None,
    cfg: TrainConfig,
    rng: np.random.Generator,
    coeffs: np.ndarray | None = None,
    history: list | None = None,
) -> np.ndarray:
    """Worst-case in-ball scenario inputs for a batch, shape preserved.

    With the adversary disabled (or epsilon 0, or no formula) the inputs
    come back unchanged.  Otherwise each example is perturbed independently;
    the returned array always lies in the closed ball around the originals.
    """
    single = np.asarray(inputs).ndim == 1
    clean = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if formula is None or not cfg.adversary_enabled or cfg.epsilon == 0.0:
        out = clean.copy()
        return out[0] if single else out

    target, ascend = _adversary_target(formula)
    soft = cfg.loss_config("soft")
    if coeffs is None:
        coeffs = dmp_mod.mix_coefficients(dmp_params)
    lo = clean - cfg.epsilon
    hi = clean + cfg.epsilon
    step = cfg.adv_step
    z = clean + rng.uniform(-cfg.epsilon, cfg.epsilon, clean.shape)

    def objective(z_arr, want_grad):
        tape = ad.Tape()
        z_node = tape.leaf(z_arr) if want_grad else tape.const(z_arr)
        layers = model.layer_nodes(tape, params, trainable=False)
        nt, statics = model.rollout_for_inputs(
            tape, layers, params.dims, dmp_params, z_node, coeffs
        )
        per = quantloss.constraint_loss(target, nt, 0, soft, statics)
        if not want_grad:
            return per.value, None
        grads = ad.backward(ad.vsum(per))
        return per.value, grads[z_node]

    for _ in range(cfg.adv_iterations):
        value, grad = objective(z, want_grad=True)
        if history is not None:
            history.append(value.copy())
        direction = np.sign(grad)
        z = z + step * direction if ascend else z - step * direction
        z = np.clip(z, lo, hi)
    if history is not None:
        value, _ = objective(z, want_grad=False)
        history.append(value.copy())
    return z[0] if single else z


# ---------------------------------------------------------------------------
# training


def _dataset_arrays(dataset) -> tuple[np.ndarray, np.ndarray]:
    inputs = np.stack([demo.input for demo in dataset.demos])
    points = np.stack([demo.trace.points for demo in dataset.demos])
    return inputs, points


def _metrics_pass(params, dmp_params, inputs, points, formula, cfg, coeffs):
    tape = ad.Tape()
    layers = model.layer_nodes(tape, params, trainable=False)
    nt, statics = model.rollout_for_inputs(
        tape, layers, params.dims, dmp_params, inputs, coeffs
    )
    ld = float(np.mean(model.imitation_loss(nt, points).value))
    if formula is None:
        return ld, None, None
    hard = quantloss.constraint_loss(formula, nt, 0, cfg.loss_config("hard"), statics)
    soft = quantloss.constraint_loss(formula, nt, 0, cfg.loss_config("soft"), statics)
    return ld, float(np.mean(hard.value)), float(np.mean(soft.value))


def train(
    dataset,
    formula: ltl.Formula | None,
    cfg: TrainConfig,
    dmp_params: dmp_mod.DmpParams | None = None,
    test_dataset=None,
    metrics_path=None,
) -> tuple[model.NetworkParams, list[dict]]:
    """Fit the weight network; returns final parameters and metric history.

    The formula must already be in negation normal form (see ltl.to_nnf).
    Metric records are emitted every eval_every epochs and always for the
    final one; metrics_path, when given, receives them as JSON lines.
    """
    if not dataset.demos:
        raise ValueError("dataset is empty")
    if dmp_params is None:
        dmp_params = dmp_mod.DmpParams(steps=dataset.steps)
    if dataset.steps != dmp_params.steps:
        raise ValueError(
            f"dataset has {dataset.steps} steps but primitive rolls out "
            f"{dmp_params.steps}"
        )
    if formula is not None and not ltl.is_nnf(formula):
        raise ValueError("formula must be in negation normal form")
    if formula is not None and cfg.adversary_enabled and cfg.epsilon > 0.0:
        _adversary_target(formula)  # fail here, not mid-training

    inputs, points = _dataset_arrays(dataset)
    test_arrays = _dataset_arrays(test_dataset) if test_dataset is not None else None
    d = dataset.d
    dims = model.NetworkDims.for_schema(d, dataset.k_objects, dmp_params.n_basis)
    params = model.init_params(dims, seed=cfg.seed)
    coeffs = dmp_mod.mix_coefficients(dmp_params)
    soft = cfg.loss_config("soft")
    adam = ad.AdamState.for_params(params.layers)
    shuffle_rng, adv_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2)
    )

    M = inputs.shape[0]
    history: list[dict] = []
    sink = open(metrics_path, "w") if metrics_path is not None else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            t0 = time.perf_counter()
            order = shuffle_rng.permutation(M)
            for lo_idx in range(0, M, cfg.batch_size):
                idx = order[lo_idx : lo_idx + cfg.batch_size]
                binputs = inputs[idx]
                bpoints = points[idx]
                z = adversarial_input(
                    params, dmp_params, binputs, formula, cfg, adv_rng, coeffs
                )
                perturbed = formula is not None and not np.array_equal(z, binputs)

                try:
                    tape = ad.Tape()
                    layers = model.layer_nodes(tape, params, trainable=True)
                    nt, statics = model.rollout_for_inputs(
                        tape, layers, dims, dmp_params, binputs, coeffs
                    )
                    li = model.imitation_loss(nt, bpoints)
                    total = ad.mean_all(li)
                    if formula is not None:
                        if perturbed:
                            nt_z, statics_z = model.rollout_for_inputs(
                                tape, layers, dims, dmp_params, z, coeffs
                            )
                        else:
                            nt_z, statics_z = nt, statics
                        lc = quantloss.constraint_loss(formula, nt_z, 0, soft, statics_z)
                        total = ad.add(total, ad.scale(ad.mean_all(lc), cfg.eta))
                    grads = ad.backward(total)
                except ad.NonFiniteError as e:
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} "
                        f"(lr={cfg.lr}, eta={cfg.eta}): {e}"
                    ) from e
                ad.adam_step(
                    params.layers, [grads[n] for n in layers], adam, lr=cfg.lr
                )

            if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
                try:
                    ld, lc_hard, lc_soft = _metrics_pass(
                        params, dmp_params, inputs, points, formula, cfg, coeffs
                    )
                except ad.NonFiniteError as e:
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} "
                        f"(lr={cfg.lr}, eta={cfg.eta}): {e}"
                    ) from e
                record = {
                    "epoch": epoch,
                    "train_Ld": ld,
                    "train_Lc_hard": lc_hard,
                    "train_Lc_soft": lc_soft,
                    "test_Ld": None,
                    "test_Lc_hard": None,
                    "wall_ms": (time.perf_counter() - t0) * 1000.0,
                }
                if test_arrays is not None:
                    t_ld, t_hard, _ = _metrics_pass(
                        params, dmp_params, *test_arrays, formula, cfg, coeffs
                    )
                    record["test_Ld"] = t_ld
                    record["test_Lc_hard"] = t_hard
                history.append(record)
                if sink is not None:
                    sink.write(json.dumps(record) + "\n")
    finally:
        if sink is not None:
            sink.close()
    return params, history


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalResult:
    mean_imitation: float
    mean_constraint_hard: float | None
    satisfaction_rate: float | None

    def as_record(self) -> dict:
        return {
            "mean_Ld": self.mean_imitation,
            "mean_Lc_hard": self.mean_constraint_hard,
            "satisfaction_rate": self.satisfaction_rate,
        }


def rollout_traces(params, dmp_params, inputs: np.ndarray) -> list[ltl.Trace]:
    """Roll out every scenario input and return plain traces."""
    tape = ad.Tape()
    layers = model.layer_nodes(tape, params, trainable=False)
    nt, _ = model.rollout_for_inputs(tape, layers, params.dims, dmp_params, inputs)
    stacked = np.stack([p.value for p in nt.points], axis=0)  # (T, B, d)
    return [
        ltl.Trace(stacked[:, b, :], dt=dmp_params.dt) for b in range(stacked.shape[1])
    ]


def evaluate(
    params: model.NetworkParams,
    dmp_params: dmp_mod.DmpParams,
    dataset,
    formula: ltl.Formula | None,
    cfg: TrainConfig | None = None,
) -> EvalResult:
    """Mean imitation loss, mean hard constraint loss, satisfaction rate.

    The satisfaction rate is computed by the boolean semantics on each
    rolled-out trace, independently of the loss; in hard mode the two agree
    (rate 1.0 exactly when every hard loss is 0).
    """
    if not dataset.demos:
        raise ValueError("dataset is empty")
    cfg = cfg or TrainConfig()
    inputs, points = _dataset_arrays(dataset)
    coeffs = dmp_mod.mix_coefficients(dmp_params)
    ld, lc_hard, _ = _metrics_pass(
        params, dmp_params, inputs, points, formula, cfg, coeffs
    )
    if formula is None:
        return EvalResult(ld, None, None)
    sat = 0
    for demo, trace in zip(dataset.demos, rollout_traces(params, dmp_params, inputs)):
        objs = model.objects_from_input(demo.input, dataset.d, dataset.k_objects)
        sat += bool(ltl.eval_qualitative(formula, trace, 0, objs))
    return EvalResult(ld, lc_hard, sat / len(dataset.demos))


# ---------------------------------------------------------------------------
# metrics files


def write_metrics(path, history: list[dict]) -> None:
    with open(path, "w") as fh:
        for record in history:
            fh.write(json.dumps(record) + "\n")


def load_metrics(path) -> list[dict]:
    records = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records

"""Conjoin keep-out, corridor, and visit specs and train against the bundle.

Spec composition is plain conjunction, so one training run can enforce a
clearance around o2, a horizontal corridor, and metric-ball visits to o1
and o3 at once.  The script reports each clause's hard loss separately
before and after training, then draws the scenario.

Run from the repository root:

    python3 demos/composed_specs.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ltldmp import dmp, experiments, ltl, plots, quantloss, tasks, training  # noqa: E402

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

schema = ltl.SpecSchema(d=2, k_objects=3)
composed = experiments.composed_spec()
clauses = [
    ("clearance", "G (sqnorm(p - o2) >= 0.1)"),
    ("corridor", "G (p.y >= 0.25 & p.y <= 0.75)"),
    ("visit o1", "F (sqnorm(p - o1) <= 0.01)"),
    ("visit o3", "F (sqnorm(p - o3) <= 0.01)"),
]
hard = quantloss.LossConfig(mode="hard")

seed = experiments.pick_compose_seeds(1)[0]
ds = tasks.gen_dataset(1, seed=seed)
demo = ds.demos[0]
objects = demo.input[4:].reshape(3, 2)
dp = dmp.DmpParams(steps=ds.steps)


def clause_losses(trace):
    return {
        name: quantloss.constraint_loss_on_trace(
            ltl.to_nnf(ltl.parse_formula(text, schema)), trace, objects, hard
        )
        for name, text in clauses
    }


print(f"scenario seed {seed}")
print("demo clause losses:")
for name, loss in clause_losses(demo.trace).items():
    print(f"  {name}: {loss:.5f}")

# Optimize slightly tightened thresholds (the smoothed loss is biased by
# its temperature), judge against the spec as written.
cfg = training.TrainConfig(epochs=800, seed=0, eta=20.0, gamma=0.002, eval_every=800)
params, _ = training.train(ds, ltl.to_nnf(experiments.composed_train_spec()), cfg)
result = training.evaluate(params, dp, ds, ltl.to_nnf(composed))
rollout = training.rollout_traces(params, dp, demo.input[None, :])[0]

print(
    f"trained: Lc={result.mean_constraint_hard:.5f} "
    f"Ld={result.mean_imitation:.4f} "
    f"satisfied={result.satisfaction_rate == 1.0}"
)
print("trained clause losses:")
for name, loss in clause_losses(rollout).items():
    print(f"  {name}: {loss:.5f}")

plots.plot_scenario(
    demo.trace.points,
    rollout.points,
    objects,
    composed,
    path=OUT / "composed.svg",
    title=f"composed specs, scenario {seed}",
)
print(f"wrote {OUT / 'composed.svg'}")

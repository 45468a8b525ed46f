"""Command line front end.

Machine-readable results go to stdout as JSON lines; progress and notes go
to stderr.  Exit codes: 0 on success, 1 for bad input (arguments, files,
spec text), 2 for numeric failure at run time.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import dmp as dmp_mod
from . import experiments, ltl, model, plots, quantloss, tasks, training


def emit(record: dict) -> None:
    print(json.dumps(record), flush=True)


def note(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def resolve_spec(value: str, schema: ltl.SpecSchema) -> ltl.Formula:
    """Builtin spec name, or path to a spec text file."""
    if value in tasks.SPEC_TEXTS:
        return tasks.builtin_spec(value)
    path = Path(value)
    if not path.exists():
        raise FileNotFoundError(
            f"spec {value!r} is neither a builtin name {sorted(tasks.SPEC_TEXTS)} "
            f"nor a file"
        )
    return ltl.parse_formula(path.read_text(), schema)


def dataset_schema(dataset: tasks.Dataset) -> ltl.SpecSchema:
    return ltl.SpecSchema(d=dataset.d, k_objects=dataset.k_objects)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    ds = tasks.gen_dataset(args.count, seed=args.seed, task=args.task, steps=args.steps)
    tasks.save_dataset(args.out, ds)
    emit(
        {
            "command": "gen",
            "out": str(args.out),
            "task": args.task,
            "count": args.count,
            "seed": args.seed,
            "steps": args.steps,
        }
    )
    return 0


def cmd_train(args) -> int:
    ds = tasks.load_dataset(args.data)
    formula = None
    if args.spec is not None:
        formula = ltl.to_nnf(resolve_spec(args.spec, dataset_schema(ds)))
    test_ds = tasks.load_dataset(args.test_data) if args.test_data else None
    cfg = training.TrainConfig(
        epochs=args.epochs,
        lr=args.lr,
        eta=args.eta,
        gamma=args.gamma,
        epsilon=args.epsilon,
        adv_iterations=args.adv_iters,
        adv_lr=args.adv_lr,
        batch_size=args.batch,
        seed=args.seed,
        until_variant=args.until_variant,
        adversary_enabled=args.epsilon > 0.0,
        eval_every=args.eval_every,
    )
    dp = dmp_mod.DmpParams(steps=ds.steps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"
    note(
        f"training on {len(ds)} demos, spec={args.spec or 'none'}, "
        f"epochs={args.epochs}, adversary={'on' if cfg.adversary_enabled else 'off'}"
    )
    params, history = training.train(
        ds, formula, cfg, dmp_params=dp, test_dataset=test_ds, metrics_path=metrics_path
    )
    model_path = out_dir / "model.json"
    model.save_model(model_path, params, dp)
    final = history[-1]
    emit(
        {
            "command": "train",
            "model": str(model_path),
            "metrics": str(metrics_path),
            "final": final,
        }
    )
    return 0


def cmd_eval(args) -> int:
    params, dp = model.load_model(args.model)
    ds = tasks.load_dataset(args.data)
    formula = None
    if args.spec is not None:
        formula = ltl.to_nnf(resolve_spec(args.spec, dataset_schema(ds)))
    result = training.evaluate(params, dp, ds, formula)
    record = {"command": "eval", "model": str(args.model), "data": str(args.data)}
    record.update(result.as_record())
    emit(record)
    return 0


def _breakdown(formula, nt, cfg, statics, path="0"):
    """Hard loss of every node of the normalized formula, root first."""
    loss = quantloss.constraint_loss(formula, nt, 0, cfg, statics)
    rows = [
        {
            "path": path,
            "op": type(formula).__name__,
            "text": ltl.to_text(formula),
            "hard_loss": float(loss.value[0]),
        }
    ]
    children = []
    if isinstance(formula, (ltl.And, ltl.Or, ltl.Until, ltl.Implies)):
        children = [formula.left, formula.right]
    elif isinstance(formula, (ltl.Not, ltl.Next, ltl.Always, ltl.Eventually)):
        children = [formula.arg]
    for i, child in enumerate(children):
        rows.extend(_breakdown(child, nt, cfg, statics, f"{path}.{i}"))
    return rows


def cmd_check(args) -> int:
    demo = tasks.load_trace(args.trace)
    d = demo.trace.d
    k = (demo.input.size - 2 * d) // d
    schema = ltl.SpecSchema(d=d, k_objects=k)
    formula = resolve_spec(args.spec, schema)
    normalized = ltl.to_nnf(formula)
    objects = demo.input[2 * d :].reshape(k, d)

    verdict = ltl.eval_qualitative(formula, demo.trace, 0, objects)
    cfg = quantloss.LossConfig(mode="hard", until_variant=args.until_variant)
    nt = quantloss.NodeTrace.from_trace(ad.Tape(), demo.trace)
    statics = quantloss.static_nodes(nt.tape, objects, 1)
    note(f"loss breakdown is over the normalized spec: {ltl.to_text(normalized)}")
    for row in _breakdown(normalized, nt, cfg, statics):
        emit({"command": "check", "kind": "node", **row})
    root_loss = quantloss.constraint_loss_on_trace(
        normalized, demo.trace, objects, cfg
    )
    emit(
        {
            "command": "check",
            "kind": "verdict",
            "trace": str(args.trace),
            "satisfied": bool(verdict),
            "hard_loss": root_loss,
        }
    )
    return 0


def cmd_plot(args) -> int:
    chosen = [v is not None for v in (args.data, args.metrics, args.trace)]
    if sum(chosen) != 1:
        raise ValueError("pick exactly one of --data, --metrics, --trace")

    if args.metrics is not None:
        history = training.load_metrics(args.metrics)
        plots.plot_metrics(history, path=args.out, title=args.title)
    elif args.trace is not None:
        demo = tasks.load_trace(args.trace)
        if demo.trace.d == 2:
            k = (demo.input.size - 4) // 2
            objects = demo.input[4:].reshape(k, 2)
            formula = None
            if args.spec is not None:
                formula = resolve_spec(args.spec, ltl.SpecSchema(d=2, k_objects=k))
            plots.plot_scenario(
                demo.trace.points, None, objects, formula,
                path=args.out, title=args.title,
            )
        else:
            plots.plot_trace_panels(demo.trace.points, path=args.out, title=args.title)
    else:
        ds = tasks.load_dataset(args.data)
        demo = ds.demos[args.index]
        formula = None
        if args.spec is not None:
            formula = resolve_spec(args.spec, dataset_schema(ds))
        rollout = None
        if args.model is not None:
            params, dp = model.load_model(args.model)
            if dp.steps != ds.steps:
                raise ValueError(
                    f"model rolls out {dp.steps} steps, dataset has {ds.steps}"
                )
            rollout = training.rollout_traces(
                params, dp, demo.input[np.newaxis]
            )[0].points
        plots.plot_scenario(
            demo.trace.points, rollout, ds.objects(args.index), formula,
            path=args.out, title=args.title,
        )
    emit({"command": "plot", "out": str(args.out)})
    return 0


def cmd_experiments(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    task_list = [t.strip() for t in args.tasks.split(",") if t.strip()]
    for task in task_list:
        if task not in tasks.SPEC_TEXTS:
            raise ValueError(f"unknown task {task!r}")
    results = []
    if args.table == 1:
        for task in task_list:
            table = experiments.one_shot_table(
                task, n_seeds=args.seeds,
                epochs=args.epochs or experiments.ONE_SHOT_EPOCHS,
                progress=True,
            )
            emit({"command": "experiments", "table": 1, **table})
            results.append(table)
        path = out_dir / "one_shot.json"
    else:
        for task in task_list:
            table = experiments.generalization_table(
                task, seeds=range(args.seeds),
                epochs=args.epochs or 400,
                train_count=args.count, test_count=args.test_count,
                progress=True,
            )
            emit({"command": "experiments", "table": 2, **table})
            results.append(table)
        path = out_dir / "generalization.json"
    path.write_text(json.dumps(results, indent=1) + "\n")
    note(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltldmp",
        description="Learn trajectory primitives from demonstrations under "
        "temporal-logic constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario dataset")
    p.add_argument("--task", default="generic", choices=tasks.TASK_NAMES)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="fit the weight network to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", default=None, help="builtin name or spec file path")
    p.add_argument("--test-data", default=None)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.005)
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="adversary ball radius; 0 trains on the given inputs")
    p.add_argument("--adv-iters", type=int, default=10)
    p.add_argument("--adv-lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--until-variant", default="witness",
                   choices=sorted(quantloss.UNTIL_VARIANTS))
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--spec", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="evaluate a spec against a stored trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--until-variant", default="witness",
                   choices=sorted(quantloss.UNTIL_VARIANTS))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("plot", help="render scenario, metrics, or trace SVG")
    p.add_argument("--data", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--spec", default=None)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--metrics", default=None)
    p.add_argument("--trace", default=None)
    p.add_argument("--title", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("experiments", help="run a result matrix")
    p.add_argument("--table", type=int, required=True, choices=(1, 2))
    p.add_argument("--tasks", default="avoid,patrol,steady,slow")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--test-count", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiments)

    return parser


VALIDATION_ERRORS = (
    ltl.SpecSyntaxError,
    ltl.SpecSemanticsError,
    tasks.DatasetFormatError,
    FileNotFoundError,
    ValueError,
)
NUMERIC_ERRORS = (training.TrainingDiverged, ad.NonFiniteError, ad.GraphError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NUMERIC_ERRORS as e:
        note(f"numeric failure: {e}")
        return 2
    except VALIDATION_ERRORS as e:
        note(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark scenario generation, builtin specs, dataset files.

A demonstration is a smooth planar curve through four random control points
(natural cubic spline, uniform parameter) together with three random object
positions.  The scenario input fed to the weight network is the flat vector
[start, goal, o1, ..., oK].  Everything is drawn from one seeded generator,
control points first, then objects, so a seed pins the whole scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import ltl

SPEC_TEXTS = {
    "avoid": "G (sqnorm(p - o2) >= 0.1)",
    "patrol": "(F (p = o2)) & (F (p = o3))",
    "steady": "G (p.y >= 0.25 & p.y <= 0.75)",
    "slow": "G (speed <= 0.015)",
}

TASK_NAMES = ("generic",) + tuple(SPEC_TEXTS)


class DatasetFormatError(ValueError):
    """Dataset or trace file does not match the expected layout."""


@dataclass
class Demonstration:
    input: np.ndarray  # [start, goal, o1, ..., oK] flattened
    trace: ltl.Trace
    seed: int
    task: str = "generic"


@dataclass
class Dataset:
    demos: list[Demonstration] = field(default_factory=list)

    def __post_init__(self):
        if not self.demos:
            return
        first = self.demos[0]
        for demo in self.demos[1:]:
            if (
                demo.trace.d != first.trace.d
                or demo.trace.steps != first.trace.steps
                or demo.input.shape != first.input.shape
            ):
                raise DatasetFormatError("demonstrations disagree on shape")

    def __len__(self) -> int:
        return len(self.demos)

    @property
    def d(self) -> int:
        return self.demos[0].trace.d

    @property
    def steps(self) -> int:
        return self.demos[0].trace.steps

    @property
    def k_objects(self) -> int:
        d = self.d
        return (self.demos[0].input.size - 2 * d) // d

    def objects(self, index: int) -> np.ndarray:
        d = self.d
        return self.demos[index].input[2 * d :].reshape(self.k_objects, d)


# spline knots: uniform parameterization of the four control points
_KNOTS = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


def gen_demo(seed: int, task: str = "generic", steps: int = 100) -> Demonstration:
    """One random scenario: spline demo through 4 control points, 3 objects."""
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    rng = np.random.default_rng(seed)
    control = rng.uniform(0.0, 1.0, size=(4, 2))
    objects = rng.uniform(0.0, 1.0, size=(3, 2))
    spline = CubicSpline(_KNOTS, control, bc_type="natural", axis=0)
    points = spline(np.linspace(0.0, 1.0, steps))
    trace = ltl.Trace(points, dt=1.0 / (steps - 1))
    scenario = np.concatenate([points[0], points[-1], objects.ravel()])
    return Demonstration(input=scenario, trace=trace, seed=seed, task=task)


def gen_dataset(count: int, seed: int = 0, task: str = "generic", steps: int = 100) -> Dataset:
    """count scenarios with consecutive seeds starting at seed."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return Dataset([gen_demo(seed + i, task, steps) for i in range(count)])


def builtin_spec(name: str) -> ltl.Formula:
    """Parse one of the named planar specs (avoid, patrol, steady, slow)."""
    try:
        text = SPEC_TEXTS[name]
    except KeyError:
        raise ValueError(
            f"unknown spec name {name!r}; choose from {sorted(SPEC_TEXTS)}"
        ) from None
    return ltl.parse_formula(text, ltl.SpecSchema(d=2, k_objects=3))


def compose_specs(formulas) -> ltl.Formula:
    """Conjunction of several specs, folded from the right."""
    formulas = list(formulas)
    if not formulas:
        raise ValueError("need at least one formula to compose")
    out = formulas[-1]
    for f in reversed(formulas[:-1]):
        out = ltl.And(f, out)
    return out


# ---------------------------------------------------------------------------
# file formats (version 1): JSON with full-precision decimal numbers


def _demo_record(demo: Demonstration) -> dict:
    return {
        "seed": demo.seed,
        "input": demo.input.tolist(),
        "trajectory": demo.trace.points.tolist(),
        "task": demo.task,
    }


def _schema_record(demo: Demonstration) -> dict:
    d = demo.trace.d
    return {
        "d": d,
        "k_objects": (demo.input.size - 2 * d) // d,
        "t": demo.trace.steps,
    }


def save_dataset(path, dataset: Dataset) -> None:
    if not dataset.demos:
        raise ValueError("refusing to save an empty dataset")
    doc = {
        "version": 1,
        "schema": _schema_record(dataset.demos[0]),
        "demos": [_demo_record(demo) for demo in dataset.demos],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def save_trace(path, demo: Demonstration) -> None:
    doc = {"version": 1, "schema": _schema_record(demo)}
    doc.update(_demo_record(demo))
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise DatasetFormatError(f"{path}: expected a JSON object at top level")
    if doc.get("version") != 1:
        raise DatasetFormatError(f"{path}: unsupported version {doc.get('version')!r}")
    schema = doc.get("schema")
    if not isinstance(schema, dict):
        raise DatasetFormatError(f"{path}: missing schema")
    for key in ("d", "k_objects", "t"):
        v = schema.get(key)
        if not isinstance(v, int) or v < 1:
            raise DatasetFormatError(f"{path}: schema.{key} must be a positive integer")
    if schema["t"] < 2:
        raise DatasetFormatError(f"{path}: schema.t must be >= 2")
    return doc


def _parse_demo(record, schema, where: str) -> Demonstration:
    if not isinstance(record, dict):
        raise DatasetFormatError(f"{where}: demo record must be an object")
    d, k, t = schema["d"], schema["k_objects"], schema["t"]
    try:
        scenario = np.asarray(record["input"], dtype=np.float64)
        points = np.asarray(record["trajectory"], dtype=np.float64)
        seed = int(record["seed"])
        task = str(record["task"])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"{where}: {e}") from e
    if scenario.shape != (d * (2 + k),):
        raise DatasetFormatError(
            f"{where}: input has shape {scenario.shape}, expected ({d * (2 + k)},)"
        )
    if points.shape != (t, d):
        raise DatasetFormatError(
            f"{where}: trajectory has shape {points.shape}, expected ({t}, {d})"
        )
    if not np.all(np.isfinite(scenario)) or not np.all(np.isfinite(points)):
        raise DatasetFormatError(f"{where}: non-finite values")
    if not np.array_equal(points[0], scenario[:d]) or not np.array_equal(
        points[-1], scenario[d : 2 * d]
    ):
        raise DatasetFormatError(f"{where}: trajectory endpoints disagree with input")
    trace = ltl.Trace(points, dt=1.0 / (t - 1))
    return Demonstration(input=scenario, trace=trace, seed=seed, task=task)


def load_dataset(path) -> Dataset:
    doc = _load_json(path)
    demos = doc.get("demos")
    if not isinstance(demos, list) or not demos:
        raise DatasetFormatError(f"{path}: demos must be a non-empty list")
    schema = doc["schema"]
    return Dataset(
        [_parse_demo(rec, schema, f"{path}: demos[{i}]") for i, rec in enumerate(demos)]
    )


def load_trace(path) -> Demonstration:
    doc = _load_json(path)
    return _parse_demo(doc, doc["schema"], str(path))

"""Synthesize the two bundled six-dimensional gripper recordings.

Both traces mimic teleoperated end-effector poses sampled at a fixed rate:
position in meters inside a unit workspace, orientation as roll/pitch/yaw
normalized to [-1, 1].  Each deliberately violates its companion spec in
specs/ the way a human demonstration tends to:

* pour_demo: the cup wobbles upright-positive early on, then starts tipping
  (roll going negative) well before it is close to the container o1.
* reach_demo: the path to the red cube o1 cuts through the keep-out ball
  around the bowl o2 and never touches the green cube o3.

Run from the repository root:

    python3 demos/make_robot_traces.py

which rewrites data/pour_demo.json and data/reach_demo.json in place.
"""

import sys
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ltldmp import ltl, tasks  # noqa: E402

STEPS = 100


def spline_6d(waypoints: np.ndarray) -> np.ndarray:
    """Natural cubic spline through pose waypoints, uniform parameter."""
    u = np.linspace(0.0, 1.0, len(waypoints))
    spline = CubicSpline(u, waypoints, bc_type="natural", axis=0)
    out = spline(np.linspace(0.0, 1.0, STEPS))
    out[:, 3:] = np.clip(out[:, 3:], -1.0, 1.0)
    return out


def demo_from(points: np.ndarray, objects: np.ndarray, task: str) -> tasks.Demonstration:
    scenario = np.concatenate([points[0], points[-1], objects.ravel()])
    trace = ltl.Trace(points, dt=1.0 / (STEPS - 1))
    return tasks.Demonstration(input=scenario, trace=trace, seed=0, task=task)


def pour_scene() -> tasks.Demonstration:
    # o1 is the target container; the other two objects dress the table
    objects = np.array(
        [
            [0.62, 0.48, 0.34, 0.0, 0.0, 0.0],
            [0.30, 0.75, 0.34, 0.0, 0.0, 0.0],
            [0.80, 0.20, 0.34, 0.0, 0.0, 0.0],
        ]
    )
    waypoints = np.array(
        [
            # x     y     z     roll  pitch  yaw
            [0.18, 0.52, 0.55, 0.00, 0.02, 0.00],
            [0.26, 0.51, 0.54, 0.35, 0.05, 0.00],   # upright wobble, too far
            [0.34, 0.50, 0.52, 0.05, 0.03, -0.02],
            [0.44, 0.49, 0.48, -0.45, 0.02, -0.03],  # tipping begins early
            [0.54, 0.49, 0.44, -0.70, 0.01, -0.04],
            [0.60, 0.48, 0.40, -0.85, 0.00, -0.05],  # pouring over o1
        ]
    )
    return demo_from(spline_6d(waypoints), objects, "pour")


def reach_scene() -> tasks.Demonstration:
    # o1 red cube (goal), o2 bowl to keep clear of, o3 green cube to visit
    objects = np.array(
        [
            [0.68, 0.36, 0.40, 0.0, 0.0, 0.0],
            [0.42, 0.44, 0.40, 0.0, 0.0, 0.0],
            [0.55, 0.72, 0.42, 0.0, 0.0, 0.0],
        ]
    )
    waypoints = np.array(
        [
            [0.12, 0.40, 0.46, 0.00, 0.00, 0.00],
            [0.30, 0.42, 0.44, 0.00, 0.02, 0.00],   # drifts straight at the bowl
            [0.48, 0.40, 0.42, 0.00, 0.03, 0.01],
            [0.68, 0.36, 0.40, 0.00, 0.00, 0.00],
        ]
    )
    return demo_from(spline_6d(waypoints), objects, "reach")


def report(name: str, demo: tasks.Demonstration, spec_file: str) -> None:
    schema = ltl.SpecSchema(d=6, k_objects=3)
    spec = ltl.parse_formula(Path(spec_file).read_text(), schema)
    objects = demo.input[12:].reshape(3, 6)
    ok = ltl.eval_qualitative(spec, demo.trace, 0, objects)
    print(f"{name}: satisfies spec = {ok} (a useful demo should say False)")


def main() -> None:
    root = Path(__file__).resolve().parent.parent
    pour = pour_scene()
    reach = reach_scene()
    tasks.save_trace(root / "data" / "pour_demo.json", pour)
    tasks.save_trace(root / "data" / "reach_demo.json", reach)
    report("pour", pour, root / "specs" / "pour.ltl")
    report("reach", reach, root / "specs" / "reach.ltl")
    print("wrote data/pour_demo.json and data/reach_demo.json")


if __name__ == "__main__":
    main()

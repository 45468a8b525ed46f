import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from ltldmp import cli

REPO = Path(__file__).resolve().parent.parent


def run(capsys, *argv) -> tuple[int, list[dict], str]:
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    records = [json.loads(line) for line in captured.out.splitlines() if line.strip()]
    return code, records, captured.err


@pytest.fixture
def tiny_data(tmp_path, capsys):
    path = tmp_path / "demos.json"
    code, _, _ = run(capsys, "gen", "--task", "avoid", "--count", "3",
                     "--seed", "0", "--steps", "20", "--out", path)
    assert code == 0
    return path


class TestGen:
    def test_writes_dataset_and_reports(self, tmp_path, capsys):
        out = tmp_path / "d.json"
        code, records, _ = run(capsys, "gen", "--task", "steady", "--count", "4",
                               "--seed", "3", "--out", out)
        assert code == 0
        assert records == [
            {"command": "gen", "out": str(out), "task": "steady", "count": 4,
             "seed": 3, "steps": 100}
        ]
        doc = json.loads(out.read_text())
        assert len(doc["demos"]) == 4

    def test_rerun_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "gen", "--count", "3", "--seed", "11", "--out", a)
        run(capsys, "gen", "--count", "3", "--seed", "11", "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_count_is_validation_error(self, tmp_path, capsys):
        code, records, err = run(capsys, "gen", "--count", "0",
                                 "--out", tmp_path / "d.json")
        assert code == 1
        assert records == []
        assert "error" in err


class TestTrain:
    def test_writes_model_and_metrics(self, tiny_data, tmp_path, capsys):
        out = tmp_path / "run"
        code, records, err = run(
            capsys, "train", "--data", tiny_data, "--spec", "avoid",
            "--epochs", "2", "--seed", "0", "--out", out,
        )
        assert code == 0
        assert (out / "model.json").exists()
        assert (out / "metrics.jsonl").exists()
        (record,) = records
        assert record["command"] == "train"
        assert record["final"]["epoch"] == 2
        assert record["final"]["train_Lc_hard"] is not None
        assert "training on 3 demos" in err

    def test_spec_file_path_accepted(self, tmp_path, capsys):
        data = tmp_path / "demos.json"
        run(capsys, "gen", "--count", "2", "--seed", "1", "--out", data)
        code, _, _ = run(
            capsys, "train", "--data", data,
            "--spec", REPO / "specs" / "compose.ltl",
            "--epochs", "1", "--out", tmp_path / "run",
        )
        assert code == 0

    def test_missing_spec_file_exits_1(self, tiny_data, tmp_path, capsys):
        code, _, err = run(
            capsys, "train", "--data", tiny_data, "--spec", "nope.ltl",
            "--epochs", "1", "--out", tmp_path / "run",
        )
        assert code == 1
        assert "neither a builtin name" in err

    def test_corrupt_dataset_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, _ = run(capsys, "train", "--data", bad, "--epochs", "1",
                         "--out", tmp_path / "run")
        assert code == 1

    def test_divergence_exits_2(self, tiny_data, tmp_path, capsys):
        code, _, err = run(
            capsys, "train", "--data", tiny_data, "--spec", "avoid",
            "--epochs", "4", "--lr", "1e80", "--out", tmp_path / "run",
        )
        assert code == 2
        assert "numeric failure" in err

    def test_deterministic_given_flags(self, tiny_data, tmp_path, capsys):
        outs = []
        for name in ("r1", "r2"):
            run(capsys, "train", "--data", tiny_data, "--spec", "avoid",
                "--epochs", "2", "--seed", "5", "--out", tmp_path / name)
            outs.append((tmp_path / name / "model.json").read_bytes())
        assert outs[0] == outs[1]


class TestEval:
    def test_eval_reports_losses(self, tiny_data, tmp_path, capsys):
        run(capsys, "train", "--data", tiny_data, "--spec", "avoid",
            "--epochs", "2", "--out", tmp_path / "run")
        code, records, _ = run(
            capsys, "eval", "--model", tmp_path / "run" / "model.json",
            "--data", tiny_data, "--spec", "avoid",
        )
        assert code == 0
        (record,) = records
        assert set(record) >= {"mean_Ld", "mean_Lc_hard", "satisfaction_rate"}
        assert 0.0 <= record["satisfaction_rate"] <= 1.0

    def test_eval_without_spec(self, tiny_data, tmp_path, capsys):
        run(capsys, "train", "--data", tiny_data, "--epochs", "1",
            "--out", tmp_path / "run")
        code, records, _ = run(
            capsys, "eval", "--model", tmp_path / "run" / "model.json",
            "--data", tiny_data,
        )
        assert code == 0
        assert records[0]["mean_Lc_hard"] is None


class TestCheck:
    def test_pour_trace_breakdown_and_verdict(self, capsys):
        code, records, err = run(
            capsys, "check", "--trace", REPO / "data" / "pour_demo.json",
            "--spec", REPO / "specs" / "pour.ltl",
        )
        assert code == 0
        verdicts = [r for r in records if r["kind"] == "verdict"]
        nodes = [r for r in records if r["kind"] == "node"]
        assert len(verdicts) == 1
        assert verdicts[0]["satisfied"] is False
        assert verdicts[0]["hard_loss"] > 0.0
        assert nodes[0]["path"] == "0"
        assert nodes[0]["hard_loss"] == pytest.approx(verdicts[0]["hard_loss"])
        assert any(r["op"] == "Atom" for r in nodes)
        assert "normalized" in err

    def test_satisfied_planar_trace(self, tmp_path, capsys):
        # steady is satisfied by a straight mid-band demo we build by hand
        import numpy as np
        from ltldmp import ltl as lt, tasks as tk
        pts = np.stack([np.linspace(0.1, 0.9, 50), np.full(50, 0.5)], axis=1)
        demo = tk.Demonstration(
            input=np.concatenate([pts[0], pts[-1], np.zeros(6)]),
            trace=lt.Trace(pts, dt=1.0 / 49.0), seed=0, task="steady",
        )
        trace_path = tmp_path / "trace.json"
        tk.save_trace(trace_path, demo)
        code, records, _ = run(capsys, "check", "--trace", trace_path,
                               "--spec", "steady")
        assert code == 0
        verdict = [r for r in records if r["kind"] == "verdict"][0]
        assert verdict["satisfied"] is True
        assert verdict["hard_loss"] == 0.0

    def test_unknown_spec_exits_1(self, capsys):
        code, _, _ = run(capsys, "check",
                         "--trace", REPO / "data" / "pour_demo.json",
                         "--spec", "bogus")
        assert code == 1


class TestPlot:
    def test_scenario_plot_from_dataset(self, tiny_data, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code, records, _ = run(
            capsys, "plot", "--data", tiny_data, "--spec", "avoid", "--out", out,
        )
        assert code == 0
        root = ET.fromstring(out.read_text())
        assert root.get("version") == "1.1"
        assert records[0] == {"command": "plot", "out": str(out)}

    def test_scenario_plot_with_model_overlay(self, tiny_data, tmp_path, capsys):
        run(capsys, "train", "--data", tiny_data, "--epochs", "1",
            "--out", tmp_path / "run")
        out = tmp_path / "overlay.svg"
        code, _, _ = run(
            capsys, "plot", "--data", tiny_data,
            "--model", tmp_path / "run" / "model.json", "--out", out,
        )
        assert code == 0
        svg = out.read_text()
        ns = "{http://www.w3.org/2000/svg}"
        assert len(ET.fromstring(svg).findall(f".//{ns}polyline")) == 2

    def test_metrics_plot(self, tiny_data, tmp_path, capsys):
        run(capsys, "train", "--data", tiny_data, "--spec", "avoid",
            "--epochs", "3", "--out", tmp_path / "run")
        out = tmp_path / "loss.svg"
        code, _, _ = run(capsys, "plot",
                         "--metrics", tmp_path / "run" / "metrics.jsonl",
                         "--out", out)
        assert code == 0
        ET.fromstring(out.read_text())

    def test_six_dof_trace_plot_has_six_panels(self, tmp_path, capsys):
        out = tmp_path / "pose.svg"
        code, _, _ = run(capsys, "plot",
                         "--trace", REPO / "data" / "pour_demo.json",
                         "--out", out)
        assert code == 0
        ns = "{http://www.w3.org/2000/svg}"
        assert len(ET.fromstring(out.read_text()).findall(f".//{ns}polyline")) == 6

    def test_conflicting_sources_exit_1(self, tiny_data, tmp_path, capsys):
        code, _, _ = run(
            capsys, "plot", "--data", tiny_data,
            "--trace", REPO / "data" / "pour_demo.json",
            "--out", tmp_path / "x.svg",
        )
        assert code == 1


class TestExperiments:
    def test_one_shot_matrix_smoke(self, tmp_path, capsys):
        code, records, _ = run(
            capsys, "experiments", "--table", "1", "--tasks", "avoid",
            "--seeds", "1", "--epochs", "2", "--out", tmp_path,
        )
        assert code == 0
        (record,) = records
        assert record["table"] == 1
        assert record["task"] == "avoid"
        assert len(record["cells"]) == 1
        saved = json.loads((tmp_path / "one_shot.json").read_text())
        assert saved[0]["task"] == "avoid"

    def test_generalization_matrix_smoke(self, tmp_path, capsys):
        code, records, _ = run(
            capsys, "experiments", "--table", "2", "--tasks", "steady",
            "--seeds", "1", "--epochs", "1", "--count", "4",
            "--test-count", "2", "--out", tmp_path,
        )
        assert code == 0
        (record,) = records
        assert set(record["mean_test_Lc"]) == {
            "unconstrained", "train_only", "adversarial"
        }
        assert (tmp_path / "generalization.json").exists()

    def test_unknown_task_exits_1(self, tmp_path, capsys):
        code, _, _ = run(capsys, "experiments", "--table", "1",
                         "--tasks", "parkour", "--out", tmp_path)
        assert code == 1

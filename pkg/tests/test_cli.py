"""Command-line interface tests.

Oracle strategy: exported CSV rows are replayed against an
independently rebuilt trajectory through the public evaluate() call at
the parsed timestamps; determinism claims are checked as literal byte
equality between repeated runs; error contracts are checked as (exit
code, machine-readable stderr payload) pairs.
"""

import json
import math
import subprocess
import sys
from bisect import bisect_right

import numpy as np
import pytest
from jsonschema import Draft202012Validator

from jolt import cli
from jolt.backend import BACKEND, available_backends
from jolt.path_conversion import GeometricPath, path_to_trajectory
from jolt.spline_core import (BoundaryState, evaluate, synchronize_states,
                              uniform_limits)

LIMITS_OBJ = {"pos_max": 2.0 * math.pi, "vel_max": math.pi,
              "acc_max": 20.0, "jerk_max": 500.0}


def run_cli(capsys, *argv):
    """Invoke main() in-process; return (exit code, stdout, stderr)."""
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def stderr_payload(err):
    payload = json.loads(err.strip().splitlines()[-1])
    assert "error" in payload and "exit_code" in payload
    return payload


def bc_file(tmp_path, initial, final, limits=None, name="bc.json",
            **extra):
    doc = {"initial": initial, "final": final,
           "limits": dict(LIMITS_OBJ) if limits is None else limits}
    doc.update(extra)
    return write_json(tmp_path / name, doc)


def replay_rows(trajectory, rows, atol=1e-9):
    """Every CSV row must match evaluate() at its parsed timestamp."""
    segs = list(trajectory.segments) if hasattr(trajectory, "segments") \
        else [trajectory]
    ends = [seg.end_time for seg in segs]
    n = segs[0].n_joints
    for fields in rows:
        t = float(fields[0])
        seg = segs[min(bisect_right(ends, t), len(segs) - 1)]
        tau = t - seg.start_time
        expected = []
        for order in range(4):
            expected.extend(evaluate(js, tau, order, clip=True)
                            for js in seg.splines)
        got = [float(x) for x in fields[1:]]
        assert len(got) == 4 * n
        assert np.allclose(got, expected, rtol=0.0, atol=atol)


class TestGenerate:
    """Boundary-conditions synthesis command."""

    def test_rest_to_rest_csv_and_sidecar(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0]}, {"position": [1.0]})
        out = tmp_path / "out"
        code, stdout, _ = run_cli(capsys, "generate", bc, "--out", out,
                                  "--fixed-clock")
        assert code == 0
        assert "generate:" in stdout

        header, rows = read_csv(out / "trajectory.csv")
        assert header == ["t", "q1", "v1", "a1", "j1"]
        first, last = rows[0], rows[-1]
        assert float(first[0]) == 0.0
        assert abs(float(first[1])) <= 1e-9
        assert abs(float(last[1]) - 1.0) <= 1e-8
        assert abs(float(last[2])) <= 1e-8
        assert abs(float(last[3])) <= 1e-8

        sidecar = json.loads((out / "trajectory.json").read_text())
        assert sidecar["n_joints"] == 1
        assert sidecar["t_f"] > 0.0
        assert len(sidecar["c_star"]) == 1
        assert sidecar["csv"]["rows"] == len(rows)
        for key in ("position", "velocity", "acceleration"):
            assert max(sidecar["residuals"][key]) <= 1e-8
        assert sidecar["generated_at"] is None
        assert sidecar["generation_seconds"] == 0.0
        assert float(last[0]) == pytest.approx(sidecar["t_f"], abs=1e-9)

    def test_csv_replays_through_evaluate(self, tmp_path, capsys):
        initial = {"position": [0.2, -1.0], "velocity": [0.5, -0.25],
                   "acceleration": [1.0, 0.0]}
        final = {"position": [1.5, 0.75]}
        bc = bc_file(tmp_path, initial, final)
        out = tmp_path / "out"
        code, _, _ = run_cli(capsys, "generate", bc, "--out", out)
        assert code == 0

        limits = uniform_limits(2, **LIMITS_OBJ)
        ms = synchronize_states(
            BoundaryState(np.array(initial["position"]),
                          np.array(initial["velocity"]),
                          np.array(initial["acceleration"])),
            BoundaryState(np.array(final["position"]), np.zeros(2),
                          np.zeros(2)),
            limits, None)
        header, rows = read_csv(out / "trajectory.csv")
        assert header == ["t", "q1", "q2", "v1", "v2", "a1", "a2",
                          "j1", "j2"]
        replay_rows(ms, rows)

    def test_sidecar_coefficients_reproduce_rows(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0], "velocity": [1.0]},
                     {"position": [2.0]})
        out = tmp_path / "out"
        assert run_cli(capsys, "generate", bc, "--out", out)[0] == 0
        sidecar = json.loads((out / "trajectory.json").read_text())
        coeffs = np.array(sidecar["coefficients"])[0]
        _, rows = read_csv(out / "trajectory.csv")
        for fields in rows:
            t = min(float(fields[0]), sidecar["t_f"])
            assert float(fields[1]) == pytest.approx(
                np.polyval(coeffs, t), abs=1e-8)

    def test_zero_displacement_is_a_single_row(self, tmp_path, capsys):
        state = {"position": [0.5], "velocity": [0.0],
                 "acceleration": [0.0]}
        bc = bc_file(tmp_path, state, state)
        out = tmp_path / "out"
        code, _, _ = run_cli(capsys, "generate", bc, "--out", out)
        assert code == 0
        _, rows = read_csv(out / "trajectory.csv")
        assert len(rows) == 1
        assert json.loads((out / "trajectory.json").read_text())["t_f"] \
            == 0.0

    def test_per_joint_limits_list(self, tmp_path, capsys):
        limits = [dict(LIMITS_OBJ), dict(LIMITS_OBJ, vel_max=1.0)]
        bc = bc_file(tmp_path, {"position": [0.0, 0.0]},
                     {"position": [1.0, 1.0]}, limits=limits)
        out = tmp_path / "out"
        assert run_cli(capsys, "generate", bc, "--out", out)[0] == 0
        sidecar = json.loads((out / "trajectory.json").read_text())
        assert sidecar["limits"][1]["vel_max"] == 1.0

    def test_fixed_clock_runs_are_byte_identical(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0], "velocity": [0.3]},
                     {"position": [1.0]})
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_cli(capsys, "generate", bc, "--out", out,
                           "--fixed-clock")[0] == 0
            outs.append(out)
        for name in ("trajectory.csv", "trajectory.json"):
            assert (outs[0] / name).read_bytes() \
                == (outs[1] / name).read_bytes()

    def test_infeasible_initial_velocity_exits_2(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0], "velocity": [4.0]},
                     {"position": [1.0]})
        code, _, err = run_cli(capsys, "generate", bc,
                               "--out", tmp_path / "out")
        assert code == 2
        payload = stderr_payload(err)
        assert payload["error"] == "infeasible initial state"
        assert payload["quantity"] == "velocity"
        assert payload["joint"] == 0

    def test_infeasible_final_acceleration_exits_2(self, tmp_path,
                                                   capsys):
        bc = bc_file(tmp_path, {"position": [0.0]},
                     {"position": [1.0], "acceleration": [25.0]})
        code, _, err = run_cli(capsys, "generate", bc,
                               "--out", tmp_path / "out")
        assert code == 2
        assert stderr_payload(err)["error"] == "infeasible final state"

    def test_unknown_key_exits_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0]}, {"position": [1.0]},
                     frobs=1)
        code, _, err = run_cli(capsys, "generate", bc,
                               "--out", tmp_path / "out")
        assert code == 4
        assert "frobs" in stderr_payload(err)["error"]

    def test_wrong_type_exits_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": ["a"]}, {"position": [1.0]})
        assert run_cli(capsys, "generate", bc,
                       "--out", tmp_path / "out")[0] == 4

    def test_mismatched_joint_counts_exit_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0, 0.0]},
                     {"position": [1.0]})
        assert run_cli(capsys, "generate", bc,
                       "--out", tmp_path / "out")[0] == 4

    def test_state_vector_length_mismatch_exits_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path,
                     {"position": [0.0, 0.0], "velocity": [0.1]},
                     {"position": [1.0, 1.0]})
        assert run_cli(capsys, "generate", bc,
                       "--out", tmp_path / "out")[0] == 4

    def test_non_finite_number_exits_4(self, tmp_path, capsys):
        text = ('{"initial": {"position": [0]}, "final": '
                '{"position": [1]}, "limits": {"pos_max": Infinity, '
                '"vel_max": 3, "acc_max": 20, "jerk_max": 500}}')
        bad = tmp_path / "bc.json"
        bad.write_text(text, encoding="utf-8")
        code, _, err = run_cli(capsys, "generate", bad,
                               "--out", tmp_path / "out")
        assert code == 4
        assert "non-finite" in stderr_payload(err)["error"]

    def test_missing_file_exits_4(self, tmp_path, capsys):
        assert run_cli(capsys, "generate", tmp_path / "nope.json",
                       "--out", tmp_path / "out")[0] == 4

    def test_invalid_json_exits_4(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert run_cli(capsys, "generate", bad,
                       "--out", tmp_path / "out")[0] == 4


def path_file(tmp_path, nodes, name="path.json", **extra):
    doc = {"nodes": nodes}
    doc.update(extra)
    return write_json(tmp_path / "path.json", doc)


class TestConvert:
    """Waypoint-path conversion command."""

    def test_straight_two_node_path_is_one_segment(self, tmp_path,
                                                   capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [1.0, 0.0]])
        out = tmp_path / "out"
        code, _, _ = run_cli(capsys, "convert", pf, "--out", out,
                             "--fixed-clock")
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_segments"] == 1
        assert metrics["frechet_to_input"] <= 1e-6
        assert metrics["junctions"]["n_junctions"] == 0
        assert metrics["conversion_seconds"] == 0.0

    def test_corner_interpolation_cuts_the_corner(self, tmp_path,
                                                  capsys):
        # Short legs stay under --dmax, so the two-ahead merge replaces
        # the corner visit with one spline and an honest deviation.
        pf = path_file(tmp_path, [[0.0, 0.0], [0.4, 0.0], [0.4, 0.4]])
        out = tmp_path / "out"
        assert run_cli(capsys, "convert", pf, "--out", out)[0] == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["interpolation"] is True
        assert metrics["n_segments"] == 1
        assert metrics["frechet_to_input"] > 1e-2

    def test_long_corner_merges_straight_runs(self, tmp_path, capsys):
        # Legs longer than --dmax are densified; the merge then folds
        # the straight runs but keeps the rest corner, so the result
        # still traces the polyline.
        pf = path_file(tmp_path, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        out = tmp_path / "out"
        assert run_cli(capsys, "convert", pf, "--out", out)[0] == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_segments"] < metrics["n_input_nodes"]
        assert metrics["frechet_to_input"] <= 1e-6

    def test_no_interpolation_traces_the_polyline(self, tmp_path,
                                                  capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        out = tmp_path / "out"
        assert run_cli(capsys, "convert", pf, "--out", out,
                       "--no-interpolation")[0] == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["interpolation"] is False
        assert metrics["frechet_to_input"] <= 1e-6
        junctions = metrics["junctions"]
        assert junctions["max_time_gap"] <= 1e-9
        assert junctions["max_position_jump"] <= 1e-8
        assert junctions["max_velocity_jump"] <= 1e-8
        assert junctions["max_acceleration_jump"] <= 1e-8

        header, rows = read_csv(out / "trajectory.csv")
        assert header[:3] == ["t", "q1", "q2"]
        assert [float(x) for x in rows[0][1:5]] \
            == pytest.approx([0.0, 0.0, 0.0, 0.0], abs=1e-9)
        last = [float(x) for x in rows[-1]]
        assert last[1:3] == pytest.approx([1.0, 1.0], abs=1e-8)
        assert last[3:7] == pytest.approx([0.0] * 4, abs=1e-8)

    def test_csv_replays_through_evaluate(self, tmp_path, capsys):
        nodes = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]
        pf = path_file(tmp_path, nodes)
        out = tmp_path / "out"
        assert run_cli(capsys, "convert", pf, "--out", out)[0] == 0

        limits = uniform_limits(2, **LIMITS_OBJ)
        trajectory = path_to_trajectory(
            GeometricPath(np.array(nodes)), 0.5, 0.05, limits,
            lambda ms: True, mode="static")
        _, rows = read_csv(out / "trajectory.csv")
        replay_rows(trajectory, rows)

    def test_colliding_segment_is_rejected_with_exit_3(self, tmp_path,
                                                       capsys):
        # Sweeping the straight arm from the x-axis to the y-axis drags
        # the tip through the blocking sphere at 45 degrees, while both
        # endpoint configurations are collision-free.
        pf = path_file(tmp_path, [[0.0, 0.0], [math.pi / 2.0, 0.0]],
                       obstacles=[{"shape": "sphere",
                                   "center": [0.707, 0.707],
                                   "radius": 0.1}])
        code, _, err = run_cli(capsys, "convert", pf,
                               "--out", tmp_path / "out")
        assert code == 3
        payload = stderr_payload(err)
        assert payload["error"] == "colliding segment"
        assert payload["segment"] == 0

    def test_clear_obstacle_scene_converts(self, tmp_path, capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [0.5, 0.2]],
                       model={"link_lengths": [0.3, 0.3],
                              "radius": 0.02},
                       obstacles=[{"shape": "box", "center": [2.0, 2.0],
                                   "half_extents": [0.2, 0.2]}])
        out = tmp_path / "out"
        code, _, _ = run_cli(capsys, "convert", pf, "--out", out)
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_obstacles"] == 1
        assert metrics["frechet_to_input"] <= 1e-6

    def test_moving_obstacle_exits_4(self, tmp_path, capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [0.5, 0.2]],
                       obstacles=[{"shape": "sphere",
                                   "center": [2.0, 2.0], "radius": 0.1,
                                   "velocity": [0.1, 0.0]}])
        code, _, err = run_cli(capsys, "convert", pf,
                               "--out", tmp_path / "out")
        assert code == 4
        assert "static" in stderr_payload(err)["error"]

    def test_obstacles_without_model_need_two_joints(self, tmp_path,
                                                     capsys):
        pf = path_file(tmp_path, [[0.0] * 3, [0.5] * 3],
                       obstacles=[{"shape": "sphere",
                                   "center": [2.0, 2.0],
                                   "radius": 0.1}])
        assert run_cli(capsys, "convert", pf,
                       "--out", tmp_path / "out")[0] == 4

    def test_node_outside_position_limits_exits_2(self, tmp_path,
                                                  capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [10.0, 0.0]])
        code, _, err = run_cli(capsys, "convert", pf,
                               "--out", tmp_path / "out")
        assert code == 2
        payload = stderr_payload(err)
        assert payload["error"] == "path node outside position limits"
        assert payload["node"] == 1

    def test_duplicate_consecutive_nodes_exit_4(self, tmp_path, capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        assert run_cli(capsys, "convert", pf,
                       "--out", tmp_path / "out")[0] == 4

    def test_ragged_node_widths_exit_4(self, tmp_path, capsys):
        pf = path_file(tmp_path, [[0.0, 0.0], [1.0]])
        assert run_cli(capsys, "convert", pf,
                       "--out", tmp_path / "out")[0] == 4

    def test_single_node_exits_4(self, tmp_path, capsys):
        pf = path_file(tmp_path, [[0.0, 0.0]])
        assert run_cli(capsys, "convert", pf,
                       "--out", tmp_path / "out")[0] == 4


def sweep_file(tmp_path, scenarios, name="sweep.json", **extra):
    doc = {"scenarios": scenarios}
    doc.update(extra)
    return write_json(tmp_path / name, doc)


CLUTTER = {"archetype": "static_clutter", "name": "clutter"}
FAST_SHORT = {"archetype": "small_fast",
              "overrides": {"max_sim_time": 0.3}}


class TestSweep:
    """Scenario-set sweep command."""

    def test_static_clutter_run_succeeds(self, tmp_path, capsys):
        sf = sweep_file(tmp_path, [CLUTTER], T=[0.05], seeds=[7])
        out = tmp_path / "out"
        code, stdout, _ = run_cli(capsys, "sweep", sf, "--out", out,
                                  "--fixed-clock")
        assert code == 0
        assert "1/1 runs ok" in stdout

        header, rows = read_csv(out / "runs.csv")
        assert header[:4] == ["scenario", "T", "seed", "status"]
        assert len(rows) == 1
        row = dict(zip(header, rows[0]))
        assert row["scenario"] == "clutter"
        assert row["seed"] == "7"
        assert row["status"] == "ok"
        assert row["classic_success"] == "true"
        assert row["error"] == ""

        agg_header, agg_rows = read_csv(out / "aggregate.csv")
        agg = dict(zip(agg_header, agg_rows[0]))
        assert agg["n_runs"] == "1"
        assert agg["n_errors"] == "0"
        assert float(agg["mean_adjusted_success"]) == 1.0

        report = json.loads((out / "sweep.json").read_text())
        assert report["n_runs"] == 1
        assert report["n_errors"] == 0
        assert report["generated_at"] is None

    def test_fixed_clock_and_seeds_give_identical_bytes(self, tmp_path,
                                                        capsys):
        sf = sweep_file(tmp_path, [CLUTTER], T=[0.05], seeds=[7])
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_cli(capsys, "sweep", sf, "--out", out,
                           "--fixed-clock")[0] == 0
            outs.append(out)
        for name in ("runs.csv", "aggregate.csv", "sweep.json"):
            assert (outs[0] / name).read_bytes() \
                == (outs[1] / name).read_bytes()

    def test_empty_period_list_writes_header_only(self, tmp_path,
                                                  capsys):
        sf = sweep_file(tmp_path, [CLUTTER], T=[], seeds=[1, 2])
        out = tmp_path / "out"
        assert run_cli(capsys, "sweep", sf, "--out", out)[0] == 0
        _, rows = read_csv(out / "runs.csv")
        assert rows == []

    def test_per_run_failure_is_recorded_not_raised(self, tmp_path,
                                                    capsys):
        # solve_static rejects scenes with moving obstacles, so forcing
        # the static pipeline onto a dynamic archetype must produce an
        # error row while the sweep itself exits 0.
        bad = {"archetype": "small_fast", "name": "bad",
               "pipeline": "static"}
        sf = sweep_file(tmp_path, [bad, CLUTTER], T=[0.05], seeds=[3])
        out = tmp_path / "out"
        code, stdout, _ = run_cli(capsys, "sweep", sf, "--out", out)
        assert code == 0
        assert "1/2 runs ok" in stdout
        header, rows = read_csv(out / "runs.csv")
        by_name = {row[0]: dict(zip(header, row)) for row in rows}
        assert by_name["bad"]["status"] == "error"
        assert "ValueError" in by_name["bad"]["error"]
        assert by_name["bad"]["classic_success"] == ""
        assert by_name["clutter"]["status"] == "ok"
        agg_header, agg_rows = read_csv(out / "aggregate.csv")
        agg = {row[0]: dict(zip(agg_header, row)) for row in agg_rows}
        assert agg["bad"]["n_errors"] == "1"
        assert agg["bad"]["mean_adjusted_success"] == ""

    def test_flag_overrides_replace_config_lists(self, tmp_path, capsys):
        sf = sweep_file(tmp_path, [CLUTTER], T=[0.05, 0.1],
                        seeds=[1, 2])
        out = tmp_path / "out"
        assert run_cli(capsys, "sweep", sf, "--out", out, "--seed", 3,
                       "--period-ms", 40)[0] == 0
        _, rows = read_csv(out / "runs.csv")
        assert len(rows) == 1
        assert rows[0][1] == "0.040000000"
        assert rows[0][2] == "3"

    def test_worker_count_does_not_change_results(self, tmp_path,
                                                  capsys, monkeypatch):
        jobs = [dict(FAST_SHORT, name="f1"), dict(FAST_SHORT, name="f2")]
        sf = sweep_file(tmp_path, jobs, T=[0.05], seeds=[1])
        outs = []
        for sub, workers in (("a", "1"), ("b", "2")):
            monkeypatch.setenv("CFS45_THREADS", workers)
            out = tmp_path / sub
            assert run_cli(capsys, "sweep", sf, "--out", out,
                           "--fixed-clock")[0] == 0
            outs.append(out)
        for name in ("runs.csv", "aggregate.csv"):
            assert (outs[0] / name).read_bytes() \
                == (outs[1] / name).read_bytes()

    def test_bad_worker_cap_exits_4(self, tmp_path, capsys,
                                    monkeypatch):
        sf = sweep_file(tmp_path, [CLUTTER], T=[0.05], seeds=[1])
        for bad in ("abc", "0"):
            monkeypatch.setenv("CFS45_THREADS", bad)
            assert run_cli(capsys, "sweep", sf,
                           "--out", tmp_path / "out")[0] == 4

    def test_config_rejections_exit_4(self, tmp_path, capsys):
        cases = [
            {"scenarios": [CLUTTER], "frobs": 1},
            {"scenarios": []},
            {"scenarios": [{"archetype": "warp_core"}]},
            {"scenarios": [CLUTTER, CLUTTER]},
            {"scenarios": [{"archetype": "static_clutter",
                            "adversarial": True}]},
            {"scenarios": [{"archetype": "small_fast",
                            "n_obstacles": 3}]},
            {"scenarios": [CLUTTER], "mode": "turbo"},
            {"scenarios": [CLUTTER], "seeds": [1.5]},
            {"scenarios": [CLUTTER], "T": [-0.05]},
            {"scenarios": [{"archetype": "small_fast",
                            "overrides": {"grav": 9.8}}]},
        ]
        for i, doc in enumerate(cases):
            sf = write_json(tmp_path / f"sweep{i}.json", doc)
            code, _, err = run_cli(capsys, "sweep", sf,
                                   "--out", tmp_path / "out")
            assert code == 4, f"case {i}: {doc} -> {code}\n{err}"


class TestBench:
    """Kernel micro-benchmark command."""

    def test_single_sample_run(self, tmp_path, capsys):
        out = tmp_path / "out"
        code, stdout, _ = run_cli(capsys, "bench", "--count", 1,
                                  "--joints", 1, "--out", out)
        assert code == 0
        assert "bench:" in stdout
        _, rows = read_csv(out / "timings.csv")
        assert len(rows) == 1
        report = json.loads((out / "bench.json").read_text())
        assert report["count"] == 1
        assert report["n_joints"] == 1
        stats = report["results"][BACKEND]
        assert sum(stats["histogram"]["counts"]) == 1
        assert stats["n_success"] in (0, 1)

    def test_same_seed_means_same_problems(self, tmp_path, capsys):
        digests = []
        for sub, seed in (("a", 5), ("b", 5), ("c", 6)):
            out = tmp_path / sub
            assert run_cli(capsys, "bench", "--count", 100, "--joints",
                           2, "--seed", seed, "--out", out)[0] == 0
            report = json.loads((out / "bench.json").read_text())
            digests.append(report["problems_sha256"])
        assert digests[0] == digests[1]
        assert digests[0] != digests[2]

    def test_fixed_clock_is_byte_identical(self, tmp_path, capsys):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_cli(capsys, "bench", "--count", 20, "--joints", 2,
                           "--out", out, "--fixed-clock")[0] == 0
            outs.append(out)
        for name in ("timings.csv", "bench.json"):
            assert (outs[0] / name).read_bytes() \
                == (outs[1] / name).read_bytes()

    def test_compare_times_all_backends_on_one_problem_set(
            self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli(capsys, "bench", "--count", 200, "--joints", 2,
                       "--compare", "--out", out)[0] == 0
        report = json.loads((out / "bench.json").read_text())
        names = available_backends()
        assert sorted(report["results"]) == sorted(names)
        accepted = {report["results"][n]["n_success"] for n in names}
        assert len(accepted) == 1      # backends agree on feasibility
        header, rows = read_csv(out / "timings.csv")
        assert header == ["sample"] + [f"seconds_{n}" for n in names]
        assert len(rows) == 200

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfgf = write_json(tmp_path / "bench.json",
                          {"count": 5, "seed": 9, "n_joints": 2,
                           "bins": 4})
        out = tmp_path / "out"
        assert run_cli(capsys, "bench", cfgf, "--count", 7,
                       "--out", out)[0] == 0
        report = json.loads((out / "bench.json").read_text())
        assert report["count"] == 7          # flag wins
        assert report["seed"] == 9           # file value kept
        assert len(report["results"][BACKEND]["histogram"]["counts"]) \
            == 4

    def test_bad_inputs_exit_4(self, tmp_path, capsys):
        assert run_cli(capsys, "bench", "--count", 0,
                       "--out", tmp_path / "o1")[0] == 4
        cfgf = write_json(tmp_path / "bench.json", {"frobs": 1})
        assert run_cli(capsys, "bench", cfgf,
                       "--out", tmp_path / "o2")[0] == 4


class TestEntryPoint:
    """Parser behavior, exit codes and the module entry point."""

    def test_published_schemas_are_valid(self):
        for name, schema in cli.CONFIG_SCHEMAS.items():
            Draft202012Validator.check_schema(schema)

    def test_missing_command_exits_4(self, capsys):
        assert run_cli(capsys)[0] == 4

    def test_unknown_command_exits_4(self, capsys):
        code, _, err = run_cli(capsys, "frobnicate")
        assert code == 4
        assert stderr_payload(err)["exit_code"] == 4

    def test_unknown_flag_exits_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0]}, {"position": [1.0]})
        assert run_cli(capsys, "generate", bc, "--frobs")[0] == 4

    def test_bad_numeric_flags_exit_4(self, tmp_path, capsys):
        bc = bc_file(tmp_path, {"position": [0.0]}, {"position": [1.0]})
        assert run_cli(capsys, "generate", bc, "--period-ms", -1)[0] == 4
        pf = path_file(tmp_path, [[0.0, 0.0], [1.0, 0.0]])
        assert run_cli(capsys, "convert", pf, "--dmax", 0)[0] == 4
        assert run_cli(capsys, "convert", pf, "--delta-c", -2)[0] == 4

    def test_help_exits_0(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--help"])
        assert exc.value.code == 0
        capsys.readouterr()

    def test_module_runs_as_script(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "jolt.cli", "bench", "--count", "1",
             "--joints", "1", "--out", str(tmp_path)],
            capture_output=True, text=True, timeout=120)
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "bench.json").exists()

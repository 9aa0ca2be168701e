import math

import pytest

from mapfbench.core import CollisionTally
from mapfbench.harness import EpisodeRecord
from mapfbench.maps_io import InstanceSpec
from mapfbench.metrics import (
    aggregate_ci,
    build_report,
    coordination,
    meta_metric,
    pathfinding,
    per_instance_scores,
    radar_data,
    ratio_score,
    report_to_csv,
    report_to_json,
    scalability,
)


def make_record(alias, map_name="m0", seed=0, agents=2, soc=10, csr=True,
                problem="mapf", tag="random", throughput=0.0, collisions=0,
                makespan=None, runtime=0.5, max_steps=128, goals=0):
    return EpisodeRecord(
        instance=InstanceSpec(map_name=map_name, seed=seed, num_agents=agents,
                              max_episode_steps=max_steps, problem=problem,
                              dataset_tag=tag),
        algorithm_alias=alias,
        SoC=soc,
        makespan=makespan if makespan is not None else soc,
        csr=csr,
        goals_achieved=goals,
        throughput=throughput,
        collisions=CollisionTally(vertex=collisions),
        runtime_seconds=runtime,
        per_agent_goal_times=[],
    )


class TestRatioScore:
    def test_mapf_ratio(self):
        assert ratio_score(125, 100, "mapf", solved=True) == pytest.approx(0.8)

    def test_unsolved_scores_zero(self):
        assert ratio_score(50, 100, "mapf", solved=False) == 0.0

    def test_best_scores_one(self):
        assert ratio_score(100, 100, "mapf", solved=True) == 1.0
        assert ratio_score(0.4, 0.4, "lmapf") == 1.0

    def test_lmapf_ratio(self):
        assert ratio_score(0.25, 0.5, "lmapf") == pytest.approx(0.5)

    def test_lmapf_nonpositive_best_rejected(self):
        with pytest.raises(ValueError):
            ratio_score(0.1, 0.0, "lmapf")


class TestMetaMetric:
    def test_single_algorithm_self_best(self):
        records = {
            "solo": [
                make_record("solo", map_name=f"m{i}", soc=10 + i, csr=i != 2)
                for i in range(4)
            ]
        }
        scores = per_instance_scores(records, ["random"])
        assert sorted(scores["solo"]) == [0.0, 1.0, 1.0, 1.0]
        assert meta_metric(records, ["random"])["solo"] == pytest.approx(0.75)

    def test_identical_algorithms_both_score_one(self):
        recs = lambda alias: [make_record(alias, map_name=f"m{i}", soc=20) for i in range(3)]
        scores = meta_metric({"a": recs("a"), "b": recs("b")}, ["random"])
        assert scores == {"a": 1.0, "b": 1.0}

    def test_hand_computed_three_instance_fixture(self):
        # SoCs per instance: A: 100, 120, 150 / B: 100, 100, 300 (all solved)
        # best:                 100, 100, 150
        # A scores: 1, 100/120, 1          -> mean = (1 + 5/6 + 1) / 3
        # B scores: 1, 1, 0.5              -> mean = 5/6
        by_algo = {
            "A": [make_record("A", map_name=f"m{i}", soc=s) for i, s in enumerate((100, 120, 150))],
            "B": [make_record("B", map_name=f"m{i}", soc=s) for i, s in enumerate((100, 100, 300))],
        }
        scores = meta_metric(by_algo, ["random"])
        assert scores["A"] == pytest.approx((1 + 100 / 120 + 1) / 3)
        assert scores["B"] == pytest.approx((1 + 1 + 0.5) / 3)

    def test_nobody_solved_scores_zero(self):
        by_algo = {
            "A": [make_record("A", csr=False)],
            "B": [make_record("B", csr=False)],
        }
        scores = meta_metric(by_algo, ["random"])
        assert scores == {"A": 0.0, "B": 0.0}

    def test_lmapf_throughput_ratio(self):
        by_algo = {
            "A": [make_record("A", problem="lmapf", throughput=0.5)],
            "B": [make_record("B", problem="lmapf", throughput=0.25)],
        }
        scores = meta_metric(by_algo, ["random"])
        assert scores["A"] == 1.0
        assert scores["B"] == pytest.approx(0.5)

    def test_mismatched_instances_rejected(self):
        by_algo = {
            "A": [make_record("A", map_name="m1")],
            "B": [make_record("B", map_name="m2")],
        }
        with pytest.raises(ValueError, match="mismatched"):
            meta_metric(by_algo, ["random"])

    def test_monotonicity_in_soc(self):
        base = {
            "A": [make_record("A", soc=100)],
            "B": [make_record("B", soc=100)],
        }
        worse = {
            "A": [make_record("A", soc=100)],
            "B": [make_record("B", soc=140)],
        }
        assert meta_metric(worse, ["random"])["B"] < meta_metric(base, ["random"])["B"]


class TestScalability:
    def test_perfect_linear_scaling(self):
        assert scalability([(64, 2.0), (128, 4.0)]) == pytest.approx(1.0, abs=1e-9)

    def test_constant_runtime_is_superlinear(self):
        assert scalability([(64, 3.0), (128, 3.0)]) == pytest.approx(2.0)

    def test_quadrupling_runtime_is_sublinear(self):
        assert scalability([(64, 1.0), (128, 4.0)]) == pytest.approx(0.5)

    def test_geometric_mean_over_pairs(self):
        # 64->128 score 1.0, 128->256 score 0.5 -> sqrt(0.5)
        value = scalability([(64, 1.0), (128, 2.0), (256, 8.0)])
        assert value == pytest.approx(math.sqrt(0.5))

    def test_repeated_counts_averaged(self):
        assert scalability([(64, 1.0), (64, 3.0), (128, 4.0)]) == pytest.approx(1.0)

    def test_single_count_rejected(self):
        with pytest.raises(ValueError, match="two distinct"):
            scalability([(64, 1.0), (64, 2.0)])


class TestCoordination:
    def test_zero_collisions_perfect(self):
        assert coordination(0, 64, 256) == 1.0

    def test_paper_style_example(self):
        assert coordination(1638, 64, 256) == pytest.approx(0.9000244140625, abs=1e-12)

    def test_saturation_floor(self):
        assert coordination(64 * 256, 64, 256) == 0.0
        assert coordination(10**9, 64, 256) == 0.0


class TestPathfinding:
    def test_optimal_path_scores_one(self):
        assert pathfinding(True, 100, 100) == 1.0

    def test_not_found_scores_zero(self):
        assert pathfinding(False, 0, 100) == 0.0

    def test_longer_path_scores_lower(self):
        assert pathfinding(True, 125, 100) == pytest.approx(0.8)

    def test_broken_oracle_detected(self):
        with pytest.raises(ValueError, match="beats"):
            pathfinding(True, 90, 100)

    def test_zero_optimum(self):
        assert pathfinding(True, 0, 0) == 1.0


class TestAggregateCi:
    def test_zero_variance(self):
        assert aggregate_ci([1, 1, 1, 1]) == (1.0, 0.0)

    def test_two_point_half_width(self):
        mean, half = aggregate_ci([0, 1])
        assert mean == 0.5
        assert half == pytest.approx(0.98)

    def test_single_sample(self):
        assert aggregate_ci([0.7]) == (0.7, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_ci([])


class TestBuildReport:
    def make_records(self):
        records = []
        for alias, socs in (("fast", (10, 12)), ("slow", (20, 24))):
            for i, soc in enumerate(socs):
                records.append(make_record(alias, map_name=f"m{i}", soc=soc, collisions=4,
                                           makespan=soc))
            records.append(make_record(alias, tag="puzzles", map_name="p0", soc=6))
            for count, rt in ((8, 1.0), (16, 2.0)):
                records.append(make_record(alias, tag="warehouse", map_name="w0",
                                           agents=count, runtime=rt, seed=count))
        return records

    def test_report_structure(self):
        report = build_report(self.make_records())
        assert set(report.scores) == {"fast", "slow"}
        fast = report.scores["fast"]
        assert fast["performance"][0] == 1.0
        assert report.scores["slow"]["performance"][0] == pytest.approx(0.5)
        assert fast["cooperation"][0] == 1.0
        assert fast["scalability"][0] == pytest.approx(1.0)
        assert 0 <= fast["coordination"][0] <= 1
        assert report.provenance["performance"]["episodes"] == 2

    def test_json_csv_radar_outputs(self):
        report = build_report(self.make_records())
        doc = report_to_json(report)
        assert doc["algorithms"]["fast"]["performance"]["mean"] == 1.0
        csv_text = report_to_csv(report)
        assert csv_text.startswith("algorithm,")
        assert "fast" in csv_text and "slow" in csv_text
        radar = radar_data(report)
        assert radar["performance"]["fast"] == 1.0

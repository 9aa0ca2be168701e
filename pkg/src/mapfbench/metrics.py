"""Aggregation of per-episode indicators into the six meta-metrics.

Performance, Out-of-Distribution, and Cooperation share one formula (ratio
against the best algorithm in the comparison) and differ only in the map
sets they read: random+mazes, cities_tiles, and puzzles respectively.
Scalability is a runtime ratio across agent counts, Coordination discounts
shield events, and Pathfinding compares single-agent path costs against the
exact optimum.

"Best" always means the best value among the algorithms present in the
records, per instance, not a global optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Z_95 = 1.96

# metric name -> dataset tags whose episodes feed it
METRIC_DATASETS = {
    "performance": ("random", "mazes"),
    "out_of_distribution": ("cities_tiles",),
    "cooperation": ("puzzles",),
    "coordination": ("random", "mazes"),
    "scalability": ("warehouse",),
    "pathfinding": ("cities",),
}


@dataclass
class MetricReport:
    """Six meta-metrics per algorithm, each as (mean, 95% CI half-width).

    Metrics without any feeding episodes are absent from an algorithm's
    entry. provenance records which datasets and how many episodes were
    used per metric.
    """

    scores: dict = field(default_factory=dict)  # alias -> {metric: (mean, half_width)}
    provenance: dict = field(default_factory=dict)  # metric -> {datasets, episodes}


def aggregate_ci(samples) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width (zero for one sample)."""
    samples = list(samples)
    if not samples:
        raise ValueError("aggregate_ci needs at least one sample")
    n = len(samples)
    mean = sum(samples) / n
    if n == 1:
        return mean, 0.0
    var = sum((s - mean) ** 2 for s in samples) / (n - 1)
    return mean, Z_95 * math.sqrt(var / n)


def ratio_score(value: float, best: float, problem: str, solved: bool = True) -> float:
    """Best-relative score of one episode: best/SoC for solved one-shot
    episodes (0 when unsolved), throughput/best for lifelong ones."""
    if problem == "mapf":
        if not solved:
            return 0.0
        if best == 0:
            return 1.0 if value == 0 else 0.0
        if best < 0:
            raise ValueError(f"best must be non-negative, got {best}")
        return best / value
    if problem == "lmapf":
        if best <= 0:
            raise ValueError(f"lifelong best must be positive, got {best}")
        return value / best
    raise ValueError(f"unknown problem {problem!r}")


def per_instance_scores(records_by_algo: dict, datasets) -> dict:
    """Per-episode ratio scores for each algorithm on the given datasets.

    Every algorithm must have been run on the identical instance list; the
    per-instance best is taken across the supplied algorithms.
    """
    datasets = set(datasets)
    filtered = {
        alias: {r.instance.key(): r for r in records if r.instance.dataset_tag in datasets}
        for alias, records in records_by_algo.items()
    }
    keysets = {alias: set(recs) for alias, recs in filtered.items()}
    reference = next(iter(keysets.values()), set())
    for alias, keys in keysets.items():
        if keys != reference:
            raise ValueError(f"mismatched instance sets: {alias!r} differs from the others")

    scores: dict = {alias: [] for alias in filtered}
    for key in sorted(reference):
        group = {alias: recs[key] for alias, recs in filtered.items()}
        problem = next(iter(group.values())).instance.problem
        if problem == "mapf":
            solved = [r.SoC for r in group.values() if r.csr]
            best = min(solved) if solved else None
            for alias, rec in group.items():
                if best is None:
                    scores[alias].append(0.0)
                else:
                    scores[alias].append(ratio_score(rec.SoC, best, "mapf", solved=rec.csr))
        else:
            best = max(r.throughput for r in group.values())
            for alias, rec in group.items():
                if best <= 0:
                    # nobody achieved anything on this instance
                    scores[alias].append(0.0)
                else:
                    scores[alias].append(ratio_score(rec.throughput, best, "lmapf"))
    return scores


def meta_metric(records_by_algo: dict, datasets) -> dict:
    """Mean best-relative score per algorithm over the given datasets."""
    return {
        alias: (sum(vals) / len(vals) if vals else float("nan"))
        for alias, vals in per_instance_scores(records_by_algo, datasets).items()
    }


def scalability(runtimes) -> float:
    """Runtime-vs-agent-count scaling score, 1.0 meaning linear scaling.

    Takes (agent_count, wall_seconds) pairs, averages runtimes per count,
    scores each consecutive count pair as (rt1/rt2)/(n1/n2), and returns
    the geometric mean over pairs.
    """
    pairs = list(_pair_scores(runtimes))
    log_sum = sum(math.log(p) for p in pairs)
    return math.exp(log_sum / len(pairs))


def _pair_scores(runtimes):
    by_count: dict[int, list[float]] = {}
    for count, seconds in runtimes:
        if seconds <= 0:
            raise ValueError("runtimes must be positive")
        by_count.setdefault(int(count), []).append(float(seconds))
    if len(by_count) < 2:
        raise ValueError("scalability needs at least two distinct agent counts")
    counts = sorted(by_count)
    means = {c: sum(v) / len(v) for c, v in by_count.items()}
    for a, b in zip(counts, counts[1:]):
        yield (means[a] / means[b]) / (a / b)


def coordination(collisions: int, num_agents: int, episode_length: int) -> float:
    """1 minus the shield-event rate per agent-step, floored at zero."""
    if episode_length <= 0:
        return 1.0 if collisions == 0 else 0.0
    return max(0.0, 1.0 - collisions / (num_agents * episode_length))


def pathfinding(found: bool, path_cost: float, optimal_cost: float) -> float:
    """Closeness of a found path to the optimum: optimal/actual, 0 if none.

    The score grows toward 1.0 as the found path approaches the shortest
    one; a found cost below the optimum means the optimal oracle is broken.
    """
    if not found:
        return 0.0
    if path_cost < optimal_cost:
        raise ValueError(f"path cost {path_cost} beats the optimum {optimal_cost}")
    if optimal_cost == 0:
        return 1.0
    return optimal_cost / path_cost


def _optimal_cost(instance) -> float:
    from .maps_io import resolve_map, sample_instance
    from .solvers import bfs_distances

    grid = resolve_map(instance.map_name)
    starts, goals = sample_instance(grid, instance.num_agents, instance.seed)
    return float(bfs_distances(grid, goals[0])[starts[0]])


def build_report(records) -> MetricReport:
    """Assemble the six meta-metrics with confidence intervals.

    Pathfinding needs the instance maps resolvable in the registry so the
    optimal costs can be reconstructed from (map, seed).
    """
    by_algo: dict[str, list] = {}
    for rec in records:
        by_algo.setdefault(rec.algorithm_alias, []).append(rec)
    report = MetricReport()
    for alias in by_algo:
        report.scores[alias] = {}

    for metric in ("performance", "out_of_distribution", "cooperation"):
        datasets = METRIC_DATASETS[metric]
        scores = per_instance_scores(by_algo, datasets)
        for alias, vals in scores.items():
            if vals:
                report.scores[alias][metric] = aggregate_ci(vals)
        report.provenance[metric] = {
            "datasets": list(datasets),
            "episodes": len(next(iter(scores.values()), [])),
        }

    coord_total = 0
    for alias, recs in by_algo.items():
        vals = [
            coordination(r.collisions.total, r.instance.num_agents, r.makespan)
            for r in recs
            if r.instance.dataset_tag in METRIC_DATASETS["coordination"]
        ]
        if vals:
            report.scores[alias]["coordination"] = aggregate_ci(vals)
            coord_total = len(vals)
    report.provenance["coordination"] = {
        "datasets": list(METRIC_DATASETS["coordination"]),
        "episodes": coord_total,
    }

    scal_total = 0
    for alias, recs in by_algo.items():
        runtimes = [
            (r.instance.num_agents, r.runtime_seconds)
            for r in recs
            if r.instance.dataset_tag in METRIC_DATASETS["scalability"]
        ]
        counts = {c for c, _ in runtimes}
        if len(counts) >= 2:
            pair_vals = list(_pair_scores(runtimes))
            mean = scalability(runtimes)
            _, half = aggregate_ci(pair_vals)
            report.scores[alias]["scalability"] = (mean, half)
            scal_total = len(runtimes)
    report.provenance["scalability"] = {
        "datasets": list(METRIC_DATASETS["scalability"]),
        "episodes": scal_total,
    }

    path_total = 0
    for alias, recs in by_algo.items():
        vals = []
        for r in recs:
            if r.instance.dataset_tag not in METRIC_DATASETS["pathfinding"]:
                continue
            vals.append(pathfinding(r.csr, r.SoC, _optimal_cost(r.instance)))
        if vals:
            report.scores[alias]["pathfinding"] = aggregate_ci(vals)
            path_total = len(vals)
    report.provenance["pathfinding"] = {
        "datasets": list(METRIC_DATASETS["pathfinding"]),
        "episodes": path_total,
    }
    return report


def report_to_json(report: MetricReport) -> dict:
    return {
        "algorithms": {
            alias: {
                metric: {"mean": mean, "ci95": half}
                for metric, (mean, half) in metrics.items()
            }
            for alias, metrics in report.scores.items()
        },
        "provenance": report.provenance,
    }


def report_to_csv(report: MetricReport) -> str:
    metrics = sorted({m for entry in report.scores.values() for m in entry})
    lines = ["algorithm," + ",".join(f"{m},{m}_ci95" for m in metrics)]
    for alias in sorted(report.scores):
        cells = [alias]
        for metric in metrics:
            if metric in report.scores[alias]:
                mean, half = report.scores[alias][metric]
                cells += [f"{mean:.6f}", f"{half:.6f}"]
            else:
                cells += ["", ""]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def radar_data(report: MetricReport) -> dict:
    """metric name -> {algorithm: mean score}, for radar-style plots."""
    out: dict = {}
    for alias, entry in report.scores.items():
        for metric, (mean, _) in entry.items():
            out.setdefault(metric, {})[alias] = mean
    return out

"""Config-driven episode execution: suite expansion, parallel workers,
JSONL persistence, and the environment speed benchmark.

Parallelism is at episode granularity. Every episode owns a private
environment and policy, so results are a pure function of the config and
identical for any worker count; only wall-clock runtimes vary.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .core import CollisionTally, GridConfig, create_env, episode_indicators, step
from .maps_io import (
    AlgorithmSpec,
    EvalConfig,
    InstanceSpec,
    block_env_settings,
    iter_block_instances,
    resolve_map,
)
from .obs import export_global_state, observe_all
from .solvers import Policy, RandomPolicy, make_policy


@dataclass
class EpisodeRecord:
    instance: InstanceSpec
    algorithm_alias: str
    SoC: int
    makespan: int
    csr: bool
    goals_achieved: int
    throughput: float
    collisions: CollisionTally
    runtime_seconds: float
    per_agent_goal_times: list
    error: str | None = None


@dataclass
class RunManifest:
    config_digest: str
    code_version: str
    started_at: str
    finished_at: str
    worker_count: int
    record_count: int


def _env_config(spec: InstanceSpec, settings: dict | None) -> GridConfig:
    settings = settings or {}
    on_target = settings.get("on_target")
    if on_target is None:
        on_target = "restart" if spec.problem == "lmapf" else "nothing"
    return GridConfig(
        num_agents=spec.num_agents,
        obs_radius=settings.get("obs_radius", 5),
        max_episode_steps=spec.max_episode_steps,
        on_target=on_target,
        collision_system=settings.get("collision_system", "block_all"),
        seed=spec.seed,
        map=resolve_map(spec.map_name),
    )


def run_instance(spec: InstanceSpec, policy: Policy, settings: dict | None = None,
                 alias: str | None = None) -> EpisodeRecord:
    """Simulate one episode to completion and collect its indicators.

    The reported wall-clock runtime covers policy decisions and environment
    stepping, not instance construction.
    """
    try:
        env = create_env(_env_config(spec, settings))
    except Exception as exc:
        raise RuntimeError(f"instance {spec.key()}: {exc}") from exc
    t0 = time.perf_counter()
    policy.reset_states()
    while not env.done:
        actions = policy.act(export_global_state(env))
        step(env, actions)
    elapsed = max(time.perf_counter() - t0, 1e-9)
    stats = episode_indicators(env)
    return EpisodeRecord(
        instance=spec,
        algorithm_alias=alias or type(policy).__name__,
        SoC=stats.soc,
        makespan=stats.makespan,
        csr=stats.csr,
        goals_achieved=stats.goals_achieved,
        throughput=stats.throughput,
        collisions=stats.collisions,
        runtime_seconds=elapsed,
        per_agent_goal_times=stats.per_agent_goal_times,
    )


def _error_record(spec: InstanceSpec, alias: str, message: str) -> EpisodeRecord:
    return EpisodeRecord(
        instance=spec,
        algorithm_alias=alias,
        SoC=0,
        makespan=0,
        csr=False,
        goals_achieved=0,
        throughput=0.0,
        collisions=CollisionTally(),
        runtime_seconds=1e-9,
        per_agent_goal_times=[],
        error=message,
    )


def _run_task(task) -> EpisodeRecord:
    spec, settings, algo = task
    try:
        grid = resolve_map(spec.map_name)
        policy = make_policy(algo.name, grid, seed=spec.seed, params=algo.params)
        return run_instance(spec, policy, settings, alias=algo.alias)
    except Exception as exc:
        return _error_record(spec, algo.alias, str(exc))


def run_suite(config: EvalConfig, workers: int = 1):
    """Run every (algorithm x instance) episode of the config.

    Records come back in canonical order (algorithms outer, instances in
    expansion order) regardless of completion order. Failing instances
    yield error records; the suite continues.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    started = datetime.now(timezone.utc).isoformat()
    expanded = []
    for block in config.environment:
        settings = block_env_settings(block)
        for spec in iter_block_instances(block):
            expanded.append((spec, settings))
    tasks = [(spec, settings, algo) for algo in config.algorithms for spec, settings in expanded]

    if workers == 1:
        records = [_run_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))

    manifest = RunManifest(
        config_digest=config_digest(config),
        code_version=_code_version(),
        started_at=started,
        finished_at=datetime.now(timezone.utc).isoformat(),
        worker_count=workers,
        record_count=len(records),
    )
    return records, manifest


def config_digest(config: EvalConfig) -> str:
    payload = {
        "environment": config.environment,
        "algorithms": [
            {"alias": a.alias, "name": a.name, **a.params} for a in config.algorithms
        ],
        "views": config.views,
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _code_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("mapfbench")
    except PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# Persistence: one record per line, loadable even when truncated mid-suite


def record_to_dict(record: EpisodeRecord) -> dict:
    return {
        "instance": {
            "map_name": record.instance.map_name,
            "seed": record.instance.seed,
            "num_agents": record.instance.num_agents,
            "max_episode_steps": record.instance.max_episode_steps,
            "problem": record.instance.problem,
            "dataset_tag": record.instance.dataset_tag,
        },
        "algorithm_alias": record.algorithm_alias,
        "SoC": record.SoC,
        "makespan": record.makespan,
        "csr": record.csr,
        "goals_achieved": record.goals_achieved,
        "throughput": record.throughput,
        "collisions": {
            "obstacle": record.collisions.obstacle,
            "vertex": record.collisions.vertex,
            "edge": record.collisions.edge,
        },
        "runtime_seconds": record.runtime_seconds,
        "per_agent_goal_times": record.per_agent_goal_times,
        "error": record.error,
    }


def record_from_dict(data: dict) -> EpisodeRecord:
    return EpisodeRecord(
        instance=InstanceSpec(**data["instance"]),
        algorithm_alias=data["algorithm_alias"],
        SoC=data["SoC"],
        makespan=data["makespan"],
        csr=data["csr"],
        goals_achieved=data["goals_achieved"],
        throughput=data["throughput"],
        collisions=CollisionTally(**data["collisions"]),
        runtime_seconds=data["runtime_seconds"],
        per_agent_goal_times=data["per_agent_goal_times"],
        error=data.get("error"),
    )


def persist(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


def load(path) -> list[EpisodeRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: malformed record on line {lineno}: {exc}") from None
    return records


# ---------------------------------------------------------------------------
# Speed benchmark


def bench_speed(config: GridConfig, duration_seconds: float = 2.0):
    """Throughput of the environment under a random policy.

    Every step delivers one observation per agent into a preallocated
    buffer, mirroring what a learning loop consumes. Episodes auto-reset on
    termination. Returns (observations per second, env steps per second).
    """
    if duration_seconds < 0.1:
        raise ValueError("duration must be at least 0.1 seconds")
    env = create_env(config)
    policy = RandomPolicy(config.seed)
    n = config.num_agents
    side = 2 * config.obs_radius + 1
    out = np.empty((n, 3, side, side), dtype=np.uint8)
    scratch = np.zeros_like(env.padded)

    def one_step(env):
        observe_all(env, out=out, scratch=scratch)
        actions = policy._rng.integers(0, 5, n)
        step(env, actions)
        return env

    # warm up: trigger kernel compilation outside the timed window
    for _ in range(3):
        one_step(env)
        if env.done:
            env = create_env(config)

    steps = 0
    observations = 0
    t0 = time.perf_counter()
    deadline = t0 + duration_seconds
    while True:
        one_step(env)
        steps += 1
        observations += n
        if env.done:
            env = create_env(config)
        if time.perf_counter() >= deadline:
            break
    elapsed = time.perf_counter() - t0
    return observations / elapsed, steps / elapsed

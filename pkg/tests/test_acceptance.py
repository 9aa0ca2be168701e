"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test prints a [PASS] line on success so a -s run reads as a checklist;
a failing criterion fails its test. Budgeted to run alongside the unit
tests in a few minutes.
"""

import itertools
import time

import numpy as np
import pytest

from mapfbench.core import (
    Action,
    GridConfig,
    create_env,
    episode_indicators,
    resolve_moves,
    step,
)
from mapfbench.harness import bench_speed, persist, record_to_dict, run_instance, run_suite
from mapfbench.mapgen import MapGrid, gen_maze, gen_random, gen_warehouse
from mapfbench.maps_io import (
    AlgorithmSpec,
    EvalConfig,
    benchmark_suite_config,
    expand_config,
    register_map,
    sample_instance,
)
from mapfbench.metrics import coordination, meta_metric, pathfinding, scalability
from mapfbench.obs import export_global_state
from mapfbench.solvers import (
    AStarPolicy,
    PrioritizedWindowedPlanner,
    a_star,
    bfs_distances,
)
from mapfbench._kernels import count_components

from conftest import grid_from_rows
from oracle import free_adjacency_count, oracle_resolve


def ok(line: str) -> None:
    print(f"\n[PASS] {line}")


def test_collision_shield_soundness():
    """1e5 random-policy steps, 100 random 20x20 maps, 16 agents, both
    collision modes: no occupancy violation, swap, or obstacle occupation;
    wall time under 30 s."""
    total_steps = 0
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=[2024, 0]))
    for map_seed in range(100):
        for mode in ("block_all", "soft"):
            cfg = GridConfig(width=20, height=20, density=0.3, num_agents=16,
                             seed=map_seed, collision_system=mode,
                             max_episode_steps=10**9)
            env = create_env(cfg)
            cells_flat = env.grid.cells.ravel()
            width = env.grid.width
            idx = np.arange(16)
            prev = env.pos_r * width + env.pos_c
            occ_prev = np.full(env.grid.height * width, -1, dtype=np.int64)
            for _ in range(500):
                if env.done:
                    break
                step(env, rng.integers(0, 5, 16))
                total_steps += 1
                cur = env.pos_r * width + env.pos_c
                act = env.active
                occupied = cur[act]
                assert len(np.unique(occupied)) == act.sum(), "occupancy violation"
                assert not cells_flat[occupied].any(), "agent on an obstacle"
                d = np.abs(env.pos_r - prev // width) + np.abs(env.pos_c - prev % width)
                assert (d <= 1).all(), "teleport"
                occ_prev[:] = -1
                occ_prev[prev] = idx
                other = occ_prev[cur]
                moved = cur != prev
                swap = (
                    (other >= 0) & (other != idx) & moved
                    & (cur[other] == prev) & (cur != cur[other])
                )
                assert not swap.any(), "swap slipped through"
                prev = cur
    elapsed = time.perf_counter() - t0
    assert total_steps >= 100_000, f"only {total_steps} steps exercised"
    assert elapsed < 30, f"shield sweep took {elapsed:.1f}s"
    ok(f"collision shield soundness: {total_steps} steps, both modes, {elapsed:.1f}s")


def test_brute_force_move_resolution_equivalence():
    """resolve_moves matches the definitional oracle on exhaustive joint
    actions for up to 3 agents on 4x4 grids."""
    grids = [
        grid_from_rows(["....", "....", "....", "...."]),
        grid_from_rows(["....", ".#..", "..#.", "...."]),
        grid_from_rows(["#...", "..#.", "....", ".#.."]),
    ]
    deltas = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
    cases = 0

    def run_case(grid, blocked, placement, moves, mode):
        nonlocal cases
        desired = [(p[0] + d[0], p[1] + d[1]) for p, d in zip(placement, moves)]
        got_pos, got_tally = resolve_moves(placement, desired, grid, mode=mode)
        exp_pos, obst, vert, edge = oracle_resolve(
            list(placement), desired, blocked, 4, 4, mode
        )
        assert [tuple(p) for p in got_pos] == exp_pos, (placement, moves, mode)
        assert (got_tally.obstacle, got_tally.vertex, got_tally.edge) == (obst, vert, edge), (
            placement, moves, mode)
        cases += 1

    for grid in grids:
        blocked = {(r, c) for r in range(4) for c in range(4) if grid.cells[r, c]}
        free = [(r, c) for r in range(4) for c in range(4) if (r, c) not in blocked]
        for mode in ("block_all", "soft"):
            for a in free:
                for moves in itertools.product(deltas, repeat=1):
                    run_case(grid, blocked, (a,), moves, mode)
            for a, b in itertools.permutations(free, 2):
                for moves in itertools.product(deltas, repeat=2):
                    run_case(grid, blocked, (a, b), moves, mode)

    # 3-agent exhaustive joint actions on interacting placements
    grid = grids[1]
    blocked = {(r, c) for r in range(4) for c in range(4) if grid.cells[r, c]}
    free = [(r, c) for r in range(4) for c in range(4) if (r, c) not in blocked]
    near = [
        trio for trio in itertools.combinations(free, 3)
        if max(max(abs(p[0] - q[0]), abs(p[1] - q[1]))
               for p, q in itertools.combinations(trio, 2)) <= 2
    ]
    for trio in near:
        for mode in ("block_all", "soft"):
            for moves in itertools.product(deltas, repeat=3):
                run_case(grid, blocked, trio, moves, mode)
    ok(f"brute-force resolution equivalence: {cases} exhaustive cases")


def _determinism_config() -> EvalConfig:
    for i in range(8):
        register_map(f"det_{i}", gen_random(12, 12, 0.25, 100 + i))
    return EvalConfig(
        environment=[{
            "dataset_tag": "custom",
            "collision_system": "soft",
            "max_episode_steps": 48,
            "map_name": {"grid_search": [f"det_{i}" for i in range(8)]},
            "num_agents": {"grid_search": [4, 8]},
            "seed": {"grid_search": [0, 1, 2, 3]},
        }],
        algorithms=[
            AlgorithmSpec(alias="rnd", name="random"),
            AlgorithmSpec(alias="greedy", name="greedy"),
        ],
    )


def test_suite_determinism_across_worker_counts(tmp_path):
    """A 64-instance suite run with 1 and 8 workers produces identical
    JSONL records modulo runtime_seconds."""
    config = _determinism_config()
    records_1, _ = run_suite(config, workers=1)
    records_8, _ = run_suite(config, workers=8)
    assert len(records_1) == len(records_8) == 128  # 64 instances x 2 algorithms
    paths = []
    for tag, records in (("w1", records_1), ("w8", records_8)):
        path = tmp_path / f"{tag}.jsonl"
        persist(records, path)
        paths.append(path)

    def strip(path):
        import json

        lines = []
        for line in path.read_text().splitlines():
            data = json.loads(line)
            data.pop("runtime_seconds")
            lines.append(json.dumps(data, sort_keys=True))
        return lines

    assert strip(paths[0]) == strip(paths[1])
    ok("suite determinism: 1 vs 8 workers identical modulo runtime_seconds")


def test_astar_optimality_and_pathfinding_self_ratio():
    """a_star cost equals BFS distance on 1000 triples across all generator
    families; the pathfinding score of an A*-driven agent is exactly 1.0."""
    rng = np.random.Generator(np.random.Philox(key=[77, 0]))
    families = []
    for s in range(20):
        families.append(gen_random(20, 20, 0.3, s))
    for s in range(20):
        families.append(gen_maze(17 + 2 * (s % 3), 17 + 2 * (s % 3), s))
    families.append(gen_warehouse())
    checked = 0
    while checked < 1000:
        grid = families[int(rng.integers(0, len(families)))]
        free = np.flatnonzero(grid.cells.ravel() == 0)
        s, g = rng.integers(0, len(free), 2)
        start = divmod(int(free[s]), grid.width)
        goal = divmod(int(free[g]), grid.width)
        dist = bfs_distances(grid, goal)[start]
        path = a_star(grid, start, goal)
        if np.isinf(dist):
            assert path is None
        else:
            assert len(path) - 1 == int(dist), (start, goal)
        checked += 1

    scores = []
    for seed in range(10):
        grid = register_map(f"acc_city_{seed}", gen_random(48, 48, 0.25, 900 + seed))
        from mapfbench.maps_io import InstanceSpec

        spec = InstanceSpec(map_name=grid.name, seed=seed, num_agents=1,
                            max_episode_steps=512, problem="mapf", dataset_tag="cities")
        record = run_instance(spec, AStarPolicy(grid), alias="astar")
        starts, goals = sample_instance(grid, 1, seed)
        optimal = float(bfs_distances(grid, goals[0])[starts[0]])
        scores.append(pathfinding(record.csr, record.SoC, optimal))
    assert scores == [1.0] * 10
    ok(f"a_star optimality on {checked} triples; pathfinding self-ratio exactly 1.0")


def test_centralized_planner_collision_freedom():
    """100 maze episodes (up to 16 agents) driven by the windowed
    prioritized planner finish with an all-zero collision tally and
    Coordination exactly 1.0."""
    records = []
    for seed in range(100):
        size = 17 + 2 * (seed % 3)
        grid = gen_maze(size, size, seed)
        agents = min(8 + seed % 9, grid.num_free // 4)
        cfg = GridConfig(num_agents=agents, map=grid, seed=seed,
                         max_episode_steps=128, collision_system="soft")
        env = create_env(cfg)
        policy = PrioritizedWindowedPlanner(grid)
        policy.reset_states()
        while not env.done:
            step(env, policy.act(export_global_state(env)))
        stats = episode_indicators(env)
        tally = stats.collisions
        assert (tally.obstacle, tally.vertex, tally.edge) == (0, 0, 0), f"seed {seed}"
        records.append((tally.total, agents, stats.makespan))
    coord = [coordination(c, a, m) for c, a, m in records]
    assert coord == [1.0] * 100
    ok("centralized planner: 100 maze episodes, zero collisions, coordination 1.0")


def test_benchmark_suite_cardinality():
    """The full six-family benchmark expands to exactly 3376 instances with
    per-family counts 768/768/768/480/80/512."""
    config = benchmark_suite_config("mapf")
    specs = expand_config(config)
    counts = {}
    for s in specs:
        counts[s.dataset_tag] = counts.get(s.dataset_tag, 0) + 1
    expected = {
        "random": 768, "mazes": 768, "warehouse": 768,
        "puzzles": 480, "cities": 80, "cities_tiles": 512,
    }
    assert counts == expected
    assert len(specs) == 3376
    lifelong = expand_config(benchmark_suite_config("lmapf"))
    assert len(lifelong) == 3376
    ok("benchmark cardinality: 3376 instances, families 768/768/768/480/80/512")


def test_metric_formula_fixture():
    """Hand-built 3-algorithm x 4-instance fixture reproduces hand-computed
    Performance; Coordination and Scalability match to 1e-9."""
    from mapfbench.harness import EpisodeRecord
    from mapfbench.maps_io import InstanceSpec
    from mapfbench.core import CollisionTally

    def rec(alias, idx, soc, solved):
        return EpisodeRecord(
            instance=InstanceSpec(map_name=f"f{idx}", seed=0, num_agents=2,
                                  max_episode_steps=128, problem="mapf",
                                  dataset_tag="random"),
            algorithm_alias=alias, SoC=soc, makespan=soc, csr=solved,
            goals_achieved=0, throughput=0.0, collisions=CollisionTally(),
            runtime_seconds=0.1, per_agent_goal_times=[],
        )

    by_algo = {
        "X": [rec("X", 0, 100, True), rec("X", 1, 150, True),
              rec("X", 2, 120, True), rec("X", 3, 50, False)],
        "Y": [rec("Y", 0, 200, True), rec("Y", 1, 100, True),
              rec("Y", 2, 120, True), rec("Y", 3, 50, False)],
        "Z": [rec("Z", 0, 400, True), rec("Z", 1, 80, False),
              rec("Z", 2, 60, True), rec("Z", 3, 50, False)],
    }
    # per-instance bests over solved: 100, 100, 60, none
    # X: 1, 100/150, 60/120, 0 -> mean 0.541666...
    # Y: 100/200, 1, 0.5, 0    -> mean 0.5
    # Z: 0.25, 0, 1, 0         -> mean 0.3125
    scores = meta_metric(by_algo, ["random"])
    assert scores["X"] == pytest.approx((1 + 100 / 150 + 0.5 + 0) / 4, abs=1e-12)
    assert scores["Y"] == pytest.approx(0.5, abs=1e-12)
    assert scores["Z"] == pytest.approx(0.3125, abs=1e-12)

    assert coordination(1638, 64, 256) == pytest.approx(1 - 1638 / 16384, abs=1e-9)
    assert coordination(1638, 64, 256) == pytest.approx(0.9000244140625, abs=1e-9)
    assert scalability([(64, 2.0), (128, 4.0)]) == pytest.approx(1.0, abs=1e-9)
    ok("metric fixture: hand-computed performance, coordination, scalability")


def test_lifelong_throughput_semantics():
    """A scripted lifelong episode arriving every other step over 256 steps
    records exactly 128 goals and throughput 0.5."""
    strip = MapGrid(2, 1, np.zeros((1, 2), dtype=np.uint8), name="strip")
    cfg = GridConfig(num_agents=1, on_target="restart", map=strip,
                     max_episode_steps=256, seed=0)
    env = create_env(cfg, starts=[(0, 0)], goals=[(0, 1)])
    moves = 0
    while not env.done:
        if env.step_count % 2 == 0:
            target_c = int(env.goal_c[0])
            action = Action.RIGHT if target_c > env.pos_c[0] else Action.LEFT
        else:
            action = Action.WAIT
        step(env, [action])
    stats = episode_indicators(env)
    assert stats.goals_achieved == 128
    assert stats.throughput == pytest.approx(0.5, abs=0)
    ok("lifelong throughput: 128 goals / 256 steps = 0.5 exactly")


def test_environment_speed():
    """Single-thread bench: >= 10k env steps/s at 64 agents on 32x32 (OPS
    reported alongside); a 1024x1024 map with 10k agents steps at >= 1/s."""
    cfg = GridConfig(width=32, height=32, density=0.3, num_agents=64, seed=1,
                     max_episode_steps=256)
    ops, sps = bench_speed(cfg, duration_seconds=1.5)
    assert sps >= 10_000, f"only {sps:.0f} steps/s"

    big = GridConfig(width=1024, height=1024, density=0.3, num_agents=10_000,
                     seed=0, max_episode_steps=64)
    env = create_env(big)
    rng = np.random.Generator(np.random.Philox(key=[3, 3]))
    t0 = time.perf_counter()
    for _ in range(5):
        step(env, rng.integers(0, 5, big.num_agents))
    big_rate = 5 / (time.perf_counter() - t0)
    assert big_rate >= 1.0, f"large-map rate {big_rate:.2f} steps/s"
    ok(f"speed: {sps:,.0f} steps/s and {ops:,.0f} obs/s at 64 agents/32x32 "
       f"(reference 61k-205k OPS); 10k agents on 1024x1024 at {big_rate:.1f} steps/s")


def test_maze_generator_structure():
    """1000 seeds at 21x21: one free component every time; with loop
    probability zero the corridor graph is a tree."""
    for seed in range(1000):
        grid = gen_maze(21, 21, seed)
        assert count_components(grid.cells) == 1, f"seed {seed} disconnected"
        tree = gen_maze(21, 21, seed, loop_prob=0.0)
        free = int((tree.cells == 0).sum())
        assert free_adjacency_count(tree.cells) == free - 1, f"seed {seed} not a tree"
        assert count_components(tree.cells) == 1
    ok("maze generator: 1000 seeds connected; loop_prob=0 gives trees")


def test_svg_golden_determinism():
    """Fixed 8x8 frame and 10-step animation are byte-identical to the
    golden files."""
    from test_viz import GOLDEN_DIR, golden_frame_and_animation

    frame, animation = golden_frame_and_animation()
    assert frame == (GOLDEN_DIR / "frame_8x8.svg").read_text(encoding="utf-8")
    assert animation == (GOLDEN_DIR / "animation_8x8.svg").read_text(encoding="utf-8")
    frame2, animation2 = golden_frame_and_animation()
    assert frame == frame2 and animation == animation2
    ok("SVG determinism: golden frame and animation byte-identical")

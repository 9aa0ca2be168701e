"""Grid world state and simultaneous-move dynamics with collision shielding.

Supports the one-shot problem (every agent owns a fixed goal; the episode
ends when all agents have reached theirs) and the lifelong variant (an agent
reaching its goal is immediately handed a fresh one and the episode runs to
the step limit). Arrival semantics on the goal cell are selected by
``on_target``:

* ``nothing``  - agent keeps acting; its first arrival time is recorded
* ``disappear`` - agent is removed from the grid at first arrival
* ``restart``  - lifelong mode, goal is resampled on arrival

All randomness flows from ``GridConfig.seed`` through counter-based Philox
streams split per purpose, so e.g. lifelong goal refreshes never perturb
instance sampling and per-agent refresh draws are independent of the other
agents' arrival times.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from . import _kernels
from .mapgen import MapGrid, gen_random

ON_TARGET_MODES = ("nothing", "restart", "disappear")
COLLISION_SYSTEMS = ("block_all", "soft")

# Philox stream tags (mapgen owns 10+)
_STREAM_SAMPLING = 1
_STREAM_GOAL_REFRESH_BASE = 1 << 32


class Action(IntEnum):
    WAIT = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4


# row/col deltas indexed by Action
ACTION_DELTAS = np.array([(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)], dtype=np.int32)


@dataclass(frozen=True)
class GridConfig:
    """Full episode parameterization.

    When ``map`` is set, width/height/density are ignored and the raster is
    taken as-is; otherwise a random map is generated from the seed.
    """

    width: int = 16
    height: int = 16
    density: float = 0.3
    num_agents: int = 1
    obs_radius: int = 5
    max_episode_steps: int = 128
    on_target: str = "nothing"
    collision_system: str = "block_all"
    seed: int = 0
    map: MapGrid | None = None
    shared_reward: bool = False

    def __post_init__(self):
        if self.map is None and (self.width < 2 or self.height < 2):
            raise ValueError("width and height must be >= 2 when no map is given")
        if not 0 <= self.density < 1:
            raise ValueError("density must be in [0, 1)")
        if self.num_agents < 1:
            raise ValueError("num_agents must be >= 1")
        if self.obs_radius < 1:
            raise ValueError("obs_radius must be >= 1")
        if self.max_episode_steps < 1:
            raise ValueError("max_episode_steps must be >= 1")
        if self.on_target not in ON_TARGET_MODES:
            raise ValueError(f"on_target must be one of {ON_TARGET_MODES}")
        if self.collision_system not in COLLISION_SYSTEMS:
            raise ValueError(f"collision_system must be one of {COLLISION_SYSTEMS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class CollisionTally:
    """Counts of shielded events: one per blocked or reverted agent per step."""

    obstacle: int = 0
    vertex: int = 0
    edge: int = 0

    @property
    def total(self) -> int:
        return self.obstacle + self.vertex + self.edge

    def copy(self) -> "CollisionTally":
        return CollisionTally(self.obstacle, self.vertex, self.edge)


@dataclass
class StepOutcome:
    rewards: np.ndarray
    terminated: bool
    truncated: bool
    collision_events_this_step: CollisionTally


@dataclass
class EpisodeStats:
    """Primary indicators of a finished episode."""

    soc: int
    makespan: int
    csr: bool
    goals_achieved: int
    throughput: float
    collisions: CollisionTally
    per_agent_goal_times: list


class EnvState:
    """Mutable simulation state. Single writer; see module docstring.

    Distinct EnvStates share nothing mutable and may be stepped in parallel.
    """

    def __init__(self, config: GridConfig, grid: MapGrid, starts, goals):
        n = config.num_agents
        self.config = config
        self.grid = grid
        self.pos_r = np.ascontiguousarray([p[0] for p in starts], dtype=np.int32)
        self.pos_c = np.ascontiguousarray([p[1] for p in starts], dtype=np.int32)
        self.goal_r = np.ascontiguousarray([g[0] for g in goals], dtype=np.int32)
        self.goal_c = np.ascontiguousarray([g[1] for g in goals], dtype=np.int32)
        self.active = np.ones(n, dtype=np.bool_)
        self.step_count = 0
        self.goal_time = np.full(n, -1, dtype=np.int64)
        self.goals_achieved = 0
        self.collisions = CollisionTally()
        self.terminated = False
        self.truncated = False

        h, w, radius = grid.height, grid.width, config.obs_radius
        self.padded = np.ones((h + 2 * radius, w + 2 * radius), dtype=np.uint8)
        self.padded[radius : radius + h, radius : radius + w] = grid.cells
        self.occ_id = np.full((h, w), -1, dtype=np.int32)
        self.occ_id[self.pos_r, self.pos_c] = np.arange(n, dtype=np.int32)
        self._claim_cnt = np.zeros((h, w), dtype=np.int32)
        self._claim_min = np.full((h, w), -1, dtype=np.int32)
        self._des_r = np.empty(n, dtype=np.int32)
        self._des_c = np.empty(n, dtype=np.int32)
        self._revert = np.empty(n, dtype=np.bool_)
        flat = np.flatnonzero(grid.cells.ravel() == 0)
        self._free_flat = flat.astype(np.int64)
        self._refresh_streams: dict[int, np.random.Generator] = {}

        # agents placed on their own goal count as arrived at time 0; this is
        # a placement artifact, so it earns neither reward nor a goal credit
        on_goal = (self.pos_r == self.goal_r) & (self.pos_c == self.goal_c)
        if on_goal.any():
            self._handle_arrivals(np.flatnonzero(on_goal), initial=True)

    @property
    def num_agents(self) -> int:
        return self.config.num_agents

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated

    def positions(self) -> np.ndarray:
        return np.stack([self.pos_r, self.pos_c], axis=1)

    def goals(self) -> np.ndarray:
        return np.stack([self.goal_r, self.goal_c], axis=1)

    def _refresh_stream(self, agent: int) -> np.random.Generator:
        gen = self._refresh_streams.get(agent)
        if gen is None:
            key = [self.config.seed, _STREAM_GOAL_REFRESH_BASE + agent]
            gen = np.random.Generator(np.random.Philox(key=key))
            self._refresh_streams[agent] = gen
        return gen

    def _draw_goal(self, agent: int) -> tuple[int, int]:
        """Uniform over free cells excluding the agent's current cell."""
        free = self._free_flat
        if len(free) < 2:
            raise RuntimeError("cannot refresh goal: map has a single free cell")
        here = int(self.pos_r[agent]) * self.grid.width + int(self.pos_c[agent])
        gen = self._refresh_stream(agent)
        while True:
            cell = int(free[int(gen.integers(0, len(free)))])
            if cell != here:
                return cell // self.grid.width, cell % self.grid.width

    def _handle_arrivals(self, arrived: np.ndarray, initial: bool = False) -> None:
        mode = self.config.on_target
        if not initial:
            self.goals_achieved += len(arrived)
        if mode == "restart":
            for i in arrived:
                r, c = self._draw_goal(int(i))
                self.goal_r[i] = r
                self.goal_c[i] = c
            return
        first = arrived[self.goal_time[arrived] < 0]
        self.goal_time[first] = self.step_count
        if mode == "disappear":
            self.active[arrived] = False
            self.occ_id[self.pos_r[arrived], self.pos_c[arrived]] = -1


def create_env(
    config: GridConfig,
    map: MapGrid | None = None,
    starts=None,
    goals=None,
) -> EnvState:
    """Build the initial state for an episode.

    Starts and goals default to seeded sampling over the map's free cells
    (see maps_io.sample_instance); explicit placements are validated for
    bounds, obstacles, duplicates, and start-to-goal reachability.
    """
    grid = map if map is not None else config.map
    if grid is None:
        grid = gen_random(config.width, config.height, config.density, config.seed)
    n = config.num_agents
    if (starts is None) != (goals is None):
        raise ValueError("starts and goals must be given together")
    if n > grid.num_free:
        raise ValueError(f"{n} agents exceed {grid.num_free} free cells")
    if config.on_target == "restart" and grid.num_free < 2:
        raise ValueError("lifelong mode needs at least two free cells")

    if starts is None:
        from .maps_io import sample_instance

        starts, goals = sample_instance(grid, n, config.seed)
    else:
        starts = [(int(r), int(c)) for r, c in starts]
        goals = [(int(r), int(c)) for r, c in goals]
        if len(starts) != n or len(goals) != n:
            raise ValueError("need one start and one goal per agent")
        labels = _kernels.component_labels(grid.cells)
        seen = set()
        for kind, pts in (("start", starts), ("goal", goals)):
            for r, c in pts:
                if not (0 <= r < grid.height and 0 <= c < grid.width):
                    raise ValueError(f"{kind} ({r}, {c}) out of bounds")
                if grid.cells[r, c] == 1:
                    raise ValueError(f"{kind} ({r}, {c}) lies on an obstacle")
        for r, c in starts:
            if (r, c) in seen:
                raise ValueError(f"duplicate start cells at ({r}, {c})")
            seen.add((r, c))
        for (sr, sc), (gr, gc) in zip(starts, goals):
            if labels[sr, sc] != labels[gr, gc]:
                raise ValueError(f"unreachable goal ({gr}, {gc}) from start ({sr}, {sc})")

    return EnvState(config, grid, starts, goals)


def step(env: EnvState, actions) -> StepOutcome:
    """Advance one simultaneous-move step and return rewards and flags.

    Raises if the episode already ended. When all agents record an arrival
    on the same step the step limit is reached, termination wins over
    truncation (the two flags are mutually exclusive).
    """
    if env.done:
        raise RuntimeError("step called after episode end")
    acts = np.asarray(actions, dtype=np.int64)
    if acts.shape != (env.num_agents,):
        raise ValueError(f"expected {env.num_agents} actions, got shape {acts.shape}")
    if acts.min() < 0 or acts.max() >= len(ACTION_DELTAS):
        raise ValueError("actions must be integers in [0, 5)")

    on_goal_before = env.active & (env.pos_r == env.goal_r) & (env.pos_c == env.goal_c)

    np.add(env.pos_r, ACTION_DELTAS[acts, 0], out=env._des_r)
    np.add(env.pos_c, ACTION_DELTAS[acts, 1], out=env._des_c)
    radius = env.config.obs_radius
    obstacle, vertex, edge = _kernels.resolve_kernel(
        env.pos_r, env.pos_c, env._des_r, env._des_c, env.active,
        env.padded, radius, env.occ_id, env._claim_cnt, env._claim_min,
        env.config.collision_system == "soft", env._revert,
    )
    env.collisions.obstacle += obstacle
    env.collisions.vertex += vertex
    env.collisions.edge += edge

    env.step_count += 1
    arrived = (
        env.active
        & ~on_goal_before
        & (env.pos_r == env.goal_r)
        & (env.pos_c == env.goal_c)
    )
    arrived_idx = np.flatnonzero(arrived)
    if len(arrived_idx):
        env._handle_arrivals(arrived_idx)

    goals_this_step = len(arrived_idx)
    if env.config.shared_reward:
        rewards = np.full(env.num_agents, goals_this_step / env.num_agents)
    else:
        rewards = arrived.astype(np.float64)

    if env.config.on_target != "restart" and bool((env.goal_time >= 0).all()):
        env.terminated = True
    elif env.step_count >= env.config.max_episode_steps:
        env.truncated = True

    return StepOutcome(
        rewards=rewards,
        terminated=env.terminated,
        truncated=env.truncated,
        collision_events_this_step=CollisionTally(obstacle, vertex, edge),
    )


def resolve_moves(positions, desired, grid: MapGrid, active=None, mode: str = "block_all"):
    """Pure simultaneous-move resolution, detached from any episode.

    positions/desired are sequences of (row, col) with desired differing
    from the position by at most one unit move. Returns the new positions
    as an (n, 2) array together with the collision tally delta.
    """
    if mode not in COLLISION_SYSTEMS:
        raise ValueError(f"mode must be one of {COLLISION_SYSTEMS}")
    pos = np.asarray(positions, dtype=np.int32).reshape(-1, 2)
    des = np.asarray(desired, dtype=np.int32).reshape(-1, 2)
    n = len(pos)
    if active is None:
        active = np.ones(n, dtype=np.bool_)
    else:
        active = np.asarray(active, dtype=np.bool_)
    pos_r, pos_c = pos[:, 0].copy(), pos[:, 1].copy()
    des_r, des_c = des[:, 0].copy(), des[:, 1].copy()
    padded = np.ones((grid.height + 2, grid.width + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = grid.cells
    occ_id = np.full((grid.height, grid.width), -1, dtype=np.int32)
    for i in range(n):
        if active[i]:
            occ_id[pos_r[i], pos_c[i]] = i
    claim_cnt = np.zeros((grid.height, grid.width), dtype=np.int32)
    claim_min = np.full((grid.height, grid.width), -1, dtype=np.int32)
    revert = np.empty(n, dtype=np.bool_)
    obstacle, vertex, edge = _kernels.resolve_kernel(
        pos_r, pos_c, des_r, des_c, active, padded, 1,
        occ_id, claim_cnt, claim_min, mode == "soft", revert,
    )
    return np.stack([pos_r, pos_c], axis=1), CollisionTally(obstacle, vertex, edge)


def episode_indicators(env: EnvState, config: GridConfig | None = None) -> EpisodeStats:
    """Aggregate the primary indicators of a finished episode.

    Agents that never reached their goal contribute the step limit to the
    sum-of-costs and makespan.
    """
    if not env.done:
        raise RuntimeError("episode_indicators called mid-episode")
    config = config or env.config
    limit = config.max_episode_steps
    times = [int(t) if t >= 0 else None for t in env.goal_time]
    contributions = [limit if t is None else t for t in times]
    return EpisodeStats(
        soc=int(sum(contributions)),
        makespan=int(max(contributions)),
        csr=all(t is not None for t in times),
        goals_achieved=env.goals_achieved,
        throughput=env.goals_achieved / limit,
        collisions=env.collisions.copy(),
        per_agent_goal_times=times,
    )

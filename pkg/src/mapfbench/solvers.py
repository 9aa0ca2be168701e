"""Baseline policies: random actions, optimal single-agent search, greedy
decentralized replanning, and a centralized windowed prioritized planner.

Policies implement two methods: ``reset_states()`` clears episode state and
``act(state)`` maps a global-state snapshot to one action per agent. All of
them are deterministic given their construction arguments.
"""

from __future__ import annotations

import heapq

import numpy as np

from . import _kernels
from .core import Action
from .mapgen import MapGrid
from .obs import GlobalState

_STREAM_RANDOM_POLICY = 3

_MOVES = ((-1, 0, Action.UP), (1, 0, Action.DOWN), (0, -1, Action.LEFT), (0, 1, Action.RIGHT))


def bfs_distances(grid: MapGrid, goal) -> np.ndarray:
    """Exact 4-connected shortest-path distances to goal over free cells.

    Unreachable cells (and obstacles) are infinite.
    """
    gr, gc = int(goal[0]), int(goal[1])
    if grid.cells[gr, gc] == 1:
        raise ValueError(f"goal ({gr}, {gc}) lies on an obstacle")
    raw = _kernels.bfs_distances_raw(grid.cells, gr, gc)
    dist = raw.astype(np.float64)
    dist[raw < 0] = np.inf
    return dist


def a_star(grid: MapGrid, start, goal):
    """Optimal 4-connected path from start to goal, or None if unreachable.

    Ties are broken by (f, h, row, col), so equal inputs give equal paths.
    """
    return _astar_cells(grid.cells, (int(start[0]), int(start[1])), (int(goal[0]), int(goal[1])))


def _astar_cells(cells: np.ndarray, start, goal):
    h, w = cells.shape
    sr, sc = start
    gr, gc = goal
    if cells[sr, sc] == 1 or cells[gr, gc] == 1:
        return None
    if start == goal:
        return [start]

    def heur(r, c):
        return abs(r - gr) + abs(c - gc)

    g_best = {start: 0}
    parent = {}
    open_heap = [(heur(sr, sc), heur(sr, sc), sr, sc)]
    closed = set()
    while open_heap:
        f, hh, r, c = heapq.heappop(open_heap)
        if (r, c) in closed:
            continue
        if (r, c) == goal:
            path = [(r, c)]
            while (r, c) != start:
                r, c = parent[(r, c)]
                path.append((r, c))
            path.reverse()
            return path
        closed.add((r, c))
        g = g_best[(r, c)] + 1
        for dr, dc, _ in _MOVES:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or cells[nr, nc] == 1:
                continue
            if g < g_best.get((nr, nc), 1 << 60):
                g_best[(nr, nc)] = g
                parent[(nr, nc)] = (r, c)
                nh = heur(nr, nc)
                heapq.heappush(open_heap, (g + nh, nh, nr, nc))
    return None


def move_action(src, dst) -> int:
    """Action that moves from src to an adjacent (or equal) cell dst."""
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    for mr, mc, action in _MOVES:
        if (dr, dc) == (mr, mc):
            return int(action)
    if (dr, dc) == (0, 0):
        return int(Action.WAIT)
    raise ValueError(f"cells {src} and {dst} are not adjacent")


class Policy:
    """Behavioral interface: reset_states() then act() once per step."""

    def reset_states(self) -> None:
        pass

    def act(self, state: GlobalState) -> np.ndarray:
        raise NotImplementedError


class RandomPolicy(Policy):
    """Uniform over the five actions, from a seeded counter-based stream."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.reset_states()

    def reset_states(self) -> None:
        self._rng = np.random.Generator(
            np.random.Philox(key=[self.seed & 0xFFFFFFFFFFFFFFFF, _STREAM_RANDOM_POLICY])
        )

    def act(self, state: GlobalState) -> np.ndarray:
        return self._rng.integers(0, 5, len(state.positions))


class AStarPolicy(Policy):
    """Each agent follows its own optimal path, ignoring other agents.

    Paths are recomputed when the goal changes or the agent is pushed off
    its expected cell.
    """

    def __init__(self, grid: MapGrid, seed: int = 0):
        self.grid = grid
        self.seed = seed
        self.reset_states()

    def reset_states(self) -> None:
        self._plans: dict[int, list] = {}
        self._plan_goal: dict[int, tuple] = {}

    def act(self, state: GlobalState) -> np.ndarray:
        n = len(state.positions)
        actions = np.zeros(n, dtype=np.int64)
        for i in range(n):
            if not state.active[i]:
                continue
            pos = (int(state.positions[i, 0]), int(state.positions[i, 1]))
            goal = (int(state.goals[i, 0]), int(state.goals[i, 1]))
            plan = self._plans.get(i)
            if not plan or self._plan_goal.get(i) != goal or plan[0] != pos:
                plan = a_star(self.grid, pos, goal)
                self._plan_goal[i] = goal
            if not plan or len(plan) < 2:
                self._plans[i] = None
                continue
            actions[i] = move_action(pos, plan[1])
            self._plans[i] = plan[1:]
        return actions


class GreedyReplanPolicy(Policy):
    """Decentralized baseline: replan every step around visible agents.

    Other agents inside the observation radius are treated as temporary
    obstacles; if that blocks every path the agent replans on the bare map,
    and failing that it waits. Symmetric head-on situations may livelock;
    the shield keeps them safe.
    """

    def __init__(self, grid: MapGrid, seed: int = 0, radius: int = 5):
        self.grid = grid
        self.seed = seed
        self.radius = radius

    def reset_states(self) -> None:
        pass

    def act(self, state: GlobalState) -> np.ndarray:
        n = len(state.positions)
        actions = np.zeros(n, dtype=np.int64)
        pos_r = state.positions[:, 0]
        pos_c = state.positions[:, 1]
        for i in range(n):
            if not state.active[i]:
                continue
            pos = (int(pos_r[i]), int(pos_c[i]))
            goal = (int(state.goals[i, 0]), int(state.goals[i, 1]))
            if pos == goal:
                continue
            visible = (
                state.active
                & (np.abs(pos_r - pos[0]) <= self.radius)
                & (np.abs(pos_c - pos[1]) <= self.radius)
            )
            visible[i] = False
            overlay = self.grid.cells.copy()
            overlay[pos_r[visible], pos_c[visible]] = 1
            path = _astar_cells(overlay, pos, goal)
            if path is None:
                path = _astar_cells(self.grid.cells, pos, goal)
            if path is not None and len(path) >= 2:
                actions[i] = move_action(pos, path[1])
        return actions


class ReservationTable:
    """Space-time occupancy ledger for prioritized planning.

    Tracks vertex reservations (cell, t), edge traversals in both
    directions, and the current cells of agents that have not planned yet.
    The latter block timesteps up to ``static_until`` only (the execution
    window): beyond it plans may optimistically cross those cells, since
    everyone replans before that part would execute.
    """

    def __init__(self, static_until: int = 1 << 30):
        self.vertices: set[tuple] = set()
        self.edges: set[tuple] = set()
        self.static_cells: set[tuple] = set()
        self.static_until = static_until

    def vertex_free(self, cell, t) -> bool:
        if t <= self.static_until and cell in self.static_cells:
            return False
        return (cell, t) not in self.vertices

    def edge_free(self, a, b, t) -> bool:
        return (a, b, t) not in self.edges and (b, a, t) not in self.edges

    def reserve_path(self, cells) -> None:
        for t, cell in enumerate(cells):
            self.vertices.add((cell, t))
            if t and cells[t - 1] != cell:
                self.edges.add((cells[t - 1], cell, t - 1))


class PrioritizedWindowedPlanner(Policy):
    """Centralized planner: every ``window`` steps, plan all agents in index
    order with space-time A* up to ``horizon`` steps against a shared
    reservation table.

    Unplanned agents' current cells are blocked through the execution
    window until they plan, so every move that actually executes before the
    next replan is conflict-checked and the all-wait fallback is safe;
    executed trajectories therefore never trigger shield events. Beyond the
    window plans are optimistic about lower-priority agents moving aside.
    """

    def __init__(self, grid: MapGrid, window: int = 5, horizon: int = 20, seed: int = 0):
        if not 1 <= window <= horizon:
            raise ValueError("need horizon >= window >= 1")
        self.grid = grid
        self.window = window
        self.horizon = horizon
        self.seed = seed
        self._dist_fields: dict[tuple, np.ndarray] = {}
        self.reset_states()

    def reset_states(self) -> None:
        self._plans: dict[int, list] = {}
        self._offset = 0

    def _dist_to(self, goal) -> np.ndarray:
        field = self._dist_fields.get(goal)
        if field is None:
            if self.grid.cells[goal[0], goal[1]] == 1:
                field = np.full(self.grid.cells.shape, np.inf)
            else:
                field = bfs_distances(self.grid, goal)
            self._dist_fields[goal] = field
        return field

    def _plan_agent(self, start, goal, table: ReservationTable):
        """Space-time A* reaching the goal with a conflict-free stay suffix.

        Falls back to the best frontier node at the horizon when the goal
        is not reachable in time.
        """
        horizon = self.horizon
        h_field = self._dist_to(goal)
        cells = self.grid.cells
        height, width = cells.shape

        def vertex_free(cell, t) -> bool:
            return table.vertex_free(cell, t)

        def edge_free(a, b, t) -> bool:
            return table.edge_free(a, b, t)

        def suffix_free(cell, t) -> bool:
            return all(vertex_free(cell, tt) for tt in range(t, horizon + 1))

        start_h = h_field[start[0], start[1]]
        if not np.isfinite(start_h):
            start_h = abs(start[0] - goal[0]) + abs(start[1] - goal[1])
        best_terminal = None
        g_best = {(start, 0): 0}
        parent = {}
        heap = [(start_h, start_h, 0, start[0], start[1])]
        while heap:
            f, h, t, r, c = heapq.heappop(heap)
            node = ((r, c), t)
            g = g_best[node]
            if f > g + h:
                continue  # stale heap entry
            if (r, c) == goal and suffix_free((r, c), t):
                path = self._reconstruct(parent, node, start)
                path.extend([(r, c)] * (horizon + 1 - len(path)))
                return path
            if t == horizon:
                if best_terminal is None or (f, h, r, c) < best_terminal[0]:
                    best_terminal = ((f, h, r, c), node)
                continue
            for nr, nc, wait in ((r, c, True), (r - 1, c, False), (r + 1, c, False),
                                 (r, c - 1, False), (r, c + 1, False)):
                if not wait:
                    if not (0 <= nr < height and 0 <= nc < width) or cells[nr, nc] == 1:
                        continue
                    if not edge_free((r, c), (nr, nc), t):
                        continue
                if not vertex_free((nr, nc), t + 1):
                    continue
                nh = h_field[nr, nc]
                if not np.isfinite(nh):
                    continue
                step_cost = 0 if wait and (r, c) == goal else 1
                ng = g + step_cost
                nnode = ((nr, nc), t + 1)
                if ng < g_best.get(nnode, 1 << 60):
                    g_best[nnode] = ng
                    parent[nnode] = node
                    heapq.heappush(heap, (ng + nh, nh, t + 1, nr, nc))
        if best_terminal is not None:
            return self._reconstruct(parent, best_terminal[1], start)
        return None

    @staticmethod
    def _reconstruct(parent, node, start):
        path = [node[0]]
        while node != (start, 0):
            node = parent[node]
            path.append(node[0])
        path.reverse()
        return path

    def _replan(self, state: GlobalState) -> None:
        n = len(state.positions)
        table = ReservationTable(static_until=0)
        positions = [(int(state.positions[i, 0]), int(state.positions[i, 1])) for i in range(n)]
        for i in range(n):
            if state.active[i]:
                table.static_cells.add(positions[i])
        # agents parked on their goals plan last so their stay-in-place
        # plans yield to through-traffic (they dodge and return); everyone
        # else keeps ascending-index priority
        goals = [(int(state.goals[i, 0]), int(state.goals[i, 1])) for i in range(n)]
        order = sorted(
            (i for i in range(n) if state.active[i]),
            key=lambda i: (positions[i] == goals[i], i),
        )
        proposals: dict[int, list] = {}
        for i in order:
            table.static_cells.discard(positions[i])
            path = self._plan_agent(positions[i], goals[i], table)
            if path is None:
                path = [positions[i]] * (self.horizon + 1)
            table.reserve_path(path)
            proposals[i] = path
        self._plans = self._shield_window(state, positions, proposals)
        self._offset = 0

    def _shield_window(self, state: GlobalState, positions, proposals) -> dict:
        """Simulate the execution window through the engine's own move
        resolution and keep the realized prefixes.

        Proposed paths are optimistic about lower-priority agents giving
        way (their cells are blocked at t=0 only); running the window
        through resolve_moves de-conflicts them deterministically. The
        realized profile is what act() emits, so the environment replays it
        without a single shield event. An agent knocked off its proposal
        holds still until the next replan.
        """
        from .core import resolve_moves

        n = len(positions)
        active = state.active
        realized = {i: [positions[i]] for i in proposals}
        current = list(positions)
        on_plan = {i: True for i in proposals}
        for k in range(self.window):
            desired = []
            for i in range(n):
                if i in proposals and on_plan[i] and k + 1 < len(proposals[i]):
                    desired.append(proposals[i][k + 1])
                else:
                    desired.append(current[i])
            new_pos, _ = resolve_moves(current, desired, self.grid, active=active,
                                       mode="block_all")
            for i in proposals:
                cell = (int(new_pos[i, 0]), int(new_pos[i, 1]))
                if cell != desired[i]:
                    on_plan[i] = False
                realized[i].append(cell)
            current = [(int(new_pos[i, 0]), int(new_pos[i, 1])) for i in range(n)]
        return realized

    def act(self, state: GlobalState) -> np.ndarray:
        n = len(state.positions)
        if self._offset >= self.window or not self._plans:
            self._replan(state)
        else:
            for i in range(n):
                if not state.active[i] or i not in self._plans:
                    continue
                pos = (int(state.positions[i, 0]), int(state.positions[i, 1]))
                if self._plans[i][self._offset] != pos:
                    self._replan(state)  # plan diverged; should not happen
                    break
        actions = np.zeros(n, dtype=np.int64)
        k = self._offset
        for i in range(n):
            if not state.active[i]:
                continue
            plan = self._plans.get(i)
            if plan is None or k + 1 >= len(plan):
                continue
            actions[i] = move_action(plan[k], plan[k + 1])
        self._offset += 1
        return actions


POLICY_NAMES = ("random", "astar", "greedy", "windowed")


def make_policy(name: str, grid: MapGrid, seed: int = 0, params: dict | None = None) -> Policy:
    """Construct a policy by config name with its hyperparameter block."""
    params = dict(params or {})
    params.setdefault("seed", seed)
    if name == "random":
        return RandomPolicy(seed=params["seed"])
    if name == "astar":
        return AStarPolicy(grid, seed=params["seed"])
    if name == "greedy":
        return GreedyReplanPolicy(grid, seed=params["seed"], radius=params.get("radius", 5))
    if name == "windowed":
        return PrioritizedWindowedPlanner(
            grid,
            window=params.get("window", 5),
            horizon=params.get("horizon", 20),
            seed=params["seed"],
        )
    raise KeyError(f"unknown policy name {name!r}; known: {POLICY_NAMES}")

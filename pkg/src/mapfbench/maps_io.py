"""Map serialization, the named map registry, instance sampling, and
benchmark-suite expansion.

The benchmark dataset ships as generator seeds plus this module's suite
builder, so every instance is reconstructible without raster files. City
maps are synthetic stand-ins by default; users ingest real MovingAI rasters
over the same names when licensing allows.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mapgen import MapGrid, gen_city_standin, gen_maze, gen_random, gen_warehouse

_STREAM_SAMPLING = 1
_MAX_PLACEMENT_ATTEMPTS = 10_000

DATASET_TAGS = ("random", "mazes", "warehouse", "puzzles", "cities", "cities_tiles", "custom")

FREE_CHAR = "."
OBSTACLE_CHAR = "#"

_MOVINGAI_PASSABLE = frozenset(".G")
_MOVINGAI_BLOCKED = frozenset("@OTSW")


# ---------------------------------------------------------------------------
# ASCII map format


def parse_ascii(text: str) -> MapGrid:
    """Parse a '.'/'#' block, optionally preceded by a '! name' comment."""
    name = None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and lines[0].startswith("!"):
        name = lines[0][1:].strip() or None
        lines = lines[1:]
    if not lines:
        raise ValueError("empty map text")
    width = len(lines[0])
    rows = []
    for i, line in enumerate(lines):
        if len(line) != width:
            raise ValueError(f"ragged rows: line {i} has {len(line)} chars, expected {width}")
        row = []
        for ch in line:
            if ch == FREE_CHAR:
                row.append(0)
            elif ch == OBSTACLE_CHAR:
                row.append(1)
            else:
                raise ValueError(f"unknown character {ch!r} on line {i}")
        rows.append(row)
    cells = np.array(rows, dtype=np.uint8)
    return MapGrid(width, len(rows), cells, name=name, family="custom")


def to_ascii(grid: MapGrid) -> str:
    lines = []
    if grid.name:
        lines.append(f"! {grid.name}")
    for r in range(grid.height):
        lines.append("".join(OBSTACLE_CHAR if grid.cells[r, c] else FREE_CHAR for c in range(grid.width)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# MovingAI ingestion


def ingest_movingai(text: str, name: str | None = None) -> MapGrid:
    """Convert a MovingAI .map file. Passable terrain is '.' or 'G';
    everything else ('@', 'O', 'T', 'S', 'W') becomes an obstacle."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise ValueError("malformed header: expected 4 header lines")
    if not lines[0].lower().startswith("type"):
        raise ValueError(f"malformed header: expected 'type ...', got {lines[0]!r}")
    try:
        height = int(lines[1].split()[1])
        width = int(lines[2].split()[1])
    except (IndexError, ValueError):
        raise ValueError("malformed header: bad height/width lines") from None
    if lines[1].split()[0].lower() != "height" or lines[2].split()[0].lower() != "width":
        raise ValueError("malformed header: expected height then width")
    if lines[3].strip().lower() != "map":
        raise ValueError("malformed header: missing 'map' line")
    rows = [ln for ln in lines[4:] if ln]
    if len(rows) != height:
        raise ValueError(f"expected {height} map rows, found {len(rows)}")
    cells = np.ones((height, width), dtype=np.uint8)
    for r, line in enumerate(rows):
        if len(line) != width:
            raise ValueError(f"row {r} has {len(line)} chars, expected {width}")
        for c, ch in enumerate(line):
            if ch in _MOVINGAI_PASSABLE:
                cells[r, c] = 0
            elif ch not in _MOVINGAI_BLOCKED:
                raise ValueError(f"unknown terrain character {ch!r} at row {r}")
    return MapGrid(width, height, cells, name=name, family="imported")


def slice_tiles(grid: MapGrid, tile: int) -> list[MapGrid]:
    """Cut a map into non-overlapping tile x tile pieces, row-major."""
    if grid.width % tile or grid.height % tile:
        raise ValueError(f"tile {tile} does not divide {grid.width}x{grid.height}")
    base = grid.name or "map"
    tiles = []
    idx = 0
    for r0 in range(0, grid.height, tile):
        for c0 in range(0, grid.width, tile):
            piece = np.ascontiguousarray(grid.cells[r0 : r0 + tile, c0 : c0 + tile])
            tiles.append(MapGrid(tile, tile, piece, name=f"{base}_{idx:02d}", family=grid.family))
            idx += 1
    return tiles


# ---------------------------------------------------------------------------
# Instance sampling


def sample_instance(grid: MapGrid, num_agents: int, seed: int, problem: str = "mapf"):
    """Draw starts and goals: starts pairwise distinct, goals pairwise
    distinct, each goal reachable from its start and different from it.

    Uniform draws over free cells with rejection; a draw that cannot be
    placed within the attempt bound signals an overcrowded or fragmented
    map. Deterministic per (map, num_agents, seed).
    """
    free = np.flatnonzero(grid.cells.ravel() == 0)
    if num_agents > len(free):
        raise ValueError(f"{num_agents} agents exceed {len(free)} free cells")
    labels = _kernels.component_labels(grid.cells)
    labels_flat = labels.ravel()
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, _STREAM_SAMPLING]))
    width = grid.width

    used_starts: set[int] = set()
    used_goals: set[int] = set()
    starts = []
    goals = []
    for _ in range(num_agents):
        # start and goal are drawn as a pair so a start never strands in a
        # pocket that cannot host a goal
        for _ in range(_MAX_PLACEMENT_ATTEMPTS):
            start = int(free[int(rng.integers(0, len(free)))])
            goal = int(free[int(rng.integers(0, len(free)))])
            if (
                start not in used_starts
                and goal not in used_goals
                and goal != start
                and labels_flat[start] == labels_flat[goal]
            ):
                break
        else:
            raise RuntimeError(
                f"could not place {num_agents} agents on map "
                f"{grid.name or '?'} after {_MAX_PLACEMENT_ATTEMPTS} attempts; "
                f"the map is likely overcrowded or fragmented"
            )
        used_starts.add(start)
        used_goals.add(goal)
        starts.append(start)
        goals.append(goal)

    to_rc = lambda cell: (cell // width, cell % width)
    return [to_rc(s) for s in starts], [to_rc(g) for g in goals]


# ---------------------------------------------------------------------------
# Named registry


_registry: dict[str, MapGrid] = {}
_registry_lock = threading.Lock()


def register_map(name: str, grid: MapGrid) -> MapGrid:
    grid = grid.renamed(name)
    with _registry_lock:
        _registry[name] = grid
    return grid


def resolve_map(name: str) -> MapGrid:
    try:
        return _registry[name]
    except KeyError:
        raise KeyError(f"unknown map name {name!r}; register it first") from None


def registered_maps() -> list[str]:
    return sorted(_registry)


def clear_registry() -> None:
    with _registry_lock:
        _registry.clear()


# ---------------------------------------------------------------------------
# Evaluation configs


@dataclass(frozen=True)
class InstanceSpec:
    map_name: str
    seed: int
    num_agents: int
    max_episode_steps: int
    problem: str  # "mapf" | "lmapf"
    dataset_tag: str

    def key(self) -> str:
        return f"{self.map_name}:s{self.seed}:a{self.num_agents}"


@dataclass(frozen=True)
class AlgorithmSpec:
    alias: str
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class EvalConfig:
    """Mirrors the config file: environment blocks, algorithms, views.

    Environment fields seed / num_agents / map_name may carry a
    {grid_search: [...]} marker; the remaining fields are scalars.
    """

    environment: list[dict]
    algorithms: list[AlgorithmSpec]
    views: list[dict] = field(default_factory=list)


_GRID_FIELDS = ("map_name", "num_agents", "seed")


def parse_eval_config(data) -> EvalConfig:
    """Build an EvalConfig from a parsed YAML/JSON document or a dict."""
    if isinstance(data, str):
        import yaml

        data = yaml.safe_load(data)
    if not isinstance(data, dict) or "environment" not in data:
        raise ValueError("config must be a mapping with an 'environment' key")
    env = data["environment"]
    blocks = env if isinstance(env, list) else [env]
    for block in blocks:
        if not isinstance(block, dict):
            raise ValueError("each environment block must be a mapping")
    algorithms = []
    for entry in data.get("algorithms", []):
        entry = dict(entry)
        try:
            alias = entry.pop("alias")
            name = entry.pop("name")
        except KeyError as exc:
            raise ValueError(f"algorithm entry missing {exc}") from None
        algorithms.append(AlgorithmSpec(alias=alias, name=name, params=entry))
    aliases = [a.alias for a in algorithms]
    if len(set(aliases)) != len(aliases):
        raise ValueError("algorithm aliases must be unique")
    return EvalConfig(environment=blocks, algorithms=algorithms, views=list(data.get("views", [])))


def _grid_values(block: dict, key: str, default=None) -> list:
    value = block.get(key, default)
    if isinstance(value, dict):
        if set(value) != {"grid_search"}:
            raise ValueError(f"field {key!r}: only a grid_search marker is allowed")
        values = value["grid_search"]
        if not isinstance(values, list) or not values:
            raise ValueError(f"field {key!r}: grid_search needs a non-empty list")
        return list(values)
    if isinstance(value, list):
        raise ValueError(f"field {key!r}: wrap list values in a grid_search marker")
    if value is None:
        raise ValueError(f"environment block is missing {key!r}")
    return [value]


def iter_block_instances(block: dict):
    """Yield InstanceSpec objects for one environment block.

    Expansion order is maps outer, agent counts middle, seeds inner.
    """
    on_target = block.get("on_target", "nothing")
    problem = "lmapf" if on_target == "restart" else "mapf"
    tag = block.get("dataset_tag", "custom")
    if tag not in DATASET_TAGS:
        raise ValueError(f"unknown dataset_tag {tag!r}")
    max_steps = int(block.get("max_episode_steps", 128))
    for map_name in _grid_values(block, "map_name"):
        resolve_map(str(map_name))
        for num_agents in _grid_values(block, "num_agents", 1):
            for seed in _grid_values(block, "seed", 0):
                yield InstanceSpec(
                    map_name=str(map_name),
                    seed=int(seed),
                    num_agents=int(num_agents),
                    max_episode_steps=max_steps,
                    problem=problem,
                    dataset_tag=tag,
                )


def expand_config(config: EvalConfig) -> list[InstanceSpec]:
    """Expand every environment block into its instance list."""
    specs = []
    for block in config.environment:
        specs.extend(iter_block_instances(block))
    return specs


def block_env_settings(block: dict) -> dict:
    """Scalar environment settings a block applies to all its instances."""
    return {
        "on_target": block.get("on_target", "nothing"),
        "collision_system": block.get("collision_system", "block_all"),
        "obs_radius": int(block.get("obs_radius", 5)),
    }


# ---------------------------------------------------------------------------
# Benchmark suite: six dataset families, reconstructible from seeds

PUZZLE_MAPS = [
    "#####\n.....\n##.##\n.....\n#####",
    "##.##\n##.##\n.....\n##.##\n##.##",
    ".....\n.###.\n.###.\n.###.\n.....",
    "..#..\n..#..\n.....\n..#..\n..#..",
    "....#\n###.#\n#...#\n#.###\n#....",
    ".....\n####.\n.....\n.####\n.....",
    "#.#.#\n.....\n#.#.#\n.....\n#.#.#",
    ".....\n.....\n##.##\n.....\n.....",
    ".....\n##.##\n##.##\n##.##\n#...#",
    ".....\n.###.\n.....\n.###.\n.....",
    "..#..\n..#..\n#...#\n..#..\n..#..",
    ".....\n.#.#.\n.#.#.\n.#.#.\n.....",
    "..#..\n.....\n#...#\n.#...\n.....",
    "#####\n#####\n.....\n##.##\n#####",
    ".###.\n.###.\n.....\n.###.\n.###.",
    ".....\n.####\n.....\n####.\n.....",
]

RANDOM_MAP_COUNT = 128
MAZE_MAP_COUNT = 128
CITY_COUNT = 8
CITY_SIZE = 256
CITY_TILE = 64
BENCHMARK_RANDOM_DENSITY = 0.3


def register_benchmark_maps() -> list[str]:
    """Generate and register every map of the six families. Idempotent."""
    names = []
    for i in range(RANDOM_MAP_COUNT):
        size = 17 + i % 5
        names.append(register_map(f"random_{i:03d}", gen_random(size, size, BENCHMARK_RANDOM_DENSITY, i)).name)
    for i in range(MAZE_MAP_COUNT):
        size = 17 + 2 * (i % 3)
        names.append(register_map(f"maze_{i:03d}", gen_maze(size, size, i)).name)
    names.append(register_map("warehouse", gen_warehouse()).name)
    for i, text in enumerate(PUZZLE_MAPS):
        names.append(register_map(f"puzzle_{i:02d}", parse_ascii(text)).name)
    for i in range(CITY_COUNT):
        city = register_map(f"city_{i}", gen_city_standin(i, CITY_SIZE))
        names.append(city.name)
        for tile in slice_tiles(city, CITY_TILE):
            names.append(register_map(tile.name, tile).name)
    return names


def benchmark_suite_config(problem: str = "mapf", algorithms=None) -> EvalConfig:
    """The full six-family evaluation suite (3376 instances).

    City instances are always single-agent one-shot episodes regardless of
    the requested problem; they exist to probe pathfinding quality.
    """
    if problem not in ("mapf", "lmapf"):
        raise ValueError("problem must be 'mapf' or 'lmapf'")
    register_benchmark_maps()
    lifelong = problem == "lmapf"
    on_target = "restart" if lifelong else "nothing"
    steps = 256 if lifelong else 128

    def block(tag, maps, agents, seeds, max_steps, target=on_target):
        return {
            "dataset_tag": tag,
            "on_target": target,
            "collision_system": "soft",
            "obs_radius": 5,
            "max_episode_steps": max_steps,
            "map_name": {"grid_search": maps},
            "num_agents": {"grid_search": agents},
            "seed": {"grid_search": seeds},
        }

    environment = [
        block("random", [f"random_{i:03d}" for i in range(RANDOM_MAP_COUNT)],
              [8, 16, 24, 32, 48, 64], [0], steps),
        block("mazes", [f"maze_{i:03d}" for i in range(MAZE_MAP_COUNT)],
              [8, 16, 24, 32, 48, 64], [0], steps),
        block("warehouse", ["warehouse"], [32, 64, 96, 128, 160, 192],
              list(range(128)), steps),
        block("puzzles", [f"puzzle_{i:02d}" for i in range(len(PUZZLE_MAPS))],
              [2, 3, 4], list(range(10)), steps),
        block("cities", [f"city_{i}" for i in range(CITY_COUNT)], [1],
              list(range(10)), 2048, target="nothing"),
        block("cities_tiles",
              [f"city_{i}_{k:02d}" for i in range(CITY_COUNT) for k in range(16)],
              [64, 128, 192, 256], [0], 256),
    ]
    algorithms = algorithms or [AlgorithmSpec(alias="random", name="random")]
    return EvalConfig(environment=environment, algorithms=list(algorithms), views=[])

"""Procedural map generators: random obstacle fields, corridor mazes, warehouses.

Every generator is a pure function of its arguments; the same arguments
always produce the same raster.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels

MAP_FAMILIES = ("random", "maze", "warehouse", "imported", "custom")

# Philox stream tags, one per consumer so draws never interleave.
_STREAM_RANDOM_MAP = 10
_STREAM_MAZE = 11


@dataclass(frozen=True)
class MapGrid:
    """Immutable obstacle raster. cells[r, c] == 1 marks an obstacle."""

    width: int
    height: int
    cells: np.ndarray
    name: str | None = None
    family: str = "custom"

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.shape != (self.height, self.width):
            raise ValueError(
                f"cells shape {cells.shape} does not match {self.height}x{self.width}"
            )
        if self.family not in MAP_FAMILIES:
            raise ValueError(f"unknown map family {self.family!r}")
        if int(cells.sum()) == self.width * self.height:
            raise ValueError("map has no free cells")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def num_free(self) -> int:
        return self.width * self.height - int(self.cells.sum())

    def renamed(self, name: str) -> "MapGrid":
        return replace(self, name=name)

    def __eq__(self, other):
        if not isinstance(other, MapGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self):
        return hash((self.width, self.height, self.cells.tobytes()))


@dataclass(frozen=True)
class WarehouseParams:
    """Layout knobs for the shelf-grid warehouse generator.

    Defaults produce the 33x46 benchmark footprint: a 1-cell free frame,
    8 rows of 5 shelf blocks (8 wide, 3 tall), unit-width aisles.
    """

    shelf_width: int = 8
    shelf_height: int = 3
    aisle_width: int = 1
    shelves_per_row: int = 5
    shelf_rows: int = 8
    border_margin: int = 1

    def __post_init__(self):
        dims = (
            self.shelf_width,
            self.shelf_height,
            self.aisle_width,
            self.shelves_per_row,
            self.shelf_rows,
            self.border_margin,
        )
        if any(d < 1 for d in dims):
            raise ValueError("all warehouse dimensions must be >= 1")

    @property
    def width(self) -> int:
        inner = self.shelves_per_row * self.shelf_width
        inner += (self.shelves_per_row - 1) * self.aisle_width
        return inner + 2 * self.border_margin

    @property
    def height(self) -> int:
        inner = self.shelf_rows * self.shelf_height
        inner += (self.shelf_rows - 1) * self.aisle_width
        return inner + 2 * self.border_margin


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, tag]))


def gen_random(width: int, height: int, density: float, seed: int) -> MapGrid:
    """Obstacle field where each cell is blocked independently with p = density."""
    if not 0 <= density < 1:
        raise ValueError(f"density must be in [0, 1), got {density}")
    if width < 2 or height < 2:
        raise ValueError("random maps need width and height >= 2")
    rng = _stream(seed, _STREAM_RANDOM_MAP)
    cells = (rng.random((height, width)) < density).astype(np.uint8)
    if int(cells.sum()) == width * height:
        # density < 1 makes a fully blocked draw astronomically unlikely,
        # but keep the invariant unconditional
        cells[0, 0] = 0
    return MapGrid(width, height, cells, name=f"random_{width}x{height}_{seed}", family="random")


def gen_maze(width: int, height: int, seed: int, loop_prob: float = 0.1) -> MapGrid:
    """Corridor maze: randomized depth-first carving on the odd-coordinate lattice.

    loop_prob = 0 gives a perfect maze (free-cell adjacency graph is a tree);
    higher values knock out remaining interior walls to create loops.
    All free cells are connected for any argument combination.
    """
    if width < 3 or height < 3:
        raise ValueError("maze needs width and height >= 3")
    if not 0 <= loop_prob <= 1:
        raise ValueError(f"loop_prob must be in [0, 1], got {loop_prob}")
    rng = _stream(seed, _STREAM_MAZE)
    cells = np.ones((height, width), dtype=np.uint8)
    rooms_r = range(1, height - 1, 2)
    rooms_c = range(1, width - 1, 2)
    rooms = [(r, c) for r in rooms_r for c in rooms_c]

    start = rooms[int(rng.integers(0, len(rooms)))]
    cells[start] = 0
    stack = [start]
    while stack:
        r, c = stack[-1]
        candidates = []
        for dr, dc in ((-2, 0), (2, 0), (0, -2), (0, 2)):
            nr, nc = r + dr, c + dc
            if 1 <= nr < height - 1 and 1 <= nc < width - 1 and cells[nr, nc] == 1:
                candidates.append((nr, nc))
        if not candidates:
            stack.pop()
            continue
        nr, nc = candidates[int(rng.integers(0, len(candidates)))]
        cells[(r + nr) // 2, (c + nc) // 2] = 0
        cells[nr, nc] = 0
        stack.append((nr, nc))

    if loop_prob > 0:
        # interior walls sit between two rooms: exactly one odd coordinate
        for r in range(1, height - 1):
            for c in range(1, width - 1):
                if cells[r, c] == 0 or (r % 2) == (c % 2):
                    continue
                if rng.random() < loop_prob:
                    cells[r, c] = 0

    return MapGrid(width, height, cells, name=f"maze_{width}x{height}_{seed}", family="maze")


def gen_warehouse(params: WarehouseParams | None = None) -> MapGrid:
    """Shelf blocks on a regular grid separated by aisles inside a free frame."""
    params = params or WarehouseParams()
    width, height = params.width, params.height
    cells = np.zeros((height, width), dtype=np.uint8)
    for row in range(params.shelf_rows):
        r0 = params.border_margin + row * (params.shelf_height + params.aisle_width)
        for col in range(params.shelves_per_row):
            c0 = params.border_margin + col * (params.shelf_width + params.aisle_width)
            cells[r0 : r0 + params.shelf_height, c0 : c0 + params.shelf_width] = 1
    if int(cells.sum()) == width * height:
        raise ValueError("warehouse parameters leave no free cells")
    if _kernels.count_components(cells) != 1:
        raise ValueError("warehouse parameters disconnect the free space")
    return MapGrid(width, height, cells, name=f"warehouse_{width}x{height}", family="warehouse")


def gen_city_standin(seed: int, size: int = 256) -> MapGrid:
    """Synthetic street-grid map standing in for imported city maps.

    Buildings fill irregular blocks between streets of width 1..2, with a
    free ring road on the border. Stand-ins let the benchmark suite run
    self-contained; real city rasters can be registered over them.
    """
    rng = _stream(seed, _STREAM_RANDOM_MAP + 7)
    cells = np.ones((size, size), dtype=np.uint8)

    def street_lines():
        lines, at = [0], 0
        while at < size - 3:
            at += int(rng.integers(6, 15))
            lines.append(min(at, size - 2))
        return lines

    for r in street_lines():
        w = int(rng.integers(1, 3))
        cells[r : r + w, :] = 0
    for c in street_lines():
        w = int(rng.integers(1, 3))
        cells[:, c : c + w] = 0
    # ring road keeps the border traversable
    cells[0, :] = cells[-1, :] = 0
    cells[:, 0] = cells[:, -1] = 0
    # occasional plazas punched into blocks
    for _ in range(size // 16):
        r = int(rng.integers(1, size - 8))
        c = int(rng.integers(1, size - 8))
        h = int(rng.integers(3, 8))
        w = int(rng.integers(3, 8))
        cells[r : r + h, c : c + w] = 0
    return MapGrid(size, size, cells, name=f"city_{size}_{seed}", family="custom")

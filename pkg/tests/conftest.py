import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mapfbench.mapgen import MapGrid


@pytest.fixture
def empty5() -> MapGrid:
    return MapGrid(5, 5, np.zeros((5, 5), dtype=np.uint8), name="empty5")


@pytest.fixture(autouse=True)
def _clean_registry():
    yield
    from mapfbench import maps_io

    maps_io.clear_registry()


def grid_from_rows(rows, name="fixture") -> MapGrid:
    cells = np.array([[1 if ch == "#" else 0 for ch in row] for row in rows], dtype=np.uint8)
    return MapGrid(cells.shape[1], cells.shape[0], cells, name=name)

"""Independent reference implementations used to cross-check the engine.

Everything here is written straight from the rule definitions with plain
Python data structures, deliberately sharing no code with the package
internals.
"""

from collections import deque


def oracle_resolve(positions, desired, blocked, width, height, mode, active=None):
    """Reference simultaneous-move resolution.

    positions/desired: lists of (r, c). blocked: set of obstacle cells.
    Returns (final_positions, obstacle_events, vertex_events, edge_events).

    Rules, applied to a least fixed point:
      1. a move into a blocked or out-of-map cell is cancelled (obstacle
         event) and the agent stays;
      2. vertex pass: a mover is cancelled (vertex event) if its target is
         the cell of an agent that stays, or if >= 2 movers share the
         target (in soft mode the lowest-index mover survives);
      3. edge pass: two movers exchanging cells are both cancelled (edge
         event each);
      4. vertex and edge passes alternate, each evaluated against the state
         at the start of the pass, until a full round cancels nobody.
    """
    n = len(positions)
    if active is None:
        active = [True] * n
    intend = list(desired)
    obstacle = vertex = edge = 0

    def in_bounds(cell):
        return 0 <= cell[0] < height and 0 <= cell[1] < width

    for i in range(n):
        if not active[i]:
            intend[i] = positions[i]
            continue
        if not in_bounds(intend[i]) or intend[i] in blocked:
            if intend[i] != positions[i]:
                obstacle += 1
            intend[i] = positions[i]

    occupant = {positions[i]: i for i in range(n) if active[i]}

    while True:
        changed = False

        movers = [i for i in range(n) if active[i] and intend[i] != positions[i]]
        groups = {}
        for i in movers:
            groups.setdefault(intend[i], []).append(i)
        cancelled = set()
        for i in movers:
            target = intend[i]
            occ = occupant.get(target)
            if occ is not None and intend[occ] == positions[occ]:
                cancelled.add(i)
            elif len(groups[target]) >= 2:
                if mode == "block_all" or i != min(groups[target]):
                    cancelled.add(i)
        for i in cancelled:
            intend[i] = positions[i]
        vertex += len(cancelled)
        changed = changed or bool(cancelled)

        movers = [i for i in range(n) if active[i] and intend[i] != positions[i]]
        swapped = set()
        for i in movers:
            j = occupant.get(intend[i])
            if j is None or j == i:
                continue
            if intend[j] != positions[j] and intend[j] == positions[i]:
                swapped.add(i)
                swapped.add(j)
        for i in swapped:
            intend[i] = positions[i]
        edge += len(swapped)
        changed = changed or bool(swapped)

        if not changed:
            return intend, obstacle, vertex, edge


def oracle_bfs(blocked, width, height, start):
    """Plain BFS distance map: dict cell -> hops from start over free cells."""
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        r, c = frontier.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            cell = (nr, nc)
            if 0 <= nr < height and 0 <= nc < width and cell not in blocked and cell not in dist:
                dist[cell] = dist[(r, c)] + 1
                frontier.append(cell)
    return dist


def free_adjacency_count(cells) -> int:
    """Number of 4-adjacent free-cell pairs in a raster (tree check)."""
    h, w = cells.shape
    count = 0
    for r in range(h):
        for c in range(w):
            if cells[r, c]:
                continue
            if r + 1 < h and not cells[r + 1, c]:
                count += 1
            if c + 1 < w and not cells[r, c + 1]:
                count += 1
    return count

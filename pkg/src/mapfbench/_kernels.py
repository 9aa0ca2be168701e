"""Numba-compiled inner loops shared by the environment, observers, and search.

Everything here works on plain numpy arrays so the surrounding modules stay
testable without touching compiled code directly. Kernels are cached on disk
after the first compilation.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def resolve_kernel(pos_r, pos_c, des_r, des_c, active, padded, pad_off,
                   occ_id, claim_cnt, claim_min, soft, revert):
    """Resolve simultaneous moves in place and return collision counts.

    des_r/des_c hold the raw desired cells and are rewritten with the final
    cells. pos_r/pos_c and occ_id are updated to the post-move state.
    claim_cnt/claim_min are grid-sized scratch (zeros / -1) and are restored
    before returning. Returns (obstacle, vertex, edge) event counts, one
    event per blocked or reverted agent.

    Resolution order: illegal targets first, then alternating passes of
    vertex conflicts (same target cell, or target occupied by an agent that
    stays) and edge conflicts (two agents exchanging cells) until a full
    round changes nothing. Each pass evaluates every agent against the state
    at the start of the pass, so the outcome is independent of agent order
    except where the rules make it explicit (soft mode keeps the
    lowest-index contender moving).
    """
    n = pos_r.shape[0]
    obstacle = 0
    vertex = 0
    edge = 0

    for i in range(n):
        if not active[i]:
            des_r[i] = pos_r[i]
            des_c[i] = pos_c[i]
            continue
        if padded[des_r[i] + pad_off, des_c[i] + pad_off] == 1:
            if des_r[i] != pos_r[i] or des_c[i] != pos_c[i]:
                obstacle += 1
            des_r[i] = pos_r[i]
            des_c[i] = pos_c[i]

    for _ in range(n):
        changed = False

        # vertex pass: claim_cnt counts movers per target, claim_min keeps
        # the lowest mover index (agents scanned in ascending order)
        n_touched = 0
        for i in range(n):
            if not active[i] or (des_r[i] == pos_r[i] and des_c[i] == pos_c[i]):
                continue
            r, c = des_r[i], des_c[i]
            if claim_cnt[r, c] == 0:
                claim_min[r, c] = i
                n_touched += 1
            claim_cnt[r, c] += 1
        if n_touched:
            for i in range(n):
                revert[i] = False
                if not active[i] or (des_r[i] == pos_r[i] and des_c[i] == pos_c[i]):
                    continue
                r, c = des_r[i], des_c[i]
                occ = occ_id[r, c]
                if occ >= 0 and des_r[occ] == pos_r[occ] and des_c[occ] == pos_c[occ]:
                    revert[i] = True  # target occupant stays put
                elif claim_cnt[r, c] >= 2 and (not soft or i != claim_min[r, c]):
                    revert[i] = True
            for i in range(n):
                if revert[i]:
                    claim_cnt[des_r[i], des_c[i]] -= 1
                    if claim_cnt[des_r[i], des_c[i]] == 0:
                        claim_min[des_r[i], des_c[i]] = -1
                    des_r[i] = pos_r[i]
                    des_c[i] = pos_c[i]
                    vertex += 1
                    changed = True
            for i in range(n):
                if active[i] and (des_r[i] != pos_r[i] or des_c[i] != pos_c[i]):
                    claim_cnt[des_r[i], des_c[i]] = 0
                    claim_min[des_r[i], des_c[i]] = -1

        # edge pass: swap means i targets j's cell while j targets i's cell
        for i in range(n):
            revert[i] = False
        for i in range(n):
            if not active[i] or (des_r[i] == pos_r[i] and des_c[i] == pos_c[i]):
                continue
            j = occ_id[des_r[i], des_c[i]]
            if j < 0 or j == i:
                continue
            if (des_r[j] != pos_r[j] or des_c[j] != pos_c[j]) and \
                    des_r[j] == pos_r[i] and des_c[j] == pos_c[i]:
                revert[i] = True
                revert[j] = True
        for i in range(n):
            if revert[i]:
                des_r[i] = pos_r[i]
                des_c[i] = pos_c[i]
                edge += 1
                changed = True

        if not changed:
            break

    # execute the surviving moves
    for i in range(n):
        if active[i] and (des_r[i] != pos_r[i] or des_c[i] != pos_c[i]):
            occ_id[pos_r[i], pos_c[i]] = -1
    for i in range(n):
        if active[i] and (des_r[i] != pos_r[i] or des_c[i] != pos_c[i]):
            occ_id[des_r[i], des_c[i]] = i
            pos_r[i] = des_r[i]
            pos_c[i] = des_c[i]

    return obstacle, vertex, edge


@njit(cache=True)
def observe_kernel(pos_r, pos_c, goal_r, goal_c, active, padded, occ_pad,
                   radius, include_self, out):
    """Fill out[n, 3, 2R+1, 2R+1] with obstacle/agent/target planes.

    padded and occ_pad are radius-padded rasters; occ_pad must arrive zeroed
    and is restored to zeros before returning. Inactive agents get all-zero
    planes.
    """
    n = pos_r.shape[0]
    side = 2 * radius + 1
    for i in range(n):
        if active[i]:
            occ_pad[pos_r[i] + radius, pos_c[i] + radius] = 1
    for i in range(n):
        if not active[i]:
            for a in range(side):
                for b in range(side):
                    out[i, 0, a, b] = 0
                    out[i, 1, a, b] = 0
                    out[i, 2, a, b] = 0
            continue
        r0 = pos_r[i]
        c0 = pos_c[i]
        for a in range(side):
            for b in range(side):
                out[i, 0, a, b] = padded[r0 + a, c0 + b]
                out[i, 1, a, b] = occ_pad[r0 + a, c0 + b]
                out[i, 2, a, b] = 0
        if not include_self:
            out[i, 1, radius, radius] = 0
        dr = goal_r[i] - r0
        if dr > radius:
            dr = radius
        elif dr < -radius:
            dr = -radius
        dc = goal_c[i] - c0
        if dc > radius:
            dc = radius
        elif dc < -radius:
            dc = -radius
        out[i, 2, dr + radius, dc + radius] = 1
    for i in range(n):
        if active[i]:
            occ_pad[pos_r[i] + radius, pos_c[i] + radius] = 0


@njit(cache=True)
def bfs_kernel(cells, start_r, start_c, dist, queue):
    """4-connected BFS over free cells. dist gets hop counts, -1 unreachable.

    dist must arrive filled with -1; queue is an int64 scratch of >= H*W.
    """
    h, w = cells.shape
    head = 0
    tail = 0
    dist[start_r, start_c] = 0
    queue[tail] = start_r * w + start_c
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        r = v // w
        c = v % w
        d = dist[r, c] + 1
        if r > 0 and cells[r - 1, c] == 0 and dist[r - 1, c] < 0:
            dist[r - 1, c] = d
            queue[tail] = v - w
            tail += 1
        if r + 1 < h and cells[r + 1, c] == 0 and dist[r + 1, c] < 0:
            dist[r + 1, c] = d
            queue[tail] = v + w
            tail += 1
        if c > 0 and cells[r, c - 1] == 0 and dist[r, c - 1] < 0:
            dist[r, c - 1] = d
            queue[tail] = v - 1
            tail += 1
        if c + 1 < w and cells[r, c + 1] == 0 and dist[r, c + 1] < 0:
            dist[r, c + 1] = d
            queue[tail] = v + 1
            tail += 1


@njit(cache=True)
def label_kernel(cells, labels, queue):
    """Label 4-connected free components 0..k-1; obstacles get -1. Returns k."""
    h, w = cells.shape
    next_label = 0
    for sr in range(h):
        for sc in range(w):
            if cells[sr, sc] != 0 or labels[sr, sc] >= 0:
                continue
            labels[sr, sc] = next_label
            head = 0
            tail = 0
            queue[tail] = sr * w + sc
            tail += 1
            while head < tail:
                v = queue[head]
                head += 1
                r = v // w
                c = v % w
                if r > 0 and cells[r - 1, c] == 0 and labels[r - 1, c] < 0:
                    labels[r - 1, c] = next_label
                    queue[tail] = v - w
                    tail += 1
                if r + 1 < h and cells[r + 1, c] == 0 and labels[r + 1, c] < 0:
                    labels[r + 1, c] = next_label
                    queue[tail] = v + w
                    tail += 1
                if c > 0 and cells[r, c - 1] == 0 and labels[r, c - 1] < 0:
                    labels[r, c - 1] = next_label
                    queue[tail] = v - 1
                    tail += 1
                if c + 1 < w and cells[r, c + 1] == 0 and labels[r, c + 1] < 0:
                    labels[r, c + 1] = next_label
                    queue[tail] = v + 1
                    tail += 1
            next_label += 1
    return next_label


def bfs_distances_raw(cells: np.ndarray, start_r: int, start_c: int) -> np.ndarray:
    dist = np.full(cells.shape, -1, dtype=np.int32)
    queue = np.empty(cells.size, dtype=np.int64)
    bfs_kernel(cells, start_r, start_c, dist, queue)
    return dist


def component_labels(cells: np.ndarray) -> np.ndarray:
    labels = np.full(cells.shape, -1, dtype=np.int32)
    queue = np.empty(cells.size, dtype=np.int64)
    label_kernel(cells, labels, queue)
    return labels


def count_components(cells: np.ndarray) -> int:
    labels = np.full(cells.shape, -1, dtype=np.int32)
    queue = np.empty(cells.size, dtype=np.int64)
    return int(label_kernel(cells, labels, queue))

"""Ego-centric observations and centralized state export.

All functions are read-only over the environment state and allocate their
own scratch unless the caller supplies buffers, so concurrent observation
of an unchanging state is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import EnvState


@dataclass(frozen=True)
class Observation:
    """Three (2R+1)^2 binary planes plus absolute coordinates.

    Out-of-map cells appear as obstacles. The target plane carries exactly
    one mark: the goal cell itself when inside the field of view, otherwise
    its componentwise clamp onto the view boundary.
    """

    obstacles: np.ndarray
    agents: np.ndarray
    target: np.ndarray
    self_position: tuple[int, int]
    self_goal: tuple[int, int]

    def stacked(self) -> np.ndarray:
        return np.stack([self.obstacles, self.agents, self.target])


@dataclass(frozen=True)
class GlobalState:
    """Snapshot of the full environment, decoupled from later mutation.

    The obstacle raster is shared with the (immutable) map; per-agent
    arrays are copies.
    """

    obstacles: np.ndarray
    positions: np.ndarray
    goals: np.ndarray
    active: np.ndarray
    step: int


def observe_all(env: EnvState, include_self: bool = True, out=None, scratch=None) -> np.ndarray:
    """Observations for every agent as a (n, 3, 2R+1, 2R+1) uint8 array.

    Inactive agents yield all-zero planes. Pass preallocated ``out`` and a
    zeroed radius-padded ``scratch`` raster to avoid per-call allocation in
    hot loops.
    """
    radius = env.config.obs_radius
    side = 2 * radius + 1
    n = env.num_agents
    if out is None:
        out = np.empty((n, 3, side, side), dtype=np.uint8)
    if scratch is None:
        scratch = np.zeros_like(env.padded)
    _kernels.observe_kernel(
        env.pos_r, env.pos_c, env.goal_r, env.goal_c, env.active,
        env.padded, scratch, radius, include_self, out,
    )
    return out


def extract_observation(env: EnvState, agent: int, include_self: bool = True) -> Observation:
    """Build one agent's observation. Raises for inactive or bad indices."""
    if not 0 <= agent < env.num_agents:
        raise IndexError(f"agent index {agent} out of range")
    if not env.active[agent]:
        raise ValueError(f"agent {agent} is inactive")
    radius = env.config.obs_radius
    side = 2 * radius + 1
    r, c = int(env.pos_r[agent]), int(env.pos_c[agent])

    obstacles = env.padded[r : r + side, c : c + side].copy()

    agents_plane = np.zeros((side, side), dtype=np.uint8)
    dr = env.pos_r - r
    dc = env.pos_c - c
    visible = env.active & (np.abs(dr) <= radius) & (np.abs(dc) <= radius)
    agents_plane[dr[visible] + radius, dc[visible] + radius] = 1
    if not include_self:
        agents_plane[radius, radius] = 0

    target = np.zeros((side, side), dtype=np.uint8)
    gr = int(np.clip(int(env.goal_r[agent]) - r, -radius, radius))
    gc = int(np.clip(int(env.goal_c[agent]) - c, -radius, radius))
    target[gr + radius, gc + radius] = 1

    return Observation(
        obstacles=obstacles,
        agents=agents_plane,
        target=target,
        self_position=(r, c),
        self_goal=(int(env.goal_r[agent]), int(env.goal_c[agent])),
    )


def export_global_state(env: EnvState) -> GlobalState:
    return GlobalState(
        obstacles=env.grid.cells,
        positions=env.positions(),
        goals=env.goals(),
        active=env.active.copy(),
        step=env.step_count,
    )

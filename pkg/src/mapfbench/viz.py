"""Deterministic rendering: SVG frames, animated SVG episodes, console text.

Identical inputs produce byte-identical output; the animation uses
declarative SVG animation elements only, so files play in any browser
without scripting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EnvState, step
from .mapgen import MapGrid
from .obs import GlobalState, export_global_state
from .solvers import Policy

# stable per-index palette; repeats beyond 12 agents
PALETTE = (
    "#c62828", "#1565c0", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f",
    "#ad1457", "#558b2f", "#4527a0", "#d84315", "#00695c", "#9e9d24",
)

OBSTACLE_FILL = "#37474f"
BACKGROUND_FILL = "#eceff1"
GRID_STROKE = "#cfd8dc"


@dataclass(frozen=True)
class StyleOptions:
    cell_size: int = 24
    margin: int = 12
    agent_radius: float = 0.34
    show_grid: bool = True
    ego_agent: int | None = None
    ego_radius: int = 5


@dataclass
class Trajectory:
    """Per-step positions, goals, and activity flags of one episode."""

    grid: MapGrid
    positions: np.ndarray  # (steps+1, n, 2)
    goals: np.ndarray  # (steps+1, n, 2)
    active: np.ndarray  # (steps+1, n)

    def __post_init__(self):
        p = np.asarray(self.positions)
        g = np.asarray(self.goals)
        a = np.asarray(self.active)
        if p.ndim != 3 or p.shape[2] != 2 or g.shape != p.shape or a.shape != p.shape[:2]:
            raise ValueError("inconsistent trajectory shapes")

    @property
    def num_steps(self) -> int:
        return len(self.positions) - 1

    @property
    def num_agents(self) -> int:
        return self.positions.shape[1]


def record_trajectory(env: EnvState, policy: Policy, max_steps: int | None = None) -> Trajectory:
    """Roll an episode forward, capturing a snapshot after every step."""
    policy.reset_states()
    states = [export_global_state(env)]
    while not env.done and (max_steps is None or env.step_count < max_steps):
        actions = policy.act(states[-1])
        step(env, actions)
        states.append(export_global_state(env))
    return Trajectory(
        grid=env.grid,
        positions=np.stack([s.positions for s in states]),
        goals=np.stack([s.goals for s in states]),
        active=np.stack([s.active for s in states]),
    )


def agent_color(index: int) -> str:
    return PALETTE[index % len(PALETTE)]


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


class _Svg:
    def __init__(self, width: float, height: float):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
        ]

    def add(self, element: str) -> None:
        self.parts.append(element + "\n")

    def text(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def _scene_geometry(raster: np.ndarray, style: StyleOptions):
    h, w = raster.shape
    cs = style.cell_size
    width = w * cs + 2 * style.margin
    height = h * cs + 2 * style.margin
    return h, w, cs, width, height


def _cell_xy(r: int, c: int, style: StyleOptions):
    return style.margin + c * style.cell_size, style.margin + r * style.cell_size


def _static_scene(svg: _Svg, raster: np.ndarray, style: StyleOptions) -> None:
    h, w, cs, width, height = _scene_geometry(raster, style)
    svg.add(f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="{BACKGROUND_FILL}"/>')
    if style.show_grid:
        for r in range(h + 1):
            y = style.margin + r * cs
            svg.add(
                f'<line x1="{style.margin}" y1="{y}" x2="{style.margin + w * cs}" y2="{y}" '
                f'stroke="{GRID_STROKE}" stroke-width="1"/>'
            )
        for c in range(w + 1):
            x = style.margin + c * cs
            svg.add(
                f'<line x1="{x}" y1="{style.margin}" x2="{x}" y2="{style.margin + h * cs}" '
                f'stroke="{GRID_STROKE}" stroke-width="1"/>'
            )
    for r in range(h):
        for c in range(w):
            if raster[r, c]:
                x, y = _cell_xy(r, c, style)
                svg.add(f'<rect x="{x}" y="{y}" width="{cs}" height="{cs}" fill="{OBSTACLE_FILL}"/>')


def _goal_marker(r: int, c: int, color: str, style: StyleOptions) -> str:
    cs = style.cell_size
    x, y = _cell_xy(int(r), int(c), style)
    inset = cs // 4
    return (
        f'<rect x="{x + inset}" y="{y + inset}" width="{cs - 2 * inset}" '
        f'height="{cs - 2 * inset}" fill="none" stroke="{color}" stroke-width="2"/>'
    )


def render_frame(state: GlobalState, style: StyleOptions | None = None) -> str:
    """One SVG frame: obstacles, goal markers, and agent circles.

    Agents and their goals share a per-index color; set style.ego_agent to
    shade that agent's field of view.
    """
    style = style or StyleOptions()
    raster = state.obstacles
    h, w, cs, width, height = _scene_geometry(raster, style)
    svg = _Svg(width, height)
    _static_scene(svg, raster, style)

    if style.ego_agent is not None and state.active[style.ego_agent]:
        er, ec = (int(v) for v in state.positions[style.ego_agent])
        rad = style.ego_radius
        x, y = _cell_xy(er - rad, ec - rad, style)
        side = (2 * rad + 1) * cs
        svg.add(
            f'<rect x="{x}" y="{y}" width="{side}" height="{side}" '
            f'fill="#ffd54f" fill-opacity="0.25" stroke="#ffb300" stroke-width="2"/>'
        )

    n = len(state.positions)
    for i in range(n):
        if state.active[i]:
            svg.add(_goal_marker(state.goals[i, 0], state.goals[i, 1], agent_color(i), style))
    radius = style.agent_radius * cs
    for i in range(n):
        if not state.active[i]:
            continue
        x, y = _cell_xy(int(state.positions[i, 0]), int(state.positions[i, 1]), style)
        cx, cy = x + cs / 2, y + cs / 2
        svg.add(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius)}" '
            f'fill="{agent_color(i)}"/>'
        )
    return svg.text()


def render_animation(trajectory: Trajectory, step_duration: float = 0.4,
                     style: StyleOptions | None = None) -> str:
    """Animated SVG of a whole episode, looping indefinitely.

    Agent circles glide between consecutive cells; goal markers jump when
    goals change; agents that disappear fade out at that step.
    """
    style = style or StyleOptions()
    steps = trajectory.num_steps
    raster = trajectory.grid.cells
    h, w, cs, width, height = _scene_geometry(raster, style)
    svg = _Svg(width, height)
    _static_scene(svg, raster, style)
    if steps == 0:
        state = GlobalState(
            obstacles=raster,
            positions=trajectory.positions[0],
            goals=trajectory.goals[0],
            active=trajectory.active[0],
            step=0,
        )
        # single snapshot: fall back to the static frame content
        return render_frame(state, style)

    total = steps * step_duration
    key_times = ";".join(_fmt(t / steps) for t in range(steps + 1))
    n = trajectory.num_agents
    radius = style.agent_radius * cs

    def center_values(coords, axis):
        vals = []
        for t in range(steps + 1):
            x, y = _cell_xy(int(coords[t, 0]), int(coords[t, 1]), style)
            vals.append(_fmt((x + cs / 2) if axis == 0 else (y + cs / 2)))
        return ";".join(vals)

    for i in range(n):
        if not trajectory.active[0, i]:
            continue
        color = agent_color(i)
        goals = trajectory.goals[:, i]
        gx = ";".join(str(_cell_xy(int(goals[t, 0]), int(goals[t, 1]), style)[0] + cs // 4)
                      for t in range(steps + 1))
        gy = ";".join(str(_cell_xy(int(goals[t, 0]), int(goals[t, 1]), style)[1] + cs // 4)
                      for t in range(steps + 1))
        inset = cs // 4
        svg.add(
            f'<rect width="{cs - 2 * inset}" height="{cs - 2 * inset}" fill="none" '
            f'stroke="{color}" stroke-width="2">'
            f'<animate attributeName="x" dur="{_fmt(total)}s" repeatCount="indefinite" '
            f'calcMode="discrete" keyTimes="{key_times}" values="{gx}"/>'
            f'<animate attributeName="y" dur="{_fmt(total)}s" repeatCount="indefinite" '
            f'calcMode="discrete" keyTimes="{key_times}" values="{gy}"/>'
            f"</rect>"
        )

    for i in range(n):
        if not trajectory.active[0, i]:
            continue
        color = agent_color(i)
        cx = center_values(trajectory.positions[:, i], 0)
        cy = center_values(trajectory.positions[:, i], 1)
        opacity = ";".join("1" if trajectory.active[t, i] else "0" for t in range(steps + 1))
        fade = ""
        if not trajectory.active[:, i].all():
            fade = (
                f'<animate attributeName="opacity" dur="{_fmt(total)}s" '
                f'repeatCount="indefinite" calcMode="discrete" keyTimes="{key_times}" '
                f'values="{opacity}"/>'
            )
        svg.add(
            f'<circle r="{_fmt(radius)}" fill="{color}">'
            f'<animate attributeName="cx" dur="{_fmt(total)}s" repeatCount="indefinite" '
            f'calcMode="linear" keyTimes="{key_times}" values="{cx}"/>'
            f'<animate attributeName="cy" dur="{_fmt(total)}s" repeatCount="indefinite" '
            f'calcMode="linear" keyTimes="{key_times}" values="{cy}"/>'
            f"{fade}</circle>"
        )
    return svg.text()


AGENT_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def render_console(state: GlobalState) -> str:
    """Text rendering: '#' obstacles, '.' free, '+' goals, agents as
    0-9A-Z (cycling past 36)."""
    raster = state.obstacles
    rows = [["#" if raster[r, c] else "." for c in range(raster.shape[1])]
            for r in range(raster.shape[0])]
    for i in range(len(state.positions)):
        if state.active[i]:
            gr, gc = (int(v) for v in state.goals[i])
            rows[gr][gc] = "+"
    for i in range(len(state.positions)):
        if state.active[i]:
            r, c = (int(v) for v in state.positions[i])
            rows[r][c] = AGENT_CHARS[i % len(AGENT_CHARS)]
    return "\n".join("".join(row) for row in rows) + "\n"

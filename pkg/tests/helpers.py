"""Shared test utilities: instance generators and an independent
constrained-shortest-path oracle used to cross-check the search code."""

from __future__ import annotations

import random

from flexcbs.constraints import ConstraintKind, Path
from flexcbs.map_io import AgentSpec, Cell, GridMap, Instance


def grid_from_rows(rows: list[str]) -> GridMap:
    passable = tuple(ch == "." for row in rows for ch in row)
    return GridMap(len(rows), len(rows[0]), passable)


def open_grid(height: int, width: int) -> GridMap:
    return GridMap(height, width, tuple([True] * (height * width)))


def random_grid(rng: random.Random, height: int, width: int,
                density: float) -> GridMap:
    cells = tuple(rng.random() >= density for _ in range(height * width))
    return GridMap(height, width, cells)


def largest_component(grid: GridMap) -> list[Cell]:
    seen: set[Cell] = set()
    best: list[Cell] = []
    for c in grid.passable_cells():
        if c in seen:
            continue
        comp = [c]
        seen.add(c)
        stack = [c]
        while stack:
            v = stack.pop()
            for nb in grid.neighbors(v):
                if nb not in seen:
                    seen.add(nb)
                    comp.append(nb)
                    stack.append(nb)
        if len(comp) > len(best):
            best = comp
    return sorted(best)


def random_instance(rng: random.Random, hmax: int, wmax: int, k: int,
                    density: float = 0.2) -> Instance:
    """A random connected instance with k agents; retries until valid."""
    while True:
        h = rng.randint(2, hmax)
        w = rng.randint(2, wmax)
        grid = random_grid(rng, h, w, density)
        comp = largest_component(grid)
        if len(comp) < 2 * k + 1:
            continue
        starts = rng.sample(comp, k)
        targets = rng.sample(comp, k)
        agents = tuple(AgentSpec(i, starts[i], targets[i]) for i in range(k))
        try:
            return Instance(grid, agents)
        except Exception:
            continue


def swap_instance() -> Instance:
    """Two agents exchanging ends of the top row of an open 3x3 grid."""
    grid = open_grid(3, 3)
    return Instance(grid, (AgentSpec(0, (0, 0), (0, 2)),
                           AgentSpec(1, (0, 2), (0, 0))))


def random_walk_path(rng: random.Random, grid: GridMap, start: Cell,
                     length: int, agent: int = 99) -> Path:
    cells = [start]
    for _ in range(length):
        options = [cells[-1]] + grid.neighbors(cells[-1])
        cells.append(rng.choice(options))
    return Path(agent, tuple(cells))


def brute_constrained_opt(grid: GridMap, constraints, agent: int, start: Cell,
                          goal: Cell, targets: dict[int, Cell],
                          horizon: int) -> int | None:
    """Minimum feasible arrival time under the constraint semantics, found by
    direct timestep-by-timestep reachability, independent of the search code.

    Returns None when no arrival at or before the horizon is feasible.
    """
    vertex: set[tuple[Cell, int]] = set()
    edges: set[tuple[Cell, Cell, int]] = set()
    range_ub: dict[Cell, int] = {}
    blocked_from: dict[Cell, int] = {}
    earliest, latest = 0, horizon
    for c in constraints:
        if c.kind is ConstraintKind.VERTEX and c.agent == agent:
            vertex.add((c.v, c.t))
        elif c.kind is ConstraintKind.EDGE and c.agent == agent:
            edges.add((c.u, c.v, c.t))
        elif c.kind is ConstraintKind.RANGE and c.agent == agent:
            range_ub[c.v] = max(range_ub.get(c.v, -1), c.t)
        elif c.kind is ConstraintKind.LENGTH_GT and c.agent == agent:
            earliest = max(earliest, c.t + 1)
        elif c.kind is ConstraintKind.LENGTH_LEQ:
            if c.agent == agent:
                latest = min(latest, c.t)
            else:
                tgt = targets.get(c.agent)
                if tgt is not None:
                    prev = blocked_from.get(tgt, horizon + 1)
                    blocked_from[tgt] = min(prev, c.t)

    never = horizon + 1

    def blocked(v: Cell, t: int) -> bool:
        if (v, t) in vertex:
            return True
        if t <= range_ub.get(v, -1):
            return True
        return t >= blocked_from.get(v, never)

    if blocked(start, 0):
        return None
    if goal in blocked_from:
        return None
    last_goal_block = range_ub.get(goal, -1)
    for (v, t) in vertex:
        if v == goal:
            last_goal_block = max(last_goal_block, t)

    def arrival_ok(t: int) -> bool:
        return earliest <= t <= latest and t > last_goal_block

    if start == goal and arrival_ok(0):
        return 0
    reach = {start}
    for t in range(1, horizon + 1):
        nxt = set()
        for v in reach:
            for v2 in [v] + grid.neighbors(v):
                if blocked(v2, t) or (v, v2, t) in edges:
                    continue
                nxt.add(v2)
        if goal in nxt and arrival_ok(t):
            return t
        if not nxt:
            return None
        reach = nxt
    return None

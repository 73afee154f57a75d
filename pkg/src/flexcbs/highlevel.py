"""High-level constraint-tree search with EES node selection and flex-aware
replanning.

The frontier keeps three orderings: CLEANUP by sum of lower bounds, OPEN by an
inadmissible cost estimate, and FOCAL (the OPEN prefix) by conflict count.
A node is only expanded while its SOC stays within w times the global lower
bound; the CLEANUP top always qualifies.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

from . import flex as flexmod
from .conflicts import (Classifier, Conflict, ConflictClass, detect_conflicts,
                        pick_conflict, split_conflict)
from .constraints import (Constraint, ConstraintKind, ConstraintTable, Path,
                          estimate_delays)
from .flex import FlexMode
from .lowlevel import (LowLevelRequest, Occupancy, compute_h, fastar_search,
                       focal_search)
from .map_io import Instance

INF = math.inf
EPS = 1e-6


@dataclass
class SolverConfig:
    w: float = 1.05
    flex_mode: FlexMode = FlexMode.NONE
    low_level: str = "focal"  # "focal" or "fastar"
    bypass: bool = True
    prioritize: bool = True
    symmetry: bool = True
    time_limit: float = 60.0
    seed: int = 0
    max_classified_conflicts: int = 8  # bounded classification effort per node
    keep_tree: bool = False  # retain all generated CT nodes for inspection

    def __post_init__(self):
        if self.w < 1.0:
            raise ValueError("suboptimality factor must be >= 1")
        if self.low_level not in ("focal", "fastar"):
            raise ValueError(f"unknown low-level variant {self.low_level!r}")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if isinstance(self.flex_mode, str):
            self.flex_mode = FlexMode(self.flex_mode)


@dataclass
class CTNode:
    constraints: list[list[Constraint]]
    paths: list[Path]
    costs: list[int]
    lbs: list[float]
    conflicts: list[Conflict]
    x_counts: list[int]
    x_total: int
    depth: int
    seq: int
    parent: "CTNode | None" = None
    fhat: float = 0.0
    tau_used: dict[int, float] = field(default_factory=dict)
    gb_at_generation: bool = True

    @property
    def soc(self) -> int:
        return sum(self.costs)

    @property
    def solb(self) -> float:
        return sum(self.lbs)


@dataclass
class RunMetrics:
    outcome: str = "unsolved"
    generated: int = 0
    expanded: int = 0
    depth: int = 0
    gb_generated: int = 0
    lb0: float = 0.0
    lb_final: float = 0.0
    soc: int | None = None
    wall_time: float = 0.0
    flex_records: list[tuple[float, float, bool]] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def gb_ratio(self) -> float:
        return self.gb_generated / self.generated if self.generated else 1.0

    @property
    def depth_expansion_ratio(self) -> float:
        return self.depth / self.expanded if self.expanded else 0.0

    @property
    def lbi(self) -> float:
        return (self.lb_final - self.lb0) / self.lb0 if self.lb0 else 0.0

    def flex_usage_values(self) -> list[float]:
        """Positive flex usages from replans where the max flex was usable."""
        return [usage for _d, usage, nonneg in self.flex_records
                if nonneg and usage > 0]


@dataclass
class SolveResult:
    outcome: str  # "solved" | "timeout" | "infeasible"
    paths: list[Path] | None
    metrics: RunMetrics


class Frontier:
    """CLEANUP/OPEN/FOCAL orderings over open CT nodes with lazy deletion."""

    def __init__(self, w: float):
        self.w = w
        self.alive: dict[int, CTNode] = {}
        self._cleanup: list = []  # (LB, C, seq)
        self._open: list = []     # (fhat, seq)
        self._focal: list = []    # (X, seq)
        self._focal_bound = -INF

    def __len__(self) -> int:
        return len(self.alive)

    def push(self, node: CTNode):
        self.alive[node.seq] = node
        heapq.heappush(self._cleanup, (node.solb, node.soc, node.seq))
        heapq.heappush(self._open, (node.fhat, node.seq))
        if node.fhat <= self._focal_bound + EPS:
            heapq.heappush(self._focal, (node.x_total, node.seq))

    def _top(self, heap: list) -> CTNode | None:
        while heap:
            seq = heap[0][-1]
            if seq in self.alive:
                return self.alive[seq]
            heapq.heappop(heap)
        return None

    def min_solb_node(self) -> CTNode | None:
        return self._top(self._cleanup)

    def min_lb(self) -> float:
        node = self.min_solb_node()
        return node.solb if node is not None else INF

    def _sync_focal(self):
        top = self._top(self._open)
        if top is None:
            return
        bound = self.w * top.fhat
        if abs(bound - self._focal_bound) > EPS:
            self._focal_bound = bound
            self._focal = [(n.x_total, n.seq) for n in self.alive.values()
                           if n.fhat <= bound + EPS]
            heapq.heapify(self._focal)

    def pop_best(self, lb_global: float) -> CTNode | None:
        """EES selection: FOCAL top, else OPEN top, else CLEANUP top, with the
        first two gated on global bounded-suboptimality."""
        if not self.alive:
            return None
        self._sync_focal()
        chosen = None
        focal_top = self._top(self._focal)
        if (focal_top is not None and focal_top.fhat <= self._focal_bound + EPS
                and focal_top.soc <= self.w * lb_global + EPS):
            chosen = focal_top
        else:
            open_top = self._top(self._open)
            if open_top is not None and open_top.soc <= self.w * lb_global + EPS:
                chosen = open_top
            else:
                chosen = self._top(self._cleanup)
        del self.alive[chosen.seq]
        return chosen


class Solver:
    def __init__(self, instance: Instance, config: SolverConfig):
        self.instance = instance
        self.config = config
        self.grid = instance.map
        self.k = instance.num_agents
        self.targets = {a.id: a.target for a in instance.agents}
        self.starts = {a.id: a.start for a in instance.agents}
        self.h = {a.id: compute_h(self.grid, a.target) for a in instance.agents}
        self.classifier = Classifier(self.grid, symmetry=config.symmetry,
                                     prioritize=config.prioritize)
        self._seq = 0
        self._ehat_sum = 0.0
        self._ehat_n = 0
        self.lb_global = 0.0
        self.tree_nodes: list[CTNode] = []

    # ---------------- low-level plumbing ----------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _relevant_constraints(self, constraints: list[list[Constraint]],
                              agent: int) -> list[Constraint]:
        rel = list(constraints[agent])
        for other, cs in enumerate(constraints):
            if other == agent:
                continue
            rel.extend(c for c in cs if c.kind is ConstraintKind.LENGTH_LEQ)
        return rel

    def _plan(self, agent: int, ctable: ConstraintTable, occupancy: Occupancy,
              delta: float, lb_parent: float):
        req = LowLevelRequest(
            grid=self.grid, agent=agent, start=self.starts[agent],
            goal=self.targets[agent], h=self.h[agent], ctable=ctable,
            occupancy=occupancy, w=self.config.w, delta=delta,
            lb_parent=lb_parent)
        search = fastar_search if self.config.low_level == "fastar" else focal_search
        return search(req)

    def _ehat(self) -> float:
        return self._ehat_sum / self._ehat_n if self._ehat_n else 0.0

    def _set_fhat(self, node: CTNode):
        node.fhat = node.soc + self._ehat() * node.x_total

    # ---------------- root ----------------

    def make_root(self) -> CTNode | None:
        constraints: list[list[Constraint]] = [[] for _ in range(self.k)]
        paths: list[Path] = []
        costs: list[int] = []
        lbs: list[float] = []
        for agent in range(self.k):
            ctable = ConstraintTable(agent, [], targets=self.targets)
            occ = Occupancy(paths)
            result = self._plan(agent, ctable, occ, delta=0.0, lb_parent=0.0)
            if result is None:
                return None
            paths.append(result.path)
            costs.append(result.cost)
            lbs.append(result.lb)
        conflicts, counts, total = detect_conflicts(paths)
        root = CTNode(constraints=constraints, paths=paths, costs=costs,
                      lbs=lbs, conflicts=conflicts, x_counts=counts,
                      x_total=total, depth=0, seq=self._next_seq())
        self._set_fhat(root)
        if self.config.keep_tree:
            self.tree_nodes.append(root)
        return root

    # ---------------- expansion ----------------

    def _choose_conflict(self, node: CTNode) -> Conflict:
        ordered = sorted(node.conflicts, key=Conflict.sort_key)
        if not (self.config.prioritize or self.config.symmetry):
            return ordered[0]
        budget = self.config.max_classified_conflicts
        classified = [self.classifier.classify(c, node.paths, node.constraints,
                                               self.targets)
                      for c in ordered[:budget]]
        return pick_conflict(classified)

    def _replan_set(self, node_paths: list[Path], agent: int,
                    constraint: Constraint) -> list[int]:
        if constraint.kind is not ConstraintKind.LENGTH_LEQ:
            return [agent]
        tgt = self.targets[constraint.agent]
        out = []
        for m in range(self.k):
            if m == constraint.agent:
                continue
            path = node_paths[m]
            horizon = max(path.cost, constraint.t)
            if any(path.at(t) == tgt for t in range(constraint.t, horizon + 1)):
                out.append(m)
        return out

    def _compute_flex(self, lbs: list[float], costs: list[int], agent: int,
                      parent: CTNode, delay_sum: int,
                      frontier: Frontier) -> flexmod.FlexComputation | None:
        mode = self.config.flex_mode
        if mode is FlexMode.NONE:
            return None
        w = self.config.w
        delta_max = flexmod.max_allowed_flex(w, lbs, costs, agent)
        x_i = parent.x_counts[agent]
        x_total = parent.x_total
        if mode is FlexMode.GFD:
            return flexmod.gfd_flex(delta_max)
        if mode is FlexMode.CFD:
            return flexmod.cfd_flex(delta_max, x_i, x_total)
        if mode is FlexMode.DFD:
            return flexmod.dfd_flex(delta_max, x_i, x_total, delay_sum)
        # MFD: sample the frontier minimum-SOLB node at child-generation time
        nf = frontier.min_solb_node()
        sum_lb_other_nf = (nf.solb - nf.lbs[agent]) if nf is not None else 0.0
        view = flexmod.FrontierView(lb=self.lb_global,
                                    sum_lb_other_frontier=sum_lb_other_nf)
        return flexmod.mfd_flex(
            w, lbs[agent], delta_max, x_i, x_total, delay_sum,
            sum_cost_other=sum(costs) - costs[agent],
            sum_lb_other=sum(lbs) - lbs[agent], frontier=view)

    def make_child(self, parent: CTNode, agent: int, constraint: Constraint,
                   frontier: Frontier,
                   metrics: RunMetrics) -> CTNode | None:
        constraints = [list(cs) for cs in parent.constraints]
        constraints[agent].append(constraint)
        paths = list(parent.paths)
        costs = list(parent.costs)
        lbs = list(parent.lbs)
        conflicts = list(parent.conflicts)
        tau_used: dict[int, float] = {}
        replans = self._replan_set(parent.paths, agent, constraint)
        for r in sorted(replans):
            rel = self._relevant_constraints(constraints, r)
            ctable = ConstraintTable(r, rel, targets=self.targets)
            if ctable.infeasible:
                return None
            others = [paths[m] for m in range(self.k) if m != r]
            occ = Occupancy(others)
            _, delay_sum = estimate_delays(rel, r, parent.paths[r],
                                           parent.costs[r])
            fc = self._compute_flex(lbs, costs, r, parent, delay_sum, frontier)
            delta = fc.delta if fc is not None else 0.0
            result = self._plan(r, ctable, occ, delta=delta, lb_parent=lbs[r])
            if result is None:
                return None
            paths[r] = result.path
            costs[r] = result.cost
            lbs[r] = result.lb
            tau_used[r] = result.tau
            usage = costs[r] - self.config.w * lbs[r]
            metrics.flex_records.append(
                (delta, usage, fc is None or fc.delta_max >= 0))
            # incremental conflict update for the replanned agent
            conflicts = [c for c in conflicts if r not in (c.a_i, c.a_j)]
            conflicts.extend(self._conflicts_against(paths, r))
        counts = [0] * self.k
        for c in conflicts:
            counts[c.a_i] += 1
            counts[c.a_j] += 1
        child = CTNode(constraints=constraints, paths=paths, costs=costs,
                       lbs=lbs, conflicts=conflicts, x_counts=counts,
                       x_total=len(conflicts), depth=parent.depth + 1,
                       seq=self._next_seq(), parent=parent, tau_used=tau_used)
        # instrumentation
        self._ehat_sum += max(0.0, child.soc - parent.soc)
        self._ehat_n += 1
        self._set_fhat(child)
        metrics.generated += 1
        child.gb_at_generation = child.soc <= self.config.w * self.lb_global + EPS
        if child.gb_at_generation:
            metrics.gb_generated += 1
        if child.soc > self.config.w * child.solb + EPS:
            metrics.violations.append(
                f"node {child.seq}: SOC {child.soc} > w*SOLB {self.config.w * child.solb:.3f}")
        if self.config.keep_tree:
            self.tree_nodes.append(child)
        return child

    def _conflicts_against(self, paths: list[Path], r: int) -> list[Conflict]:
        """Vertex/edge conflicts between agent r's path and everyone else's."""
        out = []
        for m in range(self.k):
            if m == r:
                continue
            i, j = (r, m) if r < m else (m, r)
            pi, pj = paths[i], paths[j]
            prev_i, prev_j = pi.at(0), pj.at(0)
            for t in range(1, max(pi.cost, pj.cost) + 1):
                ci, cj = pi.at(t), pj.at(t)
                if ci == cj:
                    out.append(Conflict(i, j, ci, t))
                elif ci == prev_j and cj == prev_i and ci != prev_i:
                    out.append(Conflict(i, j, ci, t, u=prev_i))
                prev_i, prev_j = ci, cj
        return out

    def _try_bypass(self, node: CTNode, conflict: Conflict,
                    children: list[CTNode]) -> CTNode | None:
        if conflict.cls in (ConflictClass.TARGET, ConflictClass.CORRIDOR):
            return None
        for child in children:
            if child is None or child.x_total >= node.x_total:
                continue
            # adopting keeps the parent's lower bounds, so the cheaper child
            # paths must still be locally bounded against them
            if child.soc > self.config.w * node.solb + EPS:
                continue
            # adopt the child's paths but keep the parent's constraints and
            # lower bounds
            adopted = CTNode(
                constraints=[list(cs) for cs in node.constraints],
                paths=list(child.paths), costs=list(child.costs),
                lbs=list(node.lbs), conflicts=list(child.conflicts),
                x_counts=list(child.x_counts), x_total=child.x_total,
                depth=node.depth, seq=self._next_seq(), parent=node.parent)
            self._set_fhat(adopted)
            return adopted
        return None

    # ---------------- main loop ----------------

    def solve(self) -> SolveResult:
        t_start = time.monotonic()
        metrics = RunMetrics()
        deadline = t_start + self.config.time_limit

        root = self.make_root()
        if root is None:
            metrics.outcome = "infeasible"
            metrics.wall_time = time.monotonic() - t_start
            return SolveResult("infeasible", None, metrics)
        metrics.generated += 1
        metrics.lb0 = root.solb
        self.lb_global = root.solb
        root.gb_at_generation = True
        metrics.gb_generated += 1

        frontier = Frontier(self.config.w)
        frontier.push(root)
        deepest = root

        while len(frontier):
            if time.monotonic() > deadline:
                metrics.outcome = "timeout"
                break
            self.lb_global = max(self.lb_global, frontier.min_lb())
            node = frontier.pop_best(self.lb_global)
            if node.soc > self.config.w * self.lb_global + EPS:
                metrics.violations.append(
                    f"expanded node {node.seq}: SOC {node.soc} > w*LB "
                    f"{self.config.w * self.lb_global:.3f}")
            if not node.conflicts:
                metrics.outcome = "solved"
                metrics.soc = node.soc
                metrics.depth = node.depth + 1
                metrics.lb_final = self.lb_global
                metrics.wall_time = time.monotonic() - t_start
                return SolveResult("solved", list(node.paths), metrics)
            metrics.expanded += 1
            if node.depth > deepest.depth:
                deepest = node
            conflict = self._choose_conflict(node)
            splits = split_conflict(conflict)
            children = [self.make_child(node, agent, cons, frontier, metrics)
                        for agent, cons in splits]
            if self.config.bypass:
                adopted = self._try_bypass(node, conflict, children)
                if adopted is not None:
                    frontier.push(adopted)
                    continue
            for child in children:
                if child is not None:
                    frontier.push(child)
        else:
            metrics.outcome = "infeasible"

        metrics.lb_final = self.lb_global
        metrics.depth = deepest.depth + 1
        metrics.wall_time = time.monotonic() - t_start
        return SolveResult(metrics.outcome, None, metrics)


def solve(instance: Instance, config: SolverConfig | None = None) -> SolveResult:
    return Solver(instance, config or SolverConfig()).solve()

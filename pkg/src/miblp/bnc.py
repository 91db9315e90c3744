"""Branch-and-cut driver.

The search keeps a best-first queue ordered by parent dual bound (FIFO on
ties).  Each node solves its LP over the instance rows, the global cut pool,
and the node's own bounds, then runs a cut loop: the improving-direction
oracle is queried at the exact LP vertex, a certificate of "no improving
direction" at an integral point makes that vertex the incumbent, and a found
direction feeds intersection-cut generation; anything else branches.

In legacy mode integral vertices are instead checked by comparing the
follower value against the value function, before any separation; a failed
check escalates to the exact direction search purely to source cuts.

Cuts are pooled globally, so a cut is only generated from cones resting on
globally valid constraints: when the cone's tight set uses a variable bound
that branching has tightened away from its root value, the node branches
instead.  A free set swallowing the entire cone certifies that the cone, and
hence the node, holds no bilevel feasible point, so the node is pruned.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from . import cuts as cuts_mod
from . import oracle as oracle_mod
from . import simplex
from .cuts import ConeContainedError, NotSeparableError
from .instance import MiblpInstance, Point
from .oracle import (DirectionMethod, OracleConfig, OracleInconclusive,
                     OutcomeKind)
from .simplex import DegenerateConeError, LpProblem, LpStatus

CUT_VIOLATION_MIN = 1e-7
CUT_COEFF_CAP = 1e12    # beyond this the float image of the row is garbage
MAX_CUT_ROUNDS = 20
TAILING_OFF_EPS = 1e-6
TAILING_OFF_ROUNDS = 3
REL_GAP = 1e-6
ABS_GAP = 1e-9


class OracleMode(Enum):
    IMPROVING_DIRECTION = "id"
    LEGACY = "legacy"


class Branching(Enum):
    FRACTIONAL = "fractional"
    LINKING_PRIORITY = "linking"


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    LIMIT_REACHED = "limit reached"


@dataclass(frozen=True)
class SolverConfig:
    oracle_mode: OracleMode = OracleMode.IMPROVING_DIRECTION
    oracle: OracleConfig = field(default_factory=OracleConfig)
    use_idic: bool = True
    use_isic: bool = False
    branching: Branching = Branching.FRACTIONAL
    max_cut_rounds: int = MAX_CUT_ROUNDS
    node_limit: int | None = None
    time_limit: float | None = None
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if not self.use_idic and not self.use_isic:
            raise ValueError("at least one cut family must be enabled")


@dataclass
class SolveStats:
    nodes: int = 0
    lp_solves: int = 0
    cut_rounds: int = 0
    cuts_idic: int = 0
    cuts_isic: int = 0
    oracle_calls: int = 0
    oracle_time: float = 0.0
    phi_calls: int = 0
    certificates: int = 0


@dataclass(frozen=True)
class CutRecord:
    """One pooled cut with the free set and LP vertex it came from."""
    cut: object
    free_set: object
    vertex: tuple


@dataclass
class SolveResult:
    status: SolveStatus
    incumbent: Point | None
    value: Fraction | None
    bound: float
    gap: float
    stats: SolveStats
    trace: tuple = ()
    cut_log: tuple = ()


@dataclass
class _Node:
    id: int
    depth: int
    parent_bound: float
    lower: list
    upper: list
    retried: bool = False


def solve(inst: MiblpInstance, cfg: SolverConfig | None = None) -> SolveResult:
    return BranchAndCut(inst, cfg or SolverConfig()).run()


def choose_branch_variable(inst: MiblpInstance, point: Point, node, strategy):
    """Pick (index, exact value) to branch on, or None if every candidate
    integer variable is fixed.

    Fractional: the integer variable with fractional part closest to 1/2,
    ties by lowest index; if all are integral, the lowest-index unfixed one.
    LinkingPriority: the most fractional unfixed linking variable (integral
    values allowed), falling back to Fractional when all linking are fixed.
    """
    z = point.joint()
    half = Fraction(1, 2)

    def unfixed(j):
        return node.upper[j] is None or node.lower[j] < node.upper[j]

    if strategy is Branching.LINKING_PRIORITY:
        best = None
        for j in inst.linking_indices():
            if not unfixed(j):
                continue
            f = z[j] - math.floor(z[j])
            score = min(f, 1 - f)
            if best is None or score > best[0]:
                best = (score, j)
        if best is not None:
            return best[1], z[best[1]]

    best = None
    for j in inst.integer_indices():
        f = z[j] - math.floor(z[j])
        if f == 0:
            continue
        score = min(f, 1 - f)
        if best is None or score > best[0]:
            best = (score, j)
    if best is not None:
        return best[1], z[best[1]]
    for j in inst.integer_indices():
        if unfixed(j):
            return j, z[j]
    return None


class BranchAndCut:
    def __init__(self, inst: MiblpInstance, cfg: SolverConfig):
        self.inst = inst
        self.cfg = cfg
        self.stats = SolveStats()
        self.trace_lines = []
        self.pool = []               # list[Cut]
        self.pool_keys = set()
        self.cut_log = []
        self.root_lower = list(inst.lower)
        self.root_upper = list(inst.upper)
        obj = list(inst.c) + list(inst.d1)
        rows = [list(co) for co, _ in inst.all_rows()]
        rhs = [b for _, b in inst.all_rows()]
        self.base = LpProblem(obj, rows, rhs, self.root_lower, self.root_upper)
        self._pooled_lp = self.base
        self._pooled_size = 0
        self.incumbent: Point | None = None
        self.value: Fraction | None = None
        self.value_f = math.inf
        self.phi_cache: dict = {}

    # -- plumbing -------------------------------------------------------

    def _node_lp(self, node: _Node) -> LpProblem:
        if self._pooled_size != len(self.pool):
            rows = [c.row() for c in self.pool]
            rhs = [c.beta for c in self.pool]
            self._pooled_lp = self.base.with_extra_rows(rows, rhs)
            self._pooled_size = len(self.pool)
        return self._pooled_lp.with_bounds(node.lower, node.upper)

    def _trace(self, node: _Node, bound, action: str):
        if self.cfg.trace:
            b = "inf" if bound is None else f"{bound:.9g}"
            self.trace_lines.append(
                f"node {node.id} depth {node.depth} bound {b} {action}")

    def _prune_value(self) -> float:
        if self.value is None:
            return math.inf
        return self.value_f - max(ABS_GAP, REL_GAP * abs(self.value_f))

    def _oracle(self, point: Point, depth: int):
        self.stats.oracle_calls += 1
        t0 = time.perf_counter()
        try:
            return oracle_mod.find_improving_direction(
                self.inst, point, depth, self.cfg.oracle)
        finally:
            self.stats.oracle_time += time.perf_counter() - t0

    def _exact_direction(self, point: Point):
        """Exact (ID), used by legacy mode to source cuts at infeasible points."""
        exact_cfg = OracleConfig(method=DirectionMethod.EXACT_MILP,
                                 objective=self.cfg.oracle.objective,
                                 node_limit=self.cfg.oracle.node_limit,
                                 time_limit=self.cfg.oracle.time_limit)
        self.stats.oracle_calls += 1
        t0 = time.perf_counter()
        try:
            return oracle_mod.find_improving_direction(self.inst, point, 0, exact_cfg)
        finally:
            self.stats.oracle_time += time.perf_counter() - t0

    def _legacy_check(self, point: Point) -> bool:
        self.stats.phi_calls += 1
        x = point.x
        if x not in self.phi_cache:
            self.phi_cache[x] = oracle_mod.evaluate_phi(self.inst, x)
        phi = self.phi_cache[x]
        return phi is not None and self.inst.follower_value(point.y) <= phi

    def _resolve_singleton(self, node: "_Node"):
        """Decide a fully fixed pure-integer box exactly, without the node LP.

        Returns the box's single point when it is bilevel feasible, the string
        "infeasible" when it is not, and None when the check hit a limit.
        """
        z = Point(tuple(node.lower[:self.inst.n1]),
                  tuple(node.lower[self.inst.n1:]))
        if not self.inst.in_s(z):
            return "infeasible"
        try:
            if self.cfg.oracle_mode is OracleMode.LEGACY:
                feasible = self._legacy_check(z)
            else:
                feasible = (self._exact_direction(z).kind
                            is OutcomeKind.NO_IMPROVING_DIRECTION)
        except OracleInconclusive:
            return None
        return z if feasible else "infeasible"

    def _cone_is_global(self, cone) -> bool:
        for j, at_upper in cone.bound_supports:
            if at_upper:
                if self._current_upper[j] != self.root_upper[j]:
                    return False
            elif self._current_lower[j] != self.root_lower[j]:
                return False
        return True

    def _make_cuts(self, cone, point: Point, direction) -> int:
        """Generate enabled cuts from the direction; returns cuts added."""
        added = 0
        free_sets = []
        if self.cfg.use_idic:
            free_sets.append(("idic", cuts_mod.bfs_from_direction(self.inst, direction)))
        if self.cfg.use_isic:
            y_star = tuple(a + b for a, b in zip(point.y, direction.w))
            if all(y_star[i].denominator == 1 for i in range(self.inst.r2)):
                free_sets.append(("isic", cuts_mod.bfs_from_solution(self.inst, y_star)))
        for family, fs in free_sets:
            try:
                cut = cuts_mod.intersection_cut(cone, fs, self.inst.n1)
            except NotSeparableError:
                continue
            if cut.key() in self.pool_keys:
                continue
            if any(abs(c) > CUT_COEFF_CAP for c in cut.row()) or \
                    abs(cut.beta) > CUT_COEFF_CAP:
                continue
            if cuts_mod.cut_violation(cut, point) < CUT_VIOLATION_MIN:
                continue
            self.pool.append(cut)
            self.pool_keys.add(cut.key())
            self.cut_log.append(CutRecord(cut, fs, cone.vertex))
            if family == "idic":
                self.stats.cuts_idic += 1
            else:
                self.stats.cuts_isic += 1
            added += 1
        return added

    # -- node processing --------------------------------------------------

    def bound_node(self, node: _Node):
        """Bound the node with the LP + cut loop.

        Returns (action, payload): ("prune", reason) | ("incumbent", (point,
        bound)) | ("branch", (point, bound, proven)) | ("retry", None).
        `proven` records whether the vertex was certified not bilevel
        feasible, which is what licenses pruning a fully fixed box later.
        """
        self._current_lower = node.lower
        self._current_upper = node.upper
        rounds = 0
        tail = 0
        bound = None
        while True:
            prob = self._node_lp(node)
            sol = simplex.solve_lp(prob)
            self.stats.lp_solves += 1
            if sol.status is LpStatus.INFEASIBLE:
                return "prune", "infeasible"
            if sol.status is LpStatus.UNBOUNDED:
                raise RuntimeError("node LP unbounded; boundedness was validated")
            if sol.status is LpStatus.UNSTABLE:
                return ("retry", None) if not node.retried else ("branch", (None, bound, False))
            prev = bound
            bound = sol.objective
            if prev is not None:
                tail = tail + 1 if bound - prev < TAILING_OFF_EPS else 0
            if bound >= self._prune_value():
                return "prune", "bound"
            exact = simplex.exact_primal(prob, sol)
            if exact is None:
                return ("retry", None) if not node.retried else ("branch", (None, bound, False))
            point = Point(tuple(exact[:self.inst.n1]), tuple(exact[self.inst.n1:]))
            integral = self.inst.is_integral(point)

            if self.cfg.oracle_mode is OracleMode.LEGACY:
                if not integral:
                    return "branch", (point, bound, False)
                try:
                    feasible = self._legacy_check(point)
                except OracleInconclusive:
                    return "branch", (point, bound, False)
                if feasible:
                    self.stats.certificates += 1
                    return "incumbent", (point, bound)
                try:
                    outcome = self._exact_direction(point)
                except OracleInconclusive:
                    return "branch", (point, bound, True)
                if outcome.kind is not OutcomeKind.FOUND:
                    # the value function already proved infeasibility; with no
                    # direction to build cuts from, only branching remains
                    return "branch", (point, bound, True)
            else:
                try:
                    outcome = self._oracle(point, node.depth)
                except OracleInconclusive:
                    return "branch", (point, bound, False)
                if outcome.kind is OutcomeKind.NO_IMPROVING_DIRECTION:
                    if integral:
                        self.stats.certificates += 1
                        return "incumbent", (point, bound)
                    return "branch", (point, bound, False)
                if outcome.kind is OutcomeKind.HEURISTIC_EXHAUSTED:
                    return "branch", (point, bound, False)

            # a direction exists: the vertex is not bilevel feasible
            if rounds >= self.cfg.max_cut_rounds or tail >= TAILING_OFF_ROUNDS:
                return "branch", (point, bound, True)
            try:
                cone = simplex.extract_cone(prob, sol)
            except DegenerateConeError:
                return "branch", (point, bound, True)
            if not self._cone_is_global(cone):
                return "branch", (point, bound, True)
            try:
                added = self._make_cuts(cone, point, outcome.direction)
            except ConeContainedError:
                return "prune", "cone-contained"
            if added == 0:
                return "branch", (point, bound, True)
            rounds += 1
            self.stats.cut_rounds += 1

    # -- main loop --------------------------------------------------------

    def run(self) -> SolveResult:
        cfg = self.cfg
        deadline = None if cfg.time_limit is None else time.monotonic() + cfg.time_limit
        next_id = itertools.count()
        seq = itertools.count()
        root = _Node(next(next_id), 0, -math.inf,
                     list(self.root_lower), list(self.root_upper))
        queue = [(-math.inf, next(seq), root)]
        limited = False

        while queue:
            if cfg.node_limit is not None and self.stats.nodes >= cfg.node_limit:
                limited = True
                break
            if deadline is not None and time.monotonic() > deadline:
                limited = True
                break
            parent_bound, _, node = heapq.heappop(queue)
            if parent_bound >= self._prune_value():
                continue
            self.stats.nodes += 1
            action, payload = self.bound_node(node)

            if action == "retry":
                node.retried = True
                heapq.heappush(queue, (node.parent_bound, next(seq), node))
                self._trace(node, None, "requeued")
                continue
            if action == "prune":
                self._trace(node, None, f"pruned-{payload}")
                continue
            if action == "incumbent":
                point, bound = payload
                value = self.inst.leader_value(point)
                if self.value is None or value < self.value:
                    self.incumbent, self.value = point, value
                    self.value_f = float(value)
                self._trace(node, bound, f"incumbent value {value}")
                continue

            # branch
            point, bound, proven = payload
            decision = None if point is None else choose_branch_variable(
                self.inst, point, node, cfg.branching)
            if decision is None and point is None:
                for j in self.inst.integer_indices():
                    if node.upper[j] is None or node.lower[j] < node.upper[j]:
                        hi = node.upper[j]
                        mid = node.lower[j] + 1 if hi is None else \
                            node.lower[j] + (hi - node.lower[j]) // 2
                        decision = (j, mid)
                        break
            if decision is None:
                if proven and self.inst.is_pure_integer():
                    # every variable is integer and fixed, so the box is the
                    # single vertex just certified not bilevel feasible
                    self._trace(node, bound, "pruned-exhausted")
                    continue
                if self.inst.is_pure_integer():
                    # the box is a single integer point: settle it exactly
                    # instead of trusting a possibly unstable node LP
                    resolved = self._resolve_singleton(node)
                    if resolved == "infeasible":
                        self._trace(node, bound, "pruned-exhausted")
                        continue
                    if resolved is not None:
                        value = self.inst.leader_value(resolved)
                        if self.value is None or value < self.value:
                            self.incumbent, self.value = resolved, value
                            self.value_f = float(value)
                        self._trace(node, bound, f"incumbent value {value}")
                        continue
                # cannot split further and cannot certify: give up soundly
                self._trace(node, bound, "stalled")
                stall = node.parent_bound if bound is None else bound
                heapq.heappush(queue, (stall, next(seq), node))
                limited = True
                break
            j, v = decision
            child_bound = node.parent_bound if bound is None else bound
            floor_v = Fraction(math.floor(v))
            if v.denominator == 1 and node.upper[j] is not None and v == node.upper[j]:
                down_hi = v - 1
            elif v.denominator == 1:
                down_hi = v
            else:
                down_hi = floor_v
            # clamp the split inside the box so both children strictly shrink;
            # otherwise a child repeats its parent and the search cycles
            if node.upper[j] is not None and down_hi > node.upper[j] - 1:
                down_hi = node.upper[j] - 1
            if down_hi < node.lower[j]:
                down_hi = node.lower[j]
            up_lo = down_hi + 1
            for lo_j, hi_j in ((None, down_hi), (up_lo, None)):
                lo = list(node.lower)
                hi = list(node.upper)
                if lo_j is not None:
                    lo[j] = lo_j
                if hi_j is not None:
                    hi[j] = hi_j
                child = _Node(next(next_id), node.depth + 1, child_bound, lo, hi)
                heapq.heappush(queue, (child_bound, next(seq), child))
            self._trace(node, bound, f"branched on {j}")

        if limited:
            open_bounds = [b for b, _, _ in queue if not math.isinf(b)]
            lb = min(open_bounds) if open_bounds else (
                self.value_f if self.value is not None else -math.inf)
            gap = math.inf
            if self.value is not None and not math.isinf(lb):
                gap = max(0.0, (self.value_f - lb) / max(1.0, abs(self.value_f)))
            return SolveResult(SolveStatus.LIMIT_REACHED, self.incumbent,
                               self.value, lb, gap, self.stats,
                               tuple(self.trace_lines), tuple(self.cut_log))
        if self.incumbent is None:
            return SolveResult(SolveStatus.INFEASIBLE, None, None, math.inf,
                               math.inf, self.stats, tuple(self.trace_lines),
                               tuple(self.cut_log))
        return SolveResult(SolveStatus.OPTIMAL, self.incumbent, self.value,
                           self.value_f, 0.0, self.stats, tuple(self.trace_lines),
                           tuple(self.cut_log))

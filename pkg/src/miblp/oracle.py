"""Improving-direction oracle.

Given a point (x̂, ŷ) of the relaxation, an improving feasible direction is a
follower-space step w, integral on the integer coordinates, that keeps
ŷ + w inside the follower's feasible set for x̂ and improves the follower
objective by at least one unit (the scaled-integer convention; the follower
objective is assumed integral on integer data).  A point of S is bilevel
feasible exactly when no such w exists, which turns feasibility checking and
cut separation into the same search problem.

Three searches are provided: the exact MILP over all directions, the exact
MILP restricted to 1-norm radius k, and a direct enumeration of the integer
directions of 1-norm at most k (cheap, no subsolver).  The restricted forms
are heuristics: a failed search is only a certificate when the radius covers
the whole follower box, so the dispatcher escalates a failed heuristic to the
exact MILP whenever a certificate is required (point in S).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from . import milp
from .exactlin import dot
from .instance import MiblpInstance, Point
from .milp import MilpProblem, MilpStatus
from .simplex import LpProblem

ZERO = Fraction(0)
ONE = Fraction(1)


class OracleInconclusive(Exception):
    """A subsolver limit was exhausted; the answer is unknown, not 'no'."""


class DirectionMethod(Enum):
    EXACT_MILP = "milp"
    EXACT_MILP_K = "milp-k"
    LOCAL_SEARCH = "local-search"


class DirectionObjective(Enum):
    NORM1 = "norm1"
    IDIC_FRIENDLY = "idic"
    STEEPEST = "steepest"


class OutcomeKind(Enum):
    NO_IMPROVING_DIRECTION = "no improving direction"
    FOUND = "found"
    HEURISTIC_EXHAUSTED = "heuristic exhausted"


@dataclass(frozen=True)
class Direction:
    """A follower-space step with its 1-norm and follower-objective change."""

    w: tuple
    norm1: Fraction
    improvement: Fraction

    @classmethod
    def from_w(cls, inst: MiblpInstance, w) -> "Direction":
        w = tuple(Fraction(v) for v in w)
        return cls(w=w, norm1=sum(abs(v) for v in w),
                   improvement=dot(inst.d2, w))


@dataclass(frozen=True)
class OracleOutcome:
    kind: OutcomeKind
    direction: Direction | None = None

    @classmethod
    def found(cls, direction: Direction) -> "OracleOutcome":
        return cls(OutcomeKind.FOUND, direction)

    @classmethod
    def no_direction(cls) -> "OracleOutcome":
        return cls(OutcomeKind.NO_IMPROVING_DIRECTION)

    @classmethod
    def exhausted(cls) -> "OracleOutcome":
        return cls(OutcomeKind.HEURISTIC_EXHAUSTED)


@dataclass(frozen=True)
class OracleConfig:
    method: DirectionMethod = DirectionMethod.EXACT_MILP
    k: int = 2
    depth_lb: float = 0
    depth_ub: float = math.inf
    objective: DirectionObjective = DirectionObjective.NORM1
    node_limit: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        if self.depth_lb > self.depth_ub:
            raise ValueError("depth window is empty (lb > ub)")
        if self.method is not DirectionMethod.EXACT_MILP and self.k < 1:
            raise ValueError("radius k must be at least 1")


def _direction_rows(inst: MiblpInstance, point: Point):
    """Feasibility system in w space: improvement row, then follower rows."""
    rho = [b - dot(a, point.x) - dot(g, point.y)
           for a, g, b in zip(inst.a2, inst.g2, inst.b2)]
    rows = [[-d for d in inst.d2]] + [list(g) for g in inst.g2]
    rhs = [ONE] + rho
    return rows, rhs


def _w_bounds(inst: MiblpInstance, point: Point):
    lo = [inst.lower[inst.n1 + i] - point.y[i] for i in range(inst.n2)]
    hi = [None if inst.upper[inst.n1 + i] is None
          else inst.upper[inst.n1 + i] - point.y[i] for i in range(inst.n2)]
    return lo, hi


def _split_problem(inst: MiblpInstance, point: Point, k: int | None,
                   objective: DirectionObjective) -> MilpProblem:
    """(ID)/(k-ID) over split variables w = w+ − w−, plus aux s for IdicFriendly."""
    n2 = inst.n2
    w_lo, w_hi = _w_bounds(inst, point)
    rows_w, rhs = _direction_rows(inst, point)
    with_s = objective is DirectionObjective.IDIC_FRIENDLY
    ns = inst.m2 if with_s else 0

    def split(row):
        return [Fraction(v) for v in row] + [-Fraction(v) for v in row] + [ZERO] * ns

    rows = [split(r) for r in rows_w]
    if k is not None:
        rows.append([-ONE] * (2 * n2) + [ZERO] * ns)
        rhs = rhs + [Fraction(-k)]
    if with_s:
        for i in range(inst.m2):
            g = inst.g2[i]
            row = [-Fraction(v) for v in g] + [Fraction(v) for v in g] + \
                  [ONE if j == i else ZERO for j in range(ns)]
            rows.append(row)
            rhs = rhs + [ZERO]

    lower = [ZERO] * (2 * n2 + ns)
    upper = [max(ZERO, h) if h is not None else None for h in w_hi] + \
            [max(ZERO, -l) for l in w_lo] + [None] * ns
    if objective is DirectionObjective.STEEPEST:
        obj = [Fraction(d) for d in inst.d2] + [-Fraction(d) for d in inst.d2]
    else:
        obj = [ONE] * (2 * n2) + ([ONE] * ns if with_s else [])
    integers = tuple(range(inst.r2)) + tuple(n2 + i for i in range(inst.r2))
    lp = LpProblem(obj, rows, rhs, lower, upper)
    return MilpProblem(lp, integers)


def _plain_problem(inst: MiblpInstance, point: Point, objective,
                   mode: str = "optimize") -> MilpProblem:
    rows, rhs = _direction_rows(inst, point)
    w_lo, w_hi = _w_bounds(inst, point)
    lp = LpProblem(list(objective), [list(r) for r in rows], rhs, w_lo, w_hi)
    return MilpProblem(lp, tuple(range(inst.r2)), mode=mode)


def build_id_milp(inst: MiblpInstance, point: Point,
                  objective: DirectionObjective = DirectionObjective.NORM1) -> MilpProblem:
    """Exact improving-direction search over the full follower box."""
    if objective is DirectionObjective.STEEPEST:
        return _plain_problem(inst, point, list(inst.d2))
    return _split_problem(inst, point, None, objective)


def build_k_id_milp(inst: MiblpInstance, point: Point, k: int,
                    objective: DirectionObjective = DirectionObjective.NORM1) -> MilpProblem:
    """Improving-direction search restricted to 1-norm radius k."""
    if k < 0:
        raise ValueError("radius k must be nonnegative")
    return _split_problem(inst, point, k, objective)


def decode_direction(inst: MiblpInstance, objective: DirectionObjective,
                     x: list) -> Direction:
    """Map a solution vector of build_id_milp/build_k_id_milp back to w."""
    n2 = inst.n2
    if objective is DirectionObjective.STEEPEST and len(x) == n2:
        w = x[:n2]
    else:
        w = [x[i] - x[n2 + i] for i in range(n2)]
    return Direction.from_w(inst, w)


def _solve_direction_milp(inst: MiblpInstance, problem: MilpProblem,
                          objective: DirectionObjective,
                          cfg: OracleConfig | None) -> OracleOutcome | None:
    """None encodes infeasible; the caller decides what that certifies."""
    node_limit = cfg.node_limit if cfg else None
    time_limit = cfg.time_limit if cfg else None
    sol = milp.solve_milp(problem, node_limit=node_limit, time_limit=time_limit)
    if sol.status is MilpStatus.LIMIT_REACHED:
        raise OracleInconclusive("direction search hit a subsolver limit")
    if sol.status is MilpStatus.INFEASIBLE:
        return None
    return OracleOutcome.found(decode_direction(inst, objective, sol.x))


# ---------------------------------------------------------------------------
# direct neighborhood enumeration (no subsolver)


def _shell_vectors(r: int, k: int):
    """Integer vectors of 1-norm s for s = 1..k, lexicographic within a shell."""
    def rec(prefix, budget, pos):
        if pos == r - 1:
            for v in ((-budget, budget) if budget else (0,)):
                yield prefix + (v,)
            return
        for v in range(-budget, budget + 1):
            yield from rec(prefix + (v,), budget - abs(v), pos + 1)

    if r == 0:
        return
    for s in range(1, k + 1):
        yield from rec((), s, 0)


def local_search_neighbors(inst: MiblpInstance, k: int, point: Point,
                           objective=DirectionObjective.NORM1) -> OracleOutcome:
    """Enumerate integer directions of 1-norm <= k on the integer coordinates.

    Continuous follower coordinates stay at zero.  Vectors are visited by
    increasing 1-norm, lexicographically within a shell, so under the Norm1
    objective the first survivor is already optimal and stops the scan.
    ``objective`` may also be a callable scoring a w tuple.
    """
    if k < 1:
        raise ValueError("radius k must be at least 1")
    r2, n2 = inst.r2, inst.n2
    if r2 == 0:
        return OracleOutcome.exhausted()

    rows, rhs = _direction_rows(inst, point)
    w_lo, w_hi = _w_bounds(inst, point)
    pure_int = all(v.denominator == 1 for v in rhs) and \
        all(v.denominator == 1 for row in rows for v in row) and \
        all(v.denominator == 1 for v in w_lo) and \
        all(v is None or v.denominator == 1 for v in w_hi)
    if pure_int:
        rows_n = [[int(v) for v in row[:r2]] for row in rows]
        rhs_n = [int(v) for v in rhs]
        lo_n = [int(v) for v in w_lo[:r2]]
        hi_n = [None if v is None else int(v) for v in w_hi[:r2]]
    else:
        rows_n = [row[:r2] for row in rows]
        rhs_n = rhs
        lo_n = w_lo[:r2]
        hi_n = w_hi[:r2]

    if callable(objective):
        score = lambda w: objective(tuple(Fraction(v) for v in w) + (ZERO,) * (n2 - r2))
        short_circuit = False
    elif objective is DirectionObjective.NORM1:
        score = lambda w: sum(abs(v) for v in w)
        short_circuit = True
    elif objective is DirectionObjective.STEEPEST:
        d2 = [inst.d2[i] for i in range(r2)]
        score = lambda w: dot(d2, [Fraction(v) for v in w])
        short_circuit = False
    else:
        g2 = [row[:r2] for row in inst.g2]
        score = lambda w: sum(max(ZERO, dot(g, [Fraction(v) for v in w])) for g in g2) \
            + sum(abs(v) for v in w)
        short_circuit = False

    best_w, best_score = None, None
    for w in _shell_vectors(r2, k):
        ok = True
        for j, v in enumerate(w):
            if v < lo_n[j] or (hi_n[j] is not None and v > hi_n[j]):
                ok = False
                break
        if not ok:
            continue
        for row, b in zip(rows_n, rhs_n):
            if sum(a * v for a, v in zip(row, w)) < b:
                ok = False
                break
        if not ok:
            continue
        s = score(w)
        if best_score is None or s < best_score:
            best_w, best_score = w, s
            if short_circuit:
                break
    if best_w is None:
        return OracleOutcome.exhausted()
    full = tuple(Fraction(v) for v in best_w) + (ZERO,) * (n2 - r2)
    return OracleOutcome.found(Direction.from_w(inst, full))


# ---------------------------------------------------------------------------
# dispatch and feasibility checks


def find_improving_direction(inst: MiblpInstance, point: Point, depth: int,
                             cfg: OracleConfig) -> OracleOutcome:
    """Heuristic-then-exact dispatch.

    A heuristic runs only when the node depth lies in the configured window;
    a failed heuristic escalates to the exact search when the point is in S
    (a certificate is required there), and otherwise reports exhaustion so
    the caller can branch.
    """
    method = cfg.method
    in_window = cfg.depth_lb <= depth <= cfg.depth_ub
    if method is not DirectionMethod.EXACT_MILP and in_window:
        if method is DirectionMethod.LOCAL_SEARCH:
            outcome = local_search_neighbors(inst, cfg.k, point, cfg.objective)
        else:
            problem = build_k_id_milp(inst, point, cfg.k, cfg.objective)
            found = _solve_direction_milp(inst, problem, cfg.objective, cfg)
            outcome = found if found is not None else OracleOutcome.exhausted()
        if outcome.kind is OutcomeKind.FOUND:
            return outcome
        if not inst.in_s(point):
            return outcome
    problem = build_id_milp(inst, point, cfg.objective)
    found = _solve_direction_milp(inst, problem, cfg.objective, cfg)
    return found if found is not None else OracleOutcome.no_direction()


def certify_bilevel_feasible(inst: MiblpInstance, point: Point) -> bool:
    """True iff no improving feasible direction exists (exact search)."""
    if not inst.in_s(point):
        raise ValueError("point not in S")
    problem = _plain_problem(inst, point, [ZERO] * inst.n2, mode="first-feasible")
    sol = milp.solve_milp(problem)
    if sol.status is MilpStatus.LIMIT_REACHED:
        raise OracleInconclusive("certification hit a subsolver limit")
    return sol.status is MilpStatus.INFEASIBLE


def evaluate_phi(inst: MiblpInstance, x) -> Fraction | None:
    """Follower's optimal value at x; None encodes +infinity."""
    x = tuple(Fraction(v) for v in x)
    rows = [list(g) for g in inst.g2]
    rhs = [b - dot(a, x) for a, b in zip(inst.a2, inst.b2)]
    lower = [inst.lower[inst.n1 + i] for i in range(inst.n2)]
    upper = [inst.upper[inst.n1 + i] for i in range(inst.n2)]
    lp = LpProblem(list(inst.d2), rows, rhs, lower, upper)
    sol = milp.solve_milp(MilpProblem(lp, tuple(range(inst.r2))))
    if sol.status is MilpStatus.LIMIT_REACHED:
        raise OracleInconclusive("value function solve hit a subsolver limit")
    if sol.status is MilpStatus.INFEASIBLE:
        return None
    return sol.objective


def legacy_feasibility_check(inst: MiblpInstance, point: Point) -> bool:
    """True iff the point's follower value attains the value function."""
    if not inst.in_s(point):
        raise ValueError("point not in S")
    phi = evaluate_phi(inst, point.x)
    if phi is None:
        return False
    return inst.follower_value(point.y) <= phi

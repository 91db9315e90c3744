"""Ground-truth enumeration over integer grids.

Everything here is exhaustive search with exact rational row checks and no
reliance on the simplex, MILP, or oracle modules, so agreement tests against
those modules are meaningful.  Only pure-integer instances are supported, and
any grid larger than ``ENUMERATION_BUDGET`` points is refused loudly.

Reaction sets follow the optimistic convention: the follower's value function
is minimized over the follower-feasible slice (follower rows plus the y box),
and a point of S is bilevel feasible when its follower value attains that
minimum.  Ties are all kept; the leader objective only breaks them in
``optimal_by_enumeration``.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .instance import MiblpInstance, Point

ENUMERATION_BUDGET = 10_000_000


class EnumerationBudgetError(Exception):
    """The integer grid exceeds the enumeration budget."""


def _integer_range(lower, upper, what: str):
    if upper is None:
        raise EnumerationBudgetError(f"{what} is unbounded above; cannot enumerate")
    lo = math.ceil(lower)
    hi = math.floor(upper)
    return range(lo, hi + 1)


def _grid(ranges):
    total = 1
    for r in ranges:
        total *= len(r)
        if total > ENUMERATION_BUDGET:
            raise EnumerationBudgetError(
                f"grid of {total}+ points exceeds budget {ENUMERATION_BUDGET}")
    return itertools.product(*ranges)


def _require_pure_integer(inst: MiblpInstance):
    if not inst.is_pure_integer():
        raise ValueError("enumeration requires a pure-integer instance")


def check_enumeration_budget(inst: MiblpInstance):
    """Refuse joint x-y grids over budget before any scanning starts."""
    total = 1
    for j in range(inst.num_vars):
        total *= len(_integer_range(inst.lower[j], inst.upper[j], f"var[{j}]"))
        if total > ENUMERATION_BUDGET:
            raise EnumerationBudgetError(
                f"joint grid of {total}+ points exceeds budget {ENUMERATION_BUDGET}")


def leader_grid(inst: MiblpInstance):
    """All integer leader vectors inside the x box."""
    ranges = [_integer_range(inst.lower[j], inst.upper[j], f"x[{j}]")
              for j in range(inst.n1)]
    return (tuple(Fraction(v) for v in x) for x in _grid(ranges))


def follower_grid(inst: MiblpInstance):
    ranges = [_integer_range(inst.lower[inst.n1 + i], inst.upper[inst.n1 + i], f"y[{i}]")
              for i in range(inst.n2)]
    return (tuple(Fraction(v) for v in y) for y in _grid(ranges))


def follower_points(inst: MiblpInstance, x) -> list:
    """Integer points of the follower-feasible slice S(x), in grid order."""
    _require_pure_integer(inst)
    return [y for y in follower_grid(inst) if inst.follower_feasible(x, y)]


def phi_by_enumeration(inst: MiblpInstance, x) -> Fraction | None:
    """Follower value function at x; None encodes +infinity (empty slice)."""
    _require_pure_integer(inst)
    best = None
    for y in follower_points(inst, x):
        v = inst.follower_value(y)
        if best is None or v < best:
            best = v
    return best


def enumerate_S(inst: MiblpInstance) -> set:
    """All integral points of the relaxation P (every row, exact)."""
    _require_pure_integer(inst)
    check_enumeration_budget(inst)
    out = set()
    for x in leader_grid(inst):
        for y in follower_grid(inst):
            p = Point(x, y)
            if inst.in_relaxation(p):
                out.add(p)
    return out


def enumerate_F(inst: MiblpInstance) -> set:
    """The optimistic bilevel feasible region by definition."""
    _require_pure_integer(inst)
    check_enumeration_budget(inst)
    out = set()
    for x in leader_grid(inst):
        slice_pts = follower_points(inst, x)
        if not slice_pts:
            continue
        phi = min(inst.follower_value(y) for y in slice_pts)
        for y in slice_pts:
            p = Point(x, y)
            if inst.follower_value(y) == phi and inst.in_relaxation(p):
                out.add(p)
    return out


def optimal_by_enumeration(inst: MiblpInstance):
    """(Point, leader value) minimizing cx + d1 y over F, or None if F is empty."""
    best_p, best_v = None, None
    for p in sorted(enumerate_F(inst), key=lambda q: q.joint()):
        v = inst.leader_value(p)
        if best_v is None or v < best_v:
            best_p, best_v = p, v
    if best_p is None:
        return None
    return best_p, best_v

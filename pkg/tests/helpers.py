"""Independent reference solvers used as ground truth in tests.

Both work by exhaustion with exact rationals and share no code with the
simplex or branch-and-bound implementations: the LP reference enumerates
every basis candidate (n tight constraints chosen from rows and bounds), the
MILP reference scans the full integer grid.  Both require finite boxes.
"""
import itertools
import math
import random
from fractions import Fraction

from miblp.exactlin import dot, solve_vector
from miblp.simplex import LpProblem


def lp_vertex_optimum(problem: LpProblem):
    """(status, value, point) by enumerating tight-constraint intersections.

    status is "optimal" or "infeasible".  The box must be finite, so a
    feasible problem always has an optimal vertex.
    """
    n = problem.n
    constraints = []            # (coeffs, rhs) treated as equalities
    for row, b in zip(problem.rows, problem.rhs):
        constraints.append(([Fraction(v) for v in row], Fraction(b)))
    for j in range(n):
        ej = [Fraction(0)] * n
        ej[j] = Fraction(1)
        constraints.append((list(ej), Fraction(problem.lower[j])))
        if problem.upper[j] is None:
            raise ValueError("vertex enumeration needs a finite box")
        constraints.append((ej, Fraction(problem.upper[j])))

    def feasible(x):
        for row, b in zip(problem.rows, problem.rhs):
            if dot(row, x) < b:
                return False
        return all(problem.lower[j] <= x[j] <= problem.upper[j]
                   for j in range(n))

    best = None
    for combo in itertools.combinations(range(len(constraints)), n):
        mat = [constraints[i][0] for i in combo]
        rhs = [constraints[i][1] for i in combo]
        x = solve_vector([list(r) for r in mat], rhs)
        if x is None or not feasible(x):
            continue
        value = dot(problem.objective, x)
        if best is None or value < best[0]:
            best = (value, tuple(x))
    if best is None:
        return "infeasible", None, None
    return "optimal", best[0], best[1]


def milp_grid_optimum(problem: LpProblem, integer_indices):
    """(status, value, point) by full integer-grid scan (all-integer only)."""
    n = problem.n
    if sorted(integer_indices) != list(range(n)):
        raise ValueError("grid reference handles all-integer problems only")
    ranges = []
    for j in range(n):
        lo, hi = problem.lower[j], problem.upper[j]
        if hi is None:
            raise ValueError("grid reference needs a finite box")
        ranges.append(range(math.ceil(lo), math.floor(hi) + 1))
    best = None
    for point in itertools.product(*ranges):
        x = [Fraction(v) for v in point]
        if any(dot(row, x) < b for row, b in zip(problem.rows, problem.rhs)):
            continue
        value = dot(problem.objective, x)
        if best is None or value < best[0]:
            best = (value, tuple(x))
    if best is None:
        return "infeasible", None, None
    return "optimal", best[0], best[1]


def random_lp(rng: random.Random, n=None, m=None) -> LpProblem:
    """Random LP with a finite box; roughly half end up infeasible."""
    n = n if n is not None else rng.randint(2, 3)
    m = m if m is not None else rng.randint(2, 4)
    rows = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(m)]
    rhs = [rng.randint(-8, 6) for _ in range(m)]
    objective = [rng.randint(-5, 5) for _ in range(n)]
    lower = [rng.randint(0, 1) for _ in range(n)]
    upper = [lo + rng.randint(0, 5) for lo in lower]
    return LpProblem(objective, rows, rhs, lower, upper)


def random_milp(rng: random.Random):
    """Random all-integer MILP (problem, integer_indices) with a finite box."""
    prob = random_lp(rng)
    return prob, tuple(range(prob.n))

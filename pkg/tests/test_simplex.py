import random
from fractions import Fraction

import pytest

from helpers import lp_vertex_optimum, random_lp
from miblp.exactlin import dot
from miblp.simplex import (DegenerateConeError, LpProblem, LpStatus,
                           exact_primal, extract_cone, solve_lp)


def moore_bard_lp(moore_bard):
    rows = [list(co) for co, _ in moore_bard.all_rows()]
    rhs = [b for _, b in moore_bard.all_rows()]
    return LpProblem([-1, -10], rows, rhs, list(moore_bard.lower),
                     list(moore_bard.upper))


def test_moore_bard_relaxation(moore_bard):
    sol = solve_lp(moore_bard_lp(moore_bard))
    assert sol.status is LpStatus.OPTIMAL
    assert abs(sol.objective - (-42.0)) <= 1e-7
    exact = exact_primal(moore_bard_lp(moore_bard), sol)
    assert exact == [Fraction(2), Fraction(4)]


def test_infeasible_detected():
    prob = LpProblem([1], [[1], [-1]], [4, -2], [0], [10])   # x >= 4 and x <= 2
    assert solve_lp(prob).status is LpStatus.INFEASIBLE


def test_unbounded_detected():
    prob = LpProblem([-1], [[1]], [0], [0], [None])
    assert solve_lp(prob).status is LpStatus.UNBOUNDED


def test_bounds_only_problem():
    prob = LpProblem([3, -2], [], [], [1, 0], [5, 7])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert exact_primal(prob, sol) == [1, 7]


def test_negative_lower_bounds():
    prob = LpProblem([1, 1], [[1, 1]], [-3], [-5, -5], [5, 5])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert abs(sol.objective - (-3.0)) <= 1e-7


def test_degenerate_vertex_terminates():
    # three rows through one point plus bounds; objective pushes into it
    prob = LpProblem([-1, -1],
                     [[-1, 0], [0, -1], [-1, -1]],
                     [-2, -2, -4],
                     [0, 0], [10, 10])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert abs(sol.objective - (-4.0)) <= 1e-7


def test_against_vertex_enumeration():
    rng = random.Random(42)
    for _ in range(120):
        prob = random_lp(rng)
        status, value, _ = lp_vertex_optimum(prob)
        sol = solve_lp(prob)
        if status == "optimal":
            assert sol.status is LpStatus.OPTIMAL
            assert abs(sol.objective - float(value)) <= 1e-7
            exact = exact_primal(prob, sol)
            assert exact is not None
            assert dot(prob.objective, exact) == value
        else:
            assert sol.status is LpStatus.INFEASIBLE


def test_exact_primal_satisfies_constraints():
    rng = random.Random(7)
    for _ in range(60):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        if sol.status is not LpStatus.OPTIMAL:
            continue
        exact = exact_primal(prob, sol)
        for row, b in zip(prob.rows, prob.rhs):
            assert dot(row, exact) >= b
        for j, v in enumerate(exact):
            assert prob.lower[j] <= v <= prob.upper[j]


def test_extract_cone_geometry(moore_bard):
    prob = moore_bard_lp(moore_bard)
    sol = solve_lp(prob)
    cone = extract_cone(prob, sol)
    assert list(cone.vertex) == [2, 4]
    assert len(cone.rays) == 2
    tight = []
    for row, b in zip(prob.rows, prob.rhs):
        if dot(row, cone.vertex) == b:
            tight.append((row, b))
    assert len(tight) >= 2
    # rays leave the vertex without violating any tight row, and each ray
    # moves off exactly the rows not defining it (simplicial structure)
    for ray in cone.rays:
        assert any(v != 0 for v in ray)
        for row, _ in tight:
            assert dot(row, ray) >= 0
    # the LP feasible set near the vertex lies inside the cone: walk each
    # edge a tiny exact step and stay feasible in all tight rows
    for ray in cone.rays:
        step = [v + Fraction(1, 1000) * r for v, r in zip(cone.vertex, ray)]
        for row, b in zip(prob.rows, prob.rhs):
            if dot(row, cone.vertex) == b:
                assert dot(row, step) >= b


def test_extract_cone_random():
    rng = random.Random(11)
    cones = 0
    for _ in range(60):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        if sol.status is not LpStatus.OPTIMAL:
            continue
        try:
            cone = extract_cone(prob, sol)
        except DegenerateConeError:
            continue
        cones += 1
        assert list(cone.vertex) == exact_primal(prob, sol)
        assert len(cone.rays) == prob.n
    assert cones > 10


def test_with_bounds_shares_float_cache():
    prob = LpProblem([1, 1], [[1, 1]], [1], [0, 0], [5, 5])
    prob.float_data()
    narrowed = prob.with_bounds([0, 0], [2, 2])
    assert narrowed._cache is prob._cache
    sol = solve_lp(narrowed)
    assert sol.status is LpStatus.OPTIMAL


def test_bad_bounds_rejected():
    prob = LpProblem([1], [], [], [3], [2])
    assert solve_lp(prob).status is LpStatus.INFEASIBLE

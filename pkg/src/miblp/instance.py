"""Problem data for mixed integer bilevel linear programs.

A problem instance is

    min  c x + d1 y
    s.t. A1 x + G1 y >= b1          (leader rows)
         x in Z^r1_+ x R^(n1-r1)_+, lower <= (x, y) <= upper
         y solves:  min { d2 y : A2 x + G2 y >= b2,
                          y in Z^r2_+ x R^(n2-r2)_+, within its bounds }

under optimistic tie-breaking.  Every constraint row is stored in ">="
orientation and every number is an exact ``fractions.Fraction``; "<=" rows
are negated at parse time and "=" rows are split into a ">=" pair, so no
downstream consumer ever sees a sense flag.

The text format is line oriented ('#' starts a comment, blank lines are
ignored)::

    MIBLP 1
    VARS n1 r1 n2 r2
    OBJ_UPPER c_1 .. c_n1 d1_1 .. d1_n2
    OBJ_LOWER d2_1 .. d2_n2
    BOUNDS lo hi lo hi ...            (n1+n2 pairs, hi may be "inf")
    UPPER m1
    <m1 rows: n1+n2 coefficients, a sense (<=, >= or =), rhs>
    LOWER m2
    <m2 rows, same layout; column blocks are A2 then G2>

Numbers are decimals or p/q rationals.  Parsing validates three structural
requirements and attaches the report to the instance: the linear relaxation
is bounded (infinite declared bounds are tightened to exact LP extrema),
every leader variable appearing in the follower rows is integer, and the
follower data A2, G2, b2, d2 is integral (this last one is advisory; cut
generation falls back to an epsilon relaxation when it fails).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]

FORMAT_TAG = "MIBLP"
FORMAT_VERSION = "1"
SENSES = ("<=", ">=", "=")


class InstanceError(ValueError):
    """Malformed or inconsistent instance data."""


class ParseError(InstanceError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GenerationError(InstanceError):
    """Random generation exhausted its resampling budget."""


@dataclass(frozen=True)
class AssumptionReport:
    """Validation outcome for one instance.

    ``var_min``/``var_max`` are exact extrema of each variable over the
    linear relaxation; None when the relaxation is unbounded or empty.
    """

    bounded: bool
    integer_linking: bool
    integer_follower_data: bool
    relaxation_empty: bool
    var_min: Vec | None
    var_max: Vec | None
    notes: tuple[str, ...] = ()

    def solvable(self) -> bool:
        return self.bounded and self.integer_linking


@dataclass(frozen=True)
class Point:
    """A candidate leader/follower assignment."""

    x: Vec
    y: Vec

    @staticmethod
    def make(x, y) -> "Point":
        return Point(tuple(Fraction(v) for v in x), tuple(Fraction(v) for v in y))

    def joint(self) -> Vec:
        return self.x + self.y


@dataclass(frozen=True)
class MiblpInstance:
    n1: int
    r1: int
    n2: int
    r2: int
    c: Vec
    d1: Vec
    d2: Vec
    a1: Mat
    g1: Mat
    b1: Vec
    a2: Mat
    g2: Mat
    b2: Vec
    lower: Vec
    upper: tuple[Fraction | None, ...]   # None = +inf (only before validation)
    name: str = ""
    assumptions: AssumptionReport | None = None

    # -- shape helpers -------------------------------------------------

    @property
    def m1(self) -> int:
        return len(self.a1)

    @property
    def m2(self) -> int:
        return len(self.a2)

    @property
    def num_vars(self) -> int:
        return self.n1 + self.n2

    def is_pure_integer(self) -> bool:
        return self.r1 == self.n1 and self.r2 == self.n2

    def integer_indices(self) -> tuple[int, ...]:
        """Joint-space indices that carry an integrality requirement."""
        return tuple(range(self.r1)) + tuple(self.n1 + i for i in range(self.r2))

    def linking_indices(self) -> tuple[int, ...]:
        """Leader variables with a nonzero column in the follower rows."""
        return tuple(j for j in range(self.n1) if any(row[j] for row in self.a2))

    def leader_rows(self) -> list[tuple[Vec, Fraction]]:
        return [(self.a1[i] + self.g1[i], self.b1[i]) for i in range(self.m1)]

    def follower_rows(self) -> list[tuple[Vec, Fraction]]:
        return [(self.a2[i] + self.g2[i], self.b2[i]) for i in range(self.m2)]

    def all_rows(self) -> list[tuple[Vec, Fraction]]:
        return self.leader_rows() + self.follower_rows()

    # -- exact membership tests ---------------------------------------

    def in_box(self, point: Point) -> bool:
        for v, lo, hi in zip(point.joint(), self.lower, self.upper):
            if v < lo or (hi is not None and v > hi):
                return False
        return True

    def is_integral(self, point: Point) -> bool:
        vals = point.joint()
        return all(vals[j].denominator == 1 for j in self.integer_indices())

    def in_relaxation(self, point: Point) -> bool:
        """Membership in the LP relaxation region (rows plus box)."""
        if not self.in_box(point):
            return False
        vals = point.joint()
        return all(_dot(coeffs, vals) >= rhs for coeffs, rhs in self.all_rows())

    def in_s(self, point: Point) -> bool:
        return self.is_integral(point) and self.in_relaxation(point)

    def follower_feasible(self, x: Vec, y) -> bool:
        """y satisfies the follower's own problem at leader decision x:
        follower rows, the y box, and nothing else."""
        y = tuple(y)
        for i in range(self.n2):
            lo, hi = self.lower[self.n1 + i], self.upper[self.n1 + i]
            if y[i] < lo or (hi is not None and y[i] > hi):
                return False
        for i in range(self.m2):
            if _dot(self.g2[i], y) < self.b2[i] - _dot(self.a2[i], x):
                return False
        return True

    def leader_value(self, point: Point) -> Fraction:
        return _dot(self.c, point.x) + _dot(self.d1, point.y)

    def follower_value(self, y) -> Fraction:
        return _dot(self.d2, tuple(y))


def _dot(a, b) -> Fraction:
    return sum((p * q for p, q in zip(a, b)), Fraction(0))


# ---------------------------------------------------------------------------
# parsing


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


class _Cursor:
    def __init__(self, text: str):
        self._lines = list(_content_lines(text))
        self._pos = 0
        self.lineno = 0

    def next(self, section: str) -> list[str]:
        if self._pos >= len(self._lines):
            raise ParseError(self.lineno, f"missing section: expected {section}")
        self.lineno, tokens = self._lines[self._pos]
        self._pos += 1
        return tokens

    def exhausted(self) -> bool:
        return self._pos >= len(self._lines)


def _number(token: str, lineno: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(lineno, f"not a number: {token!r}") from None


def _bound(token: str, lineno: int) -> Fraction | None:
    if token.lower() in ("inf", "+inf"):
        return None
    return _number(token, lineno)


def _parse_header_counts(tokens, lineno, keyword, count) -> list[int]:
    if not tokens or tokens[0] != keyword:
        raise ParseError(lineno, f"expected {keyword}")
    if len(tokens) != count + 1:
        raise ParseError(lineno, f"{keyword} takes {count} value(s), got {len(tokens) - 1}")
    out = []
    for tok in tokens[1:]:
        if not tok.lstrip("-").isdigit():
            raise ParseError(lineno, f"not an integer: {tok!r}")
        out.append(int(tok))
    return out


def _parse_row(tokens, lineno, width):
    if len(tokens) != width + 2:
        raise ParseError(lineno, f"row needs {width} coefficients, a sense and a rhs")
    sense = tokens[width]
    if sense not in SENSES:
        raise ParseError(lineno, f"unknown sense {sense!r}")
    coeffs = [_number(t, lineno) for t in tokens[:width]]
    rhs = _number(tokens[width + 1], lineno)
    if sense == ">=":
        yield coeffs, rhs
    elif sense == "<=":
        yield [-v for v in coeffs], -rhs
    else:
        yield coeffs, rhs
        yield [-v for v in coeffs], -rhs


def parse_instance(text: str, name: str = "") -> MiblpInstance:
    """Parse, normalize and validate an instance from its text form."""
    inst = _parse_raw(text, name)
    report = validate_assumptions(inst)
    return _apply_report(inst, report)


def _parse_raw(text: str, name: str) -> MiblpInstance:
    cur = _Cursor(text)

    tokens = cur.next("header")
    if tokens != [FORMAT_TAG, FORMAT_VERSION]:
        raise ParseError(cur.lineno, f"expected header '{FORMAT_TAG} {FORMAT_VERSION}'")

    n1, r1, n2, r2 = _parse_header_counts(cur.next("VARS"), cur.lineno, "VARS", 4)
    if n1 < 0 or n2 <= 0 or not (0 <= r1 <= n1) or not (0 <= r2 <= n2):
        raise ParseError(cur.lineno, "inconsistent variable counts")
    n = n1 + n2

    tokens = cur.next("OBJ_UPPER")
    if tokens[0] != "OBJ_UPPER":
        raise ParseError(cur.lineno, "expected OBJ_UPPER")
    if len(tokens) != n + 1:
        raise ParseError(cur.lineno, f"OBJ_UPPER needs {n} coefficients")
    upper_obj = [_number(t, cur.lineno) for t in tokens[1:]]

    tokens = cur.next("OBJ_LOWER")
    if tokens[0] != "OBJ_LOWER":
        raise ParseError(cur.lineno, "expected OBJ_LOWER")
    if len(tokens) != n2 + 1:
        raise ParseError(cur.lineno, f"OBJ_LOWER needs {n2} coefficients")
    d2 = [_number(t, cur.lineno) for t in tokens[1:]]

    tokens = cur.next("BOUNDS")
    if tokens[0] != "BOUNDS":
        raise ParseError(cur.lineno, "expected BOUNDS")
    if len(tokens) != 2 * n + 1:
        raise ParseError(cur.lineno, f"BOUNDS needs {n} lo/hi pairs")
    lower, upper = [], []
    for j in range(n):
        lo = _number(tokens[1 + 2 * j], cur.lineno)
        hi = _bound(tokens[2 + 2 * j], cur.lineno)
        if hi is not None and lo > hi:
            raise ParseError(cur.lineno, f"empty bound interval for variable {j}")
        lower.append(lo)
        upper.append(hi)

    def read_block(keyword):
        count = _parse_header_counts(cur.next(keyword), cur.lineno, keyword, 1)[0]
        if count < 0:
            raise ParseError(cur.lineno, f"{keyword} count must be nonnegative")
        rows = []
        for _ in range(count):
            tokens = cur.next(f"{keyword} row")
            rows.extend(_parse_row(tokens, cur.lineno, n))
        return rows

    upper_rows = read_block("UPPER")
    lower_rows = read_block("LOWER")
    if not lower_rows:
        raise ParseError(cur.lineno, "missing section: LOWER needs at least one row")
    if not cur.exhausted():
        cur.next("")
        raise ParseError(cur.lineno, "trailing content after LOWER block")

    def split_cols(rows):
        a = tuple(tuple(row[:n1]) for row, _ in rows)
        g = tuple(tuple(row[n1:]) for row, _ in rows)
        b = tuple(rhs for _, rhs in rows)
        return a, g, b

    a1, g1, b1 = split_cols(upper_rows)
    a2, g2, b2 = split_cols(lower_rows)
    return MiblpInstance(
        n1=n1, r1=r1, n2=n2, r2=r2,
        c=tuple(upper_obj[:n1]), d1=tuple(upper_obj[n1:]), d2=tuple(d2),
        a1=a1, g1=g1, b1=tuple(b1), a2=a2, g2=g2, b2=tuple(b2),
        lower=tuple(lower), upper=tuple(upper), name=name,
    )


def write_instance(inst: MiblpInstance) -> str:
    """Text form of an instance; parse(write(i)) reproduces i exactly."""
    def num(v: Fraction) -> str:
        return str(v)

    out = []
    if inst.name:
        out.append(f"# {inst.name}")
    out.append(f"{FORMAT_TAG} {FORMAT_VERSION}")
    out.append(f"VARS {inst.n1} {inst.r1} {inst.n2} {inst.r2}")
    out.append("OBJ_UPPER " + " ".join(num(v) for v in inst.c + inst.d1))
    out.append("OBJ_LOWER " + " ".join(num(v) for v in inst.d2))
    bounds = []
    for lo, hi in zip(inst.lower, inst.upper):
        bounds.append(num(lo))
        bounds.append("inf" if hi is None else num(hi))
    out.append("BOUNDS " + " ".join(bounds))
    out.append(f"UPPER {inst.m1}")
    for coeffs, rhs in inst.leader_rows():
        out.append(" ".join(num(v) for v in coeffs) + f" >= {num(rhs)}")
    out.append(f"LOWER {inst.m2}")
    for coeffs, rhs in inst.follower_rows():
        out.append(" ".join(num(v) for v in coeffs) + f" >= {num(rhs)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# validation


def validate_assumptions(inst: MiblpInstance) -> AssumptionReport:
    """Check boundedness, linking integrality and follower-data integrality.

    Report only; solver entry points refuse instances whose report fails one
    of the first two checks.
    """
    from . import simplex

    notes: list[str] = []

    bad_link = [j for j in inst.linking_indices() if j >= inst.r1]
    integer_linking = not bad_link
    if bad_link:
        notes.append("continuous leader variable(s) appear in follower rows: "
                     + ", ".join(f"x{j}" for j in bad_link))

    follower_data = [v for row in inst.a2 for v in row]
    follower_data += [v for row in inst.g2 for v in row]
    follower_data += list(inst.b2) + list(inst.d2)
    integer_follower_data = all(v.denominator == 1 for v in follower_data)
    if not integer_follower_data:
        notes.append("follower data is not integral; cut relaxation falls back to epsilon")

    rows = [list(coeffs) for coeffs, _ in inst.all_rows()]
    rhs = [r for _, r in inst.all_rows()]
    bounded = True
    empty = False
    mins: list[Fraction | None] = [None] * inst.num_vars
    maxs: list[Fraction | None] = [None] * inst.num_vars
    for j in range(inst.num_vars):
        for sign, store in ((1, mins), (-1, maxs)):
            obj = [Fraction(0)] * inst.num_vars
            obj[j] = Fraction(sign)
            prob = simplex.LpProblem(obj, rows, rhs, list(inst.lower), list(inst.upper))
            sol = simplex.solve_lp(prob)
            if sol.status is simplex.LpStatus.INFEASIBLE:
                empty = True
                break
            if sol.status is simplex.LpStatus.UNBOUNDED:
                bounded = False
                notes.append(f"variable {j} is unbounded over the relaxation")
                continue
            if sol.status is not simplex.LpStatus.OPTIMAL:
                bounded = False
                notes.append(f"extremum LP for variable {j} failed: {sol.status.value}")
                continue
            exact = simplex.exact_primal(prob, sol)
            store[j] = exact[j] if exact is not None else Fraction(repr(sol.x[j]))
        if empty:
            notes.append("linear relaxation is empty")
            break

    if empty or not bounded:
        var_min = var_max = None
    else:
        var_min = tuple(v for v in mins)   # type: ignore[misc]
        var_max = tuple(v for v in maxs)   # type: ignore[misc]

    return AssumptionReport(
        bounded=bounded,
        integer_linking=integer_linking,
        integer_follower_data=integer_follower_data,
        relaxation_empty=empty,
        var_min=var_min,
        var_max=var_max,
        notes=tuple(notes),
    )


def _apply_report(inst: MiblpInstance, report: AssumptionReport) -> MiblpInstance:
    """Attach the report; replace infinite declared bounds with exact extrema."""
    if any(hi is None for hi in inst.upper) and report.bounded and not report.relaxation_empty:
        integer = set(inst.integer_indices())
        new_upper = []
        for j, hi in enumerate(inst.upper):
            if hi is not None:
                new_upper.append(hi)
                continue
            tight = report.var_max[j]  # type: ignore[index]
            if j in integer:
                tight = Fraction(math.floor(tight))
            new_upper.append(tight)
        inst = replace(inst, upper=tuple(new_upper))
    elif any(hi is None for hi in inst.upper) and report.relaxation_empty:
        inst = replace(inst, upper=tuple(lo if hi is None else hi
                                         for lo, hi in zip(inst.lower, inst.upper)))
    return replace(inst, assumptions=report)


# ---------------------------------------------------------------------------
# random generation


def generate_random_instance(seed: int, n1: int, n2: int, m1: int, m2: int,
                             coeff_range: tuple[int, int] = (-5, 5),
                             bound: int = 5) -> MiblpInstance:
    """Deterministic pure-integer random instance.

    All coefficients are uniform integers in ``coeff_range``; every variable
    lives in [0, bound] and is integer.  A draw is accepted only when the
    all-zeros point satisfies at least half of the follower rows, which keeps
    the follower side from being trivially empty; up to 100 redraws.
    """
    lo, hi = coeff_range
    if lo > hi:
        raise GenerationError("empty coefficient range")
    if n1 < 0 or n2 <= 0 or m1 < 0 or m2 <= 0 or bound <= 0:
        raise GenerationError("sizes must be positive (n2, m2, bound) or nonnegative (n1, m1)")
    rng = random.Random(seed)
    n = n1 + n2

    for _ in range(100):
        c = [rng.randint(lo, hi) for _ in range(n1)]
        d1 = [rng.randint(lo, hi) for _ in range(n2)]
        d2 = [rng.randint(lo, hi) for _ in range(n2)]
        rows1 = [[rng.randint(lo, hi) for _ in range(n)] + [rng.randint(lo, hi)]
                 for _ in range(m1)]
        rows2 = [[rng.randint(lo, hi) for _ in range(n)] + [rng.randint(lo, hi)]
                 for _ in range(m2)]
        satisfied = sum(1 for row in rows2 if row[-1] <= 0)
        if 2 * satisfied < m2:
            continue
        frac = Fraction
        inst = MiblpInstance(
            n1=n1, r1=n1, n2=n2, r2=n2,
            c=tuple(frac(v) for v in c),
            d1=tuple(frac(v) for v in d1),
            d2=tuple(frac(v) for v in d2),
            a1=tuple(tuple(frac(v) for v in row[:n1]) for row in rows1),
            g1=tuple(tuple(frac(v) for v in row[n1:n]) for row in rows1),
            b1=tuple(frac(row[n]) for row in rows1),
            a2=tuple(tuple(frac(v) for v in row[:n1]) for row in rows2),
            g2=tuple(tuple(frac(v) for v in row[n1:n]) for row in rows2),
            b2=tuple(frac(row[n]) for row in rows2),
            lower=tuple(frac(0) for _ in range(n)),
            upper=tuple(frac(bound) for _ in range(n)),
            name=f"rand-{seed}-{n1}x{n2}",
        )
        return _apply_report(inst, validate_assumptions(inst))
    raise GenerationError("resampling exhausted: could not orient follower rows in 100 draws")

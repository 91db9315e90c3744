"""Configuration-matrix benchmark runner and profile curves.

``run_matrix`` solves every (instance, configuration) pair in worker threads
and funnels finished records through a single CSV writer, flushing after each
row so a crash loses at most the in-flight run.  The profile functions turn a
pile of records into step curves: classic performance profiles (ratio to the
virtual best), baseline profiles (ratio to one named configuration), and
cumulative curves (fraction solved over time on the left, fraction within a
final gap on the right; the two sides meet at the time limit).

Instances that no configuration solved are dropped, as are instances where
every configuration finished faster than a threshold (too easy to rank;
default 0.05 seconds at desk scale).  A configuration that failed to solve a
retained instance is right-censored at ratio +inf: it inflates the instance
count without ever lifting the curve.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, fields
from pathlib import Path

from .bnc import SolveStatus, SolverConfig, solve
from .instance import MiblpInstance

DEFAULT_TIME_FILTER = 0.05

_STATUS_NAMES = {
    SolveStatus.OPTIMAL: "Optimal",
    SolveStatus.INFEASIBLE: "Infeasible",
    SolveStatus.LIMIT_REACHED: "LimitReached",
}


@dataclass(frozen=True)
class RunRecord:
    instance: str
    config: str
    status: str
    wall_s: float
    cpu_s: float
    nodes: int
    ifd_total_s: float
    ifd_avg_s: float
    gap: float

    def solved(self) -> bool:
        return self.status == "Optimal"


_NUMERIC = {"wall_s": float, "cpu_s": float, "nodes": int,
            "ifd_total_s": float, "ifd_avg_s": float, "gap": float}
CSV_HEADER = [f.name for f in fields(RunRecord)]


def record_to_row(rec: RunRecord) -> list[str]:
    return [str(getattr(rec, name)) for name in CSV_HEADER]


def record_from_row(row: list[str]) -> RunRecord:
    vals = {}
    for name, raw in zip(CSV_HEADER, row):
        conv = _NUMERIC.get(name)
        vals[name] = raw if conv is None else conv(float(raw) if conv is int else raw)
    return RunRecord(**vals)


def read_records(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if rows and rows[0] == CSV_HEADER:
        rows = rows[1:]
    return [record_from_row(r) for r in rows if r]


def _run_one(name: str, inst: MiblpInstance, config_name: str,
             cfg: SolverConfig) -> RunRecord:
    t_wall = time.perf_counter()
    t_cpu = time.thread_time()
    try:
        res = solve(inst, cfg)
        status = _STATUS_NAMES[res.status]
        nodes, gap = res.stats.nodes, res.gap
        ifd, calls = res.stats.oracle_time, res.stats.oracle_calls
    except Exception:
        status, nodes, gap, ifd, calls = "Error", 0, math.inf, 0.0, 0
    wall = time.perf_counter() - t_wall
    cpu = time.thread_time() - t_cpu
    return RunRecord(name, config_name, status, wall, cpu, nodes,
                     ifd, ifd / max(1, calls), gap)


def run_matrix(instances, configurations, csv_path=None,
               workers: int | None = None) -> list[RunRecord]:
    """Solve every instance under every configuration.

    ``instances`` is a sequence of (name, MiblpInstance) pairs and
    ``configurations`` of (name, SolverConfig) pairs.  A failing run becomes
    an Error record rather than aborting the matrix.  Records return in job
    order; the CSV receives them in completion order, flushed row by row.
    """
    jobs = [(iname, inst, cname, cfg)
            for iname, inst in instances for cname, cfg in configurations]
    results: dict[int, RunRecord] = {}
    writer = fh = None
    if csv_path is not None:
        path = Path(csv_path)
        fresh = not path.exists() or path.stat().st_size == 0
        fh = open(path, "a", newline="")
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_HEADER)
            fh.flush()
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_one, *job): i for i, job in enumerate(jobs)}
            for fut in as_completed(futures):
                rec = fut.result()
                results[futures[fut]] = rec
                if writer is not None:
                    writer.writerow(record_to_row(rec))
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()
    return [results[i] for i in range(len(jobs))]


@dataclass
class ProfileTable:
    measure: str
    curves: dict           # curve name -> tuple of (x, fraction) step points
    n_instances: int
    censored: dict         # curve name -> count of +inf (right-censored) points
    annotations: dict      # e.g. better/worse fractions vs a baseline


def _by_instance(records) -> dict[str, dict[str, RunRecord]]:
    table: dict[str, dict[str, RunRecord]] = {}
    for rec in records:
        table.setdefault(rec.instance, {})[rec.config] = rec
    return table


def _check_measure(measure: str):
    if measure not in _NUMERIC:
        raise ValueError(f"unknown measure {measure!r}; choose from "
                         f"{sorted(_NUMERIC)}")


def _measure_value(rec: RunRecord, measure: str) -> float:
    return float(getattr(rec, measure))


def _filtered_instances(table, time_filter: float):
    """Apply the shared profile filters; returns instance names kept."""
    kept = []
    for name, per_cfg in sorted(table.items()):
        if not any(rec.solved() for rec in per_cfg.values()):
            continue
        if all(rec.wall_s < time_filter for rec in per_cfg.values()):
            continue
        kept.append(name)
    return kept


def _cdf(ratios) -> tuple:
    finite = sorted(r for r in ratios if not math.isinf(r))
    n = len(ratios)
    points = []
    for i, r in enumerate(finite, start=1):
        if points and points[-1][0] == r:
            points[-1] = (r, i / n)
        else:
            points.append((r, i / n))
    return tuple(points)


def performance_profile(records, measure: str,
                        time_filter: float = DEFAULT_TIME_FILTER) -> ProfileTable:
    """CDFs of measure / virtual-best per configuration."""
    _check_measure(measure)
    table = _by_instance(records)
    configs = sorted({rec.config for rec in records})
    if len(configs) < 2:
        raise ValueError("performance profiles need at least two configurations")
    kept = _filtered_instances(table, time_filter)
    ratios = {c: [] for c in configs}
    for name in kept:
        per_cfg = table[name]
        best = min(_measure_value(r, measure) for r in per_cfg.values() if r.solved())
        for c in configs:
            rec = per_cfg.get(c)
            if rec is None or not rec.solved():
                ratios[c].append(math.inf)
                continue
            v = _measure_value(rec, measure)
            ratios[c].append(v / best if best > 0 else (1.0 if v == 0 else math.inf))
    curves = {c: _cdf(rs) for c, rs in ratios.items()}
    censored = {c: sum(math.isinf(r) for r in rs) for c, rs in ratios.items()}
    return ProfileTable(measure, curves, len(kept), censored, {})


def baseline_profile(records, measure: str, baseline: str,
                     time_filter: float = DEFAULT_TIME_FILTER) -> ProfileTable:
    """CDFs of measure / baseline's measure, with better/worse fractions."""
    _check_measure(measure)
    table = _by_instance(records)
    configs = sorted({rec.config for rec in records})
    if baseline not in configs:
        raise ValueError(f"baseline configuration {baseline!r} has no records")
    if len(configs) < 2:
        raise ValueError("baseline profiles need at least two configurations")
    kept = _filtered_instances(table, time_filter)
    ratios = {c: [] for c in configs}
    for name in kept:
        per_cfg = table[name]
        base = per_cfg.get(baseline)
        base_v = _measure_value(base, measure) if base is not None and base.solved() else None
        for c in configs:
            rec = per_cfg.get(c)
            if rec is None or not rec.solved():
                ratios[c].append(math.inf)
            elif base_v is None:
                ratios[c].append(0.0)      # solved where the baseline did not
            elif base_v == 0:
                ratios[c].append(1.0 if _measure_value(rec, measure) == 0 else math.inf)
            else:
                ratios[c].append(_measure_value(rec, measure) / base_v)
    curves = {c: _cdf(rs) for c, rs in ratios.items()}
    censored = {c: sum(math.isinf(r) for r in rs) for c, rs in ratios.items()}
    n = len(kept)
    annotations = {}
    for c in configs:
        if c == baseline or n == 0:
            continue
        annotations[c] = {
            "better": sum(r < 1 for r in ratios[c]) / n,
            "worse": sum(r > 1 for r in ratios[c]) / n,
        }
    return ProfileTable(measure, curves, n, censored, annotations)


def cumulative_profile(records) -> ProfileTable:
    """Solved-fraction over time and fraction within a final gap.

    Curve ``<config>.time`` gives (seconds, fraction solved by then); curve
    ``<config>.gap`` gives (g, fraction finishing with gap <= g).  The time
    curve's plateau equals the gap curve's value at g = 0, so the two sides
    of the plot join.
    """
    table = _by_instance(records)
    configs = sorted({rec.config for rec in records})
    n = len(table)
    curves = {}
    censored = {}
    for c in configs:
        recs = [per_cfg[c] for per_cfg in table.values() if c in per_cfg]
        times = sorted(r.wall_s for r in recs if r.solved())
        points = []
        for i, t in enumerate(times, start=1):
            if points and points[-1][0] == t:
                points[-1] = (t, i / n)
            else:
                points.append((t, i / n))
        curves[f"{c}.time"] = tuple(points)
        censored[f"{c}.time"] = n - len(times)
        # missing records censor the gap curve too, so both curves share the
        # instance count as denominator and the plateau property holds
        gaps = [r.gap for r in recs] + [math.inf] * (n - len(recs))
        curves[f"{c}.gap"] = _cdf(gaps)
        censored[f"{c}.gap"] = sum(math.isinf(g) for g in gaps)
    return ProfileTable("cumulative", curves, n, censored, {})


def write_profile_data(profile: ProfileTable, directory, prefix: str = "profile"):
    """Write each curve as a two-column gnuplot data file; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, points in sorted(profile.curves.items()):
        safe = "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in name)
        path = directory / f"{prefix}_{safe}.dat"
        with open(path, "w") as fh:
            fh.write(f"# measure={profile.measure} curve={name} "
                     f"instances={profile.n_instances}\n")
            cens = profile.censored.get(name, 0)
            if cens:
                fh.write(f"# right-censored at +inf: {cens}\n")
            for x, y in points:
                fh.write(f"{x:.9g} {y:.9g}\n")
        paths.append(path)
    return paths

"""Multi-objective search over the design space.

Three pluggable strategies share one evaluation pipeline: exhaustive
enumeration (the oracle for desk-scale spaces), seeded random sampling,
and a seeded NSGA-style evolutionary loop (non-dominated sorting, crowding
distance, binary tournament).  The evolutionary loop injects unexplored
points from the canonical enumeration whenever a generation goes stale, so
a budget covering the whole restricted space provably evaluates all of it.

Evaluations are pure; with --jobs > 1 they run in a process pool and are
merged in id order, so frontiers are identical at any width.
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import design_space as ds
from .array_scheduler import SimMode
from .cost_model import Calibration, PpaEstimate, estimate, peak_throughput
from .design_space import DesignPoint, SpaceSpec, validate
from .errors import EmptySpaceError
from .workload import GemmWorkload, simulate_workload

DEFAULT_OBJECTIVES = ("latency_s", "power_w", "area_mm2")


@dataclass(frozen=True)
class EvaluatedPoint:
    point: DesignPoint
    ppa: PpaEstimate

    def objective_vector(self, objectives: Sequence[str] = DEFAULT_OBJECTIVES) -> tuple:
        return tuple(getattr(self.ppa, name) for name in objectives)


@dataclass(frozen=True)
class ParetoFront:
    points: tuple[EvaluatedPoint, ...]
    objectives: tuple[str, ...]


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Strict dominance under minimization: <= everywhere, < somewhere."""
    if len(a) != len(b):
        raise ValueError(f"objective vectors differ in length: {len(a)} vs {len(b)}")
    le = all(x <= y for x, y in zip(a, b))
    return le and any(x < y for x, y in zip(a, b))


def non_dominated_indices(vectors: Sequence[Sequence[float]]) -> list[int]:
    """Indices of the non-dominated subset, preserving input order.

    Archive sweep: a candidate enters the archive unless a member dominates
    it, evicting any members it dominates.  Ties (equal vectors) all stay.
    """
    archive: list[int] = []
    for i, v in enumerate(vectors):
        beaten = False
        survivors = []
        for j in archive:
            if dominates(vectors[j], v):
                beaten = True
                survivors = archive
                break
            if not dominates(v, vectors[j]):
                survivors.append(j)
        if not beaten:
            survivors.append(i)
        archive = survivors
    return archive


def pareto_filter(
    points: Sequence[EvaluatedPoint],
    objectives: Sequence[str] = DEFAULT_OBJECTIVES,
) -> ParetoFront:
    """Exactly the non-dominated subset, order-stable by DesignPoint id."""
    if not points:
        raise ValueError("pareto_filter requires a non-empty point list")
    vecs = [p.objective_vector(objectives) for p in points]
    keep = non_dominated_indices(vecs)
    kept = sorted((points[i] for i in keep), key=lambda p: p.point.id)
    return ParetoFront(points=tuple(kept), objectives=tuple(objectives))


# ---------------------------------------------------------------------------
# Evaluation pipeline

def evaluate_point(
    point: DesignPoint,
    wl: GemmWorkload,
    cal: Calibration,
    mode: SimMode = "paper",
) -> EvaluatedPoint:
    sim = simulate_workload(wl, point, mode)
    return EvaluatedPoint(point=point, ppa=estimate(point, sim, cal))


def _evaluate_task(args) -> EvaluatedPoint:
    return evaluate_point(*args)


def _evaluate_batch(
    points: Sequence[DesignPoint],
    wl: GemmWorkload,
    cal: Calibration,
    mode: SimMode,
    jobs: int,
) -> list[EvaluatedPoint]:
    if jobs <= 1 or len(points) < 2:
        out = [evaluate_point(p, wl, cal, mode) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_evaluate_task,
                                [(p, wl, cal, mode) for p in points],
                                chunksize=max(1, len(points) // (jobs * 4))))
    return sorted(out, key=lambda e: e.point.id)


# ---------------------------------------------------------------------------
# Strategies

@dataclass(frozen=True)
class Exhaustive:
    name: str = "exhaustive"


@dataclass(frozen=True)
class RandomSearch:
    name: str = "random"


@dataclass(frozen=True)
class Evolutionary:
    pop: int = 32
    gens: Optional[int] = None  # None: run until the budget is spent
    crossover_rate: float = 0.9
    mutation_rate: float = 0.25
    name: str = "evolutionary"


Strategy = Exhaustive | RandomSearch | Evolutionary


def parse_strategy(name: str) -> Strategy:
    if name == "exhaustive":
        return Exhaustive()
    if name == "random":
        return RandomSearch()
    if name == "evolutionary":
        return Evolutionary()
    raise ValueError(f"unknown strategy {name!r} "
                     "(expected exhaustive, random, or evolutionary)")


@dataclass(frozen=True)
class ExploreResult:
    front: ParetoFront
    best: EvaluatedPoint  # argmin latency^2 * power * area
    evaluated: tuple[EvaluatedPoint, ...]  # id-ordered

    @property
    def best_objective(self) -> float:
        return self.best.ppa.objective


def explore(
    space: SpaceSpec,
    wl: GemmWorkload,
    cal: Calibration,
    strategy: Strategy,
    budget: int,
    seed: int = 0,
    mode: SimMode = "paper",
    jobs: int = 1,
    objectives: Sequence[str] = DEFAULT_OBJECTIVES,
    point_filter: Optional[Callable[[DesignPoint], bool]] = None,
) -> ExploreResult:
    """Search the restricted space; frontier over all evaluated points."""
    if budget < 1:
        raise ValueError("budget must be >= 1 evaluation")
    if isinstance(strategy, Exhaustive):
        archive = _run_exhaustive(space, wl, cal, budget, mode, jobs, point_filter)
    elif isinstance(strategy, RandomSearch):
        archive = _run_random(space, wl, cal, budget, seed, mode, jobs, point_filter)
    else:
        archive = _run_evolutionary(space, wl, cal, strategy, budget, seed,
                                    mode, jobs, objectives, point_filter)
    if not archive:
        raise EmptySpaceError("restricted space contains no valid points")
    evaluated = tuple(sorted(archive.values(), key=lambda e: e.point.id))
    front = pareto_filter(evaluated, objectives)
    best = min(evaluated, key=lambda e: (e.ppa.objective, e.point.id))
    return ExploreResult(front=front, best=best, evaluated=evaluated)


def _space_stream(space: SpaceSpec, point_filter) -> Iterable[DesignPoint]:
    for point in space.points():
        validate(point)
        if point_filter is None or point_filter(point):
            yield point


def _run_exhaustive(space, wl, cal, budget, mode, jobs, point_filter):
    points = list(itertools.islice(_space_stream(space, point_filter), budget))
    return {e.point.id: e for e in _evaluate_batch(points, wl, cal, mode, jobs)}


def _run_random(space, wl, cal, budget, seed, mode, jobs, point_filter):
    rng = random.Random(seed)
    chosen: dict[int, DesignPoint] = {}
    attempts = 0
    while len(chosen) < budget and attempts < 200 * budget:
        attempts += 1
        values = {name: rng.choice(getattr(space, name)) for name in ds.FIELD_NAMES}
        point = space.build(values)
        if point_filter is not None and not point_filter(point):
            continue
        validate(point)
        chosen.setdefault(point.id, point)
    if len(chosen) < budget:
        # tiny or heavily filtered space: top up from canonical enumeration
        for point in _space_stream(space, point_filter):
            if len(chosen) >= budget:
                break
            chosen.setdefault(point.id, point)
    points = list(chosen.values())
    return {e.point.id: e for e in _evaluate_batch(points, wl, cal, mode, jobs)}


def _run_evolutionary(space, wl, cal, strategy, budget, seed, mode, jobs,
                      objectives, point_filter):
    rng = random.Random(seed)
    archive: dict[int, EvaluatedPoint] = {}

    def spend(points: Sequence[DesignPoint]) -> list[EvaluatedPoint]:
        fresh, seen = [], set()
        for p in points:
            if p.id not in archive and p.id not in seen:
                seen.add(p.id)
                fresh.append(p)
            if len(archive) + len(fresh) >= budget:
                break
        evaluated = _evaluate_batch(fresh, wl, cal, mode, jobs)
        archive.update((e.point.id, e) for e in evaluated)
        return evaluated

    def random_genome() -> dict:
        return {name: rng.choice(getattr(space, name)) for name in ds.FIELD_NAMES}

    def genome_point(genome: dict) -> Optional[DesignPoint]:
        point = space.build(genome)
        validate(point)
        if point_filter is not None and not point_filter(point):
            return None
        return point

    # seed population
    population: list[EvaluatedPoint] = []
    init: list[DesignPoint] = []
    attempts = 0
    while len(init) < strategy.pop and attempts < 200 * strategy.pop:
        attempts += 1
        p = genome_point(random_genome())
        if p is not None and all(p.id != q.id for q in init):
            init.append(p)
    population = spend(init)

    injector = _space_stream(space, point_filter)
    gen = 0
    while len(archive) < budget and (strategy.gens is None or gen < strategy.gens):
        gen += 1
        ranked = _rank_and_crowd(population, objectives)
        children: list[DesignPoint] = []
        trials = 0
        while len(children) < strategy.pop and trials < 20 * strategy.pop:
            trials += 1
            pa = _tournament(population, ranked, rng)
            pb = _tournament(population, ranked, rng)
            ga = pa.point.field_values()
            gb = pb.point.field_values()
            if rng.random() < strategy.crossover_rate:
                child = {k: (ga[k] if rng.random() < 0.5 else gb[k])
                         for k in ds.FIELD_NAMES}
            else:
                child = dict(ga)
            for name in ds.FIELD_NAMES:
                if rng.random() < strategy.mutation_rate:
                    child[name] = rng.choice(getattr(space, name))
            p = genome_point(child)
            if p is not None and p.id not in archive:
                children.append(p)
        if not children:
            # stagnated: inject unexplored points in canonical order
            for point in injector:
                if point.id not in archive:
                    children.append(point)
                if len(children) >= strategy.pop or len(archive) + len(children) >= budget:
                    break
            if not children:
                break  # space exhausted
        fresh = spend(children)
        population = _truncate(population + fresh, strategy.pop, objectives)
    return archive


def _rank_and_crowd(points: Sequence[EvaluatedPoint], objectives):
    vecs = [p.objective_vector(objectives) for p in points]
    n = len(points)
    dominated_by = [0] * n
    dominates_set: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and dominates(vecs[i], vecs[j]):
                dominates_set[i].append(j)
                dominated_by[j] += 1
    rank = [0] * n
    front = [i for i in range(n) if dominated_by[i] == 0]
    level = 0
    while front:
        nxt = []
        for i in front:
            rank[i] = level
            for j in dominates_set[i]:
                dominated_by[j] -= 1
                if dominated_by[j] == 0:
                    nxt.append(j)
        front = nxt
        level += 1
    crowd = [0.0] * n
    for k in range(len(objectives)):
        order = sorted(range(n), key=lambda i: vecs[i][k])
        span = vecs[order[-1]][k] - vecs[order[0]][k]
        crowd[order[0]] = crowd[order[-1]] = float("inf")
        if span > 0:
            for idx in range(1, n - 1):
                i = order[idx]
                crowd[i] += (vecs[order[idx + 1]][k] - vecs[order[idx - 1]][k]) / span
    return {points[i].point.id: (rank[i], -crowd[i]) for i in range(n)}


def _tournament(population, ranked, rng) -> EvaluatedPoint:
    a, b = rng.choice(population), rng.choice(population)
    return a if ranked[a.point.id] <= ranked[b.point.id] else b


def _truncate(points: list[EvaluatedPoint], size: int, objectives) -> list[EvaluatedPoint]:
    unique = {p.point.id: p for p in points}
    pool = sorted(unique.values(), key=lambda p: p.point.id)
    if len(pool) <= size:
        return pool
    ranked = _rank_and_crowd(pool, objectives)
    pool.sort(key=lambda p: (ranked[p.point.id], p.point.id))
    return pool[:size]


# ---------------------------------------------------------------------------
# Dataflow comparison and capacity bound

FLOW_LABELS = tuple(
    f"{df.value}-{ic.value}-{'OL' if ol else 'NOL'}"
    for df in ds.DATAFLOW_CANDIDATES
    for ic in ds.INTERCONNECT_CANDIDATES
    for ol in (True, False)
)


@dataclass(frozen=True)
class CompareResult:
    per_flow: dict[str, ExploreResult]
    merged: ParetoFront
    origin: dict[int, str]  # point id -> flow label


def compare_dataflows(
    wl: GemmWorkload,
    cal: Calibration,
    budget_per_flow: int,
    space: Optional[SpaceSpec] = None,
    strategy: Optional[Strategy] = None,
    seed: int = 0,
    mode: SimMode = "paper",
    jobs: int = 1,
    objectives: Sequence[str] = DEFAULT_OBJECTIVES,
    flows: Optional[Sequence[str]] = None,
) -> CompareResult:
    """One frontier per (dataflow, interconnect, OL) under identical inputs."""
    if budget_per_flow < 1:
        raise ValueError("budget_per_flow must be >= 1")
    space = space or ds.FULL_SPACE
    strategy = strategy or RandomSearch()
    per_flow: dict[str, ExploreResult] = {}
    origin: dict[int, str] = {}
    for label in (flows or FLOW_LABELS):
        df, ic, ol = _parse_flow_label(label)
        restricted = space.restrict(dataflow=(df,), interconnect=(ic,), OL=(ol,))
        result = explore(restricted, wl, cal, strategy, budget_per_flow,
                         seed=seed, mode=mode, jobs=jobs, objectives=objectives)
        per_flow[label] = result
        for e in result.evaluated:
            origin[e.point.id] = label
    pool = [e for r in per_flow.values() for e in r.front.points]
    merged = pareto_filter(pool, objectives)
    return CompareResult(per_flow=per_flow, merged=merged, origin=origin)


def _parse_flow_label(label: str):
    try:
        df, ic, ol = label.split("-")
        return ds.Dataflow(df), ds.Interconnect(ic), {"OL": True, "NOL": False}[ol]
    except (ValueError, KeyError):
        raise ValueError(f"bad flow label {label!r}; expected e.g. WS-Systolic-NOL") from None


def capacity_filter(cal: Calibration, bound_tops: float) -> Callable[[DesignPoint], bool]:
    """Predicate keeping points whose peak throughput (2 ops/MAC) fits the bound.

    The bound uses this cost model's frequency, so it is not comparable to
    any externally published capacity figure.
    """
    def ok(point: DesignPoint) -> bool:
        return 2.0 * peak_throughput(point, cal) / 1e12 <= bound_tops
    return ok

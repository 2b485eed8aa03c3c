"""Constrained NSGA-II over integer placement genomes, and front selection."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .domain import Application, Infrastructure, Placement, CAPACITY_MODES
from .objectives import ObjectiveVector, evaluate_batch
from .pareto import (
    NORMALIZED_REF,
    Normalization,
    ParetoFront,
    crowding_distance,
    dominance_matrix,
    fast_nondominated_sort,
    hypervolume,
)


class InvalidParams(ValueError):
    pass


class EmptyFront(ValueError):
    pass


@dataclass(frozen=True)
class Nsga2Params:
    population: int = 100
    max_evaluations: int = 14000
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None means 1/x
    seed: int = 0
    archive_factor: int = 10
    latency_in_transfer: bool = True
    capacity_mode: str = "per_component"

    def validate(self) -> None:
        if self.population < 4 or self.population % 2:
            raise InvalidParams(f"population must be even and >= 4, got {self.population}")
        if self.max_evaluations < self.population:
            raise InvalidParams("max_evaluations must be >= population")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise InvalidParams("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise InvalidParams("mutation_rate must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise InvalidParams("seed must be an unsigned 64-bit integer")
        if self.archive_factor < 1:
            raise InvalidParams("archive_factor must be >= 1")
        if self.capacity_mode not in CAPACITY_MODES:
            raise InvalidParams(f"unknown capacity mode {self.capacity_mode!r}")

    def mutation_for(self, x: int) -> float:
        return 1.0 / x if self.mutation_rate is None else self.mutation_rate


@dataclass
class RunStats:
    evaluations_used: int
    wall_time: float
    generations: int
    hv_trace: list[tuple[int, float]] = field(default_factory=list)
    normalization: Normalization | None = None


def generation_rng(seed: int, generation: int) -> np.random.Generator:
    """Independent PCG64 stream per generation derived from the master seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(generation,))))


def _rank_and_crowding(objs: np.ndarray, fronts: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    n = len(objs)
    rank = np.empty(n, dtype=np.int64)
    crowd = np.empty(n)
    for r, f in enumerate(fronts):
        idx = np.asarray(f)
        rank[idx] = r
        crowd[idx] = crowding_distance(objs[idx])
    return rank, crowd


def _survivors(objs: np.ndarray, viol: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` best by constrained rank, then crowding."""
    chosen: list[int] = []
    for f in fast_nondominated_sort(objs, viol):
        if len(chosen) + len(f) <= n:
            chosen.extend(f)
            if len(chosen) == n:
                break
            continue
        idx = np.asarray(f)
        cd = crowding_distance(objs[idx])
        order = np.argsort(-cd, kind="stable")
        chosen.extend(idx[order[: n - len(chosen)]].tolist())
        break
    return np.asarray(chosen)


def _tournament(rng: np.random.Generator, rank: np.ndarray, crowd: np.ndarray, k: int) -> np.ndarray:
    n = len(rank)
    a = rng.integers(n, size=k)
    b = rng.integers(n, size=k)
    b_wins = (rank[b] < rank[a]) | ((rank[b] == rank[a]) & (crowd[b] > crowd[a]))
    return np.where(b_wins, b, a)


def _variation(rng: np.random.Generator, parents: np.ndarray, y: int, pc: float, pm: float) -> np.ndarray:
    n, x = parents.shape
    p1, p2 = parents[0::2], parents[1::2]
    cross = rng.random(len(p1)) < pc
    swap = (rng.random(p1.shape) < 0.5) & cross[:, None]
    c1 = np.where(swap, p2, p1)
    c2 = np.where(swap, p1, p2)
    children = np.empty_like(parents)
    children[0::2], children[1::2] = c1, c2
    mutate = rng.random(children.shape) < pm
    fresh = rng.integers(y, size=children.shape)
    return np.where(mutate, fresh, children)


class _Archive:
    """Feasible non-dominated discoveries, deduplicated by objective vector."""

    def __init__(self, x: int, cap: int):
        self.genomes = np.zeros((0, x), dtype=np.int64)
        self.objs = np.zeros((0, 3))
        self.cap = cap

    def update(self, genomes: np.ndarray, objs: np.ndarray) -> bool:
        if len(objs) == 0:
            return False
        ok = ~dominance_matrix(objs).any(axis=0)
        if len(self.objs):
            weakly = (self.objs[:, None, :] <= objs[None, :, :]).all(axis=2)
            ok &= ~weakly.any(axis=0)
        if not ok.any():
            return False
        g, o = genomes[ok], objs[ok]
        _, first = np.unique(o, axis=0, return_index=True)
        first.sort()
        g, o = g[first], o[first]
        if len(self.objs):
            le = (o[:, None, :] <= self.objs[None, :, :]).all(axis=2)
            lt = (o[:, None, :] < self.objs[None, :, :]).any(axis=2)
            beaten = (le & lt).any(axis=0)
            self.genomes, self.objs = self.genomes[~beaten], self.objs[~beaten]
        self.genomes = np.vstack([self.genomes, g])
        self.objs = np.vstack([self.objs, o])
        if len(self.objs) > self.cap:
            cd = crowding_distance(self.objs)
            keep = np.sort(np.argsort(-cd, kind="stable")[: self.cap])
            self.genomes, self.objs = self.genomes[keep], self.objs[keep]
        return True


def nsga2_run(
    app: Application,
    infra: Infrastructure,
    params: Nsga2Params = Nsga2Params(),
    trace: bool = True,
) -> tuple[ParetoFront, RunStats]:
    """Approximate the feasible Pareto set of placements.

    Returns the deduplicated feasible front (final population merged with the
    archive). When nothing feasible was ever evaluated, the front instead
    holds the least-violating individuals, flagged infeasible.
    """
    params.validate()
    start = time.perf_counter()
    x, y, n = app.size, infra.size, params.population
    pm = params.mutation_for(x)

    def evaluate(genomes):
        res = evaluate_batch(app, infra, genomes, params.latency_in_transfer, params.capacity_mode)
        return res.objectives, res.violation

    archive = _Archive(x, params.archive_factor * n)
    snapshots: list[tuple[int, np.ndarray]] = []

    rng = generation_rng(params.seed, 0)
    pop = rng.integers(y, size=(n, x))
    objs, viol = evaluate(pop)
    evaluations = n
    feas = viol == 0.0
    archive.update(pop[feas], objs[feas])
    if trace:
        snapshots.append((evaluations, archive.objs))

    generation = 0
    fronts = fast_nondominated_sort(objs, viol)
    rank, crowd = _rank_and_crowding(objs, fronts)
    while evaluations < params.max_evaluations:
        generation += 1
        rng = generation_rng(params.seed, generation)
        parents = pop[_tournament(rng, rank, crowd, n)]
        children = _variation(rng, parents, y, params.crossover_rate, pm)
        c_objs, c_viol = evaluate(children)
        evaluations += n
        c_feas = c_viol == 0.0
        changed = archive.update(children[c_feas], c_objs[c_feas])
        if trace and changed:
            snapshots.append((evaluations, archive.objs))
        elif trace:
            snapshots.append((evaluations, snapshots[-1][1]))

        all_g = np.vstack([pop, children])
        all_o = np.vstack([objs, c_objs])
        all_v = np.concatenate([viol, c_viol])
        keep = _survivors(all_o, all_v, n)
        pop, objs, viol = all_g[keep], all_o[keep], all_v[keep]
        fronts = fast_nondominated_sort(objs, viol)
        rank, crowd = _rank_and_crowding(objs, fronts)

    if len(archive.objs):
        feas = viol == 0.0
        front = ParetoFront.from_arrays(np.vstack([archive.genomes, pop[feas]]), np.vstack([archive.objs, objs[feas]]))
    else:
        best = viol == viol.min()
        base = ParetoFront.from_arrays(pop[best], objs[best])
        front = ParetoFront(
            tuple(
                (p, replace(v, feasible=False, violation=float(viol.min())))
                for p, v in base.entries
            )
        )

    stats = RunStats(evaluations_used=evaluations, wall_time=0.0, generations=generation)
    if trace:
        stats.normalization = Normalization.over([s for _, s in snapshots])
        stats.hv_trace = _trace(snapshots, stats.normalization)
    stats.wall_time = time.perf_counter() - start
    return front, stats


def _trace(snapshots: list[tuple[int, np.ndarray]], norm: Normalization) -> list[tuple[int, float]]:
    out = []
    last_id, last_hv = None, 0.0
    for evals, pts in snapshots:
        if id(pts) != last_id:
            last_hv = hypervolume(norm.apply(pts), NORMALIZED_REF) if len(pts) else 0.0
            last_id = id(pts)
        out.append((evals, last_hv))
    return out


# -- decision making ---------------------------------------------------------


@dataclass(frozen=True)
class LowLatency:
    """Fastest placement; ties go to lower energy, then cost, then genome."""


@dataclass(frozen=True)
class WeightedIdeal:
    """Smallest weighted sum of min-max normalised objectives over the front."""

    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)


def select_placement(front: ParetoFront, strategy=LowLatency()) -> tuple[Placement, ObjectiveVector]:
    if isinstance(strategy, str):
        strategy = parse_strategy(strategy)
    if len(front) == 0:
        raise EmptyFront("cannot select from an empty front")
    pts = front.points
    genomes = [p.assign for p in front.placements]
    if isinstance(strategy, LowLatency):
        keys = [(pts[i, 0], pts[i, 1], pts[i, 2], genomes[i]) for i in range(len(front))]
    elif isinstance(strategy, WeightedIdeal):
        w = np.asarray(strategy.weights, dtype=float)
        score = Normalization.over([pts]).apply(pts) @ w
        keys = [(score[i], pts[i, 1], pts[i, 2], genomes[i]) for i in range(len(front))]
    else:
        raise TypeError(f"unknown strategy {strategy!r}")
    best = min(range(len(front)), key=lambda i: keys[i])
    return front.entries[best]


def parse_strategy(text: str, weights: Sequence[float] | None = None):
    name = text.replace("-", "_").lower()
    if name == "low_latency":
        return LowLatency()
    if name == "weighted_ideal":
        return WeightedIdeal(tuple(weights) if weights is not None else (1.0, 1.0, 1.0))
    raise ValueError(f"unknown strategy {text!r}")

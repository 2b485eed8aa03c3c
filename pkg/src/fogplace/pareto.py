"""Pareto dominance, non-dominated sorting, crowding and hypervolume.

All objectives are minimised. Point sets are (n, 3) float arrays ordered as
(time, energy, cost).
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import Application, Infrastructure, Placement
from .objectives import ObjectiveVector, evaluate_batch

# Reference point used on min-max normalised objectives.
NORMALIZED_REF = (1.05, 1.05, 1.05)

DEFAULT_ENUMERATION_CAP = 10**6


class TooLarge(ValueError):
    """The search space exceeds the enumeration cap."""


def _coords(v) -> tuple[float, ...]:
    if isinstance(v, ObjectiveVector):
        return v.as_tuple()
    return tuple(float(c) for c in v)


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere."""
    a, b = _coords(a), _coords(b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def as_points(items: Iterable) -> np.ndarray:
    pts = [_coords(v) for v in items]
    if not pts:
        return np.zeros((0, 3))
    return np.asarray(pts, dtype=float)


def dominance_matrix(points: np.ndarray, violation: np.ndarray | None = None) -> np.ndarray:
    """``D[i, j]`` is True when ``i`` dominates ``j``.

    With ``violation`` given, constrained domination applies: a feasible
    point beats an infeasible one and two infeasible points compare by
    violation magnitude.
    """
    p = np.asarray(points, dtype=float)
    le = (p[:, None, :] <= p[None, :, :]).all(axis=2)
    lt = (p[:, None, :] < p[None, :, :]).any(axis=2)
    dom = le & lt
    if violation is None:
        return dom
    v = np.asarray(violation, dtype=float)
    feas = v == 0.0
    both_feasible = feas[:, None] & feas[None, :]
    return np.where(
        both_feasible,
        dom,
        (feas[:, None] & ~feas[None, :]) | (~feas[:, None] & ~feas[None, :] & (v[:, None] < v[None, :])),
    )


def fast_nondominated_sort(points, violation: np.ndarray | None = None) -> list[list[int]]:
    """Partition indices into fronts; rank 0 is the non-dominated set."""
    p = np.asarray(points if isinstance(points, np.ndarray) else as_points(points), dtype=float)
    n = len(p)
    if n == 0:
        return []
    dom = dominance_matrix(p, violation)
    counts = dom.sum(axis=0)
    assigned = np.zeros(n, dtype=bool)
    fronts = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        assigned[current] = True
        counts = counts - dom[current].sum(axis=0)
        current = np.flatnonzero((counts == 0) & ~assigned)
    return fronts


def crowding_distance(points) -> np.ndarray:
    """Deb's crowding distance; zero-range objectives contribute nothing."""
    p = np.asarray(points if isinstance(points, np.ndarray) else as_points(points), dtype=float)
    n, m = p.shape if p.ndim == 2 else (0, 0)
    dist = np.zeros(n)
    if n == 0:
        return dist
    for k in range(m):
        order = np.argsort(p[:, k], kind="stable")
        col = p[order, k]
        span = col[-1] - col[0]
        if span <= 0:
            continue
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        if n > 2:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Mask of points not dominated by any other point (duplicates all kept)."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    # After a lexicographic sort a point can only be dominated by earlier ones.
    order = np.lexsort(p.T[::-1])
    front: list[int] = []
    for idx in order:
        q = p[idx]
        if front:
            f = p[front]
            if ((f <= q).all(axis=1) & (f < q).any(axis=1)).any():
                continue
        front.append(idx)
        keep[idx] = True
    return keep


def hypervolume(front, ref) -> float:
    """Exact 3-D hypervolume dominated by ``front`` and bounded by ``ref``.

    Points that do not strictly dominate ``ref`` in every coordinate add no
    volume and are dropped. Sweeps the third objective while maintaining the
    2-D staircase of the first two.
    """
    p = np.asarray(front if isinstance(front, np.ndarray) else as_points(front), dtype=float)
    r = np.asarray(_coords(ref), dtype=float)
    if p.size == 0:
        return 0.0
    if p.shape[1] != 3:
        raise ValueError("hypervolume is implemented for exactly three objectives")
    p = p[(p < r).all(axis=1)]
    if len(p) == 0:
        return 0.0
    p = p[np.lexsort((p[:, 1], p[:, 0], p[:, 2]))]
    rx, ry, rz = (float(v) for v in r)
    xs: list[float] = []
    ys: list[float] = []
    area = 0.0
    volume = 0.0
    z_prev = float(p[0, 2])
    for px, py, pz in p.tolist():
        volume += area * (pz - z_prev)
        z_prev = pz
        pos = bisect.bisect_left(xs, px)
        if pos > 0 and ys[pos - 1] <= py:
            continue
        if pos < len(xs) and xs[pos] == px and ys[pos] <= py:
            continue
        h = ys[pos - 1] if pos > 0 else ry
        cur = px
        k = pos
        while k < len(xs) and ys[k] >= py:
            area += (xs[k] - cur) * (h - py)
            cur, h = xs[k], ys[k]
            k += 1
        nxt = xs[k] if k < len(xs) else rx
        area += (nxt - cur) * (h - py)
        xs[pos:k] = [px]
        ys[pos:k] = [py]
    volume += area * (rz - z_prev)
    return volume


@dataclass(frozen=True)
class Normalization:
    """Per-objective min-max scaling shared by every front in a comparison."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    @classmethod
    def over(cls, fronts: Sequence[np.ndarray]) -> "Normalization":
        pts = [np.asarray(f, dtype=float) for f in fronts if len(f)]
        if not pts:
            return cls((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        allp = np.vstack(pts)
        return cls(tuple(allp.min(axis=0).tolist()), tuple(allp.max(axis=0).tolist()))

    def apply(self, points: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        span = np.asarray(self.upper) - lo
        p = np.asarray(points, dtype=float)
        if p.size == 0:
            return p.reshape(0, 3)
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (p - lo) / safe, 0.0)


def normalized_hypervolume(front: np.ndarray, norm: Normalization, ref=NORMALIZED_REF) -> float:
    return hypervolume(norm.apply(front), ref)


def compare_hypervolumes(fronts: Sequence[np.ndarray], ref=NORMALIZED_REF) -> list[float]:
    """Hypervolumes of several fronts under one shared normalisation."""
    norm = Normalization.over(fronts)
    return [normalized_hypervolume(f, norm, ref) for f in fronts]


@dataclass(frozen=True)
class ParetoFront:
    entries: tuple[tuple[Placement, ObjectiveVector], ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def points(self) -> np.ndarray:
        return as_points(v for _, v in self.entries)

    @property
    def placements(self) -> list[Placement]:
        return [p for p, _ in self.entries]

    @classmethod
    def from_arrays(cls, genomes: np.ndarray, objectives: np.ndarray, violation: np.ndarray | None = None) -> "ParetoFront":
        """Front of the given candidates: feasible, non-dominated, deduplicated.

        Among placements with identical objective vectors the lexicographically
        smallest genome is kept; entries are sorted by objective vector.
        """
        g = np.asarray(genomes, dtype=np.int64)
        obj = np.asarray(objectives, dtype=float)
        if violation is not None:
            ok = np.asarray(violation) == 0.0
            g, obj = g[ok], obj[ok]
        if len(g) == 0:
            return cls(())
        keys = np.column_stack([obj, g.astype(float)])
        order = np.lexsort(keys.T[::-1])
        g, obj = g[order], obj[order]
        first = np.ones(len(obj), dtype=bool)
        first[1:] = (obj[1:] != obj[:-1]).any(axis=1)
        g, obj = g[first], obj[first]
        mask = nondominated_mask(obj)
        g, obj = g[mask], obj[mask]
        entries = tuple(
            (Placement(tuple(row)), ObjectiveVector(*map(float, o)))
            for row, o in zip(g.tolist(), obj)
        )
        return cls(entries)


def search_space_size(app: Application, infra: Infrastructure) -> int:
    return infra.size ** app.size


def enumerate_genomes(x: int, y: int, chunk: int = 65536) -> Iterable[np.ndarray]:
    """All y**x genomes in lexicographic order, in blocks of ``chunk`` rows."""
    it = itertools.product(range(y), repeat=x)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def brute_force_pareto(
    app: Application,
    infra: Infrastructure,
    cap: int = DEFAULT_ENUMERATION_CAP,
    latency_in_transfer: bool = True,
    capacity_mode: str = "per_component",
) -> ParetoFront:
    """Exact feasible Pareto set by evaluating every placement."""
    total = search_space_size(app, infra)
    if total > cap:
        raise TooLarge(f"{infra.size}^{app.size} = {total} placements exceed the cap of {cap}")
    keep_g, keep_o = [], []
    for block in enumerate_genomes(app.size, infra.size):
        res = evaluate_batch(app, infra, block, latency_in_transfer, capacity_mode)
        ok = res.feasible
        if not ok.any():
            continue
        g, o = block[ok], res.objectives[ok]
        m = nondominated_mask(o)
        keep_g.append(g[m])
        keep_o.append(o[m])
    if not keep_g:
        return ParetoFront(())
    return ParetoFront.from_arrays(np.vstack(keep_g), np.vstack(keep_o))

"""Comparison placements: a cost-optimal FSPP-style assignment and Edge-ward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    Application,
    Infrastructure,
    Placement,
    Tier,
    TIERS_BOTTOM_UP,
    validate_placement,
)
from .objectives import ObjectiveVector, evaluate
from .pareto import DEFAULT_ENUMERATION_CAP


class NoFeasiblePlacement(ValueError):
    pass


class NoIspGateway(ValueError):
    pass


@dataclass(frozen=True)
class BaselineResult:
    placement: Placement
    objectives: ObjectiveVector
    method: str
    optimal: bool


def _finish(app, infra, assign, method, optimal, latency_in_transfer, capacity_mode) -> BaselineResult:
    p = Placement(tuple(assign))
    v = evaluate(app, infra, p, latency_in_transfer, capacity_mode)
    if not v.feasible:
        raise NoFeasiblePlacement(f"{method}: {validate_placement(app, infra, p, capacity_mode).first_violation()}")
    return BaselineResult(p, v, method, optimal)


class _CostTables:
    """``cost[i, k, j]`` and ``time[i, k, j]``: component ``i`` on device ``j``
    when its predecessor sits on device ``k``.

    Built with the batch evaluator's expressions, so partial sums match it.
    """

    def __init__(self, app: Application, infra: Infrastructure, latency_in_transfer: bool):
        x, y = app.size, infra.size
        a = infra.arrays
        dev = np.arange(y)
        # Evaluate every (predecessor, device) pair per component position.
        self.cost = np.empty((x, y, y))  # [i, k, j]
        self.time = np.empty((x, y, y))
        for k in range(y):
            g = np.tile(dev[:, None], (1, x))  # row j places everything on j
            terms = self._terms(app, infra, g, k, latency_in_transfer)
            self.cost[:, k, :] = terms["cost"].T
            self.time[:, k, :] = (terms["transfer"] + terms["compute"]).T
        self.first = infra.source_device
        self.feasible = _fit_mask(app, infra)
        self.min_cost = np.where(self.feasible[:, None, :], self.cost, np.inf).min(axis=(1, 2))
        self.min_time = np.where(self.feasible[:, None, :], self.time, np.inf).min(axis=(1, 2))

    @staticmethod
    def _terms(app, infra, g, k, latency_in_transfer):
        # Same expressions as component_terms, with every predecessor forced to k.
        a = infra.arrays
        prev = np.full_like(g, k)
        moved = prev != g
        data = app.data[None, :]
        t = app.instr[None, :] / a.cpu[g]
        xfer = data / a.bw[prev, g]
        if latency_in_transfer:
            xfer = xfer + a.latency[prev, g]
        xfer = np.where(moved, xfer, 0.0)
        c = t * a.cp[g] + (data / 8.0) * a.cs[g] + xfer * a.cr[g]
        return {"compute": t, "transfer": xfer, "cost": c}


def fspp_place(
    app: Application,
    infra: Infrastructure,
    cap: int = DEFAULT_ENUMERATION_CAP,
    latency_in_transfer: bool = True,
    capacity_mode: str = "per_component",
) -> BaselineResult:
    """Cheapest feasible placement.

    Exact depth-first branch and bound when the search space has at most
    ``cap`` placements, otherwise a greedy pass in chain order. Ties go to
    the lower completion time, then to the lexicographically smaller genome.
    """
    x, y = app.size, infra.size
    tables = _CostTables(app, infra, latency_in_transfer)
    if capacity_mode == "per_component" and not tables.feasible.any(axis=1).all():
        i = int(np.flatnonzero(~tables.feasible.any(axis=1))[0])
        raise NoFeasiblePlacement(f"FSPP: component {i} fits on no device")

    if y**x <= cap:
        assign = _branch_and_bound(app, infra, tables, capacity_mode)
        optimal = True
    else:
        assign = _greedy(app, infra, tables, capacity_mode)
        optimal = False
    if assign is None:
        raise NoFeasiblePlacement("FSPP: no placement satisfies the capacity constraints")
    return _finish(app, infra, assign, "FSPP", optimal, latency_in_transfer, capacity_mode)


def _fit_mask(app: Application, infra: Infrastructure) -> np.ndarray:
    """``mask[i, j]``: component ``i`` alone satisfies device ``j``'s capacities."""
    a = infra.arrays
    return (
        (app.cpu_req[:, None] < a.cpu[None, :])
        & (app.mem_req[:, None] < a.mem[None, :])
        & ((app.data / 8.0)[:, None] < a.stor[None, :])
    )


def _fits(app, infra, partial: list[int], j: int, capacity_mode: str, mask: np.ndarray) -> bool:
    i = len(partial)
    if capacity_mode == "per_component":
        return bool(mask[i, j])
    assign = partial + [j]
    # Prefix check: aggregate demands only grow as components are added.
    sub = Application(app.components[: i + 1], app.data_in[: i + 1], app.name)
    return validate_placement(sub, infra, Placement(assign), capacity_mode).feasible


def _branch_and_bound(app, infra, tables: _CostTables, capacity_mode: str) -> list[int] | None:
    x, y = app.size, infra.size
    # Optimistic completion bounds for the remaining suffix.
    rest_cost = np.concatenate([np.cumsum(tables.min_cost[::-1])[::-1], [0.0]])
    rest_time = np.concatenate([np.cumsum(tables.min_time[::-1])[::-1], [0.0]])
    best: list = [None, np.inf, np.inf]  # assign, cost, time

    def better(c, t, assign) -> bool:
        if c != best[1]:
            return c < best[1]
        if t != best[2]:
            return t < best[2]
        return best[0] is None or assign < best[0]

    def dfs(partial: list[int], c: float, t: float):
        i = len(partial)
        if i == x:
            if better(c, t, partial):
                best[0], best[1], best[2] = list(partial), c, t
            return
        k = partial[-1] if partial else tables.first
        order = sorted(range(y), key=lambda j: (tables.cost[i, k, j], j))
        for j in order:
            if not _fits(app, infra, partial, j, capacity_mode, tables.feasible):
                continue
            nc = c + tables.cost[i, k, j]
            nt = t + tables.time[i, k, j]
            lb_c = nc + rest_cost[i + 1]
            if lb_c > best[1] or (lb_c == best[1] and nt + rest_time[i + 1] > best[2]):
                continue
            partial.append(j)
            dfs(partial, nc, nt)
            partial.pop()

    dfs([], 0.0, infra.ingress_latency)
    return best[0]


def _greedy(app, infra, tables: _CostTables, capacity_mode: str) -> list[int] | None:
    assign: list[int] = []
    k = tables.first
    for i in range(app.size):
        options = [
            (tables.cost[i, k, j], tables.time[i, k, j], j)
            for j in range(infra.size)
            if _fits(app, infra, assign, j, capacity_mode, tables.feasible)
        ]
        if not options:
            return None
        j = min(options)[2]
        assign.append(j)
        k = j
    return assign


def edge_ward_place(
    app: Application,
    infra: Infrastructure,
    latency_in_transfer: bool = True,
    capacity_mode: str = "per_component",
) -> BaselineResult:
    """Hierarchical best fit with the last component pinned to the ISP gateway.

    Earlier components go bottom-up through ME, WiFi GW/BTS, ISP GW and CDC;
    within a tier the feasible device with the smallest sufficient CPU wins.
    """
    isps = infra.by_tier(Tier.ISP_GW)
    if not isps:
        raise NoIspGateway("edge-ward needs an ISP gateway for the last component")
    last = max(isps, key=lambda j: (infra.devices[j].cpu, -j))
    cpu = [d.cpu for d in infra.devices]

    mask = _fit_mask(app, infra)
    assign: list[int] = []
    for i in range(app.size - 1):
        chosen = None
        for tier in TIERS_BOTTOM_UP:
            fits = [j for j in infra.by_tier(tier) if _fits(app, infra, assign, j, capacity_mode, mask)]
            if fits:
                chosen = min(fits, key=lambda j: (cpu[j], j))
                break
        if chosen is None:
            raise NoFeasiblePlacement(f"EW: component {i} fits on no device")
        assign.append(chosen)
    if not _fits(app, infra, assign, last, capacity_mode, mask):
        raise NoFeasiblePlacement(f"EW: component {app.size - 1} does not fit on ISP gateway {last}")
    assign.append(last)
    return _finish(app, infra, assign, "EW", False, latency_in_transfer, capacity_mode)

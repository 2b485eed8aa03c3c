"""Completion time, energy and economic cost of a placement.

The scalar functions (``completion_time``, ``energy``, ``cost``) walk the
chain one component at a time and are the readable reference.
``evaluate_batch`` computes the same quantities for many genomes at once and
is what ``evaluate``, the optimizer, the baselines and the brute-force oracle
all go through, so objective vectors agree bit for bit across those paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    Application,
    Component,
    Device,
    Infrastructure,
    Link,
    Placement,
    ShapeMismatch,
    mbit_to_mb,
    validate_placement,
    _STRICT_FLOOR,
)


@dataclass(frozen=True)
class ObjectiveVector:
    time: float
    energy: float
    cost: float
    feasible: bool = True
    violation: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.time, self.energy, self.cost)


def computation_time(c: Component, d: Device) -> float:
    return c.instr / d.cpu


def transfer_time(data: float, link: Link, latency_in_transfer: bool = True) -> float:
    """Time to receive ``data`` Mbit over ``link``; zero on the same device."""
    if math.isinf(link.bw):
        return 0.0
    t = data / link.bw
    if latency_in_transfer:
        t += link.latency
    return t


def _hops(app: Application, infra: Infrastructure, p: Placement) -> list[tuple[int, int]]:
    """(sender, receiver) device pair feeding each component's input."""
    p.check(app, infra)
    prev = [infra.source_device] + list(p.assign[:-1])
    return list(zip(prev, p.assign))


def completion_time(
    app: Application, infra: Infrastructure, p: Placement, latency_in_transfer: bool = True
) -> float:
    total = infra.ingress_latency
    for i, (k, j) in enumerate(_hops(app, infra, p)):
        total += transfer_time(app.data_in[i], infra.link(k, j), latency_in_transfer)
        total += computation_time(app.components[i], infra.devices[j])
    return total


def energy(
    app: Application, infra: Infrastructure, p: Placement, latency_in_transfer: bool = True
) -> float:
    total = 0.0
    for i, (k, j) in enumerate(_hops(app, infra, p)):
        d = infra.devices[j]
        t = computation_time(app.components[i], d)
        e = d.p_compute * t + d.p_static * t
        if k != j:
            # Receiver-side interface energy.
            e += d.p_network * transfer_time(app.data_in[i], infra.link(k, j), latency_in_transfer)
            e += d.e_const
        total += e
    return total


def cost(
    app: Application, infra: Infrastructure, p: Placement, latency_in_transfer: bool = True
) -> float:
    total = 0.0
    for i, (k, j) in enumerate(_hops(app, infra, p)):
        d = infra.devices[j]
        t = computation_time(app.components[i], d)
        xfer = transfer_time(app.data_in[i], infra.link(k, j), latency_in_transfer)
        total += t * d.cp + mbit_to_mb(app.data_in[i]) * d.cs + xfer * d.cr
    return total


@dataclass(frozen=True)
class BatchResult:
    """Objectives of ``n`` genomes: ``objectives`` is (n, 3) as (time, energy, cost)."""

    objectives: np.ndarray
    violation: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return self.violation == 0.0

    def __len__(self):
        return len(self.violation)

    def vector(self, i: int) -> ObjectiveVector:
        t, e, c = (float(v) for v in self.objectives[i])
        v = float(self.violation[i])
        return ObjectiveVector(t, e, c, v == 0.0, v)


def _chain_sum(cols: np.ndarray, start: float | np.ndarray = 0.0) -> np.ndarray:
    # Left-to-right accumulation so every row sums in the same order.
    total = np.zeros(cols.shape[0]) + start
    for i in range(cols.shape[1]):
        total = total + cols[:, i]
    return total


def component_terms(
    app: Application,
    infra: Infrastructure,
    genomes: np.ndarray,
    latency_in_transfer: bool = True,
) -> dict[str, np.ndarray]:
    """Per-component time, energy and cost terms, each of shape (n, x)."""
    a = infra.arrays
    g = np.asarray(genomes, dtype=np.intp)
    if g.ndim == 1:
        g = g[None, :]
    n, x = g.shape
    prev = np.empty_like(g)
    prev[:, 0] = infra.source_device
    prev[:, 1:] = g[:, :-1]
    moved = prev != g
    data = app.data[None, :]

    t = app.instr[None, :] / a.cpu[g]
    xfer = data / a.bw[prev, g]  # diagonal bw is inf -> 0
    if latency_in_transfer:
        xfer = xfer + a.latency[prev, g]
    xfer = np.where(moved, xfer, 0.0)

    e = a.p_compute[g] * t + a.p_static[g] * t
    e = e + np.where(moved, a.p_network[g] * xfer + a.e_const[g], 0.0)
    c = t * a.cp[g] + (data / 8.0) * a.cs[g] + xfer * a.cr[g]
    return {"compute": t, "transfer": xfer, "energy": e, "cost": c}


def batch_violation(app: Application, infra: Infrastructure, genomes: np.ndarray, mode: str = "per_component") -> np.ndarray:
    a = infra.arrays
    g = np.asarray(genomes, dtype=np.intp)
    if g.ndim == 1:
        g = g[None, :]
    if mode != "per_component":
        return np.array([validate_placement(app, infra, Placement(row), mode).violation for row in g])

    def excess(demand, capacity):
        ratio = demand / capacity
        return np.where(demand < capacity, 0.0, np.maximum(ratio - 1.0, _STRICT_FLOOR))

    v = excess(app.cpu_req[None, :], a.cpu[g])
    v = v + excess(app.mem_req[None, :], a.mem[g])
    v = v + excess(app.data[None, :] / 8.0, a.stor[g])
    return _chain_sum(v)


def evaluate_batch(
    app: Application,
    infra: Infrastructure,
    genomes: np.ndarray,
    latency_in_transfer: bool = True,
    capacity_mode: str = "per_component",
) -> BatchResult:
    g = np.asarray(genomes, dtype=np.intp)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape[1] != app.size:
        raise ShapeMismatch(f"placement has {g.shape[1]} entries, application has {app.size}")
    if g.size and (g.min() < 0 or g.max() >= infra.size):
        raise ShapeMismatch(f"genome entries must lie in [0, {infra.size})")
    terms = component_terms(app, infra, g, latency_in_transfer)
    # T(m_i) = T(m_{i-1}) + transfer_i + compute_i
    time = np.zeros(g.shape[0]) + infra.ingress_latency
    for i in range(app.size):
        time = time + terms["transfer"][:, i] + terms["compute"][:, i]
    objs = np.column_stack([time, _chain_sum(terms["energy"]), _chain_sum(terms["cost"])])
    return BatchResult(objs, batch_violation(app, infra, g, capacity_mode))


def evaluate(
    app: Application,
    infra: Infrastructure,
    p: Placement,
    latency_in_transfer: bool = True,
    capacity_mode: str = "per_component",
) -> ObjectiveVector:
    """Objective vector plus feasibility of one placement. Pure."""
    p.check(app, infra)
    res = evaluate_batch(app, infra, np.asarray(p.assign)[None, :], latency_in_transfer, capacity_mode)
    report = validate_placement(app, infra, p, capacity_mode)
    t, e, c = (float(v) for v in res.objectives[0])
    return ObjectiveVector(t, e, c, report.feasible, report.violation)

"""Application, infrastructure and placement data model.

Canonical units everywhere: seconds, joules, cents, MI (workload), MIPS
(processing speed), Mbit (data), Mbit/s (bandwidth), MB (memory and
storage), W (power). Data sizes are converted Mbit -> MB (divide by 8)
whenever they meet a storage capacity or a per-MB price.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

MBIT_PER_MB = 8.0

CAPACITY_MODES = ("per_component", "aggregate")

# Placed on every violated constraint so that a demand exactly equal to
# capacity (infeasible under the strict inequality) still yields violation > 0.
_STRICT_FLOOR = 1e-12


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class EmptyApplication(ModelError):
    pass


class NegativeDemand(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class BranchingApplication(ModelError):
    pass


class ShapeMismatch(ModelError):
    pass


class InvalidInfrastructure(ModelError):
    pass


class Tier(str, enum.Enum):
    CDC = "CDC"
    ISP_GW = "ISP_GW"
    WIFI_GW_BTS = "WIFI_GW_BTS"
    ME = "ME"


# Bottom-up order, used by the edge-ward heuristic.
TIERS_BOTTOM_UP = (Tier.ME, Tier.WIFI_GW_BTS, Tier.ISP_GW, Tier.CDC)


def mbit_to_mb(data: float) -> float:
    return data / MBIT_PER_MB


def _readonly(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Component:
    """One state of the application chain and its minimal resource demands."""

    id: int
    instr: float
    cpu_req: float
    mem_req: float
    stor_req: float

    def __post_init__(self):
        if not self.instr >= 0:
            raise NegativeDemand(f"component {self.id}: instr must be >= 0, got {self.instr}")
        for name in ("cpu_req", "mem_req", "stor_req"):
            value = getattr(self, name)
            if not value > 0:
                raise NegativeDemand(f"component {self.id}: {name} must be > 0, got {value}")


@dataclass(frozen=True)
class Application:
    """A chain m_1 -> m_2 -> ... -> m_x.

    ``data_in[i]`` is the data (Mbit) consumed by component ``i``; ``data_in[0]``
    arrives from the IoT devices. The accepting state is the last component.
    """

    components: tuple[Component, ...]
    data_in: tuple[float, ...]
    name: str = "app"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "data_in", tuple(float(d) for d in self.data_in))
        if not self.components:
            raise EmptyApplication("an application needs at least one component")
        if len(self.data_in) != len(self.components):
            raise LengthMismatch(
                f"{len(self.components)} components but {len(self.data_in)} data sizes"
            )
        for i, d in enumerate(self.data_in):
            if not d >= 0:
                raise NegativeDemand(f"data_in[{i}] must be >= 0, got {d}")
        for i, c in enumerate(self.components):
            if c.id != i:
                raise ModelError(f"component at position {i} has id {c.id}")

    @property
    def size(self) -> int:
        return len(self.components)

    def succ(self, i: int) -> int | None:
        return i + 1 if i + 1 < self.size else None

    def pred(self, i: int) -> int | None:
        return i - 1 if i > 0 else None

    @cached_property
    def instr(self) -> np.ndarray:
        return _readonly([c.instr for c in self.components])

    @cached_property
    def cpu_req(self) -> np.ndarray:
        return _readonly([c.cpu_req for c in self.components])

    @cached_property
    def mem_req(self) -> np.ndarray:
        return _readonly([c.mem_req for c in self.components])

    @cached_property
    def stor_req(self) -> np.ndarray:
        return _readonly([c.stor_req for c in self.components])

    @cached_property
    def data(self) -> np.ndarray:
        return _readonly(self.data_in)


@dataclass(frozen=True)
class Device:
    id: int
    tier: Tier
    cpu: float
    mem: float
    stor: float
    p_compute: float = 0.0
    p_network: float = 0.0
    e_const: float = 0.0
    p_static: float = 0.0
    cp: float = 0.0
    cs: float = 0.0
    cr: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tier", Tier(self.tier))
        for name in ("cpu", "mem", "stor"):
            if not getattr(self, name) > 0:
                raise InvalidInfrastructure(f"device {self.id}: {name} must be > 0")
        for name in ("p_compute", "p_network", "e_const", "p_static", "cp", "cs", "cr"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidInfrastructure(f"device {self.id}: {name} must be finite and >= 0")


@dataclass(frozen=True)
class Link:
    bw: float
    latency: float

    def __post_init__(self):
        if not self.bw > 0:
            raise InvalidInfrastructure(f"link bandwidth must be > 0, got {self.bw}")
        if not self.latency >= 0:
            raise InvalidInfrastructure(f"link latency must be >= 0, got {self.latency}")


SAME_DEVICE = Link(bw=math.inf, latency=0.0)


@dataclass(frozen=True)
class Infrastructure:
    """Devices plus symmetric pairwise links.

    ``bw`` and ``latency`` are y-by-y tables; their diagonals are ignored on
    input and replaced by the zero-cost sentinel (infinite bandwidth, zero
    latency). ``ingress_latency`` is the IoT -> source-device hop and only
    shifts completion time.
    """

    devices: tuple[Device, ...]
    bw: tuple[tuple[float, ...], ...]
    latency: tuple[tuple[float, ...], ...]
    source_device: int | None = None
    ingress_latency: float = 0.0

    def __post_init__(self):
        devices = tuple(self.devices)
        y = len(devices)
        if y == 0:
            raise InvalidInfrastructure("infrastructure needs at least one device")
        for j, d in enumerate(devices):
            if d.id != j:
                raise InvalidInfrastructure(f"device at position {j} has id {d.id}")
        bw = _square(self.bw, y, "bw")
        lat = _square(self.latency, y, "latency")
        for k in range(y):
            bw[k][k] = math.inf
            lat[k][k] = 0.0
            for j in range(k):
                if bw[k][j] != bw[j][k] or lat[k][j] != lat[j][k]:
                    raise InvalidInfrastructure(f"links ({k},{j}) and ({j},{k}) differ")
                Link(bw[k][j], lat[k][j])  # validates
        if not self.ingress_latency >= 0:
            raise InvalidInfrastructure("ingress_latency must be >= 0")
        source = self.source_device
        if source is None:
            source = _default_source(devices)
        if not 0 <= source < y:
            raise InvalidInfrastructure(f"source_device {source} out of range")
        object.__setattr__(self, "devices", devices)
        object.__setattr__(self, "bw", tuple(tuple(r) for r in bw))
        object.__setattr__(self, "latency", tuple(tuple(r) for r in lat))
        object.__setattr__(self, "source_device", int(source))

    @property
    def size(self) -> int:
        return len(self.devices)

    def link(self, k: int, j: int) -> Link:
        if k == j:
            return SAME_DEVICE
        return Link(self.bw[k][j], self.latency[k][j])

    def by_tier(self, tier: Tier) -> list[int]:
        return [d.id for d in self.devices if d.tier is tier]

    def _column(self, name: str) -> np.ndarray:
        return _readonly([getattr(d, name) for d in self.devices])

    @cached_property
    def arrays(self) -> "DeviceArrays":
        return DeviceArrays(
            cpu=self._column("cpu"),
            mem=self._column("mem"),
            stor=self._column("stor"),
            p_compute=self._column("p_compute"),
            p_network=self._column("p_network"),
            e_const=self._column("e_const"),
            p_static=self._column("p_static"),
            cp=self._column("cp"),
            cs=self._column("cs"),
            cr=self._column("cr"),
            bw=_readonly(self.bw),
            latency=_readonly(self.latency),
        )


@dataclass(frozen=True)
class DeviceArrays:
    """Column view of an infrastructure for vectorised evaluation."""

    cpu: np.ndarray
    mem: np.ndarray
    stor: np.ndarray
    p_compute: np.ndarray
    p_network: np.ndarray
    e_const: np.ndarray
    p_static: np.ndarray
    cp: np.ndarray
    cs: np.ndarray
    cr: np.ndarray
    bw: np.ndarray
    latency: np.ndarray


def _square(rows, y: int, name: str) -> list[list[float]]:
    out = [[float(v) if v is not None else math.nan for v in row] for row in rows]
    if len(out) != y or any(len(r) != y for r in out):
        raise InvalidInfrastructure(f"{name} must be a {y}x{y} table")
    return out


def _default_source(devices: Sequence[Device]) -> int:
    for d in devices:
        if d.tier is Tier.ME:
            return d.id
    return 0


@dataclass(frozen=True)
class Placement:
    """``assign[i]`` is the device hosting component ``i``."""

    assign: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assign", tuple(int(a) for a in self.assign))

    def __len__(self):
        return len(self.assign)

    def label(self) -> str:
        return "-".join(str(a) for a in self.assign)

    def check(self, app: Application, infra: Infrastructure) -> None:
        if len(self.assign) != app.size:
            raise ShapeMismatch(f"placement has {len(self.assign)} entries, application has {app.size}")
        for i, a in enumerate(self.assign):
            if not 0 <= a < infra.size:
                raise ShapeMismatch(f"assign[{i}] = {a} is not a device index in [0, {infra.size})")


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violation: float
    per_component: tuple[tuple[str, ...], ...] = field(default_factory=tuple)

    def first_violation(self) -> str | None:
        for i, labels in enumerate(self.per_component):
            if labels:
                return f"component {i} violates {labels[0]}"
        return None


def build_application(spec: Mapping[str, Any]) -> Application:
    """Build a validated chain application from a plain mapping.

    ``spec`` holds ``components`` (mappings with ``instr``, ``cpu_req``,
    ``mem_req``, ``stor_req``), ``data_in`` and optionally ``name`` and
    ``transitions``. Transitions, when given, must spell out the chain
    ``[[0, 1], [1, 2], ...]``; anything else is a branching graph.
    """
    comps = spec.get("components") or []
    if not comps:
        raise EmptyApplication("an application needs at least one component")
    data_in = list(spec.get("data_in", []))
    if len(data_in) != len(comps):
        raise LengthMismatch(f"{len(comps)} components but {len(data_in)} data sizes")
    transitions = spec.get("transitions")
    if transitions is not None:
        chain = [[i, i + 1] for i in range(len(comps) - 1)]
        if [list(t) for t in transitions] != chain:
            raise BranchingApplication("only sequential chains m_1 -> ... -> m_x are supported")
    components = tuple(
        Component(
            id=i,
            instr=float(c["instr"]),
            cpu_req=float(c["cpu_req"]),
            mem_req=float(c["mem_req"]),
            stor_req=float(c["stor_req"]),
        )
        for i, c in enumerate(comps)
    )
    return Application(components, tuple(float(d) for d in data_in), str(spec.get("name", "app")))


def encode_application(app: Application) -> dict:
    return {
        "name": app.name,
        "components": [
            {"instr": c.instr, "cpu_req": c.cpu_req, "mem_req": c.mem_req, "stor_req": c.stor_req}
            for c in app.components
        ],
        "data_in": list(app.data_in),
    }


def validate_placement(
    app: Application,
    infra: Infrastructure,
    p: Placement,
    mode: str = "per_component",
) -> FeasibilityReport:
    """Check the strict capacity inequalities for every component.

    ``per_component`` checks CPU(m_i) < CPU_j, MEM(m_i) < MEM_j and
    Data_i < STOR_j in isolation. ``aggregate`` keeps the CPU check per
    component but compares the summed memory demand, and the summed declared
    storage plus input data, of all components hosted on a device.
    """
    p.check(app, infra)
    if mode not in CAPACITY_MODES:
        raise ValueError(f"unknown capacity mode {mode!r}")
    labels: list[list[str]] = [[] for _ in range(app.size)]
    violation = 0.0

    def excess(demand: float, capacity: float) -> float:
        return max(demand / capacity - 1.0, _STRICT_FLOOR)

    for i, (c, j) in enumerate(zip(app.components, p.assign)):
        d = infra.devices[j]
        if not c.cpu_req < d.cpu:
            labels[i].append("cpu")
            violation += excess(c.cpu_req, d.cpu)
        if mode == "aggregate":
            continue
        if not c.mem_req < d.mem:
            labels[i].append("mem")
            violation += excess(c.mem_req, d.mem)
        data_mb = mbit_to_mb(app.data_in[i])
        if not data_mb < d.stor:
            labels[i].append("stor")
            violation += excess(data_mb, d.stor)

    if mode == "aggregate":
        # Co-located components contend for memory and storage.
        for j in sorted(set(p.assign)):
            hosted = [i for i, a in enumerate(p.assign) if a == j]
            d = infra.devices[j]
            mem = sum(app.components[i].mem_req for i in hosted)
            stor = sum(app.components[i].stor_req + mbit_to_mb(app.data_in[i]) for i in hosted)
            if not mem < d.mem:
                violation += excess(mem, d.mem)
                for i in hosted:
                    labels[i].append("mem")
            if not stor < d.stor:
                violation += excess(stor, d.stor)
                for i in hosted:
                    labels[i].append("stor")

    per_component = tuple(tuple(l) for l in labels)
    feasible = not any(per_component)
    return FeasibilityReport(feasible, 0.0 if feasible else violation, per_component)

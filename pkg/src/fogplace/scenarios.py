"""Simulated fog infrastructure, medical case-study chains and experiment sweeps.

Device parameter ranges follow the simulated cluster: one cloud data centre
behind an ISP gateway, WiFi gateways / cellular base stations below it, and
mobile-edge devices at the bottom next to the IoT sensors. GB figures are
converted to MB with a factor of 1000.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .domain import Application, Component, Device, Infrastructure, Tier
from .optimizer import LowLatency, Nsga2Params, nsga2_run, select_placement
from .pareto import compare_hypervolumes

class InvalidConfig(ValueError):
    pass


class OutOfRange(UserWarning):
    """A case-study parameter lies outside its published range."""


Range = tuple[float, float]


@dataclass(frozen=True)
class TierRanges:
    cpu: Range
    mem: Range
    stor: Range
    p_compute: Range
    cp: Range
    cs: Range
    bw: Range
    p_network: Range
    cr: Range
    e_const: Range = (0.0, 0.0)
    p_static: Range = (0.0, 0.0)


def _fixed(v: float) -> Range:
    return (v, v)


DEFAULT_RANGES: dict[Tier, TierRanges] = {
    Tier.CDC: TierRanges(
        cpu=_fixed(250e3), mem=_fixed(32e3), stor=_fixed(512e3), p_compute=_fixed(1650.0),
        cp=_fixed(0.03), cs=_fixed(10e-7), bw=_fixed(10000.0), p_network=_fixed(1300.0), cr=_fixed(3e-6),
    ),
    Tier.ISP_GW: TierRanges(
        cpu=_fixed(65e3), mem=_fixed(16e3), stor=_fixed(250e3), p_compute=_fixed(530.0),
        cp=_fixed(0.035), cs=_fixed(15e-6), bw=(1000.0, 2000.0), p_network=_fixed(410.0), cr=_fixed(35e-7),
    ),
    Tier.WIFI_GW_BTS: TierRanges(
        cpu=(10e3, 15e3), mem=(8e3, 16e3), stor=_fixed(128e3), p_compute=(380.0, 410.0),
        cp=(0.04, 0.05), cs=(10e-6, 20e-6), bw=(400.0, 1000.0), p_network=(1.80, 2.00), cr=(3e-6, 5e-6),
    ),
    Tier.ME: TierRanges(
        cpu=(2e3, 10e3), mem=(0.5e3, 2e3), stor=(16e3, 64e3), p_compute=(2.50, 3.20),
        cp=(0.02, 0.04), cs=(20e-6, 30e-6), bw=(250.0, 400.0), p_network=(1.00, 1.50), cr=(3e-6, 5e-6),
    ),
}

# Top-down hierarchy; each tier hangs off the nearest populated tier above it.
_HIERARCHY = (Tier.CDC, Tier.ISP_GW, Tier.WIFI_GW_BTS, Tier.ME)


@dataclass(frozen=True)
class InfraConfig:
    counts: tuple[tuple[Tier, int], ...] = (
        (Tier.CDC, 1), (Tier.ISP_GW, 1), (Tier.WIFI_GW_BTS, 2), (Tier.ME, 11),
    )
    ranges: tuple[tuple[Tier, TierRanges], ...] = tuple(DEFAULT_RANGES.items())
    iot_latency: float = 0.001
    me_wifi_latency: float = 0.010
    wifi_isp_latency: float = 0.050
    isp_cdc_latency: float = 0.100
    seed: int = 0

    def count(self, tier: Tier) -> int:
        return dict(self.counts).get(tier, 0)

    def range_for(self, tier: Tier) -> TierRanges:
        return dict(self.ranges)[tier]

    def hop_latency(self, upper: Tier, lower: Tier) -> float:
        """Latency of the direct edge from ``lower`` up to ``upper``, skipping empty tiers."""
        hops = {
            Tier.ISP_GW: self.isp_cdc_latency,
            Tier.WIFI_GW_BTS: self.wifi_isp_latency,
            Tier.ME: self.me_wifi_latency,
        }
        lo, hi = _HIERARCHY.index(lower), _HIERARCHY.index(upper)
        return sum(hops[_HIERARCHY[k]] for k in range(hi + 1, lo + 1))

    def validate(self) -> None:
        counts = dict(self.counts)
        if any(c < 0 for c in counts.values()):
            raise InvalidConfig("tier counts must be >= 0")
        if sum(counts.values()) < 1:
            raise InvalidConfig("the infrastructure needs at least one device")
        for tier, r in self.ranges:
            for name, (lo, hi) in vars(r).items():
                if not lo <= hi:
                    raise InvalidConfig(f"{tier.value}.{name}: range low {lo} exceeds high {hi}")
        for name in ("iot_latency", "me_wifi_latency", "wifi_isp_latency", "isp_cdc_latency"):
            if not getattr(self, name) >= 0:
                raise InvalidConfig(f"{name} must be >= 0")


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def build_infrastructure(cfg: InfraConfig = InfraConfig()) -> Infrastructure:
    """Sample a tree-shaped cluster.

    Non-adjacent devices communicate over the unique tree path: latencies add
    up and the bandwidth is the narrowest link on the path. A device's uplink
    bandwidth is the smaller of its own and its parent's interface bandwidth.
    """
    cfg.validate()
    rng = _rng(cfg.seed)
    devices: list[Device] = []
    iface_bw: list[float] = []
    tiers: list[Tier] = []
    for tier in _HIERARCHY:
        r = cfg.range_for(tier)
        for _ in range(cfg.count(tier)):
            sample = {name: float(rng.uniform(lo, hi)) if lo < hi else float(lo) for name, (lo, hi) in vars(r).items()}
            iface_bw.append(sample.pop("bw"))
            devices.append(Device(id=len(devices), tier=tier, **sample))
            tiers.append(tier)

    y = len(devices)
    parent = [-1] * y
    up_lat = [0.0] * y
    up_bw = [math.inf] * y
    members = {t: [d.id for d in devices if d.tier is t] for t in _HIERARCHY}
    for tier in _HIERARCHY:
        above = [t for t in _HIERARCHY[: _HIERARCHY.index(tier)] if members[t]]
        if not above:
            continue
        ptier = above[-1]
        for k, j in enumerate(members[tier]):
            p = members[ptier][k % len(members[ptier])]
            parent[j] = p
            up_lat[j] = cfg.hop_latency(ptier, tier)
            up_bw[j] = min(iface_bw[j], iface_bw[p])

    def chain(j):
        out = [j]
        while parent[out[-1]] >= 0:
            out.append(parent[out[-1]])
        return out

    paths = [chain(j) for j in range(y)]
    bw = [[math.inf] * y for _ in range(y)]
    lat = [[0.0] * y for _ in range(y)]
    for a in range(y):
        for b in range(a + 1, y):
            pa, pb = paths[a], paths[b]
            common = set(pa) & set(pb)
            # Roots without a common ancestor meet at a zero-cost backbone.
            ua = pa[: next((i for i, v in enumerate(pa) if v in common), len(pa))]
            ub = pb[: next((i for i, v in enumerate(pb) if v in common), len(pb))]
            edges = ua + ub
            lat[a][b] = lat[b][a] = sum(up_lat[v] for v in edges)
            bw[a][b] = bw[b][a] = min((up_bw[v] for v in edges), default=math.inf)

    for a in range(y):
        for b in range(y):
            if a != b and math.isinf(bw[a][b]):
                bw[a][b] = 1e12  # unconstrained backbone
    return Infrastructure(
        devices=tuple(devices),
        bw=tuple(map(tuple, bw)),
        latency=tuple(map(tuple, lat)),
        source_device=members[Tier.ME][0] if members[Tier.ME] else 0,
        ingress_latency=cfg.iot_latency,
    )


# -- case studies ------------------------------------------------------------


@dataclass(frozen=True)
class CaseStudy:
    components: int
    instr: Range
    mem: Range
    stor: Range


# Only the insulin pump's component count is published; 5 and 7 are assumptions.
CASE_STUDIES: dict[str, CaseStudy] = {
    "augmented_reality": CaseStudy(5, (100.0, 2000.0), (10.0, 30.0), (256.0, 512.0)),
    "insulin_pump": CaseStudy(8, (200.0, 2000.0), (10.0, 60.0), (256.0, 1024.0)),
    "mental_health": CaseStudy(7, (200.0, 2000.0), (10.0, 50.0), (256.0, 512.0)),
}


def build_case_study(
    kind: str,
    instr: float = 2000.0,
    data: float = 4.0,
    seed: int = 0,
    components: int | None = None,
    cpu_req: float | None = None,
) -> Application:
    """Uniform chain for one of the medical case studies.

    Every component runs ``instr`` MI and consumes ``data`` Mbit. Memory and
    storage demands are drawn from the case study's ranges. ``cpu_req``
    defaults to ``instr`` (MIPS), i.e. each component must be able to finish
    within one second on its host.
    """
    try:
        case = CASE_STUDIES[kind.replace("-", "_")]
    except KeyError:
        raise InvalidConfig(f"unknown case study {kind!r}; choose from {sorted(CASE_STUDIES)}") from None
    lo, hi = case.instr
    if not lo <= instr <= hi:
        warnings.warn(f"{kind}: instr {instr} MI outside [{lo}, {hi}]", OutOfRange, stacklevel=2)
    x = case.components if components is None else int(components)
    if x < 1:
        raise InvalidConfig("components must be >= 1")
    req = cpu_req if cpu_req is not None else max(float(instr), 1.0)
    rng = _rng(seed, 1)
    comps = []
    for i in range(x):
        mem = float(rng.uniform(*case.mem))
        stor = float(rng.uniform(*case.stor))
        comps.append(Component(id=i, instr=float(instr), cpu_req=req, mem_req=mem, stor_req=stor))
    return Application(tuple(comps), tuple([float(data)] * x), name=kind)


def random_instance(seed: int, x: int, y: int) -> tuple[Application, Infrastructure]:
    """Small mixed-tier cluster and a chain with heterogeneous demands.

    Meant for exhaustive cross-checks: one CDC, one ISP gateway when
    ``y >= 3``, and the rest split between WiFi gateways and ME devices.
    Component CPU demands are drawn up to 12000 MIPS, so some edge devices
    are infeasible for some components.
    """
    if x < 1 or y < 1:
        raise InvalidConfig("x and y must be >= 1")
    rng = _rng(seed, 2)
    isp = 1 if y >= 3 else 0
    wifi = int(rng.integers(0, y - 1 - isp + 1))
    counts = ((Tier.CDC, 1), (Tier.ISP_GW, isp), (Tier.WIFI_GW_BTS, wifi), (Tier.ME, y - 1 - isp - wifi))
    infra = build_infrastructure(InfraConfig(counts=counts, seed=int(rng.integers(2**32))))
    comps = []
    for i in range(x):
        instr = float(rng.uniform(100.0, 2000.0))
        comps.append(
            Component(
                id=i,
                instr=instr,
                cpu_req=float(rng.uniform(100.0, 12000.0)),
                mem_req=float(rng.uniform(10.0, 1000.0)),
                stor_req=float(rng.uniform(256.0, 1024.0)),
            )
        )
    data = tuple(float(rng.choice([0.5, 1.0, 4.0, 32.0])) for _ in range(x))
    return Application(tuple(comps), data, name="random"), infra


# -- sweeps ------------------------------------------------------------------

METHODS = ("MAPO", "FSPP", "EW")
SWEEP_DEFAULTS = {
    "data_size": (0.5, 1.0, 4.0),
    "cpu_workload": (250.0, 500.0, 1000.0, 2000.0),
    "components": (5, 10, 15, 20, 25, 30),
    "evaluations": (1000, 2000, 5000, 7500, 10000, 12500, 14000),
}
PROFILE_REPETITIONS = {"ci": 100, "paper": 1000}


@dataclass(frozen=True)
class SweepConfig:
    variable: str = "data_size"
    levels: tuple[float, ...] | None = None
    repetitions: int = 1000
    methods: tuple[str, ...] = METHODS
    fixed_instr: float = 2000.0
    fixed_data: float = 4.0
    seed: int = 0
    nsga: Nsga2Params = Nsga2Params()

    def resolved_levels(self) -> tuple:
        return tuple(self.levels) if self.levels is not None else SWEEP_DEFAULTS[self.variable]

    def validate(self) -> None:
        if self.variable not in SWEEP_DEFAULTS:
            raise InvalidConfig(f"unknown sweep variable {self.variable!r}")
        if not self.resolved_levels():
            raise InvalidConfig("levels must be nonempty")
        if self.repetitions < 1:
            raise InvalidConfig("repetitions must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise InvalidConfig(f"methods must be a nonempty subset of {METHODS}")


@dataclass(frozen=True)
class ResultRow:
    method: str
    level: float
    mean_time: float
    mean_energy: float
    mean_cost: float
    std_time: float
    std_energy: float
    std_cost: float
    repetitions: int
    failures: int


@dataclass
class ResultTable:
    variable: str
    rows: list[ResultRow]
    raw: list[dict] = field(default_factory=list)

    def row(self, method: str, level) -> ResultRow:
        for r in self.rows:
            if r.method == method and r.level == level:
                return r
        raise KeyError((method, level))


def repetition_seeds(master: int, rep: int) -> tuple[int, int, int]:
    """(infrastructure, application, optimizer) seeds for one repetition.

    Independent of the sweep level, so every level and every method of a
    repetition see the same sampled cluster and demands.
    """
    words = np.random.SeedSequence(master, spawn_key=(rep,)).generate_state(3, dtype=np.uint64)
    return tuple(int(w) for w in words)


def scenario_for(app_kind: str, infra_cfg: InfraConfig, sweep: SweepConfig, level, rep: int):
    infra_seed, app_seed, opt_seed = repetition_seeds(sweep.seed, rep)
    instr, data, x = sweep.fixed_instr, sweep.fixed_data, None
    params = replace(sweep.nsga, seed=opt_seed)
    if sweep.variable == "data_size":
        data = float(level)
    elif sweep.variable == "cpu_workload":
        instr = float(level)
    elif sweep.variable == "components":
        x = int(level)
    elif sweep.variable == "evaluations":
        params = replace(params, max_evaluations=int(level))
    infra = build_infrastructure(replace(infra_cfg, seed=infra_seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfRange)
        app = build_case_study(app_kind, instr=instr, data=data, seed=app_seed, components=x)
    return app, infra, params


def run_method(method: str, app: Application, infra: Infrastructure, params: Nsga2Params):
    from . import baselines

    if method == "MAPO":
        front, _ = nsga2_run(app, infra, params, trace=False)
        if not front.entries or not front.entries[0][1].feasible:
            raise baselines.NoFeasiblePlacement("optimizer found no feasible placement")
        return select_placement(front, LowLatency())
    if method == "FSPP":
        res = baselines.fspp_place(app, infra, latency_in_transfer=params.latency_in_transfer)
    elif method == "EW":
        res = baselines.edge_ward_place(app, infra, latency_in_transfer=params.latency_in_transfer)
    else:
        raise InvalidConfig(f"unknown method {method!r}")
    return res.placement, res.objectives


def _sweep_cell(args) -> list[dict]:
    app_kind, infra_cfg, sweep, level, rep = args
    app, infra, params = scenario_for(app_kind, infra_cfg, sweep, level, rep)
    out = []
    for method in sweep.methods:
        rec = {"method": method, "level": level, "repetition": rep}
        try:
            placement, v = run_method(method, app, infra, params)
            rec.update(placement=placement.label(), time=v.time, energy=v.energy, cost=v.cost, error="")
        except Exception as exc:  # recorded as a failed cell
            rec.update(placement="", time=math.nan, energy=math.nan, cost=math.nan, error=f"{type(exc).__name__}: {exc}")
        out.append(rec)
    return out


def run_sweep(app_kind: str, infra_cfg: InfraConfig, sweep: SweepConfig, workers: int = 1) -> ResultTable:
    """Average each method's selected placement over seeded repetitions."""
    sweep.validate()
    levels = sweep.resolved_levels()
    tasks = [(app_kind, infra_cfg, sweep, level, rep) for level in levels for rep in range(sweep.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_sweep_cell, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        cells = [_sweep_cell(t) for t in tasks]
    raw = [rec for cell in cells for rec in cell]

    rows = []
    for level in levels:
        for method in sweep.methods:
            recs = [r for r in raw if r["level"] == level and r["method"] == method]
            ok = [r for r in recs if not r["error"]]
            vals = np.array([[r["time"], r["energy"], r["cost"]] for r in ok]).reshape(-1, 3)
            mean = vals.mean(axis=0) if len(ok) else np.full(3, math.nan)
            std = vals.std(axis=0, ddof=1) if len(ok) > 1 else np.zeros(3)
            rows.append(ResultRow(method, level, *map(float, mean), *map(float, std), len(ok), len(recs) - len(ok)))
    return ResultTable(sweep.variable, rows, raw)


# -- scalability -------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    components: int
    evaluations: int
    hypervolume: float
    front_size: int
    wall_time: float


@dataclass
class ScalabilityResult:
    evaluations_curve: list[CurvePoint]
    components_curve: list[CurvePoint]


def scalability_study(
    components: Sequence[int] = SWEEP_DEFAULTS["components"],
    evaluations: Sequence[int] = SWEEP_DEFAULTS["evaluations"],
    kind: str = "mental_health",
    infra_cfg: InfraConfig = InfraConfig(),
    population: int = 100,
    seed: int = 0,
    instr: float = 2000.0,
    data: float = 4.0,
    base_components: int | None = None,
) -> ScalabilityResult:
    """Hypervolume and runtime against evaluation budget and chain length.

    The budget curve runs the case study (``base_components`` overrides its
    length) once per budget and normalises all final fronts jointly. The
    chain-length curve runs at the largest budget; each length is a separate
    problem, so its hypervolume is the run's own final trace value (bounds
    taken over every archive snapshot of that run, initial population
    included).
    """
    if not components or not evaluations:
        raise InvalidConfig("components and evaluations must be nonempty")
    infra = build_infrastructure(infra_cfg)
    params = Nsga2Params(population=population, seed=seed)

    base = build_case_study(kind, instr=instr, data=data, seed=seed, components=base_components)
    fronts, times, sizes = [], [], []
    for ev in evaluations:
        front, stats = nsga2_run(base, infra, replace(params, max_evaluations=int(ev)), trace=False)
        fronts.append(front.points)
        times.append(stats.wall_time)
        sizes.append(len(front))
    hvs = compare_hypervolumes(fronts)
    eval_curve = [
        CurvePoint(base.size, int(ev), hv, sz, t) for ev, hv, sz, t in zip(evaluations, hvs, sizes, times)
    ]

    budget = int(max(evaluations))
    comp_curve = []
    for x in components:
        app = build_case_study(kind, instr=instr, data=data, seed=seed, components=int(x))
        front, stats = nsga2_run(app, infra, replace(params, max_evaluations=budget), trace=True)
        comp_curve.append(CurvePoint(int(x), budget, stats.hv_trace[-1][1], len(front), stats.wall_time))
    return ScalabilityResult(eval_curve, comp_curve)

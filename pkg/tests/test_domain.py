import math

import pytest

from fogplace.domain import (
    Application,
    BranchingApplication,
    Component,
    Device,
    EmptyApplication,
    Infrastructure,
    InvalidInfrastructure,
    LengthMismatch,
    NegativeDemand,
    Placement,
    ShapeMismatch,
    Tier,
    build_application,
    encode_application,
    mbit_to_mb,
    validate_placement,
)

from conftest import chain, full_mesh


def spec(n, **extra):
    comps = [{"instr": 100.0, "cpu_req": 10.0, "mem_req": 5.0, "stor_req": 5.0} for _ in range(n)]
    return {"components": comps, "data_in": [1.0] * n, **extra}


def test_build_application_chain_roundtrip():
    app = build_application(spec(3, transitions=[[0, 1], [1, 2]]))
    assert app.size == 3
    assert app.succ(0) == 1 and app.succ(2) is None
    assert app.pred(0) is None and app.pred(2) == 1
    assert build_application(encode_application(app)) == app


def test_build_application_errors():
    with pytest.raises(EmptyApplication):
        build_application({"components": [], "data_in": []})
    with pytest.raises(LengthMismatch):
        build_application({**spec(2), "data_in": [1.0]})
    with pytest.raises(BranchingApplication):
        build_application(spec(3, transitions=[[0, 1], [0, 2]]))
    with pytest.raises(NegativeDemand):
        Component(0, -1.0, 1.0, 1.0, 1.0)
    with pytest.raises(NegativeDemand):
        chain([1.0], [-2.0])


def test_single_component_chain():
    app = build_application(spec(1))
    assert app.succ(0) is None and app.pred(0) is None


def test_infrastructure_diagonal_and_symmetry():
    d = [Device(0, Tier.ME, 1e3, 1e3, 1e3), Device(1, Tier.CDC, 1e5, 1e4, 1e5)]
    infra = Infrastructure(tuple(d), [[0.0, 10.0], [10.0, 0.0]], [[5.0, 0.1], [0.1, 5.0]])
    assert infra.link(0, 0).bw == math.inf and infra.link(0, 0).latency == 0.0
    assert infra.link(0, 1).bw == 10.0
    assert infra.source_device == 0
    with pytest.raises(InvalidInfrastructure):
        Infrastructure(tuple(d), [[0.0, 10.0], [11.0, 0.0]], [[0, 0.1], [0.1, 0]])
    with pytest.raises(InvalidInfrastructure):
        Infrastructure(tuple(d), [[0.0, 10.0]], [[0, 0.1], [0.1, 0]])
    with pytest.raises(InvalidInfrastructure):
        Device(0, Tier.ME, 0.0, 1.0, 1.0)


def test_strict_capacity_boundary():
    dev = Device(0, Tier.ME, cpu=1000.0, mem=100.0, stor=100.0)
    infra = full_mesh([dev], bw=100.0)
    at_cap = Application((Component(0, 1.0, 1000.0, 10.0, 1.0),), (1.0,))
    r = validate_placement(at_cap, infra, Placement((0,)))
    assert not r.feasible and r.violation > 0
    assert r.first_violation() == "component 0 violates cpu"
    below = Application((Component(0, 1.0, 999.9, 10.0, 1.0),), (1.0,))
    assert validate_placement(below, infra, Placement((0,))).violation == 0.0


def test_storage_check_uses_megabytes():
    assert mbit_to_mb(8.0) == 1.0
    dev = Device(0, Tier.ME, cpu=1e4, mem=1e4, stor=1.0)
    infra = full_mesh([dev], bw=100.0)
    assert validate_placement(chain([1], [7.9]), infra, Placement((0,))).feasible
    assert not validate_placement(chain([1], [8.0]), infra, Placement((0,))).feasible


def test_aggregate_mode_counts_colocated_demand():
    dev = [Device(0, Tier.ME, cpu=1e4, mem=100.0, stor=1e4), Device(1, Tier.ME, cpu=1e4, mem=100.0, stor=1e4)]
    infra = full_mesh(dev, bw=100.0)
    app = chain([1, 1], [0.0, 0.0], mem_req=60.0)
    assert validate_placement(app, infra, Placement((0, 0))).feasible
    agg = validate_placement(app, infra, Placement((0, 0)), mode="aggregate")
    assert not agg.feasible and agg.per_component == (("mem",), ("mem",))
    assert validate_placement(app, infra, Placement((0, 1)), mode="aggregate").feasible


def test_placement_shape_errors():
    infra = full_mesh([Device(0, Tier.ME, 1e3, 1e3, 1e3)], bw=10.0)
    app = chain([1, 1], [0, 0])
    with pytest.raises(ShapeMismatch):
        validate_placement(app, infra, Placement((0,)))
    with pytest.raises(ShapeMismatch):
        validate_placement(app, infra, Placement((0, 3)))
    assert Placement((3, 0, 12)).label() == "3-0-12"

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fogplace.baselines import NoFeasiblePlacement, NoIspGateway, edge_ward_place, fspp_place
from fogplace.domain import Device, Tier
from fogplace.objectives import evaluate, evaluate_batch
from fogplace.pareto import enumerate_genomes
from fogplace.scenarios import InfraConfig, build_case_study, build_infrastructure, random_instance

from conftest import chain, full_mesh, make_toy3


def exhaustive_min_cost(app, infra):
    g = np.vstack(list(enumerate_genomes(app.size, infra.size)))
    res = evaluate_batch(app, infra, g)
    return res.objectives[res.feasible, 2].min()


def test_fspp_matches_enumeration_on_toy():
    app, infra = make_toy3()
    res = fspp_place(app, infra)
    assert res.optimal and res.method == "FSPP"
    assert res.objectives.cost == exhaustive_min_cost(app, infra)
    assert res.objectives == evaluate(app, infra, res.placement)


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 6))
def test_fspp_exact_on_random_instances(seed, x, y):
    app, infra = random_instance(seed, x, y)
    try:
        res = fspp_place(app, infra)
    except NoFeasiblePlacement:
        g = np.vstack(list(enumerate_genomes(x, y)))
        assert not evaluate_batch(app, infra, g).feasible.any()
        return
    assert res.optimal
    assert res.objectives.cost == exhaustive_min_cost(app, infra)


def test_fspp_identical_prices_breaks_ties_on_time():
    devs = [Device(j, Tier.ME, cpu=1e3 * (j + 1), mem=1e3, stor=1e3, cp=0.0) for j in range(3)]
    infra = full_mesh(devs, bw=100.0, source_device=0)
    res = fspp_place(chain([100, 100], [1, 1]), infra)
    assert res.objectives.cost == 0.0
    assert res.placement.assign == (2, 2)


def test_fspp_prefers_cloud_with_simulated_prices():
    infra = build_infrastructure(InfraConfig())
    app = build_case_study("augmented_reality")
    res = fspp_place(app, infra)
    assert res.optimal
    assert all(infra.devices[j].tier is Tier.CDC for j in res.placement.assign)


def test_fspp_greedy_fallback_flagged():
    infra = build_infrastructure(InfraConfig())
    res = fspp_place(build_case_study("mental_health"), infra)
    assert not res.optimal and res.objectives.feasible


def test_fspp_no_feasible():
    dev = Device(0, Tier.ME, cpu=10.0, mem=1e3, stor=1e3)
    with pytest.raises(NoFeasiblePlacement):
        fspp_place(chain([1], [0], cpu_req=100.0), full_mesh([dev], bw=1.0))


def ew_infra():
    devs = [
        Device(0, Tier.CDC, 250e3, 32e3, 5e5),
        Device(1, Tier.ISP_GW, 65e3, 16e3, 2.5e5),
        Device(2, Tier.ISP_GW, 70e3, 16e3, 2.5e5),
        Device(3, Tier.WIFI_GW_BTS, 12e3, 8e3, 1e5),
        Device(4, Tier.ME, 6e3, 1e3, 1e4),
        Device(5, Tier.ME, 3e3, 1e3, 1e4),
    ]
    return full_mesh(devs, bw=500.0, latency=0.01)


def test_edge_ward_best_fit_and_pinned_tail():
    res = edge_ward_place(chain([100, 100, 100], [1, 1, 1], cpu_req=2000.0), ew_infra())
    assert res.placement.assign == (5, 5, 2)


def test_edge_ward_escalates_past_edge():
    res = edge_ward_place(chain([100, 100], [1, 1], cpu_req=8000.0), ew_infra())
    assert res.placement.assign == (3, 2)


def test_edge_ward_single_component_and_errors():
    assert edge_ward_place(chain([1], [1], cpu_req=10.0), ew_infra()).placement.assign == (2,)
    no_isp = full_mesh([Device(0, Tier.ME, 1e3, 1e3, 1e3)], bw=1.0)
    with pytest.raises(NoIspGateway):
        edge_ward_place(chain([1], [1]), no_isp)
    with pytest.raises(NoFeasiblePlacement):
        edge_ward_place(chain([1], [1], cpu_req=1e5), ew_infra())


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(3, 6))
def test_baselines_feasible_or_error(seed, x, y):
    app, infra = random_instance(seed, x, y)
    for place in (fspp_place, edge_ward_place):
        try:
            res = place(app, infra)
        except NoFeasiblePlacement:
            continue
        assert res.objectives.feasible
        assert res.objectives == evaluate(app, infra, res.placement)
        if place is edge_ward_place:
            assert infra.devices[res.placement.assign[-1]].tier is Tier.ISP_GW

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fogplace.domain import Device, Placement, Tier
from fogplace.objectives import evaluate
from fogplace.optimizer import (
    EmptyFront,
    InvalidParams,
    LowLatency,
    Nsga2Params,
    WeightedIdeal,
    generation_rng,
    nsga2_run,
    parse_strategy,
    select_placement,
)
from fogplace.pareto import ParetoFront, brute_force_pareto, compare_hypervolumes, dominates

from conftest import chain, full_mesh, make_toy3

SMALL = Nsga2Params(population=20, max_evaluations=600, seed=3)


def test_params_validation():
    for bad in (
        Nsga2Params(population=3),
        Nsga2Params(population=11),
        Nsga2Params(population=10, max_evaluations=5),
        Nsga2Params(crossover_rate=1.5),
        Nsga2Params(mutation_rate=-0.1),
        Nsga2Params(seed=-1),
        Nsga2Params(capacity_mode="bogus"),
    ):
        with pytest.raises(InvalidParams):
            bad.validate()
    assert Nsga2Params().mutation_for(7) == pytest.approx(1 / 7)


def test_generation_streams_are_independent_and_reproducible():
    a = generation_rng(5, 1).integers(1 << 30, size=4)
    assert (a == generation_rng(5, 1).integers(1 << 30, size=4)).all()
    assert not (a == generation_rng(5, 2).integers(1 << 30, size=4)).all()


def test_run_is_deterministic():
    app, infra = make_toy3()
    f1, s1 = nsga2_run(app, infra, SMALL)
    f2, s2 = nsga2_run(app, infra, SMALL)
    assert f1 == f2 and s1.hv_trace == s2.hv_trace
    assert s1.evaluations_used == 600 and s1.generations == 29


def test_front_entries_feasible_and_mutually_nondominated():
    app, infra = make_toy3()
    front, _ = nsga2_run(app, infra, SMALL)
    pts = front.points
    for (p, v), row in zip(front, pts):
        assert v.feasible
        assert evaluate(app, infra, p).as_tuple() == v.as_tuple()
        assert not any(dominates(q, row) for q in pts)


def test_small_instance_recovers_exact_front():
    app, infra = make_toy3()
    exact = brute_force_pareto(app, infra)
    front, _ = nsga2_run(app, infra, SMALL)
    he, hf = compare_hypervolumes([exact.points, front.points])
    assert hf >= 0.99 * he


def test_hv_trace_is_nondecreasing():
    app, infra = make_toy3()
    _, stats = nsga2_run(app, infra, SMALL)
    hv = [h for _, h in stats.hv_trace]
    assert all(b >= a - 1e-12 for a, b in zip(hv, hv[1:]))
    assert stats.hv_trace[0][0] == 20 and stats.hv_trace[-1][0] == 600


def test_single_device_front():
    dev = Device(0, Tier.CDC, 1e5, 1e4, 1e5, p_compute=10.0, cp=0.03)
    front, _ = nsga2_run(chain([10, 10], [1, 1]), full_mesh([dev], bw=1e3), SMALL)
    assert [p.label() for p in front.placements] == ["0-0"]


def test_all_infeasible_returns_flagged_least_violating():
    devs = [Device(0, Tier.ME, 100.0, 1e3, 1e3), Device(1, Tier.ME, 500.0, 1e3, 1e3)]
    app = chain([1, 1], [0, 0], cpu_req=600.0)
    front, _ = nsga2_run(app, full_mesh(devs, bw=10.0), SMALL)
    assert front.entries and all(not v.feasible for _, v in front)
    assert all(p.assign == (1, 1) for p in front.placements)


def test_selection_strategies():
    from fogplace.objectives import ObjectiveVector as V

    front = ParetoFront((
        (Placement((0,)), V(1.0, 9.0, 9.0)),
        (Placement((1,)), V(2.0, 1.0, 1.0)),
        (Placement((2,)), V(9.0, 0.0, 0.0)),
    ))
    assert select_placement(front, LowLatency())[0].assign == (0,)
    assert select_placement(front, "low-latency")[0].assign == (0,)
    assert select_placement(front, WeightedIdeal((1, 1, 1)))[0].assign == (1,)
    assert select_placement(front, WeightedIdeal((0, 1, 1)))[0].assign == (2,)
    with pytest.raises(EmptyFront):
        select_placement(ParetoFront(()))
    with pytest.raises(ValueError):
        parse_strategy("fastest")


def test_low_latency_tie_breaks_on_energy():
    from fogplace.objectives import ObjectiveVector as V

    front = ParetoFront((
        (Placement((0,)), V(1.0, 2.0, 0.0)),
        (Placement((1,)), V(1.0, 1.0, 5.0)),
    ))
    assert select_placement(front)[0].assign == (1,)


@settings(max_examples=15)
@given(st.integers(0, 2**32), st.integers(2, 4))
def test_archive_never_holds_dominated_or_infeasible(seed, x):
    _, infra = make_toy3()
    app = chain([500 * (i + 1) for i in range(x)], [1.0] * x, cpu_req=1000.0)
    front, _ = nsga2_run(app, infra, Nsga2Params(population=8, max_evaluations=80, seed=seed))
    pts = front.points
    assert all(v.feasible for _, v in front)
    assert len({tuple(r) for r in pts}) == len(pts)
    assert all(not any(dominates(q, r) for q in pts) for r in pts)

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fogplace.domain import Device, Link, Placement, ShapeMismatch, Tier
from fogplace.objectives import (
    completion_time,
    computation_time,
    cost,
    energy,
    evaluate,
    evaluate_batch,
    transfer_time,
)

from conftest import chain, full_mesh, make_toy3

TOY3 = make_toy3()

# Exact rational arithmetic for the two-device chain, computed independently.
T_EXPECTED = float(Fraction(1000, 10000) + Fraction(1, 250) + Fraction(1000, 2000))
E_EXPECTED = float(400 * Fraction(1, 10) + 3 * Fraction(1, 2) + 1 * Fraction(1, 250))
C_EXPECTED = float(
    Fraction(1, 2) * Fraction(3, 100) + Fraction(1, 8) * Fraction(1, 10**6) + Fraction(1, 250) * Fraction(3, 10**6)
)


def test_frozen_values_match_rational_oracle():
    assert T_EXPECTED == pytest.approx(0.604, rel=1e-12)
    assert E_EXPECTED == pytest.approx(41.504, rel=1e-12)
    assert C_EXPECTED == pytest.approx(0.015000137, rel=1e-12)


def test_two_component_chain(two_device):
    app, infra = two_device
    p = Placement((0, 1))
    v = evaluate(app, infra, p)
    assert v.feasible
    assert v.time == pytest.approx(T_EXPECTED, rel=1e-9)
    assert v.energy == pytest.approx(E_EXPECTED, rel=1e-9)
    assert v.cost == pytest.approx(C_EXPECTED, rel=1e-9)
    assert completion_time(app, infra, p) == pytest.approx(T_EXPECTED, rel=1e-12)
    assert energy(app, infra, p) == pytest.approx(E_EXPECTED, rel=1e-12)
    assert cost(app, infra, p) == pytest.approx(C_EXPECTED, rel=1e-12)


def test_single_component_on_cloud():
    cdc = Device(0, Tier.CDC, cpu=250e3, mem=32e3, stor=512e3)
    app = chain([2000], [0.0])
    assert computation_time(app.components[0], cdc) == pytest.approx(0.008, rel=1e-12)
    v = evaluate(app, full_mesh([cdc], bw=1e4), Placement((0,)))
    assert v.time == pytest.approx(0.008, rel=1e-9)


def test_transfer_time_examples():
    assert transfer_time(4.0, Link(1000.0, 0.05)) == pytest.approx(0.054, rel=1e-12)
    assert transfer_time(1.0, Link(250.0, 0.0)) == pytest.approx(0.004, rel=1e-12)
    assert transfer_time(4.0, Link(1000.0, 0.05), latency_in_transfer=False) == pytest.approx(0.004)
    assert transfer_time(4.0, Link(float("inf"), 0.0)) == 0.0


def test_colocated_components_skip_transfer(two_device):
    app, infra = two_device
    v = evaluate(app, infra, Placement((1, 1)))
    # Only the first hop (source 0 -> device 1) carries data, and Data_1 = 0.
    assert v.time == pytest.approx(0.5 + 0.5, rel=1e-12)
    assert v.energy == pytest.approx(3.0 * 1.0, rel=1e-12)


def test_constant_energy_only_charged_on_transfer():
    devs = [Device(0, Tier.ME, 1e4, 1e3, 1e3, p_compute=1.0, e_const=5.0),
            Device(1, Tier.ME, 1e4, 1e3, 1e3, p_compute=1.0, e_const=7.0)]
    infra = full_mesh(devs, bw=100.0, source_device=0)
    app = chain([1e4, 1e4], [1.0, 1.0])
    assert energy(app, infra, Placement((0, 0))) == pytest.approx(2.0)
    assert energy(app, infra, Placement((0, 1))) == pytest.approx(2.0 + 7.0)


def test_ingress_latency_shifts_time_only(two_device):
    app, infra = two_device
    shifted = type(infra)(infra.devices, infra.bw, infra.latency, infra.source_device, ingress_latency=0.001)
    a, b = evaluate(app, infra, Placement((0, 1))), evaluate(app, shifted, Placement((0, 1)))
    assert b.time == pytest.approx(a.time + 0.001, rel=1e-12)
    assert (b.energy, b.cost) == (a.energy, a.cost)


def test_infeasible_placement_still_scored():
    dev = Device(0, Tier.ME, cpu=500.0, mem=1e3, stor=1e3, p_compute=2.0)
    app = chain([1000], [0.0], cpu_req=1000.0)
    v = evaluate(app, full_mesh([dev], bw=10.0), Placement((0,)))
    assert not v.feasible and v.violation > 0
    assert v.time == pytest.approx(2.0)


def test_shape_mismatch(two_device):
    app, infra = two_device
    with pytest.raises(ShapeMismatch):
        evaluate_batch(app, infra, np.array([[0, 1, 1]]))
    with pytest.raises(ShapeMismatch):
        evaluate_batch(app, infra, np.array([[0, 2]]))


@given(st.data())
def test_batch_agrees_with_scalar_reference(data):
    app, infra = TOY3
    genome = data.draw(st.lists(st.integers(0, infra.size - 1), min_size=app.size, max_size=app.size))
    lit = data.draw(st.booleans())
    p = Placement(tuple(genome))
    row = evaluate_batch(app, infra, np.array([genome]), latency_in_transfer=lit).objectives[0]
    ref = (completion_time(app, infra, p, lit), energy(app, infra, p, lit), cost(app, infra, p, lit))
    assert row == pytest.approx(ref, rel=1e-12)


@given(st.data())
def test_objectives_nonnegative_and_time_monotone_in_instr(data):
    app, infra = TOY3
    genome = tuple(data.draw(st.lists(st.integers(0, 2), min_size=3, max_size=3)))
    bump = data.draw(st.floats(1.0, 1e4))
    v = evaluate(app, infra, Placement(genome))
    assert min(v.time, v.energy, v.cost) >= 0
    heavier = chain([c.instr + bump for c in app.components], app.data_in, 1000.0, 20.0, 300.0)
    assert evaluate(heavier, infra, Placement(genome)).time > v.time


def test_evaluate_is_pure(toy3):
    app, infra = toy3
    p = Placement((0, 1, 2))
    assert evaluate(app, infra, p) == evaluate(app, infra, p)

import math

import pytest
from hypothesis import settings

from fogplace.domain import Application, Component, Device, Infrastructure, Tier

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def chain(instr, data, cpu_req=1.0, mem_req=1.0, stor_req=1.0):
    comps = tuple(Component(i, float(m), cpu_req, mem_req, stor_req) for i, m in enumerate(instr))
    return Application(comps, tuple(float(d) for d in data))


def full_mesh(devices, bw, latency=0.0, **kw):
    y = len(devices)
    table = [[bw] * y for _ in range(y)]
    lat = [[latency] * y for _ in range(y)]
    return Infrastructure(tuple(devices), table, lat, **kw)


@pytest.fixture
def two_device():
    """Hand-unrolled two-component chain: fast edge node then a slow ME."""
    a = Device(0, Tier.WIFI_GW_BTS, cpu=10e3, mem=1e3, stor=1e3, p_compute=400.0, p_network=0.0)
    b = Device(1, Tier.ME, cpu=2e3, mem=1e3, stor=1e3, p_compute=3.0, p_network=1.0,
               cp=0.03, cs=1e-6, cr=3e-6)
    infra = full_mesh([a, b], bw=250.0, source_device=0)
    app = chain([1000, 1000], [0.0, 1.0])
    return app, infra


def make_toy3():
    """Three devices with distinct trade-offs and a three-component chain."""
    devs = [
        Device(0, Tier.ME, cpu=3e3, mem=2e3, stor=1e4, p_compute=3.0, p_network=1.2, cp=0.02, cs=2e-5, cr=4e-6),
        Device(1, Tier.WIFI_GW_BTS, cpu=12e3, mem=8e3, stor=1e5, p_compute=390.0, p_network=1.9, cp=0.045, cs=1.5e-5, cr=4e-6),
        Device(2, Tier.CDC, cpu=250e3, mem=32e3, stor=5e5, p_compute=1650.0, p_network=1300.0, cp=0.03, cs=1e-6, cr=3e-6),
    ]
    bw = [[math.inf, 300.0, 300.0], [300.0, math.inf, 1000.0], [300.0, 1000.0, math.inf]]
    lat = [[0.0, 0.01, 0.16], [0.01, 0.0, 0.15], [0.16, 0.15, 0.0]]
    infra = Infrastructure(tuple(devs), bw, lat, source_device=0)
    app = chain([1500, 800, 2000], [4.0, 1.0, 4.0], cpu_req=1000.0, mem_req=20.0, stor_req=300.0)
    return app, infra


@pytest.fixture
def toy3():
    return make_toy3()

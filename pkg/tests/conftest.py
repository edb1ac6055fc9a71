"""Shared fixtures and small instance factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from transit_robust import ean as E
from transit_robust.generate import (FirstFitMinTurnaround, RandomSlack,
                                     VariantSpec, build_instance, gen_schedule,
                                     gen_timetable)
from transit_robust.instance import Instance
from transit_robust.simulation import DelayScenario


def chain_dataset(n_groups: int = 1) -> E.Dataset:
    """Three stations in a row, one line, adjustable demand."""
    demand = [E.PassengerGroup(0, 2, 0, 5)]
    if n_groups > 1:
        demand.append(E.PassengerGroup(2, 0, 25, 3))
    if n_groups > 2:
        demand.append(E.PassengerGroup(0, 1, 10, 2))
    return E.Dataset(
        "chain",
        stations=[E.Station(i, f"S{i}") for i in range(3)],
        edges=[E.NetworkEdge(0, 0, 1, 10, 12), E.NetworkEdge(1, 1, 2, 10, 12)],
        lines=[E.Line(0, (0, 1, 2), 1)],
        demand=demand,
    )


def chain_instance(wait_slack: int = 0, horizon: int = 1,
                   n_groups: int = 1) -> Instance:
    """Chain with scheduled times 0/10/(11+s)/(21+s) forward, offset backward."""
    ds = chain_dataset(n_groups)
    pean = E.PeriodicEan(ds, E.EanParams())
    times = np.zeros(pean.n_events, dtype=np.int64)
    fwd, bwd = pean.runs
    times[fwd.events] = [0, 10, 11 + wait_slack, 21 + wait_slack]
    times[bwd.events] = [30, 40, 41, 51]
    ptt = E.PeriodicTimetable(60, times)
    aean = E.AperiodicEan(pean, ptt, horizon)
    if horizon == 1:
        tours = [[0], [1]]
    else:
        # forward copy k is trip k, backward copy k is trip horizon + k;
        # each vehicle alternates forward and backward trips
        tours = [[k, horizon + k] for k in range(horizon)]
    sched = E.VehicleSchedule(tours, vehicle_capacity=100, turnaround_lower=3)
    inst = Instance(ds, pean, ptt, aean, sched)
    inst.plan_routes()
    return inst


_TINY_SHAPES = [
    # (stations, edges, lines) under 12 aperiodic events at horizon 1
    (2, [(0, 1)], [(0, 1)]),
    (3, [(0, 1), (1, 2)], [(0, 1, 2)]),
    (3, [(0, 1), (1, 2)], [(0, 1), (1, 2)]),
]


def tiny_random_instance(rng: np.random.Generator,
                         n_groups: int | None = None) -> Instance:
    """A random instance with at most 12 events and 3 passenger groups."""
    n, edge_pairs, line_paths = _TINY_SHAPES[rng.integers(0, len(_TINY_SHAPES))]
    edges = []
    for u, v in edge_pairs:
        lo = int(rng.integers(3, 8))
        edges.append(E.NetworkEdge(len(edges), u, v, lo,
                                   lo + int(rng.integers(1, 4))))
    lines = [E.Line(i, tuple(p), 1) for i, p in enumerate(line_paths)]
    if n_groups is None:
        n_groups = int(rng.integers(1, 4))
    demand = []
    for _ in range(n_groups):
        o = int(rng.integers(0, n))
        d = int(rng.integers(0, n))
        while d == o:
            d = int(rng.integers(0, n))
        demand.append(E.PassengerGroup(o, d, int(rng.integers(0, 40)),
                                       int(rng.integers(1, 6))))
    ds = E.Dataset("tiny", [E.Station(i, f"S{i}") for i in range(n)],
                   edges, lines, demand)
    variant = VariantSpec(RandomSlack(int(rng.integers(0, 12))),
                          FirstFitMinTurnaround(),
                          seed=int(rng.integers(0, 1 << 30)))
    capacity = int(rng.integers(3, 12))
    return build_instance(ds, variant, horizon=1, vehicle_capacity=capacity,
                          turnaround_lower=2)


def random_scenario(rng: np.random.Generator, inst: Instance) -> DelayScenario:
    """A random mix of disturbance kinds for the given instance."""
    sc = DelayScenario()
    kind = rng.integers(0, 4)
    if kind == 0 and inst.aean.n_trips:
        sc.source_delays = [(int(rng.integers(0, inst.aean.n_trips)),
                             int(rng.integers(1, 12)))]
    elif kind == 1 and inst.dataset.n_edges:
        t0 = int(rng.integers(0, 60))
        sc.edge_slowdowns = [(int(rng.integers(0, inst.dataset.n_edges)),
                              int(rng.integers(1, 6)), t0,
                              t0 + int(rng.integers(10, 90)))]
    elif kind == 2:
        sc.station_blockings = [(int(rng.integers(0, inst.dataset.n_stations)),
                                 int(rng.integers(0, 50)),
                                 int(rng.integers(5, 25)))]
    else:
        drives = inst.drive_acts
        k = min(len(drives), int(rng.integers(1, 4)))
        picks = rng.choice(drives, size=k, replace=False)
        sc.drive_delays = [(int(a), int(rng.integers(1, 10))) for a in picks]
    return sc


@pytest.fixture
def chain():
    return chain_instance()


@pytest.fixture
def chain2():
    return chain_instance(wait_slack=1)

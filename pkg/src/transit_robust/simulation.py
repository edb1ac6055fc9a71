"""Delay propagation under a no-wait policy and passenger replay.

Vehicles never wait for delayed feeders: delays travel only along drive,
wait and turnaround activities (the vehicle chains), never along transfers.
Passengers replay their planned routes on the realized timetable and are
rerouted on the fly when a connection breaks or a vehicle is full, with
seats granted first-come-first-served by earliest departure.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from . import ean as E
from .instance import COMPLETED, Instance, REROUTED, STRANDED, UtilityWeights
from .routing import TRANSFER_BASE, lex_dijkstra, make_label


@dataclass
class DelayScenario:
    """One simulation's worth of exogenous disturbances."""

    source_delays: list[tuple[int, int]] = field(default_factory=list)
    edge_slowdowns: list[tuple[int, int, int, int]] = field(default_factory=list)
    station_blockings: list[tuple[int, int, int]] = field(default_factory=list)
    seed: int = 0
    # per-activity drive delays (random-delay test); not part of the wire format
    drive_delays: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        for _, d in self.source_delays:
            if d < 0:
                raise ValueError("source delays must be >= 0")
        for _, d, *_ in self.edge_slowdowns:
            if d < 0:
                raise ValueError("edge slowdowns must be >= 0")
        for _, _, d in self.station_blockings:
            if d < 0:
                raise ValueError("blocking durations must be >= 0")

    def to_json(self) -> str:
        obj = {
            "source_delays": [list(x) for x in self.source_delays],
            "edge_slowdowns": [list(x) for x in self.edge_slowdowns],
            "station_blockings": [list(x) for x in self.station_blockings],
            "seed": self.seed,
        }
        if self.drive_delays:
            obj["drive_delays"] = [list(x) for x in self.drive_delays]
        return json.dumps(obj)

    @classmethod
    def from_json(cls, line: str) -> "DelayScenario":
        obj = json.loads(line)
        return cls(
            source_delays=[tuple(x) for x in obj.get("source_delays", [])],
            edge_slowdowns=[tuple(x) for x in obj.get("edge_slowdowns", [])],
            station_blockings=[tuple(x) for x in obj.get("station_blockings", [])],
            seed=obj.get("seed", 0),
            drive_delays=[tuple(x) for x in obj.get("drive_delays", [])],
        )


def write_scenarios(path, scenarios) -> None:
    with open(path, "w", newline="\n") as fh:
        for sc in scenarios:
            fh.write(sc.to_json() + "\n")


def read_scenarios(path) -> list[DelayScenario]:
    with open(path) as fh:
        return [DelayScenario.from_json(line) for line in fh if line.strip()]


def propagate(inst: Instance, scenario: DelayScenario) -> np.ndarray:
    """Realized event times under the scenario.

    realized(head) = max(scheduled(head), realized(tail) + lower) along each
    vehicle chain; transfers never propagate.  Edge slowdowns raise drive
    lower bounds inside their window; a blocked station pushes departures in
    the window to the window end.
    """
    a = inst.aean
    sched = inst.times
    extra = None
    if scenario.edge_slowdowns or scenario.drive_delays:
        extra = np.zeros(a.n_activities, dtype=np.int64)
        for edge, minutes, start, end in scenario.edge_slowdowns:
            hit = (a.act_edge == edge) & (sched[a.act_tail] >= start) \
                & (sched[a.act_tail] < end)
            extra[hit] += minutes
        for act, minutes in scenario.drive_delays:
            extra[act] += minutes

    floor = sched.astype(np.int64, copy=True)
    for trip, minutes in scenario.source_delays:
        floor[inst.trip_start_ev[trip]] += minutes

    blockings = [(s, start, start + dur) for s, start, dur in
                 scenario.station_blockings if dur > 0]
    realized = np.empty_like(sched)
    while True:
        for ev, acts in zip(inst.chain_ev, inst.chain_act):
            low = a.act_lower[acts]
            if extra is not None:
                low = low + extra[acts]
            cum = np.empty(len(ev), dtype=np.int64)
            cum[0] = 0
            np.cumsum(low, out=cum[1:])
            realized[ev] = cum + np.maximum.accumulate(floor[ev] - cum)
        pushed = False
        for station, start, end in blockings:
            deps = inst.station_deps[station]
            hit = deps[(realized[deps] >= start) & (realized[deps] < end)]
            if len(hit) and (floor[hit] < end).any():
                floor[hit] = np.maximum(floor[hit], end)
                pushed = True
        if not pushed:
            break
    return realized


class _DelayedRouter:
    """Time-expanded routing on the realized timetable.

    Nodes are events plus one platform node per departure (id shifted by
    n_events).  Standing on a platform, a passenger may ride the departure
    or keep waiting for the next one at the station; boarding was already
    charged by the arc that entered the platform chain.
    """

    def __init__(self, inst: Instance, realized: np.ndarray,
                 remaining: np.ndarray, min_transfer: int):
        self.inst = inst
        self.a = inst.aean
        self.r = realized
        self.remaining = remaining
        self.min_transfer = min_transfer
        self.penalty = inst.weights.transfer_penalty
        self.n_ev = inst.aean.n_events
        # departures per station in realized order
        self.dep_order: list[np.ndarray] = []
        self.dep_times: list[list[int]] = []
        self.dep_rank = np.full(self.n_ev, -1, dtype=np.int64)
        for s, deps in enumerate(inst.station_deps):
            order = deps[np.lexsort((deps, realized[deps]))]
            self.dep_order.append(order)
            self.dep_times.append(realized[order].tolist())
            self.dep_rank[order] = np.arange(len(order))

    def platform(self, dep_ev: int) -> int:
        return self.n_ev + dep_ev

    def first_platform(self, station: int, time: int) -> int | None:
        """Platform of the first departure at `station` at/after `time`."""
        i = bisect_left(self.dep_times[station], time)
        if i >= len(self.dep_times[station]):
            return None
        return self.platform(int(self.dep_order[station][i]))

    def successors(self, weight: int):
        a, r, inst = self.a, self.r, self.inst
        n_ev = self.n_ev

        def succ(u: int):
            out = []
            if u >= n_ev:  # platform of departure d
                d = u - n_ev
                act = inst.next_in_trip[d]
                if act >= 0 and self.remaining[act] >= weight:
                    head = int(a.act_head[act])
                    out.append(((0, int(act)), int(r[head] - r[d]) * TRANSFER_BASE,
                                head))
                s = int(a.ev_station[d])
                rank = int(self.dep_rank[d])
                if rank + 1 < len(self.dep_order[s]):
                    nd = int(self.dep_order[s][rank + 1])
                    out.append(((1, 0), int(r[nd] - r[d]) * TRANSFER_BASE,
                                self.platform(nd)))
            elif a.ev_kind[u] == E.ARRIVAL:
                act = inst.next_in_trip[u]
                if act >= 0:  # stay on the vehicle through its dwell
                    head = int(a.act_head[act])
                    out.append(((0, int(act)), int(r[head] - r[u]) * TRANSFER_BASE,
                                head))
                p = self.first_platform(int(a.ev_station[u]),
                                        int(r[u]) + self.min_transfer)
                if p is not None:
                    dur = int(r[p - n_ev] - r[u]) + self.penalty
                    out.append(((1, 0), dur * TRANSFER_BASE + 1, p))
            else:  # departure, on board
                act = inst.next_in_trip[u]
                if act >= 0 and self.remaining[act] >= weight:
                    head = int(a.act_head[act])
                    out.append(((0, int(act)), int(r[head] - r[u]) * TRANSFER_BASE,
                                head))
            return out

        return succ

    def route(self, sources, destination: int, weight: int):
        targets = set(int(x) for x in self.inst.station_arrs[destination])
        return lex_dijkstra(sources, self.successors(weight), targets)


@dataclass
class GroupOutcome:
    planned_perceived: int
    realized_perceived: int
    status: str


@dataclass
class SimulationResult:
    realized: np.ndarray
    outcomes: list[GroupOutcome]
    aggregate_delay: int

    @property
    def per_group(self):
        return [(o.planned_perceived, o.realized_perceived) for o in self.outcomes]


def route_passenger(inst: Instance, group_index: int, realized: np.ndarray,
                    remaining: np.ndarray | None = None,
                    min_transfer: int | None = None):
    """Best route of one group on a realized timetable and capacity state."""
    g = inst.dataset.demand[group_index]
    if remaining is None:
        remaining = np.full(inst.aean.n_activities,
                            inst.schedule.vehicle_capacity, dtype=np.int64)
    if min_transfer is None:
        min_transfer = inst.pean.params.min_transfer
    router = _DelayedRouter(inst, realized, remaining, min_transfer)
    p = router.first_platform(g.origin, g.earliest_departure)
    res = None
    if p is not None:
        src = [(p, make_label(int(realized[p - router.n_ev]), 0))]
        res = router.route(src, g.destination, g.weight)
    return res


def _route_drives(inst: Instance, arcs) -> list[int]:
    a = inst.aean
    return [prio[1] for prio, _u, _v in arcs
            if isinstance(prio, tuple) and prio[0] == 0
            and a.act_kind[prio[1]] == E.DRIVE]


def simulate(inst: Instance, scenario: DelayScenario,
             min_transfer: int | None = None) -> SimulationResult:
    """Propagate the scenario and replay all passengers.

    Aggregate delay = sum of weight * max(0, realized - planned perceived
    travel time); deterministic for a fixed (instance, scenario).
    """
    if inst.routes is None:
        raise ValueError("instance has no planned routes; call plan_routes()")
    if min_transfer is None:
        min_transfer = inst.pean.params.min_transfer
    a = inst.aean
    realized = propagate(inst, scenario)

    # fast path: if every planned transfer still connects, nobody reroutes and
    # planned seat loads carry over unchanged
    ut = inst.used_transfer_acts
    ok = (realized[a.act_head[ut]] - realized[a.act_tail[ut]]) >= a.act_lower[ut]
    if ok.all():
        last = inst.group_last_ev
        realized_perc = np.where(
            inst.group_stranded, inst.stranding_penalty,
            realized[last] - inst.group_ed
            + inst.weights.transfer_penalty * inst.group_transfers)
        delta = np.maximum(realized_perc - inst.group_perceived, 0)
        outcomes = [GroupOutcome(int(p), int(rp),
                                 STRANDED if st else COMPLETED)
                    for p, rp, st in zip(inst.group_perceived, realized_perc,
                                         inst.group_stranded)]
        return SimulationResult(realized, outcomes,
                                int(np.dot(inst.group_weight, delta)))

    return _replay(inst, realized, min_transfer)


def _replay(inst: Instance, realized: np.ndarray, min_transfer: int) -> SimulationResult:
    a = inst.aean
    penalty = inst.weights.transfer_penalty
    remaining = np.full(a.n_activities, inst.schedule.vehicle_capacity,
                        dtype=np.int64)
    router = _DelayedRouter(inst, realized, remaining, min_transfer)
    demand = inst.dataset.demand
    order = sorted(range(len(demand)),
                   key=lambda i: (demand[i].earliest_departure, i))
    outcomes: list[GroupOutcome | None] = [None] * len(demand)

    for gi in order:
        g = demand[gi]
        route = inst.routes[gi]
        planned = route.perceived
        if route.stranded:
            outcomes[gi] = GroupOutcome(planned, inst.stranding_penalty, STRANDED)
            continue
        acts = route.acts
        kinds = a.act_kind[acts]

        broken_at = None  # (position in acts, standing event or None for origin)
        pos = 0
        n = len(acts)
        while pos < n:
            if kinds[pos] == E.TRANSFER:
                act = acts[pos]
                if realized[a.act_head[act]] - realized[a.act_tail[act]] \
                        < a.act_lower[act]:
                    broken_at = (pos, int(a.act_tail[act]))
                    break
                pos += 1
                continue
            # a ride leg: consecutive drive/wait activities
            end = pos
            while end < n and kinds[end] != E.TRANSFER:
                end += 1
            leg = acts[pos:end]
            leg_drives = leg[a.act_kind[leg] == E.DRIVE]
            if (remaining[leg_drives] < g.weight).any():
                standing = None if pos == 0 else int(a.act_tail[acts[pos - 1]])
                broken_at = (pos, standing)
                break
            pos = end

        if broken_at is None:
            drives = acts[kinds == E.DRIVE]
            remaining[drives] -= g.weight
            rp = int(realized[route.events[-1]] - g.earliest_departure
                     + penalty * route.transfers)
            outcomes[gi] = GroupOutcome(planned, rp, COMPLETED)
            continue

        pos, standing = broken_at
        # seats on the part already travelled stay taken
        prefix = acts[:pos]
        prefix_drives = prefix[a.act_kind[prefix] == E.DRIVE]
        remaining[prefix_drives] -= g.weight
        transfers_used = int((a.act_kind[prefix] == E.TRANSFER).sum())

        if standing is None:
            p = router.first_platform(g.origin, g.earliest_departure)
            sources = [] if p is None else \
                [(p, make_label(int(realized[p - router.n_ev]), 0))]
        else:
            start_cost = int(realized[standing]) + penalty * transfers_used
            sources = [(standing, make_label(start_cost, transfers_used))]
        res = router.route(sources, g.destination, g.weight) if sources else None
        if res is None:
            outcomes[gi] = GroupOutcome(planned, inst.stranding_penalty, STRANDED)
            continue
        for d in _route_drives(inst, res.arcs):
            remaining[d] -= g.weight
        rp = int(res.cost - g.earliest_departure)
        outcomes[gi] = GroupOutcome(planned, rp, REROUTED)

    agg = sum(demand[gi].weight * max(0, o.realized_perceived - o.planned_perceived)
              for gi, o in enumerate(outcomes))
    return SimulationResult(realized, outcomes, int(agg))

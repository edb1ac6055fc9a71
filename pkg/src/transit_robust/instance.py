"""A scored unit of work: dataset + rolled-out network + timetable + schedule
+ planned passenger routes, with compiled arrays for fast simulation."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from . import ean as E
from .routing import TRANSFER_BASE, lex_dijkstra, make_label


@dataclass
class UtilityWeights:
    """Perceived travel time = journey duration + transfer_penalty * transfers."""

    transfer_penalty: int = 15

    def __post_init__(self):
        if self.transfer_penalty < 0:
            raise ValueError("transfer_penalty must be >= 0")


COMPLETED = "completed"
REROUTED = "rerouted"
STRANDED = "stranded"


@dataclass
class PassengerRoute:
    group: int
    acts: np.ndarray  # EAN activity ids along the planned route
    events: np.ndarray  # event sequence, len(acts) + 1
    transfers: int
    perceived: int
    status: str = COMPLETED

    @property
    def stranded(self) -> bool:
        return self.status == STRANDED


class Instance:
    """Immutable-after-construction bundle the robustness oracle scores."""

    def __init__(self, dataset: E.Dataset, pean: E.PeriodicEan,
                 ptt: E.PeriodicTimetable, aean: E.AperiodicEan,
                 schedule: E.VehicleSchedule,
                 weights: UtilityWeights | None = None,
                 stranding_penalty: int = 240):
        self.dataset = dataset
        self.pean = pean
        self.ptt = ptt
        self.aean = aean
        self.schedule = schedule
        self.weights = weights or UtilityWeights()
        self.stranding_penalty = stranding_penalty
        if len(schedule.turnaround_acts) == 0 and any(len(t) > 1 for t in schedule.tours):
            E.attach_schedule(aean, schedule)
        viol = E.validate_schedule(schedule, aean, aean.ev_time)
        if viol:
            raise ValueError(f"invalid vehicle schedule: {viol[0].message}")
        self.times = aean.ev_time.copy()
        self.routes: list[PassengerRoute] | None = None
        self.act_load: np.ndarray | None = None
        self._compile()

    # ------------------------------------------------------------------ build
    def _compile(self):
        a = self.aean
        n_ev = a.n_events

        # routing CSR over drive/wait/transfer activities, arcs sorted by
        # (tail event, activity id) so arc priority order equals id order
        routable = a.act_kind != E.TURNAROUND
        acts = np.nonzero(routable)[0]
        order = np.lexsort((acts, a.act_tail[acts]))
        acts = acts[order]
        self.rt_act = acts
        self.rt_head = a.act_head[acts]
        self.rt_kind = a.act_kind[acts]
        self.rt_ptr = np.zeros(n_ev + 1, dtype=np.int64)
        np.add.at(self.rt_ptr, a.act_tail[acts] + 1, 1)
        np.cumsum(self.rt_ptr, out=self.rt_ptr)

        # the unique drive/wait activity leaving each event within its trip
        self.next_in_trip = np.full(n_ev, -1, dtype=np.int64)
        in_trip = (a.act_kind == E.DRIVE) | (a.act_kind == E.WAIT)
        self.next_in_trip[a.act_tail[in_trip]] = np.nonzero(in_trip)[0]

        # departures and arrivals per station (scheduled order)
        self.station_deps: list[np.ndarray] = []
        self.station_arrs: list[np.ndarray] = []
        for s in range(self.dataset.n_stations):
            deps = np.nonzero((a.ev_kind == E.DEPARTURE) & (a.ev_station == s))[0]
            deps = deps[np.lexsort((deps, a.ev_time[deps]))]
            arrs = np.nonzero((a.ev_kind == E.ARRIVAL) & (a.ev_station == s))[0]
            self.station_deps.append(deps)
            self.station_arrs.append(arrs)

        # vehicle chains: event sequence and linking activities per tour
        self.chain_ev: list[np.ndarray] = []
        self.chain_act: list[np.ndarray] = []
        turn_by_pair = {}
        for i, aid in enumerate(self.schedule.turnaround_acts):
            turn_by_pair[int(a.act_tail[aid])] = int(aid)
        for tour in self.schedule.tours:
            evs: list[int] = []
            link: list[int] = []
            for trip in tour:
                tev = a.trip_events[trip]
                if evs:
                    link.append(turn_by_pair[evs[-1]])
                for idx, e in enumerate(tev):
                    if idx > 0:
                        nxt = self.next_in_trip[evs[-1]]
                        assert nxt >= 0 and a.act_head[nxt] == e
                        link.append(int(nxt))
                    evs.append(int(e))
            self.chain_ev.append(np.asarray(evs, dtype=np.int64))
            self.chain_act.append(np.asarray(link, dtype=np.int64))
            assert len(link) == len(evs) - 1

        # first departure event of each trip (for source delays)
        self.trip_start_ev = np.array(
            [a.trip_first_dep(t) for t in range(a.n_trips)], dtype=np.int64)

        self.drive_acts = np.nonzero(a.act_kind == E.DRIVE)[0]

    # -------------------------------------------------------------- planning
    def _planned_successors(self, remaining: np.ndarray, weight: int):
        times = self.times
        penalty = self.weights.transfer_penalty
        rt_ptr, rt_act, rt_head, rt_kind = \
            self.rt_ptr, self.rt_act, self.rt_head, self.rt_kind
        a = self.aean

        def successors(u: int):
            out = []
            for i in range(rt_ptr[u], rt_ptr[u + 1]):
                act = rt_act[i]
                head = rt_head[i]
                kind = rt_kind[i]
                if kind == E.DRIVE and remaining[act] < weight:
                    continue
                dur = int(times[head] - times[u])
                if kind == E.TRANSFER:
                    w = (dur + penalty) * TRANSFER_BASE + 1
                else:
                    w = dur * TRANSFER_BASE
                out.append((int(act), w, int(head)))
            return out

        return successors

    def route_group(self, gi: int, remaining: np.ndarray) -> PassengerRoute:
        """Best planned route for one group given remaining seat capacity."""
        g = self.dataset.demand[gi]
        deps = self.station_deps[g.origin]
        dep_times = self.times[deps]
        lo = int(np.searchsorted(dep_times, g.earliest_departure, side="left"))
        sources = [(int(d), make_label(int(self.times[d]), 0)) for d in deps[lo:]]
        targets = set(int(x) for x in self.station_arrs[g.destination])
        res = None
        if sources and targets:
            res = lex_dijkstra(sources, self._planned_successors(remaining, g.weight),
                               targets)
        if res is None:
            return PassengerRoute(gi, np.empty(0, dtype=np.int64),
                                  np.empty(0, dtype=np.int64), 0,
                                  self.stranding_penalty, STRANDED)
        acts = np.array([p for p, _u, _v in res.arcs], dtype=np.int64)
        events = np.empty(len(acts) + 1, dtype=np.int64)
        if len(acts):
            events[0] = res.arcs[0][1]
            events[1:] = [v for _p, _u, v in res.arcs]
        else:
            events[0] = res.target
        perceived = res.cost - g.earliest_departure
        return PassengerRoute(gi, acts, events, res.transfers, perceived)

    def plan_routes(self) -> None:
        """Route all groups first-come-first-served by earliest departure."""
        a = self.aean
        remaining = np.full(a.n_activities, self.schedule.vehicle_capacity,
                            dtype=np.int64)
        order = sorted(range(len(self.dataset.demand)),
                       key=lambda i: (self.dataset.demand[i].earliest_departure, i))
        routes: list[PassengerRoute | None] = [None] * len(order)
        for gi in order:
            r = self.route_group(gi, remaining)
            if not r.stranded:
                drives = r.acts[a.act_kind[r.acts] == E.DRIVE]
                remaining[drives] -= self.dataset.demand[gi].weight
            routes[gi] = r
        self.routes = routes
        self._index_routes()

    def _index_routes(self):
        """Per-activity passenger loads and flat arrays for fast simulation."""
        a = self.aean
        load = np.zeros(a.n_activities, dtype=np.int64)
        xfer_acts: list[np.ndarray] = []
        xfer_group: list[np.ndarray] = []
        for gi, r in enumerate(self.routes):
            if r.stranded or not len(r.acts):
                continue
            np.add.at(load, r.acts, self.dataset.demand[gi].weight)
            tr = r.acts[a.act_kind[r.acts] == E.TRANSFER]
            if len(tr):
                xfer_acts.append(tr)
                xfer_group.append(np.full(len(tr), gi))
        self.act_load = load
        self.used_transfer_acts = (np.concatenate(xfer_acts) if xfer_acts
                                   else np.empty(0, dtype=np.int64))
        self.used_transfer_group = (np.concatenate(xfer_group) if xfer_group
                                    else np.empty(0, dtype=np.int64))
        d = self.dataset.demand
        self.group_weight = np.array([g.weight for g in d], dtype=np.int64)
        self.group_ed = np.array([g.earliest_departure for g in d], dtype=np.int64)
        self.group_transfers = np.array([r.transfers for r in self.routes])
        self.group_perceived = np.array([r.perceived for r in self.routes])
        self.group_last_ev = np.array(
            [r.events[-1] if not r.stranded else -1 for r in self.routes],
            dtype=np.int64)
        self.group_stranded = np.array([r.stranded for r in self.routes], dtype=bool)

    def total_utility(self) -> int:
        """Sum of weighted planned perceived travel times."""
        if self.routes is None:
            raise ValueError("routes not planned yet")
        return int(np.dot(self.group_weight, self.group_perceived))

    # ------------------------------------------------------------------ misc
    def first_feasible_dep(self, station: int, time: int,
                           dep_order: np.ndarray, dep_times: np.ndarray) -> int:
        """Index into dep_order of the first departure at/after `time`."""
        return bisect_left(dep_times.tolist(), time)


def slack(instance_or_aean, times: np.ndarray | None = None) -> np.ndarray:
    """Per-activity slack of an aperiodic network under given event times."""
    if isinstance(instance_or_aean, Instance):
        aean = instance_or_aean.aean
        if times is None:
            times = instance_or_aean.times
    else:
        aean = instance_or_aean
    return E.aperiodic_slacks(aean, times)

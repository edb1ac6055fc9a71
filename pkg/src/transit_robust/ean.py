"""Event-activity networks: periodic construction, validation, roll-out.

Times are integer minutes throughout.  The periodic network is built from a
dataset (infrastructure + line concept + demand); the aperiodic network is
obtained by rolling the periodic one out over a number of periods and is the
object simulations operate on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# event kinds
ARRIVAL = 0
DEPARTURE = 1

# activity kinds
DRIVE = 0
WAIT = 1
TRANSFER = 2
TURNAROUND = 3

ACTIVITY_NAMES = {DRIVE: "drive", WAIT: "wait", TRANSFER: "transfer", TURNAROUND: "turnaround"}
EVENT_NAMES = {ARRIVAL: "arrival", DEPARTURE: "departure"}

#: sentinel for activities without a finite upper bound (turnarounds by default)
UNBOUNDED = np.int64(1) << 40


@dataclass(frozen=True)
class Station:
    id: int
    name: str


@dataclass(frozen=True)
class NetworkEdge:
    id: int
    from_station: int
    to_station: int
    min_drive: int
    max_drive: int

    def __post_init__(self):
        if self.from_station == self.to_station:
            raise ValueError(f"edge {self.id}: loop edges not allowed")
        if not 0 < self.min_drive <= self.max_drive:
            raise ValueError(f"edge {self.id}: need 0 < min_drive <= max_drive")


@dataclass(frozen=True)
class Line:
    id: int
    station_path: tuple[int, ...]
    frequency: int

    def __post_init__(self):
        if len(self.station_path) < 2:
            raise ValueError(f"line {self.id}: path needs at least 2 stations")
        if self.frequency < 1:
            raise ValueError(f"line {self.id}: frequency must be >= 1")


@dataclass(frozen=True)
class PassengerGroup:
    origin: int
    destination: int
    earliest_departure: int
    weight: int

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError("passenger group origin == destination")
        if self.weight < 1:
            raise ValueError("passenger group weight must be >= 1")


@dataclass
class Dataset:
    """Infrastructure, line concept and OD demand; the unit a model is trained for."""

    name: str
    stations: list[Station]
    edges: list[NetworkEdge]
    lines: list[Line]
    demand: list[PassengerGroup]

    def __post_init__(self):
        if [s.id for s in self.stations] != list(range(len(self.stations))):
            raise ValueError("station ids must be dense 0..n-1")
        if [e.id for e in self.edges] != list(range(len(self.edges))):
            raise ValueError("edge ids must be dense 0..m-1")
        n = len(self.stations)
        pairs = {}
        for e in self.edges:
            if not (0 <= e.from_station < n and 0 <= e.to_station < n):
                raise ValueError(f"edge {e.id} references unknown station")
            pairs[frozenset((e.from_station, e.to_station))] = e
        self._edge_by_pair = pairs
        for ln in self.lines:
            for u, v in zip(ln.station_path, ln.station_path[1:]):
                if frozenset((u, v)) not in pairs:
                    raise ValueError(f"line {ln.id}: no edge between stations {u} and {v}")
        for g in self.demand:
            if not (0 <= g.origin < n and 0 <= g.destination < n):
                raise ValueError("passenger group references unknown station")

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_between(self, u: int, v: int) -> NetworkEdge:
        return self._edge_by_pair[frozenset((u, v))]


@dataclass
class EanParams:
    """Construction parameters for the periodic event-activity network."""

    period: int = 60
    min_transfer: int = 2
    wait_lower: int = 1
    wait_upper_extra: int = 10  # wait upper bound = wait_lower + this
    drive_upper_extra: int | None = None  # None: use the edge's max_drive


@dataclass
class LineRun:
    """One periodic traversal of a line (one direction, one frequency repetition)."""

    id: int
    line: int
    direction: int  # +1 forward, -1 backward
    repetition: int
    events: list[int] = field(default_factory=list)  # dep, (arr, dep)*, arr
    activities: list[int] = field(default_factory=list)  # drives/waits along the run


class PeriodicEan:
    """Periodic event-activity network in struct-of-arrays form."""

    def __init__(self, dataset: Dataset, params: EanParams):
        self.dataset = dataset
        self.params = params
        self.period = params.period
        self._build()

    def _build(self):
        ds, p = self.dataset, self.params
        runs: list[LineRun] = []
        ev_kind: list[int] = []
        ev_station: list[int] = []
        ev_line: list[int] = []
        ev_run: list[int] = []
        act_kind: list[int] = []
        act_tail: list[int] = []
        act_head: list[int] = []
        act_lower: list[int] = []
        act_upper: list[int] = []
        act_edge: list[int] = []

        def add_event(kind, station, line, run):
            ev_kind.append(kind)
            ev_station.append(station)
            ev_line.append(line)
            ev_run.append(run)
            return len(ev_kind) - 1

        def add_act(kind, tail, head, lower, upper, edge=-1):
            act_kind.append(kind)
            act_tail.append(tail)
            act_head.append(head)
            act_lower.append(lower)
            act_upper.append(upper)
            act_edge.append(edge)
            return len(act_kind) - 1

        for line in ds.lines:
            for direction in (1, -1):
                path = line.station_path if direction == 1 else line.station_path[::-1]
                for rep in range(line.frequency):
                    run = LineRun(len(runs), line.id, direction, rep)
                    prev_dep = add_event(DEPARTURE, path[0], line.id, run.id)
                    run.events.append(prev_dep)
                    for i, s in enumerate(path[1:], start=1):
                        edge = ds.edge_between(path[i - 1], s)
                        arr = add_event(ARRIVAL, s, line.id, run.id)
                        upper = edge.max_drive if p.drive_upper_extra is None \
                            else edge.min_drive + p.drive_upper_extra
                        run.activities.append(
                            add_act(DRIVE, prev_dep, arr, edge.min_drive, upper, edge.id))
                        run.events.append(arr)
                        if i < len(path) - 1:
                            dep = add_event(DEPARTURE, s, line.id, run.id)
                            run.activities.append(
                                add_act(WAIT, arr, dep, p.wait_lower,
                                        p.wait_lower + p.wait_upper_extra))
                            run.events.append(dep)
                            prev_dep = dep
                    runs.append(run)

        # transfers: every arrival -> every departure of a different line at the
        # same station, with a window spanning a full period
        by_station_dep: dict[int, list[int]] = {}
        for e, (k, s) in enumerate(zip(ev_kind, ev_station)):
            if k == DEPARTURE:
                by_station_dep.setdefault(s, []).append(e)
        for e, (k, s, ln) in enumerate(zip(ev_kind, ev_station, ev_line)):
            if k != ARRIVAL:
                continue
            for d in by_station_dep.get(s, ()):
                if ev_line[d] != ln:
                    add_act(TRANSFER, e, d, p.min_transfer,
                            p.min_transfer + self.period - 1)

        self.runs = runs
        self.ev_kind = np.array(ev_kind, dtype=np.int64)
        self.ev_station = np.array(ev_station, dtype=np.int64)
        self.ev_line = np.array(ev_line, dtype=np.int64)
        self.ev_run = np.array(ev_run, dtype=np.int64)
        self.act_kind = np.array(act_kind, dtype=np.int64)
        self.act_tail = np.array(act_tail, dtype=np.int64)
        self.act_head = np.array(act_head, dtype=np.int64)
        self.act_lower = np.array(act_lower, dtype=np.int64)
        self.act_upper = np.array(act_upper, dtype=np.int64)
        self.act_edge = np.array(act_edge, dtype=np.int64)

    @property
    def n_events(self) -> int:
        return len(self.ev_kind)

    @property
    def n_activities(self) -> int:
        return len(self.act_kind)


@dataclass
class PeriodicTimetable:
    period: int
    times: np.ndarray  # minute in [0, period) per periodic event

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)


@dataclass(frozen=True)
class Violation:
    activity: int
    slack: int
    allowed: int
    message: str


def periodic_slack(ean: PeriodicEan, timetable: PeriodicTimetable, activity: int) -> int:
    """Modular slack (pi_j - pi_i - L) mod T of one periodic activity."""
    i, j = ean.act_tail[activity], ean.act_head[activity]
    return int((timetable.times[j] - timetable.times[i] - ean.act_lower[activity])
               % timetable.period)


def periodic_slacks(ean: PeriodicEan, timetable: PeriodicTimetable) -> np.ndarray:
    pi = timetable.times
    return (pi[ean.act_head] - pi[ean.act_tail] - ean.act_lower) % timetable.period


def validate_periodic(ean: PeriodicEan, timetable: PeriodicTimetable) -> list[Violation]:
    """Check every periodic activity bound; empty result means feasible."""
    if len(timetable.times) != ean.n_events:
        missing = list(range(len(timetable.times), ean.n_events))
        raise ValueError(f"timetable missing event times for events {missing}")
    slack = periodic_slacks(ean, timetable)
    allowed = ean.act_upper - ean.act_lower
    bad = np.nonzero(slack > allowed)[0]
    return [
        Violation(int(a), int(slack[a]), int(allowed[a]),
                  f"activity {a} ({ACTIVITY_NAMES[int(ean.act_kind[a])]}): "
                  f"slack {int(slack[a])} exceeds U-L={int(allowed[a])}")
        for a in bad
    ]


class AperiodicEan:
    """Rolled-out event-activity network over a horizon of K periods.

    Each periodic line run yields K trips; trip events are timed by
    accumulating the periodic activity durations (lower bound + periodic
    slack), so every instantiated activity realizes its smallest feasible
    duration and keeps its periodic slack.  Turnaround activities are added
    later, when a vehicle schedule is attached.
    """

    def __init__(self, pean: PeriodicEan, ptt: PeriodicTimetable, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        viol = validate_periodic(pean, ptt)
        if viol:
            raise ValueError(f"periodic timetable infeasible: {viol[0].message}")
        self.periodic = pean
        self.period = ptt.period
        self.horizon = horizon
        self._roll_out(pean, ptt, horizon)

    def _roll_out(self, pean: PeriodicEan, ptt: PeriodicTimetable, K: int):
        T = self.period
        slack = periodic_slacks(pean, ptt)
        dur = pean.act_lower + slack  # smallest feasible duration

        n_pev = pean.n_events
        # base time of each periodic event when its trip starts in period 0
        base = np.empty(n_pev, dtype=np.int64)
        for run in pean.runs:
            t = int(ptt.times[run.events[0]])
            base[run.events[0]] = t
            for a in run.activities:
                t += int(dur[a])
                base[pean.act_head[a]] = t

        # aperiodic event id = periodic event id * K + k
        self.n_events = n_pev * K
        k = np.tile(np.arange(K, dtype=np.int64), n_pev)
        parent = np.repeat(np.arange(n_pev, dtype=np.int64), K)
        self.ev_time = base[parent] + k * T
        self.ev_parent = parent
        self.ev_kind = pean.ev_kind[parent]
        self.ev_station = pean.ev_station[parent]
        self.ev_line = pean.ev_line[parent]
        run_of_parent = pean.ev_run[parent]
        self.ev_trip = run_of_parent * K + k

        # trips: one per (run, k); events in order along the run
        self.n_trips = len(pean.runs) * K
        self.trip_events: list[np.ndarray] = [None] * self.n_trips
        self.trip_run = np.empty(self.n_trips, dtype=np.int64)
        for run in pean.runs:
            ev = np.asarray(run.events, dtype=np.int64)
            for kk in range(K):
                t = run.id * K + kk
                self.trip_events[t] = ev * K + kk
                self.trip_run[t] = run.id

        act_kind: list[np.ndarray] = []
        act_tail: list[np.ndarray] = []
        act_head: list[np.ndarray] = []
        act_lower: list[np.ndarray] = []
        act_upper: list[np.ndarray] = []
        act_edge: list[np.ndarray] = []
        act_parent: list[np.ndarray] = []

        ks = np.arange(K, dtype=np.int64)
        in_trip = (pean.act_kind == DRIVE) | (pean.act_kind == WAIT)
        for a in np.nonzero(in_trip)[0]:
            i, j = pean.act_tail[a], pean.act_head[a]
            act_kind.append(np.full(K, pean.act_kind[a]))
            act_tail.append(i * K + ks)
            act_head.append(j * K + ks)
            act_lower.append(np.full(K, pean.act_lower[a]))
            act_upper.append(np.full(K, pean.act_upper[a]))
            act_edge.append(np.full(K, pean.act_edge[a]))
            act_parent.append(np.full(K, a))

        # transfers: copy k of the tail connects to the head copy reachable in
        # exactly the periodic duration; copies crossing the horizon are dropped
        for a in np.nonzero(pean.act_kind == TRANSFER)[0]:
            i, j = pean.act_tail[a], pean.act_head[a]
            target = base[i] + ks * T + dur[a]  # absolute head time per tail copy
            kj = (target - base[j]) // T
            ok = (kj >= 0) & (kj < K) & ((target - base[j]) % T == 0)
            if not ok.any():
                continue
            act_kind.append(np.full(int(ok.sum()), TRANSFER))
            act_tail.append(i * K + ks[ok])
            act_head.append(j * K + kj[ok])
            act_lower.append(np.full(int(ok.sum()), pean.act_lower[a]))
            act_upper.append(np.full(int(ok.sum()), pean.act_upper[a]))
            act_edge.append(np.full(int(ok.sum()), -1))
            act_parent.append(np.full(int(ok.sum()), a))

        self.act_kind = np.concatenate(act_kind)
        self.act_tail = np.concatenate(act_tail)
        self.act_head = np.concatenate(act_head)
        self.act_lower = np.concatenate(act_lower)
        self.act_upper = np.concatenate(act_upper)
        self.act_edge = np.concatenate(act_edge)
        self.act_parent = np.concatenate(act_parent)

    @property
    def n_activities(self) -> int:
        return len(self.act_kind)

    def trip_first_dep(self, trip: int) -> int:
        return int(self.trip_events[trip][0])

    def trip_last_arr(self, trip: int) -> int:
        return int(self.trip_events[trip][-1])

    def add_turnarounds(self, pairs: list[tuple[int, int]], lower: int,
                        upper: int = int(UNBOUNDED)):
        """Append turnaround activities (trip_from, trip_to) induced by a schedule."""
        if not pairs:
            return np.empty(0, dtype=np.int64)
        tails = np.array([self.trip_last_arr(a) for a, _ in pairs], dtype=np.int64)
        heads = np.array([self.trip_first_dep(b) for _, b in pairs], dtype=np.int64)
        n = len(pairs)
        ids = np.arange(self.n_activities, self.n_activities + n)
        self.act_kind = np.concatenate([self.act_kind, np.full(n, TURNAROUND)])
        self.act_tail = np.concatenate([self.act_tail, tails])
        self.act_head = np.concatenate([self.act_head, heads])
        self.act_lower = np.concatenate([self.act_lower, np.full(n, lower)])
        self.act_upper = np.concatenate([self.act_upper, np.full(n, upper, dtype=np.int64)])
        self.act_edge = np.concatenate([self.act_edge, np.full(n, -1)])
        self.act_parent = np.concatenate([self.act_parent, np.full(n, -1)])
        return ids


def aperiodic_slack(aean: AperiodicEan, times: np.ndarray, activity: int) -> int:
    """Aperiodic slack: duration minus lower bound under the given event times."""
    i, j = aean.act_tail[activity], aean.act_head[activity]
    return int(times[j] - times[i] - aean.act_lower[activity])


def aperiodic_slacks(aean: AperiodicEan, times: np.ndarray) -> np.ndarray:
    return times[aean.act_head] - times[aean.act_tail] - aean.act_lower


@dataclass
class VehicleSchedule:
    """Partition of trips into vehicle tours plus the induced turnarounds."""

    tours: list[list[int]]
    vehicle_capacity: int
    turnaround_lower: int
    turnaround_acts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def n_vehicles(self) -> int:
        return len(self.tours)


@dataclass(frozen=True)
class ScheduleViolation:
    tour: int
    message: str


def validate_schedule(schedule: VehicleSchedule, aean: AperiodicEan,
                      times: np.ndarray) -> list[ScheduleViolation]:
    """Check the trip partition and turnaround feasibility of a vehicle schedule."""
    out: list[ScheduleViolation] = []
    seen: dict[int, int] = {}
    for ti, tour in enumerate(schedule.tours):
        for trip in tour:
            if not 0 <= trip < aean.n_trips:
                raise ValueError(f"unknown trip id {trip} in tour {ti}")
            if trip in seen:
                out.append(ScheduleViolation(
                    ti, f"trip {trip} appears in tours {seen[trip]} and {ti}"))
            seen[trip] = ti
        for a, b in zip(tour, tour[1:]):
            end_ev = aean.trip_last_arr(a)
            start_ev = aean.trip_first_dep(b)
            if aean.ev_station[end_ev] != aean.ev_station[start_ev]:
                out.append(ScheduleViolation(
                    ti, f"trips {a}->{b}: turnaround changes station"))
                continue
            gap = int(times[start_ev] - times[end_ev])
            if gap < schedule.turnaround_lower:
                out.append(ScheduleViolation(
                    ti, f"trips {a}->{b}: turnaround gap {gap} < "
                        f"{schedule.turnaround_lower}"))
    missing = set(range(aean.n_trips)) - set(seen)
    if missing:
        out.append(ScheduleViolation(-1, f"trips not covered by any tour: {sorted(missing)}"))
    return out


def attach_schedule(aean: AperiodicEan, schedule: VehicleSchedule) -> None:
    """Add the schedule's turnaround activities to the aperiodic network."""
    pairs = [(a, b) for tour in schedule.tours for a, b in zip(tour, tour[1:])]
    schedule.turnaround_acts = aean.add_turnarounds(pairs, schedule.turnaround_lower)

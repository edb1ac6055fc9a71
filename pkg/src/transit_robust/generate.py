"""Artificial datasets (grid, ring) and labeled training corpora.

A dataset fixes infrastructure, lines and demand; a corpus varies the
timetable and vehicle schedule around it. Buffer strategies spread slack
differently through the network, which is exactly the structural variation
the surrogate has to learn to score.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ean as E
from .features import FeatureCaps, extract
from .instance import Instance, UtilityWeights
from .robustness import RobustnessConfig, normalize, run_suite
from . import storage


# ------------------------------------------------------------ dataset specs

@dataclass
class GridSpec:
    rows: int = 8
    cols: int = 10
    drive_min: int = 3
    drive_max: int = 9
    drive_window: int = 3  # max_drive = min_drive + up to this
    extra_lines: int = 12  # L-shaped lines on top of the row/column lines
    max_frequency: int = 1
    n_groups: int = 220
    total_passengers: int = 1676
    departure_window: int = 120
    seed: int = 0

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("grid needs at least 2x2 stations")
        if not 0 < self.drive_min <= self.drive_max:
            raise ValueError("need 0 < drive_min <= drive_max")
        if self.total_passengers < self.n_groups:
            raise ValueError("need at least one passenger per group")


@dataclass
class RingSpec:
    rings: int = 3
    spokes: int = 8
    drive_min: int = 3
    drive_max: int = 9
    drive_window: int = 3
    max_frequency: int = 1
    n_groups: int = 120
    total_passengers: int = 800
    departure_window: int = 120
    seed: int = 0

    def __post_init__(self):
        if self.rings < 1 or self.spokes < 3:
            raise ValueError("need at least 1 ring and 3 spokes")
        if self.total_passengers < self.n_groups:
            raise ValueError("need at least one passenger per group")


def _draw_edge_times(spec, rng) -> tuple[int, int]:
    lo = int(rng.integers(spec.drive_min, spec.drive_max + 1))
    return lo, lo + int(rng.integers(1, spec.drive_window + 1))


def _gravity_demand(n_stations, degree, spec, rng) -> list[E.PassengerGroup]:
    """OD groups drawn with probability proportional to degree products."""
    w = np.asarray(degree, dtype=np.float64)
    prob = np.outer(w, w)
    np.fill_diagonal(prob, 0.0)
    prob = prob.ravel() / prob.sum()
    picks = rng.choice(n_stations * n_stations, size=spec.n_groups, p=prob)
    base, rem = divmod(spec.total_passengers, spec.n_groups)
    sizes = np.full(spec.n_groups, base, dtype=np.int64)
    sizes[rng.choice(spec.n_groups, size=rem, replace=False)] += 1
    # reshuffle mass so group sizes vary while the total stays exact
    for _ in range(spec.n_groups):
        a, b = rng.integers(0, spec.n_groups, size=2)
        move = min(int(sizes[a]) - 1, int(rng.integers(0, base + 1)))
        if move > 0:
            sizes[a] -= move
            sizes[b] += move
    deps = rng.integers(0, spec.departure_window, size=spec.n_groups)
    return [E.PassengerGroup(int(p // n_stations), int(p % n_stations),
                             int(t), int(s))
            for p, t, s in zip(picks, deps, sizes)]


def gen_grid(spec: GridSpec | None = None) -> E.Dataset:
    """Rectangular grid with row, column and L-shaped lines covering all edges."""
    spec = spec or GridSpec()
    rng = np.random.default_rng(spec.seed)
    R, C = spec.rows, spec.cols
    sid = lambda r, c: r * C + c
    stations = [E.Station(sid(r, c), f"g{r}-{c}") for r in range(R) for c in range(C)]
    edges = []
    for r in range(R):
        for c in range(C - 1):
            lo, hi = _draw_edge_times(spec, rng)
            edges.append(E.NetworkEdge(len(edges), sid(r, c), sid(r, c + 1), lo, hi))
    for r in range(R - 1):
        for c in range(C):
            lo, hi = _draw_edge_times(spec, rng)
            edges.append(E.NetworkEdge(len(edges), sid(r, c), sid(r + 1, c), lo, hi))

    lines = []

    def add_line(path):
        freq = int(rng.integers(1, spec.max_frequency + 1))
        lines.append(E.Line(len(lines), tuple(path), freq))

    for r in range(R):
        add_line([sid(r, c) for c in range(C)])
    for c in range(C):
        add_line([sid(r, c) for r in range(R)])
    for k in range(spec.extra_lines):
        r = int(rng.integers(0, R - 1))
        c = int(rng.integers(1, C))
        path = [sid(r, cc) for cc in range(c + 1)] + \
            [sid(rr, c) for rr in range(r + 1, R)]
        add_line(path)

    degree = np.zeros(R * C)
    for e in edges:
        degree[e.from_station] += 1
        degree[e.to_station] += 1
    demand = _gravity_demand(R * C, degree, spec, rng)
    return E.Dataset(f"grid{R}x{C}", stations, edges, lines, demand)


def gen_ring(spec: RingSpec | None = None) -> E.Dataset:
    """Concentric rings joined by spokes; arc and radial lines cover all edges."""
    spec = spec or RingSpec()
    rng = np.random.default_rng(spec.seed)
    G, S = spec.rings, spec.spokes
    sid = lambda g, s: g * S + s
    stations = [E.Station(sid(g, s), f"r{g}-{s}") for g in range(G) for s in range(S)]
    edges = []
    for g in range(G):
        for s in range(S):
            lo, hi = _draw_edge_times(spec, rng)
            edges.append(E.NetworkEdge(len(edges), sid(g, s), sid(g, (s + 1) % S),
                                       lo, hi))
    for g in range(G - 1):
        for s in range(S):
            lo, hi = _draw_edge_times(spec, rng)
            edges.append(E.NetworkEdge(len(edges), sid(g, s), sid(g + 1, s), lo, hi))

    lines = []

    def add_line(path):
        freq = int(rng.integers(1, spec.max_frequency + 1))
        lines.append(E.Line(len(lines), tuple(path), freq))

    half = S // 2
    for g in range(G):
        add_line([sid(g, s) for s in range(half + 1)])
        add_line([sid(g, s % S) for s in range(half, S + 1)])
    for s in range(S):
        if G >= 2:
            add_line([sid(g, s) for g in range(G)])

    degree = np.zeros(G * S)
    for e in edges:
        degree[e.from_station] += 1
        degree[e.to_station] += 1
    demand = _gravity_demand(G * S, degree, spec, rng)
    return E.Dataset(f"ring{G}x{S}", stations, edges, lines, demand)


# ------------------------------------------------------------------ variants

@dataclass(frozen=True)
class EarliestFeasible:
    """All in-trip slacks zero; the tightest timetable the bounds allow."""


@dataclass(frozen=True)
class RandomSlack:
    """An integer slack budget scattered uniformly over in-trip activities."""

    budget: int = 60

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("slack budget must be >= 0")


@dataclass(frozen=True)
class UniformBuffer:
    """Every in-trip activity gets b extra minutes where U-L permits."""

    b: int = 1

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("buffer must be >= 0")


@dataclass(frozen=True)
class FirstFitMinTurnaround:
    """Chain each trip to the vehicle that frees up latest but still fits."""


@dataclass(frozen=True)
class BufferedTurnaround:
    """Like first fit, but demand `extra` minutes on top of the minimum."""

    extra: int = 5

    def __post_init__(self):
        if self.extra < 0:
            raise ValueError("turnaround extra must be >= 0")


@dataclass(frozen=True)
class VariantSpec:
    timetabling: object = field(default_factory=EarliestFeasible)
    scheduling: object = field(default_factory=FirstFitMinTurnaround)
    seed: int = 0


def gen_timetable(pean: E.PeriodicEan, strategy=None,
                  seed: int = 0) -> E.PeriodicTimetable:
    """Constructive feasible periodic timetable under a buffer strategy.

    Times accumulate along each line run from a random start offset; the
    strategy decides how much slack each drive and wait activity receives.
    Transfer windows span a full period, so feasibility never depends on
    the offsets.
    """
    strategy = strategy or EarliestFeasible()
    rng = np.random.default_rng(seed)
    T = pean.period
    room = pean.act_upper - pean.act_lower
    slack = np.zeros(pean.n_activities, dtype=np.int64)
    in_trip = np.nonzero((pean.act_kind == E.DRIVE) | (pean.act_kind == E.WAIT))[0]

    if isinstance(strategy, UniformBuffer):
        slack[in_trip] = np.minimum(strategy.b, room[in_trip])
    elif isinstance(strategy, RandomSlack):
        open_room = room[in_trip].copy()
        budget = strategy.budget
        while budget > 0:
            avail = np.nonzero(open_room > 0)[0]
            if not len(avail):
                break
            pick = avail[rng.integers(0, len(avail))]
            slack[in_trip[pick]] += 1
            open_room[pick] -= 1
            budget -= 1
    elif not isinstance(strategy, EarliestFeasible):
        raise TypeError(f"unknown timetabling strategy {strategy!r}")

    times = np.zeros(pean.n_events, dtype=np.int64)
    offsets = {}
    for run in pean.runs:
        key = (run.line, run.direction)
        if key not in offsets:
            offsets[key] = int(rng.integers(0, T))
        t = offsets[key] + (T * run.repetition) // max(
            1, pean.dataset.lines[run.line].frequency)
        times[run.events[0]] = t % T
        for a in run.activities:
            t += int(pean.act_lower[a] + slack[a])
            times[pean.act_head[a]] = t % T
    ptt = E.PeriodicTimetable(T, times)
    viol = E.validate_periodic(pean, ptt)
    if viol:
        raise RuntimeError(f"constructed timetable infeasible: {viol[0].message}")
    return ptt


def gen_schedule(aean: E.AperiodicEan, strategy=None, vehicle_capacity: int = 100,
                 turnaround_lower: int = 3) -> E.VehicleSchedule:
    """Greedy vehicle chaining over the rolled-out trips.

    Trips in start-time order; each attaches to the compatible vehicle that
    became ready last (tightest feasible turnaround) or opens a new tour.
    Deterministic; at worst one vehicle per trip.
    """
    strategy = strategy or FirstFitMinTurnaround()
    if isinstance(strategy, BufferedTurnaround):
        min_gap = turnaround_lower + strategy.extra
    elif isinstance(strategy, FirstFitMinTurnaround):
        min_gap = turnaround_lower
    else:
        raise TypeError(f"unknown scheduling strategy {strategy!r}")

    trips = sorted(range(aean.n_trips),
                   key=lambda t: (int(aean.ev_time[aean.trip_first_dep(t)]), t))
    tours: list[list[int]] = []
    ready: list[tuple[int, int]] = []  # per vehicle: (station, ready time)
    for t in trips:
        start_ev = aean.trip_first_dep(t)
        s = int(aean.ev_station[start_ev])
        start = int(aean.ev_time[start_ev])
        best = -1
        for v, (vs, vt) in enumerate(ready):
            if vs == s and vt + min_gap <= start:
                if best < 0 or vt > ready[best][1] or \
                        (vt == ready[best][1] and v < best):
                    best = v
        end_ev = aean.trip_last_arr(t)
        state = (int(aean.ev_station[end_ev]), int(aean.ev_time[end_ev]))
        if best >= 0:
            tours[best].append(t)
            ready[best] = state
        else:
            tours.append([t])
            ready.append(state)
    return E.VehicleSchedule(tours, vehicle_capacity, turnaround_lower)


def build_instance(dataset: E.Dataset, variant: VariantSpec | None = None,
                   params: E.EanParams | None = None, horizon: int = 4,
                   vehicle_capacity: int = 100, turnaround_lower: int = 3,
                   weights: UtilityWeights | None = None,
                   plan: bool = True) -> Instance:
    """Dataset + variant -> fully planned instance, reproducible by seed."""
    variant = variant or VariantSpec()
    params = params or E.EanParams()
    pean = E.PeriodicEan(dataset, params)
    ptt = gen_timetable(pean, variant.timetabling, variant.seed)
    aean = E.AperiodicEan(pean, ptt, horizon)
    sched = gen_schedule(aean, variant.scheduling, vehicle_capacity,
                         turnaround_lower)
    inst = Instance(dataset, pean, ptt, aean, sched, weights)
    if plan:
        inst.plan_routes()
    return inst


# -------------------------------------------------------------------- corpus

def default_variants(count: int, base_seed: int = 0) -> list[VariantSpec]:
    """A mixed pool of buffer strategies, `count` variants in total."""
    pool = [
        EarliestFeasible(),
        UniformBuffer(1), UniformBuffer(2), UniformBuffer(3),
        RandomSlack(40), RandomSlack(80), RandomSlack(120), RandomSlack(200),
    ]
    sched = [FirstFitMinTurnaround(), BufferedTurnaround(5),
             BufferedTurnaround(10)]
    out = []
    for i in range(count):
        out.append(VariantSpec(pool[i % len(pool)],
                               sched[(i // len(pool)) % len(sched)],
                               seed=base_seed + i))
    return out


def _variant_obj(v: VariantSpec) -> dict:
    def enc(s):
        d = {"strategy": type(s).__name__}
        d.update({k: getattr(s, k) for k in getattr(s, "__dataclass_fields__", {})})
        return d

    return {"timetabling": enc(v.timetabling), "scheduling": enc(v.scheduling),
            "seed": v.seed}


def gen_corpus(dataset: E.Dataset, variants: list[VariantSpec], count: int,
               out_dir, params: E.EanParams | None = None, horizon: int = 4,
               robustness: RobustnessConfig | None = None,
               caps: FeatureCaps | None = None, vehicle_capacity: int = 100,
               turnaround_lower: int = 3, log_every: int = 25) -> dict:
    """Label count replicates of every variant with the true stress tests.

    Replicate r of variant v uses seed variant.seed + 1000003 * r, so the
    whole corpus is reproducible from the manifest alone. Features and raw
    values are flushed row by row; normalized labels are written at the end
    (they depend on the corpus maximum).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = params or E.EanParams()
    robustness = robustness or RobustnessConfig()
    caps = caps or FeatureCaps()
    t0 = time.time()

    ids: list[str] = []
    raws: list[np.ndarray] = []
    feats: list[np.ndarray] = []
    layout = None
    jobs = [(vi, v, r) for vi, v in enumerate(variants) for r in range(count)]
    for k, (vi, v, r) in enumerate(jobs):
        seeded = VariantSpec(v.timetabling, v.scheduling,
                             seed=v.seed + 1000003 * r)
        inst = build_instance(dataset, seeded, params, horizon,
                              vehicle_capacity, turnaround_lower)
        fv = extract(inst, caps)
        layout = fv.layout
        report = run_suite(inst, robustness)
        ids.append(f"v{vi}r{r}")
        feats.append(fv.values)
        raws.append(report.raw)
        if log_every and (k + 1) % log_every == 0:
            done = k + 1
            rate = (time.time() - t0) / done
            print(f"[gen_corpus] {done}/{len(jobs)} instances, "
                  f"{rate:.2f}s each", flush=True)
            storage.save_features(out / "features.csv", ids, np.vstack(feats))
            storage.save_robustness(out / "robustness.csv", ids, np.vstack(raws))

    # zero-slack baseline instance, the natural starting point for the search
    baseline = build_instance(dataset,
                              VariantSpec(EarliestFeasible(),
                                          FirstFitMinTurnaround(), seed=0),
                              params, horizon, vehicle_capacity,
                              turnaround_lower)
    storage.save_instance(baseline, out / "baseline")

    feats_m = np.vstack(feats)
    raw_m = np.vstack(raws)
    storage.save_features(out / "features.csv", ids, feats_m)
    storage.save_robustness(out / "robustness.csv", ids, raw_m)
    storage.save_labels(out / "labels.csv", ids, normalize(raw_m))
    with open(out / "layout.json", "w") as fh:
        fh.write(layout.to_json())
    manifest = {
        "dataset": dataset.name,
        "n_instances": len(ids),
        "count_per_variant": count,
        "variants": [_variant_obj(v) for v in variants],
        "replicate_seed_stride": 1000003,
        "horizon": horizon,
        "vehicle_capacity": vehicle_capacity,
        "turnaround_lower": turnaround_lower,
        "period": params.period,
        "master_seed": robustness.master_seed,
        "rt4_replications": robustness.rt4_replications,
        "elapsed_seconds": round(time.time() - t0, 1),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest

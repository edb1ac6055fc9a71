"""File formats: dataset and instance directories, CSV matrices, flat configs.

A dataset lives in a directory of CSV files (stations, edges, lines, od);
an instance directory adds the rolled-out events and activities, the
timetable, the vehicle tours and the planned passenger routes. All files
use headers, comma separators and LF line endings.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import ean as E
from .instance import Instance, PassengerRoute


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ------------------------------------------------------------------ dataset

def save_dataset(ds: E.Dataset, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_csv(d / "stations.csv", ["id", "name"],
               [(s.id, s.name) for s in ds.stations])
    _write_csv(d / "edges.csv", ["id", "from", "to", "min_drive", "max_drive"],
               [(e.id, e.from_station, e.to_station, e.min_drive, e.max_drive)
                for e in ds.edges])
    _write_csv(d / "lines.csv", ["id", "frequency", "station_path"],
               [(ln.id, ln.frequency, " ".join(map(str, ln.station_path)))
                for ln in ds.lines])
    _write_csv(d / "od.csv", ["origin", "destination", "earliest_departure", "weight"],
               [(g.origin, g.destination, g.earliest_departure, g.weight)
                for g in ds.demand])


def load_dataset(directory, name: str | None = None) -> E.Dataset:
    d = Path(directory)
    for f in ("stations.csv", "edges.csv", "lines.csv", "od.csv"):
        if not (d / f).is_file():
            raise FileNotFoundError(f"dataset directory {d} is missing {f}")
    stations = [E.Station(int(r["id"]), r["name"])
                for r in _read_csv(d / "stations.csv")]
    edges = [E.NetworkEdge(int(r["id"]), int(r["from"]), int(r["to"]),
                           int(r["min_drive"]), int(r["max_drive"]))
             for r in _read_csv(d / "edges.csv")]
    lines = [E.Line(int(r["id"]), tuple(int(x) for x in r["station_path"].split()),
                    int(r["frequency"]))
             for r in _read_csv(d / "lines.csv")]
    demand = [E.PassengerGroup(int(r["origin"]), int(r["destination"]),
                               int(r["earliest_departure"]), int(r["weight"]))
              for r in _read_csv(d / "od.csv")]
    return E.Dataset(name or d.name, stations, edges, lines, demand)


# ----------------------------------------------------------------- instance

def save_instance(inst: Instance, directory) -> None:
    """Instance directory: dataset files plus the rolled-out network state."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_dataset(inst.dataset, d)
    a = inst.aean
    _write_csv(d / "events.csv", ["id", "kind", "station", "line", "trip"],
               zip(range(a.n_events),
                   (E.EVENT_NAMES[int(k)] for k in a.ev_kind),
                   a.ev_station.tolist(), a.ev_line.tolist(), a.ev_trip.tolist()))
    _write_csv(d / "activities.csv",
               ["id", "kind", "tail", "head", "lower", "upper", "edge"],
               zip(range(a.n_activities),
                   (E.ACTIVITY_NAMES[int(k)] for k in a.act_kind),
                   a.act_tail.tolist(), a.act_head.tolist(),
                   a.act_lower.tolist(), a.act_upper.tolist(),
                   a.act_edge.tolist()))
    _write_csv(d / "timetable.csv", ["event_id", "time"],
               enumerate(inst.times.tolist()))
    _write_csv(d / "tours.csv", ["tour_id", "trip_sequence"],
               [(i, " ".join(map(str, tour)))
                for i, tour in enumerate(inst.schedule.tours)])
    routes = inst.routes or []
    _write_csv(d / "routes.csv", ["group_id", "activity_sequence"],
               [(r.group, " ".join(map(str, r.acts.tolist())))
                for r in routes])
    meta = {
        "period": inst.pean.period,
        "horizon": inst.aean.horizon,
        "vehicle_capacity": inst.schedule.vehicle_capacity,
        "turnaround_lower": inst.schedule.turnaround_lower,
        "min_transfer": inst.pean.params.min_transfer,
        "wait_lower": inst.pean.params.wait_lower,
        "wait_upper_extra": inst.pean.params.wait_upper_extra,
        "transfer_penalty": inst.weights.transfer_penalty,
        "stranding_penalty": inst.stranding_penalty,
    }
    with open(d / "instance.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def load_instance(directory) -> Instance:
    """Rebuild an instance from its directory.

    The periodic network is reconstructed from the dataset and parameters;
    the stored aperiodic timetable and tours are reattached, and stored
    routes reloaded without replanning.
    """
    d = Path(directory)
    with open(d / "instance.json") as fh:
        meta = json.load(fh)
    ds = load_dataset(d)
    params = E.EanParams(period=meta["period"], min_transfer=meta["min_transfer"],
                         wait_lower=meta["wait_lower"],
                         wait_upper_extra=meta["wait_upper_extra"])
    pean = E.PeriodicEan(ds, params)
    tt_rows = _read_csv(d / "timetable.csv")
    times = np.zeros(len(tt_rows), dtype=np.int64)
    for r in tt_rows:
        times[int(r["event_id"])] = int(r["time"])
    K = meta["horizon"]
    # periodic times of the parents in period 0
    ptt = E.PeriodicTimetable(
        meta["period"], times[np.arange(pean.n_events) * K] % meta["period"])
    aean = E.AperiodicEan(pean, ptt, K)
    if not np.array_equal(aean.ev_time, times):
        # stored run offsets were not reduced modulo the period; keep the
        # stored absolute times but insist they still satisfy all bounds
        aean.ev_time = times
        if (E.aperiodic_slacks(aean, times) < 0).any():
            raise ValueError(f"{d}: stored timetable violates activity bounds "
                             "after roll-out reconstruction")
    tours = [[int(x) for x in r["trip_sequence"].split()]
             for r in sorted(_read_csv(d / "tours.csv"),
                             key=lambda r: int(r["tour_id"]))]
    sched = E.VehicleSchedule(tours, meta["vehicle_capacity"],
                              meta["turnaround_lower"])
    from .instance import UtilityWeights
    inst = Instance(ds, pean, ptt, aean, sched,
                    UtilityWeights(meta["transfer_penalty"]),
                    meta["stranding_penalty"])
    routes_file = d / "routes.csv"
    if routes_file.is_file():
        rows = _read_csv(routes_file)
        if rows:
            _attach_routes(inst, rows)
    return inst


def _attach_routes(inst: Instance, rows: list[dict]) -> None:
    a = inst.aean
    routes: list[PassengerRoute | None] = [None] * len(inst.dataset.demand)
    for r in rows:
        gi = int(r["group_id"])
        acts = np.array([int(x) for x in r["activity_sequence"].split()],
                        dtype=np.int64)
        g = inst.dataset.demand[gi]
        if not len(acts):
            routes[gi] = PassengerRoute(gi, acts, np.empty(0, dtype=np.int64),
                                        0, inst.stranding_penalty, "stranded")
            continue
        events = np.concatenate([[a.act_tail[acts[0]]], a.act_head[acts]])
        transfers = int((a.act_kind[acts] == E.TRANSFER).sum())
        perceived = int(inst.times[events[-1]] - g.earliest_departure
                        + inst.weights.transfer_penalty * transfers)
        routes[gi] = PassengerRoute(gi, acts, events, transfers, perceived)
    if any(r is None for r in routes):
        missing = [i for i, r in enumerate(routes) if r is None]
        raise ValueError(f"routes.csv misses groups {missing}")
    inst.routes = routes
    inst._index_routes()


# ----------------------------------------------------------- flat matrices

def save_matrix(path, ids, matrix, value_columns) -> None:
    """CSV with an instance_id column followed by value columns."""
    matrix = np.asarray(matrix)
    _write_csv(Path(path), ["instance_id"] + list(value_columns),
               ([i] + [_fmt(v) for v in row] for i, row in zip(ids, matrix)))


def _fmt(v):
    f = float(v)
    return int(f) if f.is_integer() else repr(f)


def load_matrix(path) -> tuple[list[str], np.ndarray]:
    """Returns (instance ids, float matrix) of a matrix CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "instance_id":
            raise ValueError(f"{path}: expected instance_id as first column")
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    return ids, np.asarray(rows, dtype=np.float64)


ROBUSTNESS_COLUMNS = ["rt1_raw", "rt2_raw", "rt3_raw", "rt4_raw"]
LABEL_COLUMNS = ["rt1", "rt2", "rt3", "rt4"]


def save_robustness(path, ids, raw) -> None:
    save_matrix(path, ids, raw, ROBUSTNESS_COLUMNS)


def save_labels(path, ids, normalized) -> None:
    save_matrix(path, ids, normalized, LABEL_COLUMNS)


def feature_columns(n: int) -> list[str]:
    return [f"x{i}" for i in range(n)]


def save_features(path, ids, matrix) -> None:
    save_matrix(path, ids, matrix, feature_columns(np.asarray(matrix).shape[1]))


def save_history(path, history) -> None:
    _write_csv(Path(path), ["epoch", "phase", "train_loss", "val_loss"],
               history.to_rows())


# ------------------------------------------------------------ flat configs

def load_config(path) -> dict[str, str]:
    """Flat key=value file; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def save_config(path, values: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        for k, v in values.items():
            fh.write(f"{k}={v}\n")

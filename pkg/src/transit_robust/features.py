"""The nine key-feature vectors summarizing an instance, and input scaling.

For a dataset with n stations and m network edges the assembled vector has
length m + traveltime_max + (transfers_max + 1) + 4n + turnaround_max:

  1  mean vehicle occupancy in percent per network edge          (m)
  2  passenger groups by perceived travel time in minutes        (traveltime_max)
  3  weighted share of passengers by transfer count              (transfers_max + 1)
  4  mean slack on wait activities per station                   (n)
  5  mean slack on transfer activities per station               (n)
  6  weighted share of transfers per station                     (n)
  7  sum of frequencies of the lines serving each station        (n)
  8  share of events per station                                 (n)
  9  trips by outgoing turnaround slack in minutes               (turnaround_max)

Travel times are binned 1..traveltime_max and turnaround slacks
0..turnaround_max-1; the last bin absorbs larger values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import ean as E
from .instance import Instance

FEATURE_NAMES = {
    1: "edge_occupancy", 2: "travel_time_histogram", 3: "transfer_shares",
    4: "wait_slack_per_station", 5: "transfer_slack_per_station",
    6: "transfer_share_per_station", 7: "line_frequency_per_station",
    8: "event_share_per_station", 9: "turnaround_slack_histogram",
}


@dataclass
class FeatureCaps:
    traveltime_max: int = 240
    transfers_max: int = 10
    turnaround_max: int = 30

    def __post_init__(self):
        if min(self.traveltime_max, self.transfers_max, self.turnaround_max) <= 0:
            raise ValueError("feature caps must be > 0")


@dataclass
class FeatureLayout:
    """Maps vector indices to (feature number, within-feature index)."""

    n_stations: int
    n_edges: int
    caps: FeatureCaps

    @property
    def blocks(self) -> list[tuple[int, int]]:
        n, m, c = self.n_stations, self.n_edges, self.caps
        return [(1, m), (2, c.traveltime_max), (3, c.transfers_max + 1),
                (4, n), (5, n), (6, n), (7, n), (8, n), (9, c.turnaround_max)]

    @property
    def length(self) -> int:
        return sum(size for _, size in self.blocks)

    def offsets(self) -> dict[int, tuple[int, int]]:
        out, pos = {}, 0
        for feat, size in self.blocks:
            out[feat] = (pos, pos + size)
            pos += size
        return out

    def feature_of_index(self) -> np.ndarray:
        return np.concatenate([np.full(size, feat) for feat, size in self.blocks])

    def to_json(self) -> str:
        return json.dumps({
            "n_stations": self.n_stations, "n_edges": self.n_edges,
            "caps": {"traveltime_max": self.caps.traveltime_max,
                     "transfers_max": self.caps.transfers_max,
                     "turnaround_max": self.caps.turnaround_max},
            "blocks": [{"feature": f, "name": FEATURE_NAMES[f], "size": s}
                       for f, s in self.blocks],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FeatureLayout":
        obj = json.loads(text)
        return cls(obj["n_stations"], obj["n_edges"], FeatureCaps(**obj["caps"]))


@dataclass
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    def block(self, feature: int) -> np.ndarray:
        lo, hi = self.layout.offsets()[feature]
        return self.values[lo:hi]


def extract(inst: Instance, caps: FeatureCaps | None = None,
            times: np.ndarray | None = None) -> FeatureVector:
    """Assemble the feature vector of an instance.

    `times` overrides the scheduled event times (the local search re-times
    events while holding routes fixed); passenger routes must be planned.
    """
    if inst.routes is None:
        raise ValueError("instance has no planned routes; call plan_routes()")
    caps = caps or FeatureCaps()
    if times is None:
        times = inst.times
    ds, a = inst.dataset, inst.aean
    n, m = ds.n_stations, ds.n_edges
    layout = FeatureLayout(n, m, caps)
    demand = ds.demand
    weight = inst.group_weight
    slack = E.aperiodic_slacks(a, times)

    # 1: mean occupancy percent of the drive activities on each edge
    f1 = np.zeros(m)
    occ = 100.0 * inst.act_load[inst.drive_acts] / inst.schedule.vehicle_capacity
    counts = np.bincount(a.act_edge[inst.drive_acts], minlength=m)
    sums = np.bincount(a.act_edge[inst.drive_acts], weights=occ, minlength=m)
    used = counts > 0
    f1[used] = sums[used] / counts[used]

    # 2: groups per perceived travel time minute (unweighted group counts)
    perceived = _perceived(inst, times)
    f2 = np.zeros(caps.traveltime_max)
    bins = np.clip(perceived, 1, caps.traveltime_max) - 1
    np.add.at(f2, bins, 1)

    # 3: weighted share of passengers per transfer count
    f3 = np.zeros(caps.transfers_max + 1)
    tr = np.minimum(inst.group_transfers, caps.transfers_max)
    np.add.at(f3, tr, weight)
    if f3.sum() > 0:
        f3 /= f3.sum()

    f4 = _mean_by_station(a, slack, E.WAIT, n)
    f5 = _mean_by_station(a, slack, E.TRANSFER, n)

    # 6: weighted share of planned transfers per station
    f6 = np.zeros(n)
    if len(inst.used_transfer_acts):
        st = a.ev_station[a.act_tail[inst.used_transfer_acts]]
        np.add.at(f6, st, weight[inst.used_transfer_group])
        total = f6.sum()
        if total > 0:
            f6 /= total

    # 7: sum of line frequencies over the lines serving each station
    f7 = np.zeros(n)
    for line in ds.lines:
        for s in set(line.station_path):
            f7[s] += line.frequency

    # 8: share of events per station
    f8 = np.bincount(a.ev_station, minlength=n).astype(float)
    f8 /= f8.sum()

    # 9: trips per outgoing turnaround slack minute
    f9 = np.zeros(caps.turnaround_max)
    tacts = inst.schedule.turnaround_acts
    if len(tacts):
        bins9 = np.minimum(slack[tacts], caps.turnaround_max - 1)
        np.add.at(f9, bins9, 1)

    values = np.concatenate([f1, f2, f3, f4, f5, f6, f7, f8, f9])
    assert len(values) == layout.length
    return FeatureVector(values, layout)


def _perceived(inst: Instance, times: np.ndarray) -> np.ndarray:
    """Perceived travel time per group with routes fixed, under given times."""
    if times is inst.times:
        return inst.group_perceived
    arr = np.where(inst.group_stranded, 0, times[inst.group_last_ev])
    return np.where(
        inst.group_stranded, inst.stranding_penalty,
        arr - inst.group_ed + inst.weights.transfer_penalty * inst.group_transfers)


def _mean_by_station(a, slack, kind: int, n: int) -> np.ndarray:
    acts = np.nonzero(a.act_kind == kind)[0]
    out = np.zeros(n)
    if not len(acts):
        return out
    st = a.ev_station[a.act_tail[acts]]
    counts = np.bincount(st, minlength=n)
    sums = np.bincount(st, weights=slack[acts].astype(float), minlength=n)
    used = counts > 0
    out[used] = sums[used] / counts[used]
    return out


@dataclass
class Scaler:
    """Per-column z-score fitted on training rows; constant columns pass
    through centered."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def to_obj(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_obj(cls, obj: dict) -> "Scaler":
        return cls(np.asarray(obj["mean"]), np.asarray(obj["std"]))


def fit_scaler(x: np.ndarray) -> Scaler:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0.0] = 1.0
    return Scaler(mean, std)


def apply_scaler(x: np.ndarray, scaler: Scaler) -> np.ndarray:
    return scaler.apply(x)

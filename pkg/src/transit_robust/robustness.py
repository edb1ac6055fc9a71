"""Robustness stress tests RT-1..RT-4 and cross-instance normalization.

Every test is a series of independent simulations; its raw value is the sum
(RT-1..RT-3) or mean (RT-4) of the simulations' aggregate passenger delays.
Raw values are comparable only within one dataset and are normalized so the
worst instance of a set scores 100.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import ean as E
from .instance import Instance
from .simulation import DelayScenario, simulate


@dataclass
class DelayDistribution:
    """Delay with probability `prob`, size Geometric(1/mean) capped at `cap`."""

    prob: float
    mean: float
    cap: int

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("delay probability must be in [0, 1]")
        if self.mean < 1.0 and self.prob > 0:
            raise ValueError("geometric mean must be >= 1")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        if self.prob == 0.0 or n == 0:
            return out
        hit = rng.random(n) < self.prob
        k = int(hit.sum())
        if k:
            out[hit] = np.minimum(rng.geometric(1.0 / self.mean, size=k), self.cap)
        return out


@dataclass
class RobustnessConfig:
    rt1_start_delay: int = 5
    rt2_extra: int = 2
    rt3_block: int = 15
    rt4_replications: int = 10
    rt4_drive_dist: DelayDistribution = field(
        default_factory=lambda: DelayDistribution(0.1, 2.0, 15))
    rt4_trip_dist: DelayDistribution = field(
        default_factory=lambda: DelayDistribution(0.2, 3.0, 20))
    master_seed: int = 0

    def __post_init__(self):
        if min(self.rt1_start_delay, self.rt2_extra, self.rt3_block,
               self.rt4_replications) < 0:
            raise ValueError("robustness parameters must be >= 0")


@dataclass
class RobustnessReport:
    raw: np.ndarray  # 4 values, RT-1..RT-4
    breakdown: dict[str, list[float]]


def rt1_scenarios(inst: Instance, config: RobustnessConfig):
    """One scenario per vehicle tour: its first trip starts late."""
    return [DelayScenario(source_delays=[(tour[0], config.rt1_start_delay)])
            for tour in inst.schedule.tours]


def rt2_scenarios(inst: Instance, config: RobustnessConfig):
    """One scenario per network edge: all-day slow-down of that edge."""
    end = int(inst.times.max()) + 1
    return [DelayScenario(edge_slowdowns=[(e, config.rt2_extra, 0, end)])
            for e in range(inst.dataset.n_edges)]


def rt3_scenarios(inst: Instance, config: RobustnessConfig):
    """One scenario per station, blocking from its first scheduled departure."""
    out = []
    for s in range(inst.dataset.n_stations):
        deps = inst.station_deps[s]
        if not len(deps):
            continue
        start = int(inst.times[deps].min())
        out.append(DelayScenario(station_blockings=[(s, start, config.rt3_block)]))
    return out


def rt4_scenarios(inst: Instance, config: RobustnessConfig):
    """Independent replications of network-wide random delays.

    Replication r draws from a generator seeded with (master_seed, r), so
    results are reproducible and independent of execution order.
    """
    drives = inst.drive_acts
    out = []
    for r in range(config.rt4_replications):
        rng = np.random.default_rng(np.random.SeedSequence((config.master_seed, r)))
        dd = config.rt4_drive_dist.draw(rng, len(drives))
        td = config.rt4_trip_dist.draw(rng, inst.aean.n_trips)
        out.append(DelayScenario(
            drive_delays=[(int(a), int(d)) for a, d in zip(drives, dd) if d > 0],
            source_delays=[(t, int(d)) for t, d in enumerate(td) if d > 0],
            seed=r))
    return out


def _run(inst: Instance, scenarios) -> list[int]:
    return [simulate(inst, sc).aggregate_delay for sc in scenarios]


def rt1(inst: Instance, config: RobustnessConfig) -> float:
    return float(sum(_run(inst, rt1_scenarios(inst, config))))


def rt2(inst: Instance, config: RobustnessConfig) -> float:
    return float(sum(_run(inst, rt2_scenarios(inst, config))))


def rt3(inst: Instance, config: RobustnessConfig) -> float:
    return float(sum(_run(inst, rt3_scenarios(inst, config))))


def rt4(inst: Instance, config: RobustnessConfig) -> float:
    vals = _run(inst, rt4_scenarios(inst, config))
    return float(np.mean(vals)) if vals else 0.0


def run_suite(inst: Instance, config: RobustnessConfig) -> RobustnessReport:
    """All four robustness tests; deterministic ordered reduction."""
    parts = {
        "rt1": _run(inst, rt1_scenarios(inst, config)),
        "rt2": _run(inst, rt2_scenarios(inst, config)),
        "rt3": _run(inst, rt3_scenarios(inst, config)),
        "rt4": _run(inst, rt4_scenarios(inst, config)),
    }
    raw = np.array([
        float(sum(parts["rt1"])),
        float(sum(parts["rt2"])),
        float(sum(parts["rt3"])),
        float(np.mean(parts["rt4"])) if parts["rt4"] else 0.0,
    ])
    return RobustnessReport(raw, parts)


def normalize(raw: np.ndarray) -> np.ndarray:
    """Scale each test column so the worst instance scores exactly 100."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] == 0:
        raise ValueError("need a nonempty (instances x tests) matrix")
    if (raw < 0).any():
        raise ValueError("raw robustness values must be >= 0")
    out = np.zeros_like(raw)
    for c in range(raw.shape[1]):
        m = raw[:, c].max()
        if m == 0:
            warnings.warn(f"robustness column {c} is all zero; normalized to 0")
            continue
        out[:, c] = 100.0 * raw[:, c] / m
    return out

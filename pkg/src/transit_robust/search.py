"""Slack-injection local search steered by a black-box robustness oracle.

Each move picks an activity, stretches it by a fixed amount and repairs all
downstream lower bounds, producing a new feasible timetable for the same
routes, lines and vehicle tours. Candidates come from a small neighborhood
of low-slack activities; the oracle (normally the trained surrogate) ranks
them and the best strictly improving candidate is accepted. A utility gate
keeps the planned passenger cost within a factor of the starting solution.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import ean as E
from .features import FeatureCaps, extract
from .instance import Instance
from .robustness import RobustnessConfig, run_suite
from .surrogate import MlpModel, predict


@dataclass
class SearchConfig:
    neighborhood_size: int = 20  # candidates per activity kind
    delta: int = 1  # minutes of slack injected per move
    epsilon: float = 0.10  # allowed relative utility increase
    rerouting_interval: int = 10  # accepted moves between route replans
    max_iterations: int = 100
    max_time: int | None = None  # reject moves pushing any event past this

    def __post_init__(self):
        if self.neighborhood_size < 1 or self.delta < 1:
            raise ValueError("neighborhood_size and delta must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.rerouting_interval < 1:
            raise ValueError("rerouting_interval must be >= 1")


@dataclass
class SearchStep:
    iteration: int
    activity: int
    predicted: np.ndarray  # oracle outputs for the accepted candidate
    objective: float
    utility: int
    rerouted: bool


@dataclass
class SearchResult:
    instance: Instance  # final re-timed instance with planned routes
    times: np.ndarray
    steps: list[SearchStep]
    start_objective: float
    final_objective: float
    oracle_calls: int
    accepted_times: list[np.ndarray] = field(default_factory=list)


def out_adjacency(aean: E.AperiodicEan):
    """CSR of all activities grouped by tail event, for bound repair."""
    order = np.argsort(aean.act_tail, kind="stable")
    ptr = np.zeros(aean.n_events + 1, dtype=np.int64)
    np.add.at(ptr, aean.act_tail + 1, 1)
    np.cumsum(ptr, out=ptr)
    return ptr, order


def inject_slack(aean: E.AperiodicEan, times: np.ndarray, activity: int,
                 delta: int = 1, adjacency=None,
                 max_time: int | None = None) -> np.ndarray | None:
    """Stretch one activity and repair every violated lower bound downstream.

    The head event moves `delta` minutes later; any activity whose duration
    drops below its lower bound pushes its own head in turn, until the
    timetable is feasible again. Upper bounds are deliberately ignored: the
    stretched timetable trades longer waits for delay resistance. Returns
    the new time vector, or None when `max_time` would be exceeded.
    """
    if adjacency is None:
        adjacency = out_adjacency(aean)
    ptr, order = adjacency
    tail, head, lower = aean.act_tail, aean.act_head, aean.act_lower
    new = times.copy()
    h = int(head[activity])
    new[h] = times[h] + delta
    queue = [h]
    while queue:
        u = queue.pop()
        for i in range(ptr[u], ptr[u + 1]):
            a = order[i]
            v = int(head[a])
            need = new[u] + lower[a]
            if new[v] < need:
                new[v] = need
                queue.append(v)
    if max_time is not None and new.max() > max_time:
        return None
    return new


def build_neighborhood(inst: Instance, times: np.ndarray,
                       size: int = 20) -> np.ndarray:
    """The `size` most promising activities of each kind.

    Drive, wait and transfer activities are ranked by slack divided by
    passenger load (crowded tight activities first); turnarounds, which
    carry no passengers, by plain slack. Ties break on activity id.
    """
    a = inst.aean
    slack = E.aperiodic_slacks(a, times).astype(np.float64)
    load = inst.act_load
    out = []
    for kind in (E.DRIVE, E.WAIT, E.TRANSFER, E.TURNAROUND):
        acts = np.nonzero(a.act_kind == kind)[0]
        if not len(acts):
            continue
        if kind == E.TURNAROUND:
            key = slack[acts]
        else:
            key = slack[acts] / np.maximum(1, load[acts])
        pick = acts[np.lexsort((acts, key))][:size]
        out.append(pick)
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def retime(inst: Instance, times: np.ndarray, plan: bool = True) -> Instance:
    """A fresh instance sharing the network structure but with new times."""
    aean = copy.copy(inst.aean)
    aean.ev_time = np.asarray(times, dtype=np.int64)
    out = Instance(inst.dataset, inst.pean, inst.ptt, aean, inst.schedule,
                   inst.weights, inst.stranding_penalty)
    if plan:
        out.plan_routes()
    return out


def utility_under(inst: Instance, times: np.ndarray) -> int:
    """Planned weighted utility when events are re-timed but routes kept."""
    arr = np.where(inst.group_stranded, 0, times[inst.group_last_ev])
    perceived = np.where(
        inst.group_stranded, inst.stranding_penalty,
        arr - inst.group_ed + inst.weights.transfer_penalty * inst.group_transfers)
    return int(np.dot(inst.group_weight, perceived))


def make_surrogate_oracle(model: MlpModel, caps: FeatureCaps | None = None):
    """Oracle(inst, times) -> predicted 4-vector of normalized robustness."""
    caps = caps or FeatureCaps()

    def oracle(inst: Instance, times: np.ndarray) -> np.ndarray:
        return predict(model, extract(inst, caps, times).values)

    return oracle


def local_search(inst: Instance, oracle,
                 config: SearchConfig | None = None) -> SearchResult:
    """Greedy descent over slack injections (best neighbor, strict improvement).

    `oracle(instance, times)` must return the four robustness values to
    minimize; their sum is the objective. Stops when no candidate both
    passes the utility gate and strictly improves, or after max_iterations.
    """
    config = config or SearchConfig()
    if inst.routes is None:
        inst.plan_routes()
    budget = int((1.0 + config.epsilon) * inst.total_utility())

    current = inst
    cur_times = inst.times
    adjacency = out_adjacency(current.aean)
    start_obj = float(np.sum(oracle(current, cur_times)))
    cur_obj = start_obj
    calls = 1
    steps: list[SearchStep] = []
    series: list[np.ndarray] = []

    for it in range(1, config.max_iterations + 1):
        cands = build_neighborhood(current, cur_times, config.neighborhood_size)
        best = None  # (objective, act, times, prediction)
        for act in cands:
            cand = inject_slack(current.aean, cur_times, int(act), config.delta,
                                adjacency, config.max_time)
            if cand is None or utility_under(current, cand) > budget:
                continue
            pred = oracle(current, cand)
            calls += 1
            obj = float(np.sum(pred))
            if best is None or obj < best[0]:
                best = (obj, int(act), cand, pred)
        if best is None or best[0] >= cur_obj:
            break
        cur_obj, act, cur_times, pred = best
        rerouted = len(steps) % config.rerouting_interval == config.rerouting_interval - 1
        if rerouted:
            current = retime(current, cur_times)
            cur_obj = float(np.sum(oracle(current, cur_times)))
            calls += 1
        steps.append(SearchStep(it, act, pred, cur_obj,
                                utility_under(current, cur_times), rerouted))
        series.append(cur_times.copy())

    final = retime(current, cur_times) if cur_times is not inst.times else inst
    return SearchResult(final, cur_times, steps, start_obj, cur_obj, calls,
                        accepted_times=series)


def reevaluate_real(inst: Instance, result: SearchResult,
                    config: RobustnessConfig | None = None) -> np.ndarray:
    """Raw robustness of the start and every accepted timetable.

    Runs the full simulation suite, so this is the expensive ground-truth
    check of what the surrogate promised. Row 0 is the starting timetable.
    """
    config = config or RobustnessConfig()
    rows = [run_suite(inst, config).raw]
    for times in result.accepted_times:
        rows.append(run_suite(retime(inst, times), config).raw)
    return np.vstack(rows)

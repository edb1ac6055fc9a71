"""Delay propagation, scenario formats and passenger replay."""

import numpy as np
import pytest

from transit_robust import ean as E
from transit_robust.simulation import (DelayScenario, propagate,
                                       read_scenarios, simulate,
                                       write_scenarios)
from transit_robust.simulation import _replay

from bruteforce import brute_propagate, brute_simulate
from conftest import chain_instance, random_scenario, tiny_random_instance


class TestScenarioFormat:
    def test_json_roundtrip(self, tmp_path):
        scs = [
            DelayScenario(source_delays=[(0, 5)], seed=3),
            DelayScenario(edge_slowdowns=[(1, 2, 0, 1440)]),
            DelayScenario(station_blockings=[(2, 30, 15)]),
            DelayScenario(drive_delays=[(7, 4)], seed=9),
        ]
        p = tmp_path / "scenarios.jsonl"
        write_scenarios(p, scs)
        back = read_scenarios(p)
        assert back == scs

    def test_drive_delays_only_serialized_when_present(self):
        assert "drive_delays" not in DelayScenario(source_delays=[(0, 1)]).to_json()
        assert "drive_delays" in DelayScenario(drive_delays=[(0, 1)]).to_json()

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            DelayScenario(source_delays=[(0, -1)])


class TestPropagation:
    def test_source_delay_pushes_whole_trip(self, chain):
        rz = propagate(chain, DelayScenario(source_delays=[(0, 5)]))
        ev = chain.aean.trip_events[0]
        assert (rz[ev] - chain.times[ev] == 5).all()

    def test_slack_absorbs(self, chain2):
        # 1 minute wait slack: arrival at the end only 4 late instead of 5
        rz = propagate(chain2, DelayScenario(source_delays=[(0, 5)]))
        last = chain2.aean.trip_events[0][-1]
        assert rz[last] - chain2.times[last] == 4

    def test_transfers_do_not_propagate(self):
        ds = E.Dataset(
            "t", [E.Station(i, str(i)) for i in range(3)],
            [E.NetworkEdge(0, 0, 1, 5, 7), E.NetworkEdge(1, 1, 2, 5, 7)],
            [E.Line(0, (0, 1), 1), E.Line(1, (1, 2), 1)],
            [E.PassengerGroup(0, 2, 0, 2)])
        pe = E.PeriodicEan(ds, E.EanParams())
        times = np.zeros(pe.n_events, dtype=np.int64)
        r0, r0b, r1, r1b = pe.runs
        times[r0.events] = [0, 5]
        times[r0b.events] = [20, 25]
        times[r1.events] = [10, 15]  # transfer 0->1 at station 1 with gap 5
        times[r1b.events] = [30, 35]
        ptt = E.PeriodicTimetable(60, times)
        ae = E.AperiodicEan(pe, ptt, 1)
        sched = E.VehicleSchedule([[0], [1], [2], [3]], 10, 2)
        from transit_robust.instance import Instance
        inst = Instance(ds, pe, ptt, ae, sched)
        inst.plan_routes()
        rz = propagate(inst, DelayScenario(source_delays=[(0, 30)]))
        # the feeder trip is 30 late but the connecting trip stays on time
        assert rz[ae.trip_events[2][0]] == inst.times[ae.trip_events[2][0]]

    def test_blocking_pushes_to_window_end(self, chain):
        a = chain.aean
        dep0 = a.trip_events[0][0]
        rz = propagate(chain, DelayScenario(station_blockings=[(0, 0, 15)]))
        assert rz[dep0] == 15

    def test_edge_slowdown_outside_window_ignored(self, chain):
        rz = propagate(chain, DelayScenario(edge_slowdowns=[(0, 3, 100, 200)]))
        assert np.array_equal(rz, chain.times)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            inst = tiny_random_instance(rng)
            sc = random_scenario(rng, inst)
            assert np.array_equal(propagate(inst, sc),
                                  brute_propagate(inst, sc)), sc.to_json()


class TestSimulate:
    def test_spec_hand_examples(self, chain, chain2):
        assert simulate(chain, DelayScenario(source_delays=[(0, 5)])) \
            .aggregate_delay == 25
        assert simulate(chain2, DelayScenario(source_delays=[(0, 5)])) \
            .aggregate_delay == 20
        assert simulate(chain, DelayScenario()).aggregate_delay == 0

    def test_fast_path_equals_full_replay(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(80):
            inst = tiny_random_instance(rng)
            sc = random_scenario(rng, inst)
            res = simulate(inst, sc)
            full = _replay(inst, res.realized,
                           inst.pean.params.min_transfer)
            if all(o.status == "completed" or o.status == "stranded"
                   for o in full.outcomes):
                assert res.aggregate_delay == full.aggregate_delay
                checked += 1
        assert checked > 20

    def test_matches_bruteforce_sample(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            inst = tiny_random_instance(rng)
            sc = random_scenario(rng, inst)
            res = simulate(inst, sc)
            _rz, outcomes, agg = brute_simulate(inst, sc)
            assert res.aggregate_delay == agg, sc.to_json()
            for o, (pl, rp, status) in zip(res.outcomes, outcomes):
                assert (o.planned_perceived, o.realized_perceived,
                        o.status) == (pl, rp, status)

    def test_deterministic(self, chain):
        sc = DelayScenario(source_delays=[(0, 5)],
                           station_blockings=[(1, 0, 10)])
        a = simulate(chain, sc)
        b = simulate(chain, sc)
        assert a.aggregate_delay == b.aggregate_delay
        assert np.array_equal(a.realized, b.realized)

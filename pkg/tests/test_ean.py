"""Periodic network construction, feasibility checks and roll-out."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transit_robust import ean as E
from conftest import chain_dataset


def build_chain_pean():
    return E.PeriodicEan(chain_dataset(), E.EanParams())


class TestPeriodicConstruction:
    def test_run_counts(self):
        pe = build_chain_pean()
        assert len(pe.runs) == 2  # one line, both directions, frequency 1
        # per run: dep, arr, dep, arr and drive, wait, drive
        assert pe.n_events == 8
        kinds = pe.act_kind.tolist()
        assert kinds.count(E.DRIVE) == 4
        assert kinds.count(E.WAIT) == 2
        # transfers need two different lines; a single line yields none
        assert kinds.count(E.TRANSFER) == 0

    def test_transfer_bounds_span_period(self):
        ds = E.Dataset(
            "x", [E.Station(0, "a"), E.Station(1, "b"), E.Station(2, "c")],
            [E.NetworkEdge(0, 0, 1, 5, 7), E.NetworkEdge(1, 1, 2, 5, 7)],
            [E.Line(0, (0, 1), 1), E.Line(1, (1, 2), 1)],
            [E.PassengerGroup(0, 2, 0, 1)])
        pe = E.PeriodicEan(ds, E.EanParams(period=60, min_transfer=2))
        tr = np.nonzero(pe.act_kind == E.TRANSFER)[0]
        assert len(tr) > 0
        assert (pe.act_lower[tr] == 2).all()
        assert (pe.act_upper[tr] == 2 + 60 - 1).all()

    def test_frequency_repetitions(self):
        ds = chain_dataset()
        ds = E.Dataset(ds.name, ds.stations, ds.edges,
                       [E.Line(0, (0, 1, 2), 2)], ds.demand)
        pe = E.PeriodicEan(ds, E.EanParams())
        assert len(pe.runs) == 4

    def test_dataset_validation(self):
        with pytest.raises(ValueError, match="dense"):
            E.Dataset("x", [E.Station(1, "a")], [], [], [])
        with pytest.raises(ValueError, match="no edge"):
            E.Dataset("x", [E.Station(0, "a"), E.Station(1, "b")],
                      [], [E.Line(0, (0, 1), 1)], [])


class TestPeriodicFeasibility:
    def test_modular_slack_example(self):
        # pi_i=55, pi_j=7, L=10, T=60: the activity wraps past the period
        ds = chain_dataset()
        pe = E.PeriodicEan(ds, E.EanParams())
        times = np.zeros(pe.n_events, dtype=np.int64)
        drive0 = int(np.nonzero(pe.act_kind == E.DRIVE)[0][0])
        times[pe.act_tail[drive0]] = 55
        times[pe.act_head[drive0]] = 7
        ptt = E.PeriodicTimetable(60, times)
        assert E.periodic_slack(pe, ptt, drive0) == (7 - 55 - 10) % 60 == 2

    def test_validate_flags_violation(self):
        pe = build_chain_pean()
        times = np.zeros(pe.n_events, dtype=np.int64)
        fwd, bwd = pe.runs
        times[fwd.events] = [0, 10, 11, 21]
        times[bwd.events] = [30, 40, 41, 51]
        assert E.validate_periodic(pe, E.PeriodicTimetable(60, times)) == []
        bad = times.copy()
        bad[fwd.events[1]] = 25  # drive slack 15 > U-L=2
        viol = E.validate_periodic(pe, E.PeriodicTimetable(60, bad))
        assert len(viol) >= 1 and viol[0].slack > viol[0].allowed

    def test_missing_times_raise(self):
        pe = build_chain_pean()
        with pytest.raises(ValueError, match="missing"):
            E.validate_periodic(pe, E.PeriodicTimetable(60, np.zeros(3)))


class TestRollOut:
    def make(self, horizon=2):
        pe = build_chain_pean()
        times = np.zeros(pe.n_events, dtype=np.int64)
        fwd, bwd = pe.runs
        times[fwd.events] = [0, 10, 11, 21]
        times[bwd.events] = [30, 40, 41, 51]
        ptt = E.PeriodicTimetable(60, times)
        return pe, ptt, E.AperiodicEan(pe, ptt, horizon)

    def test_event_and_trip_counts(self):
        pe, ptt, ae = self.make(horizon=3)
        assert ae.n_events == pe.n_events * 3
        assert ae.n_trips == len(pe.runs) * 3
        # copy k of an event is one period later than copy k-1
        for pid in range(pe.n_events):
            ids = [pid * 3 + k for k in range(3)]
            diffs = np.diff(ae.ev_time[ids])
            assert (diffs == 60).all()

    def test_smallest_feasible_durations(self):
        _pe, _ptt, ae = self.make()
        slack = E.aperiodic_slacks(ae, ae.ev_time)
        in_trip = (ae.act_kind == E.DRIVE) | (ae.act_kind == E.WAIT)
        # chain timetable above has zero drive slack and zero wait slack
        assert (slack[in_trip] == 0).all()
        assert (slack >= 0).all()

    def test_turnaround_attachment(self):
        _pe, _ptt, ae = self.make(horizon=2)
        # trip ids: forward copies 0,1 then backward copies 2,3; a vehicle
        # alternates directions, so forward chains onto backward
        sched = E.VehicleSchedule([[0, 2], [1, 3]], 100, turnaround_lower=3)
        E.attach_schedule(ae, sched)
        assert len(sched.turnaround_acts) == 2
        assert (ae.act_kind[sched.turnaround_acts] == E.TURNAROUND).all()
        assert E.validate_schedule(sched, ae, ae.ev_time) == []

    def test_schedule_violations(self):
        _pe, _ptt, ae = self.make(horizon=2)
        viol = E.validate_schedule(E.VehicleSchedule([[0, 1]], 100, 3), ae,
                                   ae.ev_time)
        assert any("not covered" in v.message for v in viol)
        viol = E.validate_schedule(
            E.VehicleSchedule([[0, 2], [1, 3], [0]], 100, 3), ae, ae.ev_time)
        assert any("appears in tours" in v.message for v in viol)
        # chaining two same-direction trips: endpoint stations differ
        viol = E.validate_schedule(
            E.VehicleSchedule([[0, 1], [2, 3]], 100, 3), ae, ae.ev_time)
        assert any("changes station" in v.message for v in viol)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=2, max_size=2),
       st.integers(1, 3), st.integers(0, 59))
def test_rollout_slack_preserved(wait_slacks, horizon, offset):
    """Rolled-out in-trip slacks equal the periodic modular slacks."""
    ds = chain_dataset()
    pe = E.PeriodicEan(ds, E.EanParams())
    times = np.zeros(pe.n_events, dtype=np.int64)
    fwd, bwd = pe.runs
    s0 = wait_slacks[0]
    times[fwd.events] = [(offset + t) % 60
                         for t in (0, 10, 11 + s0, 21 + s0)]
    s1 = wait_slacks[1]
    times[bwd.events] = [(offset + 30 + t) % 60
                         for t in (0, 10, 11 + s1, 21 + s1)]
    ptt = E.PeriodicTimetable(60, times)
    ae = E.AperiodicEan(pe, ptt, horizon)
    pslack = E.periodic_slacks(pe, ptt)
    aslack = E.aperiodic_slacks(ae, ae.ev_time)
    in_trip = (ae.act_kind == E.DRIVE) | (ae.act_kind == E.WAIT)
    assert (aslack[in_trip] == pslack[ae.act_parent[in_trip]]).all()
    assert (aslack >= 0).all()

"""Dataset generators, buffer strategies and corpus labeling."""

import json

import numpy as np
import pytest

from transit_robust import ean as E
from transit_robust.generate import (BufferedTurnaround, EarliestFeasible,
                                     FirstFitMinTurnaround, GridSpec,
                                     RandomSlack, RingSpec, UniformBuffer,
                                     VariantSpec, build_instance,
                                     default_variants, gen_corpus, gen_grid,
                                     gen_ring, gen_schedule, gen_timetable)
from transit_robust.robustness import RobustnessConfig, rt1
from transit_robust.storage import load_matrix

from conftest import chain_dataset


def small_grid(**kw):
    kw.setdefault("n_groups", 12)
    kw.setdefault("total_passengers", 60)
    return GridSpec(rows=3, cols=3, **kw)


class TestDatasets:
    def test_grid_2x2(self):
        ds = gen_grid(GridSpec(rows=2, cols=2, extra_lines=0, n_groups=4,
                               total_passengers=8))
        assert ds.n_stations == 4 and ds.n_edges == 4

    def test_default_grid_matches_target_shape(self):
        ds = gen_grid()
        assert ds.n_stations == 80
        assert abs(ds.n_edges - 145) <= 15
        assert len(ds.lines) == 30
        assert sum(g.weight for g in ds.demand) == 1676

    def test_lines_cover_all_edges(self):
        for ds in (gen_grid(small_grid()), gen_ring(RingSpec(
                rings=2, spokes=4, n_groups=8, total_passengers=40))):
            covered = set()
            for ln in ds.lines:
                for u, v in zip(ln.station_path, ln.station_path[1:]):
                    covered.add(ds.edge_between(u, v).id)
            assert covered == set(range(ds.n_edges))

    def test_deterministic(self):
        a = gen_grid(small_grid(seed=5))
        b = gen_grid(small_grid(seed=5))
        assert a.demand == b.demand and a.edges == b.edges
        c = gen_grid(small_grid(seed=6))
        assert a.demand != c.demand

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GridSpec(rows=1, cols=5)
        with pytest.raises(ValueError):
            RingSpec(spokes=2)
        with pytest.raises(ValueError):
            GridSpec(n_groups=100, total_passengers=50)


class TestTimetabling:
    def make_pean(self):
        return E.PeriodicEan(chain_dataset(), E.EanParams())

    def in_trip_slacks(self, pean, ptt):
        s = E.periodic_slacks(pean, ptt)
        mask = (pean.act_kind == E.DRIVE) | (pean.act_kind == E.WAIT)
        return s[mask]

    def test_earliest_feasible_zero_slack(self):
        pean = self.make_pean()
        ptt = gen_timetable(pean, EarliestFeasible(), seed=3)
        assert (self.in_trip_slacks(pean, ptt) == 0).all()
        assert E.validate_periodic(pean, ptt) == []

    def test_uniform_buffer(self):
        pean = self.make_pean()
        ptt = gen_timetable(pean, UniformBuffer(1), seed=3)
        assert (self.in_trip_slacks(pean, ptt) >= 1).all()

    def test_random_slack_budget_zero_is_earliest(self):
        pean = self.make_pean()
        a = gen_timetable(pean, RandomSlack(0), seed=3)
        b = gen_timetable(pean, EarliestFeasible(), seed=3)
        assert np.array_equal(a.times, b.times)

    def test_random_slack_spends_budget(self):
        pean = self.make_pean()
        ptt = gen_timetable(pean, RandomSlack(5), seed=3)
        assert self.in_trip_slacks(pean, ptt).sum() == 5
        assert E.validate_periodic(pean, ptt) == []

    def test_seed_determinism(self):
        pean = self.make_pean()
        a = gen_timetable(pean, RandomSlack(7), seed=1)
        b = gen_timetable(pean, RandomSlack(7), seed=1)
        c = gen_timetable(pean, RandomSlack(7), seed=2)
        assert np.array_equal(a.times, b.times)
        assert not np.array_equal(a.times, c.times)


class TestScheduling:
    def make_aean(self, horizon=2):
        pean = E.PeriodicEan(chain_dataset(), E.EanParams())
        ptt = gen_timetable(pean, EarliestFeasible(), seed=0)
        return E.AperiodicEan(pean, ptt, horizon)

    def test_chainable_trips_share_a_vehicle(self):
        aean = self.make_aean()
        sched = gen_schedule(aean, FirstFitMinTurnaround())
        assert E.validate_schedule(sched, aean, aean.ev_time) == []
        assert sched.n_vehicles < aean.n_trips

    def test_huge_buffer_forces_one_vehicle_per_trip(self):
        aean = self.make_aean()
        sched = gen_schedule(aean, BufferedTurnaround(extra=10_000))
        assert sched.n_vehicles == aean.n_trips

    def test_buffered_gaps(self):
        aean = self.make_aean(horizon=4)
        sched = gen_schedule(aean, BufferedTurnaround(extra=7),
                             turnaround_lower=3)
        for tour in sched.tours:
            for a, b in zip(tour, tour[1:]):
                gap = int(aean.ev_time[aean.trip_first_dep(b)]
                          - aean.ev_time[aean.trip_last_arr(a)])
                assert gap >= 10


class TestBufferMonotonicity:
    def test_rt1_non_increasing_in_buffer(self):
        ds = gen_grid(small_grid(seed=2))
        cfg = RobustnessConfig()
        vals = []
        for b in (0, 1, 2):
            inst = build_instance(ds, VariantSpec(UniformBuffer(b),
                                                  FirstFitMinTurnaround(),
                                                  seed=9), horizon=2)
            vals.append(rt1(inst, cfg))
        assert vals[0] >= vals[1] >= vals[2]


class TestCorpus:
    def test_counts_and_files(self, tmp_path):
        ds = gen_grid(GridSpec(rows=2, cols=2, extra_lines=0, n_groups=6,
                               total_passengers=30))
        variants = default_variants(2)
        cfg = RobustnessConfig(rt4_replications=2)
        manifest = gen_corpus(ds, variants, 10, tmp_path, horizon=2,
                              robustness=cfg, log_every=0)
        assert manifest["n_instances"] == 20
        ids, labels = load_matrix(tmp_path / "labels.csv")
        assert len(ids) == 20 and labels.shape[1] == 4
        for col in labels.T:  # worst instance defines 100 unless all zero
            assert np.isclose(col.max(), 100.0) or (col == 0).all()
        _, feats = load_matrix(tmp_path / "features.csv")
        assert feats.shape[0] == 20
        assert (tmp_path / "layout.json").is_file()
        assert (tmp_path / "baseline" / "timetable.csv").is_file()
        saved = json.loads((tmp_path / "manifest.json").read_text())
        assert saved["n_instances"] == 20

    def test_duplicate_variants_equal_rows(self, tmp_path):
        ds = gen_grid(GridSpec(rows=2, cols=2, extra_lines=0, n_groups=6,
                               total_passengers=30))
        v = VariantSpec(UniformBuffer(1), FirstFitMinTurnaround(), seed=4)
        cfg = RobustnessConfig(rt4_replications=1)
        gen_corpus(ds, [v, v], 2, tmp_path, horizon=2, robustness=cfg,
                   log_every=0)
        _, feats = load_matrix(tmp_path / "features.csv")
        assert np.array_equal(feats[0], feats[2])
        assert np.array_equal(feats[1], feats[3])

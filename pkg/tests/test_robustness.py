"""Stress tests RT-1..RT-4 and normalization."""

import numpy as np
import pytest

from transit_robust.robustness import (DelayDistribution, RobustnessConfig,
                                       normalize, rt1, rt1_scenarios,
                                       rt2_scenarios, rt3_scenarios,
                                       rt4_scenarios, run_suite)

from conftest import chain_instance


class TestScenarioGenerators:
    def test_rt1_one_per_tour(self, chain):
        cfg = RobustnessConfig()
        scs = rt1_scenarios(chain, cfg)
        assert len(scs) == chain.schedule.n_vehicles
        for sc, tour in zip(scs, chain.schedule.tours):
            assert sc.source_delays == [(tour[0], cfg.rt1_start_delay)]

    def test_rt2_one_per_edge(self, chain):
        scs = rt2_scenarios(chain, RobustnessConfig())
        assert len(scs) == chain.dataset.n_edges
        for sc in scs:
            (edge, extra, start, end), = sc.edge_slowdowns
            assert extra == 2 and start == 0 and end > int(chain.times.max())

    def test_rt3_anchored_at_first_departure(self, chain):
        scs = rt3_scenarios(chain, RobustnessConfig())
        assert len(scs) == 3
        for sc in scs:
            (s, start, dur), = sc.station_blockings
            deps = chain.station_deps[s]
            assert start == int(chain.times[deps].min())
            assert dur == 15

    def test_rt4_reproducible_and_capped(self, chain):
        cfg = RobustnessConfig(rt4_replications=5, master_seed=42)
        a = rt4_scenarios(chain, cfg)
        b = rt4_scenarios(chain, cfg)
        assert [sc.to_json() for sc in a] == [sc.to_json() for sc in b]
        for sc in a:
            assert all(1 <= d <= 15 for _, d in sc.drive_delays)
            assert all(1 <= d <= 20 for _, d in sc.source_delays)
        c = rt4_scenarios(chain, RobustnessConfig(rt4_replications=5,
                                                  master_seed=43))
        assert [sc.to_json() for sc in a] != [sc.to_json() for sc in c]


class TestSuite:
    def test_rt1_value_chain(self, chain, chain2):
        cfg = RobustnessConfig()
        # tour 0 carries the group: 5 late, no slack -> 25; the other tour 0
        assert rt1(chain, cfg) == 25.0
        assert rt1(chain2, cfg) == 20.0

    def test_run_suite_shape_and_consistency(self, chain):
        cfg = RobustnessConfig(rt4_replications=3)
        rep = run_suite(chain, cfg)
        assert rep.raw.shape == (4,)
        assert (rep.raw >= 0).all()
        assert rep.raw[0] == sum(rep.breakdown["rt1"])
        assert rep.raw[3] == pytest.approx(np.mean(rep.breakdown["rt4"]))
        rep2 = run_suite(chain, cfg)
        assert np.array_equal(rep.raw, rep2.raw)

    def test_more_slack_is_never_worse_rt1(self):
        cfg = RobustnessConfig()
        vals = [rt1(chain_instance(wait_slack=s), cfg) for s in (0, 1, 2)]
        assert vals == sorted(vals, reverse=True)


class TestDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            DelayDistribution(1.5, 2.0, 10)
        with pytest.raises(ValueError):
            DelayDistribution(0.5, 0.5, 10)

    def test_draw_statistics(self):
        rng = np.random.default_rng(0)
        d = DelayDistribution(0.2, 3.0, 20)
        x = d.draw(rng, 200_000)
        assert x.min() >= 0 and x.max() <= 20
        assert abs((x > 0).mean() - 0.2) < 0.01
        assert abs(x[x > 0].mean() - 3.0) < 0.1

    def test_zero_probability(self):
        rng = np.random.default_rng(0)
        assert (DelayDistribution(0.0, 2.0, 5).draw(rng, 100) == 0).all()


class TestNormalize:
    def test_worst_is_exactly_100(self):
        raw = np.array([[10.0, 4.0], [5.0, 8.0], [2.5, 0.0]])
        out = normalize(raw)
        assert out[:, 0].max() == 100.0
        assert out[:, 1].max() == 100.0
        assert out[0, 0] == 100.0 and out[2, 0] == 25.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        raw = rng.random((20, 4)) * 1e4
        assert np.allclose(normalize(raw), normalize(raw * 7.3))

    def test_zero_column_warns(self):
        with pytest.warns(UserWarning, match="all zero"):
            out = normalize(np.array([[0.0, 1.0], [0.0, 2.0]]))
        assert (out[:, 0] == 0).all()

    def test_rejects_negative_and_empty(self):
        with pytest.raises(ValueError):
            normalize(np.array([[-1.0, 2.0]]))
        with pytest.raises(ValueError):
            normalize(np.empty((0, 4)))

import math

import numpy as np
import pytest

from spssim.scenario import (EdgeMode, OffsetMode, ScenarioConfig,
                             ScenarioError, Vehicle, advance,
                             central_membership, effective_offset,
                             next_packet_due, pairwise_distances, spawn,
                             PRESETS)


def cfg_for(density, **kw):
    return ScenarioConfig(density_per_km_lane=density, **kw)


class TestSpawn:
    def test_vehicle_counts_for_presets(self):
        for name, (density, _), count in (("s1", PRESETS["s1"], 100),
                                          ("s2", PRESETS["s2"], 200),
                                          ("s3", PRESETS["s3"], 400),
                                          ("s4", PRESETS["s4"], 800)):
            cfg = cfg_for(density)
            assert cfg.vehicle_count == count
            assert len(spawn(cfg, np.random.default_rng(0))) == count

    def test_even_spacing_per_lane(self):
        cfg = cfg_for(25.0)
        vehicles = spawn(cfg, np.random.default_rng(0))
        lane0 = sorted(v.position_m for v in vehicles if v.lane == 0)
        gaps = {round(b - a, 6) for a, b in zip(lane0, lane0[1:])}
        assert gaps == {40.0}   # 1000 / 25

    def test_synchronized_offsets_zero(self):
        cfg = cfg_for(25.0, offset_mode=OffsetMode.synchronized())
        assert all(v.phase_ms == 0 for v in spawn(cfg, np.random.default_rng(1)))

    def test_uniform_offsets_within_bound(self):
        cfg = cfg_for(100.0, offset_mode=OffsetMode.uniform(49))
        phases = {v.phase_ms for v in spawn(cfg, np.random.default_rng(2))}
        assert phases <= set(range(50))
        assert len(phases) > 20

    def test_start_stagger_within_cycles(self):
        cfg = cfg_for(100.0, start_stagger_cycles=10)
        for v in spawn(cfg, np.random.default_rng(3)):
            k, phase = divmod(v.start_ms, 100)
            assert 0 <= k < 10
            assert phase == v.phase_ms % 100

    def test_stagger_disabled(self):
        cfg = cfg_for(25.0, start_stagger_cycles=0)
        assert all(v.start_ms == v.phase_ms
                   for v in spawn(cfg, np.random.default_rng(4)))


class TestAdvance:
    def test_unit_conversion_140kmh(self):
        v = Vehicle(0, 0, 100.0, 140 / 3.6, 0)
        out = advance([v], 1.0, 2000.0)
        assert out[0].position_m == pytest.approx(100 + 38.89, abs=0.01)

    def test_scenario4_speed_per_100ms(self):
        v = Vehicle(0, 0, 0.0, 15 / 3.6, 0)
        out = advance([v], 0.1, 2000.0)
        assert out[0].position_m == pytest.approx(0.417, abs=0.001)

    def test_rigid_translation_keeps_pairwise_distances(self):
        cfg = cfg_for(25.0, edge_mode=EdgeMode.RING)
        vehicles = spawn(cfg, np.random.default_rng(5))
        before = pairwise_distances(vehicles, cfg)
        after = pairwise_distances(advance(vehicles, 7.3, cfg.road_length_m), cfg)
        np.testing.assert_allclose(after, before, atol=1e-6)

    def test_wraps_on_road_length(self):
        v = Vehicle(0, 0, 1999.0, 10.0, 0)
        assert advance([v], 1.0, 2000.0)[0].position_m == pytest.approx(9.0)

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ScenarioError):
            advance([], 0.0, 2000.0)


class TestTraffic:
    def test_phase_zero_cadence(self):
        v = Vehicle(0, 0, 0.0, 0.0, 0)
        due = [t for t in range(0, 301) if next_packet_due(v, t, 100)]
        assert due == [0, 100, 200, 300]

    def test_phase_37_cadence(self):
        v = Vehicle(0, 0, 0.0, 0.0, 37)
        due = [t for t in range(0, 301) if next_packet_due(v, t, 100)]
        assert due == [37, 137, 237]

    def test_start_stagger_skips_early_cycles(self):
        v = Vehicle(0, 0, 0.0, 0.0, 37, start_ms=237)
        due = [t for t in range(0, 400) if next_packet_due(v, t, 100)]
        assert due == [237, 337]


class TestEffectiveOffset:
    def test_worst_case_overlap_values(self):
        assert effective_offset(0, 100) == 100
        assert effective_offset(49, 100) == 51
        assert effective_offset(99, 100) == 99

    def test_symmetry_minimum_at_half(self):
        vals = [effective_offset(t, 100) for t in range(0, 101)]
        assert min(vals) == 50 and vals.index(50) == 50

    def test_domain_check(self):
        with pytest.raises(ScenarioError):
            effective_offset(120, 100)


class TestGeometry:
    def test_lane_offsets_in_distance(self):
        cfg = cfg_for(25.0, start_stagger_cycles=0)
        a = Vehicle(0, 0, 100.0, 0.0, 0)
        b = Vehicle(1, 3, 100.0, 0.0, 0)
        d = pairwise_distances([a, b], cfg)
        assert d[0, 1] == pytest.approx(9.0)   # 3 lanes * 3 m
        assert d[0, 1] == d[1, 0]

    def test_ring_minimal_distance(self):
        cfg = cfg_for(25.0, edge_mode=EdgeMode.RING)
        a = Vehicle(0, 0, 10.0, 0.0, 0)
        b = Vehicle(1, 0, 1990.0, 0.0, 0)
        assert pairwise_distances([a, b], cfg)[0, 1] == pytest.approx(20.0)

    def test_open_distance_is_linear(self):
        cfg = cfg_for(25.0, edge_mode=EdgeMode.OPEN)
        a = Vehicle(0, 0, 10.0, 0.0, 0)
        b = Vehicle(1, 0, 1990.0, 0.0, 0)
        assert pairwise_distances([a, b], cfg)[0, 1] == pytest.approx(1980.0)

    def test_triangle_inequality_on_samples(self):
        cfg = cfg_for(50.0)
        vehicles = spawn(cfg, np.random.default_rng(6))
        d = pairwise_distances(vehicles, cfg)
        rng = np.random.default_rng(7)
        for _ in range(500):
            i, j, k = rng.integers(0, len(vehicles), 3)
            assert d[i, j] <= d[i, k] + d[k, j] + 1e-9

    def test_central_membership_open(self):
        cfg = cfg_for(25.0)
        vehicles = [Vehicle(0, 0, 400.0, 10.0, 0), Vehicle(1, 0, 600.0, 10.0, 0),
                    Vehicle(2, 0, 1501.0, 10.0, 0)]
        np.testing.assert_array_equal(central_membership(vehicles, cfg),
                                      [False, True, False])
        # open-road membership is platoon-frame, hence time-invariant
        np.testing.assert_array_equal(central_membership(vehicles, cfg, 60000),
                                      [False, True, False])

    def test_central_membership_ring_moves(self):
        cfg = cfg_for(25.0, edge_mode=EdgeMode.RING)
        vehicles = [Vehicle(0, 0, 400.0, 10.0, 0)]
        assert not central_membership(vehicles, cfg, 0)[0]
        assert central_membership(vehicles, cfg, 20000)[0]   # +200 m


class TestValidation:
    def test_offset_must_stay_below_period(self):
        with pytest.raises(ScenarioError):
            cfg_for(25.0, offset_mode=OffsetMode.uniform(100)).validate()

    def test_offset_mode_parse(self):
        assert OffsetMode.parse("synchronized").is_synchronized
        assert OffsetMode.parse("uniform:49").max_ms == 49
        assert str(OffsetMode.uniform(49)) == "uniform:49"
        with pytest.raises(ScenarioError):
            OffsetMode.parse("gaussian:3")

    def test_measurement_window_fits(self):
        with pytest.raises(ScenarioError):
            cfg_for(25.0, measurement_window_m=3000.0).validate()

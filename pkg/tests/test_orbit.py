"""Phase timeline, ground track, and visibility-window geometry."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leolora.orbit import (
    ECLIPSE,
    SUN,
    ForecastWindow,
    GroundStation,
    OrbitConfig,
    Schedule,
    build_schedule,
    load_schedule_override,
    max_central_angle,
    phase_at,
    subsatellite_point,
    sun_seconds,
    visibility_windows,
)

ORBIT = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                    inclination_rad=0.925)


class TestPhase:
    def test_ten_minutes_in_is_sunlit(self):
        assert phase_at(ORBIT, 600.0) == SUN

    def test_sixty_minutes_in_is_eclipsed(self):
        assert phase_at(ORBIT, 3600.0) == ECLIPSE

    def test_periodicity(self):
        for t in (0.0, 123.0, 3299.0, 3300.0, 5000.0):
            assert phase_at(ORBIT, t) == phase_at(ORBIT, t + 5400.0)

    def test_phase_offset_shifts_timeline(self):
        shifted = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                              inclination_rad=0.925, phase_offset_rad=math.pi)
        # half a period in: what was sun at t=0 is now 2700 s along
        assert phase_at(shifted, 0.0) == SUN       # 2700 < 3300
        assert phase_at(shifted, 601.0) == ECLIPSE  # 3301 >= 3300

    @given(k=st.integers(1, 10_000))
    def test_sun_fraction_exact_over_whole_orbits(self, k):
        span = k * ORBIT.period_s
        frac = sun_seconds(ORBIT, 0.0, span) / span
        assert frac == 3300.0 / 5400.0

    @given(t=st.floats(0.0, 1e6), k=st.integers(1, 20))
    def test_sun_fraction_from_arbitrary_start(self, t, k):
        span = k * ORBIT.period_s
        frac = sun_seconds(ORBIT, t, t + span) / span
        assert frac == pytest.approx(3300.0 / 5400.0, rel=1e-12)

    def test_sun_seconds_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            t0 = float(rng.uniform(0, 20000))
            t1 = t0 + float(rng.uniform(1, 9000))
            fine = np.arange(t0, t1, 0.25)
            brute = 0.25 * sum(phase_at(ORBIT, float(t)) == SUN for t in fine)
            assert sun_seconds(ORBIT, t0, t1) == pytest.approx(brute, abs=0.5)


class TestGroundTrack:
    def test_equatorial_orbit_stays_on_equator(self):
        eq = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                         inclination_rad=0.0)
        for t in (0.0, 100.0, 2345.0, 5399.0):
            lat, _ = subsatellite_point(eq, t)
            assert lat == 0.0

    def test_polar_orbit_reaches_pole(self):
        polar = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                            inclination_rad=math.pi / 2)
        t_apex = 5400.0 / 4.0  # quarter orbit after ascending node
        lat, _ = subsatellite_point(polar, t_apex)
        assert lat == pytest.approx(math.pi / 2, abs=1e-9)

    def test_half_period_latitude_antisymmetry(self):
        for t in (100.0, 700.0, 1300.0):
            lat1, _ = subsatellite_point(ORBIT, t)
            lat2, _ = subsatellite_point(ORBIT, t + 2700.0)
            assert lat1 == pytest.approx(-lat2, abs=1e-9)

    @given(t=st.floats(0.0, 1e6))
    def test_latitude_bounded_by_inclination(self, t):
        lat, lon = subsatellite_point(ORBIT, t)
        assert abs(lat) <= ORBIT.inclination_rad + 1e-12
        assert -math.pi < lon <= math.pi


class TestVisibility:
    STATION = GroundStation(id="gs", latitude_rad=0.0, longitude_rad=0.0,
                            min_elevation_rad=math.radians(10))

    def test_polar_station_never_sees_equatorial_orbit(self):
        eq = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                         inclination_rad=0.0)
        pole = GroundStation(id="pole", latitude_rad=math.pi / 2, longitude_rad=0.0,
                             min_elevation_rad=math.radians(10))
        assert visibility_windows(eq, pole, 0.0, 86400.0, 5.0) == []

    def test_lambda_max_shrinks_to_zero_at_ground_level(self):
        assert max_central_angle(1.0, 0.0) == pytest.approx(0.0, abs=1e-3)
        assert max_central_angle(550e3, 0.0) > 0.0

    def test_all_windows_capped_at_thirty_minutes(self):
        eq = OrbitConfig(period_s=5400.0, sun_duration_s=3300.0, altitude_m=550e3,
                         inclination_rad=0.0)
        windows = visibility_windows(eq, self.STATION, 0.0, 86400.0, 1.0)
        assert windows
        for w in windows:
            assert w.duration <= 1800.0 + 1e-9

    def test_windows_match_brute_force_sampling(self):
        windows = visibility_windows(ORBIT, self.STATION, 0.0, 43200.0, 1.0)
        lam = max_central_angle(ORBIT.altitude_m, self.STATION.min_elevation_rad)
        for w in windows[:3]:
            mid = 0.5 * (w.start + w.end)
            lat, lon = subsatellite_point(ORBIT, mid)
            cos_c = (math.sin(lat) * math.sin(self.STATION.latitude_rad)
                     + math.cos(lat) * math.cos(self.STATION.latitude_rad)
                     * math.cos(lon - self.STATION.longitude_rad))
            assert math.acos(min(max(cos_c, -1.0), 1.0)) <= lam + 1e-9

    def test_step_refinement_moves_boundaries_by_at_most_one_coarse_step(self):
        coarse = visibility_windows(ORBIT, self.STATION, 0.0, 21600.0, 4.0)
        fine = visibility_windows(ORBIT, self.STATION, 0.0, 21600.0, 1.0)
        assert len(coarse) == len(fine)
        for wc, wf in zip(coarse, fine):
            assert abs(wc.start - wf.start) <= 4.0 + 1e-9
            assert abs(wc.end - wf.end) <= 4.0 + 1e-9

    def test_phase_tag_matches_midpoint(self):
        windows = visibility_windows(ORBIT, self.STATION, 0.0, 43200.0, 1.0)
        for w in windows:
            assert w.phase == phase_at(ORBIT, w.midpoint)

    def test_bad_interval_rejected(self):
        with pytest.raises(ValueError):
            visibility_windows(ORBIT, self.STATION, 100.0, 100.0, 1.0)


class TestSchedule:
    def test_no_stations_gives_empty_schedule(self):
        sched = build_schedule(ORBIT, [], horizon=86400.0)
        assert sched.windows == ()

    def test_partition_is_exhaustive_and_disjoint(self):
        station = GroundStation(id="gs", latitude_rad=0.3, longitude_rad=1.0,
                                min_elevation_rad=0.1745)
        sched = build_schedule(ORBIT, [station], horizon=86400.0, step=2.0)
        assert set(sched.sun) | set(sched.eclipse) == set(sched.windows)
        assert not set(sched.sun) & set(sched.eclipse)

    def test_deterministic_regeneration(self):
        station = GroundStation(id="gs", latitude_rad=0.3, longitude_rad=1.0,
                                min_elevation_rad=0.1745)
        a = build_schedule(ORBIT, [station], horizon=43200.0, step=2.0)
        b = build_schedule(ORBIT, [station], horizon=43200.0, step=2.0)
        assert a == b

    def test_overlapping_windows_same_target_rejected(self):
        w1 = ForecastWindow("a", 0.0, 100.0, SUN, "gs")
        w2 = ForecastWindow("b", 50.0, 150.0, SUN, "gs")
        with pytest.raises(ValueError):
            Schedule(windows=(w1, w2))

    def test_window_invariants(self):
        with pytest.raises(ValueError):
            ForecastWindow("w", 100.0, 100.0, SUN, "gs")
        with pytest.raises(ValueError):
            ForecastWindow("w", 0.0, 1801.0, SUN, "gs")
        with pytest.raises(ValueError):
            ForecastWindow("w", 0.0, 100.0, "night", "gs")

    def test_candidates_filters_by_time(self):
        w1 = ForecastWindow("a", 0.0, 100.0, SUN, "gs")
        w2 = ForecastWindow("b", 200.0, 300.0, SUN, "gs")
        sched = Schedule(windows=(w1, w2))
        assert sched.candidates(now=150.0, deadline=1000.0) == [w2]
        assert sched.candidates(now=0.0, deadline=150.0) == [w1]


class TestScheduleOverride:
    RECORDS = [
        {"node": 0, "target": "gs", "start_s": 0.0, "end_s": 600.0, "phase": "sun"},
        {"node": 0, "target": "gs", "start_s": 4000.0, "end_s": 4500.0, "phase": "eclipse"},
        {"node": 1, "target": "gs", "start_s": 100.0, "end_s": 700.0, "phase": "sun"},
    ]

    def test_round_trip(self, tmp_path):
        import json

        path = tmp_path / "override.json"
        path.write_text(json.dumps(self.RECORDS))
        per_node = load_schedule_override(path)
        assert set(per_node) == {0, 1}
        assert len(per_node[0].windows) == 2
        assert per_node[0].windows[0].phase == SUN

    def test_invariants_enforced(self):
        bad = [{"node": 0, "target": "gs", "start_s": 10.0, "end_s": 5.0, "phase": "sun"}]
        with pytest.raises(ValueError):
            load_schedule_override(bad)

    def test_missing_fields_reported(self):
        with pytest.raises(ValueError, match="missing fields"):
            load_schedule_override([{"node": 0, "start_s": 0.0}])

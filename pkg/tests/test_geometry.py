import math

import numpy as np
import pytest

from flare_leo.constants import EARTH_RADIUS_KM
from flare_leo.geometry import (
    CoverageReport,
    LocalFrame,
    SatelliteState,
    ServiceArea,
    SpotBeam,
    beam_gain,
    coverage_check,
    elevation_angle,
    slant_distance,
)

R = EARTH_RADIUS_KM


def overhead_sat(h=550.0):
    return SatelliteState("leo", np.array([0.0, 0.0, R + h]), h)


class TestSlantDistance:
    def test_directly_overhead(self):
        assert slant_distance(overhead_sat(), [0.0, 0.0, R]) == pytest.approx(550.0)

    def test_degenerate_identity(self):
        sat = overhead_sat()
        assert slant_distance(sat, sat.position_km) == 0.0

    def test_hand_evaluated_norm(self):
        # ground on the x axis, satellite 550 km up the z axis: sqrt(R^2 + (R+550)^2)
        expected = math.sqrt(R**2 + (R + 550.0) ** 2)
        got = slant_distance(overhead_sat(), [R, 0.0, 0.0])
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(9406.906080109442, abs=1e-6)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a, b, c = rng.normal(size=(3, 3)) * 1000.0
            assert slant_distance(a, c) <= slant_distance(a, b) + slant_distance(b, c) + 1e-9


class TestBeamGain:
    def test_ratio_collapses(self):
        assert beam_gain(1.0, 1.0) == 4.0

    def test_hand_evaluated(self):
        assert beam_gain(550.0, 200.0) == pytest.approx(30.25, rel=1e-12)
        assert beam_gain(550.0, 25.0) == pytest.approx(1936.0, rel=1e-12)

    def test_nonpositive_inputs_rejected(self):
        with pytest.raises(ValueError):
            beam_gain(0.0, 10.0)
        with pytest.raises(ValueError):
            beam_gain(10.0, -1.0)

    def test_homothety_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            d, r, c = rng.uniform(0.1, 1000.0, size=3)
            assert beam_gain(c * d, c * r) == pytest.approx(beam_gain(d, r), rel=1e-12)


class TestElevationAngle:
    def test_overhead_is_quarter_turn(self):
        user = np.array([0.0, 0.0, R])
        for h in (1.0, 550.0, 35786.0):
            sat = user * (1.0 + h / R)
            assert elevation_angle(user, sat) == pytest.approx(math.pi / 2)

    def test_orthogonal_offset_is_zero(self):
        user = np.array([R, 0.0, 0.0])
        sat = user + np.array([0.0, 123.0, 0.0])
        assert elevation_angle(user, sat) == pytest.approx(0.0, abs=1e-12)

    def test_against_law_of_cosines_oracle(self):
        # Independent spherical-trigonometry path: from the central angle psi
        # between the two position vectors, slant d = sqrt(ru^2 + rs^2 - 2 ru rs cos psi)
        # and sin(elev) = (rs cos psi - ru) / d.
        rng = np.random.default_rng(2024)
        for _ in range(500):
            u = rng.normal(size=3)
            u = R * u / np.linalg.norm(u)
            s = rng.normal(size=3)
            s = (R + rng.uniform(300.0, 2000.0)) * s / np.linalg.norm(s)
            ru, rs = np.linalg.norm(u), np.linalg.norm(s)
            psi = math.acos(np.clip(np.dot(u, s) / (ru * rs), -1.0, 1.0))
            d = math.sqrt(ru**2 + rs**2 - 2 * ru * rs * math.cos(psi))
            oracle = math.asin(np.clip((rs * math.cos(psi) - ru) / d, -1.0, 1.0))
            assert elevation_angle(u, s) == pytest.approx(oracle, abs=1e-9)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            elevation_angle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            elevation_angle([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])


class TestCoverage:
    def make_beam(self, idx, center, radius):
        return SpotBeam(idx, np.asarray(center, dtype=float), radius, 550.0, beam_gain(550.0, radius))

    def test_user_at_center(self):
        beam = self.make_beam(0, [0.0, 0.0], 100.0)
        rep = coverage_check([beam], [[0.0, 0.0]])
        assert rep.assignments == [0]
        assert rep.distances[0] == 0.0
        assert rep.fully_covered

    def test_user_outside_radius(self):
        beam = self.make_beam(0, [0.0, 0.0], 100.0)
        rep = coverage_check([beam], [[150.0, 0.0]])
        assert rep.assignments == [None]
        assert rep.uncovered == [0]

    def test_overlap_reported(self):
        beams = [self.make_beam(0, [0.0, 0.0], 100.0), self.make_beam(1, [150.0, 0.0], 100.0)]
        rep = coverage_check(beams, [])
        assert rep.overlaps == [(0, 1)]

    def test_empty_beams_rejected(self):
        with pytest.raises(ValueError):
            coverage_check([], [[0.0, 0.0]])


class TestTypes:
    def test_satellite_radius_consistency(self):
        with pytest.raises(ValueError):
            SatelliteState("bad", np.array([0.0, 0.0, R + 100.0]), 550.0)

    def test_beam_invariants(self):
        with pytest.raises(ValueError):
            SpotBeam(0, np.zeros(2), -5.0, 550.0, 4.0)
        with pytest.raises(ValueError):
            SpotBeam(0, np.zeros(2), 100.0, 550.0, 1.0)

    def test_beam_from_geometry(self):
        sat = overhead_sat()
        beam = SpotBeam.from_geometry(3, [0.0, 0.0, R], 110.0, sat)
        assert beam.slant_km == pytest.approx(550.0)
        assert beam.gain == pytest.approx(4 * 550.0**2 / 110.0**2)

    def test_service_area_validation(self):
        ServiceArea(1.05e6, 8, 200.0, 25.0)
        with pytest.raises(ValueError):
            ServiceArea(-1.0, 8, 200.0, 25.0)
        with pytest.raises(ValueError):
            ServiceArea(1.0, 8, 25.0, 200.0)


class TestLocalFrame:
    def test_round_trip(self):
        frame = LocalFrame.at_lat_lon(40.7, -74.0)
        rng = np.random.default_rng(7)
        for _ in range(100):
            xy = rng.uniform(-600.0, 600.0, size=2)
            back = frame.to_plane(frame.to_ecef(xy))
            assert np.allclose(back, xy, atol=1e-6)

    def test_surface_points_stay_on_sphere(self):
        frame = LocalFrame.at_lat_lon(12.0, 55.0)
        for xy in ([0.0, 0.0], [300.0, -200.0], [578.0, 0.0]):
            assert np.linalg.norm(frame.to_ecef(xy)) == pytest.approx(R, rel=1e-12)

    def test_satellite_overhead_elevation(self):
        frame = LocalFrame.at_lat_lon(0.0, 0.0)
        sat = frame.satellite("leo", 550.0)
        assert elevation_angle(frame.reference, sat) == pytest.approx(math.pi / 2)

    def test_displaced_satellite_lowers_elevation(self):
        frame = LocalFrame.at_lat_lon(0.0, 0.0)
        e0 = elevation_angle(frame.reference, frame.satellite("a", 550.0, 100.0))
        e1 = elevation_angle(frame.reference, frame.satellite("b", 550.0, 400.0))
        assert e1 < e0 < math.pi / 2

"""Orbital/earth geometry: positions, slant distances, elevation angles, beam gains.

Positions are earth-centered-earth-fixed (ECEF) vectors in kilometers on a
spherical earth.  Beam coverage accounting works on euclidean distances, in
whatever coordinate frame the caller supplies (2-D tangent-plane points for
cluster planning, 3-D ECEF for link geometry).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH_RADIUS_KM


def _vec(p) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("position has non-finite components")
    return v


@dataclass(frozen=True)
class SatelliteState:
    """A satellite snapshot: identifier, ECEF position (km), and altitude (km)."""

    sat_id: str
    position_km: np.ndarray
    altitude_km: float

    def __post_init__(self):
        object.__setattr__(self, "position_km", _vec(self.position_km))
        r = float(np.linalg.norm(self.position_km))
        expected = EARTH_RADIUS_KM + self.altitude_km
        if abs(r - expected) > 1.0:
            raise ValueError(
                f"satellite radius {r:.3f} km inconsistent with altitude "
                f"{self.altitude_km:.3f} km (expected {expected:.3f} km)"
            )


@dataclass(frozen=True)
class SpotBeam:
    """A circular spot beam: surface center, radius, slant distance, linear gain."""

    index: int
    center: np.ndarray
    radius_km: float
    slant_km: float
    gain: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if self.radius_km <= 0:
            raise ValueError("beam radius must be positive")
        expected = beam_gain(self.slant_km, self.radius_km)
        if not math.isclose(self.gain, expected, rel_tol=1e-12):
            raise ValueError("beam gain inconsistent with slant distance and radius")

    @classmethod
    def from_geometry(cls, index: int, center, radius_km: float, sat: SatelliteState) -> "SpotBeam":
        d = slant_distance(sat, center)
        return cls(index, _vec(center), radius_km, d, beam_gain(d, radius_km))


@dataclass(frozen=True)
class ServiceArea:
    """Total service area to cover and the beam count / radius limits doing it."""

    total_area_km2: float
    beam_count: int
    r_max_km: float
    r_min_km: float

    def __post_init__(self):
        if self.total_area_km2 <= 0:
            raise ValueError("service area must be positive")
        if self.r_min_km > self.r_max_km:
            raise ValueError("r_min exceeds r_max")


def slant_distance(sat, ground) -> float:
    """Straight-line distance in km between a satellite and a ground point."""
    pos = sat.position_km if isinstance(sat, SatelliteState) else _vec(sat)
    return float(np.linalg.norm(pos - _vec(ground)))


def beam_gain(slant_km: float, radius_km: float) -> float:
    """Linear antenna gain of a circular spot beam: 4 * slant^2 / radius^2."""
    if slant_km <= 0 or radius_km <= 0:
        raise ValueError("slant distance and radius must be positive")
    return 4.0 * slant_km * slant_km / (radius_km * radius_km)


def elevation_angle(user, sat) -> float:
    """Elevation of the satellite above the user's local horizon, in radians.

    Computed as asin of the normalized inner product between the user position
    vector and the user-to-satellite vector; lies in [-pi/2, pi/2].
    """
    u = _vec(user)
    s = _vec(sat.position_km if isinstance(sat, SatelliteState) else sat)
    d = s - u
    nu = np.linalg.norm(u)
    nd = np.linalg.norm(d)
    if nu == 0.0 or nd == 0.0:
        raise ValueError("elevation angle undefined for zero-norm argument")
    sin_e = float(np.dot(u, d) / (nu * nd))
    return math.asin(min(1.0, max(-1.0, sin_e)))


@dataclass
class CoverageReport:
    """Per-user beam containment plus pairwise beam overlap diagnostics."""

    assignments: list = field(default_factory=list)   # beam index or None per user
    distances: list = field(default_factory=list)     # distance to the serving center
    uncovered: list = field(default_factory=list)     # user indices with no beam
    overlaps: list = field(default_factory=list)      # (i, j) beam index pairs

    @property
    def fully_covered(self) -> bool:
        return not self.uncovered


def coverage_check(beams, users) -> CoverageReport:
    """Report which beam contains each user and which beam pairs overlap.

    Containment uses euclidean distance between the user point and the beam
    center (both in the caller's frame), with ties resolved toward the nearest
    center.  Report-only: uncovered users are flagged, never raised.
    """
    if not beams:
        raise ValueError("coverage_check requires at least one beam")
    report = CoverageReport()
    centers = [np.asarray(b.center, dtype=float) for b in beams]
    for iu, user in enumerate(users):
        p = np.asarray(user, dtype=float)
        best, best_d = None, math.inf
        for ib, (beam, c) in enumerate(zip(beams, centers)):
            d = float(np.linalg.norm(p - c))
            if d <= beam.radius_km and d < best_d:
                best, best_d = ib, d
        report.assignments.append(best)
        report.distances.append(best_d if best is not None else math.nan)
        if best is None:
            report.uncovered.append(iu)
    for i in range(len(beams)):
        for j in range(i + 1, len(beams)):
            gap = float(np.linalg.norm(centers[i] - centers[j]))
            if gap < beams[i].radius_km + beams[j].radius_km:
                report.overlaps.append((i, j))
    return report


class LocalFrame:
    """Tangent-plane chart about a reference surface point.

    Maps 2-D planar offsets (km, arc-length preserving along radial
    directions) to ECEF surface points and back, and places satellites above
    the reference point or displaced along the plane's first axis.
    """

    def __init__(self, reference_ecef, east, north):
        self.reference = _vec(reference_ecef)
        self.radial = self.reference / np.linalg.norm(self.reference)
        self.east = _vec(east)
        self.north = _vec(north)

    @classmethod
    def at_lat_lon(cls, lat_deg: float, lon_deg: float) -> "LocalFrame":
        lat, lon = math.radians(lat_deg), math.radians(lon_deg)
        radial = np.array(
            [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
        )
        east = np.array([-math.sin(lon), math.cos(lon), 0.0])
        north = np.cross(radial, east)
        north /= np.linalg.norm(north)
        return cls(EARTH_RADIUS_KM * radial, east, north)

    def to_ecef(self, xy_km) -> np.ndarray:
        """Map a planar point to the sphere along the geodesic through the reference."""
        x, y = float(xy_km[0]), float(xy_km[1])
        arc = math.hypot(x, y)
        if arc == 0.0:
            return self.reference.copy()
        theta = arc / EARTH_RADIUS_KM
        direction = (x * self.east + y * self.north) / arc
        return EARTH_RADIUS_KM * (math.cos(theta) * self.radial + math.sin(theta) * direction)

    def to_plane(self, ecef) -> np.ndarray:
        p = _vec(ecef)
        unit = p / np.linalg.norm(p)
        cos_t = min(1.0, max(-1.0, float(np.dot(unit, self.radial))))
        theta = math.acos(cos_t)
        tangential = unit - cos_t * self.radial
        norm = np.linalg.norm(tangential)
        if norm < 1e-15:
            return np.zeros(2)
        tangential /= norm
        arc = theta * EARTH_RADIUS_KM
        return arc * np.array([np.dot(tangential, self.east), np.dot(tangential, self.north)])

    def satellite(self, sat_id: str, altitude_km: float, along_track_km: float = 0.0) -> SatelliteState:
        """Satellite above the reference, optionally displaced along the east axis."""
        theta = along_track_km / EARTH_RADIUS_KM
        direction = math.cos(theta) * self.radial + math.sin(theta) * self.east
        return SatelliteState(sat_id, (EARTH_RADIUS_KM + altitude_km) * direction, altitude_km)

"""Curved-Earth satellite/user geometry and the spherical-to-UV angular mapping.

The satellite sits at a fixed altitude above a spherical Earth and looks
straight down; ground users are placed by great-circle distance from the
sub-satellite point plus a bearing. Beam directions live in UV coordinates
(u, v) = (sin(nadir) cos(azimuth), sin(nadir) sin(azimuth)), which keep the
array math free of trigonometry downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6371e3


@dataclass(frozen=True)
class UvDirection:
    """A direction in the UV plane; constrained to the closed unit disk."""

    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("UV components must be finite")
        if self.u * self.u + self.v * self.v > 1.0 + 1e-12:
            raise ValueError(f"(u, v) must satisfy u^2 + v^2 <= 1, got ({self.u}, {self.v})")

    @property
    def radius(self) -> float:
        return math.hypot(self.u, self.v)


@dataclass(frozen=True)
class GroundUserPosition:
    """Ground location: arc distance from the sub-satellite point and a bearing."""

    arc_distance_m: float
    bearing_rad: float

    def __post_init__(self):
        if not self.arc_distance_m >= 0.0:
            raise ValueError("arc_distance_m must be >= 0")
        if not 0.0 <= self.bearing_rad < 2.0 * math.pi:
            raise ValueError("bearing_rad must lie in [0, 2*pi)")


@dataclass(frozen=True)
class SatelliteGeometry:
    """Nadir-pointing satellite above a spherical Earth."""

    altitude_m: float = 500e3
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        if not self.altitude_m > 0.0:
            raise ValueError("altitude_m must be > 0")
        if not self.earth_radius_m > 0.0:
            raise ValueError("earth_radius_m must be > 0")

    @property
    def horizon_central_angle_rad(self) -> float:
        """Central angle at which the line of sight grazes the Earth."""
        return math.acos(self.earth_radius_m / (self.earth_radius_m + self.altitude_m))

    @property
    def horizon_sin_nadir(self) -> float:
        """sin of the off-nadir angle of the geometric horizon."""
        return self.earth_radius_m / (self.earth_radius_m + self.altitude_m)


def uv_from_angles(theta_nadir: float, theta_azimuth: float) -> UvDirection:
    """Map (off-nadir, azimuth) angles in radians to UV coordinates.

    theta_nadir must lie in [0, pi/2], theta_azimuth in [0, 2*pi).
    """
    if not 0.0 <= theta_nadir <= math.pi / 2.0:
        raise ValueError("theta_nadir must lie in [0, pi/2]")
    if not 0.0 <= theta_azimuth < 2.0 * math.pi:
        raise ValueError("theta_azimuth must lie in [0, 2*pi)")
    s = math.sin(theta_nadir)
    return UvDirection(s * math.cos(theta_azimuth), s * math.sin(theta_azimuth))


def user_geometry(sat: SatelliteGeometry, pos: GroundUserPosition) -> tuple[UvDirection, float]:
    """Place a ground user on the sphere and return its UV direction and slant distance.

    The user sits at central angle psi = arc_distance / earth_radius from the
    sub-satellite point. Slant distance follows from the law of cosines in the
    Earth-center/satellite/user triangle; the off-nadir angle from the law of
    sines. Users beyond the geometric horizon are rejected.
    """
    r = sat.earth_radius_m
    h = sat.altitude_m
    psi = pos.arc_distance_m / r
    if psi > sat.horizon_central_angle_rad + 1e-12:
        raise ValueError(
            f"user at central angle {psi:.6f} rad is beyond the geometric horizon "
            f"({sat.horizon_central_angle_rad:.6f} rad)"
        )
    d = math.sqrt(r * r + (r + h) ** 2 - 2.0 * r * (r + h) * math.cos(psi))
    sin_nadir = min(1.0, r * math.sin(psi) / d)
    theta_nadir = math.asin(sin_nadir)
    return uv_from_angles(theta_nadir, pos.bearing_rad), d


def ground_from_uv(sat: SatelliteGeometry, direction: UvDirection) -> GroundUserPosition:
    """Invert user_geometry: project a UV direction back onto the Earth's surface.

    Raises ValueError when the ray misses the Earth (direction beyond the horizon).
    """
    r_uv = direction.radius
    if r_uv > sat.horizon_sin_nadir + 1e-12:
        raise ValueError("direction does not intersect the Earth's surface")
    theta = math.asin(min(1.0, r_uv))
    ratio = (sat.earth_radius_m + sat.altitude_m) / sat.earth_radius_m
    psi = math.asin(min(1.0, ratio * math.sin(theta))) - theta
    bearing = math.atan2(direction.v, direction.u) % (2.0 * math.pi)
    return GroundUserPosition(sat.earth_radius_m * psi, bearing)


def sample_users(
    count: int,
    coverage_radius_m: float,
    rng: np.random.Generator,
    earth_radius_m: float = EARTH_RADIUS_M,
) -> list[GroundUserPosition]:
    """Draw positions i.i.d. uniform over the spherical cap of the given arc radius.

    Uniformity is in cap surface area: the CDF of the central angle psi is
    proportional to 1 - cos(psi). Bearings are uniform on [0, 2*pi).
    Deterministic for a given generator state.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if coverage_radius_m <= 0:
        raise ValueError("coverage_radius_m must be > 0")
    psi_max = coverage_radius_m / earth_radius_m
    u = rng.random(count)
    bearings = rng.random(count) * 2.0 * math.pi
    cos_psi = 1.0 - u * (1.0 - math.cos(psi_max))
    psis = np.arccos(np.clip(cos_psi, -1.0, 1.0))
    return [
        GroundUserPosition(float(earth_radius_m * p), float(b) % (2.0 * math.pi))
        for p, b in zip(psis, bearings)
    ]

import math

import numpy as np
import pytest

from rainbowbf.geometry import (
    GroundUserPosition,
    SatelliteGeometry,
    UvDirection,
    ground_from_uv,
    sample_users,
    user_geometry,
    uv_from_angles,
)

SAT = SatelliteGeometry(altitude_m=500e3, earth_radius_m=6371e3)


class TestUvFromAngles:
    def test_nadir_maps_to_origin(self):
        for az in (0.0, 1.0, 3.0, 6.0):
            d = uv_from_angles(0.0, az)
            assert d.u == 0.0 and d.v == 0.0

    def test_horizon_along_x(self):
        d = uv_from_angles(math.pi / 2, 0.0)
        assert d.u == pytest.approx(1.0, abs=1e-15)
        assert d.v == pytest.approx(0.0, abs=1e-15)

    def test_sin_30deg(self):
        d = uv_from_angles(math.pi / 6, math.pi / 2)
        assert d.u == pytest.approx(0.0, abs=1e-15)
        assert d.v == pytest.approx(0.5, rel=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            uv_from_angles(-0.1, 0.0)
        with pytest.raises(ValueError):
            uv_from_angles(math.pi / 2 + 0.1, 0.0)
        with pytest.raises(ValueError):
            uv_from_angles(0.3, 2 * math.pi)

    def test_injective_via_round_trip(self):
        # one-to-one on (0, pi/2] x [0, 2*pi): recover both angles from (u, v)
        rng = np.random.default_rng(5)
        for _ in range(300):
            nadir = rng.uniform(1e-6, math.pi / 2)
            az = rng.uniform(0.0, 2 * math.pi - 1e-9)
            d = uv_from_angles(nadir, az)
            assert math.asin(min(1.0, d.radius)) == pytest.approx(nadir, rel=1e-9)
            assert math.atan2(d.v, d.u) % (2 * math.pi) == pytest.approx(az, rel=1e-9, abs=1e-9)


class TestUvDirection:
    def test_rejects_outside_unit_disk(self):
        with pytest.raises(ValueError):
            UvDirection(0.8, 0.8)
        UvDirection(0.6, 0.8)  # exactly on the rim is fine


class TestUserGeometry:
    def test_sub_satellite_point(self):
        d, slant = user_geometry(SAT, GroundUserPosition(0.0, 0.0))
        assert d.u == 0.0 and d.v == 0.0
        assert slant == pytest.approx(500e3, rel=1e-12)

    def test_law_of_cosines_pinned_value(self):
        # frozen from an independent high-precision evaluation of
        # d = sqrt(R^2 + (R+h)^2 - 2 R (R+h) cos(arc/R)), theta = asin(R sin psi / d)
        d, slant = user_geometry(SAT, GroundUserPosition(500e3, 0.0))
        assert slant == pytest.approx(720750.855036863, rel=1e-12)
        assert d.u == pytest.approx(0.693009085322885, rel=1e-12)
        assert d.v == pytest.approx(0.0, abs=1e-15)

    def test_small_angle_series(self):
        r, h = SAT.earth_radius_m, SAT.altitude_m
        psi = 1e3 / r
        d, slant = user_geometry(SAT, GroundUserPosition(1e3, 0.0))
        slant_series = math.sqrt(h * h + r * (r + h) * psi * psi)
        assert slant == pytest.approx(slant_series, rel=1e-6)
        assert d.u == pytest.approx(r * math.sin(psi) / slant_series, rel=1e-6)

    def test_beyond_horizon_rejected(self):
        arc = SAT.earth_radius_m * (SAT.horizon_central_angle_rad + 0.01)
        with pytest.raises(ValueError):
            user_geometry(SAT, GroundUserPosition(arc, 0.0))

    def test_slant_monotone_in_arc(self):
        arcs = np.linspace(0, 1500e3, 50)
        slants = [user_geometry(SAT, GroundUserPosition(a, 0.0))[1] for a in arcs]
        assert np.all(np.diff(slants) > 0)

    def test_ground_from_uv_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            pos = GroundUserPosition(rng.uniform(0, 2000e3), rng.uniform(0, 2 * math.pi))
            d, _ = user_geometry(SAT, pos)
            back = ground_from_uv(SAT, d)
            assert back.arc_distance_m == pytest.approx(pos.arc_distance_m, rel=1e-9, abs=1e-6)
            assert back.bearing_rad == pytest.approx(pos.bearing_rad, rel=1e-9, abs=1e-12)


class TestSampleUsers:
    def test_zero_count_rejected(self):
        with pytest.raises(ValueError):
            sample_users(0, 500e3, np.random.default_rng(0))

    def test_deterministic_given_seed(self):
        a = sample_users(4, 500e3, np.random.default_rng(42))
        b = sample_users(4, 500e3, np.random.default_rng(42))
        assert a == b

    def test_cap_uniform_mean(self):
        rng = np.random.default_rng(7)
        users = sample_users(10**5, 500e3, rng)
        psi = np.array([u.arc_distance_m for u in users]) / 6371e3
        psi_max = 500e3 / 6371e3
        analytic = (1.0 + math.cos(psi_max)) / 2.0
        assert np.mean(np.cos(psi)) == pytest.approx(analytic, rel=0.01)

    def test_within_radius_and_valid_uv(self):
        users = sample_users(500, 500e3, np.random.default_rng(3))
        for pos in users:
            assert pos.arc_distance_m <= 500e3
            d, _ = user_geometry(SAT, pos)
            assert d.u**2 + d.v**2 <= 1.0 + 1e-12

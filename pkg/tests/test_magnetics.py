import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvloop import magnetics as mag
from nvloop.errors import CalibrationError, ClearanceError, PreconditionError
from nvloop.spin_dynamics import GYROMAGNETIC_RATIO

R_INNER = 150e-6


def single_filament_turn(radius=R_INNER, segments=360):
    return mag.LoopGeometry(
        turns=(mag.Turn(radius=radius, trace_width=17e-6, trace_thickness=3e-6),),
        segments_per_turn=segments,
        filament_grid=(1, 1),
    )


def on_axis_field(radius, z, current=1.0):
    # closed form for a circular filament, evaluated on its axis
    return mag.MU0 * current * radius ** 2 / (2.0 * (radius ** 2 + z ** 2) ** 1.5)


class TestBiotSavart:
    def test_center_field_matches_closed_form(self):
        b = mag.biot_savart((0.0, 0.0, 0.0), single_filament_turn(), 1.0)
        assert b[2] == pytest.approx(mag.MU0 / (2.0 * R_INNER), rel=1e-3)
        assert abs(b[0]) < 1e-12 * abs(b[2])
        assert abs(b[1]) < 1e-12 * abs(b[2])

    def test_on_axis_heights_match_closed_form(self):
        geometry = single_filament_turn()
        for z in (0.0, R_INNER / 2, R_INNER, 2 * R_INNER):
            b = mag.biot_savart((0.0, 0.0, z), geometry, 1.0)
            assert b[2] == pytest.approx(on_axis_field(R_INNER, z), rel=1e-3)

    def test_height_equal_radius_halves_by_2_to_3_over_2(self):
        geometry = single_filament_turn()
        b0 = mag.biot_savart((0.0, 0.0, 0.0), geometry, 1.0)[2]
        bz = mag.biot_savart((0.0, 0.0, R_INNER), geometry, 1.0)[2]
        assert bz == pytest.approx(b0 / 2 ** 1.5, rel=1e-3)

    def test_three_turn_center_is_sum_of_closed_forms(self):
        geometry = mag.LoopGeometry(
            turns=tuple(mag.Turn(radius=r) for r in (150e-6, 180e-6, 210e-6)),
            filament_grid=(1, 1),
        )
        expected = sum(mag.MU0 / (2.0 * r) for r in (150e-6, 180e-6, 210e-6))
        b = mag.biot_savart((0.0, 0.0, 0.0), geometry, 1.0)
        assert b[2] == pytest.approx(expected, rel=1e-3)

    def test_linear_in_current(self, device):
        point = (10e-6, -20e-6, 25e-6)
        b1 = mag.biot_savart(point, device, 1.0)
        b2 = mag.biot_savart(point, device, 2.5)
        assert np.allclose(b2, 2.5 * b1, rtol=1e-12, atol=0.0)

    def test_convergence_with_segment_doubling(self):
        coarse = mag.biot_savart((0.0, 0.0, 0.0), single_filament_turn(segments=360), 1.0)
        fine = mag.biot_savart((0.0, 0.0, 0.0), single_filament_turn(segments=720), 1.0)
        change = abs(np.linalg.norm(fine) - np.linalg.norm(coarse)) / np.linalg.norm(fine)
        assert change < 1e-4

    def test_clearance_violation_raises(self, device):
        with pytest.raises(ClearanceError):
            mag.biot_savart((150e-6, 0.0, 1e-6), device, 1.0)


class TestPerpProjection:
    def test_parallel_gives_zero(self, frame):
        b = 3.2e-3 * frame.axis
        assert mag.perp_projection(b, frame) == pytest.approx(0.0, abs=1e-18)

    def test_perpendicular_gives_magnitude(self, frame):
        b = np.array([0.0, 1.0, 0.0]) * 2e-3  # axis azimuth 0 has no y component
        assert mag.perp_projection(b, frame) == pytest.approx(2e-3, rel=1e-12)

    def test_normal_field_scales_by_sin_tilt(self, frame):
        b = np.array([0.0, 0.0, 5e-3])
        expected = 5e-3 * math.sin(frame.axis_tilt)
        assert mag.perp_projection(b, frame) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.8165 * 5e-3, rel=1e-3)

    @given(st.lists(st.floats(min_value=-1e-2, max_value=1e-2), min_size=3, max_size=3),
           st.floats(min_value=0.0, max_value=math.pi / 2),
           st.floats(min_value=0.0, max_value=2 * math.pi))
    def test_projection_bounded_by_magnitude(self, b, tilt, azimuth):
        frame = mag.NVFrame(axis_tilt=tilt, azimuth=azimuth)
        value = mag.perp_projection(b, frame)
        assert -1e-18 <= value <= np.linalg.norm(b) * (1.0 + 1e-12) + 1e-18


class TestF1Map:
    def small_map(self, device, frame, spot=None, standoff=20e-6, current=1.0):
        plane = mag.EvalPlane(standoff_height=standoff, extent=(80e-6, 80e-6),
                              pixel_pitch=20e-6)
        return mag.f1_map(device, plane, frame, current, spot_diameter=spot)

    def test_f1_is_gamma_b_over_two_pointwise(self, device, frame):
        fmap = self.small_map(device, frame)
        assert np.allclose(fmap.f1, GYROMAGNETIC_RATIO * fmap.b1_perp / 2.0,
                           rtol=1e-15, atol=0.0, equal_nan=True)

    def test_map_linear_in_current(self, device, frame):
        a = self.small_map(device, frame, current=1.0)
        b = self.small_map(device, frame, current=2.0)
        assert np.allclose(b.f1, 2.0 * a.f1, rtol=1e-12, atol=0.0)

    def test_mirror_symmetry_across_tilt_plane(self, device, frame):
        # azimuth 0 tilts the axis in the xz plane, so y -> -y is exact
        fmap = self.small_map(device, frame)
        assert np.allclose(fmap.f1, fmap.f1[::-1, :], rtol=1e-10, atol=0.0)

    def test_rotation_symmetry_for_untilted_axis(self, device):
        fmap = self.small_map(device, mag.NVFrame(axis_tilt=0.0))
        assert np.allclose(fmap.f1, fmap.f1[::-1, ::-1], rtol=1e-10, atol=0.0)

    def test_center_amplitude_inversion(self, device, frame, calibrated_standoff):
        # current that yields a 136.3 MHz center value implies
        # a perpendicular amplitude of 2 f1 / gamma there
        target = 136.3e6
        per_amp = mag.spot_f1_values(device, frame, (0.0, 0.0), calibrated_standoff,
                                     1.0).mean()
        current = target / per_amp
        values = mag.spot_f1_values(device, frame, (0.0, 0.0), calibrated_standoff,
                                    current)
        b1 = 2.0 * values.mean() / GYROMAGNETIC_RATIO
        assert b1 == pytest.approx(2.0 * target / GYROMAGNETIC_RATIO, rel=1e-9)
        assert b1 == pytest.approx(97.3e-4, rel=2e-3)  # tesla, i.e. 97.3 G

    def test_low_standoff_flags_pixels_over_conductor(self, device, frame):
        plane = mag.EvalPlane(standoff_height=2e-6, extent=(280e-6, 280e-6),
                              pixel_pitch=140e-6)
        fmap = mag.f1_map(device, plane, frame, 1.0, spot_diameter=None)
        assert fmap.flagged.sum() > 0
        assert np.isnan(fmap.f1[fmap.flagged]).all()

    def test_spot_requires_clearance(self, device, frame):
        with pytest.raises(ClearanceError):
            mag.spot_f1_values(device, frame, (150e-6, 0.0), 2e-6, 1.0)


class TestHomogeneity:
    def make_map(self, values):
        values = np.asarray(values, dtype=float)
        ny, nx = values.shape
        pitch = 10e-6
        plane = mag.EvalPlane(standoff_height=1e-6,
                              extent=((nx - 1) * pitch if nx > 1 else pitch,
                                      (ny - 1) * pitch if ny > 1 else pitch),
                              pixel_pitch=pitch)
        xs = (np.arange(nx) - (nx - 1) / 2.0) * pitch
        ys = (np.arange(ny) - (ny - 1) / 2.0) * pitch
        return mag.FieldMap(plane=plane, frame=mag.NVFrame(), xs=xs, ys=ys,
                            b1_perp=2.0 * values / GYROMAGNETIC_RATIO, f1=values,
                            flagged=np.zeros_like(values, dtype=bool),
                            drive_current=1.0, drive_frequency=2.55e9)

    def test_uniform_map_has_zero_spread(self):
        stats = mag.homogeneity(self.make_map(np.full((3, 3), 7.0)), 20e-6)
        assert stats.mean == 7.0
        assert stats.normalized_std == 0.0

    def test_population_convention(self):
        stats = mag.homogeneity(self.make_map([[1.0, 3.0]]), 10e-6)
        assert stats.mean == pytest.approx(2.0)
        assert stats.normalized_std == pytest.approx(0.5)

    def test_square_larger_than_extent_rejected(self):
        with pytest.raises(PreconditionError):
            mag.homogeneity(self.make_map(np.ones((3, 3))), 1.0)

    def test_ordering_on_calibrated_device(self, calibrated_map):
        inner = mag.homogeneity(calibrated_map, 40e-6)
        outer = mag.homogeneity(calibrated_map, 100e-6)
        assert inner.normalized_std <= outer.normalized_std


class TestInductance:
    def test_single_turn_closed_form(self):
        # oracle: direct evaluation of mu0 R (ln(8R/a) - 2) at a = 4.5 um
        radius, wire = 150e-6, 4.5e-6
        expected = mag.MU0 * radius * (math.log(8.0 * radius / wire) - 2.0)
        assert mag.circular_self_inductance(radius, wire) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.676e-9, rel=1e-3)

    def test_equivalent_wire_radius_convention(self):
        turn = mag.Turn(radius=150e-6, trace_width=17e-6, trace_thickness=3e-6)
        assert turn.equivalent_wire_radius == pytest.approx(0.2235 * 20e-6, rel=1e-12)

    def test_mutual_against_neumann_quadrature(self):
        # independent oracle: numeric Neumann double integral, reduced by
        # symmetry to a single integral over the angle difference
        r1, r2, d = 150e-6, 180e-6, 0.0
        psi = np.linspace(0.0, 2.0 * np.pi, 400001)
        integrand = np.cos(psi) / np.sqrt(r1 ** 2 + r2 ** 2 - 2 * r1 * r2 * np.cos(psi) + d ** 2)
        oracle = mag.MU0 * r1 * r2 / 2.0 * np.trapezoid(integrand, psi)
        assert mag.mutual_inductance(r1, r2, d) == pytest.approx(oracle, rel=1e-6)

    def test_coincident_filaments_rejected(self):
        with pytest.raises(PreconditionError):
            mag.mutual_inductance(150e-6, 150e-6, 0.0)
        assert mag.mutual_inductance(150e-6, 150e-6, 5e-6) > 0

    def test_three_turn_total_in_band(self, device):
        total = mag.loop_inductance(device)
        assert 4.3e-9 <= total <= 7.1e-9

    def test_mutuals_superadditive(self, device):
        total = mag.loop_inductance(device)
        selfs = sum(mag.circular_self_inductance(t.radius, t.equivalent_wire_radius)
                    for t in device.turns)
        assert total > selfs


class TestCalibration:
    def test_ratio_hits_target_at_calibrated_standoff(self, device, frame,
                                                      calibrated_standoff):
        ratio = mag.field_ratio(device, frame, calibrated_standoff)
        assert ratio == pytest.approx(1.109, abs=1e-6)

    def test_unreachable_target_raises(self, device, frame):
        with pytest.raises(CalibrationError):
            mag.calibrate_standoff(device, frame, target_ratio=2.0)

    def test_disk_points_stay_inside(self):
        pts = mag.disk_points(64, 5e-6)
        assert (np.hypot(pts[:, 0], pts[:, 1]) <= 2.5e-6 + 1e-18).all()
        assert pts.shape == (64, 2)


class TestGeometryValidation:
    def test_radii_must_increase(self):
        with pytest.raises(PreconditionError):
            mag.LoopGeometry(turns=(mag.Turn(radius=150e-6), mag.Turn(radius=150e-6)))

    def test_minimum_segments(self):
        with pytest.raises(PreconditionError):
            mag.LoopGeometry(turns=(mag.Turn(radius=150e-6),), segments_per_turn=32)

    def test_default_device_dimensions(self, device):
        assert [t.radius for t in device.turns] == [150e-6, 180e-6, 210e-6]
        assert {t.trace_width for t in device.turns} == {17e-6}
        assert [t.trace_thickness for t in device.turns] == [3e-6, 9e-6, 9e-6]

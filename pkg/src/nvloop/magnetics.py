"""Quasi-static magnetic model of the multi-turn planar drive loop.

Each turn is a circle of rectangular cross section, discretized as a
bundle of polygonal current filaments.  The module computes the field
anywhere off the conductors (Biot-Savart over the filament segments),
projects it onto the plane perpendicular to a tilted spin quantization
axis, converts the perpendicular amplitude to a Rabi frequency via
f1 = gamma * B1 / 2, and reduces maps to homogeneity statistics.  The
loop's low-frequency inductance comes from closed-form self terms plus
pairwise coaxial-filament mutuals (complete elliptic integrals).

Lengths are meters, fields tesla, currents amperes (peak).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipe, ellipk

from .errors import CalibrationError, ClearanceError, PreconditionError
from .spin_dynamics import GYROMAGNETIC_RATIO

MU0 = 4.0e-7 * math.pi

# round-wire radius equivalent to a rectangular trace, per unit (width + thickness)
RECT_EQUIV_RADIUS_FACTOR = 0.2235

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_CHUNK = 256  # evaluation points per Biot-Savart broadcast block


@dataclass(frozen=True)
class Turn:
    """One circular turn; ``radius`` is measured to the trace center."""

    radius: float
    z_offset: float = 0.0
    trace_width: float = 17e-6
    trace_thickness: float = 9e-6

    def __post_init__(self):
        for name in ("radius", "trace_width", "trace_thickness"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be > 0")

    @property
    def equivalent_wire_radius(self) -> float:
        return RECT_EQUIV_RADIUS_FACTOR * (self.trace_width + self.trace_thickness)


@dataclass(frozen=True)
class LoopGeometry:
    """Concentric turns plus their discretization parameters.

    ``filament_grid`` = (radial, axial) splits each cross section into
    equal-current filaments; (1, 1) reduces a turn to a single circular
    filament for closed-form comparisons.
    """

    turns: tuple[Turn, ...]
    segments_per_turn: int = 360
    filament_grid: tuple[int, int] = (3, 3)

    def __post_init__(self):
        if len(self.turns) == 0:
            raise PreconditionError("geometry needs at least one turn")
        radii = [t.radius for t in self.turns]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise PreconditionError("turn radii must be strictly increasing")
        if self.segments_per_turn < 64:
            raise PreconditionError("segments_per_turn must be >= 64")
        if any(n < 1 for n in self.filament_grid):
            raise PreconditionError("filament_grid entries must be >= 1")

    @classmethod
    def default(cls, segments_per_turn: int = 360,
                filament_grid: tuple[int, int] = (3, 3)) -> "LoopGeometry":
        """The three-turn device: radii 150/180/210 um, 17 um traces."""
        return cls(
            turns=(
                Turn(radius=150e-6, trace_width=17e-6, trace_thickness=3e-6),
                Turn(radius=180e-6, trace_width=17e-6, trace_thickness=9e-6),
                Turn(radius=210e-6, trace_width=17e-6, trace_thickness=9e-6),
            ),
            segments_per_turn=segments_per_turn,
            filament_grid=filament_grid,
        )

    @property
    def clearance(self) -> float:
        """Minimum allowed distance from an evaluation point to a filament."""
        nr, nz = self.filament_grid
        return max(max(t.trace_width / nr, t.trace_thickness / nz) for t in self.turns)


@dataclass(frozen=True)
class NVFrame:
    """Orientation of the spin quantization axis relative to the loop normal."""

    axis_tilt: float = math.acos(1.0 / math.sqrt(3.0))  # 54.74 degrees
    azimuth: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.axis_tilt <= math.pi / 2:
            raise PreconditionError("axis_tilt must lie in [0, pi/2]")

    @property
    def axis(self) -> np.ndarray:
        s = math.sin(self.axis_tilt)
        return np.array([s * math.cos(self.azimuth), s * math.sin(self.azimuth),
                         math.cos(self.axis_tilt)])


@dataclass(frozen=True)
class EvalPlane:
    """Horizontal evaluation plane above the conductor plane."""

    standoff_height: float = 20e-6
    extent: tuple[float, float] = (280e-6, 280e-6)
    pixel_pitch: float = 10e-6

    def __post_init__(self):
        if not self.standoff_height > 0:
            raise PreconditionError("standoff_height must be > 0")
        if not self.pixel_pitch > 0:
            raise PreconditionError("pixel_pitch must be > 0")
        if min(self.extent) < self.pixel_pitch:
            raise PreconditionError("extent must be >= pixel_pitch")

    def axis_coords(self) -> tuple[np.ndarray, np.ndarray]:
        def centered(extent):
            n = int(math.floor(extent / self.pixel_pitch + 0.5)) + 1
            return (np.arange(n) - (n - 1) / 2.0) * self.pixel_pitch
        return centered(self.extent[0]), centered(self.extent[1])


@dataclass(frozen=True)
class HomogeneityStats:
    mean: float
    normalized_std: float


@dataclass(frozen=True)
class FieldMap:
    """Per-pixel perpendicular drive amplitude and Rabi frequency."""

    plane: EvalPlane
    frame: NVFrame
    xs: np.ndarray
    ys: np.ndarray
    b1_perp: np.ndarray   # (ny, nx) tesla, NaN where flagged
    f1: np.ndarray        # (ny, nx) Hz, gamma * b1_perp / 2
    flagged: np.ndarray   # (ny, nx) bool, conductor-clearance violations
    drive_current: float
    drive_frequency: float


@lru_cache(maxsize=8)
def _segments(geometry: LoopGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Filament segment endpoints and per-segment current weights."""
    nr, nz = geometry.filament_grid
    starts, ends, weights = [], [], []
    nseg = geometry.segments_per_turn
    theta = 2.0 * np.pi * np.arange(nseg + 1) / nseg
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    for turn in geometry.turns:
        r_offsets = turn.trace_width * ((2 * np.arange(nr) + 1) / (2 * nr) - 0.5)
        z_offsets = turn.trace_thickness * ((2 * np.arange(nz) + 1) / (2 * nz) - 0.5)
        for dr in r_offsets:
            r = turn.radius + dr
            for dz in z_offsets:
                pts = np.stack([r * cos_t, r * sin_t,
                                np.full(nseg + 1, turn.z_offset + dz)], axis=1)
                starts.append(pts[:-1])
                ends.append(pts[1:])
                weights.append(np.full(nseg, 1.0 / (nr * nz)))
    return (np.concatenate(starts), np.concatenate(ends), np.concatenate(weights))


def _evaluate(points: np.ndarray, geometry: LoopGeometry,
              want_field: bool = True, want_distance: bool = True):
    """Biot-Savart field (tesla per ampere) and min conductor distance.

    One chunked broadcast pass over all filament segments.  With leg
    vectors b = p - start and c = b - seg, the per-segment field is
    (mu0/4pi) * w * (b x c) * (|b| + |c|) / (|b||c| (|b||c| + b.c)),
    and b x c = -(b x seg), so only b is ever materialized.  Summation
    order over segments is fixed, keeping results bit-reproducible.
    """
    starts, ends, weights = _segments(geometry)
    seg = ends - starts
    ss = np.einsum("sk,sk->s", seg, seg)
    n = points.shape[0]
    fields = np.empty((n, 3)) if want_field else None
    dists = np.empty(n) if want_distance else None
    for i in range(0, n, _CHUNK):
        p = points[i:i + _CHUNK]
        b = p[:, None, :] - starts[None, :, :]
        bb = np.einsum("psk,psk->ps", b, b)
        bs = np.einsum("psk,sk->ps", b, seg)
        if want_distance:
            t = np.clip(bs / ss[None, :], 0.0, 1.0)
            d2 = bb + t * (t * ss[None, :] - 2.0 * bs)
            dists[i:i + _CHUNK] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        if want_field:
            nb = np.sqrt(bb)
            nc = np.sqrt(np.maximum(bb - 2.0 * bs + ss[None, :], 0.0))
            prod = nb * nc
            scale = -1e-7 * weights[None, :] * (nb + nc) / (prod * (prod + bb - bs))
            cx = b[:, :, 1] * seg[None, :, 2] - b[:, :, 2] * seg[None, :, 1]
            cy = b[:, :, 2] * seg[None, :, 0] - b[:, :, 0] * seg[None, :, 2]
            cz = b[:, :, 0] * seg[None, :, 1] - b[:, :, 1] * seg[None, :, 0]
            fields[i:i + _CHUNK, 0] = np.einsum("ps,ps->p", scale, cx)
            fields[i:i + _CHUNK, 1] = np.einsum("ps,ps->p", scale, cy)
            fields[i:i + _CHUNK, 2] = np.einsum("ps,ps->p", scale, cz)
    return fields, dists


def _field_per_ampere(points: np.ndarray, geometry: LoopGeometry) -> np.ndarray:
    return _evaluate(points, geometry, want_distance=False)[0]


def _min_filament_distance(points: np.ndarray, geometry: LoopGeometry) -> np.ndarray:
    return _evaluate(points, geometry, want_field=False)[1]


def biot_savart(point, geometry: LoopGeometry, current: float) -> np.ndarray:
    """Magnetic field 3-vector at ``point`` for the given loop current.

    The point must keep at least one filament spacing of clearance from
    every conductor filament; closer evaluations raise ClearanceError.
    """
    pts = np.asarray(point, dtype=float).reshape(1, 3)
    dist = _min_filament_distance(pts, geometry)[0]
    if dist < geometry.clearance:
        raise ClearanceError(
            f"evaluation point within {dist:.3g} m of a conductor filament "
            f"(clearance {geometry.clearance:.3g} m)")
    return current * _field_per_ampere(pts, geometry)[0]


def perp_projection(b, frame: NVFrame) -> float:
    """Magnitude of the field component perpendicular to the spin axis."""
    b = np.asarray(b, dtype=float)
    n = frame.axis
    return float(np.linalg.norm(b - (b @ n) * n))


def _perp_batch(fields: np.ndarray, frame: NVFrame) -> np.ndarray:
    n = frame.axis
    proj = fields @ n
    return np.linalg.norm(fields - proj[:, None] * n, axis=1)


def disk_points(n: int, diameter: float) -> np.ndarray:
    """Deterministic, area-uniform (x, y) offsets covering a disk."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    k = np.arange(n)
    r = 0.5 * diameter * np.sqrt((k + 0.5) / n)
    th = k * _GOLDEN_ANGLE
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def spot_f1_values(geometry: LoopGeometry, frame: NVFrame, center_xy, standoff: float,
                   current: float, spot_diameter: float = 5e-6, n_points: int = 13) -> np.ndarray:
    """Rabi frequencies at sample points inside a laser-spot disk.

    Useful both for spot averaging (the arithmetic mean models the
    spatial average of a scanned spot) and, with a denser ``n_points``,
    as an ensemble of local drive strengths for damping studies.
    """
    cx, cy = center_xy
    offsets = disk_points(n_points, spot_diameter)
    pts = np.stack([cx + offsets[:, 0], cy + offsets[:, 1],
                    np.full(n_points, standoff)], axis=1)
    fields, dists = _evaluate(pts, geometry)
    if dists.min() < geometry.clearance:
        raise ClearanceError("laser spot overlaps a conductor filament")
    b_perp = _perp_batch(current * fields, frame)
    return GYROMAGNETIC_RATIO * b_perp / 2.0


def f1_map(geometry: LoopGeometry, plane: EvalPlane, frame: NVFrame, current: float,
           spot_diameter: float | None = 5e-6, spot_points: int = 13,
           drive_frequency: float = 2.55e9) -> FieldMap:
    """Rabi-frequency map over the evaluation plane.

    Each pixel is either a single point evaluation (``spot_diameter``
    None or 0) or the arithmetic mean over a sampled laser-spot disk.
    Pixels whose evaluation points violate conductor clearance are
    flagged and carry NaN values; statistics skip them.
    """
    xs, ys = plane.axis_coords()
    nx, ny = xs.size, ys.size
    gx, gy = np.meshgrid(xs, ys)
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if spot_diameter:
        offsets = disk_points(spot_points, spot_diameter)
    else:
        offsets = np.zeros((1, 2))
    m = offsets.shape[0]
    pts = np.repeat(centers, m, axis=0)
    pts[:, 0] += np.tile(offsets[:, 0], centers.shape[0])
    pts[:, 1] += np.tile(offsets[:, 1], centers.shape[0])
    pts3 = np.concatenate([pts, np.full((pts.shape[0], 1), plane.standoff_height)], axis=1)

    fields, dists = _evaluate(pts3, geometry)
    flagged = dists.reshape(-1, m).min(axis=1) < geometry.clearance
    b_perp = _perp_batch(current * fields, frame)
    b_pixel = b_perp.reshape(-1, m).mean(axis=1)
    b_pixel[flagged] = np.nan

    b_grid = b_pixel.reshape(ny, nx)
    return FieldMap(
        plane=plane,
        frame=frame,
        xs=xs,
        ys=ys,
        b1_perp=b_grid,
        f1=GYROMAGNETIC_RATIO * b_grid / 2.0,
        flagged=flagged.reshape(ny, nx),
        drive_current=current,
        drive_frequency=drive_frequency,
    )


def homogeneity(field_map: FieldMap, square_side: float) -> HomogeneityStats:
    """Mean and population std/mean of f1 over a centered square."""
    if square_side > min(field_map.plane.extent) + 1e-12:
        raise PreconditionError("square_side exceeds the map extent")
    gx, gy = np.meshgrid(field_map.xs, field_map.ys)
    half = square_side / 2.0 + 1e-12
    mask = (np.abs(gx) <= half) & (np.abs(gy) <= half) & ~field_map.flagged
    values = field_map.f1[mask]
    if values.size == 0:
        raise PreconditionError("no unflagged pixels inside the square")
    mean = float(values.mean())
    return HomogeneityStats(mean=mean, normalized_std=float(values.std() / mean))


def circular_self_inductance(radius: float, wire_radius: float) -> float:
    """External self-inductance of a circular loop of round wire."""
    if not 0 < wire_radius < radius:
        raise PreconditionError("need 0 < wire_radius < radius")
    return MU0 * radius * (math.log(8.0 * radius / wire_radius) - 2.0)


def mutual_inductance(r1: float, r2: float, axial_separation: float = 0.0) -> float:
    """Mutual inductance of two coaxial circular filaments.

    Complete elliptic integral form; diverges for coincident filaments,
    so equal radii require a nonzero axial separation.
    """
    if not (r1 > 0 and r2 > 0):
        raise PreconditionError("radii must be > 0")
    if r1 == r2 and axial_separation == 0.0:
        raise PreconditionError(
            "coincident filaments: mutual inductance diverges, separate them axially")
    m = 4.0 * r1 * r2 / ((r1 + r2) ** 2 + axial_separation ** 2)
    k = math.sqrt(m)
    return MU0 * math.sqrt(r1 * r2) * ((2.0 / k - k) * ellipk(m) - (2.0 / k) * ellipe(m))


def loop_inductance(geometry: LoopGeometry) -> float:
    """Series inductance of all turns: self terms plus pairwise mutuals."""
    total = 0.0
    for turn in geometry.turns:
        total += circular_self_inductance(turn.radius, turn.equivalent_wire_radius)
    turns = geometry.turns
    for i in range(len(turns)):
        for j in range(i + 1, len(turns)):
            total += 2.0 * mutual_inductance(turns[i].radius, turns[j].radius,
                                             turns[i].z_offset - turns[j].z_offset)
    return total


def field_ratio(geometry: LoopGeometry, frame: NVFrame, standoff: float,
                offset_distance: float = 50e-6, spot_diameter: float = 5e-6,
                spot_points: int = 13) -> float:
    """Spot-averaged f1 at an off-center probe over the value at the center.

    The probe sits ``offset_distance`` from the axis, opposite the spin
    axis azimuth: on that side the in-plane field component adds to the
    perpendicular projection, which is where the off-center rise is
    strongest and the ratio responds best to the standoff height.
    """
    ox = -offset_distance * math.cos(frame.azimuth)
    oy = -offset_distance * math.sin(frame.azimuth)
    center = spot_f1_values(geometry, frame, (0.0, 0.0), standoff, 1.0,
                            spot_diameter, spot_points).mean()
    off = spot_f1_values(geometry, frame, (ox, oy), standoff, 1.0,
                         spot_diameter, spot_points).mean()
    return float(off / center)


def calibrate_standoff(geometry: LoopGeometry, frame: NVFrame,
                       target_ratio: float = 1.109, offset_distance: float = 50e-6,
                       bounds: tuple[float, float] = (5e-6, 60e-6)) -> float:
    """Standoff height at which the off-center/center f1 ratio hits the target.

    Single-parameter calibration against a measured two-point ratio;
    raises CalibrationError when the target is not bracketed in bounds.
    """
    lo, hi = bounds
    if not 0 < lo < hi:
        raise PreconditionError("bounds must satisfy 0 < lo < hi")

    def err(h):
        return field_ratio(geometry, frame, h, offset_distance) - target_ratio

    e_lo, e_hi = err(lo), err(hi)
    if e_lo == 0.0:
        return lo
    if e_hi == 0.0:
        return hi
    if e_lo * e_hi > 0:
        raise CalibrationError(
            f"target ratio {target_ratio} not bracketed on [{lo}, {hi}] "
            f"(ratio spans [{e_lo + target_ratio:.4f}, {e_hi + target_ratio:.4f}])")
    return float(brentq(err, lo, hi, xtol=1e-9))

"""Synthetic camera and the measurement chain feeding the agent.

The chain mirrors a fixed camera watching a bright marker on the car:
render an HSV frame, keep pixels inside a fixed hue/sat/val band, collapse
the surviving pixels to a centroid via spatial moments, map the centroid
column back to world coordinates, and track (position, velocity) with a
constant-velocity linear Kalman filter fed position-only measurements.

Noise knobs (per-pixel hue jitter, pixel dropout, whole-frame misses,
clutter false positives) stand in for the imperfections of a real sensor.
An empty detection is not an error: the filter simply coasts on its
prediction and uncertainty grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .api import DT, Observation
from .dynamics import TrackProfile, CarState, height
from .errors import ConfigError, CovarianceCollapse


@dataclass(frozen=True)
class HsvThresholds:
    """Fixed segmentation band: hue half-open, sat/val lower bounds."""

    h_min: float = 45.0
    h_max: float = 70.0
    s_min: float = 0.5
    v_min: float = 0.5

    def validate(self) -> "HsvThresholds":
        if not (0.0 <= self.h_min < self.h_max < 360.0):
            raise ConfigError("need 0 <= h_min < h_max < 360")
        if not (0.0 <= self.s_min <= 1.0 and 0.0 <= self.v_min <= 1.0):
            raise ConfigError("s_min and v_min must be fractions in [0, 1]")
        return self

    def passes(self, h: float, s: float, v: float) -> bool:
        return self.h_min <= h < self.h_max and s >= self.s_min and v >= self.v_min


@dataclass
class Frame:
    """Row-major HSV image; h in [0, 360), s and v in [0, 1]."""

    pixels: np.ndarray  # shape (height, width, 3), float32

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


@dataclass
class PixelMask:
    """Paired (col, row) integer coordinates of pixels that passed the filter."""

    cols: np.ndarray
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.cols)

    def as_set(self) -> set:
        return set(zip(self.cols.tolist(), self.rows.tolist()))

    @staticmethod
    def empty() -> "PixelMask":
        return PixelMask(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))


@dataclass(frozen=True)
class CameraConfig:
    """Frame geometry, world-to-image mapping and sensor noise model.

    World x in [-half_width, half_width] maps to column center_col +
    px_per_world * x; track height maps to row row0 - row_per_world * h(x).
    clutter_rate is the expected count of false-positive pixels per frame.
    """

    width: int = 256
    height: int = 112
    marker_radius: float = 4.0
    px_per_world: float = 1.0
    center_col: float = 127.5
    row0: float = 96.0
    row_per_world: float = 1.0
    marker_hue: float = 57.5
    marker_sat: float = 1.0
    marker_val: float = 1.0
    bg_hue: float = 220.0
    bg_sat: float = 0.2
    bg_val: float = 0.2
    hue_sigma: float = 4.0
    dropout_p: float = 0.03
    clutter_rate: float = 0.05
    frame_miss_p: float = 0.01

    def validate(self, track: TrackProfile, th: HsvThresholds) -> "CameraConfig":
        if self.width <= 0 or self.height <= 0 or self.marker_radius <= 0:
            raise ConfigError("frame dimensions and marker radius must be positive")
        if self.px_per_world <= 0 or self.row_per_world <= 0:
            raise ConfigError("world-to-image scales must be positive")
        for p in (self.dropout_p, self.frame_miss_p):
            if not 0.0 <= p <= 1.0:
                raise ConfigError("dropout probabilities must be in [0, 1]")
        if self.clutter_rate < 0 or self.hue_sigma < 0:
            raise ConfigError("noise rates must be non-negative")
        # the marker disk must stay inside the frame across the whole track
        r = self.marker_radius
        lo_col = self.center_col - self.px_per_world * track.half_width - r
        hi_col = self.center_col + self.px_per_world * track.half_width + r
        top_row = self.row0 - self.row_per_world * 2.0 * track.amplitude - r
        bot_row = self.row0 + r
        if lo_col < 0 or hi_col > self.width - 1 or top_row < 0 or bot_row > self.height - 1:
            raise ConfigError("marker disk leaves the frame somewhere on the track")
        # segmentation must separate marker from backdrop by construction
        if not th.passes(self.marker_hue, self.marker_sat, self.marker_val):
            raise ConfigError("marker color must pass the thresholds")
        if th.passes(self.bg_hue, self.bg_sat, self.bg_val):
            raise ConfigError("background color must fail the thresholds")
        return self


def world_to_image(x: float, track: TrackProfile, cam: CameraConfig) -> tuple:
    col = cam.center_col + cam.px_per_world * x
    row = cam.row0 - cam.row_per_world * height(track, x)
    return col, row


def image_to_world(centroid: tuple, cam: CameraConfig) -> float:
    """Invert the column mapping; the row carries no extra information."""
    return (centroid[0] - cam.center_col) / cam.px_per_world


_DISK_OFFSETS: dict = {}


def _disk_offsets(radius: float):
    got = _DISK_OFFSETS.get(radius)
    if got is None:
        span = math.ceil(radius) + 1  # +1 covers any fractional anchor shift
        axis = np.arange(-span, span + 1)
        cc, rr = np.meshgrid(axis, axis)
        got = _DISK_OFFSETS[radius] = (cc.ravel(), rr.ravel())
    return got


def _raster_disk(cx: float, cy: float, radius: float):
    offc, offr = _disk_offsets(radius)
    cols = offc + round(cx)
    rows = offr + round(cy)
    inside = (cols - cx) ** 2 + (rows - cy) ** 2 <= radius * radius
    return cols[inside], rows[inside]


@dataclass
class _SceneSample:
    """The random draw behind one frame; rendering and masking share it."""

    frame_missed: bool
    disk_cols: np.ndarray
    disk_rows: np.ndarray
    disk_hues: np.ndarray  # jittered then wrapped into [0, 360)
    disk_keep: np.ndarray  # False where the pixel dropped out
    clut_cols: np.ndarray
    clut_rows: np.ndarray


def _sample_scene(
    state: CarState, cam: CameraConfig, track: TrackProfile, rng: np.random.Generator
) -> _SceneSample:
    missed = rng.random() < cam.frame_miss_p
    if missed:
        cols = rows = np.empty(0, dtype=np.int64)
        hues = np.empty(0)
        keep = np.empty(0, dtype=bool)
    else:
        cx, cy = world_to_image(state.x, track, cam)
        cols, rows = _raster_disk(cx, cy, cam.marker_radius)
        n = len(cols)
        if cam.hue_sigma > 0:
            hues = np.mod(cam.marker_hue + cam.hue_sigma * rng.standard_normal(n), 360.0)
        else:
            hues = np.full(n, cam.marker_hue)
        keep = rng.random(n) >= cam.dropout_p if cam.dropout_p > 0 else np.ones(n, dtype=bool)
    if cam.clutter_rate > 0:
        n_c = int(rng.poisson(cam.clutter_rate))
        if n_c:
            pos = rng.integers(0, (cam.width, cam.height), size=(n_c, 2))
            ccols, crows = pos[:, 0], pos[:, 1]
        else:
            ccols = crows = np.empty(0, dtype=np.int64)
    else:
        ccols = crows = np.empty(0, dtype=np.int64)
    return _SceneSample(missed, cols, rows, hues, keep, ccols, crows)


def _paint_frame(sample: _SceneSample, cam: CameraConfig) -> Frame:
    px = np.empty((cam.height, cam.width, 3), dtype=np.float32)
    px[:, :, 0] = cam.bg_hue
    px[:, :, 1] = cam.bg_sat
    px[:, :, 2] = cam.bg_val
    # clutter first, marker on top: the marker occludes
    px[sample.clut_rows, sample.clut_cols] = (cam.marker_hue, cam.marker_sat, cam.marker_val)
    kc = sample.disk_cols[sample.disk_keep]
    kr = sample.disk_rows[sample.disk_keep]
    px[kr, kc, 0] = sample.disk_hues[sample.disk_keep]
    px[kr, kc, 1] = cam.marker_sat
    px[kr, kc, 2] = cam.marker_val
    return Frame(px)


def render_frame(
    state: CarState, cam: CameraConfig, track: TrackProfile, rng: np.random.Generator
) -> Frame:
    """Draw the scene as the camera would deliver it."""
    return _paint_frame(_sample_scene(state, cam, track, rng), cam)


def hsv_filter(frame: Frame, th: HsvThresholds) -> PixelMask:
    """Threshold every pixel; returns the coordinates that pass."""
    px = frame.pixels
    ok = (
        (px[:, :, 0] >= th.h_min)
        & (px[:, :, 0] < th.h_max)
        & (px[:, :, 1] >= th.s_min)
        & (px[:, :, 2] >= th.v_min)
    )
    rows, cols = np.nonzero(ok)
    return PixelMask(cols.astype(np.int64), rows.astype(np.int64))


def _disk_in_band(sample: _SceneSample, cam: CameraConfig, th: HsvThresholds) -> np.ndarray:
    if not (cam.marker_sat >= th.s_min and cam.marker_val >= th.v_min):
        return np.zeros(len(sample.disk_cols), dtype=bool)
    return (
        sample.disk_keep
        & (sample.disk_hues >= th.h_min)
        & (sample.disk_hues < th.h_max)
    )


def _free_clutter(sample: _SceneSample, cam: CameraConfig) -> list:
    """Deduplicated clutter pixels not hidden behind a painted marker pixel.

    Clutter counts are tiny (Poisson with a rate around one), so plain
    Python sets beat vectorized membership tests here.
    """
    if not len(sample.clut_cols):
        return []
    painted = set(
        (sample.disk_rows[sample.disk_keep] * cam.width
         + sample.disk_cols[sample.disk_keep]).tolist()
    )
    out = []
    for c, r in zip(sample.clut_cols.tolist(), sample.clut_rows.tolist()):
        flat = r * cam.width + c
        if flat in painted:
            continue
        painted.add(flat)
        out.append((c, r))
    return out


def _mask_from_sample(sample: _SceneSample, cam: CameraConfig, th: HsvThresholds) -> PixelMask:
    """Mask the painted frame would produce, without materializing it.

    Validation guarantees the backdrop fails the filter and clutter passes,
    so the mask is: surviving marker pixels whose jittered color still
    passes, plus clutter pixels not occluded by a surviving marker pixel.
    """
    in_band = _disk_in_band(sample, cam, th)
    cols = sample.disk_cols[in_band]
    rows = sample.disk_rows[in_band]
    extra = _free_clutter(sample, cam)
    if extra:
        cols = np.concatenate([cols, [c for c, _ in extra]])
        rows = np.concatenate([rows, [r for _, r in extra]])
    return PixelMask(cols.astype(np.int64), rows.astype(np.int64))


def _moments_from_sample(sample: _SceneSample, cam: CameraConfig, th: HsvThresholds) -> tuple:
    """(M00, M10, M01) of the mask, computed without building it."""
    in_band = _disk_in_band(sample, cam, th)
    m00 = int(np.count_nonzero(in_band))
    m10 = int(sample.disk_cols[in_band].sum())
    m01 = int(sample.disk_rows[in_band].sum())
    for c, r in _free_clutter(sample, cam):
        m00 += 1
        m10 += c
        m01 += r
    return m00, m10, m01


def centroid_from_moments(mask: PixelMask) -> Optional[tuple]:
    """Centroid (M10/M00, M01/M00); None when nothing was detected."""
    m00 = len(mask)
    if m00 == 0:
        return None
    m10 = int(mask.cols.sum())
    m01 = int(mask.rows.sum())
    return (m10 / m00, m01 / m00)


@dataclass(frozen=True)
class KalmanParams:
    q: float = 20000.0    # process-noise intensity, px^2/s^3
    r: float = 0.5        # measurement variance, px^2
    p0_x: float = 25.0    # initial position variance
    p0_v: float = 2500.0  # initial velocity variance

    def validate(self) -> "KalmanParams":
        if self.q < 0 or self.r <= 0 or self.p0_x <= 0 or self.p0_v <= 0:
            raise ConfigError("kalman variances must be positive (q may be zero)")
        return self


@dataclass
class KalmanEstimate:
    mean: np.ndarray  # (x_hat, v_hat)
    cov: np.ndarray   # 2x2, symmetric positive definite


def _spd_cov(p00: float, p01: float, p11: float) -> np.ndarray:
    det = p00 * p11 - p01 * p01
    if not (p00 > 0.0 and det > 0.0 and math.isfinite(det)):
        raise CovarianceCollapse(f"covariance not SPD: [[{p00}, {p01}], [{p01}, {p11}]]")
    return np.array([[p00, p01], [p01, p11]])


def _ensure_spd(cov: np.ndarray) -> np.ndarray:
    return _spd_cov(
        float(cov[0, 0]),
        0.5 * (float(cov[0, 1]) + float(cov[1, 0])),
        float(cov[1, 1]),
    )


def kalman_predict(est: KalmanEstimate, dt: float, q: float) -> KalmanEstimate:
    """Constant-velocity propagation with white-acceleration process noise:
    mean <- F mean, P <- F P F^T + Q(q, dt), written out for the 2x2 case."""
    x = float(est.mean[0])
    v = float(est.mean[1])
    p = est.cov
    p00 = float(p[0, 0])
    p01 = 0.5 * (float(p[0, 1]) + float(p[1, 0]))
    p11 = float(p[1, 1])
    c00 = p00 + 2.0 * dt * p01 + dt * dt * p11 + q * dt ** 3 / 3.0
    c01 = p01 + dt * p11 + q * dt * dt / 2.0
    c11 = p11 + q * dt
    return KalmanEstimate(np.array([x + dt * v, v]), _spd_cov(c00, c01, c11))


def kalman_update(est: KalmanEstimate, z: float, r: float) -> KalmanEstimate:
    """Position-only innovation update (H = [1, 0])."""
    x = float(est.mean[0])
    v = float(est.mean[1])
    p = est.cov
    p00 = float(p[0, 0])
    p01 = 0.5 * (float(p[0, 1]) + float(p[1, 0]))
    p11 = float(p[1, 1])
    s = p00 + r
    k0 = p00 / s
    k1 = p01 / s
    innov = z - x
    cov = _spd_cov(p00 - k0 * p00, p01 - k0 * p01, p11 - k1 * p01)
    return KalmanEstimate(np.array([x + k0 * innov, v + k1 * innov]), cov)


class PerceptionPipeline:
    """Owns the per-episode estimator state for one environment instance."""

    def __init__(
        self,
        cam: CameraConfig,
        thresholds: HsvThresholds,
        kalman: KalmanParams,
        track: TrackProfile,
        dt: float = DT,
        initial_x: float = 0.0,
    ):
        self.cam = cam
        self.thresholds = thresholds
        self.kalman = kalman
        self.track = track
        self.dt = dt
        self.initial_x = initial_x
        self._est: Optional[KalmanEstimate] = None

    @property
    def estimate(self) -> Optional[KalmanEstimate]:
        return self._est

    def reset(self) -> None:
        self._est = None

    def measure(self, state: CarState, rng: np.random.Generator, capture: bool = False):
        """One frame through render -> filter -> moments. Returns (z, frame).

        Without capture the frame is never materialized; the moments come
        straight from the scene sample in the same integer arithmetic, so
        both paths yield bit-identical measurements.
        """
        sample = _sample_scene(state, self.cam, self.track, rng)
        frame = None
        if capture:
            frame = _paint_frame(sample, self.cam)
            cent = centroid_from_moments(hsv_filter(frame, self.thresholds))
        else:
            m00, m10, m01 = _moments_from_sample(sample, self.cam, self.thresholds)
            cent = None if m00 == 0 else (m10 / m00, m01 / m00)
        z = None if cent is None else image_to_world(cent, self.cam)
        return z, frame

    def observe(
        self, state: CarState, rng: np.random.Generator, capture: bool = False
    ) -> Observation:
        """Process one frame and return the current filtered estimate."""
        z, frame = self.measure(state, rng, capture)
        kp = self.kalman
        if self._est is None:
            x0 = self.initial_x if z is None else z
            self._est = KalmanEstimate(
                np.array([x0, 0.0]), _ensure_spd(np.diag([kp.p0_x, kp.p0_v]))
            )
        else:
            est = kalman_predict(self._est, self.dt, kp.q)
            if z is not None:
                est = kalman_update(est, z, kp.r)
            self._est = est
        m = self._est.mean
        return Observation(x_est=float(m[0]), v_est=float(m[1]), frame_ref=frame)


def hsv_to_rgb(pixels: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> RGB conversion, output uint8."""
    h = pixels[:, :, 0] / 60.0
    s = pixels[:, :, 1]
    v = pixels[:, :, 2]
    c = v * s
    x = c * (1.0 - np.abs(np.mod(h, 2.0) - 1.0))
    m = v - c
    sector = np.floor(h).astype(int) % 6
    zeros = np.zeros_like(c)
    r = np.choose(sector, [c, x, zeros, zeros, x, c])
    g = np.choose(sector, [x, c, c, x, zeros, zeros])
    b = np.choose(sector, [zeros, zeros, x, c, c, x])
    rgb = np.stack([r + m, g + m, b + m], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def write_ppm(frame: Frame, path) -> None:
    """Binary P6 dump of one frame, for eyeball debugging."""
    rgb = hsv_to_rgb(frame.pixels)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())

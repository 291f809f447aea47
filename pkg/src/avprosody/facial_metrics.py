"""Eyebrow-raise metric: raw distance, pitch compensation, mm calibration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import LandmarkFrame, LandmarkTrack, MotionTrack, ValidationError

MAX_COMPENSATION_PITCH = 89.0


@dataclass(frozen=True)
class EyebrowConfig:
    # subject's right eye in the 68-point scheme
    eye_inner_corner_index: int = 39
    brow_inner_index: int = 21
    interocular_indices: tuple[int, int] = (39, 42)

    def __post_init__(self):
        object.__setattr__(self, "interocular_indices", tuple(self.interocular_indices))
        a, b = self.interocular_indices
        if not all(0 <= i < 68 for i in (self.eye_inner_corner_index, self.brow_inner_index, a, b)):
            raise ValidationError("landmark indices must be in 0..67")
        if self.eye_inner_corner_index == self.brow_inner_index or a == b:
            raise ValidationError("paired landmark indices must be distinct")
        if self.brow_inner_index in (a, b):
            raise ValidationError("brow landmark cannot be an interocular landmark")


@dataclass(frozen=True)
class CalibrationScale:
    mm_per_pixel: float

    def __post_init__(self):
        if not (np.isfinite(self.mm_per_pixel) and self.mm_per_pixel > 0):
            raise ValidationError(f"mm_per_pixel must be positive, got {self.mm_per_pixel}")


def eyebrow_raise_raw(frame: LandmarkFrame, cfg: EyebrowConfig = EyebrowConfig()) -> float:
    """Pixel distance from the inner eye corner to the innermost brow point."""
    d = frame.points[cfg.brow_inner_index] - frame.points[cfg.eye_inner_corner_index]
    return float(np.hypot(d[0], d[1]))


def compensate_pitch(raw: float, pitch: float) -> float:
    """Undo the vertical foreshortening of a head pitched by ``pitch`` degrees.

    Raises:
        ValueError: ``|pitch| >= 89`` where 1/cos blows up.
    """
    if not abs(pitch) < MAX_COMPENSATION_PITCH:
        raise ValueError(f"pitch {pitch} deg is outside the compensation range")
    return raw / np.cos(np.radians(pitch))


def calibration_from_track(
    track: LandmarkTrack, cfg: EyebrowConfig, interocular_mm: float
) -> CalibrationScale:
    """mm per pixel from the median interocular pixel distance over the track."""
    if not interocular_mm > 0:
        raise ValidationError("interocular_mm must be > 0")
    a, b = cfg.interocular_indices
    coords = track.coords
    px = np.median(np.linalg.norm(coords[:, a] - coords[:, b], axis=1))
    if not px > 1e-12:
        raise ValidationError("interocular landmarks coincide; cannot calibrate")
    return CalibrationScale(interocular_mm / px)


def eyebrow_track(
    track: LandmarkTrack,
    pitch: MotionTrack,
    cfg: EyebrowConfig = EyebrowConfig(),
    scale: CalibrationScale = CalibrationScale(1.0),
) -> MotionTrack:
    """Per-frame eyebrow raise in mm after pitch compensation.

    Frames whose pitch falls outside the compensation range, or is itself a
    gap, become gaps.
    """
    if len(track) != len(pitch) or track.fps != pitch.fps:
        raise ValidationError(
            f"landmark track ({len(track)} @ {track.fps} fps) and pitch track "
            f"({len(pitch)} @ {pitch.fps} fps) do not align"
        )
    coords = track.coords
    d = coords[:, cfg.brow_inner_index] - coords[:, cfg.eye_inner_corner_index]
    raw = np.hypot(d[:, 0], d[:, 1])
    p = pitch.values
    ok = np.abs(p) < MAX_COMPENSATION_PITCH  # False for NaN too
    mm = np.full(raw.shape, np.nan)
    mm[ok] = raw[ok] / np.cos(np.radians(p[ok])) * scale.mm_per_pixel
    return MotionTrack(track.fps, mm, "millimeters", start_time=track.frames[0].t)


def normalize_to_first_frame(track: MotionTrack) -> MotionTrack:
    """Subtract the first sample so the track starts at zero."""
    if len(track) == 0:
        raise ValidationError("cannot normalise an empty track")
    first = track.values[0]
    if np.isnan(first):
        # first frame is a gap: fall back to the first valid sample
        first = track.rest_value
    return track.with_values(track.values - first, rest_value=0.0)

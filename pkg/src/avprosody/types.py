"""Shared data model: landmark frames and tracks, scalar motion tracks, sessions.

All containers are frozen dataclasses. Arrays held inside them are marked
read-only on construction so values can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

N_LANDMARKS = 68
UNITS = ("degrees", "millimeters", "pixels", "dimensionless", "hertz", "decibels")
TIMESTAMP_TOL = 1e-6

# 68-point scheme index ranges
JAW = range(0, 17)
BROWS = range(17, 27)
NOSE = range(27, 36)
EYES = range(36, 48)
MOUTH = range(48, 68)


class ValidationError(ValueError):
    """Raised when a value violates a data-model invariant.

    ``frame`` carries the index of the first offending frame when relevant.
    """

    def __init__(self, message: str, frame: Optional[int] = None):
        super().__init__(message)
        self.frame = frame


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LandmarkFrame:
    """One detector output: timestamp (s) and an (68, 2) array of image points."""

    t: float
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError(f"points must have shape (k, 2), got {pts.shape}")
        object.__setattr__(self, "points", pts)

    def __eq__(self, other):
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.points, other.points)

    def point(self, index: int) -> np.ndarray:
        return self.points[index]


@dataclass(frozen=True, eq=False)
class LandmarkTrack:
    fps: float
    frames: tuple[LandmarkFrame, ...]

    def __post_init__(self):
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "frames", tuple(self.frames))

    @classmethod
    def from_arrays(cls, fps: float, coords, times=None) -> "LandmarkTrack":
        """Build a track from an (n, 68, 2) coordinate array.

        Timestamps default to ``i / fps``.
        """
        coords = np.asarray(coords, dtype=float)
        if times is None:
            times = np.arange(coords.shape[0]) / float(fps)
        return cls(fps, tuple(LandmarkFrame(t, p) for t, p in zip(times, coords)))

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[LandmarkFrame]:
        return iter(self.frames)

    def __eq__(self, other):
        if not isinstance(other, LandmarkTrack):
            return NotImplemented
        return self.fps == other.fps and self.frames == other.frames

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    @property
    def coords(self) -> np.ndarray:
        """Stacked (n, 68, 2) coordinates. Only meaningful on a valid track."""
        return np.stack([f.points for f in self.frames])


def validate_track(track: LandmarkTrack) -> LandmarkTrack:
    """Check every LandmarkTrack invariant and return the track unchanged.

    Raises:
        ValidationError: naming the first offending frame.
    """
    if not (np.isfinite(track.fps) and track.fps > 0):
        raise ValidationError(f"fps must be positive, got {track.fps}")
    if len(track.frames) < 1:
        raise ValidationError("track has no frames")
    dt = 1.0 / track.fps
    t0 = track.frames[0].t
    for k, frame in enumerate(track.frames):
        if frame.points.shape[0] != N_LANDMARKS:
            raise ValidationError(
                f"wrong point count at frame {k}: {frame.points.shape[0]} != {N_LANDMARKS}", k
            )
        if not np.all(np.isfinite(frame.points)):
            raise ValidationError(f"non-finite coordinate at frame {k}", k)
        if not np.isfinite(frame.t) or frame.t < 0:
            raise ValidationError(f"invalid timestamp at frame {k}: {frame.t}", k)
        if abs(frame.t - (t0 + k * dt)) > TIMESTAMP_TOL:
            raise ValidationError(
                f"non-uniform spacing at frame {k}: t={frame.t!r}, expected {t0 + k * dt!r}", k
            )
    return track


@dataclass(frozen=True, eq=False)
class MotionTrack:
    """A uniformly sampled scalar series.

    NaN entries are gap markers (unvoiced F0 frames, samples rejected by the
    pitch-compensation guard). ``start_time`` is the time of sample 0.
    ``rest_value`` defaults to the first non-gap sample.
    """

    fps: float
    values: np.ndarray
    unit: str
    rest_value: Optional[float] = None
    start_time: float = 0.0

    def __post_init__(self):
        fps = float(self.fps)
        if not (np.isfinite(fps) and fps > 0):
            raise ValidationError(f"fps must be positive, got {self.fps}")
        if self.unit not in UNITS:
            raise ValidationError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        vals = _frozen(self.values).reshape(-1)
        if np.any(np.isinf(vals)):
            raise ValidationError("motion track values must be finite or NaN gaps")
        rest = self.rest_value
        if rest is None:
            valid = vals[~np.isnan(vals)]
            rest = float(valid[0]) if valid.size else float("nan")
        object.__setattr__(self, "fps", fps)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "rest_value", float(rest))
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MotionTrack):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.unit == other.unit
            and np.array_equal(self.values, other.values, equal_nan=True)
            and (self.rest_value == other.rest_value
                 or (np.isnan(self.rest_value) and np.isnan(other.rest_value)))
            and self.start_time == other.start_time
        )

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) / self.fps

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def with_values(self, values, rest_value: Optional[float] = None) -> "MotionTrack":
        return MotionTrack(self.fps, values, self.unit,
                           self.rest_value if rest_value is None else rest_value,
                           self.start_time)


@dataclass(frozen=True)
class SessionManifest:
    """Bookkeeping for one recorded or rendered session.

    ``camera`` optionally pins the pinhole intrinsics (fx, fy, cx, cy) used
    when the landmarks were produced.
    """

    label: str
    landmark_path: str
    interocular_mm: float
    audio_path: Optional[str] = None
    strength_percent: Optional[float] = None
    camera: Optional[dict] = field(default=None, compare=True)

    def __post_init__(self):
        if not (np.isfinite(self.interocular_mm) and self.interocular_mm > 0):
            raise ValidationError(f"interocular_mm must be > 0, got {self.interocular_mm}")
        if self.strength_percent is not None and not 0 <= self.strength_percent <= 200:
            raise ValidationError(
                f"strength_percent must be in [0, 200], got {self.strength_percent}"
            )

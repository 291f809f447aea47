"""F0 and intensity contours from mono audio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import MotionTrack, ValidationError

INTENSITY_FLOOR_DB = -120.0


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).reshape(-1)
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        if not np.all(np.isfinite(x)):
            raise ValidationError("audio samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class F0Config:
    fmin: float = 75.0
    fmax: float = 400.0
    frame_length: float = 0.040
    hop: float = 0.010
    voicing_threshold: float = 0.45

    def __post_init__(self):
        if not 0 < self.fmin < self.fmax:
            raise ValidationError("need 0 < fmin < fmax")
        if self.frame_length < 2.0 / self.fmin:
            raise ValidationError("frame_length must cover at least two periods of fmin")
        if not self.hop > 0:
            raise ValidationError("hop must be positive")
        if not 0 < self.voicing_threshold < 1:
            raise ValidationError("voicing_threshold must be in (0, 1)")

    def check_rate(self, sample_rate: float):
        if not self.fmax < sample_rate / 2:
            raise ValidationError(f"fmax {self.fmax} Hz must be below Nyquist ({sample_rate / 2} Hz)")


@dataclass(frozen=True, eq=False)
class ProsodyContours:
    f0: MotionTrack
    intensity: MotionTrack

    @property
    def hop(self) -> float:
        return 1.0 / self.f0.fps


def _frames(audio: AudioBuffer, cfg: F0Config) -> tuple[np.ndarray, int, int]:
    sr = audio.sample_rate
    n = int(round(cfg.frame_length * sr))
    hop = int(round(cfg.hop * sr))
    x = audio.samples
    if x.size < n:
        raise ValidationError(
            f"audio of {x.size} samples is shorter than one analysis frame ({n} samples)"
        )
    count = 1 + (x.size - n) // hop
    frames = np.lib.stride_tricks.sliding_window_view(x, n)[::hop][:count]
    return frames, n, hop


def _contour_track(values, audio: AudioBuffer, n: int, hop: int, unit: str) -> MotionTrack:
    sr = audio.sample_rate
    # frame centres
    return MotionTrack(sr / hop, values, unit, start_time=(n / 2) / sr)


def cmnd(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """Cumulative-mean-normalised difference for each row of ``frames``.

    Returns shape (n_frames, tau_max + 1); the integration window is
    ``frame_len - tau_max`` samples.
    """
    n = frames.shape[1]
    w = n - tau_max
    size = 1 << int(np.ceil(np.log2(n + w)))
    fx = np.fft.rfft(frames, size, axis=1)
    fw = np.fft.rfft(frames[:, :w], size, axis=1)
    # r[tau] = sum_j x[j] x[j + tau], j < w
    r = np.fft.irfft(np.conj(fw) * fx, size, axis=1)[:, :tau_max + 1]
    sq = np.concatenate([np.zeros((frames.shape[0], 1)), np.cumsum(frames**2, axis=1)], axis=1)
    energy = sq[:, w:w + tau_max + 1] - sq[:, :tau_max + 1]  # sum x[tau .. tau+w-1]^2
    d = energy[:, :1] + energy - 2.0 * r
    d[:, 0] = 0.0
    np.maximum(d, 0.0, out=d)
    cum = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, tau_max + 1)
    out = np.ones_like(d)
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = d[:, 1:] * taus / cum
    out[:, 1:] = np.where(cum > 0, norm, 1.0)
    return out


def _pick_period(dp: np.ndarray, tau_min: int, tau_max: int, threshold: float) -> float:
    below = np.nonzero(dp[tau_min:tau_max + 1] < threshold)[0]
    if below.size == 0:
        return np.nan
    tau = tau_min + int(below[0])
    while tau + 1 <= tau_max and dp[tau + 1] < dp[tau]:
        tau += 1
    if 1 <= tau < tau_max:
        a, b, c = dp[tau - 1], dp[tau], dp[tau + 1]
        denom = a - 2 * b + c
        if denom > 0:
            return tau + 0.5 * (a - c) / denom
    return float(tau)


def f0_contour(audio: AudioBuffer, cfg: F0Config = F0Config()) -> MotionTrack:
    """Frame-wise fundamental frequency in Hz; unvoiced frames are gaps (NaN)."""
    cfg.check_rate(audio.sample_rate)
    frames, n, hop = _frames(audio, cfg)
    sr = audio.sample_rate
    tau_min = max(2, int(np.floor(sr / cfg.fmax)))
    tau_max = int(np.ceil(sr / cfg.fmin))
    if tau_max >= n // 2:
        tau_max = n // 2
    dp = cmnd(frames, tau_max)
    f0 = np.full(frames.shape[0], np.nan)
    for i in range(frames.shape[0]):
        tau = _pick_period(dp[i], tau_min, tau_max, cfg.voicing_threshold)
        if np.isfinite(tau):
            f = sr / tau
            if cfg.fmin <= f <= cfg.fmax:
                f0[i] = f
    return _contour_track(f0, audio, n, hop, "hertz")


def intensity_contour(audio: AudioBuffer, cfg: F0Config = F0Config()) -> MotionTrack:
    """Frame-wise level in dB relative to digital full scale, floored at -120 dB."""
    frames, n, hop = _frames(audio, cfg)
    ms = np.mean(frames**2, axis=1)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(ms)
    db = np.maximum(db, INTENSITY_FLOOR_DB)
    return _contour_track(db, audio, n, hop, "decibels")


def prosody_contours(audio: AudioBuffer, cfg: F0Config = F0Config()) -> ProsodyContours:
    return ProsodyContours(f0_contour(audio, cfg), intensity_contour(audio, cfg))

"""Savitzky-Golay smoothing of scalar series and landmark coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .types import LandmarkTrack, ValidationError


@dataclass(frozen=True)
class SgConfig:
    window: int = 13
    order: int = 2

    def __post_init__(self):
        if int(self.window) != self.window or int(self.order) != self.order:
            raise ValidationError("window and order must be integers")
        if self.window < 3 or self.window % 2 == 0:
            raise ValidationError(f"window must be odd and >= 3, got {self.window}")
        if not 0 <= self.order < self.window:
            raise ValidationError(
                f"order must satisfy 0 <= order < window, got order={self.order}, window={self.window}"
            )


@lru_cache(maxsize=None)
def _fit_operator(window: int, order: int) -> np.ndarray:
    # (order+1, window): maps window samples to polynomial coefficients
    # about the stencil center, via the normal equations.
    half = window // 2
    x = np.arange(-half, half + 1, dtype=float)
    A = np.vander(x, order + 1, increasing=True)
    return np.linalg.solve(A.T @ A, A.T)


@lru_cache(maxsize=None)
def _weights_at(window: int, order: int, offset: int) -> np.ndarray:
    """Weights evaluating the window fit at ``offset`` from the stencil center."""
    powers = float(offset) ** np.arange(order + 1)
    w = powers @ _fit_operator(window, order)
    w.setflags(write=False)
    return w


def sg_coefficients(cfg: SgConfig = SgConfig()) -> np.ndarray:
    """Central-point smoothing weights for ``cfg``; they sum to one."""
    return _weights_at(cfg.window, cfg.order, 0).copy()


def smooth_scalar(values, cfg: SgConfig = SgConfig()) -> np.ndarray:
    """Smooth a 1-D series (or each column of a 2-D array along axis 0).

    Interior samples use the central weights. Each of the ``window // 2``
    samples at either end is the value, at its own position, of the
    polynomial fitted to the first (or last) ``window`` samples.
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[0]
    if n < cfg.window:
        raise ValidationError(f"series of length {n} is shorter than window {cfg.window}")
    half = cfg.window // 2
    out = np.empty_like(x)
    central = _weights_at(cfg.window, cfg.order, 0)
    # sliding windows along axis 0: shape (n - window + 1, ..., window)
    win = np.lib.stride_tricks.sliding_window_view(x, cfg.window, axis=0)
    out[half:n - half] = win @ central
    head = x[:cfg.window]
    tail = x[n - cfg.window:]
    for i in range(half):
        out[i] = _weights_at(cfg.window, cfg.order, i - half) @ head
        out[n - 1 - i] = _weights_at(cfg.window, cfg.order, half - i) @ tail
    return out


def smooth_landmarks(track: LandmarkTrack, cfg: SgConfig = SgConfig()) -> LandmarkTrack:
    """Smooth each of the 136 landmark coordinate series independently."""
    coords = track.coords
    n = coords.shape[0]
    if n < cfg.window:
        raise ValidationError(f"track of {n} frames is shorter than window {cfg.window}")
    flat = coords.reshape(n, -1)
    smoothed = smooth_scalar(flat, cfg).reshape(coords.shape)
    return LandmarkTrack.from_arrays(track.fps, smoothed, track.times)

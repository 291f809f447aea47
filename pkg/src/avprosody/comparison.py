"""Resampling, Pearson correlation with significance, strength-gain fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .types import MotionTrack, ValidationError


class ComparisonError(ValueError):
    pass


@dataclass(frozen=True)
class ComparisonReport:
    r: float
    p_value: float
    n: int
    labels: tuple[str, str] = ("a", "b")

    def to_dict(self) -> dict:
        return {"r": self.r, "p": self.p_value, "n": self.n, "labels": list(self.labels)}


@dataclass(frozen=True)
class StrengthGain:
    per_50_delta: float
    intercept: float
    fit_r2: float
    feature: str = "peak-to-peak"
    magnitudes: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"per_50_delta": self.per_50_delta, "intercept": self.intercept,
                "fit_r2": self.fit_r2, "feature": self.feature,
                "magnitudes": {str(k): v for k, v in self.magnitudes.items()}}


# -- regularized incomplete beta -------------------------------------------

def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided tail probability of Student's t."""
    if math.isinf(t):
        return 0.0
    return betainc_regularized(dof / 2.0, 0.5, dof / (dof + t * t))


def correlation_p_value(r: float, n: int) -> float:
    """Two-sided p for a sample correlation ``r`` over ``n`` pairs."""
    if n < 3:
        raise ComparisonError("need at least 3 pairs for a p-value")
    if abs(r) >= 1.0:
        return 0.0
    dof = n - 2
    t = r * math.sqrt(dof / (1.0 - r * r))
    return t_two_sided_p(t, dof)


# -- tracks ----------------------------------------------------------------

def resample(track: MotionTrack, target_fps: float) -> MotionTrack:
    """Linear interpolation onto a ``target_fps`` grid over the same span.

    A target sample takes a gap whenever either bracketing source sample is
    a gap; samples landing exactly on a source sample copy it.
    """
    if len(track) < 2:
        raise ValidationError("cannot resample a track with fewer than 2 samples")
    if not target_fps > 0:
        raise ValidationError("target_fps must be positive")
    if target_fps == track.fps:
        return track
    span = (len(track) - 1) / track.fps
    m = int(math.floor(span * target_fps + 1e-9)) + 1
    pos = np.arange(m) * (track.fps / target_fps)  # in source-sample units
    lo = np.clip(np.floor(pos + 1e-9).astype(int), 0, len(track) - 1)
    hi = np.minimum(lo + 1, len(track) - 1)
    frac = np.clip(pos - lo, 0.0, None)
    exact = frac < 1e-9
    v = track.values
    out = np.where(exact, v[lo], (1 - frac) * v[lo] + frac * v[hi])
    return MotionTrack(target_fps, out, track.unit, track.rest_value, track.start_time)


def align(a: MotionTrack, b: MotionTrack) -> tuple[MotionTrack, MotionTrack, bool]:
    """Bring two tracks onto a common grid: the lower fps, the common span.

    Returns the aligned pair and whether resampling was needed.
    """
    resampled = False
    if a.fps != b.fps:
        fps = min(a.fps, b.fps)
        a, b = resample(a, fps) if a.fps != fps else a, resample(b, fps) if b.fps != fps else b
        resampled = True
    n = min(len(a), len(b))
    if len(a) != n:
        a = a.with_values(a.values[:n])
    if len(b) != n:
        b = b.with_values(b.values[:n])
    return a, b, resampled


def pearson(a: MotionTrack, b: MotionTrack, labels: Sequence[str] = ("a", "b")) -> ComparisonReport:
    """Sample correlation over the pairs where both tracks are valid.

    Raises:
        ComparisonError: unequal lengths or rates, fewer than 3 valid pairs,
            or a constant track.
    """
    if len(a) != len(b) or a.fps != b.fps:
        raise ComparisonError("tracks must have equal length and fps; align them first")
    both = a.valid & b.valid
    n = int(both.sum())
    if n < 3:
        raise ComparisonError(f"only {n} jointly valid sample pairs; need at least 3")
    x = a.values[both]
    y = b.values[both]
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ComparisonError("correlation undefined for a constant track")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return ComparisonReport(r, correlation_p_value(r, n), n, tuple(labels))


@dataclass
class CellResult:
    strength: float
    report: Optional[ComparisonReport] = None
    error: Optional[str] = None
    resampled: bool = False

    def to_dict(self) -> dict:
        d: dict = {"strength": self.strength, "resampled": self.resampled}
        if self.report is not None:
            d.update(self.report.to_dict())
        if self.error is not None:
            d["error"] = self.error
        return d


def correlation_matrix(
    real: MotionTrack, vh: Mapping[float, MotionTrack], labels: tuple[str, str] = ("real", "vh")
) -> dict[float, CellResult]:
    """One correlation per strength; a failing cell records its error."""
    out: dict[float, CellResult] = {}
    for strength in sorted(vh, reverse=True):
        cell = CellResult(strength)
        try:
            a, b, cell.resampled = align(real, vh[strength])
            cell.report = pearson(a, b, (labels[0], f"{labels[1]} {strength:g}%"))
        except (ComparisonError, ValidationError) as exc:
            cell.error = str(exc)
        out[strength] = cell
    return out


def magnitude(track: MotionTrack, feature: str = "peak-to-peak",
              interval: Optional[tuple[float, float]] = None) -> float:
    """Excursion size of a track.

    ``peak-to-peak`` is max - min over valid samples. ``focal-extremum`` is
    the largest absolute deviation from ``rest_value`` inside ``interval``
    (seconds).
    """
    v = track.values
    keep = track.valid.copy()
    if feature == "peak-to-peak":
        if interval is not None:
            t = track.times
            keep &= (t >= interval[0]) & (t <= interval[1])
        if not keep.any():
            raise ComparisonError("no valid samples for the magnitude feature")
        return float(v[keep].max() - v[keep].min())
    if feature == "focal-extremum":
        if interval is None:
            raise ComparisonError("focal-extremum needs a focus interval")
        t = track.times
        keep &= (t >= interval[0] - 1e-9) & (t <= interval[1] + 1e-9)
        if not keep.any():
            raise ComparisonError("no valid samples inside the focus interval")
        return float(np.max(np.abs(v[keep] - track.rest_value)))
    raise ValueError(f"unknown magnitude feature {feature!r}")


def estimate_strength_gain(
    tracks: Mapping[float, MotionTrack],
    feature: str = "peak-to-peak",
    interval: Optional[tuple[float, float]] = None,
) -> StrengthGain:
    """Ordinary least squares of track magnitude against strength percent."""
    if len(tracks) < 2:
        raise ComparisonError("need at least two strengths")
    s = np.array(sorted(tracks), dtype=float)
    if np.ptp(s) == 0:
        raise ComparisonError("strengths have zero variance")
    mags = np.array([magnitude(tracks[k], feature, interval) for k in sorted(tracks)])
    ds = s - s.mean()
    slope = float(ds @ (mags - mags.mean()) / (ds @ ds))
    intercept = float(mags.mean() - slope * s.mean())
    resid = mags - (intercept + slope * s)
    ss_tot = float(((mags - mags.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    r2 = min(1.0, max(0.0, r2))
    return StrengthGain(50.0 * slope, intercept, r2, feature,
                        {float(k): float(m) for k, m in zip(s, mags)})

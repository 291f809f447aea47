"""Session analysis and real-vs-virtual comparison."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .acoustics import F0Config, ProsodyContours, prosody_contours
from .comparison import (
    ComparisonError,
    StrengthGain,
    correlation_matrix,
    estimate_strength_gain,
)
from .facial_metrics import (
    EyebrowConfig,
    calibration_from_track,
    eyebrow_track,
    normalize_to_first_frame,
)
from .filtering import SgConfig, smooth_landmarks
from .head_pose import CameraIntrinsics, FaceModel3D, PoseError, pitch_track
from .io import InputError, PathLike, read_landmark_file, read_wav
from .types import MotionTrack, SessionManifest, ValidationError

METRICS = ("pitch", "eyebrow")
METRIC_TITLES = {"pitch": "Head rotation", "eyebrow": "Eyebrow raise"}


class StageError(RuntimeError):
    """A pipeline stage failed; ``numerical`` separates solver failures from bad input."""

    def __init__(self, stage: str, cause: BaseException, numerical: bool = False):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.numerical = numerical


@dataclass(frozen=True, eq=False)
class AnalysisConfig:
    sg: SgConfig = SgConfig()
    model: FaceModel3D = field(default_factory=FaceModel3D)
    camera: Optional[CameraIntrinsics] = None
    image_size: tuple[int, int] = (1920, 1080)
    eyebrow: EyebrowConfig = EyebrowConfig()
    f0: F0Config = F0Config()
    interocular_mm: Optional[float] = None  # overrides the manifest value

    def camera_for(self, manifest: SessionManifest) -> CameraIntrinsics:
        if self.camera is not None:
            return self.camera
        if manifest.camera:
            return CameraIntrinsics(**manifest.camera)
        return CameraIntrinsics.from_image_size(*self.image_size)


@dataclass(eq=False)
class AnalysisResult:
    label: str
    pitch: MotionTrack
    eyebrow: MotionTrack
    contours: Optional[ProsodyContours] = None
    waveform: Optional[MotionTrack] = None  # peak |amplitude| per contour hop
    strength_percent: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "strength_percent": self.strength_percent,
            "pitch": track_to_dict(self.pitch),
            "eyebrow": track_to_dict(self.eyebrow),
            "contours": None,
            "waveform": None if self.waveform is None else track_to_dict(self.waveform),
            "provenance": self.provenance,
        }
        if self.contours is not None:
            d["contours"] = {"f0": track_to_dict(self.contours.f0),
                             "intensity": track_to_dict(self.contours.intensity)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisResult":
        contours = None
        if d.get("contours"):
            contours = ProsodyContours(track_from_dict(d["contours"]["f0"]),
                                       track_from_dict(d["contours"]["intensity"]))
        return cls(
            label=d["label"],
            pitch=track_from_dict(d["pitch"]),
            eyebrow=track_from_dict(d["eyebrow"]),
            contours=contours,
            waveform=None if d.get("waveform") is None else track_from_dict(d["waveform"]),
            strength_percent=d.get("strength_percent"),
            provenance=d.get("provenance", {}),
        )

    def __eq__(self, other):
        if not isinstance(other, AnalysisResult):
            return NotImplemented
        return dumps(self.to_dict()) == dumps(other.to_dict())


def track_to_dict(t: MotionTrack) -> dict:
    # gaps serialise as null
    return {"fps": t.fps, "unit": t.unit, "rest_value": _num(t.rest_value),
            "start_time": t.start_time, "values": [_num(v) for v in t.values]}


def track_from_dict(d: dict) -> MotionTrack:
    vals = [np.nan if v is None else v for v in d["values"]]
    rest = d.get("rest_value")
    return MotionTrack(d["fps"], vals, d["unit"], np.nan if rest is None else rest,
                       d.get("start_time", 0.0))


def _num(v: float):
    v = float(v)
    return None if np.isnan(v) else v


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def save_result(result: AnalysisResult, path: PathLike) -> None:
    Path(path).write_text(dumps(result.to_dict()) + "\n", encoding="utf-8")


def load_result(path: PathLike) -> AnalysisResult:
    try:
        return AnalysisResult.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise InputError("result file not found", path) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed result file ({exc})", path) from None


def _envelope(samples: np.ndarray, sr: float, hop: float) -> MotionTrack:
    step = max(1, int(round(hop * sr)))
    n = samples.size // step
    peaks = np.abs(samples[:n * step]).reshape(n, step).max(axis=1) if n else np.zeros(0)
    return MotionTrack(sr / step, peaks, "dimensionless", rest_value=0.0)


def analyze(manifest: SessionManifest, config: AnalysisConfig = AnalysisConfig()) -> AnalysisResult:
    """Landmarks (and optional audio) of one session to normalised motion tracks.

    Stages: read, smooth, pose, calibrate, eyebrow, normalise, audio.
    """
    try:
        track = read_landmark_file(manifest.landmark_path)
    except (InputError, ValidationError, OSError) as exc:
        raise StageError("read", exc) from exc
    try:
        smoothed = smooth_landmarks(track, config.sg)
    except ValidationError as exc:
        raise StageError("smooth", exc) from exc
    cam = config.camera_for(manifest)
    try:
        pitch = pitch_track(smoothed, config.model, cam)
    except PoseError as exc:
        raise StageError("pose", exc, numerical=True) from exc
    interocular = config.interocular_mm or manifest.interocular_mm
    try:
        scale = calibration_from_track(smoothed, config.eyebrow, interocular)
        brow = eyebrow_track(smoothed, pitch, config.eyebrow, scale)
    except ValidationError as exc:
        raise StageError("eyebrow", exc) from exc
    pitch_n = normalize_to_first_frame(pitch)
    brow_n = normalize_to_first_frame(brow)

    contours = waveform = None
    if manifest.audio_path is not None:
        try:
            audio = read_wav(manifest.audio_path)
            contours = prosody_contours(audio, config.f0)
            waveform = _envelope(audio.samples, audio.sample_rate, config.f0.hop)
        except (InputError, ValidationError) as exc:
            raise StageError("audio", exc) from exc

    provenance = {
        "version": __version__,
        "sg": asdict(config.sg),
        "model": config.model.to_dict(),
        "camera": cam.to_dict(),
        "eyebrow": {**asdict(config.eyebrow),
                    "interocular_indices": list(config.eyebrow.interocular_indices)},
        "calibration": {"mm_per_pixel": scale.mm_per_pixel, "interocular_mm": interocular},
        "f0": asdict(config.f0),
        "landmark_file": Path(manifest.landmark_path).name,
        "audio_file": None if manifest.audio_path is None else Path(manifest.audio_path).name,
        "frames": len(track),
        "fps": track.fps,
    }
    return AnalysisResult(manifest.label, pitch_n, brow_n, contours, waveform,
                          manifest.strength_percent, provenance)


# -- comparison reports ----------------------------------------------------

def compare_results(
    real: AnalysisResult,
    vh: Sequence[tuple[float, AnalysisResult]],
    *,
    feature: str = "peak-to-peak",
    focus_interval: Optional[tuple[float, float]] = None,
) -> dict:
    """Correlations of every virtual-human strength against the real talker."""
    cells: dict = {}
    pairs = []
    notes = []
    gains: dict = {}
    for metric in METRICS:
        real_track = getattr(real, metric)
        tracks = {float(s): getattr(r, metric) for s, r in vh}
        matrix = correlation_matrix(real_track, tracks, (real.label, "VH"))
        cells[metric] = {}
        for s, cell in matrix.items():
            cells[metric][f"{s:g}"] = cell.to_dict()
            if cell.resampled:
                notes.append(f"{metric} {s:g}%: resampled to common fps")
            if cell.report is not None:
                pairs.append({"metric": metric, "strength": s, **cell.report.to_dict()})
            else:
                pairs.append({"metric": metric, "strength": s, "error": cell.error})
        try:
            gains[metric] = estimate_strength_gain(tracks, feature, focus_interval).to_dict()
        except ComparisonError as exc:
            gains[metric] = {"error": str(exc)}
    strengths = sorted({float(s) for s, _ in vh}, reverse=True)
    return {
        "label": real.label,
        "strengths": strengths,
        "pairs": pairs,
        "cells": cells,
        "gains": gains,
        "metadata": {
            "feature": feature,
            "focus_interval": None if focus_interval is None else list(focus_interval),
            "resampled": notes,
        },
        "provenance": {
            "real": real.provenance,
            "vh": {f"{s:g}": r.provenance for s, r in vh},
        },
    }


def format_table(reports: Sequence[dict], decimals: int = 2) -> str:
    """Plain-text correlation table: one row per real session, one block per metric."""
    strengths = sorted({s for rep in reports for s in rep["strengths"]}, reverse=True)
    label_w = max([len("Strength [%]")] + [len(f'Focus "{r["label"]}"') for r in reports]) + 2
    cell_w = max(6, decimals + 4)
    gap = "    "
    block_w = cell_w * len(strengths)

    lines = [" " * label_w + gap.join(METRIC_TITLES[m].ljust(block_w) for m in METRICS).rstrip()]
    head = "".join(f"{s:g}".rjust(cell_w) for s in strengths)
    lines.append("Strength [%]".ljust(label_w) + gap.join(head for _ in METRICS))
    for rep in reports:
        blocks = []
        for m in METRICS:
            row = ""
            for s in strengths:
                cell = rep["cells"][m].get(f"{s:g}")
                if cell is None or "r" not in cell:
                    row += "n/a".rjust(cell_w)
                else:
                    row += f"{cell['r']:.{decimals}f}".rjust(cell_w)
            blocks.append(row)
        lines.append(f'Focus "{rep["label"]}"'.ljust(label_w) + gap.join(blocks))
    ps = [p["p"] for rep in reports for p in rep["pairs"] if "p" in p]
    if ps:
        worst = max(ps)
        lines.append("")
        lines.append(f"Pearson's r, real vs. virtual human; max p = {worst:.3g}"
                     + (" (all p < 0.001)" if worst < 0.001 else ""))
    gain_lines = []
    for rep in reports:
        for m in METRICS:
            g = rep["gains"].get(m, {})
            if "per_50_delta" in g:
                unit = "deg" if m == "pitch" else "mm"
                gain_lines.append(
                    f'{rep["label"]}: {METRIC_TITLES[m].lower()} {g["per_50_delta"]:+.3f} {unit} '
                    f'per 50% (R^2 = {g["fit_r2"]:.3f}, {g["feature"]})')
    if gain_lines:
        lines.append("Strength gain estimates:")
        lines.extend("  " + s for s in gain_lines)
    return "\n".join(lines) + "\n"


def compare_sessions(
    real: AnalysisResult,
    vh: Sequence[tuple[float, AnalysisResult]],
    out_dir: PathLike,
    *,
    feature: str = "peak-to-peak",
    focus_interval: Optional[tuple[float, float]] = None,
) -> dict:
    """Write ``report.json`` and ``table.txt`` into ``out_dir``; return the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = compare_results(real, vh, feature=feature, focus_interval=focus_interval)
    (out / "report.json").write_text(dumps(report) + "\n", encoding="utf-8")
    (out / "table.txt").write_text(format_table([report]), encoding="utf-8")
    return report

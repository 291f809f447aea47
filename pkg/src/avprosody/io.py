"""Readers and writers: landmark CSV/JSON, WAV audio, session manifests.

Landmark CSV layout (UTF-8, one row per frame)::

    # fps=30
    frame,t,x0,y0,x1,y1,...,x67,y67
    0,0.0,312.5,401.2,...

The ``# fps=`` comment is optional; without it the frame rate is taken
from the timestamp spacing.
"""

from __future__ import annotations

import csv
import json
import math
import os
import wave
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .acoustics import AudioBuffer
from .types import N_LANDMARKS, LandmarkTrack, SessionManifest, ValidationError, validate_track

PathLike = Union[str, os.PathLike]

CSV_COLUMNS = ["frame", "t"] + [f"{axis}{i}" for i in range(N_LANDMARKS) for axis in "xy"]


class InputError(ValueError):
    """A malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, path: Optional[PathLike] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


def _fmt(x: float) -> str:
    return repr(float(x))


# -- landmarks -------------------------------------------------------------

def write_landmark_csv(track: LandmarkTrack, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# fps={_fmt(track.fps)}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i, frame in enumerate(track.frames):
            cells = [str(i), _fmt(frame.t)] + [_fmt(v) for v in frame.points.reshape(-1)]
            fh.write(",".join(cells) + "\n")


def _infer_fps(times: np.ndarray, path) -> float:
    if times.size < 2:
        raise InputError("cannot infer fps from a single frame; add a '# fps=' line", path)
    dt = np.median(np.diff(times))
    if not dt > 0:
        raise InputError("timestamps are not increasing", path)
    return float(1.0 / dt)


def read_landmark_csv(path: PathLike, fps: Optional[float] = None) -> LandmarkTrack:
    header_fps = None
    header = None
    rows: list[list[float]] = []
    header_line = 0
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            line = reader.line_num
            if not row or not "".join(row).strip():
                continue
            if row[0].startswith("#"):
                text = ",".join(row)[1:].strip()
                if text.startswith("fps="):
                    try:
                        header_fps = float(text[4:])
                    except ValueError:
                        raise InputError(f"bad fps comment {text!r}", path, line) from None
                continue
            if header is None:
                header = [c.strip() for c in row]
                header_line = line
                if header[:2] != ["frame", "t"]:
                    raise InputError("malformed header: must start with 'frame,t'", path, line)
                if header != CSV_COLUMNS:
                    missing = [c for c in CSV_COLUMNS if c not in header]
                    extra = [c for c in header if c not in CSV_COLUMNS]
                    detail = []
                    if missing:
                        detail.append("missing column " + ", ".join(missing))
                    if extra:
                        detail.append("unexpected column " + ", ".join(extra))
                    if not detail:
                        detail.append("columns out of order")
                    raise InputError(
                        f"malformed header ({len(header)} columns, expected {len(CSV_COLUMNS)}): "
                        + "; ".join(detail), path, line)
                continue
            if len(row) != len(CSV_COLUMNS):
                raise InputError(
                    f"wrong column count: {len(row)} (expected {len(CSV_COLUMNS)})", path, line)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InputError(f"unparseable cell ({exc})", path, line) from None
            bad = [CSV_COLUMNS[j] for j, v in enumerate(vals) if not math.isfinite(v)]
            if bad:
                raise InputError(f"non-finite value in column {bad[0]}", path, line)
            rows.append(vals)
    if header is None:
        raise InputError("missing header", path)
    if not rows:
        raise InputError("no frames", path, header_line)
    data = np.array(rows)
    times = data[:, 1]
    rate = fps or header_fps or _infer_fps(times, path)
    track = LandmarkTrack.from_arrays(rate, data[:, 2:].reshape(-1, N_LANDMARKS, 2), times)
    try:
        return validate_track(track)
    except ValidationError as exc:
        line = None if exc.frame is None else header_line + 1 + exc.frame
        raise InputError(f"inconsistent timestamps or values: {exc}", path, line) from None


def write_landmark_json(track: LandmarkTrack, path: PathLike) -> None:
    doc = {
        "fps": track.fps,
        "frames": [{"frame": i, "t": f.t, "points": f.points.tolist()}
                   for i, f in enumerate(track.frames)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def read_landmark_json(path: PathLike, fps: Optional[float] = None) -> LandmarkTrack:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    try:
        frames = doc["frames"]
        times = np.array([float(f["t"]) for f in frames])
        points = [np.array(f["points"], dtype=float) for f in frames]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed landmark JSON ({exc})", path) from None
    for k, p in enumerate(points):
        if p.shape != (N_LANDMARKS, 2):
            raise InputError(f"wrong point count at frame {k}: shape {p.shape}", path)
    rate = fps or doc.get("fps") or _infer_fps(times, path)
    track = LandmarkTrack.from_arrays(rate, np.stack(points), times)
    try:
        return validate_track(track)
    except ValidationError as exc:
        raise InputError(str(exc), path) from None


def read_landmark_file(path: PathLike, fps: Optional[float] = None) -> LandmarkTrack:
    """Read a landmark track, choosing CSV or JSON by file extension."""
    p = Path(path)
    if not p.exists():
        raise InputError("landmark file not found", path)
    if p.suffix.lower() == ".json":
        return read_landmark_json(p, fps)
    return read_landmark_csv(p, fps)


def write_landmark_file(track: LandmarkTrack, path: PathLike) -> None:
    if Path(path).suffix.lower() == ".json":
        write_landmark_json(track, path)
    else:
        write_landmark_csv(track, path)


# -- audio -----------------------------------------------------------------

def read_wav(path: PathLike) -> AudioBuffer:
    """16-bit PCM WAV to a mono buffer in [-1, 1]; channels are averaged."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise InputError(f"unreadable WAV: {exc}", path) from None
    except FileNotFoundError:
        raise InputError("audio file not found", path) from None
    if width != 2:
        raise InputError(f"only 16-bit PCM is supported (got {8 * width}-bit)", path)
    data = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(float(rate), data)


def write_wav(audio: AudioBuffer, path: PathLike) -> None:
    pcm = np.clip(np.round(audio.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(audio.sample_rate)))
        w.writeframes(pcm.tobytes())


# -- manifests -------------------------------------------------------------

def manifest_to_dict(m: SessionManifest) -> dict:
    d = {"label": m.label, "landmark_path": m.landmark_path,
         "interocular_mm": m.interocular_mm}
    if m.audio_path is not None:
        d["audio_path"] = m.audio_path
    if m.strength_percent is not None:
        d["strength_percent"] = m.strength_percent
    if m.camera is not None:
        d["camera"] = dict(m.camera)
    return d


def write_manifest(m: SessionManifest, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest_to_dict(m), fh, indent=2)
        fh.write("\n")


def read_manifest(path: PathLike) -> SessionManifest:
    """Load a manifest; relative file paths resolve against its directory."""
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise InputError("manifest not found", path) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    base = Path(path).resolve().parent

    def resolve(p):
        return None if p is None else str(base / p)

    try:
        return SessionManifest(
            label=str(d["label"]),
            landmark_path=resolve(d["landmark_path"]),
            interocular_mm=float(d["interocular_mm"]),
            audio_path=resolve(d.get("audio_path")),
            strength_percent=(None if d.get("strength_percent") is None
                              else float(d["strength_percent"])),
            camera=d.get("camera"),
        )
    except KeyError as exc:
        raise InputError(f"manifest missing field {exc}", path) from None
    except ValidationError as exc:
        raise InputError(str(exc), path) from None

"""Expression-strength scaling and synthetic narrow-focus stimuli.

Synthetic faces live in "model units" shared with :class:`FaceModel3D`
(nominally 0.2 mm each; see :data:`MM_PER_MODEL_UNIT`).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .facial_metrics import EyebrowConfig
from .head_pose import CameraIntrinsics, FaceModel3D, Pose, project_points
from .types import BROWS, LandmarkTrack, MotionTrack, ValidationError

MM_PER_MODEL_UNIT = 0.2


@dataclass(frozen=True)
class ExpressionStrength:
    percent: float

    def __post_init__(self):
        if not 0 <= self.percent <= 200:
            raise ValidationError(f"expression strength must be in [0, 200] %, got {self.percent}")


def apply_strength(base: MotionTrack, s) -> MotionTrack:
    """Scale excursions about the rest value: 0 % freezes, 200 % doubles."""
    if not isinstance(s, ExpressionStrength):
        s = ExpressionStrength(float(s))
    rest = base.rest_value
    if np.isnan(rest):
        raise ValidationError("track has no rest value to scale about")
    gain = s.percent / 100.0
    return base.with_values(rest + gain * (base.values - rest))


@dataclass(frozen=True)
class FocusStimulusSpec:
    duration: float = 3.0
    fps: float = 60.0
    focus_interval: tuple[float, float] = (1.0, 2.2)
    pre_raise_amp: float = 1.5
    focal_pitch_amp: float = 4.0
    brow_raise_amp: float = 2.5
    idiosyncrasy_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "focus_interval", tuple(float(v) for v in self.focus_interval))
        start, end = self.focus_interval
        if not (self.duration > 0 and self.fps > 0):
            raise ValidationError("duration and fps must be positive")
        if not 0 <= start < end <= self.duration:
            raise ValidationError("focus interval must satisfy 0 <= start < end <= duration")
        if min(self.pre_raise_amp, self.focal_pitch_amp, self.brow_raise_amp) < 0:
            raise ValidationError("amplitudes must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["focus_interval"] = list(self.focus_interval)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FocusStimulusSpec":
        d = dict(d)
        if "focus_interval" in d:
            d["focus_interval"] = tuple(d["focus_interval"])
        return cls(**d)


def _rise(t, t0, t1):
    """Raised-cosine step from 0 (t <= t0) to 1 (t >= t1)."""
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def _plateau(t, a, b, c, d):
    """0 before a, cosine rise to 1 by b, hold to c, cosine fall to 0 at d."""
    return _rise(t, a, b) * (1.0 - _rise(t, c, d))


def synth_focus_motion(spec: FocusStimulusSpec) -> tuple[MotionTrack, MotionTrack]:
    """Pitch (degrees) and brow (mm) trajectories for one focus utterance.

    Both rest at 0. The head rises by ``pre_raise_amp`` and settles back by
    the focus onset, then dips by ``focal_pitch_amp`` with a flat bottom
    over the middle third of the focus interval. The brow rises before the
    onset, holds through the focus and releases afterwards. The seed sets
    the talker-specific lead and release times.
    """
    rng = np.random.default_rng(spec.idiosyncrasy_seed)
    n = int(np.floor(spec.duration * spec.fps + 1e-9)) + 1
    t = np.arange(n) / spec.fps
    start, end = spec.focus_interval
    ramp = (end - start) / 3.0

    raise_lead = min(start, rng.uniform(0.5, 0.9))
    brow_lead = min(start, rng.uniform(0.4, 0.7))
    release = min(spec.duration - end, rng.uniform(0.5, 0.8))

    pitch = np.zeros(n)
    if raise_lead > 0:
        a = start - raise_lead
        pitch += spec.pre_raise_amp * _plateau(t, a, a + raise_lead / 2, a + raise_lead / 2, start)
    pitch -= spec.focal_pitch_amp * _plateau(t, start, start + ramp, end - ramp, end)

    rise_start = start - brow_lead if brow_lead > 0 else start
    rise_end = start if brow_lead > 0 else start + ramp
    if release > 0:
        brow_shape = _plateau(t, rise_start, rise_end, end, end + release)
    else:
        brow_shape = _rise(t, rise_start, rise_end)
    brow = spec.brow_raise_amp * brow_shape

    return (MotionTrack(spec.fps, pitch, "degrees", rest_value=0.0),
            MotionTrack(spec.fps, brow, "millimeters", rest_value=0.0))


def generic_face_68() -> np.ndarray:
    """A symmetric 68-point 3-D face consistent with the default pose model.

    Landmark 21 (inner end of the subject's right brow) sits straight above
    landmark 39 (the inner eye corner) at the same depth.
    """
    pts = np.zeros((68, 3))
    # jaw line: ear level, down to the chin, back up
    k = np.arange(17)
    s = np.sin(np.pi * k / 16)
    pts[:17, 0] = -300.0 * np.cos(np.pi * k / 16)
    pts[:17, 1] = 170.0 - 500.0 * s
    pts[:17, 2] = -65.0 - 235.0 * (1.0 - s)
    right_brow = [(-270, 230, -170), (-220, 265, -130), (-165, 280, -110),
                  (-115, 275, -105), (-80, 260, -110)]
    nose = [(0, 200, -70), (0, 135, -45), (0, 70, -20), (0, 0, 0),
            (-60, -30, -50), (-30, -40, -35), (0, -45, -30), (30, -40, -35), (60, -30, -50)]
    right_eye = [(-225, 170, -135), (-180, 195, -118), (-125, 195, -112),
                 (-80, 170, -110), (-125, 150, -112), (-180, 150, -118)]
    mouth = [(-150, -150, -125), (-95, -120, -95), (-40, -105, -80), (0, -110, -78),
             (40, -105, -80), (95, -120, -95), (150, -150, -125), (95, -185, -100),
             (40, -200, -88), (0, -205, -85), (-40, -200, -88), (-95, -185, -100),
             (-125, -150, -115), (-40, -140, -90), (0, -140, -88), (40, -140, -90),
             (125, -150, -115), (40, -160, -90), (0, -160, -88), (-40, -160, -90)]
    mirror = np.array([-1.0, 1.0, 1.0])
    pts[17:22] = right_brow
    pts[22:27] = (np.array(right_brow) * mirror)[::-1]
    pts[27:36] = nose
    pts[36:42] = right_eye
    # left eye mirrors the right: 42 inner, 45 outer
    pts[42:48] = (np.array(right_eye) * mirror)[[3, 2, 1, 0, 5, 4]]
    pts[48:68] = mouth
    return pts


def synth_camera() -> CameraIntrinsics:
    """Long-focus 1920x1080 camera used for rendered stimuli.

    Paired with :data:`SYNTH_DISTANCE` the face spans about 220 px, with
    perspective weak enough that the cosine pitch compensation holds to
    well under 1 % (at a 0.8 m webcam distance the residual is ~3 %).
    """
    return CameraIntrinsics(19200.0, 19200.0, 960.0, 540.0)


SYNTH_DISTANCE = 40000.0  # model units, about 8 m


def synth_interocular_mm(cfg: EyebrowConfig = EyebrowConfig()) -> float:
    a, b = cfg.interocular_indices
    face = generic_face_68()
    return float(np.linalg.norm(face[a] - face[b]) * MM_PER_MODEL_UNIT)


def render_landmarks(
    pitch: MotionTrack,
    brow: MotionTrack,
    model: FaceModel3D = FaceModel3D(),
    cam: CameraIntrinsics = None,
    *,
    distance: float = SYNTH_DISTANCE,
) -> LandmarkTrack:
    """Project the generic face posed by ``pitch`` with brows lifted by ``brow`` mm.

    The brow lift is applied along the head's up axis before projection.
    """
    if cam is None:
        cam = synth_camera()
    if len(pitch) != len(brow):
        raise ValidationError("pitch and brow trajectories must have equal length")
    face = generic_face_68()
    face[list(model.indices)] = model.points
    brow_idx = list(BROWS)
    # centre the face on the principal axis
    t = np.array([0.0, 0.0, distance])
    frames = np.empty((len(pitch), 68, 2))
    for k, (p, b) in enumerate(zip(pitch.values, brow.values)):
        pts = face.copy()
        pts[brow_idx, 1] += b / MM_PER_MODEL_UNIT
        frames[k] = project_points(pts, Pose(p, 0.0, 0.0, t), cam)
    return LandmarkTrack.from_arrays(pitch.fps, frames)


def synth_landmark_track(
    spec: FocusStimulusSpec,
    model: FaceModel3D = FaceModel3D(),
    cam: CameraIntrinsics = None,
    strength: float = 100.0,
    noise_px: float = 0.0,
    noise_seed: int = 0,
) -> LandmarkTrack:
    """Render the focus trajectories of ``spec`` at the given expression strength.

    ``noise_px`` adds i.i.d. Gaussian jitter to every landmark coordinate,
    mimicking detector noise.
    """
    pitch, brow = synth_focus_motion(spec)
    s = ExpressionStrength(strength)
    track = render_landmarks(apply_strength(pitch, s), apply_strength(brow, s), model, cam)
    if noise_px > 0:
        rng = np.random.default_rng(noise_seed)
        coords = track.coords + rng.normal(0.0, noise_px, track.coords.shape)
        track = LandmarkTrack.from_arrays(track.fps, coords, track.times)
    return track


def synth_focus_audio(spec: FocusStimulusSpec, sample_rate: float = 16000.0,
                      base_f0: float = 120.0, focal_f0: float = 170.0):
    """Harmonic voice-like signal whose F0 and level peak on the focus interval.

    Voicing starts 0.2 s in and stops 0.2 s before the end.
    """
    from .acoustics import AudioBuffer

    n = int(round(spec.duration * sample_rate))
    t = np.arange(n) / sample_rate
    start, end = spec.focus_interval
    ramp = (end - start) / 3.0
    focus = _plateau(t, start, start + ramp, end - ramp, end)
    f0 = base_f0 + (focal_f0 - base_f0) * focus
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    harmonics = np.arange(1, 11)
    x = (np.cos(np.outer(phase, harmonics)) / harmonics).sum(axis=1)
    x /= np.abs(x).max()
    voiced = _plateau(t, 0.2, 0.25, spec.duration - 0.25, spec.duration - 0.2)
    level = 0.25 + 0.45 * focus
    return AudioBuffer(sample_rate, x * voiced * level)

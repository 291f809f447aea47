"""Audiovisual prosody analysis of real and virtual talkers.

Head pitch from six-landmark PnP, pitch-compensated eyebrow raise in mm,
F0/intensity contours, Pearson comparisons across expression strengths.
"""

__version__ = "0.1.0"

from .acoustics import AudioBuffer, F0Config, ProsodyContours, f0_contour, intensity_contour, prosody_contours
from .comparison import (
    ComparisonError,
    ComparisonReport,
    StrengthGain,
    correlation_matrix,
    estimate_strength_gain,
    pearson,
    resample,
)
from .facial_metrics import (
    CalibrationScale,
    EyebrowConfig,
    calibration_from_track,
    compensate_pitch,
    eyebrow_raise_raw,
    eyebrow_track,
    normalize_to_first_frame,
)
from .filtering import SgConfig, sg_coefficients, smooth_landmarks, smooth_scalar
from .head_pose import CameraIntrinsics, FaceModel3D, Pose, PoseError, pitch_track, project, solve_pnp
from .io import InputError, read_landmark_file, read_manifest, read_wav, write_landmark_file
from .pipeline import AnalysisConfig, AnalysisResult, analyze, compare_sessions
from .synthesis import (
    ExpressionStrength,
    FocusStimulusSpec,
    apply_strength,
    synth_focus_motion,
    synth_landmark_track,
)
from .types import (
    LandmarkFrame,
    LandmarkTrack,
    MotionTrack,
    SessionManifest,
    ValidationError,
    validate_track,
)

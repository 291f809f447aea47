import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avprosody.comparison import estimate_strength_gain, magnitude, pearson
from avprosody.facial_metrics import EyebrowConfig
from avprosody.head_pose import FaceModel3D
from avprosody.synthesis import (
    ExpressionStrength,
    FocusStimulusSpec,
    apply_strength,
    generic_face_68,
    synth_camera,
    synth_focus_audio,
    synth_focus_motion,
    synth_interocular_mm,
    synth_landmark_track,
)
from avprosody.types import MotionTrack, ValidationError


def base_track(rng, n=80, rest=1.5):
    return MotionTrack(30.0, rest + rng.standard_normal(n).cumsum(), "degrees", rest_value=rest)


def test_strength_identity_zero_and_double(rng):
    base = base_track(rng)
    assert apply_strength(base, 100) == base
    frozen = apply_strength(base, 0)
    np.testing.assert_array_equal(frozen.values, base.rest_value)
    assert np.var(frozen.values) == 0.0
    doubled = apply_strength(base, ExpressionStrength(200))
    np.testing.assert_allclose(doubled.values - 1.5, 2 * (base.values - 1.5), atol=1e-12)
    assert (doubled.unit, doubled.fps, doubled.rest_value) == (base.unit, base.fps, base.rest_value)


def test_strength_range_enforced():
    with pytest.raises(ValidationError):
        ExpressionStrength(-1)
    with pytest.raises(ValidationError):
        ExpressionStrength(201)


@given(st.floats(0, 200), st.floats(0, 200))
@settings(max_examples=50)
def test_strength_composes_multiplicatively(s1, s2):
    base = base_track(np.random.default_rng(1))
    if s1 * s2 / 100 > 200:
        return
    twice = apply_strength(apply_strength(base, s1), s2)
    once = apply_strength(base, s1 * s2 / 100)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


@pytest.mark.parametrize("s", [25, 50, 100, 150, 200])
def test_strength_scales_peak_to_peak(rng, s):
    base = base_track(rng)
    assert magnitude(apply_strength(base, s)) == pytest.approx(s / 100 * magnitude(base), rel=1e-12)
    assert pearson(base, apply_strength(base, s)).r == pytest.approx(1.0, abs=1e-12)


def test_zero_amplitude_spec_is_flat():
    pitch, brow = synth_focus_motion(FocusStimulusSpec(pre_raise_amp=0, focal_pitch_amp=0, brow_raise_amp=0))
    assert not pitch.values.any() and not brow.values.any()


def test_focus_shape():
    spec = FocusStimulusSpec()
    pitch, brow = synth_focus_motion(spec)
    k = int(np.argmin(pitch.values))
    assert spec.focus_interval[0] <= pitch.times[k] <= spec.focus_interval[1]
    assert pitch.values[k] == pytest.approx(pitch.rest_value - 4.0, abs=1e-9)
    # head rises before focus onset
    before = pitch.times < spec.focus_interval[0]
    assert pitch.values[before].max() == pytest.approx(1.5, abs=1e-3)
    # brow is up through the focus interval and released by the end
    inside = (brow.times >= spec.focus_interval[0]) & (brow.times <= spec.focus_interval[1])
    np.testing.assert_allclose(brow.values[inside], 2.5)
    assert brow.values[-1] == pytest.approx(0.0, abs=1e-12)


def test_seed_determinism():
    a = synth_focus_motion(FocusStimulusSpec(idiosyncrasy_seed=7))
    b = synth_focus_motion(FocusStimulusSpec(idiosyncrasy_seed=7))
    c = synth_focus_motion(FocusStimulusSpec(idiosyncrasy_seed=8))
    assert a[0] == b[0] and a[1] == b[1]
    assert a[0] != c[0]


def test_spec_validation_and_dict_round_trip():
    spec = FocusStimulusSpec(duration=2.0, focus_interval=(0.5, 1.5), idiosyncrasy_seed=3)
    assert FocusStimulusSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValidationError):
        FocusStimulusSpec(duration=1.0, focus_interval=(0.5, 1.5))
    with pytest.raises(ValidationError):
        FocusStimulusSpec(brow_raise_amp=-1)


def test_generic_face_consistent_with_pose_model():
    face = generic_face_68()
    model = FaceModel3D()
    np.testing.assert_allclose(face[list(model.indices)], model.points, atol=1e-9)
    cfg = EyebrowConfig()
    d = face[cfg.brow_inner_index] - face[cfg.eye_inner_corner_index]
    assert d[0] == 0 and d[2] == 0 and d[1] > 0
    assert synth_interocular_mm() == pytest.approx(32.0)


def test_landmark_track_shape_and_noise():
    spec = FocusStimulusSpec(duration=1.0, focus_interval=(0.3, 0.8))
    clean = synth_landmark_track(spec)
    assert clean.coords.shape == (61, 68, 2)
    noisy = synth_landmark_track(spec, noise_px=0.5, noise_seed=1)
    assert 0.3 < np.std(noisy.coords - clean.coords) < 0.7
    assert synth_landmark_track(spec, noise_px=0.5, noise_seed=1) == noisy
    # face sits near the principal point
    cam = synth_camera()
    np.testing.assert_allclose(clean.coords[0, 30], [cam.cx, cam.cy], atol=1e-6)


def test_strength_rendering_implies_linear_gain():
    spec = FocusStimulusSpec()
    pitch, _ = synth_focus_motion(spec)
    tracks = {s: apply_strength(pitch, s) for s in (50.0, 100.0, 150.0, 200.0)}
    g = estimate_strength_gain(tracks, "focal-extremum", spec.focus_interval)
    assert g.per_50_delta == pytest.approx(2.0, rel=1e-12)


def test_focus_audio():
    audio = synth_focus_audio(FocusStimulusSpec())
    assert audio.sample_rate == 16000.0
    assert audio.duration == pytest.approx(3.0)
    assert np.abs(audio.samples).max() <= 1.0

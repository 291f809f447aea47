"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -m acceptance``; the verdict lines bypass output capture.
"""

import json
import time

import mpmath
import numpy as np
import pytest

from avprosody.acoustics import AudioBuffer, f0_contour, intensity_contour
from avprosody.cli import main
from avprosody.comparison import correlation_p_value, pearson
from avprosody.facial_metrics import EyebrowConfig, calibration_from_track, eyebrow_track
from avprosody.filtering import SgConfig, smooth_landmarks, smooth_scalar
from avprosody.head_pose import CameraIntrinsics, FaceModel3D, Pose, pitch_track, project, solve_pnp
from avprosody.synthesis import (
    MM_PER_MODEL_UNIT,
    apply_strength,
    generic_face_68,
    render_landmarks,
    synth_camera,
    synth_interocular_mm,
)
from avprosody.types import BROWS, MotionTrack

from oracles import exact_lsq_weights

pytestmark = pytest.mark.acceptance

# Median pitch error (deg) for 0.5 px landmark noise, fx = 1000, z in [600, 1400].
# Frozen from Monte-Carlo runs of 1000 trials over several seeds (observed 0.103-0.111).
PNP_NOISE_MEDIAN_BOUND = 0.13


@pytest.fixture
def verdict(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {name} ({detail})")
        assert ok, f"criterion {n} failed: {detail}"
    return emit


def test_criterion_1_sg_polynomial_reproduction(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    cfg = SgConfig(13, 2)
    x = np.arange(60.0)
    worst = 0.0
    for _ in range(100):
        deg = rng.integers(0, 3)
        y = np.polyval(rng.uniform(-1, 1, deg + 1), (x - 30) / 10)
        out = smooth_scalar(y, cfg)
        worst = max(worst, np.abs(out[6:-6] - y[6:-6]).max())
    impulse = np.zeros(11)
    impulse[5] = 1.0
    got = smooth_scalar(impulse, SgConfig(5, 2))[3:8][::-1]
    oracle = np.array([float(w) for w in exact_lsq_weights(5, 2)])
    imp_err = max(np.abs(got - oracle).max(), np.abs(oracle - np.array([-3, 12, 17, 12, -3]) / 35).max())
    elapsed = time.perf_counter() - t0
    verdict(1, "SG polynomial reproduction and 5/2 impulse response",
            worst <= 1e-9 and imp_err <= 1e-12 and elapsed < 1.0,
            f"max interior error {worst:.1e}, impulse error {imp_err:.1e}, {elapsed:.2f} s")


def test_criterion_2_pnp_round_trip(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    model, cam = FaceModel3D(), CameraIntrinsics(1000.0, 1000.0)
    ang_err = trans_err = 0.0
    noisy = []
    for _ in range(1000):
        angles = rng.uniform(-30, 30, 3)
        t = np.array([rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(600, 1400)])
        obs = project(model, Pose(*angles, t), cam)
        pose = solve_pnp(obs, model, cam)
        ang_err = max(ang_err, np.abs(np.array(pose.angles) - angles).max())
        trans_err = max(trans_err, np.abs(pose.translation - t).max())
        pose_n = solve_pnp(obs + rng.normal(0, 0.5, obs.shape), model, cam)
        noisy.append(abs(pose_n.pitch - angles[0]))
    med = float(np.median(noisy))
    elapsed = time.perf_counter() - t0
    verdict(2, "PnP round trip, noiseless and 0.5 px noise",
            ang_err <= 0.01 and trans_err <= 0.1 and med <= PNP_NOISE_MEDIAN_BOUND and elapsed < 30,
            f"max angle error {ang_err:.1e} deg, max translation error {trans_err:.1e} mm, "
            f"noisy median pitch error {med:.3f} <= {PNP_NOISE_MEDIAN_BOUND} deg, {elapsed:.1f} s")


def _oracle_compensated_mm(face, pitches, brow_mm, cam, distance):
    """Brow distance from an independent pinhole projection, divided by cos(pitch)."""
    pts = face.copy()
    pts[list(BROWS), 1] += brow_mm / MM_PER_MODEL_UNIT
    a, b = 39, 21
    io = np.linalg.norm(face[39] - face[42]) * MM_PER_MODEL_UNIT
    out = []
    for p in np.radians(pitches):
        c, s = np.cos(p), np.sin(p)
        # nod about the horizontal head axis; camera looks along +z with image y down
        y = pts[:, 1] * c + pts[:, 2] * s
        z = -pts[:, 1] * s + pts[:, 2] * c
        depth = distance - z
        uv = np.column_stack([cam.fx * pts[:, 0] / depth, -cam.fy * y / depth])
        mm_per_px = io / np.linalg.norm(uv[39] - uv[42])
        out.append(np.linalg.norm(uv[a] - uv[b]) * mm_per_px / c)
    return np.array(out)


def test_criterion_3_cosine_compensation(verdict):
    t0 = time.perf_counter()
    pitches = np.linspace(-15, 15, 61)
    cam = synth_camera()
    from avprosody.synthesis import SYNTH_DISTANCE
    oracle = _oracle_compensated_mm(generic_face_68(), pitches, 2.5, cam, SYNTH_DISTANCE)
    oracle_spread = np.ptp(oracle) / oracle.mean()

    track = render_landmarks(MotionTrack(30.0, pitches, "degrees"),
                             MotionTrack(30.0, np.full(61, 2.5), "millimeters"), cam=cam)
    smoothed = smooth_landmarks(track)
    pitch = pitch_track(smoothed, FaceModel3D(), cam)
    cfg = EyebrowConfig()
    mm = eyebrow_track(smoothed, pitch, cfg, calibration_from_track(smoothed, cfg, synth_interocular_mm()))
    spread = np.ptp(mm.values) / np.mean(mm.values)
    tol = min(0.02, oracle_spread + 0.005)
    elapsed = time.perf_counter() - t0
    verdict(3, "cosine compensation over pitch -15..15 deg",
            spread <= tol and elapsed < 5,
            f"peak-to-peak {100 * spread:.2f}% of mean, projection oracle {100 * oracle_spread:.2f}%, "
            f"tolerance {100 * tol:.2f}%, {elapsed:.2f} s")


def test_criterion_4_acoustics(verdict):
    sr = 16000.0
    t = np.arange(int(1.0 * sr)) / sr
    ks = np.arange(1, 21)
    pulse = AudioBuffer(sr, 0.3 * np.cos(2 * np.pi * 120.0 * np.outer(t, ks)).sum(axis=1) / 20)
    f0 = f0_contour(pulse)
    voiced = f0.values[f0.valid]
    within = float(np.mean(np.abs(voiced - 120.0) <= 1.0)) if voiced.size else 0.0
    octave = int(np.sum((np.abs(voiced - 60.0) < 10) | (np.abs(voiced - 240.0) < 20)))
    shift = intensity_contour(pulse).values - intensity_contour(AudioBuffer(sr, pulse.samples / 2)).values
    shift_err = float(np.abs(shift - 6.02).max())
    verdict(4, "F0 of a 120 Hz pulse train and intensity halving",
            voiced.size > 0 and within >= 0.95 and octave == 0 and shift_err <= 0.01,
            f"{100 * within:.1f}% of {voiced.size} voiced frames within 1 Hz, {octave} octave errors, "
            f"halving shift 6.02 +/- {shift_err:.4f} dB")


def test_criterion_5_affine_invariance(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    zero_var = 0.0
    for _ in range(50):
        n = int(rng.integers(10, 300))
        base = MotionTrack(30.0, rng.normal(0, rng.uniform(0.1, 10), n).cumsum(), "degrees",
                           rest_value=float(rng.uniform(-5, 5)))
        for s in (50, 100, 150, 200):
            worst = max(worst, abs(pearson(base, apply_strength(base, s)).r - 1.0))
        zero_var = max(zero_var, float(np.ptp(apply_strength(base, 0).values)))
    verdict(5, "strength scaling preserves correlation; 0% freezes",
            worst <= 1e-12 and zero_var == 0.0,
            f"max |r - 1| = {worst:.1e}, range at 0% = {zero_var}")


def test_criterion_6_end_to_end(verdict, tmp_path, capsys):
    t0 = time.perf_counter()
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"label": "focus", "focal_pitch_amp": 4.0, "brow_raise_amp": 2.5}))
    assert main(["synth", str(spec), "-o", str(tmp_path / "s"), "--no-audio"]) == 0
    vh = [str(tmp_path / "s" / f"vh_{s}.json") for s in (50, 100, 150, 200)]
    assert main(["compare", str(tmp_path / "s" / "real.json"), *vh, "-o", str(tmp_path / "c"),
                 "--feature", "focal-extremum", "--focus-interval", "1.0,2.2", "--no-plot"]) == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "c" / "report.json").read_text())
    min_r = min(p["r"] for p in report["pairs"])
    g_pitch = report["gains"]["pitch"]["per_50_delta"]
    g_brow = report["gains"]["eyebrow"]["per_50_delta"]
    # constructed per-50% gains: half of the 100% amplitudes
    e_pitch, e_brow = abs(g_pitch / 2.0 - 1), abs(g_brow / 1.25 - 1)
    elapsed = time.perf_counter() - t0
    verdict(6, "synthetic focus stimulus end to end at 50-200%",
            len(report["pairs"]) == 8 and min_r >= 0.99 and e_pitch <= 0.02 and e_brow <= 0.02
            and elapsed < 60,
            f"min r {min_r:.4f}, pitch gain {g_pitch:.3f} deg ({100 * e_pitch:.2f}%), "
            f"brow gain {g_brow:.3f} mm ({100 * e_brow:.2f}%), {elapsed:.1f} s")


def test_criterion_7_report_and_plot(verdict, tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"label": "MANN", "duration": 2.0, "focus_interval": [0.7, 1.5]}))
    assert main(["synth", str(spec), "-o", str(tmp_path / "s")]) == 0
    args = [str(tmp_path / "s" / "real.json")] + [str(tmp_path / "s" / f"vh_{s}.json")
                                                  for s in (50, 100, 150, 200)]
    outputs = []
    for run in ("a", "b"):
        assert main(["compare", *args, "-o", str(tmp_path / run)]) == 0
        outputs.append({n: (tmp_path / run / n).read_bytes()
                        for n in ("table.txt", "report.json", "figure.svg")})
    capsys.readouterr()
    table = outputs[0]["table.txt"].decode().splitlines()
    header_ok = ("Head rotation" in table[0] and "Eyebrow raise" in table[0]
                 and table[1].split()[2:] == ["200", "150", "100", "50"] * 2)
    row = next(line for line in table if line.startswith('Focus "MANN"'))
    cells = len(row.split()) - 2
    panels = outputs[0]["figure.svg"].decode().count('<g class="panel"')
    identical = outputs[0] == outputs[1]
    verdict(7, "compare emits table and three-panel figure reproducibly",
            header_ok and cells == 8 and panels == 3 and identical,
            f"2 blocks x 4 strengths = {cells} cells, {panels} panels, byte-identical={identical}")


def test_criterion_8_statistics(verdict):
    mpmath.mp.dps = 50
    r, n = mpmath.mpf("0.80"), 50
    dof = n - 2
    t = r * mpmath.sqrt(dof / (1 - r * r))
    oracle = float(mpmath.betainc(mpmath.mpf(dof) / 2, mpmath.mpf(1) / 2, 0, dof / (dof + t * t),
                                  regularized=True))
    p = correlation_p_value(0.80, 50)
    rel = abs(p / oracle - 1)
    verdict(8, "p-value for r = 0.80, n = 50",
            p < 0.001 and rel <= 1e-8,
            f"p = {p:.3e}, high-precision oracle {oracle:.3e}, relative difference {rel:.1e}")

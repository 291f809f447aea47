import numpy as np
import pytest

from avprosody.types import LandmarkTrack


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_track(coords, fps=30.0):
    return LandmarkTrack.from_arrays(fps, np.asarray(coords, dtype=float))


@pytest.fixture
def static_track(rng):
    face = rng.uniform(100, 500, (68, 2))
    return make_track(np.repeat(face[None], 20, axis=0))


def write_session(directory, name, spec, strength=None, audio=False, noise_px=0.0, label="focus"):
    """Render a synthetic session into ``directory`` and return its manifest path."""
    from avprosody.io import write_landmark_file, write_manifest, write_wav
    from avprosody.synthesis import (
        synth_camera,
        synth_focus_audio,
        synth_interocular_mm,
        synth_landmark_track,
    )
    from avprosody.types import SessionManifest

    cam = synth_camera()
    track = synth_landmark_track(spec, cam=cam, strength=100.0 if strength is None else strength,
                                 noise_px=noise_px, noise_seed=1)
    write_landmark_file(track, directory / f"{name}.csv")
    audio_name = None
    if audio:
        audio_name = f"{name}.wav"
        write_wav(synth_focus_audio(spec), directory / audio_name)
    path = directory / f"{name}.json"
    write_manifest(SessionManifest(label, f"{name}.csv", synth_interocular_mm(), audio_name,
                                   strength, cam.to_dict()), path)
    return path

"""Rigid head pose from six facial landmarks (Perspective-n-Point).

Conventions
-----------
Model frame: origin at the nose tip, x to the image right of a frontal face,
y up, z toward the camera. Camera frame: x right, y down, z forward along
the optical axis. A frontal face at distance ``d`` therefore maps through
``X_cam = F @ R @ X_model + t`` with ``F = diag(1, -1, -1)`` and
``t = (0, 0, d)``.

``R = Ry(yaw) @ Rx(-pitch) @ Rz(roll)`` (intrinsic yaw, then pitch, then
roll). With this sign choice a positive pitch lifts the chin and a downward
nod is negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lm import ConvergenceError, DegenerateError, levenberg_marquardt
from .types import LandmarkTrack, MotionTrack, ValidationError

__all__ = [
    "CameraIntrinsics",
    "ConvergenceError",
    "DegenerateError",
    "FaceModel3D",
    "Pose",
    "PoseError",
    "pitch_track",
    "project",
    "rotation_matrix",
    "solve_pnp",
]

_FLIP = np.diag([1.0, -1.0, -1.0])
_MIN_DEPTH = 1e-9


class PoseError(RuntimeError):
    """Pose estimation failed for a frame of a track."""

    def __init__(self, message: str, frame: Optional[int] = None, numerical: bool = True):
        super().__init__(message)
        self.frame = frame
        self.numerical = numerical


@dataclass(frozen=True, eq=False)
class FaceModel3D:
    """Rigid 3-D positions of the landmarks used for pose solving."""

    names: tuple[str, ...] = (
        "nose_tip", "chin", "left_eye_outer", "right_eye_outer", "mouth_left", "mouth_right",
    )
    indices: tuple[int, ...] = (30, 8, 36, 45, 48, 54)
    points: np.ndarray = field(default_factory=lambda: np.array([
        [0.0, 0.0, 0.0],
        [0.0, -330.0, -65.0],
        [-225.0, 170.0, -135.0],
        [225.0, 170.0, -135.0],
        [-150.0, -150.0, -125.0],
        [150.0, -150.0, -125.0],
    ]))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] != len(self.indices):
            raise ValidationError("model needs one 3-D point per landmark index")
        if len(self.names) != len(self.indices):
            raise ValidationError("model needs one name per landmark index")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("model points must be finite")
        if any(not 0 <= i < 68 for i in self.indices) or len(set(self.indices)) != len(self.indices):
            raise ValidationError("model landmark indices must be distinct and in 0..67")
        s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if s[-1] <= 1e-6 * s[0]:
            raise ValidationError("model points are coplanar")

    def to_dict(self) -> dict:
        return {"names": list(self.names), "indices": list(self.indices),
                "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FaceModel3D":
        return cls(tuple(d["names"]), tuple(d["indices"]), np.array(d["points"]))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Distortion-free pinhole camera (all values in pixels)."""

    fx: float
    fy: float
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError("focal lengths must be positive")

    @classmethod
    def from_image_size(cls, width: float, height: float) -> "CameraIntrinsics":
        """Webcam approximation: focal length = image width, centered principal point."""
        return cls(float(width), float(width), width / 2.0, height / 2.0)

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass(frozen=True, eq=False)
class Pose:
    pitch: float
    yaw: float
    roll: float
    translation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1000.0]))
    reprojection_rmse: float = 0.0

    def __post_init__(self):
        t = np.array(self.translation, dtype=float).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.pitch, self.yaw, self.roll])

    def _params(self) -> np.ndarray:
        return np.concatenate([np.radians(self.angles), self.translation])


def _wrap_deg(a: float) -> float:
    a = (a + 180.0) % 360.0 - 180.0
    return 180.0 if a == -180.0 else a


def _rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def _drx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[0, 0, 0], [0, -s, -c], [0, c, -s]])


def _dry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[-s, 0, c], [0, 0, 0], [-c, 0, -s]])


def _drz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[-s, -c, 0], [c, -s, 0], [0, 0, 0]])


def rotation_matrix(pitch: float, yaw: float, roll: float) -> np.ndarray:
    """Model-to-head rotation for angles in degrees (before the camera flip)."""
    p, y, r = np.radians([pitch, yaw, roll])
    return _ry(y) @ _rx(-p) @ _rz(r)


def _camera_points(points: np.ndarray, params: np.ndarray) -> np.ndarray:
    p, y, r = params[:3]
    R = _FLIP @ _ry(y) @ _rx(-p) @ _rz(r)
    return points @ R.T + params[3:]


def _pixels(P: np.ndarray, cam: CameraIntrinsics) -> np.ndarray:
    return np.column_stack([cam.fx * P[:, 0] / P[:, 2] + cam.cx,
                            cam.fy * P[:, 1] / P[:, 2] + cam.cy])


def project_points(points, pose: Pose, cam: CameraIntrinsics) -> np.ndarray:
    """Pinhole projection of arbitrary model-frame points, shape (k, 2)."""
    P = _camera_points(np.asarray(points, dtype=float), pose._params())
    if np.any(P[:, 2] <= _MIN_DEPTH):
        raise ValidationError("point at or behind the camera plane")
    return _pixels(P, cam)


def project(model: FaceModel3D, pose: Pose, cam: CameraIntrinsics) -> np.ndarray:
    """Image positions of the model's landmarks, shape (n_points, 2)."""
    return project_points(model.points, pose, cam)


def _residual_fn(model_pts, obs, cam):
    def residual(params):
        P = _camera_points(model_pts, params)
        if np.any(P[:, 2] <= _MIN_DEPTH):
            return np.full(obs.size, np.inf)
        return (_pixels(P, cam) - obs).reshape(-1)
    return residual


def _jacobian_fn(model_pts, cam):
    def jacobian(params):
        p, y, r = params[:3]
        Ry, Rx, Rz = _ry(y), _rx(-p), _rz(r)
        dR = (
            _FLIP @ Ry @ (-_drx(-p)) @ Rz,
            _FLIP @ _dry(y) @ Rx @ Rz,
            _FLIP @ Ry @ Rx @ _drz(r),
        )
        P = model_pts @ (_FLIP @ Ry @ Rx @ Rz).T + params[3:]
        X, Y, Z = P[:, 0], P[:, 1], P[:, 2]
        n = len(P)
        # d(u, v)/d(X, Y, Z) per point, shape (n, 2, 3)
        dproj = np.zeros((n, 2, 3))
        dproj[:, 0, 0] = cam.fx / Z
        dproj[:, 0, 2] = -cam.fx * X / Z**2
        dproj[:, 1, 1] = cam.fy / Z
        dproj[:, 1, 2] = -cam.fy * Y / Z**2
        # dP/dparams, shape (n, 3, 6)
        dP = np.zeros((n, 3, 6))
        for k in range(3):
            dP[:, :, k] = model_pts @ dR[k].T
        dP[:, :, 3:] = np.eye(3)
        return np.einsum("nij,njk->nik", dproj, dP).reshape(2 * n, 6)
    return jacobian


def _check_image_points(obs: np.ndarray):
    if obs.shape[0] < 4 or not np.all(np.isfinite(obs)):
        raise DegenerateError("need at least four finite image points")
    s = np.linalg.svd(obs - obs.mean(axis=0), compute_uv=False)
    if s[0] == 0 or s[-1] <= 1e-6 * s[0]:
        raise DegenerateError("degenerate configuration: image points are collinear")


def _cold_start(model: FaceModel3D, obs: np.ndarray, cam: CameraIntrinsics,
                pitch: float = 0.0, yaw: float = 0.0) -> np.ndarray:
    # depth from the ratio of model to image spread; lateral offset from the
    # back-projected centroid
    spread_model = np.linalg.norm(model.points[:, :2] - model.points[:, :2].mean(axis=0))
    norm = np.column_stack([(obs[:, 0] - cam.cx) / cam.fx, (obs[:, 1] - cam.cy) / cam.fy])
    spread_img = np.linalg.norm(norm - norm.mean(axis=0))
    z = spread_model / spread_img if spread_img > 0 else 1000.0
    params = np.array([np.radians(pitch), np.radians(yaw), 0.0, 0.0, 0.0, z])
    centroid = _camera_points(model.points, params).mean(axis=0)
    cx, cy = norm.mean(axis=0)
    params[3] = cx * centroid[2] - centroid[0]
    params[4] = cy * centroid[2] - centroid[1]
    return params


_SEEDS = [(p, y) for p in (-20.0, 0.0, 20.0) for y in (-20.0, 0.0, 20.0) if (p, y) != (0.0, 0.0)]


def solve_pnp(
    points,
    model: FaceModel3D = FaceModel3D(),
    cam: CameraIntrinsics = CameraIntrinsics(1000.0, 1000.0),
    init: Optional[Pose] = None,
    *,
    max_iter: int = 100,
    retry_rmse: float = 2.0,
    cost_tol: float = 1e-16,
) -> Pose:
    """Pose minimising the squared reprojection error of the model landmarks.

    ``points`` are the observed image positions in model order. Without
    ``init`` the search starts from a frontal pose placed along the ray of
    the image centroid. If that attempt fails to converge, or ends with an
    RMSE above ``retry_rmse`` pixels, eight pitch/yaw seeds at +-20 deg are
    tried and the lowest-cost solution is kept.

    Raises:
        DegenerateError: collinear image points or a rank-deficient Jacobian.
        ConvergenceError: no start converged.
    """
    obs = np.asarray(points, dtype=float).reshape(-1, 2)
    if obs.shape[0] != model.points.shape[0]:
        raise ValidationError(
            f"expected {model.points.shape[0]} image points, got {obs.shape[0]}"
        )
    _check_image_points(obs)
    residual = _residual_fn(model.points, obs, cam)
    jacobian = _jacobian_fn(model.points, cam)

    def attempt(x0):
        return levenberg_marquardt(residual, jacobian, x0, max_iter=max_iter, cost_tol=cost_tol)

    n = obs.shape[0]
    first = init._params() if init is not None else _cold_start(model, obs, cam)
    best = None
    try:
        best = attempt(first)
    except ConvergenceError:
        pass
    if best is None or np.sqrt(best.cost / n) > retry_rmse:
        for p, y in _SEEDS:
            try:
                res = attempt(_cold_start(model, obs, cam, p, y))
            except (ConvergenceError, DegenerateError):
                continue
            if best is None or res.cost < best.cost:
                best = res
    if best is None:
        raise ConvergenceError("PnP did not converge from any starting pose")
    x = best.x
    pitch, yaw, roll = (_wrap_deg(a) for a in np.degrees(x[:3]))
    return Pose(pitch, yaw, roll, x[3:], float(np.sqrt(best.cost / n)))


def pitch_track(
    track: LandmarkTrack,
    model: FaceModel3D = FaceModel3D(),
    cam: CameraIntrinsics = CameraIntrinsics(1000.0, 1000.0),
    *,
    warm_start: bool = True,
) -> MotionTrack:
    """Per-frame head pitch in degrees; rest value is the first frame's pitch.

    Each frame is warm-started from the previous frame's pose.
    """
    idx = list(model.indices)
    coords = track.coords
    out = np.empty(len(track))
    prev: Optional[Pose] = None
    for k in range(len(track)):
        try:
            pose = solve_pnp(coords[k, idx], model, cam, prev if warm_start else None)
        except (ConvergenceError, DegenerateError) as exc:
            raise PoseError(f"frame {k}: {exc}", frame=k) from exc
        out[k] = pose.pitch
        prev = pose
    return MotionTrack(track.fps, out, "degrees", rest_value=out[0],
                       start_time=track.frames[0].t)


def poses_from_track(track: LandmarkTrack, model: FaceModel3D, cam: CameraIntrinsics) -> list[Pose]:
    """Full per-frame poses (warm-started), for diagnostics."""
    idx = list(model.indices)
    poses: list[Pose] = []
    prev = None
    for k, pts in enumerate(track.coords[:, idx]):
        try:
            prev = solve_pnp(pts, model, cam, prev)
        except (ConvergenceError, DegenerateError) as exc:
            raise PoseError(f"frame {k}: {exc}", frame=k) from exc
        poses.append(prev)
    return poses


def image_points(points: Sequence, model: FaceModel3D) -> np.ndarray:
    """Select the model's landmarks from a full (68, 2) frame."""
    return np.asarray(points)[list(model.indices)]

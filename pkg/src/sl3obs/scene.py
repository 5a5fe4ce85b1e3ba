"""Ground-truth generator: rigid-body camera motion over a static plane.

Conventions: the reference frame sits at the origin with the scene plane
{X : eta_ring . X = d_ring} in front of it (optical axis +z).  The current
camera pose (R, xi) maps current-frame coordinates P to reference-frame
coordinates via P_ref = R P + xi.  Angular/linear velocities (Omega, V) are
expressed in the current (body) frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DegenerateGeometry
from .sl3 import (
    AlgebraElement,
    GroupElement,
    ProjectivePoint,
    _freeze,
    det3,
    inv3,
    real_cbrt,
    skew,
    tangent_basis,
)

DEFAULT_D_MIN = 0.05


@dataclass(frozen=True)
class PlaneParams:
    """Scene plane in the reference frame: unit normal and distance (m)."""

    eta_ring: np.ndarray
    d_ring: float

    def __post_init__(self):
        eta = np.asarray(self.eta_ring, dtype=float)
        n = np.linalg.norm(eta)
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("plane normal must be a nonzero finite vector")
        object.__setattr__(self, "eta_ring", _freeze(eta / n))
        if not self.d_ring > 0.0:
            raise ValueError("plane distance d_ring must be positive")


@dataclass(frozen=True)
class RigidVelocity:
    """Body-frame angular velocity (rad/s) and linear velocity (m/s)."""

    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if omega.shape != (3,) or v.shape != (3,):
            raise ValueError("omega and v must be 3-vectors")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(v))):
            raise ValueError("velocities must be finite")
        object.__setattr__(self, "omega", _freeze(omega))
        object.__setattr__(self, "v", _freeze(v))

    @classmethod
    def zero(cls) -> "RigidVelocity":
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class CameraState:
    """Current-camera pose: rotation R and position xi in the reference frame."""

    R: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        if R.shape != (3, 3) or xi.shape != (3,):
            raise ValueError("R must be 3x3 and xi a 3-vector")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(det3(R) - 1.0) > 1e-9:
            raise ValueError("R is not a rotation matrix")
        object.__setattr__(self, "R", _freeze(R))
        object.__setattr__(self, "xi", _freeze(xi))

    @classmethod
    def identity(cls) -> "CameraState":
        return cls(np.eye(3), np.zeros(3))

    def zeta(self) -> np.ndarray:
        """Reference-camera position seen from the current frame: -R^T xi."""
        return -self.R.T @ self.xi

    def eta(self, plane: PlaneParams) -> np.ndarray:
        """Plane normal in the current frame: R^T eta_ring."""
        return self.R.T @ plane.eta_ring

    def d(self, plane: PlaneParams) -> float:
        """Current camera-to-plane distance: d_ring - eta_ring . xi."""
        return float(plane.d_ring - plane.eta_ring @ self.xi)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ValueError("focal lengths must be positive")

    def k_matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])


# Wide-angle lens calibration used for the pixel-mapping tests.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=448.85, fy=450.26, cx=394.30, cy=292.82)


def _check_distance(cam: CameraState, plane: PlaneParams, d_min: float) -> float:
    d = cam.d(plane)
    if d <= d_min:
        raise DegenerateGeometry(f"camera-to-plane distance {d:.4f} <= d_min {d_min}")
    return d


def true_homography(cam: CameraState, plane: PlaneParams,
                    d_min: float = DEFAULT_D_MIN) -> GroupElement:
    """Unit-determinant homography of the current view against the reference:
    H = gamma (R + xi eta^T / d) with eta = R^T eta_ring, gamma = (d/d_ring)^(1/3).
    """
    d = _check_distance(cam, plane, d_min)
    eta = cam.eta(plane)
    gamma = real_cbrt(d / plane.d_ring)
    return GroupElement(gamma * (cam.R + np.outer(cam.xi, eta) / d))


def rotation_exp(omega_dt: np.ndarray) -> np.ndarray:
    """Rodrigues formula: exact exponential of skew(omega_dt) on SO(3)."""
    w = np.asarray(omega_dt, dtype=float)
    theta = math.sqrt(float(w @ w))
    if theta < 1e-14:
        return np.array([[1.0, -w[2], w[1]],
                         [w[2], 1.0, -w[0]],
                         [-w[1], w[0], 1.0]])
    x, y, z = w / theta
    c, s = math.cos(theta), math.sin(theta)
    q = 1.0 - c
    return np.array([
        [c + q * x * x, q * x * y - s * z, q * x * z + s * y],
        [q * x * y + s * z, c + q * y * y, q * y * z - s * x],
        [q * x * z - s * y, q * y * z + s * x, c + q * z * z],
    ])


def _reorthonormalize(R: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(R)
    Q = u @ vt
    if np.linalg.det(Q) < 0.0:
        Q = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    return Q


def rigid_step(cam: CameraState, vel: RigidVelocity, dt: float,
               plane: PlaneParams | None = None,
               d_min: float = DEFAULT_D_MIN) -> CameraState:
    """One step of the rigid-body kinematics Rdot = R Omega_x, xidot = R V.

    The rotation update is the exact SO(3) exponential; the translation update
    is explicit Euler (O(dt^2) local error).  When a plane is supplied the
    post-step camera-to-plane distance is checked.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    R_new = _reorthonormalize(cam.R @ rotation_exp(dt * vel.omega))
    xi_new = cam.xi + dt * (cam.R @ vel.v)
    new = CameraState(R_new, xi_new)
    if plane is not None:
        _check_distance(new, plane, d_min)
    return new


def true_group_velocity(cam: CameraState, vel: RigidVelocity, plane: PlaneParams,
                        d_min: float = DEFAULT_D_MIN) -> AlgebraElement:
    """Group velocity driving Hdot = H U:
    U = Omega_x + V eta^T / d - (eta . V / 3d) I."""
    d = _check_distance(cam, plane, d_min)
    eta = cam.eta(plane)
    return AlgebraElement(
        skew(vel.omega).m + np.outer(vel.v, eta) / d - (eta @ vel.v / (3.0 * d)) * np.eye(3)
    )


def gamma_term(cam: CameraState, vel: RigidVelocity, plane: PlaneParams,
               d_min: float = DEFAULT_D_MIN) -> AlgebraElement:
    """Translational part of the group velocity:
    Gamma = V eta^T / d - (eta . V / 3d) I, so that U = Omega_x + Gamma."""
    d = _check_distance(cam, plane, d_min)
    eta = cam.eta(plane)
    return AlgebraElement(np.outer(vel.v, eta) / d - (eta @ vel.v / (3.0 * d)) * np.eye(3))


def gamma1_term(cam: CameraState, vel: RigidVelocity, plane: PlaneParams,
                d_min: float = DEFAULT_D_MIN) -> np.ndarray:
    """Unreduced translational velocity term Gamma_1 = (V/d) eta^T.

    Not traceless in general; returned as a raw 3x3 matrix."""
    d = _check_distance(cam, plane, d_min)
    eta = cam.eta(plane)
    return np.outer(vel.v / d, eta)


def d_rate(cam: CameraState, vel: RigidVelocity, plane: PlaneParams) -> float:
    """Rate of change of the camera-to-plane distance: ddot = -eta . V."""
    return float(-(cam.eta(plane) @ vel.v))


def plane_point(direction: ProjectivePoint, plane: PlaneParams) -> np.ndarray:
    """Intersect a reference-frame ray with the scene plane."""
    denom = float(plane.eta_ring @ direction.v)
    if denom <= 1e-9:
        raise DegenerateGeometry("reference ray does not hit the plane in front of the camera")
    return (plane.d_ring / denom) * direction.v


def project_features(cam: CameraState, plane: PlaneParams,
                     ref_points: list[ProjectivePoint],
                     d_min: float = DEFAULT_D_MIN,
                     h: GroupElement | None = None) -> list[ProjectivePoint]:
    """Measured directions of the reference features from the current pose:
    p_i = H^-1 p_ring_i / |H^-1 p_ring_i|.

    Every reference ray must hit the plane in front of both cameras.  An
    already-computed true homography may be passed to avoid recomputation.
    """
    _check_distance(cam, plane, d_min)
    if h is None:
        h = true_homography(cam, plane, d_min)
    ref_mat = np.array([p.v for p in ref_points])
    denom = ref_mat @ plane.eta_ring
    if np.any(denom <= 1e-9):
        raise DegenerateGeometry("reference ray does not hit the plane in front of the camera")
    points = (plane.d_ring / denom)[:, None] * ref_mat
    depth = (points - cam.xi) @ cam.R[:, 2]
    if np.any(depth <= 0.0):
        raise DegenerateGeometry("scene point behind the current camera")
    meas = ref_mat @ inv3(h.m).T
    return [ProjectivePoint(row) for row in meas]


def pixel_to_direction(intr: CameraIntrinsics, uv: np.ndarray) -> ProjectivePoint:
    """Back-project a pixel to its unit viewing direction: normalize(K^-1 (u,v,1))."""
    u, v = np.asarray(uv, dtype=float)
    ray = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
    p = ProjectivePoint(ray)
    if p.v[2] <= 0.0:
        raise BehindCamera("pixel back-projects behind the camera")
    return p


def direction_to_pixel(intr: CameraIntrinsics, p: ProjectivePoint) -> np.ndarray:
    """Project a viewing direction to pixel coordinates (inverse of
    pixel_to_direction up to depth)."""
    if p.v[2] <= 0.0:
        raise BehindCamera("direction has non-positive depth")
    x, y, z = p.v
    return np.array([intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy])


def default_feature_square(plane: PlaneParams | None = None, side: float = 0.3,
                           ) -> list[ProjectivePoint]:
    """Four reference directions: corners of a square target of the given side
    length centered under the reference camera on the scene plane."""
    if plane is None:
        plane = PlaneParams(np.array([0.0, 0.0, 1.0]), 1.0)
    eta = plane.eta_ring
    t1, t2 = tangent_basis(eta)
    center = plane.d_ring * eta
    h = side / 2.0
    corners = [center + sx * h * t1 + sy * h * t2
               for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
    return [ProjectivePoint(c) for c in corners]


class StaticTrajectory:
    """Camera frozen at a fixed pose."""

    def __init__(self, cam0: CameraState | None = None):
        self.cam0 = cam0 if cam0 is not None else CameraState.identity()

    def sample(self, t: float) -> tuple[CameraState, RigidVelocity]:
        return self.cam0, RigidVelocity.zero()


class DriftTrajectory:
    """Straight-line drift parallel to the plane with optional constant body
    rotation rate.

    The inertial velocity xi_dot is projected onto the plane on construction,
    so d stays constant and xi_dot/d is constant by construction.
    """

    def __init__(self, plane: PlaneParams, xi_dot: np.ndarray,
                 omega_body: np.ndarray | None = None,
                 cam0: CameraState | None = None):
        self.plane = plane
        xi_dot = np.asarray(xi_dot, dtype=float)
        self.xi_dot = xi_dot - (plane.eta_ring @ xi_dot) * plane.eta_ring
        self.omega = (np.zeros(3) if omega_body is None
                      else np.asarray(omega_body, dtype=float))
        self.cam0 = cam0 if cam0 is not None else CameraState.identity()

    def sample(self, t: float) -> tuple[CameraState, RigidVelocity]:
        R = self.cam0.R @ rotation_exp(t * self.omega)
        xi = self.cam0.xi + t * self.xi_dot
        cam = CameraState(R, xi)
        return cam, RigidVelocity(self.omega, R.T @ self.xi_dot)


class OrbitTrajectory:
    """Circular orbit over the plane at constant height, yawing with the orbit
    so the body-frame linear velocity V (and hence V/d) is constant.
    """

    def __init__(self, plane: PlaneParams, center: np.ndarray, radius: float,
                 angular_rate: float, R0: np.ndarray | None = None):
        center = np.asarray(center, dtype=float)
        self.plane = plane
        eta = plane.eta_ring
        self.center = center
        self.radius = float(radius)
        self.rate = float(angular_rate)
        self.t1, self.t2 = tangent_basis(eta)
        self.R0 = np.eye(3) if R0 is None else np.asarray(R0, dtype=float)

    def sample(self, t: float) -> tuple[CameraState, RigidVelocity]:
        eta = self.plane.eta_ring
        c, s = math.cos(self.rate * t), math.sin(self.rate * t)
        xi = self.center + self.radius * (c * self.t1 + s * self.t2)
        R = rotation_exp(self.rate * t * eta) @ self.R0
        cam = CameraState(R, xi)
        omega = self.rate * (self.R0.T @ eta)
        v = self.radius * self.rate * (self.R0.T @ self.t2)
        return cam, RigidVelocity(omega, v)


class WaypointTrajectory:
    """Piecewise-linear path through timed waypoints with optional constant
    body rotation rate.  Velocity is discontinuous at waypoint times, which is
    the intended stress behavior."""

    def __init__(self, times: list[float], positions: list[np.ndarray],
                 omega_body: np.ndarray | None = None,
                 cam0: CameraState | None = None):
        if len(times) != len(positions) or len(times) < 2:
            raise ValueError("need at least two timed waypoints")
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        self.times = [float(t) for t in times]
        self.positions = [np.asarray(p, dtype=float) for p in positions]
        self.omega = (np.zeros(3) if omega_body is None
                      else np.asarray(omega_body, dtype=float))
        self.cam0 = cam0 if cam0 is not None else CameraState.identity()

    def sample(self, t: float) -> tuple[CameraState, RigidVelocity]:
        ts, ps = self.times, self.positions
        if t <= ts[0]:
            k = 0
        elif t >= ts[-1]:
            k = len(ts) - 2
        else:
            k = max(i for i, tk in enumerate(ts[:-1]) if tk <= t)
        slope = (ps[k + 1] - ps[k]) / (ts[k + 1] - ts[k])
        tau = min(max(t, ts[0]), ts[-1])
        xi = self.cam0.xi + ps[k] + (tau - ts[k]) * slope
        R = self.cam0.R @ rotation_exp(t * self.omega)
        return CameraState(R, xi), RigidVelocity(self.omega, R.T @ slope)

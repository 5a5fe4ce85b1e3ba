"""Scenario orchestration: build a trajectory, corrupt measurements, run an
observer in lockstep with the ground truth, and log per-step metrics.

Scenario files are JSON documents with a versioned ``schema`` field::

    {
      "schema": 1,
      "name": "drift",                          # optional label
      "trajectory": {"type": "static"},         # see _build_trajectory
      "duration": 20.0, "dt": 1e-4,
      "plane": {"normal": [0,0,1], "distance": 1.0},
      "ref_features": [[x,y,z], ...],           # optional, default target square
      "noise": {"gyro_sigma": 0.0, "direction_sigma": 0.0, "velocity_sigma": 0.0},
      "dropout": [{"t_start": 12.0, "t_end": 13.0, "visible": []}],
      "observer": {"mode": "adaptive_gamma", "h0": [[...]x3], "gamma0": [[...]x3],
                   "inner_steps": 1},
      "gains": {"kp": 60.0, "ki": 1.0},
      "seed": 0
    }

Unknown fields are rejected.  Trajectory types: ``static`` (optional xi0,
rotvec), ``constant_xi_over_d`` (xi_dot, optional omega/xi0/rotvec),
``circular_v_over_d`` (radius, rate, optional center), ``waypoints`` (times,
positions, optional omega).  Runs are deterministic given the seed; with all
noise sigmas zero the output is seed-independent.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .consistency import check_consistent
from .errors import ConfigError, DegenerateGeometry
from .observer import (
    FeatureFrame,
    Gains,
    ObserverMode,
    ObserverState,
    aggregate_cost,
    canonical_error,
    innovation,
    step,
)
from .scene import (
    CameraState,
    DriftTrajectory,
    OrbitTrajectory,
    PlaneParams,
    StaticTrajectory,
    WaypointTrajectory,
    default_feature_square,
    gamma1_term,
    gamma_term,
    project_features,
    rotation_exp,
    true_group_velocity,
    true_homography,
)
from .sl3 import AlgebraElement, GroupElement, ProjectivePoint, canonicalize, tangent_basis

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
_I3 = np.eye(3)

CSV_COLUMNS = (
    "t", "L0", "errE", "normDelta", "normGammaErr", "nVisible",
    "H11", "H12", "H13", "H21", "H22", "H23", "H31", "H32", "H33",
    "Hh11", "Hh12", "Hh13", "Hh21", "Hh22", "Hh23", "Hh31", "Hh32", "Hh33",
)


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement corruption levels: additive white gyro noise (rad/s),
    tangent-plane direction noise (rad), and group-velocity entry noise (1/s,
    full-velocity mode only)."""

    gyro_sigma: float = 0.0
    direction_sigma: float = 0.0
    velocity_sigma: float = 0.0

    def __post_init__(self):
        if min(self.gyro_sigma, self.direction_sigma, self.velocity_sigma) < 0.0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass(frozen=True)
class DropoutWindow:
    """During [t_start, t_end) only the listed reference indices are visible."""

    t_start: float
    t_end: float
    visible: tuple[int, ...]


@dataclass(frozen=True)
class Scenario:
    trajectory: object
    trajectory_type: str
    duration: float
    dt: float
    plane: PlaneParams
    ref_features: tuple[ProjectivePoint, ...]
    noise: NoiseSpec
    dropout: tuple[DropoutWindow, ...]
    observer_mode: ObserverMode
    gains: Gains
    seed: int
    h0: GroupElement | None = None
    gamma0: np.ndarray | None = None
    inner_steps: int = 1
    name: str = ""

    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def visible_at(self, t: float) -> tuple[int, ...]:
        for w in self.dropout:
            if w.t_start <= t < w.t_end:
                return w.visible
        return tuple(range(len(self.ref_features)))


@dataclass
class RunLog:
    """Per-step records of a scenario run; one row per time stamp including
    t = 0, so a completed run has duration/dt + 1 rows."""

    rows: list[list[float]] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    def column(self, name: str) -> np.ndarray:
        i = CSV_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "columns": list(CSV_COLUMNS),
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "rows": self.rows,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunLog":
        if d.get("schema") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported log schema {d.get('schema')!r}")
        if tuple(d.get("columns", ())) != CSV_COLUMNS:
            raise ConfigError("log column layout mismatch")
        rows = [[float(x) if i != 5 else int(x) for i, x in enumerate(row)]
                for row in d["rows"]]
        return cls(rows=rows, aborted=bool(d.get("aborted", False)),
                   abort_reason=str(d.get("abort_reason", "")))


def _require_keys(obj: dict, where: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    missing = required - obj.keys()
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")


def _vec3(x, where: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ConfigError(f"{where}: expected a 3-vector")
    return v


def _mat3(x, where: str) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.shape != (3, 3):
        raise ConfigError(f"{where}: expected a 3x3 matrix")
    return m


def _build_camera(spec: dict, where: str) -> CameraState:
    _require_keys(spec, where, set(), {"xi0", "rotvec"})
    xi0 = _vec3(spec.get("xi0", [0.0, 0.0, 0.0]), f"{where}.xi0")
    R0 = rotation_exp(_vec3(spec.get("rotvec", [0.0, 0.0, 0.0]), f"{where}.rotvec"))
    return CameraState(R0, xi0)


def _build_trajectory(spec: dict, plane: PlaneParams):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("trajectory: missing 'type'")
    kind = spec["type"]
    if kind == "static":
        _require_keys(spec, "trajectory", {"type"}, {"xi0", "rotvec"})
        cam0 = _build_camera({k: v for k, v in spec.items() if k != "type"}, "trajectory")
        return StaticTrajectory(cam0)
    if kind == "constant_xi_over_d":
        _require_keys(spec, "trajectory", {"type", "xi_dot"}, {"omega", "xi0", "rotvec"})
        cam0 = _build_camera({k: spec[k] for k in ("xi0", "rotvec") if k in spec},
                             "trajectory")
        omega = (_vec3(spec["omega"], "trajectory.omega") if "omega" in spec else None)
        return DriftTrajectory(plane, _vec3(spec["xi_dot"], "trajectory.xi_dot"),
                               omega_body=omega, cam0=cam0)
    if kind == "circular_v_over_d":
        _require_keys(spec, "trajectory", {"type", "radius", "rate"}, {"center"})
        center = _vec3(spec.get("center", [0.0, 0.0, 0.0]), "trajectory.center")
        return OrbitTrajectory(plane, center, float(spec["radius"]), float(spec["rate"]))
    if kind == "waypoints":
        _require_keys(spec, "trajectory", {"type", "times", "positions"}, {"omega"})
        times = [float(t) for t in spec["times"]]
        positions = [_vec3(p, "trajectory.positions") for p in spec["positions"]]
        omega = (_vec3(spec["omega"], "trajectory.omega") if "omega" in spec else None)
        return WaypointTrajectory(times, positions, omega_body=omega)
    raise ConfigError(f"trajectory: unknown type {kind!r}")


def load_scenario(source) -> Scenario:
    """Build a validated Scenario from a JSON file path, file object, or an
    already-parsed dict.  Raises ConfigError on any malformed content."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)

    _require_keys(doc, "scenario",
                  {"schema", "trajectory", "duration", "dt", "plane", "observer"},
                  {"name", "ref_features", "noise", "dropout", "gains", "seed"})
    if doc["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario schema {doc['schema']!r}")

    plane_spec = doc["plane"]
    _require_keys(plane_spec, "plane", {"normal", "distance"})
    try:
        plane = PlaneParams(_vec3(plane_spec["normal"], "plane.normal"),
                            float(plane_spec["distance"]))
    except ValueError as exc:
        raise ConfigError(f"plane: {exc}") from exc

    dt = float(doc["dt"])
    duration = float(doc["duration"])
    if not dt > 0.0:
        raise ConfigError("dt must be positive")
    if duration < dt:
        raise ConfigError("duration must be at least dt")

    if "ref_features" in doc:
        refs = tuple(ProjectivePoint(_vec3(v, "ref_features")) for v in doc["ref_features"])
    else:
        refs = tuple(default_feature_square(plane))

    noise_spec = doc.get("noise", {})
    _require_keys(noise_spec, "noise", set(),
                  {"gyro_sigma", "direction_sigma", "velocity_sigma"})
    try:
        noise = NoiseSpec(**{k: float(v) for k, v in noise_spec.items()})
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc

    windows = []
    for i, w in enumerate(doc.get("dropout", [])):
        _require_keys(w, f"dropout[{i}]", {"t_start", "t_end", "visible"})
        t0, t1 = float(w["t_start"]), float(w["t_end"])
        if not t0 < t1:
            raise ConfigError(f"dropout[{i}]: t_start must be < t_end")
        vis = tuple(int(j) for j in w["visible"])
        if any(not 0 <= j < len(refs) for j in vis):
            raise ConfigError(f"dropout[{i}]: visible index out of range")
        windows.append(DropoutWindow(t0, t1, vis))
    windows.sort(key=lambda w: w.t_start)
    for a, b in zip(windows, windows[1:]):
        if b.t_start < a.t_end:
            raise ConfigError("dropout windows overlap")

    gains_spec = doc.get("gains", {})
    _require_keys(gains_spec, "gains", set(), {"kp", "ki"})
    try:
        kp = gains_spec.get("kp", 60.0)
        gains = Gains(kp=tuple(kp) if isinstance(kp, list) else float(kp),
                      ki=float(gains_spec.get("ki", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"gains: {exc}") from exc

    obs = doc["observer"]
    _require_keys(obs, "observer", {"mode"}, {"h0", "gamma0", "inner_steps"})
    try:
        mode = ObserverMode(obs["mode"])
    except ValueError:
        raise ConfigError(f"observer.mode: unknown mode {obs['mode']!r}") from None
    h0 = GroupElement(_mat3(obs["h0"], "observer.h0")) if "h0" in obs else None
    gamma0 = _mat3(obs["gamma0"], "observer.gamma0") if "gamma0" in obs else None
    inner = int(obs.get("inner_steps", 1))
    if inner < 1:
        raise ConfigError("observer.inner_steps must be >= 1")

    return Scenario(
        trajectory=_build_trajectory(doc["trajectory"], plane),
        trajectory_type=doc["trajectory"]["type"],
        duration=duration,
        dt=dt,
        plane=plane,
        ref_features=refs,
        noise=noise,
        dropout=tuple(windows),
        observer_mode=mode,
        gains=gains,
        seed=int(doc.get("seed", 0)),
        h0=h0,
        gamma0=gamma0,
        inner_steps=inner,
        name=str(doc.get("name", "")),
    )


def _perturb_direction(p: ProjectivePoint, sigma: float,
                       z: np.ndarray) -> ProjectivePoint:
    """Tangent-plane perturbation: rotate p by ~sigma*|z| radians."""
    t1, t2 = tangent_basis(p.v)
    return ProjectivePoint(p.v + sigma * (z[0] * t1 + z[1] * t2))


def _gamma_truth(sc: Scenario, cam, vel) -> np.ndarray:
    if sc.observer_mode is ObserverMode.ADAPTIVE_GAMMA:
        return gamma_term(cam, vel, sc.plane).m
    if sc.observer_mode is ObserverMode.ADAPTIVE_GAMMA1:
        return gamma1_term(cam, vel, sc.plane)
    return np.zeros((3, 3))


def run_scenario(sc: Scenario) -> RunLog:
    """Run the configured observer against the ground-truth scene.

    Rows are logged at every time stamp before stepping, so row k describes
    the state at t = k*dt.  A DegenerateGeometry failure aborts the run,
    keeping all rows logged so far.
    """
    report = check_consistent(list(sc.ref_features))
    if not report.consistent:
        log.warning("scenario %r: reference direction set is not consistent "
                    "(min triplet |det| %.3e)", sc.name, report.min_triplet_det)

    rng = np.random.default_rng(sc.seed)
    state = ObserverState.initial(sc.observer_mode, h0=sc.h0, gamma0=sc.gamma0)
    out = RunLog()

    n = sc.n_steps()
    for k in range(n + 1):
        t = k * sc.dt
        try:
            cam, vel = sc.trajectory.sample(t)
            h_true = true_homography(cam, sc.plane)
            features = project_features(cam, sc.plane, sc.ref_features, h=h_true)
        except DegenerateGeometry as exc:
            out.aborted = True
            out.abort_reason = str(exc)
            log.warning("scenario %r aborted at t=%.4f: %s", sc.name, t, exc)
            return out

        omega_meas = vel.omega
        if sc.noise.gyro_sigma > 0.0:
            omega_meas = omega_meas + sc.noise.gyro_sigma * rng.standard_normal(3)
        u_meas = None
        if sc.observer_mode is ObserverMode.FULL_VELOCITY:
            u_true = true_group_velocity(cam, vel, sc.plane)
            u_meas = u_true
            if sc.noise.velocity_sigma > 0.0:
                u_meas = AlgebraElement(
                    u_true.m + sc.noise.velocity_sigma * rng.standard_normal((3, 3)))

        visible = sc.visible_at(t)
        if sc.noise.direction_sigma > 0.0:
            observed = tuple(
                (i, _perturb_direction(features[i], sc.noise.direction_sigma,
                                       rng.standard_normal(2)))
                for i in visible)
        else:
            observed = tuple((i, features[i]) for i in visible)
        frame = FeatureFrame(observed=observed, reference=sc.ref_features,
                             omega=omega_meas, u_full=u_meas, timestamp=t)

        delta = innovation(state, frame, sc.gains)
        e_err = canonical_error(state, h_true).m - _I3
        g_err = _gamma_truth(sc, cam, vel) - state.gamma_hat
        row = [
            t,
            aggregate_cost(state, frame, sc.gains),
            math.sqrt(float((e_err * e_err).sum())),
            delta.norm(),
            math.sqrt(float((g_err * g_err).sum())),
            len(visible),
        ]
        row.extend(h_true.m.ravel().tolist())
        row.extend(state.h_hat.m.ravel().tolist())
        out.rows.append(row)

        if k < n:
            state = step(state, frame, sc.gains, sc.dt, n_inner=sc.inner_steps)
    return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def emit_csv(run: RunLog, path) -> None:
    """Write the log as CSV with a fixed header and 17-significant-digit
    floats; byte-identical for identical runs."""
    lines = [",".join(CSV_COLUMNS)]
    for row in run.rows:
        cells = [_fmt(x) if i != 5 else str(int(x)) for i, x in enumerate(row)]
        lines.append(",".join(cells))
    data = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)


def emit_json(run: RunLog, path) -> None:
    """Write the log as JSON mirroring the CSV records; round-trips
    byte-identically through RunLog.from_json_dict."""
    data = json.dumps(run.to_json_dict(), separators=(",", ":")) + "\n"
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)


def load_run_log(path) -> RunLog:
    if hasattr(path, "read"):
        return RunLog.from_json_dict(json.load(path))
    with open(path, "r", encoding="utf-8") as fh:
        return RunLog.from_json_dict(json.load(fh))

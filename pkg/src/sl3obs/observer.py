"""Recursive homography observers on SL(3) driven by point-feature directions.

Three variants share the same gradient-based innovation:

* full velocity: the group velocity U is measured,
* adaptive Gamma: only the angular rate is measured and the translational
  term Gamma = V eta^T/d - (eta.V/3d) I is estimated (valid when xi_dot/d is
  constant),
* adaptive Gamma_1: as above but estimating Gamma_1 = (V/d) eta^T (valid when
  V/d is constant).

Integration uses a split exponential step
    H_hat+ = exp(-dt * Delta) . H_hat . exp(dt * W),
with W the body-frame velocity term.  Both factors are exponentials of
traceless matrices, so the update stays on SL(3) exactly, and the induced
recursion of the canonical error E = H_hat H^-1 depends on E alone whenever
the true homography follows H+ = H exp(dt U).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingVelocity
from .sl3 import (
    AlgebraElement,
    GroupElement,
    ProjectivePoint,
    _freeze,
    expm3,
    inv3,
    lie_bracket,
    projector,
    skew,
)

_I3 = np.eye(3)


class ObserverMode(str, enum.Enum):
    FULL_VELOCITY = "full_velocity"
    ADAPTIVE_GAMMA = "adaptive_gamma"
    ADAPTIVE_GAMMA1 = "adaptive_gamma1"


@dataclass(frozen=True)
class Gains:
    """Observer gains: per-feature proportional gains and the adaptive
    (integral) gain.

    kp may be a single scalar applied to every feature or a sequence indexed
    by reference-feature position.  ki is ignored by the full-velocity
    observer.
    """

    kp: float | tuple[float, ...] = 60.0
    ki: float = 1.0

    def __post_init__(self):
        if isinstance(self.kp, (int, float)):
            if not self.kp > 0.0:
                raise ValueError("kp must be positive")
            object.__setattr__(self, "kp", float(self.kp))
        else:
            kp = tuple(float(k) for k in self.kp)
            if not kp or any(k <= 0.0 for k in kp):
                raise ValueError("all per-feature gains must be positive")
            object.__setattr__(self, "kp", kp)
        if not self.ki > 0.0:
            raise ValueError("ki must be positive")

    def k_for(self, index: int) -> float:
        return self.kp if isinstance(self.kp, float) else self.kp[index]


# Gains used in the experiments: fast proportional with unit adaptive gain,
# and the slow-adaptation preset for per-frame inner iteration.
GAINS_DEFAULT = Gains(kp=60.0, ki=1.0)
GAINS_SLOW_ADAPT = Gains(kp=60.0, ki=0.0375)


@dataclass(frozen=True)
class FeatureFrame:
    """One measurement epoch.

    observed holds (reference index, measured direction) pairs for currently
    visible features; reference is the full list of known directions and must
    stay fixed across a run.  omega is the gyro reading; u_full carries the
    measured group velocity for the full-velocity observer.
    """

    observed: tuple[tuple[int, ProjectivePoint], ...]
    reference: tuple[ProjectivePoint, ...]
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    u_full: AlgebraElement | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        observed = tuple((int(i), p) for i, p in self.observed)
        reference = tuple(self.reference)
        for i, _ in observed:
            if not 0 <= i < len(reference):
                raise ValueError(f"observed index {i} outside reference list")
        object.__setattr__(self, "observed", observed)
        object.__setattr__(self, "reference", reference)
        object.__setattr__(self, "omega", _freeze(np.asarray(self.omega, dtype=float)))
        # stacked copies of the visible directions for vectorized evaluation
        idx = np.array([i for i, _ in observed], dtype=np.intp)
        idx.flags.writeable = False
        p_mat = (np.array([p.v for _, p in observed])
                 if observed else np.zeros((0, 3)))
        ref_mat = (np.array([reference[i].v for i in idx])
                   if observed else np.zeros((0, 3)))
        object.__setattr__(self, "_idx", idx)
        object.__setattr__(self, "_p_mat", _freeze(p_mat))
        object.__setattr__(self, "_ref_mat", _freeze(ref_mat))


@dataclass(frozen=True)
class ObserverState:
    """Homography estimate plus the adaptive velocity term.

    gamma_hat is kept traceless in adaptive-Gamma mode (projected on
    construction and after every step); in Gamma_1 mode it is a raw 3x3
    matrix.
    """

    h_hat: GroupElement
    gamma_hat: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    mode: ObserverMode = ObserverMode.FULL_VELOCITY

    def __post_init__(self):
        g = np.array(self.gamma_hat, dtype=float)
        if g.shape != (3, 3):
            raise ValueError("gamma_hat must be 3x3")
        if self.mode is ObserverMode.ADAPTIVE_GAMMA:
            g = g - (np.trace(g) / 3.0) * _I3
        object.__setattr__(self, "gamma_hat", _freeze(g))
        object.__setattr__(self, "mode", ObserverMode(self.mode))

    @classmethod
    def initial(cls, mode: ObserverMode = ObserverMode.FULL_VELOCITY,
                h0: GroupElement | None = None,
                gamma0: np.ndarray | None = None) -> "ObserverState":
        return cls(
            h_hat=h0 if h0 is not None else GroupElement.identity(),
            gamma_hat=gamma0 if gamma0 is not None else np.zeros((3, 3)),
            mode=mode,
        )


def output_errors(state: ObserverState, frame: FeatureFrame) -> list[ProjectivePoint]:
    """Per-feature output errors e_i = H_hat p_i / |H_hat p_i| for the visible
    set, as canonical representatives.  Equals E p_ring_i / |E p_ring_i|."""
    return [ProjectivePoint(state.h_hat.m @ p.v) for _, p in frame.observed]


def _output_error_vec(h_m: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Canonical representative of H p / |H p| (single-point path)."""
    w = h_m @ p
    n = math.sqrt(float(w @ w))
    pivot = w[2] if w[2] != 0.0 else (w[1] if w[1] != 0.0 else w[0])
    return w * (-1.0 / n if pivot < 0.0 else 1.0 / n)


def _output_error_mat(h_m: np.ndarray, frame: FeatureFrame) -> np.ndarray:
    """Canonical output errors of all visible features, stacked row-wise."""
    w = frame._p_mat @ h_m.T
    nw = np.sqrt((w * w).sum(axis=1))
    pivot = w[:, 2].copy()
    flat = pivot == 0.0
    if flat.any():
        pivot[flat] = w[flat, 1]
        flat &= pivot == 0.0
        pivot[flat] = w[flat, 0]
    scale = np.where(pivot < 0.0, -1.0, 1.0) / nw
    return w * scale[:, None]


def _innovation_mat(h_m: np.ndarray, frame: FeatureFrame, gains: Gains) -> np.ndarray:
    """Gradient innovation -sum_i k_i pi_{e_i} p_ring_i e_i^T over visible
    features, trace-projected into sl(3).

    Uses pi_e p_ring e^T = (p_ring - e (e.p_ring)) e^T, evaluated over the
    stacked feature arrays."""
    if frame._p_mat.shape[0] == 0:
        return np.zeros((3, 3))
    e = _output_error_mat(h_m, frame)
    ref = frame._ref_mat
    m = ref - e * (e * ref).sum(axis=1)[:, None]
    if isinstance(gains.kp, float):
        delta = -gains.kp * (m.T @ e)
    else:
        k = np.array([gains.kp[i] for i in frame._idx])
        delta = -(m * k[:, None]).T @ e
    tr = delta[0, 0] + delta[1, 1] + delta[2, 2]
    return delta - (tr / 3.0) * _I3


def innovation(state: ObserverState, frame: FeatureFrame, gains: Gains) -> AlgebraElement:
    """Riemannian-gradient innovation of the aggregate cost.

    Right equivariant; zero at perfect estimates and when no features are
    visible.  The analytic sum is traceless at exact representatives; the
    floating-point residual trace is projected out.
    """
    return AlgebraElement(_innovation_mat(state.h_hat.m, frame, gains))


def aggregate_cost(state: ObserverState, frame: FeatureFrame, gains: Gains) -> float:
    """Sum of weighted chordal output errors: sum_i (k_i/2) |e_i - p_ring_i|^2
    over visible features."""
    if frame._p_mat.shape[0] == 0:
        return 0.0
    r = _output_error_mat(state.h_hat.m, frame) - frame._ref_mat
    per = 0.5 * (r * r).sum(axis=1)
    if isinstance(gains.kp, float):
        return float(gains.kp * per.sum())
    k = np.array([gains.kp[i] for i in frame._idx])
    return float(k @ per)


def _split_step(h_m: np.ndarray, delta: np.ndarray, w: np.ndarray, dt: float) -> np.ndarray:
    """exp(-dt Delta) . H . exp(dt W); either exponential is skipped when its
    argument vanishes (pure prediction / pure correction)."""
    out = h_m
    if w.any():
        out = out @ expm3(dt * w)
    if delta.any():
        out = expm3(-dt * delta) @ out
    return out


def step_full(state: ObserverState, frame: FeatureFrame, gains: Gains, dt: float,
              n_inner: int = 1) -> ObserverState:
    """One step of the full-velocity observer Hdot_hat = H_hat U - Delta H_hat.

    n_inner > 1 integrates the same frame in n_inner substeps against frozen
    measurements (per-frame inner iteration).
    """
    if state.mode is not ObserverMode.FULL_VELOCITY:
        raise ValueError(f"step_full called in mode {state.mode}")
    if frame.u_full is None:
        raise MissingVelocity("full-velocity step requires frame.u_full")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    h = state.h_hat.m
    sub = dt / n_inner
    for _ in range(n_inner):
        delta = _innovation_mat(h, frame, gains)
        h = _split_step(h, delta, frame.u_full.m, sub)
    return ObserverState(GroupElement(h), state.gamma_hat, state.mode)


def step_adaptive_gamma(state: ObserverState, frame: FeatureFrame, gains: Gains,
                        dt: float, n_inner: int = 1) -> ObserverState:
    """One step of the adaptive observer for constant xi_dot/d:

        Hdot_hat     = H_hat (Omega_x + Gamma_hat) - Delta H_hat
        Gammadot_hat = [Gamma_hat, Omega_x] - ki Ad_{H_hat^T} Delta

    with Ad_{H_hat^T} Delta = H_hat^T Delta H_hat^-T.  Gamma_hat is projected
    back onto the traceless subspace after the Euler update.
    """
    if state.mode is not ObserverMode.ADAPTIVE_GAMMA:
        raise ValueError(f"step_adaptive_gamma called in mode {state.mode}")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    h = state.h_hat.m
    g = state.gamma_hat
    om = skew(frame.omega).m
    sub = dt / n_inner
    for _ in range(n_inner):
        delta = _innovation_mat(h, frame, gains)
        h_new = _split_step(h, delta, om + g, sub)
        g_dot = lie_bracket(g, om) - gains.ki * (h.T @ delta @ inv3(h).T)
        g = g + sub * g_dot
        g = g - (np.trace(g) / 3.0) * _I3
        h = h_new
    return ObserverState(GroupElement(h), g, state.mode)


def step_adaptive_gamma1(state: ObserverState, frame: FeatureFrame, gains: Gains,
                         dt: float, n_inner: int = 1) -> ObserverState:
    """One step of the adaptive observer for constant V/d:

        Hdot_hat      = H_hat (Omega_x + Gamma1_hat - tr(Gamma1_hat)/3 I) - Delta H_hat
        Gamma1dot_hat = Gamma1_hat Omega_x - ki Ad_{H_hat^T} Delta

    Gamma1_hat is not traceless and is not projected.
    """
    if state.mode is not ObserverMode.ADAPTIVE_GAMMA1:
        raise ValueError(f"step_adaptive_gamma1 called in mode {state.mode}")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    h = state.h_hat.m
    g = state.gamma_hat
    om = skew(frame.omega).m
    sub = dt / n_inner
    for _ in range(n_inner):
        delta = _innovation_mat(h, frame, gains)
        w = om + g - (np.trace(g) / 3.0) * _I3
        h_new = _split_step(h, delta, w, sub)
        g_dot = g @ om - gains.ki * (h.T @ delta @ inv3(h).T)
        g = g + sub * g_dot
        h = h_new
    return ObserverState(GroupElement(h), g, state.mode)


_STEPPERS = {
    ObserverMode.FULL_VELOCITY: step_full,
    ObserverMode.ADAPTIVE_GAMMA: step_adaptive_gamma,
    ObserverMode.ADAPTIVE_GAMMA1: step_adaptive_gamma1,
}


def step(state: ObserverState, frame: FeatureFrame, gains: Gains, dt: float,
         n_inner: int = 1) -> ObserverState:
    """Dispatch to the mode-specific stepper."""
    return _STEPPERS[state.mode](state, frame, gains, dt, n_inner=n_inner)


def rk4_renorm_step(state: ObserverState, frame: FeatureFrame, gains: Gains,
                    dt: float) -> ObserverState:
    """Classical RK4 on the raw matrix ODE Hdot = H U - Delta H followed by a
    determinant renormalization.  Benchmark alternative to the exponential
    split step; full-velocity mode only."""
    if frame.u_full is None:
        raise MissingVelocity("rk4 step requires frame.u_full")
    u = frame.u_full.m

    def f(h_m: np.ndarray) -> np.ndarray:
        return h_m @ u - _innovation_mat(h_m, frame, gains) @ h_m

    h = state.h_hat.m
    k1 = f(h)
    k2 = f(h + 0.5 * dt * k1)
    k3 = f(h + 0.5 * dt * k2)
    k4 = f(h + dt * k3)
    h_new = h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return ObserverState(GroupElement(h_new), state.gamma_hat, state.mode)


def canonical_error(state: ObserverState, h_true: GroupElement) -> GroupElement:
    """Right group error E = H_hat H^-1 (identity iff the estimate is exact)."""
    return GroupElement(state.h_hat.m @ inv3(h_true.m))


def lyapunov_full(state: ObserverState, frame: FeatureFrame, gains: Gains) -> float:
    """Descent function of the full-velocity observer.

    By right invariance the aggregate cost evaluated on measurements equals
    the error cost C(E, p_ring), so no ground truth is needed."""
    return aggregate_cost(state, frame, gains)


def lyapunov_adaptive(state: ObserverState, frame: FeatureFrame, gains: Gains,
                      gamma_true: np.ndarray) -> float:
    """Joint descent function of the adaptive observers:
    L = C + (1/2 ki) ||Gamma - Gamma_hat||_F^2.  gamma_true is simulator
    ground truth (testing only)."""
    g_err = np.asarray(gamma_true, dtype=float) - state.gamma_hat
    return aggregate_cost(state, frame, gains) + float(np.sum(g_err ** 2)) / (2.0 * gains.ki)


def trace_positivity_check(state: ObserverState, frame: FeatureFrame,
                           h_true: GroupElement) -> float:
    """Non-negative trace functional from the convergence analysis.

    Builds the unit-gain gradient sum G = sum_i pi_{e_i} p_ring_i e_i^T over
    all reference directions with the literal representatives
    e_i = E p_ring_i / |E p_ring_i| and returns tr(G E^-T), which equals
    sum_i (|E p_i|^2 |p_i|^2 - ((E p_i)^T p_i)^2) / |E p_i|^3 >= 0 and
    vanishes only where E is a positive multiple of the identity.
    """
    e_m = state.h_hat.m @ inv3(h_true.m)
    g = np.zeros((3, 3))
    for p_ring in frame.reference:
        w = e_m @ p_ring.v
        e = w / np.linalg.norm(w)
        g += projector(e) @ np.outer(p_ring.v, e)
    return float(np.trace(g @ inv3(e_m).T))

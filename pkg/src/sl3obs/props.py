"""Self-contained property suite: every module invariant exercised with a
seeded generator, one pass/fail line per property.

Used by the ``property-suite`` CLI subcommand; the pytest suite covers the
same ground (and more) with finer-grained assertions.
"""

from __future__ import annotations

import time

import numpy as np

from .consistency import check_consistent, cross_validate, stabilizer_nullity
from .observer import (
    FeatureFrame,
    Gains,
    ObserverMode,
    ObserverState,
    aggregate_cost,
    canonical_error,
    innovation,
    step,
    step_full,
    trace_positivity_check,
)
from .scene import (
    CameraState,
    DriftTrajectory,
    OrbitTrajectory,
    PlaneParams,
    RigidVelocity,
    default_feature_square,
    gamma1_term,
    gamma_term,
    rigid_step,
    true_group_velocity,
    true_homography,
)
from .sim import load_scenario, run_scenario
from .sl3 import (
    AlgebraElement,
    GroupElement,
    ProjectivePoint,
    canonicalize,
    exp_sl3,
    expm3,
    group_action,
    measurement_map,
    skew,
)

_PLANE = PlaneParams(np.array([0.0, 0.0, 1.0]), 1.0)
_REFS = tuple(default_feature_square(_PLANE))


def _rand_algebra(rng, scale=0.35) -> AlgebraElement:
    return AlgebraElement(rng.normal(size=(3, 3)) * scale)


def _rand_group(rng, scale=0.35) -> GroupElement:
    return exp_sl3(_rand_algebra(rng, scale))


def _rand_direction(rng) -> ProjectivePoint:
    v = rng.normal(size=3)
    v[2] = abs(v[2]) + 0.2
    return ProjectivePoint(v)


def _frame_from(h_true: GroupElement, u=None, omega=None) -> FeatureFrame:
    p = tuple(measurement_map(h_true, r) for r in _REFS)
    return FeatureFrame(observed=tuple(enumerate(p)), reference=_REFS,
                        omega=np.zeros(3) if omega is None else omega, u_full=u)


def prop_determinant_preservation(rng, n):
    for _ in range(n):
        g = _rand_group(rng, 0.8)
        assert abs(np.linalg.det(g.m) - 1.0) <= 1e-9
        g2 = g @ g.inv()
        assert abs(np.linalg.det(g2.m) - 1.0) <= 1e-9


def prop_right_action_composition(rng, n):
    for _ in range(n):
        q1, q2 = _rand_group(rng), _rand_group(rng)
        p = _rand_direction(rng)
        a = measurement_map(q2, measurement_map(q1, p))
        b = measurement_map(q1 @ q2, p)
        assert np.max(np.abs(a.v - b.v)) <= 1e-12


def prop_exp_commuting(rng, n):
    for _ in range(n):
        a, b = rng.normal(size=2)
        x = AlgebraElement(np.diag([a, -a, 0.0]))
        y = AlgebraElement(np.diag([0.0, -b, b]))
        lhs = exp_sl3(x + y).m
        rhs = (exp_sl3(x) @ exp_sl3(y)).m
        assert np.max(np.abs(lhs - rhs)) <= 1e-10


def prop_canonical_idempotent(rng, n):
    for _ in range(n):
        v = rng.normal(size=3) * rng.uniform(0.1, 10.0)
        c = canonicalize(v)
        assert np.array_equal(canonicalize(c), c)


def prop_homography_kinematics(rng, n):
    dt = 1e-6
    for _ in range(n):
        cam = CameraState.identity()
        vel = RigidVelocity(rng.normal(size=3) * 0.3, rng.normal(size=3) * 0.3)
        for _ in range(3):
            cam = rigid_step(cam, vel, 0.05, plane=_PLANE)
        h0 = true_homography(cam, _PLANE)
        h1 = true_homography(rigid_step(cam, vel, dt, plane=_PLANE), _PLANE)
        u = true_group_velocity(cam, vel, _PLANE)
        fd = (h1.m - h0.m) / dt
        an = h0.m @ u.m
        assert np.max(np.abs(fd - an)) / max(np.max(np.abs(an)), 1e-3) <= 1e-3


def prop_scene_identities(rng, n):
    for _ in range(n):
        traj = DriftTrajectory(_PLANE, rng.normal(size=3) * 0.1,
                               omega_body=rng.normal(size=3) * 0.2)
        cam, vel = traj.sample(rng.uniform(0.0, 5.0))
        d = cam.d(_PLANE)
        gamma = (d / _PLANE.d_ring) ** (1.0 / 3.0)
        assert abs(gamma ** 3 - d / _PLANE.d_ring) <= 1e-12
        assert np.max(np.abs(cam.eta(_PLANE) - cam.R.T @ _PLANE.eta_ring)) <= 1e-12
        assert abs(d - (_PLANE.d_ring + cam.eta(_PLANE) @ cam.zeta())) <= 1e-12
        g = gamma_term(cam, vel, _PLANE)
        g1 = gamma1_term(cam, vel, _PLANE)
        assert np.max(np.abs(g.m - (g1 - np.trace(g1) / 3.0 * np.eye(3)))) <= 1e-12


def prop_gamma_odes(rng, n):
    dt = 1e-6
    for _ in range(n):
        traj = DriftTrajectory(_PLANE, rng.normal(size=3) * 0.1,
                               omega_body=rng.normal(size=3) * 0.3)
        t = rng.uniform(0.0, 5.0)
        cam0, vel0 = traj.sample(t)
        cam1, vel1 = traj.sample(t + dt)
        g0 = gamma_term(cam0, vel0, _PLANE).m
        g1 = gamma_term(cam1, vel1, _PLANE).m
        fd = (g1 - g0) / dt
        an = g0 @ skew(vel0.omega).m - skew(vel0.omega).m @ g0
        assert np.max(np.abs(fd - an)) <= 1e-4 * max(1.0, np.max(np.abs(an)))
        orb = OrbitTrajectory(_PLANE, np.zeros(3), 0.2, 0.4)
        cam0, vel0 = orb.sample(t)
        cam1, vel1 = orb.sample(t + dt)
        G0 = gamma1_term(cam0, vel0, _PLANE)
        G1 = gamma1_term(cam1, vel1, _PLANE)
        fd = (G1 - G0) / dt
        an = G0 @ skew(vel0.omega).m
        assert np.max(np.abs(fd - an)) <= 1e-4 * max(1.0, np.max(np.abs(an)))


def prop_innovation_equivariance(rng, n):
    gains = Gains(kp=1.0, ki=1.0)
    for _ in range(n):
        h_true, h_hat, q = (_rand_group(rng) for _ in range(3))
        frame = _frame_from(h_true)
        d1 = innovation(ObserverState(h_hat), frame, gains).m
        moved = tuple((i, measurement_map(q, p)) for i, p in frame.observed)
        frame_q = FeatureFrame(observed=moved, reference=_REFS)
        d2 = innovation(ObserverState(h_hat @ q), frame_q, gains).m
        assert np.max(np.abs(d1 - d2)) <= 1e-10


def prop_cost_invariance(rng, n):
    gains = Gains(kp=2.0, ki=1.0)
    for _ in range(n):
        h_true, h_hat, q = (_rand_group(rng) for _ in range(3))
        frame = _frame_from(h_true)
        c1 = aggregate_cost(ObserverState(h_hat), frame, gains)
        moved = tuple((i, measurement_map(q, p)) for i, p in frame.observed)
        c2 = aggregate_cost(ObserverState(h_hat @ q),
                            FeatureFrame(observed=moved, reference=_REFS), gains)
        assert abs(c1 - c2) <= 1e-12 * max(1.0, c1)


def prop_gradient_identity(rng, n):
    gains = Gains(kp=3.0, ki=1.0)
    h_true = _rand_group(rng, 0.2)
    frame = _frame_from(h_true)
    hs = 1e-6
    for _ in range(n):
        h_hat = _rand_group(rng, 0.25)
        u = _rand_algebra(rng, 1.0)
        delta = innovation(ObserverState(h_hat), frame, gains).m
        lhs = float(np.sum(delta * u.m))
        cp = aggregate_cost(ObserverState(GroupElement(expm3(hs * u.m) @ h_hat.m)),
                            frame, gains)
        cm = aggregate_cost(ObserverState(GroupElement(expm3(-hs * u.m) @ h_hat.m)),
                            frame, gains)
        fd = (cp - cm) / (2.0 * hs)
        assert abs(lhs - fd) <= 1e-5 * max(abs(fd), 1e-6)


def prop_error_autonomy(rng, n):
    dt, gains = 1e-3, Gains(kp=60.0, ki=1.0)
    e0 = _rand_group(rng, 0.2)

    def evolve(h0, phase):
        h = h0
        st = ObserverState(GroupElement(e0.m @ h0.m))
        errs = []
        for k in range(n):
            u = AlgebraElement(np.array([
                [np.sin(0.9 * k * dt + phase), 0.2, 0.1],
                [0.0, -0.3 * np.cos(k * dt), 0.2],
                [0.1, 0.0, 0.0]]) * 0.4)
            frame = _frame_from(h, u=u)
            st = step_full(st, frame, gains, dt)
            h = GroupElement(h.m @ expm3(dt * u.m))
            errs.append(canonical_error(st, h).m)
        return errs

    ea = evolve(_rand_group(np.random.default_rng(5), 0.3), 0.0)
    eb = evolve(_rand_group(np.random.default_rng(17), 0.3), 1.3)
    dev = max(float(np.max(np.abs(a - b))) for a, b in zip(ea, eb))
    assert dev <= 1e-8, f"autonomy deviation {dev:.2e}"


def prop_lyapunov_monotone(rng, n):
    gains = Gains(kp=60.0, ki=1.0)
    h_true = GroupElement.identity()
    frame = _frame_from(h_true, u=AlgebraElement.zero())
    st = ObserverState(_rand_group(rng, 0.3))
    last = aggregate_cost(st, frame, gains)
    for _ in range(n):
        st = step_full(st, frame, gains, 1e-3)
        cur = aggregate_cost(st, frame, gains)
        assert cur <= last + 1e-9
        last = cur


def prop_equilibrium_implies_identity(rng, n):
    gains = Gains(kp=60.0, ki=1.0)
    frame = _frame_from(GroupElement.identity(), u=AlgebraElement.zero())
    for _ in range(n):
        st = ObserverState(_rand_group(rng, 0.25))
        for _ in range(6000):
            st = step_full(st, frame, gains, 1e-3)
        if innovation(st, frame, gains).norm() < 1e-12:
            err = np.max(np.abs(st.h_hat.m - np.eye(3)))
            assert err <= 1e-6, f"flow stalled away from identity: {err:.2e}"


def prop_trace_positivity(rng, n):
    frame = FeatureFrame(observed=(), reference=_REFS)
    for _ in range(n):
        e = _rand_group(rng, 0.5)
        val = trace_positivity_check(ObserverState(e), frame, GroupElement.identity())
        assert val >= -1e-12


def prop_consistency_oracles(rng, n):
    for _ in range(n):
        m = rng.integers(4, 9)
        dirs = [_rand_direction(rng) for _ in range(m)]
        cross_validate(dirs)


def prop_consistency_invariances(rng, n):
    for _ in range(n):
        dirs = [_rand_direction(rng) for _ in range(5)]
        verdict = check_consistent(dirs).consistent
        perm = list(rng.permutation(5))
        assert check_consistent([dirs[i] for i in perm]).consistent == verdict
        flipped = [ProjectivePoint(-d.v) for d in dirs]
        assert check_consistent(flipped).consistent == verdict


def prop_dropout_pure_prediction(rng, n):
    gains = Gains(kp=60.0, ki=1.0)
    u = _rand_algebra(rng, 0.4)
    empty = FeatureFrame(observed=(), reference=_REFS, u_full=u)
    st = ObserverState(_rand_group(rng, 0.3))
    h = st.h_hat.m
    for _ in range(n):
        st = step_full(st, empty, gains, 1e-3)
        h = h @ expm3(1e-3 * u.m)
    assert np.max(np.abs(st.h_hat.m - h)) <= 1e-12


def prop_run_determinism(rng, n):
    doc = {
        "schema": 1,
        "trajectory": {"type": "constant_xi_over_d", "xi_dot": [0.02, 0.0, 0.0]},
        "duration": 0.2, "dt": 1e-3,
        "plane": {"normal": [0, 0, 1], "distance": 1.0},
        "noise": {"gyro_sigma": 1e-3, "direction_sigma": 1e-4},
        "observer": {"mode": "adaptive_gamma"},
        "seed": 1234,
    }
    a = run_scenario(load_scenario(dict(doc)))
    b = run_scenario(load_scenario(dict(doc)))
    assert a.rows == b.rows


PROPERTIES = (
    ("group determinant preserved", prop_determinant_preservation, 200, 50),
    ("measurement map is a right action", prop_right_action_composition, 100, 30),
    ("exp is a homomorphism on commuting pairs", prop_exp_commuting, 100, 30),
    ("canonicalization idempotent", prop_canonical_idempotent, 200, 50),
    ("homography kinematics Hdot = HU", prop_homography_kinematics, 25, 8),
    ("scene scale/normal identities", prop_scene_identities, 50, 15),
    ("velocity-term transport equations", prop_gamma_odes, 25, 8),
    ("innovation right equivariance", prop_innovation_equivariance, 100, 30),
    ("aggregate cost right invariance", prop_cost_invariance, 100, 30),
    ("innovation matches cost gradient", prop_gradient_identity, 20, 8),
    ("error recursion autonomous", prop_error_autonomy, 10000, 2000),
    ("descent function non-increasing", prop_lyapunov_monotone, 2000, 500),
    ("vanishing innovation implies identity error", prop_equilibrium_implies_identity, 5, 2),
    ("trace functional non-negative", prop_trace_positivity, 100, 40),
    ("consistency oracles agree", prop_consistency_oracles, 500, 100),
    ("consistency verdict invariances", prop_consistency_invariances, 50, 15),
    ("total dropout is pure prediction", prop_dropout_pure_prediction, 500, 100),
    ("scenario runs deterministic", prop_run_determinism, 1, 1),
)


def run_property_suite(quick: bool = False, seed: int = 20240901) -> int:
    """Run every property; print one line per property; return failure count."""
    failures = 0
    for name, fn, n_full, n_quick in PROPERTIES:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            fn(rng, n_quick if quick else n_full)
        except AssertionError as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"ok   {name} ({time.perf_counter() - t0:.2f}s)")
    return failures

"""Group/algebra/projective arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sl3obs.errors import SingularMatrix
from sl3obs.sl3 import (
    AlgebraElement,
    GroupElement,
    ProjectivePoint,
    adjoint,
    canonicalize,
    exp_sl3,
    expm3,
    group_action,
    lie_bracket,
    measurement_map,
    normalize_to_sl3,
    projector,
    skew,
)

RNG = np.random.default_rng(424242)


def rand_traceless(rng, scale=0.5):
    x = rng.normal(size=(3, 3)) * scale
    return x - np.trace(x) / 3.0 * np.eye(3)


def rand_group(rng, scale=0.5):
    return exp_sl3(AlgebraElement(rand_traceless(rng, scale)))


def rand_direction(rng):
    v = rng.normal(size=3)
    v[2] = abs(v[2]) + 0.1
    return ProjectivePoint(v)


def rodrigues(axis, angle):
    k = skew(np.asarray(axis, dtype=float)).m
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


class TestNormalize:
    def test_scalar_multiple_of_identity(self):
        g = normalize_to_sl3(2.0 * np.eye(3))
        np.testing.assert_allclose(g.m, np.eye(3), atol=1e-15)

    def test_identity(self):
        np.testing.assert_allclose(normalize_to_sl3(np.eye(3)).m, np.eye(3))

    def test_scale_invariance(self):
        # oracle: direct determinant computation fixes the unique unit-det
        # representative of the ray through the matrix
        base = np.diag([1.0, 1.0, 2.0 / 3.0]) * 1.5 ** (1.0 / 3.0)
        assert abs(np.linalg.det(base) - 1.0) < 1e-12
        g = normalize_to_sl3(5.0 * base)
        np.testing.assert_allclose(g.m, base, rtol=1e-12)

    def test_negative_determinant_sign_preserved(self):
        m = -np.diag([1.0, 2.0, 3.0])
        g = normalize_to_sl3(m)
        assert np.linalg.det(g.m) == pytest.approx(1.0, abs=1e-12)
        assert g.m[0, 0] > 0  # (-1)^3 scaling flips all signs back

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrix):
            normalize_to_sl3(np.diag([1.0, 1.0, 0.0]))

    def test_determinant_invariant_all_paths(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            g = rand_group(rng, 0.8)
            assert abs(np.linalg.det(g.m) - 1.0) <= 1e-9
            assert abs(np.linalg.det((g @ g).m) - 1.0) <= 1e-9
            assert abs(np.linalg.det(g.inv().m) - 1.0) <= 1e-9


class TestGroupAction:
    def test_identity_action(self):
        p = rand_direction(RNG)
        np.testing.assert_array_equal(group_action(GroupElement.identity(), p).v, p.v)

    def test_composition(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            h1, h2 = rand_group(rng), rand_group(rng)
            p = rand_direction(rng)
            a = group_action(h1, group_action(h2, p))
            b = group_action(h1 @ h2, p)
            np.testing.assert_allclose(a.v, b.v, atol=1e-12)

    def test_quarter_turn_maps_e1_to_e2(self):
        # hand rotation of a basis vector
        rot = normalize_to_sl3(rodrigues([0, 0, 1], math.pi / 2))
        out = group_action(rot, ProjectivePoint(np.array([1.0, 0.0, 0.0])))
        np.testing.assert_allclose(out.v, [0.0, 1.0, 0.0], atol=1e-12)


class TestMeasurementMap:
    def test_identity(self):
        p = rand_direction(RNG)
        np.testing.assert_array_equal(measurement_map(GroupElement.identity(), p).v, p.v)

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            h = rand_group(rng)
            p_ring = rand_direction(rng)
            back = group_action(h, measurement_map(h, p_ring))
            np.testing.assert_allclose(back.v, p_ring.v, atol=1e-12)

    def test_linear_solve_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            h = rand_group(rng)
            p_ring = rand_direction(rng)
            expected = canonicalize(np.linalg.solve(h.m, p_ring.v))
            np.testing.assert_allclose(measurement_map(h, p_ring).v, expected,
                                       atol=1e-12)

    def test_right_action_composition(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            q1, q2 = rand_group(rng), rand_group(rng)
            p = rand_direction(rng)
            a = measurement_map(q2, measurement_map(q1, p))
            b = measurement_map(q1 @ q2, p)
            assert np.max(np.abs(a.v - b.v)) <= 1e-12


class TestAdjoint:
    def test_identity(self):
        x = AlgebraElement(rand_traceless(RNG))
        np.testing.assert_allclose(adjoint(GroupElement.identity(), x).m, x.m)

    def test_trace_preserved(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            out = adjoint(rand_group(rng), AlgebraElement(rand_traceless(rng)))
            assert abs(np.trace(out.m)) <= 1e-12

    def test_composition(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            q1, q2 = rand_group(rng), rand_group(rng)
            x = AlgebraElement(rand_traceless(rng))
            a = adjoint(q1 @ q2, x).m
            b = adjoint(q1, adjoint(q2, x)).m
            np.testing.assert_allclose(a, b, atol=1e-10)


class TestExp:
    def test_exp_zero(self):
        np.testing.assert_array_equal(exp_sl3(AlgebraElement.zero()).m, np.eye(3))

    def test_rodrigues_oracle(self):
        omega = np.array([0.0, 0.0, 1.0])
        expected = rodrigues(omega, math.pi / 2)
        got = exp_sl3(AlgebraElement(skew(omega).m * (math.pi / 2)))
        np.testing.assert_allclose(got.m, expected, atol=1e-13)

    def test_inverse_identity(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            x = AlgebraElement(rand_traceless(rng, 1.0))
            prod = (exp_sl3(x) @ exp_sl3(-x)).m
            np.testing.assert_allclose(prod, np.eye(3), atol=1e-10)

    def test_unit_determinant(self):
        rng = np.random.default_rng(37)
        for _ in range(100):
            x = rand_traceless(rng, 2.0)
            assert abs(np.linalg.det(expm3(x)) - 1.0) <= 1e-10

    def test_commuting_homomorphism(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            a, b = rng.normal(size=2)
            x = AlgebraElement(np.diag([a, -a, 0.0]))
            y = AlgebraElement(np.diag([0.0, -b, b]))
            lhs = exp_sl3(x + y).m
            rhs = (exp_sl3(x) @ exp_sl3(y)).m
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_accuracy_against_scipy(self):
        from scipy.linalg import expm as scipy_expm
        rng = np.random.default_rng(43)
        for _ in range(300):
            x = rand_traceless(rng, 1.0)
            x *= rng.uniform(0.01, 10.0) / np.linalg.norm(x)
            a, b = expm3(x), scipy_expm(x)
            assert np.abs(a - b).max() / np.abs(b).max() <= 2e-12

    def test_accuracy_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        rng = np.random.default_rng(47)
        for _ in range(20):
            x = rand_traceless(rng, 1.0)
            x *= rng.uniform(0.5, 10.0) / np.linalg.norm(x)
            truth = mp.expm(mp.matrix(x.tolist()))
            t = np.array([[float(truth[i, j]) for j in range(3)] for i in range(3)])
            assert np.abs(expm3(x) - t).max() / np.abs(t).max() <= 1e-12


class TestProjectorSkew:
    def test_projector_basis(self):
        np.testing.assert_array_equal(projector(np.array([0.0, 0.0, 1.0])),
                                      np.diag([1.0, 1.0, 0.0]))

    def test_projector_annihilates_and_idempotent(self):
        rng = np.random.default_rng(53)
        for _ in range(50):
            x = rng.normal(size=3)
            x /= np.linalg.norm(x)
            pi = projector(x)
            np.testing.assert_allclose(pi @ x, np.zeros(3), atol=1e-14)
            np.testing.assert_allclose(pi @ pi, pi, atol=1e-14)

    def test_skew_matrix(self):
        np.testing.assert_array_equal(
            skew(np.array([0.0, 0.0, 1.0])).m,
            np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    def test_skew_cross_product(self):
        rng = np.random.default_rng(59)
        for _ in range(50):
            w, y = rng.normal(size=3), rng.normal(size=3)
            np.testing.assert_allclose(skew(w).m @ y, np.cross(w, y), atol=1e-14)
            np.testing.assert_allclose(skew(w).m @ w, np.zeros(3), atol=1e-14)
            np.testing.assert_array_equal(skew(w).m.T, -skew(w).m)

    def test_bracket(self):
        a, b = RNG.normal(size=(3, 3)), RNG.normal(size=(3, 3))
        np.testing.assert_array_equal(lie_bracket(a, b), a @ b - b @ a)


class TestValueTypes:
    def test_algebra_trace_removed(self):
        x = AlgebraElement(np.diag([1.0, 2.0, 3.0]))
        assert abs(np.trace(x.m)) <= 1e-12

    def test_projective_point_unit_norm(self):
        p = ProjectivePoint(np.array([3.0, 4.0, 12.0]))
        assert abs(np.linalg.norm(p.v) - 1.0) <= 1e-12

    def test_arrays_read_only(self):
        g = GroupElement.identity()
        with pytest.raises(ValueError):
            g.m[0, 0] = 5.0

    @given(arrays(np.float64, (3,),
                  elements=st.floats(min_value=-100, max_value=100,
                                     allow_nan=False)))
    @settings(max_examples=200, deadline=None)
    def test_canonical_idempotent(self, v):
        if np.linalg.norm(v) < 1e-6:
            return
        c = canonicalize(v)
        np.testing.assert_array_equal(canonicalize(c), c)

    @given(arrays(np.float64, (3,),
                  elements=st.floats(min_value=-50, max_value=50,
                                     allow_nan=False)))
    @settings(max_examples=200, deadline=None)
    def test_canonical_sign_convention(self, v):
        if np.linalg.norm(v) < 1e-6:
            return
        c = canonicalize(v)
        if c[2] != 0.0:
            assert c[2] > 0.0
        elif c[1] != 0.0:
            assert c[1] > 0.0
        else:
            assert c[0] > 0.0

"""Direction-set consistency and the stabilizer-rank certificate."""

import math

import numpy as np
import pytest

from sl3obs.consistency import (
    ConsistencyReport,
    check_consistent,
    cross_validate,
    stabilizer_nullity,
)
from sl3obs.errors import OracleDisagreement
from sl3obs.sl3 import ProjectivePoint

E1 = ProjectivePoint(np.array([1.0, 0.0, 0.0]))
E2 = ProjectivePoint(np.array([0.0, 1.0, 0.0]))
E3 = ProjectivePoint(np.array([0.0, 0.0, 1.0]))
DIAG = ProjectivePoint(np.array([1.0, 1.0, 1.0]))

CONSISTENT_SET = [E1, E2, E3, DIAG]
# four coplanar directions: every triplet is linearly dependent
COPLANAR_SET = [E1, E2, ProjectivePoint(np.array([1.0, 1.0, 0.0])),
                ProjectivePoint(np.array([1.0, -1.0, 0.0]))]


def upper_hemisphere(rng):
    v = rng.normal(size=3)
    v[2] = abs(v[2])
    return ProjectivePoint(v + np.array([0.0, 0.0, 1e-3]))


class TestCheckConsistent:
    def test_three_directions_inconsistent(self):
        report = check_consistent([E1, E2, E3])
        assert not report.consistent
        assert report.witness_subset is None

    def test_basis_plus_diagonal(self):
        report = check_consistent(CONSISTENT_SET)
        assert report.consistent
        assert report.witness_subset == (0, 1, 2, 3)
        # each triplet containing two basis vectors and the diagonal has
        # |det| = 1/sqrt(3); the basis triplet has det 1
        assert report.min_triplet_det == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-12)

    def test_dependent_triplet_fails(self):
        bad = [E1, E2, E3, ProjectivePoint(np.array([1.0, 1.0, 0.0]))]
        # triplet (e1, e2, (1,1,0)) has determinant 0
        assert not check_consistent(bad).consistent

    def test_first_witness_in_lexicographic_order(self):
        dirs = CONSISTENT_SET + [ProjectivePoint(np.array([0.3, -0.2, 1.0]))]
        report = check_consistent(dirs)
        assert report.consistent
        assert report.witness_subset == (0, 1, 2, 3)

    def test_eps_threshold(self):
        nearly = [E1, E2, E3, ProjectivePoint(np.array([1.0, 1.0, 1e-8]))]
        assert not check_consistent(nearly, eps=1e-6).consistent
        assert check_consistent(nearly, eps=1e-12).consistent

    def test_permutation_covariant(self):
        rng = np.random.default_rng(131)
        for _ in range(50):
            dirs = [upper_hemisphere(rng) for _ in range(5)]
            verdict = check_consistent(dirs).consistent
            perm = rng.permutation(5)
            assert check_consistent([dirs[i] for i in perm]).consistent == verdict

    def test_sign_flip_invariant(self):
        rng = np.random.default_rng(137)
        for _ in range(50):
            dirs = [upper_hemisphere(rng) for _ in range(4)]
            verdict = check_consistent(dirs).consistent
            flipped = [ProjectivePoint(-d.v) for d in dirs]
            assert check_consistent(flipped).consistent == verdict

    def test_report_dict(self):
        d = check_consistent(CONSISTENT_SET).to_dict()
        assert d["consistent"] is True
        assert d["witness_subset"] == [0, 1, 2, 3]
        assert d["stabilizer_nullity"] == 0


class TestStabilizerNullity:
    def test_consistent_set_nullity_zero(self):
        assert stabilizer_nullity(CONSISTENT_SET) == 0

    def test_single_direction(self):
        # the constraint pi_p U p = 0 pins the two off-line entries of U p,
        # leaving a 6-dimensional stabilizer subalgebra (traceless matrices
        # with U e3 proportional to e3)
        assert stabilizer_nullity([E3]) == 6

    def test_single_direction_matches_parabolic_dimension(self):
        # independent count: traceless 3x3 with third column (0, 0, *)
        basis = []
        for i in range(3):
            for j in range(3):
                b = np.zeros((3, 3))
                b[i, j] = 1.0
                basis.append(b)
        constraints = []
        for b in basis:
            col = b @ np.array([0.0, 0.0, 1.0])
            constraints.append([col[0], col[1], np.trace(b)])
        rank = np.linalg.matrix_rank(np.array(constraints).T)
        assert 9 - rank == 6

    def test_coplanar_set_degenerate(self):
        assert stabilizer_nullity(COPLANAR_SET) > 0

    def test_empty_set(self):
        assert stabilizer_nullity([]) == 8


class TestCrossValidate:
    def test_consistent_witness_agreement(self):
        assert cross_validate(CONSISTENT_SET)

    def test_three_directions_vacuous(self):
        assert cross_validate([E1, E2, E3])

    def test_randomized_agreement(self):
        rng = np.random.default_rng(139)
        for _ in range(500):
            n = int(rng.integers(4, 10))
            dirs = [upper_hemisphere(rng) for _ in range(n)]
            assert cross_validate(dirs)

    def test_disagreement_raises(self):
        # nearly coplanar set: triplet determinants ~1e-11 pass a loose eps,
        # but the stabilizer rank test (relative threshold 1e-9) still sees
        # the degeneracy
        dirs = [ProjectivePoint(np.array([1.0, 0.0, 3e-11])),
                ProjectivePoint(np.array([0.0, 1.0, 7e-11])),
                ProjectivePoint(np.array([1.0, 1.0, 2e-11])),
                ProjectivePoint(np.array([1.0, -1.0, 5e-11]))]
        assert check_consistent(dirs, eps=1e-13).consistent
        assert stabilizer_nullity(dirs) > 0
        with pytest.raises(OracleDisagreement):
            cross_validate(dirs, eps=1e-13)

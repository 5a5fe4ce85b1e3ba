"""Consistency of reference-direction sets and non-degeneracy of the cost.

A set of n >= 4 directions is consistent when it contains four directions
whose every triplet is linearly independent.  Consistency guarantees the
aggregate cost has an isolated minimum; the independent certificate is the
rank of the stabilizer intersection computed over a traceless basis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import OracleDisagreement
from .sl3 import ProjectivePoint, projector

log = logging.getLogger(__name__)

DEFAULT_DET_EPS = 1e-6


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    witness_subset: tuple[int, int, int, int] | None
    min_triplet_det: float
    stabilizer_nullity: int

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "witness_subset": list(self.witness_subset) if self.witness_subset else None,
            "min_triplet_det": self.min_triplet_det,
            "stabilizer_nullity": self.stabilizer_nullity,
        }


def _min_triplet_det(vectors: list[np.ndarray], quad: tuple[int, ...]) -> float:
    dets = [abs(np.linalg.det(np.column_stack([vectors[a], vectors[b], vectors[c]])))
            for a, b, c in combinations(quad, 3)]
    return min(dets)


def check_consistent(dirs: list[ProjectivePoint],
                     eps: float = DEFAULT_DET_EPS) -> ConsistencyReport:
    """Search all 4-subsets for one whose four triplets all have
    |det| > eps; the witness is the first passing subset in lexicographic
    index order.

    min_triplet_det reports the witness margin when consistent, otherwise the
    best margin over all 4-subsets (0.0 when n < 4).
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    vectors = [p.v for p in dirs]
    nullity = stabilizer_nullity(dirs)
    best = 0.0
    if len(vectors) >= 4:
        for quad in combinations(range(len(vectors)), 4):
            margin = _min_triplet_det(vectors, quad)
            if margin > eps:
                return ConsistencyReport(True, quad, margin, nullity)
            best = max(best, margin)
    return ConsistencyReport(False, None, best, nullity)


_TRACELESS_BASIS = []
for _i in range(3):
    for _j in range(3):
        if _i != _j:
            _b = np.zeros((3, 3))
            _b[_i, _j] = 1.0
            _TRACELESS_BASIS.append(_b)
_TRACELESS_BASIS.append(np.diag([1.0, -1.0, 0.0]))
_TRACELESS_BASIS.append(np.diag([0.0, 1.0, -1.0]))


def stabilizer_nullity(dirs: list[ProjectivePoint]) -> int:
    """Dimension of the intersection of the per-direction stabilizer
    subalgebras {U in sl(3) : pi_p U p = 0 for every direction p}.

    Builds the stacked linear map U -> (pi_{p_i} U p_i)_i over an
    8-dimensional traceless basis; nullity = 8 - rank with singular values
    thresholded at 1e-9 of the largest.  Zero nullity certifies a
    non-degenerate aggregate cost.
    """
    if not dirs:
        return 8
    rows = np.zeros((3 * len(dirs), 8))
    for i, p in enumerate(dirs):
        pi = projector(p.v)
        for j, basis in enumerate(_TRACELESS_BASIS):
            rows[3 * i:3 * i + 3, j] = pi @ (basis @ p.v)
    svals = np.linalg.svd(rows, compute_uv=False)
    if svals[0] == 0.0:
        return 8
    rank = int(np.sum(svals > 1e-9 * svals[0]))
    return 8 - rank


def cross_validate(dirs: list[ProjectivePoint], eps: float = DEFAULT_DET_EPS) -> bool:
    """Agreement harness: a set judged consistent must have stabilizer
    nullity 0.  Returns True on agreement (vacuously when inconsistent);
    raises OracleDisagreement otherwise."""
    report = check_consistent(dirs, eps)
    if report.consistent and report.stabilizer_nullity != 0:
        log.error("consistency oracles disagree: witness=%s nullity=%d",
                  report.witness_subset, report.stabilizer_nullity)
        raise OracleDisagreement(
            f"subset {report.witness_subset} passes the triplet test but the "
            f"stabilizer intersection has dimension {report.stabilizer_nullity}",
            directions=[p.v.copy() for p in dirs],
        )
    return True

"""Arithmetic for the Special Linear group SL(3), its Lie algebra sl(3), and
the projective action on P^2.

All types are immutable values backed by read-only numpy arrays; every
operation is pure.  Group elements are renormalized to unit determinant on
construction, algebra elements are projected onto the traceless subspace,
and projective points are stored as canonical unit representatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularMatrix

_I3 = np.eye(3)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _freeze_owned(a: np.ndarray) -> np.ndarray:
    """Mark a freshly allocated array read-only without another copy."""
    a.flags.writeable = False
    return a


def real_cbrt(x: float) -> float:
    """Sign-preserving real cube root."""
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def det3(m: np.ndarray) -> float:
    """Cofactor determinant of a 3x3 matrix (avoids LAPACK call overhead)."""
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def inv3(m: np.ndarray) -> np.ndarray:
    """Adjugate inverse of a 3x3 matrix; adequate for the well-conditioned
    unit-determinant matrices used here."""
    d = det3(m)
    if d == 0.0:
        raise SingularMatrix("3x3 matrix is singular")
    adj = np.array([
        [m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1],
         m[0, 2] * m[2, 1] - m[0, 1] * m[2, 2],
         m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]],
        [m[1, 2] * m[2, 0] - m[1, 0] * m[2, 2],
         m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0],
         m[0, 2] * m[1, 0] - m[0, 0] * m[1, 2]],
        [m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0],
         m[0, 1] * m[2, 0] - m[0, 0] * m[2, 1],
         m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]],
    ])
    return adj / d


@dataclass(frozen=True)
class GroupElement:
    """Element of SL(3): a real 3x3 matrix with unit determinant.

    Any invertible matrix is accepted; it is rescaled by det^(-1/3) on
    construction (sign-preserving cube root, so negative-determinant inputs
    map deterministically).
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {m.shape}")
        det = det3(m)
        if abs(det) < 1e-12:
            raise SingularMatrix(f"matrix with |det| = {abs(det):.3e} < 1e-12")
        if det != 1.0:
            m = m / real_cbrt(det)
        object.__setattr__(self, "m", _freeze_owned(m))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(_I3)

    def inv(self) -> "GroupElement":
        return GroupElement(inv3(self.m))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.m @ other.m)


@dataclass(frozen=True)
class AlgebraElement:
    """Element of sl(3): a real 3x3 traceless matrix.

    The trace residual is removed on construction (subtract tr/3 * I), so
    floating-point drift from conjugation or summation never accumulates.
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {m.shape}")
        tr = float(m[0, 0] + m[1, 1] + m[2, 2])
        if tr != 0.0:
            m = m - (tr / 3.0) * _I3
        object.__setattr__(self, "m", _freeze_owned(m))

    @classmethod
    def zero(cls) -> "AlgebraElement":
        return cls(np.zeros((3, 3)))

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.m)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.m + other.m)

    def norm(self) -> float:
        return float(np.linalg.norm(self.m))


def canonicalize(v: np.ndarray) -> np.ndarray:
    """Canonical unit representative of a projective direction.

    Normalizes to unit length and fixes the sign so that v3 > 0, falling back
    to v2 > 0 when v3 = 0 and to v1 > 0 when v3 = v2 = 0.  Idempotent.
    """
    v = np.asarray(v, dtype=float)
    n = math.sqrt(float(v @ v))
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("cannot canonicalize zero or non-finite vector")
    # skip the division within a few ulps of unit norm so the map is exactly
    # idempotent (the sign flip alone is lossless)
    scale = 1.0 if abs(n - 1.0) <= 5e-16 else 1.0 / n
    pivot = v[2] if v[2] != 0.0 else (v[1] if v[1] != 0.0 else v[0])
    return v * (-scale if pivot < 0.0 else scale)


@dataclass(frozen=True)
class ProjectivePoint:
    """Element of P^2 stored as its canonical unit 3-vector representative."""

    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _freeze_owned(canonicalize(self.v)))

    @classmethod
    def from_xyz(cls, x: float, y: float, z: float) -> "ProjectivePoint":
        return cls(np.array([x, y, z]))


def normalize_to_sl3(m: np.ndarray) -> GroupElement:
    """Rescale an invertible matrix to unit determinant: m / det(m)^(1/3).

    Raises SingularMatrix when |det(m)| < 1e-12.
    """
    return GroupElement(np.asarray(m, dtype=float))


def group_action(h: GroupElement, p: ProjectivePoint) -> ProjectivePoint:
    """Left action of SL(3) on P^2: p -> Hp/|Hp| (canonical representative)."""
    return ProjectivePoint(h.m @ p.v)


def measurement_map(h: GroupElement, p_ring: ProjectivePoint) -> ProjectivePoint:
    """Body-frame measurement of a reference direction: H^-1 p / |H^-1 p|.

    Identical to group_action(h.inv(), p_ring).
    """
    return group_action(h.inv(), p_ring)


def adjoint(q: GroupElement, x: AlgebraElement) -> AlgebraElement:
    """Adjoint action Ad_Q X = Q X Q^-1 on sl(3)."""
    return AlgebraElement(q.m @ x.m @ inv3(q.m))


def exp_sl3(x: AlgebraElement) -> GroupElement:
    """Matrix exponential sl(3) -> SL(3).

    Scaling-and-squaring with a fixed-order Pade approximant; the result has
    unit determinant since the argument is traceless.
    """
    return GroupElement(expm3(x.m))


def projector(x: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the tangent plane at a unit vector:
    pi_x = I - x x^T."""
    x = np.asarray(x, dtype=float)
    return _I3 - np.outer(x, x)


# Pade coefficients and order-selection bounds for the scaling-and-squaring
# exponential (Higham 2005 double-precision values).
_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_PADE_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
               (7, 9.504178996162932e-1), (9, 2.097847961257068))
_THETA_13 = 5.371920351148152


def _pade_ratio(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return inv3(v - u) @ (v + u)


def expm3(x: np.ndarray) -> np.ndarray:
    """Matrix exponential of a 3x3 matrix by scaling-and-squaring with a
    fixed-order diagonal Pade approximant (order chosen from the 1-norm)."""
    norm = float(np.abs(x).sum(axis=0).max())
    x2 = x @ x
    for m, theta in _PADE_THETA:
        if norm <= theta:
            b = _PADE_B[m]
            if m == 3:
                u = x @ (b[3] * x2 + b[1] * _I3)
                v = b[2] * x2 + b[0] * _I3
            elif m == 5:
                x4 = x2 @ x2
                u = x @ (b[5] * x4 + b[3] * x2 + b[1] * _I3)
                v = b[4] * x4 + b[2] * x2 + b[0] * _I3
            elif m == 7:
                x4 = x2 @ x2
                x6 = x4 @ x2
                u = x @ (b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * _I3)
                v = b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * _I3
            else:
                x4 = x2 @ x2
                x6 = x4 @ x2
                x8 = x6 @ x2
                u = x @ (b[9] * x8 + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * _I3)
                v = b[8] * x8 + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * _I3
            return _pade_ratio(u, v)
    s = max(0, int(math.ceil(math.log2(norm / _THETA_13))))
    xs = x / (2.0 ** s)
    b = _PADE_B[13]
    x2 = xs @ xs
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = xs @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2)
              + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * _I3)
    v = (x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2)
         + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * _I3)
    r = _pade_ratio(u, v)
    for _ in range(s):
        r = r @ r
    return r


def lie_bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix commutator [X, Y] = XY - YX."""
    return x @ y - y @ x


def tangent_basis(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane orthogonal to a unit
    vector."""
    v = np.asarray(v, dtype=float)
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = a - (v @ a) * v
    t1 /= math.sqrt(float(t1 @ t1))
    t2 = np.array([v[1] * t1[2] - v[2] * t1[1],
                   v[2] * t1[0] - v[0] * t1[2],
                   v[0] * t1[1] - v[1] * t1[0]])
    return t1, t2


def skew(omega: np.ndarray) -> AlgebraElement:
    """Skew-symmetric matrix of a 3-vector: skew(w) y = w x y."""
    wx, wy, wz = np.asarray(omega, dtype=float)
    return AlgebraElement(np.array([
        [0.0, -wz, wy],
        [wz, 0.0, -wx],
        [-wy, wx, 0.0],
    ]))

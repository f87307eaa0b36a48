"""Matrix Lie group toolkit for SO(3) and SE(3).

Conventions used throughout the package:

* a twist is a 6-vector ``(angular, linear)``,
* a pose is a 4x4 homogeneous matrix ``[[R, p], [0, 1]]``,
* stacked quantities over ``n`` robots are laid out block-wise, robot ``i``
  owning rows/entries ``6i .. 6i+5``.

All functions are pure and operate on plain numpy arrays; they are safe to
call concurrently.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AngleNearPiError, NonPositiveDefiniteError

# Below this rotation angle the closed forms switch to Taylor series (avoids 0/0).
SMALL_ANGLE = 1e-6
# The logarithm refuses rotations with angle >= pi - LOG_ANGLE_MARGIN.
LOG_ANGLE_MARGIN = 1e-6
# Structural validation tolerance (skew symmetry, homogeneous bottom row).
STRUCT_TOL = 1e-9


def hat3(w) -> np.ndarray:
    """3-vector to skew-symmetric matrix, the cross-product operator."""
    w = np.asarray(w, dtype=float)
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def vee3(M) -> np.ndarray:
    """Inverse of :func:`hat3`. Rejects matrices that are not skew-symmetric."""
    M = np.asarray(M, dtype=float)
    sym = 0.5 * (M + M.T)
    if np.abs(sym).max() > STRUCT_TOL:
        raise ValueError("vee3: input is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def wedge(gamma) -> np.ndarray:
    """Twist 6-vector to its 4x4 matrix form."""
    gamma = np.asarray(gamma, dtype=float)
    M = np.zeros((4, 4))
    M[:3, :3] = hat3(gamma[:3])
    M[:3, 3] = gamma[3:]
    return M


def vee(M) -> np.ndarray:
    """Inverse of :func:`wedge`. Rejects matrices with a nonzero bottom row."""
    M = np.asarray(M, dtype=float)
    if np.abs(M[3]).max() > STRUCT_TOL:
        raise ValueError("vee: bottom row is not zero")
    w = vee3(M[:3, :3])
    return np.concatenate([w, M[:3, 3]])


def stack_vee(mats) -> np.ndarray:
    """Concatenate the twist coordinates of a sequence of 4x4 algebra elements."""
    return np.concatenate([vee(M) for M in mats])


def stack_wedge(vec) -> list[np.ndarray]:
    """Split a 6n-vector into n twists and return their 4x4 matrix forms."""
    vec = np.asarray(vec, dtype=float)
    if vec.size % 6:
        raise ValueError("stack_wedge: length must be a multiple of 6")
    return [wedge(vec[k:k + 6]) for k in range(0, vec.size, 6)]


def bar(v) -> np.ndarray:
    """Homogeneous point: append 1."""
    v = np.asarray(v, dtype=float)
    return np.array([v[0], v[1], v[2], 1.0])


def exp_so3(w) -> np.ndarray:
    """Rotation-vector exponential (Rodrigues), Taylor fallback near zero."""
    w = np.asarray(w, dtype=float)
    theta = math.sqrt(float(w @ w))
    W = hat3(w)
    if theta < SMALL_ANGLE:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * W + b * (W @ W)


def rotation_angle(R) -> float:
    """Geodesic angle of a rotation matrix, in [0, pi].

    Uses atan2 of the skew part's magnitude against the trace, which keeps
    full precision for near-identity rotations where acos alone floors out
    around sqrt(eps).
    """
    R = np.asarray(R, dtype=float)
    c = 0.5 * (np.trace(R) - 1.0)
    A = 0.5 * (R - R.T)
    s = math.sqrt(min(1.0, 0.5 * float(np.sum(A * A))))
    return math.atan2(s, c)


def log_so3(R) -> np.ndarray:
    """Rotation-matrix logarithm on the principal branch.

    Raises :class:`AngleNearPiError` for angles at or above
    ``pi - LOG_ANGLE_MARGIN`` where the branch is ambiguous.
    """
    R = np.asarray(R, dtype=float)
    theta = rotation_angle(R)
    if theta >= math.pi - LOG_ANGLE_MARGIN:
        raise AngleNearPiError(f"rotation angle {theta!r} too close to pi")
    A = 0.5 * (R - R.T)
    if theta < 1e-4:
        scale = 1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0
    else:
        scale = theta / math.sin(theta)
    return scale * np.array([A[2, 1], A[0, 2], A[1, 0]])


def left_jacobian(w) -> np.ndarray:
    """Left Jacobian of SO(3); maps the linear twist part into translation."""
    w = np.asarray(w, dtype=float)
    theta = math.sqrt(float(w @ w))
    W = hat3(w)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * W + (W @ W) / 6.0
    a = (1.0 - math.cos(theta)) / theta**2
    b = (theta - math.sin(theta)) / theta**3
    return np.eye(3) + a * W + b * (W @ W)


def left_jacobian_inv(w) -> np.ndarray:
    """Inverse of :func:`left_jacobian` in closed form."""
    w = np.asarray(w, dtype=float)
    theta = math.sqrt(float(w @ w))
    W = hat3(w)
    if theta < 1e-4:
        return np.eye(3) - 0.5 * W + (W @ W) / 12.0
    c = 1.0 / theta**2 - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    return np.eye(3) - 0.5 * W + c * (W @ W)


def exp_se3(gamma) -> np.ndarray:
    """Twist 6-vector to pose, closed form (rotation Rodrigues, translation via J)."""
    gamma = np.asarray(gamma, dtype=float)
    X = np.eye(4)
    X[:3, :3] = exp_so3(gamma[:3])
    X[:3, 3] = left_jacobian(gamma[:3]) @ gamma[3:]
    return X


def log_se3(X) -> np.ndarray:
    """Pose to twist 6-vector, principal branch; see :func:`log_so3` for the cut."""
    X = np.asarray(X, dtype=float)
    w = log_so3(X[:3, :3])
    v = left_jacobian_inv(w) @ X[:3, 3]
    return np.concatenate([w, v])


def se3_inverse(X) -> np.ndarray:
    """Pose inverse without a general linear solve."""
    X = np.asarray(X, dtype=float)
    R = X[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ X[:3, 3]
    return out


def f_mat(v) -> np.ndarray:
    """4x6 matrix with  wedge(g) @ bar(v) == f_mat(v) @ g  for every twist g."""
    M = np.zeros((4, 6))
    M[:3, :3] = -hat3(v)
    M[:3, 3:] = np.eye(3)
    return M


def g_mat(v) -> np.ndarray:
    """4x6 matrix with  wedge(g).T @ bar(v) == g_mat(v) @ g  for every twist g."""
    v = np.asarray(v, dtype=float)
    M = np.zeros((4, 6))
    M[:3, :3] = hat3(v)
    M[3, 3:] = v
    return M


def proj_sym(M) -> np.ndarray:
    """Symmetric part of a square matrix."""
    return 0.5 * (M + M.T)


def proj_asym(M) -> np.ndarray:
    """Skew-symmetric part of a square matrix."""
    return 0.5 * (M - M.T)


def proj_se3(M) -> np.ndarray:
    """Orthogonal projection of a 4x4 matrix onto the twist matrices.

    Keeps the skew part of the upper-left 3x3 block and the translation
    column, zeroes everything else. Orthogonal in the Frobenius sense and
    idempotent.
    """
    M = np.asarray(M, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = proj_asym(M[:3, :3])
    out[:3, 3] = M[:3, 3]
    return out


def ad_se3(u) -> np.ndarray:
    """6x6 adjoint operator of a twist: [[hat(w), 0], [hat(v), hat(w)]]."""
    u = np.asarray(u, dtype=float)
    M = np.zeros((6, 6))
    M[:3, :3] = hat3(u[:3])
    M[3:, :3] = hat3(u[3:])
    M[3:, 3:] = M[:3, :3]
    return M


def adjoint(X) -> np.ndarray:
    """6x6 adjoint of a pose: exp(s * ad_se3(u)) == adjoint(exp_se3(s * u))."""
    X = np.asarray(X, dtype=float)
    R = X[:3, :3]
    A = np.zeros((6, 6))
    A[:3, :3] = R
    A[3:, :3] = hat3(X[:3, 3]) @ R
    A[3:, 3:] = R
    return A


def metric_inner(a, b) -> float:
    """Left-invariant metric on twists; reduces to the Euclidean dot product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(a @ b)


def cholesky_spd(M, context="matrix", t=None, robot=None) -> np.ndarray:
    """Cholesky factor of M, raising :class:`NonPositiveDefiniteError` on failure."""
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NonPositiveDefiniteError(f"{context} is not positive definite",
                                       t=t, robot=robot) from None


def distance_weighted(X1, X2, P) -> float:
    """Weighted geodesic distance between two stacks of poses.

    Computes sqrt(e' P e) with e the stacked twist of log(inv(X2_i) @ X1_i).
    P must be symmetric positive definite.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    if X1.ndim == 2:
        X1 = X1[None]
        X2 = X2[None]
    P = np.asarray(P, dtype=float)
    if np.abs(P - P.T).max() > STRUCT_TOL:
        raise NonPositiveDefiniteError("distance weight is not symmetric")
    cholesky_spd(P, "distance weight")
    e = np.concatenate([log_se3(se3_inverse(b) @ a) for a, b in zip(X1, X2)])
    return math.sqrt(float(e @ P @ e))


def check_rotation(R, tol=STRUCT_TOL) -> None:
    """Assert the SO(3) membership invariants."""
    R = np.asarray(R, dtype=float)
    if np.abs(R.T @ R - np.eye(3)).max() > tol:
        raise ValueError("rotation is not orthogonal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("rotation determinant is not +1")


def check_pose(X, tol=STRUCT_TOL) -> None:
    """Assert the SE(3) membership invariants."""
    X = np.asarray(X, dtype=float)
    check_rotation(X[:3, :3], tol)
    if np.abs(X[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > tol:
        raise ValueError("pose bottom row is not (0, 0, 0, 1)")

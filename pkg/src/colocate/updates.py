"""Measurement-update core shared by the joint and the decoupled filters.

Both exteroceptive sensors contribute a weighted least-squares residual on the
pose manifold:

* landmark:  0.5 * || X_i ybar - lbar ||^2  weighted by inv(Ctilde Ctilde')
* robot:     0.5 * || X_i zbar - X_j mbar ||^2  weighted by inv(Dtilde Dtilde')

This module evaluates their left-trivialised gradients and geodesic Hessian
blocks in twist coordinates, and provides the inverse-form (low-rank) update
pipeline: given the tracked column blocks of Sigma = inv(P), it produces the
thin SVD factors of Sigma @ H (H the residual Hessian), the small Woodbury
core, and the correction twists for every robot.

The gradient and Hessian formulas are validated against central finite
differences of the residuals; see the selftest suites.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveDefiniteError, SingularCoreError
from .lie import bar, f_mat, g_mat, proj_sym

# Singular values below RANK_TOL * s_max are treated as zero rank.
RANK_TOL = 1e-12
# Condition-number ceiling for the Woodbury core solve.
CORE_COND_LIMIT = 1e12


def weight_inverse(C) -> np.ndarray:
    """Inverse of the homogeneous weight [[C C', 0], [0, 1]] of a 3x3 noise gain."""
    C = np.asarray(C, dtype=float)
    CCt = C @ C.T
    try:
        inv3 = np.linalg.inv(CCt)
    except np.linalg.LinAlgError:
        raise NonPositiveDefiniteError("measurement noise gain is singular") from None
    out = np.eye(4)
    out[:3, :3] = proj_sym(inv3)
    return out


def landmark_information(pose, y, landmark, C):
    """Gradient (6,) and Hessian block (6,6) of the landmark residual at ``pose``."""
    Pinv = weight_inverse(C)
    Fy = f_mat(y)
    r = pose @ bar(y) - bar(landmark)
    u = pose.T @ (Pinv @ r)
    g = Fy.T @ u
    Q = proj_sym(Fy.T @ g_mat(u[:3])) + proj_sym(Fy.T @ pose.T @ Pinv @ pose @ Fy)
    return g, Q


def robot_information(pose_i, pose_j, z, marker, D):
    """Gradients and Hessian blocks of the robot-to-robot residual.

    Returns ``(g_i, g_j, H_ii, H_ij, H_jj)`` in twist coordinates; the block
    ``H_ji`` is exactly ``H_ij.T``. The cross block carries a minus sign: a
    relative measurement constrains the pose *difference*, so its information
    couples the two robots negatively.
    """
    Pinv = weight_inverse(D)
    Fz = f_mat(z)
    Fm = f_mat(marker)
    r = pose_i @ bar(z) - pose_j @ bar(marker)
    ui = pose_i.T @ (Pinv @ r)
    uj = pose_j.T @ (Pinv @ r)
    g_i = Fz.T @ ui
    g_j = -(Fm.T @ uj)
    H_ii = (proj_sym(Fz.T @ g_mat(ui[:3]))
            + proj_sym(Fz.T @ pose_i.T @ Pinv @ pose_i @ Fz))
    H_jj = (proj_sym(Fm.T @ g_mat(-uj[:3]))
            + proj_sym(Fm.T @ pose_j.T @ Pinv @ pose_j @ Fm))
    H_ij = -(Fz.T @ pose_i.T @ Pinv @ pose_j @ Fm)
    return g_i, g_j, H_ii, H_ij, H_jj


def svd_selected(slab, blocks, n, rank_limit):
    """Thin SVD of ``slab @ E.T`` where E selects the given 6-row blocks.

    ``slab`` holds the nonzero columns of Sigma @ H (6n x 6b). Returns
    ``(T, s, V)`` with unit-norm columns and singular values below
    ``RANK_TOL * s_max`` dropped; V is supported on the selected blocks only.
    """
    T, s, Vt = np.linalg.svd(slab, full_matrices=False)
    if s.size and s[0] > 0.0:
        keep = s > RANK_TOL * s[0]
    else:
        keep = np.zeros(s.size, dtype=bool)
    T = T[:, keep]
    s = s[keep]
    Va = Vt[keep].T
    # the slab is 6b columns wide, so the analytic rank bound holds by shape
    assert s.size <= rank_limit
    V = np.zeros((6 * n, s.size))
    for col_block, row_block in enumerate(blocks):
        V[6 * row_block:6 * row_block + 6] = Va[6 * col_block:6 * col_block + 6]
    return T, s, V


def woodbury_core(s, V, T) -> np.ndarray:
    """Core matrix M = inv(inv(S) + V' T) of the low-rank inverse update.

    With it, (I + T S V')^-1 == I - T M V'. Raises
    :class:`SingularCoreError` when the core is numerically singular.
    """
    if s.size == 0:
        return np.zeros((0, 0))
    core = np.diag(1.0 / s) + V.T @ T
    if np.linalg.cond(core) > CORE_COND_LIMIT:
        raise SingularCoreError("low-rank update core is numerically singular")
    return np.linalg.inv(core)


def apply_lowrank(T, M, V, X) -> np.ndarray:
    """Evaluate (I - T M V') @ X without forming the 6n x 6n matrix."""
    if M.shape[0] == 0:
        return X.copy()
    return X - T @ (M @ (V.T @ X))


def landmark_update_engine(cols_i, i, n, pose_i, y, landmark, C):
    """Low-rank update quantities for a landmark measurement at robot ``i``.

    ``cols_i`` is the current column slab Sigma[:, 6i:6i+6]. Returns
    ``(T, s, V, corrections)`` where corrections is the 6n twist vector whose
    per-robot exponentials right-multiply the pose estimates.
    """
    g, Q = landmark_information(pose_i, y, landmark, C)
    slab = cols_i @ Q
    T, s, V = svd_selected(slab, [i], n, rank_limit=6)
    M = woodbury_core(s, V, T)
    sigma_g = cols_i @ g
    corrections = -apply_lowrank(T, M, V, sigma_g)
    return T, s, V, corrections


def robot_update_engine(cols_i, cols_j, i, j, n, pose_i, pose_j, z, marker, D):
    """Low-rank update quantities for a robot-to-robot measurement i -> j.

    ``cols_i`` and ``cols_j`` are the current column slabs of Sigma for the
    observer and the observed robot. Returns ``(T, s, V, corrections)``.
    """
    g_i, g_j, H_ii, H_ij, H_jj = robot_information(pose_i, pose_j, z, marker, D)
    slab = np.concatenate(
        [cols_i @ H_ii + cols_j @ H_ij.T, cols_i @ H_ij + cols_j @ H_jj], axis=1)
    T, s, V = svd_selected(slab, [i, j], n, rank_limit=12)
    M = woodbury_core(s, V, T)
    sigma_g = cols_i @ g_i + cols_j @ g_j
    corrections = -apply_lowrank(T, M, V, sigma_g)
    return T, s, V, corrections

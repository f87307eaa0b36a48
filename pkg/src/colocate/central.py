"""Joint filter over all robot poses.

The filter tracks the stacked pose estimate together with the 6n x 6n
value-function Hessian P (an information-like weight). Between exteroceptive
measurements it integrates, per velocity tick of length dt,

    pose_i   <-  pose_i @ exp(dt * u_i)                    (exact, left invariant)
    dP/dt     =  -P BB' P + sym(P U),   U = blkdiag(ad(u_i)), B = blkdiag(B_i)

with one RK4 step per tick, re-symmetrising the result. A landmark or robot
measurement adds its residual Hessian to P and right-multiplies every pose by
the exponential of the correction twists -inv(P+) @ grad.

Two interchangeable backends are provided:

* :class:`CentralFilter` integrates P directly and solves corrections with a
  Cholesky factorisation (the dense reference form).
* :class:`CentralSigmaFilter` tracks Sigma = inv(P): diagonal blocks by RK4 of
  the equivalent Sigma ODE, off-diagonal blocks by the exact exponential
  factors, updates through the same low-rank pipeline the decoupled nodes use.
  This backend reproduces the decoupled network bit-for-bit up to float
  roundoff and backs the exact-equivalence tests.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NonPositiveDefiniteError
from .lie import ad_se3, adjoint, cholesky_spd, exp_se3, proj_sym
from .measurements import LandmarkMeasurement, RobotMeasurement, VelocityMeasurement
from .updates import (
    apply_lowrank,
    landmark_information,
    landmark_update_engine,
    robot_information,
    robot_update_engine,
    woodbury_core,
)


def _blk(i):
    return slice(6 * i, 6 * i + 6)


def _sorted_velocities(measurements, n):
    by_robot = {m.robot: m for m in measurements}
    if sorted(by_robot) != list(range(n)) or len(measurements) != n:
        raise ValueError("propagate expects exactly one velocity measurement per robot")
    return [by_robot[i] for i in range(n)]


def _rk4(deriv, X, dt):
    k1 = deriv(X)
    k2 = deriv(X + 0.5 * dt * k1)
    k3 = deriv(X + 0.5 * dt * k2)
    k4 = deriv(X + dt * k3)
    return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def sigma_ii_step(sigma_ii, U, BBt, dt):
    """One RK4 step of  dSigma_ii/dt = B B' - sym(U Sigma_ii), re-symmetrised."""
    def deriv(S):
        return BBt - proj_sym(U @ S)
    return proj_sym(_rk4(deriv, sigma_ii, dt))


class CentralFilter:
    """Dense Hessian-form joint filter (the reference implementation)."""

    def __init__(self, poses, P=None, t=0.0, strict=True):
        self.poses = np.array(poses, dtype=float)
        self.n = self.poses.shape[0]
        d = 6 * self.n
        self.P = np.eye(d) if P is None else np.array(P, dtype=float)
        if self.P.shape != (d, d):
            raise ValueError(f"P must be {d}x{d}")
        self.t = float(t)
        self.strict = strict
        self.max_symmetry_defect = 0.0

    def propagate(self, measurements: list[VelocityMeasurement], dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        vels = _sorted_velocities(measurements, self.n)
        d = 6 * self.n
        U = np.zeros((d, d))
        BBt = np.zeros((d, d))
        for m in vels:
            b = _blk(m.robot)
            U[b, b] = ad_se3(m.u)
            BBt[b, b] = m.B @ m.B.T

        def deriv(P):
            return -P @ BBt @ P + proj_sym(P @ U)

        P_new = _rk4(deriv, self.P, dt)
        self.max_symmetry_defect = max(self.max_symmetry_defect,
                                       float(np.abs(P_new - P_new.T).max()))
        self.P = proj_sym(P_new)
        self.t += dt
        if self.strict:
            cholesky_spd(self.P, "propagated P", t=self.t)
        for m in vels:
            self.poses[m.robot] = self.poses[m.robot] @ exp_se3(dt * m.u)

    def _correct(self, H_full, grad_full, robot):
        P_post = self.P + H_full
        try:
            factor = cho_factor(proj_sym(P_post), lower=True)
        except np.linalg.LinAlgError:
            raise NonPositiveDefiniteError("updated P lost positive definiteness",
                                           t=self.t, robot=robot) from None
        corrections = -cho_solve(factor, grad_full)
        self.P = proj_sym(P_post)
        for k in range(self.n):
            self.poses[k] = self.poses[k] @ exp_se3(corrections[_blk(k)])
        return corrections

    def landmark_update(self, m: LandmarkMeasurement):
        g, Q = landmark_information(self.poses[m.robot], m.y, m.landmark, m.C)
        d = 6 * self.n
        H = np.zeros((d, d))
        grad = np.zeros(d)
        H[_blk(m.robot), _blk(m.robot)] = Q
        grad[_blk(m.robot)] = g
        return self._correct(H, grad, m.robot)

    def robot_update(self, m: RobotMeasurement):
        i, j = m.observer, m.observed
        if i == j:
            raise IndexError("observer and observed robot must differ")
        g_i, g_j, H_ii, H_ij, H_jj = robot_information(
            self.poses[i], self.poses[j], m.z, m.marker, m.D)
        d = 6 * self.n
        H = np.zeros((d, d))
        grad = np.zeros(d)
        bi, bj = _blk(i), _blk(j)
        H[bi, bi] = H_ii
        H[bi, bj] = H_ij
        H[bj, bi] = H_ij.T
        H[bj, bj] = H_jj
        grad[bi] = g_i
        grad[bj] = g_j
        return self._correct(H, grad, i)


class CentralSigmaFilter:
    """Inverse-form backend tracking Sigma = inv(P).

    Mirrors the arithmetic of the decoupled network: diagonal blocks are
    integrated by RK4, off-diagonal blocks by the exact per-tick exponential
    factors, and measurement updates go through the shared low-rank engines.
    """

    def __init__(self, poses, sigma=None, t=0.0, strict=True):
        self.poses = np.array(poses, dtype=float)
        self.n = self.poses.shape[0]
        d = 6 * self.n
        self.sigma = np.eye(d) if sigma is None else np.array(sigma, dtype=float)
        if self.sigma.shape != (d, d):
            raise ValueError(f"sigma must be {d}x{d}")
        self.t = float(t)
        self.strict = strict
        self.max_symmetry_defect = 0.0

    def propagate(self, measurements: list[VelocityMeasurement], dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        vels = _sorted_velocities(measurements, self.n)
        factors = [adjoint(exp_se3(-0.5 * dt * m.u)) for m in vels]
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    b = (_blk(i), _blk(j))
                    self.sigma[b] = factors[i] @ self.sigma[b] @ factors[j].T
        for m in vels:
            b = _blk(m.robot)
            self.sigma[b, b] = sigma_ii_step(
                self.sigma[b, b], ad_se3(m.u), m.B @ m.B.T, dt)
        self.t += dt
        self._health()
        for m in vels:
            self.poses[m.robot] = self.poses[m.robot] @ exp_se3(dt * m.u)

    def _health(self):
        self.max_symmetry_defect = max(self.max_symmetry_defect,
                                       float(np.abs(self.sigma - self.sigma.T).max()))
        if self.strict:
            cholesky_spd(proj_sym(self.sigma), "Sigma", t=self.t)

    def _apply_factors(self, T, s, V, corrections):
        M = woodbury_core(s, V, T)
        self.sigma = apply_lowrank(T, M, V, self.sigma)
        for k in range(self.n):
            b = _blk(k)
            self.sigma[b, b] = proj_sym(self.sigma[b, b])
            self.poses[k] = self.poses[k] @ exp_se3(corrections[b])
        self._health()

    def landmark_update(self, m: LandmarkMeasurement):
        i = m.robot
        cols = self.sigma[:, _blk(i)].copy()
        T, s, V, corrections = landmark_update_engine(
            cols, i, self.n, self.poses[i], m.y, m.landmark, m.C)
        self._apply_factors(T, s, V, corrections)
        return corrections

    def robot_update(self, m: RobotMeasurement):
        i, j = m.observer, m.observed
        if i == j:
            raise IndexError("observer and observed robot must differ")
        cols_i = self.sigma[:, _blk(i)].copy()
        cols_j = self.sigma[:, _blk(j)].copy()
        T, s, V, corrections = robot_update_engine(
            cols_i, cols_j, i, j, self.n,
            self.poses[i], self.poses[j], m.z, m.marker, m.D)
        self._apply_factors(T, s, V, corrections)
        return corrections

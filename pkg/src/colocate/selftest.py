"""Self-contained verification suites with independent numerical oracles.

Each suite checks an implemented closed form against a route that does not
share code with it: finite differences for the update gradients and Hessians,
dense inversion for the low-rank Sigma update, direct identities for the Lie
operators. The suites are what ``colocate selftest`` runs and what the test
suite builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lie
from .updates import (
    landmark_information,
    robot_information,
    svd_selected,
    woodbury_core,
)


@dataclass
class SuiteResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"{self.name:<28} max error {self.max_error:.3e} "
                f"(tolerance {self.tolerance:.0e})  {status}")


def fd_gradient(f, dim, h=1e-6):
    """Central-difference gradient of f along the geodesic basis directions."""
    g = np.zeros(dim)
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = h
        g[k] = (f(e) - f(-e)) / (2.0 * h)
    return g


def fd_hessian(f, dim, h=1e-4):
    """Second-difference Hessian via geodesic quadratic forms and polarisation."""
    f0 = f(np.zeros(dim))

    def q(d):
        return (f(h * d) - 2.0 * f0 + f(-h * d)) / h**2

    basis = np.eye(dim)
    diag = np.array([q(basis[k]) for k in range(dim)])
    H = np.diag(diag)
    for k in range(dim):
        for j in range(k + 1, dim):
            H[k, j] = H[j, k] = 0.5 * (q(basis[k] + basis[j]) - diag[k] - diag[j])
    return H


def _random_weight(rng):
    # well away from singular so the FD oracle's own roundoff stays small
    return 0.15 * rng.normal(size=(3, 3)) + np.eye(3)


def _random_pose(rng, rot_scale=1.5, trans_scale=2.0):
    g = np.concatenate([rot_scale * rng.normal(size=3) / 3.0,
                        trans_scale * rng.normal(size=3)])
    return lie.exp_se3(g)


def lie_suite(cases=200, seed=7, f_op=None, g_op=None) -> SuiteResult:
    """Exp/log roundtrips, F/G identities, projection orthogonality, metric form."""
    f_op = f_op or lie.f_mat
    g_op = g_op or lie.g_mat
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        # roundtrip over the admissible angle range
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        theta = rng.uniform(0.0, math.pi - 0.1)
        gamma = np.concatenate([theta * axis, rng.uniform(-5.0, 5.0, 3)])
        back = lie.log_se3(lie.exp_se3(gamma))
        worst = max(worst, float(np.abs(back - gamma).max()))

        # exact F/G identities on integer inputs
        gi = rng.integers(-9, 10, 6).astype(float)
        vi = rng.integers(-9, 10, 3).astype(float)
        G = lie.wedge(gi)
        worst = max(worst, float(np.abs(G @ lie.bar(vi) - f_op(vi) @ gi).max()))
        worst = max(worst, float(np.abs(G.T @ lie.bar(vi) - g_op(vi) @ gi).max()))

        # projection onto the algebra: idempotent and Frobenius-orthogonal
        M = rng.normal(size=(4, 4))
        PM = lie.proj_se3(M)
        worst = max(worst, float(np.abs(lie.proj_se3(PM) - PM).max()))
        psi = lie.wedge(rng.normal(size=6))
        worst = max(worst, abs(float(np.sum((M - PM) * psi))))

        # trace form of the metric equals the twist dot product
        a, b = rng.normal(size=6), rng.normal(size=6)
        weight = np.diag([0.5, 0.5, 0.5, 1.0])
        trace_form = float(np.trace(weight @ lie.wedge(a).T @ lie.wedge(b)))
        worst = max(worst, abs(trace_form - lie.metric_inner(a, b)))
    return SuiteResult("lie operators", worst, 1e-9)


def gradient_suite(cases=100, seed=11) -> SuiteResult:
    """Update gradients versus central finite differences of the residuals."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        Xi, Xj = _random_pose(rng), _random_pose(rng)
        y = rng.uniform(-4.0, 4.0, 3)
        l = rng.uniform(-4.0, 4.0, 3)
        z = rng.uniform(-4.0, 4.0, 3)
        marker = rng.uniform(-1.0, 1.0, 3)
        C, D = _random_weight(rng), _random_weight(rng)
        Pyinv = np.eye(4)
        Pyinv[:3, :3] = np.linalg.inv(C @ C.T)
        Pzinv = np.eye(4)
        Pzinv[:3, :3] = np.linalg.inv(D @ D.T)

        g, _ = landmark_information(Xi, y, l, C)

        def f_land(e):
            r = Xi @ lie.exp_se3(e) @ lie.bar(y) - lie.bar(l)
            return 0.5 * float(r @ Pyinv @ r)

        ref = fd_gradient(f_land, 6)
        scale = max(1.0, float(np.abs(ref).max()))
        worst = max(worst, float(np.abs(g - ref).max()) / scale)

        gi, gj, *_ = robot_information(Xi, Xj, z, marker, D)

        def f_rob(e):
            r = (Xi @ lie.exp_se3(e[:6]) @ lie.bar(z)
                 - Xj @ lie.exp_se3(e[6:]) @ lie.bar(marker))
            return 0.5 * float(r @ Pzinv @ r)

        ref12 = fd_gradient(f_rob, 12)
        scale = max(1.0, float(np.abs(ref12).max()))
        worst = max(worst, float(np.abs(np.concatenate([gi, gj]) - ref12).max()) / scale)
    return SuiteResult("update gradients vs FD", worst, 1e-5)


def hessian_suite(cases=100, seed=13) -> SuiteResult:
    """Update Hessian blocks versus geodesic second differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        Xi, Xj = _random_pose(rng), _random_pose(rng)
        y = rng.uniform(-4.0, 4.0, 3)
        l = rng.uniform(-4.0, 4.0, 3)
        z = rng.uniform(-4.0, 4.0, 3)
        marker = rng.uniform(-1.0, 1.0, 3)
        C, D = _random_weight(rng), _random_weight(rng)
        Pyinv = np.eye(4)
        Pyinv[:3, :3] = np.linalg.inv(C @ C.T)
        Pzinv = np.eye(4)
        Pzinv[:3, :3] = np.linalg.inv(D @ D.T)

        _, Q = landmark_information(Xi, y, l, C)

        def f_land(e):
            r = Xi @ lie.exp_se3(e) @ lie.bar(y) - lie.bar(l)
            return 0.5 * float(r @ Pyinv @ r)

        worst = max(worst, float(np.abs(Q - fd_hessian(f_land, 6)).max()))

        gi, gj, Hii, Hij, Hjj = robot_information(Xi, Xj, z, marker, D)
        W = np.block([[Hii, Hij], [Hij.T, Hjj]])

        def f_rob(e):
            r = (Xi @ lie.exp_se3(e[:6]) @ lie.bar(z)
                 - Xj @ lie.exp_se3(e[6:]) @ lie.bar(marker))
            return 0.5 * float(r @ Pzinv @ r)

        worst = max(worst, float(np.abs(W - fd_hessian(f_rob, 12)).max()))
    return SuiteResult("update Hessians vs FD", worst, 1e-4)


def woodbury_suite(cases=100, seed=17, n=4) -> SuiteResult:
    """Low-rank inverse-form update versus dense (I + Sigma H)^-1 Sigma."""
    rng = np.random.default_rng(seed)
    d = 6 * n
    worst = 0.0
    for _ in range(cases):
        A = rng.normal(size=(d, d))
        sigma = A @ A.T / d + np.eye(d)
        i, j = rng.choice(n, size=2, replace=False)
        Xi, Xj = _random_pose(rng), _random_pose(rng)
        z = rng.uniform(-4.0, 4.0, 3)
        marker = rng.uniform(-1.0, 1.0, 3)
        D = _random_weight(rng)
        _, _, Hii, Hij, Hjj = robot_information(Xi, Xj, z, marker, D)
        H = np.zeros((d, d))
        bi = slice(6 * i, 6 * i + 6)
        bj = slice(6 * j, 6 * j + 6)
        H[bi, bi] = Hii
        H[bi, bj] = Hij
        H[bj, bi] = Hij.T
        H[bj, bj] = Hjj

        dense = np.linalg.solve(np.eye(d) + sigma @ H, sigma)
        slab = np.concatenate([sigma[:, bi] @ Hii + sigma[:, bj] @ Hij.T,
                               sigma[:, bi] @ Hij + sigma[:, bj] @ Hjj], axis=1)
        T, s, V = svd_selected(slab, [i, j], n, rank_limit=12)
        M = woodbury_core(s, V, T)
        low = sigma - T @ (M @ (V.T @ sigma))
        rel = np.linalg.norm(low - dense) / np.linalg.norm(dense)
        worst = max(worst, float(rel))
    return SuiteResult("Woodbury vs dense inverse", worst, 1e-10)


def run_all(cases=100) -> list[SuiteResult]:
    return [
        lie_suite(cases=max(cases, 100)),
        gradient_suite(cases=cases),
        hessian_suite(cases=cases),
        woodbury_suite(cases=cases),
    ]

"""Adapters that let the schedule drive each filter variant identically."""

from __future__ import annotations

import numpy as np

from .central import CentralFilter, CentralSigmaFilter
from .decoupled import Network, make_nodes


class CentralDriver:
    """Runs the joint filter; ``backend`` picks the Hessian or inverse form."""

    def __init__(self, backend="hessian", name=None, strict=True):
        if backend not in ("hessian", "inverse"):
            raise ValueError(f"unknown central backend {backend!r}")
        self.backend = backend
        self.name = name or f"central-{backend}"
        self.strict = strict
        self.filter = None

    def start(self, scenario, poses0, t0):
        d = 6 * scenario.n
        if self.backend == "hessian":
            self.filter = CentralFilter(poses0, scenario.p0_scale * np.eye(d),
                                        t=t0, strict=self.strict)
        else:
            self.filter = CentralSigmaFilter(poses0,
                                             np.eye(d) / scenario.p0_scale,
                                             t=t0, strict=self.strict)

    def on_velocity(self, measurements, dt):
        self.filter.propagate(measurements, dt)

    def on_landmark(self, m):
        self.filter.landmark_update(m)

    def on_robot(self, m):
        self.filter.robot_update(m)

    def poses(self):
        return self.filter.poses.copy()

    @property
    def max_symmetry_defect(self):
        return self.filter.max_symmetry_defect


class DecoupledDriver:
    """Runs the per-robot nodes through the message-passing network."""

    def __init__(self, name="decoupled", wire_roundtrip=True, strict=True):
        self.name = name
        self.wire_roundtrip = wire_roundtrip
        self.strict = strict
        self.network = None
        self.broadcast_log = []

    def start(self, scenario, poses0, t0):
        d = 6 * scenario.n
        sigma0 = np.eye(d) / scenario.p0_scale
        nodes = make_nodes(poses0, sigma0, strict=self.strict, t=t0)
        self.network = Network(nodes, scenario.markers,
                               wire_roundtrip=self.wire_roundtrip)
        self.broadcast_log = []

    def on_velocity(self, measurements, dt):
        self.network.propagate(measurements, dt)

    def on_landmark(self, m):
        self.broadcast_log.append(self.network.landmark_update(m))

    def on_robot(self, m):
        self.broadcast_log.append(self.network.robot_update(m))

    def poses(self):
        return self.network.poses()

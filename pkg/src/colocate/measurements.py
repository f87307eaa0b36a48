"""Sensor measurement records consumed by both filter variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_array(x, shape, name):
    a = np.asarray(x, dtype=float)
    if a.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {a.shape}")
    return a


@dataclass
class VelocityMeasurement:
    """Body-frame velocity reading of one robot.

    ``u`` is the measured twist (angular, linear); ``B`` is the 6x6 noise gain
    the filter assumes for this sensor. ``B`` may be zero in noise-free runs.
    """

    robot: int
    u: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.u = _as_array(self.u, (6,), "u")
        self.B = _as_array(self.B, (6, 6), "B")


@dataclass
class LandmarkMeasurement:
    """Relative position of a known world-frame landmark, seen from a robot."""

    robot: int
    y: np.ndarray          # body-frame position reading, metres
    landmark: np.ndarray   # world-frame landmark position, metres
    C: np.ndarray          # 3x3 noise gain assumed by the filter

    def __post_init__(self):
        self.y = _as_array(self.y, (3,), "y")
        self.landmark = _as_array(self.landmark, (3,), "landmark")
        self.C = _as_array(self.C, (3, 3), "C")


@dataclass
class RobotMeasurement:
    """Relative position of a marker on another robot, seen from the observer."""

    observer: int
    observed: int
    z: np.ndarray          # observer body-frame reading, metres
    marker: np.ndarray     # marker point in the observed robot's body frame
    D: np.ndarray          # 3x3 noise gain assumed by the filter

    def __post_init__(self):
        if self.observer == self.observed:
            raise ValueError("a robot cannot take a relative measurement of itself")
        self.z = _as_array(self.z, (3,), "z")
        self.marker = _as_array(self.marker, (3,), "marker")
        self.D = _as_array(self.D, (3, 3), "D")

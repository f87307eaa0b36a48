"""Deterministic scenario engine: truth, sensors and the event schedule.

A scenario is a human-readable key/value text file whose first non-comment
line must be the version header ``colocate-scenario v1``; ``#`` starts a
comment. Keys (space-separated tokens, repeated keys build lists):

    name <token>                    robots <n>
    duration <s>                    seed <u64>
    rate-velocity-hz <int>          rate-landmark-hz <int>
    rate-robot-hz <int>
    noise-velocity <b>              true velocity noise gain B = b * I6
    noise-landmark <c>              true landmark noise gain C = c * I3
    noise-robot <d>                 true robot noise gain D = d * I3
    filter-noise-velocity <b>       optional filter-assumed gains; default to
    filter-noise-landmark <c>       the true values (used by noise-free runs,
    filter-noise-robot <d>          which still need invertible weights)
    p0-scale <x>                    initial Hessian P0 = x * I_{6n}
    init-translation-error-m <e>    every robot starts exactly e metres off
    init-rotation-error-rad <r>     rotation perturbation scale (std)
    trajectory circular-2d | random-3d
    circle-radius <m>  circle-speed <m/s>
    circle-center <i> <x> <y> <z>   circle-phase <i> <rad>
    start-position <i> <x> <y> <z>  (random-3d)
    volume-half-extent <m>          walk-rate <1/s>
    walk-drive-angular <..>         walk-drive-linear <..>
    walk-max-angular <rad/s>        walk-max-linear <m/s>
    landmark <x> <y> <z>            (repeat; index = file order)
    marker <i> <x> <y> <z>          (optional, default origin)
    observe-landmark <robot> <landmark>
    observe-robot <observer> <observed>

All randomness comes from one counter stream (:class:`colocate.rng.CounterRng`)
owned by the schedule, consumed in a fixed documented order, so a
(scenario, seed) pair fully determines truth, measurements and every filter
output. In 2-D scenarios the realised sensor errors are constrained to the
plane (out-of-plane velocity-noise components and the z measurement-noise
component are zeroed); the filter-assumed gains stay full.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lie import exp_se3, left_jacobian_inv, se3_inverse
from .measurements import LandmarkMeasurement, RobotMeasurement, VelocityMeasurement
from .metrics import metrics_row
from .rng import CounterRng

HEADER = "colocate-scenario v1"
CIRCULAR_2D = "circular-2d"
RANDOM_3D = "random-3d"

# In-plane constraint masks for 2-D scenarios: twist order is (angular, linear).
_PLANAR_TWIST_NOISE = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 0.0])
_PLANAR_POINT_NOISE = np.array([1.0, 1.0, 0.0])


@dataclass
class Scenario:
    name: str
    n: int
    duration: float
    seed: int
    rate_velocity: int
    rate_landmark: int
    rate_robot: int
    noise_velocity: float
    noise_landmark: float
    noise_robot: float
    trajectory: str
    landmarks: np.ndarray
    landmark_edges: list
    robot_edges: list
    filter_noise_velocity: float | None = None
    filter_noise_landmark: float | None = None
    filter_noise_robot: float | None = None
    p0_scale: float = 1.0
    init_translation_error: float = 0.0
    init_rotation_error: float = 0.0
    circle_radius: float = 5.0
    circle_speed: float = 0.5
    circle_centers: np.ndarray | None = None
    circle_phases: np.ndarray | None = None
    start_positions: np.ndarray | None = None
    volume_half_extent: float = 10.0
    walk_rate: float = 0.4
    walk_drive_angular: float = 0.25
    walk_drive_linear: float = 0.4
    walk_max_angular: float = 0.6
    walk_max_linear: float = 1.0
    markers: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("robots must be >= 1")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if min(self.noise_velocity, self.noise_landmark, self.noise_robot) < 0:
            raise ConfigError("noise gains must be non-negative")
        if self.p0_scale <= 0.0:
            raise ConfigError("p0-scale must be positive")
        if self.trajectory not in (CIRCULAR_2D, RANDOM_3D):
            raise ConfigError(f"unknown trajectory kind {self.trajectory!r}")
        for rate, name in ((self.rate_landmark, "landmark"),
                           (self.rate_robot, "robot")):
            if rate < 1 or self.rate_velocity % rate:
                raise ConfigError(
                    f"{name} rate {rate} Hz must divide the velocity rate "
                    f"{self.rate_velocity} Hz")
        self.landmarks = np.asarray(self.landmarks, dtype=float).reshape(-1, 3)
        if self.markers is None:
            self.markers = np.zeros((self.n, 3))
        for i, k in self.landmark_edges:
            if not (0 <= i < self.n and 0 <= k < len(self.landmarks)):
                raise ConfigError(f"observe-landmark {i} {k} out of range")
        for i, j in self.robot_edges:
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise ConfigError(f"observe-robot {i} {j} invalid")
        self.landmark_edges = sorted(self.landmark_edges)
        self.robot_edges = sorted(self.robot_edges)
        if self.trajectory == CIRCULAR_2D:
            if self.circle_centers is None:
                self.circle_centers = np.zeros((self.n, 3))
            if self.circle_phases is None:
                self.circle_phases = np.zeros(self.n)
        elif self.start_positions is None:
            raise ConfigError("random-3d scenarios need start-position entries")

    @property
    def planar(self) -> bool:
        return self.trajectory == CIRCULAR_2D

    def filter_B(self) -> np.ndarray:
        b = self.filter_noise_velocity
        gain = (self.noise_velocity if b is None else b) * np.eye(6)
        if self.planar:
            # 2-D runs constrain velocity noise to the planar axes, in the
            # realisation and in the filter model alike.
            gain = gain * np.diag(_PLANAR_TWIST_NOISE)
        return gain

    def filter_C(self) -> np.ndarray:
        c = self.filter_noise_landmark
        return (self.noise_landmark if c is None else c) * np.eye(3)

    def filter_D(self) -> np.ndarray:
        d = self.filter_noise_robot
        return (self.noise_robot if d is None else d) * np.eye(3)


_SCALAR_KEYS = {
    "duration": ("duration", float),
    "seed": ("seed", int),
    "robots": ("n", int),
    "rate-velocity-hz": ("rate_velocity", int),
    "rate-landmark-hz": ("rate_landmark", int),
    "rate-robot-hz": ("rate_robot", int),
    "noise-velocity": ("noise_velocity", float),
    "noise-landmark": ("noise_landmark", float),
    "noise-robot": ("noise_robot", float),
    "filter-noise-velocity": ("filter_noise_velocity", float),
    "filter-noise-landmark": ("filter_noise_landmark", float),
    "filter-noise-robot": ("filter_noise_robot", float),
    "p0-scale": ("p0_scale", float),
    "init-translation-error-m": ("init_translation_error", float),
    "init-rotation-error-rad": ("init_rotation_error", float),
    "circle-radius": ("circle_radius", float),
    "circle-speed": ("circle_speed", float),
    "volume-half-extent": ("volume_half_extent", float),
    "walk-rate": ("walk_rate", float),
    "walk-drive-angular": ("walk_drive_angular", float),
    "walk-drive-linear": ("walk_drive_linear", float),
    "walk-max-angular": ("walk_max_angular", float),
    "walk-max-linear": ("walk_max_linear", float),
}


def parse_scenario(text: str) -> Scenario:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines or lines[0] != HEADER:
        raise ConfigError(f"scenario must start with the header line {HEADER!r}")

    fields: dict = {"name": "unnamed"}
    landmarks = []
    land_edges = []
    robot_edges = []
    indexed = {"circle-center": {}, "circle-phase": {}, "start-position": {},
               "marker": {}}
    try:
        for line in lines[1:]:
            key, *args = line.split()
            if key == "name":
                fields["name"] = args[0]
            elif key in _SCALAR_KEYS:
                attr, cast = _SCALAR_KEYS[key]
                fields[attr] = cast(args[0])
            elif key == "trajectory":
                fields["trajectory"] = args[0]
            elif key == "landmark":
                landmarks.append([float(a) for a in args[:3]])
            elif key == "observe-landmark":
                land_edges.append((int(args[0]), int(args[1])))
            elif key == "observe-robot":
                robot_edges.append((int(args[0]), int(args[1])))
            elif key in indexed:
                indexed[key][int(args[0])] = [float(a) for a in args[1:]]
            else:
                raise ConfigError(f"unknown scenario key {key!r}")
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed scenario line: {exc}") from exc

    required = ("n", "duration", "seed", "rate_velocity", "rate_landmark",
                "rate_robot", "noise_velocity", "noise_landmark", "noise_robot",
                "trajectory")
    missing = [k for k in required if k not in fields]
    if missing:
        raise ConfigError(f"scenario missing required keys: {missing}")

    n = fields["n"]

    def per_robot(key, width):
        table = indexed[key]
        if not table:
            return None
        out = np.zeros((n, width))
        for i, vals in table.items():
            if not 0 <= i < n:
                raise ConfigError(f"{key}: robot index {i} out of range")
            if len(vals) != width:
                raise ConfigError(f"{key}: expected {width} values for robot {i}")
            out[i] = vals
        return out

    phases = per_robot("circle-phase", 1)
    return Scenario(landmarks=np.array(landmarks).reshape(-1, 3),
                    landmark_edges=land_edges, robot_edges=robot_edges,
                    circle_centers=per_robot("circle-center", 3),
                    circle_phases=None if phases is None else phases[:, 0],
                    start_positions=per_robot("start-position", 3),
                    markers=per_robot("marker", 3), **fields)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def builtin_scenario_path(name: str):
    """Path of a scenario file shipped with the package."""
    from importlib.resources import files
    return files("colocate.scenarios").joinpath(f"{name}.txt")


@dataclass
class TruthState:
    poses: np.ndarray    # (n, 4, 4)
    twists: np.ndarray   # (n, 6), body frame, (angular, linear)
    t: float = 0.0


def _planar_pose(x, y, yaw):
    X = np.eye(4)
    c, s = math.cos(yaw), math.sin(yaw)
    X[:3, :3] = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    X[0, 3] = x
    X[1, 3] = y
    return X


def make_initial_truth(sc: Scenario) -> TruthState:
    poses = np.zeros((sc.n, 4, 4))
    twists = np.zeros((sc.n, 6))
    if sc.trajectory == CIRCULAR_2D:
        omega = sc.circle_speed / sc.circle_radius
        for i in range(sc.n):
            phi = sc.circle_phases[i]
            cx, cy = sc.circle_centers[i, 0], sc.circle_centers[i, 1]
            poses[i] = _planar_pose(cx + sc.circle_radius * math.cos(phi),
                                    cy + sc.circle_radius * math.sin(phi),
                                    phi + 0.5 * math.pi)
            twists[i] = [0.0, 0.0, omega, sc.circle_speed, 0.0, 0.0]
    else:
        for i in range(sc.n):
            poses[i] = np.eye(4)
            poses[i, :3, 3] = sc.start_positions[i]
    return TruthState(poses, twists, 0.0)


def evolve_twists(truth: TruthState, sc: Scenario, dt: float, rng: CounterRng):
    """Advance the truth twists in place (random-3d only; draws 6 normals/robot).

    The law is a mean-reverting random walk with norm clipping; when the
    candidate pose step would leave the configured volume, the offending
    world-frame velocity component is reflected back inside.
    """
    if sc.trajectory == CIRCULAR_2D:
        return
    lam, H = sc.walk_rate, sc.volume_half_extent
    for i in range(sc.n):
        xi = rng.normal(6)
        w = truth.twists[i, :3]
        v = truth.twists[i, 3:]
        w += -lam * w * dt + sc.walk_drive_angular * math.sqrt(dt) * xi[:3]
        v += -lam * v * dt + sc.walk_drive_linear * math.sqrt(dt) * xi[3:]
        for part, cap in ((w, sc.walk_max_angular), (v, sc.walk_max_linear)):
            norm = float(np.linalg.norm(part))
            if norm > cap:
                part *= cap / norm
        R = truth.poses[i, :3, :3]
        for _ in range(2):
            candidate = truth.poses[i] @ exp_se3(dt * truth.twists[i])
            outside = np.abs(candidate[:3, 3]) > H
            if not outside.any():
                break
            world_v = R @ v
            for ax in np.nonzero(outside)[0]:
                if world_v[ax] * candidate[ax, 3] > 0.0:
                    world_v[ax] = -world_v[ax]
            v[:] = R.T @ world_v


def step_truth(truth: TruthState, sc: Scenario, dt: float) -> TruthState:
    """Advance the poses one tick under the current piecewise-constant twists."""
    poses = np.array([X @ exp_se3(dt * u)
                      for X, u in zip(truth.poses, truth.twists)])
    return TruthState(poses, truth.twists.copy(), truth.t + dt)


def _h(v4):
    return v4[:3]


def sample_velocity(truth: TruthState, sc: Scenario,
                    rng: CounterRng) -> list[VelocityMeasurement]:
    """Velocity readings for all robots; draws 6 normals per robot, index order."""
    B_filter = sc.filter_B()
    out = []
    for i in range(sc.n):
        eps = rng.normal(6)
        if sc.planar:
            eps = eps * _PLANAR_TWIST_NOISE
        u = truth.twists[i] + sc.noise_velocity * eps
        out.append(VelocityMeasurement(i, u, B_filter))
    return out


def sample_landmark(truth: TruthState, sc: Scenario,
                    rng: CounterRng) -> list[LandmarkMeasurement]:
    """Landmark readings along the visibility edges, (robot, landmark) order."""
    C_filter = sc.filter_C()
    out = []
    for i, k in sc.landmark_edges:
        delta = rng.normal(3)
        if sc.planar:
            delta = delta * _PLANAR_POINT_NOISE
        l = sc.landmarks[k]
        y = _h(se3_inverse(truth.poses[i]) @ np.array([*l, 1.0]))
        out.append(LandmarkMeasurement(i, y + sc.noise_landmark * delta,
                                       l, C_filter))
    return out


def sample_robot(truth: TruthState, sc: Scenario,
                 rng: CounterRng) -> list[RobotMeasurement]:
    """Robot-to-robot readings along the edges, (observer, observed) order."""
    D_filter = sc.filter_D()
    out = []
    for i, j in sc.robot_edges:
        eta = rng.normal(3)
        if sc.planar:
            eta = eta * _PLANAR_POINT_NOISE
        m = sc.markers[j]
        z = _h(se3_inverse(truth.poses[i]) @ truth.poses[j] @ np.array([*m, 1.0]))
        out.append(RobotMeasurement(i, j, z + sc.noise_robot * eta,
                                    m, D_filter))
    return out


def initial_estimate(truth: TruthState, sc: Scenario,
                     rng: CounterRng) -> np.ndarray:
    """Perturbed truth used to start every filter.

    Per robot (index order) the stream supplies, planar: 3 normals (rotation
    sign, in-plane direction x, y); 3-D: 7 normals (axis 3, sign, direction
    3). Both perturbation magnitudes are exact by construction: the rotation
    angle equals ``init-rotation-error-rad`` and the translation error equals
    ``init-translation-error-m``; only their directions are random.
    """
    poses = np.zeros_like(truth.poses)
    for i in range(sc.n):
        if sc.planar:
            xi = rng.normal(3)
            axis = np.array([0.0, 0.0, 1.0])
            sign = 1.0 if xi[0] >= 0.0 else -1.0
            direction = np.array([xi[1], xi[2], 0.0])
        else:
            xi = rng.normal(7)
            axis = xi[:3]
            axis = axis / max(np.linalg.norm(axis), 1e-12)
            sign = 1.0 if xi[3] >= 0.0 else -1.0
            direction = xi[4:]
        norm = float(np.linalg.norm(direction))
        direction = direction / norm if norm > 1e-12 else np.array([1.0, 0.0, 0.0])
        w = sign * sc.init_rotation_error * axis
        v = left_jacobian_inv(w) @ (sc.init_translation_error * direction)
        poses[i] = truth.poses[i] @ exp_se3(np.concatenate([w, v]))
    return poses


@dataclass
class SimResult:
    scenario: Scenario
    seed: int
    events: list
    metrics: dict
    pose_rows: dict
    truth_rows: list

    def event_lines(self) -> str:
        return "\n".join(self.events) + "\n"


def run_schedule(sc: Scenario, drivers, duration=None, seed=None,
                 collect_events=True) -> SimResult:
    """Drive the registered filters through one deterministic run.

    Event order per base tick: velocity propagation, then (when due) landmark
    updates in (robot, landmark) order, then robot updates in (observer,
    observed) order. All drivers see identical measurement objects. Metrics
    rows are recorded at t = 0 and at every landmark-rate tick.
    """
    duration = sc.duration if duration is None else float(duration)
    seed = sc.seed if seed is None else int(seed)
    names = [d.name for d in drivers]
    if len(set(names)) != len(names):
        raise ConfigError("driver names must be unique")

    rng = CounterRng(seed)
    truth = make_initial_truth(sc)
    est0 = initial_estimate(truth, sc, rng)
    for d in drivers:
        d.start(sc, est0.copy(), 0.0)

    dt = 1.0 / sc.rate_velocity
    steps = round(duration * sc.rate_velocity)
    land_every = sc.rate_velocity // sc.rate_landmark
    robot_every = sc.rate_velocity // sc.rate_robot

    events = []
    metrics = {name: [] for name in names}
    pose_rows = {name: [] for name in names}
    truth_rows = []

    def record(t):
        truth_rows.append((t, truth.poses.copy()))
        for d in drivers:
            est = d.poses()
            metrics[d.name].append(metrics_row(t, est, truth.poses))
            pose_rows[d.name].append((t, est.copy()))

    record(0.0)
    for k in range(steps):
        evolve_twists(truth, sc, dt, rng)
        vels = sample_velocity(truth, sc, rng)
        truth = step_truth(truth, sc, dt)
        for d in drivers:
            d.on_velocity(vels, dt)
        tick = k + 1
        t = tick * dt
        if collect_events:
            events.append(f"{t:.6f} velocity n={sc.n}")
        if tick % land_every == 0:
            if collect_events:
                events.append(f"{t:.6f} landmark-tick")
            for m in sample_landmark(truth, sc, rng):
                if collect_events:
                    events.append(
                        f"{t:.6f} landmark robot={m.robot} lm={_lm_index(sc, m)}")
                for d in drivers:
                    d.on_landmark(m)
        if tick % robot_every == 0:
            if collect_events:
                events.append(f"{t:.6f} robot-tick")
            for m in sample_robot(truth, sc, rng):
                if collect_events:
                    events.append(
                        f"{t:.6f} robot observer={m.observer} observed={m.observed}")
                for d in drivers:
                    d.on_robot(m)
        if tick % land_every == 0:
            record(t)
    return SimResult(sc, seed, events, metrics, pose_rows, truth_rows)


def _lm_index(sc, m):
    for k, l in enumerate(sc.landmarks):
        if np.array_equal(l, m.landmark):
            return k
    return -1

"""Per-robot filter nodes and the message-passing protocol between them.

Each node owns the state a single robot needs:

* its pose estimate,
* one 6n x 6 column slab of Sigma = inv(P) (blocks Sigma[k, id] for all k),
* a 6x6 propagation accumulator K.

Between exteroceptive updates a node propagates on its own: pose and diagonal
block locally, while K accumulates the per-tick factors
``exp(-dt/2 * ad(u))``, newest on the left. Any cross block can then be
reconstructed on demand as

    Sigma_jk(t) = K_j @ Sigma_jk(base) @ K_k'

which is why the only traffic required outside updates is nothing at all: the
tokens carrying K travel once per update epoch.

An update epoch proceeds as a barrier:

1. every node emits a :class:`PropagationToken` and refreshes its column,
2. for a robot measurement the observed robot sends a :class:`PeerState`
   snapshot to the observer; the observer runs the low-rank engine and emits
   an :class:`UpdateBroadcast` (thin SVD factors T, s, V plus the correction
   twists, at most 6n x 24 + 12 factor scalars for a robot update),
3. every node applies the broadcast to its own column and pose, then
   re-bases: the fresh column becomes the new anchor and K resets to the
   identity, keeping the closed-form token product valid afterwards.

Out-of-order or stale messages raise instead of being applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EpochMismatchError,
    MissingTokenError,
    WrongRobotError,
)
from .lie import ad_se3, adjoint, cholesky_spd, exp_se3, proj_sym
from .measurements import LandmarkMeasurement, RobotMeasurement, VelocityMeasurement
from .central import sigma_ii_step
from .updates import (
    apply_lowrank,
    landmark_update_engine,
    robot_update_engine,
    woodbury_core,
)

LANDMARK_UPDATE = "landmark"
ROBOT_UPDATE = "robot"


@dataclass
class PropagationToken:
    """Accumulated propagation factor K of one robot at a given time."""

    sender: int
    K: np.ndarray
    t: float

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float)
        if self.K.shape != (6, 6) or not np.all(np.isfinite(self.K)):
            raise ValueError("token K must be a finite 6x6 matrix")


@dataclass
class PeerState:
    """Snapshot the observed robot sends the observer before a robot update."""

    sender: int
    pose: np.ndarray
    sigma_col: np.ndarray
    K: np.ndarray
    marker: np.ndarray
    t: float
    epoch: int


@dataclass
class UpdateBroadcast:
    """Low-rank update factors plus correction twists, sent to every node.

    ``T`` (6n x r) and ``V`` (6n x r) have unit-norm columns, ``s`` holds the
    retained singular values (r <= 12 for robot updates, r <= 6 for landmark
    updates). ``corrections`` is the full 6n twist vector; each node
    exponentiates its own block. The factor payload is what the message-size
    bound counts; corrections ride along separately.
    """

    kind: str
    T: np.ndarray
    s: np.ndarray
    V: np.ndarray
    corrections: np.ndarray
    t: float
    epoch: int

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.corrections = np.asarray(self.corrections, dtype=float)
        if self.kind not in (LANDMARK_UPDATE, ROBOT_UPDATE):
            raise ValueError(f"unknown broadcast kind {self.kind!r}")
        for name, F in (("T", self.T), ("V", self.V)):
            if F.shape[1] != self.s.size:
                raise ValueError(f"{name} column count must match s")
            if F.shape[1]:
                norms = np.linalg.norm(F, axis=0)
                if np.abs(norms - 1.0).max() > 1e-9:
                    raise ValueError(f"{name} columns must be unit norm")


def _blk(i):
    return slice(6 * i, 6 * i + 6)


class RobotNode:
    """Filter state machine of a single robot."""

    def __init__(self, node_id, n, pose, sigma_col, t=0.0, strict=True):
        self.id = int(node_id)
        self.n = int(n)
        self.pose = np.array(pose, dtype=float)
        self.sigma_col = np.array(sigma_col, dtype=float)
        if self.sigma_col.shape != (6 * self.n, 6):
            raise ValueError(f"sigma_col must be {6 * self.n}x6")
        self.sigma_col_base = self.sigma_col.copy()
        self.K = np.eye(6)
        self.t = float(t)
        self.epoch = 0
        self.strict = strict
        # Time at which the off-diagonal blocks of sigma_col were last
        # reconstructed; propagation leaves them stale until the next refresh.
        self._col_time = self.t

    # -- propagation -------------------------------------------------------

    def local_propagate(self, m: VelocityMeasurement, dt: float):
        if m.robot != self.id:
            raise WrongRobotError(
                f"node {self.id} got a velocity measurement for robot {m.robot}")
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        b = _blk(self.id)
        self.sigma_col[b] = sigma_ii_step(
            self.sigma_col[b], ad_se3(m.u), m.B @ m.B.T, dt)
        self.K = adjoint(exp_se3(-0.5 * dt * m.u)) @ self.K
        self.pose = self.pose @ exp_se3(dt * m.u)
        self.t += dt
        if self.strict:
            cholesky_spd(self.sigma_col[b], "local Sigma block",
                         t=self.t, robot=self.id)

    def make_token(self) -> PropagationToken:
        return PropagationToken(self.id, self.K.copy(), self.t)

    # -- column reconstruction ---------------------------------------------

    def reconstruct_cross(self, token: PropagationToken) -> np.ndarray:
        """Current cross block Sigma[token.sender, self.id] from a token."""
        if token.sender == self.id:
            raise ValueError("cross reconstruction needs a token from another robot")
        if token.t != self.t:
            raise EpochMismatchError(
                f"token from robot {token.sender} is at t={token.t}, node at t={self.t}")
        return token.K @ self.sigma_col_base[_blk(token.sender)] @ self.K.T

    def refresh_column(self, tokens):
        """Bring every off-diagonal block of the tracked column up to now."""
        by_sender = {tok.sender: tok for tok in tokens}
        for k in range(self.n):
            if k == self.id:
                continue
            if k not in by_sender:
                raise MissingTokenError(f"no propagation token from robot {k}")
            self.sigma_col[_blk(k)] = self.reconstruct_cross(by_sender[k])
        self._col_time = self.t

    def _require_fresh_column(self):
        if self._col_time != self.t:
            raise EpochMismatchError(
                f"node {self.id} column is stale; refresh with current tokens first")

    def peer_state(self, marker) -> PeerState:
        self._require_fresh_column()
        return PeerState(self.id, self.pose.copy(), self.sigma_col.copy(),
                         self.K.copy(), np.asarray(marker, dtype=float),
                         self.t, self.epoch)

    # -- update initiation ---------------------------------------------------

    def initiate_landmark_update(self, m: LandmarkMeasurement) -> UpdateBroadcast:
        if m.robot != self.id:
            raise WrongRobotError(
                f"node {self.id} asked to initiate an update for robot {m.robot}")
        self._require_fresh_column()
        T, s, V, corrections = landmark_update_engine(
            self.sigma_col, self.id, self.n, self.pose, m.y, m.landmark, m.C)
        return UpdateBroadcast(LANDMARK_UPDATE, T, s, V, corrections,
                               self.t, self.epoch + 1)

    def initiate_robot_update(self, peer: PeerState,
                              m: RobotMeasurement) -> UpdateBroadcast:
        if m.observer != self.id:
            raise WrongRobotError(
                f"node {self.id} asked to initiate an update observed by robot {m.observer}")
        if peer.sender != m.observed:
            raise ValueError("peer state does not come from the observed robot")
        if peer.t != self.t or peer.epoch != self.epoch:
            raise EpochMismatchError(
                f"peer state from robot {peer.sender} is not aligned with node {self.id}")
        self._require_fresh_column()
        T, s, V, corrections = robot_update_engine(
            self.sigma_col, peer.sigma_col, self.id, peer.sender, self.n,
            self.pose, peer.pose, m.z, m.marker, m.D)
        return UpdateBroadcast(ROBOT_UPDATE, T, s, V, corrections,
                               self.t, self.epoch + 1)

    # -- update application --------------------------------------------------

    def apply_update_broadcast(self, b: UpdateBroadcast, tokens):
        if b.epoch != self.epoch + 1:
            raise EpochMismatchError(
                f"broadcast epoch {b.epoch} does not follow node epoch {self.epoch}")
        if b.t != self.t:
            raise EpochMismatchError(
                f"broadcast at t={b.t} does not match node time {self.t}")
        self.refresh_column(tokens)
        M = woodbury_core(b.s, b.V, b.T)
        self.sigma_col = apply_lowrank(b.T, M, b.V, self.sigma_col)
        mine = _blk(self.id)
        self.sigma_col[mine] = proj_sym(self.sigma_col[mine])
        self.pose = self.pose @ exp_se3(b.corrections[mine])
        self.sigma_col_base = self.sigma_col.copy()
        self.K = np.eye(6)
        self.epoch += 1
        self._col_time = self.t
        if self.strict:
            cholesky_spd(self.sigma_col[mine], "updated Sigma block",
                         t=self.t, robot=self.id)


class Network:
    """Synchronous harness delivering messages between the nodes.

    Every message can optionally be routed through the binary wire codec
    (encode then decode) so integration runs exercise the external interface;
    the round trip is bit-exact so results are unchanged.
    """

    def __init__(self, nodes: list[RobotNode], markers, wire_roundtrip=True):
        self.nodes = nodes
        self.markers = np.asarray(markers, dtype=float)
        self.wire_roundtrip = wire_roundtrip

    def _roundtrip(self, message):
        if not self.wire_roundtrip:
            return message
        from . import wire
        return wire.decode_message(wire.encode_message(message))

    def _tokens(self):
        return [self._roundtrip(node.make_token()) for node in self.nodes]

    def propagate(self, measurements, dt):
        by_robot = {m.robot: m for m in measurements}
        for node in self.nodes:
            node.local_propagate(by_robot[node.id], dt)

    def landmark_update(self, m: LandmarkMeasurement):
        tokens = self._tokens()
        initiator = self.nodes[m.robot]
        initiator.refresh_column(tokens)
        broadcast = self._roundtrip(initiator.initiate_landmark_update(m))
        for node in self.nodes:
            node.apply_update_broadcast(broadcast, tokens)
        return broadcast

    def robot_update(self, m: RobotMeasurement):
        tokens = self._tokens()
        observer = self.nodes[m.observer]
        observed = self.nodes[m.observed]
        observer.refresh_column(tokens)
        observed.refresh_column(tokens)
        peer = self._roundtrip(observed.peer_state(self.markers[m.observed]))
        broadcast = self._roundtrip(observer.initiate_robot_update(peer, m))
        for node in self.nodes:
            node.apply_update_broadcast(broadcast, tokens)
        return broadcast

    def poses(self) -> np.ndarray:
        return np.array([node.pose for node in self.nodes])

    def sigma_matrix(self) -> np.ndarray:
        """Assemble the full Sigma from the refreshed node columns (for tests)."""
        tokens = self._tokens()
        for node in self.nodes:
            node.refresh_column(tokens)
        return np.concatenate([node.sigma_col for node in self.nodes], axis=1)


def make_nodes(poses, sigma0, strict=True, t=0.0) -> list[RobotNode]:
    """Build one node per robot, splitting a full initial Sigma into columns."""
    poses = np.asarray(poses, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    n = poses.shape[0]
    return [RobotNode(i, n, poses[i], sigma0[:, _blk(i)], t=t, strict=strict)
            for i in range(n)]

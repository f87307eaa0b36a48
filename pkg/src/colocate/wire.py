"""Canonical binary serialisation of the protocol messages.

Layout (version 1, all integers and floats little-endian):

    message   := kind:u8 version:u8 body
    kind      := 0 token | 1 peer-state | 2 broadcast
    token     := sender:u64 t:f64 K:mat
    peer      := sender:u64 t:f64 epoch:u64 marker:vec pose:mat sigma_col:mat K:mat
    broadcast := update_kind:u8 t:f64 epoch:u64 T:mat s:vec V:mat corrections:vec
    mat       := rows:u64 cols:u64 data:f64[rows*cols]   (row-major)
    vec       := len:u64 data:f64[len]
    update_kind := 0 landmark | 1 robot

Round trips are bit-exact. The encoder enforces the factor-payload budget of
an update broadcast: at most 6n x 24 + 12 scalars across T, s and V for a
robot update and 6n x 12 + 6 for a landmark update; the 6n correction twists
are carried separately and are not part of that bound.
"""

from __future__ import annotations

import struct

import numpy as np

from . import decoupled

VERSION = 1
KIND_TOKEN = 0
KIND_PEER_STATE = 1
KIND_BROADCAST = 2

_UPDATE_KIND_CODE = {decoupled.LANDMARK_UPDATE: 0, decoupled.ROBOT_UPDATE: 1}
_UPDATE_KIND_NAME = {v: k for k, v in _UPDATE_KIND_CODE.items()}


def _pack_vec(v) -> bytes:
    v = np.ascontiguousarray(v, dtype="<f8").reshape(-1)
    return struct.pack("<Q", v.size) + v.tobytes()


def _pack_mat(M) -> bytes:
    M = np.ascontiguousarray(M, dtype="<f8")
    if M.ndim != 2:
        raise ValueError("matrix field must be 2-D")
    return struct.pack("<QQ", M.shape[0], M.shape[1]) + M.tobytes()


class _Reader:
    def __init__(self, buf: bytes):
        self._buf = buf
        self._off = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self._off + size > len(self._buf):
            raise ValueError("truncated message")
        out = struct.unpack_from(fmt, self._buf, self._off)
        self._off += size
        return out

    def vec(self) -> np.ndarray:
        (k,) = self.take("<Q")
        size = 8 * k
        if self._off + size > len(self._buf):
            raise ValueError("truncated message")
        out = np.frombuffer(self._buf, dtype="<f8", count=k, offset=self._off).copy()
        self._off += size
        return out

    def mat(self) -> np.ndarray:
        rows, cols = self.take("<QQ")
        size = 8 * rows * cols
        if self._off + size > len(self._buf):
            raise ValueError("truncated message")
        out = np.frombuffer(self._buf, dtype="<f8", count=rows * cols,
                            offset=self._off).reshape(rows, cols).copy()
        self._off += size
        return out

    def done(self):
        if self._off != len(self._buf):
            raise ValueError(f"{len(self._buf) - self._off} trailing bytes")


def broadcast_factor_budget(kind: str, state_dim: int) -> int:
    """Maximum factor-payload scalars (T, s, V combined) for a broadcast."""
    if kind == decoupled.ROBOT_UPDATE:
        return state_dim * 24 + 12
    return state_dim * 12 + 6


def encode_message(msg) -> bytes:
    if isinstance(msg, decoupled.PropagationToken):
        return (struct.pack("<BBQd", KIND_TOKEN, VERSION, msg.sender, msg.t)
                + _pack_mat(msg.K))
    if isinstance(msg, decoupled.PeerState):
        return (struct.pack("<BBQdQ", KIND_PEER_STATE, VERSION, msg.sender,
                            msg.t, msg.epoch)
                + _pack_vec(msg.marker) + _pack_mat(msg.pose)
                + _pack_mat(msg.sigma_col) + _pack_mat(msg.K))
    if isinstance(msg, decoupled.UpdateBroadcast):
        payload = msg.T.size + msg.s.size + msg.V.size
        budget = broadcast_factor_budget(msg.kind, msg.corrections.size)
        if payload > budget:
            raise ValueError(
                f"broadcast factor payload {payload} exceeds budget {budget}")
        return (struct.pack("<BBBdQ", KIND_BROADCAST, VERSION,
                            _UPDATE_KIND_CODE[msg.kind], msg.t, msg.epoch)
                + _pack_mat(msg.T) + _pack_vec(msg.s) + _pack_mat(msg.V)
                + _pack_vec(msg.corrections))
    raise TypeError(f"cannot encode {type(msg).__name__}")


def decode_message(buf: bytes):
    r = _Reader(buf)
    kind, version = r.take("<BB")
    if version != VERSION:
        raise ValueError(f"unsupported message version {version}")
    if kind == KIND_TOKEN:
        sender, t = r.take("<Qd")
        K = r.mat()
        r.done()
        return decoupled.PropagationToken(int(sender), K, t)
    if kind == KIND_PEER_STATE:
        sender, t, epoch = r.take("<QdQ")
        marker = r.vec()
        pose = r.mat()
        sigma_col = r.mat()
        K = r.mat()
        r.done()
        return decoupled.PeerState(int(sender), pose, sigma_col, K, marker,
                                   t, int(epoch))
    if kind == KIND_BROADCAST:
        code, t, epoch = r.take("<BdQ")
        if code not in _UPDATE_KIND_NAME:
            raise ValueError(f"unknown update kind code {code}")
        T = r.mat()
        s = r.vec()
        V = r.mat()
        corrections = r.vec()
        r.done()
        return decoupled.UpdateBroadcast(_UPDATE_KIND_NAME[code], T, s, V,
                                         corrections, t, int(epoch))
    raise ValueError(f"unknown message kind {kind}")

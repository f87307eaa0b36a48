"""Binary message codec: bit-exact round trips, layout, size budgets."""

import struct

import numpy as np
import pytest

from colocate import wire
from colocate.decoupled import PeerState, PropagationToken, UpdateBroadcast


def rng():
    return np.random.default_rng(21)


def make_broadcast(kind, n, r):
    gen = rng()
    T, _ = np.linalg.qr(gen.normal(size=(6 * n, r)))
    V, _ = np.linalg.qr(gen.normal(size=(6 * n, r)))
    s = np.sort(gen.uniform(0.5, 2.0, r))[::-1].copy()
    return UpdateBroadcast(kind, T, s, V, gen.normal(size=6 * n), 1.25, 3)


def test_token_roundtrip_bit_exact():
    tok = PropagationToken(2, rng().normal(size=(6, 6)), 0.42)
    buf = wire.encode_message(tok)
    assert buf[0] == wire.KIND_TOKEN
    assert buf[1] == wire.VERSION
    back = wire.decode_message(buf)
    assert back.sender == tok.sender
    assert back.t == tok.t
    assert np.array_equal(back.K, tok.K)
    # byte-stable: encoding the decoded message reproduces the buffer
    assert wire.encode_message(back) == buf


def test_peer_state_roundtrip_bit_exact():
    gen = rng()
    msg = PeerState(1, gen.normal(size=(4, 4)), gen.normal(size=(24, 6)),
                    gen.normal(size=(6, 6)), gen.normal(size=3), 0.7, 9)
    buf = wire.encode_message(msg)
    assert buf[0] == wire.KIND_PEER_STATE
    back = wire.decode_message(buf)
    assert back.sender == msg.sender and back.epoch == msg.epoch
    assert back.t == msg.t
    for field in ("pose", "sigma_col", "K", "marker"):
        assert np.array_equal(getattr(back, field), getattr(msg, field))
    assert wire.encode_message(back) == buf


@pytest.mark.parametrize("kind,r", [("landmark", 6), ("landmark", 3),
                                    ("robot", 12), ("robot", 0)])
def test_broadcast_roundtrip_bit_exact(kind, r):
    msg = make_broadcast(kind, 4, r)
    buf = wire.encode_message(msg)
    assert buf[0] == wire.KIND_BROADCAST
    back = wire.decode_message(buf)
    assert back.kind == msg.kind and back.epoch == msg.epoch and back.t == msg.t
    for field in ("T", "s", "V", "corrections"):
        assert np.array_equal(getattr(back, field), getattr(msg, field))
    assert wire.encode_message(back) == buf


def test_factor_budget_enforced():
    # a landmark broadcast may carry at most 6n x 12 + 6 factor scalars
    msg = make_broadcast("landmark", 4, 12)
    with pytest.raises(ValueError):
        wire.encode_message(msg)
    assert wire.broadcast_factor_budget("robot", 24) == 24 * 24 + 12
    assert wire.broadcast_factor_budget("landmark", 24) == 24 * 12 + 6


def test_truncated_and_trailing_rejected():
    buf = wire.encode_message(PropagationToken(0, np.eye(6), 0.0))
    with pytest.raises(ValueError):
        wire.decode_message(buf[:-4])
    with pytest.raises(ValueError):
        wire.decode_message(buf + b"\x00")


def test_unknown_kind_and_version_rejected():
    buf = wire.encode_message(PropagationToken(0, np.eye(6), 0.0))
    bad_kind = bytes([9]) + buf[1:]
    with pytest.raises(ValueError):
        wire.decode_message(bad_kind)
    bad_version = buf[:1] + bytes([2]) + buf[2:]
    with pytest.raises(ValueError):
        wire.decode_message(bad_version)


def test_layout_is_little_endian_length_prefixed():
    tok = PropagationToken(7, np.eye(6), 2.0)
    buf = wire.encode_message(tok)
    kind, version, sender, t = struct.unpack_from("<BBQd", buf, 0)
    rows, cols = struct.unpack_from("<QQ", buf, struct.calcsize("<BBQd"))
    assert (kind, version, sender, t) == (0, 1, 7, 2.0)
    assert (rows, cols) == (6, 6)
    assert len(buf) == struct.calcsize("<BBQd") + 16 + 36 * 8

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gen import random_case
from hgum.codec import oracle_tokenize, sw_serialize
from hgum.des import DesEngine, DesMode, deserialize, deserialize_phits
from hgum.errors import (
    ConfigMismatch,
    FrameProtocolError,
    IncompleteMessage,
    MalformedFrameHeader,
    TrailingData,
)
from hgum.rom import encode_rom
from hgum.schema import client_schema_from_dict, load_schema, normalize, parse_client_schema
from hgum.tokens import Token, TokenKind
from hgum.wire import WireConfig, int_to_phit, pack

DATA = Path(__file__).parent / "data"
K = TokenKind


def I4(v):
    return v.to_bytes(4, "little")


def H(size, level, p=16):
    return I4(size) + bytes([level]) + bytes(p - 5)


def pad(b, p=16):
    return b + bytes(-len(b) % p)


def load(name, idl=None, tags=None):
    if idl is None:
        sdef = load_schema((DATA / f"{name}.schema.json").read_text(), "Msg")
        tree = normalize(sdef)
        client = parse_client_schema((DATA / f"{name}.client.json").read_text(), tree)
    else:
        sdef = load_schema(json.dumps(idl), "M")
        tree = normalize(sdef)
        client = client_schema_from_dict(tags, tree)
    return sdef, encode_rom(tree, client), client


def toks(rom, wire, cfg=WireConfig(), mode=DesMode.FROM_HARDWARE):
    batch, _ = deserialize(rom, np.frombuffer(bytes(wire), dtype=np.uint8), cfg, mode)
    return batch.to_tokens(rom)


def test_three_fields_from_32bit_phits():
    sdef, rom, _ = load(None, {"M": [["a", ["Bytes", 2]], ["b", ["Bytes", 2]], ["c", ["Bytes", 4]]]},
                        {"a": 0, "b": 1, "c": 2})
    cfg = WireConfig(phit_bytes=4)
    out = deserialize_phits(rom, [int_to_phit(0x56781234, 4), int_to_phit(0xDEADBEEF, 4)], cfg)
    assert [(t.tag, t.kind, int.from_bytes(t.payload, "little")) for t in out] == [
        (0, K.DATA, 0x1234), (1, K.DATA, 0x5678), (2, K.DATA, 0xDEADBEEF)]


def test_listarray_from_software():
    sdef, rom, client = load("listarray")
    wire = bytes.fromhex("01000000 02000000 01000000 02000000 03000000 04000000 05000000".replace(" ", ""))
    out = deserialize_phits(rom, pack(wire), WireConfig(), DesMode.FROM_SOFTWARE)
    assert [t.tag for t in out] == [1, 2, 3, 4, 3, 4, 5, 6, 7]
    assert out[1] == Token(2, K.ARRAY_LENGTH, count=2)
    assert out[6] == Token(5, K.ARRAY_END)


def test_listarray_from_hardware():
    sdef, rom, client = load("listarray")
    wire = H(20, 1) + pad(I4(2) + I4(1) + I4(2) + I4(3) + I4(4)) + H(0, 1) + pad(I4(5))
    out = toks(rom, wire)
    value = ([[(I4(1), I4(2)), (I4(3), I4(4))]], I4(5))
    assert out == oracle_tokenize(value, sdef, client)


FRAMING_CASES = [
    # b empty
    (("0a000000", []), pad(I4(10)) + H(0, 1)),
    # one element of b whose c is empty
    (("0a000000", [([], "0d000000")]), pad(I4(10)) + H(0, 2) + H(4, 1) + pad(I4(13)) + H(0, 1)),
    # one element of b whose c has one entry
    (("0a000000", [(["0c000000"], "0d000000")]),
     pad(I4(10)) + H(4, 2) + pad(I4(12)) + H(0, 2) + H(4, 1) + pad(I4(13)) + H(0, 1)),
]


def _value(v):
    a, b = v
    return (bytes.fromhex(a), [([bytes.fromhex(x) for x in c], bytes.fromhex(d)) for c, d in b])


@pytest.mark.parametrize("case", range(3))
def test_framing_frames_decode(case):
    sdef, rom, client = load("framing")
    v, wire = FRAMING_CASES[case]
    assert toks(rom, wire) == oracle_tokenize(_value(v), sdef, client)


def test_feed_phit_by_phit_matches_whole():
    sdef, rom, client = load("framing")
    _, wire = FRAMING_CASES[2]
    eng = DesEngine(rom, WireConfig(), DesMode.FROM_HARDWARE)
    got = []
    for p in pack(wire):
        got.extend(eng.feed(p))
    assert eng.finish().done
    assert got == toks(rom, wire)


def test_requires_tagged_rom_and_depth():
    sdef = load_schema((DATA / "listarray.schema.json").read_text(), "Msg")
    with pytest.raises(ConfigMismatch):
        DesEngine(encode_rom(normalize(sdef)))
    _, rom, _ = load("listarray")
    with pytest.raises(ConfigMismatch):
        DesEngine(rom, WireConfig(max_depth=1))
    with pytest.raises(ConfigMismatch):
        DesEngine(rom, WireConfig(phit_bytes=4))


def test_trailing_and_incomplete():
    _, rom, _ = load("listarray")
    wire = bytes.fromhex("01000000 02000000 01000000 02000000 03000000 04000000 05000000".replace(" ", ""))
    eng = DesEngine(rom, WireConfig(), DesMode.FROM_SOFTWARE)
    for p in pack(wire):
        eng.feed(p)
    with pytest.raises(TrailingData):
        eng.feed(bytes(16))
    eng = DesEngine(rom, WireConfig(), DesMode.FROM_SOFTWARE)
    eng.feed(pack(wire)[0])
    with pytest.raises(IncompleteMessage) as ei:
        eng.finish()
    assert ei.value.offset == 16


def test_header_errors():
    _, rom, _ = load("framing")
    bad_reserved = pad(I4(10)) + I4(0) + bytes([1, 0, 9]) + bytes(9)
    with pytest.raises(MalformedFrameHeader) as ei:
        toks(rom, bad_reserved)
    assert ei.value.offset == 16
    with pytest.raises(MalformedFrameHeader):
        toks(rom, pad(I4(10)) + H(0, 0))


def test_level_below_depth():
    _, rom, _ = load("framing")
    wire = pad(I4(10)) + H(4, 2) + pad(I4(12)) + H(4, 1) + pad(I4(13)) + H(0, 1)
    with pytest.raises(FrameProtocolError) as ei:
        toks(rom, wire)
    assert ei.value.offset == 48


def test_frame_larger_than_capacity():
    _, rom, _ = load("framing")
    cfg = WireConfig(max_frame_payload_phits=1)
    with pytest.raises(FrameProtocolError):
        toks(rom, pad(I4(10)) + H(20, 2) + bytes(32), cfg)


def test_empty_frame_mid_element():
    sdef, rom, _ = load(None, {"M": [["l", ["List", ["Struct", "E"]]]], "E": [["c", ["Bytes", 4]], ["d", ["Bytes", 4]]]},
                        {"l.start": 0, "l.elem.c": 1, "l.elem.d": 2, "l.end": 3})
    with pytest.raises(FrameProtocolError):
        toks(rom, H(4, 1) + pad(I4(1)) + H(0, 1))


def test_level_through_non_list():
    sdef, rom, _ = load(None, {"M": [["l", ["List", ["Bytes", 4]]]]}, {"l.start": 0, "l.elem.value": 1, "l.end": 2})
    with pytest.raises(FrameProtocolError):
        toks(rom, H(4, 2) + pad(I4(1)) + H(0, 2))


def test_small_leaf_may_not_straddle():
    sdef, rom, _ = load(None, {"M": [["l", ["List", ["Bytes", 8]]]]}, {"l.start": 0, "l.elem.value": 1, "l.end": 2})
    with pytest.raises(FrameProtocolError):
        toks(rom, H(4, 1) + pad(bytes(4)) + H(4, 1) + pad(bytes(4)) + H(0, 1))


def test_oversize_leaf_straddles():
    sdef, rom, client = load(None, {"M": [["l", ["List", ["Bytes", 32]]]]},
                             {"l.start": 0, "l.elem.value": 1, "l.end": 2})
    cfg = WireConfig(max_frame_payload_phits=1)
    leaf = bytes(range(32))
    out = toks(rom, H(16, 1) + leaf[:16] + H(16, 1) + leaf[16:] + H(0, 1), cfg)
    assert out == oracle_tokenize(([leaf],), sdef, client)


def test_counters_listarray():
    _, rom, _ = load("listarray")
    wire = bytes.fromhex("01000000 02000000 01000000 02000000 03000000 04000000 05000000".replace(" ", ""))
    _, c = deserialize(rom, wire, WireConfig(), DesMode.FROM_SOFTWARE)
    assert (c.data_tokens, c.control_tokens, c.pushes, c.pops, c.headers) == (5, 4, 2, 2, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_arbitrary_chunking(seed, data):
    """Splitting the input at arbitrary points never changes the output."""
    sdef, tree, client, value = random_case(seed, budget=80)
    rom = encode_rom(tree, client)
    wire = sw_serialize(value, sdef)
    cuts = sorted(data.draw(st.lists(st.integers(0, len(wire)), max_size=6)))
    eng = DesEngine(rom, WireConfig(), DesMode.FROM_SOFTWARE)
    out, prev = [], 0
    for c in cuts + [len(wire)]:
        out.extend(eng.feed_bytes(wire[prev:c]))
        prev = c
    eng.finish()
    assert out == oracle_tokenize(value, sdef, client)

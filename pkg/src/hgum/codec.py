"""Store-and-forward software codec and the reference tokenizer.

Everything here walks the original :class:`SchemaDef` recursively and shares
no code with the engine kernels, so it serves as their oracle.

Message values: ``bytes`` for Bytes fields, a tuple of field values for a
struct, a list for arrays and lists.
"""
from __future__ import annotations

import json

from .errors import CountOverflow, Truncated, TrailingBytes
from .schema import ArrayType, BytesType, ListType, SchemaDef, StructRef
from .tokens import Token, TokenKind
from .wire import WireConfig


def _count_bytes(n, cfg):
    if n >= 1 << (8 * cfg.length_bytes):
        raise CountOverflow(f"{n} elements do not fit in {cfg.length_bytes} length bytes")
    return n.to_bytes(cfg.length_bytes, "little")


def sw_serialize(value, sdef: SchemaDef, cfg: WireConfig = WireConfig()) -> bytes:
    """Leading-count layout: each container writes its element count, then its elements."""
    out = bytearray()

    def put(v, t):
        if isinstance(t, BytesType):
            out.extend(v)
        elif isinstance(t, StructRef):
            for fv, (_, ft) in zip(v, sdef.structs[t.name]):
                put(fv, ft)
        else:
            out.extend(_count_bytes(len(v), cfg))
            for e in v:
                put(e, t.elem)

    put(value, StructRef(sdef.message_name))
    return bytes(out)


def sw_deserialize_forward(data, sdef: SchemaDef, cfg: WireConfig = WireConfig()):
    data = bytes(data)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise Truncated(f"need {n} bytes at offset {pos}, buffer has {len(data)}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    def get(t):
        if isinstance(t, BytesType):
            return take(t.n)
        if isinstance(t, StructRef):
            return tuple(get(ft) for _, ft in sdef.structs[t.name])
        n = int.from_bytes(take(cfg.length_bytes), "little")
        if n > len(data) - pos:
            raise Truncated(f"count {n} at offset {pos - cfg.length_bytes} exceeds remaining buffer")
        return [get(t.elem) for _ in range(n)]

    value = get(StructRef(sdef.message_name))
    if pos != len(data):
        raise TrailingBytes(f"{len(data) - pos} bytes left after message")
    return value


def sw_serialize_trailing(value, sdef: SchemaDef, cfg: WireConfig = WireConfig()) -> bytes:
    """Trailing-count layout (what a hardware-to-software serializer produces)."""
    out = bytearray()

    def put(v, t):
        if isinstance(t, BytesType):
            out.extend(v)
        elif isinstance(t, StructRef):
            for fv, (_, ft) in zip(v, sdef.structs[t.name]):
                put(fv, ft)
        else:
            for e in v:
                put(e, t.elem)
            out.extend(_count_bytes(len(v), cfg))

    put(value, StructRef(sdef.message_name))
    return bytes(out)


def sw_deserialize_reverse(data, sdef: SchemaDef, cfg: WireConfig = WireConfig()):
    """Read a trailing-count buffer from its end.

    Struct fields are taken last-to-first; each container reads its count
    from the tail and then its elements last-to-first.
    """
    data = bytes(data)
    end = len(data)

    def take(n):
        nonlocal end
        if n > end:
            raise Truncated(f"need {n} bytes before offset {end}")
        end -= n
        return data[end:end + n]

    def get(t):
        if isinstance(t, BytesType):
            return take(t.n)
        if isinstance(t, StructRef):
            fields = sdef.structs[t.name]
            return tuple(reversed([get(ft) for _, ft in reversed(fields)]))
        n = int.from_bytes(take(cfg.length_bytes), "little")
        if n > end:
            raise Truncated(f"count {n} before offset {end + cfg.length_bytes} exceeds remaining buffer")
        elems = [get(t.elem) for _ in range(n)]
        elems.reverse()
        return elems

    value = get(StructRef(sdef.message_name))
    if end != 0:
        raise TrailingBytes(f"{end} unread bytes at the start of the buffer")
    return value


def oracle_tokenize(value, sdef: SchemaDef, client, cfg: WireConfig = WireConfig()) -> list:
    """Reference DES token stream for a message, built by direct recursion."""
    tags = client.tags
    out = []

    def join(a, b):
        return f"{a}.{b}" if a else b

    def fields(v, sname, prefix, parent):
        for fv, (fname, ft) in zip(v, sdef.structs[sname]):
            field(fv, ft, join(prefix, fname), parent)

    def field(v, t, name, parent):
        path = join(parent, name)
        if isinstance(t, BytesType):
            out.append(Token(tags[path], TokenKind.DATA, bytes(v)))
        elif isinstance(t, StructRef):
            fields(v, t.name, name, parent)
        else:
            container(v, t, path)

    def container(v, t, path):
        if isinstance(t, ArrayType):
            out.append(Token(tags[path + ".start"], TokenKind.ARRAY_LENGTH, count=len(v)))
        else:
            out.append(Token(tags[path + ".start"], TokenKind.LIST_BEGIN))
        elem_path = path + ".elem"
        for e in v:
            if isinstance(t.elem, StructRef):
                fields(e, t.elem.name, "", elem_path)
            elif isinstance(t.elem, BytesType):
                out.append(Token(tags[elem_path + ".value"], TokenKind.DATA, bytes(e)))
            else:
                container(e, t.elem, elem_path)
        if isinstance(t, ListType):
            out.append(Token(tags[path + ".end"], TokenKind.LIST_END))
        elif path + ".end" in tags:
            out.append(Token(tags[path + ".end"], TokenKind.ARRAY_END))

    fields(value, sdef.message_name, "", "")
    return out


# ---------------------------------------------------------------- JSON I/O

def value_to_json(value, sdef: SchemaDef):
    def conv(v, t):
        if isinstance(t, BytesType):
            return bytes(v).hex()
        if isinstance(t, StructRef):
            return [conv(fv, ft) for fv, (_, ft) in zip(v, sdef.structs[t.name])]
        return [conv(e, t.elem) for e in v]

    return conv(value, StructRef(sdef.message_name))


def value_from_json(obj, sdef: SchemaDef):
    """Build a message value from its JSON form; shape errors raise ValueError."""

    def conv(o, t, path):
        if isinstance(t, BytesType):
            if not isinstance(o, str):
                raise ValueError(f"{path}: expected hex string")
            try:
                return bytes.fromhex(o)
            except ValueError:
                raise ValueError(f"{path}: invalid hex string {o!r}") from None
        if not isinstance(o, list):
            raise ValueError(f"{path}: expected JSON array")
        if isinstance(t, StructRef):
            fields = sdef.structs[t.name]
            if len(o) != len(fields):
                raise ValueError(f"{path}: struct {t.name} has {len(fields)} fields, got {len(o)}")
            return tuple(conv(fo, ft, f"{path}.{fn}" if path else fn) for fo, (fn, ft) in zip(o, fields))
        return [conv(e, t.elem, f"{path}[{i}]") for i, e in enumerate(o)]

    return conv(obj, StructRef(sdef.message_name), "")


def load_message(text, sdef: SchemaDef):
    return value_from_json(json.loads(text), sdef)


def dump_message(value, sdef: SchemaDef) -> str:
    return json.dumps(value_to_json(value, sdef))

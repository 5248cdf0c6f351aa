"""Token dialects and their text formats.

DES output tokens carry a tag.  SER input tokens carry no tag, no list-begin
and no array-end; a list-end carries its nesting level instead.

``.tokens`` text, one token per line::

    <tag> <kind> <payload>      DES dialect
    <kind> <payload>            SER dialect

``payload`` is lowercase hex for ``data``, a decimal count for
``array-length``, the nesting level for a SER ``list-end`` and ``-`` otherwise.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import UnbalancedStream


class TokenKind(enum.IntEnum):
    DATA = K.T_DATA
    ARRAY_LENGTH = K.T_ALEN
    LIST_BEGIN = K.T_LBEGIN
    ARRAY_END = K.T_AEND
    LIST_END = K.T_LEND

    @property
    def label(self):
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_label(cls, text):
        try:
            return cls[text.upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown token kind {text!r}") from None


@dataclass(frozen=True)
class Token:
    """A tagged token as emitted by a deserializer."""

    tag: int
    kind: TokenKind
    payload: bytes = b""
    count: int | None = None

    def __str__(self):
        return f"{self.tag} {self.kind.label} {_payload_text(self.kind, self.payload, self.count)}"


@dataclass(frozen=True)
class SerToken:
    """An untagged token fed to a serializer."""

    kind: TokenKind
    payload: bytes = b""
    value: int = 0

    @classmethod
    def data(cls, payload):
        return cls(TokenKind.DATA, bytes(payload))

    @classmethod
    def array_length(cls, n):
        return cls(TokenKind.ARRAY_LENGTH, b"", n)

    @classmethod
    def list_end(cls, level):
        return cls(TokenKind.LIST_END, b"", level)

    def __str__(self):
        if self.kind == TokenKind.DATA:
            return f"data {self.payload.hex()}"
        return f"{self.kind.label} {self.value}"


def _payload_text(kind, payload, count):
    if kind == TokenKind.DATA:
        return payload.hex()
    if kind == TokenKind.ARRAY_LENGTH:
        return str(count)
    return "-"


def format_tokens(tokens) -> str:
    return "".join(f"{t}\n" for t in tokens)


def parse_des_tokens(text) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'tag kind payload'")
        tag, kind, payload = int(parts[0]), TokenKind.from_label(parts[1]), parts[2]
        if kind == TokenKind.DATA:
            out.append(Token(tag, kind, bytes.fromhex(payload)))
        elif kind == TokenKind.ARRAY_LENGTH:
            out.append(Token(tag, kind, count=int(payload)))
        else:
            out.append(Token(tag, kind))
    return out


def parse_ser_tokens(text) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'kind payload'")
        kind = TokenKind.from_label(parts[0])
        if kind == TokenKind.DATA:
            out.append(SerToken.data(bytes.fromhex(parts[1])))
        elif kind == TokenKind.ARRAY_LENGTH:
            out.append(SerToken.array_length(int(parts[1])))
        elif kind == TokenKind.LIST_END:
            out.append(SerToken.list_end(int(parts[1])))
        else:
            raise ValueError(f"line {lineno}: {kind.label} is not a serializer token")
    return out


def adapt_tokens(des_tokens) -> list:
    """Turn a DES token stream into the SER dialect (drop tags, begins and array ends)."""
    out = []
    depth = 0
    for i, t in enumerate(des_tokens):
        if t.kind == TokenKind.LIST_BEGIN:
            depth += 1
        elif t.kind == TokenKind.LIST_END:
            if depth == 0:
                raise UnbalancedStream(f"list-end without list-begin at token {i}")
            out.append(SerToken.list_end(depth))
            depth -= 1
        elif t.kind == TokenKind.DATA:
            out.append(SerToken.data(t.payload))
        elif t.kind == TokenKind.ARRAY_LENGTH:
            out.append(SerToken.array_length(t.count))
    if depth:
        raise UnbalancedStream(f"{depth} list(s) never ended")
    return out


@dataclass
class TokenBatch:
    """Column form of a DES token stream, indexed by ROM entry rather than tag.

    ``val`` holds the count for array lengths and the byte length for data;
    data payloads are ``blob[off : off + val]``.
    """

    kind: np.ndarray
    node: np.ndarray
    val: np.ndarray
    off: np.ndarray
    blob: np.ndarray

    def __len__(self):
        return len(self.kind)

    @classmethod
    def empty(cls):
        z = np.zeros(0, dtype=np.int64)
        return cls(np.zeros(0, dtype=np.int8), z, z.copy(), z.copy(), np.zeros(0, dtype=np.uint8))

    @classmethod
    def concat(cls, parts):
        parts = [p for p in parts if len(p) or len(p.blob)]
        if not parts:
            return cls.empty()
        if len(parts) == 1:
            return parts[0]
        offs, base = [], 0
        for p in parts:
            offs.append(p.off + base)
            base += len(p.blob)
        return cls(
            np.concatenate([p.kind for p in parts]),
            np.concatenate([p.node for p in parts]),
            np.concatenate([p.val for p in parts]),
            np.concatenate(offs),
            np.concatenate([p.blob for p in parts]),
        )

    def to_tokens(self, rom) -> list:
        out = []
        raw = self.blob.tobytes()
        for k, n, v, o in zip(self.kind.tolist(), self.node.tolist(), self.val.tolist(), self.off.tolist()):
            e = rom.entries[n]
            if k == K.T_DATA:
                out.append(Token(e.data_tag, TokenKind.DATA, raw[o:o + v]))
            elif k == K.T_ALEN:
                out.append(Token(e.start_tag, TokenKind.ARRAY_LENGTH, count=v))
            elif k == K.T_LBEGIN:
                out.append(Token(e.start_tag, TokenKind.LIST_BEGIN))
            else:
                out.append(Token(e.end_tag, TokenKind(k)))
        return out


@dataclass
class SerBatch:
    """Column form of a SER token stream; ``val`` is length, count or level."""

    kind: np.ndarray
    val: np.ndarray
    off: np.ndarray
    blob: np.ndarray

    def __len__(self):
        return len(self.kind)

    @classmethod
    def from_tokens(cls, tokens):
        kind = np.fromiter((t.kind for t in tokens), dtype=np.int8, count=len(tokens))
        val = np.zeros(len(tokens), dtype=np.int64)
        off = np.zeros(len(tokens), dtype=np.int64)
        chunks, base = [], 0
        for i, t in enumerate(tokens):
            if t.kind == TokenKind.DATA:
                val[i] = len(t.payload)
                off[i] = base
                chunks.append(t.payload)
                base += len(t.payload)
            else:
                val[i] = t.value
        blob = np.frombuffer(b"".join(chunks), dtype=np.uint8) if chunks else np.zeros(0, dtype=np.uint8)
        return cls(kind, val, off, blob)

    def to_tokens(self) -> list:
        raw = self.blob.tobytes()
        out = []
        for k, v, o in zip(self.kind.tolist(), self.val.tolist(), self.off.tolist()):
            if k == K.T_DATA:
                out.append(SerToken.data(raw[o:o + v]))
            elif k == K.T_ALEN:
                out.append(SerToken.array_length(v))
            else:
                out.append(SerToken.list_end(v))
        return out


def adapt_batch(batch: TokenBatch) -> SerBatch:
    """Vectorized :func:`adapt_tokens` over a :class:`TokenBatch`."""
    status, levels = K.level_of_list_ends(batch.kind)
    if status < 0:
        raise UnbalancedStream(f"unbalanced list tokens near token {-1 - status}")
    keep = (batch.kind == K.T_DATA) | (batch.kind == K.T_ALEN) | (batch.kind == K.T_LEND)
    kind = batch.kind[keep]
    val = np.where(batch.kind == K.T_LEND, levels, batch.val)[keep]
    return SerBatch(kind, val, batch.off[keep], batch.blob)

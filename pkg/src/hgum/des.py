"""Streaming deserializer: phits in, tagged tokens out."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import (
    ConfigMismatch,
    DepthOverflow,
    EngineError,
    FrameProtocolError,
    IncompleteMessage,
    MalformedFrameHeader,
    TrailingData,
)
from .rom import RomImage
from .tokens import TokenBatch
from .wire import MIN_HEADER_PHIT, WireConfig


class DesMode(enum.IntEnum):
    FROM_SOFTWARE = 0
    FROM_HARDWARE = 1


@dataclass(frozen=True)
class StageCounters:
    """Event counts from one engine run; the cycle model prices these."""

    data_cycles: int = 0
    data_tokens: int = 0
    control_tokens: int = 0
    pushes: int = 0
    pops: int = 0
    headers: int = 0
    wire_bytes: int = 0

    @classmethod
    def from_state(cls, st):
        return cls(int(st[K.C_DATA_CYC]), int(st[K.C_DATA_TOK]), int(st[K.C_CTRL]),
                   int(st[K.C_PUSH]), int(st[K.C_POP]), int(st[K.C_HDR]), int(st[K.S_ABS]))


@dataclass(frozen=True)
class DesSummary:
    done: bool
    tokens_emitted: int
    bytes_consumed: int


_DES_ERRORS = {
    K.E_DEPTH: (DepthOverflow, "context stack overflow"),
    K.E_FRAME: (FrameProtocolError, "frame protocol violation"),
    K.E_HEADER: (MalformedFrameHeader, "nonzero reserved octets in frame header"),
    K.E_LEVEL: (MalformedFrameHeader, "frame header with list level 0"),
    K.E_MISMATCH: (EngineError, "traversal left the schema tree"),
}


def _check_config(rom: RomImage, cfg: WireConfig):
    if rom.max_depth > cfg.max_depth:
        raise ConfigMismatch(f"schema depth {rom.max_depth} exceeds context stack capacity {cfg.max_depth}")
    if rom.max_list_depth and cfg.phit_bytes < MIN_HEADER_PHIT:
        raise ConfigMismatch(f"schemas with lists need phits of at least {MIN_HEADER_PHIT} octets for frame headers")
    if rom.max_list_depth > 0xFF:
        raise ConfigMismatch("list nesting deeper than 255 cannot be framed")


class DesEngine:
    """Deserializer bound to one tagged ROM.

    Feed phits with :meth:`feed`; each call returns the tokens completed by
    that phit.  The engine holds at most one partial leaf plus the unread
    remainder of the last phit.
    """

    def __init__(self, rom: RomImage, cfg: WireConfig = WireConfig(), mode=DesMode.FROM_SOFTWARE):
        if not rom.tagged:
            raise ConfigMismatch("a deserializer needs a ROM built with a client schema")
        _check_config(rom, cfg)
        self.rom = rom
        self.cfg = cfg
        self.mode = DesMode(mode)
        self._a = rom.arrays
        self._st, self._stack = K.new_state(cfg.max_depth, int(self.mode))
        self._leaf = np.zeros(max(rom.max_leaf_bytes, cfg.length_bytes, 1), dtype=np.uint8)
        self._pending = np.zeros(0, dtype=np.uint8)
        self._slack = 0
        self._tokens = 0
        self.peak_buffered = 0
        self._error = None
        K.settle(self._a.kind, self._st)

    # ---------------------------------------------------------------- state

    @property
    def done(self):
        return self._st[K.S_PHASE] == K.P_DONE

    @property
    def visit_ptr(self):
        return int(self._st[K.S_VISIT])

    @property
    def stack_depth(self):
        return int(self._st[K.S_DEPTH])

    @property
    def list_depth(self):
        return int(self._st[K.S_LDEPTH])

    @property
    def bytes_consumed(self):
        return int(self._st[K.S_ABS])

    @property
    def counters(self) -> StageCounters:
        return StageCounters.from_state(self._st)

    # ---------------------------------------------------------------- feeding

    def feed(self, phit) -> list:
        """Append one phit and return every token it completes."""
        if len(phit) != self.cfg.phit_bytes:
            raise ValueError(f"phit must be {self.cfg.phit_bytes} bytes, got {len(phit)}")
        return self.feed_batch(np.frombuffer(bytes(phit), dtype=np.uint8)).to_tokens(self.rom)

    def feed_bytes(self, data) -> list:
        return self.feed_batch(np.frombuffer(bytes(data), dtype=np.uint8)).to_tokens(self.rom)

    def feed_batch(self, data: np.ndarray) -> TokenBatch:
        """Feed raw bytes and return the completed tokens in column form."""
        if self._error is not None:
            raise self._error
        if self.done:
            return self._after_done(data)
        buf = np.concatenate([self._pending, data]) if len(self._pending) else data
        held = len(buf) + int(self._st[K.S_GOT])
        self.peak_buffered = max(self.peak_buffered, held)
        batch, pos = self._run(buf)
        rest = buf[pos:]
        self._pending = rest.copy() if len(rest) and not self.done else np.zeros(0, dtype=np.uint8)
        if self.done:
            self._slack = (-self.bytes_consumed) % self.cfg.phit_bytes
            self._after_done(rest)
        self._tokens += len(batch)
        return batch

    def _after_done(self, data):
        if len(data) > self._slack:
            self._error = TrailingData("bytes after end of message", offset=self.bytes_consumed + self._slack)
            raise self._error
        self._slack -= len(data)
        return TokenBatch.empty()

    def _run(self, buf):
        a = self._a
        cfg = self.cfg
        n = len(buf)
        cap = max(64, n // 2 + 4 * cfg.max_depth + 8)
        obcap = max(n, 1) + len(self._leaf) + 16
        parts = []
        pos = 0
        while True:
            tk = np.empty(cap, dtype=np.int8)
            tn = np.empty(cap, dtype=np.int64)
            tv = np.empty(cap, dtype=np.int64)
            to = np.empty(cap, dtype=np.int64)
            ob = np.empty(obcap, dtype=np.uint8)
            status, pos, ntok, nob = K.des_run(
                a.kind, a.nbytes, a.child, a.last, a.emit_end,
                self._st, self._stack, self._leaf, buf, pos, n,
                cfg.length_bytes, cfg.phit_bytes, cfg.frame_capacity,
                tk, tn, tv, to, ob)
            parts.append(TokenBatch(tk[:ntok], tn[:ntok], tv[:ntok], to[:ntok], ob[:nob]))
            if status == K.R_OUT_FULL:
                cap *= 2
                continue
            if status == K.R_ERROR:
                self._tokens += sum(len(p) for p in parts)
                code = int(self._st[K.S_ERR])
                cls, msg = _DES_ERRORS.get(code, (EngineError, f"engine error {code}"))
                self._error = cls(msg, offset=int(self._st[K.S_ERRPOS]))
                raise self._error
            return TokenBatch.concat(parts), pos

    def finish(self) -> DesSummary:
        if self._error is not None:
            raise self._error
        if not self.done:
            raise IncompleteMessage(
                f"message incomplete after {self.bytes_consumed} bytes", offset=self.bytes_consumed)
        return DesSummary(True, self._tokens, self.bytes_consumed)


def des_new(rom: RomImage, cfg: WireConfig = WireConfig(), mode=DesMode.FROM_SOFTWARE) -> DesEngine:
    return DesEngine(rom, cfg, mode)


def des_feed(engine: DesEngine, phit) -> list:
    return engine.feed(phit)


def des_finish(engine: DesEngine) -> DesSummary:
    return engine.finish()


def deserialize(rom: RomImage, data, cfg: WireConfig = WireConfig(), mode=DesMode.FROM_SOFTWARE):
    """One-shot DES of a whole byte stream; returns (TokenBatch, StageCounters)."""
    eng = DesEngine(rom, cfg, mode)
    if not isinstance(data, np.ndarray):
        data = np.frombuffer(bytes(data), dtype=np.uint8)
    batch = eng.feed_batch(data)
    eng.finish()
    return batch, eng.counters


def deserialize_phits(rom: RomImage, phits, cfg: WireConfig = WireConfig(), mode=DesMode.FROM_SOFTWARE) -> list:
    eng = DesEngine(rom, cfg, mode)
    out = []
    for p in phits:
        out.extend(eng.feed(p))
    eng.finish()
    return out

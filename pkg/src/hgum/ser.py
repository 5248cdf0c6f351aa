"""Streaming serializer: untagged tokens in, phits out."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .des import StageCounters, _check_config
from .errors import (
    CountOverflow,
    DepthOverflow,
    EngineError,
    IncompleteMessage,
    ListLevelMismatch,
    SchemaMismatch,
)
from .rom import RomImage
from .tokens import SerBatch
from .wire import WireConfig


class SerMode(enum.IntEnum):
    TO_SOFTWARE = 0
    TO_HARDWARE = 1


@dataclass(frozen=True)
class SerResult:
    phits: list
    total_bytes: int


_SER_ERRORS = {
    K.E_MISMATCH: (SchemaMismatch, "token does not match the schema position"),
    K.E_TRAILING: (SchemaMismatch, "token after end of message"),
    K.E_LIST_LEVEL: (ListLevelMismatch, "list-end level does not match the open list depth"),
    K.E_DEPTH: (DepthOverflow, "context stack overflow"),
    K.E_COUNT: (CountOverflow, "element count does not fit the length field"),
}


class SerEngine:
    """Serializer bound to one ROM (tags, if any, are ignored).

    In hardware mode the engine buffers at most one frame of list data; in
    software mode it buffers nothing but the partial output phit.
    """

    def __init__(self, rom: RomImage, cfg: WireConfig = WireConfig(), mode=SerMode.TO_HARDWARE):
        _check_config(rom, cfg)
        self.rom = rom
        self.cfg = cfg
        self.mode = SerMode(mode)
        self._a = rom.arrays
        self._st, self._stack = K.new_state(cfg.max_depth, int(self.mode))
        self._fbuf = np.zeros(cfg.frame_capacity, dtype=np.uint8)
        self._scratch = np.zeros(cfg.length_bytes, dtype=np.uint8)
        self._pending = b""
        self._tokens_in = 0
        self.peak_buffered = 0
        self._error = None
        K.settle(self._a.kind, self._st)

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
    def counters(self) -> StageCounters:
        return StageCounters.from_state(self._st)

    @property
    def frame_buffer_peak(self):
        return int(self._st[K.S_FBPEAK])

    def feed(self, token) -> list:
        """Serialize one token; returns the phits it completes."""
        return self.feed_many([token])

    def feed_many(self, tokens) -> list:
        return self._split(self.feed_batch(SerBatch.from_tokens(list(tokens))))

    def feed_batch(self, batch: SerBatch) -> bytes:
        """Serialize a token batch; returns the raw bytes written (not phit-split)."""
        if self._error is not None:
            raise self._error
        a, cfg = self._a, self.cfg
        n = len(batch)
        est = int(batch.val[batch.kind == K.T_DATA].sum()) if n else 0
        cap = cfg.frame_capacity + 2 * est + (n + 8) * (cfg.length_bytes + 2 * cfg.phit_bytes)
        chunks = []
        i = 0
        while True:
            out = np.empty(cap, dtype=np.uint8)
            status, nxt, nout = K.ser_run(
                a.kind, a.nbytes, a.child, a.last,
                self._st, self._stack, self._fbuf, self._scratch,
                batch.kind, batch.val, batch.off, batch.blob, i, n - i,
                cfg.length_bytes, cfg.phit_bytes, cfg.frame_capacity, out)
            chunks.append(out[:nout].tobytes())
            self._tokens_in += nxt - i
            i = nxt
            if status == K.R_OUT_FULL:
                cap *= 2
                continue
            if status == K.R_ERROR:
                code = int(self._st[K.S_ERR])
                cls, msg = _SER_ERRORS.get(code, (EngineError, f"engine error {code}"))
                self._error = cls(msg, offset=int(self._st[K.S_ERRPOS]))
                raise self._error
            break
        written = b"".join(chunks)
        held = int(self._st[K.S_FBPEAK]) + (len(self._pending) + len(written)) % cfg.phit_bytes
        self.peak_buffered = max(self.peak_buffered, held)
        return written

    def _split(self, written: bytes) -> list:
        p = self.cfg.phit_bytes
        data = self._pending + written
        whole = len(data) - len(data) % p
        self._pending = data[whole:]
        return [data[j:j + p] for j in range(0, whole, p)]

    def finish(self) -> SerResult:
        """Flush the final partial phit (zero padded)."""
        if self._error is not None:
            raise self._error
        if not self.done:
            raise IncompleteMessage(f"message incomplete after {self._tokens_in} tokens", offset=self._tokens_in)
        total = int(self._st[K.S_ABS])
        phits = []
        if self._pending:
            phits.append(self._pending + bytes(self.cfg.phit_bytes - len(self._pending)))
            self._pending = b""
        return SerResult(phits, total)


def ser_new(rom: RomImage, cfg: WireConfig = WireConfig(), mode=SerMode.TO_HARDWARE) -> SerEngine:
    return SerEngine(rom, cfg, mode)


def ser_feed(engine: SerEngine, token) -> list:
    return engine.feed(token)


def ser_finish(engine: SerEngine) -> SerResult:
    return engine.finish()


def serialize(rom: RomImage, batch: SerBatch, cfg: WireConfig = WireConfig(), mode=SerMode.TO_HARDWARE):
    """One-shot SER; returns (bytes, total_bytes, StageCounters).  Bytes are unpadded."""
    eng = SerEngine(rom, cfg, mode)
    data = eng.feed_batch(batch)
    if not eng.done:
        raise IncompleteMessage("token stream ended before the schema did", offset=len(batch))
    return data, int(eng._st[K.S_ABS]), eng.counters


def serialize_tokens(rom: RomImage, tokens, cfg: WireConfig = WireConfig(), mode=SerMode.TO_HARDWARE) -> SerResult:
    eng = SerEngine(rom, cfg, mode)
    phits = eng.feed_many(tokens)
    res = eng.finish()
    return SerResult(phits + res.phits, res.total_bytes)

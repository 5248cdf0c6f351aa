"""Loopback simulation of a software -> hardware -> hardware -> software transfer.

The pipeline runs functionally, one stage after another:

    sw_serialize -> DES(from software) -> SER(to hardware)
                 -> DES(from hardware) -> SER(to software) -> reverse SW DES

Each of the four hardware stages is priced by a :class:`CycleModel` from its
event counters.  Stages overlap in steady state, so a message costs the
slowest stage (the bottleneck).  The optimal cost is one cycle per token.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .codec import oracle_tokenize, sw_deserialize_reverse, sw_serialize
from .des import DesMode, StageCounters, deserialize
from .errors import HGumError
from .rom import RomImage, encode_rom
from .schema import ArrayType, BytesType, ListType, SchemaDef, client_schema_from_dict, normalize
from .ser import SerMode, serialize
from .tokens import adapt_batch
from .wire import WireConfig

STAGES = ("des_sw", "ser_hw", "des_hw", "ser_sw")


@dataclass(frozen=True)
class CycleModel:
    """Cycle prices; a data token costs ``data_per_phit`` per phit it spans (at least one phit)."""

    data_per_phit: int = 1
    control: int = 1
    context: int = 1
    frame: int = 2
    message: int = 4

    def __post_init__(self):
        for name in ("data_per_phit", "control", "context", "frame", "message"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def data_token_cost(self, nbytes, phit_bytes=16):
        return self.data_per_phit * max(1, -(-nbytes // phit_bytes))

    def stage_cycles(self, c: StageCounters) -> int:
        return (self.data_per_phit * c.data_cycles + self.control * c.control_tokens
                + self.context * (c.pushes + c.pops) + self.frame * c.headers + self.message)


@dataclass
class LoopbackReport:
    stage_cycles: dict
    bottleneck_cycles: int
    optimal_cycles: int
    round_trip_ok: bool
    frame_count: int = 0
    wire_bytes: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ratio(self):
        if not self.bottleneck_cycles:
            return 0.0
        return self.optimal_cycles / self.bottleneck_cycles


@dataclass
class WireLoopback:
    """Artifacts of one wire-level loopback."""

    stage_counters: dict
    token_count: int
    hw_wire: bytes
    sw_wire: bytes
    tokens_agree: bool


def loopback_wire(forward: np.ndarray, des_rom: RomImage, ser_rom: RomImage, cfg: WireConfig) -> WireLoopback:
    """Run the four hardware stages over a leading-count buffer.

    Raises the first engine error encountered.
    """
    b1, c1 = deserialize(des_rom, forward, cfg, DesMode.FROM_SOFTWARE)
    hw, _, c2 = serialize(ser_rom, adapt_batch(b1), cfg, SerMode.TO_HARDWARE)
    hw_arr = np.frombuffer(hw, dtype=np.uint8)
    b3, c3 = deserialize(des_rom, hw_arr, cfg, DesMode.FROM_HARDWARE)
    sw, _, c4 = serialize(ser_rom, adapt_batch(b3), cfg, SerMode.TO_SOFTWARE)
    # a list-begin read from software carries the element count; from hardware it cannot
    agree = (np.array_equal(b1.kind, b3.kind) and np.array_equal(b1.node, b3.node)
             and np.array_equal(np.where(b1.kind == K.T_LBEGIN, 0, b1.val),
                                np.where(b3.kind == K.T_LBEGIN, 0, b3.val))
             and np.array_equal(b1.blob, b3.blob))
    return WireLoopback(dict(zip(STAGES, (c1, c2, c3, c4))), len(b1), hw, sw, agree)


def _report(wl: WireLoopback, ok: bool, forward_len: int, model: CycleModel) -> LoopbackReport:
    cyc = {s: model.stage_cycles(c) for s, c in wl.stage_counters.items()}
    return LoopbackReport(
        stage_cycles=cyc,
        bottleneck_cycles=max(cyc.values()),
        optimal_cycles=wl.token_count,
        round_trip_ok=ok,
        frame_count=wl.stage_counters["ser_hw"].headers,
        wire_bytes={"sw_to_hw": forward_len, "hw_to_hw": len(wl.hw_wire), "hw_to_sw": len(wl.sw_wire)},
    )


def roms_for(sdef: SchemaDef, client):
    tree = normalize(sdef)
    return encode_rom(tree, client), encode_rom(tree)


def run_loopback(value, sdef: SchemaDef, client, cfg: WireConfig = WireConfig(),
                 model: CycleModel = CycleModel(), roms=None) -> LoopbackReport:
    """Full pipeline on a message value; engine errors give a failed report."""
    des_rom, ser_rom = roms or roms_for(sdef, client)
    forward = sw_serialize(value, sdef, cfg)
    try:
        wl = loopback_wire(np.frombuffer(forward, dtype=np.uint8), des_rom, ser_rom, cfg)
        back = sw_deserialize_reverse(wl.sw_wire, sdef, cfg)
    except HGumError as exc:
        return LoopbackReport({}, 0, 0, False, error=f"{type(exc).__name__}: {exc}")
    return _report(wl, back == value and wl.tokens_agree, len(forward), model)


def optimal_cycles(value, sdef: SchemaDef, client) -> int:
    return len(oracle_tokenize(value, sdef, client))


# ---------------------------------------------------------------- sweeps

def sweep_schema(kind: str):
    """Single-field message {f: Array|List<Bytes(16)>} and its client tags (no array end)."""
    if kind not in ("array", "list"):
        raise ValueError(f"schema kind must be 'array' or 'list', got {kind!r}")
    ctor = ArrayType if kind == "array" else ListType
    sdef = SchemaDef({"Msg": (("f", ctor(BytesType(16))),)}, "Msg")
    tags = {"f.start": 0, "f.elem.value": 1}
    if kind == "list":
        tags["f.end"] = 2
    tree = normalize(sdef)
    return sdef, client_schema_from_dict(tags, tree)


def _sweep_forward(n, cfg, body):
    head = np.frombuffer(n.to_bytes(cfg.length_bytes, "little"), dtype=np.uint8)
    return np.concatenate([head, body[:n * 16]])


def sweep(kind: str, lengths, cfg: WireConfig = WireConfig(), model: CycleModel = CycleModel(), seed=0):
    """One loopback per n over random 16-byte elements.

    Returns rows of (n, optimal, measured, ratio, round_trip_ok).  The round
    trip is checked at wire level: the software-bound buffer, rewritten into
    leading-count form, must equal the input buffer.
    """
    sdef, client = sweep_schema(kind)
    des_rom, ser_rom = roms_for(sdef, client)
    a = ser_rom.arrays
    lengths = [int(n) for n in lengths]
    if any(n < 1 for n in lengths):
        raise ValueError("lengths must be >= 1")
    body = np.random.default_rng(seed).integers(0, 256, size=16 * max(lengths, default=0), dtype=np.uint8)
    rows = []
    for n in lengths:
        fwd = _sweep_forward(n, cfg, body)
        wl = loopback_wire(fwd, des_rom, ser_rom, cfg)
        err, back = K.reverse_to_forward(a.kind, a.nbytes, a.child, a.run_last,
                                         np.frombuffer(wl.sw_wire, dtype=np.uint8),
                                         cfg.length_bytes, cfg.max_depth)
        ok = err == K.E_NONE and np.array_equal(back, fwd) and wl.tokens_agree
        rep = _report(wl, ok, len(fwd), model)
        rows.append((n, rep.optimal_cycles, rep.bottleneck_cycles, rep.ratio, ok))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "optimal_cycles", "measured_cycles", "ratio"])
    for n, opt, meas, ratio, _ in rows:
        w.writerow([n, opt, meas, f"{ratio:.6f}"])
    return buf.getvalue()


def list_cycles_closed_form(n, cfg: WireConfig = WireConfig(), model: CycleModel = CycleModel()):
    """Bottleneck cycles of an n-element List<Bytes(16)> message under ``model``."""
    per_frame = cfg.frame_capacity // 16
    frames = -(-n // per_frame) + 1
    data = n * model.data_token_cost(16, cfg.phit_bytes)
    return data + 2 * model.control + model.frame * frames + model.message + 2 * model.context

"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 protocol/engine error or
round-trip mismatch, 3 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .codec import load_message, oracle_tokenize, sw_deserialize_reverse, sw_serialize
from .des import DesEngine, DesMode
from .errors import CodecError, EngineError, HGumError, InvalidSchema, SchemaError, WireError
from .rom import dump_rom, encode_rom, rom_stats
from .schema import check_message, load_schema, normalize, parse_client_schema
from .ser import SerEngine, SerMode
from .sim import CycleModel, run_loopback, sweep, sweep_csv
from .tokens import SerBatch, TokenKind, adapt_tokens, format_tokens
from .wire import WireConfig, pack, write_phits_file

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ENGINE = 2
EXIT_IO = 3


class Mismatch(HGumError):
    pass


def _cfg(args) -> WireConfig:
    return WireConfig(phit_bytes=args.phit_bytes, length_bytes=args.length_bytes,
                      max_frame_payload_phits=args.frame_phits, max_depth=args.max_depth)


def _read(path) -> str:
    return Path(path).read_text()


def _load(args, need_client):
    sdef = load_schema(_read(args.schema), args.message_name)
    tree = normalize(sdef)
    client = None
    if args.client:
        client = parse_client_schema(_read(args.client), tree, args.tag_bits)
    elif need_client:
        raise SchemaError("a client schema (--client) is required for this command")
    return sdef, tree, client


def _out(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    sdef, tree, client = _load(args, need_client=False)
    print(f"schema ok: {len(tree.top)} top-level node(s), depth {tree.depth()}, list depth {tree.depth(True)}")
    if client is not None:
        print(f"client schema ok: {len(client.tags)} tag(s)")
    return EXIT_OK


def cmd_compile(args):
    _, tree, client = _load(args, need_client=False)
    rom = encode_rom(tree, client)
    _out(args.out, dump_rom(rom))
    if args.out not in (None, "-"):
        s = rom_stats(rom)
        print(f"wrote {len(rom)} entries to {args.out} ({s})")
    return EXIT_OK


def _flip(data: bytes, bit: int) -> bytes:
    if not 0 <= bit < 8 * len(data):
        raise SchemaError(f"--inject-flip {bit} is outside the {8 * len(data)}-bit wire")
    b = bytearray(data)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


def _des(rom, wire, cfg, mode):
    eng = DesEngine(rom, cfg, mode)
    tokens = eng.feed_bytes(wire)
    eng.finish()
    return tokens


def _ser(rom, tokens, cfg, mode):
    eng = SerEngine(rom, cfg, mode)
    data = eng.feed_batch(SerBatch.from_tokens(adapt_tokens(tokens)))
    if not eng.done:
        raise EngineError("token stream ended before the schema did", offset=len(tokens))
    return data


def cmd_roundtrip(args):
    cfg = _cfg(args)
    sdef, tree, client = _load(args, need_client=True)
    try:
        value = load_message(_read(args.message), sdef)
    except ValueError as exc:
        raise SchemaError(f"message file: {exc}") from None
    report = check_message(value, sdef)
    if report:
        raise SchemaError("message does not match schema: " + "; ".join(map(str, report)))
    des_rom, ser_rom = encode_rom(tree, client), encode_rom(tree)
    expected = oracle_tokenize(value, sdef, client, cfg)
    flip = (lambda w: _flip(w, args.inject_flip)) if args.inject_flip is not None else (lambda w: w)

    tokens = expected
    if args.path == "sw-hw":
        wire = flip(sw_serialize(value, sdef, cfg))
        tokens = _des(des_rom, wire, cfg, DesMode.FROM_SOFTWARE)
        back = sw_deserialize_reverse(_ser(ser_rom, tokens, cfg, SerMode.TO_SOFTWARE), sdef, cfg)
    elif args.path == "hw-sw":
        wire = flip(_ser(ser_rom, expected, cfg, SerMode.TO_SOFTWARE))
        back = sw_deserialize_reverse(wire, sdef, cfg)
    elif args.path == "hw-hw":
        wire = flip(_ser(ser_rom, expected, cfg, SerMode.TO_HARDWARE))
        tokens = _des(des_rom, wire, cfg, DesMode.FROM_HARDWARE)
        back = sw_deserialize_reverse(_ser(ser_rom, tokens, cfg, SerMode.TO_SOFTWARE), sdef, cfg)
    else:
        # a flip hits the software-to-hardware hop; the emitted wire is the hardware-to-hardware hop
        fwd = flip(sw_serialize(value, sdef, cfg))
        t1 = _des(des_rom, fwd, cfg, DesMode.FROM_SOFTWARE)
        wire = _ser(ser_rom, t1, cfg, SerMode.TO_HARDWARE)
        tokens = _des(des_rom, wire, cfg, DesMode.FROM_HARDWARE)
        back = sw_deserialize_reverse(_ser(ser_rom, tokens, cfg, SerMode.TO_SOFTWARE), sdef, cfg)
        rep = run_loopback(value, sdef, client, cfg, CycleModel(), roms=(des_rom, ser_rom))
        print(f"cycles: {rep.stage_cycles} bottleneck={rep.bottleneck_cycles} "
              f"optimal={rep.optimal_cycles} ratio={rep.ratio:.6f}")

    if args.emit_wire:
        write_phits_file(args.emit_wire, pack(wire, cfg.phit_bytes), len(wire), cfg.phit_bytes)
    if args.emit_tokens:
        Path(args.emit_tokens).write_text(format_tokens(tokens))

    n_end = sum(t.kind == TokenKind.LIST_END for t in tokens)
    frames = f" empty_frames={n_end}" if args.path in ("hw-hw", "loopback") else ""
    print(f"path={args.path} wire_bytes={len(wire)} phits={-(-len(wire) // cfg.phit_bytes)} "
          f"tokens={len(tokens)}{frames}")
    if tokens != expected:
        first = next((i for i, (a, b) in enumerate(zip(tokens, expected)) if a != b), min(len(tokens), len(expected)))
        raise Mismatch(f"token stream differs from the reference at token {first}")
    if back != value:
        raise Mismatch("recovered message differs from the input")
    print("roundtrip ok")
    return EXIT_OK


def _parse_lengths(text):
    if text == "pow2":
        return [1 << k for k in range(14)]
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise SchemaError("--lengths must list positive integers")
    return out


def cmd_bench(args):
    cfg = _cfg(args)
    model = CycleModel(args.data_cost, args.control_cost, args.context_cost, args.frame_cost, args.message_cost)
    rows = sweep(args.kind, _parse_lengths(args.lengths), cfg, model, seed=args.seed)
    bad = [r[0] for r in rows if not r[4]]
    _out(args.out, sweep_csv(rows))
    if bad:
        raise Mismatch(f"round trip failed for n in {bad[:10]}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p, client=True):
    p.add_argument("schema", help="central schema (JSON IDL)")
    p.add_argument("--message-name", required=True, help="name of the top-level struct")
    if client:
        p.add_argument("--client", help="client schema (JSON path -> tag)")
    p.add_argument("--tag-bits", type=int, default=32)


def _wire_flags(p):
    p.add_argument("--phit-bytes", type=int, default=16)
    p.add_argument("--frame-phits", type=int, default=500)
    p.add_argument("--length-bytes", type=int, default=4)
    p.add_argument("--max-depth", type=int, default=16)


def build_parser():
    ap = argparse.ArgumentParser(prog="hgum", description="Schema-driven streaming SER/DES toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a central schema and optional client schema")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="write the schema ROM dump")
    _common(p)
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("roundtrip", help="run a message through one transfer path")
    _common(p)
    p.add_argument("message", help="message value (JSON)")
    p.add_argument("--path", choices=["sw-hw", "hw-sw", "hw-hw", "loopback"], default="loopback")
    p.add_argument("--emit-wire", metavar="FILE", help="write the wire as a .phits file")
    p.add_argument("--emit-tokens", metavar="FILE", help="write the deserialized tokens")
    p.add_argument("--inject-flip", type=int, metavar="BIT", help="flip one bit of the wire before decoding")
    _wire_flags(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("bench", help="throughput sweep over message lengths, CSV out")
    p.add_argument("kind", choices=["array", "list"])
    p.add_argument("--lengths", default="pow2", help="'pow2', or e.g. '1-64,128,8192'")
    p.add_argument("-o", "--out", help="CSV file (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    for name, default in (("data", 1), ("control", 1), ("context", 1), ("frame", 2), ("message", 4)):
        p.add_argument(f"--{name}-cost", type=int, default=default)
    _wire_flags(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidSchema as exc:
        print("error: invalid schema", file=sys.stderr)
        for v in exc.report:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVALID
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EngineError, CodecError, WireError, Mismatch) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

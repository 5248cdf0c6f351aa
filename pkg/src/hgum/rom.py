"""Flat, index-addressed encoding of a schema tree.

Siblings occupy consecutive entries, so "next sibling" is ``index + 1``
unless ``last_child`` is set. Containers store the index of their first
child. Child runs are laid out in pre-order of their parent containers,
after the top-level run at index 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .schema import ClientSchema, NodeKind, SchemaNode, SchemaTree

NO_TAG = -1
NULL = -1


@dataclass(frozen=True)
class RomEntry:
    kind: NodeKind
    path: str
    name: str = ""
    n_bytes: int = 0
    start_tag: int | None = None
    data_tag: int | None = None
    end_tag: int | None = None
    emit_end: bool = False
    child_idx: int | None = None
    last_child: bool = False


@dataclass(frozen=True)
class RomStats:
    entry_count: int
    max_depth: int
    max_list_depth: int
    max_leaf_bytes: int


@dataclass(frozen=True, eq=False)
class RomImage:
    entries: tuple
    max_depth: int
    max_list_depth: int
    max_leaf_bytes: int
    tagged: bool
    root_first_idx: int = 0

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, RomImage) and (self.entries, self.tagged) == (other.entries, other.tagged)

    def __hash__(self):
        return hash((self.entries, self.tagged))

    @cached_property
    def arrays(self):
        """Column view of the ROM consumed by the jitted engine kernels."""
        n = len(self.entries)
        kind = np.array([e.kind for e in self.entries], dtype=np.int8)
        nbytes = np.array([e.n_bytes for e in self.entries], dtype=np.int64)
        child = np.array([NULL if e.child_idx is None else e.child_idx for e in self.entries], dtype=np.int64)
        last = np.array([e.last_child for e in self.entries], dtype=np.int8)
        emit_end = np.array([e.emit_end for e in self.entries], dtype=np.int8)
        # last index of the sibling run beginning at i (only meaningful for run heads)
        run_last = np.full(n, NULL, dtype=np.int64)
        for i in range(n - 1, -1, -1):
            run_last[i] = i if self.entries[i].last_child else run_last[i + 1]
        return RomArrays(kind, nbytes, child, last, emit_end, run_last)

    def tag_of(self, index, role):
        e = self.entries[index]
        return {"data": e.data_tag, "start": e.start_tag, "end": e.end_tag}[role]


@dataclass(frozen=True)
class RomArrays:
    kind: np.ndarray
    nbytes: np.ndarray
    child: np.ndarray
    last: np.ndarray
    emit_end: np.ndarray
    run_last: np.ndarray


def encode_rom(tree: SchemaTree, client: ClientSchema | None = None) -> RomImage:
    slots: list = []

    def alloc(nodes):
        base = len(slots)
        slots.extend([None] * len(nodes))
        return base

    def entry(node: SchemaNode, last, child_idx):
        kw = dict(kind=node.kind, path=node.path, name=node.name, n_bytes=node.n_bytes, last_child=last, child_idx=child_idx)
        if client is not None:
            if node.kind == NodeKind.BYTES:
                kw["data_tag"] = client.tag(node.path)
            elif node.is_container:
                kw["start_tag"] = client.start_tag(node)
                kw["end_tag"] = client.end_tag(node)
                kw["emit_end"] = node.path in client.emit_array_end
        return RomEntry(**kw)

    def place(nodes, base):
        for i, node in enumerate(nodes):
            child_idx = None
            if node.is_container:
                child_idx = alloc(node.children)
                place(node.children, child_idx)
            slots[base + i] = entry(node, i == len(nodes) - 1, child_idx)

    top = tree.top
    place(top, alloc(top))
    leaves = [n.n_bytes for n in tree.iter_nodes() if n.kind == NodeKind.BYTES]
    return RomImage(
        entries=tuple(slots),
        max_depth=tree.depth(),
        max_list_depth=tree.depth(list_only=True),
        max_leaf_bytes=max(leaves, default=0),
        tagged=client is not None,
    )


def rom_stats(image: RomImage) -> RomStats:
    return RomStats(len(image.entries), image.max_depth, image.max_list_depth, image.max_leaf_bytes)


def reconstruct(image: RomImage) -> SchemaTree:
    """Rebuild the schema tree by walking child pointers and last-child flags."""

    def run(start):
        nodes, i = [], start
        while True:
            e = image.entries[i]
            children = run(e.child_idx) if e.child_idx is not None else ()
            nodes.append(SchemaNode(e.kind, e.name, e.path, e.n_bytes, tuple(children)))
            if e.last_child:
                return nodes
            i += 1

    return SchemaTree(SchemaNode(NodeKind.END, "", "", 0, tuple(run(image.root_first_idx))))


def _fmt(v):
    return "-" if v is None else str(v)


def dump_rom(image: RomImage) -> str:
    """Deterministic one-line-per-entry text form of the ROM."""
    lines = []
    for i, e in enumerate(image.entries):
        lines.append(
            f"{i} {e.kind.name.lower()} nbytes={_fmt(e.n_bytes if e.kind == NodeKind.BYTES else None)}"
            f" start={_fmt(e.start_tag)} data={_fmt(e.data_tag)} end={_fmt(e.end_tag)}"
            f" emit_end={int(e.emit_end)} child={_fmt(e.child_idx)} last={int(e.last_child)} path={e.path}"
        )
    return "\n".join(lines) + "\n"

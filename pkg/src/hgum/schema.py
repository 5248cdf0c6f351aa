"""Central schema IDL, schema tree normalization and client schemas.

The IDL is JSON::

    {"Msg": [["a", ["List", ["Array", ["Struct", "Elem"]]]],
             ["b", ["Bytes", 4]]],
     "Elem": [["x", ["Bytes", 4]], ["y", ["Bytes", 4]]]}

The message (top-level) struct name is supplied separately.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Union

from .errors import (
    ClientSchemaError,
    GrammarViolation,
    MalformedJson,
    MissingMandatoryTag,
    TagOverflow,
    UnknownPath,
    UnknownTypeConstructor,
)


@dataclass(frozen=True)
class BytesType:
    n: int


@dataclass(frozen=True)
class StructRef:
    name: str


@dataclass(frozen=True)
class ArrayType:
    elem: "TypeExpr"


@dataclass(frozen=True)
class ListType:
    elem: "TypeExpr"


TypeExpr = Union[BytesType, StructRef, ArrayType, ListType]
Field = tuple  # (name, TypeExpr)


@dataclass(frozen=True)
class SchemaDef:
    structs: Mapping[str, tuple]
    message_name: str

    def fields(self, name=None):
        return self.structs[self.message_name if name is None else name]


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    detail: str = ""

    def __str__(self):
        return f"{self.code} at {self.path}: {self.detail}" if self.detail else f"{self.code} at {self.path}"


# ---------------------------------------------------------------- parsing

def _load_json(text, what):
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if not isinstance(text, str):
        return text

    def no_dupes(pairs):
        keys = [k for k, _ in pairs]
        if len(set(keys)) != len(keys):
            dup = next(k for k in keys if keys.count(k) > 1)
            raise GrammarViolation(f"duplicate key {dup!r} in {what}")
        return dict(pairs)

    try:
        return json.loads(text, object_pairs_hook=no_dupes)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"{what}: {exc}") from None


def _parse_type(obj, where) -> TypeExpr:
    if not isinstance(obj, list) or len(obj) != 2 or not isinstance(obj[0], str):
        raise GrammarViolation(f"{where}: type must be a two-element [constructor, argument] array")
    ctor, arg = obj
    if ctor == "Bytes":
        if isinstance(arg, bool) or not isinstance(arg, int) or arg < 1:
            raise GrammarViolation(f"{where}: Bytes size must be a positive integer, got {arg!r}")
        return BytesType(arg)
    if ctor == "Struct":
        if not isinstance(arg, str):
            raise GrammarViolation(f"{where}: Struct argument must be a struct name")
        return StructRef(arg)
    if ctor == "Array":
        return ArrayType(_parse_type(arg, where + "[]"))
    if ctor == "List":
        return ListType(_parse_type(arg, where + "[]"))
    raise UnknownTypeConstructor(f"{where}: unknown type constructor {ctor!r}")


def parse_schema(idl_text, message_name: str) -> SchemaDef:
    """Parse a JSON IDL document; field order is preserved as written."""
    doc = _load_json(idl_text, "schema")
    if not isinstance(doc, dict):
        raise GrammarViolation("schema must be a JSON object mapping struct names to definitions")
    structs = {}
    for sname, sdef in doc.items():
        if not isinstance(sdef, list):
            raise GrammarViolation(f"{sname}: struct definition must be an array of fields")
        fields = []
        for i, fdef in enumerate(sdef):
            if not isinstance(fdef, list) or len(fdef) != 2 or not isinstance(fdef[0], str):
                raise GrammarViolation(f"{sname}[{i}]: field must be [fieldName, type]")
            fields.append((fdef[0], _parse_type(fdef[1], f"{sname}.{fdef[0]}")))
        structs[sname] = tuple(fields)
    return SchemaDef(structs, message_name)


def type_to_json(t: TypeExpr):
    if isinstance(t, BytesType):
        return ["Bytes", t.n]
    if isinstance(t, StructRef):
        return ["Struct", t.name]
    if isinstance(t, ArrayType):
        return ["Array", type_to_json(t.elem)]
    return ["List", type_to_json(t.elem)]


def schema_to_json(sdef: SchemaDef) -> str:
    doc = {name: [[f, type_to_json(t)] for f, t in fields] for name, fields in sdef.structs.items()}
    return json.dumps(doc)


# ---------------------------------------------------------------- validation

def _refs(t):
    while isinstance(t, (ArrayType, ListType)):
        t = t.elem
    if isinstance(t, StructRef):
        yield t.name


def validate_schema(sdef: SchemaDef) -> list:
    """Return every well-formedness violation; an empty list means valid."""
    report = []
    if sdef.message_name not in sdef.structs:
        report.append(Violation("UnresolvedMessage", sdef.message_name, "message struct not defined"))

    for sname, fields in sdef.structs.items():
        seen = set()
        for fname, t in fields:
            path = f"{sname}.{fname}"
            if not fname:
                report.append(Violation("EmptyFieldName", sname))
            elif "." in fname:
                report.append(Violation("InvalidFieldName", path, "field names may not contain '.'"))
            if fname in seen:
                report.append(Violation("DuplicateField", path))
            seen.add(fname)
            for ref in _refs(t):
                if ref not in sdef.structs:
                    report.append(Violation("UnresolvedStructRef", path, f"no struct named {ref!r}"))

    # cycles in the struct reference graph
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(sdef.structs, WHITE)
    cyclic = set()

    def dfs(name, trail):
        color[name] = GREY
        for _, t in sdef.structs[name]:
            for ref in _refs(t):
                if ref not in color:
                    continue
                if color[ref] == GREY:
                    cycle = trail[trail.index(ref):] + [ref]
                    report.append(Violation("RecursiveStruct", ref, " -> ".join(cycle)))
                    cyclic.update(cycle)
                elif color[ref] == WHITE:
                    dfs(ref, trail + [ref])
        color[name] = BLACK

    for name in sdef.structs:
        if color[name] == WHITE:
            dfs(name, [name])

    if not report:
        # containers whose element expands to nothing would yield childless nodes
        def width(t):
            if isinstance(t, StructRef):
                return sum(width(ft) for _, ft in sdef.structs[t.name])
            return 1

        def walk(t, path):
            if isinstance(t, (ArrayType, ListType)):
                if width(t.elem) == 0:
                    report.append(Violation("EmptyElement", path, "container element has no fields"))
                walk(t.elem, path + ".elem")

        for sname, fields in sdef.structs.items():
            for fname, t in fields:
                walk(t, f"{sname}.{fname}")
    return report


def check_message(value, sdef: SchemaDef) -> list:
    """Shape-check a message value (bytes / tuple-of-fields / list) against the schema."""
    report = []

    def kind_of(v):
        if isinstance(v, (bytes, bytearray)):
            return "bytes"
        if isinstance(v, (list, tuple)):
            return "seq"
        return type(v).__name__

    def check(v, t, path):
        if isinstance(t, BytesType):
            if not isinstance(v, (bytes, bytearray)):
                report.append(Violation("TypeMismatch", path, f"expected {t.n} bytes, got {kind_of(v)}"))
            elif len(v) != t.n:
                report.append(Violation("LengthMismatch", path, f"expected {t.n} bytes, got {len(v)}"))
        elif isinstance(t, StructRef):
            check_struct(v, t.name, path)
        else:
            if not isinstance(v, (list, tuple)):
                report.append(Violation("TypeMismatch", path, f"expected sequence, got {kind_of(v)}"))
                return
            kinds = {kind_of(e) for e in v}
            if len(kinds) > 1:
                report.append(Violation("HeterogeneousElements", path, ", ".join(sorted(kinds))))
                return
            for i, e in enumerate(v):
                check(e, t.elem, f"{path}[{i}]")

    def check_struct(v, sname, path):
        fields = sdef.structs[sname]
        if not isinstance(v, (list, tuple)):
            report.append(Violation("TypeMismatch", path, f"expected struct {sname}, got {kind_of(v)}"))
            return
        if len(v) != len(fields):
            report.append(Violation("ArityMismatch", path, f"{sname} has {len(fields)} fields, got {len(v)}"))
            return
        for fv, (fname, ft) in zip(v, fields):
            check(fv, ft, f"{path}.{fname}" if path else fname)

    check_struct(value, sdef.message_name, "")
    return report


# ---------------------------------------------------------------- schema tree

class NodeKind(enum.IntEnum):
    BYTES = 0
    ARRAY = 1
    LIST = 2
    END = 3


@dataclass(frozen=True)
class SchemaNode:
    kind: NodeKind
    name: str
    path: str
    n_bytes: int = 0
    children: tuple = ()

    @property
    def is_container(self):
        return self.kind in (NodeKind.ARRAY, NodeKind.LIST)


@dataclass(frozen=True)
class SchemaTree:
    root: SchemaNode

    @property
    def top(self):
        return self.root.children

    def iter_nodes(self):
        """Pre-order over all non-root nodes."""
        stack = list(reversed(self.root.children))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def depth(self, list_only=False):
        def d(node):
            below = max((d(c) for c in node.children), default=0)
            counted = node.kind == NodeKind.LIST if list_only else node.is_container
            return below + (1 if counted else 0)
        return max((d(c) for c in self.top), default=0)


def _join(prefix, name):
    return f"{prefix}.{name}" if prefix else name


def normalize(sdef: SchemaDef) -> SchemaTree:
    """Inline structs and wrap scalar/container elements into a tree of Bytes/Array/List nodes.

    Element paths use ``elem`` per container level; a scalar element is named
    ``value`` and a container element keeps the bare ``elem`` path.
    """

    def expand_fields(fields, name_prefix, parent_path):
        out = []
        for fname, t in fields:
            out.extend(expand(_join(name_prefix, fname), t, parent_path))
        return out

    def expand(name, t, parent_path):
        path = _join(parent_path, name)
        if isinstance(t, BytesType):
            return [SchemaNode(NodeKind.BYTES, name, path, t.n)]
        if isinstance(t, StructRef):
            return expand_fields(sdef.structs[t.name], name, parent_path)
        return [container(name, path, t)]

    def container(name, path, t):
        kind = NodeKind.ARRAY if isinstance(t, ArrayType) else NodeKind.LIST
        elem, elem_path = t.elem, path + ".elem"
        if isinstance(elem, StructRef):
            children = expand_fields(sdef.structs[elem.name], "", elem_path)
        elif isinstance(elem, BytesType):
            children = [SchemaNode(NodeKind.BYTES, "value", elem_path + ".value", elem.n)]
        else:
            children = [container("", elem_path, elem)]
        return SchemaNode(kind, name, path, 0, tuple(children))

    top = expand_fields(sdef.fields(), "", "")
    top.append(SchemaNode(NodeKind.END, "END", "END"))
    return SchemaTree(SchemaNode(NodeKind.END, "", "", 0, tuple(top)))


def token_paths(tree: SchemaTree) -> dict:
    """Map each client-schema path to ``(node, role)`` with role in data/start/end."""
    paths = {}

    def add(p, node, role):
        if p in paths:
            raise GrammarViolation(f"ambiguous token path {p!r}")
        paths[p] = (node, role)

    for node in tree.iter_nodes():
        if node.kind == NodeKind.BYTES:
            add(node.path, node, "data")
        elif node.is_container:
            add(node.path + ".start", node, "start")
            add(node.path + ".end", node, "end")
    return paths


# ---------------------------------------------------------------- client schema

@dataclass(frozen=True)
class ClientSchema:
    tags: Mapping[str, int]
    tag_bits: int = 32
    emit_array_end: frozenset = field(default_factory=frozenset)

    def tag(self, path):
        return self.tags[path]

    def start_tag(self, node):
        return self.tags[node.path + ".start"]

    def end_tag(self, node):
        return self.tags.get(node.path + ".end")


def client_schema_from_dict(tags: Mapping, tree: SchemaTree, tag_bits: int = 32) -> ClientSchema:
    paths = token_paths(tree)
    limit = 1 << tag_bits
    for p, v in tags.items():
        if p not in paths:
            raise UnknownPath(f"client schema path {p!r} does not name a token")
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ClientSchemaError(f"tag for {p!r} must be a non-negative integer, got {v!r}")
        if v >= limit:
            raise TagOverflow(f"tag {v} for {p!r} does not fit in {tag_bits} bits")
    missing = [
        p for p, (node, role) in paths.items()
        if p not in tags and not (role == "end" and node.kind == NodeKind.ARRAY)
    ]
    if missing:
        raise MissingMandatoryTag("untagged mandatory token(s): " + ", ".join(missing))
    emit = frozenset(
        node.path for p, (node, role) in paths.items()
        if role == "end" and node.kind == NodeKind.ARRAY and p in tags
    )
    return ClientSchema(dict(tags), tag_bits, emit)


def parse_client_schema(tags_text, tree: SchemaTree, tag_bits: int = 32) -> ClientSchema:
    doc = _load_json(tags_text, "client schema")
    if not isinstance(doc, dict):
        raise ClientSchemaError("client schema must be a JSON object of path: tag")
    return client_schema_from_dict(doc, tree, tag_bits)


def load_schema(idl_text, message_name: str) -> SchemaDef:
    """Parse and validate; raises InvalidSchema on any violation."""
    from .errors import InvalidSchema

    sdef = parse_schema(idl_text, message_name)
    report = validate_schema(sdef)
    if report:
        raise InvalidSchema(report)
    return sdef

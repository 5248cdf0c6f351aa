"""Exception hierarchy shared by every hgum module."""


class HGumError(Exception):
    """Base class for all hgum errors."""


# schema / client schema

class SchemaError(HGumError):
    pass


class MalformedJson(SchemaError):
    pass


class GrammarViolation(SchemaError):
    pass


class UnknownTypeConstructor(GrammarViolation):
    pass


class InvalidSchema(SchemaError):
    """Raised when a SchemaDef fails validation; carries the report."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report) or "invalid schema")


class ClientSchemaError(SchemaError):
    pass


class UnknownPath(ClientSchemaError):
    pass


class MissingMandatoryTag(ClientSchemaError):
    pass


class TagOverflow(ClientSchemaError):
    pass


# wire format

class WireError(HGumError):
    pass


class BadLength(WireError):
    pass


class LengthOverflow(WireError):
    pass


class MalformedHeader(WireError):
    pass


class BadListLevel(WireError):
    pass


# engines

class EngineError(HGumError):
    """Engine failure; ``offset`` is the byte (DES) or token (SER) position."""

    def __init__(self, msg, offset=None):
        self.offset = offset
        if offset is not None:
            msg = f"{msg} (at offset {offset})"
        super().__init__(msg)


class ConfigMismatch(EngineError):
    pass


class DepthOverflow(EngineError):
    pass


class FrameProtocolError(EngineError):
    pass


class MalformedFrameHeader(FrameProtocolError, MalformedHeader):
    """A header phit seen by an engine failed to decode."""


class TrailingData(EngineError):
    pass


class IncompleteMessage(EngineError):
    pass


class SchemaMismatch(EngineError):
    pass


class ListLevelMismatch(EngineError, BadListLevel):
    """SER got a ListEnd whose level disagrees with the open list depth."""


# software codec

class CodecError(HGumError):
    pass


class Truncated(CodecError):
    pass


class TrailingBytes(CodecError):
    pass


class UnbalancedStream(CodecError):
    pass


class CountOverflow(EngineError, CodecError):
    """An element count does not fit the configured length field."""

"""Schema-driven streaming serialization between software and hardware endpoints."""
from .codec import (
    oracle_tokenize,
    sw_deserialize_forward,
    sw_deserialize_reverse,
    sw_serialize,
)
from .des import DesEngine, DesMode, deserialize
from .rom import RomImage, dump_rom, encode_rom
from .schema import (
    ClientSchema,
    SchemaDef,
    SchemaTree,
    check_message,
    load_schema,
    normalize,
    parse_client_schema,
    parse_schema,
    validate_schema,
)
from .ser import SerEngine, SerMode, serialize
from .sim import CycleModel, LoopbackReport, run_loopback, sweep
from .tokens import SerToken, Token, TokenKind, adapt_tokens
from .wire import WireConfig

__version__ = "0.1.0"

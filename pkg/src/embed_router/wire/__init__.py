from embed_router.wire.frames import (
    EMBED_WIRE_BYTES,
    ERROR_EMPTY_INDEX,
    ERROR_INTERNAL,
    ERROR_MALFORMED,
    ERROR_UNSUPPORTED,
    HEADER,
    MAGIC,
    MAX_PAYLOAD,
    MESSAGE_SCHEMAS,
    NO_CLASS,
    PROTOCOL_VERSION,
    ErrorBody,
    MatchRequest,
    MatchResult,
    MsgType,
    Ping,
    Pong,
    RegisterRequest,
    decode_frame,
    encode_frame,
    read_frame,
)
from embed_router.wire.client import RouterClient, client_match, ping, register_expert
from embed_router.wire.server import RouterServer, serve

__all__ = [
    "EMBED_WIRE_BYTES",
    "ERROR_EMPTY_INDEX",
    "ERROR_INTERNAL",
    "ERROR_MALFORMED",
    "ERROR_UNSUPPORTED",
    "HEADER",
    "MAGIC",
    "MAX_PAYLOAD",
    "MESSAGE_SCHEMAS",
    "NO_CLASS",
    "PROTOCOL_VERSION",
    "ErrorBody",
    "MatchRequest",
    "MatchResult",
    "MsgType",
    "Ping",
    "Pong",
    "RegisterRequest",
    "RouterClient",
    "RouterServer",
    "client_match",
    "decode_frame",
    "encode_frame",
    "ping",
    "read_frame",
    "register_expert",
    "serve",
]

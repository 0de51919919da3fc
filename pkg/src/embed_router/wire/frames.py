"""Binary wire protocol for the routing service.

Every frame is an 11-byte little-endian header (magic, version, message
type, payload length) followed by the payload. Payload layouts are driven
by the declarative MESSAGE_SCHEMAS table rather than ad-hoc pack/unpack
code, so the grammar itself is inspectable: the only vector field kinds
are fixed 128-dim float32, which makes it structurally impossible to put
a raw 784-dim sample on the wire.

Embeddings travel as 128 x f32 = 512 bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields as dataclass_fields
from enum import IntEnum
from typing import BinaryIO

import numpy as np

from embed_router.errors import ProtocolError, SizeError, TruncationError

MAGIC = b"EMRT"
PROTOCOL_VERSION = 1
HEADER = struct.Struct("<4sHBI")  # magic, version, msg_type, payload_len

MAX_PAYLOAD = 16 * 1024 * 1024  # 16 MiB hard cap on any payload

EMBED_DIM = 128
EMBED_WIRE_BYTES = EMBED_DIM * 4  # f32 on the wire

NO_CLASS = 0xFFFFFFFF  # class/expert slot when no assignment was made

ERROR_EMPTY_INDEX = 1
ERROR_MALFORMED = 2
ERROR_UNSUPPORTED = 3
ERROR_INTERNAL = 4


class MsgType(IntEnum):
    REGISTER = 1
    MATCH = 2
    MATCH_RESULT = 3
    ERROR = 4
    PING = 5
    PONG = 6


@dataclass
class RegisterRequest:
    expert_id: int
    num_classes: int
    dataset_centroid: np.ndarray  # (128,) f32 on the wire
    class_centroids: np.ndarray  # (num_classes, 128) f32 on the wire


@dataclass
class MatchRequest:
    request_id: int
    embedding: np.ndarray  # (128,) f32 on the wire
    threshold: float  # <= -1 disables rejection
    want_fine: int  # 0 coarse only, nonzero adds class assignment


@dataclass
class MatchResult:
    request_id: int
    expert_id: int  # NO_CLASS when rejected
    class_id: int  # NO_CLASS when rejected or fine not requested
    rejected: int
    score: float  # winning coarse cosine, 0.0 when rejected


@dataclass
class ErrorBody:
    request_id: int
    code: int
    message: str


@dataclass
class Ping:
    pass


@dataclass
class Pong:
    entry_count: int


@dataclass(frozen=True)
class FieldSpec:
    """One payload field. kind is a scalar code (u8/u16/u32/u64/f32), 'vec'
    for a fixed 128 x f32 vector, 'vec_list' for count_field many such
    vectors, or 'str16' for a u16 length-prefixed UTF-8 string."""

    name: str
    kind: str
    count_field: str | None = None


_SCALAR_FMT = {"u8": "<B", "u16": "<H", "u32": "<I", "u64": "<Q", "f32": "<f"}

MESSAGE_SCHEMAS: dict[MsgType, tuple[type, tuple[FieldSpec, ...]]] = {
    MsgType.REGISTER: (
        RegisterRequest,
        (
            FieldSpec("expert_id", "u32"),
            FieldSpec("num_classes", "u32"),
            FieldSpec("dataset_centroid", "vec"),
            FieldSpec("class_centroids", "vec_list", count_field="num_classes"),
        ),
    ),
    MsgType.MATCH: (
        MatchRequest,
        (
            FieldSpec("request_id", "u64"),
            FieldSpec("embedding", "vec"),
            FieldSpec("threshold", "f32"),
            FieldSpec("want_fine", "u8"),
        ),
    ),
    MsgType.MATCH_RESULT: (
        MatchResult,
        (
            FieldSpec("request_id", "u64"),
            FieldSpec("expert_id", "u32"),
            FieldSpec("class_id", "u32"),
            FieldSpec("rejected", "u8"),
            FieldSpec("score", "f32"),
        ),
    ),
    MsgType.ERROR: (
        ErrorBody,
        (
            FieldSpec("request_id", "u64"),
            FieldSpec("code", "u16"),
            FieldSpec("message", "str16"),
        ),
    ),
    MsgType.PING: (Ping, ()),
    MsgType.PONG: (Pong, (FieldSpec("entry_count", "u32"),)),
}

_BODY_TO_TYPE = {body: t for t, (body, _) in MESSAGE_SCHEMAS.items()}


def _encode_vec(value) -> bytes:
    arr = np.ascontiguousarray(value, dtype="<f4")
    if arr.shape != (EMBED_DIM,):
        raise ProtocolError(f"vector field must have shape ({EMBED_DIM},), got {arr.shape}")
    return arr.tobytes()


def encode_payload(msg_type: MsgType, body) -> bytes:
    expected_type, schema = MESSAGE_SCHEMAS[msg_type]
    if not isinstance(body, expected_type):
        raise ProtocolError(f"{msg_type.name} payload must be {expected_type.__name__}")
    out = bytearray()
    values = {f.name: getattr(body, f.name) for f in dataclass_fields(body)}
    for spec in schema:
        value = values[spec.name]
        if spec.kind in _SCALAR_FMT:
            try:
                out += struct.pack(_SCALAR_FMT[spec.kind], value)
            except struct.error as exc:
                raise ProtocolError(f"field {spec.name}: {exc}") from None
        elif spec.kind == "vec":
            out += _encode_vec(value)
        elif spec.kind == "vec_list":
            arr = np.ascontiguousarray(value, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != EMBED_DIM:
                raise ProtocolError(f"field {spec.name} must be (n, {EMBED_DIM})")
            if arr.shape[0] != values[spec.count_field]:
                raise ProtocolError(f"field {spec.name} disagrees with {spec.count_field}")
            out += arr.tobytes()
        elif spec.kind == "str16":
            raw = str(value).encode("utf-8")
            if len(raw) > 0xFFFF:
                raw = raw[:0xFFFF]
            out += struct.pack("<H", len(raw)) + raw
        else:  # pragma: no cover - schema table is static
            raise ProtocolError(f"unknown field kind {spec.kind}")
    return bytes(out)


def decode_payload(msg_type: MsgType, payload: bytes):
    expected_type, schema = MESSAGE_SCHEMAS[msg_type]
    pos = 0
    values: dict[str, object] = {}
    for spec in schema:
        if spec.kind in _SCALAR_FMT:
            fmt = struct.Struct(_SCALAR_FMT[spec.kind])
            if pos + fmt.size > len(payload):
                raise TruncationError(f"payload ends inside field {spec.name}")
            (values[spec.name],) = fmt.unpack_from(payload, pos)
            pos += fmt.size
        elif spec.kind == "vec":
            if pos + EMBED_WIRE_BYTES > len(payload):
                raise TruncationError(f"payload ends inside field {spec.name}")
            raw = np.frombuffer(payload, dtype="<f4", count=EMBED_DIM, offset=pos)
            # arbitrary wire bytes may encode signaling NaNs; quiet the cast
            with np.errstate(invalid="ignore"):
                values[spec.name] = raw.astype(np.float64)
            pos += EMBED_WIRE_BYTES
        elif spec.kind == "vec_list":
            count = int(values[spec.count_field])
            need = count * EMBED_WIRE_BYTES
            if pos + need > len(payload):
                raise TruncationError(f"payload ends inside field {spec.name}")
            raw = np.frombuffer(payload, dtype="<f4", count=count * EMBED_DIM, offset=pos)
            with np.errstate(invalid="ignore"):
                values[spec.name] = raw.astype(np.float64).reshape(count, EMBED_DIM)
            pos += need
        elif spec.kind == "str16":
            if pos + 2 > len(payload):
                raise TruncationError(f"payload ends inside field {spec.name}")
            (length,) = struct.unpack_from("<H", payload, pos)
            pos += 2
            if pos + length > len(payload):
                raise TruncationError(f"payload ends inside field {spec.name}")
            try:
                values[spec.name] = payload[pos : pos + length].decode("utf-8")
            except UnicodeDecodeError:
                raise ProtocolError(f"field {spec.name} is not valid UTF-8") from None
            pos += length
        else:  # pragma: no cover - schema table is static
            raise ProtocolError(f"unknown field kind {spec.kind}")
    if pos != len(payload):
        raise ProtocolError(f"{len(payload) - pos} trailing bytes after {msg_type.name} payload")
    return expected_type(**values)


def encode_frame(body) -> bytes:
    """Serialize a message body dataclass into a complete frame."""
    msg_type = _BODY_TO_TYPE.get(type(body))
    if msg_type is None:
        raise ProtocolError(f"no message type for {type(body).__name__}")
    payload = encode_payload(msg_type, body)
    if len(payload) > MAX_PAYLOAD:
        raise SizeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(MAGIC, PROTOCOL_VERSION, int(msg_type), len(payload)) + payload


def decode_frame(data: bytes) -> tuple[MsgType, object, int]:
    """Parse one frame from the start of data.

    Returns (msg_type, body, bytes_consumed). Raises TruncationError when
    data holds less than one complete frame, SizeError when the declared
    payload exceeds the cap, ProtocolError for anything else malformed.
    """
    if len(data) < HEADER.size:
        raise TruncationError(f"need {HEADER.size} header bytes, have {len(data)}")
    magic, version, type_code, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    try:
        msg_type = MsgType(type_code)
    except ValueError:
        raise ProtocolError(f"unknown message type {type_code}") from None
    if length > MAX_PAYLOAD:
        raise SizeError(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    end = HEADER.size + length
    if len(data) < end:
        raise TruncationError(f"need {end} bytes for frame, have {len(data)}")
    body = decode_payload(msg_type, data[HEADER.size : end])
    return msg_type, body, end


def read_frame(stream: BinaryIO) -> tuple[MsgType, object] | None:
    """Read exactly one frame from a blocking stream.

    Returns None on clean EOF at a frame boundary; raises TruncationError
    if the stream ends mid-frame.
    """
    head = _read_exact(stream, HEADER.size, allow_eof=True)
    if head is None:
        return None
    magic, version, type_code, length = HEADER.unpack(head)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    try:
        msg_type = MsgType(type_code)
    except ValueError:
        raise ProtocolError(f"unknown message type {type_code}") from None
    if length > MAX_PAYLOAD:
        raise SizeError(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    payload = _read_exact(stream, length, allow_eof=False) if length else b""
    return msg_type, decode_payload(msg_type, payload)


def _read_exact(stream: BinaryIO, n: int, *, allow_eof: bool) -> bytes | None:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            if got == 0 and allow_eof:
                return None
            raise TruncationError(f"stream ended after {got} of {n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)

"""Blocking client for the routing service."""

from __future__ import annotations

import itertools
import socket

import numpy as np

from embed_router.errors import ProtocolError, ServerError
from embed_router.matcher import CentroidEntry
from embed_router.wire.frames import (
    MatchRequest,
    MatchResult,
    MsgType,
    Ping,
    RegisterRequest,
    encode_frame,
    read_frame,
)

_request_ids = itertools.count(1)


class RouterClient:
    """One TCP connection; usable for many requests and as a context manager.

    A timeout (seconds) makes stalled calls raise the builtin TimeoutError.
    """

    def __init__(self, address: tuple[str, int], timeout: float | None = None):
        self._sock = socket.create_connection(address, timeout=timeout)
        self._file = self._sock.makefile("rwb")

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "RouterClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _roundtrip(self, body):
        self._file.write(encode_frame(body))
        self._file.flush()
        frame = read_frame(self._file)
        if frame is None:
            raise ProtocolError("server closed the connection without a reply")
        msg_type, reply = frame
        if msg_type == MsgType.ERROR:
            raise ServerError(reply.code, reply.message)
        return msg_type, reply

    def match(
        self,
        embedding: np.ndarray,
        threshold: float = -1.0,
        want_fine: bool = True,
        request_id: int | None = None,
    ) -> MatchResult:
        request = MatchRequest(
            request_id=next(_request_ids) if request_id is None else request_id,
            embedding=np.asarray(embedding, dtype=np.float64),
            threshold=float(threshold),
            want_fine=1 if want_fine else 0,
        )
        msg_type, reply = self._roundtrip(request)
        if msg_type != MsgType.MATCH_RESULT:
            raise ProtocolError(f"expected MATCH_RESULT, got {msg_type.name}")
        return reply

    def register(self, entry: CentroidEntry) -> int:
        """Register (or overwrite) an expert; returns the index size."""
        request = RegisterRequest(
            expert_id=entry.expert_id,
            num_classes=entry.class_count,
            dataset_centroid=entry.dataset_centroid,
            class_centroids=entry.class_centroids,
        )
        msg_type, reply = self._roundtrip(request)
        if msg_type != MsgType.PONG:
            raise ProtocolError(f"expected PONG, got {msg_type.name}")
        return reply.entry_count

    def ping(self) -> int:
        """Returns the number of registered experts."""
        msg_type, reply = self._roundtrip(Ping())
        if msg_type != MsgType.PONG:
            raise ProtocolError(f"expected PONG, got {msg_type.name}")
        return reply.entry_count


def client_match(
    address: tuple[str, int],
    embedding: np.ndarray,
    threshold: float = -1.0,
    want_fine: bool = True,
    timeout: float | None = None,
) -> MatchResult:
    with RouterClient(address, timeout=timeout) as client:
        return client.match(embedding, threshold=threshold, want_fine=want_fine)


def register_expert(
    address: tuple[str, int], entry: CentroidEntry, timeout: float | None = None
) -> int:
    with RouterClient(address, timeout=timeout) as client:
        return client.register(entry)


def ping(address: tuple[str, int], timeout: float | None = None) -> int:
    with RouterClient(address, timeout=timeout) as client:
        return client.ping()

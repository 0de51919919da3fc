"""Threaded TCP routing service.

The server owns a CentroidIndex and swaps it atomically on REGISTER, so
every MATCH reads one consistent snapshot regardless of concurrent
registration. Framing errors close the connection (the stream position is
no longer trustworthy); semantic errors answer with an ERROR frame and
keep the connection alive.
"""

from __future__ import annotations

import logging
import socketserver
import threading

import numpy as np

from embed_router.errors import EmbedRouterError, ProtocolError
from embed_router.matcher import CentroidEntry, CentroidIndex, coarse_assign, fine_assign
from embed_router.wire.frames import (
    ERROR_EMPTY_INDEX,
    ERROR_INTERNAL,
    ERROR_MALFORMED,
    ERROR_UNSUPPORTED,
    NO_CLASS,
    ErrorBody,
    MatchRequest,
    MatchResult,
    MsgType,
    Pong,
    RegisterRequest,
    encode_frame,
    read_frame,
)

log = logging.getLogger(__name__)

DEFAULT_PORT = 7431


class RouterServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], index: CentroidIndex | None = None):
        super().__init__(address, _Handler)
        self.index = index if index is not None else CentroidIndex()
        self._index_lock = threading.Lock()

    def register_entry(self, entry: CentroidEntry) -> int:
        """Swap in a new index containing the entry; returns the new size."""
        with self._index_lock:
            self.index = self.index.register(entry)
            return len(self.index)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            try:
                frame = read_frame(self.rfile)
            except ProtocolError as exc:
                self._send_error(0, ERROR_MALFORMED, str(exc))
                return  # stream position unreliable after a framing error
            except OSError:
                return
            if frame is None:
                return
            msg_type, body = frame
            try:
                if msg_type == MsgType.REGISTER:
                    self._handle_register(body)
                elif msg_type == MsgType.MATCH:
                    self._handle_match(body)
                elif msg_type == MsgType.PING:
                    self._reply(Pong(entry_count=len(self.server.index)))
                else:
                    self._send_error(
                        0, ERROR_UNSUPPORTED, f"server does not accept {msg_type.name}"
                    )
            except EmbedRouterError as exc:
                self._send_error(getattr(body, "request_id", 0), ERROR_MALFORMED, str(exc))
            except OSError:
                return
            except Exception as exc:  # noqa: BLE001 - one bad request must not kill the worker
                log.exception("unexpected error handling %s", msg_type.name)
                self._send_error(getattr(body, "request_id", 0), ERROR_INTERNAL, str(exc))
                return

    def _handle_register(self, req: RegisterRequest) -> None:
        if not (
            np.isfinite(req.dataset_centroid).all() and np.isfinite(req.class_centroids).all()
        ):
            self._send_error(0, ERROR_MALFORMED, "centroids must be finite")
            return
        entry = CentroidEntry(
            expert_id=req.expert_id,
            dataset_centroid=req.dataset_centroid,
            class_centroids=req.class_centroids,
        )
        count = self.server.register_entry(entry)
        self._reply(Pong(entry_count=count))

    def _handle_match(self, req: MatchRequest) -> None:
        snapshot = self.server.index
        if len(snapshot) == 0:
            self._send_error(req.request_id, ERROR_EMPTY_INDEX, "no experts registered")
            return
        if not np.isfinite(req.embedding).all():
            self._send_error(req.request_id, ERROR_MALFORMED, "embedding must be finite")
            return
        coarse = coarse_assign(req.embedding, snapshot)
        best = float(np.max(coarse.coarse_scores))
        if req.threshold > -1.0 and best < req.threshold:
            self._reply(
                MatchResult(
                    request_id=req.request_id,
                    expert_id=NO_CLASS,
                    class_id=NO_CLASS,
                    rejected=1,
                    score=0.0,
                )
            )
            return
        class_id = NO_CLASS
        if req.want_fine:
            class_id = fine_assign(req.embedding, snapshot.get(coarse.expert_id)).class_id
        self._reply(
            MatchResult(
                request_id=req.request_id,
                expert_id=coarse.expert_id,
                class_id=class_id,
                rejected=0,
                score=best,
            )
        )

    def _reply(self, body) -> None:
        self.wfile.write(encode_frame(body))
        self.wfile.flush()

    def _send_error(self, request_id: int, code: int, message: str) -> None:
        try:
            self._reply(ErrorBody(request_id=request_id, code=code, message=message))
        except OSError:
            pass


def serve(
    index: CentroidIndex | None = None,
    address: tuple[str, int] = ("127.0.0.1", DEFAULT_PORT),
) -> RouterServer:
    """Start a server on a background thread; caller shuts it down."""
    server = RouterServer(address, index=index)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server

"""Registry service behaviour over real sockets on the loopback interface."""

import socket
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from embed_router.errors import ProtocolError, ServerError
from embed_router.matcher import CentroidEntry, CentroidIndex, assign_hierarchical
from embed_router.wire.client import RouterClient, client_match, ping, register_expert
from embed_router.wire.frames import (
    EMBED_DIM,
    ERROR_EMPTY_INDEX,
    ERROR_MALFORMED,
    ERROR_UNSUPPORTED,
    NO_CLASS,
    MatchResult,
    MsgType,
    Ping,
    encode_frame,
    read_frame,
)
from embed_router.wire.server import RouterServer, serve


def make_entry(rng, expert_id, n_classes=3):
    c = rng.normal(size=(n_classes, EMBED_DIM)) + 2.0
    return CentroidEntry(
        expert_id=expert_id, dataset_centroid=c.mean(axis=0), class_centroids=c
    )


def quantized_entry(rng, expert_id, n_classes=3):
    """Entry whose floats are exactly f32-representable, so the wire is lossless."""
    c = (rng.normal(size=(n_classes, EMBED_DIM)) + 2.0).astype(np.float32)
    return CentroidEntry(
        expert_id=expert_id,
        dataset_centroid=c.mean(axis=0, dtype=np.float32).astype(np.float64),
        class_centroids=c.astype(np.float64),
    )


@pytest.fixture
def live_server():
    server = RouterServer(("127.0.0.1", 0))
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.05), daemon=True
    )
    thread.start()
    yield server, server.server_address
    server.shutdown()
    server.server_close()


def test_ping_empty_server(live_server):
    _, addr = live_server
    assert ping(addr, timeout=5.0) == 0


def test_match_before_register_is_empty_index_error(live_server, rng_values):
    _, addr = live_server
    with pytest.raises(ServerError) as exc_info:
        client_match(addr, rng_values.normal(size=EMBED_DIM), timeout=5.0)
    assert exc_info.value.code == ERROR_EMPTY_INDEX


def test_register_then_self_query(live_server, rng_values):
    _, addr = live_server
    entry = make_entry(rng_values, expert_id=4)
    assert register_expert(addr, entry, timeout=5.0) == 1
    result = client_match(addr, entry.dataset_centroid, timeout=5.0)
    assert result.expert_id == 4
    assert not result.rejected
    assert result.score > 0.999  # f32 rounding keeps it shy of exactly 1


def test_register_overwrite_keeps_count(live_server, rng_values):
    _, addr = live_server
    with RouterClient(addr, timeout=5.0) as client:
        assert client.register(make_entry(rng_values, 0, n_classes=5)) == 1
        assert client.register(make_entry(rng_values, 0, n_classes=2)) == 1
        assert client.ping() == 1
        # the replacement entry is live: fine ids now come from 2 classes
        result = client.match(rng_values.normal(size=EMBED_DIM) + 2.0)
        assert result.class_id < 2


def test_server_reports_six_entries(live_server, rng_values):
    _, addr = live_server
    with RouterClient(addr, timeout=5.0) as client:
        for k in range(6):
            client.register(make_entry(rng_values, k))
        assert client.ping() == 6


def test_wire_matches_in_process_assignment(live_server, rng_values):
    _, addr = live_server
    entries = [quantized_entry(rng_values, k, n_classes=2 + k % 4) for k in range(5)]
    index = CentroidIndex(entries=entries)
    with RouterClient(addr, timeout=5.0) as client:
        for e in entries:
            client.register(e)
        for _ in range(100):
            q = rng_values.normal(size=EMBED_DIM).astype(np.float32).astype(np.float64)
            local = assign_hierarchical(q, index)
            remote = client.match(q)
            assert (remote.expert_id, remote.class_id) == (local.expert_id, local.class_id)


def test_coarse_only_request(live_server, rng_values):
    _, addr = live_server
    entry = make_entry(rng_values, 1)
    register_expert(addr, entry, timeout=5.0)
    result = client_match(addr, entry.dataset_centroid, want_fine=False, timeout=5.0)
    assert result.expert_id == 1
    assert result.class_id == NO_CLASS


def test_rejection_over_wire(live_server, rng_values):
    _, addr = live_server
    entry = make_entry(rng_values, 0)
    register_expert(addr, entry, timeout=5.0)
    q = np.zeros(EMBED_DIM)
    q[0] = 1.0
    q -= entry.dataset_centroid * (q @ entry.dataset_centroid) / (
        entry.dataset_centroid @ entry.dataset_centroid
    )  # orthogonal to the only centroid
    result = client_match(addr, q, threshold=0.9, timeout=5.0)
    assert result.rejected == 1
    assert result.expert_id == NO_CLASS and result.class_id == NO_CLASS
    assert result.score == 0.0
    accepted = client_match(addr, q, threshold=-1.0, timeout=5.0)
    assert accepted.rejected == 0


def test_nonfinite_embedding_keeps_connection(live_server, rng_values):
    _, addr = live_server
    register_expert(addr, make_entry(rng_values, 0), timeout=5.0)
    with RouterClient(addr, timeout=5.0) as client:
        bad = np.full(EMBED_DIM, np.nan)
        with pytest.raises(ServerError) as exc_info:
            client.match(bad)
        assert exc_info.value.code == ERROR_MALFORMED
        assert client.ping() == 1  # same connection still serves


def test_nonfinite_centroid_rejected(live_server, rng_values):
    _, addr = live_server
    entry = make_entry(rng_values, 0)
    entry.dataset_centroid[3] = np.inf
    with RouterClient(addr, timeout=5.0) as client:
        with pytest.raises(ServerError) as exc_info:
            client.register(entry)
        assert exc_info.value.code == ERROR_MALFORMED
        assert client.ping() == 0


def test_garbage_bytes_get_error_then_close(live_server):
    _, addr = live_server
    with socket.create_connection(addr, timeout=5.0) as sock:
        sock.sendall(b"not a frame at all, much too long for a header")
        stream = sock.makefile("rb")
        msg_type, body = read_frame(stream)
        assert msg_type == MsgType.ERROR
        assert body.code == ERROR_MALFORMED
        assert stream.read(1) == b""  # server hung up after the framing error


def test_unsupported_message_type(live_server):
    _, addr = live_server
    frame = encode_frame(
        MatchResult(request_id=1, expert_id=0, class_id=0, rejected=0, score=0.0)
    )
    with socket.create_connection(addr, timeout=5.0) as sock:
        stream = sock.makefile("rwb")
        stream.write(frame)
        stream.flush()
        msg_type, body = read_frame(stream)
        assert msg_type == MsgType.ERROR and body.code == ERROR_UNSUPPORTED
        stream.write(encode_frame(Ping()))  # connection survives
        stream.flush()
        msg_type, body = read_frame(stream)
        assert msg_type == MsgType.PONG


def test_silent_peer_times_out(rng_values):
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)  # accept nothing; the connection sits in the backlog
    try:
        client = RouterClient(listener.getsockname(), timeout=0.2)
        with pytest.raises(TimeoutError):
            client.ping()
        client.close()
    finally:
        listener.close()


def test_connection_to_stopped_server_fails(live_server):
    server, addr = live_server
    server.shutdown()
    server.server_close()
    # the listener is gone; a fresh connection now fails outright
    with pytest.raises(OSError):
        ping(addr, timeout=1.0)


def test_concurrent_storm_matches_serial(live_server, rng_values):
    _, addr = live_server
    entries = [quantized_entry(rng_values, k) for k in range(3)]
    with RouterClient(addr, timeout=5.0) as client:
        for e in entries:
            client.register(e)
        queries = [
            rng_values.normal(size=EMBED_DIM).astype(np.float32).astype(np.float64)
            for _ in range(160)
        ]
        serial = [client.match(q, request_id=i) for i, q in enumerate(queries)]

    def worker(chunk):
        out = []
        with RouterClient(addr, timeout=10.0) as c:
            for i, q in chunk:
                out.append((i, c.match(q, request_id=i)))
        return out

    chunks = [list(enumerate(queries))[i::8] for i in range(8)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        concurrent = dict(pair for result in pool.map(worker, chunks) for pair in result)

    for i, want in enumerate(serial):
        got = concurrent[i]
        assert (got.expert_id, got.class_id, got.rejected) == (
            want.expert_id,
            want.class_id,
            want.rejected,
        )
        assert got.score == want.score
        assert got.request_id == i


def test_serve_helper_and_preloaded_index(rng_values):
    index = CentroidIndex(entries=[make_entry(rng_values, 2)])
    server = serve(index=index, address=("127.0.0.1", 0))
    try:
        addr = server.server_address
        assert ping(addr, timeout=5.0) == 1
        result = client_match(addr, index.entries[0].dataset_centroid, timeout=5.0)
        assert result.expert_id == 2
    finally:
        server.shutdown()
        server.server_close()

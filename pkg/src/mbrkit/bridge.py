"""Client for external scorer processes speaking line-delimited JSON.

Framing is exactly one UTF-8 JSON object per newline-terminated line.  Ops:

    -> {"req_id": 0, "op": "hello", "protocol": 1}
    <- {"req_id": 0, "name": str, "shape": "factorable"|"joint",
        "embedding_dim"?: int, "deterministic": bool}
    -> {"req_id": n, "op": "score_pair", "pairs": [[left, right], ...]}
    <- {"req_id": n, "scores": [...]}
    -> {"req_id": n, "op": "embed", "texts": [...]}
    <- {"req_id": n, "embeddings": [[...], ...]}
    -> {"req_id": n, "op": "estimate", "triples": [[[...],[...],[...]], ...]}
    <- {"req_id": n, "scores": [...]}
    <- {"req_id": n, "error": str}        (any op may fail)

Requests are split into batches of at most 64 items and pipelined; responses
may arrive in any order and are matched by req_id.  A failure mid-batch
raises without exposing partial results.
"""
from __future__ import annotations

import json
import math
import os
import selectors
import shlex
import socket
import subprocess
import threading
import time
from typing import Sequence

import numpy as np

from .utility import ProviderCapabilities, ProviderShapeError, UtilityProvider

PROTOCOL_VERSION = 1
BATCH_LIMIT = 64
DEFAULT_TIMEOUT = 30.0


class ScorerError(Exception):
    """Base class for scorer-side and transport failures."""


class ScorerTransportError(ScorerError):
    """The scorer process or connection went away or timed out."""


class ScorerProtocolError(ScorerError):
    """The scorer replied with something the protocol does not allow."""


class ScorerRemoteError(ScorerError):
    """The scorer reported an error object; the message is verbatim."""


class HandshakeError(ScorerProtocolError):
    pass


class _StdioTransport:
    """Line transport over a child process's stdin/stdout."""

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self.proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )
        self._buffer = bytearray()
        self._selector = selectors.DefaultSelector()
        self._selector.register(self.proc.stdout, selectors.EVENT_READ)

    def write_line(self, line: str) -> None:
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerTransportError(
                f"scorer process {self.command[0]!r} is not accepting requests "
                f"(exit code {self.proc.poll()})"
            ) from exc

    def read_line(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline].decode("utf-8")
                del self._buffer[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ScorerTransportError(f"timed out after {timeout}s waiting for scorer")
            if not self._selector.select(remaining):
                continue
            chunk = os.read(self.proc.stdout.fileno(), 65536)
            if not chunk:
                raise ScorerTransportError(
                    f"scorer process closed its output (exit code {self.proc.poll()})"
                )
            self._buffer.extend(chunk)

    def close(self) -> None:
        self._selector.close()
        if self.proc.stdin:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class _TcpTransport:
    """Line transport over a TCP connection."""

    def __init__(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ScorerTransportError(f"cannot connect to scorer at {host}:{port}: {exc}") from exc
        self._buffer = bytearray()

    def write_line(self, line: str) -> None:
        try:
            self.sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise ScorerTransportError(f"scorer connection lost: {exc}") from exc

    def read_line(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline].decode("utf-8")
                del self._buffer[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ScorerTransportError(f"timed out after {timeout}s waiting for scorer")
            self.sock.settimeout(remaining)
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                continue
            except OSError as exc:
                raise ScorerTransportError(f"scorer connection lost: {exc}") from exc
            if not chunk:
                raise ScorerTransportError("scorer closed the connection")
            self._buffer.extend(chunk)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class ScorerConnection:
    """One scorer process or endpoint; one writer, one reader, req_id matching."""

    def __init__(self, transport, timeout: float = DEFAULT_TIMEOUT):
        self._transport = transport
        self.timeout = timeout
        self.capabilities: ProviderCapabilities | None = None
        self._next_id = 1
        self._lock = threading.RLock()

    @classmethod
    def from_command(cls, command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ValueError("empty scorer command")
        return cls(_StdioTransport(argv), timeout=timeout)

    @classmethod
    def from_tcp(cls, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        return cls(_TcpTransport(host, port, timeout=timeout), timeout=timeout)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "ScorerConnection":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _read_response(self) -> dict:
        line = self._transport.read_line(self.timeout)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerProtocolError(f"malformed scorer response: {line[:200]!r}") from exc
        if not isinstance(obj, dict) or "req_id" not in obj:
            raise ScorerProtocolError(f"scorer response lacks req_id: {line[:200]!r}")
        return obj

    def handshake(self) -> ProviderCapabilities:
        with self._lock:
            self._transport.write_line(
                json.dumps({"req_id": 0, "op": "hello", "protocol": PROTOCOL_VERSION})
            )
            reply = self._read_response()
            if "error" in reply:
                raise HandshakeError(f"scorer rejected handshake: {reply['error']}")
            if reply["req_id"] != 0:
                raise HandshakeError(f"handshake reply has req_id {reply['req_id']}, expected 0")
            if "protocol" in reply and reply["protocol"] != PROTOCOL_VERSION:
                raise HandshakeError(
                    f"protocol version mismatch: scorer speaks {reply['protocol']}, "
                    f"client speaks {PROTOCOL_VERSION}"
                )
            for fld in ("name", "shape", "deterministic"):
                if fld not in reply:
                    raise HandshakeError(f"handshake reply is missing {fld!r}")
            try:
                self.capabilities = ProviderCapabilities(
                    name=reply["name"],
                    shape=reply["shape"],
                    embedding_dim=reply.get("embedding_dim"),
                    deterministic=bool(reply["deterministic"]),
                )
            except ValueError as exc:
                raise HandshakeError(f"invalid scorer capabilities: {exc}") from exc
            return self.capabilities

    def _require_handshake(self) -> ProviderCapabilities:
        if self.capabilities is None:
            raise ScorerProtocolError("handshake has not completed")
        return self.capabilities

    def _exchange(self, op: str, payload_key: str, items: list, result_key: str) -> list:
        """Send `items` in pipelined batches and assemble results in order."""
        if not items:
            raise ValueError(f"empty {op} batch rejected before sending")
        self._require_handshake()
        with self._lock:
            pending: dict[int, int] = {}
            order: list[int] = []
            for start in range(0, len(items), BATCH_LIMIT):
                chunk = items[start : start + BATCH_LIMIT]
                req_id = self._next_id
                self._next_id += 1
                pending[req_id] = len(chunk)
                order.append(req_id)
                self._transport.write_line(
                    json.dumps({"req_id": req_id, "op": op, payload_key: chunk})
                )
            results: dict[int, list] = {}
            while len(results) < len(order):
                reply = self._read_response()
                req_id = reply["req_id"]
                if req_id not in pending or req_id in results:
                    raise ScorerProtocolError(f"unexpected response req_id {req_id}")
                if "error" in reply:
                    raise ScorerRemoteError(str(reply["error"]))
                if result_key not in reply or not isinstance(reply[result_key], list):
                    raise ScorerProtocolError(f"response {req_id} lacks a {result_key!r} list")
                if len(reply[result_key]) != pending[req_id]:
                    raise ScorerProtocolError(
                        f"response {req_id} has {len(reply[result_key])} {result_key}, "
                        f"expected {pending[req_id]}"
                    )
                results[req_id] = reply[result_key]
            assembled: list = []
            for req_id in order:
                assembled.extend(results[req_id])
            return assembled

    @staticmethod
    def _check_scores(scores: list) -> list[float]:
        out = []
        for i, s in enumerate(scores):
            if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
                raise ScorerProtocolError(f"non-finite or non-numeric score at index {i}: {s!r}")
            out.append(float(s))
        return out

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        items = [[left, right] for left, right in pairs]
        return self._check_scores(self._exchange("score_pair", "pairs", items, "scores"))

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        caps = self._require_handshake()
        if caps.shape != "factorable":
            raise ProviderShapeError(f"scorer {caps.name!r} is joint; embed needs factorable")
        raw = self._exchange("embed", "texts", list(texts), "embeddings")
        out = []
        for i, vec in enumerate(raw):
            if not isinstance(vec, list) or len(vec) != caps.embedding_dim:
                raise ScorerProtocolError(
                    f"embedding {i} has length {len(vec) if isinstance(vec, list) else 'n/a'}, "
                    f"expected {caps.embedding_dim}"
                )
            arr = np.asarray(vec, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ScorerProtocolError(f"embedding {i} contains non-finite values")
            out.append(arr)
        return out

    def estimate(self, triples) -> list[float]:
        caps = self._require_handshake()
        if caps.shape != "factorable":
            raise ProviderShapeError(f"scorer {caps.name!r} is joint; estimate needs factorable")
        items = []
        for src, support, hyp in triples:
            triple = []
            for vec in (src, support, hyp):
                values = [float(x) for x in vec]
                if len(values) != caps.embedding_dim:
                    raise ScorerProtocolError(
                        f"estimate vector has length {len(values)}, expected {caps.embedding_dim}"
                    )
                triple.append(values)
            items.append(triple)
        return self._check_scores(self._exchange("estimate", "triples", items, "scores"))


class RemoteProvider(UtilityProvider):
    """Utility provider backed by a scorer connection."""

    def __init__(self, connection: ScorerConnection):
        if connection.capabilities is None:
            connection.handshake()
        self.connection = connection
        self.capabilities = connection.capabilities

    def score_pairs(self, pairs):
        return self.connection.score_pairs(pairs)

    def embed(self, texts):
        return self.connection.embed(texts)

    def estimate(self, triples):
        return self.connection.estimate(triples)

    def close(self) -> None:
        self.connection.close()

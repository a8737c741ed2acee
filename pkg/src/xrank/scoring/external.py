"""Client for scorers running out of process.

Wire protocol: newline-delimited JSON over the stdio of a spawned process or
a TCP connection::

    request   {"id": <u64>, "query": "<text>", "texts": ["<t1>", ...]}
    response  {"id": <u64>, "scores": [<f64>, ...]}
    error     {"id": <u64>, "error": "<message>"}

The client sends ``{"id": 0, "query": "", "texts": []}`` on connect and
requires ``{"id": 0, "scores": []}`` back.  Requests from concurrent callers
share one connection; responses are matched to requests by id, so the
server may answer out of order.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
import shlex
import socket
import subprocess
import threading
from typing import Sequence

from ..errors import ProtocolError, ScorerError, ScorerTimeout
from .base import Scorer

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60.0


class _Pending:
    __slots__ = ("event", "scores", "error", "n_texts")

    def __init__(self, n_texts):
        self.event = threading.Event()
        self.scores = None
        self.error = None
        self.n_texts = n_texts


def parse_addr(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"scorer address must look like host:port, got {addr!r}")
    return host, int(port)


class ExternalScorer(Scorer):
    """Scorer speaking the JSON-lines protocol.

    Exactly one of ``argv`` (a command to spawn) or ``addr`` (``host:port``)
    must be given.  Connection and handshake failures raise ScorerError from
    the constructor.
    """

    kind = "external"

    def __init__(self, argv: Sequence[str] | str | None = None, addr: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT, max_batch: int | None = 64,
                 deterministic: bool = True, name: str | None = None):
        if (argv is None) == (addr is None):
            raise ValueError("give exactly one of argv or addr")
        if isinstance(argv, str):
            argv = shlex.split(argv)
        self.argv = list(argv) if argv is not None else None
        self.addr = addr
        self.timeout = timeout
        self.max_batch = max_batch
        self.deterministic = deterministic
        self.name = name
        self._ids = itertools.count(1)
        self._write_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._pending: dict[int, _Pending] = {}
        self._abandoned: set[int] = set()
        self._broken: ScorerError | None = None
        self._proc = None
        self._sock = None
        self._connect()
        self._reader = threading.Thread(target=self._read_loop, name="xrank-scorer-reader", daemon=True)
        self._reader.start()
        try:
            scores = self._roundtrip(0, "", [])
        except ScorerError as exc:
            self.close()
            raise ScorerError(f"handshake with {self.describe()} failed: {exc}") from exc
        if scores != []:
            self.close()
            raise ScorerError(f"handshake with {self.describe()} failed: expected empty scores")

    def describe(self) -> str:
        if self.addr is not None:
            return f"scorer at {self.addr}"
        return f"scorer command {shlex.join(self.argv)!r}"

    @property
    def fingerprint(self) -> str:
        if self.name:
            return f"external:{self.name}"
        target = self.addr if self.addr is not None else shlex.join(self.argv)
        return f"external:{target}"

    def _connect(self):
        if self.argv is not None:
            try:
                self._proc = subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)
            except OSError as exc:
                raise ScorerError(f"cannot start {self.describe()}: {exc}") from exc
            self._rfile, self._wfile = self._proc.stdout, self._proc.stdin
        else:
            host, port = parse_addr(self.addr)
            try:
                self._sock = socket.create_connection((host, port), timeout=self.timeout)
            except OSError as exc:
                raise ScorerError(f"cannot connect to {self.describe()}: {exc}") from exc
            self._sock.settimeout(None)
            self._rfile = self._sock.makefile("rb")
            self._wfile = self._sock.makefile("wb")

    def _read_loop(self):
        try:
            for raw in self._rfile:
                if not raw.strip():
                    continue
                try:
                    self._dispatch(raw)
                except ProtocolError as exc:
                    self._break(exc)
                    return
        except (OSError, ValueError) as exc:
            self._break(ScorerError(f"{self.describe()}: read failed: {exc}"))
            return
        self._break(ScorerError(f"{self.describe()} closed the connection"))

    def _dispatch(self, raw: bytes):
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ProtocolError(f"malformed response line {raw[:80]!r}") from None
        rid = msg.get("id") if isinstance(msg, dict) else None
        if not isinstance(rid, int) or isinstance(rid, bool):
            raise ProtocolError(f"response without an integer id: {raw[:80]!r}")
        with self._state_lock:
            pending = self._pending.pop(rid, None)
            abandoned = rid in self._abandoned
            self._abandoned.discard(rid)
        if pending is None:
            if abandoned:
                logger.warning("dropping late response for timed-out request %d", rid)
                return
            raise ProtocolError("response for unknown request", rid)
        if "error" in msg:
            pending.error = ScorerError(str(msg["error"]), rid)
        else:
            scores = msg.get("scores")
            if (not isinstance(scores, list) or len(scores) != pending.n_texts
                    or not all(isinstance(s, (int, float)) and not isinstance(s, bool) and math.isfinite(s)
                               for s in scores)):
                pending.error = ProtocolError(
                    f"expected {pending.n_texts} finite scores, got {str(scores)[:80]}", rid)
            else:
                pending.scores = [float(s) for s in scores]
        pending.event.set()

    def _break(self, error: ScorerError):
        with self._state_lock:
            if self._broken is None:
                self._broken = error
            pending, self._pending = self._pending, {}
        for rid, p in pending.items():
            p.error = type(error)(str(error), rid)
            p.event.set()

    def _roundtrip(self, rid: int, query_text: str, texts: list[str]) -> list[float]:
        pending = _Pending(len(texts))
        with self._state_lock:
            if self._broken is not None:
                raise type(self._broken)(str(self._broken), rid)
            self._pending[rid] = pending
        line = json.dumps({"id": rid, "query": query_text, "texts": texts}, ensure_ascii=False) + "\n"
        try:
            with self._write_lock:
                self._wfile.write(line.encode("utf-8"))
                self._wfile.flush()
        except (OSError, ValueError) as exc:
            with self._state_lock:
                self._pending.pop(rid, None)
            raise ScorerError(f"{self.describe()}: write failed: {exc}", rid) from exc
        if not pending.event.wait(self.timeout):
            with self._state_lock:
                if self._pending.pop(rid, None) is not None:
                    self._abandoned.add(rid)
            if not pending.event.is_set():
                raise ScorerTimeout(f"no response within {self.timeout:g}s", rid)
        if pending.error is not None:
            raise pending.error
        return pending.scores

    def _score_batch(self, query_text, texts):
        size = self.max_batch or len(texts)
        out: list[float] = []
        for i in range(0, len(texts), size):
            out.extend(self._roundtrip(next(self._ids), query_text, list(texts[i:i + size])))
        return out

    def close(self):
        self._break(ScorerError(f"{self.describe()} was closed"))
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            if self._proc.stdout:
                self._proc.stdout.close()
        if self._sock is not None:
            # shut down first so a reader blocked in recv() returns and releases the file lock
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._reader.join(timeout=5)
            for f in (self._wfile, self._rfile):
                try:
                    f.close()
                except OSError:
                    pass
            self._sock.close()

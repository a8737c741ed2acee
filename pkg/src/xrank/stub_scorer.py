"""Reference server for the external-scorer protocol.

Scores every text by the number of its tokens that are query terms (the same
function as :class:`xrank.scoring.TermCountScorer`).  Fault switches make it
useful for exercising client error paths::

    python -m xrank.stub_scorer                      # stdio
    python -m xrank.stub_scorer --listen 127.0.0.1:0 # TCP, prints the bound port
    python -m xrank.stub_scorer --hang-after 3       # stop answering after 3 requests
    python -m xrank.stub_scorer --malformed-after 3  # emit garbage after 3 requests
    python -m xrank.stub_scorer --error-after 3      # answer with error objects after 3 requests
    python -m xrank.stub_scorer --reorder 4          # answer groups of up to 4 requests in reverse order
"""
from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
import time

from .scoring.base import TermCountScorer

_scorer = TermCountScorer()


class _Session:
    # held responses are released after this many seconds without a new request,
    # so a client with a single request in flight is never starved
    HOLD_SECONDS = 0.05

    def __init__(self, args, out):
        self.args = args
        self.out = out
        self.count = 0
        self.held: list[dict] = []
        self._lock = threading.Lock()
        self._timer = None

    def _emit(self, obj):
        with self._lock:
            self.out.write((json.dumps(obj) + "\n").encode("utf-8"))
            self.out.flush()

    def handle(self, line: bytes):
        req = json.loads(line)
        rid = req["id"]
        if rid == 0 and not req["texts"]:
            self._emit({"id": 0, "scores": []})
            return
        self.count += 1
        a = self.args
        if a.hang_after is not None and self.count > a.hang_after:
            return
        if a.malformed_after is not None and self.count > a.malformed_after:
            self.out.write(b"this is not json\n")
            self.out.flush()
            return
        if a.error_after is not None and self.count > a.error_after:
            self._emit({"id": rid, "error": "induced failure"})
            return
        if a.delay:
            time.sleep(a.delay)
        resp = {"id": rid, "scores": _scorer._score_batch(req["query"], req["texts"])}
        if a.reorder > 1:
            with self._lock:
                self.held.append(resp)
                full = len(self.held) >= a.reorder
                if self._timer is not None:
                    self._timer.cancel()
                    self._timer = None
                if not full:
                    self._timer = threading.Timer(self.HOLD_SECONDS, self.drain)
                    self._timer.daemon = True
                    self._timer.start()
            if full:
                self.drain()
            return
        self._emit(resp)

    def drain(self):
        with self._lock:
            held, self.held = self.held, []
        for r in reversed(held):
            self._emit(r)


def _serve_stream(args, rfile, wfile):
    session = _Session(args, wfile)
    for line in rfile:
        if line.strip():
            session.handle(line)
    session.drain()


def _serve_tcp(args):
    host, _, port = args.listen.rpartition(":")
    srv = socket.create_server((host, int(port)))
    print(srv.getsockname()[1], flush=True)

    def client(conn):
        with conn, conn.makefile("rb") as r, conn.makefile("wb") as w:
            try:
                _serve_stream(args, r, w)
            except (OSError, ValueError):
                pass

    while True:
        conn, _ = srv.accept()
        threading.Thread(target=client, args=(conn,), daemon=True).start()


def main(argv=None):
    p = argparse.ArgumentParser(prog="xrank-stub-scorer", description=__doc__.splitlines()[0])
    p.add_argument("--listen", help="serve TCP on host:port instead of stdio")
    p.add_argument("--hang-after", type=int)
    p.add_argument("--malformed-after", type=int)
    p.add_argument("--error-after", type=int)
    p.add_argument("--reorder", type=int, default=1)
    p.add_argument("--delay", type=float, default=0.0)
    args = p.parse_args(argv)
    if args.listen:
        _serve_tcp(args)
    else:
        _serve_stream(args, sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    main()

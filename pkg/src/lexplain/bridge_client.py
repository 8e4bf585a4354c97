"""Client for an external embedding server.

The server speaks newline-delimited JSON (UTF-8, one object per line):

    -> {"op": "handshake", "id": 0}
    <- {"id": 0, "dim": 768}
    -> {"op": "embed", "id": 1, "text": "..."}
    <- {"id": 1, "vector": [ ... dim floats ... ]}
    -> {"op": "logits", "id": 2, "text": "..."}
    <- {"id": 2, "logits": [l_rejected, l_accepted]}

A failing request is answered with {"id": n, "error": "..."}. The handshake
must come first; the declared dim is constant for the session. Responses may
arrive out of order; they are matched by id.

Endpoints: "cmd:<command>" spawns a subprocess and talks on its stdio,
"tcp:<host>:<port>" and "unix:<path>" connect to a listening server.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess

import numpy as np

from .errors import BridgeError


class _StdioTransport:
    def __init__(self, command: str):
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )

    def send(self, obj: dict) -> None:
        assert self.proc.stdin is not None
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()

    def recv_line(self) -> str:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if not line:
            raise BridgeError("bridge process closed its output")
        return line

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait(timeout=10)


class _SocketTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.reader = sock.makefile("r", encoding="utf-8")
        self.writer = sock.makefile("w", encoding="utf-8")

    def send(self, obj: dict) -> None:
        self.writer.write(json.dumps(obj) + "\n")
        self.writer.flush()

    def recv_line(self) -> str:
        line = self.reader.readline()
        if not line:
            raise BridgeError("bridge socket closed")
        return line

    def close(self) -> None:
        self.reader.close()
        self.writer.close()
        self.sock.close()


def _open_transport(endpoint: str):
    if endpoint.startswith("cmd:"):
        return _StdioTransport(endpoint[len("cmd:"):])
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[len("tcp:"):].rpartition(":")
        sock = socket.create_connection((host or "127.0.0.1", int(port)))
        return _SocketTransport(sock)
    if endpoint.startswith("unix:"):
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.connect(endpoint[len("unix:"):])
        return _SocketTransport(sock)
    raise BridgeError(
        f"unknown bridge endpoint {endpoint!r} (expected cmd:, tcp: or unix:)"
    )


class BridgeEmbedder:
    """Embedder backed by a bridge server; satisfies the Embedder protocol."""

    def __init__(self, endpoint: str):
        self._transport = _open_transport(endpoint)
        self._next_id = 0
        self._pending: dict[int, dict] = {}
        reply = self._call({"op": "handshake"})
        dim = reply.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise BridgeError(f"handshake returned invalid dim: {dim!r}")
        self.dim = dim

    def _call(self, payload: dict) -> dict:
        req_id = self._next_id
        self._next_id += 1
        self._transport.send({**payload, "id": req_id})
        while req_id not in self._pending:
            line = self._transport.recv_line()
            try:
                reply = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"bridge sent invalid JSON: {line!r}") from exc
            if not isinstance(reply, dict) or "id" not in reply:
                raise BridgeError(f"bridge reply missing id: {line!r}")
            self._pending[int(reply["id"])] = reply
        reply = self._pending.pop(req_id)
        if reply.get("error"):
            raise BridgeError(f"bridge error: {reply['error']}")
        return reply

    def embed_chunk(self, text: str) -> np.ndarray:
        reply = self._call({"op": "embed", "text": text})
        vector = reply.get("vector")
        if not isinstance(vector, list) or len(vector) != self.dim:
            raise BridgeError(
                f"embed reply has {len(vector) if isinstance(vector, list) else 'no'} "
                f"values, expected dim={self.dim}"
            )
        return np.asarray(vector, dtype=np.float64)

    def logits_chunk(self, text: str) -> np.ndarray:
        reply = self._call({"op": "logits", "text": text})
        logits = reply.get("logits")
        if not isinstance(logits, list) or len(logits) != 2:
            raise BridgeError("logits reply must carry two values")
        return np.asarray(logits, dtype=np.float64)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False

"""External-policy bridge: newline-delimited JSON over a byte stream.

Request:  {"type":"act","step":n,"heading":h,"channels":{name:[[...]], ...}}
Response: {"goal":[x,y]}  (local-window cell coordinates)
Session start: {"type":"reset"} -> {"ok":true}

Channels are the 8 observation planes max-pooled down to a configured
side length; every float is serialized with 6 significant digits.
"""

from __future__ import annotations

import json
import logging
import select
import shlex
import subprocess

import numpy as np

from ..errors import BridgeTimeout, MalformedResponse
from ..mapping import ObservationStack

log = logging.getLogger(__name__)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_fmt(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _pool_to(plane: np.ndarray, side: int) -> np.ndarray:
    m = plane.shape[0]
    if m == side:
        return plane
    k = -(-m // side)
    padded = np.zeros((k * side, k * side), dtype=plane.dtype)
    padded[:m, :m] = plane
    return padded.reshape(side, k, side, k).max(axis=(1, 3))


def serialize_observation(obs: ObservationStack, step: int, side: int) -> str:
    channels = {
        name: [[float(v) for v in row] for row in _pool_to(obs.channels[i], side)]
        for i, name in enumerate(ObservationStack.CHANNEL_NAMES)
    }
    payload = {
        "type": "act",
        "step": int(step),
        "heading": float(obs.heading),
        "channels": channels,
    }
    return _fmt(payload)


class JsonLineClient:
    """Request/response over file-like reader/writer objects."""

    def __init__(self, reader, writer, timeout: float = 5.0):
        self.reader = reader
        self.writer = writer
        self.timeout = timeout

    def _read_line(self) -> str:
        fileno = getattr(self.reader, "fileno", None)
        if fileno is not None:
            try:
                fd = fileno()
            except (OSError, ValueError):
                fd = None
            if fd is not None:
                ready, _, _ = select.select([fd], [], [], self.timeout)
                if not ready:
                    raise BridgeTimeout(f"no response within {self.timeout}s")
        line = self.reader.readline()
        if not line:
            raise MalformedResponse("stream closed by endpoint")
        return line if isinstance(line, str) else line.decode("utf-8")

    def _send(self, text: str) -> None:
        try:
            self.writer.write(text + "\n")
            self.writer.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise MalformedResponse(f"cannot write to endpoint: {exc}") from exc

    def reset_session(self) -> None:
        self._send('{"type":"reset"}')
        reply = self._parse(self._read_line())
        if reply.get("ok") is not True:
            raise MalformedResponse(f"bad reset reply: {reply}")

    def act(self, obs: ObservationStack, step: int, side: int, window: int) -> tuple[int, int]:
        self._send(serialize_observation(obs, step, side))
        reply = self._parse(self._read_line())
        goal = reply.get("goal")
        if (
            not isinstance(goal, list)
            or len(goal) != 2
            or not all(isinstance(v, (int, float)) for v in goal)
        ):
            raise MalformedResponse(f"bad goal payload: {reply}")
        x, y = int(goal[0]), int(goal[1])
        if not (0 <= x < window and 0 <= y < window):
            raise MalformedResponse(f"goal {goal} outside local window {window}")
        return x, y

    @staticmethod
    def _parse(line: str) -> dict:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"invalid JSON from endpoint: {line!r}") from exc
        if not isinstance(data, dict):
            raise MalformedResponse(f"expected a JSON object, got {line!r}")
        return data


class ExternalPolicyBridge:
    """Subprocess endpoint speaking the wire protocol, with a logged
    fallback to the nearest-frontier policy on protocol errors."""

    def __init__(self, command: str, timeout: float = 5.0, wire_side: int = 32):
        self.command = command
        self.wire_side = wire_side
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self.client = JsonLineClient(self.proc.stdout, self.proc.stdin, timeout)
        self.broken = False

    def reset_session(self) -> None:
        if self.broken:
            return
        try:
            self.client.reset_session()
        except (BridgeTimeout, MalformedResponse) as exc:
            log.warning("external policy reset failed (%s); using fallback", exc)
            self.broken = True

    def act(self, obs: ObservationStack, step: int) -> tuple[int, int] | None:
        """Local-window goal from the endpoint, or None when the fallback
        policy should take over."""
        if self.broken:
            return None
        try:
            return self.client.act(obs, step, self.wire_side, obs.window)
        except BridgeTimeout as exc:
            log.warning("external policy timeout (%s); falling back this step", exc)
            return None
        except MalformedResponse as exc:
            log.warning("external policy protocol error (%s); using fallback", exc)
            self.broken = True
            return None

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()

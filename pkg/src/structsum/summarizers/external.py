"""Drive an external summarizer process over a line-delimited JSON protocol.

The backend is a child process. After start-up it writes ``{"ready": true}``
on one line. Each request is then one line on its stdin::

    {"id": "...", "source": "space joined tokens", "max_len": 120}

and is answered by one line on its stdout::

    {"id": "...", "summary": "space joined tokens"}

Exactly one request is in flight per process; standard error is inherited
so backend logs reach the terminal.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
from typing import Sequence

from structsum.summarizers.base import SummarizeRequest, SummarizeResponse
from structsum.text import tokenize

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 120.0

_EOF = object()


class BackendError(RuntimeError):
    pass


class BackendCrashed(BackendError):
    pass


class BackendTimeout(BackendError, TimeoutError):
    pass


class ProtocolViolation(BackendError):
    pass


class ExternalBackend:
    """One backend process. Not safe for concurrent use; see :class:`BackendPool`."""

    def __init__(
        self,
        command: Sequence[str],
        timeout: float = DEFAULT_TIMEOUT,
        startup_timeout: float | None = None,
    ):
        self.command = list(command)
        self.timeout = timeout
        self.over_budget = 0
        self._busy = threading.Lock()
        self._lines: queue.Queue = queue.Queue()
        try:
            self.proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendCrashed(f"cannot start backend {self.command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._handshake(timeout if startup_timeout is None else startup_timeout)
        except BackendError:
            self.kill()
            raise

    def _pump(self) -> None:
        try:
            for line in self.proc.stdout:
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        self._lines.put(_EOF)

    def _next_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            self.kill()
            raise BackendTimeout(f"no response from backend within {timeout} s") from None
        if line is _EOF:
            code = self.proc.wait()
            raise BackendCrashed(f"backend exited with status {code}")
        return line

    def _decode(self, line: str) -> dict:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            self.kill()
            raise ProtocolViolation(f"malformed record: {line[:200]!r}") from None
        if not isinstance(rec, dict):
            self.kill()
            raise ProtocolViolation(f"record is not an object: {line[:200]!r}")
        return rec

    def _handshake(self, timeout: float) -> None:
        rec = self._decode(self._next_line(timeout))
        if rec.get("ready") is not True:
            raise ProtocolViolation(f"expected ready line, got {rec!r}")

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        if not self._busy.acquire(blocking=False):
            raise RuntimeError("backend handle used by two workers at once")
        try:
            return self._roundtrip(request)
        finally:
            self._busy.release()

    def _roundtrip(self, request: SummarizeRequest) -> SummarizeResponse:
        if not self.alive:
            raise BackendCrashed(f"backend exited with status {self.proc.returncode}")
        payload = {
            "id": request.id,
            "source": " ".join(request.source_tokens),
            "max_len": request.max_output_tokens,
        }
        try:
            self.proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            self.kill()
            raise BackendCrashed(f"cannot write to backend: {exc}") from exc

        rec = self._decode(self._next_line(self.timeout))
        if rec.get("id") != request.id:
            self.kill()
            raise ProtocolViolation(f"id mismatch: sent {request.id!r}, got {rec.get('id')!r}")
        summary = rec.get("summary")
        if not isinstance(summary, str):
            self.kill()
            raise ProtocolViolation(f"response {request.id!r} has no summary string")

        tokens = tokenize(summary)
        truncated = len(tokens) > request.max_output_tokens
        if truncated:
            self.over_budget += 1
            log.warning(
                "backend returned %d tokens for %s (budget %d); truncating",
                len(tokens),
                request.id,
                request.max_output_tokens,
            )
            tokens = tokens[: request.max_output_tokens]
        return SummarizeResponse(request.id, tuple(tokens), truncated)

    def kill(self) -> None:
        if self.alive:
            self.proc.kill()
        self.proc.wait()
        self._close_pipes()

    def close(self, grace: float = 5.0) -> None:
        """Ask the backend to exit by closing its stdin; kill if it lingers."""
        if self.alive:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=grace)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        self._close_pipes()

    def _close_pipes(self) -> None:
        for pipe in (self.proc.stdin, self.proc.stdout):
            try:
                pipe.close()
            except (OSError, ValueError):
                pass

    def __enter__(self) -> ExternalBackend:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_summarize(request: SummarizeRequest, backend: ExternalBackend) -> SummarizeResponse:
    return backend.summarize(request)


class BackendPool:
    """A fixed number of backend processes handed out one request at a time.

    Processes start lazily. A process that crashes, times out or breaks the
    protocol is discarded and replaced on its next use.
    """

    def __init__(
        self,
        command: Sequence[str],
        size: int = 1,
        timeout: float = DEFAULT_TIMEOUT,
        startup_timeout: float | None = None,
    ):
        if size < 1:
            raise ValueError("pool size must be at least 1")
        self.command = list(command)
        self.size = size
        self.timeout = timeout
        self.startup_timeout = startup_timeout
        self.over_budget = 0
        self.failures = 0
        self._stats_lock = threading.Lock()
        self._idle: queue.Queue = queue.Queue()
        for _ in range(size):
            self._idle.put(None)

    def _spawn(self) -> ExternalBackend:
        return ExternalBackend(self.command, self.timeout, self.startup_timeout)

    def start(self) -> None:
        """Start every process now so handshake failures surface early."""
        handles = [self._idle.get() for _ in range(self.size)]
        try:
            for i, handle in enumerate(handles):
                if handle is None or not handle.alive:
                    handles[i] = self._spawn()
        finally:
            for handle in handles:
                self._idle.put(handle)

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        handle = self._idle.get()
        try:
            if handle is not None and not handle.alive:
                handle.kill()
                handle = None
            if handle is None:
                handle = self._spawn()
            response = handle.summarize(request)
        except BackendError:
            with self._stats_lock:
                self.failures += 1
            if handle is not None:
                handle.kill()
            handle = None
            raise
        finally:
            self._idle.put(handle)
        if response.truncated:
            with self._stats_lock:
                self.over_budget += 1
        return response

    def close(self) -> None:
        for _ in range(self.size):
            handle = self._idle.get()
            if handle is not None:
                handle.close()
        for _ in range(self.size):
            self._idle.put(None)

    def __enter__(self) -> BackendPool:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ExternalSummarizer:
    """:class:`Summarizer` backed by a pool of external processes."""

    def __init__(self, command: Sequence[str], workers: int = 1, timeout: float = DEFAULT_TIMEOUT,
                 name: str | None = None):
        self.pool = BackendPool(command, size=workers, timeout=timeout)
        self.name = name or " ".join(command)

    def start(self) -> None:
        self.pool.start()

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        return self.pool.summarize(request)

    def close(self) -> None:
        self.pool.close()

"""Worker scheduling: a deterministic round-robin loop and a thread pool."""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol, Sequence


class Worker(Protocol):
    name: str
    done: bool

    def step(self) -> bool:
        """Do one unit of work; return False when there was nothing to do."""
        ...


class StopSignal:
    """Cooperative stop flag, checked by workers between turns."""

    def __init__(self) -> None:
        self._event = threading.Event()
        self.reason: str | None = None
        self._lock = threading.Lock()

    def set(self, reason: str = "stopped") -> bool:
        """Raise the flag; returns True for the caller that raised it first."""
        with self._lock:
            if self._event.is_set():
                return False
            self.reason = reason
            self._event.set()
            return True

    def is_set(self) -> bool:
        return self._event.is_set()


class Budget:
    """Shared episode counter."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self._lock = threading.Lock()

    def claim(self, stop: StopSignal | None = None) -> int | None:
        with self._lock:
            if (stop is not None and stop.is_set()) or self.used >= self.limit:
                return None
            self.used += 1
            return self.used

    @property
    def exhausted(self) -> bool:
        with self._lock:
            return self.used >= self.limit


def run_deterministic(workers: Sequence[Worker], trace: Sequence[int] | None = None, max_idle_rounds: int = 3) -> list[int]:
    """Run workers on the calling thread, one step at a time.

    Without a trace the order is round-robin.  With a trace the listed worker
    indices are stepped in that order (finished workers are skipped) and
    round-robin takes over once the trace runs out.  Returns the executed
    order, which reproduces the run when passed back as ``trace``.
    """
    executed: list[int] = []
    for i in trace or ():
        if not workers[i].done:
            workers[i].step()
            executed.append(i)
    idle_rounds = 0
    while not all(w.done for w in workers):
        progressed = False
        for i, w in enumerate(workers):
            if not w.done:
                progressed |= bool(w.step())
                executed.append(i)
        idle_rounds = 0 if progressed else idle_rounds + 1
        if idle_rounds >= max_idle_rounds:
            for w in workers:
                w.done = True
    return executed


def run_threaded(workers: Sequence[Worker], stop: StopSignal | None = None, idle_sleep: float = 0.01) -> None:
    """Run each worker on its own thread until it reports done.

    All threads wait at a barrier so no worker gets a head start.  A worker
    that raises sets ``stop`` so its peers wind down, and the first
    exception is re-raised once every thread has finished.
    """

    start = threading.Barrier(max(1, len(workers)))

    def loop(w: Worker) -> None:
        try:
            start.wait()
            while not w.done:
                if not w.step():
                    time.sleep(idle_sleep)
        except BaseException:
            if stop is not None:
                stop.set("error")
            raise

    with ThreadPoolExecutor(max_workers=max(1, len(workers)), thread_name_prefix="nexus") as pool:
        for fut in [pool.submit(loop, w) for w in workers]:
            fut.result()

"""In-process message passing standing in for MPI.

p rank endpoints share a fabric of tagged FIFO queues.  A strided send
gathers the described elements into a message buffer (the one counted wire
pass), the matching receive scatters it into the receiver's described
elements.  Sends are buffered and never block, so a rank may post all of
its sends before completing any receive; that discipline is what makes the
full exchange deadlock-free.

Two execution modes:

THREADED  one OS thread per rank, real interleaving.
SERIAL    one OS thread per rank but a token turnstile admits exactly one
          runnable rank at a time, round robin, yielding only at blocking
          waits.  Execution order is therefore reproducible bit for bit.

Buffer contents are identical in both modes because every (src, dst, slot)
is written exactly once per exchange; SERIAL additionally fixes the order
of the writes.
"""

from __future__ import annotations

import functools
import threading
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, LayoutError, ProtocolError, TransportError

__all__ = [
    "CommMode",
    "CommPattern",
    "LayoutDescriptor",
    "CopyCounter",
    "Endpoint",
    "make_communicators",
    "run_spmd",
]


class CommMode(Enum):
    THREADED = "threaded"
    SERIAL = "serial"


class CommPattern(Enum):
    PAIRWISE = "pairwise"
    COLLECTIVE = "collective"


@dataclass(frozen=True)
class LayoutDescriptor:
    """Strided region: `count` blocks of `block_length` contiguous complex
    elements, block starts `stride` apart, first block at `base_offset`.

    Mirrors a vector derived datatype: the transport reads and writes the
    described elements directly, so no separate pack buffer is needed on
    either end.
    """

    count: int
    block_length: int
    stride: int
    base_offset: int = 0

    def __post_init__(self):
        if self.count < 1 or self.block_length < 1:
            raise LayoutError(
                f"count and block_length must be positive, got {self.count}, {self.block_length}"
            )

    @property
    def nelems(self) -> int:
        return self.count * self.block_length

    @functools.cached_property
    def offsets(self) -> np.ndarray:
        """Element offsets in enumeration order, validated non-overlapping."""
        starts = self.base_offset + np.arange(self.count, dtype=np.intp) * self.stride
        off = (starts[:, None] + np.arange(self.block_length, dtype=np.intp)).reshape(-1)
        if np.unique(off).size != off.size:
            raise LayoutError(f"blocks of {self} overlap")
        off.flags.writeable = False
        return off

    def check_bounds(self, buffer_len: int) -> None:
        off = self.offsets
        if off.min() < 0 or off.max() >= buffer_len:
            raise LayoutError(f"{self} reaches outside buffer of {buffer_len} elements")


@dataclass
class CopyCounter:
    """Bytes moved by the three kinds of copy pass during an exchange."""

    bytes_packed: int = 0
    bytes_wire: int = 0
    bytes_unpacked: int = 0

    def reset(self) -> None:
        self.bytes_packed = 0
        self.bytes_wire = 0
        self.bytes_unpacked = 0

    def total(self) -> int:
        return self.bytes_packed + self.bytes_wire + self.bytes_unpacked

    def snapshot(self) -> tuple[int, int, int]:
        return (self.bytes_packed, self.bytes_wire, self.bytes_unpacked)


class _RoundRobin:
    """Token turnstile for SERIAL mode.

    Exactly one rank (the token holder) runs at a time.  A rank blocked on
    a fabric condition yields the token and regains it one full cycle
    later to re-check.  If every live rank is blocked and a whole cycle of
    yields passes without a single message being enqueued, nothing can
    ever unblock, and all ranks are failed with a deadlock error.
    """

    def __init__(self, p: int):
        self.p = p
        self.cond = threading.Condition()
        self.current = 0
        self.alive = set(range(p))
        self.blocked: set[int] = set()
        self.yield_streak = 0
        self.deadlocked = False
        self.aborted = False

    def wait_turn(self, rank: int) -> None:
        with self.cond:
            while self.current != rank and not (self.deadlocked or self.aborted):
                self.cond.wait()

    def _advance(self) -> None:
        if not self.alive:
            return
        nxt = (self.current + 1) % self.p
        while nxt not in self.alive:
            nxt = (nxt + 1) % self.p
        self.current = nxt
        self.cond.notify_all()

    def yield_blocked(self, rank: int) -> None:
        """Give up the token because a wait predicate is false."""
        with self.cond:
            self.blocked.add(rank)
            self.yield_streak += 1
            if self.blocked >= self.alive and self.yield_streak > len(self.alive):
                self.deadlocked = True
                self.cond.notify_all()
            else:
                self._advance()
            while self.current != rank and not (self.deadlocked or self.aborted):
                self.cond.wait()
            self.blocked.discard(rank)
            if self.deadlocked:
                raise TransportError(
                    "all ranks blocked with no messages in flight: exchange deadlock"
                )

    def note_progress(self) -> None:
        with self.cond:
            self.yield_streak = 0

    def retire(self, rank: int) -> None:
        with self.cond:
            self.alive.discard(rank)
            self.blocked.discard(rank)
            self.yield_streak = 0
            if self.current == rank:
                self._advance()
            self.cond.notify_all()

    def abort(self) -> None:
        with self.cond:
            self.aborted = True
            self.cond.notify_all()


class _Fabric:
    """Shared state connecting the p endpoints of one communicator group."""

    def __init__(self, p: int, mode: CommMode, timeout: float):
        self.p = p
        self.mode = mode
        self.timeout = timeout
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.queues: dict[tuple, deque] = {}
        self.collectives: dict[tuple, dict] = {}
        self.barrier_count = 0
        self.barrier_gen = 0
        self.aborted: BaseException | None = None
        self.bytes_enqueued = 0
        self.bytes_dequeued = 0
        self.scheduler = _RoundRobin(p) if mode is CommMode.SERIAL else None
        # test hook: called outside the lock around queue operations to
        # perturb thread interleaving
        self.delay_hook = None

    def abort(self, exc: BaseException) -> None:
        with self.lock:
            if self.aborted is None:
                self.aborted = exc
            self.cond.notify_all()
        if self.scheduler is not None:
            self.scheduler.abort()

    def _check_abort(self) -> None:
        if self.aborted is not None:
            raise TransportError(f"exchange aborted by a peer failure: {self.aborted!r}")

    def _wait(self, rank: int, predicate) -> None:
        """Block the calling rank until predicate() holds.  Lock held on
        entry and exit; released while yielding or sleeping."""
        if self.scheduler is None:
            deadline = time.monotonic() + self.timeout
            while not predicate():
                self._check_abort()
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TransportError(
                        f"rank {rank} timed out after {self.timeout}s waiting for a message"
                    )
                self.cond.wait(min(remaining, 0.5))
            self._check_abort()
        else:
            while True:
                self._check_abort()
                if predicate():
                    return
                self.lock.release()
                try:
                    self.scheduler.yield_blocked(rank)
                finally:
                    self.lock.acquire()

    def enqueue(self, key: tuple, payload: np.ndarray) -> None:
        if self.delay_hook is not None:
            self.delay_hook()
        with self.lock:
            self._check_abort()
            self.queues.setdefault(key, deque()).append(payload)
            self.bytes_enqueued += payload.nbytes
            self.cond.notify_all()
        if self.scheduler is not None:
            self.scheduler.note_progress()

    def dequeue(self, rank: int, key: tuple) -> np.ndarray:
        with self.lock:
            self._wait(rank, lambda: self.queues.get(key))
            payload = self.queues[key].popleft()
            self.bytes_dequeued += payload.nbytes
        if self.delay_hook is not None:
            self.delay_hook()
        return payload

    def collective(self, tag: tuple, rank: int, payloads: list) -> list:
        """Deposit this rank's per-destination payloads; return, once all p
        ranks have deposited, the payloads addressed to this rank."""
        with self.lock:
            self._check_abort()
            slot = self.collectives.setdefault(tag, {"deposits": {}, "taken": set()})
            slot["deposits"][rank] = payloads
            for q, payload in enumerate(payloads):
                if payload is not None:
                    self.bytes_enqueued += payload.nbytes
            self.cond.notify_all()
        if self.scheduler is not None:
            self.scheduler.note_progress()
        with self.lock:
            self._wait(rank, lambda: len(slot["deposits"]) == self.p)
            incoming = [slot["deposits"][src][rank] for src in range(self.p)]
            for payload in incoming:
                if payload is not None:
                    self.bytes_dequeued += payload.nbytes
            slot["taken"].add(rank)
            if len(slot["taken"]) == self.p:
                del self.collectives[tag]
        return incoming

    def barrier(self, rank: int) -> None:
        with self.lock:
            self._check_abort()
            gen = self.barrier_gen
            self.barrier_count += 1
            if self.barrier_count == self.p:
                self.barrier_count = 0
                self.barrier_gen += 1
                self.cond.notify_all()
            else:
                self._wait(rank, lambda: self.barrier_gen != gen)
        if self.scheduler is not None:
            self.scheduler.note_progress()


class Endpoint:
    """One rank's handle on the communicator group."""

    def __init__(self, fabric: _Fabric, rank: int):
        self._fabric = fabric
        self.rank = rank
        self.p = fabric.p
        self._phase = 0

    @property
    def mode(self) -> CommMode:
        return self._fabric.mode

    def _next_phase(self) -> tuple:
        # Per-exchange tag: collectives are entered by every rank in the
        # same program order, so the counters stay aligned across ranks and
        # consecutive exchanges (e.g. forward then inverse) cannot
        # cross-match.
        self._phase += 1
        return ("phase", self._phase)

    def _check_peer(self, peer: int) -> None:
        if not 0 <= peer < self.p:
            raise TransportError(f"no such peer rank {peer} (group size {self.p})")

    def send_strided(
        self,
        dest: int,
        buf: np.ndarray,
        desc: LayoutDescriptor,
        tag=0,
        counter: CopyCounter | None = None,
    ) -> None:
        """Gather the described elements and post them to dest.  Buffered:
        never blocks, and the buffer may be reused immediately."""
        self._check_peer(dest)
        desc.check_bounds(buf.shape[0])
        payload = buf[desc.offsets]
        if counter is not None:
            counter.bytes_wire += payload.nbytes
        self._fabric.enqueue(("p2p", self.rank, dest, tag), payload)

    def recv_strided(self, src: int, buf: np.ndarray, desc: LayoutDescriptor, tag=0) -> None:
        """Block for the matching message and scatter it into the described
        elements."""
        self._check_peer(src)
        desc.check_bounds(buf.shape[0])
        payload = self._fabric.dequeue(self.rank, ("p2p", src, self.rank, tag))
        if payload.size != desc.nelems:
            raise ProtocolError(
                f"rank {self.rank} expected {desc.nelems} elements from {src}, got {payload.size}"
            )
        buf[desc.offsets] = payload

    def all_to_all(
        self,
        send_buf: np.ndarray,
        send_descs: list[LayoutDescriptor | None],
        recv_buf: np.ndarray,
        recv_descs: list[LayoutDescriptor | None],
        pattern: CommPattern = CommPattern.PAIRWISE,
        counter: CopyCounter | None = None,
    ) -> None:
        """Exchange one described block with every peer.

        Element i of the sender's enumeration lands at element i of the
        receiver's enumeration.  The rank's own slot is copied locally
        (never through the fabric); passing None for both self descriptors
        skips it.  send_buf and recv_buf may be the same array: every
        outgoing payload is gathered before anything is scattered.
        """
        if len(send_descs) != self.p or len(recv_descs) != self.p:
            raise ProtocolError(
                f"need {self.p} send and recv descriptors, got "
                f"{len(send_descs)}, {len(recv_descs)}"
            )
        sd, rd = send_descs[self.rank], recv_descs[self.rank]
        if (sd is None) != (rd is None):
            raise ProtocolError("self send/recv descriptors must both be given or both None")
        tag = self._next_phase()
        if pattern is CommPattern.PAIRWISE:
            for q in range(self.p):
                if q != self.rank:
                    self.send_strided(q, send_buf, send_descs[q], tag, counter)
            self_payload = send_buf[sd.offsets] if sd is not None else None
            if rd is not None:
                recv_buf[rd.offsets] = self_payload
            for q in range(self.p):
                if q != self.rank:
                    self.recv_strided(q, recv_buf, recv_descs[q], tag)
        else:
            payloads: list[np.ndarray | None] = [None] * self.p
            for q in range(self.p):
                if q == self.rank:
                    continue
                desc = send_descs[q]
                desc.check_bounds(send_buf.shape[0])
                payloads[q] = send_buf[desc.offsets]
                if counter is not None:
                    counter.bytes_wire += payloads[q].nbytes
            self_payload = send_buf[sd.offsets] if sd is not None else None
            incoming = self._fabric.collective(tag, self.rank, payloads)
            if rd is not None:
                recv_buf[rd.offsets] = self_payload
            for q in range(self.p):
                if q == self.rank:
                    continue
                desc = recv_descs[q]
                if incoming[q].size != desc.nelems:
                    raise ProtocolError(
                        f"rank {self.rank} expected {desc.nelems} elements from {q}, "
                        f"got {incoming[q].size}"
                    )
                desc.check_bounds(recv_buf.shape[0])
                recv_buf[desc.offsets] = incoming[q]

    def barrier(self) -> None:
        self._fabric.barrier(self.rank)


def make_communicators(p: int, mode: CommMode = CommMode.SERIAL, timeout: float = 60.0) -> list[Endpoint]:
    """Create p connected endpoints sharing one message fabric."""
    if p < 1:
        raise ConfigurationError(f"communicator group needs p >= 1, got {p}")
    fabric = _Fabric(p, mode, timeout)
    return [Endpoint(fabric, rank) for rank in range(p)]


def run_spmd(p: int, fn, mode: CommMode = CommMode.SERIAL, timeout: float = 60.0) -> list:
    """Run fn(endpoint) on p ranks and return their results in rank order.

    Each rank runs on its own thread; SERIAL mode adds the round-robin
    turnstile.  The first rank failure aborts the fabric so peers blocked
    on the failed rank error out instead of hanging, and the original
    exception is re-raised here.
    """
    eps = make_communicators(p, mode, timeout)
    fabric = eps[0]._fabric
    results: list = [None] * p
    errors: list[BaseException | None] = [None] * p

    def body(rank: int) -> None:
        if fabric.scheduler is not None:
            fabric.scheduler.wait_turn(rank)
        try:
            results[rank] = fn(eps[rank])
        except BaseException as exc:
            errors[rank] = exc
            fabric.abort(exc)
        finally:
            if fabric.scheduler is not None:
                fabric.scheduler.retire(rank)

    threads = [threading.Thread(target=body, args=(r,), name=f"rank{r}") for r in range(p)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    primary = next((e for e in errors if e is not None and not isinstance(e, TransportError)), None)
    if primary is None:
        primary = next((e for e in errors if e is not None), None)
    if primary is not None:
        raise primary
    return results

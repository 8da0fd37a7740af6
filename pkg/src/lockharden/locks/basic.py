"""Test-and-set family, ticket, and array-based queueing locks.

Each lock comes in two variants.  The original variant executes the
classic unprotected release; the hardened variant carries just enough
ownership state to detect an unbalanced release and refuse it without
touching protocol cells.
"""

from __future__ import annotations

from ..core import MISUSE_DETECTED, RELEASED, Mutex, ThreadContext
from ..substrate import (
    op_await,
    op_cas,
    op_fetch_add,
    op_fetch_xor,
    op_load,
    op_pause,
    op_store,
    op_swap,
)

UNLOCKED = 0
LOCKED = 1

BACKOFF_INIT = 1
BACKOFF_CAP = 1024


class TasLock(Mutex):
    """Test-and-set lock; also covers test-and-test-and-set and its
    exponential-backoff refinement via ``mode``.

    Original: the lock word holds a boolean and release overwrites it
    unconditionally, so any thread can free a held lock.  Hardened: the
    same word holds the owner's pid and release refuses on mismatch.
    """

    name = "tas"
    mode = "tas"

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.word = space.new_cell("L")

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        backoff = BACKOFF_INIT
        mine = ctx.pid if self.hardened else LOCKED
        while True:
            if self.mode in ("tatas", "tatas_bo"):
                yield op_await(self.word, UNLOCKED, True, "tas.poll")
            if self.hardened:
                won = yield op_cas(self.word, UNLOCKED, mine, "tas.cas")
            else:
                won = (yield op_swap(self.word, mine, "tas.swap")) == UNLOCKED
            if won:
                return
            if self.mode == "tatas_bo":
                yield op_pause(backoff, "tas.backoff")
                backoff = min(backoff * 2, BACKOFF_CAP)

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            holder = yield op_load(self.word, "tas.check")
            if holder != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        yield op_store(self.word, UNLOCKED, "tas.release")
        return RELEASED


class TatasLock(TasLock):
    name = "tatas"
    mode = "tatas"


class TatasBoLock(TasLock):
    name = "tatas_bo"
    mode = "tatas_bo"


class TicketContext(ThreadContext):
    __slots__ = ("my_ticket",)

    def __init__(self, pid):
        super().__init__(pid)
        self.my_ticket = None


class TicketLock(Mutex):
    """FIFO ticket lock.

    The original release is the textbook non-atomic bump (load then store
    of now_serving), which is exactly what lets a stray release regress the
    counter.  The hardened variant adds an owner pid cell: verify, clear,
    then bump atomically.
    """

    name = "ticket"
    context_class = TicketContext

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.next_ticket = space.new_cell("nextTicket")
        self.now_serving = space.new_cell("nowServing")
        self.owner = space.new_cell("owner") if self.hardened else None

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        t = yield op_fetch_add(self.next_ticket, 1, "tkt.take")
        ctx.my_ticket = t
        yield op_await(self.now_serving, t, True, "tkt.wait")
        if self.hardened:
            yield op_store(self.owner, ctx.pid, "tkt.set_owner")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            holder = yield op_load(self.owner, "tkt.check")
            if holder != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        if self.hardened:
            yield op_store(self.owner, 0, "tkt.clear_owner")
            yield op_fetch_add(self.now_serving, 1, "tkt.bump")
        else:
            cur = yield op_load(self.now_serving, "tkt.load_serving")
            yield op_store(self.now_serving, cur + 1, "tkt.store_serving")
        return RELEASED


HAS_LOCK = 1
MUST_WAIT = 0


class AbqlContext(ThreadContext):
    __slots__ = ("my_place",)

    def __init__(self, pid):
        super().__init__(pid)
        self.my_place = None  # INVALID until an acquisition assigns a slot


class AbqlLock(Mutex):
    """Array-based queueing lock: one has-lock token circulating through a
    slot ring, positions handed out by a fetch-and-add counter.

    The hardened fix is context discipline only: my_place starts INVALID,
    is set during acquire, checked and reset to INVALID in release.  No
    extra shared state is touched, so the fix has no protocol cost.
    """

    name = "abql"
    context_class = AbqlContext

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        n = self.max_procs
        self.slots = [space.new_cell(f"slots[{i}]", HAS_LOCK if i == 0 else MUST_WAIT) for i in range(n)]
        self.queue_last = space.new_cell("queueLast")

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        place = yield op_fetch_add(self.queue_last, 1, "abql.take")
        ctx.my_place = place
        slot = self.slots[place % self.max_procs]
        yield op_await(slot, HAS_LOCK, True, "abql.wait")
        yield op_store(slot, MUST_WAIT, "abql.claim")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            if ctx.my_place is None:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        # An original-variant stray release reads whatever the context holds;
        # an uninitialized place behaves like the zero garbage value.  The
        # ring modulus keeps the index legal either way.
        place = ctx.my_place if ctx.my_place is not None else 0
        yield op_store(self.slots[(place + 1) % self.max_procs], HAS_LOCK, "abql.pass")
        if self.hardened:
            ctx.my_place = None
        return RELEASED


class GtLock(Mutex):
    """Graunke-Thakkar queue lock: per-thread one-bit slots plus a tail word
    packing (slot index, bit value to wait against).

    A releaser toggles its own slot; a waiter spins until its predecessor's
    slot differs from the captured bit.  The hardened variant adds a holder
    flag per thread, set after acquisition and required by release.
    """

    name = "gt"

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        n = self.max_procs
        self.slots = [space.new_cell(f"gtslot[{i}]") for i in range(n)]
        # Bootstrap: point at slot 0 with the negation of its value, so the
        # first arrival sees "predecessor already moved on".
        self.tail = space.new_cell("tail", self._encode(0, 1))
        if self.hardened:
            self.holder = [space.new_cell(f"holder[{i}]") for i in range(n)]

    @staticmethod
    def _encode(index, bit):
        return (index << 1) | bit

    @staticmethod
    def _decode(word):
        return word >> 1, word & 1

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        idx = ctx.pid - 1
        mine = yield op_load(self.slots[idx], "gt.read_own")
        prev = yield op_swap(self.tail, self._encode(idx, mine), "gt.publish")
        pidx, pbit = self._decode(prev)
        yield op_await(self.slots[pidx], pbit, False, "gt.wait")
        if self.hardened:
            yield op_store(self.holder[idx], 1, "gt.set_holder")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        idx = ctx.pid - 1
        if self._check_active(unchecked):
            holding = yield op_load(self.holder[idx], "gt.check")
            if not holding:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        yield op_fetch_xor(self.slots[idx], 1, "gt.toggle")
        if self.hardened:
            yield op_store(self.holder[idx], 0, "gt.clear_holder")
        return RELEASED

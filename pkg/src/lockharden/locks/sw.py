"""Software-only mutual exclusion: no read-modify-write instructions, just
sequentially consistent loads and stores.

These protocols are simulator-first.  The timed-delay steps some of them
rely on are rendered as scheduler windows: the delaying thread stays
blocked while any other thread sits inside the marked instruction range,
which is exactly the "delay outlasts the doorway" assumption.  Native
execution is possible through the same cell contract but is gated behind
an explicit flag by the callers that offer it.
"""

from __future__ import annotations

from ..core import (
    MISUSE_DETECTED,
    RELEASED,
    Mutex,
    ThreadContext,
    ThreadLimitExceeded,
)
from ..substrate import op_await, op_event, op_load, op_pause, op_store, op_window


class PetersonLock(Mutex):
    """Two-thread flag/turn lock.  A stray release just retracts the
    caller's own intent flag, which cannot admit or stall anyone, so there
    is nothing to harden and only the original variant exists.
    """

    name = "peterson"
    variants = ("original",)

    def __init__(self, space, variant, **kw):
        if variant != "original":
            raise ValueError("peterson needs no hardened variant")
        super().__init__(space, variant, **kw)
        if self.max_procs > 2:
            raise ThreadLimitExceeded("peterson lock supports exactly 2 threads")
        self.flag = [space.new_cell("flag[0]"), space.new_cell("flag[1]")]
        self.turn = space.new_cell("turn")

    def _slot(self, ctx):
        if ctx.pid not in (1, 2):
            raise ThreadLimitExceeded("peterson lock supports exactly 2 threads")
        return ctx.pid - 1

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        me = self._slot(ctx)
        other = 1 - me
        yield op_store(self.flag[me], 1, "pet.announce")
        yield op_store(self.turn, other, "pet.defer")
        while True:
            f = yield op_load(self.flag[other], "pet.poll_flag")
            if f == 0:
                return
            t = yield op_load(self.turn, "pet.poll_turn")
            if t != other:
                return

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        me = self._slot(ctx)
        yield op_store(self.flag[me], 0, "pet.retract")
        return RELEASED


class FisherLock(Mutex):
    """N-thread lock built on one word and a timed delay.

    Entry: wait for the word to clear, claim it, delay, then verify the
    claim stuck.  The fixed release refuses unless the word still carries
    the caller's id.
    """

    name = "fisher"

    def __init__(self, space, variant, delay=2, **kw):
        super().__init__(space, variant, **kw)
        self.delay = max(1, delay)
        self.word = space.new_cell("x")

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        while True:
            yield op_await(self.word, 0, True, "fsh.gate")
            yield op_store(self.word, ctx.pid, "fsh.claim")
            # Delay long enough for every thread past the gate to finish its
            # claim: block while any other thread's pending step is a claim.
            yield op_window({"fsh.claim"}, "fsh.delay")
            for i in range(self.delay - 1):
                yield op_pause(1, f"fsh.delay[{i}]")
            v = yield op_load(self.word, "fsh.verify")
            if v == ctx.pid:
                return
            yield op_event("restart", label="fsh.restart")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            v = yield op_load(self.word, "fsh.check")
            if v != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        yield op_store(self.word, 0, "fsh.release")
        return RELEASED


class LamportOneLock(Mutex):
    """Two-word fast mutual exclusion with a timed delay on the slow path.

    Entry claims x, gates on y, claims y, and re-verifies x; losing the x
    race costs a delay and a y re-check, and any failed check bounces the
    thread back to the start.  The fixed release clears y only when y still
    names the caller.

    The algorithm's real-time premise (processes traverse the three-step
    doorway at commensurate speeds, and the delay outlasts it) is rendered
    as two scheduler windows: doorway entry waits until no one else is
    mid-doorway, and the slow-path delay waits the doorway empty again.
    Without the pacing window, pure interleaving admits a two-thread
    doorway inversion that breaks mutual exclusion with no misuse at all.
    """

    name = "lamport1"

    DOORWAY = ("lam1.claim_x", "lam1.gate_y", "lam1.claim_y")

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.x = space.new_cell("x")
        self.y = space.new_cell("y")

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        me = ctx.pid
        while True:
            yield op_window(set(self.DOORWAY), "lam1.pace")
            yield op_store(self.x, me, "lam1.claim_x")
            vy = yield op_load(self.y, "lam1.gate_y")
            if vy != 0:
                yield op_event("restart", label="lam1.restart")
                continue
            yield op_store(self.y, me, "lam1.claim_y")
            vx = yield op_load(self.x, "lam1.verify_x")
            if vx != me:
                # Lost the x race: wait until every thread that passed the
                # gate has finished its y write, then let y decide whether
                # the slot is ours.  Gate bouncers re-dirty only x, so they
                # are not waited for (that would deadlock against their
                # retry loop).
                yield op_window({"lam1.claim_y"}, "lam1.delay")
                vy = yield op_load(self.y, "lam1.verify_y")
                if vy != me:
                    yield op_event("restart", label="lam1.restart")
                    continue
            return

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            vy = yield op_load(self.y, "lam1.check")
            if vy != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        yield op_store(self.y, 0, "lam1.clear_y")
        return RELEASED


class LamportTwoLock(Mutex):
    """Full fast mutual exclusion: per-thread announce flags replace the
    timed delay of the simpler algorithm.  The fixed release leaves both y
    and the caller's flag untouched when y no longer names the caller.
    """

    name = "lamport2"

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.x = space.new_cell("x")
        self.y = space.new_cell("y")
        self.b = [space.new_cell(f"b[{i}]") for i in range(self.max_procs)]

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        me = ctx.pid
        while True:
            yield op_store(self.b[me - 1], 1, "lam2.announce")
            yield op_store(self.x, me, "lam2.claim_x")
            vy = yield op_load(self.y, "lam2.gate_y")
            if vy != 0:
                yield op_store(self.b[me - 1], 0, "lam2.retract")
                yield op_await(self.y, 0, True, "lam2.wait_y")
                yield op_event("restart", label="lam2.restart")
                continue
            yield op_store(self.y, me, "lam2.claim_y")
            vx = yield op_load(self.x, "lam2.verify_x")
            if vx != me:
                yield op_store(self.b[me - 1], 0, "lam2.retract2")
                for j in range(self.max_procs):
                    yield op_await(self.b[j], 0, True, f"lam2.wait_b[{j}]")
                vy = yield op_load(self.y, "lam2.verify_y")
                if vy != me:
                    yield op_await(self.y, 0, True, "lam2.wait_y2")
                    yield op_event("restart", label="lam2.restart")
                    continue
            return

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        me = ctx.pid
        misused = False
        if self._check_active(unchecked):
            vy = yield op_load(self.y, "lam2.check")
            misused = vy != me
        if not misused:
            yield op_store(self.y, 0, "lam2.clear_y")
        # The caller's own announce flag is retracted even when the y guard
        # fires: a fast-path winner can hold the lock while y already names
        # a later gate-passer, and skipping the retraction would wedge that
        # waiter forever.  For a true unbalanced release the flag is already
        # clear, so the write changes nothing.
        yield op_store(self.b[me - 1], 0, "lam2.clear_b")
        if misused:
            yield from self._flag_misuse()
            return MISUSE_DETECTED
        return RELEASED


class BakeryLock(Mutex):
    """Lamport's bakery: FIFO by (ticket number, id).  A stray release
    rewrites the caller's already-zero number, which no one can observe, so
    only the original variant exists.
    """

    name = "bakery"
    variants = ("original",)

    def __init__(self, space, variant, **kw):
        if variant != "original":
            raise ValueError("bakery needs no hardened variant")
        super().__init__(space, variant, **kw)
        n = self.max_procs
        self.choosing = [space.new_cell(f"choosing[{i}]") for i in range(n)]
        self.number = [space.new_cell(f"number[{i}]") for i in range(n)]

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        i = ctx.pid - 1
        yield op_store(self.choosing[i], 1, "bak.choosing_on")
        top = 0
        for j in range(self.max_procs):
            v = yield op_load(self.number[j], f"bak.scan[{j}]")
            top = max(top, v)
        mine = top + 1
        yield op_store(self.number[i], mine, "bak.take_number")
        yield op_store(self.choosing[i], 0, "bak.choosing_off")
        for j in range(self.max_procs):
            if j == i:
                continue
            yield op_await(self.choosing[j], 0, True, f"bak.wait_choosing[{j}]")
            while True:
                nj = yield op_load(self.number[j], f"bak.order[{j}]")
                if nj == 0 or (nj, j) > (mine, i):
                    break

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        yield op_store(self.number[ctx.pid - 1], 0, "bak.clear_number")
        return RELEASED

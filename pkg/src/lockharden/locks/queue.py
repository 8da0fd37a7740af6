"""Queue-based locks: MCS, CLH, MCS-K42 (original only), Hemlock.

Qnodes live in a per-mutex arena and travel through cells as small integer
handles (0 = NULL, 1 = the Hemlock ACQ sentinel), so link words fit the
64-bit cell contract on both backends and traces stay portable.
"""

from __future__ import annotations

from ..core import MISUSE_DETECTED, RELEASED, Mutex, ThreadContext
from ..substrate import (
    ACQ,
    NULL,
    SubstrateError,
    op_await,
    op_cas,
    op_load,
    op_retire,
    op_store,
    op_swap,
)


class QnodeContext(ThreadContext):
    __slots__ = ("node",)

    def __init__(self, pid):
        super().__init__(pid)
        self.node = NULL


class _Qnode:
    __slots__ = ("handle", "cells")

    def __init__(self, handle, **cells):
        self.handle = handle
        self.cells = cells

    def __getattr__(self, name):
        try:
            return self.cells[name]
        except KeyError:  # pragma: no cover - protocol bug
            raise AttributeError(name) from None


class _ArenaLock(Mutex):
    """Base for locks whose state includes arena-allocated qnodes."""

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self._nodes = {}
        self._next_handle = 2  # 0 and 1 are reserved sentinel values

    def _new_node(self, tag, **inits):
        h = self._next_handle
        self._next_handle += 1
        cells = {
            field: self.space.new_cell(f"{tag}.{field}", init)
            for field, init in inits.items()
        }
        self._nodes[h] = _Qnode(h, **cells)
        return h

    def _node(self, handle):
        node = self._nodes.get(handle)
        if node is None:
            raise SubstrateError(f"dereference of invalid qnode handle {handle}")
        return node


class McsLock(_ArenaLock):
    """MCS list-based queue lock.

    The hardened variant keeps the per-node locked flag truthful for the
    whole holding period: set after acquisition, required and cleared by
    release, and the node's next link is scrubbed after handoff so a stale
    context cannot admit a waiter later.
    """

    name = "mcs"
    context_class = QnodeContext

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.tail = space.new_cell("tail", NULL)

    def make_context(self, pid):
        ctx = QnodeContext(pid)
        ctx.node = self._new_node(f"q{pid}", locked=0, next=NULL)
        return ctx

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        n = self._node(ctx.node)
        yield op_store(n.next, NULL, "mcs.init_next")
        prev = yield op_swap(self.tail, ctx.node, "mcs.enqueue")
        if prev != NULL:
            yield op_store(n.locked, 1, "mcs.prepare_wait")
            yield op_store(self._node(prev).next, ctx.node, "mcs.link")
            yield op_await(n.locked, 0, True, "mcs.wait")
        if self.hardened:
            yield op_store(n.locked, 1, "mcs.mark_owned")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        n = self._node(ctx.node)
        if self._check_active(unchecked):
            owned = yield op_load(n.locked, "mcs.check")
            if not owned:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        if self.hardened:
            yield op_store(n.locked, 0, "mcs.clear_owned")
        nxt = yield op_load(n.next, "mcs.read_next")
        if nxt == NULL:
            if (yield op_cas(self.tail, ctx.node, NULL, "mcs.detach")):
                return RELEASED
            nxt = yield op_await(n.next, NULL, False, "mcs.wait_successor")
        yield op_store(self._node(nxt).locked, 0, "mcs.grant")
        if self.hardened:
            yield op_store(n.next, NULL, "mcs.scrub_next")
        return RELEASED


class ClhLock(_ArenaLock):
    """CLH implicit-queue lock; each node stores the flag its successor
    spins on plus the link to its predecessor, and node ownership migrates
    backward one position per release.

    Hardened: a node that is not currently mid-acquisition always has a
    NULL prev link (constructor and every successful release guarantee it),
    so release can refuse any context whose node was not just acquired.
    """

    name = "clh"
    context_class = QnodeContext

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        dummy = self._new_node("qdummy", smw=0, prev=NULL)
        self.tail = space.new_cell("tail", dummy)

    def make_context(self, pid):
        ctx = QnodeContext(pid)
        ctx.node = self._new_node(f"q{pid}", smw=0, prev=NULL)
        return ctx

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        n = self._node(ctx.node)
        yield op_store(n.smw, 1, "clh.announce")
        prev = yield op_swap(self.tail, ctx.node, "clh.enqueue")
        yield op_store(n.prev, prev, "clh.set_prev")
        yield op_await(self._node(prev).smw, 0, True, "clh.wait")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        n = self._node(ctx.node)
        prev = yield op_load(n.prev, "clh.read_prev")
        if self._check_active(unchecked) and prev == NULL:
            yield from self._flag_misuse()
            return MISUSE_DETECTED
        yield op_store(n.smw, 0, "clh.pass")
        if self.hardened:
            yield op_store(n.prev, NULL, "clh.scrub_prev")
        ctx.node = prev  # take ownership of the predecessor node
        return RELEASED


class K42Context(ThreadContext):
    __slots__ = ()


class McsK42Lock(_ArenaLock):
    """MCS variant that keeps queue state inside the lock record so callers
    carry no qnode between acquire and release; waiters park on
    stack-lifetime nodes that are abandoned once they reach the front.

    Only the original protocol is provided; it exists to demonstrate the
    misuse pathologies, including writes to already-reclaimed stack nodes.
    """

    name = "mcs_k42"
    context_class = K42Context
    variants = ("original",)

    def __init__(self, space, variant, **kw):
        if variant != "original":
            raise ValueError("mcs_k42 is available as original only")
        super().__init__(space, variant, **kw)
        self.head = self._new_node("lockrec", next=NULL)  # embedded queue head
        self.tail = space.new_cell("tail", NULL)
        self._stack_seq = 0

    def _stack_node(self, ctx):
        self._stack_seq += 1
        h = self._new_node(f"stk{ctx.pid}.{self._stack_seq}", locked=0, next=NULL)
        return h, self._node(h)

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        head = self._node(self.head)
        h = None
        while True:
            t = yield op_load(self.tail, "k42.read_tail")
            if t == NULL:
                if (yield op_cas(self.tail, NULL, self.head, "k42.grab")):
                    return
                continue
            if h is None:
                h, n = self._stack_node(ctx)
            yield op_store(n.locked, 1, "k42.prepare_wait")
            yield op_store(n.next, NULL, "k42.init_next")
            if not (yield op_cas(self.tail, t, h, "k42.enqueue")):
                continue
            yield op_store(self._node(t).next, h, "k42.link")
            yield op_await(n.locked, 0, True, "k42.wait")
            # Front of the queue: migrate our queue state into the lock
            # record, then abandon the stack node.
            nxt = yield op_load(n.next, "k42.take_next")
            if nxt == NULL:
                yield op_store(head.next, NULL, "k42.clear_head")
                if not (yield op_cas(self.tail, h, self.head, "k42.swing_tail")):
                    nxt = yield op_await(n.next, NULL, False, "k42.wait_link")
                    yield op_store(head.next, nxt, "k42.adopt_succ")
            else:
                yield op_store(head.next, nxt, "k42.adopt_succ")
            yield op_retire((n.locked, n.next), "k42.abandon")
            return

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        head = self._node(self.head)
        nxt = yield op_load(head.next, "k42.read_head")
        if nxt == NULL:
            if (yield op_cas(self.tail, self.head, NULL, "k42.detach")):
                return RELEASED
            nxt = yield op_await(head.next, NULL, False, "k42.wait_successor")
        yield op_store(self._node(nxt).locked, 0, "k42.grant")
        return RELEASED


HEM_TOKEN = 2  # grant value handing the lock over (distinct from NULL/ACQ)


class HemlockContext(ThreadContext):
    __slots__ = ()


class HemlockLock(Mutex):
    """Context-free queue lock: the tail stores waiter pids and handoff goes
    through the releacer's per-thread grant word, which the successor
    consumes back to NULL.

    Hardened: the grant word doubles as the ownership marker (ACQ while
    holding), so a release finding NULL refuses immediately instead of
    parking forever on a handoff nobody will consume.
    """

    name = "hemlock"
    context_class = HemlockContext

    def __init__(self, space, variant, **kw):
        super().__init__(space, variant, **kw)
        self.tail = space.new_cell("tail", NULL)
        self.grants = [space.new_cell(f"grant[{i}]") for i in range(self.max_procs + 1)]

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        pred = yield op_swap(self.tail, ctx.pid, "hem.enqueue")
        if pred != NULL:
            yield op_await(self.grants[pred], HEM_TOKEN, True, "hem.wait")
            yield op_store(self.grants[pred], NULL, "hem.consume")
        if self.hardened:
            yield op_store(self.grants[ctx.pid], ACQ, "hem.mark_owned")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        g = self.grants[ctx.pid]
        if self._check_active(unchecked):
            cur = yield op_load(g, "hem.check")
            if cur == NULL:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        if (yield op_cas(self.tail, ctx.pid, NULL, "hem.detach")):
            if self.hardened:
                yield op_store(g, NULL, "hem.clear_owned")
            return RELEASED
        yield op_store(g, HEM_TOKEN, "hem.handoff")
        yield op_await(g, NULL, True, "hem.wait_consume")
        return RELEASED

"""NUMA-style hierarchical locks: two-level HMCS, HBO, and a cohort lock
built from two ticket locks.

Threads are partitioned into groups (round-robin by pid unless an explicit
mapping is given); each group owns the leaf/local half of the hierarchy
and a passing threshold bounds how long a group may keep the top lock.
"""

from __future__ import annotations

from ..core import MISUSE_DETECTED, RELEASED, Mutex, ThreadContext
from ..substrate import (
    NULL,
    U64,
    op_await,
    op_cas,
    op_fetch_add,
    op_load,
    op_pause,
    op_store,
    op_swap,
)
from .queue import _ArenaLock

WAITV = U64          # leaf status: spinning
PASS_ROOT = U64 - 1  # leaf status: head of local queue, must take the root
DEFAULT_THRESHOLD = 64
DEFAULT_GROUPS = 2

HBO_BACKOFF_LOCAL = 1
HBO_BACKOFF_REMOTE = 4


def group_of(pid, groups, group_map=None):
    if group_map is not None:
        return group_map[pid]
    return (pid - 1) % groups


class HmcsContext(ThreadContext):
    __slots__ = ("node", "group")

    def __init__(self, pid):
        super().__init__(pid)
        self.node = NULL
        self.group = 0


class HmcsLock(_ArenaLock):
    """Two-level MCS tree: per-group leaf queues feeding one root queue.

    A leaf-queue head acquires the root through its leaf's embedded root
    node; local handoffs pass root ownership implicitly and carry a streak
    count so a group cannot monopolize beyond the threshold.  The leaf
    node's status word is the hardening hook: zero exactly when its owner
    holds nothing, so release refuses on zero without touching any level.
    """

    name = "hmcs"
    context_class = HmcsContext

    def __init__(self, space, variant, groups=DEFAULT_GROUPS, threshold=DEFAULT_THRESHOLD, group_map=None, **kw):
        super().__init__(space, variant, **kw)
        self.groups = groups
        self.threshold = threshold
        self.group_map = group_map
        self.root_tail = space.new_cell("root.tail", NULL)
        self.leaf_tails = [space.new_cell(f"leaf{g}.tail", NULL) for g in range(groups)]
        self.root_nodes = [self._new_node(f"leaf{g}.rnode", locked=0, next=NULL) for g in range(groups)]

    def make_context(self, pid):
        ctx = HmcsContext(pid)
        ctx.group = group_of(pid, self.groups, self.group_map)
        ctx.node = self._new_node(f"q{pid}", locked=0, next=NULL)
        return ctx

    # -- root level: plain MCS over the per-leaf root nodes ------------------

    def _root_acquire(self, rnode_h):
        rn = self._node(rnode_h)
        yield op_store(rn.next, NULL, "hmcs.root.init_next")
        prev = yield op_swap(self.root_tail, rnode_h, "hmcs.root.enqueue")
        if prev != NULL:
            yield op_store(rn.locked, 1, "hmcs.root.prepare_wait")
            yield op_store(self._node(prev).next, rnode_h, "hmcs.root.link")
            yield op_await(rn.locked, 0, True, "hmcs.root.wait")

    def _root_release(self, rnode_h):
        rn = self._node(rnode_h)
        nxt = yield op_load(rn.next, "hmcs.root.read_next")
        if nxt == NULL:
            if (yield op_cas(self.root_tail, rnode_h, NULL, "hmcs.root.detach")):
                return
            nxt = yield op_await(rn.next, NULL, False, "hmcs.root.wait_successor")
        yield op_store(self._node(nxt).locked, 0, "hmcs.root.grant")

    # -- public protocol ------------------------------------------------------

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        n = self._node(ctx.node)
        leaf_tail = self.leaf_tails[ctx.group]
        yield op_store(n.next, NULL, "hmcs.init_next")
        prev = yield op_swap(leaf_tail, ctx.node, "hmcs.enqueue")
        if prev != NULL:
            yield op_store(n.locked, WAITV, "hmcs.prepare_wait")
            yield op_store(self._node(prev).next, ctx.node, "hmcs.link")
            got = yield op_await(n.locked, WAITV, False, "hmcs.wait")
            if got != PASS_ROOT:
                return  # root inherited; status already holds the streak count
        yield from self._root_acquire(self.root_nodes[ctx.group])
        yield op_store(n.locked, 1, "hmcs.start_streak")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        n = self._node(ctx.node)
        leaf_tail = self.leaf_tails[ctx.group]
        count = yield op_load(n.locked, "hmcs.read_streak")
        if self._check_active(unchecked) and count == 0:
            yield from self._flag_misuse()
            return MISUSE_DETECTED
        if count < self.threshold:
            nxt = yield op_load(n.next, "hmcs.read_next")
            if nxt != NULL:
                yield op_store(self._node(nxt).locked, count + 1, "hmcs.pass_local")
                yield from self._scrub(n)
                return RELEASED
        yield from self._root_release(self.root_nodes[ctx.group])
        nxt = yield op_load(n.next, "hmcs.read_next2")
        if nxt == NULL:
            if (yield op_cas(leaf_tail, ctx.node, NULL, "hmcs.detach")):
                yield from self._scrub(n)
                return RELEASED
            nxt = yield op_await(n.next, NULL, False, "hmcs.wait_successor")
        yield op_store(self._node(nxt).locked, PASS_ROOT, "hmcs.pass_root_duty")
        yield from self._scrub(n)
        return RELEASED

    def _scrub(self, n):
        if self.hardened:
            yield op_store(n.locked, 0, "hmcs.clear_status")
            yield op_store(n.next, NULL, "hmcs.scrub_next")


class HboContext(ThreadContext):
    __slots__ = ("group",)

    def __init__(self, pid):
        super().__init__(pid)
        self.group = 0


class HboLock(Mutex):
    """Backoff lock whose word advertises the holder's domain so waiters in
    the same domain retry sooner than remote ones.

    Original word: (domain << 1) | 1, a nonzero held marker carrying only
    the domain.  Hardened word: (pid << 8) | domain, letting release verify
    the caller and acquire still read the domain for backoff tuning.
    """

    name = "hbo"
    context_class = HboContext

    def __init__(self, space, variant, groups=DEFAULT_GROUPS, group_map=None,
                 backoff_local=HBO_BACKOFF_LOCAL, backoff_remote=HBO_BACKOFF_REMOTE, **kw):
        super().__init__(space, variant, **kw)
        self.groups = groups
        self.group_map = group_map
        self.backoff_local = backoff_local
        self.backoff_remote = backoff_remote
        self.word = space.new_cell("L")

    def make_context(self, pid):
        ctx = HboContext(pid)
        ctx.group = group_of(pid, self.groups, self.group_map)
        return ctx

    def _encode(self, ctx):
        if self.hardened:
            return (ctx.pid << 8) | ctx.group
        return (ctx.group << 1) | 1

    def _domain(self, word):
        return (word & 0xFF) if self.hardened else (word >> 1)

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        mine = self._encode(ctx)
        while True:
            if (yield op_cas(self.word, 0, mine, "hbo.cas")):
                return
            seen = yield op_load(self.word, "hbo.observe")
            if seen == 0:
                continue
            units = self.backoff_local if self._domain(seen) == ctx.group else self.backoff_remote
            yield op_pause(units, "hbo.backoff")

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        if self._check_active(unchecked):
            word = yield op_load(self.word, "hbo.check")
            if (word >> 8) != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        yield op_store(self.word, 0, "hbo.release")
        return RELEASED


class CohortContext(ThreadContext):
    __slots__ = ("group", "lticket", "streak")

    def __init__(self, pid):
        super().__init__(pid)
        self.group = 0
        self.lticket = None
        self.streak = None


class CohortTktTktLock(Mutex):
    """Cohort lock from two ticket layers: per-group local tickets plus one
    global ticket held across intra-group handoffs.

    top_granted[g] > 0 advertises that the global lock rides along to the
    next local holder and carries the handoff streak, which is capped by
    the passing bound.  Hardening applies to the local ticket only (owner
    pid verified and cleared before any counter moves); the global layer
    stays an ordinary ticket since another thread may legitimately release
    it after inheritance.
    """

    name = "ctkt"
    context_class = CohortContext

    def __init__(self, space, variant, groups=DEFAULT_GROUPS, threshold=DEFAULT_THRESHOLD, group_map=None, **kw):
        super().__init__(space, variant, **kw)
        self.groups = groups
        self.threshold = threshold
        self.group_map = group_map
        self.g_next = space.new_cell("global.nextTicket")
        self.g_now = space.new_cell("global.nowServing")
        self.l_next = [space.new_cell(f"local{g}.nextTicket") for g in range(groups)]
        self.l_now = [space.new_cell(f"local{g}.nowServing") for g in range(groups)]
        self.top_granted = [space.new_cell(f"local{g}.topGranted") for g in range(groups)]
        if self.hardened:
            self.l_owner = [space.new_cell(f"local{g}.owner") for g in range(groups)]

    def make_context(self, pid):
        ctx = CohortContext(pid)
        ctx.group = group_of(pid, self.groups, self.group_map)
        return ctx

    def acquire(self, ctx):
        if ctx.in_flight:
            raise RuntimeError("context already bound to an acquisition")
        ctx.in_flight = True
        g = ctx.group
        t = yield op_fetch_add(self.l_next[g], 1, "ctkt.local_take")
        ctx.lticket = t
        yield op_await(self.l_now[g], t, True, "ctkt.local_wait")
        if self.hardened:
            yield op_store(self.l_owner[g], ctx.pid, "ctkt.set_owner")
        passed = yield op_load(self.top_granted[g], "ctkt.read_pass")
        if passed == 0:
            gt = yield op_fetch_add(self.g_next, 1, "ctkt.global_take")
            yield op_await(self.g_now, gt, True, "ctkt.global_wait")
            ctx.streak = 1
        else:
            ctx.streak = passed

    def release(self, ctx, unchecked=False):
        ctx.in_flight = False
        g = ctx.group
        if self._check_active(unchecked):
            own = yield op_load(self.l_owner[g], "ctkt.check")
            if own != ctx.pid:
                yield from self._flag_misuse()
                return MISUSE_DETECTED
        if self.hardened:
            yield op_store(self.l_owner[g], 0, "ctkt.clear_owner")
        nt = yield op_load(self.l_next[g], "ctkt.scan_waiters")
        lticket = ctx.lticket if ctx.lticket is not None else 0
        streak = ctx.streak if ctx.streak is not None else 0
        if nt > lticket + 1 and streak < self.threshold:
            # Local waiters exist and the passing bound allows another
            # handoff: keep the global lock inside the group.
            yield op_store(self.top_granted[g], streak + 1, "ctkt.pass_global")
        else:
            yield op_store(self.top_granted[g], 0, "ctkt.end_pass")
            cur = yield op_load(self.g_now, "ctkt.global_load")
            yield op_store(self.g_now, cur + 1, "ctkt.global_bump")
        if self.hardened:
            yield op_fetch_add(self.l_now[g], 1, "ctkt.local_bump")
        else:
            cur = yield op_load(self.l_now[g], "ctkt.local_load")
            yield op_store(self.l_now[g], cur + 1, "ctkt.local_store")
        return RELEASED

"""Neutral-preference reader-writer lock over a cohort lock and a split
ingress/egress read indicator.

Readers and writers both funnel through the cohort lock; readers announce
themselves on the indicator and drop the cohort lock before their critical
section, writers hold the cohort lock and drain the indicator first.  The
write side inherits the cohort lock's misuse detection.  The read side is
deliberately left unprotected: the indicator is an anonymous counter pair,
so an unbalanced depart is indistinguishable from a legitimate one and
permanently skews the counters.
"""

from __future__ import annotations

from ..core import RELEASED, RwMutex, ThreadContext
from ..substrate import op_fetch_add, op_load
from .hier import DEFAULT_GROUPS, DEFAULT_THRESHOLD, CohortTktTktLock


class RwContext(ThreadContext):
    __slots__ = ("cohort_ctx",)

    def __init__(self, pid):
        super().__init__(pid)
        self.cohort_ctx = None


class CrwNpLock(RwMutex):
    name = "crw_np"

    def __init__(self, space, variant, groups=DEFAULT_GROUPS, threshold=DEFAULT_THRESHOLD, group_map=None, **kw):
        super().__init__(space, variant, **kw)
        self.cohort = CohortTktTktLock(
            space,
            variant,
            groups=groups,
            threshold=threshold,
            group_map=group_map,
            max_procs=self.max_procs,
            checks=self.checks,
        )
        # One misuse ledger for the whole lock: everything detectable goes
        # through the cohort.
        self.misuse_count_cell = self.cohort.misuse_count_cell
        self.ingress = space.new_cell("readindr.ingress")
        self.egress = space.new_cell("readindr.egress")

    def make_context(self, pid):
        ctx = RwContext(pid)
        ctx.cohort_ctx = self.cohort.make_context(pid)
        return ctx

    def rlock(self, ctx):
        yield from self.cohort.acquire(ctx.cohort_ctx)
        yield op_fetch_add(self.ingress, 1, "rw.arrive")
        yield from self.cohort.release(ctx.cohort_ctx)

    def runlock(self, ctx):
        # Unbalanced departs are undetectable by design: the counters carry
        # no identity, so this path never reports misuse.
        yield op_fetch_add(self.egress, 1, "rw.depart")
        return RELEASED

    def wlock(self, ctx):
        yield from self.cohort.acquire(ctx.cohort_ctx)
        while True:
            arrived = yield op_load(self.ingress, "rw.drain_in")
            departed = yield op_load(self.egress, "rw.drain_out")
            if arrived == departed:
                return

    def wunlock(self, ctx, unchecked=False):
        return (yield from self.cohort.release(ctx.cohort_ctx, unchecked))

    def read_gap(self):
        """egress - ingress (mod 2^64); nonzero means the indicator diverged."""
        return (self.egress.v - self.ingress.v) % (1 << 64)

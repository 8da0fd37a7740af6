"""Uniform mutex interface: thread identity, contexts, release status.

Every lock exposes ``acquire(ctx)`` / ``release(ctx)`` as protocol
generators (see substrate).  ``release`` returns a ReleaseStatus; hardened
variants return MISUSE_DETECTED for an unbalanced release and leave the
protocol state untouched, original variants execute the unprotected
release whatever the consequences.
"""

from __future__ import annotations

import enum
import os

from .substrate import op_event, op_fetch_add

ENV_CHECKS = "LOCKHARDEN_CHECKS"

DEFAULT_MAX_PROCS = 64

ORIGINAL = "original"
HARDENED = "hardened"
VARIANTS = (ORIGINAL, HARDENED)


class ReleaseStatus(enum.Enum):
    RELEASED = "released"
    MISUSE_DETECTED = "misuse_detected"


RELEASED = ReleaseStatus.RELEASED
MISUSE_DETECTED = ReleaseStatus.MISUSE_DETECTED


class CapacityExceeded(Exception):
    """More threads registered than the lock was built for."""


class ThreadLimitExceeded(Exception):
    """Lock constructed for fewer threads than the registry holds."""


class ThreadRegistry:
    """Hands out pids 1..max_procs; pid 0 is the UNLOCKED/absent sentinel."""

    def __init__(self, max_procs=DEFAULT_MAX_PROCS):
        self.max_procs = max_procs
        self._next = 1

    def register_thread(self):
        if self._next > self.max_procs:
            raise CapacityExceeded(f"registry full ({self.max_procs} pids)")
        pid = self._next
        self._next += 1
        return pid

    @property
    def count(self):
        return self._next - 1


def checks_enabled_default():
    """Process-wide default for misuse checks (LOCKHARDEN_CHECKS=off disables)."""
    return os.environ.get(ENV_CHECKS, "on").strip().lower() != "off"


class ThreadContext:
    """Per-thread protocol state carried from acquire to release.

    Contexts are built by the owning mutex (``make_context``), never by
    user code, mirroring the constructor-guarded context objects of the
    hardened designs.  ``in_flight`` guards against binding one context to
    two concurrent acquisitions, which is a caller bug rather than lock
    misuse.
    """

    __slots__ = ("pid", "in_flight")

    def __init__(self, pid):
        self.pid = pid
        self.in_flight = False


class Mutex:
    """Base for all lock implementations.

    Subclasses define ``name``, allocate their cells in ``__init__`` via
    ``space.new_cell`` and implement the protocol generators.  ``hardened``
    selects the misuse-detecting variant; ``checks`` optionally overrides
    the process-wide misuse-check toggle for this instance.
    """

    name = "?"
    context_class = ThreadContext
    variants = VARIANTS

    def __init__(self, space, variant, max_procs=DEFAULT_MAX_PROCS, checks=None, **params):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.space = space
        self.variant = variant
        self.hardened = variant == HARDENED
        self.max_procs = max_procs
        self.checks = checks_enabled_default() if checks is None else checks
        self.params = params
        self.misuse_count_cell = space.new_cell(f"{self.name}.misuse_count")

    # -- context plumbing ---------------------------------------------------

    def make_context(self, pid):
        return self.context_class(pid)

    def misuse_count(self):
        return self.misuse_count_cell.v

    def _flag_misuse(self):
        """Record a detected misuse; shared so traces and reports agree.

        Runs only on the misuse path, keeping the well-behaved acquire and
        release paths free of extra work.
        """
        yield op_fetch_add(self.misuse_count_cell, 1, f"{self.name}.misuse_count")
        yield op_event("misuse_detected")

    # -- protocol (subclass responsibility) ----------------------------------

    def acquire(self, ctx):
        raise NotImplementedError

    def release(self, ctx, unchecked=False):
        """Protocol generator returning a ReleaseStatus.

        ``unchecked=True`` skips the misuse check for this single call, the
        release-API escape hatch for design-intent cross-thread releases.
        """
        raise NotImplementedError

    def _check_active(self, unchecked):
        return self.hardened and self.checks and not unchecked


class RwMutex(Mutex):
    """Reader-writer surface: rlock/runlock/wlock/wunlock generators."""

    def rlock(self, ctx):
        raise NotImplementedError

    def runlock(self, ctx):
        raise NotImplementedError

    def wlock(self, ctx):
        raise NotImplementedError

    def wunlock(self, ctx, unchecked=False):
        raise NotImplementedError

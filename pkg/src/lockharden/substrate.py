"""Shared 64-bit word substrate with native and simulated backends.

Every lock protocol in this package is written once, as a generator that
yields one operation tuple per shared-memory access.  The two backends
interpret those tuples differently:

* native: operations execute immediately against real memory shared by OS
  threads.  Plain loads and stores ride on CPython's interpreter-level
  atomicity; read-modify-write ops take a per-cell lock.  The whole backend
  is sequentially consistent because ops are individually atomic and the
  interpreter serializes them.
* simulated: a deterministic single-threaded scheduler owns all cells.
  Exactly one operation executes per scheduler grant, and every grant is
  appended to a trace, so any interleaving can be scripted, replayed, or
  exhaustively explored.

Operation tuples have the uniform shape ``(kind, cell, a, b, label)``.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field

U64 = (1 << 64) - 1

# Reserved handle values used by queue locks whose link cells carry qnode
# handles rather than addresses.
NULL = 0
ACQ = 1

DONE = "done"
READY = "ready"
BLOCKED = "blocked"
SPINNING = "spinning"


class SubstrateError(Exception):
    pass


class InvalidSchedule(SubstrateError):
    """A schedule granted a step to a finished or blocked thread."""


# ---------------------------------------------------------------------------
# Operation constructors (yielded by protocol generators)
# ---------------------------------------------------------------------------

def op_load(cell, label=""):
    return ("load", cell, 0, 0, label)


def op_store(cell, value, label=""):
    return ("store", cell, value & U64, 0, label)


def op_swap(cell, value, label=""):
    return ("swap", cell, value & U64, 0, label)


def op_cas(cell, expect, new, label=""):
    return ("cas", cell, expect & U64, new & U64, label)


def op_fetch_add(cell, delta, label=""):
    return ("fadd", cell, delta & U64, 0, label)


def op_fetch_xor(cell, mask, label=""):
    return ("fxor", cell, mask & U64, 0, label)


def op_await(cell, value, want_equal=True, label=""):
    """Spin until (cell == value) matches want_equal; returns the observed value.

    Models a single-cell spin loop.  In the simulated backend the thread is
    simply not runnable until the condition holds, which collapses the
    unbounded failed re-reads a real spin performs; the observing read is
    the one atomic step.
    """
    return ("await", cell, value & U64, 1 if want_equal else 0, label)


def op_pause(units, label=""):
    """One unit of busy delay (backoff step, critical-section work unit)."""
    return ("pause", None, units, 0, label)


def op_window(labels, label=""):
    """Block until no other thread's pending op carries one of `labels`.

    This is the scheduler-level rendering of the timed-delay assumption in
    the software-only locks: the delay is long enough for any thread inside
    the marked instruction window to get through it.
    """
    return ("window", None, frozenset(labels), 0, label)


def op_event(kind, payload=0, label=""):
    """Engine-visible marker step (CS enter/exit, misuse bracketing, restart)."""
    return ("event", None, kind, payload, label)


def op_retire(cell_group, label=""):
    """Mark a group of arena cells as reclaimed (stack-lifetime modelling)."""
    return ("retire", None, tuple(cell_group), 0, label)


# ---------------------------------------------------------------------------
# Native backend
# ---------------------------------------------------------------------------

class NativeCell:
    """64-bit shared word for real threads.

    Plain loads/stores are single attribute accesses (atomic under the
    interpreter lock); swap/cas/fetch_* serialize on a per-cell mutex.
    """

    __slots__ = ("cell_id", "name", "v", "_lk")

    def __init__(self, cell_id, name, init=0):
        self.cell_id = cell_id
        self.name = name
        self.v = init & U64
        self._lk = threading.Lock()

    def load(self):
        return self.v

    def store(self, value):
        self.v = value & U64

    def swap(self, value):
        with self._lk:
            old = self.v
            self.v = value & U64
            return old

    def cas(self, expect, new):
        with self._lk:
            if self.v == expect:
                self.v = new & U64
                return True
            return False

    def fetch_add(self, delta):
        with self._lk:
            old = self.v
            self.v = (old + delta) & U64
            return old

    def fetch_xor(self, mask):
        with self._lk:
            old = self.v
            self.v = (old ^ mask) & U64
            return old


class NativeSpace:
    """Cell factory for the native backend."""

    kind = "native"

    def __init__(self):
        self.cells = []
        self._lk = threading.Lock()

    def new_cell(self, name, init=0):
        with self._lk:
            cell = NativeCell(len(self.cells), name, init)
            self.cells.append(cell)
        return cell


def run_native(gen, pause_unit=None, spin_wait=None):
    """Drive a protocol generator to completion on the native backend.

    Returns the generator's return value.  `spin_wait(iteration)` is called
    between failed await re-checks; the default yields the GIL every
    iteration, which is the only sane policy for spinning Python threads.
    """
    if spin_wait is None:
        spin_wait = _default_spin_wait
    sleep0 = time.sleep
    try:
        req = gen.send(None)
        while True:
            kind = req[0]
            if kind == "load":
                res = req[1].v
            elif kind == "store":
                req[1].v = req[2]
                res = None
            elif kind == "await":
                cell, target, want = req[1], req[2], req[3]
                n = 0
                while True:
                    v = cell.v
                    if (v == target) == bool(want):
                        break
                    spin_wait(n)
                    n += 1
                res = v
            elif kind == "cas":
                res = req[1].cas(req[2], req[3])
            elif kind == "swap":
                res = req[1].swap(req[2])
            elif kind == "fadd":
                res = req[1].fetch_add(req[2])
            elif kind == "fxor":
                res = req[1].fetch_xor(req[2])
            elif kind == "pause":
                units = req[2]
                if pause_unit is not None:
                    pause_unit(units)
                elif units >= 8:
                    sleep0(0)
                res = None
            elif kind == "window":
                # Timing-assumption delay: approximate with a GIL yield; the
                # software-only locks are simulator-first and native runs of
                # them are gated behind an explicit flag.
                sleep0(0)
                res = None
            elif kind in ("event", "retire"):
                res = None
            else:  # pragma: no cover - protocol bug
                raise SubstrateError(f"unknown op kind {kind!r}")
            req = gen.send(res)
    except StopIteration as stop:
        return stop.value


def _default_spin_wait(_n):
    time.sleep(0)


# ---------------------------------------------------------------------------
# Simulated backend
# ---------------------------------------------------------------------------

class SimCell:
    __slots__ = ("cell_id", "name", "v", "retired", "last_write_misuse")

    def __init__(self, cell_id, name, init=0):
        self.cell_id = cell_id
        self.name = name
        self.v = init & U64
        self.retired = False
        self.last_write_misuse = False


@dataclass
class TraceStep:
    step: int
    thread: str
    cell: str | None
    op: str
    old: int | None
    new: int | None
    label: str

    def to_json(self):
        return json.dumps(
            {
                "step": self.step,
                "thread": self.thread,
                "cell": self.cell,
                "op": self.op,
                "old": self.old,
                "new": self.new,
                "label": self.label,
            },
            sort_keys=True,
        )


class SimThread:
    __slots__ = (
        "tid",
        "name",
        "gen",
        "pending",
        "done",
        "steps",
        "cont_id",
        "recent",
        "quiescent_laps",
        "parked_at_mutation",
        "in_misuse",
        "in_cs",
        "last_read_misuse",
        "result",
    )

    def __init__(self, tid, name, gen):
        self.tid = tid
        self.name = name
        self.gen = gen
        self.pending = None
        self.done = False
        self.steps = 0
        self.cont_id = 0
        self.recent = []  # recent step signatures, for spin-lap detection
        self.quiescent_laps = 0
        self.parked_at_mutation = -1
        self.in_misuse = False
        self.in_cs = False
        self.last_read_misuse = False
        self.result = None


class SimHost:
    """Deterministic scheduler and cell arena for the simulated backend.

    One atomic step runs per ``grant``.  Thread continuations are interned:
    ``cont_id`` identifies the exact sequence of (label, op, result)
    signatures a thread has executed, with consecutive identical spin laps
    collapsed, so scheduler states can be deduplicated exactly during
    exploration.
    """

    kind = "sim"
    MAX_LAP = 8  # longest spin/retry-loop period collapsed into a fixpoint

    def __init__(self, record_trace=True, intern=None):
        self.cells = []
        self.threads = []
        self.trace = [] if record_trace else None
        self.step = 0
        self.mutations = 0
        self.intern = intern if intern is not None else {}
        self.occupancy = 0
        self.max_occupancy = 0
        self.reader_occupancy = 0
        self.writer_occupancy = 0
        self.rw_violation = False
        self.first_violation_step = None
        self.misuse_detected = 0
        self.misuse_restarts = set()
        self.retired_writes = []

    # -- construction ------------------------------------------------------

    def new_cell(self, name, init=0):
        cell = SimCell(len(self.cells), name, init)
        self.cells.append(cell)
        return cell

    def spawn(self, name, gen):
        t = SimThread(len(self.threads), name, gen)
        self.threads.append(t)
        self._advance(t, None)
        return t

    # -- scheduling --------------------------------------------------------

    def enabled(self, t):
        if t.done:
            return False
        if t.parked_at_mutation >= 0 and self.mutations <= t.parked_at_mutation:
            # Spinning in a loop that cannot progress until some cell changes.
            return False
        req = t.pending
        kind = req[0]
        if kind == "await":
            return (req[1].v == req[2]) == bool(req[3])
        if kind == "window":
            for other in self.threads:
                if other is t or other.done:
                    continue
                if other.pending[4] in req[2]:
                    return False
            return True
        return True

    def enabled_ids(self):
        return [t.tid for t in self.threads if self.enabled(t)]

    def status(self, t):
        if t.done:
            return DONE
        if t.parked_at_mutation >= 0 and self.mutations <= t.parked_at_mutation:
            return SPINNING
        if not self.enabled(t):
            return BLOCKED
        return READY

    def grant(self, tid):
        t = self.threads[tid]
        if not self.enabled(t):
            raise InvalidSchedule(
                f"grant to {t.name}: {self.status(t)} at step {self.step}"
            )
        req = t.pending
        kind, cell, a, b, label = req
        old = new = None
        wrote = False
        if kind == "load":
            res = old = new = cell.v
            t.last_read_misuse = cell.last_write_misuse
        elif kind == "await":
            res = old = new = cell.v
            t.last_read_misuse = cell.last_write_misuse
        elif kind == "store":
            old, new = cell.v, a
            cell.v = a
            res = None
            wrote = True
        elif kind == "swap":
            old, new = cell.v, a
            cell.v = a
            res = old
            wrote = True
        elif kind == "cas":
            old = cell.v
            if old == a:
                cell.v = b
                new, res = b, True
            else:
                new, res = old, False
            wrote = res
        elif kind == "fadd":
            old = cell.v
            new = cell.v = (old + a) & U64
            res = old
            wrote = True
        elif kind == "fxor":
            old = cell.v
            new = cell.v = (old ^ a) & U64
            res = old
            wrote = True
        elif kind == "pause":
            res = None
        elif kind == "window":
            res = None
        elif kind == "event":
            self._handle_event(t, a, b)
            res = None
        elif kind == "retire":
            for c in a:
                c.retired = True
            res = None
        else:  # pragma: no cover - protocol bug
            raise SubstrateError(f"unknown op kind {kind!r}")

        if cell is not None and wrote:
            if old != new:
                self.mutations += 1
                cell.last_write_misuse = t.in_misuse
            if cell.retired:
                self.retired_writes.append((self.step, t.name, cell.name))

        if self.trace is not None:
            opname = kind if kind != "event" else f"event:{a}"
            self.trace.append(
                TraceStep(
                    step=self.step,
                    thread=t.name,
                    cell=cell.name if cell is not None else None,
                    op=opname,
                    old=old,
                    new=new,
                    label=label,
                )
            )
        self.step += 1
        t.steps += 1
        self._account(t, (label, kind, cell.cell_id if cell else -1, a if kind != "retire" else 0, res))
        self._advance(t, res)
        return res

    # -- internals ---------------------------------------------------------

    def _advance(self, t, send_value):
        try:
            t.pending = t.gen.send(send_value)
        except StopIteration as stop:
            t.done = True
            t.pending = None
            t.result = stop.value

    def _account(self, t, sig):
        """Fold `sig` into the thread's continuation id, collapsing spin laps.

        If the thread's last p steps exactly repeat the p before them (same
        labels, ops, and results) and no cell changed across both laps, the
        thread provably sits in a pure spin loop: the lap is dropped, the
        continuation id reverts to its pre-lap value so repeated laps land
        on the same state, and the thread is parked until some cell
        mutates.  Interned ids are a pure function of signature history, so
        identical histories get identical ids across runs.
        """
        recent = t.recent
        muts = self.mutations
        recent.append((sig, muts, 0))
        if len(recent) > 2 * self.MAX_LAP + 1:
            del recent[0]
        n = len(recent)
        for p in range(1, self.MAX_LAP + 1):
            if n < 2 * p + 1:
                break
            if recent[-p - 1][1] != muts:
                # a cell changed inside this window; longer periods reach
                # further back and cannot be pure either
                break
            match = True
            for k in range(1, p + 1):
                if recent[-k][0] != recent[-k - p][0]:
                    match = False
                    break
            if match:
                t.cont_id = recent[-p - 1][2]
                del recent[-p:]
                t.quiescent_laps += 1
                t.parked_at_mutation = muts
                return
        t.quiescent_laps = 0
        t.parked_at_mutation = -1
        key = (t.cont_id, sig)
        cid = self.intern.get(key)
        if cid is None:
            cid = len(self.intern) + 1
            self.intern[key] = cid
        t.cont_id = cid
        recent[-1] = (sig, muts, cid)

    def _handle_event(self, t, kind, payload):
        if kind == "cs_enter":
            t.in_cs = True
            self.occupancy += 1
            if self.occupancy > 1 and self.first_violation_step is None:
                self.first_violation_step = self.step
        elif kind == "cs_exit":
            t.in_cs = False
            self.occupancy -= 1
        elif kind == "reader_enter":
            t.in_cs = True
            self.reader_occupancy += 1
            self._rw_check()
        elif kind == "reader_exit":
            t.in_cs = False
            self.reader_occupancy -= 1
        elif kind == "writer_enter":
            t.in_cs = True
            self.writer_occupancy += 1
            self._rw_check()
        elif kind == "writer_exit":
            t.in_cs = False
            self.writer_occupancy -= 1
        elif kind == "misuse_begin":
            t.in_misuse = True
        elif kind == "misuse_end":
            t.in_misuse = False
        elif kind == "misuse_detected":
            self.misuse_detected += 1
        elif kind == "restart":
            # The value that bounced this thread back to its entry loop was
            # the last one it read; attribute the setback if that value came
            # from a misuse write.
            if t.last_read_misuse:
                self.misuse_restarts.add(t.name)
        # total occupancy across both RW sides for uniform verdicts
        total = self.occupancy + self.reader_occupancy + self.writer_occupancy
        if total > self.max_occupancy:
            self.max_occupancy = total

    def _rw_check(self):
        if self.writer_occupancy >= 1 and (
            self.reader_occupancy + self.writer_occupancy
        ) > 1:
            self.rw_violation = True
            if self.first_violation_step is None:
                self.first_violation_step = self.step

    # -- state inspection ---------------------------------------------------

    def state_key(self):
        return (
            tuple(c.v for c in self.cells),
            tuple(-1 if t.done else t.cont_id for t in self.threads),
            tuple(t.parked_at_mutation >= 0 and self.mutations <= t.parked_at_mutation for t in self.threads),
        )

    def all_done(self):
        return all(t.done for t in self.threads)

    def trace_jsonl(self):
        return "\n".join(s.to_json() for s in self.trace) + "\n"

    def trace_hash(self):
        return hashlib.sha256(self.trace_jsonl().encode()).hexdigest()

"""Scripted misuse scenarios: deterministic replay and bounded exhaustive
exploration on the simulated backend.

A scenario is a lock specification plus one op list per thread (acquire,
release, misuse, critical-section work, or the reader/writer equivalents).
``replay`` runs one fixed interleaving (explicit grant prefix, then a
deterministic round-robin drain).  ``explore`` walks every reachable
interleaving depth-first with exact state deduplication and reports the
worst outcomes found, each backed by a concrete replayable schedule.

Occupancy is judged only from critical-section enter/exit events, never
from lock internals.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

from .locks import make_mutex
from .substrate import InvalidSchedule, SimHost, op_event, op_pause


class ScenarioError(Exception):
    pass


class MissingScenario(ScenarioError):
    pass


@dataclass
class Bounds:
    """Exploration/replay budgets.

    max_steps bounds one run's scheduled steps; max_runs/max_states bound
    the whole exploration; replay_steps is the long leash a single scripted
    replay gets before the starvation classifier kicks in.
    """

    max_steps: int = 200
    max_runs: int = 400_000
    max_states: int = 400_000
    replay_steps: int = 10_000

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in (d or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class Scenario:
    name: str
    lock: str
    threads: dict[str, list]
    params: dict = field(default_factory=dict)
    schedule: list[str] | None = None
    schedules: dict[str, list] | None = None  # per-variant override
    explore_from_prefix: bool = False
    misbehaver: str | None = None
    notes: str = ""

    def schedule_for(self, variant):
        if self.schedules and variant in self.schedules:
            return self.schedules[variant]
        return self.schedule

    def __post_init__(self):
        if self.misbehaver is None:
            for tname, ops in self.threads.items():
                if any(str(o[0]).startswith("misuse") for o in ops):
                    self.misbehaver = tname
                    break

    @property
    def is_rw(self):
        return any(
            str(o[0]) in ("rlock", "runlock", "wlock", "wunlock", "misuse_runlock", "misuse_wunlock")
            for ops in self.threads.values()
            for o in ops
        )

    def to_json(self):
        return json.dumps(
            {
                "name": self.name,
                "lock": self.lock,
                "params": self.params,
                "threads": self.threads,
                "schedule": self.schedule,
                "schedules": self.schedules,
                "explore_from_prefix": self.explore_from_prefix,
                "misbehaver": self.misbehaver,
                "notes": self.notes,
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            name=d["name"],
            lock=d["lock"],
            threads={k: [list(op) for op in v] for k, v in d["threads"].items()},
            params=d.get("params") or {},
            schedule=d.get("schedule"),
            schedules=d.get("schedules"),
            explore_from_prefix=bool(d.get("explore_from_prefix")),
            misbehaver=d.get("misbehaver"),
            notes=d.get("notes", ""),
        )


class Run:
    """One instantiated scenario: host, mutex, contexts, live threads."""

    def __init__(self, scenario, variant, record_trace=True, intern=None, checks=None):
        self.scenario = scenario
        self.variant = variant
        self.host = SimHost(record_trace=record_trace, intern=intern)
        names = list(scenario.threads)
        params = dict(scenario.params)
        params.setdefault("max_procs", max(len(names), 1))
        self.mutex = make_mutex(scenario.lock, self.host, variant, checks=checks, **params)
        self.tids = {}
        self.results = {n: [] for n in names}
        self.contexts = {}
        for i, name in enumerate(names):
            pid = i + 1
            ops = scenario.threads[name]
            ctxs = {"main": self.mutex.make_context(pid)}
            for idx, op in enumerate(ops):
                if str(op[0]).startswith("misuse") and len(op) > 1 and op[1] == "fresh":
                    ctxs[f"fresh{idx}"] = self.mutex.make_context(pid)
                elif len(op) > 1 and isinstance(op[1], str) and op[1] not in ("fresh",) and str(op[0]) in ("acquire", "release", "release_unchecked", "misuse"):
                    ctxs.setdefault(op[1], self.mutex.make_context(pid))
            self.contexts[name] = ctxs
        for name in names:
            gen = self._program(name, scenario.threads[name])
            t = self.host.spawn(name, gen)
            self.tids[name] = t.tid

    # -- program assembly ----------------------------------------------------

    def _ctx(self, tname, op, idx):
        ctxs = self.contexts[tname]
        if len(op) > 1 and isinstance(op[1], str):
            if op[1] == "fresh":
                return ctxs[f"fresh{idx}"]
            return ctxs[op[1]]
        return ctxs["main"]

    def _program(self, tname, ops):
        mutex = self.mutex
        results = self.results[tname]
        for idx, op in enumerate(ops):
            kind = op[0]
            if kind == "acquire":
                yield from mutex.acquire(self._ctx(tname, op, idx))
                yield op_event("cs_enter", label=f"enter[{idx}]")
            elif kind == "release":
                yield op_event("cs_exit", label=f"exit[{idx}]")
                st = yield from mutex.release(self._ctx(tname, op, idx))
                results.append((idx, st.value))
            elif kind == "release_unchecked":
                yield op_event("cs_exit", label=f"exit[{idx}]")
                st = yield from mutex.release(self._ctx(tname, op, idx), unchecked=True)
                results.append((idx, st.value))
            elif kind == "misuse":
                yield op_event("misuse_begin", label=f"misuse[{idx}]")
                st = yield from mutex.release(self._ctx(tname, op, idx))
                yield op_event("misuse_end", label=f"misuse_end[{idx}]")
                results.append((idx, st.value))
            elif kind == "cs":
                for i in range(int(op[1]) if len(op) > 1 else 1):
                    yield op_pause(1, f"cs[{idx}.{i}]")
            elif kind == "rlock":
                yield from mutex.rlock(self._ctx(tname, op, idx))
                yield op_event("reader_enter", label=f"renter[{idx}]")
            elif kind == "runlock":
                yield op_event("reader_exit", label=f"rexit[{idx}]")
                st = yield from mutex.runlock(self._ctx(tname, op, idx))
                results.append((idx, st.value))
            elif kind == "wlock":
                yield from mutex.wlock(self._ctx(tname, op, idx))
                yield op_event("writer_enter", label=f"wenter[{idx}]")
            elif kind == "wunlock":
                yield op_event("writer_exit", label=f"wexit[{idx}]")
                st = yield from mutex.wunlock(self._ctx(tname, op, idx))
                results.append((idx, st.value))
            elif kind == "misuse_runlock":
                yield op_event("misuse_begin", label=f"misuse[{idx}]")
                st = yield from mutex.runlock(self._ctx(tname, op, idx))
                yield op_event("misuse_end", label=f"misuse_end[{idx}]")
                results.append((idx, st.value))
            elif kind == "misuse_wunlock":
                yield op_event("misuse_begin", label=f"misuse[{idx}]")
                st = yield from mutex.wunlock(self._ctx(tname, op, idx))
                yield op_event("misuse_end", label=f"misuse_end[{idx}]")
                results.append((idx, st.value))
            else:
                raise ScenarioError(f"unknown scenario op {kind!r}")

    # -- bookkeeping -----------------------------------------------------------

    def thread_status(self, name):
        return self.host.status(self.host.threads[self.tids[name]])

    def starved_threads(self):
        out = []
        for name, tid in self.tids.items():
            t = self.host.threads[tid]
            if not t.done:
                out.append(name)
        return out

    def starved_in_misuse(self):
        out = []
        for name, tid in self.tids.items():
            t = self.host.threads[tid]
            if not t.done and t.in_misuse:
                out.append(name)
        return out


@dataclass
class Verdict:
    scenario: str
    variant: str
    max_occupancy: int
    rw_violation: bool
    starved: list[str]
    starved_in_misuse: list[str]
    misuse_restarts: list[str]
    misuse_detected: int
    release_results: dict
    statuses: dict
    steps: int
    retired_writes: int
    trace_hash: str | None = None
    read_gap: int | None = None

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "max_occupancy": self.max_occupancy,
            "rw_violation": self.rw_violation,
            "starved": self.starved,
            "starved_in_misuse": self.starved_in_misuse,
            "misuse_restarts": self.misuse_restarts,
            "misuse_detected": self.misuse_detected,
            "release_results": self.release_results,
            "statuses": self.statuses,
            "steps": self.steps,
            "retired_writes": self.retired_writes,
            "trace_hash": self.trace_hash,
            "read_gap": self.read_gap,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _apply_schedule(run, grants):
    """Expand schedule tokens, apply them, and return the granted tids.

    Tokens: ``"T1"`` grants one step, ``"T1:3"`` three steps, ``"T1*"``
    grants while the thread stays runnable (up to its program's end or its
    next blocking point), ``"T1@label"`` grants until the thread executes a
    step whose label starts with ``label``.
    """
    host = run.host
    out = []
    for token in grants:
        token = str(token)
        name, _, upto = token.partition("@")
        mod = ""
        if not upto:
            name, _, mod = token.partition(":")
        star = name.endswith("*")
        if star:
            name = name[:-1]
        if name not in run.tids:
            raise InvalidSchedule(f"unknown thread {name!r} in schedule")
        tid = run.tids[name]
        t = host.threads[tid]
        if upto:
            while True:
                if not host.enabled(t):
                    raise InvalidSchedule(
                        f"{name} became {host.status(t)} before reaching {upto!r}"
                    )
                label = t.pending[4]
                host.grant(tid)
                out.append(tid)
                if label.startswith(upto):
                    break
        elif star:
            while host.enabled(t):
                host.grant(tid)
                out.append(tid)
        else:
            for _ in range(int(mod) if mod else 1):
                host.grant(tid)
                out.append(tid)
    return out


def replay(scenario, variant, schedule=None, bounds=None, record_trace=True, checks=None):
    """Run one deterministic interleaving and classify it.

    The schedule (or the scenario's embedded one) is an explicit grant
    prefix by thread name; afterwards the engine drains round-robin until
    every thread is done or no thread can run.  Identical inputs produce an
    identical trace, hence an identical trace hash.
    """
    bounds = bounds or Bounds()
    run = Run(scenario, variant, record_trace=record_trace, checks=checks)
    host = run.host
    grants = schedule if schedule is not None else (scenario.schedule_for(variant) or [])
    _apply_schedule(run, grants)
    rr = 0
    n = len(host.threads)
    while host.step < bounds.replay_steps:
        granted = False
        for off in range(n):
            tid = (rr + off) % n
            if host.enabled(host.threads[tid]):
                host.grant(tid)
                rr = (tid + 1) % n
                granted = True
                break
        if not granted:
            break
    return _verdict(run, trace=record_trace)


def _verdict(run, trace=False):
    host = run.host
    v = Verdict(
        scenario=run.scenario.name,
        variant=run.variant,
        max_occupancy=host.max_occupancy,
        rw_violation=host.rw_violation,
        starved=sorted(run.starved_threads()),
        starved_in_misuse=sorted(run.starved_in_misuse()),
        misuse_restarts=sorted(host.misuse_restarts),
        misuse_detected=host.misuse_detected,
        release_results={k: list(v) for k, v in run.results.items()},
        statuses={name: run.thread_status(name) for name in run.tids},
        steps=host.step,
        retired_writes=len(host.retired_writes),
    )
    if trace and host.trace is not None:
        v.trace_hash = host.trace_hash()
    if hasattr(run.mutex, "read_gap"):
        v.read_gap = run.mutex.read_gap()
    return v


@dataclass
class ExploreSummary:
    scenario: str
    variant: str
    runs: int = 0
    states: int = 0
    steps: int = 0
    max_occupancy: int = 0
    rw_violation: bool = False
    violation_schedule: list[str] | None = None
    starved: set = field(default_factory=set)
    starved_in_misuse: set = field(default_factory=set)
    starvation_schedule: list[str] | None = None
    misuse_restarts: set = field(default_factory=set)
    misuse_detected_max: int = 0
    deadlocked_runs: int = 0
    completed_runs: int = 0
    retired_writes: int = 0
    bounds_exceeded: list[str] = field(default_factory=list)

    @property
    def violates_mutex(self):
        return self.max_occupancy > 1 or self.rw_violation

    def starves_others(self, misbehaver, count_restarts=False):
        others = {t for t in self.starved if t != misbehaver}
        if count_restarts:
            others |= {t for t in self.misuse_restarts if t != misbehaver}
        return bool(others)

    def starves_misbehaver(self, misbehaver):
        return misbehaver in self.starved_in_misuse

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "runs": self.runs,
            "states": self.states,
            "steps": self.steps,
            "max_occupancy": self.max_occupancy,
            "rw_violation": self.rw_violation,
            "violation_schedule": self.violation_schedule,
            "starved": sorted(self.starved),
            "starved_in_misuse": sorted(self.starved_in_misuse),
            "starvation_schedule": self.starvation_schedule,
            "misuse_restarts": sorted(self.misuse_restarts),
            "misuse_detected_max": self.misuse_detected_max,
            "deadlocked_runs": self.deadlocked_runs,
            "completed_runs": self.completed_runs,
            "retired_writes": self.retired_writes,
            "bounds_exceeded": sorted(set(self.bounds_exceeded)),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def explore(scenario, variant, bounds=None, checks=None):
    """Depth-first search over all interleavings within bounds.

    States are deduplicated on (cell values, exact per-thread continuation
    ids), so the search is exhaustive over distinct states up to its
    budgets.  Every reported violation or starvation carries a schedule
    that `replay` will reproduce.
    """
    bounds = bounds or Bounds()
    summary = ExploreSummary(scenario=scenario.name, variant=variant)
    intern = {}
    seen = set()
    prefix = []
    if scenario.explore_from_prefix and scenario.schedule_for(variant):
        prefix = list(scenario.schedule_for(variant))
    name_of = {}

    def instantiate():
        run = Run(scenario, variant, record_trace=False, intern=intern, checks=checks)
        if not name_of:
            name_of.update({tid: n for n, tid in run.tids.items()})
        return run

    start = []
    if prefix:
        probe = instantiate()
        start = _apply_schedule(probe, prefix)
    limit = bounds.max_steps + len(start) + 64
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, limit * 4 + 1000))

    def merge(host):
        summary.max_occupancy = max(summary.max_occupancy, host.max_occupancy)
        summary.rw_violation = summary.rw_violation or host.rw_violation
        summary.misuse_restarts |= host.misuse_restarts
        summary.misuse_detected_max = max(summary.misuse_detected_max, host.misuse_detected)
        summary.retired_writes = max(summary.retired_writes, len(host.retired_writes))

    def note_violation(host, cur):
        if host.first_violation_step is not None and summary.violation_schedule is None:
            summary.violation_schedule = [name_of[t] for t in cur]

    def dfs(grants):
        if summary.runs >= bounds.max_runs:
            summary.bounds_exceeded.append("runs")
            return
        summary.runs += 1
        run = instantiate()
        host = run.host
        for g in grants:
            host.grant(g)
        summary.steps += len(grants)
        cur = list(grants)
        note_violation(host, cur)
        while True:
            if host.step >= limit:
                summary.bounds_exceeded.append("steps")
                merge(host)
                return
            en = [t.tid for t in host.threads if host.enabled(t)]
            if not en:
                if host.all_done():
                    summary.completed_runs += 1
                else:
                    summary.deadlocked_runs += 1
                    newly = set(run.starved_threads())
                    if newly - summary.starved and summary.starvation_schedule is None:
                        summary.starvation_schedule = [name_of[t] for t in cur]
                    summary.starved |= newly
                    summary.starved_in_misuse |= set(run.starved_in_misuse())
                merge(host)
                return
            key = host.state_key()
            if key in seen:
                merge(host)
                return
            if len(seen) >= bounds.max_states:
                summary.bounds_exceeded.append("states")
                merge(host)
                return
            seen.add(key)
            for t in en[1:]:
                dfs(cur + [t])
            host.grant(en[0])
            summary.steps += 1
            cur.append(en[0])
            note_violation(host, cur)

    try:
        dfs(start)
    finally:
        sys.setrecursionlimit(old_limit)
    summary.states = len(seen)
    return summary

"""Native-thread correctness harness.

Real OS threads hammer one lock while an external occupancy oracle checks
mutual exclusion and a configurable fraction of iterations injects an
unbalanced release with a fresh or stale context.  Hardened variants must
detect every injected misuse and keep the oracle at one; original variants
accept injections only behind an explicit unsafe flag because a native
misuse can genuinely wedge or corrupt them, by design.

A progress watchdog (rather than a total-runtime deadline) flags
starvation: the run is declared stuck only if no thread completes an
iteration for the configured number of seconds.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field

from .core import MISUSE_DETECTED
from .locks import make_mutex
from .substrate import NativeSpace, run_native


@dataclass
class StressConfig:
    lock: str
    variant: str = "hardened"
    threads: int = 8
    iterations: int = 100_000
    misuse_rate: float = 0.01
    misuse_context: str = "fresh"  # or "stale"
    cs_work: int = 0
    watchdog_timeout: float = 30.0
    seed: int = 42
    params: dict = field(default_factory=dict)
    allow_unsafe_original: bool = False
    checks: bool | None = None


@dataclass
class StressReport:
    config: StressConfig
    max_occupancy: int = 0
    oracle_violations: int = 0
    injected: int = 0
    detected: int = 0
    false_alarms: int = 0
    completed_threads: int = 0
    iterations_done: int = 0
    wall_seconds: float = 0.0
    watchdog_timeout: bool = False
    errors: list = field(default_factory=list)

    @property
    def ok(self):
        return (
            not self.watchdog_timeout
            and self.oracle_violations == 0
            and self.max_occupancy <= 1
            and self.detected == self.injected
            and self.false_alarms == 0
            and self.completed_threads == self.config.threads
            and not self.errors
        )

    def to_dict(self):
        return {
            "lock": self.config.lock,
            "variant": self.config.variant,
            "threads": self.config.threads,
            "iterations": self.config.iterations,
            "misuse_rate": self.config.misuse_rate,
            "misuse_context": self.config.misuse_context,
            "seed": self.config.seed,
            "max_occupancy": self.max_occupancy,
            "oracle_violations": self.oracle_violations,
            "injected": self.injected,
            "detected": self.detected,
            "false_alarms": self.false_alarms,
            "completed_threads": self.completed_threads,
            "iterations_done": self.iterations_done,
            "wall_seconds": round(self.wall_seconds, 3),
            "watchdog_timeout": self.watchdog_timeout,
            "errors": self.errors,
            "ok": self.ok,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_stress(config):
    """Execute one stress configuration and report."""
    if (
        config.variant == "original"
        and config.misuse_rate > 0
        and not config.allow_unsafe_original
    ):
        raise ValueError(
            "misuse injection on an original variant can corrupt it by design; "
            "pass allow_unsafe_original=True to do it anyway"
        )
    space = NativeSpace()
    mutex = make_mutex(
        config.lock,
        space,
        config.variant,
        max_procs=max(config.threads, 1),
        checks=config.checks,
        **config.params,
    )
    oracle = space.new_cell("oracle")
    report = StressReport(config=config)
    stop = threading.Event()
    barrier = threading.Barrier(config.threads)
    lock_out = threading.Lock()
    progress = [0] * config.threads

    def worker(slot):
        pid = slot + 1
        rng = random.Random((config.seed << 16) ^ pid)
        ctx = mutex.make_context(pid)
        use_stale = config.misuse_context == "stale"
        inj = det = alarms = done = 0
        occ_peak = 0
        violations = 0
        cs_spin = config.cs_work
        barrier.wait()
        try:
            for i in range(config.iterations):
                if stop.is_set():
                    break
                if config.misuse_rate and rng.random() < config.misuse_rate:
                    # stale: double-release the context just used; fresh: a
                    # context that has never seen an acquisition
                    bad = ctx if use_stale else mutex.make_context(pid)
                    inj += 1
                    st = run_native(mutex.release(bad))
                    if st is MISUSE_DETECTED:
                        det += 1
                run_native(mutex.acquire(ctx))
                prev = oracle.fetch_add(1)
                if prev != 0:
                    violations += 1
                if prev + 1 > occ_peak:
                    occ_peak = prev + 1
                for _ in range(cs_spin):
                    pass
                oracle.fetch_add(-1)
                st = run_native(mutex.release(ctx))
                if st is MISUSE_DETECTED:
                    alarms += 1
                done += 1
                progress[slot] = done
                if violations:
                    stop.set()
                    break
        except Exception as exc:  # harness must report, not die
            with lock_out:
                report.errors.append(f"thread {pid}: {exc!r}")
            stop.set()
            return
        with lock_out:
            report.injected += inj
            report.detected += det
            report.false_alarms += alarms
            report.iterations_done += done
            report.oracle_violations += violations
            report.max_occupancy = max(report.max_occupancy, occ_peak)
            report.completed_threads += 1

    threads = [
        threading.Thread(target=worker, args=(i,), daemon=True, name=f"stress-{i + 1}")
        for i in range(config.threads)
    ]
    t0 = time.perf_counter()
    for t in threads:
        t.start()
    last_progress = sum(progress)
    last_change = time.perf_counter()
    while any(t.is_alive() for t in threads):
        time.sleep(0.05)
        now = time.perf_counter()
        cur = sum(progress)
        if cur != last_progress:
            last_progress = cur
            last_change = now
        elif now - last_change > config.watchdog_timeout:
            report.watchdog_timeout = True
            stop.set()
            for t in threads:
                t.join(timeout=1.0)
            break
    for t in threads:
        t.join(timeout=0.5)
    report.wall_seconds = time.perf_counter() - t0
    return report


HARDENED_STRESS_LOCKS = (
    "tas",
    "tatas",
    "tatas_bo",
    "ticket",
    "abql",
    "gt",
    "mcs",
    "clh",
    "hemlock",
    "hmcs",
    "hbo",
    "ctkt",
)


def run_stress_suite(locks=HARDENED_STRESS_LOCKS, **overrides):
    """Stress every hardened hardware lock with one shared configuration."""
    reports = []
    for lock in locks:
        cfg = StressConfig(lock=lock, **overrides)
        reports.append(run_stress(cfg))
    return reports

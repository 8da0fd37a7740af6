"""Named scenario catalog and the executable misuse matrix.

Each lock's row in the matrix states whether a single unbalanced release
can (a) break mutual exclusion, (b) strand the misbehaving thread inside
its own release, or (c) starve well-behaved threads.  Every cell is backed
by named runs: bounded-exhaustive explorations for absence claims and for
existence claims reachable from small scenarios, deterministic scripted
replays for the interleavings that need exact staging.  Hardened variants
of the same scenarios must come out clean and actually detect the misuse.

The two-word fast lock (lamport1/lamport2) rows score the "starves others"
column through misuse-caused entry restarts rather than terminal blocking:
a stray release there bounces an almost-in thread back to its entry loop,
which is the starvation mode those protocols exhibit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .scenario import Bounds, MissingScenario, Scenario, explore, replay

WB = [["acquire"], ["cs", 1], ["release"]]


def _contended(misuser_ops, extra=None):
    threads = {
        "T1": [["acquire"], ["cs", 2], ["release"]],
        "T2": [["acquire"], ["cs", 1], ["release"]],
        "Tm": misuser_ops,
    }
    if extra:
        threads.update(extra)
    return threads


def _build_scenarios():
    s = {}

    def add(sc):
        s[sc.name] = sc

    # -- TAS family ---------------------------------------------------------
    for lock in ("tas", "tatas", "tatas_bo"):
        add(Scenario(
            name=f"{lock}_waiter_admitted",
            lock=lock,
            threads=_contended([["misuse", "fresh"]]),
            notes="stray release while held admits one extra waiter",
        ))
        add(Scenario(
            name=f"{lock}_idle_misuse",
            lock=lock,
            threads={"Tm": [["misuse", "fresh"]], "T1": list(WB)},
            schedule=["Tm*", "T1*"],
            notes="stray release on an idle lock has no visible effect",
        ))
    add(Scenario(
        name="tas_triple_misuse",
        lock="tas",
        threads={
            "T1": [["acquire"], ["cs", 3], ["release"]],
            "T2": [["acquire"], ["cs", 2], ["release"]],
            "T3": [["acquire"], ["cs", 1], ["release"]],
            "T4": [["acquire"], ["cs", 1], ["release"]],
            "Tm": [["misuse", "fresh"], ["misuse", "fresh"], ["misuse", "fresh"]],
        },
        schedule=["T1@enter", "Tm:3", "T2@enter", "Tm:3", "T3@enter", "Tm:3", "T4@enter"],
        notes="three stray releases with four contenders reach occupancy four",
    ))

    # -- Ticket --------------------------------------------------------------
    add(Scenario(
        name="ticket_immediate_successor",
        lock="ticket",
        threads=_contended([["misuse", "fresh"]]),
        notes="stray now-serving bump admits the next ticket holder",
    ))
    add(Scenario(
        name="ticket_nowserving_regress",
        lock="ticket",
        threads={
            "Tm": [["misuse", "fresh"]],
            "T1": [["acquire"], ["release"]],
            "T2": [["acquire"], ["release"]],
            "T3": [["acquire"], ["cs", 1], ["release"]],
        },
        schedules={
            # original release is a load/store pair: park the misuser between
            # its stale read and its write while two clean rounds complete
            "original": ["Tm:2", "T1*", "T2*", "Tm*", "T3*"],
            "hardened": [],
        },
        notes="now-serving regression strands every later ticket forever",
    ))
    add(Scenario(
        name="ticket_misuse_bound_1",
        lock="ticket",
        threads={
            "T1": [["acquire"], ["cs", 1], ["release"]],
            "T2": [["acquire"], ["cs", 1], ["release"]],
            "T3": [["acquire"], ["cs", 1], ["release"]],
            "Tm": [["misuse", "fresh"]],
        },
        notes="one stray bump admits at most one extra thread",
    ))
    add(Scenario(
        name="ticket_misuse_bound_2",
        lock="ticket",
        threads={
            "T1": [["acquire"], ["cs", 1], ["release"]],
            "T2": [["acquire"], ["cs", 1], ["release"]],
            "T3": [["acquire"], ["cs", 1], ["release"]],
            "Tm": [["misuse", "fresh"], ["misuse", "fresh"]],
        },
        notes="two stray bumps admit at most two extra threads",
    ))

    # -- ABQL / GT ------------------------------------------------------------
    add(Scenario(
        name="abql_uninit_place",
        lock="abql",
        threads=_contended([["misuse", "fresh"]]),
        notes="uninitialized place releases the next ring slot; ring modulus prevents starvation",
    ))
    add(Scenario(
        name="gt_toggle_revert",
        lock="gt",
        threads={
            "Tm": [["acquire"], ["release"], ["misuse"]],
            "Ts": [["acquire"], ["cs", 1], ["release"]],
            "Tw": [["acquire"], ["cs", 1], ["release"]],
        },
        schedules={
            # Tm completes a clean round, Ts enqueues and is about to see the
            # toggle, the stray release toggles the bit back: FIFO wedges.
            "original": ["Tm:4", "Ts:2", "Tm:2", "Tm:3", "Tw:2"],
            "hardened": ["Tm:5", "Ts:2", "Tm:3", "Tm:3", "Tw:2"],
        },
        notes="double toggle makes the waiter miss its grant; everyone behind starves",
    ))

    # -- MCS / CLH / K42 / Hemlock ---------------------------------------------
    add(Scenario(
        name="mcs_loop_forever",
        lock="mcs",
        threads={"T1": list(WB), "Tm": [["misuse", "fresh"]]},
        notes="fresh-node stray release waits forever for a successor",
    ))
    add(Scenario(
        name="mcs_stale_next",
        lock="mcs",
        threads={
            "Tm": [["acquire"], ["release"], ["misuse"]],
            "T2": [["acquire"], ["release"], ["acquire"], ["cs", 1], ["release"]],
            "T1": [["acquire"], ["cs", 2], ["release"]],
        },
        schedules={
            "original": ["Tm@enter", "T2:4", "Tm:3", "T2@exit", "T2:2"],
            "hardened": ["Tm@enter", "T2:4", "Tm:6", "T2@exit", "T2:4"],
        },
        explore_from_prefix=True,
        notes="stale node still links to a re-enqueued waiter; stray release admits it",
    ))
    add(Scenario(
        name="clh_fig6_reenqueue",
        lock="clh",
        threads={
            "T1": [["acquire"], ["release"]],
            "T2": [["acquire"], ["release"], ["acquire"], ["cs", 1], ["release"]],
            "Tm": [["acquire"], ["release"], ["misuse"], ["acquire"], ["cs", 1], ["release"]],
            "Tx": [["acquire"], ["cs", 1], ["release"]],
            "Ty": [["acquire"], ["cs", 1], ["release"]],
        },
        schedules={
            # clean round for all three, stray release steals the node T2
            # owns, both re-enqueue it, T2's release frees two waiters at once
            "original": ["T1*", "T2:8", "Tm:8", "Tm:4", "T2:5", "Tx:3", "Tm:3", "Ty:3", "T2*", "Tx:2", "Ty:2"],
            "hardened": [],
        },
        notes="double enqueue of one node lets two threads into the critical section",
    ))
    add(Scenario(
        name="clh_lost_update",
        lock="clh",
        threads={
            "T1": [["acquire"], ["release"]],
            "T2": [["acquire"], ["release"], ["acquire"], ["cs", 1], ["release"]],
            "Tm": [["acquire"], ["release"], ["misuse"], ["acquire"], ["cs", 1], ["release"]],
            "Tx": [["acquire"], ["cs", 1], ["release"]],
            "Ty": [["acquire"], ["cs", 1], ["release"]],
        },
        schedules={
            # alternate interleaving of the same corruption: the re-enqueue
            # overwrites the pass flag after T2 already cleared it
            "original": ["T1*", "T2:8", "Tm:8", "Tm:4", "T2:5", "Tx:3", "T2*", "Tm:3", "Ty:3"],
            "hardened": [],
        },
        notes="racy reuse of one node loses the handoff; waiters starve",
    ))
    add(Scenario(
        name="clh_stale_misuse",
        lock="clh",
        threads={
            "Tm": [["acquire"], ["release"], ["misuse"]],
            "T1": [["acquire"], ["cs", 1], ["release"]],
        },
        notes="lone stray release after a clean round; probes detection and self-effects",
    ))
    add(Scenario(
        name="mcsk42_succ_admitted",
        lock="mcs_k42",
        threads=_contended([["misuse"]]),
        notes="stray release grants the queued successor or frees the held lock",
    ))
    add(Scenario(
        name="mcsk42_tm_starves",
        lock="mcs_k42",
        threads={"Tm": [["misuse"]]},
        notes="stray release on an unowned lock waits for a queue that never forms",
    ))
    add(Scenario(
        name="mcsk42_holder_starves",
        lock="mcs_k42",
        threads={"T1": list(WB), "Tm": [["misuse"]]},
        schedule=["T1:3", "Tm*", "T1*"],
        notes="stray release frees the sole holder's lock; the holder's own release hangs",
    ))
    add(Scenario(
        name="mcsk42_stack_write",
        lock="mcs_k42",
        threads=_contended([["misuse"]]),
        schedule=["T1:4", "T2:5", "T1:2", "Tm:4", "T2:6", "T2*", "T1*"],
        notes="holder's release still points at a stack node its owner already abandoned",
    ))
    add(Scenario(
        name="hemlock_self_starve",
        lock="hemlock",
        threads={"T1": list(WB), "Tm": [["misuse", "fresh"]]},
        notes="stray release posts a handoff nobody consumes; the misbehaver spins, the lock is untouched",
    ))

    # -- hierarchical -----------------------------------------------------------
    add(Scenario(
        name="hmcs_fresh_misuse",
        lock="hmcs",
        threads={"T1": list(WB), "Tm": [["misuse", "fresh"]]},
        params={"groups": 2, "threshold": 4},
        notes="fresh leaf node stray release: same self-starvation as the flat queue lock",
    ))
    add(Scenario(
        name="hmcs_stale_next",
        lock="hmcs",
        threads={
            "Tm": [["acquire"], ["release"], ["misuse"]],
            "T2": [["acquire"], ["release"], ["acquire"], ["cs", 1], ["release"]],
            "T1": [["acquire"], ["cs", 2], ["release"]],
        },
        params={"groups": 1, "threshold": 8},
        schedules={
            # full staging for the replayed violation; the hardened schedule
            # stops after round one and the misuse, which detection must stop
            "original": ["Tm@enter", "T2:4", "Tm:4", "T2@exit", "T2:6",
                         "T1@enter", "T2:4", "Tm*", "T2@enter"],
            "hardened": ["Tm@enter", "T2:4", "Tm:5", "T2@exit", "T2:8"],
        },
        explore_from_prefix=True,
        notes="stale leaf node admits a re-enqueued waiter below a held top lock",
    ))
    add(Scenario(
        name="hbo_waiter_admitted",
        lock="hbo",
        threads=_contended([["misuse", "fresh"]]),
        notes="unconditional word reset admits a backer-off waiter",
    ))
    add(Scenario(
        name="ctkt_local_misuse",
        lock="ctkt",
        threads=_contended([["misuse", "fresh"]]),
        params={"groups": 1},
        notes="stray local-ticket bump admits the next cohort waiter under the held top lock",
    ))

    # -- software-only ------------------------------------------------------------
    add(Scenario(
        name="peterson_misuse",
        lock="peterson",
        threads={
            "T0": [["misuse"]],
            "T1": [["acquire"], ["cs", 1], ["release"], ["acquire"], ["cs", 1], ["release"]],
        },
        notes="retracting one's own intent flag cannot admit or stall the peer",
    ))
    add(Scenario(
        name="peterson_both_misuse",
        lock="peterson",
        threads={
            "T0": [["misuse"], ["acquire"], ["cs", 1], ["release"]],
            "T1": [["misuse"], ["acquire"], ["cs", 1], ["release"]],
        },
        notes="both peers misusing still leaves the protocol intact",
    ))
    add(Scenario(
        name="fisher_misuse",
        lock="fisher",
        threads=_contended([["misuse", "fresh"]]),
        notes="stray word clear opens the gate for exactly one waiting thread",
    ))
    add(Scenario(
        name="lamport1_misuse",
        lock="lamport1",
        threads=_contended([["misuse", "fresh"]]),
        notes="stray y clear lets a walker through all checks; bounced entrants restart",
    ))
    add(Scenario(
        name="lamport2_misuse",
        lock="lamport2",
        threads=_contended([["misuse", "fresh"]]),
        notes="same y-clear pathologies as the delay variant; announce flags unaffected",
    ))
    add(Scenario(
        name="bakery_misuse",
        lock="bakery",
        threads=_contended([["misuse", "fresh"]]),
        notes="rewriting an already-zero ticket is invisible to every scan",
    ))

    # -- reader-writer ---------------------------------------------------------
    add(Scenario(
        name="rw_read_misuse",
        lock="crw_np",
        threads={
            "R1": [["rlock"], ["cs", 1], ["runlock"]],
            "W": [["wlock"], ["cs", 1], ["wunlock"]],
            "Tm": [["misuse_runlock"]],
            "W2": [["wlock"], ["cs", 1], ["wunlock"]],
        },
        params={"groups": 1},
        schedule=["R1@renter", "W*", "Tm*", "W@wenter", "W*", "R1*", "W2*"],
        notes="stray depart drains the indicator under a reader, then skews it forever",
    ))
    add(Scenario(
        name="rw_wunlock_misuse",
        lock="crw_np",
        threads={
            "W": [["wlock"], ["cs", 1], ["wunlock"]],
            "Tm": [["misuse_wunlock", "fresh"]],
            "W2": [["wlock"], ["cs", 1], ["wunlock"]],
        },
        params={"groups": 1},
        notes="write-side misuse lands in the cohort's local ticket check",
    ))

    # -- well-behaved controls (invariant tests, not matrix rows) -------------
    for lock, n, params in [
        ("tas", 3, {}), ("tatas", 3, {}), ("tatas_bo", 3, {}),
        ("ticket", 3, {}), ("abql", 3, {}), ("gt", 3, {}),
        ("mcs", 3, {}), ("clh", 3, {}), ("hemlock", 3, {}),
        ("mcs_k42", 3, {}),
        ("hmcs", 3, {"groups": 2, "threshold": 2}),
        ("hbo", 3, {"groups": 2}),
        ("ctkt", 3, {"groups": 2, "threshold": 2}),
        ("peterson", 2, {}), ("fisher", 3, {}),
        ("lamport1", 2, {}), ("lamport2", 2, {}), ("bakery", 3, {}),
    ]:
        add(Scenario(
            name=f"wb_{lock}",
            lock=lock,
            threads={f"T{i + 1}": list(WB) for i in range(n)},
            params=params,
            notes="well-behaved contention control",
        ))

    return s


SCENARIOS = _build_scenarios()


def get_scenario(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise MissingScenario(f"no scenario named {name!r}") from None


@dataclass
class Evidence:
    """One named run backing a matrix cell."""

    scenario: str
    mode: str = "explore"  # or "replay"
    max_steps: int = 200

    def run(self, variant, bounds=None):
        sc = get_scenario(self.scenario)
        if self.mode == "replay":
            return replay(sc, variant, bounds=bounds or Bounds(), record_trace=False)
        b = bounds or Bounds(max_steps=self.max_steps)
        return explore(sc, variant, bounds=b)


def _starves_others(result, misbehaver, restart_rule):
    starved = {t for t in result.starved if t != misbehaver}
    if restart_rule:
        starved |= {t for t in result.misuse_restarts if t != misbehaver}
    return bool(starved)


def _starves_tm(result, misbehaver):
    return misbehaver in result.starved_in_misuse


@dataclass
class MatrixRow:
    lock: str
    expected: tuple  # (violates_mutex, starves_tm, starves_others); None = N/A
    violates: list = field(default_factory=list)
    starves_tm: list = field(default_factory=list)
    starves_others: list = field(default_factory=list)
    hardened: list = field(default_factory=list)
    remedy: str = ""
    restart_rule: bool = False
    note: str = ""

    def evaluate(self, bounds=None):
        """Run all evidence and compare against the expected row."""
        out = {
            "lock": self.lock,
            "expected": list(self.expected),
            "remedy": self.remedy,
            "note": self.note,
        }
        if not (self.violates or self.starves_tm or self.starves_others):
            out.update(observed=None, hardened_clean=None, ok=True, skipped=True)
            return out

        def col(evidence, judge):
            results = []
            for ev in evidence:
                sc = get_scenario(ev.scenario)
                r = ev.run("original", bounds=bounds)
                results.append(judge(r, sc.misbehaver))
            return any(results)

        def j_violates(r, _m):
            return r.max_occupancy > 1 or r.rw_violation

        def j_tm(r, m):
            return _starves_tm(r, m)

        def j_others(r, m):
            return _starves_others(r, m, self.restart_rule)

        observed = (
            col(self.violates, j_violates) if self.violates else None,
            col(self.starves_tm, j_tm) if self.starves_tm else None,
            col(self.starves_others, j_others) if self.starves_others else None,
        )
        ok = True
        for exp, obs in zip(self.expected, observed):
            if exp is None or obs is None:
                continue
            ok = ok and (exp == obs)

        hardened_clean = None
        detected = 0
        if self.hardened:
            hardened_clean = True
            for ev in self.hardened:
                sc = get_scenario(ev.scenario)
                r = ev.run("hardened", bounds=bounds)
                bad = (
                    r.max_occupancy > 1
                    or r.rw_violation
                    or bool(r.starved)
                    or bool(r.misuse_restarts)
                )
                hardened_clean = hardened_clean and not bad
                detected = max(
                    detected,
                    r.misuse_detected if hasattr(r, "misuse_detected") else r.misuse_detected_max,
                )
            ok = ok and hardened_clean and detected >= 1

        out.update(
            observed=list(observed),
            hardened_clean=hardened_clean,
            misuse_detected=detected,
            ok=ok,
            skipped=False,
        )
        return out


E = Evidence

TABLE1 = [
    MatrixRow("tas", (True, False, None),
              violates=[E("tas_waiter_admitted")],
              starves_tm=[E("tas_waiter_admitted")],
              hardened=[E("tas_waiter_admitted")],
              remedy="store the owner pid in the lock word",
              note="no liveness guarantee by design; starves-others not applicable"),
    MatrixRow("tatas", (True, False, None),
              violates=[E("tatas_waiter_admitted")],
              starves_tm=[E("tatas_waiter_admitted")],
              hardened=[E("tatas_waiter_admitted")],
              remedy="store the owner pid in the lock word",
              note="test-and-test-and-set; same word remedy as plain test-and-set"),
    MatrixRow("tatas_bo", (True, False, None),
              violates=[E("tatas_bo_waiter_admitted", max_steps=300)],
              starves_tm=[E("tatas_bo_waiter_admitted", max_steps=300)],
              hardened=[E("tatas_bo_waiter_admitted", max_steps=300)],
              remedy="store the owner pid in the lock word",
              note="exponential backoff variant; same word remedy"),
    MatrixRow("ticket", (True, False, True),
              violates=[E("ticket_immediate_successor")],
              starves_tm=[E("ticket_immediate_successor"), E("ticket_nowserving_regress", mode="replay")],
              starves_others=[E("ticket_nowserving_regress", mode="replay")],
              hardened=[E("ticket_immediate_successor"), E("ticket_nowserving_regress", mode="replay")],
              remedy="owner pid field: verify, clear, then bump now-serving"),
    MatrixRow("abql", (True, False, False),
              violates=[E("abql_uninit_place")],
              starves_tm=[E("abql_uninit_place")],
              starves_others=[E("abql_uninit_place")],
              hardened=[E("abql_uninit_place")],
              remedy="place handle starts invalid; release checks and re-invalidates it"),
    MatrixRow("gt", (False, False, True),
              violates=[E("gt_toggle_revert", max_steps=300)],
              starves_tm=[E("gt_toggle_revert", max_steps=300)],
              starves_others=[E("gt_toggle_revert", max_steps=300)],
              hardened=[E("gt_toggle_revert", max_steps=300)],
              remedy="holder flag array set on acquire, required by release"),
    MatrixRow("mcs", (True, True, False),
              violates=[E("mcs_stale_next", max_steps=300)],
              starves_tm=[E("mcs_loop_forever")],
              starves_others=[E("mcs_stale_next", max_steps=300), E("mcs_loop_forever")],
              hardened=[E("mcs_stale_next", max_steps=400), E("mcs_loop_forever")],
              remedy="locked flag doubles as owner marker; next scrubbed after handoff"),
    MatrixRow("clh", (True, False, True),
              violates=[E("clh_fig6_reenqueue", mode="replay")],
              starves_tm=[E("clh_stale_misuse"), E("clh_fig6_reenqueue", mode="replay")],
              starves_others=[E("clh_lost_update", mode="replay")],
              hardened=[E("clh_stale_misuse"), E("clh_fig6_reenqueue", mode="replay"),
                        E("clh_lost_update", mode="replay")],
              remedy="node's prev link is null except mid-acquisition; release checks and re-nulls"),
    MatrixRow("mcs_k42", (True, True, True),
              violates=[E("mcsk42_succ_admitted", max_steps=300)],
              starves_tm=[E("mcsk42_tm_starves")],
              starves_others=[E("mcsk42_holder_starves", mode="replay")],
              remedy="not built: would repurpose node fields to carry the owner pid",
              note="original only; also corrupts abandoned stack nodes (see mcsk42_stack_write)"),
    MatrixRow("hemlock", (False, True, False),
              violates=[E("hemlock_self_starve")],
              starves_tm=[E("hemlock_self_starve")],
              starves_others=[E("hemlock_self_starve")],
              hardened=[E("hemlock_self_starve")],
              remedy="grant word holds an owner sentinel while held; null means misuse"),
    MatrixRow("hmcs", (True, True, False),
              violates=[E("hmcs_stale_next", mode="replay")],
              starves_tm=[E("hmcs_fresh_misuse", max_steps=300)],
              starves_others=[E("hmcs_fresh_misuse", max_steps=300)],
              hardened=[E("hmcs_fresh_misuse", max_steps=300), E("hmcs_stale_next", max_steps=400)],
              remedy="leaf node status doubles as owner marker, checked before any level moves"),
    MatrixRow("hclh", (False, False, False),
              remedy="not applicable: release flips an un-enqueued node, which nobody watches",
              note="immune by construction; documented, not built"),
    MatrixRow("hbo", (True, False, None),
              violates=[E("hbo_waiter_admitted", max_steps=300)],
              starves_tm=[E("hbo_waiter_admitted", max_steps=300)],
              hardened=[E("hbo_waiter_admitted", max_steps=300)],
              remedy="pack owner pid next to the domain id in the lock word",
              note="backoff family: liveness column not applicable"),
    MatrixRow("ctkt", (True, False, True),
              violates=[E("ctkt_local_misuse", max_steps=300)],
              starves_tm=[E("ctkt_local_misuse", max_steps=300)],
              starves_others=[E("ctkt_local_misuse", max_steps=300)],
              hardened=[E("ctkt_local_misuse", max_steps=300)],
              remedy="owner pid on the local ticket lock, checked before any counter moves"),
    MatrixRow("crw_np", (True, False, True),
              violates=[E("rw_read_misuse", mode="replay")],
              starves_tm=[E("rw_read_misuse", mode="replay")],
              starves_others=[E("rw_read_misuse", mode="replay")],
              hardened=[E("rw_wunlock_misuse", max_steps=300)],
              remedy="write side via the cohort's local ticket check; read side unsolved",
              note="hardened column covers the write side only: stray departs stay undetectable"),
    MatrixRow("peterson", (False, False, False),
              violates=[E("peterson_misuse"), E("peterson_both_misuse")],
              starves_tm=[E("peterson_misuse"), E("peterson_both_misuse")],
              starves_others=[E("peterson_misuse"), E("peterson_both_misuse")],
              remedy="not applicable: a stray release only retracts the caller's own intent"),
    MatrixRow("fisher", (True, False, False),
              violates=[E("fisher_misuse", max_steps=300)],
              starves_tm=[E("fisher_misuse", max_steps=300)],
              starves_others=[E("fisher_misuse", max_steps=300)],
              hardened=[E("fisher_misuse", max_steps=300)],
              remedy="compare the word against the caller's id before clearing"),
    MatrixRow("lamport1", (True, False, True),
              violates=[E("lamport1_misuse", max_steps=300)],
              starves_tm=[E("lamport1_misuse", max_steps=300)],
              starves_others=[E("lamport1_misuse", max_steps=300)],
              hardened=[E("lamport1_misuse", max_steps=300)],
              remedy="compare y against the caller's id before clearing",
              restart_rule=True,
              note="starves-others scored via misuse-caused entry restarts"),
    MatrixRow("lamport2", (True, False, True),
              violates=[E("lamport2_misuse", max_steps=350)],
              starves_tm=[E("lamport2_misuse", max_steps=350)],
              starves_others=[E("lamport2_misuse", max_steps=350)],
              hardened=[E("lamport2_misuse", max_steps=350)],
              remedy="compare y against the caller's id before clearing",
              restart_rule=True,
              note="starves-others scored via misuse-caused entry restarts"),
    MatrixRow("bakery", (False, False, False),
              violates=[E("bakery_misuse", max_steps=400)],
              starves_tm=[E("bakery_misuse", max_steps=400)],
              starves_others=[E("bakery_misuse", max_steps=400)],
              remedy="not applicable: release rewrites an already-zero ticket"),
]


def table1_suite(locks=None, bounds=None):
    """Evaluate the whole misuse matrix; one entry per implemented lock."""
    rows = []
    for row in TABLE1:
        if locks and row.lock not in locks:
            continue
        rows.append(row.evaluate(bounds=bounds))
    return {
        "rows": rows,
        "all_ok": all(r["ok"] for r in rows),
    }


def render_table(result, pretty=False):
    if not pretty:
        return json.dumps(result, indent=2, sort_keys=True)
    mark = {True: "yes", False: "no", None: "n/a"}
    lines = [
        f"{'lock':<10} {'violates':>9} {'starves-self':>13} {'starves-rest':>13} "
        f"{'hardened':>9} {'status':>7}",
    ]
    for r in result["rows"]:
        if r.get("skipped"):
            obs = ["-", "-", "-"]
        else:
            obs = [mark[v] for v in r["observed"]]
        exp = [mark[v] for v in r["expected"]]
        cells = [f"{o}" if o == e or e == "n/a" else f"{o}!={e}" for o, e in zip(obs, exp)]
        hc = r.get("hardened_clean")
        lines.append(
            f"{r['lock']:<10} {cells[0]:>9} {cells[1]:>13} {cells[2]:>13} "
            f"{mark[hc] if hc is not None else '-':>9} {'PASS' if r['ok'] else 'FAIL':>7}"
        )
    lines.append(f"overall: {'PASS' if result['all_ok'] else 'FAIL'}")
    return "\n".join(lines)

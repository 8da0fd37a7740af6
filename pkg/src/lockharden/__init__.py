"""lockharden: spinlock misuse laboratory.

Implements a family of spinlock protocols in original and hardened
(unbalanced-release-detecting) variants over a backend-switchable shared
word abstraction, plus the machinery to demonstrate misuse pathologies
deterministically, stress the hardened locks on real threads, and measure
the hardening overhead.
"""

from .core import (
    HARDENED,
    MISUSE_DETECTED,
    ORIGINAL,
    RELEASED,
    CapacityExceeded,
    Mutex,
    ReleaseStatus,
    RwMutex,
    ThreadLimitExceeded,
    ThreadRegistry,
)
from .locks import ALGORITHMS, make_mutex, variants_of
from .scenario import Bounds, ExploreSummary, Scenario, Verdict, explore, replay
from .substrate import (
    ACQ,
    NULL,
    InvalidSchedule,
    NativeSpace,
    SimHost,
    run_native,
)

__all__ = [
    "ACQ",
    "ALGORITHMS",
    "Bounds",
    "CapacityExceeded",
    "ExploreSummary",
    "HARDENED",
    "InvalidSchedule",
    "MISUSE_DETECTED",
    "Mutex",
    "NULL",
    "NativeSpace",
    "ORIGINAL",
    "RELEASED",
    "ReleaseStatus",
    "RwMutex",
    "Scenario",
    "SimHost",
    "ThreadLimitExceeded",
    "ThreadRegistry",
    "Verdict",
    "explore",
    "make_mutex",
    "replay",
    "run_native",
    "variants_of",
]

__version__ = "0.1.0"

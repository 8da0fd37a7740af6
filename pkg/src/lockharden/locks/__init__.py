"""Lock registry: algorithm name -> implementation class."""

from __future__ import annotations

from .basic import AbqlLock, GtLock, TasLock, TatasBoLock, TatasLock, TicketLock
from .hier import CohortTktTktLock, HboLock, HmcsLock
from .queue import ClhLock, HemlockLock, McsK42Lock, McsLock
from .rw import CrwNpLock
from .sw import BakeryLock, FisherLock, LamportOneLock, LamportTwoLock, PetersonLock

ALGORITHMS = {
    cls.name: cls
    for cls in (
        TasLock,
        TatasLock,
        TatasBoLock,
        TicketLock,
        AbqlLock,
        GtLock,
        McsLock,
        ClhLock,
        McsK42Lock,
        HemlockLock,
        HmcsLock,
        HboLock,
        CohortTktTktLock,
        PetersonLock,
        FisherLock,
        LamportOneLock,
        LamportTwoLock,
        BakeryLock,
        CrwNpLock,
    )
}


def variants_of(name):
    return ALGORITHMS[name].variants


def make_mutex(name, space, variant, **params):
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown lock algorithm {name!r}") from None
    return cls(space, variant, **params)

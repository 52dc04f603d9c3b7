from __future__ import annotations

from typing import Sequence

from .base import INF, Domain
from .congruence import CongruenceDomain
from .interval import IntervalDomain
from .octagon import OctagonDomain
from .product import CongruenceOctagonDomain

DOMAINS: dict[str, type[Domain]] = {
    "interval": IntervalDomain,
    "octagon": OctagonDomain,
    "congruence": CongruenceDomain,
    "comp": CongruenceOctagonDomain,
}


def make_domain(name: str, variables: Sequence[str]) -> Domain:
    try:
        cls = DOMAINS[name]
    except KeyError:
        raise ValueError(f"unknown domain {name!r}; choose from {', '.join(DOMAINS)}") from None
    return cls(sorted(variables))


__all__ = [
    "INF",
    "Domain",
    "DOMAINS",
    "make_domain",
    "IntervalDomain",
    "OctagonDomain",
    "CongruenceDomain",
    "CongruenceOctagonDomain",
]

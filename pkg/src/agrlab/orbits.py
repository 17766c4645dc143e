"""Reduced phase-space exploration with singularity recovery jumps.

The reduced dynamics on F_p x F_p is iterated pointwise; at singular
points of the reduced step the orbit continues with the recovery value m
steps ahead (the jump semantics is this module's extension of the
commuting-diagram property, and is reported as such).  Autonomous
families decompose the finite phase space into cycles and transients;
non-autonomous families only admit trail-length statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .exactnum import PFp, check_prime
from .maps import MapFamily, family_name, family_params, is_autonomous, step_kind, step_reduced
from .agr import AGRQuery, find_recovery_step

__all__ = [
    "PLAIN",
    "RecoveryJump",
    "Cycle",
    "HitUnrecoverable",
    "LeftDomain",
    "Truncated",
    "OrbitRecord",
    "PhasePortrait",
    "trace_orbit",
    "phase_portrait",
]


class _Kind:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


#: Departure by one regular reduced step.
PLAIN = _Kind("Plain")


@dataclass(frozen=True)
class RecoveryJump:
    """Departure from a singular point via the m-step recovery value."""

    m: int


@dataclass(frozen=True)
class Cycle:
    length: int


@dataclass(frozen=True)
class HitUnrecoverable:
    point: tuple


@dataclass(frozen=True)
class LeftDomain:
    pass


@dataclass(frozen=True)
class Truncated:
    pass


@dataclass
class OrbitRecord:
    start: tuple
    trail: list  # (point, PLAIN | RecoveryJump)
    terminal: object  # Cycle | HitUnrecoverable | LeftDomain | Truncated


@dataclass
class PhasePortrait:
    p: int
    family: str
    params: dict
    n0: int
    max_steps: int
    autonomous: bool
    points_total: int = 0
    cycle_length_histogram: dict = field(default_factory=dict)
    transient_length_histogram: dict = field(default_factory=dict)
    singular_entries: int = 0
    unrecoverable: int = 0
    out_of_domain: int = 0
    truncated: int = 0

    def category_totals(self) -> dict:
        on_cycle = sum(k * v for k, v in self.cycle_length_histogram.items())
        if self.autonomous:
            transients = sum(self.transient_length_histogram.values())
        else:
            # trail lengths are informational; starts are already counted
            # in the unrecoverable/truncated categories
            transients = 0
        return {
            "on_cycle": on_cycle,
            "transients": transients,
            "unrecoverable": self.unrecoverable,
            "out_of_domain": self.out_of_domain,
            "truncated": self.truncated,
        }

    def conserved(self) -> bool:
        return sum(self.category_totals().values()) == self.points_total


def _advance(family, p, n, point, query):
    """One move of the extended dynamics.

    Returns (next_point, kind, n_advance) or (None, None, None) when the
    point is singular and unrecoverable.
    """
    if step_kind(family, n, point, p) == "regular":
        return step_reduced(family, n, point, p), PLAIN, 1
    rr = find_recovery_step(query, point, n)
    if rr.minimal_m is None:
        return None, None, None
    return rr.recovered_value, RecoveryJump(rr.minimal_m), rr.minimal_m


def trace_orbit(
    family: MapFamily,
    p: int,
    n0: int,
    start: tuple[PFp, PFp],
    max_steps: int,
    *,
    m_max: int = 8,
    lifts_per_residue: int = 3,
    rng_seed: int = 0,
) -> OrbitRecord:
    """Iterate the reduced dynamics from one residue point.

    Singular points depart by their recovery jump; termination on cycle
    closure (autonomous families), an unrecoverable point, a start outside
    the finite plane, or the step budget.
    """
    check_prime(p)
    sx, sy = start
    if not (sx.is_finite and sy.is_finite):
        return OrbitRecord(start, [], LeftDomain())
    query = AGRQuery(
        family,
        p,
        (n0, n0),
        m_max=m_max,
        lifts_per_residue=lifts_per_residue,
        rng_seed=rng_seed,
    )
    autonomous = is_autonomous(family)
    seen: dict = {}
    trail: list = []
    point = start
    n = n0
    while len(trail) < max_steps:
        if autonomous:
            if point in seen:
                return OrbitRecord(start, trail, Cycle(len(trail) - seen[point]))
            seen[point] = len(trail)
        nxt, kind, dn = _advance(family, p, n, point, query)
        if nxt is None:
            return OrbitRecord(start, trail, HitUnrecoverable(point))
        trail.append((point, kind))
        point = nxt
        n += dn
    return OrbitRecord(start, trail, Truncated())


def _portrait_autonomous(family, p, n0, portrait, query):
    """Cycle/transient decomposition of the extended dynamics.

    The extended map sends each finite residue to its plain image or its
    recovery value; unrecoverable points are absorbing sinks.  A single
    memoized pass classifies every point.
    """
    next_cache: dict = {}

    def successor(pt):
        if pt not in next_cache:
            nxt, _, _ = _advance(family, p, n0, pt, query)
            next_cache[pt] = nxt
        return next_cache[pt]

    # fate: ("cycle", length) for on-cycle points,
    #       ("transient", distance) for points reaching a cycle,
    #       ("unrec",) for points absorbed by an unrecoverable sink
    fate: dict = {}
    for xr in range(p):
        for yr in range(p):
            start = (PFp.finite(xr, p), PFp.finite(yr, p))
            if start in fate:
                continue
            path = [start]
            index = {start: 0}
            while True:
                cur = path[-1]
                nxt = successor(cur)
                if nxt is None:
                    for pt in path:
                        fate[pt] = ("unrec",)
                    break
                if nxt in index:
                    # new cycle discovered inside the current path
                    j = index[nxt]
                    length = len(path) - j
                    portrait.cycle_length_histogram[length] = (
                        portrait.cycle_length_histogram.get(length, 0) + 1
                    )
                    for pt in path[j:]:
                        fate[pt] = ("cycle", length)
                    for dist, pt in enumerate(reversed(path[:j]), start=1):
                        fate[pt] = ("transient", dist)
                    break
                known = fate.get(nxt)
                if known is not None:
                    if known[0] == "unrec":
                        for pt in path:
                            fate[pt] = ("unrec",)
                    else:
                        base = known[1] if known[0] == "transient" else 0
                        for dist, pt in enumerate(reversed(path), start=1):
                            fate[pt] = ("transient", base + dist)
                    break
                path.append(nxt)
                index[nxt] = len(path) - 1
    for f in fate.values():
        if f[0] == "transient":
            portrait.transient_length_histogram[f[1]] = (
                portrait.transient_length_histogram.get(f[1], 0) + 1
            )
        elif f[0] == "unrec":
            portrait.unrecoverable += 1


def _portrait_nonautonomous(family, p, n0, max_steps, portrait, query_kw):
    for xr in range(p):
        for yr in range(p):
            start = (PFp.finite(xr, p), PFp.finite(yr, p))
            rec = trace_orbit(family, p, n0, start, max_steps, **query_kw)
            if isinstance(rec.terminal, HitUnrecoverable):
                portrait.unrecoverable += 1
            else:
                portrait.truncated += 1
            length = len(rec.trail)
            portrait.transient_length_histogram[length] = (
                portrait.transient_length_histogram.get(length, 0) + 1
            )


def phase_portrait(
    family: MapFamily,
    p: int,
    n0: int = 0,
    max_steps: int = 64,
    *,
    m_max: int = 8,
    lifts_per_residue: int = 3,
    rng_seed: int = 0,
) -> PhasePortrait:
    """Trace every residue point of F_p x F_p.

    Autonomous families are decomposed into cycles and transients of the
    extended (recovery-jump) dynamics; non-autonomous families report
    trail-length statistics only, since cycles are ill-defined when the
    map changes with the step index.
    """
    check_prime(p)
    portrait = PhasePortrait(
        p=p,
        family=family_name(family),
        params=family_params(family),
        n0=n0,
        max_steps=max_steps,
        autonomous=is_autonomous(family),
        points_total=p * p,
    )
    for xr in range(p):
        for yr in range(p):
            pt = (PFp.finite(xr, p), PFp.finite(yr, p))
            if step_kind(family, n0, pt, p) != "regular":
                portrait.singular_entries += 1
    query = AGRQuery(
        family,
        p,
        (n0, n0),
        m_max=m_max,
        lifts_per_residue=lifts_per_residue,
        rng_seed=rng_seed,
    )
    if portrait.autonomous:
        _portrait_autonomous(family, p, n0, portrait, query)
    else:
        _portrait_nonautonomous(
            family,
            p,
            n0,
            max_steps,
            portrait,
            dict(m_max=m_max, lifts_per_residue=lifts_per_residue, rng_seed=rng_seed),
        )
    return portrait

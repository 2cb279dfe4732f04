"""Programs for paths, trees and rings.

``path6``/``tree6`` add a waiting pair (F1, F2) to the four-agent pattern so
that some agent in the home component always ends up knowing the black hole.
``path4``/``tree4``/``ring4`` are the pattern alone; a knower then sweeps
whatever component it stands in.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .common import (RingSpace, TreeSpace, make_walker, sweep_port, walk_bound, with_loc)
from .pattern import PatternDriver, SGMem, roles_for

ALGORITHMS = ("path6", "path4", "tree6", "tree4", "ring4")


@dataclass(frozen=True)
class FMem:
    aid: int
    role: str
    loc: Any = ()
    pending: int = 0
    know: Any = None
    mode: str = "wait"
    phase: int = 0
    deadline: int | None = None
    walker: Any = None
    start: int = 0
    port: int = 0
    partner: bool = False

    @property
    def group(self) -> str:
        return "F"


@dataclass(frozen=True)
class IdleMem:
    aid: int
    loc: Any = ()
    pending: int = 0
    know: Any = None

    @property
    def group(self) -> str:
        return "IDLE"


def _retreat(space, loc):
    if isinstance(space, RingSpace):
        return 3 - loc[1]
    return loc[-1][1] if loc else 0


class PathTreeProgram:
    """Program set for one of the path/tree/ring algorithms."""

    def __init__(self, algorithm: str, k: int, n_known: int | None = None):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.name = algorithm
        self.kind = {"path": "path", "tree": "tree", "ring": "ring"}[algorithm[:4]]
        self.waiting_pair = algorithm.endswith("6")
        if self.kind == "ring":
            if not n_known or n_known < 3:
                raise ValueError("ring4 needs n_known >= 3")
            self.space = RingSpace(int(n_known))
        else:
            self.space = TreeSpace()
        self.n_known = n_known
        self.k = k
        self.roles = roles_for(min(k, 4))
        self.driver = PatternDriver(self.space, self._walker, self._bound, self._terminal,
                                    full_team=len(self.roles) == 4)

    # -- configuration hooks

    def _walker(self, phase, home_degree, previous=None):
        return make_walker(self.kind, phase, home_degree, self.n_known)

    def _bound(self, phase, home_degree):
        if self.kind == "ring":
            return None
        return walk_bound(self.kind, phase, home_degree)

    # -- program interface

    def initial_memory(self, aid: int, k: int):
        start = self.space.start()
        if aid < len(self.roles):
            return SGMem(aid, self.roles[aid], self.roles, loc=start)
        if self.waiting_pair and aid == 4 and self.k >= 5:
            return FMem(aid, "F1", loc=start)
        if self.waiting_pair and aid == 5 and self.k >= 6:
            return FMem(aid, "F2", loc=start, partner=True)
        return IdleMem(aid, loc=start)

    def decide(self, aid, inp, mem):
        mem = with_loc(mem, inp, self.space)
        if isinstance(mem, SGMem):
            return self.driver.decide(mem, inp)
        if isinstance(mem, FMem):
            return self._waiting_pair(mem, inp)
        return 0, mem

    def describe(self, mem) -> dict:
        out = {"group": mem.group, "role": getattr(mem, "role", "idle"), "mode": getattr(mem, "mode", "idle"),
               "bbh": mem.know}
        return out

    def belief(self, mem):
        """Black-hole belief as (space kind, key), or None."""
        if mem.know is None:
            return None
        return (self.space.kind, mem.know)

    # -- knowers

    def _sweep(self, m, inp):
        sp = self.space
        if sp.key(m.loc) == m.know:
            port = _retreat(sp, m.loc)
        else:
            port = sweep_port(inp.degree, inp.arrival_port, sp.blocked_port(m.loc, m.know))
        return port, replace(m, pending=port, mode="sweep")

    def _terminal(self, m, inp):
        sp = self.space
        if m.mode in ("term", "block", "pattern"):
            if self.waiting_pair and sp.is_far(m.loc, m.know):
                m = self._plan_rendezvous(m)
            else:
                m = replace(m, mode="sweep")
        if m.mode == "rv":
            c_len = len(m.know) + 1
            if len(m.loc) > c_len:
                port = m.loc[-1][1]
                return port, replace(m, pending=port)
            if inp.round == m.aux:
                port = m.loc[-1][1]
                return port, replace(m, pending=port, mode="rv2")
            if inp.round > m.aux:
                return self._sweep(replace(m, mode="sweep"), inp)
            return 0, m
        if m.mode == "rv2":
            port = m.loc[-1][1]
            return port, replace(m, pending=port, mode="sweep")
        return self._sweep(m, inp)

    def _plan_rendezvous(self, m):
        visits = m.walker.visits if m.walker is not None else ()
        if m.deadline is None or m.know not in visits:
            return replace(m, mode="sweep")
        j = visits.index(m.know)
        return replace(m, mode="rv", aux=m.deadline + 3 * (j - 1))

    # -- F1 / F2

    def _waiting_pair(self, m: FMem, inp):
        sp = self.space
        if m.know is None:
            for aid, other in inp.colocated:
                k = getattr(other, "know", None)
                if aid != m.aid and k is not None:
                    m = replace(m, know=k)
                    break
        if m.know is not None:
            return self._sweep(m, inp)
        r = inp.round
        if m.mode == "wait":
            for aid, other in inp.colocated:
                if isinstance(other, SGMem) and other.deadline is not None:
                    if other.phase > m.phase or (other.phase == m.phase and m.deadline is None):
                        m = replace(m, phase=other.phase, deadline=other.deadline)
            if m.deadline is None or r < m.deadline:
                return 0, m
            m = replace(m, mode="walk", start=r, walker=self._walker(m.phase, inp.degree))
        t = (r - m.start) % 3
        if t == 0:
            port = m.walker.next_port()
            if port is None:
                return 0, replace(m, mode="done")
            if m.role == "F1":
                return port, replace(m, port=port, pending=port)
            return 0, replace(m, port=port)
        if t == 1:
            if m.role == "F1":
                w = m.walker.advance(m.port, inp.degree, inp.arrival_port)
                back = inp.arrival_port
                return back, replace(m, walker=w, pending=back)
            return 0, m
        # t == 2: regroup and step forward together
        if m.role == "F2":
            partner = None
            for aid, other in inp.colocated:
                if isinstance(other, FMem) and other.role == "F1":
                    partner = other
            if partner is None:
                know = sp.step_key(m.loc, m.port)
                return self._sweep(replace(m, know=know), inp)
            m = replace(m, walker=partner.walker)
        port = m.port
        return port, replace(m, pending=port)


def resolve_belief(instance, belief):
    """Map an agent's (kind, key) belief to a node of the true graph."""
    if belief is None:
        return None
    kind, key = belief
    g = instance.graph
    v = instance.home
    if kind == "route":
        for port in key:
            if not 1 <= port <= g.degree(v):
                return None
            v, _ = g.follow(v, port)
        return v
    if kind == "ring":
        port = 1
        for _ in range(key):
            v, entry = g.follow(v, port)
            port = 3 - entry
        return v
    raise ValueError(kind)

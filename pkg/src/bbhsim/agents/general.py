"""Home-component exploration of arbitrary bounded-degree graphs.

Agents split into three groups by ID:

* the Marker (highest ID) never leaves home, which makes home recognisable;
* SG (the four lowest IDs) runs the moving pattern over a map-building walk
  whose move budget doubles every phase;
* the rest wait at home as LG and leave once SG misses the deadline of its
  current phase.

An agent that learns where the black hole is settles next to it as an anchor,
holding the port that leads there. LG keeps building its own map, but before
the whole group steps to a node ``v`` it has never stood on, two explorers go
first: one stays on ``v`` and relays to the group, the other visits every
other neighbour of ``v``. Finding an anchor that points back at ``v``, losing
the visiting explorer, or losing the relay tells the group where the black
hole is, and one of the three settles as an anchor. Each such event shrinks
the group. Once fewer than three remain they walk the map on their own,
skipping anchored ports.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .common import TreeSpace, with_loc
from .mapping import MapWalker
from .pattern import PatternDriver, SGMem, port_between, roles_for, slot_key

SG_SIZE = 4


def min_agents(delta: int) -> int:
    return 3 * delta + 3


@dataclass(frozen=True)
class MarkerMem:
    aid: int
    loc: Any = ()
    pending: int = 0
    know: Any = None

    @property
    def group(self) -> str:
        return "MARKER"


@dataclass(frozen=True)
class LGMem:
    aid: int
    mode: str = "wait"          # wait, ready, explore, anchor
    gen: int = 0
    members: tuple = ()
    walker: Any = None
    phase: int = 0
    deadline: int | None = None
    moved: int = 0              # port of last round's group move
    role: str = "M"             # E1, E2, E3 or M while exploring
    start: int = 0              # round the current probe of v began
    port: int = 0               # port at u leading to v
    back: int = 0               # port at v leading to u
    probes: tuple = ()          # ports of v the visiting explorer checks
    news: Any = None            # what the relay carries to u
    anchor: int = 0
    know: Any = None
    loc: Any = ()
    pending: int = 0

    @property
    def group(self) -> str:
        if self.mode == "anchor":
            return "ANCHOR"
        if self.mode == "wait" or len(self.members) >= 3:
            return "LG"
        return "FREE"


def anchor_port(mem) -> int:
    if isinstance(mem, LGMem) and mem.mode == "anchor":
        return mem.anchor
    if isinstance(mem, SGMem) and mem.mode == "anchor":
        return mem.aux or 0
    return 0


def _anchors(inp) -> list[int]:
    """Ports guarded here, counting an agent that arrived to settle this round."""
    ports = {p for _, o in inp.colocated if (p := anchor_port(o))}
    ports |= {o.news[1] for _, o in inp.colocated if isinstance(o, LGMem) and o.mode == "anchor-go"}
    return sorted(ports)


def _marked(inp) -> bool:
    return any(getattr(o, "group", None) == "MARKER" for _, o in inp.colocated)


class GraphHomeProgram:
    """Program set for ``k >= 3*delta + 3`` agents on a graph of maximum degree ``delta``."""

    name = "graph3d3"

    def __init__(self, k: int, delta_hint: int | None = None):
        if k < SG_SIZE + 4:
            raise ValueError("graph3d3 needs at least 8 agents")
        self.k = k
        self.delta_hint = delta_hint
        self.space = TreeSpace()
        self.roles = roles_for(SG_SIZE)
        self.marker = k - 1
        self.lg_ids = tuple(range(SG_SIZE, k - 1))
        self.driver = PatternDriver(self.space, self._walker, self._bound, self._sg_terminal, full_team=True)

    @staticmethod
    def _walker(phase, home_degree, previous=None):
        return MapWalker.fresh(home_degree, budget=2 ** phase, previous=previous)

    @staticmethod
    def _bound(phase, home_degree):
        return 2 * (5 * 2 ** phase + 2)

    # -- program interface

    def initial_memory(self, aid: int, k: int):
        if aid < SG_SIZE:
            return SGMem(aid, self.roles[aid], self.roles, loc=())
        if aid == self.marker:
            return MarkerMem(aid)
        return LGMem(aid, members=self.lg_ids)

    def decide(self, aid, inp, mem):
        mem = with_loc(mem, inp, self.space)
        if isinstance(mem, SGMem):
            return self.driver.decide(mem, inp)
        if isinstance(mem, LGMem):
            return self._lg(mem, inp)
        return 0, mem

    def describe(self, mem) -> dict:
        role = getattr(mem, "role", mem.group)
        if isinstance(mem, LGMem):
            role = {"anchor": "A", "wait": "W"}.get(mem.mode, mem.role if mem.mode == "explore" else "G")
        elif isinstance(mem, SGMem) and mem.mode == "anchor":
            role = "A"
        elif isinstance(mem, MarkerMem):
            role = "H"
        return {"group": mem.group, "role": role, "mode": getattr(mem, "mode", "marker"), "bbh": mem.know}

    def belief(self, mem):
        return None if mem.know is None else ("route", mem.know)

    def anchor_of(self, mem):
        return anchor_port(mem) or None

    def map_of(self, mem):
        walker = getattr(mem, "walker", None)
        return None if walker is None else walker.rp

    def is_free(self, mem) -> bool:
        return isinstance(mem, LGMem) and mem.mode in ("ready", "explore")

    def lg_generation(self, mem):
        if isinstance(mem, LGMem) and mem.mode in ("ready", "explore") and len(mem.members) >= 3:
            return mem.gen
        return None

    # -- SG knowers settle next to the black hole

    def _sg_terminal(self, m: SGMem, inp):
        sp = self.space
        if m.mode in ("term", "block", "pattern"):
            m = replace(m, mode="settle", aux=self._settle_route(m))
        if m.mode == "settle":
            ports, hold = m.aux
            if ports:
                return ports[0], replace(m, aux=(ports[1:], hold), pending=ports[0])
            return 0, replace(m, mode="anchor", aux=hold or sp.blocked_port(m.loc, m.know))
        return 0, m

    def _settle_route(self, m: SGMem) -> tuple:
        """Ports from the knower's slot to the nearest slot next to the black hole,
        and the port to hold there."""
        sp = self.space
        bslot = next((s for s in (0, 1, 2) if (s < 2 or m.p12) and slot_key(m, s, sp) == m.know), None)
        if bslot is None:
            return (), 0
        s = m.slot
        if s > bslot:
            target = bslot + 1
        elif s < bslot:
            target = bslot - 1
        else:
            target = bslot - 1 if bslot >= 1 and port_between(m, s, s - 1) else bslot + 1
        ports = []
        while s != target:
            nxt = s + (1 if target > s else -1)
            p = port_between(m, s, nxt)
            if not p:
                return tuple(ports), 0
            ports.append(p)
            s = nxt
        return tuple(ports), port_between(m, target, bslot)

    # -- LG

    def _lg(self, m: LGMem, inp):
        r = inp.round
        if m.mode == "anchor":
            return 0, m
        if m.moved:
            w = m.walker.advance(m.moved, inp.degree, inp.arrival_port, _marked(inp))
            m = replace(m, walker=w, moved=0)
        if m.mode == "wait":
            for _, other in inp.colocated:
                if isinstance(other, SGMem) and other.deadline is not None and other.phase > m.phase:
                    m = replace(m, phase=other.phase, deadline=other.deadline)
            if m.deadline is None or r < m.deadline:
                return 0, m
            m = replace(m, mode="ready", walker=MapWalker.fresh(inp.degree, loop=True))
        if m.mode == "explore":
            return self._explore(m, inp)
        if m.mode == "anchor-go":
            return 0, replace(m, mode="anchor", anchor=m.news[1], know=m.news[2])
        return self._ready(m, inp)

    def _ready(self, m: LGMem, inp):
        w = m.walker
        for port in _anchors(inp):
            w = w.block(port)
        m = replace(m, walker=w, mode="ready", role="M", news=None, probes=())
        port = w.next_port()
        if port is None:
            return 0, m
        if len(m.members) < 3 or w.next_is_safe():
            return port, replace(m, moved=port, pending=port)
        e = m.members[:3]
        role = {e[0]: "E1", e[1]: "E2", e[2]: "E3"}.get(m.aid, "M")
        m = replace(m, mode="explore", role=role, start=inp.round, port=port, back=0)
        if role in ("E2", "E3"):
            return port, replace(m, pending=port)
        return 0, m

    def _regroup(self, m: LGMem, inp, leaving, learned: bool):
        """Continue as the next generation without ``leaving``."""
        members = tuple(a for a in m.members if a not in leaving)
        know = m.know
        if learned:
            know = self.space.step_key(m.loc, m.port)
            m = replace(m, walker=m.walker.block(m.port))
        return self._ready(replace(m, members=members, gen=m.gen + 1, know=know), inp)

    def _explore(self, m: LGMem, inp):
        s = inp.round - m.start
        if m.role == "E2":
            return self._relay(m, inp, s)
        if m.role == "E3":
            return self._visitor(m, inp, s)
        return self._at_u(m, inp, s)

    def _probes(self, inp, back):
        blocked = set(_anchors(inp))
        return tuple(p for p in range(1, inp.degree + 1) if p != back and p not in blocked)

    def _others(self, inp, m, role):
        for a, o in inp.colocated:
            if a != m.aid and isinstance(o, LGMem) and o.mode == "explore" and o.role == role \
                    and o.start == m.start and o.gen == m.gen:
                return o
        return None

    def _relay(self, m: LGMem, inp, s):
        """E2: sits on v and carries news back to u every fourth round."""
        if s == 1:
            m = replace(m, back=inp.arrival_port, probes=self._probes(inp, inp.arrival_port))
            if not m.probes:
                return m.back, replace(m, news=("done",), pending=m.back)
            return 0, m
        j, t = divmod(s - 1, 4)
        if t == 2:
            e3 = self._others(inp, m, "E3")
            if e3 is None:
                w_key = self.space.step_key(m.loc, m.probes[j])
                news = ("lost", m.probes[j], w_key)
            elif e3.news == ("v",):
                news = ("v",)
            else:
                news = ("done",) if j == len(m.probes) - 1 else ("ok", j)
            return m.back, replace(m, news=news, pending=m.back)
        if t == 3 or (s == 2 and not m.probes):
            if m.news[0] == "lost":
                return m.port, replace(m, mode="anchor-go", pending=m.port)
            if m.news[0] == "ok":
                return m.port, replace(m, pending=m.port)
            return self._at_u(m, inp, s)
        return 0, m

    def _visitor(self, m: LGMem, inp, s):
        """E3: checks every other neighbour of v for an anchor pointing back at v."""
        if s == 1:
            m = replace(m, back=inp.arrival_port, probes=self._probes(inp, inp.arrival_port))
            if not m.probes:
                return m.back, replace(m, news=("done",), pending=m.back)
        j, t = divmod(s - 1, 4)
        last = j == len(m.probes) - 1
        if s == 2 and not m.probes:
            return self._at_u(m, inp, s)
        if t == 0:
            port = m.probes[j]
            return port, replace(m, pending=port)
        if t == 1:
            if inp.arrival_port in _anchors(inp):
                m = replace(m, news=("v",))
            return inp.arrival_port, replace(m, pending=inp.arrival_port)
        if t == 2:
            if m.news == ("v",) or last:
                return m.back, replace(m, pending=m.back, news=m.news or ("done",))
            return 0, m
        if m.news is not None:
            return self._at_u(m, inp, s)
        return 0, m

    def _at_u(self, m: LGMem, inp, s):
        """Everyone at u after a relay round: act on the news or on a missing relay."""
        if not (s == 2 or (s >= 4 and s % 4 == 0)):
            return 0, m
        relay = m if m.role == "E2" else self._others(inp, m, "E2")
        e1, e2, e3 = m.members[:3]
        taken = any(anchor_port(o) for a, o in inp.colocated if a != m.aid)
        if relay is None:
            if s == 2:
                return 0, m
            # the relay never came back: v is the black hole
            if m.role == "E1" and not taken:
                know = self.space.step_key(m.loc, m.port)
                return 0, replace(m, mode="anchor", anchor=m.port, know=know)
            return self._regroup(m, inp, (e2, e3) if taken else (e1, e2, e3), learned=True)
        news = relay.news
        if news == ("v",):
            if m.role == "E3" and not taken:
                know = self.space.step_key(m.loc, m.port)
                return 0, replace(m, mode="anchor", anchor=m.port, know=know)
            return self._regroup(m, inp, () if taken else (e3,), learned=True)
        if news[0] == "lost":
            return self._regroup(replace(m, know=news[2]), inp, (e2, e3), learned=False)
        if news == ("done",):
            return m.port, replace(m, mode="ready", role="M", moved=m.port, pending=m.port,
                                   news=None, probes=())
        return 0, m

"""The four-agent moving pattern shared by every exploring group.

Slots 0, 1, 2 are three consecutive nodes of the walk (v0, v1, v2). Between
blocks the pattern sits with F and I2 on slot 0 and L and I1 on slot 1. A
sub-phase moves it one node forward in five rounds; a reversal of the walk is
a zero-round role swap (L<->F, I1<->I2).

Every member keeps its own copy of the walk. Only L sees a new node first; the
observation spreads by meetings within the same sub-phase.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from ..engine import ProtocolFault

ROLES_FULL = ("F", "I2", "I1", "L")
ROLES_THREE = ("F", "I1", "L")

SCHEDULE = {
    "M1": {"F": (0, 0), "L": (0, 1), "I1": (0, 1), "I2": (0, 1)},
    "M2": {"F": (0, 0), "L": (1, 1), "I1": (1, 1), "I2": (1, 0)},
    "R1": {"F": (0, 0), "I2": (0, 0), "I1": (1, 1), "L": (1, 2)},
    "R2": {"F": (0, 0), "I2": (0, 1), "I1": (1, 1), "L": (2, 1)},
    "R3": {"F": (0, 0), "I2": (1, 0), "I1": (1, 1), "L": (1, 2)},
    "R4": {"F": (0, 1), "I2": (0, 1), "I1": (1, 1), "L": (2, 2)},
    "R5": {"F": (1, 1), "I2": (1, 1), "I1": (1, 2), "L": (2, 2)},
    "G1": {"F": (0, 1), "I2": (0, 1), "L": (1, 1), "I1": (1, 1)},
}
NEXT_STAGE = {"M1": "M2", "M2": "B", "R1": "R2", "R2": "R3", "R3": "R4", "R4": "R5", "R5": "B", "G1": "P"}
BLOCK_END = {"M2", "R5", "G1"}

# (stage just played, observer role, roles missing) -> slot holding the black hole
INFERENCE = {
    ("R2", "I1", frozenset({"L"})): 2,
    ("R2", "I2", frozenset({"L"})): 2,
    ("R2", "I2", frozenset({"L", "I1"})): 1,
    ("R2", "L", frozenset({"I2"})): 0,
    ("R2", "I1", frozenset({"I2"})): 0,
    ("R3", "F", frozenset({"I2"})): 1,
    ("R4", "I1", frozenset({"F", "I2"})): 0,
    ("R5", "I1", frozenset({"L"})): 2,
    ("R5", "L", frozenset({"I1"})): 1,
    ("M2", "F", frozenset({"I2"})): 1,
    ("G1", "L", frozenset({"F", "I2"})): 0,
    ("G1", "I1", frozenset({"F", "I2"})): 0,
}

FLIP = {"L": "F", "F": "L", "I1": "I2", "I2": "I1"}


def roles_for(k: int) -> tuple[str, ...]:
    if k >= 4:
        return ROLES_FULL
    if k == 3:
        return ROLES_THREE
    raise ValueError("the pattern needs at least three agents")


@dataclass(frozen=True)
class SGMem:
    aid: int
    role: str
    present: tuple
    phase: int = 1
    phase_start: int = 1
    deadline: int | None = None
    stage: str = "P"
    last: str | None = None
    slot: int = 0
    walker: Any = None
    d0: int = 0
    d1: int = 0
    d2: int = 0
    p01: int = 0
    p10: int = 0
    p12: int = 0
    p21: int = 0
    loc0: Any = None
    loc1: Any = None
    loc2: Any = None
    loc: Any = ()
    pending: int = 0
    know: Any = None
    mode: str = "pattern"
    aux: Any = None
    hdeg: int = 0

    @property
    def group(self) -> str:
        return "SG"


def slot_loc(m: SGMem, s: int):
    return (m.loc0, m.loc1, m.loc2)[s]


def slot_key(m: SGMem, s: int, space):
    if s == 0:
        return space.key(m.loc0)
    if s == 1:
        if m.loc1 is not None:
            return space.key(m.loc1)
        return space.step_key(m.loc0, m.p01)
    if m.loc2 is not None:
        return space.key(m.loc2)
    return space.step_key(m.loc1, m.p12)


def port_between(m: SGMem, a: int, b: int) -> int:
    if (a, b) == (0, 1):
        return m.p01
    if (a, b) == (1, 0):
        return m.p10
    if (a, b) == (1, 2):
        return m.p12
    if (a, b) == (2, 1):
        return m.p21
    return 0


class PatternDriver:
    """Runs the pattern for one program family.

    ``walker_factory(phase, home_degree, previous)`` builds the walk of a phase
    (``previous`` is the last phase's walker, or None),
    ``bound(phase, home_degree)`` returns its benign length bound or None, and
    ``terminal(mem, inp)`` handles a knower once its block is over.
    """

    def __init__(self, space, walker_factory, bound, terminal, full_team: bool):
        self.space = space
        self.walker_factory = walker_factory
        self.bound = bound
        self.terminal = terminal
        self.full_team = full_team

    # -- helpers

    def adopt_knowledge(self, m, inp):
        if m.know is not None:
            return m
        for aid, other in inp.colocated:
            k = getattr(other, "know", None)
            if aid != m.aid and k is not None:
                return replace(m, know=k)
        return m

    def check(self, m: SGMem, inp) -> SGMem:
        """Compare who is here with who should be; infer the black hole on a gap."""
        s = m.last
        if s is None or m.know is not None or m.mode != "pattern":
            return m
        sched = SCHEDULE[s]
        here = sched[m.role][1]
        expected = {r for r in m.present if r != m.role and sched[r][1] == here}
        seen = set()
        for aid, other in inp.colocated:
            if aid != m.aid and isinstance(other, SGMem):
                seen.add(other.role)
        missing = frozenset(expected - seen)
        extra = seen - expected
        if not missing and not extra:
            return m
        slot = INFERENCE.get((s, m.role, missing)) if not extra else None
        if slot is None:
            if self.full_team:
                raise ProtocolFault(
                    f"agent {m.aid} ({m.role}) after {s}: missing {sorted(missing)} extra {sorted(extra)}")
            return replace(m, mode="stuck")
        return replace(m, know=slot_key(m, slot, self.space))

    def observe(self, m: SGMem, inp) -> SGMem:
        """First look at a newly reached slot."""
        marked = any(getattr(o, "group", None) == "MARKER" for _, o in inp.colocated)
        if m.last == "M1" and m.slot == 1 and m.p10 == 0 and inp.arrival_port:
            w = m.walker.advance(m.p01, inp.degree, inp.arrival_port, marked)
            return replace(m, walker=w, p10=inp.arrival_port, d1=inp.degree,
                           loc1=self.space.move(m.loc0, m.p01, inp.arrival_port))
        if m.last == "R1" and m.slot == 2 and m.p21 == 0 and inp.arrival_port:
            w = m.walker.advance(m.p12, inp.degree, inp.arrival_port, marked)
            return replace(m, walker=w, p21=inp.arrival_port, d2=inp.degree,
                           loc2=self.space.move(m.loc1, m.p12, inp.arrival_port))
        return m

    def sync(self, m: SGMem, inp) -> SGMem:
        best = m
        for aid, other in inp.colocated:
            if (aid != m.aid and isinstance(other, SGMem) and other.phase == m.phase
                    and other.walker is not None and m.walker is not None
                    and other.walker.steps > best.walker.steps and other.mode in ("pattern", "block")):
                best = other
        if best is m:
            return m
        m = replace(m, walker=best.walker)
        if m.p10 == 0 and best.p10:
            m = replace(m, p10=best.p10, d1=best.d1, loc1=best.loc1)
        if m.p21 == 0 and best.p21 and best.p12 == m.p12:
            m = replace(m, p21=best.p21, d2=best.d2, loc2=best.loc2)
        return m

    def boundary(self, m: SGMem) -> SGMem:
        """Shift the slots after a sub-phase and pick the next block."""
        if m.last == "R5":
            m = replace(m, d0=m.d1, d1=m.d2, d2=0, p01=m.p12, p10=m.p21, p12=0, p21=0,
                        loc0=m.loc1, loc1=m.loc2, loc2=None, slot=m.slot - 1)
        for _ in range(4 * (m.walker.steps + 2)):
            nxt = m.walker.next_port()
            if nxt is None:
                return replace(m, stage="G1")
            if nxt == m.p10:
                w = m.walker.advance(m.p10, m.d0, m.p01)
                m = replace(m, walker=w, role=FLIP[m.role], present=tuple(FLIP[r] for r in m.present),
                            d0=m.d1, d1=m.d0, p01=m.p10, p10=m.p01,
                            loc0=m.loc1, loc1=m.loc0, slot=1 - m.slot)
                continue
            return replace(m, stage="R1", p12=nxt, p21=0, d2=0, loc2=None)
        raise ProtocolFault(f"agent {m.aid}: walk keeps reversing")

    def new_phase(self, m: SGMem, inp) -> SGMem:
        w = self.walker_factory(m.phase, inp.degree, m.walker)
        home = self.space.start()
        return replace(m, stage="M1", walker=w, slot=0, d0=inp.degree, hdeg=inp.degree, d1=0, d2=0,
                       p01=w.next_port(), p10=0, p12=0, p21=0, loc0=home, loc1=None, loc2=None, loc=home)

    def close_phase(self, m: SGMem, r: int) -> SGMem:
        """Book-keeping done while playing the gather round ``r``."""
        start = r + 1
        length = start - m.phase_start
        phase = m.phase + 1
        if m.walker.complete:
            deadline = start + length
        else:
            b = self.bound(phase, m.hdeg)
            deadline = None if b is None else start + b
        return replace(m, phase=phase, phase_start=start, deadline=deadline)

    # -- main entry

    def decide(self, m: SGMem, inp) -> tuple[int, SGMem]:
        if m.mode in ("term",) or m.mode not in ("pattern", "block", "stuck"):
            return self.terminal(m, inp)
        if m.mode == "stuck":
            return 0, m
        was_knower = m.know is not None
        m = self.adopt_knowledge(m, inp)
        m = self.check(m, inp)
        if m.mode == "stuck":
            return 0, m
        m = self.observe(m, inp)
        m = self.sync(m, inp)
        if m.know is not None and not was_knower:
            if m.stage == "P":
                return self.terminal(replace(m, mode="term"), inp)
            m = replace(m, mode="block")
        if m.stage == "B":
            m = self.boundary(m)
        if m.stage == "P":
            m = self.new_phase(m, inp)
        return self.play(m, inp)

    def play(self, m: SGMem, inp) -> tuple[int, SGMem]:
        stage = m.stage
        a, b = SCHEDULE[stage][m.role]
        r = inp.round
        if m.mode == "pattern":
            if m.slot != a:
                raise ProtocolFault(f"agent {m.aid} ({m.role}) in {stage} at slot {m.slot}, expected {a}")
            port = port_between(m, a, b) if a != b else 0
            if a != b and port == 0:
                raise ProtocolFault(f"agent {m.aid} ({m.role}) lacks the port for {stage}")
            target = b
        else:
            port, target = self.knower_move(m, a, b)
        m = replace(m, last=stage, stage=NEXT_STAGE[stage], slot=target, pending=port)
        if stage == "M1" and m.deadline is None and m.phase == 1:
            b = self.bound(1, m.hdeg)
            m = replace(m, deadline=None if b is None else m.phase_start + b)
        if stage == "G1":
            m = self.close_phase(m, r)
        if m.mode == "block" and stage in BLOCK_END:
            m = replace(m, mode="term")
        return port, m

    def knower_move(self, m: SGMem, a: int, b: int) -> tuple[int, int]:
        sp = self.space
        s = m.slot
        if slot_key(m, s, sp) == m.know and s >= 1:
            port = port_between(m, s, s - 1)
            if port:
                return port, s - 1
        if b == s or abs(b - s) != 1:
            return 0, s
        if slot_key(m, b, sp) == m.know:
            return 0, s
        port = port_between(m, s, b)
        if not port:
            return 0, s
        return port, b

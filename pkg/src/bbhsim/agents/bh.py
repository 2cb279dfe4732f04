"""Classical black-hole search with ``delta + 2`` agents.

The highest ID stays home as a marker; the others move as one group. A port
never crossed before is first tried by the lowest-ID member alone (the
explorer), who steps through and comes straight back. If it does not come back,
the port leads to the black hole and the next-lowest ID takes over.

When the explorer does come back, the new node ``w`` still has to be told apart
from nodes already on the map. The explorer walks back to ``w`` and waits there
while the rest walk the stored tree path to each candidate node. Finding the
explorer at a candidate identifies ``w``; finding it nowhere makes ``w`` a new
node. Only nodes already on the map are crossed while doing this. A group that
is down to one agent fetches the marker from home to serve as the waiting
token.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .mapping import RootPaths


@dataclass(frozen=True)
class BHMem:
    aid: int
    role: str = "group"         # group, out, back, token, marker
    rp: Any = None
    at: int = 0
    plan: tuple = ()            # (port, node) moves along known edges
    task: tuple = ("idle",)
    members: tuple = ()
    recruited: bool = False
    obs: Any = None             # explorer's view of w: (degree, entry, marked)
    know: Any = None

    @property
    def group(self) -> str:
        return "MARKER" if self.role == "marker" else "SEARCH"


class CautiousBHProgram:
    """Program set for the always-active black hole."""

    name = "bh_delta2"

    def __init__(self, k: int):
        if k < 3:
            raise ValueError("bh_delta2 needs at least three agents")
        self.k = k
        self.marker = k - 1

    def initial_memory(self, aid: int, k: int):
        if aid == self.marker:
            return BHMem(aid, role="marker")
        return BHMem(aid, members=tuple(range(self.k - 1)))

    def describe(self, mem) -> dict:
        role = {"marker": "H", "token": "T", "out": "X", "back": "X"}.get(mem.role, "G")
        return {"group": mem.group, "role": role, "mode": mem.role, "bbh": mem.know}

    def belief(self, mem):
        return None if mem.know is None else ("route", mem.know)

    def map_of(self, mem):
        return mem.rp

    def decide(self, aid, inp, mem: BHMem):
        if mem.rp is None and mem.role != "marker":
            mem = replace(mem, rp=RootPaths.start(inp.degree))
        here = {a: o for a, o in inp.colocated}
        if mem.role == "marker":
            for o in here.values():
                if isinstance(o, BHMem) and o.role == "group" and o.task[0] == "fetch":
                    joined = replace(o, aid=mem.aid, members=o.members + (mem.aid,), recruited=True,
                                     task=("idle",))
                    return self._group(joined, inp, here)
            return 0, mem
        if mem.role == "out":
            marked = any(getattr(o, "role", None) == "marker" for o in here.values())
            return inp.arrival_port, replace(mem, role="back", obs=(inp.degree, inp.arrival_port, marked))
        if mem.role == "back":
            return self._group(replace(mem, role="group"), inp, here)
        if mem.role == "token":
            for o in here.values():
                if (isinstance(o, BHMem) and o.role == "group" and not o.plan
                        and o.task[0] in ("ident", "join")):
                    return self._group(replace(o, aid=mem.aid, obs=mem.obs), inp, here)
            return 0, mem
        if mem.task[0] == "fetch":
            mem = replace(mem, members=mem.members + (self.marker,), recruited=True, task=("idle",))
        return self._group(mem, inp, here)

    def _group(self, m: BHMem, inp, here):
        r = inp.round
        for _ in range(8 * len(m.rp) + 16):
            if m.plan:
                port, nxt = m.plan[0]
                return port, replace(m, plan=m.plan[1:], at=nxt)
            kind = m.task[0]
            if kind == "idle":
                nxt = m.rp.next_unresolved()
                if nxt is None:
                    plan = m.rp.tour() if m.at == 0 else m.rp.tree_path(m.at, 0)
                    if not plan:
                        return 0, m
                    m = replace(m, plan=plan)
                    continue
                u, p = nxt
                if len(m.members) == 1 and not m.recruited:
                    if m.at != 0:
                        m = replace(m, plan=m.rp.tree_path(m.at, 0))
                        continue
                    return 0, replace(m, task=("fetch",))
                if m.at != u:
                    m = replace(m, plan=m.rp.tree_path(m.at, u))
                    continue
                m = replace(m, task=("probe", u, p, r))
                if m.aid == min(m.members):
                    return p, replace(m, role="out")
                return 0, m
            if kind == "probe":
                _, u, p, t0 = m.task
                if r < t0 + 2:
                    return 0, m
                ex = min(m.members)
                ex_mem = here.get(ex)
                if ex_mem is None or ex_mem.obs is None or ex_mem.role == "out":
                    m = replace(m, members=tuple(a for a in m.members if a != ex), rp=m.rp.block(u, p),
                                know=m.know or m.rp.key(u) + (p,), task=("idle",))
                    continue
                degree, entry, marked = ex_mem.obs
                if marked:
                    m = replace(m, rp=m.rp.connect(u, p, 0, entry), task=("idle",))
                    continue
                cands = tuple(m.rp.candidates(u, degree, entry))
                if not cands:
                    rp, _i = m.rp.add(u, p, degree, entry)
                    m = replace(m, rp=rp, task=("idle",))
                    continue
                m = replace(m, task=("ident", u, p, degree, entry, cands, 0))
                if m.aid == ex:
                    return p, replace(m, role="token", at=-1)
                m = replace(m, plan=m.rp.tree_path(u, cands[0]))
                continue
            if kind == "ident":
                _, u, p, degree, entry, cands, ci = m.task
                if min(m.members) in here:
                    m = replace(m, rp=m.rp.connect(u, p, cands[ci], entry), task=("idle",),
                                at=cands[ci], role="group")
                    continue
                if ci + 1 < len(cands):
                    m = replace(m, task=("ident", u, p, degree, entry, cands, ci + 1),
                                plan=m.rp.tree_path(m.at, cands[ci + 1]))
                    continue
                rp, i = m.rp.add(u, p, degree, entry)
                m = replace(m, rp=rp, task=("join",), plan=rp.tree_path(m.at, i))
                continue
            if kind == "join":
                m = replace(m, task=("idle",), role="group")
                continue
            raise RuntimeError(f"unknown task {kind}")
        raise RuntimeError("search group failed to settle")

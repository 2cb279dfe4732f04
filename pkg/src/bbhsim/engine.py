"""Lockstep synchronous round engine.

A round has five phases: inputs are built from start-of-round positions, every
alive agent decides, the adversary decides, the black hole fires (or not), and
survivors move.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

from .graph import Instance


class ProtocolFault(RuntimeError):
    """An agent program produced an illegal move."""

    def __init__(self, message: str, trace: "ExecutionTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class RoundInput:
    round: int
    degree: int
    arrival_port: int
    colocated: tuple[tuple[int, Any], ...]


class ProgramSet(Protocol):
    name: str

    def initial_memory(self, agent_id: int, k: int) -> Any: ...

    def decide(self, agent_id: int, inp: RoundInput, memory: Any) -> tuple[int, Any]: ...

    def describe(self, memory: Any) -> dict: ...


@dataclass(frozen=True)
class LedgerCell:
    """One row of the persistent occupancy ledger; branches share prefixes."""

    round: int
    nodes: frozenset
    prev: "LedgerCell | None"


@dataclass(frozen=True)
class WorldState:
    round: int
    positions: tuple[int, ...]
    arrivals: tuple[int, ...]
    destroyed_at: tuple[int | None, ...]
    memories: tuple
    destruction_time: int | None = None
    activations: int = 0
    relevant_rounds: int = 0
    entry_rounds: int = 0
    ledger_tail: LedgerCell | None = field(default=None, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.positions)

    def is_alive(self, a: int) -> bool:
        return self.destroyed_at[a] is None

    @property
    def alive_ids(self) -> list[int]:
        return [a for a, d in enumerate(self.destroyed_at) if d is None]

    @property
    def destroyed_count(self) -> int:
        return sum(d is not None for d in self.destroyed_at)

    def ledger(self) -> dict[int, list[int]]:
        """Per node, increasing list of rounds it was occupied by an alive agent."""
        rows: dict[int, list[int]] = {}
        cell = self.ledger_tail
        cells = []
        while cell is not None:
            cells.append(cell)
            cell = cell.prev
        for c in reversed(cells):
            for v in c.nodes:
                rows.setdefault(v, []).append(c.round)
        return rows


def initial_world(instance: Instance, programs: ProgramSet) -> WorldState:
    k = instance.k
    home = instance.home
    mems = tuple(programs.initial_memory(a, k) for a in range(k))
    cell = LedgerCell(0, frozenset([home]), None)
    return WorldState(0, (home,) * k, (0,) * k, (None,) * k, mems, ledger_tail=cell)


@dataclass
class AdversaryView:
    """Everything the adversary may look at before choosing."""

    round: int
    world: WorldState
    bbh: int | None
    ports: dict[int, int]
    targets: dict[int, int]
    at_bbh: list[int]
    entering: list[int]

    @property
    def relevant(self) -> bool:
        return bool(self.at_bbh or self.entering)


@dataclass
class Plan:
    """Decisions of one round before the adversary has spoken."""

    view: AdversaryView
    memories: dict[int, Any]
    entries: dict[int, int]


@dataclass
class RoundRecord:
    round: int
    moves: dict[int, int]
    activated: bool
    destroyed: list[int]
    positions: dict[int, int]
    memories: tuple = field(default=(), repr=False)
    anchors: list[dict] = field(default_factory=list)

    def to_json(self, describe: Callable[[Any], dict] | None = None) -> str:
        doc = {
            "round": self.round,
            "moves": {str(a): p for a, p in sorted(self.moves.items())},
            "activated": self.activated,
            "destroyed": sorted(self.destroyed),
            "positions": {str(a): v for a, v in sorted(self.positions.items())},
        }
        if self.anchors:
            doc["anchors"] = self.anchors
        if describe is not None and self.memories:
            doc["roles"] = {str(a): describe(self.memories[a])["role"] for a in sorted(self.positions)}
        return json.dumps(doc, separators=(",", ":"))


@dataclass
class ExecutionTrace:
    instance: Instance
    program_name: str
    horizon: int
    records: list[RoundRecord]
    final: WorldState
    initial: WorldState

    @property
    def destruction_time(self) -> int | None:
        return self.final.destruction_time

    def header(self, programs: ProgramSet | None = None) -> dict:
        doc = {"instance": json.loads(self.instance.to_json()), "k": self.instance.k,
               "program": self.program_name, "horizon": self.horizon}
        if programs is not None:
            mems = self.initial.memories
            doc["roles"] = {str(a): programs.describe(m)["role"] for a, m in enumerate(mems)}
        return doc

    def to_jsonl(self, programs: ProgramSet | None = None, header: bool = False) -> str:
        """One JSON record per round; ``header`` prepends an instance record."""
        describe = programs.describe if programs is not None else None
        lines = []
        if header:
            lines.append(json.dumps({"header": self.header(programs)}, separators=(",", ":")))
        lines.extend(r.to_json(describe) for r in self.records)
        return "".join(line + "\n" for line in lines)

    @property
    def rounds_run(self) -> int:
        return len(self.records)

    def anchors(self) -> list[dict]:
        out = []
        for r in self.records:
            out.extend(r.anchors)
        return out


def plan_round(instance: Instance, world: WorldState, programs: ProgramSet,
               order: Sequence[int] | None = None) -> Plan:
    """Phases 1 and 2: build inputs and collect every agent's decision."""
    g = instance.graph
    adj = g.adj
    r = world.round + 1
    alive = world.alive_ids
    by_node: dict[int, list[int]] = {}
    for a in alive:
        by_node.setdefault(world.positions[a], []).append(a)
    mems = world.memories
    coloc_cache = {v: tuple((a, mems[a]) for a in ids) for v, ids in by_node.items()}
    ports: dict[int, int] = {}
    new_mems: dict[int, Any] = {}
    targets: dict[int, int] = {}
    entries: dict[int, int] = {}
    seq = alive if order is None else [a for a in order if world.destroyed_at[a] is None]
    for a in seq:
        v = world.positions[a]
        row = adj[v]
        inp = RoundInput(r, len(row), world.arrivals[a], coloc_cache[v])
        port, mem = programs.decide(a, inp, mems[a])
        if not isinstance(port, int) or port < 0 or port > len(row):
            raise ProtocolFault(f"agent {a} chose port {port!r} at a node of degree {len(row)} in round {r}")
        ports[a] = port
        new_mems[a] = mem
        if port == 0:
            targets[a] = v
            entries[a] = 0
        else:
            u, q = row[port - 1]
            targets[a] = u
            entries[a] = q
    bbh = instance.bbh
    at_bbh = [a for a in alive if world.positions[a] == bbh] if bbh is not None else []
    entering = [a for a in alive if bbh is not None and targets[a] == bbh and world.positions[a] != bbh]
    ports = {a: ports[a] for a in alive}
    view = AdversaryView(r, world, bbh, ports, targets, at_bbh, entering)
    return Plan(view, new_mems, entries)


def apply_round(instance: Instance, world: WorldState, plan: Plan, activate: bool,
                programs: ProgramSet | None = None) -> tuple[WorldState, RoundRecord]:
    """Phases 4 and 5: resolve the black hole and move the survivors."""
    view = plan.view
    r = view.round
    bbh = instance.bbh
    activated = bool(activate) and bbh is not None
    doomed = set(view.at_bbh) | set(view.entering) if activated else set()
    positions = list(world.positions)
    arrivals = list(world.arrivals)
    destroyed_at = list(world.destroyed_at)
    memories = list(world.memories)
    for a, port in view.ports.items():
        if a in doomed:
            destroyed_at[a] = r
            positions[a] = bbh
            continue
        positions[a] = view.targets[a]
        arrivals[a] = plan.entries[a]
        memories[a] = plan.memories[a]
    alive_pos = {a: positions[a] for a in view.ports if a not in doomed}
    cell = LedgerCell(r, frozenset(alive_pos.values()), world.ledger_tail)
    dt = world.destruction_time
    if doomed and dt is None:
        dt = r
    new_world = WorldState(
        r, tuple(positions), tuple(arrivals), tuple(destroyed_at), tuple(memories), dt,
        world.activations + (1 if activated else 0),
        world.relevant_rounds + (1 if view.relevant else 0),
        world.entry_rounds + (1 if view.entering else 0),
        cell,
    )
    anchors = []
    if programs is not None and hasattr(programs, "anchor_of"):
        for a in alive_pos:
            before = programs.anchor_of(world.memories[a])
            after = programs.anchor_of(memories[a])
            if after is not None and before is None:
                anchors.append({"round": r, "node": positions[a], "port": after, "agent": a})
    record = RoundRecord(r, dict(view.ports), activated, sorted(doomed), alive_pos, tuple(memories), anchors)
    return new_world, record


def step(instance: Instance, world: WorldState, programs: ProgramSet, adversary,
         order: Sequence[int] | None = None) -> tuple[WorldState, RoundRecord]:
    plan = plan_round(instance, world, programs, order)
    decision = adversary.decide(plan.view)
    return apply_round(instance, world, plan, decision, programs)


def run(instance: Instance, programs: ProgramSet, adversary, horizon: int,
        order: Sequence[int] | None = None,
        stop: Callable[[WorldState], bool] | None = None) -> ExecutionTrace:
    """Run to ``horizon`` rounds or until every agent is destroyed."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    world = initial_world(instance, programs)
    start = world
    records: list[RoundRecord] = []
    while world.round < horizon and world.alive_ids:
        try:
            world, rec = step(instance, world, programs, adversary, order)
        except ProtocolFault as fault:
            fault.trace = ExecutionTrace(instance, programs.name, horizon, records, world, start)
            raise
        records.append(rec)
        if stop is not None and stop(world):
            break
    return ExecutionTrace(instance, programs.name, horizon, records, world, start)

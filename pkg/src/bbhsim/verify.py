"""Checks over execution traces and an exhaustive search over adversary schedules.

Perpetual properties are judged on finite traces: after ``warmup`` every target
node must be occupied at least once in every ``window`` consecutive rounds.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .adversary import Benign, Scripted
from .engine import (ExecutionTrace, ProtocolFault, WorldState, apply_round, initial_world,
                     plan_round, run)
from .graph import ComponentDecomposition, Instance, decompose

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

# knowledge must exist by the memory written this many rounds after T_d
KNOWLEDGE_SLACK = 6


class Target(str, enum.Enum):
    HOME_COMPONENT = "HOME_COMPONENT"
    ANY_COMPONENT = "ANY_COMPONENT"
    WHOLE_GRAPH = "WHOLE_GRAPH"


@dataclass(frozen=True)
class CoverageSpec:
    target: Target
    warmup: int
    window: int

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")

    def to_dict(self) -> dict:
        return {"target": self.target.value, "warmup": self.warmup, "window": self.window}

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageSpec":
        return cls(Target(d["target"]), int(d.get("warmup", 0)), int(d["window"]))


@dataclass
class CheckVerdict:
    property: str
    verdict: str
    detail: str = ""
    counterexample: ExecutionTrace | None = None
    schedule: tuple[int, ...] | None = None
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self, counterexample_file: str | None = None) -> dict:
        doc: dict[str, Any] = {"property": self.property, "verdict": self.verdict}
        if self.detail:
            doc["detail"] = self.detail
        if self.schedule is not None:
            doc["schedule"] = list(self.schedule)
        if counterexample_file is not None:
            doc["counterexample_file"] = counterexample_file
        if self.stats:
            doc["stats"] = self.stats
        return doc

    def to_json(self, counterexample_file: str | None = None) -> str:
        return json.dumps(self.to_dict(counterexample_file), sort_keys=True)


# ------------------------------------------------------------------ coverage


def target_sets(instance: Instance, decomposition: ComponentDecomposition, target: Target) -> list[frozenset]:
    """Node sets of which one (ANY) or the first (HOME, WHOLE) must stay covered."""
    if instance.bbh is None or target is Target.WHOLE_GRAPH:
        return [frozenset(v for v in range(instance.graph.node_count) if v != instance.bbh)]
    if target is Target.HOME_COMPONENT:
        return [decomposition.home_component]
    return [frozenset(c) for c in decomposition.components]


def _covered(rounds: list[int], warmup: int, window: int, end: int) -> bool:
    """Every length-``window`` interval inside [warmup, end] holds a visit."""
    if end - warmup + 1 < window:
        return True
    seen = [r for r in rounds if warmup <= r <= end]
    if not seen or seen[0] > warmup + window - 1 or seen[-1] < end - window + 1:
        return False
    return all(b - a <= window for a, b in zip(seen, seen[1:]))


def check_coverage(trace: ExecutionTrace, decomposition: ComponentDecomposition | None,
                   spec: CoverageSpec) -> CheckVerdict:
    instance = trace.instance
    decomposition = decomposition or decompose(instance)
    prop = f"coverage:{spec.target.value}"
    if not trace.final.alive_ids:
        return CheckVerdict(prop, FAIL, f"every agent destroyed by round {trace.final.round}", trace)
    end = trace.final.round
    if end < spec.warmup + 2 * spec.window:
        return CheckVerdict(prop, INCONCLUSIVE, f"trace of {end} rounds is shorter than warmup + 2*window")
    ledger = trace.final.ledger()
    sets = target_sets(instance, decomposition, spec.target)
    good = []
    for i, nodes in enumerate(sets):
        missing = sorted(v for v in nodes if not _covered(ledger.get(v, []), spec.warmup, spec.window, end))
        if not missing:
            good.append(i)
        elif len(sets) == 1:
            return CheckVerdict(prop, FAIL, f"nodes {missing} not revisited within {spec.window} rounds", trace)
    if good:
        return CheckVerdict(prop, PASS, f"component {good[0] + 1} covered")
    return CheckVerdict(prop, FAIL, "no component is revisited within the window", trace)


class CoverageTracker:
    """Incremental form of :func:`check_coverage` for the model checker.

    ``state`` is hashable and small: per node the round of the last visit
    (clamped once it is too old to matter) and the set of failed node sets.
    """

    def __init__(self, instance: Instance, spec: CoverageSpec, decomposition=None):
        self.spec = spec
        self.sets = target_sets(instance, decomposition or decompose(instance), spec.target)
        self.nodes = sorted(set().union(*self.sets))
        self.index = {v: i for i, v in enumerate(self.nodes)}

    def initial(self, world: WorldState):
        here = {world.positions[a] for a in world.alive_ids}
        return (tuple(0 if v in here else -1 for v in self.nodes), frozenset())

    def update(self, state, r: int, occupied) -> tuple:
        last, dead = state
        w, warm = self.spec.window, self.spec.warmup
        last = list(last)
        for v in occupied:
            i = self.index.get(v)
            if i is not None:
                last[i] = r
        if r >= warm + w - 1:
            floor = r - w + 1
            newly = set()
            for j, nodes in enumerate(self.sets):
                if j in dead:
                    continue
                if any(max(last[self.index[v]], warm - 1) < floor for v in nodes):
                    newly.add(j)
            if newly:
                dead = dead | newly
            lo = floor - 1
            last = [max(x, lo) for x in last]
        return (tuple(last), dead)

    def failed(self, state) -> bool:
        dead = state[1]
        if self.spec.target is Target.ANY_COMPONENT and len(self.sets) > 1:
            return len(dead) == len(self.sets)
        return bool(dead)


# ----------------------------------------------------------------- knowledge


def _belief_checker(instance: Instance, programs):
    from .agents import resolve_belief

    cache: dict = {}

    def truth(belief):
        if belief not in cache:
            cache[belief] = resolve_belief(instance, belief)
        return cache[belief]

    def beliefs(memories, alive):
        good, bad = [], []
        for a in alive:
            b = programs.belief(memories[a])
            if b is None:
                continue
            (good if truth(b) == instance.bbh and instance.bbh is not None else bad).append(a)
        return good, bad

    return beliefs


def check_survivor_knowledge(trace: ExecutionTrace, instance: Instance | None = None,
                             programs=None, slack: int = KNOWLEDGE_SLACK) -> CheckVerdict:
    """Some survivor names the true black hole soon after the first destruction.

    Also fails if any alive agent ever holds a wrong belief.
    """
    instance = instance or trace.instance
    prop = "survivor-knowledge"
    if programs is None or not hasattr(programs, "belief"):
        raise ValueError("check_survivor_knowledge needs the program set that produced the trace")
    beliefs = _belief_checker(instance, programs)
    td = trace.destruction_time
    known = None
    for rec in trace.records:
        alive = sorted(rec.positions)
        good, bad = beliefs(rec.memories, alive)
        if bad:
            return CheckVerdict(prop, FAIL, f"round {rec.round}: agents {bad} hold a wrong belief", trace)
        if td is not None and known is None and rec.round > td and good:
            known = rec.round
    if td is None:
        return CheckVerdict(prop, PASS, "no destruction")
    if known is not None and known <= td + slack:
        return CheckVerdict(prop, PASS, f"destruction at {td}, knowledge in memory of round {known}")
    if known is None and trace.final.round < td + slack and trace.final.alive_ids:
        return CheckVerdict(prop, INCONCLUSIVE, "trace ends before the knowledge deadline")
    return CheckVerdict(prop, FAIL, f"destruction at {td}, no survivor knows by round {td + slack}", trace)


# ----------------------------------------------------------- model checking


@dataclass
class ModelCheckResult(CheckVerdict):
    pass


def _state_key(world: WorldState, extra) -> tuple:
    return (world.round, world.positions, world.arrivals, world.destroyed_at, world.memories, extra)


def model_check(instance: Instance, programs, horizon: int, coverage: CoverageSpec | None = None,
                knowledge: bool = False, prune: bool = True, dedup: bool = True,
                budget: int = 2_000_000, property_name: str | None = None) -> CheckVerdict:
    """Explore every activation schedule up to ``horizon``.

    With ``prune`` the black hole only branches in rounds where some agent is
    on it or about to enter it; otherwise every round branches. Branches end
    in FAIL when every agent is destroyed, a program faults, the coverage spec
    is violated, or (with ``knowledge``) no survivor knows the black hole in
    time. The first failing schedule in idle-before-activate order is reported.
    """
    names = []
    if coverage is not None:
        names.append(f"coverage:{coverage.target.value}")
    if knowledge:
        names.append("survivor-knowledge")
    prop = property_name or ("modelcheck:" + "+".join(names) if names else "modelcheck:alive")
    if coverage is not None and horizon < coverage.warmup + 2 * coverage.window:
        return CheckVerdict(prop, INCONCLUSIVE, "horizon shorter than warmup + 2*window")
    tracker = CoverageTracker(instance, coverage) if coverage is not None else None
    beliefs = _belief_checker(instance, programs) if knowledge else None
    bbh = instance.bbh

    stats = {"states": 0, "branches": 0, "dedup_hits": 0, "max_depth": 0, "leaves": 0}
    world0 = initial_world(instance, programs)
    cov0 = tracker.initial(world0) if tracker else None
    # stack entries: (world, coverage state, knowledge flag, schedule)
    stack: list = [(world0, cov0, False, ())]
    seen: set = set()

    def fail(schedule, why):
        trace = replay(instance, programs, schedule, horizon)
        return CheckVerdict(prop, FAIL, why, trace, tuple(schedule), dict(stats))

    while stack:
        world, cov, knew, schedule = stack.pop()
        stats["states"] += 1
        if stats["states"] > budget:
            return CheckVerdict(prop, INCONCLUSIVE, f"state budget {budget} exhausted", stats=dict(stats))
        stats["max_depth"] = max(stats["max_depth"], world.round)
        if world.round >= horizon:
            stats["leaves"] += 1
            continue
        try:
            plan = plan_round(instance, world, programs)
        except ProtocolFault as fault:
            return fail(schedule, f"protocol fault in round {world.round + 1}: {fault}")
        if bbh is None:
            choices = (False,)
        elif prune and not plan.view.relevant:
            choices = (False,)
        else:
            choices = (False, True)
        if len(choices) > 1:
            stats["branches"] += 1
        children = []
        for act in choices:
            nxt, rec = apply_round(instance, world, plan, act)
            sched = schedule + (nxt.round,) if act else schedule
            if not nxt.alive_ids:
                return fail(sched, f"every agent destroyed by round {nxt.round}")
            ncov = cov
            if tracker is not None:
                ncov = tracker.update(cov, nxt.round, rec.positions.values())
                if tracker.failed(ncov):
                    return fail(sched, f"coverage violated at round {nxt.round}")
            nknew = knew
            if beliefs is not None:
                good, bad = beliefs(nxt.memories, nxt.alive_ids)
                if bad:
                    return fail(sched, f"round {nxt.round}: agents {bad} hold a wrong belief")
                td = nxt.destruction_time
                if td is not None and not nknew:
                    if good and nxt.round > td:
                        nknew = True
                    elif nxt.round >= td + KNOWLEDGE_SLACK:
                        return fail(sched, f"destruction at {td}, no survivor knows by round {nxt.round}")
            if dedup:
                key = _state_key(nxt, (ncov, nknew, nxt.destruction_time is not None))
                if key in seen:
                    stats["dedup_hits"] += 1
                    continue
                seen.add(key)
            children.append((nxt, ncov, nknew, sched))
        # idle branch explored first
        stack.extend(reversed(children))
    return CheckVerdict(prop, PASS, "all schedules satisfy the properties", stats=dict(stats))


def replay(instance: Instance, programs, schedule, horizon: int) -> ExecutionTrace:
    """Re-run a schedule of activation rounds; faults yield the partial trace."""
    try:
        return run(instance, programs, Scripted(frozenset(schedule)), horizon)
    except ProtocolFault as fault:
        return fault.trace


def replay_verdict(verdict: CheckVerdict, instance: Instance, programs, horizon: int,
                   coverage: CoverageSpec | None = None, knowledge: bool = False) -> CheckVerdict:
    """Re-check a FAIL verdict's schedule with the post-hoc checkers."""
    trace = replay(instance, programs, verdict.schedule or (), horizon)
    if trace is None or not trace.final.alive_ids:
        return CheckVerdict(verdict.property, FAIL, "replayed: all destroyed or faulted", trace)
    if len(trace.records) < horizon:
        return CheckVerdict(verdict.property, FAIL, "replayed: protocol fault", trace)
    if coverage is not None:
        v = check_coverage(trace, None, coverage)
        if v.verdict == FAIL:
            return v
    if knowledge:
        v = check_survivor_knowledge(trace, instance, programs)
        if v.verdict == FAIL:
            return v
    return CheckVerdict(verdict.property, PASS, "replay satisfies the properties", trace)


# ----------------------------------------------------------- suspicious sets


def _history_step(world: WorldState, instance: Instance, agent: int):
    """What ``agent`` observes at the start of the next round."""
    v = world.positions[agent]
    here = tuple((a, world.memories[a]) for a in world.alive_ids if world.positions[a] == v)
    return (instance.graph.degree(v), world.arrivals[agent], here)


def suspicious_sets(instance: Instance, programs, schedule, t: int, max_nodes: int = 10,
                    max_rounds: int = 40) -> dict[int, frozenset]:
    """Black-hole positions consistent with each alive agent's history.

    The actual execution is ``instance`` under activation rounds ``schedule``.
    The history of an agent at round ``t`` is everything it observed at the
    start of rounds 1..t (degree, arrival port, co-located memories). For every
    candidate position (``None`` meaning no black hole) every activation
    choice over rounds < t in which an agent is at or entering the candidate is
    simulated; a candidate stays if some schedule reproduces the history.
    """
    n = instance.graph.node_count
    if n > max_nodes or t > max_rounds:
        raise ValueError(f"oracle bounds exceeded (n={n} > {max_nodes} or t={t} > {max_rounds})")
    if t < 1:
        raise ValueError("t must be at least 1")
    actual = run(instance, programs, Scripted(frozenset(schedule)), t - 1) if t > 1 else None
    worlds = [initial_world(instance, programs)]
    if actual is not None:
        w = worlds[0]
        for rec in actual.records:
            plan = plan_round(instance, w, programs)
            w, _ = apply_round(instance, w, plan, rec.activated)
            worlds.append(w)
    final = worlds[-1]
    agents = final.alive_ids
    hist = {a: [_history_step(w, instance, a) for w in worlds] for a in agents}

    out: dict[int, set] = {a: set() for a in agents}
    candidates = [None] + [v for v in range(n) if v != instance.home]
    for cand in candidates:
        inst = instance.with_bbh(cand)
        found: set = set()
        stack = [(initial_world(inst, programs), frozenset(agents))]
        while stack and len(found) < len(agents):
            w, live = stack.pop()
            d = w.round
            live = frozenset(a for a in live if w.is_alive(a) and _history_step(w, inst, a) == hist[a][d])
            live = live - found if d + 1 < t else live
            if not live:
                continue
            if d + 1 == t:
                found |= live
                continue
            plan = plan_round(inst, w, programs)
            acts = (False, True) if cand is not None and plan.view.relevant else (False,)
            for act in acts:
                nxt, _ = apply_round(inst, w, plan, act)
                stack.append((nxt, live))
        for a in found:
            out[a].add(cand)
    return {a: frozenset(s) for a, s in out.items()}


# ----------------------------------------------------------------- casualties


def casualty_report(trace: ExecutionTrace, programs=None) -> dict:
    """Destroyed agents, anchors placed, and which anchor each loss is charged to.

    A loss is charged to the first anchor placed at or after it (the anchor
    that the loss made possible); losses after the last anchor are unattributed.
    """
    destroyed = [(a, d) for a, d in enumerate(trace.final.destroyed_at) if d is not None]
    anchors = trace.anchors()
    per_anchor = []
    for i, an in enumerate(anchors):
        lo = anchors[i - 1]["round"] if i else 0
        lost = sorted(a for a, d in destroyed if lo < d <= an["round"] or (i == 0 and d <= an["round"]))
        per_anchor.append({"anchor": an, "destroyed": lost})
    last = anchors[-1]["round"] if anchors else None
    unattributed = sorted(a for a, d in destroyed if last is None or d > last)
    free = None
    if programs is not None and hasattr(programs, "is_free"):
        free = sum(1 for a in trace.final.alive_ids if programs.is_free(trace.final.memories[a]))
    return {
        "destroyed": len(destroyed),
        "destroyed_agents": sorted(a for a, _ in destroyed),
        "per_anchor": per_anchor,
        "unattributed": unattributed,
        "anchors": anchors,
        "free_survivors": free if free is not None else len(trace.final.alive_ids),
        "alive": len(trace.final.alive_ids),
    }


def lg_safety_violations(trace: ExecutionTrace, programs) -> list[int]:
    """Rounds in which every live member of some large group sits on the black hole."""
    bbh = trace.instance.bbh
    if bbh is None or not hasattr(programs, "lg_generation"):
        return []
    bad = []
    for rec in trace.records:
        groups: dict = {}
        for a, v in rec.positions.items():
            gen = programs.lg_generation(rec.memories[a])
            if gen is not None:
                groups.setdefault(gen, []).append(v)
        if any(all(v == bbh for v in vs) for vs in groups.values()):
            bad.append(rec.round)
    return bad


def horizon_stable(run_check: Callable[[int], CheckVerdict], horizon: int) -> bool:
    """Whether a verdict at ``horizon`` agrees with the verdict at twice the horizon."""
    return run_check(horizon).verdict == run_check(2 * horizon).verdict


# ------------------------------------------------------------ window choice


def phase_table(instance: Instance, programs, horizon: int = 6000,
                until: int | None = None) -> tuple[dict, dict]:
    """Start round and deadline of every phase of agent 0 in a benign run.

    With ``until`` the run stops once agent 0 has begun phase ``until + 1``.
    """
    key = (instance.graph, instance.home, instance.k, programs.name, getattr(programs, "kind", None),
           horizon, until)
    if key not in _PHASE_CACHE:
        stop = None if until is None else (lambda w: w.memories[0].phase > until)
        trace = run(instance.with_bbh(None), programs, Benign(), horizon, stop=stop)
        starts: dict[int, int] = {}
        deadlines: dict[int, int | None] = {}
        for rec in trace.records:
            m = rec.memories[0]
            starts.setdefault(m.phase, rec.round + 1)
            deadlines[m.phase] = m.deadline
        _PHASE_CACHE[key] = (starts, deadlines)
    starts, deadlines = _PHASE_CACHE[key]
    return dict(starts), dict(deadlines)


_PHASE_CACHE: dict = {}


def coverage_plan(instance: Instance, programs, target: Target | str) -> tuple[int, CoverageSpec]:
    """Horizon and coverage spec for a path, ring or tree program.

    On a ring the pattern never turns back, so one lap bounds the gaps.
    Elsewhere, once the walk is long enough to reach every node, a phase of
    length ``P`` revisits everything, so the window is ``P`` plus slack for the
    time a knower or the waiting agents need to take over. The warmup skips the
    phases whose length is still growing and, on trees, the last deadline
    taken from the benign length bound (the waiting agents may set off then).
    """
    n = instance.graph.node_count
    kind = getattr(programs, "kind", "path")
    if kind == "ring":
        # one lap of the pattern, then a knower's sweep of the remaining path
        window = 7 * n + 10
        return 2 + 2 * window, CoverageSpec(Target(target), 2, window)
    if kind == "tree":
        last = math.ceil(math.log2(2 * (n - 1)))
        starts, deadlines = phase_table(instance, programs, until=last + 6)
        period = starts[last + 2] - starts[last + 1]
        window = period + 6 * (n - 1) + 10
        by_bound = [q for q in starts if q > 1 and q + 1 in starts
                    and deadlines[q] - starts[q] != starts[q] - starts[q - 1]]
        pb = max(by_bound)
        warmup = max(deadlines[pb], starts[pb + 1])
        horizon = warmup + 2 * window
    else:
        last = math.ceil(math.log2(n))
        starts, deadlines = phase_table(instance, programs, until=last + 6)
        if instance.graph.degree(instance.home) > 1 and kind == "path":
            # the waiting pair may leave only at a bound-based deadline
            window = 2 * (starts[last + 2] - starts[last + 1])
            by_bound = [q for q in starts if q > 1 and q + 1 in starts
                        and deadlines[q] - starts[q] != starts[q] - starts[q - 1]]
            warmup = starts[last + 5] - 1 - 2 * window
            if by_bound:
                warmup = max(warmup, deadlines[max(by_bound)])
            horizon = warmup + 2 * window
        else:
            horizon = starts[last + 3] - 1
            window = starts[last + 2] - starts[last + 1] + 5
            warmup = horizon - 2 * window
    return horizon, CoverageSpec(Target(target), warmup, window)


# ------------------------------------------------------- end-state checks


def bbh_ports(instance: Instance) -> set[tuple[int, int]]:
    """(node, port) pairs of the home component that lead into the black hole."""
    g = instance.graph
    if instance.bbh is None:
        return set()
    c1 = decompose(instance).home_component
    return {(u, p) for u in c1 for p in range(1, g.degree(u) + 1) if g.follow(u, p)[0] == instance.bbh}


def check_anchors(trace: ExecutionTrace, programs) -> CheckVerdict:
    """Every port from the home component into the black hole ends up guarded."""
    prop = "anchors"
    if trace.final.destroyed_count == 0:
        return CheckVerdict(prop, PASS, "no destruction, nothing to guard")
    final = trace.final
    held = {(final.positions[a], programs.anchor_of(final.memories[a])) for a in final.alive_ids}
    missing = sorted(bbh_ports(trace.instance) - held)
    if missing:
        return CheckVerdict(prop, FAIL, f"unguarded (node, port) pairs {missing}", trace)
    return CheckVerdict(prop, PASS, f"{len(bbh_ports(trace.instance))} ports guarded")


def check_casualties(trace: ExecutionTrace, programs=None, max_destroyed: int | None = None,
                     exact: int | None = None, min_free: int | None = None) -> CheckVerdict:
    rep = casualty_report(trace, programs)
    prop = "casualties"
    d = rep["destroyed"]
    if max_destroyed is not None and d > max_destroyed:
        return CheckVerdict(prop, FAIL, f"{d} destroyed, limit {max_destroyed}", trace)
    if exact is not None and d != exact:
        return CheckVerdict(prop, FAIL, f"{d} destroyed, expected exactly {exact}", trace)
    if min_free is not None and rep["free_survivors"] < min_free:
        return CheckVerdict(prop, FAIL, f"{rep['free_survivors']} free survivors, need {min_free}", trace)
    return CheckVerdict(prop, PASS, f"{d} destroyed, {rep['free_survivors']} free survivors")


def check_lg_safety(trace: ExecutionTrace, programs) -> CheckVerdict:
    bad = lg_safety_violations(trace, programs)
    if bad:
        return CheckVerdict("lg-safety", FAIL, f"a whole group stands on the black hole in rounds {bad[:5]}", trace)
    return CheckVerdict("lg-safety", PASS, "no group ever stands entirely on the black hole")


def map_errors(instance: Instance, rp) -> list[str]:
    """Differences between a finished map and the true graph.

    Map node ``i`` is matched to the node reached by its tree route from home.
    Resolved ports must agree with the graph, blocked ports must lead into the
    black hole, every port must be resolved, and the map must hold exactly the
    nodes reachable from home without crossing the black hole.
    """
    g = instance.graph
    where = []
    for i in range(len(rp)):
        v = instance.home
        for port in rp.key(i):
            v = g.follow(v, port)[0]
        where.append(v)
    errors = []
    if len(set(where)) != len(where):
        errors.append("two map nodes name the same graph node")
    for i, v in enumerate(where):
        if rp.degree(i) != g.degree(v):
            errors.append(f"map node {i} has degree {rp.degree(i)}, graph node {v} has {g.degree(v)}")
            continue
        for p in range(1, g.degree(v) + 1):
            st = rp.status(i, p)
            u, q = g.follow(v, p)
            if st is None:
                errors.append(f"port {p} of map node {i} unresolved")
            elif st == "blocked":
                if u != instance.bbh:
                    errors.append(f"port {p} of map node {i} blocked but leads to {u}")
            elif (where[st[0]], st[1]) != (u, q):
                errors.append(f"port {p} of map node {i} mapped to {st}, graph says ({u}, {q})")
    reach = set(g.distances_from(instance.home, avoid=instance.bbh))
    if set(where) != reach:
        errors.append(f"map covers {sorted(set(where))}, reachable part is {sorted(reach)}")
    return errors


def check_map(trace: ExecutionTrace, programs) -> CheckVerdict:
    """Every surviving agent that carries a map holds a correct, finished one."""
    prop = "map"
    final = trace.final
    maps = [(a, programs.map_of(final.memories[a])) for a in final.alive_ids]
    maps = [(a, rp) for a, rp in maps if rp is not None]
    if not maps:
        return CheckVerdict(prop, FAIL, "no survivor carries a map", trace)
    for a, rp in maps:
        errs = map_errors(trace.instance, rp)
        if errs:
            return CheckVerdict(prop, FAIL, f"agent {a}: {errs[0]}", trace)
    return CheckVerdict(prop, PASS, f"{len(maps)} survivors hold the full map")

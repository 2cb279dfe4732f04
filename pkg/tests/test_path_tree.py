from collections import Counter

import networkx as nx
import pytest

import bbhsim.agents.pattern as pattern
from bbhsim.adversary import Benign, Scripted, Trigger
from bbhsim.agents import ProgramSpecError, make_programs, path_bbh_program, path_home_program, ring_program, tree_program
from bbhsim.agents.common import walk_bound
from bbhsim.agents.pattern import SGMem
from bbhsim.engine import run
from bbhsim.graph import build_path, build_ring, build_tree
from bbhsim.verify import (
    check_coverage,
    check_survivor_knowledge,
    coverage_plan,
    decompose,
    model_check,
)


def roles_at(prog, rec):
    return {prog.describe(rec.memories[a])["role"]: v for a, v in rec.positions.items()}


def test_initial_roles_by_id():
    prog = path_home_program()
    mems = [prog.initial_memory(a, 6) for a in range(6)]
    assert [prog.describe(m)["role"] for m in mems] == ["F", "I2", "I1", "L", "F1", "F2"]


def test_pattern_forms_in_two_rounds():
    prog = path_bbh_program()
    tr = run(build_path(6, 0, None, 4), prog, Benign(), 2)
    r1 = roles_at(prog, tr.records[0])
    r2 = roles_at(prog, tr.records[1])
    assert r1 == {"F": 0, "I2": 1, "I1": 1, "L": 1}
    assert r2 == {"F": 0, "I2": 0, "I1": 1, "L": 1}


def test_pattern_on_two_node_path():
    prog = path_bbh_program()
    tr = run(build_path(2, 0, None, 4), prog, Benign(), 2)
    assert set(tr.records[1].positions.values()) == {0, 1}


def test_translation_schedule():
    prog = path_bbh_program()
    tr = run(build_path(6, 0, None, 4), prog, Benign(), 7)
    got = [roles_at(prog, rec) for rec in tr.records[2:7]]
    assert got == [
        {"F": 0, "I2": 0, "I1": 1, "L": 2},
        {"F": 0, "I2": 1, "I1": 1, "L": 1},
        {"F": 0, "I2": 0, "I1": 1, "L": 2},
        {"F": 1, "I2": 1, "I1": 1, "L": 2},
        {"F": 1, "I2": 1, "I1": 2, "L": 2},
    ]


def test_roles_flip_at_the_far_end():
    prog = path_bbh_program()
    tr = run(build_path(3, 0, None, 4), prog, Benign(), 40)
    for rec in tr.records:
        assert sorted(roles_at(prog, rec)) == ["F", "I1", "I2", "L"]
    # phase 1 turns back at node 2; afterwards L leads towards home
    flipped = [rec for rec in tr.records if roles_at(prog, rec)["L"] < roles_at(prog, rec)["F"]]
    assert flipped


def test_first_phase_budget_values():
    assert [5 * 2 ** i + 2 for i in (1, 2, 3)] == [12, 22, 42]
    # the implemented walk bound on a path with home at an end: out and back
    assert walk_bound("path", 3, 1) == 3 + 5 * (16 - 2)


def test_no_false_knowledge_when_benign():
    for n in range(3, 9):
        for prog, k in ((path_home_program(), 6), (path_bbh_program(), 4)):
            tr = run(build_path(n, 0, n - 1, k), prog, Benign(), 300)
            assert all(prog.belief(m) is None for m in tr.final.memories)


def test_front_agent_lost_on_entry():
    # black hole at v2 of the first translation into it
    prog = path_home_program()
    inst = build_path(6, 0, 3, 6)
    tr = run(inst, prog, Trigger("entering and entries == 0"), 40)
    td = tr.destruction_time
    lost = tr.records[td - 1].destroyed
    assert [prog.describe(tr.records[td - 2].memories[a])["role"] for a in lost] == ["L"]
    later = tr.records[td + 1]
    knowers = {prog.describe(later.memories[a])["role"] for a in later.positions
               if prog.belief(later.memories[a]) is not None}
    assert {"I1", "I2"} <= knowers
    c1 = decompose(inst).home_component
    assert all(v in c1 for v in later.positions.values())


def test_front_agent_alone_beyond():
    # frozen from simulation: one activation in round 24 on path 6, black hole at 2
    prog = path_home_program()
    inst = build_path(6, 0, 2, 6)
    tr = run(inst, prog, Scripted(frozenset({24})), 30)
    assert tr.final.destroyed_at == (None, 24, 24, 24, None, None)
    rec = tr.records[-1]
    assert rec.positions[0] > 2
    assert prog.describe(rec.memories[0])["role"] == "L"
    assert prog.belief(rec.memories[0]) is not None


def test_rendezvous_branches():
    prog = path_home_program()
    inst = build_path(6, 0, 2, 6)
    # the far knower and F1 step onto the black hole together in round 50
    hit = run(inst, prog, Scripted(frozenset({24, 50})), 120)
    assert hit.final.destroyed_at == (50, 24, 24, 24, 50, None)
    assert prog.belief(hit.final.memories[5]) is not None
    spared = run(inst, prog, Scripted(frozenset({24})), 120)
    assert spared.final.destroyed_count == 3
    c1 = decompose(inst).home_component
    assert spared.final.positions[0] in c1 and spared.final.positions[4] in c1
    H, spec = coverage_plan(inst, prog, "HOME_COMPONENT")
    for sched in ({24, 50}, {24}):
        full = run(inst, prog, Scripted(frozenset(sched)), H)
        assert check_coverage(full, None, spec).passed
        assert check_survivor_knowledge(full, inst, prog).passed


def test_four_agent_variant_matches_small_group():
    a = run(build_path(7, 0, None, 4), path_bbh_program(), Benign(), 300)
    b = run(build_path(7, 0, None, 6), path_home_program(), Benign(), 300)
    assert [r.positions for r in a.records] == [{x: v for x, v in r.positions.items() if x < 4} for r in b.records]


@pytest.mark.parametrize("round_,side", [(24, 1), (3, 0)])
def test_four_agent_survivor_sweeps_its_side(round_, side):
    # frozen from simulation on path 7 with the black hole at 2
    prog = path_bbh_program()
    inst = build_path(7, 0, 2, 4)
    H, spec = coverage_plan(inst, prog, "ANY_COMPONENT")
    tr = run(inst, prog, Scripted(frozenset({round_})), H)
    assert tr.final.destroyed_count == 3 if side else tr.final.destroyed_count == 1
    comp = decompose(inst).components[side]
    assert all(tr.final.positions[a] in comp for a in tr.final.alive_ids)
    assert check_coverage(tr, None, spec).passed


def test_star_benign_visits_every_leaf_each_phase():
    prog = tree_program(6)
    inst = build_tree([(0, 1), (0, 2), (0, 3), (0, 4)], 0, None, 6)
    tr = run(inst, prog, Benign(), 400)
    by_phase = {}
    for rec in tr.records:
        ph = rec.memories[0].phase
        by_phase.setdefault(ph, set()).update(rec.positions.values())
    # the budget counts backtracking moves too, so a full tour of 4 edges
    # (7 moves before the last return) fits from phase 3 on
    assert by_phase[2] != set(range(5))
    for ph in sorted(by_phase)[2:-1]:
        assert by_phase[ph] == set(range(5))


def test_path_shaped_tree_equals_path():
    for n in (4, 6):
        a = run(build_tree([(i, i + 1) for i in range(n - 1)], 0, None, 6), tree_program(6), Benign(), 250)
        b = run(build_path(n, 0, None, 6), path_home_program(), Benign(), 250)
        assert [r.positions for r in a.records] == [r.positions for r in b.records]


def test_leaf_black_hole_survivors_stay_home_side():
    prog = tree_program(6)
    inst = build_tree([(0, 1), (1, 2), (1, 3)], 0, 3, 6)
    tr = run(inst, prog, Trigger("entering and entries == 0"), 300)
    assert tr.final.destroyed_count == 1
    c1 = decompose(inst).home_component
    assert all(tr.final.positions[a] in c1 for a in tr.final.alive_ids)


def test_ring_benign_period_is_five_n():
    n = 6
    tr = run(build_ring(n, 0, None, 4), ring_program(n), Benign(), 400)
    pos = [tuple(sorted(r.positions.items())) for r in tr.records]
    periods = [p for p in range(1, 100) if all(pos[i] == pos[i + p] for i in range(100, 300))]
    assert periods[0] == 5 * n


def test_ring_survivor_never_reenters():
    n = 7
    prog = ring_program(n)
    inst = build_ring(n, 0, 3, 4)
    tr = run(inst, prog, Trigger("entering and entries == 0"), 400)
    td = tr.destruction_time
    assert td is not None
    led = tr.final.ledger()
    assert all(r <= td for r in led.get(3, []))
    assert set(led) >= set(range(n)) - {3}


def test_smallest_ring():
    prog = ring_program(3)
    inst = build_ring(3, 0, 1, 4)
    H, spec = coverage_plan(inst, prog, "ANY_COMPONENT")
    assert model_check(inst, prog, H, spec, knowledge=True).passed


def test_ring_program_needs_a_ring():
    with pytest.raises(ProgramSpecError):
        make_programs({"algorithm": "ring4"}, build_path(5, 0, None, 4))


def test_skipping_the_return_is_caught(monkeypatch):
    # mutation: I2 stays with L at the end of the opening instead of going back
    mutated = dict(pattern.SCHEDULE)
    mutated["M2"] = dict(mutated["M2"], I2=(1, 1))
    monkeypatch.setattr(pattern, "SCHEDULE", mutated)
    prog = path_bbh_program()
    inst = build_path(6, 0, 3, 4)
    v = model_check(inst, prog, 60, None, knowledge=True)
    assert v.verdict == "FAIL"
    assert v.counterexample is not None


def test_every_block_moves_one_edge():
    prog = path_home_program()
    for n in (5, 9):
        tr = run(build_path(n, 0, None, 6), prog, Benign(), 300)
        recs = tr.records
        for i, rec in enumerate(recs):
            sg = [a for a, m in enumerate(rec.memories) if isinstance(m, SGMem)]
            if i >= 5 and all(rec.memories[a].last == "R5" for a in sg):
                before = Counter(recs[i - 5].positions[a] for a in sg)
                after = Counter(rec.positions[a] for a in sg)
                assert sorted(before.values()) == sorted(after.values()) == [2, 2]
                assert len(set(before) & set(after)) == 1


def test_tree_instances_enumerated():
    assert sum(1 for n in range(3, 8) for _ in nx.nonisomorphic_trees(n)) == 1 + 2 + 3 + 6 + 11

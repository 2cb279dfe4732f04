from dataclasses import dataclass
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbhsim.adversary import AlwaysActive, Benign, Scripted, Trigger
from bbhsim.agents import path_bbh_program, path_home_program
from bbhsim.engine import run
from bbhsim.graph import build_path
from bbhsim.verify import (
    CoverageSpec,
    Target,
    _covered,
    casualty_report,
    check_coverage,
    check_survivor_knowledge,
    coverage_plan,
    horizon_stable,
    model_check,
    replay_verdict,
    suspicious_sets,
)


def covered_brute(rounds, warmup, window, end):
    """Every interval of ``window`` rounds between warmup and end holds a visit."""
    hits = set(rounds)
    return all(any(r in hits for r in range(s, s + window))
               for s in range(warmup, end - window + 2))


@settings(max_examples=300, deadline=None)
@given(st.sets(st.integers(0, 60)), st.integers(0, 20), st.integers(1, 15), st.integers(0, 60))
def test_window_rule_matches_brute_force(rounds, warmup, window, end):
    assert _covered(sorted(rounds), warmup, window, end) == covered_brute(rounds, warmup, window, end)


def test_coverage_spec_validation():
    with pytest.raises(ValueError):
        CoverageSpec(Target.HOME_COMPONENT, 0, 0)
    with pytest.raises(ValueError):
        CoverageSpec(Target.HOME_COMPONENT, -1, 5)
    spec = CoverageSpec("ANY_COMPONENT", 3, 9)
    assert CoverageSpec.from_dict(spec.to_dict()) == spec


def test_benign_covers_whole_graph():
    inst = build_path(5, 0, None, 6)
    tr = run(inst, path_home_program(), Benign(), 300)
    assert check_coverage(tr, None, CoverageSpec(Target.WHOLE_GRAPH, 100, 60)).passed
    # a window shorter than the round trip must fail
    assert check_coverage(tr, None, CoverageSpec(Target.WHOLE_GRAPH, 100, 5)).verdict == "FAIL"


def test_short_trace_is_inconclusive():
    inst = build_path(5, 0, None, 6)
    tr = run(inst, path_home_program(), Benign(), 50)
    assert check_coverage(tr, None, CoverageSpec(Target.WHOLE_GRAPH, 10, 30)).verdict == "INCONCLUSIVE"


def test_stranded_survivor_covers_far_side_only():
    # frozen: on path 7 with the black hole at 2, one activation in round 24
    # leaves the four-agent team's survivor beyond the black hole
    prog = path_bbh_program()
    inst = build_path(7, 0, 2, 4)
    H, spec = coverage_plan(inst, prog, "ANY_COMPONENT")
    tr = run(inst, prog, Scripted(frozenset({24})), H)
    assert check_coverage(tr, None, spec).passed
    home = CoverageSpec(Target.HOME_COMPONENT, spec.warmup, spec.window)
    assert check_coverage(tr, None, home).verdict == "FAIL"


@dataclass(frozen=True)
class Step:
    aid: int


class Forward:
    """Every agent always takes port 1."""

    name = "forward"

    def initial_memory(self, aid, k):
        return Step(aid)

    def decide(self, aid, inp, mem):
        return 1, mem

    def describe(self, mem):
        return {"group": "F", "role": "F"}

    def belief(self, mem):
        return None


def test_everyone_lost_fails_coverage():
    inst = build_path(4, 0, 1, 2)
    tr = run(inst, Forward(), AlwaysActive(), 10)
    assert not tr.final.alive_ids
    assert check_coverage(tr, None, CoverageSpec(Target.HOME_COMPONENT, 0, 2)).verdict == "FAIL"


def test_knowledge_after_front_loss():
    prog = path_home_program()
    inst = build_path(6, 0, 3, 6)
    tr = run(inst, prog, Trigger("entering and entries == 0"), 60)
    assert check_survivor_knowledge(tr, inst, prog).passed
    cut = run(inst, prog, Trigger("entering and entries == 0"), tr.destruction_time + 1)
    assert check_survivor_knowledge(cut, inst, prog).verdict == "INCONCLUSIVE"


class WrongBelief:
    """Delegates to a real program but every agent claims port 1 from home."""

    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name

    def __getattr__(self, item):
        return getattr(self.inner, item)

    def belief(self, mem):
        return ("route", (1,))


def test_wrong_belief_fails():
    prog = path_home_program()
    inst = build_path(6, 0, 3, 6)
    tr = run(inst, prog, Benign(), 20)
    v = check_survivor_knowledge(tr, inst, WrongBelief(prog))
    assert v.verdict == "FAIL" and "wrong belief" in v.detail


def test_knowledge_check_needs_programs():
    tr = run(build_path(4, 0, None, 6), path_home_program(), Benign(), 5)
    with pytest.raises(ValueError):
        check_survivor_knowledge(tr)


# -- suspicious sets


def test_suspects_start_as_everything_but_home():
    prog = path_bbh_program()
    inst = build_path(5, 0, 2, 4)
    s = suspicious_sets(inst, prog, (), 1)
    assert all(v == frozenset({None, 1, 2, 3, 4}) for v in s.values())


def test_suspects_narrow_after_the_loss():
    # frozen from simulation: L dies entering node 2 in round 3
    prog = path_bbh_program()
    inst = build_path(5, 0, 2, 4)
    tr = run(inst, prog, Trigger("entering and entries == 0"), 40)
    sched = [r.round for r in tr.records if r.activated]
    assert tr.final.destroyed_at == (None, None, None, 3)
    assert suspicious_sets(inst, prog, sched, 4) == {a: frozenset({None, 1, 2, 3, 4}) for a in (0, 1, 2)}
    s5 = suspicious_sets(inst, prog, sched, 5)
    assert s5[1] == s5[2] == frozenset({2}) and len(s5[0]) == 5
    assert suspicious_sets(inst, prog, sched, 6) == {a: frozenset({2}) for a in (0, 1, 2)}


def test_suspect_oracle_bounds():
    inst = build_path(12, 0, 2, 4)
    with pytest.raises(ValueError):
        suspicious_sets(inst, path_bbh_program(), (), 3)
    with pytest.raises(ValueError):
        suspicious_sets(build_path(5, 0, 2, 4), path_bbh_program(), (), 0)


def test_suspects_only_shrink():
    rng = random.Random(3)
    for _ in range(12):
        n = rng.randint(3, 5)
        inst = build_path(n, 0, rng.randint(1, n - 1), 4)
        prog = path_bbh_program()
        sched = sorted(rng.sample(range(1, 12), rng.randint(0, 2)))
        prev = None
        for t in range(1, 12):
            cur = suspicious_sets(inst, prog, sched, t)
            assert all(inst.bbh in s for s in cur.values())
            if prev is not None:
                assert all(cur[a] <= prev[a] for a in cur)
            prev = cur


# -- model checking


def test_three_agents_fail_on_path_nine():
    inst = build_path(9, 0, 4, 3)
    prog = path_bbh_program(team=3)
    v = model_check(inst, prog, 200, knowledge=True)
    assert v.verdict == "FAIL"
    assert v.schedule
    again = replay_verdict(v, inst, prog, 200, knowledge=True)
    assert again.verdict == "FAIL"


def test_no_black_hole_never_branches():
    inst = build_path(6, 0, None, 6)
    prog = path_home_program()
    H, spec = coverage_plan(inst, prog, "HOME_COMPONENT")
    v = model_check(inst, prog, H, spec, knowledge=True)
    assert v.passed and v.stats["branches"] == 0


def test_budget_exhaustion_is_inconclusive():
    inst = build_path(6, 0, 3, 6)
    v = model_check(inst, path_home_program(), 100, budget=10)
    assert v.verdict == "INCONCLUSIVE"


def test_horizon_shorter_than_window():
    inst = build_path(5, 0, 2, 4)
    v = model_check(inst, path_bbh_program(), 10, CoverageSpec(Target.ANY_COMPONENT, 5, 10))
    assert v.verdict == "INCONCLUSIVE"


@pytest.mark.parametrize("bbh", [1, 2, 3, 4])
def test_pruning_keeps_the_verdict(bbh):
    inst = build_path(5, 0, bbh, 4)
    prog = path_bbh_program()
    for knowledge in (False, True):
        a = model_check(inst, prog, 16, knowledge=knowledge)
        b = model_check(inst, prog, 16, knowledge=knowledge, prune=False)
        assert a.verdict == b.verdict


def test_counterexample_replays_identically():
    inst = build_path(9, 0, 4, 3)
    prog = path_bbh_program(team=3)
    v = model_check(inst, prog, 200, knowledge=True)
    again = run(inst, prog, Scripted(frozenset(v.schedule)), len(v.counterexample.records))
    assert again.to_jsonl() == v.counterexample.to_jsonl()


# -- casualties and horizons


def test_casualty_report_benign():
    tr = run(build_path(6, 0, 3, 6), path_home_program(), Benign(), 100)
    rep = casualty_report(tr)
    assert rep["destroyed"] == 0 and rep["anchors"] == [] and rep["alive"] == 6


def test_casualty_report_counts_loss():
    prog = path_home_program()
    tr = run(build_path(6, 0, 2, 6), prog, Scripted(frozenset({24})), 30)
    rep = casualty_report(tr, prog)
    assert rep["destroyed"] == 3 and rep["destroyed_agents"] == [1, 2, 3]


def test_horizon_doubling():
    inst = build_path(6, 0, 3, 6)
    prog = path_home_program()

    def check(h):
        return check_survivor_knowledge(run(inst, prog, Trigger("relevant"), h), inst, prog)

    assert horizon_stable(check, 150)

"""Adversary strategies deciding when the black hole fires.

Trigger predicates use a small expression language evaluated over the view of
the current round, for example ``entering and entries == 0`` (first entry) or
``relevant and round >= 40 and destroyed < 2``.

Names available in predicates:

    round          current round number
    entering       number of agents choosing a port into the black hole
    occupied       number of agents starting the round on the black hole
    relevant       entering + occupied
    destroyed      agents destroyed so far
    activations    activations so far
    entries        earlier rounds in which some agent entered
    relevant_seen  earlier rounds in which some agent was at or entering
    entering_agent(i), at_agent(i)   whether agent i is entering / on it
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

from .engine import AdversaryView


class PredicateError(ValueError):
    pass


_ALLOWED_NODES = (
    ast.Expression, ast.BoolOp, ast.And, ast.Or, ast.UnaryOp, ast.Not, ast.Compare,
    ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Name, ast.Load,
    ast.Constant, ast.Call, ast.BinOp, ast.Add, ast.Sub, ast.Mult, ast.Mod,
    ast.In, ast.NotIn, ast.Tuple,
)
_NAMES = {"round", "entering", "occupied", "relevant", "destroyed", "activations",
          "entries", "relevant_seen", "True", "False"}
_FUNCS = {"entering_agent", "at_agent"}


def compile_predicate(text: str):
    """Parse and whitelist a predicate; returns a code object."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise PredicateError(f"cannot parse predicate {text!r}: {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise PredicateError(f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Name) and node.id not in _NAMES | _FUNCS:
            raise PredicateError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or len(node.args) != 1 or node.keywords:
                raise PredicateError(f"bad call in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, bool)):
            raise PredicateError(f"only integer literals are allowed in {text!r}")
    return compile(tree, "<predicate>", "eval")


def predicate_env(view: AdversaryView) -> dict:
    w = view.world
    entering = set(view.entering)
    at = set(view.at_bbh)
    return {
        "__builtins__": {},
        "round": view.round,
        "entering": len(entering),
        "occupied": len(at),
        "relevant": len(entering) + len(at),
        "destroyed": w.destroyed_count,
        "activations": w.activations,
        "entries": w.entry_rounds,
        "relevant_seen": w.relevant_rounds,
        "entering_agent": lambda i: i in entering,
        "at_agent": lambda i: i in at,
    }


class Benign:
    name = "benign"

    def decide(self, view: AdversaryView) -> bool:
        return False

    def params(self) -> dict:
        return {}


class AlwaysActive:
    name = "always_active"

    def decide(self, view: AdversaryView) -> bool:
        return True

    def params(self) -> dict:
        return {}


@dataclass
class Scripted:
    rounds: frozenset = field(default_factory=frozenset)
    name: str = "scripted"

    def __post_init__(self):
        self.rounds = frozenset(int(r) for r in self.rounds)

    def decide(self, view: AdversaryView) -> bool:
        return view.round in self.rounds

    def params(self) -> dict:
        return {"rounds": sorted(self.rounds)}


@dataclass
class Trigger:
    predicate: str
    name: str = "trigger"

    def __post_init__(self):
        self._code = compile_predicate(self.predicate)

    def decide(self, view: AdversaryView) -> bool:
        return bool(eval(self._code, predicate_env(view)))

    def params(self) -> dict:
        return {"predicate": self.predicate}


@dataclass
class Budgeted:
    max_activations: int
    predicate: str = "relevant"
    name: str = "budgeted"

    def __post_init__(self):
        if self.max_activations < 0:
            raise PredicateError("max_activations must be non-negative")
        self._code = compile_predicate(self.predicate)

    def decide(self, view: AdversaryView) -> bool:
        if view.world.activations >= self.max_activations:
            return False
        return bool(eval(self._code, predicate_env(view)))

    def params(self) -> dict:
        return {"max_activations": self.max_activations, "predicate": self.predicate}


def adversary_library() -> dict:
    return {
        "benign": Benign,
        "always_active": AlwaysActive,
        "scripted": Scripted,
        "trigger": Trigger,
        "budgeted": Budgeted,
    }


def make_adversary(spec: dict):
    """Build a strategy from ``{"name": ..., **params}``."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise PredicateError("adversary spec needs a name")
    name = spec["name"]
    params = {k: v for k, v in spec.items() if k != "name"}
    lib = adversary_library()
    if name not in lib:
        raise PredicateError(f"unknown adversary {name!r}")
    try:
        if name == "scripted":
            return Scripted(frozenset(params.get("rounds", [])))
        if name == "trigger":
            return Trigger(params["predicate"])
        if name == "budgeted":
            return Budgeted(int(params["max_activations"]), params.get("predicate", "relevant"))
        if params:
            raise PredicateError(f"{name} takes no parameters")
        return lib[name]()
    except KeyError as exc:
        raise PredicateError(f"adversary {name!r} is missing parameter {exc}") from exc

"""Agent programs and a factory that builds them from scenario parameters."""

from __future__ import annotations

from .path_tree import ALGORITHMS as PATH_TREE_ALGORITHMS
from .path_tree import PathTreeProgram, resolve_belief


class ProgramSpecError(ValueError):
    pass


def algorithm_names() -> tuple[str, ...]:
    return PATH_TREE_ALGORITHMS + ("graph3d3", "bh_delta2")


def make_programs(spec: dict, instance=None):
    """Build a program set from ``{"algorithm": ..., **params}``.

    ``k`` defaults to the instance's agent count; ``team`` may shrink the
    exploring team below ``k`` (extra agents idle at home).
    """
    if not isinstance(spec, dict) or "algorithm" not in spec:
        raise ProgramSpecError("program spec needs an algorithm")
    name = spec["algorithm"]
    k = spec.get("k", instance.k if instance is not None else None)
    if k is None:
        raise ProgramSpecError("program spec needs k or an instance")
    if name in PATH_TREE_ALGORITHMS:
        n_known = spec.get("n_known")
        if name == "ring4" and instance is not None:
            g = instance.graph
            if any(g.degree(v) != 2 for v in range(g.node_count)):
                raise ProgramSpecError("ring4 runs only on rings")
            if n_known is None:
                n_known = g.node_count
        return PathTreeProgram(name, int(spec.get("team", k)), n_known)
    if name == "graph3d3":
        from .general import GraphHomeProgram
        return GraphHomeProgram(int(k), spec.get("delta_hint"))
    if name == "bh_delta2":
        from .bh import CautiousBHProgram
        return CautiousBHProgram(int(k))
    raise ProgramSpecError(f"unknown algorithm {name!r}")


def path_home_program(team: int = 6) -> PathTreeProgram:
    return PathTreeProgram("path6", team)


def path_bbh_program(team: int = 4) -> PathTreeProgram:
    return PathTreeProgram("path4", team)


def tree_program(k: int) -> PathTreeProgram:
    if k >= 6:
        return PathTreeProgram("tree6", k)
    return PathTreeProgram("tree4", k)


def ring_program(n_known: int, k: int = 4) -> PathTreeProgram:
    return PathTreeProgram("ring4", k, n_known)


__all__ = ["PathTreeProgram", "ProgramSpecError", "algorithm_names", "make_programs",
           "path_bbh_program", "path_home_program", "resolve_belief", "ring_program", "tree_program"]

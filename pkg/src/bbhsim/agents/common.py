"""Location algebra, walkers and sweeping shared by the agent programs.

Agents never see node ids. They describe places relative to home:

* on trees (and as a fallback anywhere) a place is the reduced port route from
  home, a tuple of (exit port, entry port) pairs; leaving through the port we
  came in by pops the last pair;
* on rings a place is (offset from home, port leading to offset + 1).

A *key* is the hashable identity used for comparisons: the exit ports of the
route, or the offset on a ring.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


class TreeSpace:
    kind = "route"

    @staticmethod
    def start():
        return ()

    @staticmethod
    def move(loc, exit_port, entry_port):
        if loc and loc[-1][1] == exit_port:
            return loc[:-1]
        return loc + ((exit_port, entry_port),)

    @staticmethod
    def key(loc):
        return tuple(e for e, _ in loc)

    @staticmethod
    def step_key(loc, exit_port):
        if loc and loc[-1][1] == exit_port:
            return tuple(e for e, _ in loc[:-1])
        return tuple(e for e, _ in loc) + (exit_port,)

    @staticmethod
    def blocked_port(loc, bkey):
        """Port at ``loc`` leading onto the black hole, or 0."""
        if bkey is None or not bkey:
            return 0
        k = TreeSpace.key(loc)
        if k == bkey[:-1]:
            return bkey[-1]
        if len(k) == len(bkey) + 1 and k[:-1] == bkey:
            return loc[-1][1]
        return 0

    @staticmethod
    def is_far(loc, bkey):
        k = TreeSpace.key(loc)
        return bkey is not None and len(k) > len(bkey) and k[: len(bkey)] == bkey

    @staticmethod
    def home_port_toward(loc):
        """Port leading one step closer to home."""
        return loc[-1][1] if loc else 0


@dataclass(frozen=True)
class RingSpace:
    n: int
    kind: str = "ring"

    def start(self):
        return (0, 1)

    def move(self, loc, exit_port, entry_port):
        off, plus = loc
        if exit_port == plus:
            return ((off + 1) % self.n, 3 - entry_port)
        return ((off - 1) % self.n, entry_port)

    def key(self, loc):
        return loc[0]

    def step_key(self, loc, exit_port):
        off, plus = loc
        return (off + (1 if exit_port == plus else -1)) % self.n

    def blocked_port(self, loc, bkey):
        if bkey is None:
            return 0
        off, plus = loc
        if (off + 1) % self.n == bkey:
            return plus
        if (off - 1) % self.n == bkey:
            return 3 - plus
        return 0

    def is_far(self, loc, bkey):
        return False


def sweep_port(degree: int, arrival: int, blocked: int) -> int:
    """Right-hand rule: the port after the arrival port, skipping a blocked one."""
    start = arrival % degree + 1 if arrival else 1
    for i in range(degree):
        p = (start - 1 + i) % degree + 1
        if p != blocked:
            return p
    return 0


# ----------------------------------------------------------------- walkers


@dataclass(frozen=True)
class EulerWalker:
    """Depth-first tour from home, ports in increasing order, parent last.

    ``budget`` caps the number of steps before heading straight home;
    ``depth_limit`` treats nodes at that depth as leaves. Either may be None.
    ``visits`` lists the key of every node reached, home first.
    """

    route: tuple = ()
    lasts: tuple = (0,)
    degs: tuple = (0,)
    steps: int = 0
    budget: int | None = None
    depth_limit: int | None = None
    truncated: bool = False
    visits: tuple = ((),)

    @classmethod
    def fresh(cls, home_degree, budget=None, depth_limit=None):
        return cls((), (0,), (home_degree,), 0, budget, depth_limit, False, ((),))

    @property
    def loc(self):
        return self.route

    def _choose(self):
        route = self.route
        parent = route[-1][1] if route else 0
        deg = self.degs[-1]
        if self.budget is not None and self.steps >= self.budget:
            rest = any(p != parent for p in range(self.lasts[-1] + 1, deg + 1))
            return (parent or None), (rest or bool(route))
        if self.depth_limit is not None and len(route) >= self.depth_limit:
            return (parent or None), deg > 1
        for p in range(self.lasts[-1] + 1, deg + 1):
            if p != parent:
                return p, False
        return (parent or None), False

    def next_port(self):
        return self._choose()[0]

    @property
    def done(self):
        return self.next_port() is None

    @property
    def complete(self):
        port, cut = self._choose()
        return port is None and not (self.truncated or cut)

    def advance(self, exit_port, degree, entry_port, marked=False):
        port, cut = self._choose()
        truncated = self.truncated or cut
        route = self.route
        if route and exit_port == route[-1][1]:
            route = route[:-1]
            lasts = self.lasts[:-1]
            degs = self.degs[:-1]
        else:
            lasts = self.lasts[:-1] + (exit_port, 0)
            degs = self.degs + (degree,)
            route = route + ((exit_port, entry_port),)
        key = tuple(e for e, _ in route)
        return EulerWalker(route, lasts, degs, self.steps + 1, self.budget, self.depth_limit,
                           truncated, self.visits + (key,))


@dataclass(frozen=True)
class RingWalker:
    """Straight walk around a ring, starting through port 1."""

    n: int
    off: int = 0
    plus: int = 1
    steps: int = 0
    truncated: bool = False

    @property
    def loc(self):
        return (self.off, self.plus)

    def next_port(self):
        return self.plus

    @property
    def done(self):
        return False

    @property
    def complete(self):
        return False

    @property
    def visits(self):
        return ()

    def advance(self, exit_port, degree, entry_port, marked=False):
        return RingWalker(self.n, (self.off + 1) % self.n, 3 - entry_port, self.steps + 1)


def walk_bound(kind: str, phase: int, home_degree: int) -> int:
    """Worst-case benign length in rounds of one phase of the pattern walk.

    A phase is two make rounds, five rounds per non-reversing step after the
    first, and one gather round.
    """
    b = 2 ** phase
    if kind == "tree":
        steps, flips = 2 * b, 1
    elif kind == "path":
        steps, flips = 2 * b * home_degree, home_degree
    else:
        raise ValueError(kind)
    return 3 + 5 * (steps - 1 - flips)


def make_walker(kind: str, phase: int, home_degree: int, n: int | None = None):
    if kind == "path":
        return EulerWalker.fresh(home_degree, None, 2 ** phase)
    if kind == "tree":
        return EulerWalker.fresh(home_degree, 2 ** phase, None)
    if kind == "ring":
        return RingWalker(n)
    raise ValueError(kind)


def with_loc(mem, inp, space):
    """Fold last round's move into ``mem.loc`` using this round's arrival port."""
    if mem.pending and inp.arrival_port:
        return replace(mem, loc=space.move(mem.loc, mem.pending, inp.arrival_port), pending=0)
    if mem.pending:
        return replace(mem, pending=0)
    return mem

"""Map construction from a marked home node.

Nodes are numbered in discovery order, which is breadth-first order because
nodes are processed in that order. Every node keeps its tree edge to its
parent, so the port route from home to any node is known. When a walk reaches
an unknown node ``w`` through an unresolved port ``(u, p)``, it tries each known
node ``x`` that could be ``w`` (same degree, depth within one of ``u``'s, the
arrival port still unresolved at ``x``) by following ``x``'s tree path back
towards home, checking arrival ports and degrees on the way. Reaching the
marked home node at the end proves ``w == x``; any mismatch sends the walk back
the way it came and the next candidate is tried. No match means ``w`` is new.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

BLOCKED = "blocked"


@dataclass(frozen=True)
class RootPaths:
    """Immutable map: ``nodes[i] = (degree, parent, exit, entry, depth)``.

    ``exit`` is the parent's port towards node ``i`` and ``entry`` the port of
    ``i`` back to its parent. ``links`` holds resolved ports as
    ``((i, port), (j, port'))`` pairs or ``((i, port), None)`` for ports known to
    lead to the black hole.
    """

    nodes: tuple = ()
    links: tuple = ()

    @classmethod
    def start(cls, home_degree: int) -> "RootPaths":
        return cls(((home_degree, -1, 0, 0, 0),), ())

    @cached_property
    def _table(self) -> dict:
        return dict(self.links)

    def __len__(self) -> int:
        return len(self.nodes)

    def degree(self, i: int) -> int:
        return self.nodes[i][0]

    def depth(self, i: int) -> int:
        return self.nodes[i][4]

    def status(self, i: int, port: int):
        """``None`` if unresolved, ``BLOCKED``, or the (node, port) at the other end."""
        t = self._table
        if (i, port) not in t:
            return None
        other = t[(i, port)]
        return BLOCKED if other is None else other

    def _with_links(self, *pairs) -> "RootPaths":
        t = dict(self._table)
        for a, b in pairs:
            t[a] = b
        return RootPaths(self.nodes, tuple(sorted(t.items(), key=lambda kv: kv[0])))

    def add(self, u: int, port: int, degree: int, entry: int) -> tuple["RootPaths", int]:
        i = len(self.nodes)
        grown = RootPaths(self.nodes + ((degree, u, port, entry, self.depth(u) + 1),), self.links)
        return grown._with_links(((u, port), (i, entry)), ((i, entry), (u, port))), i

    def connect(self, u: int, port: int, x: int, entry: int) -> "RootPaths":
        return self._with_links(((u, port), (x, entry)), ((x, entry), (u, port)))

    def block(self, u: int, port: int) -> "RootPaths":
        if self.status(u, port) is not None:
            return self
        return self._with_links(((u, port), None))

    def key(self, i: int) -> tuple:
        """Exit ports of the tree path from home to ``i``."""
        out = []
        while i > 0:
            _, parent, exit_port, _, _ = self.nodes[i]
            out.append(exit_port)
            i = parent
        return tuple(reversed(out))

    def blocked_ports(self) -> list[tuple[int, int]]:
        return [a for a, b in self.links if b is None]

    def complete(self) -> bool:
        return self.next_unresolved() is None

    def next_unresolved(self):
        for i, (deg, *_rest) in enumerate(self.nodes):
            for p in range(1, deg + 1):
                if self.status(i, p) is None:
                    return i, p
        return None

    def candidates(self, u: int, degree: int, entry: int) -> list[int]:
        du = self.depth(u)
        return [x for x in range(1, len(self.nodes))
                if x != u and self.degree(x) == degree and abs(self.depth(x) - du) <= 1
                and entry <= degree and self.status(x, entry) is None]

    def up_path(self, x: int) -> tuple:
        """Steps from ``x`` to home: (port, expected arrival port, expected degree)."""
        out = []
        while x > 0:
            _, parent, exit_port, entry, _ = self.nodes[x]
            out.append((entry, exit_port, self.degree(parent)))
            x = parent
        return tuple(out)

    def tree_path(self, a: int, b: int) -> tuple:
        """Moves (port, node reached) along tree edges from ``a`` to ``b``."""
        up_a, up_b = [a], [b]
        while up_a[-1] > 0:
            up_a.append(self.nodes[up_a[-1]][1])
        while up_b[-1] > 0:
            up_b.append(self.nodes[up_b[-1]][1])
        common = set(up_a) & set(up_b)
        moves = []
        for x in up_a:
            if x in common:
                lca = x
                break
            moves.append((self.nodes[x][3], self.nodes[x][1]))
        down = []
        for x in up_b:
            if x == lca:
                break
            down.append((self.nodes[x][2], x))
        return tuple(moves + list(reversed(down)))

    def children(self, i: int) -> list[int]:
        kids = [j for j in range(1, len(self.nodes)) if self.nodes[j][1] == i]
        return sorted(kids, key=lambda j: self.nodes[j][2])

    def tour(self) -> tuple:
        """Depth-first tour of the tree from home back to home."""
        moves = []

        def visit(i):
            for j in self.children(i):
                moves.append((self.nodes[j][2], j))
                visit(j)
                moves.append((self.nodes[j][3], i))

        visit(0)
        return tuple(moves)


@dataclass(frozen=True)
class MapWalker:
    """Walk that builds a :class:`RootPaths` map, then tours it.

    ``budget`` limits the number of moves before heading home (None for no
    limit). With ``loop`` the finished walk tours the tree forever; otherwise
    it stops at home after one tour.
    """

    rp: RootPaths
    at: int | None = 0
    task: tuple = ("next",)
    route: tuple = ()
    trail: tuple = ((0, True),)
    steps: int = 0
    budget: int | None = None
    truncated: bool = False
    loop: bool = False
    visits: tuple = field(default=(), compare=False)

    @classmethod
    def fresh(cls, home_degree: int, budget=None, loop=False, previous: "MapWalker | None" = None):
        rp = previous.rp if previous is not None else RootPaths.start(home_degree)
        return cls(rp, 0, ("next",), (), ((home_degree, True),), 0, budget, False, loop)._settle()

    # -- queries

    @property
    def complete(self) -> bool:
        return False

    @property
    def done(self) -> bool:
        return self.task[0] == "done"

    def next_port(self):
        kind = self.task[0]
        if kind in ("go", "tour", "home"):
            return self.task[1][0][0]
        if kind == "probe":
            return self.task[2]
        if kind == "replay":
            _, u, p, dw, q, cands, ci, k, back = self.task
            return self.rp.up_path(cands[ci])[k][0]
        if kind == "retrace":
            return self.task[1][0]
        return None

    def next_is_safe(self) -> bool:
        """Whether the next move leads to a node this walk has already stood on."""
        kind = self.task[0]
        if kind in ("go", "tour", "home", "retrace"):
            return True
        return False

    @property
    def here(self):
        """Map index of the current node, or None while it is being identified."""
        return self.at

    # -- transitions

    def _settle(self) -> "MapWalker":
        w = self
        for _ in range(4 * len(w.rp) + 8):
            kind = w.task[0]
            if kind == "done":
                return w
            if w.budget is not None and w.steps >= w.budget and kind != "home":
                return w._go_home()
            if kind in ("go", "tour", "home") and not w.task[1]:
                if kind == "tour" and w.loop:
                    w = replace(w, task=("tour", w.rp.tour()))
                    if not w.task[1]:
                        return replace(w, task=("done",))
                    continue
                if kind in ("tour", "home"):
                    return replace(w, task=("done",))
                w = replace(w, task=("next",))
                continue
            if kind != "next":
                return w
            nxt = w.rp.next_unresolved()
            if nxt is None:
                if w.at == 0:
                    tour = w.rp.tour()
                    w = replace(w, task=("tour", tour) if tour else ("done",))
                else:
                    w = replace(w, task=("go", w.rp.tree_path(w.at, 0)))
                continue
            u, p = nxt
            if w.at != u:
                w = replace(w, task=("go", w.rp.tree_path(w.at, u)))
                continue
            return replace(w, task=("probe", u, p))
        raise RuntimeError("map walker failed to settle")

    def _go_home(self) -> "MapWalker":
        if self.at is not None:
            moves = self.rp.tree_path(self.at, 0)
        else:
            moves = tuple((entry, None) for _, entry in reversed(self.route))
        w = replace(self, task=("home", moves), truncated=True)
        return replace(w, task=("done",)) if not moves else w

    def block(self, port: int) -> "MapWalker":
        """Record that ``port`` at the current node leads to the black hole."""
        if self.at is None:
            if self.task[0] == "replay" and self.next_port() == port:
                return self._mismatch(moved=False)
            return self
        rp = self.rp.block(self.at, port)
        if rp is self.rp:
            return self
        task = self.task
        if task[0] == "probe" and task[1:] == (self.at, port):
            task = ("next",)
        return replace(self, rp=rp, task=task)._settle()

    def _mismatch(self, moved: bool, arrival: int = 0) -> "MapWalker":
        _, u, p, dw, q, cands, ci, k, back = self.task
        back = back + ((arrival,) if moved else ())
        ports = tuple(reversed(back))
        if ports:
            return replace(self, task=("retrace", ports, u, p, dw, q, cands, ci))
        return replace(self, task=("replay", u, p, dw, q, cands, ci + 1, 0, ()))._next_candidate()

    def _next_candidate(self) -> "MapWalker":
        _, u, p, dw, q, cands, ci, k, back = self.task
        if ci < len(cands):
            return self
        rp, i = self.rp.add(u, p, dw, q)
        return replace(self, rp=rp, at=i, task=("next",))._settle()

    def _push(self, exit_port, degree, entry, marked):
        if self.route and self.route[-1][1] == exit_port:
            return self.route[:-1], self.trail[:-1]
        return self.route + ((exit_port, entry),), self.trail + ((degree, marked),)

    def advance(self, exit_port: int, degree: int, entry: int, marked: bool = False) -> "MapWalker":
        """Fold in one move through ``exit_port`` and what was seen on arrival."""
        route, trail = self._push(exit_port, degree, entry, marked)
        w = replace(self, route=route, trail=trail, steps=self.steps + 1)
        kind = self.task[0]
        if kind in ("go", "tour", "home"):
            moves = self.task[1]
            return replace(w, at=moves[0][1], task=(kind, moves[1:]))._settle()
        if kind == "probe":
            _, u, p = self.task
            if marked:
                return replace(w, rp=w.rp.connect(u, p, 0, entry), at=0, task=("next",))._settle()
            cands = tuple(w.rp.candidates(u, degree, entry))
            w = replace(w, at=None, task=("replay", u, p, degree, entry, cands, 0, 0, ()))
            return w._next_candidate()._settle()
        if kind == "replay":
            _, u, p, dw, q, cands, ci, k, back = self.task
            path = w.rp.up_path(cands[ci])
            port, want_entry, want_degree = path[k]
            last = k == len(path) - 1
            if entry != want_entry or degree != want_degree or marked != last:
                return w._mismatch(moved=True, arrival=entry)._settle()
            if last:
                rp = w.rp.connect(u, p, cands[ci], q)
                return replace(w, rp=rp, at=0, task=("next",))._settle()
            return replace(w, task=("replay", u, p, dw, q, cands, ci, k + 1, back + (entry,)))._settle()
        if kind == "retrace":
            _, ports, u, p, dw, q, cands, ci = self.task
            if len(ports) > 1:
                return replace(w, task=("retrace", ports[1:], u, p, dw, q, cands, ci))._settle()
            w = replace(w, task=("replay", u, p, dw, q, cands, ci + 1, 0, ()))
            return w._next_candidate()._settle()
        raise RuntimeError(f"advance in state {kind}")

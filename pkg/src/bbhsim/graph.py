"""Port-labeled graphs, instances and generators.

Node ids are plain integers used by the simulator only; agents never see them.
Ports at a node of degree d are numbered 1..d.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx


class GraphError(ValueError):
    """Raised when a graph or instance description is invalid."""


@dataclass(frozen=True)
class PortLabeledGraph:
    """Immutable simple connected graph with local port numbers.

    ``adj[v][p - 1]`` is ``(u, q)``: leaving ``v`` through port ``p`` reaches
    ``u``, entering it through port ``q``.
    """

    adj: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        validate_ports(self.adj)

    @property
    def node_count(self) -> int:
        return len(self.adj)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def follow(self, v: int, port: int) -> tuple[int, int]:
        """Return (neighbor, entry port) for leaving ``v`` by ``port``."""
        return self.adj[v][port - 1]

    def neighbors(self, v: int) -> list[int]:
        return [u for u, _ in self.adj[v]]

    @property
    def max_degree(self) -> int:
        return max(len(row) for row in self.adj)

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Each undirected edge once, as (v, p_v, u, p_u) with v < u, sorted."""
        out = []
        for v, row in enumerate(self.adj):
            for p, (u, q) in enumerate(row, start=1):
                if v < u:
                    out.append((v, p, u, q))
        out.sort()
        return out

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        for v, p, u, q in self.edges():
            g.add_edge(v, u, ports={v: p, u: q})
        return g

    def distances_from(self, src: int, avoid: int | None = None) -> dict[int, int]:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for u, _ in self.adj[v]:
                if u != avoid and u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist


def validate_ports(adj) -> None:
    n = len(adj)
    if n == 0:
        raise GraphError("graph has no nodes")
    for v, row in enumerate(adj):
        if n > 1 and len(row) == 0:
            raise GraphError(f"node {v} is isolated")
        seen = set()
        for p, (u, q) in enumerate(row, start=1):
            if not 0 <= u < n:
                raise GraphError(f"node {v} port {p} points outside the graph")
            if u == v:
                raise GraphError(f"self-loop at node {v}")
            if u in seen:
                raise GraphError(f"parallel edges between {v} and {u}")
            seen.add(u)
            if not 1 <= q <= len(adj[u]) or tuple(adj[u][q - 1]) != (v, p):
                raise GraphError(f"edge ({v},{p})->({u},{q}) is not symmetric")
    # connectivity
    reached = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u, _ in adj[v]:
            if u not in reached:
                reached.add(u)
                stack.append(u)
    if len(reached) != n:
        raise GraphError("graph is disconnected")


class _PortBuilder:
    """Collects edges and hands out ports in insertion order per node."""

    def __init__(self, n: int):
        self.rows: list[list[tuple[int, int] | None]] = [[] for _ in range(n)]

    def add_node(self) -> int:
        self.rows.append([])
        return len(self.rows) - 1

    def connect(self, v: int, u: int) -> None:
        pv = len(self.rows[v]) + 1
        pu = len(self.rows[u]) + 1
        self.rows[v].append((u, pu))
        self.rows[u].append((v, pv))

    def build(self, permutations: Mapping[int, Sequence[int]] | None = None) -> PortLabeledGraph:
        rows = [list(r) for r in self.rows]
        if permutations:
            rows = _permute_ports(rows, permutations)
        return PortLabeledGraph(tuple(tuple(r) for r in rows))


def _permute_ports(rows, permutations):
    """``permutations[v][p - 1]`` is the new label of canonical port ``p`` at ``v``."""
    new_label = []
    for v, row in enumerate(rows):
        perm = permutations.get(v)
        if perm is None:
            perm = list(range(1, len(row) + 1))
        perm = [int(x) for x in perm]
        if sorted(perm) != list(range(1, len(row) + 1)):
            raise GraphError(f"port table for node {v} is not a permutation of 1..{len(row)}")
        new_label.append(perm)
    out = [[None] * len(row) for row in rows]
    for v, row in enumerate(rows):
        for p, (u, q) in enumerate(row, start=1):
            out[v][new_label[v][p - 1] - 1] = (u, new_label[u][q - 1])
    return out


@dataclass(frozen=True)
class Instance:
    """A graph with a team size, a home node and an optional black hole."""

    graph: PortLabeledGraph
    k: int
    home: int
    bbh: int | None = None
    names: tuple[tuple[str, int], ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = self.graph.node_count
        if self.k < 1:
            raise GraphError("need at least one agent")
        if not 0 <= self.home < n:
            raise GraphError("home out of range")
        if self.bbh is not None:
            if not 0 <= self.bbh < n:
                raise GraphError("black hole out of range")
            if self.bbh == self.home:
                raise GraphError("black hole cannot sit on the home node")

    def node(self, name: str) -> int:
        return dict(self.names)[name]

    def with_agents(self, k: int) -> "Instance":
        return Instance(self.graph, k, self.home, self.bbh, self.names)

    def with_bbh(self, bbh: int | None) -> "Instance":
        return Instance(self.graph, self.k, self.home, bbh, self.names)

    # interchange format

    def to_json(self) -> str:
        doc = {
            "nodes": self.graph.node_count,
            "edges": [list(e) for e in self.graph.edges()],
            "home": self.home,
            "bbh": self.bbh,
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, k: int = 1) -> "Instance":
        try:
            doc = json.loads(text)
            n = int(doc["nodes"])
            edges = doc["edges"]
            home = int(doc["home"])
            bbh = doc.get("bbh")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise GraphError(f"malformed graph file: {exc}") from exc
        return cls(graph_from_edges(n, edges), k, home, None if bbh is None else int(bbh))


def graph_from_edges(n: int, edges: Iterable[Sequence[int]]) -> PortLabeledGraph:
    """Build a graph from explicit (v, p_v, u, p_u) records."""
    if n < 1:
        raise GraphError("graph needs at least one node")
    slots: list[dict[int, tuple[int, int]]] = [dict() for _ in range(n)]
    for rec in edges:
        if len(rec) != 4:
            raise GraphError(f"edge record {rec!r} must have four fields")
        v, pv, u, pu = (int(x) for x in rec)
        for a, pa, b, pb in ((v, pv, u, pu), (u, pu, v, pv)):
            if not 0 <= a < n:
                raise GraphError(f"node {a} out of range")
            if pa in slots[a]:
                raise GraphError(f"port {pa} used twice at node {a}")
            slots[a][pa] = (b, pb)
    adj = []
    for v, s in enumerate(slots):
        if sorted(s) != list(range(1, len(s) + 1)):
            raise GraphError(f"ports at node {v} are not 1..{len(s)}")
        adj.append(tuple(s[p] for p in range(1, len(s) + 1)))
    return PortLabeledGraph(tuple(adj))


def _check_bbh(bbh, home, n):
    if bbh is not None and bbh == home:
        raise GraphError("black hole cannot sit on the home node")
    if bbh is not None and not 0 <= bbh < n:
        raise GraphError("black hole index out of range")


def build_path(n: int, home_index: int, bbh_index: int | None, k: int) -> Instance:
    """Path 0-1-...-(n-1); port 1 leads to the higher index except at the right end."""
    if n < 2:
        raise GraphError("a path needs at least two nodes")
    if not 0 <= home_index < n:
        raise GraphError("home index out of range")
    _check_bbh(bbh_index, home_index, n)
    adj = []
    for i in range(n):
        if i == 0:
            adj.append(((1, 1 if n == 2 else 2),))
        elif i == n - 1:
            adj.append(((i - 1, 1),))
        else:
            right_entry = 1 if i + 1 == n - 1 else 2
            adj.append(((i + 1, right_entry), (i - 1, 1)))
    return Instance(PortLabeledGraph(tuple(adj)), k, home_index, bbh_index)


def build_ring(n: int, home: int, bbh: int | None, k: int) -> Instance:
    """Ring where port 1 leads to (i+1) mod n and port 2 to (i-1) mod n."""
    if n < 3:
        raise GraphError("a ring needs at least three nodes")
    if not 0 <= home < n:
        raise GraphError("home index out of range")
    _check_bbh(bbh, home, n)
    adj = tuple((((i + 1) % n, 2), ((i - 1) % n, 1)) for i in range(n))
    return Instance(PortLabeledGraph(adj), k, home, bbh)


def build_tree(spec, home: int, bbh: int | None, k: int, max_degree: int | None = None) -> Instance:
    """Tree from an edge list [(a, b), ...] or a Pruefer sequence (flat list of ints).

    Ports follow edge order: a node's first listed edge gets port 1.
    """
    spec = list(spec)
    if spec and all(isinstance(x, int) for x in spec):
        edges = sorted(nx.from_prufer_sequence(spec).edges())
        n = len(spec) + 2
    else:
        edges = [tuple(int(x) for x in e) for e in spec]
        nodes = {x for e in edges for x in e}
        n = max(nodes) + 1 if nodes else 1
        if nodes != set(range(n)):
            raise GraphError("tree node ids must be 0..n-1")
        if len(edges) != n - 1:
            raise GraphError("a tree on n nodes has n-1 edges")
    if not 0 <= home < n:
        raise GraphError("home index out of range")
    _check_bbh(bbh, home, n)
    b = _PortBuilder(n)
    for a, c in edges:
        b.connect(a, c)
    g = b.build()
    if max_degree is not None and g.max_degree > max_degree:
        raise GraphError("degree bound violated")
    return Instance(g, k, home, bbh)


def build_random_bounded(n: int, max_degree: int, seed: int, k: int, home: int = 0,
                         bbh: int | str | None = "random", extra_edges: float = 0.5) -> Instance:
    """Seeded random connected graph with maximum degree at most ``max_degree``.

    A random spanning tree is grown first, then up to ``extra_edges * n`` extra
    edges are added where the degree bound allows. Port order at each node is
    shuffled by the same generator.
    """
    if n < 2 or max_degree < 2:
        raise GraphError("need n >= 2 and max_degree >= 2")
    rng = random.Random(seed)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for v in range(1, n):
        open_nodes = [u for u in range(v) if len(nbrs[u]) < max_degree]
        u = rng.choice(open_nodes)
        nbrs[u].append(v)
        nbrs[v].append(u)
    for _ in range(int(extra_edges * n)):
        a, c = rng.sample(range(n), 2)
        if c in nbrs[a] or len(nbrs[a]) >= max_degree or len(nbrs[c]) >= max_degree:
            continue
        nbrs[a].append(c)
        nbrs[c].append(a)
    for row in nbrs:
        rng.shuffle(row)
    # convert neighbor orders to ports
    port_of = [{u: i + 1 for i, u in enumerate(row)} for row in nbrs]
    adj = tuple(tuple((u, port_of[u][v]) for u in row) for v, row in enumerate(nbrs))
    if bbh == "random":
        bbh = rng.choice([v for v in range(n) if v != home])
    _check_bbh(bbh, home, n)
    return Instance(PortLabeledGraph(adj), k, home, bbh)


def build_bh_lowerbound_graph(delta: int, k: int | None = None,
                              permutations: Mapping[int, Sequence[int]] | None = None) -> Instance:
    """Hub of degree ``delta`` (the black hole) inside a ring of degree-4 nodes.

    Ring node u_i touches u_{i-1}, u_{i+1}, the hub and a pendant w_i.
    Home is u_0.
    """
    if delta < 4:
        raise GraphError("delta must be at least 4")
    b = _PortBuilder(0)
    hub = b.add_node()
    ring = [b.add_node() for _ in range(delta)]
    pend = [b.add_node() for _ in range(delta)]
    for i in range(delta):
        b.connect(ring[i], ring[(i + 1) % delta])
    for i in range(delta):
        b.connect(ring[i], hub)
        b.connect(ring[i], pend[i])
    names = [("v", hub)] + [(f"u{i}", ring[i]) for i in range(delta)] + [(f"w{i}", pend[i]) for i in range(delta)]
    return Instance(b.build(permutations), k if k is not None else delta + 2, ring[0], hub, tuple(names))


def build_lowerbound_family(delta: int, segment_lengths: Sequence[int], membership: Sequence[int],
                            k: int = 4, permutations: Mapping[int, Sequence[int]] | None = None) -> Instance:
    """Spine v_1..v_delta with padded trees and black-hole attachments.

    ``membership[i]`` is 1 when v_{i+1} has a direct edge to the black hole and
    2 when it reaches it through an intermediate node w_{i+1}. Node names such
    as ``v1``, ``u1_2``, ``w3``, ``z`` and ``b`` are available via ``Instance.node``.
    """
    if delta < 4:
        raise GraphError("delta must be at least 4")
    if not membership:
        raise GraphError("membership must not be empty")
    if len(membership) != delta - 1 or any(m not in (1, 2) for m in membership):
        raise GraphError("membership needs one entry (1 or 2) per v_1..v_{delta-1}")
    if len(segment_lengths) != delta - 1 or any(int(x) < 1 for x in segment_lengths):
        raise GraphError("segment_lengths needs delta-1 positive entries")
    members = list(membership)
    if 1 not in members:
        # no direct attachment: the last spine node also gets an indirect one
        members.append(2)
    b = _PortBuilder(0)
    names: list[tuple[str, int]] = []

    def node(name):
        v = b.add_node()
        names.append((name, v))
        return v

    spine_v = [node(f"v{i + 1}") for i in range(delta)]
    bh = node("b")
    prev = spine_v[0]
    segments = []
    for i in range(delta - 1):
        seg = [node(f"u{i + 1}_{j + 1}") for j in range(int(segment_lengths[i]))]
        segments.append(seg)
        for x in seg + [spine_v[i + 1]]:
            b.connect(prev, x)
            prev = x
    ws = {}
    for i, m in enumerate(members):
        if m == 1:
            b.connect(spine_v[i], bh)
        else:
            w = node(f"w{i + 1}")
            ws[i] = w
            b.connect(spine_v[i], w)
            for j in range(delta - 2):
                b.connect(w, node(f"w{i + 1}_leaf{j + 1}"))
            b.connect(w, bh)
    if 1 in members:
        z = node("z")
        b.connect(bh, z)
        for j in range(delta - 1):
            b.connect(z, node(f"z_leaf{j + 1}"))

    def pad(v, label):
        t = 0
        while len(b.rows[v]) < delta:
            t += 1
            child = node(f"{label}_t{t}")
            b.connect(v, child)
            for j in range(delta - 1):
                b.connect(child, node(f"{label}_t{t}_leaf{j + 1}"))

    for i, v in enumerate(spine_v):
        pad(v, f"v{i + 1}")
    for i, seg in enumerate(segments):
        for j, u in enumerate(seg):
            pad(u, f"u{i + 1}_{j + 1}")
    g = b.build(permutations)
    return Instance(g, k, spine_v[0], bh, tuple(names))


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple[frozenset[int], ...]
    home_component_index: int = 0

    @property
    def home_component(self) -> frozenset[int]:
        return self.components[self.home_component_index]

    def component_of(self, v: int) -> int | None:
        for i, c in enumerate(self.components):
            if v in c:
                return i
        return None


def decompose(instance: Instance) -> ComponentDecomposition:
    """Connected components of the graph with the black hole removed, home's first."""
    g = instance.graph
    n = g.node_count
    if instance.bbh is None:
        return ComponentDecomposition((frozenset(range(n)),), 0)
    seen = {instance.bbh}
    comps = []
    for start in [instance.home] + list(range(n)):
        if start in seen:
            continue
        comp = set(g.distances_from(start, avoid=instance.bbh))
        seen |= comp
        comps.append(frozenset(comp))
    return ComponentDecomposition(tuple(comps), 0)

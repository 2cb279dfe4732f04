"""Time diagrams of traces: one row per round, one column per node.

A cell lists the roles of the agents standing on the node after the round;
``†`` marks an agent destroyed there in that round. The black-hole column is
flagged with ``*`` in the header.
"""

from __future__ import annotations

import json

from .graph import GraphError, Instance

LAYOUTS = ("linear", "bfs")


class TraceFormatError(ValueError):
    pass


def load_trace(text: str) -> tuple[dict, list[dict]]:
    """Split a JSON-lines trace into its header record and round records."""
    header = None
    records = []
    for i, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {i}: {exc.msg}") from exc
        if "header" in doc:
            header = doc["header"]
        elif "round" in doc:
            records.append(doc)
        else:
            raise TraceFormatError(f"line {i}: neither a header nor a round record")
    if header is None:
        raise TraceFormatError("trace has no header record")
    return header, records


def header_instance(header: dict) -> Instance:
    try:
        return Instance.from_json(json.dumps(header["instance"]), int(header.get("k", 1)))
    except (GraphError, KeyError) as exc:
        raise TraceFormatError(f"bad header: {exc}") from exc


def node_order(instance: Instance, layout: str) -> list[int]:
    g = instance.graph
    if layout == "bfs":
        return list(g.distances_from(instance.home))
    if layout != "linear":
        raise ValueError(f"unknown layout {layout!r}; choose from {', '.join(LAYOUTS)}")
    # depth-first preorder from the lowest-numbered leaf (a path comes out in order)
    leaves = [v for v in range(g.node_count) if g.degree(v) == 1]
    start = leaves[0] if leaves else instance.home
    order, seen, stack = [], set(), [start]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        order.append(v)
        nbrs = sorted(u for u in g.neighbors(v) if u not in seen)
        stack.extend(reversed(nbrs))
    return order


def _cells(header: dict, records: list[dict], order: list[int]):
    roles = dict(header.get("roles", {}))
    home = header["instance"]["home"]
    rows = [(0, {home: [roles.get(str(a), str(a)) for a in sorted(map(int, roles))] if roles else []})]
    for rec in records:
        roles.update(rec.get("roles", {}))
        cell: dict[int, list[str]] = {}
        for a, v in sorted(rec["positions"].items(), key=lambda kv: int(kv[0])):
            cell.setdefault(v, []).append(roles.get(a, a))
        bbh = header["instance"]["bbh"]
        for a in rec.get("destroyed", []):
            cell.setdefault(bbh, []).append("†" + roles.get(str(a), str(a)))
        rows.append((rec["round"], cell))
    return rows


def time_diagram(header: dict, records: list[dict], layout: str = "linear") -> str:
    """Render the diagram as text; a pure function of its inputs."""
    instance = header_instance(header)
    order = node_order(instance, layout)
    rows = _cells(header, records, order)
    text = [[",".join(cell.get(v, [])) or "." for v in order] for _, cell in rows]
    heads = [f"{v}{'*' if v == instance.bbh else ''}{'h' if v == instance.home else ''}" for v in order]
    widths = [max(len(h), *(len(t[i]) for t in text)) for i, h in enumerate(heads)]
    rw = max(len("round"), len(str(rows[-1][0])))
    out = ["round".rjust(rw) + " | " + " ".join(h.center(w) for h, w in zip(heads, widths))]
    out.append("-" * len(out[0]))
    for (r, _), t in zip(rows, text):
        out.append(str(r).rjust(rw) + " | " + " ".join(c.center(w) for c, w in zip(t, widths)))
    return "\n".join(line.rstrip() for line in out) + "\n"


def render_png(header: dict, records: list[dict], path: str, layout: str = "linear") -> None:
    """Draw the diagram with matplotlib (installed with the ``plot`` extra)."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("PNG output needs matplotlib: pip install 'artifact[plot]'") from exc
    instance = header_instance(header)
    order = node_order(instance, layout)
    rows = _cells(header, records, order)
    col = {v: i for i, v in enumerate(order)}
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(order)), max(3, 0.18 * len(rows))))
    if instance.bbh is not None:
        ax.axvspan(col[instance.bbh] - 0.5, col[instance.bbh] + 0.5, color="0.85")
    for r, cell in rows:
        for v, names in cell.items():
            ax.text(col[v], r, ",".join(names), ha="center", va="center", fontsize=6)
    ax.set_xlim(-0.5, len(order) - 0.5)
    ax.set_ylim(rows[-1][0] + 0.5, -0.5)
    ax.set_xticks(range(len(order)), [str(v) for v in order])
    ax.set_xlabel("node")
    ax.set_ylabel("round")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

"""Graphviz export: one node per agent, one labeled edge per channel type.

Interface agents render as dashed boxes so synthesized structure stands out
against the original agents. With a partition, each cell becomes a cluster
named after its owner. Output is deterministic: nodes and edges follow the
canonical agent and type orders.
"""

from __future__ import annotations

from .architecture import Architecture, ORIGINAL
from .terms import type_name, type_sort_key
from .verifier import Partition


def _quote(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def _node_line(agent) -> str:
    if agent.kind == ORIGINAL:
        return f"  {_quote(agent.name)} [shape=ellipse];"
    return f"  {_quote(agent.name)} [shape=box, style=dashed];"


def export_dot(arch: Architecture, partition: Partition | None = None) -> str:
    lines = ["digraph architecture {", "  rankdir=LR;"]

    agents = arch.sorted_agents()
    if partition is None:
        lines.extend(_node_line(a) for a in agents)
    else:
        cells: dict = {}
        loose = []
        for a in agents:
            owner = partition.cell_of(a)
            if owner is None:
                loose.append(a)
            else:
                cells.setdefault(owner, []).append(a)
        for i, owner in enumerate(sorted(cells, key=lambda a: a.sort_key)):
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f"    label={_quote(owner.name)};")
            for a in sorted(cells[owner], key=lambda a: a.sort_key):
                lines.append("  " + _node_line(a))
            lines.append("  }")
        lines.extend(_node_line(a) for a in loose)

    for (s, r), types in sorted(
        arch.channels.items(), key=lambda kv: (kv[0][0].sort_key, kv[0][1].sort_key)
    ):
        for t in sorted(types, key=type_sort_key):
            lines.append(
                f"  {_quote(s.name)} -> {_quote(r.name)} [label={_quote(type_name(t))}];"
            )

    lines.append("}")
    return "\n".join(lines) + "\n"


def dot_counts(dot: str) -> tuple[int, int]:
    """(nodes, edges) as the DOT text declares them; a structural sanity
    check for tests and the command line, not a full parser."""
    nodes = edges = 0
    for raw in dot.splitlines():
        line = raw.strip()
        if line.endswith("];") and line.startswith('"'):
            if " -> " in line:
                edges += 1
            else:
                nodes += 1
    return nodes, edges

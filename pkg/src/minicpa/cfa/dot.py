"""DOT export of a CFA, one cluster per function."""

from __future__ import annotations

from minicpa.cfa.model import Cfa, Edge


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _node_attrs(loc) -> str:
    shape = "doublecircle" if loc.is_loop_head else "circle"
    label = f"N{loc.id}"
    extra = ""
    if loc.kind in ("halt", "trap"):
        shape = "box"
        label = loc.kind
    elif loc.is_error:
        shape = "box"
        label = loc.kind.upper()
        extra = ', style=filled, fillcolor="lightcoral"'
    return f'shape={shape}, label="{label}"{extra}'


def export_dot(cfa: Cfa) -> str:
    lines = ["digraph CFA {", "  node [fontname=monospace];"]
    by_function: dict[str, list] = {}
    for loc in cfa.locations:
        by_function.setdefault(loc.function, []).append(loc)
    for index, (function, locs) in enumerate(sorted(by_function.items())):
        lines.append(f"  subgraph cluster_{index} {{")
        lines.append(f'    label="{_escape(function)}";')
        for loc in sorted(locs, key=lambda l: l.id):
            lines.append(f"    n{loc.id} [{_node_attrs(loc)}];")
        lines.append("  }")
    for edge in cfa.edges:
        style = ", style=dashed" if edge.synthetic else ""
        lines.append(
            f'  n{edge.src.id} -> n{edge.dst.id} '
            f'[label="{_escape(edge.describe())}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Serialisation of multiway graphs: JSON, DOT, GraphML and CSV."""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET

from .dsl import parse_rule, render_rule
from .graph import Edge, MultiwayGraph, layer_stats
from .values import format_value, value_from_json, value_to_json

__all__ = ["graph_to_dict", "rows_to_csv", "graph_to_json", "graph_from_json", "graph_to_dot", "graph_to_graphml", "graph_to_csv", "stats_to_csv", "FORMATS", "export_graph"]

FORMATS = ("json", "dot", "graphml", "csv")

# Branch colours for DOT; cycled when a rule has more branches.
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def graph_to_dict(g: MultiwayGraph) -> dict:
    return {
        "rule": render_rule(g.rule) if g.rule is not None else "",
        "steps": g.steps_built,
        "truncated": g.truncated,
        "initials": list(g.initials),
        "nodes": [{"id": i, "value": value_to_json(v), "layer": l} for i, (v, l) in enumerate(zip(g.values, g.layers))],
        "edges": [{"src": e.src, "dst": e.dst, "branch": e.branch, "step": e.step} for e in g.edges],
    }


def graph_to_json(g: MultiwayGraph, indent=None) -> str:
    return json.dumps(graph_to_dict(g), indent=indent, ensure_ascii=False) + "\n"


def graph_from_json(text: str) -> MultiwayGraph:
    obj = json.loads(text)
    rule = parse_rule(obj["rule"]) if obj.get("rule") else None
    nodes = sorted(obj["nodes"], key=lambda n: n["id"])
    if [n["id"] for n in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be 0..N-1")
    edges = [Edge(e["src"], e["dst"], e["branch"], e["step"]) for e in obj["edges"]]
    initials = obj.get("initials", [n["id"] for n in nodes if n["layer"] == 0])
    return MultiwayGraph(
        rule,
        [value_from_json(n["value"]) for n in nodes],
        [n["layer"] for n in nodes],
        edges,
        initials,
        obj["steps"],
        obj["truncated"],
    )


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(g: MultiwayGraph) -> str:
    lines = ["digraph multiway {", "  rankdir=TB;", "  node [shape=ellipse];"]
    if g.rule is not None:
        lines.append(f"  label={_dot_quote(render_rule(g.rule))};")
    for i, (v, l) in enumerate(zip(g.values, g.layers)):
        lines.append(f"  n{i} [label={_dot_quote(format_value(v))}, layer={l}];")
    for e in g.edges:
        colour = _PALETTE[(e.branch - 1) % len(_PALETTE)]
        lines.append(f'  n{e.src} -> n{e.dst} [branch={e.branch}, step={e.step}, color="{colour}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_graphml(g: MultiwayGraph) -> str:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    keys = [
        ("rule", "graph", "string"),
        ("steps", "graph", "int"),
        ("truncated", "graph", "boolean"),
        ("value", "node", "string"),
        ("layer", "node", "int"),
        ("branch", "edge", "int"),
        ("step", "edge", "int"),
    ]
    for name, scope, typ in keys:
        ET.SubElement(root, "key", {"id": f"{scope[0]}_{name}", "for": scope, "attr.name": name, "attr.type": typ})
    graph = ET.SubElement(root, "graph", id="G", edgedefault="directed")

    def data(parent, key, text):
        ET.SubElement(parent, "data", key=key).text = text

    data(graph, "g_rule", render_rule(g.rule) if g.rule is not None else "")
    data(graph, "g_steps", str(g.steps_built))
    data(graph, "g_truncated", "true" if g.truncated else "false")
    for i, (v, l) in enumerate(zip(g.values, g.layers)):
        node = ET.SubElement(graph, "node", id=f"n{i}")
        data(node, "n_value", format_value(v))
        data(node, "n_layer", str(l))
    for k, e in enumerate(g.edges):
        edge = ET.SubElement(graph, "edge", id=f"e{k}", source=f"n{e.src}", target=f"n{e.dst}")
        data(edge, "e_branch", str(e.branch))
        data(edge, "e_step", str(e.step))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def graph_to_csv(g: MultiwayGraph) -> str:
    """Edge list with the endpoint values spelled out."""
    rows = [("src", "dst", "src_value", "dst_value", "branch", "step")]
    for e in g.edges:
        rows.append((e.src, e.dst, format_value(g.values[e.src]), format_value(g.values[e.dst]), e.branch, e.step))
    return _csv(rows)


def stats_to_csv(g: MultiwayGraph) -> str:
    rows = [("step", "expanded", "produced", "new_nodes", "branchings", "mergings", "max_value", "min_value")]
    for r in layer_stats(g):
        rows.append((
            r.step, r.expanded, r.produced, r.new_nodes, r.branching_sources,
            r.produced - r.new_nodes if r.step else 0,
            "" if r.max_value is None else r.max_value,
            "" if r.min_value is None else r.min_value,
        ))
    return _csv(rows)


def rows_to_csv(header, rows) -> str:
    return _csv([tuple(header), *rows])


def export_graph(g: MultiwayGraph, fmt: str) -> str:
    if fmt == "json":
        return graph_to_json(g)
    if fmt == "dot":
        return graph_to_dot(g)
    if fmt == "graphml":
        return graph_to_graphml(g)
    if fmt == "csv":
        return graph_to_csv(g)
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")

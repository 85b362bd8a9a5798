"""JSON graph serialization and line-pattern parsing of graph scripts.

JSON layout of one graph::

    {"nodes": [{"id": 0, "content": "...", "type": "Claim"}],
     "edges": [{"head": 0, "tail": 1, "type": "support"}],
     "meta": {}}

Nodes may carry an optional ``"span": [start, end]`` of token offsets.
A sample file is ``{"samples": [graph, ...], "meta": {...}, "rejects": [...]}``;
a bare JSON list of graphs is accepted as well.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .exceptions import DataError, ParseError, SchemaError
from .graph import Edge, Graph, Node

PathLike = Union[str, Path]


@dataclass
class SampleSet:
    """T graph samples drawn for one input, plus provenance metadata."""

    samples: list[Graph]
    meta: dict = field(default_factory=dict)
    rejects: list[dict] = field(default_factory=list)

    def __post_init__(self):
        self.samples = list(self.samples)
        if not self.samples:
            raise DataError("a SampleSet needs at least one parsed sample")

    @property
    def T(self) -> int:
        return len(self.samples)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]


# --- JSON -------------------------------------------------------------------

def graph_to_dict(g: Graph) -> dict:
    nodes = []
    for n in g.nodes:
        d = {"id": n.id, "content": n.content, "type": n.node_type}
        if n.span is not None:
            d["span"] = list(n.span)
        nodes.append(d)
    return {
        "nodes": nodes,
        "edges": [{"head": e.head, "tail": e.tail, "type": e.edge_type} for e in g.edges],
        "meta": dict(g.meta),
    }


def _require(obj: dict, key: str, where: str, kind=None):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", field=where)
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}", field=f"{where}.{key}" if where else key)
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"field {key!r} has wrong type {type(value).__name__}",
                          field=f"{where}.{key}" if where else key)
    return value


def graph_from_dict(d: Any, where: str = "") -> Graph:
    raw_nodes = _require(d, "nodes", where, list)
    raw_edges = _require(d, "edges", where, list)
    meta = d.get("meta", {}) or {}
    nodes = []
    for i, rn in enumerate(raw_nodes):
        loc = f"{where}.nodes[{i}]" if where else f"nodes[{i}]"
        nid = _require(rn, "id", loc, int)
        content = _require(rn, "content", loc, str)
        ntype = rn.get("type", "") or ""
        span = rn.get("span")
        try:
            nodes.append(Node(nid, content, str(ntype), tuple(span) if span is not None else None))
        except (DataError, TypeError, ValueError) as exc:
            raise SchemaError(str(exc), field=loc) from exc
    edges = []
    for i, re_ in enumerate(raw_edges):
        loc = f"{where}.edges[{i}]" if where else f"edges[{i}]"
        edges.append(Edge(_require(re_, "head", loc, int), _require(re_, "tail", loc, int),
                          str(re_.get("type", "") or "")))
    try:
        return Graph(nodes, edges, dict(meta))
    except DataError as exc:
        raise SchemaError(str(exc), field=where or "graph") from exc


def _load_json(path: PathLike):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_graph(g: Graph, path: PathLike) -> None:
    Path(path).write_text(dumps_json(graph_to_dict(g)), encoding="utf-8")


def read_graph(path: PathLike) -> Graph:
    return graph_from_dict(_load_json(path))


def read_graphs(path: PathLike) -> list[Graph]:
    """Read a single graph or a list of graphs (corpus file)."""
    data = _load_json(path)
    if isinstance(data, list):
        return [graph_from_dict(d, f"[{i}]") for i, d in enumerate(data)]
    if isinstance(data, dict) and "graphs" in data:
        return [graph_from_dict(d, f"graphs[{i}]") for i, d in enumerate(data["graphs"])]
    return [graph_from_dict(data)]


def sampleset_to_dict(s: SampleSet) -> dict:
    return {
        "samples": [graph_to_dict(g) for g in s.samples],
        "meta": dict(s.meta),
        "rejects": list(s.rejects),
    }


def sampleset_from_dict(data: Any) -> SampleSet:
    if isinstance(data, list):
        raw, meta, rejects = data, {}, []
    else:
        raw = _require(data, "samples", "", list)
        meta = data.get("meta", {}) or {}
        rejects = data.get("rejects", []) or []
    graphs = [graph_from_dict(d, f"samples[{i}]") for i, d in enumerate(raw)]
    return SampleSet(graphs, dict(meta), list(rejects))


def read_samples(path: PathLike) -> SampleSet:
    return sampleset_from_dict(_load_json(path))


def write_samples(s: SampleSet, path: PathLike) -> None:
    Path(path).write_text(dumps_json(sampleset_to_dict(s)), encoding="utf-8")


# --- script parsing ---------------------------------------------------------

_STR = r'"(?P<{g}>[^"]*)"'


@dataclass(frozen=True)
class ScriptDialect:
    """Line patterns recognising node declarations, edge calls and type annotations.

    Each pattern is a regular expression matched against one stripped line.

    - ``node_pattern`` needs groups ``name`` and ``content``; ``type`` optional.
    - ``edge_pattern`` needs groups ``head`` and ``tail``; ``type`` optional.
    - ``type_pattern`` needs groups ``name`` and ``type``; it sets the type of
      an already declared node.
    - ``ignore_pattern`` marks lines that are neither data nor noise
      (blank lines, comments, class/def headers).

    Anything else is counted as a skipped line.
    """

    node_pattern: str
    edge_pattern: str
    type_pattern: Optional[str] = None
    ignore_pattern: str = r"^(#.*|class\s.*:|def\s.*:|return\b.*|pass)?$"
    name: str = "custom"

    def compiled(self):
        return (
            re.compile(self.node_pattern),
            re.compile(self.edge_pattern),
            re.compile(self.type_pattern) if self.type_pattern else None,
            re.compile(self.ignore_pattern),
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ScriptDialect":
        try:
            dialect = cls(
                node_pattern=d["node_pattern"],
                edge_pattern=d["edge_pattern"],
                type_pattern=d.get("type_pattern"),
                ignore_pattern=d.get("ignore_pattern", cls.ignore_pattern),
                name=d.get("name", "custom"),
            )
        except KeyError as exc:
            raise SchemaError(f"dialect missing {exc.args[0]!r}", field=exc.args[0]) from exc
        try:
            dialect.compiled()
        except re.error as exc:
            raise SchemaError(f"bad dialect pattern: {exc}") from exc
        return dialect

    @classmethod
    def load(cls, path: PathLike) -> "ScriptDialect":
        return cls.from_dict(_load_json(path))


#: ``premise_1 = Node("text", type="Premise")`` / ``add_edge(premise_1, claim_1, type="support")``
COCOGEN = ScriptDialect(
    name="cocogen",
    node_pattern=(r"^(?P<name>\w+)\s*=\s*\w+\(\s*" + _STR.format(g="content")
                  + r"\s*(?:,\s*(?:type\s*=\s*)?" + _STR.format(g="type") + r")?\s*\)$"),
    edge_pattern=(r"^(?:\w+\.)?(?:add_edge|add_relation|connect)\(\s*(?P<head>\w+)\s*,\s*(?P<tail>\w+)"
                  r"\s*(?:,\s*(?:type\s*=\s*)?" + _STR.format(g="type") + r")?\s*\)$"),
    type_pattern=r"^(?P<name>\w+)\.type\s*=\s*" + _STR.format(g="type") + r"$",
)

#: ``step0 = "find a recipe"`` / ``step0 -> step1``
PROSCRIPT = ScriptDialect(
    name="proscript",
    node_pattern=r"^(?P<name>\w+)\s*=\s*" + _STR.format(g="content") + r"$",
    edge_pattern=r'^"?(?P<head>\w+)\s*->\s*(?P<tail>\w+)"?,?$',
)

BUILTIN_DIALECTS = {"cocogen": COCOGEN, "proscript": PROSCRIPT}


def get_dialect(spec: Union[str, Path, ScriptDialect, None]) -> ScriptDialect:
    if spec is None:
        return COCOGEN
    if isinstance(spec, ScriptDialect):
        return spec
    if str(spec) in BUILTIN_DIALECTS:
        return BUILTIN_DIALECTS[str(spec)]
    return ScriptDialect.load(spec)


def parse_script(text: str, dialect: Union[ScriptDialect, str, None] = None) -> Graph:
    """Parse one script completion into a graph.

    Unrecognised lines are skipped; their count is stored in
    ``meta["skipped_lines"]``. Nodes declared twice with identical content
    collapse to one node. An edge naming an undeclared variable creates an
    implicit node whose content is the variable name and whose type is empty;
    such names are listed in ``meta["implicit_nodes"]``.

    Raises
    ------
    ParseError
        If no node and no edge was recognised.
    """
    d = get_dialect(dialect)
    node_re, edge_re, type_re, ignore_re = d.compiled()

    by_content: dict[str, int] = {}
    var_to_id: dict[str, int] = {}
    nodes: list[list] = []  # [id, content, type]
    edges: dict[tuple[int, int], str] = {}
    implicit: list[str] = []
    skipped = 0
    recognised = 0

    def declare(content: str, ntype: str) -> int:
        key = content.strip()
        if key in by_content:
            return by_content[key]
        nid = len(nodes)
        nodes.append([nid, key, ntype])
        by_content[key] = nid
        return nid

    def resolve(var: str) -> int:
        if var not in var_to_id:
            implicit.append(var)
            var_to_id[var] = declare(var, "")
        return var_to_id[var]

    for raw in text.splitlines():
        line = raw.strip()
        m = node_re.match(line)
        if m and m.group("content").strip():
            ntype = (m.groupdict().get("type") or "").strip()
            nid = declare(m.group("content"), ntype)
            if ntype and not nodes[nid][2]:
                nodes[nid][2] = ntype
            var_to_id[m.group("name")] = nid
            recognised += 1
            continue
        m = edge_re.match(line)
        if m:
            h, t = resolve(m.group("head")), resolve(m.group("tail"))
            edges.setdefault((h, t), (m.groupdict().get("type") or "").strip())
            recognised += 1
            continue
        if type_re is not None:
            m = type_re.match(line)
            if m and m.group("name") in var_to_id:
                nodes[var_to_id[m.group("name")]][2] = m.group("type").strip()
                recognised += 1
                continue
        if ignore_re.match(line):
            continue
        skipped += 1

    if not nodes and not edges:
        raise ParseError("no node or edge declarations recognised",
                         diagnostics=[f"skipped_lines={skipped}"])
    meta = {"skipped_lines": skipped}
    if implicit:
        meta["implicit_nodes"] = implicit
    return Graph(
        [Node(i, c, t) for i, c, t in nodes],
        [Edge(h, t, ty) for (h, t), ty in edges.items()],
        meta,
    )


def parse_samples(texts: list[str], dialect=None, meta: Optional[dict] = None) -> SampleSet:
    """Parse T completions, dropping unparseable ones into ``rejects``.

    Raises
    ------
    ParseError
        If every completion fails; ``diagnostics`` lists each failure.
    """
    graphs, rejects = [], []
    for i, text in enumerate(texts):
        try:
            graphs.append(parse_script(text, dialect))
        except ParseError as exc:
            rejects.append({"index": i, "error": str(exc)})
    if not graphs:
        raise ParseError(f"all {len(texts)} samples failed to parse",
                         diagnostics=[f"sample {r['index']}: {r['error']}" for r in rejects])
    return SampleSet(graphs, dict(meta or {}), rejects)

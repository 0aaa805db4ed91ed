"""Leveled DAGs over group-level, unit-level and latent nodes.

Nodes live on one of four levels: observed group-level variables (Z), an
optional second grouping factor (W), latent group-level confounders (U,
simulation ground truth only) and unit-level variables (X).  Edges are
constrained by the hierarchy: units never cause group-level variables and
latent confounders have no parents.

``Dag`` values are immutable after construction and therefore safe to
share between threads; every operation here is a pure function.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator

__all__ = [
    "Level",
    "NodeId",
    "Dag",
    "GraphError",
    "CycleError",
    "topological_order",
    "shd",
    "descendants",
]


class GraphError(ValueError):
    """Usage or structural error raised by graph operations."""


class CycleError(GraphError):
    """A directed cycle was found; the message names one offending edge."""


class Level(IntEnum):
    """Node levels, ordered for deterministic tie-breaking."""

    GROUP_Z = 0
    GROUP_W = 1
    LATENT_U = 2
    UNIT = 3


_LEVEL_PREFIX = {Level.GROUP_Z: "Z", Level.GROUP_W: "W", Level.LATENT_U: "U", Level.UNIT: "X"}
_PREFIX_LEVEL = {v: k for k, v in _LEVEL_PREFIX.items()}
_NAME_RE = re.compile(r"^([ZWUX])(\d+)$")


@dataclass(frozen=True, order=True)
class NodeId:
    """A node identified by its level and 0-based index within the level."""

    level: Level
    index: int

    @property
    def name(self) -> str:
        """Display name, 1-based: ``Z1``, ``W2``, ``U1``, ``X3``."""
        return f"{_LEVEL_PREFIX[self.level]}{self.index + 1}"

    @staticmethod
    def parse(name: str) -> "NodeId":
        m = _NAME_RE.match(name)
        if m is None:
            raise GraphError(f"cannot parse node name {name!r}")
        return NodeId(_PREFIX_LEVEL[m.group(1)], int(m.group(2)) - 1)

    def __repr__(self) -> str:  # compact in error messages and tests
        return self.name


def z(i: int) -> NodeId:
    return NodeId(Level.GROUP_Z, i)


def w(i: int) -> NodeId:
    return NodeId(Level.GROUP_W, i)


def u(i: int) -> NodeId:
    return NodeId(Level.LATENT_U, i)


def x(i: int) -> NodeId:
    return NodeId(Level.UNIT, i)


Edge = tuple[NodeId, NodeId]


@dataclass(frozen=True)
class Dag:
    """Immutable leveled DAG.

    ``counts`` fixes the number of nodes per level; nodes exist even when
    isolated.  Construction validates all structural invariants: index
    ranges, no self loops or duplicate edges, no unit-to-group edges, no
    edges into latent nodes, and acyclicity.
    """

    n_group_z: int = 0
    n_group_w: int = 0
    n_unit: int = 0
    n_latent: int = 0
    edges: frozenset[Edge] = field(default_factory=frozenset)

    @staticmethod
    def create(
        n_group_z: int = 0,
        n_group_w: int = 0,
        n_unit: int = 0,
        n_latent: int = 0,
        edges: Iterable[Edge] = (),
    ) -> "Dag":
        edge_list = [(NodeId(Level(a.level), a.index), NodeId(Level(b.level), b.index)) for a, b in edges]
        if len(edge_list) != len(set(edge_list)):
            raise GraphError("duplicate edges in edge list")
        return Dag(n_group_z, n_group_w, n_unit, n_latent, frozenset(edge_list))

    def __post_init__(self) -> None:
        counts = {
            Level.GROUP_Z: self.n_group_z,
            Level.GROUP_W: self.n_group_w,
            Level.LATENT_U: self.n_latent,
            Level.UNIT: self.n_unit,
        }
        if any(c < 0 for c in counts.values()):
            raise GraphError("node counts must be nonnegative")
        for src, dst in self.edges:
            for node in (src, dst):
                if not 0 <= node.index < counts[node.level]:
                    raise GraphError(f"node {node} outside declared count {counts[node.level]}")
            if src == dst:
                raise GraphError(f"self loop on {src}")
            if src.level == Level.UNIT and dst.level in (Level.GROUP_Z, Level.GROUP_W):
                raise GraphError(f"unit-level {src} cannot cause group-level {dst}")
            if dst.level == Level.LATENT_U:
                raise GraphError(f"latent confounder {dst} cannot have parents (edge {src}->{dst})")
        topological_order(self)  # raises CycleError on a cycle

    def nodes(self) -> list[NodeId]:
        """All nodes in (level, index) order."""
        out: list[NodeId] = []
        for level, count in (
            (Level.GROUP_Z, self.n_group_z),
            (Level.GROUP_W, self.n_group_w),
            (Level.LATENT_U, self.n_latent),
            (Level.UNIT, self.n_unit),
        ):
            out.extend(NodeId(level, i) for i in range(count))
        return out

    @property
    def n_nodes(self) -> int:
        return self.n_group_z + self.n_group_w + self.n_unit + self.n_latent

    def parents(self, node: NodeId) -> list[NodeId]:
        return sorted(s for s, d in self.edges if d == node)

    def children(self, node: NodeId) -> list[NodeId]:
        return sorted(d for s, d in self.edges if s == node)

    def has_edge(self, src: NodeId, dst: NodeId) -> bool:
        return (src, dst) in self.edges

    def drop_latent(self) -> "Dag":
        """The DAG restricted to observed nodes (latent nodes and their edges removed)."""
        kept = frozenset(e for e in self.edges if e[0].level != Level.LATENT_U)
        return Dag(self.n_group_z, self.n_group_w, self.n_unit, 0, kept)

    # -- serialization ---------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "levels": {"z": self.n_group_z, "w": self.n_group_w, "x": self.n_unit, "u": self.n_latent},
            "edges": sorted([s.name, d.name] for s, d in self.edges),
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "Dag":
        levels = obj["levels"]
        edges = [(NodeId.parse(s), NodeId.parse(d)) for s, d in obj["edges"]]
        return Dag.create(
            n_group_z=int(levels.get("z", 0)),
            n_group_w=int(levels.get("w", 0)),
            n_unit=int(levels.get("x", 0)),
            n_latent=int(levels.get("u", 0)),
            edges=edges,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "Dag":
        return Dag.from_json_obj(json.loads(text))

    def to_dot(self, name: str = "hscm") -> str:
        lines = [f"digraph {name} {{"]
        for node in self.nodes():
            lines.append(f"  {node.name};")
        for src, dst in sorted(self.edges):
            lines.append(f"  {src.name} -> {dst.name};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_dot(text: str) -> "Dag":
        """Parse DOT produced by :meth:`to_dot` (node and edge statements only)."""
        counts = {level: 0 for level in Level}
        edges: list[Edge] = []
        body = text.split("{", 1)
        if len(body) != 2:
            raise GraphError("not a digraph: missing '{'")
        for raw in body[1].rsplit("}", 1)[0].splitlines():
            stmt = raw.strip().rstrip(";").strip()
            if not stmt:
                continue
            if "->" in stmt:
                left, right = (p.strip() for p in stmt.split("->", 1))
                edges.append((NodeId.parse(left), NodeId.parse(right)))
            else:
                node = NodeId.parse(stmt)
                counts[node.level] = max(counts[node.level], node.index + 1)
        return Dag.create(
            n_group_z=counts[Level.GROUP_Z],
            n_group_w=counts[Level.GROUP_W],
            n_unit=counts[Level.UNIT],
            n_latent=counts[Level.LATENT_U],
            edges=edges,
        )


def topological_order(dag: Dag) -> list[NodeId]:
    """Topological order with deterministic tie-break (lowest level, then lowest index).

    Raises :class:`CycleError` naming one edge on a directed cycle.
    """
    import heapq

    nodes = dag.nodes()
    indeg = {n: 0 for n in nodes}
    out: dict[NodeId, list[NodeId]] = {n: [] for n in nodes}
    for src, dst in dag.edges:
        indeg[dst] += 1
        out[src].append(dst)
    heap = [n for n in nodes if indeg[n] == 0]
    heapq.heapify(heap)
    order: list[NodeId] = []
    while heap:
        node = heapq.heappop(heap)
        order.append(node)
        for child in out[node]:
            indeg[child] -= 1
            if indeg[child] == 0:
                heapq.heappush(heap, child)
    if len(order) != len(nodes):
        remaining = {n for n in nodes if indeg[n] > 0}
        for src, dst in sorted(dag.edges):
            if src in remaining and dst in remaining:
                raise CycleError(f"cycle detected through edge {src}->{dst}")
        raise CycleError("cycle detected")
    return order


def shd(estimated: Dag, truth: Dag) -> int:
    """Structural Hamming distance between two DAGs on the same observed nodes.

    Counts the edge insertions, deletions and reversals needed to turn one
    edge set into the other; a reversed edge costs exactly 1.  Latent nodes
    (and their edges) are excluded from the comparison, estimated DAGs never
    contain them.  Symmetric in its arguments.
    """
    a, b = estimated.drop_latent(), truth.drop_latent()
    if (a.n_group_z, a.n_group_w, a.n_unit) != (b.n_group_z, b.n_group_w, b.n_unit):
        raise GraphError(
            "node sets differ: "
            f"(z={a.n_group_z}, w={a.n_group_w}, x={a.n_unit}) vs "
            f"(z={b.n_group_z}, w={b.n_group_w}, x={b.n_unit})"
        )
    dist = 0
    seen: set[frozenset[NodeId]] = set()
    for src, dst in a.edges | b.edges:
        pair = frozenset((src, dst))
        if pair in seen:
            continue
        seen.add(pair)
        in_a = (src, dst) in a.edges or (dst, src) in a.edges
        in_b = (src, dst) in b.edges or (dst, src) in b.edges
        if in_a != in_b:
            dist += 1  # insertion or deletion
        elif ((src, dst) in a.edges) != ((src, dst) in b.edges):
            dist += 1  # present in both, opposite orientation
    return dist


def descendants(dag: Dag, node: NodeId) -> set[NodeId]:
    """All nodes reachable from ``node`` (excluding the node itself)."""
    seen: set[NodeId] = set()
    frontier = [node]
    while frontier:
        current = frontier.pop()
        for child in dag.children(current):
            if child not in seen:
                seen.add(child)
                frontier.append(child)
    return seen


def _iter_all_edges(dag: Dag) -> Iterator[Edge]:
    yield from sorted(dag.edges)

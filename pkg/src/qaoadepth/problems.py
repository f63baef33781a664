"""Weighted Max-Cut instances: validation, seeded random generation and file IO.

Graph file format (UTF-8, LF endings):
    line 1            node count
    following lines   "i j weight" with single spaces, 0-based node indices
    '#'               starts a comment line; blank lines are ignored
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph with 0-based nodes and normalized i < j edges.

    Edges are stored as (i, j, weight) triples with strictly positive weights.
    Self-loops and duplicate pairs are rejected; connectivity is not required.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        seen: set[tuple[int, int]] = set()
        normalized = []
        for i, j, w in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i} is not allowed")
            a, b = (i, j) if i < j else (j, i)
            if a < 0 or b >= self.n_nodes:
                raise ValueError(f"edge ({i}, {j}) references a node outside 0..{self.n_nodes - 1}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            w = float(w)
            if not w > 0.0 or not np.isfinite(w):
                raise ValueError(f"edge ({a}, {b}) must have a positive finite weight, got {w}")
            seen.add((a, b))
            normalized.append((a, b, w))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))


def max_edges(n_nodes: int) -> int:
    """Number of distinct undirected edges on n_nodes."""
    return n_nodes * (n_nodes - 1) // 2


def random_graph(
    n_nodes: int,
    n_edges: int,
    weight_range: tuple[float, float] = (0.1, 1.0),
    seed: int = 0,
) -> Graph:
    """Sample a uniform random graph with distinct edges and uniform weights.

    The same seed always yields the same graph. Edges are returned sorted by
    (i, j) for a canonical representation.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    feasible = max_edges(n_nodes)
    if n_edges < 0 or n_edges > feasible:
        raise ValueError(f"cannot place {n_edges} distinct edges on {n_nodes} nodes, max is {feasible}")
    lo, hi = float(weight_range[0]), float(weight_range[1])
    if not 0.0 < lo <= hi:
        raise ValueError("weight_range must satisfy 0 < lo <= hi")

    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    weights = rng.uniform(lo, hi, size=n_edges)
    edges = sorted((pairs[k][0], pairs[k][1], float(w)) for k, w in zip(chosen, weights))
    return Graph(n_nodes, tuple(edges))


def serialize_graph(graph: Graph) -> str:
    """Render a graph in the edge-list file format (17 significant digits)."""
    lines = [str(graph.n_nodes)]
    for i, j, w in graph.edges:
        lines.append(f"{i} {j} {w:.17g}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    """Parse the edge-list format; raises ValueError with the offending line number."""
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n_nodes is None:
            try:
                n_nodes = int(line)
            except ValueError:
                raise ValueError(f"line {lineno}: expected node count, got {line!r}") from None
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ValueError(f"line {lineno}: expected 'i j weight', got {line!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
            w = float(fields[2])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed edge {line!r}") from None
        edges.append((i, j, w))
    if n_nodes is None:
        raise ValueError("empty graph file")
    return Graph(n_nodes, tuple(edges))


def write_graph(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_graph(graph))


def read_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())

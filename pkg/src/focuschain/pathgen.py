"""Seeded sampling of simple reasoning paths from the relevance graph, plus an
exhaustive enumerator used as the sampling oracle and a configurable path
length distribution."""

from __future__ import annotations

from dataclasses import dataclass

from .core import RelevanceGraph
from .errors import NoPathFoundError, ValidationError
from .rng import Rng

RESTART_BUDGET = 32

# Percent weights for path lengths 1..8. The aggregate mass on lengths 2-5 is
# 81%, matching the published corpus composition; individual weights are
# configuration, not fixed targets.
DEFAULT_LENGTH_WEIGHTS = (3.0, 20.0, 22.0, 21.0, 18.0, 8.0, 5.0, 3.0)


@dataclass(frozen=True)
class LengthDistribution:
    lengths: tuple[int, ...] = tuple(range(1, 9))
    weights: tuple[float, ...] = DEFAULT_LENGTH_WEIGHTS

    def __post_init__(self):
        if len(self.lengths) != len(self.weights) or not self.lengths:
            raise ValidationError("lengths and weights must be non-empty and equally long")
        if any(k < 1 for k in self.lengths):
            raise ValidationError("path lengths must be >= 1")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValidationError("weights must be non-negative and sum to a positive value")


@dataclass(frozen=True)
class ReasoningPath:
    node_indices: tuple[int, ...]
    edge_indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.node_indices)


def adjacency(graph: RelevanceGraph) -> dict[int, list[int]]:
    neighbors: dict[int, list[int]] = {i: [] for i in range(len(graph.nodes))}
    for edge in graph.edges:
        i, j = edge.pair
        neighbors[i].append(j)
        neighbors[j].append(i)
    for nbrs in neighbors.values():
        nbrs.sort()
    return neighbors


def edge_index_map(graph: RelevanceGraph) -> dict[tuple[int, int], int]:
    return {edge.pair: idx for idx, edge in enumerate(graph.edges)}


def _path_from_nodes(nodes: list[int], edge_map: dict[tuple[int, int], int]) -> ReasoningPath:
    edges = []
    for a, b in zip(nodes, nodes[1:]):
        pair = (a, b) if a < b else (b, a)
        edges.append(edge_map[pair])
    return ReasoningPath(node_indices=tuple(nodes), edge_indices=tuple(edges))


def validate_path(path: ReasoningPath, graph: RelevanceGraph) -> None:
    nodes = path.node_indices
    if not nodes:
        raise ValidationError("path must contain at least one node")
    if len(set(nodes)) != len(nodes):
        raise ValidationError("path repeats a node")
    if any(not 0 <= n < len(graph.nodes) for n in nodes):
        raise ValidationError("path references a node outside the graph")
    if len(path.edge_indices) != len(nodes) - 1:
        raise ValidationError("path needs exactly one edge per consecutive node pair")
    for (a, b), edge_idx in zip(zip(nodes, nodes[1:]), path.edge_indices):
        if not 0 <= edge_idx < len(graph.edges):
            raise ValidationError(f"edge index {edge_idx} outside the graph")
        pair = (a, b) if a < b else (b, a)
        if graph.edges[edge_idx].pair != pair:
            raise ValidationError(f"edge {edge_idx} does not join nodes {a} and {b}")


def sample_path(graph: RelevanceGraph, k: int, rng: Rng) -> ReasoningPath:
    """Sample a simple path of k nodes: uniform start, uniform unvisited
    neighbor at each extension, restarting on dead ends up to the budget."""
    if k < 1:
        raise ValidationError("path length must be >= 1")
    if not graph.nodes:
        raise ValidationError("graph has no nodes")
    if k > len(graph.nodes):
        raise NoPathFoundError(f"graph has only {len(graph.nodes)} nodes, cannot form a {k}-node path")

    neighbors = adjacency(graph)
    edge_map = edge_index_map(graph)
    if k == 1:
        starts = list(range(len(graph.nodes)))
    else:
        starts = [n for n in range(len(graph.nodes)) if neighbors[n]]
    if not starts:
        raise NoPathFoundError(f"no start node with an edge exists for a {k}-node path")

    for _ in range(RESTART_BUDGET + 1):
        node = rng.choice(starts)
        nodes = [node]
        visited = {node}
        while len(nodes) < k:
            options = [n for n in neighbors[nodes[-1]] if n not in visited]
            if not options:
                break
            node = rng.choice(options)
            nodes.append(node)
            visited.add(node)
        if len(nodes) == k:
            return _path_from_nodes(nodes, edge_map)
    raise NoPathFoundError(f"no {k}-node simple path found within {RESTART_BUDGET} restarts")


def enumerate_paths(graph: RelevanceGraph, k: int, limit: int | None = None) -> list[ReasoningPath]:
    """Exhaustive DFS over simple k-node paths in lexicographic node order."""
    if k < 1:
        raise ValidationError("path length must be >= 1")
    neighbors = adjacency(graph)
    edge_map = edge_index_map(graph)
    found: list[ReasoningPath] = []

    def extend(nodes: list[int], visited: set[int]) -> bool:
        if limit is not None and len(found) >= limit:
            return True
        if len(nodes) == k:
            found.append(_path_from_nodes(nodes, edge_map))
            return limit is not None and len(found) >= limit
        for nxt in neighbors[nodes[-1]]:
            if nxt in visited:
                continue
            nodes.append(nxt)
            visited.add(nxt)
            full = extend(nodes, visited)
            nodes.pop()
            visited.remove(nxt)
            if full:
                return True
        return False

    for start in range(len(graph.nodes)):
        if extend([start], {start}):
            break
    return found


def sample_length(distribution: LengthDistribution, rng: Rng) -> int:
    """Draw a path length from the configured categorical distribution."""
    return distribution.lengths[rng.weighted_index(distribution.weights)]

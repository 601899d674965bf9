from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fundamental_cone import GeneratorSet
from .gf2codes import PseudoconeError
from .pseudogeometry import angle_matrix

logger = logging.getLogger(__name__)

_BRUTE_FORCE_MAX_NODES = 7
_SYMMETRY_TOLERANCE = 1e-9
_ANGLE_RANGE = (0.0, 90.0)


class GraphError(PseudoconeError):
    pass


@dataclass(eq=False)
class CostMatrix:
    costs: np.ndarray

    def __post_init__(self) -> None:
        costs = np.array(self.costs, dtype=np.float64)
        if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
            raise GraphError(f"Cost matrix must be square, got shape {costs.shape}")
        if not np.all(np.isfinite(costs)):
            raise GraphError("Cost matrix has non-finite entries")
        if not np.allclose(costs, costs.T, rtol=0.0, atol=_SYMMETRY_TOLERANCE):
            raise GraphError("Cost matrix is not symmetric")
        if np.any(np.diag(costs) != 0):
            raise GraphError("Cost matrix diagonal must be zero")
        costs.setflags(write=False)
        self.costs = costs

    @property
    def size(self) -> int:
        return int(self.costs.shape[0])

    def cost(self, i: int, j: int) -> float:
        return float(self.costs[i, j])

    def negated(self) -> "CostMatrix":
        return CostMatrix(-self.costs)


@dataclass
class Tree:
    size: int
    edges: List[Tuple[int, int]] = field(default_factory=list)
    total_cost: float = 0.0

    def __post_init__(self) -> None:
        self.edges = [(min(i, j), max(i, j)) for i, j in self.edges]
        if self.size < 1:
            raise GraphError("Tree needs at least one node")
        if len(self.edges) != self.size - 1:
            raise GraphError(f"Spanning tree on {self.size} nodes needs {self.size - 1} edges, got {len(self.edges)}")
        parent = list(range(self.size))

        def find(node: int) -> int:
            while parent[node] != node:
                parent[node] = parent[parent[node]]
                node = parent[node]
            return node

        for i, j in self.edges:
            if not (0 <= i < self.size and 0 <= j < self.size) or i == j:
                raise GraphError(f"Invalid edge: ({i}, {j})")
            root_i, root_j = find(i), find(j)
            if root_i == root_j:
                raise GraphError(f"Edge ({i}, {j}) closes a cycle")
            parent[root_i] = root_j


@dataclass
class AngleStats:
    edge_costs: List[float]
    mean_deg: float
    std_deg: float
    bin_edges: List[float]
    counts: List[int]

    def summary(self) -> str:
        return f"{self.mean_deg:.2f},{self.std_deg:.2f}"


def build_angle_graph(generators: GeneratorSet | Sequence[np.ndarray] | np.ndarray) -> CostMatrix:
    if isinstance(generators, GeneratorSet):
        vectors = generators.matrix()
    else:
        vectors = np.asarray(generators, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 2:
        raise GraphError("Angle graph needs at least 2 vectors")
    if np.any(vectors < 0) or np.any(np.linalg.norm(vectors, axis=1) == 0):
        raise GraphError("Angle graph vectors must be nonnegative and nonzero")
    return CostMatrix(angle_matrix(vectors))


def spanning_tree_cost(costs: CostMatrix, edges: Sequence[Tuple[int, int]]) -> float:
    return math.fsum(costs.cost(i, j) for i, j in edges)


def prim_mst(costs: CostMatrix) -> Tree:
    """Dense Prim. Among equal keys the lowest node index joins first."""
    size = costs.size
    if size == 0:
        raise GraphError("Cost matrix is empty")
    matrix = costs.costs
    in_tree = np.zeros(size, dtype=bool)
    in_tree[0] = True
    best = matrix[0].copy()
    parent = np.zeros(size, dtype=np.int64)
    edges: List[Tuple[int, int]] = []
    for _ in range(size - 1):
        keys = np.where(in_tree, np.inf, best)
        node = int(np.argmin(keys))
        edges.append((min(node, int(parent[node])), max(node, int(parent[node]))))
        in_tree[node] = True
        improved = ~in_tree & (matrix[node] < best)
        best[improved] = matrix[node][improved]
        parent[improved] = node
    return Tree(size, edges, spanning_tree_cost(costs, edges))


def prufer_to_edges(sequence: Sequence[int], size: int) -> List[Tuple[int, int]]:
    if size == 1:
        return []
    if len(sequence) != size - 2:
        raise GraphError(f"Prufer sequence for {size} nodes must have length {size - 2}")
    degree = [1] * size
    for node in sequence:
        if not 0 <= node < size:
            raise GraphError(f"Prufer entry out of range: {node}")
        degree[node] += 1
    edges: List[Tuple[int, int]] = []
    for node in sequence:
        leaf = degree.index(1)
        edges.append((min(leaf, node), max(leaf, node)))
        degree[leaf] -= 1
        degree[node] -= 1
    remaining = [k for k in range(size) if degree[k] == 1]
    edges.append((remaining[0], remaining[1]))
    return edges


def brute_force_mst(costs: CostMatrix) -> Tree:
    size = costs.size
    if size > _BRUTE_FORCE_MAX_NODES:
        raise GraphError(f"Brute-force MST is limited to {_BRUTE_FORCE_MAX_NODES} nodes, got {size}")
    if size == 1:
        return Tree(1, [], 0.0)
    best_edges: Optional[List[Tuple[int, int]]] = None
    best_total = math.inf
    for sequence in itertools.product(range(size), repeat=size - 2):
        edges = prufer_to_edges(sequence, size)
        total = spanning_tree_cost(costs, edges)
        if total < best_total:
            best_total = total
            best_edges = edges
    return Tree(size, best_edges or [], best_total)


def random_spanning_tree(size: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    if size < 2:
        return []
    sequence = [int(v) for v in rng.integers(0, size, size=size - 2)]
    return prufer_to_edges(sequence, size)


def mst_angle_distribution(generators: GeneratorSet | Sequence[np.ndarray] | np.ndarray,
                           bin_width: float = 1.0) -> Tuple[AngleStats, Tree, CostMatrix]:
    if bin_width <= 0:
        raise GraphError("Histogram bin width must be positive")
    costs = build_angle_graph(generators)
    tree = prim_mst(costs)
    values = np.array([costs.cost(i, j) for i, j in tree.edges], dtype=np.float64)
    bins = int(math.ceil((_ANGLE_RANGE[1] - _ANGLE_RANGE[0]) / bin_width))
    edges = [_ANGLE_RANGE[0] + k * bin_width for k in range(bins + 1)]
    counts, _ = np.histogram(values, bins=np.array(edges))
    stats = AngleStats(edge_costs=[float(v) for v in values],
                       mean_deg=float(np.mean(values)),
                       std_deg=float(np.std(values)),
                       bin_edges=edges,
                       counts=[int(c) for c in counts])
    logger.info("MST over %d vectors: mean %.4f deg, std %.4f deg", costs.size, stats.mean_deg, stats.std_deg)
    return stats, tree, costs


def write_mst_edges(tree: Tree, costs: CostMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["edge_i", "edge_j", "angle_deg"])
        for i, j in tree.edges:
            writer.writerow([i, j, repr(costs.cost(i, j))])

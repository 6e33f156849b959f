"""Agent graphs, subgroup partitions and local infection ratios."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, TextIO

import numpy as np

__all__ = [
    "Graph",
    "Partition",
    "HomogeneityReport",
    "generate_rgg",
    "min_degree",
    "partition_nodes",
    "local_infection_ratio",
    "local_infection_ratios",
    "heterogeneity",
    "homogeneity_check",
    "write_edge_list",
    "read_edge_list",
]

PARTITION_MODES = ("index", "spatial")


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed graph stored as a dense in-neighbour matrix.

    ``adj[i, j]`` is true when ``j`` is an in-neighbour of ``i``.
    """

    adj: np.ndarray
    positions: np.ndarray
    side: float = 0.0
    radius: float = 0.0
    seed: int | None = None
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        adj = np.ascontiguousarray(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(np.diagonal(adj)):
            raise ValueError("self-loops are not allowed")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        deg = adj.sum(axis=1).astype(np.int64)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def in_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj[i])

    @property
    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adj, self.adj.T))

    def is_complete(self) -> bool:
        return bool(np.all(self.degrees == self.n - 1))

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int]], *, directed: bool = False, positions=None
    ) -> "Graph":
        """Build from ``(i, j)`` pairs; directed means j receives from i."""
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            adj[j, i] = True
            if not directed:
                adj[i, j] = True
        pos = np.zeros((n, 2)) if positions is None else np.asarray(positions, dtype=float)
        return cls(adj=adj, positions=pos)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        adj = ~np.eye(n, dtype=bool)
        return cls(adj=adj, positions=np.zeros((n, 2)))


def generate_rgg(n: int, side: float, radius: float, seed: int | None) -> Graph:
    """Random geometric graph: uniform nodes in [0, side]^2, edges within ``radius``.

    Nodes closer than or exactly at ``radius`` are linked both ways.
    Isolated nodes are kept.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if side <= 0 or radius <= 0:
        raise ValueError("side and radius must be positive")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, side, size=(n, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    adj = d2 <= radius * radius
    np.fill_diagonal(adj, False)
    return Graph(adj=adj, positions=pos, side=float(side), radius=float(radius), seed=seed)


def min_degree(g: Graph) -> int:
    return int(g.degrees.min()) if g.n else 0


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint cover of the nodes by subgroups numbered 1..m."""

    m: int
    assignment: np.ndarray
    mode: str = "index"

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.size and (a.min() < 1 or a.max() > self.m):
            raise ValueError("subgroup ids must lie in 1..m")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    def members(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == s)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.m + 1)[1:]


def partition_nodes(g: Graph, m: int, mode: str = "index", seed: int | None = None) -> Partition:
    """Split nodes into ``m`` near-equal subgroups.

    ``index``: uniformly random assignment.  ``spatial``: bands by
    x-coordinate, subgroup 1 leftmost.
    """
    n = g.n
    if m < 1 or m > n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if mode == "index":
        order = np.random.default_rng(seed).permutation(n)
    elif mode == "spatial":
        order = np.lexsort((np.arange(n), g.positions[:, 0]))
    else:
        raise ValueError(f"unknown partition mode {mode!r}; expected one of {PARTITION_MODES}")
    assignment = np.empty(n, dtype=np.int64)
    for s, block in enumerate(np.array_split(order, m), start=1):
        assignment[block] = s
    return Partition(m=m, assignment=assignment, mode=mode)


def _as_mask(infected, n: int) -> np.ndarray:
    arr = np.asarray(infected)
    if arr.dtype == bool and arr.shape == (n,):
        return arr
    mask = np.zeros(n, dtype=bool)
    if arr.size:
        mask[arr.astype(np.int64)] = True
    return mask


def neighborhood_unions(g: Graph, p: Partition) -> np.ndarray:
    """Row s-1 marks the union of in-neighbourhoods of subgroup s."""
    out = np.zeros((p.m, g.n), dtype=bool)
    for s in range(1, p.m + 1):
        mem = p.members(s)
        if mem.size:
            out[s - 1] = g.adj[mem].any(axis=0)
    return out


def local_infection_ratios(unions: np.ndarray, infected_mask: np.ndarray) -> np.ndarray:
    """Infection ratio over each precomputed neighbourhood union (0 if empty)."""
    size = unions.sum(axis=1)
    hit = (unions & infected_mask[None, :]).sum(axis=1)
    return np.divide(hit, size, out=np.zeros(len(size)), where=size > 0)


def local_infection_ratio(g: Graph, p: Partition, infected, s: int) -> float:
    """Share of infected nodes in the union of in-neighbourhoods of subgroup ``s``."""
    if not 1 <= s <= p.m:
        raise ValueError(f"subgroup {s} not in 1..{p.m}")
    mask = _as_mask(infected, g.n)
    mem = p.members(s)
    union = g.adj[mem].any(axis=0) if mem.size else np.zeros(g.n, dtype=bool)
    size = int(union.sum())
    return float((union & mask).sum() / size) if size else 0.0


def heterogeneity(g: Graph, p: Partition, infected) -> float:
    """max_s |I_s - I| with I the global infected share."""
    mask = _as_mask(infected, g.n)
    ratios = local_infection_ratios(neighborhood_unions(g, p), mask)
    return float(np.max(np.abs(ratios - mask.mean()))) if g.n else 0.0


class HomogeneityReport(NamedTuple):
    passes: np.ndarray
    worst_ratio: float

    @property
    def all_pass(self) -> bool:
        return bool(self.passes.all())


def homogeneity_check(g: Graph, p: Partition, infected, regular=None) -> HomogeneityReport:
    """Test |N_i ∩ infected| <= d_i I_s for every node.

    ``worst_ratio`` is the largest |N_i ∩ infected| / (d_i I_s) over regular
    nodes (non-infected by default); it is ``inf`` when I_s is zero but the
    node still sees an infected neighbour.
    """
    mask = _as_mask(infected, g.n)
    reg = ~mask if regular is None else _as_mask(regular, g.n)
    ratios = local_infection_ratios(neighborhood_unions(g, p), mask)
    seen = (g.adj & mask[None, :]).sum(axis=1)
    allowance = g.degrees * ratios[p.assignment - 1]
    passes = seen <= allowance + 1e-12
    worst = 0.0
    for i in np.flatnonzero(reg):
        if seen[i] == 0:
            continue
        worst = max(worst, np.inf if allowance[i] == 0 else seen[i] / allowance[i])
    return HomogeneityReport(passes=passes, worst_ratio=float(worst))


def write_edge_list(g: Graph, fh: TextIO) -> None:
    """First line ``n L r seed``, then ``i x y`` per node, then ``i j`` per undirected edge."""
    seed = "none" if g.seed is None else str(g.seed)
    fh.write(f"{g.n} {float(g.side)!r} {float(g.radius)!r} {seed}\n")
    for i, (x, y) in enumerate(g.positions):
        fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
    upper = np.argwhere(np.triu(g.adj | g.adj.T, k=1))
    for i, j in upper:
        fh.write(f"{i} {j}\n")


def read_edge_list(fh: TextIO) -> Graph:
    header = fh.readline().split()
    n = int(header[0])
    side, radius = float(header[1]), float(header[2])
    seed = None if header[3] == "none" else int(header[3])
    pos = np.zeros((n, 2))
    for _ in range(n):
        i, x, y = fh.readline().split()
        pos[int(i)] = (float(x), float(y))
    adj = np.zeros((n, n), dtype=bool)
    for line in fh:
        if line.strip():
            i, j = map(int, line.split())
            adj[i, j] = adj[j, i] = True
    return Graph(adj=adj, positions=pos, side=side, radius=radius, seed=seed)

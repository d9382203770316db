"""Instances, arborescence topologies, flows and network cost.

Vertex numbering used throughout the package, for ``n`` sources and ``s``
Steiner points::

    0 .. n-1        sources p_1 .. p_n
    n               the sink q
    n+1 .. n+s      Steiner points

A topology is stored as a parent array: ``parent[v]`` is the vertex that
``v`` sends its flow to, and ``parent[n] == -1``.  Edge ``v`` therefore means
the directed edge ``v -> parent[v]``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .norms import NormSpace
from .weights import WeightFunction

__all__ = [
    "ModelError",
    "TopologyError",
    "ConservationError",
    "Instance",
    "Topology",
    "Embedding",
    "GeneralNetwork",
    "derive_flows",
    "network_cost",
    "general_network_cost",
    "enumerate_full_topologies",
    "full_topology_count",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 7


class ModelError(ValueError):
    pass


class TopologyError(ModelError):
    pass


class ConservationError(ModelError):
    def __init__(self, node: int, imbalance: float):
        super().__init__(f"flow conservation violated at node {node}: imbalance {imbalance:g}")
        self.node = node
        self.imbalance = imbalance


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """Sources with tonnages, one sink, a norm and a weight function."""

    sources: np.ndarray
    tonnages: np.ndarray
    sink: np.ndarray
    space: NormSpace
    weight: WeightFunction

    def __post_init__(self):
        src = _frozen_array(self.sources)
        ton = _frozen_array(self.tonnages)
        snk = _frozen_array(self.sink)
        d = self.space.dim
        if src.ndim != 2 or src.shape[0] < 1:
            raise ModelError("need at least one source point")
        if src.shape[1] != d or snk.shape != (d,):
            raise ModelError(f"all points must have dimension {d}")
        if ton.shape != (src.shape[0],):
            raise ModelError("one tonnage per source required")
        if not np.all(np.isfinite(src)) or not np.all(np.isfinite(snk)):
            raise ModelError("coordinates must be finite")
        if not np.all(ton > 0) or not np.all(np.isfinite(ton)):
            raise ModelError("tonnages must be finite and strictly positive")
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "tonnages", ton)
        object.__setattr__(self, "sink", snk)
        if self.duplicate_points:
            warnings.warn(
                f"instance has coincident terminals: {self.duplicate_points}", stacklevel=3
            )

    @property
    def n(self) -> int:
        return self.sources.shape[0]

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def total_tonnage(self) -> float:
        return float(sum(self.tonnages.tolist()))

    @cached_property
    def terminals(self) -> np.ndarray:
        """Sources followed by the sink, shape ``(n + 1, dim)``."""
        t = np.vstack([self.sources, self.sink[None, :]])
        t.setflags(write=False)
        return t

    @cached_property
    def duplicate_points(self) -> list[tuple[int, int]]:
        t = self.terminals
        return [
            (i, j)
            for i, j in itertools.combinations(range(len(t)), 2)
            if np.array_equal(t[i], t[j])
        ]

    @cached_property
    def diameter(self) -> float:
        t = self.terminals
        diffs = t[:, None, :] - t[None, :, :]
        return float(np.max(self.space.norm(diffs)))

    @property
    def scale(self) -> float:
        """Diameter, or 1 when every terminal coincides."""
        return self.diameter if self.diameter > 0 else 1.0


@dataclass(frozen=True)
class Topology:
    """Rooted tree over terminals and Steiner points, edges pointing to the sink."""

    n_sources: int
    parent: tuple[int, ...]

    def __post_init__(self):
        n = self.n_sources
        par = tuple(int(v) for v in self.parent)
        object.__setattr__(self, "parent", par)
        if n < 1:
            raise TopologyError("need at least one source")
        if len(par) < n + 1:
            raise TopologyError("parent array shorter than the terminal count")
        if par[n] != -1:
            raise TopologyError("the sink must be the root (parent -1)")
        V = len(par)
        for v, p in enumerate(par):
            if v == n:
                continue
            if not 0 <= p < V or p == v:
                raise TopologyError(f"vertex {v} has invalid parent {p}")
        # every vertex must reach the sink without revisiting a vertex
        for v in range(V):
            seen = set()
            u = v
            while u != n:
                if u in seen:
                    raise TopologyError(f"cycle through vertex {u}")
                seen.add(u)
                u = par[u]
        deg = self.degrees
        if deg[n] < 1:
            raise TopologyError("sink has no incident edge")
        for v in range(n + 1, V):
            if deg[v] < 2:
                raise TopologyError(f"Steiner vertex {v} has degree {deg[v]}")

    @property
    def n_steiner(self) -> int:
        return len(self.parent) - self.n_sources - 1

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def sink(self) -> int:
        return self.n_sources

    def is_steiner(self, v: int) -> bool:
        return v > self.n_sources

    @property
    def steiner_vertices(self) -> range:
        return range(self.n_sources + 1, self.n_vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Directed edges ``(child, parent)`` in vertex order, sink excluded."""
        return [(v, p) for v, p in enumerate(self.parent) if p >= 0]

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(v)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * len(self.parent)
        for v, p in enumerate(self.parent):
            if p >= 0:
                deg[v] += 1
                deg[p] += 1
        return tuple(deg)

    @cached_property
    def subtree_sources(self) -> tuple[frozenset[int], ...]:
        """Sources whose root path passes through each vertex (itself included)."""
        sets: list[set[int]] = [set() for _ in self.parent]
        for i in range(self.n_sources):
            u = i
            while u != -1:
                sets[u].add(i)
                u = self.parent[u]
        return tuple(frozenset(s) for s in sets)

    def is_full(self) -> bool:
        n = self.n_sources
        deg = self.degrees
        return (
            self.n_steiner == max(n - 1, 0)
            and all(deg[v] == 1 for v in range(n + 1))
            and all(deg[v] == 3 for v in self.steiner_vertices)
        )

    def _label(self, v: int) -> str:
        n = self.n_sources
        if v == n:
            return "q"
        if v < n:
            return f"p{v + 1}"
        return "s{" + ",".join(str(i + 1) for i in sorted(self.subtree_sources[v])) + "}"

    @cached_property
    def key(self) -> tuple[tuple[str, str], ...]:
        """Encoding invariant under relabeling of Steiner points.

        Steiner points are named by the set of sources routed through them,
        which is unique whenever every Steiner point has degree >= 3.
        """
        return tuple(sorted((self._label(v), self._label(p)) for v, p in self.edges))

    def with_parent(self, parent: Sequence[int]) -> "Topology":
        return Topology(self.n_sources, tuple(parent))

    @classmethod
    def star(cls, n: int) -> "Topology":
        """All sources attached to a single Steiner point feeding the sink."""
        return cls(n, tuple([n + 1] * n + [-1, n]))

    @classmethod
    def direct(cls, n: int) -> "Topology":
        """Every source wired straight to the sink."""
        return cls(n, tuple([n] * n + [-1]))


def derive_flows(top: Topology, tonnages: Sequence[float]) -> dict[tuple[int, int], float]:
    """Flow on each edge: the tonnage sum of the sources routed through it."""
    tonnages = [float(t) for t in tonnages]
    if len(tonnages) != top.n_sources:
        raise TopologyError("one tonnage per source required")
    flows = {}
    for v, p in top.edges:
        flows[(v, p)] = sum(tonnages[i] for i in sorted(top.subtree_sources[v]))
    return flows


@dataclass(frozen=True, eq=False)
class Embedding:
    """A topology with Steiner coordinates, plus derived per-edge data."""

    instance: Instance
    topology: Topology
    steiner_positions: np.ndarray
    converged: bool = True
    history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        inst, top = self.instance, self.topology
        if top.n_sources != inst.n:
            raise ModelError("topology and instance disagree on the number of sources")
        pos = np.array(self.steiner_positions, dtype=float).reshape(top.n_steiner, inst.dim)
        pos.setflags(write=False)
        object.__setattr__(self, "steiner_positions", pos)

    @cached_property
    def positions(self) -> np.ndarray:
        """Coordinates of every vertex; terminal rows are the instance's own."""
        P = np.vstack([self.instance.terminals, self.steiner_positions])
        P.setflags(write=False)
        return P

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return self.topology.edges

    @cached_property
    def flows(self) -> np.ndarray:
        f = derive_flows(self.topology, self.instance.tonnages)
        return np.array([f[e] for e in self.edges])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.asarray(self.instance.weight(self.flows), dtype=float).reshape(-1)

    @cached_property
    def lengths(self) -> np.ndarray:
        P = self.positions
        if not self.edges:
            return np.zeros(0)
        u, v = np.array(self.edges).T
        return np.asarray(self.instance.space.norm(P[u] - P[v])).reshape(-1)

    @cached_property
    def total_cost(self) -> float:
        return float(np.sum(self.weights * self.lengths))

    def replace(self, **kw) -> "Embedding":
        args = dict(
            instance=self.instance,
            topology=self.topology,
            steiner_positions=self.steiner_positions,
            converged=self.converged,
            history=self.history,
        )
        args.update(kw)
        return Embedding(**args)


def network_cost(emb: Embedding) -> float:
    """Total cost sum_e w(flow_e) * length_e."""
    return emb.total_cost


@dataclass(frozen=True, eq=False)
class GeneralNetwork:
    """A directed network with explicit edge flows (split routing allowed).

    ``supplies`` maps each source node to its tonnage; ``sink`` receives their
    total.  Leave both empty for a pure Steiner-tree network with no flow.
    """

    points: np.ndarray
    edges: tuple[tuple[int, int, float], ...]
    supplies: Mapping[int, float] = field(default_factory=dict)
    sink: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen_array(self.points))
        object.__setattr__(
            self, "edges", tuple((int(u), int(v), float(f)) for u, v, f in self.edges)
        )
        V = len(self.points)
        for u, v, f in self.edges:
            if not (0 <= u < V and 0 <= v < V):
                raise ModelError(f"edge ({u}, {v}) references a missing node")
            if f < 0:
                raise ModelError(f"edge ({u}, {v}) has negative flow")

    def check_conservation(self, tol: float = 1e-9) -> None:
        V = len(self.points)
        net = np.zeros(V)
        for u, v, f in self.edges:
            net[u] += f
            net[v] -= f
        expected = np.zeros(V)
        for node, t in self.supplies.items():
            expected[node] += t
        if self.sink is not None:
            expected[self.sink] -= sum(self.supplies.values())
        scale = max(1.0, sum(self.supplies.values()))
        for node in range(V):
            gap = net[node] - expected[node]
            if abs(gap) > tol * scale:
                raise ConservationError(node, float(gap))


def general_network_cost(net: GeneralNetwork, w: WeightFunction, space: NormSpace) -> float:
    """Cost of an arbitrary flow network after checking conservation."""
    net.check_conservation()
    P = net.points
    return float(sum(w(f) * space.norm(P[u] - P[v]) for u, v, f in net.edges))


def full_topology_count(n: int) -> int:
    """(2k-5)!! with k = n + 1 terminals; 1 for n = 1."""
    k = n + 1
    out = 1
    for j in range(3, 2 * k - 4, 2):
        out *= j
    return out


def _orient(n: int, adj: dict[int, list[int]], V: int) -> Topology:
    parent = [-1] * V
    stack = [n]
    seen = {n}
    while stack:
        u = stack.pop()
        for x in adj[u]:
            if x not in seen:
                seen.add(x)
                parent[x] = u
                stack.append(x)
    return Topology(n, tuple(parent))


def enumerate_full_topologies(n: int, cap: int = ENUMERATION_CAP) -> list[Topology]:
    """All full Steiner topologies on n sources plus the sink.

    Built by the standard insertion scheme: starting from the unique tree on
    three terminals, source ``k`` is attached to a new Steiner point that
    subdivides one of the existing edges.  Every full topology arises from
    exactly one sequence of choices.
    """
    if n < 1:
        raise TopologyError("need at least one source")
    if n > cap:
        raise TopologyError(f"n={n} exceeds the enumeration cap {cap}")
    if n == 1:
        return [Topology.direct(1)]
    # undirected edge lists; Steiner ids count up from n + 1
    q = n
    first = n + 1
    trees = [[(0, first), (1, first), (q, first)]]
    for k in range(2, n):
        s_new = n + k
        grown = []
        for edges in trees:
            for idx, (a, b) in enumerate(edges):
                e = edges[:idx] + edges[idx + 1 :] + [(a, s_new), (b, s_new), (k, s_new)]
                grown.append(e)
        trees = grown
    V = 2 * n
    out = []
    for edges in trees:
        adj: dict[int, list[int]] = {v: [] for v in range(V)}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        out.append(_orient(n, adj, V))
    return out

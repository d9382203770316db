"""Optimality certificates from the balancing and collapsing conditions.

At a Steiner point o with incoming neighbours p_i (flows t_i) and outgoing
neighbour q, write x* for the dual vector of x - o.  The star is a minimal
arborescence exactly when

    balancing:   sum_i w(t_i) p_i* + w(sum_i t_i) q* = 0
    collapsing:  ||sum_{i in I} w(t_i) p_i*||_* <= w(sum_{i in I} t_i)  for all I.

For trees with several Steiner points the conditions are checked at every
Steiner point; the fixed-topology cost is convex, so local stationarity at
every vertex means optimality for that topology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Embedding, Instance
from .norms import NormSpace
from .weights import WeightFunction

__all__ = [
    "CertifyError",
    "StarData",
    "StarReport",
    "TerminalReport",
    "Certificate",
    "Corollary3Result",
    "balancing_residual",
    "collapsing_margins",
    "certify_star",
    "certify_embedding",
    "corollary3_check",
    "DEFAULT_TOL",
    "SUBSET_DEGREE_CAP",
]

DEFAULT_TOL = 1e-8
SUBSET_DEGREE_CAP = 12

MULTI_STEINER_NOTE = (
    "per-vertex balancing/collapsing plus convexity of the fixed-topology cost; "
    "global optimality across topologies rests on the exhaustive search"
)


class CertifyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StarData:
    """A Steiner point with its incoming and outgoing neighbours."""

    center: np.ndarray
    in_points: np.ndarray
    in_flows: np.ndarray
    out_point: np.ndarray
    out_flow: float
    space: NormSpace
    weight: WeightFunction

    def __post_init__(self):
        c = np.asarray(self.center, float)
        ip = np.asarray(self.in_points, float).reshape(-1, c.shape[0])
        fl = np.asarray(self.in_flows, float).reshape(-1)
        op = np.asarray(self.out_point, float)
        if len(ip) != len(fl) or len(ip) == 0:
            raise CertifyError("need one flow per incoming neighbour")
        out = float(self.out_flow) if self.out_flow is not None else float(fl.sum())
        if abs(out - fl.sum()) > 1e-9 * max(1.0, out):
            raise CertifyError("outflow must equal the sum of the inflows")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "in_points", ip)
        object.__setattr__(self, "in_flows", fl)
        object.__setattr__(self, "out_point", op)
        object.__setattr__(self, "out_flow", out)
        offsets = np.vstack([ip, op[None, :]]) - c
        if np.any(np.asarray(self.space.norm(offsets)) == 0):
            raise CertifyError("a neighbour coincides with the centre")

    @classmethod
    def from_arrays(cls, center, in_points, in_flows, out_point, space, weight):
        return cls(center, in_points, in_flows, out_point, float(np.sum(in_flows)), space, weight)

    @property
    def degree(self) -> int:
        return len(self.in_flows) + 1

    def weighted_in_duals(self) -> np.ndarray:
        """Rows w(t_i) * p_i*."""
        duals = self.space.dual_vector(self.in_points - self.center)
        return np.asarray(self.weight(self.in_flows)).reshape(-1, 1) * duals

    def weighted_out_dual(self) -> np.ndarray:
        return self.weight(self.out_flow) * self.space.dual_vector(self.out_point - self.center)

    def cost(self, center=None) -> float:
        c = self.center if center is None else np.asarray(center, float)
        w_in = np.asarray(self.weight(self.in_flows)).reshape(-1)
        sp = self.space
        return float(
            w_in @ np.asarray(sp.norm(self.in_points - c)).reshape(-1)
            + self.weight(self.out_flow) * sp.norm(self.out_point - c)
        )


def balancing_residual(star: StarData) -> float:
    """Dual norm of sum_i w(t_i) p_i* + w(T) q*."""
    total = star.weighted_in_duals().sum(axis=0) + star.weighted_out_dual()
    return float(star.space.dual_norm(total))


def collapsing_margins(star: StarData) -> list[tuple[tuple[int, ...], float]]:
    """Slack w(sum_I t_i) - ||sum_I w(t_i) p_i*||_* for every nonempty subset I."""
    m = len(star.in_flows)
    if m + 1 > SUBSET_DEGREE_CAP:
        raise CertifyError(f"degree {m + 1} exceeds the subset cap {SUBSET_DEGREE_CAP}")
    V = star.weighted_in_duals()
    out = []
    for size in range(1, m + 1):
        for I in itertools.combinations(range(m), size):
            idx = list(I)
            if size == 1:
                # w(t_i) p_i* has dual norm exactly w(t_i)
                out.append((I, 0.0))
                continue
            lhs = star.space.dual_norm(V[idx].sum(axis=0))
            out.append((I, float(star.weight(star.in_flows[idx].sum()) - lhs)))
    return out


@dataclass
class StarReport:
    vertex: int
    degree: int
    balancing_residual: float
    collapsing_margins: list[tuple[tuple[int, ...], float]]
    passed: bool
    failure: str | None = None

    @property
    def min_collapsing_slack(self) -> float:
        return min(s for _, s in self.collapsing_margins)


@dataclass
class TerminalReport:
    """Informational: dual-vector balance at a terminal of degree > 1."""

    vertex: int
    degree: int
    imbalance: float


@dataclass
class Certificate:
    verdict: str
    condition: str | None = None
    location: int | None = None
    stars: list[StarReport] = field(default_factory=list)
    terminals: list[TerminalReport] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    tolerance: float = DEFAULT_TOL
    scale: float = 1.0

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def summary(self) -> str:
        if self.verdict == "violated":
            return f"violated({self.condition}, vertex {self.location})"
        if self.verdict == "not_applicable":
            return f"not_applicable({self.condition})"
        return "certified"


def certify_star(
    star: StarData, tol: float = DEFAULT_TOL, scale: float | None = None, vertex: int = -1
) -> StarReport:
    """Evaluate both conditions at one Steiner point.

    Tolerances are relative to ``scale`` (default: weight of the outflow).
    """
    scale = star.weight(star.out_flow) if scale is None else scale
    res = balancing_residual(star)
    margins = collapsing_margins(star)
    failure = None
    if res > tol * scale:
        failure = "balancing"
    elif min(s for _, s in margins) < -tol * scale:
        failure = "collapsing"
    return StarReport(vertex, star.degree, res, margins, failure is None, failure)


def star_at(emb: Embedding, v: int) -> StarData:
    top = emb.topology
    P = emb.positions
    flows = emb.flows
    # edge index of vertex c's outgoing edge
    index = {e[0]: k for k, e in enumerate(emb.edges)}
    kids = list(top.children[v])
    inst = emb.instance
    return StarData(
        P[v],
        P[kids],
        flows[[index[c] for c in kids]],
        P[top.parent[v]],
        float(flows[index[v]]),
        inst.space,
        inst.weight,
    )


def certify_embedding(
    emb: Embedding,
    inst: Instance | None = None,
    tol: float = DEFAULT_TOL,
    notes: Sequence[str] = (),
) -> Certificate:
    """Check every Steiner point of ``emb``.

    Both tolerances scale with w(total tonnage).  Steiner edges of zero
    length raise :class:`CertifyError`; contract them first.
    """
    inst = inst or emb.instance
    if inst is not emb.instance and not (
        np.array_equal(inst.terminals, emb.instance.terminals)
        and np.array_equal(inst.tonnages, emb.instance.tonnages)
    ):
        raise CertifyError("embedding was built for a different instance")
    top = emb.topology
    scale = float(inst.weight(inst.total_tonnage))
    cert = Certificate("certified", notes=list(notes), tolerance=tol, scale=scale)
    P = emb.positions
    sp = inst.space
    for u, p in emb.edges:
        if (top.is_steiner(u) or top.is_steiner(p)) and sp.norm(P[u] - P[p]) == 0:
            raise CertifyError(f"zero-length edge ({u}, {p}) at a Steiner point; contract first")
    for v in top.steiner_vertices:
        rep = certify_star(star_at(emb, v), tol, scale, vertex=v)
        cert.stars.append(rep)
        if not rep.passed and cert.verdict == "certified":
            cert.verdict, cert.condition, cert.location = "violated", rep.failure, v
    W = emb.weights
    for v in range(top.n_sources + 1):
        if top.degrees[v] < 2:
            continue
        total = np.zeros(inst.dim)
        for k, (a, b) in enumerate(emb.edges):
            if v in (a, b):
                other = b if a == v else a
                if sp.norm(P[other] - P[v]) > 0:
                    total += W[k] * sp.dual_vector(P[other] - P[v])
        cert.terminals.append(TerminalReport(v, top.degrees[v], float(sp.dual_norm(total))))
    if top.n_steiner > 1:
        cert.notes.append(MULTI_STEINER_NOTE)
    if top.n_steiner == 0:
        cert.notes.append("no Steiner points: the cost of this topology is fixed")
    return cert


@dataclass(frozen=True)
class Corollary3Result:
    passed: bool
    condition: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def corollary3_check(
    vectors: Sequence[Sequence[float]],
    tonnages: Sequence[float],
    w: WeightFunction,
    tol: float = 1e-9,
) -> Corollary3Result:
    """Euclidean vector conditions for a Steiner point of degree m + 1.

    "norm"    ||v_i|| = w(t_i)
    "sum"     ||sum v_i|| = w(sum t_i)
    "subset"  ||sum_{i in I} v_i|| <= w(sum_{i in I} t_i) for proper subsets, |I| >= 2

The first failing condition is reported by name.

    Tolerances are relative to w(sum t_i).
    """
    V = np.asarray(vectors, float)
    t = np.asarray(tonnages, float)
    m = len(V)
    if m < 2 or len(t) != m:
        raise CertifyError("need m >= 2 vectors with one tonnage each")
    nrm = np.linalg.norm
    scale = float(w(t.sum()))
    for i in range(m):
        gap = abs(nrm(V[i]) - w(t[i]))
        if gap > tol * scale:
            return Corollary3Result(False, "norm", f"|v_{i + 1}| differs from w(t_{i + 1}) by {gap:.3g}")
    gap = abs(nrm(V.sum(axis=0)) - w(t.sum()))
    if gap > tol * scale:
        return Corollary3Result(False, "sum", f"|sum v| differs from w(sum t) by {gap:.3g}")
    for size in range(2, m):
        for I in itertools.combinations(range(m), size):
            idx = list(I)
            excess = nrm(V[idx].sum(axis=0)) - w(t[idx].sum())
            if excess > tol * scale:
                subset = tuple(i + 1 for i in I)
                return Corollary3Result(False, "subset", f"subset {subset} exceeds by {excess:.3g}")
    return Corollary3Result(True)

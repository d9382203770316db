"""Closed-form constructions: the weighted Melzak star, the split-routing
counterexample, degree-4 Steiner points in R^3, and the inequality checks
behind the degree-3 results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import Embedding, GeneralNetwork, Instance, Topology, general_network_cost
from .norms import euclidean
from .weights import WeightFunction, power, rounded_affine

__all__ = [
    "SpecialError",
    "MelzakSolution",
    "melzak_two_source",
    "Counterexample",
    "paper_counterexample",
    "degree4_feasible",
    "Degree4Construction",
    "degree4_construct",
    "lemma5_check",
    "lemma5_search",
    "Lemma5Sample",
    "f_alpha",
    "TRIANGLE_COST",
]

# sqrt(9982.5 + 7 sqrt(3890.25))
TRIANGLE_COST = math.sqrt(9982.5 + 7 * math.sqrt(3890.25))


class SpecialError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MelzakSolution:
    auxiliary_point: np.ndarray
    steiner_point: np.ndarray
    simpson_segment: tuple[np.ndarray, np.ndarray]
    total_cost: float
    degenerate: bool


def _circumcenter(a, b, c):
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if d == 0:
        return None
    sa, sb, sc = a @ a, b @ b, c @ c
    ux = (sa * (b[1] - c[1]) + sb * (c[1] - a[1]) + sc * (a[1] - b[1])) / d
    uy = (sa * (c[0] - b[0]) + sb * (a[0] - c[0]) + sc * (b[0] - a[0])) / d
    return np.array([ux, uy])


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def melzak_two_source(p1, p2, q, t1: float, t2: float, w: WeightFunction) -> MelzakSolution:
    """Optimal two-source arborescence in the Euclidean plane.

    The auxiliary point p sits on the far side of line p1p2 from q with
    |p - p1| : |p - p2| : |p1 - p2| = w(t2) : w(t1) : w(t1 + t2).  The
    Steiner point s is where segment pq meets the circumcircle of p p1 p2
    again, and the cost is w(t1 + t2) |p - q|.  When s would fall outside
    the arc p1p2 the optimum is a corner (s at p1, p2 or q) and the result is
    flagged degenerate.
    """
    p1, p2, q = (np.asarray(x, float) for x in (p1, p2, q))
    if any(x.shape != (2,) for x in (p1, p2, q)):
        raise SpecialError("the Melzak construction is planar")
    L = float(np.linalg.norm(p2 - p1))
    if L == 0:
        raise SpecialError("p1 and p2 coincide")
    a, b, c = w(t1), w(t2), w(t1 + t2)
    n = np.linalg.norm

    def star(s):
        return a * n(p1 - s) + b * n(p2 - s) + c * n(q - s)

    corners = [(star(x), x) for x in (p1, p2, q)]
    best_corner = min(corners, key=lambda z: z[0])

    # triangle p p1 p2: |p p1| = rb, |p p2| = ra
    rb, ra = b * L / c, a * L / c
    e = (p2 - p1) / L
    along = (rb * rb - ra * ra + L * L) / (2 * L)
    h2 = rb * rb - along * along
    side = _cross(p2 - p1, q - p1)
    normal = np.array([-e[1], e[0]])
    if side > 0:
        normal = -normal
    p = p1 + along * e + math.sqrt(max(h2, 0.0)) * normal

    def fallback():
        cost, s = best_corner
        return MelzakSolution(p, s.copy(), (p, q.copy()), float(cost), True)

    if h2 <= 0 or side == 0:
        return fallback()
    center = _circumcenter(p, p1, p2)
    if center is None:
        return fallback()
    # second intersection of p + u (q - p) with the circle through p
    dvec = q - p
    dd = float(dvec @ dvec)
    u = -2 * float((p - center) @ dvec) / dd
    s = p + u * dvec
    # s must lie on segment pq and on the arc p1p2 facing q
    on_segment = 0 < u <= 1
    same_side = _cross(p2 - p1, s - p1) * side >= 0
    if not (on_segment and same_side):
        return fallback()
    cost = c * math.sqrt(dd)
    if abs(cost - star(s)) > 1e-9 * cost:
        return fallback()
    return MelzakSolution(p, s, (p, q.copy()), float(cost), False)


@dataclass(frozen=True, eq=False)
class Counterexample:
    split_network: GeneralNetwork
    arborescence: Embedding
    melzak: MelzakSolution
    split_cost: float
    arborescence_cost: float


def triangle_instance() -> Instance:
    """Sources 1 apart, each 10 from the sink, tonnages (2, 4), w = ceil((3t+1)/2)."""
    h = math.sqrt(100 - 0.25)
    return Instance(
        sources=[[-0.5, 0.0], [0.5, 0.0]],
        tonnages=[2.0, 4.0],
        sink=[0.0, h],
        space=euclidean(2),
        weight=rounded_affine(3, 1, 2),
    )


def paper_counterexample() -> Counterexample:
    """Split routing (cost 102) beats the best arborescence (cost 102.074...)."""
    inst = triangle_instance()
    p1, p2 = inst.sources
    q = inst.sink
    # nodes: 0 = p1, 1 = p2, 2 = q; one unit of p2's four goes via p1
    net = GeneralNetwork(
        points=np.vstack([p1, p2, q]),
        edges=((1, 0, 1.0), (0, 2, 3.0), (1, 2, 3.0)),
        supplies={0: 2.0, 1: 4.0},
        sink=2,
    )
    split = general_network_cost(net, inst.weight, inst.space)
    mz = melzak_two_source(p1, p2, q, 2.0, 4.0, inst.weight)
    emb = Embedding(inst, Topology.star(2), mz.steiner_point[None, :])
    arb = emb.total_cost
    if not split < arb:
        raise SpecialError("split routing should be cheaper than the arborescence")
    return Counterexample(net, emb, mz, split, arb)


def degree4_feasible(w: WeightFunction, t: float) -> tuple[bool, float]:
    """Whether 3 w(t)^2 + w(3t)^2 <= 3 w(2t)^2; returns (feasible, slack)."""
    if t <= 0:
        raise SpecialError("tonnage must be positive")
    slack = 3 * w(2 * t) ** 2 - 3 * w(t) ** 2 - w(3 * t) ** 2
    return slack >= 0, float(slack)


@dataclass(frozen=True, eq=False)
class Degree4Construction:
    lam: float
    unit_vectors: np.ndarray
    vectors: np.ndarray
    instance: Instance
    embedding: Embedding


def degree4_construct(w: WeightFunction, t: float) -> Degree4Construction:
    """Three equal-tonnage sources meeting at one Steiner point of degree 4.

    The unit vectors u_i have pairwise inner product
    lam = w(3t)^2 / (6 w(t)^2) - 1/2 and v_i = w(t) u_i.  Sources sit at
    u_i around the origin and the sink at -(sum v_i) / |sum v_i|.
    """
    ok, slack = degree4_feasible(w, t)
    if not ok:
        raise SpecialError(f"condition 3w(t)^2 + w(3t)^2 <= 3w(2t)^2 fails (slack {slack:.3g})")
    lam = w(3 * t) ** 2 / (6 * w(t) ** 2) - 0.5
    if not -0.5 <= lam <= 1:
        raise SpecialError(f"lambda = {lam} outside [-1/2, 1]")
    U = _equiangular(lam)
    V = w(t) * U
    total = V.sum(axis=0)
    sink = -total / np.linalg.norm(total)
    inst = Instance(U, [t, t, t], sink, euclidean(3), w)
    emb = Embedding(inst, Topology.star(3), np.zeros((1, 3)))
    return Degree4Construction(lam, U, V, inst, emb)


def _equiangular(lam: float) -> np.ndarray:
    z = math.sqrt((1 + 2 * lam) / 3)
    r = math.sqrt(max(1 - z * z, 0.0))
    ang = 2 * np.pi * np.arange(1, 4) / 3
    return np.column_stack([r * np.cos(ang), r * np.sin(ang), np.full(3, z)])


def lemma5_check(f: Callable[[float], float], tonnages: Sequence[float]) -> float:
    """Right side minus left side of the inequality

        (m-1)(m-2)/2 f(0) + sum_{i<j} f(t_i + t_j)
            <= (m-2) sum_i f(t_i) + f(sum_i t_i),

    which holds whenever f' is convex.
    """
    t = [float(x) for x in tonnages]
    m = len(t)
    if m < 2:
        raise SpecialError("need at least two tonnages")
    if any(x < 0 for x in t):
        raise SpecialError("tonnages must be nonnegative")
    rhs = (m - 2) * sum(f(x) for x in t) + f(sum(t))
    pairs = sum(f(t[i] + t[j]) for i in range(m) for j in range(i + 1, m))
    lhs = (m - 1) * (m - 2) / 2 * f(0.0) + pairs
    return float(rhs - lhs)


def f_alpha(alpha: float) -> float:
    """3 + 3^(2 alpha) - 3 * 2^(2 alpha)."""
    if not 0 < alpha <= 1:
        raise SpecialError("alpha must lie in (0, 1]")
    return 3 + 3 ** (2 * alpha) - 3 * 2 ** (2 * alpha)


@dataclass(frozen=True)
class Lemma5Sample:
    slack: float
    d: float
    h: float
    alpha: float
    tonnages: tuple[float, ...]


def lemma5_search(
    alpha: float,
    samples: int = 10_000,
    seed: int = 0,
    max_m: int = 6,
    max_tonnage: float = 5.0,
    min_m: int = 3,
) -> Lemma5Sample:
    """Random search for the smallest slack with f = w^2, w = d + h t^alpha.

    d and h are drawn from (0, 2], m from min_m..max_m and tonnages from
    (0, max_tonnage].  The slack is identically zero for m = 2.
    """
    rng = np.random.default_rng(seed)
    worst = None
    for _ in range(samples):
        d = 2.0 - 2.0 * rng.random()
        h = 2.0 - 2.0 * rng.random()
        m = int(rng.integers(min_m, max_m + 1))
        t = tuple(float(x) for x in max_tonnage - max_tonnage * rng.random(m))
        w = power(d, h, alpha)
        slack = lemma5_check(lambda x: w(x) ** 2, t)
        if worst is None or slack < worst.slack:
            worst = Lemma5Sample(slack, d, h, alpha, t)
    return worst

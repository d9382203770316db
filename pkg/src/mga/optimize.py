"""Steiner-point placement for fixed topologies and the global MGA search.

For a fixed topology the flows, and hence the edge weights, are fixed, so
the cost sum_e w_e * ||x_u - x_v|| is convex in the Steiner coordinates.  It
is not differentiable where an edge has zero length, so we minimize a
smoothed version (see :meth:`NormSpace.smoothed`) with a damped Newton
method while shrinking the smoothing parameter geometrically.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    ENUMERATION_CAP,
    Embedding,
    Instance,
    Topology,
    TopologyError,
    enumerate_full_topologies,
)
from .weights import check_conditions

__all__ = [
    "OptimizeOptions",
    "optimize_embedding",
    "contract_degenerate_edges",
    "split_improvement_scan",
    "solve_mga",
    "SPLIT_DEGREE_CAP",
]

log = logging.getLogger(__name__)

SPLIT_DEGREE_CAP = 12
# Steiner edges shorter than this (relative to the diameter) may be snapped shut
SNAP_REACH = 1e-4
_ARMIJO = 1e-4
_MAX_BACKTRACK = 60


@dataclass(frozen=True)
class OptimizeOptions:
    """Solver settings.

    The smoothing parameters and both tolerances are relative to the
    instance diameter.
    """

    smoothing_eps_start: float = 1e-2
    smoothing_eps_end: float = 1e-10
    eps_decay: float = 0.25
    max_iters: int = 10_000
    position_tol: float = 1e-10
    contract_tol: float = 1e-7

    def __post_init__(self):
        vals = (
            self.smoothing_eps_start,
            self.smoothing_eps_end,
            self.eps_decay,
            self.max_iters,
            self.position_tol,
            self.contract_tol,
        )
        if min(vals) <= 0:
            raise ValueError("all optimizer options must be positive")
        if self.smoothing_eps_end >= self.smoothing_eps_start:
            raise ValueError("smoothing_eps_end must be below smoothing_eps_start")
        if not self.eps_decay < 1:
            raise ValueError("eps_decay must lie in (0, 1)")

    def schedule(self) -> list[float]:
        eps = [self.smoothing_eps_start]
        while eps[-1] > self.smoothing_eps_end:
            eps.append(max(eps[-1] * self.eps_decay, self.smoothing_eps_end))
        return eps


class _Objective:
    """Smoothed fixed-topology cost as a function of the Steiner coordinates."""

    def __init__(self, inst: Instance, top: Topology):
        self.space = inst.space
        self.d = inst.dim
        self.s = top.n_steiner
        nt = inst.n + 1
        emb = Embedding(inst, top, np.zeros((top.n_steiner, inst.dim)))
        self.w = emb.weights
        edges = np.array(emb.edges, dtype=int).reshape(-1, 2)
        self.u, self.v = edges[:, 0], edges[:, 1]
        self.P = np.vstack([inst.terminals, np.zeros((self.s, self.d))])
        self.nt = nt
        # signed incidence of edges on Steiner variables
        B = np.zeros((len(edges), self.s))
        for k, (a, b) in enumerate(edges):
            if a >= nt:
                B[k, a - nt] += 1
            if b >= nt:
                B[k, b - nt] -= 1
        self.B = B
        self.BB = B[:, :, None] * B[:, None, :]

    def _diffs(self, x: np.ndarray) -> np.ndarray:
        self.P[self.nt :] = x.reshape(self.s, self.d)
        return self.P[self.u] - self.P[self.v]

    def value(self, x: np.ndarray, eps: float) -> float:
        F, _, _ = self.space.smoothed(self._diffs(x), eps, derivatives=False)
        return float(self.w @ F)

    def full(self, x: np.ndarray, eps: float):
        F, g, H = self.space.smoothed(self._diffs(x), eps)
        grad = self.B.T @ (self.w[:, None] * g)
        hess = np.einsum("kab,kij->aibj", self.BB, self.w[:, None, None] * H)
        m = self.s * self.d
        return float(self.w @ F), grad.reshape(m), hess.reshape(m, m)


def _initial_positions(inst: Instance, top: Topology) -> np.ndarray:
    # centroid of the sources below each Steiner point together with the sink
    T = inst.terminals
    pos = []
    for v in top.steiner_vertices:
        members = sorted(top.subtree_sources[v]) + [inst.n]
        pos.append(T[members].mean(axis=0))
    return np.array(pos).reshape(top.n_steiner, inst.dim)


def _newton_stage(obj: _Objective, x, eps, step_tol, budget, history):
    """Damped Newton on one smoothing level.  Returns (x, iterations, done)."""
    f, g, H = obj.full(x, eps)
    it = 0
    while it < budget:
        it += 1
        m = len(x)
        reg = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(H)))))
        try:
            dx = -np.linalg.solve(H + reg * np.eye(m), g)
        except np.linalg.LinAlgError:
            dx = -g
        slope = float(g @ dx)
        if not slope < 0:
            dx, slope = -g, -float(g @ g)
        if slope == 0:
            return x, it, True
        t = 1.0
        for _ in range(_MAX_BACKTRACK):
            f_new = obj.value(x + t * dx, eps)
            if f_new <= f + _ARMIJO * t * slope:
                break
            t *= 0.5
        else:
            return x, it, True
        x = x + t * dx
        history.append(f_new)
        if t * np.max(np.abs(dx)) <= step_tol:
            return x, it, True
        f, g, H = obj.full(x, eps)
    return x, it, False


def optimize_embedding(
    inst: Instance,
    top: Topology,
    opts: OptimizeOptions | None = None,
    init: np.ndarray | None = None,
) -> Embedding:
    """Place the Steiner points of ``top`` to minimize network cost.

    The recorded ``history`` holds the smoothed objective after every
    accepted step; it is nonincreasing because each step satisfies an Armijo
    condition and shrinking the smoothing parameter can only lower the
    smoothed value.  ``converged`` is False when ``max_iters`` ran out before
    the final step fell below ``position_tol``.
    """
    opts = opts or OptimizeOptions()
    if top.n_sources != inst.n:
        raise TopologyError("topology does not match the instance")
    if top.n_steiner == 0:
        return Embedding(inst, top, np.zeros((0, inst.dim)))
    scale = inst.scale
    x = (_initial_positions(inst, top) if init is None else np.array(init, float)).reshape(-1)
    obj = _Objective(inst, top)
    history: list[float] = []
    budget = opts.max_iters
    schedule = opts.schedule()
    converged = False
    for k, eps in enumerate(schedule):
        x, used, done = _newton_stage(
            obj, x, eps * scale, opts.position_tol * scale, budget, history
        )
        budget -= used
        if not done:
            break
        converged = k == len(schedule) - 1
    if not converged:
        log.warning("optimizer hit the iteration cap for topology %s", top.parent)
    return Embedding(
        inst, top, x.reshape(top.n_steiner, inst.dim), converged=converged, history=tuple(history)
    )


def contract_degenerate_edges(emb: Embedding, tol: float) -> Embedding:
    """Merge the endpoints of every Steiner edge shorter than ``tol * diameter``.

    A Steiner point merged with a terminal disappears and the terminal takes
    over its edges.  Two merged Steiner points keep the downstream position.
    """
    inst = emb.instance
    top = emb.topology
    n = top.n_sources
    thresh = tol * inst.scale
    parent = list(top.parent)
    P = emb.positions.copy()
    alive = [True] * len(parent)
    space = inst.space

    def is_steiner(v):
        return v > n

    changed = True
    while changed:
        changed = False
        for v in range(len(parent)):
            p = parent[v]
            if not alive[v] or p < 0:
                continue
            if not (is_steiner(v) or is_steiner(p)):
                continue
            if space.norm(P[v] - P[p]) >= thresh:
                continue
            if is_steiner(v):
                # child Steiner point folds into its parent
                drop, keep = v, p
                for c in range(len(parent)):
                    if alive[c] and parent[c] == drop:
                        parent[c] = keep
            else:
                # terminal v absorbs its Steiner parent p
                drop, keep = p, v
                parent[v] = parent[p]
                for c in range(len(parent)):
                    if alive[c] and parent[c] == drop and c != v:
                        parent[c] = keep
            alive[drop] = False
            parent[drop] = -2
            changed = True
    if all(alive):
        return emb
    steiner = [v for v in range(n + 1, len(parent)) if alive[v]]
    relabel = {v: v for v in range(n + 1)}
    relabel.update({v: n + 1 + i for i, v in enumerate(steiner)})
    new_parent = [-1] * (n + 1 + len(steiner))
    for v, p in enumerate(parent):
        if alive[v] and p >= 0:
            new_parent[relabel[v]] = relabel[p]
    new_top = Topology(n, tuple(new_parent))
    return emb.replace(topology=new_top, steiner_positions=P[steiner])


def _snap_to_neighbours(emb: Embedding, reach: float = SNAP_REACH) -> Embedding:
    """Move Steiner points onto a nearby neighbour when that costs nothing.

    Near a kink where the pulls balance only to first order the optimizer
    stalls a little short of the neighbour; snapping lets contraction finish
    the job.  A move is kept when the cost rises by at most 1e-12 relative.
    """
    top = emb.topology
    thresh = reach * emb.instance.scale
    for v in top.steiner_vertices:
        P = emb.positions
        nbrs = [u for u, p in emb.edges if p == v] + [top.parent[v]]
        near = [u for u in nbrs if 0 < emb.instance.space.norm(P[u] - P[v]) < thresh]
        for u in sorted(near, key=lambda u: emb.instance.space.norm(P[u] - P[v])):
            pos = emb.steiner_positions.copy()
            pos[v - top.n_sources - 1] = P[u]
            cand = emb.replace(steiner_positions=pos)
            if cand.total_cost <= emb.total_cost * (1 + 1e-12):
                emb = cand
                break
    return emb


def _settle(inst, top, opts, init=None) -> Embedding:
    """Optimize, then contract and re-optimize until no edge degenerates."""
    emb = optimize_embedding(inst, top, opts, init)
    for _ in range(top.n_steiner + 1):
        c = contract_degenerate_edges(_snap_to_neighbours(emb), opts.contract_tol)
        if c is emb:
            break
        emb = optimize_embedding(inst, c.topology, opts, c.steiner_positions)
    return emb


def split_improvement_scan(
    emb: Embedding, inst: Instance, opts: OptimizeOptions | None = None
) -> Embedding | None:
    """Try every split of every Steiner point of degree >= 4.

    A split moves a subset I of the incoming neighbours (2 <= |I| <= in-degree
    - 1) onto a new Steiner point feeding the old one.  Returns the cheapest
    embedding that beats ``emb`` by more than 1e-9 relative, else None.
    """
    opts = opts or OptimizeOptions()
    top = emb.topology
    best = None
    best_cost = emb.total_cost * (1 - 1e-9)
    for v in top.steiner_vertices:
        if top.degrees[v] < 4:
            continue
        if top.degrees[v] > SPLIT_DEGREE_CAP:
            raise TopologyError(f"Steiner degree {top.degrees[v]} exceeds split cap")
        kids = top.children[v]
        new = top.n_vertices
        for size in range(2, len(kids)):
            for subset in itertools.combinations(kids, size):
                parent = list(top.parent) + [v]
                for c in subset:
                    parent[c] = new
                cand_top = Topology(top.n_sources, tuple(parent))
                P = emb.positions
                start = np.vstack(
                    [emb.steiner_positions, 0.9 * P[v] + 0.1 * P[list(subset)].mean(axis=0)]
                )
                cand = _settle(inst, cand_top, opts, start)
                if cand.total_cost < best_cost:
                    best, best_cost = cand, cand.total_cost
    return best


def solve_mga(inst: Instance, opts: OptimizeOptions | None = None, cap: int = ENUMERATION_CAP):
    """Minimum Gilbert arborescence by exhaustive search over full topologies.

    Returns ``(embedding, certificate)``.
    """
    from .certify import certify_embedding

    opts = opts or OptimizeOptions()
    if inst.n > cap:
        raise TopologyError(f"n={inst.n} exceeds the enumeration cap {cap}")
    notes = []
    grid = np.arange(0, 4 * (np.ceil(inst.total_tonnage) + 2) + 1) / 4
    if not check_conditions(inst.weight, grid).all:
        msg = "weight not concave: arborescence may not be globally optimal"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    settled = [_settle(inst, top, opts) for top in enumerate_full_topologies(inst.n, cap)]
    best = min(settled, key=_rank)
    # any split of any candidate is a degenerate configuration of some full
    # topology, so only the winner needs the split scan
    while True:
        better = split_improvement_scan(best, inst, opts)
        if better is None:
            break
        best = better
    cert = certify_embedding(best, inst, notes=notes)
    return best, cert


def _rank(emb: Embedding):
    # costs equal to ~12 digits tie; the smaller topology key wins
    return (float(f"{emb.total_cost:.12g}"), emb.topology.key)

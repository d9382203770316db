"""JSON instance and solution files.

Floats are written with ``repr`` precision (shortest round-trip form), so
reading a file back reproduces every number bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .certify import Certificate
from .model import Embedding, Instance, ModelError, Topology, derive_flows
from .norms import NormError, NormSpace
from .weights import WeightError, WeightFunction

__all__ = [
    "InputError",
    "parse_instance",
    "instance_to_dict",
    "load_instance",
    "dump_instance",
    "solution_to_dict",
    "parse_solution",
    "load_json",
    "vertex_id",
]

_WEIGHT_KEYS = {
    "constant": {"d"},
    "affine": {"d", "h"},
    "power": {"d", "h", "alpha"},
    "rounded_affine": {"a", "b", "c"},
}


class InputError(ValueError):
    """Malformed instance or solution file."""


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise InputError(f"missing key {where}{key!r}")
    return doc[key]


def _reject_unknown(doc: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise InputError(f"unknown key {where}{extra[0]!r}")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where} must be a number")
    return float(x)


def _point(x, dim: int, where: str) -> list[float]:
    if not isinstance(x, list) or len(x) != dim:
        raise InputError(f"{where} must be a list of {dim} numbers")
    return [_number(v, where) for v in x]


def parse_instance(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InputError("instance must be a JSON object")
    _reject_unknown(doc, {"dim", "norm", "weight", "sources", "sink"}, "")
    dim = _require(doc, "dim", "")
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise InputError("'dim' must be an integer")

    nd = _require(doc, "norm", "")
    if not isinstance(nd, dict):
        raise InputError("'norm' must be an object")
    _reject_unknown(nd, {"kind", "p"}, "norm.")
    kind = _require(nd, "kind", "norm.")
    try:
        if kind == "euclidean":
            space = NormSpace("euclidean", dim)
        elif kind == "p":
            space = NormSpace("p", dim, _number(_require(nd, "p", "norm."), "norm.p"))
        else:
            raise InputError(f"norm.kind must be 'euclidean' or 'p', got {kind!r}")
    except NormError as exc:
        raise InputError(f"norm: {exc}") from exc

    wd = _require(doc, "weight", "")
    if not isinstance(wd, dict):
        raise InputError("'weight' must be an object")
    wkind = _require(wd, "kind", "weight.")
    if wkind not in _WEIGHT_KEYS:
        raise InputError(f"weight.kind {wkind!r} is not one of {sorted(_WEIGHT_KEYS)}")
    _reject_unknown(wd, {"kind"} | _WEIGHT_KEYS[wkind], "weight.")
    params = {k: _number(_require(wd, k, "weight."), f"weight.{k}") for k in _WEIGHT_KEYS[wkind]}
    try:
        weight = WeightFunction(wkind, **params)
    except WeightError as exc:
        raise InputError(f"weight: {exc}") from exc

    srcs = _require(doc, "sources", "")
    if not isinstance(srcs, list) or not srcs:
        raise InputError("'sources' must be a nonempty list")
    pts, tons = [], []
    for i, s in enumerate(srcs):
        where = f"sources[{i}]."
        if not isinstance(s, dict):
            raise InputError(f"sources[{i}] must be an object")
        _reject_unknown(s, {"point", "tonnage"}, where)
        pts.append(_point(_require(s, "point", where), dim, where + "point"))
        t = _number(_require(s, "tonnage", where), where + "tonnage")
        if not t > 0:
            raise InputError(f"{where}tonnage must be positive")
        tons.append(t)
    sink = _point(_require(doc, "sink", ""), dim, "sink")
    try:
        return Instance(pts, tons, sink, space, weight)
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def instance_to_dict(inst: Instance) -> dict:
    sp = inst.space
    norm = {"kind": "euclidean"} if sp.kind == "euclidean" else {"kind": "p", "p": sp.p}
    return {
        "dim": inst.dim,
        "norm": norm,
        "weight": inst.weight.to_dict(),
        "sources": [
            {"point": list(map(float, p)), "tonnage": float(t)}
            for p, t in zip(inst.sources, inst.tonnages)
        ],
        "sink": list(map(float, inst.sink)),
    }


def load_instance(path: str | Path) -> Instance:
    return parse_instance(load_json(path))


def dump_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def vertex_id(top: Topology, v: int) -> str:
    n = top.n_sources
    if v < n:
        return f"p{v + 1}"
    if v == n:
        return "q"
    return f"s{v - n}"


def solution_to_dict(emb: Embedding, cert: Certificate) -> dict:
    top = emb.topology
    P = emb.positions
    n = top.n_sources
    vertices = []
    for v in range(top.n_vertices):
        kind = "source" if v < n else "sink" if v == n else "steiner"
        vertices.append({"id": vertex_id(top, v), "kind": kind, "point": list(map(float, P[v]))})
    edges = [
        {
            "from": vertex_id(top, a),
            "to": vertex_id(top, b),
            "flow": float(f),
            "weight": float(w),
            "length": float(l),
        }
        for (a, b), f, w, l in zip(emb.edges, emb.flows, emb.weights, emb.lengths)
    ]
    return {
        "cost": emb.total_cost,
        "vertices": vertices,
        "edges": edges,
        "certificate": {
            "verdict": cert.summary(),
            "stars": [
                {
                    "vertex": vertex_id(top, s.vertex),
                    "balancing_residual": s.balancing_residual,
                    "min_collapsing_slack": s.min_collapsing_slack,
                }
                for s in cert.stars
            ],
            "notes": list(cert.notes),
        },
        "converged": bool(emb.converged),
    }


def parse_solution(doc: Any, inst: Instance) -> Embedding:
    """Rebuild an embedding from a solution document for ``inst``.

    Terminal coordinates and edge flows in the file must agree with the
    instance; the embedding itself always uses the instance's terminals.
    """
    if not isinstance(doc, dict):
        raise InputError("solution must be a JSON object")
    verts = _require(doc, "vertices", "")
    edges = _require(doc, "edges", "")
    if not isinstance(verts, list) or not isinstance(edges, list):
        raise InputError("'vertices' and 'edges' must be lists")
    n = inst.n
    index: dict[str, int] = {}
    steiner_pts = []
    for i, v in enumerate(verts):
        where = f"vertices[{i}]."
        if not isinstance(v, dict):
            raise InputError(f"vertices[{i}] must be an object")
        vid = _require(v, "id", where)
        kind = _require(v, "kind", where)
        pt = _point(_require(v, "point", where), inst.dim, where + "point")
        if vid in index:
            raise InputError(f"duplicate vertex id {vid!r}")
        if kind == "steiner":
            index[vid] = n + 1 + len(steiner_pts)
            steiner_pts.append(pt)
            continue
        if kind == "sink":
            if vid != "q":
                raise InputError(f"sink must have id 'q', got {vid!r}")
            j = n
        elif kind == "source":
            try:
                j = int(vid[1:]) - 1 if vid.startswith("p") else -1
            except ValueError:
                j = -1
            if not 0 <= j < n:
                raise InputError(f"source id {vid!r} does not match the instance")
        else:
            raise InputError(f"{where}kind must be source, sink or steiner")
        if not np.allclose(pt, inst.terminals[j], rtol=1e-12, atol=1e-12):
            raise InputError(f"vertex {vid!r} is not at the instance's coordinates")
        index[vid] = j
    missing = [vertex_id(Topology.direct(n), j) for j in range(n + 1) if j not in index.values()]
    if missing:
        raise InputError(f"solution lacks terminal {missing[0]!r}")
    V = n + 1 + len(steiner_pts)
    parent = [None] * V
    parent[n] = -1
    file_flows = {}
    for k, e in enumerate(edges):
        where = f"edges[{k}]."
        if not isinstance(e, dict):
            raise InputError(f"edges[{k}] must be an object")
        a, b = _require(e, "from", where), _require(e, "to", where)
        if a not in index or b not in index:
            raise InputError(f"edge {a!r}->{b!r} references an unknown vertex")
        ia, ib = index[a], index[b]
        if parent[ia] is not None:
            raise InputError(f"vertex {a!r} has more than one outgoing edge")
        parent[ia] = ib
        file_flows[(ia, ib)] = _number(_require(e, "flow", where), where + "flow")
    loose = [vid for vid, j in index.items() if parent[j] is None]
    if loose:
        raise InputError(f"vertex {loose[0]!r} has no outgoing edge")
    try:
        top = Topology(n, tuple(parent))
    except ModelError as exc:
        raise InputError(f"edges do not form an arborescence: {exc}") from exc
    flows = derive_flows(top, inst.tonnages)
    for e, f in flows.items():
        if abs(file_flows[e] - f) > 1e-9 * max(1.0, f):
            raise InputError(
                f"edge {vertex_id(top, e[0])!r}->{vertex_id(top, e[1])!r} carries "
                f"{file_flows[e]} but the instance implies {f}"
            )
    pos = np.array(steiner_pts, float).reshape(len(steiner_pts), inst.dim)
    return Embedding(inst, top, pos, converged=bool(doc.get("converged", True)))

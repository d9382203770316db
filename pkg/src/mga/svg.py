"""Plain SVG drawings of planar solutions."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["render_solution", "SvgError"]

MIN_STROKE, MAX_STROKE = 0.5, 6.0


class SvgError(ValueError):
    pass


def _field(doc, key, where=""):
    if not isinstance(doc, dict) or key not in doc:
        raise SvgError(f"solution is missing field {where}{key!r}")
    return doc[key]


def render_solution(doc: dict, size: int = 600, margin: int = 40) -> str:
    """SVG for a solution document: circles for terminals, squares for
    Steiner points, stroke width growing with edge weight."""
    verts = _field(doc, "vertices")
    edges = _field(doc, "edges")
    cost = _field(doc, "cost")
    pts = {}
    kinds = {}
    for i, v in enumerate(verts):
        vid = _field(v, "id", f"vertices[{i}].")
        pt = _field(v, "point", f"vertices[{i}].")
        if len(pt) != 2:
            raise SvgError(f"SVG output needs planar points; vertex {vid!r} has dimension {len(pt)}")
        pts[vid] = np.array(pt, float)
        kinds[vid] = _field(v, "kind", f"vertices[{i}].")
    P = np.array(list(pts.values()))
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    k = (size - 2 * margin) / span

    def xy(p):
        # flip y so the picture reads like a plot
        return margin + (p[0] - lo[0]) * k, size - margin - (p[1] - lo[1]) * k

    weights = [float(_field(e, "weight", f"edges[{i}].")) for i, e in enumerate(edges)]
    wmin, wmax = (min(weights), max(weights)) if weights else (0.0, 0.0)

    def stroke(w):
        if wmax == wmin:
            return (MIN_STROKE + MAX_STROKE) / 2
        return MIN_STROKE + (MAX_STROKE - MIN_STROKE) * (w - wmin) / (wmax - wmin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30}" '
        f'viewBox="0 0 {size} {size + 30}">',
        f'<rect width="{size}" height="{size + 30}" fill="white"/>',
    ]
    for i, (e, w) in enumerate(zip(edges, weights)):
        a, b = _field(e, "from", f"edges[{i}]."), _field(e, "to", f"edges[{i}].")
        if a not in pts or b not in pts:
            raise SvgError(f"edge {a!r}->{b!r} references an unknown vertex")
        (x1, y1), (x2, y2) = xy(pts[a]), xy(pts[b])
        out.append(
            f'<line class="edge" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="#335" stroke-width="{stroke(w):.2f}" stroke-linecap="round">'
            f"<title>{escape(a)}-&gt;{escape(b)} flow {e.get('flow', '')}</title></line>"
        )
    for vid, p in pts.items():
        x, y = xy(p)
        if kinds[vid] == "steiner":
            out.append(
                f'<rect class="steiner" x="{x - 4:.2f}" y="{y - 4:.2f}" width="8" height="8" '
                f'fill="#c33"/>'
            )
        else:
            fill = "#fff" if kinds[vid] == "source" else "#333"
            out.append(
                f'<circle class="terminal" cx="{x:.2f}" cy="{y:.2f}" r="6" fill="{fill}" '
                f'stroke="#333" stroke-width="1.5"/>'
            )
            out.append(
                f'<text x="{x + 9:.2f}" y="{y - 9:.2f}" font-family="sans-serif" '
                f'font-size="14">{escape(vid)}</text>'
            )
    out.append(
        f'<text class="caption" x="{margin}" y="{size + 15}" font-family="sans-serif" '
        f'font-size="14">cost = {float(cost):.6f}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Command-line interface.

Exit codes: 0 certified, 1 input error, 2 solved but not certified (or not
converged).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .certify import CertifyError, certify_embedding, corollary3_check
from .files import InputError, load_instance, load_json, parse_solution, solution_to_dict, vertex_id
from .model import TopologyError, enumerate_full_topologies, full_topology_count
from .optimize import OptimizeOptions, solve_mga
from .special import (
    TRIANGLE_COST,
    degree4_construct,
    degree4_feasible,
    f_alpha,
    lemma5_search,
    melzak_two_source,
    paper_counterexample,
    triangle_instance,
)
from .svg import SvgError, render_solution
from .weights import power

EXIT_OK, EXIT_INPUT, EXIT_UNCERTIFIED = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    opts = OptimizeOptions(max_iters=args.max_iters)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        emb, _ = solve_mga(inst, opts)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cert = certify_embedding(emb, inst, tol=args.tol, notes=[str(w.message) for w in caught])
    doc = solution_to_dict(emb, cert)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    print(f"cost {emb.total_cost!r}  verdict {cert.summary()}", file=sys.stderr)
    return EXIT_OK if cert.certified and emb.converged else EXIT_UNCERTIFIED


def cmd_certify(args) -> int:
    inst = load_instance(args.instance)
    emb = parse_solution(load_json(args.solution), inst)
    top = emb.topology
    try:
        cert = certify_embedding(emb, inst, tol=args.tol)
    except CertifyError as exc:
        print(f"not certifiable: {exc}")
        return EXIT_UNCERTIFIED
    limit = cert.tolerance * cert.scale
    print(f"cost {emb.total_cost!r}; tolerance {limit:.3g} (= {cert.tolerance:g} * w(total))")
    for s in cert.stars:
        status = "ok" if s.passed else f"FAIL {s.failure}"
        print(
            f"{vertex_id(top, s.vertex):>4}  degree {s.degree}  "
            f"balancing_residual {s.balancing_residual:.3e}  "
            f"min_collapsing_slack {s.min_collapsing_slack:.3e}  {status}"
        )
        for subset, slack in s.collapsing_margins:
            if slack < -limit:
                names = ",".join(vertex_id(top, top.children[s.vertex][i]) for i in subset)
                print(f"      subset {{{names}}} slack {slack:.3e}")
    for t in cert.terminals:
        print(f"{vertex_id(top, t.vertex):>4}  terminal degree {t.degree}  imbalance {t.imbalance:.3e} (informational)")
    for note in cert.notes:
        print(f"note: {note}")
    if cert.certified:
        print("certified")
        return EXIT_OK
    print(f"violated: {cert.condition} at {vertex_id(top, cert.location)}")
    return EXIT_UNCERTIFIED


def _repro_counterexample() -> None:
    ce = paper_counterexample()
    print(f"split={ce.split_cost:.6f}, arborescence={ce.arborescence_cost:.9f}")
    print(f"  closed form sqrt(9982.5+7*sqrt(3890.25)) = {TRIANGLE_COST:.12f}")
    print(f"  split routing cheaper by {ce.arborescence_cost - ce.split_cost:.9f}")


def _repro_melzak() -> None:
    inst = triangle_instance()
    p1, p2 = inst.sources
    mz = melzak_two_source(p1, p2, inst.sink, 2.0, 4.0, inst.weight)
    a = mz.auxiliary_point
    print(f"|p-p1| = {np.linalg.norm(a - p1):.12f}  (0.7)")
    print(f"|p-p2| = {np.linalg.norm(a - p2):.12f}  (0.4)")
    print(f"s = {mz.steiner_point.tolist()}")
    print(f"w(6)|p-q| = {mz.total_cost:.12f}  (102.074...)")


def _repro_degree4() -> None:
    w, t = power(0.2, 1.0, 0.75), 1.0
    ok, slack = degree4_feasible(w, t)
    print(f"w(t) = 0.2 + t^0.75, t = 1: condition slack 3w(2)^2 - 3w(1)^2 - w(3)^2 = {slack:.9f}")
    c = degree4_construct(w, t)
    print(f"lambda = {c.lam:.12f}")
    for i, v in enumerate(c.vectors, 1):
        print(f"v{i} = {np.array2string(v, precision=9)}")
    res = corollary3_check(c.vectors, [t, t, t], w)
    print(f"vector conditions: {'pass' if res else 'fail ' + str(res.condition)}")
    cert = certify_embedding(c.embedding)
    s = cert.stars[0]
    print(
        f"star certificate: {cert.summary()} (residual {s.balancing_residual:.2e}, "
        f"min pair slack {min(m for I, m in s.collapsing_margins if len(I) == 2):.6f})"
    )


def _repro_falpha() -> None:
    print(f"f(0.5) = {f_alpha(0.5):.3e}   f(1) = {f_alpha(1.0):.3e}")
    for a in np.round(np.arange(0.55, 1.0, 0.05), 2):
        print(f"  f({a:.2f}) = {f_alpha(float(a)):+.6f}")


def _repro_lemma5() -> None:
    for alpha in (0.1, 0.3, 0.5, 1.0, 0.75):
        r = lemma5_search(alpha, 10_000, seed=0)
        tag = "hypothesis holds" if alpha <= 0.5 or alpha == 1 else "hypothesis fails"
        print(
            f"alpha={alpha:<4}  min slack {r.slack:+.3e}  ({tag}; d={r.d:.3f}, h={r.h:.3f}, m={len(r.tonnages)})"
        )


REPRO = {
    "counterexample": _repro_counterexample,
    "melzak": _repro_melzak,
    "degree4": _repro_degree4,
    "falpha": _repro_falpha,
    "lemma5": _repro_lemma5,
}


def cmd_repro(args) -> int:
    names = list(REPRO) if args.which == "all" else [args.which]
    for name in names:
        print(f"== {name}")
        REPRO[name]()
    return EXIT_OK


def cmd_svg(args) -> int:
    doc = load_json(args.solution)
    _emit(render_solution(doc), args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    tops = enumerate_full_topologies(args.n, cap=args.cap)
    print(len(tops))
    if args.list_all:
        for t in tops:
            print(" ".join(f"{a}->{b}" for a, b in t.key))
    if len(tops) != full_topology_count(args.n):
        return EXIT_UNCERTIFIED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mga", description="Minimum Gilbert arborescences")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("instance")
    p.add_argument("--out", help="write the solution here instead of stdout")
    p.add_argument("--tol", type=float, default=1e-8, help="relative certificate tolerance")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check a solution against its instance")
    p.add_argument("solution")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("repro", help="recompute the worked examples")
    p.add_argument("which", nargs="?", default="all", choices=["all", *REPRO])
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("svg", help="draw a planar solution")
    p.add_argument("solution")
    p.add_argument("--out")
    p.set_defaults(func=cmd_svg)

    p = sub.add_parser("enumerate", help="count full topologies for n sources")
    p.add_argument("n", type=int)
    p.add_argument("--cap", type=int, default=7)
    p.add_argument("--list", dest="list_all", action="store_true", help="print each topology")
    p.set_defaults(func=cmd_enumerate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        return args.func(args)
    except (InputError, TopologyError, SvgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

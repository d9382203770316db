import math

import numpy as np
import pytest
from conftest import random_instance

from mga import (
    Embedding,
    Instance,
    StarData,
    Topology,
    affine,
    balancing_residual,
    certify_embedding,
    collapsing_margins,
    corollary3_check,
    degree4_construct,
    euclidean,
    melzak_two_source,
    optimize_embedding,
    p_norm,
    power,
    solve_mga,
)
from mga.certify import SUBSET_DEGREE_CAP, CertifyError, certify_star, star_at
from mga.special import triangle_instance


def triangle_optimum():
    inst = triangle_instance()
    p1, p2 = inst.sources
    mz = melzak_two_source(p1, p2, inst.sink, 2, 4, inst.weight)
    return inst, Embedding(inst, Topology.star(2), mz.steiner_point[None, :])


def test_collinear_single_inflow_balances():
    for w in (affine(1, 2), power(0.3, 1, 0.5)):
        star = StarData.from_arrays([0, 0], [[-2, 0]], [3], [5, 0], euclidean(), w)
        assert balancing_residual(star) == pytest.approx(0, abs=1e-15)


def test_triangle_optimum_balances():
    inst, emb = triangle_optimum()
    star = star_at(emb, 3)
    assert balancing_residual(star) <= 1e-8 * inst.weight(6)
    cert = certify_embedding(emb)
    assert cert.certified and cert.summary() == "certified"


def test_displaced_center_is_unbalanced():
    inst, emb = triangle_optimum()
    s = emb.steiner_positions[0]
    d = s - inst.sources[0]
    star = star_at(emb, 3)
    moved = StarData.from_arrays(s + 0.1 * d / np.linalg.norm(d), star.in_points, star.in_flows, star.out_point, star.space, star.weight)
    assert balancing_residual(moved) > 1e-3


def test_centroid_fails_balancing():
    inst, _ = triangle_optimum()
    emb = Embedding(inst, Topology.star(2), inst.terminals.mean(axis=0)[None, :])
    cert = certify_embedding(emb)
    assert cert.verdict == "violated"
    assert cert.condition == "balancing" and cert.location == 3
    assert cert.summary() == "violated(balancing, vertex 3)"


def test_singleton_slack_is_zero(rng):
    for p in (1.5, 2.0, 3.0, 7.0):
        sp = p_norm(p)
        for _ in range(20):
            star = StarData.from_arrays(
                rng.normal(size=2), rng.normal(size=(4, 2)), rng.uniform(0.5, 3, 4), rng.normal(size=2), sp, affine(1, 1)
            )
            margins = dict(collapsing_margins(star))
            for i in range(4):
                assert margins[(i,)] == 0.0
                # independent recomputation of the same quantity
                v = star.weighted_in_duals()[i]
                assert abs(sp.dual_norm(v) - star.weight(star.in_flows[i])) <= 1e-12 * star.weight(star.in_flows[i])


def test_full_set_slack_tracks_residual(rng):
    for _ in range(10):
        inst = random_instance(rng, 3, p=3.0)
        emb = optimize_embedding(inst, Topology.star(3))
        if min(emb.lengths) < 1e-6 * inst.scale:
            continue
        star = star_at(emb, 4)
        res = balancing_residual(star)
        full = dict(collapsing_margins(star))[(0, 1, 2)]
        assert abs(full) <= res + 1e-12 * star.weight(star.out_flow)


def test_every_nonempty_subset_reported():
    _, emb = triangle_optimum()
    subsets = [I for I, _ in collapsing_margins(star_at(emb, 3))]
    assert sorted(subsets) == [(0,), (0, 1), (1,)]


def test_near_parallel_pair_violates_collapsing():
    # two sources almost on top of each other: their pull is nearly doubled
    w = affine(1, 1)
    star = StarData.from_arrays(
        [0, 0], [[-1, -1], [-1, -1.01], [1, -1]], [1, 1, 1], [0, 1], euclidean(), w
    )
    margins = dict(collapsing_margins(star))
    assert margins[(0, 1)] < -0.5
    rep = certify_star(star)
    assert not rep.passed


def test_degree4_construction_pairs_have_slack():
    c = degree4_construct(power(0.2, 1, 0.75), 1.0)
    margins = collapsing_margins(star_at(c.embedding, 4))
    assert all(s >= 0 for I, s in margins if len(I) == 2)


def test_star_validation():
    with pytest.raises(CertifyError):
        StarData.from_arrays([0, 0], [[0, 0]], [1], [1, 0], euclidean(), affine(1, 1))
    with pytest.raises(CertifyError):
        StarData([0, 0], [[1, 0]], [1], [0, 1], 5.0, euclidean(), affine(1, 1))
    pts = np.column_stack([np.cos(np.arange(12)), np.sin(np.arange(12))])
    big = StarData.from_arrays([0, 0], pts, np.ones(12), [0, 2], euclidean(), affine(1, 1))
    assert big.degree == 13 > SUBSET_DEGREE_CAP
    with pytest.raises(CertifyError):
        collapsing_margins(big)


def test_zero_length_steiner_edge_refused():
    inst, _ = triangle_optimum()
    emb = Embedding(inst, Topology.star(2), inst.sources[:1])
    with pytest.raises(CertifyError):
        certify_embedding(emb)


def test_mismatched_instance_refused(rng):
    a = random_instance(rng, 2)
    b = random_instance(rng, 2)
    emb = optimize_embedding(a, Topology.star(2))
    with pytest.raises(CertifyError):
        certify_embedding(emb, b)


def test_terminal_reports_are_informational():
    inst, _ = triangle_optimum()
    # p2 routed through p1: no Steiner points, p1 has degree 2
    emb = Embedding(inst, Topology(2, (2, 0, -1)), np.zeros((0, 2)))
    cert = certify_embedding(emb)
    assert cert.certified
    assert [t.vertex for t in cert.terminals] == [0]
    assert cert.terminals[0].imbalance > 0
    assert any("no Steiner" in n for n in cert.notes)


def test_multi_steiner_note(rng):
    inst = random_instance(rng, 3)
    emb, cert = solve_mga(inst)
    if emb.topology.n_steiner > 1:
        assert any("exhaustive" in n for n in cert.notes)


def _affine_degree4_star(rng):
    """Optimized single junction for three sources on a random shallow arc."""
    ang = np.sort(rng.uniform(-0.6, 0.6, 3))
    r = rng.uniform(0.8, 1.2, 3)
    src = np.column_stack([r * np.sin(ang), -r * np.cos(ang)])
    sink = [rng.uniform(-1, 1), rng.uniform(5, 15)]
    p = float(rng.choice([2.0, 3.0]))
    sp = euclidean() if p == 2 else p_norm(p)
    inst = Instance(src, rng.uniform(0.5, 2, 3), sink, sp, affine(rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)))
    return optimize_embedding(inst, Topology.star(3))


def test_affine_degree4_stars_never_certify(rng):
    checked = 0
    while checked < 100:
        emb = _affine_degree4_star(rng)
        if min(emb.lengths) < 1e-6 * emb.instance.scale:
            # the junction slid onto a terminal; not a degree-4 Steiner point
            continue
        cert = certify_embedding(emb)
        assert cert.verdict == "violated"
        assert cert.condition == "collapsing"
        checked += 1


# -- the Euclidean vector conditions ------------------------------------------


def test_vector_conditions_degree4_pass():
    w = power(0.2, 1, 0.75)
    c = degree4_construct(w, 1.0)
    assert corollary3_check(c.vectors, [1, 1, 1], w)


def test_vector_conditions_two_vectors_pass():
    w = affine(1, 1)
    # |v1| = 2, |v2| = 3, |v1 + v2| = w(3) = 4
    cos = (16 - 4 - 9) / 12
    v1 = [2, 0]
    v2 = [3 * cos, 3 * math.sqrt(1 - cos**2)]
    assert corollary3_check([v1, v2], [1, 2], w)


def test_vector_conditions_equal_vectors_fail_on_sum():
    w = affine(1, 2)
    v = [w(1), 0, 0]
    res = corollary3_check([v, v, v], [1, 1, 1], w)
    assert not res
    assert res.condition == "sum"


def test_vector_conditions_wrong_length():
    w = affine(1, 1)
    res = corollary3_check([[1, 0], [0, 2]], [1, 1], w)
    assert not res and res.condition == "norm"


def test_vector_conditions_imply_certification(rng):
    w = power(0.2, 1, 0.75)
    done = 0
    while done < 20:
        t = rng.uniform(0.2, 3)
        try:
            c = degree4_construct(w, t)
        except ValueError:
            continue
        assert corollary3_check(c.vectors, [t] * 3, w)
        # rescale each neighbour along its own direction
        u = c.vectors / np.linalg.norm(c.vectors, axis=1, keepdims=True)
        src = u * rng.uniform(0.3, 3, (3, 1))
        sink = c.instance.sink * rng.uniform(0.3, 3)
        inst = Instance(src, [t] * 3, sink, euclidean(3), w)
        cert = certify_embedding(Embedding(inst, Topology.star(3), np.zeros((1, 3))))
        assert cert.certified
        done += 1

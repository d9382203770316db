import numpy as np
import pytest

from mga import Instance, affine, constant, euclidean, p_norm, power


def make_space(p: float, dim: int = 2):
    return euclidean(dim) if p == 2 else p_norm(p, dim)


def random_weight(rng, kind: str):
    if kind == "affine":
        return affine(rng.uniform(0.2, 1.5), rng.uniform(0.0, 1.5))
    if kind == "power":
        return power(rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5), 0.5)
    if kind == "constant":
        return constant(rng.uniform(0.5, 2.0))
    raise ValueError(kind)


def random_instance(rng, n: int, p: float = 2.0, kind: str = "affine", dim: int = 2) -> Instance:
    return Instance(
        rng.uniform(0, 1, (n, dim)),
        rng.uniform(0.5, 3.0, n),
        rng.uniform(0, 1, dim),
        make_space(p, dim),
        random_weight(rng, kind),
    )


def grid_star_cost(inst: Instance, resolution: int = 2000, refine: int = 2) -> tuple[float, np.ndarray]:
    """Brute-force minimum over a single Steiner point joining every source
    to the sink, on a planar grid spanning the terminals' bounding box."""
    T = inst.terminals
    lo, hi = T.min(axis=0), T.max(axis=0)
    step = (hi - lo).max() / resolution
    w_in = inst.weight(inst.tonnages)
    w_out = inst.weight(inst.total_tonnage)
    sp = inst.space
    best = (np.inf, None)
    center, half = (lo + hi) / 2, (hi - lo).max() / 2 + step
    for _ in range(refine + 1):
        xs = np.arange(center[0] - half, center[0] + half + step / 2, step)
        ys = np.arange(center[1] - half, center[1] + half + step / 2, step)
        X, Y = np.meshgrid(xs, ys)
        G = np.stack([X.ravel(), Y.ravel()], axis=1)
        cost = w_out * sp.norm(G - inst.sink)
        for s, w in zip(inst.sources, np.atleast_1d(w_in)):
            cost = cost + w * sp.norm(G - s)
        k = int(np.argmin(cost))
        if cost[k] < best[0]:
            best = (float(cost[k]), G[k])
        center, half, step = best[1], 4 * step, step / 50
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, taken from the real test outcomes
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when == "call":
                rows.append((props["criterion"], outcome, props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, outcome, detail in sorted(rows):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status}  {detail}")

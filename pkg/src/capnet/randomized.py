"""Seeded random test objects: networks, admissible potentials, loop-free
unit flows and path measures.

Every generator takes a ``numpy.random.Generator`` (or anything accepted by
``numpy.random.PCG64``) so property suites are reproducible from one seed.
"""

from __future__ import annotations

import numpy as np
from graphlib import TopologicalSorter

from . import _rng
from .dirichlet import Potential, _partition, solve_harmonic
from .flow import PathMeasure, UnitFlow
from .network import Network, PartitionPair

__all__ = [
    "random_admissible_potential",
    "random_loop_free_flow",
    "random_network",
    "random_path_measure",
]


def random_network(
    rng,
    n_states: int | None = None,
    extra_edges: int | None = None,
    k_range=(0.1, 2.0),
    mu_range=(0.5, 2.0),
) -> Network:
    """Connected network on ``n_states`` states with one A and one B state.

    A random spanning tree plus ``extra_edges`` random chords; ``K`` and
    ``mu`` are uniform on the given ranges.  States are ``s0, s1, ...``; A is
    ``{s0}`` and B is a random other state.  Larger sets are sometimes drawn
    (one more state into A or B) when there are enough states.
    """
    rng = _rng.as_generator(rng)
    n = int(rng.integers(3, 13)) if n_states is None else int(n_states)
    if n < 2:
        raise ValueError("need at least 2 states")
    states = [f"s{i}" for i in range(n)]
    pairs = set()
    order = rng.permutation(n)
    for i in range(1, n):
        j = int(rng.integers(0, i))
        pairs.add(tuple(sorted((int(order[i]), int(order[j])))))
    max_extra = n * (n - 1) // 2 - len(pairs)
    m = int(rng.integers(0, min(n, max_extra) + 1)) if extra_edges is None else min(extra_edges, max_extra)
    while m > 0:
        i, j = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
        if (i, j) not in pairs:
            pairs.add((i, j))
            m -= 1
    edges = [(states[i], states[j], rng.uniform(*k_range)) for i, j in sorted(pairs)]
    mu = rng.uniform(*mu_range, size=n)
    others = [int(v) for v in rng.permutation(np.arange(1, n))]
    A = {states[0]}
    B = {states[others.pop()]}
    if n >= 6 and rng.random() < 0.3:
        A.add(states[others.pop()])
    if n >= 6 and rng.random() < 0.3:
        B.add(states[others.pop()])
    return Network.from_edges(states, edges, mu=mu, ab=PartitionPair(frozenset(A), frozenset(B)))


def random_admissible_potential(net: Network, rng, ab: PartitionPair | None = None) -> Potential:
    """Uniform values in [0, 1] off ``A u B``, pinned to 1 on A and 0 on B."""
    ab = _partition(net, ab)
    rng = _rng.as_generator(rng)
    v = rng.random(net.n)
    v[net.indices(ab.A)] = 1.0
    v[net.indices(ab.B)] = 0.0
    return Potential(net.states, v)


def random_loop_free_flow(net: Network, rng, ab: PartitionPair | None = None, attempts: int = 10) -> UnitFlow:
    """A random loop-free unit flow supported on edges with ``K > 0``.

    States are ranked by a random mix of ``h_AB`` and uniform noise (A on top,
    B at the bottom), edges are oriented downhill, and a random kernel on the
    states that can still reach B is pushed forward from a random initial law
    on A.  The last attempt uses the harmonic ranking alone.
    """
    ab = _partition(net, ab)
    rng = _rng.as_generator(rng)
    h = solve_harmonic(net, ab).values
    for attempt in range(attempts):
        t = 0.0 if attempt == attempts - 1 else rng.random()
        flow = _try_flow(net, ab, h, t, rng)
        if flow is not None:
            return flow
    raise RuntimeError("could not build a loop-free unit flow")


def _try_flow(net: Network, ab: PartitionPair, h: np.ndarray, t: float, rng) -> UnitFlow | None:
    S = net.states
    v = (1.0 - t) * h + t * rng.random(net.n)
    in_a = np.zeros(net.n, dtype=bool)
    in_a[net.indices(ab.A)] = True
    in_b = np.zeros(net.n, dtype=bool)
    in_b[net.indices(ab.B)] = True
    v[in_a] = 2.0
    v[in_b] = -1.0
    # lexicographic rank: value, then a random tie-break
    order = np.lexsort((rng.random(net.n), v))
    rank = np.empty(net.n, dtype=int)
    rank[order] = np.arange(net.n)

    c = net.cond.tocoo()
    succ: dict = {i: [] for i in range(net.n)}
    for i, j, k in zip(c.row, c.col, c.data):
        if k > 0 and rank[i] > rank[j] and not in_b[i] and not in_a[j]:
            succ[int(i)].append((int(j), float(k), float(v[i] - v[j])))

    # states that can reach B along downhill edges
    good = in_b.copy()
    for i in order:
        if not in_b[i] and any(good[j] for j, _, _ in succ[i]):
            good[i] = True
    starts = [i for i in np.flatnonzero(in_a) if good[i]]
    if not starts:
        return None

    kernel = {}
    for i in range(net.n):
        row = [(j, k * (max(d, 0.0) + 1e-3) * rng.uniform(0.5, 1.5)) for j, k, d in succ[i] if good[j]]
        if row and good[i] and not in_b[i]:
            total = sum(w for _, w in row)
            kernel[i] = [(j, w / total) for j, w in row]
    w0 = rng.uniform(0.5, 1.5, size=len(starts))
    nu = np.zeros(net.n)
    nu[starts] = w0 / w0.sum()

    graph = {i: {j for j, _ in kernel.get(i, [])} for i in range(net.n)}
    # TopologicalSorter wants predecessors; reverse the order it yields
    topo = list(TopologicalSorter(graph).static_order())[::-1]
    edges = {}
    for i in topo:
        if nu[i] <= 0 or i not in kernel:
            continue
        for j, p in kernel[i]:
            mass = nu[i] * p
            edges[(S[i], S[j])] = mass
            nu[j] += mass
    return UnitFlow(edges)


def random_path_measure(
    net: Network,
    rng,
    ab: PartitionPair | None = None,
    n_paths: int = 4,
    max_len: int = 200,
) -> PathMeasure:
    """Up to ``n_paths`` distinct random-walk paths from A to B with Dirichlet(1) weights.

    Each path follows the jump chain from a random A state, restarting at the
    latest A state whenever it returns to A, and stops on entering B.  Paths
    may revisit interior states.
    """
    ab = _partition(net, ab)
    rng = _rng.as_generator(rng)
    A = sorted(ab.A, key=net.index)
    paths = []
    for _ in range(20 * n_paths):
        if len(paths) == n_paths:
            break
        p = _walk(net, ab, rng, A, max_len)
        if p is not None and p not in paths:
            paths.append(p)
    if not paths:
        raise RuntimeError("no random path reached B")
    w = rng.dirichlet(np.ones(len(paths)))
    w = w / w.sum()
    return PathMeasure(tuple(zip(paths, w)))


def _walk(net, ab, rng, A, max_len):
    cond = net.cond
    x = A[int(rng.integers(len(A)))]
    path = [x]
    for _ in range(max_len):
        i = net.index(x)
        lo, hi = cond.indptr[i], cond.indptr[i + 1]
        if hi == lo:
            return None
        w = cond.data[lo:hi]
        j = cond.indices[lo + int(rng.choice(hi - lo, p=w / w.sum()))]
        x = net.states[j]
        if x in ab.A:
            path = [x]
        else:
            path.append(x)
            if x in ab.B:
                return tuple(path)
    return None

"""Cross-principle consistency suite run by ``capnet verify``."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _rng
from .bounds import bk_flow_estimate, thomson_bound, verify_ordering
from .dirichlet import DEFAULT_TOL, _partition, capacity, dirichlet_energy, equilibrium_charges, solve_harmonic
from .errors import CapnetError
from .flow import harmonic_flow, induced_flow, validate_unit_flow
from .network import Network, PartitionPair, validate
from .randomized import random_admissible_potential, random_loop_free_flow
from .sim import estimate_hitting_prob
from .truncation import TruncationLadder, truncated_harmonic_flow, truncation_sweep

__all__ = ["CHECKS", "CheckResult", "automatic_ladder", "verify_suite"]

CHECKS = (
    "validate",
    "dirichlet-solve",
    "charge-identity",
    "harmonic-flow",
    "bk-attainment",
    "thomson-attainment",
    "random-potentials",
    "random-flows",
    "induced-flow",
    "truncation",
    "mc-hitting",
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None  # None means skipped
    residual: float = 0.0
    detail: str = ""

    def line(self) -> str:
        if self.passed is None:
            return f"SKIP {self.name} -"
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.residual:.12g}"


def automatic_ladder(net: Network, ab: PartitionPair) -> TruncationLadder:
    """Two levels: ``A u B`` plus the closer half of the interior (BFS from A), then everything."""
    dist = {x: 0 for x in sorted(ab.A, key=net.index)}
    queue = deque(dist)
    while queue:
        x = queue.popleft()
        for y, _ in net.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    interior = [x for x in net.states if x not in ab.boundary]
    interior.sort(key=lambda x: (dist.get(x, math.inf), net.index(x)))
    first = set(ab.boundary) | set(interior[: len(interior) // 2])
    return TruncationLadder((frozenset(first), frozenset(net.states)))


def verify_suite(
    net: Network,
    ab: PartitionPair | None = None,
    seed=0,
    tol: float = DEFAULT_TOL,
    n_potentials: int = 100,
    n_flows: int = 20,
    samples: int = 10_000,
    workers: int = 1,
) -> list:
    """Run every check in :data:`CHECKS` order and return their results.

    Random objects come from ``seed`` alone.  If validation fails the
    remaining checks are skipped.
    """
    results: list = []

    def add(name, passed, residual=0.0, detail=""):
        results.append(CheckResult(name, passed, float(residual), detail))

    def skip_rest():
        done = {r.name for r in results}
        results.extend(CheckResult(n, None) for n in CHECKS if n not in done)
        return results

    try:
        ab = _partition(net, ab)
    except ValueError as exc:
        add("validate", False, 1.0, str(exc))
        return skip_rest()
    report = validate(net, ab)
    if net.has_killing:
        add("validate", False, float(net.kill.max()), "killing present; verify needs a kill-free network")
        return skip_rest()
    if not report.ok:
        worst = max(v.magnitude for v in report.violations)
        add("validate", False, worst, "; ".join(str(v) for v in report.violations))
        return skip_rest()
    add("validate", True, 0.0)

    seeds = np.random.SeedSequence(seed).spawn(4)
    try:
        cap_rep = capacity(net, ab, tol)
        h = solve_harmonic(net, ab, tol)
    except CapnetError as exc:
        add("dirichlet-solve", False, math.inf, str(exc))
        return skip_rest()
    cap = cap_rep.value
    add("dirichlet-solve", cap_rep.residual <= tol, cap_rep.residual)
    scale = max(1.0, cap)

    q = equilibrium_charges(net, h, ab)
    res = max(abs(q.qa - cap), abs(q.qb + cap)) / cap if cap > 0 else math.inf
    add("charge-identity", res <= tol, res)

    if not cap > 0:
        add("harmonic-flow", False, math.inf, "zero capacity")
        return skip_rest()

    phi = harmonic_flow(net, h, cap)
    rep = validate_unit_flow(net, phi, ab, tol=tol, loop_free=True)
    worst = max((v.magnitude for v in rep.violations), default=0.0)
    add("harmonic-flow", rep.ok, worst)

    bk = bk_flow_estimate(net, phi, ab, mode="exact", seed=seeds[0], workers=workers)
    if bk.kind == "bk-exact":
        gap = abs(bk.value - cap)
        add("bk-attainment", gap <= tol * scale, gap)
    else:
        gap = abs(bk.value - cap)
        add("bk-attainment", gap <= 4 * bk.stderr + tol * scale, gap, bk.meta)
    th = thomson_bound(net, phi).value
    add("thomson-attainment", abs(th - cap) <= tol * scale, abs(th - cap))

    rng = _rng.as_generator(seeds[1])
    worst = math.inf
    for _ in range(n_potentials):
        worst = min(worst, dirichlet_energy(net, random_admissible_potential(net, rng, ab)) - cap)
    add("random-potentials", worst >= -tol * scale, max(0.0, -worst))

    rng = _rng.as_generator(seeds[2])
    worst = 0.0
    ok = True
    for _ in range(n_flows):
        f = random_loop_free_flow(net, rng, ab)
        frep = validate_unit_flow(net, f, ab, tol=tol, loop_free=True)
        order = verify_ordering(net, f, ab, tol)
        ok = ok and frep.ok and order.ok
        worst = max(worst, -min(order.gaps), *(v.magnitude for v in frep.violations))
    add("random-flows", ok, max(0.0, worst))

    try:
        d = induced_flow(phi, ab, tol)
        kr = max((abs(r) for r in d.kirchhoff_residuals().values()), default=0.0)
        res = max(d.max_abs_psi(), kr)
        add("induced-flow", res <= tol * scale, res)
    except CapnetError as exc:
        add("induced-flow", False, math.inf, str(exc))

    ladder = automatic_ladder(net, ab)
    levels = truncation_sweep(net, ladder, ab, tol)
    caps = [lv.cap for lv in levels]
    res = max(0.0, caps[0] - caps[1]) + abs(caps[-1] - cap)
    if caps[0] > 0:
        cap1, f1 = truncated_harmonic_flow(net, ladder.subsets[0], ab)
        res += abs(bk_flow_estimate(net, f1, ab, mode="exact").value - cap1)
    add("truncation", res <= tol * scale, res)

    interior = [x for x in net.states if x not in ab.boundary and net.rates[net.index(x)] > 0]
    worst = 0.0
    ok = True
    for x, ss in zip(interior, seeds[3].spawn(len(interior))):
        est = estimate_hitting_prob(net, x, ab, samples=samples, seed=ss, workers=workers, chain_only=True)
        target = h[x]
        se = max(est.stderr, math.sqrt(target * (1.0 - target) / est.samples))
        err = abs(est.value - target)
        ok = ok and err <= 4 * se + 1e-12
        worst = max(worst, err / se if se > 0 else (0.0 if err == 0 else math.inf))
    add("mc-hitting", ok, worst)
    return results

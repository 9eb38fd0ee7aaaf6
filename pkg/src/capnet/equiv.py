"""Electric-network reading of the variational principles.

Series and parallel reduction, the voltage/current solution at unit voltage,
and the equivalent network of parallel resistor chains built from a path
measure: each path ``gamma`` becomes its own series chain with resistances

    R^gamma(x, y) = R(x, y) * Phi_P(x, y) / P(gamma),

and the chains are wired in parallel between A and B.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .dirichlet import Potential, _partition, solve_harmonic
from .errors import AbsoluteContinuityError
from .flow import ROUNDOFF, PathMeasure, StoppedPath, path_measure_to_flow
from .network import Network, PartitionPair

__all__ = [
    "Chain",
    "ElectricSolution",
    "EquivalentNetwork",
    "build_equivalent_network",
    "emit_network",
    "parallel_reduce",
    "power_and_effective_resistance",
    "series_reduce",
]


def series_reduce(resistances) -> float:
    """Conductance of resistors in series: ``1 / sum(R)``."""
    rs = [float(r) for r in resistances]
    if not rs:
        raise ValueError("empty series")
    if any(not r > 0 for r in rs):
        raise ValueError("series resistances must be > 0")
    return 1.0 / math.fsum(rs)


def parallel_reduce(conductances) -> float:
    """Conductance of conductors in parallel: ``sum(K)``."""
    ks = [float(k) for k in conductances]
    if not ks:
        raise ValueError("empty parallel group")
    if any(k < 0 for k in ks):
        raise ValueError("parallel conductances must be >= 0")
    return math.fsum(ks)


@dataclass(frozen=True)
class Chain:
    path: StoppedPath
    prob: float
    resistances: tuple
    conductance: float


@dataclass(frozen=True)
class EquivalentNetwork:
    chains: tuple
    total: float


def build_equivalent_network(net: Network, pm: PathMeasure, ab: PartitionPair | None = None) -> EquivalentNetwork:
    """One series chain per path of ``pm``, all in parallel."""
    ab = _partition(net, ab)
    flow = path_measure_to_flow(pm, ab)
    chains = []
    for path, q in pm:
        rs = []
        for x, y in path.edges():
            k = net.conductance(x, y)
            if k <= 0:
                raise AbsoluteContinuityError(f"path {path.states} uses ({x!r}, {y!r}) where K = 0")
            rs.append(flow[(x, y)] / (k * q))
        chains.append(Chain(path, q, tuple(rs), series_reduce(rs)))
    return EquivalentNetwork(tuple(chains), parallel_reduce(c.conductance for c in chains))


def emit_network(eq: EquivalentNetwork, net: Network, ab: PartitionPair | None = None) -> Network:
    """The equivalent network as a loadable :class:`Network`.

    Endpoints keep their names; the inner vertices of chain ``i`` become
    ``γ<i>.<j>``.  A/B states not used by any chain stay as isolated inert states.
    """
    ab = _partition(net, ab)
    keep = sorted(ab.boundary, key=net.index)
    states = list(keep)
    mu = {s: float(net.mu[net.index(s)]) for s in keep}
    edges = []
    for i, chain in enumerate(eq.chains):
        names = list(chain.path.states)
        for j in range(1, len(names) - 1):
            names[j] = f"γ{i}.{j}"
            states.append(names[j])
        for (x, y), r in zip(zip(names[:-1], names[1:]), chain.resistances):
            edges.append((x, y, 1.0 / r))
    merged: dict = defaultdict(float)
    for x, y, k in edges:
        merged[tuple(sorted((x, y)))] += k
    out = Network.from_edges(states, [(x, y, k) for (x, y), k in merged.items()], mu=mu, ab=ab)
    inert = {s for s, r in zip(out.states, out.rates) if r == 0}
    return out.replace(inert=inert)


@dataclass(frozen=True)
class ElectricSolution:
    voltages: Potential
    currents: dict
    power: float
    r_eff: float
    c_eff: float
    kirchhoff_residual: float


def power_and_effective_resistance(net: Network, ab: PartitionPair | None = None) -> ElectricSolution:
    """Voltages ``V = h_AB`` (unit voltage), currents ``i = K (V_x - V_y)_+``,
    dissipated power, and effective resistance and conductance.

    Voltage drops at roundoff level carry no current, as in :func:`harmonic_flow`.
    """
    ab = _partition(net, ab)
    V = solve_harmonic(net, ab)
    v = V.values
    S = net.states
    c = net.cond.tocoo()
    currents = {}
    for i, j, k in zip(c.row, c.col, c.data):
        d = v[i] - v[j]
        if d > ROUNDOFF:
            currents[(S[i], S[j])] = float(k * d)
    power = math.fsum(cur * (v[net.index(x)] - v[net.index(y)]) for (x, y), cur in currents.items())
    current = math.fsum(cur for (x, _), cur in currents.items() if x in ab.A)

    balance = np.zeros(net.n)
    for (x, y), cur in currents.items():
        balance[net.index(x)] -= cur
        balance[net.index(y)] += cur
    interior = [i for i, s in enumerate(S) if s not in ab.boundary]
    residual = float(np.max(np.abs(balance[interior]))) if interior else 0.0
    return ElectricSolution(
        voltages=V,
        currents=currents,
        power=power,
        r_eff=1.0 / current if current > 0 else math.inf,
        c_eff=current,
        kirchhoff_residual=residual,
    )

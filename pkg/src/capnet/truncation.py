"""Capacities of networks with jumps outside a subset suppressed.

For nested subsets ``Omega_1 <= Omega_2 <= ...`` all containing ``A u B``,
``Cap_n`` (conductances kept only inside ``Omega_n``) is nondecreasing and
equals the full capacity once ``Omega_n`` is everything.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .dirichlet import DEFAULT_TOL, _partition, capacity, solve_harmonic
from .errors import FormatError
from .flow import UnitFlow, harmonic_flow
from .network import Network, PartitionPair, tokenize

__all__ = [
    "LevelResult",
    "TruncationLadder",
    "load_ladder",
    "truncate",
    "truncated_harmonic_flow",
    "truncation_sweep",
]


@dataclass(frozen=True)
class TruncationLadder:
    subsets: tuple

    def __post_init__(self):
        subsets = tuple(frozenset(s) for s in self.subsets)
        if not subsets:
            raise ValueError("a ladder needs at least one level")
        for i, (lo, hi) in enumerate(zip(subsets, subsets[1:]), start=1):
            if not lo <= hi:
                raise ValueError(f"level {i} is not contained in level {i + 1}")
        object.__setattr__(self, "subsets", subsets)

    def __len__(self):
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)

    def check(self, net: Network, ab: PartitionPair) -> None:
        for i, level in enumerate(self.subsets, start=1):
            unknown = level - set(net.states)
            if unknown:
                raise ValueError(f"level {i} has unknown states {sorted(unknown)}")
            if not ab.boundary <= level:
                raise ValueError(f"level {i} misses A/B states {sorted(ab.boundary - level)}")


@dataclass(frozen=True)
class LevelResult:
    level: int
    size: int
    cap: float


def truncate(net: Network, subset, ab: PartitionPair | None = None) -> Network:
    """Zero every conductance with an endpoint outside ``subset``.

    All states are kept (``mu`` unchanged); states left without any rate are
    flagged inert.
    """
    ab = _partition(net, ab)
    subset = frozenset(subset)
    if not ab.boundary <= subset:
        raise ValueError(f"subset misses A/B states {sorted(ab.boundary - subset)}")
    unknown = subset - set(net.states)
    if unknown:
        raise ValueError(f"subset has unknown states {sorted(unknown)}")
    keep = np.zeros(net.n)
    keep[net.indices(subset)] = 1.0
    mask = sp.diags(keep)
    cond = sp.csr_matrix(mask @ net.cond @ mask)
    cond.eliminate_zeros()
    rates = np.asarray(cond.sum(axis=1)).reshape(-1) + net.mu * net.kill
    inert = set(net.inert) | {s for s, r in zip(net.states, rates) if r == 0}
    return net.replace(cond=cond, inert=frozenset(inert))


def _a_reaches_b(net: Network, ab: PartitionPair) -> bool:
    _, labels = connected_components(net.cond, directed=False)
    return bool(set(labels[net.indices(ab.A)]) & set(labels[net.indices(ab.B)]))


def _anchored(net: Network, ab: PartitionPair) -> Network:
    """Detach components that contain no state of ``A u B``.

    Such components carry no A-to-B flow and no energy at the (constant)
    optimal potential, but would leave the Dirichlet problem undetermined.
    """
    _, labels = connected_components(net.cond, directed=False)
    keep = np.isin(labels, labels[net.indices(ab.boundary)]).astype(float)
    if keep.all():
        return net
    mask = sp.diags(keep)
    cond = sp.csr_matrix(mask @ net.cond @ mask)
    cond.eliminate_zeros()
    inert = set(net.inert) | {s for s, k in zip(net.states, keep) if not k}
    return net.replace(cond=cond, inert=frozenset(inert))


def _level_cap(net: Network, subset, ab: PartitionPair, tol: float) -> float:
    sub = truncate(net, subset, ab)
    if not _a_reaches_b(sub, ab):
        return 0.0
    return capacity(_anchored(sub, ab), ab, tol).value


def truncation_sweep(
    net: Network,
    ladder: TruncationLadder,
    ab: PartitionPair | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> list:
    """``Cap_n`` for every level of ``ladder``, in ladder order.

    A level on which A cannot reach B has ``Cap_n = 0``.  Kept states that
    are cut off from ``A u B`` at some level do not enter that level's
    Dirichlet problem.
    """
    ab = _partition(net, ab)
    ladder.check(net, ab)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            caps = list(pool.map(lambda s: _level_cap(net, s, ab, tol), ladder.subsets))
    else:
        caps = [_level_cap(net, s, ab, tol) for s in ladder.subsets]
    return [LevelResult(i, len(s), c) for i, (s, c) in enumerate(zip(ladder.subsets, caps), start=1)]


def truncated_harmonic_flow(net: Network, subset, ab: PartitionPair | None = None) -> tuple[float, UnitFlow]:
    """``(Cap_n, Phi^n)``: the harmonic flow of the truncated network.

    ``Phi^n`` only charges edges inside ``subset`` and is a unit flow on the
    full network as well.
    """
    ab = _partition(net, ab)
    sub = _anchored(truncate(net, subset, ab), ab)
    cap = capacity(sub, ab).value
    h = solve_harmonic(sub, ab)
    return cap, harmonic_flow(sub, h, cap)


def load_ladder(text: str) -> TruncationLadder:
    """Parse ``level <name>...`` lines, smallest level first."""
    levels = []
    for lineno, tok in tokenize(text):
        if tok[0] != "level" or len(tok) < 2:
            raise FormatError("expected 'level <name>...'", lineno)
        levels.append(frozenset(tok[1:]))
    try:
        return TruncationLadder(tuple(levels))
    except ValueError as exc:
        raise FormatError(str(exc)) from None

"""Dirichlet problem, Dirichlet form, capacity and equilibrium charges."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, SolverError, UndeterminedPotentialError, UnsupportedCaseError
from .network import Network, PartitionPair, transition_matrix
from .report import CapacityReport

__all__ = [
    "ChargePair",
    "Potential",
    "absorption_probability",
    "capacity",
    "dirichlet_energy",
    "equilibrium_charges",
    "generator",
    "is_admissible",
    "iterate_minimal_solution",
    "minimal_solution_iterates",
    "solve_harmonic",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Potential:
    """Real function on the states of a network."""

    states: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.states),):
            raise ValueError("values must have one entry per state")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "states", tuple(self.states))

    @classmethod
    def from_mapping(cls, net: Network, mapping: Mapping[str, float]) -> "Potential":
        missing = set(net.states) - set(mapping)
        if missing:
            raise ValueError(f"potential misses states: {sorted(missing)}")
        return cls(net.states, [float(mapping[s]) for s in net.states])

    def __getitem__(self, x):
        return float(self.values[self.states.index(x)])

    def as_dict(self) -> dict:
        return dict(zip(self.states, self.values.tolist()))

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class ChargePair:
    qa: float
    qb: float


def _values(net: Network, h) -> np.ndarray:
    if isinstance(h, Potential):
        if h.states != net.states:
            raise ValueError("potential is defined on different states")
        return h.values
    if isinstance(h, Mapping):
        return Potential.from_mapping(net, h).values
    arr = np.asarray(h, dtype=float)
    if arr.shape != (net.n,):
        raise ValueError("potential must have one value per state")
    return arr


def _partition(net: Network, ab: PartitionPair | None) -> PartitionPair:
    ab = ab if ab is not None else net.ab
    if ab is None:
        raise ValueError("no A/B partition given and none embedded in the network")
    ab.check_states(net.states)
    return ab


def _refuse_killing(net: Network, what: str) -> None:
    if net.has_killing:
        raise UnsupportedCaseError(f"{what} is not defined for networks with killing")


def is_admissible(net: Network, h, ab: PartitionPair | None = None, tol: float = 0.0) -> bool:
    """``h = 1`` on A, ``h = 0`` on B and ``0 <= h <= 1`` everywhere (up to ``tol``)."""
    ab = _partition(net, ab)
    v = _values(net, h)
    a = net.indices(ab.A)
    b = net.indices(ab.B)
    return bool(
        np.all(np.abs(v[a] - 1.0) <= tol)
        and np.all(np.abs(v[b]) <= tol)
        and np.all(v >= -tol)
        and np.all(v <= 1.0 + tol)
    )


def generator(net: Network, h) -> np.ndarray:
    """``(L h)(x) = sum_y k(x, y) [h(y) - h(x)]``; killing counts as a jump to potential 0."""
    v = _values(net, h)
    flux = net.cond @ v - np.asarray(net.cond.sum(axis=1)).reshape(-1) * v
    return flux / net.mu - net.kill * v


def solve_harmonic(net: Network, ab: PartitionPair | None = None, tol: float = DEFAULT_TOL) -> Potential:
    """Solve ``-L h = 0`` off ``A u B`` with ``h = 1`` on A and ``h = 0`` on B.

    States flagged inert that have no edges at all get the value 0; any other
    interior state whose component misses ``A u B`` raises
    :class:`UndeterminedPotentialError`.  The result satisfies
    ``|(L h)(x)| <= tol * lambda(x)`` at every interior state, otherwise
    :class:`SolverError` is raised.
    """
    h, _ = _solve(net, _partition(net, ab), tol)
    return Potential(net.states, h)


def _solve(net: Network, ab: PartitionPair, tol: float) -> tuple[np.ndarray, float]:
    _refuse_killing(net, "the harmonic potential")
    n = net.n
    a_idx = net.indices(ab.A)
    b_idx = net.indices(ab.B)
    boundary = np.zeros(n, dtype=bool)
    boundary[a_idx] = True
    boundary[b_idx] = True

    h = np.zeros(n)
    h[a_idx] = 1.0

    K = net.cond
    ncomp, labels = connected_components(K, directed=False)
    anchored = np.isin(labels, np.unique(labels[boundary]))
    floating = ~anchored & ~boundary
    if floating.any():
        bad = [
            net.states[i]
            for i in np.flatnonzero(floating)
            if not (net.states[i] in net.inert and K.indptr[i + 1] == K.indptr[i])
        ]
        if bad:
            raise UndeterminedPotentialError(bad)

    interior = np.flatnonzero(~boundary & anchored)
    if interior.size:
        K_II = K[interior][:, interior]
        deg = np.asarray(K.sum(axis=1)).reshape(-1)[interior]
        lap = sp.diags(deg) - K_II
        rhs = np.asarray(K[interior][:, a_idx].sum(axis=1)).reshape(-1)
        if interior.size <= 200:
            try:
                x = np.linalg.solve(lap.toarray(), rhs)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"singular interior system: {exc}") from None
        else:
            x = spla.spsolve(sp.csc_matrix(lap), rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("interior solve produced non-finite values")
        x = np.clip(x, 0.0, 1.0)
        # pieces of the interior that only touch A (or only B) are exactly 1 (or 0)
        _, parts = connected_components(K_II, directed=False)
        to_a = np.asarray(K[interior][:, a_idx].sum(axis=1)).reshape(-1) > 0
        to_b = np.asarray(K[interior][:, b_idx].sum(axis=1)).reshape(-1) > 0
        for part in np.unique(parts):
            members = parts == part
            if not to_b[members].any():
                x[members] = 1.0
            elif not to_a[members].any():
                x[members] = 0.0
        h[interior] = x

    residual = 0.0
    if interior.size:
        Lh = generator(net, h)[interior]
        rel = np.abs(Lh) / net.rates[interior]
        residual = float(rel.max())
        if residual > tol:
            worst = net.states[interior[int(rel.argmax())]]
            raise SolverError(f"generator residual {residual:.3e} at {worst!r} exceeds tol={tol:.1e}")
    return h, residual


def dirichlet_energy(net: Network, h) -> float:
    """``1/2 sum_{x,y} K(x, y) (h(x) - h(y))^2``."""
    _refuse_killing(net, "the Dirichlet form")
    v = _values(net, h)
    c = net.cond.tocoo()
    return float(0.5 * np.sum(c.data * (v[c.row] - v[c.col]) ** 2))


def capacity(net: Network, ab: PartitionPair | None = None, tol: float = DEFAULT_TOL) -> CapacityReport:
    """Capacity as the Dirichlet energy of the harmonic potential."""
    h, residual = _solve(net, _partition(net, ab), tol)
    return CapacityReport(
        value=dirichlet_energy(net, h),
        kind="exact-dirichlet",
        residual=residual,
        meta="dirichlet solve",
    )


def equilibrium_charges(net: Network, h, ab: PartitionPair | None = None) -> ChargePair:
    """Total equilibrium charge ``sum mu(x) (-L h)(x)`` on A and on B."""
    ab = _partition(net, ab)
    v = _values(net, h)
    charge = -net.mu * generator(net, v)
    return ChargePair(
        qa=float(charge[net.indices(ab.A)].sum()),
        qb=float(charge[net.indices(ab.B)].sum()),
    )


def minimal_solution_iterates(net: Network, target, taboo=()) -> Iterator[np.ndarray]:
    """Yield ``g_0, g_1, ...`` with ``g_0 = 1_target`` and ``g_{n+1} = p g_n`` off
    ``target u taboo`` (held at 1 and 0).

    ``g_n(x)`` is the probability that the jump chain from ``x`` enters
    ``target`` within ``n`` jumps, before ``taboo`` and before being killed.
    Updates are synchronous.
    """
    P, _ = transition_matrix(net)
    t_idx = net.indices(target)
    fixed = np.zeros(net.n, dtype=bool)
    fixed[t_idx] = True
    fixed[net.indices(taboo)] = True
    free = np.flatnonzero(~fixed)
    P_free = P[free]
    g = np.zeros(net.n)
    g[t_idx] = 1.0
    while True:
        yield g.copy()
        nxt = g.copy()
        nxt[free] = P_free @ g
        g = nxt


def _iterate(net, target, taboo, tol, max_steps) -> np.ndarray:
    it = minimal_solution_iterates(net, target, taboo)
    g = next(it)
    prev_inc = None
    inc = float("inf")
    for step in range(1, max_steps + 1):
        nxt = next(it)
        inc = float(np.max(np.abs(nxt - g))) if g.size else 0.0
        g = nxt
        if inc < tol:
            # geometric tail estimate; keeps the distance to the limit at the scale of tol
            ratio = 0.0 if not prev_inc else min(inc / prev_inc, 1.0)
            if ratio < 1.0 and inc * ratio / (1.0 - ratio) < tol:
                return g
        prev_inc = inc
    raise ConvergenceError(max_steps, inc)


def iterate_minimal_solution(
    net: Network,
    ab: PartitionPair | None = None,
    tol: float = 1e-12,
    max_steps: int = 1_000_000,
) -> Potential:
    """Minimal nonnegative solution ``g_AB(x) = P_x(tau_A < zeta, tau_A < tau_B)``.

    Runs :func:`minimal_solution_iterates` until the sup-norm increment drops
    below ``tol`` (and the geometric tail estimated from the last two
    increments is below ``tol`` as well).  Killing is allowed.
    """
    ab = _partition(net, ab)
    return Potential(net.states, _iterate(net, ab.A, ab.B, tol, max_steps))


def absorption_probability(net: Network, target, tol: float = 1e-12, max_steps: int = 1_000_000) -> Potential:
    """``P_x(tau_target < zeta)``: probability of reaching ``target`` before being killed."""
    return Potential(net.states, _iterate(net, frozenset(target), (), tol, max_steps))

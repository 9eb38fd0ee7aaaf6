"""Unit flows, flow-induced Markov chains, stopped paths and path measures.

A unit flow from A to B is a directed edge measure ``Phi(x, y)`` that sends
unit mass out of A and into B, never enters A or leaves B, is divergence
free elsewhere, and never charges an edge together with its reverse.  Row
normalizing ``Phi`` by its left marginal ``nu`` gives a kernel ``ell``; the
chain ``Y`` started from ``nu`` restricted to A and stopped on entering B
carries a probability measure on paths from A to B.
"""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Mapping

import numpy as np

from . import _rng
from .dirichlet import _partition, _values
from .errors import (
    AbsoluteContinuityError,
    CyclicSupportError,
    FlowError,
    FormatError,
    PathTooLongError,
    TooManyPathsError,
)
from .network import Network, PartitionPair, ValidationReport, Violation, tokenize
from .report import CapacityReport

__all__ = [
    "FlowChain",
    "FlowDiscrepancy",
    "PathMeasure",
    "StoppedPath",
    "UnitFlow",
    "dump_flow",
    "dump_path_measure",
    "enumerate_paths",
    "flow_to_chain",
    "harmonic_flow",
    "induced_flow",
    "load_flow",
    "load_path_measure",
    "path_measure_to_flow",
    "radon_nikodym",
    "sample_paths",
    "sample_stopped_path",
    "validate_unit_flow",
]

KIRCHHOFF_TOL = 1e-10
DEFAULT_MAX_PATHS = 10**6
ROUNDOFF = 32 * np.finfo(float).eps


class UnitFlow:
    """Sparse directed edge measure.

    With ``strict=True`` (the default) charging both ``(x, y)`` and ``(y, x)``
    raises :class:`FlowError` at construction.  ``strict=False`` accepts any
    nonnegative edge map, e.g. the edge-visit measure of a path measure or an
    input file that is to be reported on by :func:`validate_unit_flow`.
    Zero entries are dropped.
    """

    def __init__(self, edges: Mapping[tuple, float], strict: bool = True):
        clean: dict[tuple[str, str], float] = {}
        for (x, y), value in edges.items():
            value = float(value)
            if not math.isfinite(value) or value < 0:
                raise FlowError(f"flow on ({x!r}, {y!r}) must be finite and >= 0, got {value}")
            if value > 0:
                clean[(x, y)] = value
        if strict:
            for x, y in clean:
                if (y, x) in clean:
                    raise FlowError(f"flow charges both ({x!r}, {y!r}) and its reverse")
        self._edges = clean

    @property
    def edges(self) -> dict:
        return dict(self._edges)

    def items(self):
        return self._edges.items()

    def __getitem__(self, edge) -> float:
        return self._edges.get(tuple(edge), 0.0)

    def __len__(self):
        return len(self._edges)

    def __iter__(self):
        return iter(self._edges)

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self._edges.values()))

    def states(self) -> set:
        return {s for edge in self._edges for s in edge}

    def outflow(self) -> dict:
        out: dict = defaultdict(float)
        for (x, _), v in self._edges.items():
            out[x] += v
        return dict(out)

    def inflow(self) -> dict:
        inn: dict = defaultdict(float)
        for (_, y), v in self._edges.items():
            inn[y] += v
        return dict(inn)

    def successors(self) -> dict:
        succ: dict = defaultdict(list)
        for x, y in self._edges:
            succ[x].append(y)
        return dict(succ)

    def find_cycle(self) -> list | None:
        """A directed cycle in the support, or None when loop-free."""
        graph: dict = defaultdict(set)
        for x, y in self._edges:
            graph[y].add(x)
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            return list(exc.args[1])
        return None

    def is_loop_free(self) -> bool:
        return self.find_cycle() is None

    def fingerprint(self) -> str:
        """Short content hash for provenance records."""
        text = "\n".join(f"{x} {y} {v!r}" for (x, y), v in sorted(self._edges.items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __add__(self, other: "UnitFlow") -> "UnitFlow":
        merged = defaultdict(float, self._edges)
        for edge, v in other.items():
            merged[edge] += v
        return UnitFlow(merged, strict=False)

    def __repr__(self):
        return f"UnitFlow({len(self._edges)} edges, mass={self.total_mass:.6g})"


def radon_nikodym(net: Network, f: UnitFlow) -> dict:
    """``dPhi/dK`` on the support of ``f``."""
    phi = {}
    for (x, y), v in f.items():
        k = net.conductance(x, y)
        if k <= 0:
            raise AbsoluteContinuityError(f"flow on ({x!r}, {y!r}) but K = 0 there")
        phi[(x, y)] = v / k
    return phi


def validate_unit_flow(
    net: Network,
    f: UnitFlow,
    ab: PartitionPair | None = None,
    tol: float = KIRCHHOFF_TOL,
    loop_free: bool = False,
) -> ValidationReport:
    """Check the unit-flow conditions; with ``loop_free=True`` a directed
    cycle in the support is reported as well."""
    ab = _partition(net, ab)
    out: list[Violation] = []
    known = set(net.states)
    unknown = sorted(f.states() - known)
    if unknown:
        out.append(Violation("unknown-state", tuple(unknown), float(len(unknown)), "flow uses unknown states"))
        return ValidationReport(tuple(out))

    for (x, y), v in sorted(f.items()):
        if x < y and f[(y, x)] > 0:
            out.append(
                Violation("directedness", (x, y), min(v, f[(y, x)]), "edge and its reverse both carry flow")
            )
        if net.conductance(x, y) <= 0:
            out.append(Violation("absolute-continuity", (x, y), v, "flow on an edge with K = 0"))

    outflow, inflow = f.outflow(), f.inflow()
    into_a = math.fsum(inflow.get(a, 0.0) for a in ab.A)
    out_of_b = math.fsum(outflow.get(b, 0.0) for b in ab.B)
    from_a = math.fsum(outflow.get(a, 0.0) for a in ab.A)
    into_b = math.fsum(inflow.get(b, 0.0) for b in ab.B)
    if into_a > tol:
        out.append(Violation("inflow-A", tuple(sorted(ab.A)), into_a, "flow enters A"))
    if out_of_b > tol:
        out.append(Violation("outflow-B", tuple(sorted(ab.B)), out_of_b, "flow leaves B"))
    if abs(from_a - 1.0) > tol:
        out.append(Violation("unit-A", tuple(sorted(ab.A)), abs(from_a - 1.0), f"outflow of A is {from_a!r}"))
    if abs(into_b - 1.0) > tol:
        out.append(Violation("unit-B", tuple(sorted(ab.B)), abs(into_b - 1.0), f"inflow of B is {into_b!r}"))

    for x in net.states:
        if x in ab.A or x in ab.B:
            continue
        d = inflow.get(x, 0.0) - outflow.get(x, 0.0)
        if abs(d) > tol:
            out.append(Violation("kirchhoff", (x,), abs(d), f"inflow - outflow = {d!r} at {x}"))

    if loop_free:
        cycle = f.find_cycle()
        if cycle is not None:
            out.append(Violation("loop", tuple(cycle), float(len(cycle) - 1), "support contains a directed cycle"))
    return ValidationReport(tuple(out))


def harmonic_flow(net: Network, h, cap) -> UnitFlow:
    """``Phi(x, y) = [h(x) - h(y)]_+ K(x, y) / cap``.

    Drops below :data:`ROUNDOFF` (potentials live in [0, 1]) are treated as
    zero; otherwise solver noise on edges where ``h`` is constant in exact
    arithmetic, such as those into dead-end branches, would route a little
    mass to states with no way on to B.
    """
    cap = float(cap.value if isinstance(cap, CapacityReport) else cap)
    if not cap > 0:
        raise ValueError(f"capacity must be > 0, got {cap}")
    v = _values(net, h)
    c = net.cond.tocoo()
    drop = v[c.row] - v[c.col]
    keep = drop > ROUNDOFF
    S = net.states
    edges = {
        (S[i], S[j]): float(d * k / cap)
        for i, j, d, k in zip(c.row[keep], c.col[keep], drop[keep], c.data[keep])
    }
    return UnitFlow(edges)


# -- paths -----------------------------------------------------------------


@dataclass(frozen=True)
class StoppedPath:
    """Finite path ``(g0, ..., gn)``, ``n >= 1``; see :meth:`check` for A/B membership."""

    states: tuple

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise FlowError("a path needs at least one edge")

    def __len__(self):
        return len(self.states) - 1

    def edges(self):
        return list(zip(self.states[:-1], self.states[1:]))

    def is_self_avoiding(self) -> bool:
        return len(set(self.states)) == len(self.states)

    def check(self, ab: PartitionPair) -> None:
        s = self.states
        if s[0] not in ab.A:
            raise FlowError(f"path {s} does not start in A")
        if s[-1] not in ab.B:
            raise FlowError(f"path {s} does not end in B")
        inner = [x for x in s[1:-1] if x in ab.B]
        if inner:
            raise FlowError(f"path {s} visits B before its end")


@dataclass(frozen=True)
class PathMeasure:
    """Finitely supported probability measure on paths from A to B."""

    support: tuple

    def __post_init__(self):
        items = tuple(
            (p if isinstance(p, StoppedPath) else StoppedPath(p), float(q)) for p, q in self.support
        )
        if not items:
            raise FlowError("empty path measure")
        for path, q in items:
            if not q > 0:
                raise FlowError(f"path {path.states} has nonpositive probability {q}")
        total = math.fsum(q for _, q in items)
        if abs(total - 1.0) > 1e-12:
            raise FlowError(f"path probabilities sum to {total!r}, not 1")
        if len({p for p, _ in items}) != len(items):
            raise FlowError("repeated path in path measure")
        object.__setattr__(self, "support", items)

    def __iter__(self):
        return iter(self.support)

    def __len__(self):
        return len(self.support)

    def check(self, ab: PartitionPair) -> None:
        for path, _ in self.support:
            path.check(ab)


def path_measure_to_flow(pm: PathMeasure, ab: PartitionPair | None = None) -> UnitFlow:
    """Expected edge-visit counts ``Phi_P(x, y)``; Gamma_AB membership checked when ``ab`` is given."""
    if ab is not None:
        pm.check(ab)
    acc: dict = defaultdict(list)
    for path, q in pm:
        for edge in path.edges():
            acc[edge].append(q)
    return UnitFlow({edge: math.fsum(qs) for edge, qs in acc.items()}, strict=False)


# -- flow-induced chain ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlowChain:
    """Left marginal ``nu``, kernel ``ell`` on ``{nu > 0}`` and initial law on A."""

    nu: dict
    ell: dict
    init: dict
    n_states: int
    _tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for x, row in self.ell.items():
            targets = tuple(row)
            cum = np.cumsum([row[y] for y in targets])
            self._tables[x] = (targets, cum / cum[-1])
        targets = tuple(self.init)
        cum = np.cumsum([self.init[a] for a in targets])
        self._tables[None] = (targets, cum / cum[-1])

    def draw(self, x, u: float):
        targets, cum = self._tables[x]
        i = int(np.searchsorted(cum, u, side="right"))
        return targets[min(i, len(targets) - 1)]


def flow_to_chain(f: UnitFlow, ab: PartitionPair) -> FlowChain:
    """Row-normalize ``f`` by its left marginal; start from ``nu`` restricted to A."""
    nu = f.outflow()
    grouped: dict = defaultdict(dict)
    for (x, y), v in f.items():
        grouped[x][y] = v
    ell = {}
    for x, row in grouped.items():
        total = math.fsum(row.values())
        ell[x] = {y: v / total for y, v in row.items()}
    mass_a = math.fsum(nu.get(a, 0.0) for a in ab.A)
    if not mass_a > 0:
        raise FlowError("no flow leaves A")
    init = {a: nu[a] / mass_a for a in sorted(ab.A) if nu.get(a, 0.0) > 0}
    n_states = len(f.states() | ab.boundary)
    return FlowChain(nu=nu, ell=ell, init=init, n_states=n_states)


def sample_stopped_path(chain: FlowChain, ab: PartitionPair, rng_seed=None, max_len: int | None = None) -> StoppedPath:
    """Run ``Y`` from its initial law until it first enters B."""
    rng = _rng.as_generator(rng_seed)
    return _walk(chain, ab, rng, max_len if max_len is not None else 100 * chain.n_states)


def _walk(chain: FlowChain, ab: PartitionPair, rng: np.random.Generator, max_len: int) -> StoppedPath:
    x = chain.draw(None, rng.random())
    path = [x]
    while True:
        if x not in chain.ell:
            raise FlowError(f"chain reached {x!r}, which carries no flow")
        x = chain.draw(x, rng.random())
        path.append(x)
        if x in ab.B:
            return StoppedPath(tuple(path))
        if len(path) - 1 >= max_len:
            raise PathTooLongError(path, max_len)


def _sample_block(chain, ab, max_len, size, seedseq):
    rng = np.random.Generator(np.random.PCG64(seedseq))
    return [_walk(chain, ab, rng, max_len) for _ in range(size)]


def sample_paths(
    chain: FlowChain,
    ab: PartitionPair,
    n: int,
    seed=None,
    max_len: int | None = None,
    workers: int = 1,
) -> list:
    """``n`` independent stopped paths; identical for any ``workers`` given ``seed``."""
    max_len = max_len if max_len is not None else 100 * chain.n_states
    blocks = _rng.run_blocks(_sample_block, (chain, ab, max_len), seed, n, workers)
    return [p for block in blocks for p in block]


def enumerate_paths(chain: FlowChain, ab: PartitionPair, max_paths: int = DEFAULT_MAX_PATHS) -> PathMeasure:
    """Exact law of the stopped path, by depth-first search over the support.

    Raises :class:`CyclicSupportError` if a reachable part of the support
    contains a cycle and :class:`TooManyPathsError` past ``max_paths`` paths.
    """
    found: list = []
    stack = [((a,), q) for a, q in reversed(list(chain.init.items()))]
    while stack:
        path, q = stack.pop()
        x = path[-1]
        row = chain.ell.get(x)
        if row is None:
            raise FlowError(f"chain reached {x!r}, which carries no flow")
        for y, p in reversed(list(row.items())):
            if y in ab.B:
                found.append((path + (y,), q * p))
                if len(found) > max_paths:
                    raise TooManyPathsError(f"more than {max_paths} paths in the support")
            elif y in path:
                raise CyclicSupportError(
                    f"support contains a cycle through {y!r}; use Monte Carlo mode"
                )
            else:
                stack.append((path + (y,), q * p))
    total = math.fsum(q for _, q in found)
    if abs(total - 1.0) > 1e-9:
        raise FlowError(f"stopped paths carry total probability {total!r}; the flow is defective")
    return PathMeasure(tuple((p, q / total) for p, q in found))


# -- discrepancy -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlowDiscrepancy:
    """Edge-visit measure ``tilde_phi`` of the stopped chain and ``psi = Phi - tilde_phi``."""

    tilde_phi: UnitFlow
    psi: dict

    def max_abs_psi(self) -> float:
        return max((abs(v) for v in self.psi.values()), default=0.0)

    def kirchhoff_residuals(self) -> dict:
        res: dict = defaultdict(float)
        for (x, y), v in self.psi.items():
            res[x] -= v
            res[y] += v
        return dict(res)


def induced_flow(f: UnitFlow, ab: PartitionPair, tol: float = KIRCHHOFF_TOL) -> FlowDiscrepancy:
    """Expected edge visits of the chain induced by ``f`` before it enters B.

    Visit counts solve ``v = init + v Q`` where ``Q`` is ``ell`` restricted to
    states reachable from A and not in B.  The result is checked for
    ``psi >= -tol`` and for Kirchhoff's law of ``psi`` at every state.
    """
    chain = flow_to_chain(f, ab)
    reach = []
    seen = set()
    todo = list(chain.init)
    while todo:
        x = todo.pop()
        if x in seen or x in ab.B:
            continue
        if x not in chain.ell:
            raise FlowError(f"chain reached {x!r}, which carries no flow: mass is lost before B")
        seen.add(x)
        reach.append(x)
        todo.extend(chain.ell[x])
    pos = {x: i for i, x in enumerate(reach)}
    m = len(reach)
    Q = np.zeros((m, m))
    for x in reach:
        for y, p in chain.ell.get(x, {}).items():
            if y in pos:
                Q[pos[x], pos[y]] = p
    b = np.array([chain.init.get(x, 0.0) for x in reach])
    try:
        v = np.linalg.solve(np.eye(m) - Q.T, b)
    except np.linalg.LinAlgError:
        raise FlowError("visit system is singular: mass is trapped away from B") from None
    if not np.all(np.isfinite(v)) or np.any(v < -tol):
        raise FlowError("visit system is singular: mass is trapped away from B")

    tilde = {}
    for x in reach:
        for y, p in chain.ell.get(x, {}).items():
            tilde[(x, y)] = float(v[pos[x]] * p)
    psi = {edge: float(f[edge] - tilde.get(edge, 0.0)) for edge in set(f) | set(tilde)}
    out = FlowDiscrepancy(UnitFlow(tilde, strict=False), psi)

    scale = max(1.0, f.total_mass)
    worst = min(psi.values(), default=0.0)
    if worst < -tol * scale:
        raise FlowError(f"discrepancy flow has a negative entry {worst:.3e}")
    kr = max((abs(r) for r in out.kirchhoff_residuals().values()), default=0.0)
    if kr > tol * scale:
        raise FlowError(f"discrepancy flow violates Kirchhoff's law by {kr:.3e}")
    return out


# -- files -----------------------------------------------------------------


def load_flow(text: str) -> UnitFlow:
    """Parse ``flow <from> <to> <value>`` lines (non-strict: directedness is left to validation)."""
    edges: dict = {}
    for lineno, tok in tokenize(text):
        if tok[0] != "flow" or len(tok) != 4:
            raise FormatError("expected 'flow <from> <to> <value>'", lineno)
        x, y = tok[1], tok[2]
        try:
            value = float(tok[3])
        except ValueError:
            raise FormatError(f"cannot parse flow value {tok[3]!r}", lineno) from None
        if not math.isfinite(value) or value < 0:
            raise FormatError(f"flow value must be finite and >= 0, got {tok[3]!r}", lineno)
        if (x, y) in edges:
            raise FormatError(f"repeated flow edge {x} {y}", lineno)
        edges[(x, y)] = value
    return UnitFlow(edges, strict=False)


def dump_flow(f: UnitFlow) -> str:
    return "".join(f"flow {x} {y} {v!r}\n" for (x, y), v in sorted(f.items()))


def load_path_measure(text: str) -> PathMeasure:
    """Parse ``path <p> <s0> <s1> ... <sn>`` lines."""
    support = []
    for lineno, tok in tokenize(text):
        if tok[0] != "path" or len(tok) < 4:
            raise FormatError("expected 'path <p> <s0> <s1> ...'", lineno)
        try:
            q = float(tok[1])
        except ValueError:
            raise FormatError(f"cannot parse probability {tok[1]!r}", lineno) from None
        support.append((StoppedPath(tuple(tok[2:])), q))
    try:
        return PathMeasure(tuple(support))
    except FlowError as exc:
        raise FormatError(str(exc)) from None


def dump_path_measure(pm: PathMeasure) -> str:
    return "".join(f"path {q!r} " + " ".join(p.states) + "\n" for p, q in pm)

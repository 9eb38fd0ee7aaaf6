"""Finite reversible networks: states, reversible measure, conductances, killing.

A :class:`Network` stores the reversible measure ``mu`` and the symmetric
conductance matrix ``cond`` (``cond[x, y] = mu[x] * k(x, y)``).  The jump rates
are ``k(x, y) = cond[x, y] / mu[x]`` and the total jump rate out of ``x`` is

    lambda(x) = (sum_y cond[x, y] + mu[x] * kill[x]) / mu[x]

where ``kill[x]`` is the rate of jumping to the absorbing cemetery
:data:`CEMETERY`, which never belongs to ``states``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import FormatError, InertStateError

__all__ = [
    "CEMETERY",
    "Network",
    "PartitionPair",
    "ValidationReport",
    "Violation",
    "dump_network",
    "jump_kernel",
    "load_network",
    "transition_matrix",
    "validate",
]

CEMETERY = "∂"

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class PartitionPair:
    """Disjoint nonempty state sets A (potential 1) and B (potential 0)."""

    A: frozenset
    B: frozenset

    def __post_init__(self):
        object.__setattr__(self, "A", frozenset(self.A))
        object.__setattr__(self, "B", frozenset(self.B))
        if not self.A or not self.B:
            raise ValueError("A and B must both be nonempty")
        common = self.A & self.B
        if common:
            raise ValueError(f"A and B intersect: {sorted(common)}")

    def swapped(self) -> "PartitionPair":
        return PartitionPair(self.B, self.A)

    @property
    def boundary(self) -> frozenset:
        return self.A | self.B

    def check_states(self, states: Iterable[str]) -> None:
        missing = self.boundary - set(states)
        if missing:
            raise ValueError(f"partition refers to unknown states: {sorted(missing)}")


class Network:
    """Finite state space with reversible measure and conductances.

    The constructor only checks shapes and names; symmetry of ``cond``,
    positivity of ``mu`` and nonzero jump rates are reported by :func:`validate`
    so that deliberately broken networks can still be represented.  Use
    :meth:`from_edges` or :func:`load_network` to get a network that is
    symmetric by construction.

    Parameters
    ----------
    states : sequence of str
        Ordered state names.
    mu : array_like, shape (n,)
        Reversible measure.
    cond : array_like or sparse matrix, shape (n, n)
        Conductances ``K(x, y)``.
    kill : array_like, shape (n,), optional
        Killing rates, default zero.
    inert : iterable of str, optional
        States deliberately left with zero total rate.
    ab : PartitionPair, optional
        Embedded source/target pair.
    """

    def __init__(self, states, mu, cond, kill=None, inert=(), ab=None):
        states = tuple(str(s) for s in states)
        if len(set(states)) != len(states):
            raise ValueError("duplicate state names")
        if CEMETERY in states:
            raise ValueError(f"{CEMETERY!r} is reserved for the cemetery")
        n = len(states)
        mu = np.array(mu, dtype=float).reshape(-1)
        if mu.shape != (n,):
            raise ValueError(f"mu has shape {mu.shape}, expected ({n},)")
        kill = np.zeros(n) if kill is None else np.array(kill, dtype=float).reshape(-1)
        if kill.shape != (n,):
            raise ValueError(f"kill has shape {kill.shape}, expected ({n},)")
        cond = sp.csr_matrix(cond, dtype=float, copy=True)
        if cond.shape != (n, n):
            raise ValueError(f"cond has shape {cond.shape}, expected ({n}, {n})")
        cond.eliminate_zeros()
        cond.sort_indices()
        inert = frozenset(inert)
        if not inert <= set(states):
            raise ValueError(f"inert refers to unknown states: {sorted(inert - set(states))}")
        if ab is not None:
            ab.check_states(states)

        for arr in (mu, kill, cond.data, cond.indices, cond.indptr):
            arr.flags.writeable = False
        self._states = states
        self._index = {s: i for i, s in enumerate(states)}
        self._mu = mu
        self._kill = kill
        self._cond = cond
        self._inert = inert
        self._ab = ab
        with np.errstate(divide="ignore", invalid="ignore"):
            self._rates = (np.asarray(cond.sum(axis=1)).reshape(-1) + mu * kill) / mu
        self._rates.flags.writeable = False

    @classmethod
    def from_edges(
        cls,
        states: Sequence[str],
        edges: Iterable[tuple],
        mu: Mapping[str, float] | Sequence[float] | None = None,
        kill: Mapping[str, float] | None = None,
        inert: Iterable[str] = (),
        ab: PartitionPair | None = None,
    ) -> "Network":
        """Build a symmetric network from undirected ``(x, y, K)`` triples.

        ``mu`` defaults to 1 at every state.
        """
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        if mu is None:
            mu_arr = np.ones(n)
        elif isinstance(mu, Mapping):
            mu_arr = np.array([float(mu.get(s, 1.0)) for s in states])
        else:
            mu_arr = np.asarray(mu, dtype=float)
        kill_arr = np.zeros(n)
        for s, rate in (kill or {}).items():
            if rate < 0:
                raise ValueError(f"negative killing rate at {s!r}")
            kill_arr[index[s]] = rate
        rows, cols, vals = [], [], []
        seen = set()
        for x, y, k in edges:
            if x not in index or y not in index:
                raise ValueError(f"edge ({x!r}, {y!r}) references an unknown state")
            if x == y:
                raise ValueError(f"self-loop at {x!r} is forbidden")
            key = frozenset((x, y))
            if key in seen:
                raise ValueError(f"repeated edge {x!r}-{y!r}")
            seen.add(key)
            k = float(k)
            if not k >= 0 or not math.isfinite(k):
                raise ValueError(f"conductance of {x!r}-{y!r} must be finite and >= 0")
            i, j = index[x], index[y]
            rows += [i, j]
            cols += [j, i]
            vals += [k, k]
        cond = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(states, mu_arr, cond, kill=kill_arr, inert=inert, ab=ab)

    # -- accessors ---------------------------------------------------------

    @property
    def states(self) -> tuple:
        return self._states

    @property
    def n(self) -> int:
        return len(self._states)

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def cond(self) -> sp.csr_matrix:
        return self._cond

    @property
    def kill(self) -> np.ndarray:
        return self._kill

    @property
    def inert(self) -> frozenset:
        return self._inert

    @property
    def ab(self) -> PartitionPair | None:
        return self._ab

    @property
    def rates(self) -> np.ndarray:
        """Total jump rate ``lambda(x)`` per state (killing included)."""
        return self._rates

    @property
    def has_killing(self) -> bool:
        return bool(np.any(self._kill > 0))

    def index(self, x: str) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise KeyError(f"unknown state {x!r}") from None

    def indices(self, subset: Iterable[str]) -> np.ndarray:
        return np.array(sorted(self.index(x) for x in subset), dtype=int)

    def conductance(self, x: str, y: str) -> float:
        return float(self._cond[self.index(x), self.index(y)])

    def neighbors(self, x: str):
        """Yield ``(y, K(x, y))`` over positive-conductance neighbours of ``x``."""
        i = self.index(x)
        c = self._cond
        for p in range(c.indptr[i], c.indptr[i + 1]):
            yield self._states[c.indices[p]], float(c.data[p])

    def edges(self):
        """Yield undirected edges ``(x, y, K)`` with ``x`` before ``y`` in state order."""
        coo = sp.triu(self._cond, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        for p in order:
            yield self._states[coo.row[p]], self._states[coo.col[p]], float(coo.data[p])

    def replace(self, **changes) -> "Network":
        """Copy with some constructor arguments replaced."""
        args = dict(
            states=self._states,
            mu=self._mu,
            cond=self._cond,
            kill=self._kill,
            inert=self._inert,
            ab=self._ab,
        )
        args.update(changes)
        return Network(**args)

    def with_partition(self, ab: PartitionPair | None) -> "Network":
        return self.replace(ab=ab)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self._states == other._states
            and np.array_equal(self._mu, other._mu)
            and np.array_equal(self._kill, other._kill)
            and (self._cond != other._cond).nnz == 0
            and self._inert == other._inert
            and self._ab == other._ab
        )

    __hash__ = None

    def __repr__(self):
        return f"Network(n={self.n}, edges={sp.triu(self._cond, k=1).nnz})"


# -- file format -------------------------------------------------------------


def _parse_number(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"cannot parse {what} {token!r}", lineno) from None
    if not math.isfinite(value):
        raise FormatError(f"{what} must be finite, got {token!r}", lineno)
    return value


def tokenize(text: str):
    """Yield ``(lineno, tokens)`` for non-empty lines, with ``#`` comments stripped."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = line.split()
        if tokens:
            yield lineno, tokens


def load_network(text: str) -> Network:
    """Parse the line-oriented network format.

    Recognized directives::

        state <name> [<mu>]
        edge <name1> <name2> <K>
        cond <name1> <name2> <K>
        kill <name> <rate>
        inert <name>
        set A <name>...
        set B <name>...

    States may be referenced before they are declared.  ``cond`` adds ``K`` to
    the single orientation ``name1 -> name2``; it exists so that corrupted
    (asymmetric) matrices can be written down and caught by :func:`validate`.
    """
    states: list[str] = []
    mu: dict[str, float] = {}
    edges: list[tuple[int, str, str, float]] = []
    raw: list[tuple[int, str, str, float]] = []
    kill: dict[str, tuple[int, float]] = {}
    inert: list[tuple[int, str]] = []
    sets: dict[str, tuple[int, list[str]]] = {}

    for lineno, tok in tokenize(text):
        kw, args = tok[0], tok[1:]
        if kw == "state":
            if len(args) not in (1, 2):
                raise FormatError("expected 'state <name> [<mu>]'", lineno)
            name = args[0]
            if name == CEMETERY:
                raise FormatError(f"{CEMETERY!r} is reserved for the cemetery", lineno)
            if name in mu:
                raise FormatError(f"duplicate state {name!r}", lineno)
            value = _parse_number(args[1], lineno, "mu") if len(args) == 2 else 1.0
            if value <= 0:
                raise FormatError(f"mu of {name!r} must be > 0", lineno)
            states.append(name)
            mu[name] = value
        elif kw == "edge":
            if len(args) != 3:
                raise FormatError("expected 'edge <name1> <name2> <K>'", lineno)
            x, y = args[0], args[1]
            k = _parse_number(args[2], lineno, "conductance")
            if k < 0:
                raise FormatError(f"negative conductance on {x}-{y}", lineno)
            if x == y:
                raise FormatError(f"self-loop at {x!r} is forbidden", lineno)
            edges.append((lineno, x, y, k))
        elif kw == "cond":
            if len(args) != 3:
                raise FormatError("expected 'cond <name1> <name2> <K>'", lineno)
            raw.append((lineno, args[0], args[1], _parse_number(args[2], lineno, "conductance")))
        elif kw == "kill":
            if len(args) != 2:
                raise FormatError("expected 'kill <name> <rate>'", lineno)
            rate = _parse_number(args[1], lineno, "killing rate")
            if rate < 0:
                raise FormatError(f"negative killing rate at {args[0]!r}", lineno)
            if args[0] in kill:
                raise FormatError(f"duplicate kill for {args[0]!r}", lineno)
            kill[args[0]] = (lineno, rate)
        elif kw == "inert":
            if len(args) != 1:
                raise FormatError("expected 'inert <name>'", lineno)
            inert.append((lineno, args[0]))
        elif kw == "set":
            if len(args) < 2 or args[0] not in ("A", "B"):
                raise FormatError("expected 'set A|B <name>...'", lineno)
            if args[0] in sets:
                raise FormatError(f"set {args[0]} declared twice", lineno)
            sets[args[0]] = (lineno, args[1:])
        else:
            raise FormatError(f"unknown directive {kw!r}", lineno)

    def known(name, lineno):
        if name not in mu:
            raise FormatError(f"unknown state {name!r}", lineno)
        return name

    seen: dict[frozenset, int] = {}
    triples = []
    for lineno, x, y, k in edges:
        known(x, lineno)
        known(y, lineno)
        key = frozenset((x, y))
        if key in seen:
            raise FormatError(f"repeated edge {x}-{y} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        triples.append((x, y, k))
    for lineno, x, y, _ in raw:
        known(x, lineno)
        known(y, lineno)
    for name, (lineno, _) in kill.items():
        known(name, lineno)
    for lineno, name in inert:
        known(name, lineno)

    ab = None
    if sets:
        if set(sets) != {"A", "B"}:
            missing = ({"A", "B"} - set(sets)).pop()
            raise FormatError(f"set {missing} missing (both A and B are required)")
        for lineno, names in sets.values():
            for name in names:
                known(name, lineno)
        try:
            ab = PartitionPair(frozenset(sets["A"][1]), frozenset(sets["B"][1]))
        except ValueError as exc:
            raise FormatError(str(exc), sets["B"][0]) from None

    net = Network.from_edges(
        states,
        triples,
        mu=mu,
        kill={name: rate for name, (_, rate) in kill.items()},
        inert=[name for _, name in inert],
        ab=ab,
    )
    if raw:
        index = {s: i for i, s in enumerate(states)}
        extra = sp.csr_matrix(
            ([k for *_, k in raw], ([index[x] for _, x, _, _ in raw], [index[y] for _, _, y, _ in raw])),
            shape=(net.n, net.n),
        )
        net = net.replace(cond=net.cond + extra)
    return net


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_network(net: Network) -> str:
    """Serialize to the text format; ``load_network(dump_network(net)) == net``."""
    lines = [f"state {s} {_fmt(m)}" for s, m in zip(net.states, net.mu)]
    lines += [f"edge {x} {y} {_fmt(k)}" for x, y, k in net.edges()]
    lines += [f"kill {s} {_fmt(r)}" for s, r in zip(net.states, net.kill) if r > 0]
    lines += [f"inert {s}" for s in net.states if s in net.inert]
    if net.ab is not None:
        order = {s: i for i, s in enumerate(net.states)}
        for label, members in (("A", net.ab.A), ("B", net.ab.B)):
            lines.append(f"set {label} " + " ".join(sorted(members, key=order.__getitem__)))
    return "\n".join(lines) + "\n"


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    where: tuple
    magnitude: float
    message: str = ""

    def __str__(self):
        loc = ",".join(map(str, self.where))
        text = self.message or self.rule
        return f"{self.rule} [{loc}] {self.magnitude:.3e}: {text}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set:
        return {v.rule for v in self.violations}

    def __bool__(self):
        return self.ok


def validate(net: Network, ab: PartitionPair | None = None, rtol: float = SYMMETRY_RTOL) -> ValidationReport:
    """Check reversibility (symmetry of ``cond``) and the other network invariants.

    ``ab`` defaults to the embedded partition; when available, components of
    the conductance graph that contain no state of A or B are reported.
    """
    out: list[Violation] = []
    S = net.states
    c = net.cond.tocoo()

    diag = net.cond.diagonal()
    for i in np.flatnonzero(diag != 0):
        out.append(Violation("self-loop", (S[i],), float(abs(diag[i])), f"self-loop at {S[i]}"))
    for i, j, v in zip(c.row, c.col, c.data):
        if v < 0 and i <= j:
            out.append(Violation("K-negative", (S[i], S[j]), float(-v), "negative conductance"))

    diff = (net.cond - net.cond.T).tocoo()
    for i, j, d in zip(diff.row, diff.col, diff.data):
        if i < j and d != 0:
            kij = abs(net.cond[i, j])
            kji = abs(net.cond[j, i])
            if abs(d) > rtol * max(kij, kji):
                out.append(
                    Violation("K-symmetry", (S[i], S[j]), float(abs(d)), "conductance matrix is not symmetric")
                )

    for i in np.flatnonzero(~(net.mu > 0) | ~np.isfinite(net.mu)):
        out.append(Violation("mu-positive", (S[i],), float(net.mu[i]), f"mu must be > 0 at {S[i]}"))
    for i in np.flatnonzero(net.kill < 0):
        out.append(Violation("kill-negative", (S[i],), float(-net.kill[i]), "negative killing rate"))

    rates = net.rates
    for i in range(net.n):
        if S[i] in net.inert or not net.mu[i] > 0:
            continue
        if not np.isfinite(rates[i]):
            out.append(Violation("rate-finite", (S[i],), float("inf"), f"infinite jump rate at {S[i]}"))
        elif rates[i] <= 0:
            out.append(Violation("zero-rate", (S[i],), 0.0, f"zero jump rate at {S[i]}"))

    ab = ab if ab is not None else net.ab
    if ab is not None:
        missing = ab.boundary - set(S)
        if missing:
            out.append(Violation("partition", tuple(sorted(missing)), float(len(missing)), "unknown states in A/B"))
        else:
            adjacency = abs(net.cond) + abs(net.cond.T)
            ncomp, labels = connected_components(adjacency, directed=False)
            anchored = {labels[net.index(x)] for x in ab.boundary}
            for comp in range(ncomp):
                if comp in anchored:
                    continue
                members = tuple(S[i] for i in np.flatnonzero(labels == comp))
                if len(members) == 1 and members[0] in net.inert:
                    continue
                out.append(
                    Violation(
                        "disconnected",
                        members,
                        float(len(members)),
                        "component contains no state of A or B",
                    )
                )
    return ValidationReport(tuple(out))


# -- jump chain --------------------------------------------------------------


def jump_kernel(net: Network, x: str) -> dict:
    """Jump-chain distribution ``p(x, .) = k(x, .) / lambda(x)``, cemetery included."""
    i = net.index(x)
    lam = net.rates[i]
    if not lam > 0:
        raise InertStateError(f"inert state has no jump kernel: {x!r}")
    denom = net.mu[i] * lam
    out = {y: k / denom for y, k in net.neighbors(x)}
    if net.kill[i] > 0:
        out[CEMETERY] = float(net.kill[i] / lam)
    return out


def transition_matrix(net: Network) -> tuple[sp.csr_matrix, np.ndarray]:
    """Return the jump-chain matrix ``P`` (rows of zero-rate states are zero) and
    the per-state probability of jumping to the cemetery."""
    denom = net.mu * net.rates
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(denom > 0, 1.0 / denom, 0.0)
        escape = np.where(net.rates > 0, net.kill / net.rates, 0.0)
    P = sp.diags(scale) @ net.cond
    return sp.csr_matrix(P), escape

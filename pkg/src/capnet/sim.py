"""Monte Carlo simulation of the jump process and its jump chain.

The process holds at ``x`` for an exponential time of rate ``lambda(x)`` and
then jumps according to ``p(x, .)``, the cemetery included.  With
``chain_only=True`` holding times are not sampled and the clock counts jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .dirichlet import _partition
from .network import CEMETERY, Network, PartitionPair, transition_matrix

__all__ = [
    "HittingEstimate",
    "Trajectory",
    "default_t_max",
    "dump_trajectory",
    "estimate_hitting_prob",
    "simulate_jump_process",
]

TERMINALS = ("hit-A", "hit-B", "killed", "censored")


@dataclass(frozen=True)
class Trajectory:
    """Jump times and states; ``terminal`` tells how the run ended."""

    events: tuple
    terminal: str

    def holding_times(self) -> list:
        """``(state, hold)`` for every completed sojourn."""
        ev = self.events
        return [(ev[k][1], ev[k + 1][0] - ev[k][0]) for k in range(len(ev) - 1)]


@dataclass(frozen=True)
class HittingEstimate:
    """Fraction of uncensored runs that hit A first, with binomial standard error."""

    value: float
    stderr: float
    samples: int
    censored: int = 0
    killed: int = 0


def default_t_max(net: Network, chain_only: bool = False) -> float:
    if chain_only:
        return 1e6
    positive = net.rates[net.rates > 0]
    return 1e6 / float(positive.min()) if positive.size else math.inf


def _tables(net: Network) -> np.ndarray:
    """Cumulative jump distribution per state; last column is the cemetery."""
    P, escape = transition_matrix(net)
    full = np.hstack([P.toarray(), escape[:, None]])
    cum = np.cumsum(full, axis=1)
    cum[net.rates > 0, -1] = 1.0
    return cum


def simulate_jump_process(
    net: Network,
    x0: str,
    ab: PartitionPair | None = None,
    rng_seed=None,
    t_max: float | None = None,
    chain_only: bool = False,
) -> Trajectory:
    """Run from ``x0`` until A or B is entered, the process is killed, or ``t_max``.

    Starting in A (resp. B) ends immediately with ``hit-A`` (``hit-B``).  A
    killed run ends with the event ``(time, CEMETERY)``.  Zero-rate states
    hold forever, so such runs are censored.
    """
    ab = _partition(net, ab)
    rng = _rng.as_generator(rng_seed)
    t_max = default_t_max(net, chain_only) if t_max is None else t_max
    events = [(0.0, x0)]
    if x0 in ab.A:
        return Trajectory(tuple(events), "hit-A")
    if x0 in ab.B:
        return Trajectory(tuple(events), "hit-B")
    cum = _tables(net)
    rates = net.rates
    i = net.index(x0)
    t = 0.0
    while True:
        if not rates[i] > 0:
            return Trajectory(tuple(events), "censored")
        t += 1.0 if chain_only else float(rng.standard_exponential() / rates[i])
        if t > t_max:
            return Trajectory(tuple(events), "censored")
        j = int(np.searchsorted(cum[i], rng.random(), side="right"))
        if j >= net.n:
            events.append((t, CEMETERY))
            return Trajectory(tuple(events), "killed")
        i = j
        x = net.states[i]
        events.append((t, x))
        if x in ab.A:
            return Trajectory(tuple(events), "hit-A")
        if x in ab.B:
            return Trajectory(tuple(events), "hit-B")


def _hit_block(cum, rates, in_a, in_b, i0, t_max, chain_only, size, seedseq):
    """Vectorized runs from state ``i0``; returns counts per terminal."""
    rng = np.random.Generator(np.random.PCG64(seedseq))
    n = len(rates)
    state = np.full(size, i0)
    t = np.zeros(size)
    counts = dict.fromkeys(TERMINALS, 0)
    if in_a[i0]:
        counts["hit-A"] = size
        return counts
    if in_b[i0]:
        counts["hit-B"] = size
        return counts
    active = np.arange(size)
    while active.size:
        st = state[active]
        lam = rates[st]
        stuck = ~(lam > 0)
        if chain_only:
            t[active] += 1.0
        else:
            with np.errstate(divide="ignore"):
                t[active] += rng.standard_exponential(active.size) / lam
        late = stuck | (t[active] > t_max)
        u = rng.random(active.size)
        nxt = (cum[st] <= u[:, None]).sum(axis=1)
        killed = ~late & (nxt >= n)
        nxt = np.minimum(nxt, n - 1)
        hit_a = ~late & ~killed & in_a[nxt]
        hit_b = ~late & ~killed & in_b[nxt]
        counts["censored"] += int(late.sum())
        counts["killed"] += int(killed.sum())
        counts["hit-A"] += int(hit_a.sum())
        counts["hit-B"] += int(hit_b.sum())
        state[active] = nxt
        active = active[~(late | killed | hit_a | hit_b)]
    return counts


def estimate_hitting_prob(
    net: Network,
    x0: str,
    ab: PartitionPair | None = None,
    samples: int = 10_000,
    seed=None,
    t_max: float | None = None,
    chain_only: bool = False,
    workers: int = 1,
) -> HittingEstimate:
    """Monte Carlo estimate of ``P_x0(tau_A < tau_B)`` (``g_AB(x0)`` with killing).

    Censored runs are excluded from both numerator and denominator.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    ab = _partition(net, ab)
    t_max = default_t_max(net, chain_only) if t_max is None else t_max
    in_a = np.zeros(net.n, dtype=bool)
    in_a[net.indices(ab.A)] = True
    in_b = np.zeros(net.n, dtype=bool)
    in_b[net.indices(ab.B)] = True
    args = (_tables(net), np.asarray(net.rates), in_a, in_b, net.index(x0), t_max, chain_only)
    blocks = _rng.run_blocks(_hit_block, args, seed, samples, workers)
    totals = dict.fromkeys(TERMINALS, 0)
    for b in blocks:
        for k, v in b.items():
            totals[k] += v
    done = samples - totals["censored"]
    if done == 0:
        raise RuntimeError("all runs were censored; increase t_max")
    value = totals["hit-A"] / done
    return HittingEstimate(
        value=value,
        stderr=math.sqrt(value * (1.0 - value) / done),
        samples=done,
        censored=totals["censored"],
        killed=totals["killed"],
    )


def dump_trajectory(traj: Trajectory) -> str:
    lines = [f"t {t!r} {x}" for t, x in traj.events]
    lines.append(f"end {traj.terminal}")
    return "\n".join(lines) + "\n"

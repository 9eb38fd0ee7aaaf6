"""Variational bounds on the capacity.

* Dirichlet: any admissible potential ``h`` gives ``E(h) >= Cap``.
* Thomson: any unit flow ``Phi`` gives ``1 / sum Phi^2 / K <= Cap``.
* Berman-Konsowa: a path measure, or the path law of the chain induced by a
  unit flow, gives ``E[(sum_{steps} dPhi/dK)^-1] <= Cap`` with equality for
  the harmonic flow.

By Jensen's inequality the Berman-Konsowa value of a flow is never below its
Thomson value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dirichlet import DEFAULT_TOL, _partition, capacity, dirichlet_energy, is_admissible
from .errors import AbsoluteContinuityError, CyclicSupportError, FlowError, TooManyPathsError
from .flow import (
    DEFAULT_MAX_PATHS,
    PathMeasure,
    StoppedPath,
    UnitFlow,
    enumerate_paths,
    flow_to_chain,
    path_measure_to_flow,
    radon_nikodym,
    sample_paths,
)
from .network import Network, PartitionPair
from .report import CapacityReport

__all__ = [
    "OrderingReport",
    "bk_flow_estimate",
    "bk_path_estimate",
    "chain_conductance",
    "dirichlet_upper_bound",
    "flow_energy",
    "thomson_bound",
    "verify_ordering",
]


def chain_conductance(path: StoppedPath | Sequence, phi) -> float:
    """Conductance ``(sum_{steps} phi)^-1`` of the series chain along ``path``.

    ``phi`` is either a mapping from directed edges to ``dPhi/dK`` or the
    sequence of values along the steps of ``path``.  An edge traversed twice
    contributes twice.
    """
    states = path.states if isinstance(path, StoppedPath) else tuple(path)
    steps = list(zip(states[:-1], states[1:]))
    if isinstance(phi, Mapping):
        values = [phi.get(e, 0.0) for e in steps]
    else:
        values = [float(v) for v in phi]
        if len(values) != len(steps):
            raise ValueError(f"path has {len(steps)} steps but {len(values)} derivative values")
    for e, v in zip(steps, values):
        if not v > 0:
            raise AbsoluteContinuityError(f"dPhi/dK = {v} on step {e}; it must be > 0 along the path")
    return 1.0 / math.fsum(values)


def bk_path_estimate(net: Network, pm: PathMeasure, ab: PartitionPair | None = None) -> CapacityReport:
    """Berman-Konsowa lower bound of a path measure."""
    ab = _partition(net, ab)
    phi = radon_nikodym(net, path_measure_to_flow(pm, ab))
    value = math.fsum(q * chain_conductance(path, phi) for path, q in pm)
    return CapacityReport(value=value, kind="bk-exact", residual=0.0, meta=f"path measure, {len(pm)} paths")


def bk_flow_estimate(
    net: Network,
    f: UnitFlow,
    ab: PartitionPair | None = None,
    mode: str = "exact",
    samples: int = 10_000,
    seed=None,
    workers: int = 1,
    max_paths: int = DEFAULT_MAX_PATHS,
    max_len: int | None = None,
) -> CapacityReport:
    """Berman-Konsowa lower bound of a unit flow.

    ``mode="exact"`` enumerates every stopped path of the induced chain (the
    reachable support has to be loop-free); past ``max_paths`` paths it falls
    back to Monte Carlo and says so in ``meta``.  ``mode="mc"`` averages over
    ``samples`` sampled paths and reports the standard error.
    """
    ab = _partition(net, ab)
    phi = radon_nikodym(net, f)
    chain = flow_to_chain(f, ab)
    provenance = f"flow {f.fingerprint()}"
    if mode == "exact":
        try:
            pm = enumerate_paths(chain, ab, max_paths=max_paths)
        except CyclicSupportError as exc:
            raise CyclicSupportError(f"{exc}; exact mode needs a loop-free flow, use mode='mc'") from None
        except TooManyPathsError:
            rep = _bk_mc(chain, ab, phi, samples, seed, workers, max_len)
            return CapacityReport(
                value=rep[0],
                kind="bk-mc",
                stderr=rep[1],
                meta=f"{provenance} seed {seed} samples {samples}; "
                f"warning: more than {max_paths} paths, switched to mc",
            )
        value = math.fsum(q * chain_conductance(path, phi) for path, q in pm)
        return CapacityReport(value=value, kind="bk-exact", residual=0.0, meta=f"{provenance} paths {len(pm)}")
    if mode == "mc":
        mean, se = _bk_mc(chain, ab, phi, samples, seed, workers, max_len)
        return CapacityReport(
            value=mean, kind="bk-mc", stderr=se, meta=f"{provenance} seed {seed} samples {samples}"
        )
    raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")


def _bk_mc(chain, ab, phi, samples, seed, workers, max_len) -> tuple[float, float]:
    if samples < 2:
        raise ValueError("Monte Carlo mode needs at least 2 samples")
    paths = sample_paths(chain, ab, samples, seed=seed, max_len=max_len, workers=workers)
    vals = np.array([chain_conductance(p, phi) for p in paths])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def flow_energy(net: Network, f: UnitFlow) -> float:
    """``sum_{(x,y)} Phi(x, y)^2 / K(x, y)``."""
    phi = radon_nikodym(net, f)
    return math.fsum(f[e] * phi[e] for e in phi)


def thomson_bound(net: Network, f: UnitFlow) -> CapacityReport:
    """Thomson lower bound ``1 / energy(f)``."""
    energy = flow_energy(net, f)
    if not energy > 0:
        raise FlowError("zero-energy flow")
    return CapacityReport(value=1.0 / energy, kind="thomson-lower", meta=f"flow {f.fingerprint()}")


def dirichlet_upper_bound(net: Network, h, ab: PartitionPair | None = None) -> CapacityReport:
    """Dirichlet upper bound ``E(h)`` of an admissible potential."""
    ab = _partition(net, ab)
    if not is_admissible(net, h, ab):
        raise ValueError("potential is not admissible (needs h=1 on A, h=0 on B, 0<=h<=1)")
    return CapacityReport(value=dirichlet_energy(net, h), kind="dirichlet-upper", meta="test potential")


@dataclass(frozen=True)
class OrderingReport:
    thomson: float
    bk: float
    cap: float
    tol: float

    @property
    def ok(self) -> bool:
        slack = self.tol * max(1.0, abs(self.cap))
        return self.thomson <= self.bk + slack and self.bk <= self.cap + slack

    @property
    def gaps(self) -> tuple[float, float]:
        """``(bk - thomson, cap - bk)``; both are >= 0 up to roundoff."""
        return self.bk - self.thomson, self.cap - self.bk


def verify_ordering(
    net: Network, f: UnitFlow, ab: PartitionPair | None = None, tol: float = DEFAULT_TOL
) -> OrderingReport:
    """Check ``thomson(f) <= bk_exact(f) <= Cap`` for a loop-free unit flow."""
    ab = _partition(net, ab)
    return OrderingReport(
        thomson=thomson_bound(net, f).value,
        bk=bk_flow_estimate(net, f, ab, mode="exact").value,
        cap=capacity(net, ab).value,
        tol=tol,
    )

"""Capacity reports carrying the value together with how it was obtained."""

from __future__ import annotations

from dataclasses import dataclass

KINDS = ("exact-dirichlet", "dirichlet-upper", "thomson-lower", "bk-exact", "bk-mc")


@dataclass(frozen=True)
class CapacityReport:
    """A capacity value or bound.

    ``residual`` is the solver residual or the numerical slack of the computation;
    ``stderr`` is set exactly for Monte Carlo estimates (``kind == "bk-mc"``).
    """

    value: float
    kind: str
    residual: float | None = None
    stderr: float | None = None
    meta: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")
        if (self.stderr is not None) != (self.kind == "bk-mc"):
            raise ValueError("stderr must be given exactly for bk-mc reports")

    def __float__(self):
        return float(self.value)

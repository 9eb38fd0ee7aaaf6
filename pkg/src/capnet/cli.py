"""Command-line front end.

Every subcommand writes a plain-text report, one ``key value`` or
``PASS|FAIL name residual`` per line, headed by the command, the SHA-256 of
each input file and the seed.  Floats carry 12 significant digits.  Exit
status: 0 success, 1 validation failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .bounds import bk_flow_estimate, bk_path_estimate, chain_conductance, dirichlet_upper_bound, thomson_bound
from .dirichlet import (
    DEFAULT_TOL,
    Potential,
    absorption_probability,
    capacity,
    equilibrium_charges,
    iterate_minimal_solution,
    solve_harmonic,
)
from .equiv import build_equivalent_network, emit_network
from .errors import CapnetError, FormatError
from .flow import (
    PathMeasure,
    dump_path_measure,
    flow_to_chain,
    load_flow,
    load_path_measure,
    radon_nikodym,
    sample_paths,
    validate_unit_flow,
)
from .network import PartitionPair, dump_network, load_network, tokenize, validate
from .sim import dump_trajectory, estimate_hitting_prob, simulate_jump_process
from .truncation import load_ladder, truncation_sweep
from .verify import verify_suite

__all__ = ["load_potential", "main", "run"]

OK, INVALID, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    if isinstance(x, float) or hasattr(x, "dtype"):
        return format(float(x), ".12g")
    return str(x)


class Report:
    def __init__(self):
        self.lines: list[str] = []
        self.failed = False

    def kv(self, key, value):
        self.lines.append(f"{key} {fmt(value)}")

    def check(self, name, passed, residual=0.0):
        self.failed |= not passed
        self.lines.append(f"{'PASS' if passed else 'FAIL'} {name} {fmt(float(residual))}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def load_potential(text: str, net) -> Potential:
    """Parse ``potential <name> <value>`` lines; every state must be given."""
    values = {}
    for lineno, tok in tokenize(text):
        if tok[0] != "potential" or len(tok) != 3:
            raise FormatError("expected 'potential <name> <value>'", lineno)
        if tok[1] in values:
            raise FormatError(f"duplicate state {tok[1]!r}", lineno)
        try:
            values[tok[1]] = float(tok[2])
        except ValueError:
            raise FormatError(f"bad value {tok[2]!r}", lineno) from None
    missing = [s for s in net.states if s not in values]
    if missing:
        raise FormatError(f"potential misses states {missing}")
    extra = sorted(set(values) - set(net.states))
    if extra:
        raise FormatError(f"potential names unknown states {extra}")
    return Potential.from_mapping(net, values)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="capnet", description="Capacities and variational bounds of reversible networks.")
    p.add_argument("--version", action="version", version=f"capnet {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--net", required=True, help="network file")
        s.add_argument("--A", nargs="+", metavar="STATE", help="override the embedded A set")
        s.add_argument("--B", nargs="+", metavar="STATE", help="override the embedded B set")
        s.add_argument("--tol", type=float, default=DEFAULT_TOL)
        s.add_argument("--seed", type=int, default=None, help="master seed (default: $CAPNET_SEED or 0)")
        s.add_argument("--samples", type=int, default=10_000)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out", help="write the report here instead of stdout")
        return s

    common("solve", "harmonic potential, capacity and charges")
    common("charges", "equilibrium charges and the charge identity")
    s = common("iterate", "minimal-solution iteration (killing allowed)")
    s.add_argument("--max-steps", type=int, default=1_000_000)
    s = common("bounds", "Dirichlet, Thomson and Berman-Konsowa bounds")
    s.add_argument("--flow")
    s.add_argument("--paths")
    s.add_argument("--potential")
    s.add_argument("--mode", choices=("exact", "mc"), default="exact")
    s = common("flow-check", "validate a flow file")
    s.add_argument("--flow", required=True)
    s.add_argument("--loop-free", action="store_true")
    s = common("sample", "sample stopped paths from the chain induced by a flow")
    s.add_argument("--flow", required=True)
    s.add_argument("--paths-out", help="write the empirical path measure here")
    s = common("truncate-sweep", "capacities along a truncation ladder")
    s.add_argument("--ladder", required=True)
    s = common("equiv", "equivalent parallel-chain network of a path measure")
    s.add_argument("--paths", required=True)
    s.add_argument("--emit-network", help="write the equivalent network here")
    s = common("simulate", "Monte Carlo hitting probability from a state")
    s.add_argument("--x0", required=True)
    s.add_argument("--chain-only", action="store_true")
    s.add_argument("--dump", help="write one trajectory here")
    common("verify", "run the full consistency suite")
    return p


def _read(path: str) -> tuple[str, str]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return data.decode("utf-8"), hashlib.sha256(data).hexdigest()


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CAPNET_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"CAPNET_SEED must be an integer, got {env!r}") from None


def run(argv=None, stdout=None) -> int:
    """Run the CLI on ``argv`` and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if not args.tol > 0:
            raise UsageError("--tol must be > 0")
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        report = Report()
        code = _dispatch(args, report)
    except UsageError as exc:
        print(f"capnet: error: {exc}", file=sys.stderr)
        return USAGE
    except (FormatError, ValueError) as exc:
        print(f"capnet: error: {exc}", file=sys.stderr)
        return USAGE
    except CapnetError as exc:
        print(f"capnet: error: {exc}", file=sys.stderr)
        return INVALID
    text = report.text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return code


def _dispatch(args, report: Report) -> int:
    seed = _seed(args)
    report.kv("command", args.command)
    text, digest = _read(args.net)
    report.kv("net-sha256", digest)
    net = load_network(text)
    if args.A or args.B:
        A = args.A or (sorted(net.ab.A) if net.ab else None)
        B = args.B or (sorted(net.ab.B) if net.ab else None)
        if A is None or B is None:
            raise UsageError("the network has no embedded partition; give both --A and --B")
        net = net.with_partition(PartitionPair(frozenset(A), frozenset(B)))
    if net.ab is None:
        raise UsageError("no partition: add 'set A/B' lines or pass --A and --B")
    net.ab.check_states(net.states)
    inputs = {}
    for key in ("flow", "paths", "potential", "ladder"):
        path = getattr(args, key, None)
        if path:
            inputs[key], d = _read(path)
            report.kv(f"{key}-sha256", d)
    report.kv("seed", seed)

    if args.command == "verify":
        results = verify_suite(net, net.ab, seed=seed, tol=args.tol, samples=args.samples, workers=args.workers)
        for r in results:
            report.lines.append(r.line())
            report.failed |= r.passed is False
        return INVALID if report.failed else OK

    vrep = validate(net)
    report.check("validate", vrep.ok, max((v.magnitude for v in vrep.violations), default=0.0))
    for v in vrep.violations:
        report.kv("violation", str(v))
    if not vrep.ok:
        return INVALID

    handler = _HANDLERS[args.command]
    handler(args, net, inputs, seed, report)
    return INVALID if report.failed else OK


def _solve(args, net, inputs, seed, report):
    cap = capacity(net, tol=args.tol)
    h = solve_harmonic(net, tol=args.tol)
    q = equilibrium_charges(net, h)
    report.kv("cap", cap.value)
    report.kv("residual", cap.residual)
    report.kv("charge-A", q.qa)
    report.kv("charge-B", q.qb)
    for s in net.states:
        report.kv(f"h.{s}", h[s])


def _charges(args, net, inputs, seed, report):
    cap = capacity(net, tol=args.tol).value
    q = equilibrium_charges(net, solve_harmonic(net, tol=args.tol))
    report.kv("cap", cap)
    report.kv("charge-A", q.qa)
    report.kv("charge-B", q.qb)
    res = max(abs(q.qa - cap), abs(q.qb + cap)) / cap if cap > 0 else math.inf
    report.check("charge-identity", res <= args.tol, res)


def _iterate(args, net, inputs, seed, report):
    g = iterate_minimal_solution(net, tol=args.tol, max_steps=args.max_steps)
    g_ba = iterate_minimal_solution(net, net.ab.swapped(), tol=args.tol, max_steps=args.max_steps)
    for s in net.states:
        report.kv(f"g_AB.{s}", g[s])
    for s in net.states:
        report.kv(f"g_BA.{s}", g_ba[s])
    if net.has_killing:
        reach = absorption_probability(net, net.ab.boundary, tol=args.tol, max_steps=args.max_steps)
        for s in net.states:
            report.kv(f"escape.{s}", 1.0 - reach[s])


def _flow_violations(net, f, args, report, loop_free=False) -> bool:
    rep = validate_unit_flow(net, f, tol=args.tol, loop_free=loop_free)
    rules = ("unknown-state", "directedness", "absolute-continuity", "inflow-A", "outflow-B", "unit-A", "unit-B",
             "kirchhoff") + (("loop",) if loop_free else ())
    for rule in rules:
        mags = [v.magnitude for v in rep.violations if v.rule == rule]
        report.check(f"flow-{rule}", not mags, max(mags, default=0.0))
    for v in rep.violations:
        report.kv("violation", str(v))
    return rep.ok


def _bounds(args, net, inputs, seed, report):
    if not inputs:
        raise UsageError("bounds needs at least one of --flow, --paths, --potential")
    cap = capacity(net, tol=args.tol).value
    report.kv("cap", cap)
    slack = args.tol * max(1.0, cap)
    if "potential" in inputs:
        up = dirichlet_upper_bound(net, load_potential(inputs["potential"], net)).value
        report.kv("dirichlet-upper", up)
        report.check("dirichlet-upper>=cap", up >= cap - slack, max(0.0, cap - up))
    if "flow" in inputs:
        f = load_flow(inputs["flow"])
        if _flow_violations(net, f, args, report):
            th = thomson_bound(net, f).value
            report.kv("thomson-lower", th)
            report.check("thomson<=cap", th <= cap + slack, max(0.0, th - cap))
            bk = bk_flow_estimate(net, f, mode=args.mode, samples=args.samples, seed=seed, workers=args.workers)
            report.kv(bk.kind, bk.value)
            if bk.stderr is not None:
                report.kv("bk-stderr", bk.stderr)
                report.check("bk<=cap", bk.value <= cap + 4 * bk.stderr + slack, max(0.0, bk.value - cap))
            else:
                report.check("bk<=cap", bk.value <= cap + slack, max(0.0, bk.value - cap))
                report.check("thomson<=bk", th <= bk.value + slack, max(0.0, th - bk.value))
            if "warning" in bk.meta:
                report.kv("warning", bk.meta.split("warning: ", 1)[1])
    if "paths" in inputs:
        pm = load_path_measure(inputs["paths"])
        pm.check(net.ab)
        bk = bk_path_estimate(net, pm).value
        report.kv("bk-path", bk)
        report.check("bk-path<=cap", bk <= cap + slack, max(0.0, bk - cap))


def _flow_check(args, net, inputs, seed, report):
    f = load_flow(inputs["flow"])
    report.kv("total-mass", f.total_mass)
    _flow_violations(net, f, args, report, loop_free=args.loop_free)


def _sample(args, net, inputs, seed, report):
    f = load_flow(inputs["flow"])
    if not _flow_violations(net, f, args, report):
        return
    paths = sample_paths(flow_to_chain(f, net.ab), net.ab, args.samples, seed=seed, workers=args.workers)
    phi = radon_nikodym(net, f)
    vals = [chain_conductance(p, phi) for p in paths]
    lengths = [len(p) for p in paths]
    n = len(paths)
    mean = math.fsum(vals) / n
    report.kv("samples", n)
    report.kv("self-avoiding", sum(p.is_self_avoiding() for p in paths) / n)
    report.kv("mean-length", math.fsum(lengths) / n)
    report.kv("total-mass", f.total_mass)
    report.kv("bk-mc", mean)
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
        report.kv("bk-stderr", math.sqrt(var / n))
    if args.paths_out:
        counts = Counter(p for p in paths)
        pm = PathMeasure(tuple((p, c / n) for p, c in sorted(counts.items(), key=lambda t: t[0].states)))
        Path(args.paths_out).write_text(dump_path_measure(pm), encoding="utf-8")


def _truncate_sweep(args, net, inputs, seed, report):
    ladder = load_ladder(inputs["ladder"])
    levels = truncation_sweep(net, ladder, tol=args.tol, workers=args.workers)
    for lv in levels:
        report.kv(f"level.{lv.level}.size", lv.size)
        report.kv(f"level.{lv.level}.cap", lv.cap)
    caps = [lv.cap for lv in levels]
    drop = max((a - b for a, b in zip(caps, caps[1:])), default=0.0)
    report.check("monotone", drop <= 0.0, max(0.0, drop))
    if levels[-1].size == net.n:
        full = capacity(net, tol=args.tol).value
        gap = abs(caps[-1] - full)
        report.check("terminal=cap", gap <= args.tol * max(1.0, full), gap)


def _equiv(args, net, inputs, seed, report):
    pm = load_path_measure(inputs["paths"])
    eq = build_equivalent_network(net, pm)
    bk = bk_path_estimate(net, pm).value
    for i, ch in enumerate(eq.chains):
        report.kv(f"chain.{i}.conductance", ch.conductance)
    report.kv("total", eq.total)
    report.kv("bk-path", bk)
    report.check("total=bk", abs(eq.total - bk) <= args.tol * max(1.0, bk), abs(eq.total - bk))
    if args.emit_network:
        Path(args.emit_network).write_text(dump_network(emit_network(eq, net)), encoding="utf-8")


def _simulate(args, net, inputs, seed, report):
    if args.x0 not in net.states:
        raise UsageError(f"unknown state {args.x0!r}")
    est = estimate_hitting_prob(
        net, args.x0, samples=args.samples, seed=seed, chain_only=args.chain_only, workers=args.workers
    )
    report.kv("x0", args.x0)
    report.kv("estimate", est.value)
    report.kv("stderr", est.stderr)
    report.kv("samples", est.samples)
    report.kv("censored", est.censored)
    report.kv("killed", est.killed)
    if args.dump:
        traj = simulate_jump_process(net, args.x0, rng_seed=seed, chain_only=args.chain_only)
        Path(args.dump).write_text(dump_trajectory(traj), encoding="utf-8")


_HANDLERS = {
    "solve": _solve,
    "charges": _charges,
    "iterate": _iterate,
    "bounds": _bounds,
    "flow-check": _flow_check,
    "sample": _sample,
    "truncate-sweep": _truncate_sweep,
    "equiv": _equiv,
    "simulate": _simulate,
}


def main(argv=None) -> None:
    sys.exit(run(argv))

"""Shared networks and independent reference computations.

The oracles here deliberately avoid the package's own solvers: capacities
come from the Laplacian pseudo-inverse, hitting probabilities from the
fundamental matrix of the absorbed jump chain.
"""

from pathlib import Path

import numpy as np
import pytest

from capnet import Network, PartitionPair
from capnet.randomized import random_network

DATA = Path(__file__).parent / "data"

AB = PartitionPair(frozenset({"a"}), frozenset({"b"}))


def two_state(k=2.0):
    return Network.from_edges(["a", "b"], [("a", "b", k)], ab=AB)


def chain(kill=None):
    return Network.from_edges(["a", "m", "b"], [("a", "m", 1), ("m", "b", 1)], kill=kill, ab=AB)


def diamond():
    return Network.from_edges(
        ["a", "x", "y", "b"], [("a", "x", 1), ("a", "y", 1), ("x", "b", 1), ("y", "b", 1)], ab=AB
    )


def parallel3():
    edges = [("a", f"x{i}", 1.0) for i in (1, 2, 3)] + [(f"x{i}", "b", 1.0) for i in (1, 2, 3)]
    return Network.from_edges(["a", "x1", "x2", "x3", "b"], edges, ab=AB)


def series(resistances):
    n = len(resistances)
    states = ["a"] + [f"m{i}" for i in range(1, n)] + ["b"]
    edges = [(states[i], states[i + 1], 1.0 / r) for i, r in enumerate(resistances)]
    return Network.from_edges(states, edges, ab=AB)


def triangle_net():
    """a-b edge plus a triangle x, y, z hanging off a."""
    return Network.from_edges(
        ["a", "b", "x", "y", "z"],
        [("a", "b", 1), ("a", "x", 1), ("x", "y", 1), ("y", "z", 1), ("z", "x", 1)],
        ab=AB,
    )


def random_suite(n_networks=10, seed=2024):
    rng = np.random.default_rng(seed)
    return [random_network(rng) for _ in range(n_networks)]


def suite_networks():
    return [two_state(), chain(), diamond(), parallel3(), series([0.5, 0.5, 1]), *random_suite(6)]


# -- oracles -----------------------------------------------------------------


def laplacian(net):
    K = net.cond.toarray()
    return np.diag(K.sum(axis=1)) - K


def oracle_capacity(net, ab=None):
    """Effective conductance by contracting A and B and using the pseudo-inverse."""
    ab = ab or net.ab
    S = list(net.states)
    groups = {s: ("A" if s in ab.A else "B" if s in ab.B else s) for s in S}
    labels = sorted(set(groups.values()), key=lambda g: (g not in ("A", "B"), g))
    pos = {g: i for i, g in enumerate(labels)}
    K = net.cond.toarray()
    M = np.zeros((len(labels), len(labels)))
    for i, x in enumerate(S):
        for j, y in enumerate(S):
            gi, gj = pos[groups[x]], pos[groups[y]]
            if gi != gj:
                M[gi, gj] += K[i, j]
    L = np.diag(M.sum(axis=1)) - M
    e = np.zeros(len(labels))
    e[pos["A"]], e[pos["B"]] = 1.0, -1.0
    r = e @ np.linalg.pinv(L) @ e
    return 1.0 / r


def oracle_hitting(net, ab=None):
    """``P_x(tau_A < tau_B)`` (with killing) from the fundamental matrix."""
    ab = ab or net.ab
    K = net.cond.toarray()
    lam_mu = K.sum(axis=1) + net.mu * net.kill
    P = K / lam_mu[:, None]
    S = list(net.states)
    inner = [i for i, s in enumerate(S) if s not in ab.A and s not in ab.B]
    a_idx = [S.index(s) for s in ab.A]
    out = np.zeros(len(S))
    out[a_idx] = 1.0
    if inner:
        Q = P[np.ix_(inner, inner)]
        R = P[np.ix_(inner, a_idx)].sum(axis=1)
        out[inner] = np.linalg.solve(np.eye(len(inner)) - Q, R)
    return dict(zip(S, out))


@pytest.fixture
def data():
    return DATA


# -- acceptance summary ------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.skipped:
        return
    if rep.when == "call" or rep.failed:
        number, name = mark.args
        prev = _CRITERIA.get(number, (name, True))[1]
        _CRITERIA[number] = (name, prev and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {number:2d} {name}")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capnet import (
    FormatError,
    TruncationLadder,
    bk_flow_estimate,
    capacity,
    load_ladder,
    truncate,
    truncated_harmonic_flow,
    truncation_sweep,
    validate,
    validate_unit_flow,
)
from capnet.randomized import random_network
from conftest import chain, diamond, parallel3


class TestTruncate:
    def test_full_set_is_identity(self):
        net = diamond()
        out = truncate(net, net.states)
        assert (out.cond != net.cond).nnz == 0
        assert out.inert == frozenset()

    def test_branch_survives(self):
        out = truncate(parallel3(), {"a", "b", "x1"})
        assert {frozenset((x, y)) for x, y, _ in out.edges()} == {frozenset("a x1".split()), frozenset("x1 b".split())}
        assert out.inert == {"x2", "x3"}
        assert out.n == 5
        assert np.array_equal(out.mu, parallel3().mu)
        assert validate(out).ok

    def test_chain_to_boundary(self):
        out = truncate(chain(), {"a", "b"})
        assert out.cond.nnz == 0

    def test_missing_boundary(self):
        with pytest.raises(ValueError, match="A/B"):
            truncate(diamond(), {"a", "x"})


class TestSweep:
    def test_parallel3(self):
        ladder = TruncationLadder(({"a", "b", "x1"}, {"a", "b", "x1", "x2"}, {"a", "b", "x1", "x2", "x3"}))
        caps = [lv.cap for lv in truncation_sweep(parallel3(), ladder)]
        assert caps == pytest.approx([0.5, 1.0, 1.5], abs=1e-12)

    def test_single_level(self):
        net = diamond()
        (lv,) = truncation_sweep(net, TruncationLadder((set(net.states),)))
        assert lv.cap == pytest.approx(capacity(net).value, abs=1e-12)
        assert lv.level == 1 and lv.size == 4

    def test_diamond(self):
        caps = [lv.cap for lv in truncation_sweep(diamond(), TruncationLadder(({"a", "b", "x"}, set("axyb"))))]
        assert caps == pytest.approx([0.5, 1.0], abs=1e-12)

    def test_disconnected_level_is_zero(self):
        caps = [lv.cap for lv in truncation_sweep(chain(), TruncationLadder(({"a", "b"}, {"a", "m", "b"})))]
        assert caps == [0.0, pytest.approx(0.5)]

    def test_workers_keep_order(self):
        net = parallel3()
        ladder = TruncationLadder(({"a", "b"}, {"a", "b", "x1"}, {"a", "b", "x1", "x2"}, set(net.states)))
        assert truncation_sweep(net, ladder, workers=4) == truncation_sweep(net, ladder)

    def test_nesting_enforced(self):
        with pytest.raises(ValueError, match="contained"):
            TruncationLadder(({"a", "b", "x"}, {"a", "b", "y"}))

    def test_level_checks(self):
        with pytest.raises(ValueError, match="misses"):
            truncation_sweep(diamond(), TruncationLadder(({"a", "x"}, set("axyb"))))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_exhaustion(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng)
        order = list(net.ab.boundary) + [s for s in rng.permutation(net.states) if s not in net.ab.boundary]
        k = len(net.ab.boundary)
        ladder = TruncationLadder(tuple(set(order[: k + i]) for i in range(0, len(order) - k + 1)))
        caps = [lv.cap for lv in truncation_sweep(net, ladder)]
        assert all(b >= a - 1e-10 for a, b in zip(caps, caps[1:]))
        assert caps[-1] == pytest.approx(capacity(net).value, abs=1e-10)
        assert caps[-1] >= max(caps) - 1e-10


class TestTruncatedFlows:
    def test_parallel3(self):
        net = parallel3()
        for subset, expect in (({"a", "b", "x1"}, 0.5), ({"a", "b", "x1", "x2"}, 1.0)):
            cap_n, f = truncated_harmonic_flow(net, subset)
            assert cap_n == pytest.approx(expect, abs=1e-12)
            assert validate_unit_flow(net, f, loop_free=True).ok
            assert bk_flow_estimate(net, f).value == pytest.approx(cap_n, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng)
        interior = [s for s in net.states if s not in net.ab.boundary]
        subset = set(net.ab.boundary) | {s for s in interior if rng.random() < 0.6}
        cap_n = [lv.cap for lv in truncation_sweep(net, TruncationLadder((subset,)))][0]
        if cap_n == 0:
            return
        c, f = truncated_harmonic_flow(net, subset)
        assert c == pytest.approx(cap_n, abs=1e-12)
        assert validate_unit_flow(net, f, loop_free=True).ok
        assert bk_flow_estimate(net, f).value == pytest.approx(cap_n, abs=1e-10)


class TestLadderFile:
    def test_parse(self, data):
        ladder = load_ladder((data / "parallel3.ladder").read_text())
        assert len(ladder) == 3
        assert ladder.subsets[0] == {"a", "b", "x1"}

    def test_bad_line(self):
        with pytest.raises(FormatError, match="line 1"):
            load_ladder("levels a b\n")

    def test_not_nested(self):
        with pytest.raises(FormatError):
            load_ladder("level a b x\nlevel a b y\n")

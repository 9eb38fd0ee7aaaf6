import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capnet import (
    ConvergenceError,
    Network,
    Potential,
    UndeterminedPotentialError,
    UnsupportedCaseError,
    absorption_probability,
    capacity,
    dirichlet_energy,
    equilibrium_charges,
    iterate_minimal_solution,
    minimal_solution_iterates,
    solve_harmonic,
)
from capnet.randomized import random_admissible_potential, random_network
from conftest import AB, chain, diamond, oracle_capacity, oracle_hitting, suite_networks, triangle_net, two_state


class TestSolveHarmonic:
    def test_two_state(self):
        assert solve_harmonic(two_state()).as_dict() == {"a": 1.0, "b": 0.0}

    def test_chain(self):
        assert solve_harmonic(chain())["m"] == pytest.approx(0.5, abs=1e-15)

    def test_diamond(self):
        h = solve_harmonic(diamond())
        assert h["x"] == pytest.approx(0.5, abs=1e-15)
        assert h["y"] == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("net", suite_networks(), ids=lambda n: f"n{n.n}")
    def test_matches_fundamental_matrix(self, net):
        h = solve_harmonic(net).as_dict()
        ref = oracle_hitting(net)
        for s in net.states:
            assert h[s] == pytest.approx(ref[s], abs=1e-10)

    def test_floating_state(self):
        net = Network.from_edges(["a", "b", "u", "v"], [("a", "b", 1), ("u", "v", 1)], ab=AB)
        with pytest.raises(UndeterminedPotentialError) as exc:
            solve_harmonic(net)
        assert set(exc.value.states) == {"u", "v"}

    def test_refuses_killing(self):
        with pytest.raises(UnsupportedCaseError):
            solve_harmonic(chain(kill={"m": 1.0}))

    def test_needs_partition(self):
        net = Network.from_edges(["a", "b"], [("a", "b", 1)])
        with pytest.raises(ValueError):
            solve_harmonic(net)

    def test_pendant_component_is_exact(self):
        h = solve_harmonic(triangle_net())
        assert [h[s] for s in "xyz"] == [1.0, 1.0, 1.0]

    def test_large_sparse_path(self):
        n = 400
        states = ["a"] + [f"m{i}" for i in range(n)] + ["b"]
        net = Network.from_edges(states, [(states[i], states[i + 1], 1.0) for i in range(n + 1)], ab=AB)
        h = solve_harmonic(net)
        assert h["m0"] == pytest.approx(n / (n + 1), abs=1e-10)
        assert capacity(net).value == pytest.approx(1 / (n + 1), rel=1e-10)


class TestEnergyAndCapacity:
    def test_constant(self):
        assert dirichlet_energy(diamond(), np.full(4, 0.3)) == 0.0

    def test_single_edge(self):
        assert dirichlet_energy(two_state(), {"a": 1, "b": 0}) == 2.0

    def test_diamond_energy(self):
        assert dirichlet_energy(diamond(), {"a": 1, "x": 0.5, "y": 0.5, "b": 0}) == 1.0

    @pytest.mark.parametrize("net, cap", [(two_state(), 2.0), (chain(), 0.5), (diamond(), 1.0)])
    def test_capacity(self, net, cap):
        rep = capacity(net)
        assert rep.kind == "exact-dirichlet"
        assert rep.value == pytest.approx(cap, abs=1e-12)
        assert rep.residual <= 1e-10

    @pytest.mark.parametrize("net", suite_networks(), ids=lambda n: f"n{n.n}")
    def test_matches_pseudo_inverse(self, net):
        assert capacity(net).value == pytest.approx(oracle_capacity(net), rel=1e-10)

    def test_energy_refuses_killing(self):
        with pytest.raises(UnsupportedCaseError):
            dirichlet_energy(chain(kill={"m": 1.0}), [1, 0.5, 0])


class TestCharges:
    @pytest.mark.parametrize("net, q", [(two_state(), 2.0), (chain(), 0.5), (diamond(), 1.0)])
    def test_examples(self, net, q):
        c = equilibrium_charges(net, solve_harmonic(net))
        assert c.qa == pytest.approx(q, abs=1e-12)
        assert c.qb == pytest.approx(-q, abs=1e-12)

    @pytest.mark.parametrize("net", suite_networks(), ids=lambda n: f"n{n.n}")
    def test_identity(self, net):
        cap = capacity(net).value
        c = equilibrium_charges(net, solve_harmonic(net))
        assert abs(c.qa - cap) <= 1e-10 * cap
        assert abs(c.qb + cap) <= 1e-10 * cap


class TestMinimalSolution:
    def test_chain_one_update(self):
        it = minimal_solution_iterates(chain(), {"a"}, {"b"})
        next(it)
        assert next(it)[1] == 0.5
        assert next(it)[1] == 0.5

    def test_killed_chain(self):
        net = chain(kill={"m": 2.0})
        g = iterate_minimal_solution(net)
        g_ba = iterate_minimal_solution(net, AB.swapped())
        escape = 1.0 - absorption_probability(net, {"a", "b"})["m"]
        assert g["m"] == pytest.approx(0.25, abs=1e-15)
        assert g_ba["m"] == pytest.approx(0.25, abs=1e-15)
        assert escape == pytest.approx(0.5, abs=1e-15)
        assert abs((1 - g_ba["m"]) - (g["m"] + escape)) <= 1e-12

    @pytest.mark.parametrize("net", suite_networks(), ids=lambda n: f"n{n.n}")
    def test_matches_solver(self, net):
        tol = 1e-12
        g = iterate_minimal_solution(net, tol=tol).values
        h = solve_harmonic(net).values
        assert np.max(np.abs(g - h)) <= 10 * tol

    def test_killing_matches_oracle(self):
        rng = np.random.default_rng(5)
        base = random_network(rng, n_states=8)
        net = Network.from_edges(base.states, base.edges(), mu=base.mu, kill={"s3": 0.4, "s5": 1.1}, ab=base.ab)
        g = iterate_minimal_solution(net).as_dict()
        ref = oracle_hitting(net)
        for s in net.states:
            assert g[s] == pytest.approx(ref[s], abs=1e-10)

    def test_monotone(self):
        net = random_network(np.random.default_rng(11))
        it = minimal_solution_iterates(net, net.ab.A, net.ab.B)
        prev = next(it)
        for _ in range(200):
            cur = next(it)
            assert np.all(cur >= prev - 1e-15)
            prev = cur

    def test_convergence_error(self):
        states = ["a"] + [f"m{i}" for i in range(30)] + ["b"]
        net = Network.from_edges(states, [(states[i], states[i + 1], 1.0) for i in range(31)], ab=AB)
        with pytest.raises(ConvergenceError) as exc:
            iterate_minimal_solution(net, max_steps=5)
        assert exc.value.steps == 5
        assert exc.value.last_increment > 0


class TestPrinciples:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_max_principle_and_duality(self, seed):
        net = random_network(np.random.default_rng(seed))
        h = solve_harmonic(net).values
        g = solve_harmonic(net, net.ab.swapped()).values
        assert np.all((h >= 0) & (h <= 1))
        assert np.max(np.abs(h + g - 1.0)) <= 1e-10
        assert capacity(net).value == pytest.approx(capacity(net, net.ab.swapped()).value, abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_dirichlet_principle(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng)
        cap = capacity(net).value
        for _ in range(5):
            v = random_admissible_potential(net, rng)
            assert dirichlet_energy(net, v) >= cap - 1e-10

    def test_strict_unless_harmonic(self):
        net = diamond()
        h = solve_harmonic(net).values.copy()
        h[1] += 1e-3
        assert dirichlet_energy(net, h) > capacity(net).value


def test_potential_is_read_only():
    p = Potential(("a", "b"), [1.0, 0.0])
    with pytest.raises(ValueError):
        p.values[0] = 0.5

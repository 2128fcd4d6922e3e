import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import random_problem
from fluxanneal.errors import CapacityError, ContractViolation
from fluxanneal.ising import IsingProblem, energy, gen_uniform_spinglass
from fluxanneal.subsolvers import (
    MAX_BRUTE_SITES, SaParams, TabuParams, brute_force, simulated_annealing, solve, tabu_search,
)
from fluxanneal.subsolvers.base import finalize
from fluxanneal.subsolvers.brute import key_to_spins
from fluxanneal.subsolvers.tabu import effective_tenure


def test_brute_two_site_ferromagnet_prefers_smallest_key():
    res = brute_force(IsingProblem([[0, -1], [-1, 0]]))
    assert res.spins.tolist() == [1, 1]
    assert res.energy == -1.0 and res.backend == "brute"


def test_brute_single_site():
    assert brute_force(IsingProblem([[0.0]], [0.7])).spins.tolist() == [-1]
    assert brute_force(IsingProblem([[0.0]], [0.0])).spins.tolist() == [1]


def test_brute_capacity():
    n = MAX_BRUTE_SITES + 1
    P = IsingProblem.from_triplets(n, [0], [1], [1.0])
    with pytest.raises(CapacityError):
        brute_force(P)


def test_key_to_spins():
    assert key_to_spins(0, 3).tolist() == [1, 1, 1]
    assert key_to_spins(0b101, 3).tolist() == [-1, 1, -1]
    assert key_to_spins(0b100, 3).tolist() == [-1, 1, 1]


@pytest.mark.parametrize("seed", range(8))
def test_brute_returns_lexicographically_smallest_ground_state(seed):
    # integer couplings make degeneracies common
    rng = np.random.default_rng(seed)
    J = np.triu(rng.integers(-1, 2, (8, 8)), 1).astype(float)
    P = IsingProblem(J + J.T)
    configs = oracles.all_configs(8)
    E = oracles.energies_of(P.dense_couplings(), P.fields, configs)
    ground = configs[np.isclose(E, E.min())]
    keys = [int("".join("1" if v < 0 else "0" for v in s), 2) for s in ground]
    expected = ground[int(np.argmin(keys))]
    assert np.array_equal(brute_force(P).spins, expected)


def test_sa_frustrated_triangle():
    P = IsingProblem(np.ones((3, 3)) - np.eye(3))
    res = simulated_annealing(P, SaParams(sweeps=100, seed=0))
    assert res.energy == -1.0
    assert res.flips == 300


def test_sa_schedule_is_geometric():
    b = SaParams(sweeps=5, beta_initial=0.01, beta_final=1.0).betas()
    np.testing.assert_allclose(b, [0.01, 0.01 * 10**0.5, 0.1, 0.1 * 10**0.5, 1.0])


def test_sa_param_validation():
    with pytest.raises(ContractViolation):
        SaParams(sweeps=0)
    with pytest.raises(ContractViolation):
        SaParams(beta_initial=-1.0)


def test_tabu_tenure_rules():
    assert effective_tenure(20, 1) == 0
    assert effective_tenure(20, 8) == 3
    assert effective_tenure(5, 1000) == 5
    with pytest.raises(ContractViolation):
        TabuParams(tenure=-1)


def _uniform_suite(n, count, start):
    return [gen_uniform_spinglass(n, start + k) for k in range(count)]


@pytest.fixture(scope="module")
def n10_suite():
    suite = _uniform_suite(10, 100, 1000)
    return suite, [brute_force(P).energy for P in suite]


def _recovered(results, ground):
    return sum(r.energy <= g + 1e-9 for r, g in zip(results, ground))


def test_sa_recovers_ground_states(n10_suite, golden):
    suite, ground = n10_suite
    hits = _recovered([simulated_annealing(P, SaParams(seed=k)) for k, P in enumerate(suite)],
                      ground)
    assert hits >= max(85, golden["subsolver_recovery_n10"]["sa"] - 5)


def test_tabu_recovers_ground_states(n10_suite, golden):
    suite, ground = n10_suite
    hits = _recovered([tabu_search(P, TabuParams(seed=k)) for k, P in enumerate(suite)], ground)
    assert hits >= max(85, golden["subsolver_recovery_n10"]["tabu"] - 5)


def test_tabu_on_larger_instances():
    suite = [gen_uniform_spinglass(12 + k % 5, 5000 + k) for k in range(100)]
    ground = [brute_force(P).energy for P in suite]
    hits = _recovered([tabu_search(P, TabuParams(seed=k)) for k, P in enumerate(suite)], ground)
    assert hits >= 90


@pytest.mark.parametrize("backend", ["brute", "sa", "tabu"])
@given(seed=st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_never_worse_than_warm_start(backend, seed):
    P = random_problem(9, seed)
    ws = np.random.default_rng(seed).choice([-1, 1], 9)
    params = SaParams(sweeps=3, seed=seed) if backend == "sa" else None
    res = solve(P, backend, params=params, warm_start=ws)
    assert res.energy <= energy(P, ws) + 1e-12
    assert res.energy == pytest.approx(energy(P, res.spins), abs=1e-12)


def test_warm_start_returned_when_candidate_is_worse():
    P = random_problem(12, 3)
    ground = brute_force(P)
    res = finalize(P, -ground.spins if energy(P, -ground.spins) > ground.energy
                   else np.ones(12), "x", 0.0, warm_start=ground.spins)
    assert res.warm_start_used
    assert np.array_equal(res.spins, ground.spins) and res.energy == ground.energy


def test_sa_keeps_best_state_seen():
    P = random_problem(12, 3)
    ground = brute_force(P)
    # a hot constant-temperature sweep wanders off, but the start is remembered
    res = simulated_annealing(P, SaParams(sweeps=2, beta_initial=1e-3, beta_final=1e-3),
                              warm_start=ground.spins)
    assert res.energy == pytest.approx(ground.energy, abs=1e-12)


@pytest.mark.parametrize("backend", ["sa", "tabu"])
def test_deterministic_given_seed(backend):
    P = random_problem(30, 2)
    p1 = SaParams(sweeps=50, seed=4) if backend == "sa" else TabuParams(seed=4)
    a, b = solve(P, backend, p1), solve(P, backend, p1)
    assert np.array_equal(a.spins, b.spins) and a.energy == b.energy


@pytest.mark.parametrize("seed", range(10))
def test_brute_is_lower_bound(seed):
    P = random_problem(14, 77 + seed)
    ground = brute_force(P).energy
    for backend in ("sa", "tabu"):
        assert solve(P, backend).energy >= ground - 1e-12


def test_sparse_backends_agree_with_dense():
    D = random_problem(14, 8)
    S = IsingProblem(D.dense_couplings(), D.fields, sparse=True)
    assert brute_force(S).energy == pytest.approx(brute_force(D).energy, abs=1e-12)
    assert np.array_equal(tabu_search(S).spins, tabu_search(D).spins)


def test_unknown_backend():
    with pytest.raises(ContractViolation):
        solve(random_problem(3, 0), "qpu")
    with pytest.raises(ContractViolation):
        solve(random_problem(3, 0), "remote")

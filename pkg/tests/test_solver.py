import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from mutualctl.exceptions import DomainError, ExpressionEvaluationError, PreconditionError
from mutualctl.model import Constants, MutualControlProblem, Trajectory, TrajectoryPair
from mutualctl.solver import (SemigroupCache, apply_N, apply_N1, apply_N2, initial_pair,
                              perov_error_bound, picard_solve, recover_x0)


def problem(**kw):
    args = dict(n=1, T=1.0, k=1.0, A=[[0.0]], B=[[0.0]], f=["0"], g=["0"], beta=[0.0],
                lipschitz=Constants(0, 0, 0, 0))
    args.update(kw)
    return MutualControlProblem(**args)


def random_pair(p, m, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.uniform(-1, 1, (m + 1, p.n))
    y[0] = p.beta
    return TrajectoryPair(Trajectory(p.T, rng.uniform(-1, 1, (m + 1, p.n))),
                          Trajectory(p.T, y))


def coupled_linear():
    # x' = -x + 0.2 y, y' = -0.5 y + 0.1 x; closed form through expm
    p = MutualControlProblem(n=1, T=1.0, k=2.0, A=[[1.0]], B=[[0.5]], f=["0.2*y1"],
                             g=["0.1*x1"], beta=[1.0], lipschitz=Constants(0, 0.2, 0.1, 0))
    Phi = scipy.linalg.expm(np.array([[-1.0, 0.2], [0.1, -0.5]]))
    x0 = (2 * Phi[1, 1] - Phi[0, 1]) / (Phi[0, 0] - 2 * Phi[1, 0])
    return p, x0


def test_cache_tables(sinpair):
    cache = SemigroupCache(sinpair, 50)
    for S, Sinv in zip(cache.SA, cache.SA_inv):
        np.testing.assert_allclose(S @ Sinv, np.eye(1), atol=1e-10)
    assert cache.SB[-1][0, 0] == pytest.approx(math.exp(-1.0))
    assert cache.step == pytest.approx(0.02)
    with pytest.raises(DomainError):
        SemigroupCache(sinpair, 1)


def test_N1_linear_closed_form(linear):
    cache = SemigroupCache(linear, 100)
    x = apply_N1(linear, random_pair(linear, 100), cache)
    t = cache.times
    np.testing.assert_allclose(x.values[:, 0], 2 * np.exp(-(t - 1)) * math.exp(-0.5),
                               rtol=1e-13)
    assert x.values[0, 0] == pytest.approx(2 * math.exp(0.5), rel=1e-14)


def test_N1_zero_data_is_zero():
    p = problem(beta=[0.0])
    cache = SemigroupCache(p, 20)
    assert np.all(apply_N1(p, random_pair(p, 20), cache).values == 0)


def test_terminal_condition_built_in(sinpair):
    for seed in range(5):
        cache = SemigroupCache(sinpair, 64)
        new = apply_N(sinpair, random_pair(sinpair, 64, seed), cache)
        assert new.x.values[-1] == pytest.approx(sinpair.k * new.y.values[-1], abs=1e-10)
        assert np.array_equal(new.y.values[0], sinpair.beta)


def test_N2_examples(linear):
    cache = SemigroupCache(linear, 40)
    y = apply_N2(linear, random_pair(linear, 40), cache)
    np.testing.assert_allclose(y.values[:, 0], np.exp(-0.5 * cache.times), rtol=1e-14)
    p = problem(g=["1"], beta=[0.0])
    cache = SemigroupCache(p, 10)
    y = apply_N2(p, random_pair(p, 10), cache)
    np.testing.assert_allclose(y.values[:, 0], cache.times, atol=1e-15)


def test_N2_matches_quadrature_oracle():
    # from the pair x = cos(t), y = S_B(t) beta the y-update is an integral
    # of a smooth function; compare with adaptive quadrature at every node
    p = MutualControlProblem(n=1, T=1.0, k=1.0, A=[[1.0]], B=[[1.0]], f=["0.1*sin(y1)"],
                             g=["0.1*sin(x1)"], beta=[1.0])
    errors = []
    for m in (100, 200):
        cache = SemigroupCache(p, m)
        t = cache.times
        pair = TrajectoryPair(Trajectory(1.0, np.cos(t)), Trajectory(1.0, np.exp(-t)))
        y = apply_N2(p, pair, cache).values[:, 0]
        exact = np.array([math.exp(-ti) + scipy.integrate.quad(
            lambda s: math.exp(-(ti - s)) * 0.1 * math.sin(math.cos(s)), 0, ti,
            epsabs=1e-14, epsrel=1e-14)[0] for ti in t])
        errors.append(np.abs(y - exact).max())
    assert errors[0] < 1e-5
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)


def test_picard_linear(linear):
    pair, rep = picard_solve(linear, tol=1e-10, m=2000)
    assert rep.converged and rep.iterations <= 2
    assert rep.x0[0] == pytest.approx(2 * math.exp(0.5), abs=1e-12)
    assert rep.terminal_gap <= 1e-12


def test_picard_constant_source():
    p = problem(g=["1"], beta=[0.0])
    pair, rep = picard_solve(p, tol=1e-12, m=50)
    assert rep.converged
    np.testing.assert_allclose(pair.x.values[:, 0], 1.0, atol=1e-14)
    np.testing.assert_allclose(pair.y.values[:, 0], pair.times, atol=1e-14)
    assert rep.x0[0] == pytest.approx(1.0, abs=1e-14)
    assert rep.terminal_gap == pytest.approx(0.0, abs=1e-14)


def test_picard_sinpair_independent_of_start(sinpair):
    cache = SemigroupCache(sinpair, 2000)
    a, rep_a = picard_solve(sinpair, tol=1e-10, cache=cache,
                            initial=initial_pair(sinpair, cache, "zero"))
    ones = TrajectoryPair(Trajectory(1.0, np.ones(2001)), Trajectory(1.0, np.ones(2001)))
    b, rep_b = picard_solve(sinpair, tol=1e-10, cache=cache, initial=ones)
    assert rep_a.converged and rep_b.converged
    assert np.abs(a.x.values - b.x.values).max() <= 1e-8
    assert np.abs(a.y.values - b.y.values).max() <= 1e-8
    for rep in (rep_a, rep_b):
        assert rep.residual[0] <= 1e-10 and rep.residual[1] <= 1e-10
        assert rep.terminal_gap <= 1e-8
    assert abs(recover_x0(a, sinpair, cache)[0] - a.x.values[0, 0]) <= 1e-8


def test_picard_error_bound_and_heuristic_flag(sinpair):
    M = np.array([[0.754, 0.2746], [0.2746, 0.0]])
    _, rep = picard_solve(sinpair, tol=1e-6, m=200, contraction=M)
    assert not rep.heuristic and rep.error_bound is not None
    _, rep = picard_solve(sinpair, tol=1e-6, m=200)
    assert rep.heuristic and rep.error_bound is None


def test_picard_non_convergence_is_reported(sinpair):
    _, rep = picard_solve(sinpair, tol=1e-10, max_iterations=1, m=100)
    assert not rep.converged and rep.iterations == 1
    assert np.isfinite(rep.terminal_gap)


def test_picard_preconditions(sinpair):
    with pytest.raises(DomainError):
        picard_solve(sinpair, tol=0.0, m=10)
    cache = SemigroupCache(sinpair, 10)
    bad = TrajectoryPair(Trajectory(1.0, np.zeros(11)), Trajectory(1.0, np.zeros(11)))
    with pytest.raises(PreconditionError):
        picard_solve(sinpair, cache=cache, initial=bad)
    with pytest.raises(DomainError):
        picard_solve(sinpair, cache=cache, initial=random_pair(sinpair, 20))
    with pytest.raises(ValueError):
        initial_pair(sinpair, cache, "random")


def test_field_errors_carry_node():
    p = problem(f=["sqrt(0.5 - y1)"], beta=[0.0], g=["1"])
    cache = SemigroupCache(p, 10)
    pair = initial_pair(p, cache, "zero")
    y = pair.y.values.copy()
    y[7] = 1.0
    pair = TrajectoryPair(pair.x, Trajectory(1.0, y))
    with pytest.raises(ExpressionEvaluationError, match="component 1.*node 7"):
        apply_N(p, pair, cache)


def test_perov_error_bound_examples():
    assert perov_error_bound(np.eye(2) * 0.5, (0.0, 0.0)) == (0.0, 0.0)
    assert perov_error_bound(np.zeros((2, 2)), (3.0, 4.0)) == (0.0, 0.0)
    assert perov_error_bound([[0.5, 0], [0, 0.5]], (1.0, 1.0)) == pytest.approx((1.0, 1.0))
    with pytest.raises(PreconditionError):
        perov_error_bound(np.eye(2), (1.0, 1.0))


def test_recover_x0_examples(linear):
    cache = SemigroupCache(linear, 30)
    assert recover_x0(random_pair(linear, 30), linear, cache)[0] == \
        pytest.approx(2 * math.exp(0.5), rel=1e-14)
    p = problem()
    assert recover_x0(random_pair(p, 30), p, SemigroupCache(p, 30))[0] == 0.0


def test_contraction_observable(sinpair):
    c_A, c_B = sinpair.C_A, sinpair.C_B
    M = np.array([[c_A * 0.1 * c_B, c_A * 0.1], [0.1 * c_B, 0.0]])
    _, rep = picard_solve(sinpair, tol=1e-12, m=500, initial=None)
    r = np.array(rep.history)
    for prev, nxt in zip(r[:-1], r[1:]):
        assert np.all(nxt <= M @ prev + 1e-6)


def test_grid_convergence_order_two():
    p, exact = coupled_linear()
    errors = []
    for m in (250, 500, 1000, 2000):
        _, rep = picard_solve(p, tol=1e-13, m=m)
        assert rep.converged
        errors.append(abs(rep.x0[0] - exact))
    ratios = [a / b for a, b in zip(errors[:-1], errors[1:])]
    assert all(3.5 <= r <= 4.5 for r in ratios), (errors, ratios)
    assert errors[-1] < 1e-6


def test_two_dimensional_prey_demo():
    from mutualctl.demos import demo
    p, _ = demo("prey")
    pair, rep = picard_solve(p, tol=1e-10, m=400)
    assert rep.converged
    assert rep.terminal_gap <= 1e-12
    assert pair.x.values.shape == (401, 2)

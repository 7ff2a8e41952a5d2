"""Discretized fixed-point operators and Picard iteration.

The solution pair is a fixed point of (N1, N2) on X_beta::

    N1(x,y)(t) = k S_A(t-T) S_B(T) beta
                 + k int_0^T S_A(t-T) S_B(T-s) g(x(s),y(s)) ds
                 - int_t^T S_A(t-s) f(x(s),y(s)) ds
    N2(x,y)(t) = S_B(t) beta + int_0^t S_B(t-s) g(x(s),y(s)) ds

with S_A(t) = e^{-tA}. Integrals use the composite trapezoid rule on the
trajectory grid, and kernels are factored as S(t - s) = S(t) S(-s) so each
application costs O(m n^2).
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, ExpressionEvaluationError, PreconditionError
from .matops import expm_semigroup
from .model import Trajectory, TrajectoryPair, bielecki_norm
from .zeromat import is_zero_convergent


class SemigroupCache:
    """S_A(+-t_i), S_B(+-t_i) on the uniform grid t_i = i T / m."""

    def __init__(self, problem, m):
        m = int(m)
        if m < 2:
            raise DomainError("grid needs m >= 2 intervals")
        self.m = m
        self.T = problem.T
        self.times = np.linspace(0.0, problem.T, m + 1)
        self.SA = expm_semigroup(problem.A, self.times)
        self.SA_inv = expm_semigroup(problem.A, -self.times)
        self.SB = expm_semigroup(problem.B, self.times)
        self.SB_inv = expm_semigroup(problem.B, -self.times)

    @property
    def step(self):
        return self.T / self.m


def _check_grid(pair, cache):
    if pair.m != cache.m or pair.x.T != cache.T:
        raise DomainError(f"pair is on a grid with m={pair.m}, cache has m={cache.m}")


def _fields(p, pair):
    x = pair.x.values.T
    y = pair.y.values.T
    try:
        F = p.f(x, y)
        G = p.g(x, y)
    except ExpressionEvaluationError as exc:
        # locate the first failing node
        for i in range(pair.m + 1):
            try:
                p.f(x[:, i], y[:, i])
                p.g(x[:, i], y[:, i])
            except ExpressionEvaluationError:
                raise ExpressionEvaluationError(f"{exc} at node {i}") from None
        raise
    return F.T, G.T


def cumulative_trapezoid(values, h):
    """Running trapezoid integral from t_0; first entry is 0."""
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * h * (values[1:] + values[:-1]), axis=0)
    return out


def _pulled_back(p, pair, cache):
    """S_A(-s_j) f_j and S_B(-s_j) g_j at every node."""
    F, G = _fields(p, pair)
    FA = np.einsum("ijk,ik->ij", cache.SA_inv, F)
    GB = np.einsum("ijk,ik->ij", cache.SB_inv, G)
    return FA, GB


def _apply(p, pair, cache):
    _check_grid(pair, cache)
    FA, GB = _pulled_back(p, pair, cache)
    h = cache.step
    head_g = cumulative_trapezoid(GB, h)
    head_f = cumulative_trapezoid(FA, h)
    tail_f = head_f[-1] - head_f
    tail_f[-1] = 0.0
    y_end = p.beta + head_g[-1]
    base = p.k * cache.SA_inv[-1] @ (cache.SB[-1] @ y_end)
    x_new = np.einsum("ijk,ik->ij", cache.SA, base[None, :] - tail_f)
    y_new = np.einsum("ijk,ik->ij", cache.SB, p.beta[None, :] + head_g)
    y_new[0] = p.beta
    return x_new, y_new


def apply_N1(p, pair, cache):
    return Trajectory(p.T, _apply(p, pair, cache)[0])


def apply_N2(p, pair, cache):
    return Trajectory(p.T, _apply(p, pair, cache)[1])


def apply_N(p, pair, cache):
    x_new, y_new = _apply(p, pair, cache)
    return TrajectoryPair(Trajectory(p.T, x_new), Trajectory(p.T, y_new))


def recover_x0(pair, p, cache):
    """x(0) from the terminal condition, evaluated on the pair."""
    _check_grid(pair, cache)
    FA, GB = _pulled_back(p, pair, cache)
    h = cache.step
    full_g = cumulative_trapezoid(GB, h)[-1]
    full_f = cumulative_trapezoid(FA, h)[-1]
    return p.k * cache.SA_inv[-1] @ (cache.SB[-1] @ (p.beta + full_g)) - full_f


def perov_error_bound(M, residual):
    """(I - M)^{-1} M r: distance bound from the latest iterate to the fixed point."""
    M = np.asarray(M, dtype=float)
    if not is_zero_convergent(M):
        raise PreconditionError("M is not convergent to zero")
    r = np.asarray(residual, dtype=float)
    return tuple(np.linalg.solve(np.eye(2) - M, M @ r))


def initial_pair(p, cache, kind="free"):
    """Starting iterate: x = 0 and y the free flow S_B(t) beta (``"free"``),
    or x = y = 0 except y(0) = beta (``"zero"``)."""
    m = cache.m
    x = np.zeros((m + 1, p.n))
    if kind == "free":
        y = np.einsum("ijk,k->ij", cache.SB, p.beta)
    elif kind == "zero":
        y = np.zeros((m + 1, p.n))
    else:
        raise ValueError(f"unknown initial iterate {kind!r}")
    y[0] = p.beta
    return TrajectoryPair(Trajectory(p.T, x), Trajectory(p.T, y))


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    theta: float
    residual: tuple
    error_bound: tuple | None
    x0: np.ndarray
    terminal_gap: float
    regime: str
    heuristic: bool
    history: list = field(default_factory=list)


def picard_solve(p, theta=0.0, tol=1e-10, max_iterations=500, initial=None, cache=None,
                 m=2000, contraction=None, regime="perov"):
    """Successive approximations (x, y) <- (N1(x, y), N2(x, y)).

    Stops once ``(||dx||_0, ||dy||_theta) <= tol`` componentwise. When a
    zero-convergent ``contraction`` matrix is given, the report carries the
    a-posteriori error bound; without one the result is flagged heuristic.
    Non-convergence is reported, not raised.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if cache is None:
        cache = SemigroupCache(p, m)
    pair = initial if initial is not None else initial_pair(p, cache)
    _check_grid(pair, cache)
    pair.check_member(p.beta)

    history = []
    residual = (np.inf, np.inf)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        new = apply_N(p, pair, cache)
        residual = (
            float(np.max(np.linalg.norm(new.x.values - pair.x.values, axis=1))),
            bielecki_norm(Trajectory(p.T, new.y.values - pair.y.values), theta),
        )
        history.append(residual)
        pair = new
        if residual[0] <= tol and residual[1] <= tol:
            converged = True
            break

    bound = None
    usable = contraction is not None and is_zero_convergent(contraction)
    if usable and np.all(np.isfinite(residual)):
        bound = perov_error_bound(contraction, residual)
    gap = float(np.linalg.norm(pair.x.values[-1] - p.k * pair.y.values[-1]))
    report = SolveReport(converged, iterations, float(theta), residual, bound,
                         pair.x.values[0].copy(), gap, regime, heuristic=not usable,
                         history=history)
    return pair, report

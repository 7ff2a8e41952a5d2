"""Independent checks of a computed solution pair."""

from dataclasses import dataclass

import numpy as np

from .exceptions import BlowUpError, DomainError, ExpressionEvaluationError
from .model import Trajectory, TrajectoryPair
from .solver import SemigroupCache, _check_grid, _pulled_back, cumulative_trapezoid, recover_x0


def rk4_integrate(p, x0, m):
    """Classical RK4 for x' = -Ax + f(x, y), y' = -By + g(x, y) from (x0, beta)."""
    m = int(m)
    if m < 2:
        raise DomainError("rk4_integrate needs m >= 2")
    n = p.n
    h = p.T / m
    A, B = p.A, p.B

    def rhs(z):
        x, y = z[:n], z[n:]
        return np.concatenate([-A @ x + p.f(x, y), -B @ y + p.g(x, y)])

    z = np.concatenate([np.asarray(x0, dtype=float), p.beta])
    out = np.empty((m + 1, 2 * n))
    out[0] = z
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(m):
            try:
                k1 = rhs(z)
                k2 = rhs(z + 0.5 * h * k1)
                k3 = rhs(z + 0.5 * h * k2)
                k4 = rhs(z + h * k3)
            except ExpressionEvaluationError as exc:
                raise ExpressionEvaluationError(f"{exc} at node {i}") from None
            z = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(z)):
                raise BlowUpError(i + 1)
            out[i + 1] = z
    out[0, n:] = p.beta
    return TrajectoryPair(Trajectory(p.T, out[:, :n]), Trajectory(p.T, out[:, n:]))


@dataclass(frozen=True)
class VerificationReport:
    ode_deviation: float
    integral_residual: tuple
    terminal_gap: float
    m: int
    refine: int = 1

    def passed(self, tol):
        return (self.terminal_gap <= tol and self.integral_residual[0] <= tol
                and self.integral_residual[1] <= tol)


def integral_residuals(pair, p, cache):
    """Max node defect of the two Volterra equations with x(0) = pair.x(t_0)."""
    _check_grid(pair, cache)
    FA, GB = _pulled_back(p, pair, cache)
    h = cache.step
    x_rhs = np.einsum("ijk,ik->ij", cache.SA,
                      pair.x.values[0][None, :] + cumulative_trapezoid(FA, h))
    y_rhs = np.einsum("ijk,ik->ij", cache.SB, p.beta[None, :] + cumulative_trapezoid(GB, h))
    rx = float(np.max(np.linalg.norm(pair.x.values - x_rhs, axis=1)))
    ry = float(np.max(np.linalg.norm(pair.y.values - y_rhs, axis=1)))
    return rx, ry


def residual_report(pair, p, cache=None, refine=1):
    """Integral-equation residuals, terminal gap and RK4 cross-check.

    The RK4 reference starts from the x(0) recovered through the terminal
    condition and runs on a grid ``refine`` times finer; deviations are
    taken at the pair's nodes.
    """
    if cache is None:
        cache = SemigroupCache(p, pair.m)
    refine = int(refine)
    if refine < 1:
        raise DomainError("refine must be >= 1")
    residual = integral_residuals(pair, p, cache)
    gap = float(np.linalg.norm(pair.x.values[-1] - p.k * pair.y.values[-1]))
    x0 = recover_x0(pair, p, cache)
    ref = rk4_integrate(p, x0, pair.m * refine)
    dx = ref.x.values[::refine] - pair.x.values
    dy = ref.y.values[::refine] - pair.y.values
    deviation = float(max(np.abs(dx).max(), np.abs(dy).max()))
    return VerificationReport(deviation, residual, gap, pair.m, refine)

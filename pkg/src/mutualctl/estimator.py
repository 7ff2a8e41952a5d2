"""scikit-learn style front end: configure with hyperparameters, ``fit`` a
problem, then query the solution."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError
from .model import MutualControlProblem, classify
from .solver import SemigroupCache, initial_pair, picard_solve
from .verify import residual_report
from .zeromat import build_M, is_zero_convergent


class MutualControlSolver(BaseEstimator):
    """Classify a mutual control problem and solve it by Picard iteration.

    Parameters
    ----------
    grid : int
        Number of grid intervals m on [0, T].
    tol : float
        Stopping tolerance on the residual pair (||dx||_0, ||dy||_theta).
    max_iter : int
        Iteration cap; hitting it leaves ``converged_`` False.
    theta : float or None
        Bielecki exponent. None picks the one found by the regime analysis.
    init : {"free", "zero"}
        Starting iterate, see :func:`mutualctl.solver.initial_pair`.
    random_state : int
        Seed for the sampled constant estimates.

    Attributes
    ----------
    regime_report_ : RegimeReport
    regime_ : str
    theta_ : float
    trajectories_ : TrajectoryPair
    solve_report_ : SolveReport
    x0_ : ndarray of shape (n,)
    converged_ : bool
    n_iter_ : int
    """

    def __init__(self, grid=2000, tol=1e-10, max_iter=500, theta=None, init="free",
                 random_state=0):
        self.grid = grid
        self.tol = tol
        self.max_iter = max_iter
        self.theta = theta
        self.init = init
        self.random_state = random_state

    def _validate_params(self):
        if int(self.grid) < 2:
            raise DomainError("grid must be >= 2")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if int(self.max_iter) < 1:
            raise DomainError("max_iter must be >= 1")
        if self.theta is not None and not self.theta >= 0:
            raise DomainError("theta must be >= 0")

    def fit(self, problem, initial=None):
        if not isinstance(problem, MutualControlProblem):
            raise TypeError("fit expects a MutualControlProblem")
        self._validate_params()
        report = classify(problem, self.random_state)
        regime, theta = report.preferred()
        if self.theta is not None:
            theta = float(self.theta)

        contraction = None
        if report.perov.coefficients is not None:
            M = build_M(report.perov.coefficients, theta)
            if is_zero_convergent(M):
                contraction = M

        cache = SemigroupCache(problem, int(self.grid))
        if initial is None:
            initial = initial_pair(problem, cache, self.init)
        pair, solve_report = picard_solve(
            problem, theta, self.tol, int(self.max_iter), initial=initial, cache=cache,
            contraction=contraction, regime=regime)

        self.problem_ = problem
        self.cache_ = cache
        self.regime_report_ = report
        self.regime_ = regime
        self.theta_ = theta
        self.trajectories_ = pair
        self.solve_report_ = solve_report
        self.x0_ = solve_report.x0
        self.converged_ = solve_report.converged
        self.n_iter_ = solve_report.iterations
        return self

    def predict(self, t):
        """Piecewise-linear (x(t), y(t)) as an array of shape (len(t), 2n)."""
        check_is_fitted(self)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        T = self.problem_.T
        if np.any(t < 0) or np.any(t > T) or not np.all(np.isfinite(t)):
            raise DomainError(f"t must lie in [0, {T}]")
        grid = self.trajectories_.times
        values = np.hstack([self.trajectories_.x.values, self.trajectories_.y.values])
        return np.column_stack([np.interp(t, grid, col) for col in values.T])

    def verify(self, refine=1):
        check_is_fitted(self)
        return residual_report(self.trajectories_, self.problem_, self.cache_, refine)

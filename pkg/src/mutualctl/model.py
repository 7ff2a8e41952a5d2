"""Problem statement, grid trajectories, Bielecki norms and the
classification of a problem into the Perov / Schauder / Avramescu regimes.

The system is::

    x' + A x = f(x, y),   y' + B y = g(x, y)   on [0, T],
    y(0) = beta,          x(T) = k y(T).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_positive, check_square, check_vector
from .exceptions import ConfigurationError, DomainError, PreconditionError
from .matops import growth_bound
from .vexpr import (DEFAULT_BOX_RADIUS, DEFAULT_SAMPLES, VectorField, estimate_growth,
                    estimate_lipschitz)
from .zeromat import CoefficientSet, build_M, find_theta, is_zero_convergent, phi_minus


@dataclass(frozen=True)
class Constants:
    """Constants for f (a, b, gamma) and g (c, d, delta).

    As Lipschitz constants gamma and delta are unused. ``certified`` is
    False for constants obtained by sampling.
    """

    a: float
    b: float
    c: float
    d: float
    gamma: float = 0.0
    delta: float = 0.0
    certified: bool = True
    source: str = "user"

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "gamma", "delta"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"constant {name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True, eq=False)
class MutualControlProblem:
    n: int
    T: float
    k: float
    A: np.ndarray
    B: np.ndarray
    f: VectorField
    g: VectorField
    beta: np.ndarray
    lipschitz: Constants | None = None
    growth: Constants | None = None
    box_radius: float = DEFAULT_BOX_RADIUS
    samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise DomainError("n must be >= 1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "T", check_positive(self.T, "T"))
        object.__setattr__(self, "k", check_positive(self.k, "k"))
        for name in ("A", "B"):
            M = check_square(getattr(self, name), name)
            if M.shape != (n, n):
                raise DomainError(f"{name} must be {n}x{n}, got {M.shape}")
            object.__setattr__(self, name, M)
        for name in ("f", "g"):
            fld = getattr(self, name)
            if not isinstance(fld, VectorField):
                fld = VectorField(fld, n)
            if fld.n != n:
                raise DomainError(f"{name} has {fld.n} components, expected {n}")
            object.__setattr__(self, name, fld)
        object.__setattr__(self, "beta", check_vector(self.beta, n, "beta"))

    @cached_property
    def C_A(self):
        return growth_bound(self.A, self.T).value

    @cached_property
    def C_B(self):
        return growth_bound(self.B, self.T).value

    def times(self, m):
        return np.linspace(0.0, self.T, m + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Values of a curve in R^n at the nodes t_i = i T / m, i = 0..m."""

    T: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 3:
            raise DomainError("a trajectory needs at least 3 nodes (m >= 2)")
        if not np.all(np.isfinite(values)):
            raise DomainError("trajectory has non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return self.values.shape[0] - 1

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.m + 1)


@dataclass(frozen=True, eq=False)
class TrajectoryPair:
    x: Trajectory
    y: Trajectory

    def __post_init__(self):
        if self.x.values.shape != self.y.values.shape or self.x.T != self.y.T:
            raise DomainError("x and y must live on the same grid")

    @property
    def m(self):
        return self.x.m

    @property
    def times(self):
        return self.x.times

    def check_member(self, beta):
        """Raise unless y(0) = beta exactly."""
        if not np.array_equal(self.y.values[0], np.asarray(beta, dtype=float)):
            raise PreconditionError("pair is not in X_beta: y(0) != beta")


def _row_norms(values):
    # Euclidean norm per node, rescaled so tiny entries do not underflow
    scale = np.max(np.abs(values), axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.linalg.norm(values / safe[:, None], axis=1)


def bielecki_norm(u, theta):
    """max_i e^{-theta t_i} |u(t_i)| with the Euclidean norm on R^n."""
    theta = float(theta)
    if not theta >= 0:
        raise DomainError("theta must be >= 0")
    weights = np.exp(-theta * u.times)
    return float(np.max(weights * _row_norms(u.values)))


def derive_coefficients(p, constants):
    """Coefficients of the contraction matrix for the given constants."""
    if constants is None:
        raise ConfigurationError("no constants available and estimation disabled")
    return CoefficientSet.from_constants(constants.a, constants.b, constants.c,
                                         constants.d, p.k, p.C_A, p.C_B, p.T)


def schauder_radii(c, theta, beta, gamma, delta, k, C_A, C_B):
    """Radii (R1, R2) of an invariant ball, (I - M(theta))^{-1} (eta1, eta2)."""
    M = build_M(c, theta)
    if not is_zero_convergent(M):
        raise PreconditionError("M(theta) is not convergent to zero")
    T = c.T
    beta_norm = float(np.linalg.norm(np.atleast_1d(beta)))
    eta1 = C_A * (k * C_B * beta_norm + k * T * C_B * delta + T * gamma)
    eta2 = C_B * beta_norm + T * C_B * delta
    (m11, m12), (m21, m22) = M
    det = (1.0 - m11) * (1.0 - m22) - m12 * m21
    r1 = ((1.0 - m22) * eta1 + m12 * eta2) / det
    r2 = (m21 * eta1 + (1.0 - m11) * eta2) / det
    return float(r1), float(r2)


@dataclass(frozen=True)
class RegimeResult:
    feasible: bool
    theta: float | None
    reason: str
    coefficients: CoefficientSet | None = None
    analysis: object = None
    constants: Constants | None = None
    radii: tuple | None = None
    contraction: float | None = None


@dataclass(frozen=True)
class RegimeReport:
    perov: RegimeResult
    schauder: RegimeResult
    avramescu: RegimeResult
    C_A: float
    C_B: float
    certified: bool
    notes: list = field(default_factory=list)

    @property
    def any_feasible(self):
        return self.perov.feasible or self.schauder.feasible or self.avramescu.feasible

    def preferred(self):
        """(regime name, theta) to drive the solver; Perov first."""
        for name in ("perov", "schauder", "avramescu"):
            result = getattr(self, name)
            if result.feasible:
                return name, result.theta
        return "none", 0.0


def lipschitz_constants(p, random_state=0):
    if p.lipschitz is not None:
        return p.lipschitz
    ef = estimate_lipschitz(p.f, p.box_radius, p.samples, random_state)
    eg = estimate_lipschitz(p.g, p.box_radius, p.samples, random_state + 1)
    return Constants(ef.a, ef.b, eg.a, eg.b, certified=False, source="sampled")


def growth_candidates(p, lipschitz, random_state=0):
    """Growth constants to try, most trusted first."""
    if p.growth is not None:
        return [p.growth]
    zero = np.zeros(p.n)
    gamma = float(np.linalg.norm(p.f(zero, zero)))
    delta = float(np.linalg.norm(p.g(zero, zero)))
    # |f(x,y)| <= |f(0,0)| + a|x| + b|y| whenever f is Lipschitz
    derived = Constants(lipschitz.a, lipschitz.b, lipschitz.c, lipschitz.d, gamma, delta,
                        certified=lipschitz.certified, source=f"{lipschitz.source}+lipschitz")
    if lipschitz.source == "user":
        return [derived]
    ef = estimate_growth(p.f, p.box_radius, p.samples, random_state + 2)
    eg = estimate_growth(p.g, p.box_radius, p.samples, random_state + 3)
    sampled = Constants(ef.a, ef.b, eg.a, eg.b, ef.gamma, eg.gamma, certified=False,
                        source="sampled")
    return [derived, sampled]


def _theta_result(coefficients, constants):
    analysis = find_theta(coefficients)
    return analysis, RegimeResult(analysis.feasible, analysis.theta_star,
                                  f"{analysis.classification}: {analysis.reason}",
                                  coefficients, analysis, constants)


def classify(p, random_state=0):
    """Check the hypotheses of the three existence theorems for ``p``.

    User-supplied constants take precedence; missing ones are estimated by
    sampling, in which case the report is marked uncertified.
    """
    lip = lipschitz_constants(p, random_state)
    perov_c = derive_coefficients(p, lip)
    _, perov = _theta_result(perov_c, lip)

    candidates = growth_candidates(p, lip, random_state)
    schauder = None
    for growth in candidates:
        analysis, result = _theta_result(derive_coefficients(p, growth), growth)
        if analysis.feasible:
            radii = schauder_radii(result.coefficients, analysis.theta_star, p.beta,
                                   growth.gamma, growth.delta, p.k, p.C_A, p.C_B)
            schauder = RegimeResult(True, analysis.theta_star, result.reason,
                                    result.coefficients, analysis, growth, radii=radii)
            break
        schauder = schauder or result
    growth = schauder.constants

    # Avramescu: growth bounds on f and on g(., 0), g Lipschitz in y
    avr_constants = Constants(growth.a, growth.b, growth.c, lip.d, growth.gamma,
                              growth.delta, certified=growth.certified and lip.certified,
                              source=growth.source)
    analysis, result = _theta_result(derive_coefficients(p, avr_constants), avr_constants)
    if analysis.feasible:
        factor = lip.d * p.C_B * phi_minus(analysis.theta_star, p.T)
        ok = factor < 1
        reason = (f"{result.reason}; contraction factor of N2(x, .) = {factor:.6g}; "
                  "continuity/compactness of N1 not checked numerically")
        avramescu = RegimeResult(ok, analysis.theta_star, reason, result.coefficients,
                                 analysis, avr_constants, contraction=factor)
    else:
        avramescu = result

    certified = lip.certified and growth.certified
    notes = []
    if not certified:
        notes.append("constants estimated by sampling on a box; classification is heuristic")
    return RegimeReport(perov, schauder, avramescu, p.C_A, p.C_B, certified, notes)

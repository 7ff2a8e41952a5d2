"""The 2x2 contraction matrix M(theta) and the search for a Bielecki
exponent theta that makes it convergent to zero.

With phi_plus(theta) = (e^{theta T} - 1)/theta and
phi_minus(theta) = (1 - e^{-theta T})/theta (both equal to T at theta = 0)::

    M(theta) = [[a11, a12 * phi_plus(theta)],
                [a21, a22 * phi_minus(theta)]]

A nonnegative 2x2 matrix is convergent to zero iff its diagonal entries
are below one and ``h = tr - 1 - det < 0``. For a11 < 1 and 0 < a22 < 1/T,
``h`` is convex in theta, so the feasible exponents form an interval around
the minimizer of ``h``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_nonnegative, check_positive
from .exceptions import DomainError, PreconditionError

THETA_MAX_FACTOR = 50.0
THETA_XTOL = 1e-10
_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 18


class Classification(str, enum.Enum):
    CONVERGENT_AT_ZERO = "ConvergentAtZero"
    CONVERGENT_ON_INTERVAL = "ConvergentOnInterval"
    INFEASIBLE = "Infeasible"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CoefficientSet:
    """Nonnegative coefficients of M(theta) and the horizon T."""

    a11: float
    a12: float
    a21: float
    a22: float
    T: float

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            object.__setattr__(self, name, check_nonnegative(getattr(self, name), name))
        object.__setattr__(self, "T", check_positive(self.T, "T"))

    @classmethod
    def from_constants(cls, a, b, c, d, k, C_A, C_B, T):
        """Composite coefficients of the Lipschitz/growth contraction matrix."""
        C_A, C_B = float(C_A), float(C_B)
        return cls(
            a11=T * C_A * (a + k * c * C_B),
            a12=C_A * (b + k * d * C_B),
            a21=c * T * C_B,
            a22=d * C_B,
            T=T,
        )

    @property
    def tau(self):
        return self.a22 * (1.0 - self.a11) - self.a12 * self.a21

    @property
    def product(self):
        return self.a12 * self.a21

    def as_tuple(self):
        return (self.a11, self.a12, self.a21, self.a22)


@dataclass(frozen=True)
class ThetaAnalysis:
    classification: Classification
    theta_star: float | None
    interval: tuple | None
    h_at_zero: float
    theta_min: float | None = None
    h_at_min: float | None = None
    used_tilde: bool = False
    reason: str = ""

    @property
    def feasible(self):
        return self.classification is not Classification.INFEASIBLE


def _phi(u, T):
    # T (e^u - 1) / u; the series avoids dividing by a subnormal theta
    if abs(u) < 1e-6:
        return T * (1.0 + u / 2.0 + u * u / 6.0)
    return T * math.expm1(u) / u


def phi_plus(theta, T):
    return _phi(float(theta) * T, float(T))


def phi_minus(theta, T):
    return _phi(-float(theta) * T, float(T))


def build_M(c, theta):
    theta = check_nonnegative(theta, "theta")
    return np.array([
        [c.a11, c.a12 * phi_plus(theta, c.T)],
        [c.a21, c.a22 * phi_minus(theta, c.T)],
    ])


def build_M_tilde(c, theta):
    """Entrywise upper bound of M(theta) with phi_minus replaced by 1/theta."""
    theta = float(theta)
    if not theta > 0:
        raise DomainError("M_tilde is only defined for theta > 0")
    return np.array([
        [c.a11, c.a12 * phi_plus(theta, c.T)],
        [c.a21, c.a22 / theta],
    ])


def is_zero_convergent(M):
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {M.shape}")
    if np.any(M < 0):
        raise DomainError("is_zero_convergent needs nonnegative entries")
    m11, m12, m21, m22 = M.ravel()
    return bool(m11 < 1 and m22 < 1 and m11 + m22 < 1 + m11 * m22 - m12 * m21)


# psi(u) = e^u (u - 1) + 1 = sum_{k>=2} (k-1) u^k / k!
def _psi(u):
    if abs(u) < _SERIES_CUTOFF:
        term, total = u, 0.0
        for k in range(2, _SERIES_TERMS):
            term *= u / k
            total += (k - 1) * term
        return total
    return math.exp(u) * (u - 1.0) + 1.0


def h(c, theta):
    """tr(M) - 1 - det(M); negative iff M(theta) is convergent to zero
    (given a11 < 1 and a22 * phi_minus < 1)."""
    theta = check_nonnegative(theta, "theta")
    if theta == 0.0:
        return -(1.0 - c.a11) * (1.0 - c.a22 * c.T) + c.product * c.T
    return (c.a11 - 1.0
            + (1.0 - c.a11) * c.a22 * phi_minus(theta, c.T)
            + c.product * phi_plus(theta, c.T))


def _h_prime_numerator(c, theta):
    # theta^2 h'(theta), evaluated without cancellation near 0
    u = theta * c.T
    return c.product * _psi(u) - (1.0 - c.a11) * c.a22 * _psi(-u)


def h_prime(c, theta):
    """Derivative of h. At theta = 0 returns the limit -tau T^2 / 2."""
    theta = check_nonnegative(theta, "theta")
    if theta == 0.0:
        return -c.tau * c.T ** 2 / 2.0
    return _h_prime_numerator(c, theta) / theta ** 2


def h_second(c, theta):
    theta = check_nonnegative(theta, "theta")
    T = c.T
    u = theta * T
    if u < _SERIES_CUTOFF:
        # sum_{k>=3} (+-1)^k T^k (k-1)(k-2) theta^{k-3} / k!
        plus = minus = 0.0
        for k in range(3, _SERIES_TERMS):
            term = T ** k * (k - 1) * (k - 2) * theta ** (k - 3) / math.factorial(k)
            plus += term
            minus += term if k % 2 else -term
        return c.product * plus + (1.0 - c.a11) * c.a22 * minus

    def varphi(s):
        return math.exp(s * T) * ((s * T - 1.0) ** 2 + 1.0)

    return (2.0 * c.tau + c.product * varphi(theta)
            - c.a22 * (1.0 - c.a11) * varphi(-theta)) / theta ** 3


def h_tilde(c, theta):
    theta = float(theta)
    if not theta > 0:
        raise DomainError("h_tilde cannot be evaluated at theta <= 0")
    return (c.a11 - 1.0 + (1.0 - c.a11) * c.a22 / theta
            + c.product * phi_plus(theta, c.T))


def lambert_w0(z, max_iter=100):
    """Principal Lambert W on [0, inf): the w >= 0 with w e^w = z.

    Halley iteration started from log1p(z) for small z and from the
    asymptotic log z - log log z otherwise.
    """
    z = float(z)
    if not z >= 0 or math.isinf(z):
        raise DomainError(f"lambert_w0 needs a finite z >= 0, got {z}")
    if z == 0.0:
        return 0.0
    if z < math.e:
        w = math.log1p(z) * (1.0 - math.log1p(math.log1p(z)) / (2.0 + math.log1p(z)))
    else:
        lz = math.log(z)
        w = lz - math.log(lz)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - z
        fp = ew * (w + 1.0)
        step = f / (fp - (w + 2.0) * f / (2.0 * w + 2.0))
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


def theta1_tilde(c):
    """Closed-form minimizer of h_tilde and whether M_tilde is convergent there.

    Returns ``(theta1, feasible)`` where feasible means
    a12 a21 T e^{theta1 T} < 1 - a11, i.e. h_tilde(theta1) < 0.
    """
    if not c.a11 < 1:
        raise PreconditionError(f"a11 < 1 is required, got a11={c.a11}")
    if not c.product > 0:
        raise PreconditionError("a12*a21 > 0 is required for a finite minimizer")
    tau = c.tau
    if not tau > 0:
        raise PreconditionError(
            f"tau = a22(1-a11) - a12*a21 > 0 is required, got tau={tau}")
    theta1 = (lambert_w0(tau / (math.e * c.product)) + 1.0) / c.T
    feasible = c.product * c.T * math.exp(theta1 * c.T) < 1.0 - c.a11
    return theta1, bool(feasible)


def _bisect(fn, lo, hi, xtol=THETA_XTOL, lo_negative=None):
    """Sign change of fn on [lo, hi].

    ``lo_negative`` states the sign just right of ``lo`` when fn(lo) itself
    is zero or unreliable.
    """
    if lo_negative is None:
        lo_negative = fn(lo) < 0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if (fn(mid) < 0) == lo_negative:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _infeasible(h0, reason, **kw):
    return ThetaAnalysis(Classification.INFEASIBLE, None, None, h0, reason=reason, **kw)


def find_theta(c, method="exact"):
    """Search for theta >= 0 with M(theta) convergent to zero.

    ``method="exact"`` minimizes h itself (root of h' by bisection);
    ``method="tilde"`` uses the closed-form minimizer of h_tilde instead,
    which is cheaper but may miss feasible problems.
    """
    if method not in ("exact", "tilde"):
        raise ValueError(f"unknown method {method!r}")
    T = c.T
    h0 = h(c, 0.0)
    if not c.a11 < 1:
        return _infeasible(h0, f"a11 = {c.a11:.6g} >= 1")
    if not c.a22 < 1.0 / T:
        return _infeasible(h0, f"a22 = {c.a22:.6g} >= 1/T = {1.0 / T:.6g}")
    if h0 < 0:
        return ThetaAnalysis(Classification.CONVERGENT_AT_ZERO, 0.0, None, h0,
                             reason="h(0) < 0")
    if c.a22 == 0:
        # h is increasing in theta, theta -> 0 is the best case
        return _infeasible(h0, "a22 = 0 and a12*a21*T >= 1 - a11")
    if c.tau <= 0:
        # h' > 0 on (0, inf): h is minimized at theta = 0
        return _infeasible(h0, "tau <= 0, h is nondecreasing and h(0) >= 0")

    theta_max = THETA_MAX_FACTOR / T
    if method == "tilde":
        return _find_theta_tilde(c, h0, theta_max)

    def numerator(t):
        return _h_prime_numerator(c, t)

    if numerator(theta_max) <= 0:
        theta_min = theta_max
    else:
        theta_min = _bisect(numerator, 0.0, theta_max, lo_negative=True)
    h_min = h(c, theta_min)
    if not h_min < 0:
        return _infeasible(h0, f"min h = {h_min:.6g} >= 0", theta_min=theta_min,
                           h_at_min=h_min)

    fn = lambda t: h(c, t)  # noqa: E731
    sigma1 = _bisect(fn, 0.0, theta_min)
    sigma2 = _bisect(fn, theta_min, theta_max) if h(c, theta_max) >= 0 else theta_max
    return ThetaAnalysis(Classification.CONVERGENT_ON_INTERVAL, theta_min,
                         (sigma1, sigma2), h0, theta_min=theta_min, h_at_min=h_min,
                         reason="h < 0 between its two zeros")


def _find_theta_tilde(c, h0, theta_max):
    if not c.product > 0:
        return _infeasible(h0, "a12*a21 = 0", used_tilde=True)
    theta1, feasible = theta1_tilde(c)
    ht = h_tilde(c, theta1)
    if not feasible:
        return _infeasible(h0, f"h_tilde(theta1) = {ht:.6g} >= 0", theta_min=theta1,
                           h_at_min=ht, used_tilde=True)
    fn = lambda t: h_tilde(c, t)  # noqa: E731
    lo = theta1
    while fn(lo) < 0:
        lo /= 2.0
    sigma1 = _bisect(fn, lo, theta1)
    sigma2 = _bisect(fn, theta1, theta_max) if fn(theta_max) >= 0 else theta_max
    return ThetaAnalysis(Classification.CONVERGENT_ON_INTERVAL, theta1, (sigma1, sigma2),
                         h0, theta_min=theta1, h_at_min=ht, used_tilde=True,
                         reason="h_tilde < 0 between its two zeros")

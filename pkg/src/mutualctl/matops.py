"""Dense matrix helpers: the semigroup e^{-tA}, operator norms, growth bounds
and spectral radii of small nonnegative matrices."""

from dataclasses import dataclass
from math import factorial

import numpy as np

from ._validation import check_positive, check_square
from .exceptions import DomainError, SemigroupOverflowError

GROWTH_SAMPLES = 201
GROWTH_SAFETY = 1.01

_PADE_ORDER = 6
_PADE_COEFFS = np.array([
    factorial(2 * _PADE_ORDER - k) * factorial(_PADE_ORDER)
    / (factorial(2 * _PADE_ORDER) * factorial(k) * factorial(_PADE_ORDER - k))
    for k in range(_PADE_ORDER + 1)
])
# scaled argument must satisfy ||X||_1 <= 0.5 for the (6,6) approximant to
# be accurate to double precision
_PADE_RADIUS = 0.5


@dataclass(frozen=True)
class GrowthBound:
    """Upper bound ``value`` of |e^{-tA}| over t in [-horizon, horizon]."""

    value: float
    horizon: float
    samples: int
    safety: float

    def __float__(self):
        return self.value


def _pade_expm(X):
    """exp of a stack of matrices with ||X||_1 <= _PADE_RADIUS."""
    n = X.shape[-1]
    eye = np.broadcast_to(np.eye(n), X.shape)
    even = _PADE_COEFFS[0] * eye
    odd = np.zeros_like(X)
    power = eye
    for k in range(1, _PADE_ORDER + 1):
        power = power @ X
        if k % 2:
            odd = odd + _PADE_COEFFS[k] * power
        else:
            even = even + _PADE_COEFFS[k] * power
    return np.linalg.solve(even - odd, even + odd)


def expm_semigroup(A, t):
    """Return S_A(t) = e^{-tA} by scaling and squaring.

    ``t`` may be a scalar (result has shape (n, n)) or a 1-D array of
    times (result has shape (len(t), n, n)). Negative times are allowed.
    """
    A = check_square(A)
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if not np.all(np.isfinite(ts)):
        raise DomainError("t must be finite")

    X = -ts[:, None, None] * A[None, :, :]
    norms = np.abs(X).sum(axis=1).max(axis=1)
    with np.errstate(divide="ignore"):
        squarings = np.where(
            norms > _PADE_RADIUS,
            np.ceil(np.log2(np.maximum(norms, 1e-300) / _PADE_RADIUS)),
            0,
        ).astype(int)

    out = np.empty_like(X)
    with np.errstate(over="ignore", invalid="ignore"):
        for s in np.unique(squarings):
            idx = squarings == s
            E = _pade_expm(X[idx] / 2.0 ** s)
            for _ in range(s):
                E = E @ E
            out[idx] = E
    if not np.all(np.isfinite(out)):
        raise SemigroupOverflowError(
            f"e^(-tA) overflowed for max |t|={np.abs(ts).max():g}; "
            "reduce the horizon or the size of A"
        )
    return out[0] if scalar else out


def operator_norm(A, rtol=1e-13, max_iter=10_000):
    """Euclidean operator norm (largest singular value) of ``A``.

    Power iteration on the Gram matrix A^T A with a Rayleigh-quotient
    stopping rule.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    G = A.T @ A
    scale = np.abs(G).max()
    if scale == 0.0:
        return 0.0
    G = G / scale
    # fixed start so results are reproducible
    v = np.random.default_rng(12345).uniform(0.5, 1.5, G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    # one more Rayleigh quotient on the normalized vector
    lam = max(lam, float(v @ (G @ v)))
    return float(np.sqrt(lam * scale))


def growth_bound(A, T, samples=GROWTH_SAMPLES, safety=GROWTH_SAFETY):
    """Bound C_A >= max_{|t|<=T} |e^{-tA}| by dense sampling plus a safety factor."""
    T = check_positive(T, "T")
    ts = np.linspace(-T, T, samples)
    S = expm_semigroup(A, ts)
    peak = max(operator_norm(s) for s in S)
    return GrowthBound(value=peak * safety, horizon=T, samples=samples, safety=safety)


def spectral_radius(M, tol=1e-12, max_iter=1_000_000):
    """Spectral radius of a square matrix.

    2x2 matrices use the closed-form eigenvalues. Larger matrices must be
    nonnegative; their Perron root is bracketed with Collatz-Wielandt
    bounds while power-iterating on M + I (which is primitive whenever M
    is irreducible, so the bracket closes).
    """
    M = check_square(M, "M")
    n = M.shape[0]
    if n == 1:
        return abs(float(M[0, 0]))
    if n == 2:
        tr = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = tr * tr - 4.0 * det
        if disc < 0:
            return float(np.sqrt(det))
        root = np.sqrt(disc)
        return float(max(abs(tr + root), abs(tr - root)) / 2.0)

    if np.any(M < 0):
        raise DomainError("spectral_radius needs a nonnegative matrix for n > 2")
    shifted = M + np.eye(n)
    x = np.ones(n)
    estimate = np.inf
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * max(1.0, hi):
            return float(0.5 * (lo + hi) - 1.0)
        # reducible M: the bracket may stay open, fall back to the plain
        # power estimate once it stalls
        new_estimate = y.max()
        if abs(new_estimate - estimate) <= tol * max(1.0, new_estimate):
            return float(new_estimate - 1.0)
        estimate = new_estimate
        x = y / new_estimate
    return float(estimate - 1.0)

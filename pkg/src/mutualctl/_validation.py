"""Input validation helpers in the style of ``sklearn.utils.validation``."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError


def check_square(A, name="A"):
    """Return ``A`` as a finite float square matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    A = check_array(A, dtype=np.float64, ensure_2d=True, ensure_min_samples=1,
                    input_name=name)
    if A.shape[0] != A.shape[1]:
        raise DomainError(f"{name} must be square, got shape {A.shape}")
    return A


def check_vector(v, n, name="vector"):
    v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if v.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    return v


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be a finite nonnegative number, got {value}")
    return value


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive number, got {value}")
    return value

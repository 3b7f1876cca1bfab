"""Input validation helpers shared by the estimators and the functional API."""
from fractions import Fraction
from numbers import Integral, Real

import numpy as np

UINT64_MAX = 2**64 - 1


def check_dimension(d):
    if not isinstance(d, Integral) or isinstance(d, bool) or d < 1:
        raise ValueError(f"invalid dimension {d!r}: expected a positive integer")
    return int(d)


def check_nonneg_int(value, name):
    if not isinstance(value, Integral) or isinstance(value, bool) or value < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


def check_positive_int(value, name):
    value = check_nonneg_int(value, name)
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return value


def check_seed(value, name="master_seed"):
    if value is None:
        raise ValueError(f"{name} is required; Monte Carlo runs have no default seed")
    value = check_nonneg_int(value, name)
    if value > UINT64_MAX:
        raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")
    return value


def check_reps(reps, minimum=1):
    reps = check_nonneg_int(reps, "reps")
    if reps < minimum:
        raise ValueError(f"reps must be >= {minimum}, got {reps}")
    return reps


def as_rational(value, name="radius"):
    """Exact rational view of an int, Fraction or float."""
    if isinstance(value, Fraction):
        out = value
    elif isinstance(value, Integral):
        out = Fraction(int(value))
    elif isinstance(value, Real):
        if not np.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
        out = Fraction(float(value))
    else:
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    if out < 0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")
    return out


def check_points(points, dim=None):
    """Return an ``(m, d)`` int64 array of lattice points."""
    arr = np.asarray(points)
    if arr.size == 0:
        if dim is None:
            if arr.ndim == 2:
                dim = arr.shape[1]
            else:
                raise ValueError("cannot infer dimension of an empty point set")
        return np.zeros((0, check_dimension(dim)), dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"points must be a 2-d array, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError("lattice points must have integer coordinates")
        arr = as_int
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr.astype(np.int64, copy=False)

"""Input validation helpers shared by the estimators."""

import numpy as np


def as_complex_matrix(values, name="values"):
    """Cast to a 2-D complex128 array and reject non-finite entries."""
    a = np.asarray(values)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_complex_vector(values, name="values"):
    """Cast to a 1-D complex128 array and reject non-finite entries."""
    a = np.asarray(values)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_parameter_batch(mu, n_params, name="mu"):
    """Normalize a single parameter point or a batch to shape (m, n_params).

    Returns the batch and a flag telling whether the input was a single point.
    """
    a = np.atleast_1d(np.asarray(mu, dtype=float))
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != n_params:
        raise ValueError(
            f"{name} must have {n_params} coordinates per point, got shape {np.asarray(mu).shape}"
        )
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return a, single


def check_rank_request(d, max_rank, name="n_terms"):
    """Validate a requested interpolation rank against the grid dimensions."""
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"{name} must be a positive integer, got {d!r}")
    if d > max_rank:
        raise ValueError(f"{name}={d} exceeds the grid extent {max_rank}")
    return int(d)

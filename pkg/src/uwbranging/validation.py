"""Input validation helpers shared by the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError


def as_complex_vector(x, name: str) -> np.ndarray:
    """Coerce to a finite 1-D complex128 array or raise InvalidInputError."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise InvalidInputError(f"{name} contains non-finite samples")
    return arr


def as_float_vector(x, name: str, min_size: int = 1) -> np.ndarray:
    """Coerce to a finite 1-D float64 array of at least ``min_size`` entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_size:
        raise InvalidInputError(f"{name} needs at least {min_size} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def require(condition: bool, message: str) -> None:
    """Raise InvalidInputError with ``message`` unless ``condition`` holds."""
    if not condition:
        raise InvalidInputError(message)


def check_feature_matrix(X, n_columns: int, name: str = "X") -> np.ndarray:
    """Validate a 2-D finite feature matrix with a fixed column count."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[1] != n_columns:
        raise InvalidInputError(
            f"{name} must have {n_columns} columns (canonical feature order), got {arr.shape[1]}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr

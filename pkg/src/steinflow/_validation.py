"""Input validation helpers used across the public API."""

import numpy as np

from .errors import DimensionMismatchError


def check_positions(x, min_particles: int = 1) -> np.ndarray:
    """Coerce particle positions to a finite float64 (n, d) array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"positions must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_particles:
        raise DimensionMismatchError(
            f"need at least {min_particles} particles, got {arr.shape[0]}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("positions contain non-finite entries")
    return arr


def check_vector(x, name: str = "x") -> np.ndarray:
    """Coerce a point to a finite float64 1-D array."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dimension mismatch: {x.shape} vs {y.shape}")


def check_square(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_nu(nu: float, allow_one: bool = True) -> float:
    """Validate a regularization weight in (0, 1] (or (0, 1) if not allow_one)."""
    nu = float(nu)
    hi_ok = nu <= 1.0 if allow_one else nu < 1.0
    if not (0.0 < nu and hi_ok):
        rng = "(0, 1]" if allow_one else "(0, 1)"
        raise ValueError(f"nu must lie in {rng}, got {nu}")
    return nu

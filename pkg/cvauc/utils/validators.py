import numpy as np
from cvauc.exceptions import InvalidInputError


def validate_count(name: str, value: int, minimum: int = 1) -> int:
    """Validate a positive integer count"""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInputError(f"{name} must be an integer", {name: value})
    if value < minimum:
        raise InvalidInputError(f"{name} must be at least {minimum}", {name: int(value)})
    return int(value)


def validate_finite_scalar(name: str, value: float) -> float:
    """Validate a finite real number"""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{name} must be a real number", {name: value})
    if not np.isfinite(value):
        raise InvalidInputError(f"{name} must be finite", {name: value})
    return value


def validate_vector(name: str, values) -> np.ndarray:
    """Validate a non-empty one-dimensional vector of finite reals"""
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional", {"shape": array.shape})
    if array.size == 0:
        raise InvalidInputError(f"{name} must not be empty")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return array


def validate_matrix(name: str, values, min_rows: int = 1) -> np.ndarray:
    """Validate a two-dimensional matrix of finite reals (a vector is one column)"""
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        array = array[:, np.newaxis]
    if array.ndim != 2:
        raise InvalidInputError(f"{name} must be two-dimensional", {"shape": array.shape})
    if array.shape[0] < min_rows:
        raise InvalidInputError(
            f"{name} needs at least {min_rows} rows",
            {"rows": array.shape[0]}
        )
    if array.shape[1] < 1:
        raise InvalidInputError(f"{name} needs at least one column")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return array


def validate_epsilon(eps: float) -> float:
    """Validate a perturbation size in [0, 1)"""
    eps = validate_finite_scalar("eps", eps)
    if not 0.0 <= eps < 1.0:
        raise InvalidInputError("eps must lie in [0, 1)", {"eps": eps})
    return eps

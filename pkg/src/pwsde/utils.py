"""Array-shape helpers shared by the geometry, transform and solver modules."""

from typing import Tuple

import numpy as np

from .errors import ArgumentError


def as_batch(x, dim: int) -> Tuple[np.ndarray, bool]:
    """Coerce a point or a batch of points to shape ``(n, dim)``.

    Args:
        x: A scalar (only when ``dim == 1``), a ``(dim,)`` vector or an ``(n, dim)`` array.
        dim: Expected spatial dimension.

    Returns:
        Tuple of the ``(n, dim)`` float array and a flag telling whether the
        input was a single point.

    Raises:
        ArgumentError: If the trailing dimension does not match ``dim``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ArgumentError(f"Scalar input is only valid in dimension 1, got dimension {dim}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ArgumentError(f"Expected a point of dimension {dim}, got shape {arr.shape}")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise ArgumentError(f"Expected shape ({dim},) or (n, {dim}), got {arr.shape}")


def restore(values: np.ndarray, single: bool) -> np.ndarray:
    """Undo :func:`as_batch` on a result whose first axis is the batch axis."""
    return values[0] if single else values


def row_norms(values: np.ndarray) -> np.ndarray:
    """Euclidean norm of every row after flattening trailing axes."""
    flat = values.reshape(values.shape[0], -1)
    return np.sqrt(np.einsum("ij,ij->i", flat, flat))


def format_number(value: float) -> str:
    """Shortest round-tripping text for a float, without a trailing ``.0``."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text

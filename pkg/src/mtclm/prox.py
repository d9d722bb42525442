"""Thresholding operators used by the auxiliary-variable updates."""

import numpy as np


def soft_threshold(z, xi):
    """Elementwise ``sign(z) * max(|z| - xi, 0)``, the prox of ``xi * ||.||_1``."""
    if xi < 0:
        raise ValueError(f"threshold must be nonnegative, got {xi}")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - xi, 0.0)


def group_soft_threshold(z, xi):
    """Block shrinkage ``max(1 - xi / ||z||_2, 0) * z``.

    Returns the zero vector whenever ``||z||_2 <= xi``, which includes
    ``z = 0`` for any ``xi``.
    """
    if xi < 0:
        raise ValueError(f"threshold must be nonnegative, got {xi}")
    z = np.asarray(z, dtype=float)
    norm = np.linalg.norm(z)
    if norm <= xi or norm == 0.0:
        return np.zeros_like(z)
    return (1.0 - xi / norm) * z


def group_soft_threshold_rows(z, xi):
    """Apply :func:`group_soft_threshold` to every row of a matrix."""
    if xi < 0:
        raise ValueError(f"threshold must be nonnegative, got {xi}")
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    factor = np.where(norms > xi, 1.0 - xi / safe, 0.0)
    return factor * z

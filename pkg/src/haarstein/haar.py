"""Haar sampling on the orthogonal and unitary groups.

Samples are produced by the QR factorization of a Gaussian matrix with the
diagonal of ``R`` forced positive.  Without that correction the ``Q`` factor
is *not* Haar distributed.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, DimensionError
from .rng import _as_stream, concat, map_chunks

__all__ = [
    "FIELDS",
    "GROUPS",
    "field_of",
    "sample_gaussian_matrix",
    "haar_from_gaussian",
    "sample_haar",
    "sample_haar_frame",
    "haar_batch",
    "group_residual",
    "residual_tolerance",
]

GROUPS = ("orthogonal", "unitary")
FIELDS = ("real", "complex")

# Relative pivot size below which G is treated as rank deficient.
_PIVOT_RTOL = 1e-13


def field_of(group: str) -> str:
    if group == "orthogonal":
        return "real"
    if group == "unitary":
        return "complex"
    raise ValueError(f"unknown group {group!r}; expected one of {GROUPS}")


def residual_tolerance(n: int) -> float:
    """Admissible ``group_residual`` for a freshly sampled ``n x n`` matrix."""
    return 1e-12 * n


def _check_dim(n) -> int:
    if int(n) != n or n < 1:
        raise DimensionError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def _gaussian(gen: np.random.Generator, shape, field: str) -> np.ndarray:
    if field == "real":
        return gen.standard_normal(shape)
    if field == "complex":
        # independent N(0, 1/2) parts, so E|z|^2 = 1
        z = gen.standard_normal(shape + (2,)) * np.sqrt(0.5)
        return z[..., 0] + 1j * z[..., 1]
    raise ValueError(f"unknown field {field!r}; expected one of {FIELDS}")


def sample_gaussian_matrix(n: int, field: str, rng, size: int | None = None) -> np.ndarray:
    """I.i.d. standard (real or complex) normal ``n x n`` matrix.

    Parameters
    ----------
    n : int
        Dimension, ``n >= 1``.
    field : {"real", "complex"}
        Complex entries have independent ``N(0, 1/2)`` real and imaginary parts.
    rng : RngStream or int
        Stream to draw from.  A plain int is taken as a master seed.
    size : int, optional
        If given, return a stack of shape ``(size, n, n)``.
    """
    n = _check_dim(n)
    gen = _as_stream(rng).generator()
    shape = (n, n) if size is None else (int(size), n, n)
    return _gaussian(gen, shape, field)


def haar_from_gaussian(G: np.ndarray) -> np.ndarray:
    """Map a Gaussian matrix (or stack) to the group via corrected QR.

    ``Q`` is rescaled column-wise so that ``R`` has a positive real
    diagonal.  The map is equivariant: ``haar_from_gaussian(U @ G) ==
    U @ haar_from_gaussian(G)`` for any fixed ``U`` in the group.

    Raises
    ------
    DegenerateInputError
        If some pivot of ``R`` is negligible relative to ``G``.
    """
    G = np.asarray(G)
    # tall inputs are allowed, see sample_haar_frame
    if G.ndim < 2 or G.shape[-2] < G.shape[-1]:
        raise DimensionError(f"expected square (or tall) matrices, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise DegenerateInputError("input has non-finite entries")
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    mag = np.abs(d)
    scale = np.max(np.abs(G), axis=(-2, -1), keepdims=False)
    if np.any(mag <= _PIVOT_RTOL * np.maximum(scale, np.finfo(float).tiny)[..., None]):
        raise DegenerateInputError("numerically rank-deficient input; resample")
    return Q * (d / mag)[..., None, :]


def sample_haar(n: int, group: str, rng, size: int | None = None) -> np.ndarray:
    """Haar-distributed matrix (or stack of ``size`` matrices) on O(n) or U(n)."""
    G = sample_gaussian_matrix(n, field_of(group), rng, size=size)
    return haar_from_gaussian(G)


def sample_haar_frame(n: int, k: int, group: str, rng, size: int | None = None) -> np.ndarray:
    """First ``k`` columns of a Haar matrix, shape ``(..., n, k)``.

    The leading columns of the corrected QR factor only depend on the
    leading columns of ``G``, so an ``n x k`` Gaussian suffices.
    """
    n = _check_dim(n)
    if not 1 <= k <= n:
        raise DimensionError(f"frame width must be in [1, {n}], got {k}")
    gen = _as_stream(rng).generator()
    shape = (n, k) if size is None else (int(size), n, k)
    return haar_from_gaussian(_gaussian(gen, shape, field_of(group)))


def haar_batch(n: int, group: str, count: int, rng, workers: int = 1) -> np.ndarray:
    """``count`` Haar matrices as one array, reproducible for any ``workers``."""
    parts = map_chunks(lambda c, s, st: sample_haar(n, group, st, size=s), count, rng, workers)
    return concat(parts)


def group_residual(M: np.ndarray):
    """``max |M M* - I|`` (per matrix for stacks)."""
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {M.shape}")
    n = M.shape[-1]
    P = M @ np.conj(np.swapaxes(M, -1, -2))
    r = np.max(np.abs(P - np.eye(n)), axis=(-2, -1))
    return float(r) if np.ndim(r) == 0 else r

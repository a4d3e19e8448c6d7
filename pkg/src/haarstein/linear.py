"""Coefficient matrices and the linear statistic ``W = tr(A M)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NormalizationError, NumericalError
from .haar import field_of, sample_haar
from .rng import RngStream, concat, map_chunks

__all__ = [
    "CoefficientMatrix",
    "StatisticSample",
    "normalize_coefficients",
    "jacobi_singular_values",
    "singular_values",
    "reduce_to_diagonal",
    "trace_statistic",
    "project_theta",
    "sample_statistic_batch",
    "preset",
    "PRESETS",
]

NORM_RTOL = 1e-10


@dataclass(frozen=True)
class CoefficientMatrix:
    """A normalized coefficient matrix with ``tr(A A*) = n``."""

    A: np.ndarray
    group: str
    label: str = "custom"
    singular_values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"coefficient matrix must be square, got {A.shape}")
        field_of(self.group)
        if self.group == "orthogonal" and np.iscomplexobj(A):
            if np.any(A.imag != 0):
                raise ValueError("orthogonal group needs a real coefficient matrix")
            object.__setattr__(self, "A", A.real.copy())
        n = A.shape[0]
        fro2 = float(np.sum(np.abs(A) ** 2))
        if abs(fro2 - n) > NORM_RTOL * n:
            raise NormalizationError(f"tr(AA*) = {fro2!r}, expected {n}; use normalize_coefficients")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.A == np.diag(np.diag(self.A))))


@dataclass
class StatisticSample:
    """Independent draws of ``W`` for one coefficient matrix."""

    values: np.ndarray
    n: int
    a_descriptor: str

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("a statistic sample needs at least one value")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("statistic values must be finite")

    def __len__(self):
        return self.values.size


def normalize_coefficients(A, group: str, label: str = "custom") -> CoefficientMatrix:
    """Rescale ``A`` by ``sqrt(n / tr(A A*))``."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"coefficient matrix must be square, got {A.shape}")
    fro2 = float(np.sum(np.abs(A) ** 2))
    if fro2 == 0.0 or not np.isfinite(fro2):
        raise NormalizationError("cannot normalize a zero (or non-finite) matrix")
    n = A.shape[0]
    return CoefficientMatrix(A * np.sqrt(n / fro2), group, label)


def jacobi_singular_values(A, tol: float = 1e-15, max_sweeps: int = 50) -> np.ndarray:
    """Singular values of a square matrix by one-sided (Hestenes) Jacobi.

    Columns are orthogonalized pairwise by plane rotations until every pair
    is orthogonal to relative precision ``tol``; the column norms are then
    the singular values.  Returned in nonincreasing order.
    """
    U = np.array(A, dtype=complex if np.iscomplexobj(A) else float, copy=True)
    n = U.shape[1]
    # columns below this squared norm are numerically null and left alone
    negligible = 1e-30 * float(np.sum(np.abs(U) ** 2))
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = np.vdot(U[:, p], U[:, p]).real
                beta = np.vdot(U[:, q], U[:, q]).real
                gamma = np.vdot(U[:, p], U[:, q])
                g = abs(gamma)
                if g == 0.0 or min(alpha, beta) <= negligible:
                    continue
                scale = math.sqrt(alpha) * math.sqrt(beta)
                off = max(off, g / scale)
                if g <= tol * scale:
                    continue
                if np.iscomplexobj(U):
                    # unit-modulus column scaling makes the inner product real and positive
                    U[:, q] *= np.conj(gamma) / g
                    gamma = g
                zeta = (beta - alpha) / (2.0 * gamma.real)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                up = U[:, p].copy()
                U[:, p] = c * up - s * U[:, q]
                U[:, q] = s * up + c * U[:, q]
        if off <= tol * max(n, 1) * 10:
            return np.sort(np.linalg.norm(U, axis=0))[::-1]
    raise NumericalError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")


def singular_values(coef: CoefficientMatrix) -> np.ndarray:
    if coef.singular_values is not None:
        return coef.singular_values
    return jacobi_singular_values(coef.A)


def reduce_to_diagonal(coef: CoefficientMatrix) -> CoefficientMatrix:
    """Diagonal matrix of singular values; ``tr(DM)`` has the law of ``tr(AM)``."""
    sv = singular_values(coef)
    n = coef.n
    # guard against drift of the Jacobi norms
    sv = sv * np.sqrt(n / np.sum(sv**2))
    return CoefficientMatrix(np.diag(sv), coef.group, f"diag({coef.label})", singular_values=sv)


def trace_statistic(coef, M):
    """``tr(A M)`` for one matrix or a stack of matrices."""
    A = coef.A if isinstance(coef, CoefficientMatrix) else np.asarray(coef)
    M = np.asarray(M)
    if M.shape[-2:] != A.shape:
        raise DimensionError(f"shape mismatch: A is {A.shape}, M is {M.shape[-2:]}")
    w = np.einsum("ij,...ji->...", A, M)
    if np.ndim(w) == 0:
        return w.item()
    return w


def project_theta(w, theta: float):
    """Component of ``w`` along the unit vector at angle ``theta``."""
    w = np.asarray(w)
    out = np.cos(theta) * w.real + np.sin(theta) * w.imag
    return float(out) if out.ndim == 0 else out


def sample_statistic_batch(coef: CoefficientMatrix, count: int, rng, workers: int = 1) -> StatisticSample:
    """I.i.d. draws of ``W = tr(AM)`` over fresh Haar matrices."""
    n = coef.n

    def chunk(c, size, stream):
        return trace_statistic(coef, sample_haar(n, coef.group, stream, size=size))

    values = concat(map_chunks(chunk, count, rng, workers))
    return StatisticSample(values, n, coef.label)


def _identity(n, group, seed=None):
    return normalize_coefficients(np.eye(n), group, "identity")


def _spike(n, group, seed=None):
    A = np.zeros((n, n))
    A[0, 0] = np.sqrt(n)
    return CoefficientMatrix(A, group, "spike")


def _random_diag(n, group, seed=0):
    gen = RngStream(int(seed), 0, (0x5EED,)).generator()
    d = gen.uniform(0.1, 2.0, size=n)
    return normalize_coefficients(np.diag(d), group, f"random-diag({seed})")


PRESETS = {"identity": _identity, "spike": _spike, "random-diag": _random_diag}


def preset(name: str, n: int, group: str, seed: int = 0) -> CoefficientMatrix:
    """Named coefficient matrices: ``identity``, ``spike`` (sqrt(n) + 0) and ``random-diag``.

    ``random-diag:SEED`` selects the seed inline.
    """
    base, _, inline = name.partition(":")
    if base not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    if n < 1:
        raise DimensionError("n must be >= 1")
    return PRESETS[base](n, group, int(inline) if inline else seed)

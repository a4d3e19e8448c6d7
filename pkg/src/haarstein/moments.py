"""Exact mixed moments of Haar matrix entries and their Monte Carlo checks.

Each catalog entry pairs an exact rational formula in ``n`` with the integrand
whose Haar expectation it claims to equal.  Formulas never touch floating
point; the integrand is shared by the Monte Carlo estimator and by the
low-dimensional quadrature oracle, which integrates exactly over O(2) and
U(1).

Indices are zero-based.  Identities built on ``K`` (the first two columns of
``H``) use columns 0 and 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, EstimationError, NumericalError
from .haar import sample_haar, sample_haar_frame
from .rng import map_chunks

__all__ = [
    "MomentIdentity",
    "MomentCheckReport",
    "CATALOG",
    "evaluate_identity",
    "is_excluded",
    "mc_estimate",
    "quadrature_oracle",
    "quadrature_check",
    "canonical_pattern",
    "pattern_representatives",
    "default_cases",
    "ot2s_bound",
]

C2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _d(a, b) -> int:
    return int(a == b)


def _diag_from_squares(squares) -> np.ndarray:
    return np.diag(np.sqrt(np.array([float(s) for s in squares])))


def _as_squares(coeffs, n) -> list[Fraction]:
    if coeffs is None:
        return [Fraction(1)] * n
    sq = [Fraction(c) for c in coeffs]
    if len(sq) != n:
        raise DimensionError(f"expected {n} squared coefficients, got {len(sq)}")
    if any(s < 0 for s in sq):
        raise ValueError("squared coefficients must be nonnegative")
    return sq


@dataclass(frozen=True)
class MomentIdentity:
    """One catalog entry.

    ``exact(n, idx, squares)`` returns a :class:`~fractions.Fraction`;
    ``integrand(H, idx, squares)`` evaluates the random quantity on a stack
    of matrices of shape ``(..., n, n)`` (or ``(..., n, 2)`` when
    ``frame_only``).
    """

    id: str
    group: str
    arity: int
    n_min: int
    source: str
    exact: Callable = field(repr=False)
    integrand: Callable = field(repr=False)
    n_indices: int = 0
    frame_only: bool = False
    uses_coeffs: bool = False
    excluded: Callable | None = field(default=None, repr=False)


# ---------------------------------------------------------------- orthogonal


def _o2_exact(n, idx, sq):
    i, j, k, l = idx
    return Fraction(_d(i, k) * _d(j, l), n)


def _o2_int(H, idx, sq):
    i, j, k, l = idx
    return H[..., i, j] * H[..., k, l]


def _kk_exact(n, idx, sq):
    a, b, part = _kk_idx(idx)
    return Fraction(2 * _d(a, b), n) if part == 0 else Fraction(0)


def _kk_idx(idx):
    if len(idx) == 2:
        return idx[0], idx[1], 0
    a, b, part = idx
    if part not in (0, 1):
        raise ValueError("part must be 0 (K K*) or 1 (K C2 K*)")
    return a, b, part


def _kk_int(K, idx, sq):
    a, b, part = _kk_idx(idx)
    Kb = np.conj(K[..., b, :])
    if part == 0:
        return np.sum(K[..., a, :] * Kb, axis=-1)
    return np.einsum("...p,pq,...q->...", K[..., a, :], C2, Kb)


def _ow4_excluded(idx):
    i, ip, j, jp = idx
    return i == ip or j == jp


def _ow4_exact(n, idx, sq):
    if _ow4_excluded(idx):
        return Fraction(0)
    i, ip, j, jp = idx
    return Fraction(2, n * (n - 1)) * (_d(i, j) * _d(ip, jp) - _d(i, jp) * _d(j, ip))


def _ow4_int(K, idx, sq):
    i, ip, j, jp = idx
    x = K[..., i, 0] * K[..., ip, 1] - K[..., i, 1] * K[..., ip, 0]
    y = K[..., j, 0] * K[..., jp, 1] - K[..., j, 1] * K[..., jp, 0]
    return x * y


def _tr_sq(M, sq):
    A = _diag_from_squares(sq)
    AM = A @ M
    return np.einsum("...ij,...ji->...", AM, AM)


def _ot2m_exact(n, idx, sq):
    return sum(sq, Fraction(0)) / n


def _ot2m_int(M, idx, sq):
    return _tr_sq(M, sq)


def _ot2s_exact(n, idx, sq):
    s1 = sum(sq, Fraction(0))
    s2 = sum((s * s for s in sq), Fraction(0))
    off = s1 * s1 - s2
    return Fraction(n + 1, n * (n - 1) * (n + 2)) * 3 * off + Fraction(3, n * (n + 2)) * s2


def _ot2s_int(M, idx, sq):
    return _tr_sq(M, sq) ** 2


# ------------------------------------------------------------------- unitary


def _uw4s_exact(n, idx, sq):
    i, j, k, l = idx
    return (
        Fraction(-2 * _d(i, l) * _d(j, k) * (1 - _d(i, j)), (n - 1) * (n + 1))
        + Fraction(2 * _d(i, j) * _d(k, l) * (1 - _d(i, k)), (n - 1) * n * (n + 1))
        - Fraction(2 * int(i == j == k == l), n * (n + 1))
    )


def _antisym(K, r, s):
    # h_r1 conj(h_s2) - h_r2 conj(h_s1)
    return K[..., r, 0] * np.conj(K[..., s, 1]) - K[..., r, 1] * np.conj(K[..., s, 0])


def _uw4s_int(K, idx, sq):
    i, j, k, l = idx
    return _antisym(K, i, j) * _antisym(K, k, l)


def _uw4m_exact(n, idx, sq):
    i, j, k, l = idx
    return (
        Fraction(2 * _d(i, k) * _d(j, l) * (1 - _d(i, j)), (n - 1) * (n + 1))
        - Fraction(2 * _d(i, j) * _d(k, l) * (1 - _d(i, k)), n * (n - 1) * (n + 1))
        + Fraction(2 * int(i == j == k == l), n * (n + 1))
    )


def _uw4m_int(K, idx, sq):
    i, j, k, l = idx
    return _antisym(K, i, j) * np.conj(_antisym(K, k, l))


def _uw2_exact(n, idx, sq):
    return sum(sq, Fraction(0)) / n


def _uw2_int(M, idx, sq):
    A = _diag_from_squares(sq)
    return np.abs(np.einsum("ij,...ji->...", A, M)) ** 2


CATALOG: dict[str, MomentIdentity] = {
    m.id: m
    for m in [
        MomentIdentity("O2", "orthogonal", 2, 1, "second moments of O(n) entries", _o2_exact, _o2_int, 4),
        MomentIdentity("OKK", "orthogonal", 2, 2, "E[K K^t] = (2/n) I and E[K C2 K^t] = 0", _kk_exact, _kk_int, 2, True),
        MomentIdentity(
            "OW4", "orthogonal", 4, 2, "antisymmetrized 2x2 minor products of K", _ow4_exact, _ow4_int, 4, True,
            excluded=_ow4_excluded,
        ),
        MomentIdentity("OT2M", "orthogonal", 2, 1, "mean of tr((AM)^2), A diagonal", _ot2m_exact, _ot2m_int, 0, uses_coeffs=True),
        MomentIdentity("OT2S", "orthogonal", 4, 2, "second moment of tr((AM)^2), A diagonal", _ot2s_exact, _ot2s_int, 0, uses_coeffs=True),
        MomentIdentity("UKK", "unitary", 2, 2, "E[K K*] = (2/n) I and E[K C2 K*] = 0", _kk_exact, _kk_int, 2, True),
        MomentIdentity("UW4S", "unitary", 4, 2, "product of two antisymmetrized minors", _uw4s_exact, _uw4s_int, 4, True),
        MomentIdentity("UW4M", "unitary", 4, 2, "minor times conjugate minor", _uw4m_exact, _uw4m_int, 4, True),
        MomentIdentity("UW2", "unitary", 2, 1, "E|tr(AM)|^2, A diagonal", _uw2_exact, _uw2_int, 0, uses_coeffs=True),
    ]
}


def _lookup(id) -> MomentIdentity:
    if isinstance(id, MomentIdentity):
        return id
    try:
        return CATALOG[id]
    except KeyError:
        raise KeyError(f"unknown identity {id!r}; known: {sorted(CATALOG)}") from None


def _check_args(ident: MomentIdentity, n: int, indices: Sequence[int]):
    if n < ident.n_min:
        raise DimensionError(f"{ident.id} needs n >= {ident.n_min}, got {n}")
    idx = tuple(int(i) for i in indices)
    expected = ident.n_indices
    if ident.id in ("OKK", "UKK"):
        ok = len(idx) in (2, 3)
        checked = idx[:2]
    else:
        ok = len(idx) == expected
        checked = idx
    if not ok:
        raise ValueError(f"{ident.id} takes {expected} indices, got {len(idx)}")
    if any(not 0 <= i < n for i in checked):
        raise DimensionError(f"indices {idx} out of range for n = {n}")
    return idx


def is_excluded(id, indices) -> bool:
    """True when the index pattern is one the formula explicitly sets aside."""
    ident = _lookup(id)
    return bool(ident.excluded and ident.excluded(tuple(indices)))


def evaluate_identity(id, n: int, indices: Sequence[int] = (), coeffs=None) -> Fraction:
    """Exact value of a catalog identity.

    Parameters
    ----------
    id : str
        Catalog key (see :data:`CATALOG`).
    n : int
        Dimension.
    indices : sequence of int
        Zero-based entry indices in the order the identity names them.
    coeffs : sequence of rationals, optional
        Squared diagonal coefficients ``a_ii^2`` for the ``tr``-based
        identities; defaults to all ones (``A = I``).

    Excluded patterns (``OW4`` with ``i == i'`` or ``j == j'``) evaluate
    to exactly zero; see :func:`is_excluded`.
    """
    ident = _lookup(id)
    idx = _check_args(ident, n, indices)
    sq = _as_squares(coeffs, n) if ident.uses_coeffs else None
    return ident.exact(n, idx, sq)


@dataclass
class MomentCheckReport:
    id: str
    n: int
    indices: tuple
    exact: Fraction
    estimate: complex
    stderr: float
    z: float
    samples: int
    excluded: bool = False
    coeffs: tuple | None = None

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 4.0

    def to_dict(self) -> dict:
        est = complex(self.estimate)
        return {
            "id": self.id,
            "n": self.n,
            "indices": list(self.indices),
            "coeffs": None if self.coeffs is None else [str(c) for c in self.coeffs],
            "exact": str(self.exact),
            "exact_float": float(self.exact),
            "estimate_re": est.real,
            "estimate_im": est.imag,
            "stderr": self.stderr,
            "z": self.z,
            "samples": self.samples,
            "excluded_pattern": self.excluded,
            "pass": self.passed,
        }


def _zscore(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


def mc_estimate(id, n: int, indices: Sequence[int] = (), samples: int = 100_000, rng=0, coeffs=None, workers: int = 1):
    """Monte Carlo estimate of an identity with standard error and z-score.

    For complex integrands both the real and imaginary parts are compared
    (the latter against zero); ``z`` is the larger in magnitude.
    """
    ident = _lookup(id)
    idx = _check_args(ident, n, indices)
    if samples < 10_000:
        raise EstimationError("mc_estimate needs at least 10^4 samples")
    sq = _as_squares(coeffs, n) if ident.uses_coeffs else None

    def chunk(c, size, stream):
        if ident.frame_only:
            H = sample_haar_frame(n, 2, ident.group, stream, size=size)
        else:
            H = sample_haar(n, ident.group, stream, size=size)
        v = np.asarray(ident.integrand(H, idx, sq))
        re, im = v.real, np.imag(v)
        return np.array([re.sum(), (re**2).sum(), im.sum(), (im**2).sum()])

    tot = np.sum(map_chunks(chunk, samples, rng, workers), axis=0)
    N = samples
    mean_re, mean_im = tot[0] / N, tot[2] / N
    var_re = max(tot[1] / N - mean_re**2, 0.0) * N / (N - 1)
    var_im = max(tot[3] / N - mean_im**2, 0.0) * N / (N - 1)
    se_re, se_im = math.sqrt(var_re / N), math.sqrt(var_im / N)
    exact = ident.exact(n, idx, sq)
    z_re = _zscore(mean_re - float(exact), se_re)
    z_im = _zscore(mean_im, se_im)
    z = z_re if abs(z_re) >= abs(z_im) else z_im
    return MomentCheckReport(
        ident.id, n, idx, exact, complex(mean_re, mean_im), max(se_re, se_im), z, N,
        excluded=is_excluded(ident, idx), coeffs=None if sq is None else tuple(sq),
    )


# ---------------------------------------------------------------- quadrature

_QUAD_NODES = 64


def _o2_elements(m: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(m) / m
    c, s = np.cos(t), np.sin(t)
    rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    ref = rot @ np.diag([1.0, -1.0])
    return np.concatenate([rot, ref])


def _u1_elements(m: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(m) / m
    return np.exp(1j * t).reshape(m, 1, 1)


def _monomial(spec) -> Callable:
    factors = []
    for f in spec:
        i, j, *rest = f
        factors.append((int(i), int(j), bool(rest[0]) if rest else False))
    if len(factors) > 8:
        raise ValueError("quadrature oracle supports monomials of degree <= 8")

    def fn(M):
        out = np.ones(M.shape[:-2], dtype=M.dtype)
        for i, j, conj in factors:
            x = M[..., i, j]
            out = out * (np.conj(x) if conj else x)
        return out

    return fn


def quadrature_oracle(group: str, integrand, nodes: int = _QUAD_NODES):
    """Exact Haar average over O(2) or U(1) by periodic trapezoid rule.

    ``integrand`` is either a callable on a stack of group elements or a
    monomial spec: a sequence of ``(i, j)`` or ``(i, j, conj)`` factors.
    The rule is exact for trigonometric polynomials of degree below
    ``nodes``; a doubled-grid comparison guards against anything rougher.
    O(2) is integrated as the even mixture of rotations and reflections.
    """
    g = group.replace(" ", "").upper()
    if g in ("O(2)", "O2", "ORTHOGONAL"):
        elements = _o2_elements
    elif g in ("U(1)", "U1", "UNITARY"):
        elements = _u1_elements
    else:
        raise ValueError(f"unsupported group {group!r}; use 'O(2)' or 'U(1)'")
    fn = integrand if callable(integrand) else _monomial(integrand)
    coarse = np.mean(fn(elements(nodes)))
    fine = np.mean(fn(elements(2 * nodes)))
    if abs(coarse - fine) > 1e-12:
        raise NumericalError("integrand is not resolved by the quadrature grid")
    fine = complex(fine)
    return fine.real if abs(fine.imag) <= 1e-14 else fine


def quadrature_check(id, n: int, indices: Sequence[int] = (), coeffs=None) -> dict:
    """Compare the exact formula with quadrature at orthogonal ``n = 2`` or unitary ``n = 1``."""
    ident = _lookup(id)
    small = 2 if ident.group == "orthogonal" else 1
    if n != small:
        raise DimensionError(f"quadrature covers {ident.group} n = {small} only")
    idx = _check_args(ident, n, indices)
    sq = _as_squares(coeffs, n) if ident.uses_coeffs else None

    def f(M):
        return ident.integrand(M[..., :2] if ident.frame_only else M, idx, sq)

    q = complex(quadrature_oracle("O(2)" if small == 2 else "U(1)", f))
    exact = ident.exact(n, idx, sq)
    err = abs(q - float(exact))
    return {
        "kind": "quadrature",
        "id": ident.id,
        "n": n,
        "indices": list(idx),
        "exact": str(exact),
        "quadrature": q.real,
        "abs_error": err,
        "pass": err <= 1e-10,
    }


# ------------------------------------------------------------ index patterns


def canonical_pattern(indices: Sequence[int]) -> tuple[int, ...]:
    """Coincidence pattern as a restricted growth string, e.g. (5,2,5) -> (0,1,0)."""
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(i, len(seen)) for i in indices)


def pattern_representatives(k: int, n: int) -> list[tuple[int, ...]]:
    """One index tuple per coincidence pattern of length ``k`` using ``<= n`` values."""
    out = []
    for cand in product(range(min(k, n)), repeat=k):
        if canonical_pattern(cand) == cand:
            out.append(cand)
    return out


def default_cases(id, n: int) -> list[dict]:
    """Representative ``(indices, coeffs)`` cases for a catalog sweep."""
    ident = _lookup(id)
    if n < ident.n_min:
        return []
    if ident.uses_coeffs:
        ramp = [Fraction(i + 1) for i in range(n)]
        total = sum(ramp)
        ramp = [r * n / total for r in ramp]
        return [{"indices": (), "coeffs": None}, {"indices": (), "coeffs": ramp}]
    if ident.id in ("OKK", "UKK"):
        pats = pattern_representatives(2, n)
        return [{"indices": p + (part,), "coeffs": None} for p in pats for part in (0, 1)]
    cases = [{"indices": p, "coeffs": None} for p in pattern_representatives(ident.n_indices, n)]
    if ident.excluded is not None:
        cases = [c for c in cases if not ident.excluded(c["indices"])]
    return cases


def ot2s_bound(n: int) -> Fraction:
    """Upper bound ``3 + 6/((n-1)(n+2))`` for the ``OT2S`` expansion."""
    return 3 + Fraction(6, (n - 1) * (n + 2))

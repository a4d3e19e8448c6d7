"""The small-rotation exchangeable pair ``(W, W_eps)`` and its conditions.

``M_eps = H A_eps H* M`` where ``A_eps`` rotates the first two coordinates
by a small angle and ``H`` is an independent Haar matrix.  Only the first
two columns ``K`` of ``H`` enter, through

    W_eps - W = tr(A K [(sqrt(1 - eps^2) - 1) I_2 + eps C_2] K* M),

which is evaluated exactly (no Taylor truncation).

Conditional expectations given ``W`` are estimated by equal-count binning.
Each draw is also evaluated at ``-eps`` (swap of the rotation direction,
which has the same law); averaging the two cancels the ``C_2`` term of
``W_eps - W`` exactly and keeps the first-order estimator unbiased with
far smaller variance.  Results on the eps grid are extrapolated to
``eps -> 0`` by least squares in ``eps^2`` applied draw by draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DimensionError, EstimationError
from .haar import sample_haar, sample_haar_frame
from .linear import CoefficientMatrix, reduce_to_diagonal, trace_statistic
from .rng import map_chunks
from .stein import abstract_bound

__all__ = [
    "C2",
    "build_rotation",
    "perturb",
    "delta_statistic",
    "e_statistic_orth",
    "e_statistic_unit",
    "PairBatch",
    "ConditionReport",
    "sample_pairs",
    "extrapolation_weights",
    "binned_means",
    "estimate_lambda",
    "quadratic_condition",
    "third_moment_rate",
    "check_conditions",
    "orth_e_bound",
    "unit_e_bound",
    "orth_bound",
    "orth_fourth_moment_bound",
    "unitary_constant",
    "DEFAULT_EPS_GRID",
]

C2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
DEFAULT_EPS_GRID = (0.1, 0.05, 0.025)
MIN_PER_BIN = 100


def _cos_minus_one(eps: float) -> float:
    # sqrt(1 - eps^2) - 1 without cancellation
    return -eps * eps / (1.0 + math.sqrt(1.0 - eps * eps))


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not -1.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (-1, 1), got {eps}")
    return eps


def build_rotation(n: int, epsilon: float) -> np.ndarray:
    """``A_eps``: rotation by ``arcsin(eps)`` in the first coordinate plane."""
    if n < 2:
        raise DimensionError("the rotation needs n >= 2")
    eps = _check_eps(epsilon)
    A = np.eye(n)
    c = math.sqrt(1.0 - eps * eps)
    A[:2, :2] = [[c, eps], [-eps, c]]
    return A


def _adjoint(X):
    return np.conj(np.swapaxes(X, -1, -2))


def perturb(M, H, epsilon: float):
    """``M_eps = H A_eps H* M`` (stack-aware)."""
    M, H = np.asarray(M), np.asarray(H)
    if M.shape[-2:] != H.shape[-2:] or M.shape[-1] != M.shape[-2]:
        raise DimensionError(f"shape mismatch: M {M.shape}, H {H.shape}")
    n = M.shape[-1]
    return H @ build_rotation(n, epsilon) @ _adjoint(H) @ M


def _core(epsilon: float) -> np.ndarray:
    eps = _check_eps(epsilon)
    return _cos_minus_one(eps) * np.eye(2) + eps * C2


def delta_statistic(A, M, K, epsilon: float):
    """Exact ``W_eps - W`` from the two-column frame ``K`` of ``H``."""
    A = A.A if isinstance(A, CoefficientMatrix) else np.asarray(A)
    M, K = np.asarray(M), np.asarray(K)
    n = A.shape[0]
    if M.shape[-2:] != (n, n) or K.shape[-2:] != (n, 2):
        raise DimensionError(f"shape mismatch: A {A.shape}, M {M.shape}, K {K.shape}")
    B = _core(epsilon)
    KhM = _adjoint(K) @ M  # (..., 2, n)
    out = np.einsum("ij,...jp,pq,...qi->...", A, K, B, KhM)
    return out.item() if np.ndim(out) == 0 else out


def _diag_of(A) -> np.ndarray:
    A = A.A if isinstance(A, CoefficientMatrix) else np.asarray(A)
    if A.ndim != 2 or np.any(A != np.diag(np.diag(A))):
        raise ValueError("closed-form E statistics need a diagonal A; reduce it first")
    return np.diag(A)


def _tr_am_sq(a, M):
    AM = a[:, None] * M
    return np.einsum("...ij,...ji->...", AM, AM)


def e_statistic_orth(A, M):
    """``2/(n(n-1)) * (1 - tr((AM)^2))`` for diagonal ``A``."""
    a = _diag_of(A)
    n = a.size
    if n < 2:
        raise DimensionError("E statistic needs n >= 2")
    out = 2.0 / (n * (n - 1)) * (1.0 - _tr_am_sq(a, np.asarray(M)).real)
    return float(out) if np.ndim(out) == 0 else out


def e_statistic_unit(A, M):
    """Unitary error integrand for the real part of ``W`` (diagonal ``A``).

    Returns ``1/(2(n^2-1)) + n/(2(n^2-1)) * Re[-tr((AM)^2) + (W^2 - |W|^2)/n]``
    per draw, before conditioning on ``W``.  The Stein error term for
    ``Re W`` (variance 1/2, lambda = 1/n) is ``4/n`` times this value, so
    ``(1/lambda) E|E| = 4 E|value|``.
    """
    a = _diag_of(A)
    n = a.size
    if n < 2:
        raise DimensionError("E statistic needs n >= 2")
    M = np.asarray(M)
    w = np.einsum("i,...ii->...", a, M)
    inner = -_tr_am_sq(a, M) + (w * w - np.abs(w) ** 2) / n
    out = 1.0 / (2 * (n * n - 1)) + n / (2.0 * (n * n - 1)) * inner.real
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class PairBatch:
    """I.i.d. draws of the pair at several ``eps`` (common random numbers).

    ``delta_plus[k]`` / ``delta_minus[k]`` hold ``W_eps - W`` at
    ``+eps_grid[k]`` and ``-eps_grid[k]``.  ``x`` is the conditioning
    statistic (``W`` or ``Re W``) and ``e_stat`` the per-draw closed-form
    error integrand of :func:`e_statistic_orth` / :func:`e_statistic_unit`.
    """

    w: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    epsilon: tuple
    group: str
    n: int
    e_stat: np.ndarray
    label: str = "custom"
    k_blocks: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m, N = self.delta_plus.shape
        if self.w.shape != (N,) or self.delta_minus.shape != (m, N) or len(self.epsilon) != m:
            raise ValueError("inconsistent pair batch shapes")

    @property
    def sigma2(self) -> float:
        return 1.0 if self.group == "orthogonal" else 0.5

    @property
    def lam(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return self.w.real

    @property
    def dx_plus(self) -> np.ndarray:
        return self.delta_plus.real

    @property
    def dx_minus(self) -> np.ndarray:
        return self.delta_minus.real

    def __len__(self):
        return self.w.size

    def exchangeability(self, k: int = -1) -> dict:
        """Mean-shift z-score and two-sample KS p-value for ``W`` vs ``W_eps``."""
        d = self.dx_plus[k]
        se = d.std(ddof=1) / math.sqrt(d.size)
        z = float(d.mean() / se) if se > 0 else 0.0
        p = float(stats.ks_2samp(self.x, self.x + d).pvalue)
        return {"epsilon": self.epsilon[k], "mean_shift_z": z, "ks_pvalue": p, "pass": abs(z) <= 4 and p > 1e-3}

    def predicted_quadratic(self) -> np.ndarray:
        """Per-draw ``2 lambda sigma^2 + sigma^2 E`` from the closed forms."""
        if self.group == "orthogonal":
            return 2.0 / self.n + self.e_stat
        return (1.0 + 2.0 * self.e_stat) / self.n


def sample_pairs(
    coef: CoefficientMatrix,
    count: int,
    rng,
    eps_grid=DEFAULT_EPS_GRID,
    workers: int = 1,
    keep_k: bool = False,
) -> PairBatch:
    """Draw ``count`` independent ``(M, H)`` and evaluate the pair on ``eps_grid``.

    ``A`` is first replaced by the diagonal of its singular values, which
    leaves the law of ``W`` unchanged and makes the closed forms apply.
    """
    n = coef.n
    if n < 2:
        raise DimensionError("the exchangeable pair needs n >= 2")
    eps_grid = tuple(float(e) for e in eps_grid)
    for e in eps_grid:
        if not 0 < e < 1:
            raise ValueError(f"epsilon grid values must lie in (0, 1), got {e}")
    D = coef if coef.is_diagonal and np.all(np.isreal(coef.A)) else reduce_to_diagonal(coef)
    group = coef.group
    e_fn = e_statistic_orth if group == "orthogonal" else e_statistic_unit

    def chunk(c, size, stream):
        M = sample_haar(n, group, stream.substream(0), size=size)
        K = sample_haar_frame(n, 2, group, stream.substream(1), size=size)
        w = trace_statistic(D, M)
        dp = np.stack([delta_statistic(D, M, K, e) for e in eps_grid])
        dm = np.stack([delta_statistic(D, M, K, -e) for e in eps_grid])
        return w, dp, dm, e_fn(D, M), (K if keep_k else None)

    parts = map_chunks(chunk, count, rng, workers)
    w = np.concatenate([p[0] for p in parts])
    dp = np.concatenate([p[1] for p in parts], axis=1)
    dm = np.concatenate([p[2] for p in parts], axis=1)
    es = np.concatenate([p[3] for p in parts])
    kb = np.concatenate([p[4] for p in parts]) if keep_k else None
    return PairBatch(w, dp, dm, eps_grid, group, n, es, coef.label, kb)


def extrapolation_weights(eps_grid) -> np.ndarray:
    """Weights giving the ``eps -> 0`` intercept of a fit linear in ``eps^2``."""
    x = np.asarray(eps_grid, dtype=float) ** 2
    if x.size < 2:
        raise ValueError("extrapolation needs at least two eps values")
    X = np.stack([np.ones_like(x), x], axis=1)
    return np.linalg.pinv(X)[0]


def binned_means(x, y, bins: int = 20):
    """Equal-count bins of ``x``: centers, means of ``y``, their SEs, counts."""
    x, y = np.asarray(x), np.asarray(y)
    if x.size < bins * MIN_PER_BIN:
        raise EstimationError(f"need >= {MIN_PER_BIN} samples per bin ({bins * MIN_PER_BIN} total), got {x.size}")
    order = np.argsort(x, kind="stable")
    groups = np.array_split(order, bins)
    centers = np.array([x[g].mean() for g in groups])
    means = np.array([y[g].mean() for g in groups])
    ses = np.array([y[g].std(ddof=1) / math.sqrt(g.size) for g in groups])
    counts = np.array([g.size for g in groups])
    return centers, means, ses, counts


def _binned_slope(x, y, bins):
    c, m, s, _ = binned_means(x, y, bins)
    xc = c - c.mean()
    sxx = float(np.sum(xc**2))
    slope = float(np.sum(xc * (m - m.mean())) / sxx)
    intercept = float(m.mean() - slope * c.mean())
    se = float(math.sqrt(np.sum(xc**2 * s**2)) / sxx)
    resid = m - (intercept + slope * c)
    return slope, intercept, se, resid / s


@dataclass
class ConditionReport:
    """Estimates for the three pair conditions; unset parts stay ``None``."""

    n: int
    group: str
    epsilon: tuple
    label: str = "custom"
    lambda_hat: float | None = None
    lambda_se: float | None = None
    lambda_per_eps: list | None = None
    linear_intercept: float | None = None
    linear_max_bin_z: float | None = None
    quadratic_intercept: float | None = None
    quadratic_se: float | None = None
    quadratic_target: float | None = None
    quadratic_bin_z: list | None = None
    e_hat_samples: np.ndarray | None = field(default=None, repr=False)
    third_moment: dict | None = None
    remainder_diagnostics: dict = field(default_factory=dict)
    exchangeability: dict | None = None

    def checks(self, lambda_tol: float = 0.05, z_global: float = 4.0, z_bin: float = 5.0) -> dict:
        out = {}
        if self.lambda_hat is not None:
            err = abs(self.n * self.lambda_hat - 1.0)
            out["lambda"] = {"n_lambda_hat": self.n * self.lambda_hat, "abs_error": err, "tolerance": lambda_tol, "pass": err <= lambda_tol}
        if self.quadratic_intercept is not None:
            z = (self.quadratic_intercept - self.quadratic_target) / self.quadratic_se
            zb = max(abs(v) for v in self.quadratic_bin_z)
            out["quadratic_global"] = {"mean": self.quadratic_intercept, "target": self.quadratic_target, "z": z, "pass": abs(z) <= z_global}
            out["quadratic_bins"] = {"max_abs_z": zb, "tolerance": z_bin, "pass": zb <= z_bin}
        if self.third_moment is not None:
            out["third_moment"] = {k: self.third_moment[k] for k in ("ratios", "power", "monotone", "pass")}
        if self.exchangeability is not None:
            out["exchangeability"] = self.exchangeability
        return out

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "group": self.group,
            "A": self.label,
            "eps_grid": list(self.epsilon),
            "lambda_hat": self.lambda_hat,
            "lambda_se": self.lambda_se,
            "lambda_per_eps": self.lambda_per_eps,
            "linear_intercept": self.linear_intercept,
            "linear_max_bin_z": self.linear_max_bin_z,
            "quadratic_intercept": self.quadratic_intercept,
            "quadratic_se": self.quadratic_se,
            "quadratic_target": self.quadratic_target,
            "quadratic_bin_z": self.quadratic_bin_z,
            "third_moment": self.third_moment,
            "remainder_diagnostics": self.remainder_diagnostics,
            "checks": self.checks(),
        }
        if self.e_hat_samples is not None:
            e = np.abs(self.e_hat_samples)
            d["e_abs_mean"] = float(e.mean())
        return d


def _batch_for(coef, eps_grid, samples, rng, batch, workers):
    if batch is not None:
        return batch
    if coef is None:
        raise ValueError("need a coefficient matrix or a precomputed batch")
    if len(tuple(eps_grid)) < 2:
        raise ValueError("eps grid needs at least two values")
    return sample_pairs(coef, samples, rng, eps_grid, workers)


def estimate_lambda(coef=None, eps_grid=DEFAULT_EPS_GRID, samples=100_000, rng=0, bins=20, batch=None, workers=1, report=None):
    """Minus the slope of ``E[(W_eps - W)/eps^2 | W]`` against ``W``.

    The antithetic average ``(delta(+eps) + delta(-eps)) / (2 eps^2)`` is
    binned on ``W`` (``Re W`` for the unitary group) and regressed on the
    bin centres, after draw-wise extrapolation to ``eps -> 0``.
    """
    b = _batch_for(coef, eps_grid, samples, rng, batch, workers)
    eps = np.asarray(b.epsilon)
    y = (b.dx_plus + b.dx_minus) / (2 * eps[:, None] ** 2)
    y0 = extrapolation_weights(eps) @ y
    slope, icpt, se, bin_z = _binned_slope(b.x, y0, bins)
    per = [-_binned_slope(b.x, y[k], bins)[0] for k in range(eps.size)]
    r = report or ConditionReport(b.n, b.group, b.epsilon, b.label)
    r.lambda_hat, r.lambda_se, r.lambda_per_eps = -slope, se, per
    r.linear_intercept = icpt
    r.linear_max_bin_z = float(np.max(np.abs(bin_z)))
    r.remainder_diagnostics["lambda_minus_extrapolated"] = [p + slope for p in per]
    r.remainder_diagnostics["linear_bin_residual_z"] = bin_z.tolist()
    return r


def quadratic_condition(coef=None, eps_grid=DEFAULT_EPS_GRID, samples=100_000, rng=0, bins=20, batch=None, workers=1, report=None):
    """Compare ``E[(W_eps - W)^2/eps^2 | W]`` with ``2 lambda sigma^2 + sigma^2 E``.

    The global mean is tested against ``2 sigma^2 / n`` (the error term
    averages to zero), and bin by bin the paired difference between the
    observed squares and the per-draw closed form is tested against zero.
    """
    b = _batch_for(coef, eps_grid, samples, rng, batch, workers)
    eps = np.asarray(b.epsilon)
    q = (b.dx_plus**2 + b.dx_minus**2) / (2 * eps[:, None] ** 2)
    q0 = extrapolation_weights(eps) @ q
    pred = b.predicted_quadratic()
    _, dmean, dse, _ = binned_means(b.x, q0 - pred, bins)
    r = report or ConditionReport(b.n, b.group, b.epsilon, b.label)
    r.quadratic_intercept = float(q0.mean())
    r.quadratic_se = float(q0.std(ddof=1) / math.sqrt(q0.size))
    r.quadratic_target = 2 * b.lam * b.sigma2
    r.quadratic_bin_z = (dmean / dse).tolist()
    r.e_hat_samples = b.e_stat if b.group == "orthogonal" else 4.0 * b.e_stat / b.n
    r.remainder_diagnostics["quadratic_mean_per_eps"] = q.mean(axis=1).tolist()
    return r


def third_moment_rate(batch: PairBatch) -> dict:
    """``mean |W_eps - W|^3 / eps^2`` per eps with its fitted power of eps."""
    eps = np.asarray(batch.epsilon)
    if eps.size < 2:
        raise ValueError("need batches at two or more eps values")
    d = np.concatenate([np.abs(batch.dx_plus) ** 3, np.abs(batch.dx_minus) ** 3], axis=1)
    rates = d.mean(axis=1) / eps**2
    ses = d.std(axis=1, ddof=1) / math.sqrt(d.shape[1]) / eps**2
    power = float(np.polyfit(np.log(eps), np.log(rates), 1)[0])
    order = np.argsort(eps)[::-1]
    ratios = [float(rates[order[k]] / rates[order[k + 1]]) for k in range(eps.size - 1)]
    # eps ratio of each consecutive pair, for checking proportional decay
    eps_ratios = [float(eps[order[k]] / eps[order[k + 1]]) for k in range(eps.size - 1)]
    monotone = bool(np.all(np.diff(rates[order]) < 0))
    ok = power >= 0.9 and monotone and all(0.8 * e <= r <= 1.2 * e for r, e in zip(ratios, eps_ratios))
    return {
        "epsilon": eps[order].tolist(),
        "rates": rates[order].tolist(),
        "rate_se": ses[order].tolist(),
        "ratios": ratios,
        "eps_ratios": eps_ratios,
        "power": power,
        "monotone": monotone,
        "pass": bool(ok),
    }


def check_conditions(coef: CoefficientMatrix, eps_grid=DEFAULT_EPS_GRID, samples=100_000, rng=0, bins=20, workers=1) -> ConditionReport:
    """All three conditions plus the exchangeability diagnostic from one batch."""
    b = sample_pairs(coef, samples, rng, eps_grid, workers)
    r = estimate_lambda(batch=b, bins=bins)
    quadratic_condition(batch=b, bins=bins, report=r)
    r.third_moment = third_moment_rate(b)
    r.exchangeability = b.exchangeability()
    return r


def _e_samples(coef, samples, rng, workers):
    D = coef if coef.is_diagonal and np.all(np.isreal(coef.A)) else reduce_to_diagonal(coef)
    fn = e_statistic_orth if coef.group == "orthogonal" else e_statistic_unit
    n = coef.n

    def chunk(c, size, stream):
        M = sample_haar(n, coef.group, stream, size=size)
        return fn(D, M), trace_statistic(D, M)

    parts = map_chunks(chunk, samples, rng, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def orth_e_bound(coef: CoefficientMatrix, samples: int, rng, workers: int = 1) -> dict:
    """Monte Carlo ``n E|E|`` for the orthogonal group with its chain of bounds."""
    if coef.group != "orthogonal":
        raise ValueError("orth_e_bound needs an orthogonal coefficient matrix")
    n = coef.n
    e, w = _e_samples(coef, samples, rng, workers)
    value, se = abstract_bound(1.0 / n, e)
    # (1 - tr((AM)^2)) recovered from E
    u = e * n * (n - 1) / 2.0
    radicand = float(np.mean(u**2))
    radicand_se = float(np.std(u**2, ddof=1) / math.sqrt(u.size))
    return {
        "value": value,
        "stderr": se,
        "bound": orth_bound(n),
        "jensen": 2.0 / (n - 1) * math.sqrt(radicand),
        "radicand": radicand,
        "radicand_se": radicand_se,
        "radicand_bound": orth_fourth_moment_bound(n) - 1.0,
        "w": w,
    }


def unit_e_bound(coef: CoefficientMatrix, samples: int, rng, workers: int = 1) -> dict:
    """Monte Carlo ``(1/lambda) E|E|`` for ``Re W`` on the unitary group."""
    if coef.group != "unitary":
        raise ValueError("unit_e_bound needs a unitary coefficient matrix")
    n = coef.n
    integrand, w = _e_samples(coef, samples, rng, workers)
    value, se = abstract_bound(1.0 / n, 4.0 * integrand / n)
    return {"value": value, "stderr": se, "bound": unitary_constant(n) / n, "integrand": integrand, "w": w}


def orth_bound(n: int) -> float:
    """``2 sqrt(3) / (n - 1)``."""
    return 2.0 * math.sqrt(3.0) / (n - 1)


def orth_fourth_moment_bound(n: int) -> float:
    """``3 + 6/((n-1)(n+2))``, the bound on ``E[tr((AM)^2)^2]``."""
    return 3.0 + 6.0 / ((n - 1) * (n + 2))


def unitary_constant(n: int) -> float:
    """Explicit ``c`` with ``d_TV(Re W, N(0, 1/2)) <= c/n``.

    Combines ``E|tr((AM)^2)| <= sqrt(2 + 1/(n^2-1))`` and ``E|W|^2 = 1``
    into ``c(n) = 2n/(n^2-1) * (3 + n sqrt(2 + 1/(n^2-1)))``, which tends
    to ``2 sqrt(2)`` and is below 4 for ``n >= 6``.
    """
    if n < 2:
        raise DimensionError("n must be >= 2")
    m = n * n - 1
    return 2.0 * n / m * (3.0 + n * math.sqrt(2.0 + 1.0 / m))

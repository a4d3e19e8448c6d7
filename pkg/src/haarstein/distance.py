"""Distances to Gaussian targets: KS, W1, histogram TV and exact TV.

Exact total variation between two densities is computed by quadrature of
``|f - g|`` after isolating the sign changes of ``f - g``.  Sample-based
total variation (histogram) is biased and is only reported as a diagnostic;
KS with a DKW band is the distribution-free check, valid because KS is
a lower bound for TV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import DimensionError, EstimationError, NumericalError
from .rng import _as_stream

__all__ = [
    "EmpiricalSample",
    "AnalyticDensity",
    "DistanceReport",
    "dkw_radius",
    "normal_density",
    "sphere_marginal_density",
    "ks_distance",
    "wasserstein1",
    "tv_histogram",
    "tv_quadrature",
]

DKW_ALPHA = 1e-3


@dataclass
class EmpiricalSample:
    values: np.ndarray
    label: str = "sample"

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise EstimationError("empty sample")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        self.values = v

    @property
    def count(self) -> int:
        return self.values.size


def _sample(x) -> EmpiricalSample:
    return x if isinstance(x, EmpiricalSample) else EmpiricalSample(x)


@dataclass
class AnalyticDensity:
    """A probability density on an interval (possibly infinite).

    Densities with integrable singularities at finite endpoints give
    ``endpoint_exponent = a < 0`` and ``regular_part`` with
    ``pdf(t) = regular_part(t) * ((t - lo) (hi - t))**a``, so quadrature
    can carry the singular factor as an algebraic weight.
    """

    pdf: Callable
    support: tuple[float, float]
    name: str = "density"
    cdf: Callable | None = None
    quantile: Callable | None = None
    normalization: float = 1.0
    endpoint_exponent: float | None = field(default=None, repr=False)
    regular_part: Callable | None = field(default=None, repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(inside, self.pdf(np.clip(x, lo, hi)), 0.0)
        return v

    @property
    def singular(self) -> bool:
        return self.endpoint_exponent is not None and self.endpoint_exponent < 0

    def integrate(self, fn=None, a: float | None = None, b: float | None = None) -> tuple[float, float]:
        """``int_a^b fn(t) pdf(t) dt`` (whole support and ``fn = 1`` by default)."""
        fn = fn or (lambda t: 1.0)
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
        if a >= b:
            return 0.0, 0.0
        if not self.singular:
            return integrate.quad(lambda t: fn(t) * float(self(t)), a, b, epsabs=1e-14, epsrel=1e-12, limit=400)
        alpha = self.endpoint_exponent
        wa = alpha if a == lo else 0.0
        wb = alpha if b == hi else 0.0

        def smooth(t):
            # singular factors not carried by the quadrature weight
            left = 1.0 if wa else (t - lo) ** alpha
            right = 1.0 if wb else (hi - t) ** alpha
            return fn(t) * self.regular_part(t) * left * right

        if wa or wb:
            return integrate.quad(smooth, a, b, weight="alg", wvar=(wa, wb), epsabs=1e-14, epsrel=1e-12, limit=400)
        return integrate.quad(smooth, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)

    def mass(self, a: float, b: float) -> tuple[float, float]:
        """Probability of ``[a, b]`` and its quadrature error."""
        if self.cdf is not None:
            return float(self.cdf(b) - self.cdf(a)), 0.0
        return self.integrate(None, a, b)


def normal_density(variance: float = 1.0) -> AnalyticDensity:
    s = math.sqrt(variance)
    return AnalyticDensity(
        pdf=lambda x: np.exp(-0.5 * (np.asarray(x) / s) ** 2) / (s * math.sqrt(2 * math.pi)),
        support=(-np.inf, np.inf),
        name=f"N(0,{variance:g})",
        cdf=lambda x: special.ndtr(np.asarray(x) / s),
        quantile=lambda p: s * special.ndtri(p),
    )


def sphere_marginal_density(n: int) -> AnalyticDensity:
    """Density of ``sqrt(n) x_1`` for ``x`` uniform on the unit sphere in R^n.

    ``f_n(t) = c_n (1 - t^2/n)^((n-3)/2)`` on ``|t| <= sqrt(n)``, with
    ``c_n`` fixed by quadrature.  For ``n = 2`` the endpoints are
    integrable singularities.
    """
    if n < 2:
        raise DimensionError("sphere marginal needs n >= 2")
    a = (n - 3) / 2.0
    r = math.sqrt(n)
    # t = r s:  int (1 - t^2/n)^a dt = r int_{-1}^{1} (1 - s^2)^a ds
    if a < 0:
        total, err = integrate.quad(lambda s: r, -1.0, 1.0, weight="alg", wvar=(a, a), epsabs=0.0, epsrel=1e-13)
    else:
        total, err = integrate.quad(lambda s: r * (1.0 - s * s) ** a, -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    if err > 1e-10 * total:
        raise NumericalError("sphere marginal normalization did not converge")
    c = 1.0 / total

    def pdf(t):
        u = np.clip(1.0 - np.asarray(t, dtype=float) ** 2 / n, 0.0, None)
        with np.errstate(divide="ignore"):
            return c * u**a

    return AnalyticDensity(
        pdf, (-r, r), f"sphere_marginal({n})", normalization=c,
        endpoint_exponent=a, regular_part=lambda t: c * n ** (-a),
    )


def dkw_radius(count: int, alpha: float = DKW_ALPHA) -> float:
    """DKW half-width: ``sup|F_N - F| <= radius`` with probability ``1 - alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * count))


@dataclass
class DistanceReport:
    metric: str
    value: float
    error: float
    bound: float | None = None
    bound_label: str | None = None
    n: int | None = None
    samples: int | None = None
    caveat: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.bound is None:
            return None
        return self.value - self.error <= self.bound

    def to_dict(self) -> dict:
        d = {
            "metric": self.metric,
            "value": self.value,
            "error": self.error,
            "bound": self.bound,
            "bound_label": self.bound_label,
            "n": self.n,
            "samples": self.samples,
            "pass": self.passed,
        }
        if self.caveat:
            d["caveat"] = self.caveat
        d.update(self.extra)
        return d


def ks_distance(sample, cdf: Callable, bound: float | None = None, alpha: float = DKW_ALPHA, **meta) -> DistanceReport:
    """Kolmogorov-Smirnov statistic against ``cdf`` with a DKW error bar."""
    s = _sample(sample)
    if s.count < 1000:
        raise EstimationError("KS distance needs at least 10^3 samples")
    if isinstance(cdf, AnalyticDensity):
        cdf = cdf.cdf
    value = float(stats.kstest(s.values, cdf).statistic)
    return DistanceReport("KS", value, dkw_radius(s.count, alpha), bound, samples=s.count, **meta)


def wasserstein1(sample, quantile: Callable, **meta) -> DistanceReport:
    """``mean |x_(i) - q((i - 1/2)/N)|``; no bound attached."""
    s = _sample(sample)
    if isinstance(quantile, AnalyticDensity):
        quantile = quantile.quantile
    N = s.count
    q = quantile((np.arange(1, N + 1) - 0.5) / N)
    return DistanceReport("W1", float(np.mean(np.abs(s.values - q))), 0.0, samples=N, **meta)


def tv_histogram(
    sample,
    density: AnalyticDensity,
    bins: int = 64,
    lo: float = -6.0,
    hi: float = 6.0,
    bootstrap: int = 200,
    rng=0,
    bound: float | None = None,
    **meta,
) -> DistanceReport:
    """``(1/2) sum_b |p_hat_b - p_b|`` over bins of ``[lo, hi]`` plus two tails.

    Biased upward by sampling noise; the error bar is the bootstrap
    standard deviation of the statistic.
    """
    s = _sample(sample)
    if s.count < 10_000:
        raise EstimationError("histogram TV needs at least 10^4 samples")
    edges = np.concatenate([[-np.inf], np.linspace(lo, hi, bins + 1), [np.inf]])
    counts = np.histogram(s.values, edges)[0]
    N = s.count
    target = np.array([density.mass(a, b)[0] for a, b in zip(edges[:-1], edges[1:])])
    value = 0.5 * float(np.sum(np.abs(counts / N - target)))
    gen = _as_stream(rng).generator()
    boot = gen.multinomial(N, counts / N, size=bootstrap) / N
    spread = float(np.std(0.5 * np.abs(boot - target).sum(axis=1), ddof=1))
    return DistanceReport(
        "TV-hist", value, spread, bound, samples=N,
        caveat="histogram estimate, biased upward by sampling noise", **meta,
    )


def _sign_change_points(h: Callable, a: float, b: float, m: int = 4001) -> list[float]:
    # infinite pieces: the densities used here are negligible beyond |t| = 40
    a, b = max(a, -40.0), min(b, 40.0)
    if a >= b:
        return []
    span = b - a
    t = np.linspace(a + 1e-9 * span, b - 1e-9 * span, m)
    v = np.array([h(x) for x in t])
    roots = []
    for k in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(optimize.brentq(h, t[k], t[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    return roots


def tv_quadrature(f: AnalyticDensity, g: AnalyticDensity, tol: float = 1e-8, **meta) -> DistanceReport:
    """Exact ``(1/2) int |f - g|`` by piecewise adaptive quadrature.

    Pieces are delimited by the finite support endpoints of both densities
    and by the sign changes of ``f - g``.  On each piece ``f - g`` keeps
    its sign, so the piece contributes ``|mass_f - mass_g|``.
    """
    cuts = sorted({x for d in (f, g) for x in d.support})

    def diff(t):
        return float(f(t)) - float(g(t))

    total, err = 0.0, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a == b:
            continue
        pts = [a] + _sign_change_points(diff, a, b) + [b]
        for lo, hi in zip(pts[:-1], pts[1:]):
            mf, ef = f.mass(lo, hi)
            mg, eg = g.mass(lo, hi)
            total += abs(mf - mg)
            err += ef + eg
    value, error = 0.5 * total, 0.5 * err
    if error > tol:
        raise NumericalError(f"TV quadrature error {error:.2e} exceeds {tol:.0e}")
    return DistanceReport("TV-exact", value, error, **meta)

"""The Gaussian Stein equation and its classical solution.

For a test function ``g`` the solution of ``f'(x) - x f(x) = g(x) - E g(Z)``
is

    f(t) = exp(t^2/2) * integral_{-inf}^{t} (g(x) - E g(Z)) exp(-x^2/2) dx,

evaluated here on a uniform grid.  For ``t > 0`` the equivalent form with
the upper tail integral is used so nothing overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, special

from .errors import NumericalError

__all__ = [
    "TestFunction",
    "SteinSolution",
    "SteinBoundReport",
    "gauss_expectation",
    "stein_transform",
    "verify_stein_bounds",
    "abstract_bound",
    "test_family",
]

DEFAULT_L = 8.0
DEFAULT_STEP = 1e-3
_SQRT_2PI = math.sqrt(2 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / _SQRT_2PI


@dataclass
class TestFunction:
    """A function sampled on a uniform grid of ``[-L, L]``.

    Evaluation between nodes uses a cubic spline.  When ``func`` is supplied
    it is used for quadrature outside the grid (Gaussian tails).
    """

    __test__ = False  # not a pytest class

    values: np.ndarray
    L: float = DEFAULT_L
    step: float = DEFAULT_STEP
    func: Callable | None = field(default=None, repr=False)
    name: str = "g"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = int(round(2 * self.L / self.step)) + 1
        if self.values.shape != (m,):
            raise ValueError(f"expected {m} grid values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("test function values must be finite")
        self._spline = interpolate.CubicSpline(self.grid, self.values)

    @classmethod
    def from_callable(cls, func: Callable, L: float = DEFAULT_L, step: float = DEFAULT_STEP, name: str | None = None):
        m = int(round(2 * L / step)) + 1
        x = np.linspace(-L, L, m)
        vals = np.broadcast_to(np.asarray(func(x), dtype=float), x.shape).copy()
        return cls(vals, L, step, func, name or getattr(func, "__name__", "g"))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.values.size)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape)
        return self._spline(x)

    def sup_norm(self, shift: float = 0.0) -> float:
        return float(np.max(np.abs(self.values - shift)))

    def derivative_values(self) -> np.ndarray:
        """Central differences inside, one-sided second order at the ends."""
        return np.gradient(self.values, self.step, edge_order=2)

    def derivative_sup_norm(self) -> float:
        return float(np.max(np.abs(self.derivative_values())))


def gauss_expectation(g, L: float = DEFAULT_L, tol: float = 1e-9) -> float:
    """``E g(Z)`` for standard normal ``Z`` by adaptive quadrature.

    Callables are integrated over the whole line; grid functions over
    ``[-L, L]`` (the Gaussian mass beyond ``L = 8`` is below 1e-15).
    """
    if isinstance(g, TestFunction):
        f = g.func if g.func is not None else g._spline
        lim = (-np.inf, np.inf) if g.func is not None else (-g.L, g.L)
    else:
        f, lim = g, (-np.inf, np.inf)

    def integrand(x):
        return float(f(np.float64(x))) * math.exp(-0.5 * x * x) / _SQRT_2PI

    total, err = 0.0, 0.0
    # split at the bulk so quad sees the structure
    pieces = [(lim[0], -L), (-L, 0.0), (0.0, L), (L, lim[1])] if np.isinf(lim[0]) else [(lim[0], 0.0), (0.0, lim[1])]
    for a, b in pieces:
        val, e = integrate.quad(integrand, a, b, epsabs=tol / 8, epsrel=1e-12, limit=400)
        total += val
        err += e
    if err > tol:
        raise NumericalError(f"Gaussian quadrature error {err:.2e} exceeds {tol:.0e}")
    return total


@dataclass
class SteinSolution:
    f: TestFunction
    g: TestFunction
    gauss_mean_g: float

    def residual(self) -> np.ndarray:
        """``f' - x f - (g - E g(Z))`` at interior grid nodes.

        ``f'`` uses the five-point central stencil (truncation O(h^4)).
        """
        x = self.f.grid
        v = self.f.values
        df = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * self.f.step)
        return df - x[2:-2] * v[2:-2] - (self.g.values[2:-2] - self.gauss_mean_g)

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual())))


def _tail_integral(h: Callable, a: float, b: float) -> float:
    val, _ = integrate.quad(h, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def stein_transform(g: TestFunction, mean: float | None = None) -> SteinSolution:
    """Solve the Stein equation for ``g`` on its grid.

    The integrand ``(g - E g(Z)) exp(-x^2/2)`` is splined and integrated
    exactly piecewise; the parts beyond ``[-L, L]`` come from quadrature of
    ``g.func`` when available.  Left of zero the lower integral is used,
    right of zero minus the upper one, so ``exp(t^2/2)`` multiplies a
    quantity of order ``exp(-t^2/2)``.
    """
    Eg = gauss_expectation(g) if mean is None else float(mean)
    x = g.grid
    hvals = (g.values - Eg) * np.exp(-0.5 * x**2)
    H = interpolate.CubicSpline(x, hvals).antiderivative()
    cum = H(x) - H(x[0])  # integral from -L to x
    total = cum[-1]

    if g.func is not None:
        def h(t):
            return (float(g.func(np.float64(t))) - Eg) * math.exp(-0.5 * t * t)

        left_tail = _tail_integral(h, -np.inf, x[0])
        right_tail = _tail_integral(h, x[-1], np.inf)
    else:
        left_tail = right_tail = 0.0

    lower = left_tail + cum
    upper = (total - cum) + right_tail
    with np.errstate(over="ignore"):
        grow = np.exp(0.5 * x**2)
    fvals = np.where(x <= 0, grow * lower, -grow * upper)
    if not np.all(np.isfinite(fvals)):
        raise NumericalError("Stein solution overflowed")
    f = TestFunction(fvals, g.L, g.step, None, f"U[{g.name}]")
    return SteinSolution(f, g, Eg)


@dataclass
class SteinBoundReport:
    """Sup-norm bounds on the Stein solution and its first two derivatives."""

    name: str
    sup_f: float
    sup_df: float
    sup_d2f: float
    bound_f: float
    bound_df: float
    bound_d2f: float
    max_residual: float
    # absolute slack for finite-difference truncation in the derivative norms
    fd_slack: float = 1e-6

    @property
    def holds(self) -> tuple[bool, bool, bool]:
        s = self.fd_slack
        return (
            self.sup_f <= self.bound_f + s,
            self.sup_df <= self.bound_df + s,
            self.sup_d2f <= self.bound_d2f + s,
        )

    @property
    def margins(self) -> tuple[float, float, float]:
        return (self.bound_f - self.sup_f, self.bound_df - self.sup_df, self.bound_d2f - self.sup_d2f)

    @property
    def passed(self) -> bool:
        return all(self.holds)

    def to_dict(self) -> dict:
        return {
            "function": self.name,
            "sup_f": self.sup_f,
            "sup_df": self.sup_df,
            "sup_d2f": self.sup_d2f,
            "bound_f": self.bound_f,
            "bound_df": self.bound_df,
            "bound_d2f": self.bound_d2f,
            "margins": list(self.margins),
            "holds": list(self.holds),
            "max_residual": self.max_residual,
            "pass": self.passed,
        }


def verify_stein_bounds(g: TestFunction, solution: SteinSolution | None = None) -> SteinBoundReport:
    """Check the three classical sup-norm bounds for ``f = U g`` on the grid.

    ``|f| <= sqrt(pi/2) |g - Eg|``, ``|f'| <= 2 |g - Eg|`` and
    ``|f''| <= 2 |g'|``, all in sup norm over the grid.
    """
    sol = stein_transform(g) if solution is None else solution
    f = sol.f
    h = f.step
    d1 = (f.values[2:] - f.values[:-2]) / (2 * h)
    d2 = (f.values[2:] - 2 * f.values[1:-1] + f.values[:-2]) / h**2
    centered = g.sup_norm(sol.gauss_mean_g)
    return SteinBoundReport(
        name=g.name,
        sup_f=f.sup_norm(),
        sup_df=float(np.max(np.abs(d1))),
        sup_d2f=float(np.max(np.abs(d2))),
        bound_f=math.sqrt(math.pi / 2) * centered,
        bound_df=2 * centered,
        bound_d2f=2 * g.derivative_sup_norm(),
        max_residual=sol.max_residual(),
    )


def abstract_bound(lam: float, e_samples) -> tuple[float, float]:
    """``(1/lam) * mean|E|`` and its Monte Carlo standard error."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    e = np.abs(np.asarray(e_samples, dtype=float).ravel())
    if e.size == 0:
        raise ValueError("no E samples")
    se = float(e.std(ddof=1) / math.sqrt(e.size)) if e.size > 1 else 0.0
    return float(e.mean() / lam), se / lam


def test_family() -> list[TestFunction]:
    """Ten smooth bounded test functions used by the solver checks."""
    fns = {
        "sin": np.sin,
        "cos": np.cos,
        "tanh": np.tanh,
        "arctan": np.arctan,
        "normal_cdf": special.ndtr,
        "gauss_bump": lambda x: np.exp(-np.asarray(x) ** 2),
        "cauchy_bump": lambda x: 1.0 / (1.0 + np.asarray(x) ** 2),
        "logistic": special.expit,
        "damped_sin3": lambda x: np.sin(3 * np.asarray(x)) * np.exp(-np.asarray(x) ** 2 / 4),
        "hermite_bump": lambda x: np.asarray(x) * np.exp(-np.asarray(x) ** 2 / 2),
    }
    return [TestFunction.from_callable(f, name=k) for k, f in fns.items()]


test_family.__test__ = False

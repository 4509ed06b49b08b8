"""Shared numerical kernels.

Normal CDF, stabilized exponential-weight sums, semi-infinite quadrature,
bracketed root finding on monotone functions, and time grids.  Everything in
here is a pure function of its inputs and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


class DegenerateWeightsError(ValueError):
    """All log terms are -inf: the weighted state carries zero mass."""


class QuadratureError(ValueError):
    """Integrand returned a non-finite value at a quadrature node."""


class SignFixedError(ValueError):
    """Monotone function has constant sign over the expansion range.

    ``sign`` is +1 when the function stays positive, -1 when it stays
    negative.  Callers pricing plus-functions map this onto the
    always-in / always-out branches instead of treating it as a failure.
    """

    def __init__(self, sign: int, message: str):
        super().__init__(message)
        self.sign = sign


def normal_cdf(x):
    """Standard normal distribution function N(x).

    Accepts a float or ndarray; absolute error below 1e-15 (erfc-based).
    Non-finite inputs are rejected.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("normal_cdf requires finite input")
    out = ndtr(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def normal_pdf(x):
    arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * arr * arr) / np.sqrt(2.0 * np.pi)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def logsumexp_weights(log_terms) -> tuple[float, np.ndarray]:
    """Stable (log of total, normalized weights) for exponential weights.

    Invariant under adding a constant to every log term; weights sum to 1
    up to roundoff.  -inf entries are allowed (zero weight); if every entry
    is -inf the state is degenerate and ``DegenerateWeightsError`` is raised.
    """
    lt = np.asarray(log_terms, dtype=float)
    if lt.size == 0:
        raise ValueError("logsumexp_weights requires a non-empty list")
    if np.any(np.isnan(lt)) or np.any(lt == np.inf):
        raise ValueError("log terms must be < +inf and not NaN")
    m = lt.max()
    if m == -np.inf:
        raise DegenerateWeightsError("all log terms are -inf (zero total mass)")
    shifted = np.exp(lt - m)
    total = shifted.sum()
    return float(m + np.log(total)), shifted / total


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing evaluation times starting at 0."""

    nodes: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        if t.size < 2:
            raise ValueError("TimeGrid needs at least two nodes")
        if t[0] != 0.0:
            raise ValueError("TimeGrid must start at 0")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("TimeGrid nodes must be strictly increasing")

    @classmethod
    def uniform(cls, end: float, steps: int) -> "TimeGrid":
        if end <= 0.0 or steps < 1:
            raise ValueError("uniform grid needs end > 0 and steps >= 1")
        return cls(tuple(np.linspace(0.0, end, steps + 1)))

    @classmethod
    def from_times(cls, times) -> "TimeGrid":
        return cls(tuple(float(t) for t in times))

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=float)

    @property
    def end(self) -> float:
        return self.nodes[-1]

    def refine(self) -> "TimeGrid":
        """Insert midpoints between consecutive nodes."""
        t = self.times
        mid = 0.5 * (t[:-1] + t[1:])
        return TimeGrid(tuple(np.sort(np.concatenate([t, mid]))))

    def restrict(self, end: float) -> "TimeGrid":
        t = self.times
        return TimeGrid(tuple(t[t <= end + 1e-15]))


def merge_times(*groups, tol: float = 1e-12) -> tuple[float, ...]:
    """Sorted union of time values with near-duplicates collapsed.

    Earlier groups win: list special times (pay dates, maturities, rate
    breakpoints) before filled-in grids so the exact values survive.
    """
    kept: list[float] = []
    for group in groups:
        for value in group:
            v = float(value)
            if not any(abs(v - k) <= tol * max(1.0, abs(k)) for k in kept):
                kept.append(v)
    return tuple(sorted(kept))


def _gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(int(n))
    return 0.5 * (t + 1.0), 0.5 * w


@dataclass(frozen=True)
class QuadratureRule:
    """Fixed nodes/weights approximating an integral over the support.

    For [0, inf) rules the nodes come from Gauss-Legendre on u in (0, 1)
    pushed through x = L u / (1 - u); the map scale L is chosen per prior
    so both light and heavy exponential tilting of the integrand stay
    resolved.  ``truncation_upper`` is the largest node actually used.
    """

    nodes: np.ndarray
    weights: np.ndarray
    truncation_upper: float

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("nodes and weights must be 1-D and congruent")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")

    @classmethod
    def semi_infinite(cls, scale: float, n: int = 256) -> "QuadratureRule":
        """Rule for integrals over [0, inf) with mass concentrated near ``scale``."""
        if scale <= 0.0 or not np.isfinite(scale):
            raise ValueError("scale must be positive and finite")
        u, wu = _gauss_legendre_unit(n)
        x = scale * u / (1.0 - u)
        w = wu * scale / (1.0 - u) ** 2
        return cls(x, w, float(x[-1]))

    @classmethod
    def on_interval(cls, lo: float, hi: float, n: int = 256) -> "QuadratureRule":
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise ValueError("need finite lo < hi")
        u, wu = _gauss_legendre_unit(n)
        return cls(lo + (hi - lo) * u, (hi - lo) * wu, float(hi))

    def __len__(self) -> int:
        return len(self.nodes)


def integrate_semiinfinite(f, rule: QuadratureRule) -> float:
    """Sum w_i f(x_i); raises QuadratureError naming the first bad node."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise QuadratureError(f"integrand non-finite at node {i} (x={rule.nodes[i]:g})")
    return float(np.dot(rule.weights, vals))


def find_root_increasing(
    g,
    bracket_seed: float,
    *,
    atol: float = 1e-12,
    rtol: float = 1e-10,
    max_doublings: int = 200,
) -> float:
    """Root of a continuous, strictly increasing function.

    Brackets by geometric expansion (factor 2) away from ``bracket_seed``,
    then bisects.  Stops when |g(mid)| <= atol or the bracket width falls
    below rtol * max(1, |mid|).  If g keeps one sign over the whole
    expansion range, raises ``SignFixedError`` carrying that sign.
    """
    z = float(bracket_seed)
    gz = float(g(z))
    if abs(gz) <= atol:
        return z
    step = 1.0
    if gz > 0.0:
        hi, ghi = z, gz
        lo = z - step
        glo = float(g(lo))
        n = 0
        while glo > 0.0:
            n += 1
            if n > max_doublings:
                raise SignFixedError(+1, "no root: function positive over expansion range")
            hi, ghi = lo, glo
            step *= 2.0
            lo = z - step
            glo = float(g(lo))
    else:
        lo, glo = z, gz
        hi = z + step
        ghi = float(g(hi))
        n = 0
        while ghi < 0.0:
            n += 1
            if n > max_doublings:
                raise SignFixedError(-1, "no root: function negative over expansion range")
            lo, glo = hi, ghi
            step *= 2.0
            hi = z + step
            ghi = float(g(hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = float(g(mid))
        if abs(gm) <= atol or (hi - lo) <= rtol * max(1.0, abs(mid)):
            return mid
        if gm > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)

"""A priori laws of payout factors.

Each prior exposes density/log-density, exact sampling, the first three
moments, the CDF/quantile, and a quadrature rule adapted to its support.
Priors are immutable; sampling takes an externally supplied generator.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, ndtr, ndtri

from .numerics import QuadratureRule

_TAIL_MASS = 1e-6  # map-scale quantile for semi-infinite quadrature


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    third_central: float


class PriorDistribution:
    """Base interface; concrete priors are frozen dataclasses below."""

    #: (lo, hi) support; hi may be inf, lo may be -inf (standard normal only)
    support: tuple[float, float] = (0.0, np.inf)

    @property
    def is_discrete(self) -> bool:
        return False

    def log_density(self, x):
        raise NotImplementedError

    def density(self, x):
        """Density p(x); zero outside the support (not an error)."""
        arr = np.asarray(x, dtype=float)
        out = np.exp(self.log_density(arr))
        return float(out) if arr.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def moments(self) -> Moments:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def quadrature(self, n: int = 256) -> QuadratureRule:
        """Rule resolving this prior and its exponentially tilted reweightings."""
        lo, hi = self.support
        if lo == 0.0 and np.isposinf(hi):
            return QuadratureRule.semi_infinite(self.quantile(1.0 - _TAIL_MASS), n)
        if np.isfinite(lo) and np.isfinite(hi):
            return QuadratureRule.on_interval(lo, hi, n)
        # Whole-line support: widen past the quantile so Gaussian tails are
        # below 1e-20 and second moments hold to 1e-8.
        b = max(10.0, self.quantile(1.0 - _TAIL_MASS) + 6.0)
        return QuadratureRule.on_interval(-b, b, n)


@dataclass(frozen=True)
class DiscreteAtoms(PriorDistribution):
    """Finitely many atoms (x_i, p_i); probabilities sum to 1."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("need at least one atom")
        xs = [x for x, _ in self.atoms]
        ps = [p for _, p in self.atoms]
        if any(p <= 0.0 for p in ps):
            raise ValueError("atom probabilities must be positive")
        if abs(sum(ps) - 1.0) > 1e-14:
            raise ValueError("atom probabilities must sum to 1 within 1e-14")
        if sorted(xs) != xs or len(set(xs)) != len(xs):
            raise ValueError("atom locations must be strictly increasing")

    @property
    def is_discrete(self) -> bool:
        return True

    @property
    def support(self) -> tuple[float, float]:
        return (self.atoms[0][0], self.atoms[-1][0])

    @property
    def xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    def log_density(self, x):
        raise TypeError("discrete prior has no density; use .atoms")

    def sample(self, rng, size=None):
        cum = np.cumsum(self.probabilities)
        u = rng.uniform(size=size)
        idx = np.searchsorted(cum, u, side="right")
        out = self.xs[np.minimum(idx, len(self.atoms) - 1)]
        return float(out) if size is None else out

    def moments(self) -> Moments:
        x, p = self.xs, self.probabilities
        m = float(np.dot(p, x))
        return Moments(m, float(np.dot(p, (x - m) ** 2)), float(np.dot(p, (x - m) ** 3)))

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        cum = np.cumsum(self.probabilities)
        idx = np.searchsorted(self.xs, arr, side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if arr.ndim == 0 else out

    def quantile(self, p: float) -> float:
        cum = np.cumsum(self.probabilities)
        return float(self.xs[int(np.searchsorted(cum, p - 1e-15))])

    def quadrature(self, n: int = 256) -> QuadratureRule:
        raise TypeError("discrete prior carries exact atoms; no quadrature rule")


@dataclass(frozen=True)
class Exponential(PriorDistribution):
    """p(x) = (1/scale) exp(-x/scale) on [0, inf); mean equals scale."""

    scale: float

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr >= 0.0, -arr / self.scale - np.log(self.scale), -np.inf)
        return out

    def sample(self, rng, size=None):
        return rng.exponential(self.scale, size)

    def moments(self) -> Moments:
        d = self.scale
        return Moments(d, d * d, 2.0 * d**3)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr >= 0.0, -np.expm1(-arr / self.scale), 0.0)
        return float(out) if arr.ndim == 0 else out

    def quantile(self, p: float) -> float:
        return float(-self.scale * np.log1p(-p))


@dataclass(frozen=True)
class Gamma(PriorDistribution):
    """p(x) = rate^n / (n-1)! x^(n-1) exp(-rate x); n a positive integer."""

    order: int
    rate: float

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        n, d = self.order, self.rate
        with np.errstate(divide="ignore"):
            lx = np.where(arr > 0.0, np.log(np.maximum(arr, 1e-300)), -np.inf)
        head = n * np.log(d) - math.lgamma(n)
        if n == 1:  # gamma(1, rate) is exponential: finite density at 0
            return np.where(arr >= 0.0, head - d * arr, -np.inf)
        return np.where(arr >= 0.0, head + (n - 1) * lx - d * arr, -np.inf)

    def sample(self, rng, size=None):
        return rng.gamma(self.order, 1.0 / self.rate, size)

    def moments(self) -> Moments:
        n, d = self.order, self.rate
        return Moments(n / d, n / d**2, 2.0 * n / d**3)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr >= 0.0, gammainc(self.order, self.rate * np.maximum(arr, 0.0)), 0.0)
        return float(out) if arr.ndim == 0 else out

    def quantile(self, p: float) -> float:
        return float(gammaincinv(self.order, p) / self.rate)


@dataclass(frozen=True)
class LogNormalTerminal(PriorDistribution):
    """Law of s0 * exp(rate*horizon + vol*sqrt(horizon)*Z - vol^2*horizon/2).

    The terminal value of a lognormal growth model with drift ``rate`` and
    volatility ``vol`` over ``horizon`` years; mean is s0 * exp(rate*horizon).
    """

    s0: float
    rate: float
    vol: float
    horizon: float

    def __post_init__(self):
        if self.s0 <= 0.0 or self.vol <= 0.0 or self.horizon <= 0.0:
            raise ValueError("s0, vol and horizon must be positive")

    @property
    def _mu(self) -> float:
        return math.log(self.s0) + self.rate * self.horizon - 0.5 * self.vol**2 * self.horizon

    @property
    def _s(self) -> float:
        return self.vol * math.sqrt(self.horizon)

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        mu, s = self._mu, self._s
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(arr, 1e-300))
        z = (lx - mu) / s
        out = -0.5 * z * z - lx - np.log(s * np.sqrt(2.0 * np.pi))
        return np.where(arr > 0.0, out, -np.inf)

    def sample(self, rng, size=None):
        z = rng.standard_normal(size)
        return self.s0 * np.exp(
            self.rate * self.horizon + self.vol * np.sqrt(self.horizon) * z
            - 0.5 * self.vol**2 * self.horizon
        )

    def moments(self) -> Moments:
        m = self.s0 * math.exp(self.rate * self.horizon)
        g = math.exp(self._s**2)  # exp(vol^2 * horizon)
        var = m * m * (g - 1.0)
        third = m**3 * (g - 1.0) ** 2 * (g + 2.0)
        return Moments(m, var, third)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr > 0.0, ndtr((np.log(np.maximum(arr, 1e-300)) - self._mu) / self._s), 0.0)
        return float(out) if arr.ndim == 0 else out

    def quantile(self, p: float) -> float:
        return float(np.exp(self._mu + self._s * ndtri(p)))


@dataclass(frozen=True)
class StandardNormal(PriorDistribution):
    """Mean-zero unit-variance factor; the only prior with negative support."""

    support = (-np.inf, np.inf)

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        return -0.5 * arr * arr - 0.5 * np.log(2.0 * np.pi)

    def sample(self, rng, size=None):
        return rng.standard_normal(size)

    def moments(self) -> Moments:
        return Moments(0.0, 1.0, 0.0)

    def cdf(self, x):
        out = ndtr(np.asarray(x, dtype=float))
        return float(out) if np.asarray(x).ndim == 0 else out

    def quantile(self, p: float) -> float:
        return float(ndtri(p))


@dataclass(frozen=True)
class Tabulated(PriorDistribution):
    """Piecewise-linear density on a user grid, renormalized on load."""

    xs: tuple[float, ...]
    densities: tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.xs, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if x.size < 2 or x.shape != d.shape:
            raise ValueError("need matching x/density grids with >= 2 points")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("x grid must be strictly increasing")
        if np.any(d < 0.0) or not np.any(d > 0.0):
            raise ValueError("densities must be nonnegative with positive mass")
        mass = np.trapezoid(d, x)
        object.__setattr__(self, "densities", tuple(d / mass))
        edge = max(d[0], d[-1]) / d.max()
        if edge > 1e-3:
            warnings.warn(
                "tabulated density does not vanish at the grid edge; "
                "tail mass beyond the truncation is ignored",
                stacklevel=2,
            )

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Two-column CSV (x, density) with a header row."""
        xs, ds = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)  # header
            for row in reader:
                if not row:
                    continue
                xs.append(float(row[0]))
                ds.append(float(row[1]))
        return cls(tuple(xs), tuple(ds))

    @property
    def support(self) -> tuple[float, float]:
        return (self.xs[0], self.xs[-1])

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.xs), np.asarray(self.densities)

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        xs, ds = self._arrays()
        inside = (arr >= xs[0]) & (arr <= xs[-1])
        val = np.interp(arr, xs, ds)
        with np.errstate(divide="ignore"):
            return np.where(inside & (val > 0.0), np.log(np.maximum(val, 1e-300)), -np.inf)

    def _raw_moment(self, k: int) -> float:
        # exact: integral of x^k (a + b x) over each segment
        xs, ds = self._arrays()
        total = 0.0
        for i in range(len(xs) - 1):
            x0, x1 = xs[i], xs[i + 1]
            b = (ds[i + 1] - ds[i]) / (x1 - x0)
            a = ds[i] - b * x0
            total += a * (x1 ** (k + 1) - x0 ** (k + 1)) / (k + 1)
            total += b * (x1 ** (k + 2) - x0 ** (k + 2)) / (k + 2)
        return total

    def moments(self) -> Moments:
        m1 = self._raw_moment(1)
        m2 = self._raw_moment(2)
        m3 = self._raw_moment(3)
        var = m2 - m1 * m1
        third = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
        return Moments(m1, var, third)

    def cdf(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        xs, ds = self._arrays()
        seg_mass = 0.5 * (ds[1:] + ds[:-1]) * np.diff(xs)
        cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
        idx = np.clip(np.searchsorted(xs, arr, side="right") - 1, 0, len(xs) - 2)
        x0 = xs[idx]
        d0 = ds[idx]
        slope = (ds[idx + 1] - ds[idx]) / (xs[idx + 1] - xs[idx])
        dx = np.clip(arr - x0, 0.0, xs[idx + 1] - x0)
        partial = d0 * dx + 0.5 * slope * dx * dx
        out = np.clip(cum[idx] + partial, 0.0, 1.0)
        out[arr < xs[0]] = 0.0
        out[arr >= xs[-1]] = 1.0
        return float(out[0]) if np.asarray(x).ndim == 0 else out

    def quantile(self, p: float) -> float:
        xs, ds = self._arrays()
        seg_mass = 0.5 * (ds[1:] + ds[:-1]) * np.diff(xs)
        cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
        i = int(np.clip(np.searchsorted(cum, p, side="right") - 1, 0, len(xs) - 2))
        rem = p - cum[i]
        x0, x1 = xs[i], xs[i + 1]
        d0 = ds[i]
        slope = (ds[i + 1] - d0) / (x1 - x0)
        if abs(slope) < 1e-14:
            dx = rem / max(d0, 1e-300)
        else:
            # solve 0.5*slope*dx^2 + d0*dx - rem = 0 for the root in [0, x1-x0]
            disc = d0 * d0 + 2.0 * slope * rem
            dx = (-d0 + np.sqrt(max(disc, 0.0))) / slope
        return float(np.clip(x0 + dx, x0, x1))

    def sample(self, rng, size=None):
        u = rng.uniform(size=size)
        if size is None:
            return self.quantile(float(u))
        return np.array([self.quantile(float(v)) for v in np.atleast_1d(u)])

    def quadrature(self, n: int = 256) -> QuadratureRule:
        """Composite rule, one Gauss-Legendre panel per density segment.

        The piecewise-linear density has kinks at the grid points; a single
        global rule converges slowly across them, per-segment panels are
        exact for the polynomial pieces.
        """
        xs = np.asarray(self.xs)
        lengths = np.diff(xs)
        n_seg = len(lengths)
        counts = np.maximum(4, np.round(n * lengths / lengths.sum()).astype(int))
        nodes, weights = [], []
        for i in range(n_seg):
            panel = QuadratureRule.on_interval(xs[i], xs[i + 1], int(counts[i]))
            nodes.append(panel.nodes)
            weights.append(panel.weights)
        return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), float(xs[-1]))

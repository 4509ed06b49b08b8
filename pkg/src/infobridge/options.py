"""European call valuation on single-dividend assets.

The call on S_t = P(t,T) E_t[D_T] admits a normal-CDF representation once
the critical information level is known: the level at which the discounted
tilted mean crosses the strike.  The tilted mean is monotone increasing in
the tilt variable (exponential-family mean), so the critical value is a
bracketed one-dimensional root.  Specs whose payoff sign never changes over
the prior support are first-class results (always-in / always-out), not
errors.

Two parameterizations of the same price are provided: the accumulated-tilt
form C0 = P(0,t) * int (P(t,T) x - K) p(x) N(omega_t x - y*) dx, valid for
any deterministic flow rate, and the constant-rate form written in
tau = tT/(T-t) with z* = xi* sqrt(T/(t(T-t))).  For constant rates they
coincide; the acceptance suite checks that to 1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import filtering
from .market import DiscountCurve, FlowSchedule
from .numerics import SignFixedError, TimeGrid, find_root_increasing, logsumexp_weights, merge_times
from .priors import PriorDistribution
from .stochastic import simulate_information_ensemble, stieltjes_series


class OptionError(ValueError):
    pass


@dataclass(frozen=True)
class CallSpec:
    """Call with strike K expiring at t on an asset paying one dividend at T > t."""

    strike: float
    expiry: float
    prior: PriorDistribution
    schedule: FlowSchedule
    curve: DiscountCurve

    def __post_init__(self):
        if self.strike < 0.0:
            raise OptionError("strike must be nonnegative")
        if not (0.0 < self.expiry < self.schedule.maturity):
            raise OptionError("need 0 < expiry < dividend date")

    @property
    def maturity(self) -> float:
        return self.schedule.maturity


@dataclass(frozen=True)
class CriticalValue:
    """Root of the payoff-sign equation, or the degenerate branch taken."""

    kind: str                  # "root" | "always_in" | "always_out"
    y_star: float | None       # root in the accumulated-tilt variable
    xi_star: float | None      # information-level root (constant rate only)


def _support_arrays(spec: CallSpec, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return filtering._support(spec.prior, nodes)


def _tilted_mean(x: np.ndarray, log_base: np.ndarray, omega: float, y: float) -> float:
    _, w = logsumexp_weights(log_base + omega * x * y - 0.5 * omega * omega * x * x)
    return float(np.dot(w, x))


def critical_value(spec: CallSpec, *, nodes: int = 256) -> CriticalValue:
    """Information level at which the call payoff changes sign.

    Found as the root in y of P(t,T) * tilted_mean(y) - K, which is
    monotone increasing; the root is expressed both in the accumulated-tilt
    variable y* and, for constant flow rates, as the raw information level
    xi*.
    """
    t, T, K = spec.expiry, spec.maturity, spec.strike
    p_tT = spec.curve.discount_factor(t, T)
    lo, hi = spec.prior.support
    if spec.prior.is_discrete:
        lo, hi = spec.prior.xs[0], spec.prior.xs[-1]
    if p_tT * lo >= K:
        return CriticalValue(kind="always_in", y_star=None, xi_star=None)
    if p_tT * hi <= K:
        return CriticalValue(kind="always_out", y_star=None, xi_star=None)
    omega = math.sqrt(spec.schedule.omega_squared(t))
    x, log_base = _support_arrays(spec, nodes)

    def h(y: float) -> float:
        return p_tT * _tilted_mean(x, log_base, omega, y) - K

    try:
        y_star = find_root_increasing(h, 0.0)
    except SignFixedError as exc:
        kind = "always_in" if exc.sign > 0 else "always_out"
        return CriticalValue(kind=kind, y_star=None, xi_star=None)
    xi_star = None
    if spec.schedule.is_constant:
        # omega y = (T/(T-t)) sigma xi  =>  xi* = y* sqrt(t(T-t)/T)
        xi_star = y_star * math.sqrt(t * (T - t) / T)
    return CriticalValue(kind="root", y_star=y_star, xi_star=xi_star)


def _forward_value(spec: CallSpec) -> float:
    mean = spec.prior.moments().mean
    return spec.curve.discount(spec.maturity) * mean - spec.curve.discount(spec.expiry) * spec.strike


def call_price_analytic(
    spec: CallSpec, *, nodes: int = 256, parameterization: str = "omega"
) -> float:
    """Analytic call value.

    ``parameterization="omega"`` evaluates
    P(0,t) int (P(t,T)x - K) p(x) N(omega_t x - y*) dx; ``"tau"`` evaluates
    the constant-rate form P(0,T) int x p N(-z* + sigma x sqrt(tau)) -
    P(0,t) K int p N(-z* + sigma x sqrt(tau)).  Always-in degenerates to
    the discounted forward value, always-out to zero.
    """
    crit = critical_value(spec, nodes=nodes)
    if crit.kind == "always_out":
        return 0.0
    if crit.kind == "always_in":
        return _forward_value(spec)
    t, T, K = spec.expiry, spec.maturity, spec.strike
    x, log_base = _support_arrays(spec, nodes)
    mass = np.exp(log_base)
    p0t = spec.curve.discount(t)
    p0T = spec.curve.discount(T)
    if parameterization == "omega":
        omega = math.sqrt(spec.schedule.omega_squared(t))
        n_vals = ndtr(omega * x - crit.y_star)
        p_tT = spec.curve.discount_factor(t, T)
        return p0t * float(np.dot(mass, (p_tT * x - K) * n_vals))
    if parameterization == "tau":
        if not spec.schedule.is_constant:
            raise OptionError("tau parameterization requires a constant flow rate")
        sigma = spec.schedule.sigma_at(0.0)
        tau = t * T / (T - t)
        z_star = crit.xi_star * math.sqrt(T / (t * (T - t)))
        n_vals = ndtr(-z_star + sigma * x * math.sqrt(tau))
        return p0T * float(np.dot(mass, x * n_vals)) - p0t * K * float(np.dot(mass, n_vals))
    raise OptionError(f"unknown parameterization {parameterization!r}")


def put_price_parity(spec: CallSpec, *, nodes: int = 256) -> float:
    """Put value implied by parity: P0 = C0 - (P(0,T) mean - P(0,t) K)."""
    return call_price_analytic(spec, nodes=nodes) - _forward_value(spec)


@dataclass(frozen=True)
class MCPrice:
    estimate: float
    standard_error: float
    n_paths: int


def call_price_mc(
    spec: CallSpec,
    n_paths: int,
    seed: int,
    *,
    nodes: int = 256,
    grid_steps: int = 256,
) -> MCPrice:
    """Monte Carlo oracle: discounted mean of (S_t - K)+ over simulated paths.

    For constant flow rates the state at expiry is the single Gaussian-mixed
    information level, so only xi_t is simulated; time-dependent rates
    simulate the whole path with the grid aligned to the rate breakpoints,
    which keeps the left-endpoint accumulated tilt exact for
    piecewise-constant rates.
    """
    if n_paths < 2:
        raise OptionError("need at least two paths")
    t, T, K = spec.expiry, spec.maturity, spec.strike
    if spec.schedule.is_constant:
        grid = TimeGrid.from_times([0.0, t])
    else:
        grid = TimeGrid.from_times(
            merge_times(
                [0.0, t],
                (b for b in spec.schedule.breakpoints if b < t),
                np.linspace(0.0, t, grid_steps + 1),
            )
        )
    _, xi = simulate_information_ensemble(spec.prior, spec.schedule, grid, seed, n_paths)
    stj = stieltjes_series(spec.schedule, grid, xi)
    probs = filtering.condition_many(
        spec.prior, spec.schedule, t, xi[:, -1], stj[:, -1], nodes=nodes
    )
    x = _support_arrays(spec, nodes)[0]
    s_t = spec.curve.discount_factor(t, T) * (probs @ x)
    payoff = spec.curve.discount(t) * np.maximum(s_t - K, 0.0)
    est = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(n_paths))
    return MCPrice(estimate=est, standard_error=se, n_paths=n_paths)

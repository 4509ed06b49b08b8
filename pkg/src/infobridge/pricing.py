"""Asset prices from filtered factor densities.

Single-flow prices (generic quadrature plus the exponential/gamma closed
forms and the lognormal-growth special case), multi-flow multi-factor
assets, the per-factor volatility decomposition, and ensemble machinery for
pricing along simulated paths.

Conditional expectations over several independent factors are computed from
per-factor densities: payoffs in monomial normal form factorize exactly
through conditional power moments; generic payoffs use a tensor-product
grid for at most ``MAX_TENSOR_FACTORS`` continuous factors, beyond which a
Monte Carlo expectation must be requested explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import erfcx, ndtr

from . import filtering
from .filtering import ConditionalDensity, condition, condition_many, point_mass, support_nodes
from .market import DiscountCurve, FlowSchedule
from .numerics import TimeGrid, merge_times
from .payoff import Payoff
from .priors import Exponential, Gamma, PriorDistribution
from .stochastic import simulate_information_ensemble, stieltjes_series

MAX_TENSOR_FACTORS = 3
_CLOSED_FORM_MIN_TILT = 1e-10


class PricingError(ValueError):
    pass


@dataclass(frozen=True)
class XFactorSpec:
    """Independent market factor revealed at ``maturity``."""

    id: str
    maturity: float
    prior: PriorDistribution
    schedule: FlowSchedule

    def __post_init__(self):
        if abs(self.schedule.maturity - self.maturity) > 1e-12:
            raise PricingError(
                f"factor {self.id}: schedule maturity {self.schedule.maturity} "
                f"differs from factor maturity {self.maturity}"
            )


@dataclass(frozen=True)
class CashFlowSpec:
    """One dividend: paid at ``pay_date``, a function of earlier factors."""

    pay_date: float
    payoff: Payoff

    @classmethod
    def single(cls, factor_id: str, pay_date: float) -> "CashFlowSpec":
        return cls(pay_date=pay_date, payoff=Payoff.identity(factor_id))


@dataclass(frozen=True)
class AssetSpec:
    """Ex-dividend asset: the price excludes flows with pay_date <= t."""

    id: str
    cash_flows: tuple[CashFlowSpec, ...]

    def __post_init__(self):
        dates = [f.pay_date for f in self.cash_flows]
        if not dates:
            raise PricingError(f"asset {self.id} has no cash flows")
        if sorted(dates) != dates or len(set(dates)) != len(dates):
            raise PricingError(f"asset {self.id}: pay dates must be strictly increasing")

    @property
    def factor_ids(self) -> tuple[str, ...]:
        seen: list[str] = []
        for flow in self.cash_flows:
            for fid in flow.payoff.depends_on:
                if fid not in seen:
                    seen.append(fid)
        return tuple(seen)


@dataclass(frozen=True)
class FactorState:
    """Information about one live factor at the valuation time."""

    xi: float
    stieltjes: float | None = None  # optional for constant flow rates


FactorStates = Mapping[str, "FactorState | float"]  # float = revealed value


# ---------------------------------------------------------------------------
# single-flow prices
# ---------------------------------------------------------------------------


def price_single(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    curve: DiscountCurve,
    t: float,
    xi_t: float,
    stieltjes_term: float | None = None,
    *,
    nodes: int = 256,
) -> float:
    """Discounted conditional mean of a single cash flow; 0 once ex-dividend."""
    T = schedule.maturity
    if t >= T:
        return 0.0
    cd = condition(prior, schedule, t, xi_t, stieltjes_term, nodes=nodes)
    return curve.discount_factor(t, T) * filtering.conditional_mean(cd)


def _inverse_mills(h: float) -> float:
    # phi(h) / N(h), stable for arbitrarily negative h
    return math.sqrt(2.0 / math.pi) / erfcx(-h / math.sqrt(2.0))


def closed_form_exponential(
    scale: float,
    sigma: float,
    curve: DiscountCurve,
    t: float,
    maturity: float,
    xi_t: float,
    *,
    nodes: int = 256,
) -> float:
    """Price of an exponential(scale) cash flow under a constant flow rate.

    S_t = P_tT [ exp(-B^2/2A) / (sqrt(2 pi A) N(B/sqrt(A))) + B/A ] with
    A = sigma^2 t T/(T-t) and B = sigma T xi/(T-t) - 1/scale.  The ratio is
    evaluated through the scaled complementary error function, so deep
    out-of-the-money information levels do not underflow.  Near t = 0 the
    formula is 0/0-indeterminate and the quadrature path takes over.
    """
    if t >= maturity:
        return 0.0
    T = maturity
    A = sigma * sigma * t * T / (T - t)
    if A < _CLOSED_FORM_MIN_TILT:
        return price_single(
            Exponential(scale), FlowSchedule.constant(sigma, T), curve, t, xi_t, nodes=nodes
        )
    B = sigma * T * xi_t / (T - t) - 1.0 / scale
    h = B / math.sqrt(A)
    return curve.discount_factor(t, T) * (_inverse_mills(h) + h) / math.sqrt(A)


def gaussian_power_tails(k_max: int, x: float) -> np.ndarray:
    """F_k(x) = integral of z^k exp(-z^2/2) over [x, inf) for k = 0..k_max.

    Computed by the upward recursion (k+1) F_k = F_{k+2} - x^{k+1} e^{-x^2/2}
    started from F_0 = sqrt(2 pi) N(-x) and F_1 = e^{-x^2/2}.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    out = np.empty(k_max + 1)
    e = math.exp(-0.5 * x * x)
    out[0] = math.sqrt(2.0 * math.pi) * ndtr(-x)
    if k_max >= 1:
        out[1] = e
    for k in range(k_max - 1):
        out[k + 2] = (k + 1) * out[k] + x ** (k + 1) * e
    return out


def closed_form_gamma(
    order: int,
    rate: float,
    sigma: float,
    curve: DiscountCurve,
    t: float,
    maturity: float,
    xi_t: float,
    *,
    nodes: int = 256,
) -> float:
    """Price of a gamma(order, rate) cash flow under a constant flow rate.

    Ratio of binomial sums over F_k(-B/sqrt(A)); reduces to the exponential
    formula at order 1.  The alternating sums lose a few digits deep out of
    the money (B << 0), which is inherent to this representation.
    """
    if int(order) != order or order < 1:
        raise PricingError("order must be a positive integer")
    if t >= maturity:
        return 0.0
    T = maturity
    A = sigma * sigma * t * T / (T - t)
    if A < _CLOSED_FORM_MIN_TILT:
        return price_single(
            Gamma(order, rate), FlowSchedule.constant(sigma, T), curve, t, xi_t, nodes=nodes
        )
    B = sigma * T * xi_t / (T - t) - rate
    sA = math.sqrt(A)
    F = gaussian_power_tails(order, -B / sA)
    num = sum(
        math.comb(order, k) * A ** (0.5 * k - order) * B ** (order - k) * F[k]
        for k in range(order + 1)
    )
    den = sum(
        math.comb(order - 1, k) * A ** (0.5 * k - order + 1) * B ** (order - 1 - k) * F[k]
        for k in range(order)
    )
    return curve.discount_factor(t, T) * num / den


def price_gbm_factor(
    s0: float,
    rate: float,
    vol: float,
    schedule: FlowSchedule,
    t: float,
    xi_t: float,
) -> float:
    """Lognormal-growth price s0 exp(rate t + vol xi - vol^2 t / 2).

    Valid only for the flow rate 1/sqrt(T), under which the information
    process itself is the driving Brownian motion.  Other rates must go
    through the generic quadrature route.
    """
    T = schedule.maturity
    if not schedule.is_constant or abs(schedule.sigma_at(0.0) - 1.0 / math.sqrt(T)) > 1e-12:
        raise PricingError("lognormal fast path requires a constant flow rate of 1/sqrt(T)")
    if t >= T:
        return 0.0
    schedule.guard(t)
    return s0 * math.exp(rate * t + vol * xi_t - 0.5 * vol * vol * t)


# ---------------------------------------------------------------------------
# multi-factor expectation machinery
# ---------------------------------------------------------------------------


def _factor_density(
    factor: XFactorSpec, t: float, state, *, nodes: int
) -> ConditionalDensity:
    if factor.maturity <= t:
        if isinstance(state, FactorState) or state is None:
            raise PricingError(
                f"factor {factor.id} is revealed at t={t}; supply its realized value"
            )
        return point_mass(float(state), t)
    if not isinstance(state, FactorState):
        raise PricingError(f"factor {factor.id} is live at t={t}; supply a FactorState")
    return condition(factor.prior, factor.schedule, t, state.xi, state.stieltjes, nodes=nodes)


def _power_moments(cd: ConditionalDensity, k_max: int) -> np.ndarray:
    """E[X^k] for k = 0..k_max under the density."""
    p = cd.probabilities
    out = np.empty(k_max + 1)
    out[0] = 1.0
    xk = np.ones_like(cd.x)
    for k in range(1, k_max + 1):
        xk = xk * cd.x
        out[k] = float(np.dot(p, xk))
    return out


def _flow_expectation(
    payoff: Payoff,
    densities: Mapping[str, ConditionalDensity],
    *,
    extra_factor: str | None = None,
    max_tensor: int = MAX_TENSOR_FACTORS,
) -> float:
    """E[payoff * (X_extra if given)] over independent factor densities."""
    deps = payoff.depends_on
    if payoff.monomials is not None:
        k_max = payoff.max_power + (1 if extra_factor is not None else 0)
        moments = {fid: _power_moments(densities[fid], k_max) for fid in deps}
        if extra_factor is not None and extra_factor not in moments:
            moments[extra_factor] = _power_moments(densities[extra_factor], 1)
        total = 0.0
        for mono in payoff.monomials:
            powers = dict(mono.powers)
            if extra_factor is not None:
                powers[extra_factor] = powers.get(extra_factor, 0) + 1
            term = mono.coefficient
            for fid, k in powers.items():
                term *= moments[fid][k]
            total += term
        return total
    if len(deps) == 1:
        fid = deps[0]
        cd = densities[fid]
        vals = payoff({fid: cd.x})
        if extra_factor == fid:
            vals = vals * cd.x
        elif extra_factor is not None:
            return float(np.dot(cd.probabilities, vals)) * filtering.conditional_mean(
                densities[extra_factor]
            )
        return float(np.dot(cd.probabilities, vals))
    continuous = [fid for fid in deps if len(densities[fid].x) > 8]
    if len(continuous) > max_tensor:
        raise PricingError(
            f"{len(continuous)} continuous factors exceed the tensor limit "
            f"({max_tensor}); use the Monte Carlo expectation (method='mc')"
        )
    shapes = [len(densities[fid].x) for fid in deps]
    grids = {}
    for axis, fid in enumerate(deps):
        shape = [1] * len(deps)
        shape[axis] = shapes[axis]
        grids[fid] = densities[fid].x.reshape(shape)
    vals = payoff(grids)
    if extra_factor is not None:
        vals = vals * grids[extra_factor]
    weights = np.ones([1] * len(deps))
    for axis, fid in enumerate(deps):
        shape = [1] * len(deps)
        shape[axis] = shapes[axis]
        weights = weights * densities[fid].probabilities.reshape(shape)
    return float(np.sum(weights * vals))


def _flow_expectation_mc(
    payoff: Payoff,
    densities: Mapping[str, ConditionalDensity],
    rng: np.random.Generator,
    n_samples: int,
) -> float:
    draws = {}
    for fid in payoff.depends_on:
        cd = densities[fid]
        idx = rng.choice(len(cd.x), size=n_samples, p=cd.probabilities)
        draws[fid] = cd.x[idx]
    return float(np.mean(payoff(draws)))


def price_asset(
    asset: AssetSpec,
    factors: Mapping[str, XFactorSpec],
    curve: DiscountCurve,
    t: float,
    states: FactorStates,
    *,
    nodes: int = 256,
    method: str = "tensor",
    mc_samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> float:
    """Sum of discounted conditional flow expectations over live flows."""
    total = 0.0
    density_cache: dict[str, ConditionalDensity] = {}
    for flow in asset.cash_flows:
        if t >= flow.pay_date:
            continue
        for fid in flow.payoff.depends_on:
            if fid not in density_cache:
                if fid not in factors:
                    raise PricingError(f"payoff references unknown factor {fid!r}")
                if fid not in states:
                    raise PricingError(f"missing information state for factor {fid!r}")
                density_cache[fid] = _factor_density(factors[fid], t, states[fid], nodes=nodes)
        densities = {fid: density_cache[fid] for fid in flow.payoff.depends_on}
        if method == "mc":
            if rng is None:
                raise PricingError("method='mc' requires an rng")
            expectation = _flow_expectation_mc(flow.payoff, densities, rng, mc_samples)
        else:
            expectation = _flow_expectation(flow.payoff, densities)
        total += curve.discount_factor(t, flow.pay_date) * expectation
    return total


@dataclass(frozen=True)
class VolatilityDecomposition:
    """Per-factor absolute volatility terms and their Euclidean total."""

    components: Mapping[str, float]
    total: float


def volatility_vector(
    asset: AssetSpec,
    factors: Mapping[str, XFactorSpec],
    curve: DiscountCurve,
    t: float,
    states: FactorStates,
    *,
    nodes: int = 256,
) -> VolatilityDecomposition:
    """Volatility terms nu_a(t) P(t, T_k) Cov_t[flow, X_a] summed over live flows.

    Revealed factors contribute nothing (their conditional covariance is
    zero).  The total is the root of the sum of squares across factors.
    """
    density_cache: dict[str, ConditionalDensity] = {}

    def dens(fid: str) -> ConditionalDensity:
        if fid not in density_cache:
            density_cache[fid] = _factor_density(factors[fid], t, states[fid], nodes=nodes)
        return density_cache[fid]

    components = {fid: 0.0 for fid in asset.factor_ids}
    for flow in asset.cash_flows:
        if t >= flow.pay_date:
            continue
        densities = {fid: dens(fid) for fid in flow.payoff.depends_on}
        e_flow = _flow_expectation(flow.payoff, densities)
        disc = curve.discount_factor(t, flow.pay_date)
        for fid in flow.payoff.depends_on:
            factor = factors[fid]
            if factor.maturity <= t:
                continue
            e_cross = _flow_expectation(flow.payoff, densities, extra_factor=fid)
            cov = e_cross - e_flow * filtering.conditional_mean(densities[fid])
            components[fid] += factor.schedule.nu(t) * disc * cov
    total = math.sqrt(sum(v * v for v in components.values()))
    return VolatilityDecomposition(components=components, total=total)


# ---------------------------------------------------------------------------
# ensembles: factor paths and prices along them
# ---------------------------------------------------------------------------

_FACTOR_STREAM_STRIDE = 1 << 20  # blocks per factor; keeps streams disjoint


@dataclass(frozen=True)
class FactorPaths:
    """Simulated information paths of one factor on a prefix of the job grid."""

    spec: XFactorSpec
    grid: TimeGrid
    values: np.ndarray     # (n_paths,)
    xi: np.ndarray         # (n_paths, n_prefix_times)
    stieltjes: np.ndarray  # same shape

    def column(self, t: float) -> int | None:
        """Index of grid time t in this factor's prefix, None when t >= maturity."""
        times = self.grid.times
        i = int(np.searchsorted(times, t))
        if i >= len(times) or abs(times[i] - t) > 1e-12:
            return None
        return i


def simulate_factor_paths(
    factors: Mapping[str, XFactorSpec],
    grid: TimeGrid,
    seed: int,
    n_paths: int,
) -> dict[str, FactorPaths]:
    """Independent ensembles for every factor on the job grid.

    Each factor's path lives on the grid prefix up to its maturity (the grid
    must contain the maturity as a node when it extends past it).  Factor
    index * 2^20 offsets the RNG block streams so factors stay independent
    under a shared seed.
    """
    out: dict[str, FactorPaths] = {}
    for k, (fid, spec) in enumerate(sorted(factors.items())):
        sub = grid.restrict(spec.maturity)
        if grid.end > spec.maturity and abs(sub.end - spec.maturity) > 1e-12:
            raise PricingError(
                f"grid must contain the maturity {spec.maturity} of factor {fid} as a node"
            )
        values, xi = simulate_information_ensemble(
            spec.prior, spec.schedule, sub, seed, n_paths,
            stream_offset=k * _FACTOR_STREAM_STRIDE,
        )
        stj = stieltjes_series(spec.schedule, sub, xi)
        out[fid] = FactorPaths(spec=spec, grid=sub, values=values, xi=xi, stieltjes=stj)
    return out


def _ensemble_guard_time(spec: XFactorSpec, t: float) -> bool:
    """True when the filter may be evaluated at t for this factor."""
    eps = spec.schedule.maturity_guard * spec.maturity
    return t < spec.maturity - eps


def _moment_matrices(
    paths: FactorPaths, t: float, k_max: int, nodes: int, n_paths: int
) -> np.ndarray:
    """(n_paths, k_max+1) conditional power moments of one factor at time t."""
    spec = paths.spec
    out = np.empty((n_paths, k_max + 1))
    out[:, 0] = 1.0
    if t >= spec.maturity or not _ensemble_guard_time(spec, t):
        # revealed (or inside the maturity guard): the factor equals its draw
        for k in range(1, k_max + 1):
            out[:, k] = paths.values**k
        return out
    i = paths.column(t)
    if i is None:
        raise PricingError(f"t={t} is not a node of the factor grid")
    probs = condition_many(
        spec.prior, spec.schedule, t, paths.xi[:, i], paths.stieltjes[:, i], nodes=nodes
    )
    x = support_nodes(spec.prior, nodes)
    xk = np.ones_like(x)
    for k in range(1, k_max + 1):
        xk = xk * x
        out[:, k] = probs @ xk
    return out


def asset_values_on_paths(
    asset: AssetSpec,
    factors: Mapping[str, XFactorSpec],
    curve: DiscountCurve,
    ensemble: Mapping[str, FactorPaths],
    t: float,
    *,
    nodes: int = 256,
) -> np.ndarray:
    """Ex-dividend asset value per path at a grid time, vectorized.

    Requires every payoff to carry the monomial normal form or to depend on
    a single factor; generic multi-factor payoffs have no vectorized route
    and are priced per path through ``price_asset``.
    """
    n_paths = len(next(iter(ensemble.values())).values)
    total = np.zeros(n_paths)
    moment_cache: dict[tuple[str, int], np.ndarray] = {}

    def moments(fid: str, k_max: int) -> np.ndarray:
        key = (fid, k_max)
        if key not in moment_cache:
            moment_cache[key] = _moment_matrices(ensemble[fid], t, k_max, nodes, n_paths)
        return moment_cache[key]

    for flow in asset.cash_flows:
        if t >= flow.pay_date:
            continue
        disc = curve.discount_factor(t, flow.pay_date)
        payoff = flow.payoff
        if payoff.monomials is not None:
            expectation = np.zeros(n_paths)
            k_max = payoff.max_power
            for mono in payoff.monomials:
                term = np.full(n_paths, mono.coefficient)
                for fid, k in mono.powers:
                    term = term * moments(fid, k_max)[:, k]
                expectation += term
        elif len(payoff.depends_on) == 1:
            fid = payoff.depends_on[0]
            paths = ensemble[fid]
            spec = paths.spec
            if t >= spec.maturity or not _ensemble_guard_time(spec, t):
                expectation = payoff({fid: paths.values})
            else:
                i = paths.column(t)
                probs = condition_many(
                    spec.prior, spec.schedule, t, paths.xi[:, i], paths.stieltjes[:, i],
                    nodes=nodes,
                )
                x = support_nodes(spec.prior, nodes)
                expectation = probs @ payoff({fid: x})
        else:
            raise PricingError(
                "vectorized path pricing needs monomial or single-factor payoffs; "
                "price generic multi-factor payoffs per path via price_asset"
            )
        total += disc * expectation
    return total


def realized_flow_amounts(
    asset: AssetSpec,
    ensemble: Mapping[str, FactorPaths],
) -> dict[float, np.ndarray]:
    """Per-path dividend amounts keyed by pay date (the ex-dividend drops)."""
    values = {fid: fp.values for fid, fp in ensemble.items()}
    return {
        flow.pay_date: np.asarray(flow.payoff(values), dtype=float)
        for flow in asset.cash_flows
    }


@dataclass(frozen=True)
class CorrelationResult:
    correlation: float
    n_paths: int
    interval: tuple[float, float]

    @property
    def zero_corr_se(self) -> float:
        return 1.0 / math.sqrt(self.n_paths)


def correlation_common_factor(
    asset_a: AssetSpec,
    asset_b: AssetSpec,
    factors: Mapping[str, XFactorSpec],
    curve: DiscountCurve,
    t0: float,
    t1: float,
    *,
    steps: int = 32,
    seed: int,
    n_paths: int = 4096,
    nodes: int = 256,
) -> CorrelationResult:
    """Ensemble Pearson correlation of the two assets' price increments.

    Shared factors induce common innovation shocks; disjoint factor sets
    give zero correlation up to sampling error.
    """
    if not (0.0 <= t0 < t1):
        raise PricingError("need 0 <= t0 < t1")
    special = [0.0, t0, t1]
    for spec in factors.values():
        special.extend(b for b in spec.schedule.breakpoints if b < t1)
        if spec.maturity <= t1:
            special.append(spec.maturity)
    grid = TimeGrid.from_times(merge_times(special, np.linspace(0.0, t1, steps + 1)))
    ensemble = simulate_factor_paths(factors, grid, seed, n_paths)
    inc = {}
    for name, asset in ((asset_a.id, asset_a), (asset_b.id, asset_b)):
        v0 = asset_values_on_paths(asset, factors, curve, ensemble, t0, nodes=nodes)
        v1 = asset_values_on_paths(asset, factors, curve, ensemble, t1, nodes=nodes)
        inc[name] = v1 - v0
    a, b = inc[asset_a.id], inc[asset_b.id]
    corr = float(np.corrcoef(a, b)[0, 1])
    return CorrelationResult(correlation=corr, n_paths=n_paths, interval=(t0, t1))

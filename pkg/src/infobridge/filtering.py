"""Conditional density of a factor given market information.

The market's posterior over a payout factor is an exponentially tilted
reweighting of the prior:

    log pi_t(x) = log p(x) + x * theta_t - x^2 * alpha_t / 2 - log Phi_t

with theta_t = Sigma(t) xi_t / (T - t) + int_0^t sigma dxi and
alpha_t = Sigma(t)^2 / (T - t) + int_0^t sigma^2 ds.  For a constant flow
rate this collapses to the familiar exp[(T/(T-t)) (sigma x xi - sigma^2
x^2 t / 2)] tilt.  The Stieltjes integral is discretized with the
left-endpoint (Ito) convention on the simulation grid; for constant and
piecewise-constant rates on breakpoint-aligned grids it telescopes exactly,
which is what makes the restart identity below hold to roundoff.

Densities live on a fixed support: exact atoms for discrete priors, the
prior-adapted quadrature nodes otherwise.  All weights stay in log space
until the final normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .market import FlowSchedule
from .numerics import DegenerateWeightsError, logsumexp_weights
from .priors import PriorDistribution

#: below this many log units under the peak a weight cannot influence moments
_COLLAPSE_MARGIN = 700.0


class MassCollapseError(RuntimeError):
    """The support no longer covers the tilted mass."""


@dataclass(frozen=True)
class ConditionalDensity:
    """Snapshot of the filter state at one time.

    ``log_weights`` are unnormalized log masses (prior mass times tilt);
    ``normalizer_log`` is their log-sum, the log of the unnormalized total
    mass.  Snapshots are immutable; every operation returns a new one.
    """

    t: float
    x: np.ndarray
    log_weights: np.ndarray
    normalizer_log: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.normalizer_log)


@lru_cache(maxsize=64)
def _support(prior: PriorDistribution, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """(x, log base mass) for a prior; atoms exact, else quadrature nodes."""
    if prior.is_discrete:
        x = prior.xs
        log_base = np.log(prior.probabilities)
    else:
        rule = prior.quadrature(nodes)
        x = rule.nodes
        log_base = np.log(rule.weights) + prior.log_density(x)
    x.setflags(write=False)
    log_base.setflags(write=False)
    return x, log_base


def support_nodes(prior: PriorDistribution, nodes: int = 256) -> np.ndarray:
    """The fixed support the filter reweights for this prior."""
    return _support(prior, nodes)[0]


def tilt_coefficients(schedule: FlowSchedule, t: float, xi_t, stieltjes_term) -> tuple[np.ndarray, float]:
    """(theta, alpha) of the exponential tilt at time t.

    ``xi_t`` and ``stieltjes_term`` may be arrays (one entry per path);
    alpha is deterministic.
    """
    schedule.guard(t)
    T = schedule.maturity
    cum = schedule.cumulative_sigma(t)
    theta = np.asarray(xi_t, dtype=float) * cum / (T - t) + np.asarray(stieltjes_term, dtype=float)
    alpha = cum * cum / (T - t) + schedule.cumulative_sigma_sq(t)
    return theta, alpha


def _finalize(t: float, x: np.ndarray, log_w: np.ndarray) -> ConditionalDensity:
    try:
        norm, probs = logsumexp_weights(log_w)
    except DegenerateWeightsError as exc:
        raise MassCollapseError(str(exc)) from exc
    # Tilt pushed essentially all mass onto an extreme node: the grid no
    # longer covers the posterior and moments would be support artifacts.
    peak = int(np.argmax(log_w))
    if peak in (0, len(x) - 1) and probs[peak] > 1.0 - 1e-12 and len(x) > 2:
        interior_best = np.max(log_w[1:-1])
        if log_w[peak] - interior_best > _COLLAPSE_MARGIN:
            raise MassCollapseError(
                f"tilted mass escaped the support at t={t} (peak on boundary node {peak})"
            )
    return ConditionalDensity(t=t, x=x, log_weights=log_w, normalizer_log=norm)


def initial_density(prior: PriorDistribution, *, nodes: int = 256) -> ConditionalDensity:
    """The filter state at t = 0: the prior on its support."""
    x, log_base = _support(prior, nodes)
    return _finalize(0.0, x, log_base.copy())


def condition(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    t: float,
    xi_t: float,
    stieltjes_term: float | None = None,
    *,
    nodes: int = 256,
) -> ConditionalDensity:
    """Posterior over the factor given information level xi_t at time t.

    ``stieltjes_term`` is the running integral of sigma against the
    information path; for a constant flow rate it telescopes to
    sigma * xi_t and may be omitted.
    """
    if stieltjes_term is None:
        if not schedule.is_constant:
            raise ValueError("stieltjes_term is required for non-constant flow rates")
        stieltjes_term = schedule.sigma_at(schedule.start) * xi_t
    x, log_base = _support(prior, nodes)
    if t == schedule.start:
        return _finalize(t, x, log_base.copy())
    theta, alpha = tilt_coefficients(schedule, t, xi_t, stieltjes_term)
    log_w = log_base + float(theta) * x - 0.5 * alpha * x * x
    return _finalize(t, x, log_w)


def condition_many(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    t: float,
    xi_t: np.ndarray,
    stieltjes_term: np.ndarray,
    *,
    nodes: int = 256,
) -> np.ndarray:
    """Normalized posterior mass matrix (n_paths, n_nodes) at one time.

    Vectorized core used by the ensemble jobs; the per-path API above wraps
    the same tilt.
    """
    x, log_base = _support(prior, nodes)
    if t == schedule.start:
        _, probs = logsumexp_weights(log_base)
        return np.tile(probs, (len(np.atleast_1d(xi_t)), 1))
    theta, alpha = tilt_coefficients(schedule, t, xi_t, stieltjes_term)
    log_w = log_base[None, :] + np.outer(theta, x) - 0.5 * alpha * x[None, :] ** 2
    log_w -= log_w.max(axis=1, keepdims=True)
    w = np.exp(log_w)
    return w / w.sum(axis=1, keepdims=True)


def point_mass(value: float, t: float) -> ConditionalDensity:
    """Degenerate state for a factor already revealed at or before t."""
    x = np.array([value], dtype=float)
    return ConditionalDensity(t=t, x=x, log_weights=np.array([0.0]), normalizer_log=0.0)


def conditional_mean(cd: ConditionalDensity) -> float:
    return float(np.dot(cd.probabilities, cd.x))


def conditional_variance(cd: ConditionalDensity) -> float:
    p = cd.probabilities
    m = float(np.dot(p, cd.x))
    return float(np.dot(p, (cd.x - m) ** 2))


def conditional_third(cd: ConditionalDensity) -> float:
    p = cd.probabilities
    m = float(np.dot(p, cd.x))
    return float(np.dot(p, (cd.x - m) ** 3))


def evolve_density_sde(
    cd: ConditionalDensity, dW: float, dt: float, nu_t: float
) -> ConditionalDensity:
    """One Euler step of d pi = nu (x - mean) pi dW, renormalized.

    The exact flow preserves total mass only in continuous time; the
    renormalization projects each step back onto densities.  Negative
    masses produced by a large increment are floored at zero.
    """
    if not np.isfinite(dW):
        raise ValueError("dW must be finite")
    p = cd.probabilities
    m = float(np.dot(p, cd.x))
    updated = p * (1.0 + nu_t * (cd.x - m) * dW)
    np.maximum(updated, 0.0, out=updated)
    total = updated.sum()
    if total <= 0.0:
        raise MassCollapseError(f"Euler step annihilated all mass at t={cd.t}")
    with np.errstate(divide="ignore"):
        log_w = np.log(updated / total)
    return ConditionalDensity(t=cd.t + dt, x=cd.x, log_weights=log_w, normalizer_log=0.0)


def log_weight_deviation(a: ConditionalDensity, b: ConditionalDensity) -> float:
    """Max |normalized log-weight difference| over mass-carrying nodes.

    Nodes more than ~745 log units below the peak hold no representable
    float64 probability; their log weights are dominated by roundoff of the
    huge tilt exponents and are excluded from the comparison.
    """
    if a.x.shape != b.x.shape or not np.array_equal(a.x, b.x):
        raise ValueError("densities live on different supports")
    la = a.log_weights - a.normalizer_log
    lb = b.log_weights - b.normalizer_log
    live = (la > -_COLLAPSE_MARGIN) | (lb > -_COLLAPSE_MARGIN)
    return float(np.abs(la[live] - lb[live]).max())


def consistency_reinitialize(
    cd_s: ConditionalDensity,
    schedule: FlowSchedule,
    s: float,
    t: float,
    eta_t: float,
    eta_stieltjes: float,
) -> ConditionalDensity:
    """Advance the filter from s to t using the restarted information process.

    ``eta_t = xi_t - ((T-t)/(T-s)) xi_s`` is the restarted information and
    ``eta_stieltjes`` its running integral against the restarted flow rate
    (left-endpoint convention on the same grid).  The result must agree
    with direct conditioning at t; that identity is deterministic and is
    what the consistency verify suite checks.
    """
    if s > t:
        raise ValueError("need s <= t")
    if abs(cd_s.t - s) > 1e-12:
        raise ValueError(f"filter state is at t={cd_s.t}, not at restart time s={s}")
    if s == t:
        return cd_s
    restarted = schedule.reinitialize(s)
    theta, alpha = tilt_coefficients(restarted, t, eta_t, eta_stieltjes)
    log_w = cd_s.log_weights + float(theta) * cd_s.x - 0.5 * alpha * cd_s.x * cd_s.x
    return _finalize(t, cd_s.x, log_w)

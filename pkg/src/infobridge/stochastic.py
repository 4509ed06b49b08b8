"""Random path generation.

Exact Brownian-bridge sampling, information paths (signal plus bridge),
reconstruction of the innovation Brownian motion from a path and its filter
means, and the inverse round trip that rebuilds the information process from
the conditional-density dynamics alone.

Bridges are sampled exactly through the orthogonal decomposition
beta(t) = W(t) - (t/T) W(T), never by SDE stepping, so ensemble statistics
carry no discretization bias.  Ensemble generation draws from counter-based
streams keyed by fixed-size path blocks, which makes results independent of
worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filtering import MassCollapseError, condition_many, initial_density, support_nodes
from .market import FlowSchedule
from .numerics import TimeGrid
from .priors import PriorDistribution

#: paths per RNG stream in ensemble generation; fixed so that results do not
#: depend on the number of workers
ENSEMBLE_BLOCK = 4096


def block_size() -> int:
    """Current ensemble block size (resolved at call time, patchable in tests)."""
    return ENSEMBLE_BLOCK


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (seed, stream index).

    Identical keys reproduce identical draws; distinct stream indices give
    statistically independent streams regardless of scheduling.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class InformationPath:
    """One simulated trajectory of the market information process.

    ``xi[i] = factor_value * Sigma(t_i) + bridge[i]`` holds exactly by
    construction on every node.
    """

    grid: TimeGrid
    factor_value: float
    bridge: np.ndarray
    xi: np.ndarray
    schedule: FlowSchedule

    def stieltjes(self) -> np.ndarray:
        """Running left-endpoint integral of sigma against xi on the grid."""
        t = self.grid.times
        sig = np.array([self.schedule.sigma_at(u) for u in t[:-1]])
        inc = sig * np.diff(self.xi)
        return np.concatenate([[0.0], np.cumsum(inc)])


def _check_grid(grid: TimeGrid, maturity: float) -> None:
    if grid.end > maturity + 1e-12:
        raise ValueError(f"grid node {grid.end} exceeds the factor maturity {maturity}")


def sample_bridge(maturity: float, grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
    """Exact Gaussian bridge over [0, maturity] evaluated on the grid.

    Zero at both ends, covariance s(T-t)/T for s <= t.
    """
    return sample_bridge_many(maturity, grid, rng, 1)[0]


def sample_bridge_many(
    maturity: float, grid: TimeGrid, rng: np.random.Generator, n_paths: int
) -> np.ndarray:
    _check_grid(grid, maturity)
    t = grid.times
    incs = rng.normal(0.0, np.sqrt(np.diff(t)), (n_paths, len(t) - 1))
    w = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(incs, axis=1)], axis=1)
    if t[-1] < maturity:
        w_end = w[:, -1:] + rng.normal(0.0, np.sqrt(maturity - t[-1]), (n_paths, 1))
    else:
        w_end = w[:, -1:]
    return w - (t / maturity) * w_end


def simulate_information_path(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    grid: TimeGrid,
    rng: np.random.Generator | RngStream,
) -> InformationPath:
    """Draw the factor, an independent bridge, and assemble the information path."""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    _check_grid(grid, schedule.maturity)
    value = float(prior.sample(rng))
    bridge = sample_bridge(schedule.maturity, grid, rng)
    cum = np.array([schedule.cumulative_sigma(u) for u in grid.times])
    xi = value * cum + bridge
    return InformationPath(grid=grid, factor_value=value, bridge=bridge, xi=xi, schedule=schedule)


def simulate_information_ensemble(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    *,
    stream_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(factor values, xi matrix) for n_paths trajectories.

    Paths are generated in fixed blocks of ENSEMBLE_BLOCK, block b drawing
    from stream ``stream_offset + b``; the layout is reproducible for any
    worker count.  Use distinct ``stream_offset`` ranges for independent
    factors sharing one seed.
    """
    _check_grid(grid, schedule.maturity)
    t = grid.times
    cum = np.array([schedule.cumulative_sigma(u) for u in t])
    values = np.empty(n_paths)
    xi = np.empty((n_paths, len(t)))
    block = block_size()
    for b, lo in enumerate(range(0, n_paths, block)):
        hi = min(lo + block, n_paths)
        rng = RngStream(seed, stream_offset + b).generator()
        vals = np.asarray(prior.sample(rng, hi - lo), dtype=float)
        bridge = sample_bridge_many(schedule.maturity, grid, rng, hi - lo)
        values[lo:hi] = vals
        xi[lo:hi] = vals[:, None] * cum[None, :] + bridge
    return values, xi


def stieltjes_series(schedule: FlowSchedule, grid: TimeGrid, xi: np.ndarray) -> np.ndarray:
    """Left-endpoint running integral of sigma d(xi) for a path matrix.

    ``xi`` has shape (n_paths, n_times) or (n_times,).
    """
    t = grid.times
    sig = np.array([schedule.sigma_at(u) for u in t[:-1]])
    arr = np.atleast_2d(xi)
    inc = sig[None, :] * np.diff(arr, axis=1)
    out = np.concatenate([np.zeros((arr.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)
    return out[0] if np.asarray(xi).ndim == 1 else out


def reconstruct_innovation(path: InformationPath, dtT_series: np.ndarray) -> np.ndarray:
    """Innovation Brownian motion W driving the filtered dynamics.

    W_t = xi_t + int_0^t xi_s/(T-s) ds - int_0^t nu_s D_s ds with the time
    integrals discretized by the trapezoid rule on the path grid; W_0 = 0.
    ``dtT_series`` is the filter conditional mean on the same grid.
    """
    dtT = np.asarray(dtT_series, dtype=float)
    if dtT.shape != path.xi.shape:
        raise ValueError("conditional-mean series must live on the path grid")
    return _innovation_matrix(path.schedule, path.grid, path.xi[None, :], dtT[None, :])[0]


def _innovation_matrix(
    schedule: FlowSchedule, grid: TimeGrid, xi: np.ndarray, dtT: np.ndarray
) -> np.ndarray:
    t = grid.times
    T = schedule.maturity
    nu = np.array([schedule.nu(u) for u in t])
    f1 = xi / (T - t)[None, :]
    f2 = nu[None, :] * dtT
    dt = np.diff(t)
    steps = np.diff(xi, axis=1)
    steps = steps + 0.5 * dt[None, :] * (f1[:, 1:] + f1[:, :-1])
    steps = steps - 0.5 * dt[None, :] * (f2[:, 1:] + f2[:, :-1])
    return np.concatenate([np.zeros((xi.shape[0], 1)), np.cumsum(steps, axis=1)], axis=1)


def filter_mean_matrix(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    grid: TimeGrid,
    xi: np.ndarray,
    *,
    nodes: int = 256,
    with_variance: bool = False,
):
    """Conditional mean (and optionally variance) along paths, vectorized.

    ``xi`` has shape (n_paths, n_times); the Stieltjes term is accumulated
    with the left-endpoint convention along each path.
    """
    t = grid.times
    stj = stieltjes_series(schedule, grid, np.atleast_2d(xi))
    xi2 = np.atleast_2d(xi)
    means = np.empty_like(xi2)
    variances = np.empty_like(xi2) if with_variance else None
    for i, ti in enumerate(t):
        probs = condition_many(prior, schedule, ti, xi2[:, i], stj[:, i], nodes=nodes)
        x = support_nodes(prior, nodes)
        means[:, i] = probs @ x
        if with_variance:
            variances[:, i] = probs @ (x * x) - means[:, i] ** 2
    if with_variance:
        return means, variances
    return means


@dataclass(frozen=True)
class RoundTripResult:
    times: np.ndarray
    xi_original: np.ndarray       # first path
    xi_reconstructed: np.ndarray  # first path
    sup_gaps: np.ndarray          # per-path max |xi_rec - xi| over the grid
    beta_factor_corr: float       # corr(beta at corr_time, factor) over the ensemble
    corr_time: float


def inverse_filter_roundtrip(
    prior: PriorDistribution,
    schedule: FlowSchedule,
    grid: TimeGrid,
    seed: int,
    *,
    n_paths: int = 64,
    nodes: int = 128,
    corr_index: int | None = None,
    ensemble: tuple[np.ndarray, np.ndarray] | None = None,
) -> RoundTripResult:
    """Forward-simulate, reduce to the innovation, evolve the density SDE,
    and rebuild the information process from it.

    The density SDE d pi = nu (x - mean) pi dW is integrated by Euler with
    per-step renormalization; the information process is rebuilt from the
    SDE's own mean series by trapezoidal integration of
    d xi = -xi/(T-t) dt + nu D dt + dW.  The grid must stay away from the
    maturity, where nu is singular and the Euler step diverges.

    ``ensemble`` optionally supplies pre-simulated (values, xi) on the grid,
    which lets refinement studies couple the driving noise across grids.
    """
    t = grid.times
    T = schedule.maturity
    schedule.guard(t[-1])
    if ensemble is not None:
        values, xi = ensemble
        n_paths = len(values)
    else:
        values, xi = simulate_information_ensemble(prior, schedule, grid, seed, n_paths)
    dtT = filter_mean_matrix(prior, schedule, grid, xi, nodes=nodes)
    W = _innovation_matrix(schedule, grid, xi, dtT)
    dW = np.diff(W, axis=1)

    x = support_nodes(prior, nodes)
    probs0 = initial_density(prior, nodes=nodes).probabilities
    masses = np.tile(probs0, (n_paths, 1))
    nu = np.array([schedule.nu(u) for u in t])
    mean_sde = np.empty((n_paths, len(t)))
    mean_sde[:, 0] = probs0 @ x
    for i in range(len(t) - 1):
        m = masses @ x
        masses = masses * (1.0 + nu[i] * (x[None, :] - m[:, None]) * dW[:, i : i + 1])
        np.maximum(masses, 0.0, out=masses)
        total = masses.sum(axis=1)
        if np.any(total <= 0.0):
            raise MassCollapseError(f"density SDE lost all mass at step {i} (t={t[i]})")
        masses /= total[:, None]
        mean_sde[:, i + 1] = masses @ x

    xi_rec = np.zeros((n_paths, len(t)))
    dt = np.diff(t)
    for i in range(len(t) - 1):
        rhs = (
            xi_rec[:, i] * (1.0 - 0.5 * dt[i] / (T - t[i]))
            + dW[:, i]
            + 0.5 * dt[i] * (nu[i] * mean_sde[:, i] + nu[i + 1] * mean_sde[:, i + 1])
        )
        xi_rec[:, i + 1] = rhs / (1.0 + 0.5 * dt[i] / (T - t[i + 1]))

    j = corr_index if corr_index is not None else len(t) // 2
    cum_j = schedule.cumulative_sigma(t[j])
    beta_rec = xi_rec[:, j] - values * cum_j
    corr = float(np.corrcoef(beta_rec, values)[0, 1])
    gaps = np.abs(xi_rec - xi).max(axis=1)
    return RoundTripResult(
        times=t,
        xi_original=xi[0],
        xi_reconstructed=xi_rec[0],
        sup_gaps=gaps,
        beta_factor_corr=corr,
        corr_time=float(t[j]),
    )

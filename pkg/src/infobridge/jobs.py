"""Batch jobs: price, simulate, option, verify.

Pure functions from a scenario plus job arguments to named CSV documents.
All randomness flows through block-keyed counter streams, reductions happen
in fixed block order, and floats are written with 17 significant digits, so
a (scenario, arguments, seed) triple produces byte-identical outputs for
any worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import jarque_bera

from . import filtering
from .filtering import condition, consistency_reinitialize, log_weight_deviation
from .numerics import TimeGrid, merge_times
from .options import CallSpec, call_price_analytic, call_price_mc, critical_value
from .pricing import (
    FactorPaths,
    FactorState,
    PricingError,
    XFactorSpec,
    asset_values_on_paths,
    price_asset,
    realized_flow_amounts,
    simulate_factor_paths,
    volatility_vector,
)
from .scenario import Scenario
from . import stochastic
from .stochastic import (
    RngStream,
    filter_mean_matrix,
    inverse_filter_roundtrip,
    sample_bridge_many,
    simulate_information_ensemble,
    simulate_information_path,
    stieltjes_series,
)
from .pricing import _FACTOR_STREAM_STRIDE

VERIFY_SUITES = ("bridge", "filter", "consistency", "innovation", "inverse")


class JobError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


@dataclass
class JobResult:
    outputs: dict[str, str]
    summary: dict
    passed: bool | None = None


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _first_factor(scenario: Scenario) -> XFactorSpec:
    return scenario.factors[sorted(scenario.factors)[0]]


def _job_grid(scenario: Scenario) -> TimeGrid:
    """Uniform grid to the horizon merged with pay dates, maturities and
    flow-rate breakpoints (so left-endpoint sums stay exact)."""
    horizon = scenario.horizon
    special = []
    for asset in scenario.assets:
        special.extend(f.pay_date for f in asset.cash_flows)
    for spec in scenario.factors.values():
        special.extend(b for b in spec.schedule.breakpoints if b <= horizon)
        if spec.maturity <= horizon:
            special.append(spec.maturity)
    return TimeGrid.from_times(
        merge_times([0.0], special, np.linspace(0.0, horizon, scenario.job.grid_steps + 1))
    )


def _ensemble(
    factors: Mapping[str, XFactorSpec],
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    threads: int,
) -> dict[str, FactorPaths]:
    """Threaded variant of simulate_factor_paths with identical output.

    Work is split along the fixed RNG blocks; stream indices depend only on
    the (factor, block) pair, so any thread count reproduces the serial
    layout bit for bit.
    """
    if threads <= 1:
        return simulate_factor_paths(factors, grid, seed, n_paths)
    ordered = sorted(factors.items())
    subgrids = {}
    tasks = []
    for k, (fid, spec) in enumerate(ordered):
        sub = grid.restrict(spec.maturity)
        if grid.end > spec.maturity and abs(sub.end - spec.maturity) > 1e-12:
            raise PricingError(
                f"grid must contain the maturity {spec.maturity} of factor {fid} as a node"
            )
        subgrids[fid] = sub
        block = stochastic.block_size()
        for b, lo in enumerate(range(0, n_paths, block)):
            hi = min(lo + block, n_paths)
            tasks.append((fid, spec, sub, k * _FACTOR_STREAM_STRIDE + b, lo, hi))

    def work(task):
        fid, spec, sub, offset, lo, hi = task
        return simulate_information_ensemble(
            spec.prior, spec.schedule, sub, seed, hi - lo, stream_offset=offset
        )

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(work, tasks))

    out: dict[str, FactorPaths] = {}
    for k, (fid, spec) in enumerate(ordered):
        sub = subgrids[fid]
        values = np.empty(n_paths)
        xi = np.empty((n_paths, len(sub.times)))
        for task, (vals, xi_block) in zip(tasks, results):
            if task[0] != fid:
                continue
            lo, hi = task[4], task[5]
            values[lo:hi] = vals
            xi[lo:hi] = xi_block
        stj = stieltjes_series(spec.schedule, sub, xi)
        out[fid] = FactorPaths(spec=spec, grid=sub, values=values, xi=xi, stieltjes=stj)
    return out


def _parse_xi_argument(scenario: Scenario, xi: str | float | None) -> dict[str, float]:
    fids = sorted(scenario.factors)
    if xi is None:
        return {fid: 0.0 for fid in fids}
    if isinstance(xi, (int, float)):
        return {fid: float(xi) for fid in fids}
    out: dict[str, float] = {}
    for part in str(xi).split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            fid, _, val = part.partition("=")
            fid = fid.strip()
            if fid not in scenario.factors:
                raise JobError(f"--xi references unknown factor {fid!r}")
            out[fid] = float(val)
        else:
            if len(fids) != 1:
                raise JobError("--xi needs factor=value pairs when several factors exist")
            out[fids[0]] = float(part)
    for fid in fids:
        out.setdefault(fid, 0.0)
    return out


# ---------------------------------------------------------------------------
# price
# ---------------------------------------------------------------------------


def run_price(
    scenario: Scenario,
    *,
    at: float | None = None,
    xi: str | float | None = None,
    path_csv: str | None = None,
) -> JobResult:
    """Price every asset, either at one (t, xi) point or along a path file."""
    nodes = scenario.job.nodes
    fids = sorted(scenario.factors)
    columns = ["asset", "t", "price"]
    for fid in fids:
        columns += [f"var_{fid}", f"gamma_{fid}"]
    columns.append("gamma_total")
    table = Table(columns)

    if path_csv is not None:
        _price_along_path(scenario, path_csv, table)
    else:
        t = 0.0 if at is None else float(at)
        xi_map = _parse_xi_argument(scenario, xi)
        for fid in fids:
            spec = scenario.factors[fid]
            if not spec.schedule.is_constant and t > 0.0:
                raise JobError(
                    f"factor {fid} has a time-dependent flow rate; point pricing "
                    "needs a path file to accumulate the information integral"
                )
        states = {fid: FactorState(xi=xi_map[fid]) for fid in fids}
        table.rows.extend(_price_row(scenario, t, states, nodes))
    summary = {"rows": len(table.rows)}
    return JobResult(outputs={"price.csv": table.to_csv()}, summary=summary)


def _price_row(scenario: Scenario, t: float, states, nodes: int) -> list[list]:
    fids = sorted(scenario.factors)
    variances = {}
    for fid in fids:
        spec = scenario.factors[fid]
        state = states[fid]
        if isinstance(state, FactorState) and t < spec.maturity:
            cd = condition(spec.prior, spec.schedule, t, state.xi, state.stieltjes, nodes=nodes)
            variances[fid] = filtering.conditional_variance(cd)
        else:
            variances[fid] = 0.0
    out = []
    for asset in scenario.assets:
        price = price_asset(asset, scenario.factors, scenario.curve, t, states, nodes=nodes)
        vol = volatility_vector(asset, scenario.factors, scenario.curve, t, states, nodes=nodes)
        row = [asset.id, t, price]
        for fid in fids:
            row += [variances[fid], vol.components.get(fid, 0.0)]
        row.append(vol.total)
        out.append(row)
    return out


def _price_along_path(scenario: Scenario, path_csv: str, table: Table) -> None:
    fids = sorted(scenario.factors)
    reader = csv.reader(io.StringIO(path_csv))
    header = next(reader)
    if "t" not in header:
        raise JobError("path file needs a 't' column")
    t_col = header.index("t")
    xi_cols: dict[str, int] = {}
    for fid in fids:
        name = f"xi_{fid}"
        if name in header:
            xi_cols[fid] = header.index(name)
        elif len(fids) == 1 and "xi" in header:
            xi_cols[fid] = header.index("xi")
        else:
            raise JobError(f"path file is missing column xi_{fid}")
    times, xi_rows = [], []
    for row in reader:
        if not row:
            continue
        times.append(float(row[t_col]))
        xi_rows.append([float(row[xi_cols[fid]]) for fid in fids])
    if not times or times[0] != 0.0:
        raise JobError("path file must start at t=0")
    grid = TimeGrid.from_times(times)
    xi_mat = np.asarray(xi_rows)  # (n_times, n_factors)
    stj = {
        fid: stieltjes_series(scenario.factors[fid].schedule, grid, xi_mat[:, j])
        for j, fid in enumerate(fids)
    }
    nodes = scenario.job.nodes
    for i, t in enumerate(times):
        states = {}
        for j, fid in enumerate(fids):
            spec = scenario.factors[fid]
            if t >= spec.maturity:
                raise JobError(
                    f"path row at t={t} reaches the maturity of factor {fid}; "
                    "prices there are the realized payout"
                )
            states[fid] = FactorState(xi=float(xi_mat[i, j]), stieltjes=float(stj[fid][i]))
        for row in _price_row(scenario, t, states, nodes):
            table.rows.append(row)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def run_simulate(
    scenario: Scenario,
    *,
    n_paths: int | None = None,
    seed: int | None = None,
) -> JobResult:
    """Ensemble of factor paths with asset prices and martingale diagnostics."""
    job = scenario.job
    n = n_paths if n_paths is not None else job.paths
    s = seed if seed is not None else job.require_seed()
    grid = _job_grid(scenario)
    ensemble = _ensemble(scenario.factors, grid, s, n, job.threads)
    fids = sorted(scenario.factors)
    times = grid.times

    prices = {}
    for asset in scenario.assets:
        mat = np.empty((n, len(times)))
        for i, t in enumerate(times):
            mat[:, i] = asset_values_on_paths(
                asset, scenario.factors, scenario.curve, ensemble, t, nodes=job.nodes
            )
        prices[asset.id] = mat

    # paths.csv is streamed: the dump is path-major and can be large
    buf = io.StringIO()
    header = (
        ["path", "t"]
        + [f"xi_{fid}" for fid in fids]
        + [f"price_{a.id}" for a in scenario.assets]
    )
    buf.write(",".join(header) + "\n")
    xi_full = {}
    for fid in fids:
        fp = ensemble[fid]
        m = fp.xi.shape[1]
        if m < len(times):  # hold the realized signal level past the maturity
            pad = np.repeat(fp.xi[:, -1:], len(times) - m, axis=1)
            xi_full[fid] = np.concatenate([fp.xi, pad], axis=1)
        else:
            xi_full[fid] = fp.xi
    for p in range(n):
        for i, t in enumerate(times):
            cells = [str(p), _fmt(t)]
            cells += [_fmt(xi_full[fid][p, i]) for fid in fids]
            cells += [_fmt(prices[a.id][p, i]) for a in scenario.assets]
            buf.write(",".join(cells) + "\n")
    paths_csv = buf.getvalue()

    summary_cols = ["t"]
    for asset in scenario.assets:
        summary_cols += [
            f"mean_{asset.id}",
            f"var_{asset.id}",
            f"total_mean_{asset.id}",
            f"mart_z_{asset.id}",
        ]
    summary_table = Table(summary_cols)
    max_z = 0.0
    totals = {}
    for asset in scenario.assets:
        flows = realized_flow_amounts(asset, ensemble)
        disc0 = {T_k: scenario.curve.discount(T_k) for T_k in flows}
        total = np.empty((n, len(times)))
        for i, t in enumerate(times):
            # time-0 value of the position: discounted ex-dividend price
            # plus the discounted dividends already paid
            acc = prices[asset.id][:, i] * scenario.curve.discount(t)
            for T_k, amounts in flows.items():
                if t >= T_k:
                    acc = acc + amounts * disc0[T_k]
            total[:, i] = acc
        totals[asset.id] = total
    s0 = {a.id: float(prices[a.id][:, 0].mean()) for a in scenario.assets}
    for i, t in enumerate(times):
        row = [t]
        for asset in scenario.assets:
            col = prices[asset.id][:, i]
            tot = totals[asset.id][:, i]
            se = tot.std(ddof=1) / math.sqrt(n)
            z = abs(tot.mean() - s0[asset.id]) / se if se > 0.0 else 0.0
            max_z = max(max_z, z)
            row += [col.mean(), col.var(ddof=1), tot.mean(), z]
        summary_table.rows.append(row)

    outputs = {"paths.csv": paths_csv, "summary.csv": summary_table.to_csv()}
    summary = {"paths": n, "seed": s, "grid_points": len(times), "max_martingale_z": float(max_z)}

    if len(scenario.assets) >= 2:
        corr_table = Table(["asset_a", "asset_b", "t_end", "increment_corr", "zero_corr_se"])
        for i in range(len(scenario.assets)):
            for j in range(i + 1, len(scenario.assets)):
                a, b = scenario.assets[i], scenario.assets[j]
                # measure increments while both assets are still cum-dividend
                first_pay = min(a.cash_flows[0].pay_date, b.cash_flows[0].pay_date)
                k = int(np.searchsorted(times, first_pay) - 1)
                if k <= 0:
                    continue
                da = prices[a.id][:, k] - prices[a.id][:, 0]
                db = prices[b.id][:, k] - prices[b.id][:, 0]
                corr = float(np.corrcoef(da, db)[0, 1])
                corr_table.rows.append([a.id, b.id, times[k], corr, 1.0 / math.sqrt(n)])
        outputs["correlation.csv"] = corr_table.to_csv()
        summary["correlations"] = {f"{r[0]}/{r[1]}": r[3] for r in corr_table.rows}
    return JobResult(outputs=outputs, summary=summary)


# ---------------------------------------------------------------------------
# option
# ---------------------------------------------------------------------------


def _call_spec(scenario: Scenario, strike: float, expiry: float, asset_id: str | None) -> CallSpec:
    assets = [a for a in scenario.assets if asset_id is None or a.id == asset_id]
    if not assets:
        raise JobError(f"no asset {asset_id!r} in the scenario")
    asset = assets[0]
    if len(asset.cash_flows) != 1:
        raise JobError("option pricing covers single-dividend assets only")
    flow = asset.cash_flows[0]
    mono = flow.payoff.monomials
    identity = (
        mono is not None
        and len(mono) == 1
        and mono[0].coefficient == 1.0
        and len(mono[0].powers) == 1
        and mono[0].powers[0][1] == 1
    )
    if not identity:
        raise JobError("option pricing needs an identity payoff (the dividend is the factor)")
    fid = mono[0].powers[0][0]
    spec = scenario.factors[fid]
    return CallSpec(
        strike=strike, expiry=expiry, prior=spec.prior, schedule=spec.schedule,
        curve=scenario.curve,
    )


def run_option(
    scenario: Scenario,
    *,
    strike: float,
    expiry: float,
    mc_paths: int | None = None,
    asset_id: str | None = None,
) -> JobResult:
    spec = _call_spec(scenario, strike, expiry, asset_id)
    nodes = scenario.job.nodes
    crit = critical_value(spec, nodes=nodes)
    analytic = call_price_analytic(spec, nodes=nodes)
    table = Table(
        ["strike", "expiry", "branch", "y_star", "xi_star", "analytic", "mc_value", "mc_se", "mc_paths"]
    )
    row = [
        strike,
        expiry,
        crit.kind,
        crit.y_star if crit.y_star is not None else "",
        crit.xi_star if crit.xi_star is not None else "",
        analytic,
    ]
    summary = {"analytic": analytic, "branch": crit.kind}
    if mc_paths:
        mc = call_price_mc(spec, mc_paths, scenario.job.require_seed(), nodes=nodes)
        row += [mc.estimate, mc.standard_error, mc.n_paths]
        summary["mc"] = mc.estimate
        summary["mc_se"] = mc.standard_error
    else:
        row += ["", "", ""]
    table.rows.append(row)
    return JobResult(outputs={"option.csv": table.to_csv()}, summary=summary)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass
class Check:
    suite: str
    name: str
    statistic: float
    bound: float
    ok: bool


def _verify_bridge(scenario: Scenario) -> list[Check]:
    job = scenario.job
    spec = _first_factor(scenario)
    T = spec.maturity
    n = job.paths
    grid = TimeGrid.uniform(T, max(8, min(job.grid_steps, 32)))
    rng = RngStream(job.require_seed(), 0).generator()
    beta = sample_bridge_many(T, grid, rng, n)
    t = grid.times
    checks = [
        Check("bridge", "pinned_at_start", float(np.abs(beta[:, 0]).max()), 0.0, bool(np.abs(beta[:, 0]).max() == 0.0)),
        Check("bridge", "pinned_at_end", float(np.abs(beta[:, -1]).max()), 1e-12, bool(np.abs(beta[:, -1]).max() <= 1e-12)),
    ]
    idxs = [len(t) // 4, len(t) // 2, (3 * len(t)) // 4]
    for i in idxs:
        target = t[i] * (T - t[i]) / T
        sample = beta[:, i].var(ddof=1)
        se = target * math.sqrt(2.0 / (n - 1))
        z = abs(sample - target) / se
        checks.append(Check("bridge", f"variance_t={t[i]:g}", z, 4.0, z <= 4.0))
    i, j = idxs[0], idxs[1]
    target = t[i] * (T - t[j]) / T
    sample = float(np.mean(beta[:, i] * beta[:, j]) - beta[:, i].mean() * beta[:, j].mean())
    var_i, var_j = t[i] * (T - t[i]) / T, t[j] * (T - t[j]) / T
    se = math.sqrt((var_i * var_j + target**2) / (n - 1))
    z = abs(sample - target) / se
    checks.append(Check("bridge", f"covariance_{t[i]:g}_{t[j]:g}", z, 4.0, z <= 4.0))
    return checks


def _verify_filter(scenario: Scenario) -> list[Check]:
    job = scenario.job
    spec = _first_factor(scenario)
    T = spec.maturity
    n = min(job.paths, 10_000)
    steps = max(8, min(job.grid_steps, 64))
    grid = TimeGrid.from_times(np.linspace(0.0, T * (1.0 - 1.0 / steps), steps))
    _, xi = simulate_information_ensemble(spec.prior, spec.schedule, grid, job.require_seed(), n)
    means, variances = filter_mean_matrix(
        spec.prior, spec.schedule, grid, xi, nodes=job.nodes, with_variance=True
    )
    prior_mean = spec.prior.moments().mean
    z_mart = 0.0
    for i in range(len(grid.times)):
        se = means[:, i].std(ddof=1) / math.sqrt(n)
        if se > 0.0:
            z_mart = max(z_mart, abs(means[:, i].mean() - prior_mean) / se)
    z_super = -np.inf
    for i in range(len(grid.times) - 1):
        diff = variances[:, i + 1] - variances[:, i]
        se = diff.std(ddof=1) / math.sqrt(n)
        if se > 0.0:
            z_super = max(z_super, diff.mean() / se)
    return [
        Check("filter", "martingale_mean_z", z_mart, 4.0, z_mart <= 4.0),
        Check("filter", "variance_supermartingale_z", float(z_super), 4.0, z_super <= 4.0),
    ]


def _verify_consistency(scenario: Scenario) -> list[Check]:
    job = scenario.job
    spec = _first_factor(scenario)
    T = spec.maturity
    restarts = [0.2 * T, 0.5 * T, 0.8 * T]
    steps = max(job.grid_steps, 20)
    grid = TimeGrid.from_times(
        merge_times(
            [0.0],
            restarts,
            (b for b in spec.schedule.breakpoints if b < 0.9 * T),
            np.linspace(0.0, 0.9 * T, steps + 1),
        )
    )
    path = simulate_information_path(spec.prior, spec.schedule, grid, RngStream(job.require_seed(), 0))
    stj = path.stieltjes()
    t_arr = grid.times
    worst = 0.0
    for s in restarts:
        i_s = int(np.argmin(np.abs(t_arr - s)))
        s = t_arr[i_s]
        cd_s = condition(spec.prior, spec.schedule, s, path.xi[i_s], stj[i_s], nodes=job.nodes)
        restarted = spec.schedule.reinitialize(s)
        eta = path.xi - ((T - t_arr) / (T - s)) * path.xi[i_s]
        sig_r = np.array([restarted.sigma_at(u) for u in t_arr[i_s:-1]])
        eta_stj = np.concatenate([[0.0], np.cumsum(sig_r * np.diff(eta[i_s:]))])
        for k in range(i_s + 1, len(t_arr)):
            t = t_arr[k]
            direct = condition(spec.prior, spec.schedule, t, path.xi[k], stj[k], nodes=job.nodes)
            via_s = consistency_reinitialize(cd_s, spec.schedule, s, t, eta[k], eta_stj[k - i_s])
            worst = max(worst, log_weight_deviation(direct, via_s))
    return [Check("consistency", "max_log_weight_deviation", worst, 1e-10, worst <= 1e-10)]


def _verify_innovation(scenario: Scenario) -> list[Check]:
    job = scenario.job
    spec = _first_factor(scenario)
    T = spec.maturity
    n = min(job.paths, 10_000)
    steps = max(job.grid_steps, 16)
    h = T / steps
    grid = TimeGrid.from_times(np.linspace(0.0, T - h, steps))
    _, xi = simulate_information_ensemble(spec.prior, spec.schedule, grid, job.require_seed(), n)
    means = filter_mean_matrix(spec.prior, spec.schedule, grid, xi, nodes=job.nodes)
    from .stochastic import _innovation_matrix

    W = _innovation_matrix(spec.schedule, grid, xi, means)
    dW = np.diff(W, axis=1)
    z = dW / np.sqrt(np.diff(grid.times))[None, :]
    total = z.size
    mean_z = abs(z.mean()) / (1.0 / math.sqrt(total))
    var_z = abs(z.var(ddof=1) - 1.0) / math.sqrt(2.0 / total)
    checks = [
        Check("innovation", "increment_mean_z", mean_z, 4.0, mean_z <= 4.0),
        Check("innovation", "increment_variance_z", var_z, 4.0, var_z <= 4.0),
    ]
    cols = [0, z.shape[1] // 2, z.shape[1] - 1]
    for c in cols:
        p = float(jarque_bera(z[:, c]).pvalue)
        checks.append(Check("innovation", f"jarque_bera_p_col{c}", p, 0.01, p > 0.01))
    return checks


def _verify_inverse(scenario: Scenario) -> list[Check]:
    job = scenario.job
    spec = _first_factor(scenario)
    T = spec.maturity
    seed = job.require_seed()
    grid = TimeGrid.uniform(T / 2.0, 1024)
    result = inverse_filter_roundtrip(
        spec.prior, spec.schedule, grid, seed, n_paths=min(job.paths, 128), nodes=128
    )
    mean_gap = float(result.sup_gaps.mean())
    corr_grid = TimeGrid.uniform(T / 2.0, 256)
    corr_result = inverse_filter_roundtrip(
        spec.prior, spec.schedule, corr_grid, seed + 1,
        n_paths=min(job.paths, 10_000), nodes=128,
    )
    corr_bound = 4.0 / math.sqrt(min(job.paths, 10_000))
    return [
        Check("inverse", "mean_sup_gap_1024_steps", mean_gap, 5e-2, mean_gap <= 5e-2),
        Check("inverse", "beta_factor_corr", abs(corr_result.beta_factor_corr), corr_bound,
              abs(corr_result.beta_factor_corr) <= corr_bound),
    ]


_SUITE_RUNNERS = {
    "bridge": _verify_bridge,
    "filter": _verify_filter,
    "consistency": _verify_consistency,
    "innovation": _verify_innovation,
    "inverse": _verify_inverse,
}


def run_verify(scenario: Scenario, *, suites=None) -> JobResult:
    names = list(suites) if suites else list(VERIFY_SUITES)
    unknown = [s for s in names if s not in _SUITE_RUNNERS]
    if unknown:
        raise JobError(f"unknown verify suite(s): {', '.join(unknown)}")
    table = Table(["suite", "check", "statistic", "bound", "status"])
    all_ok = True
    for name in names:
        for check in _SUITE_RUNNERS[name](scenario):
            all_ok = all_ok and check.ok
            table.rows.append(
                [check.suite, check.name, check.statistic, check.bound,
                 "PASS" if check.ok else "FAIL"]
            )
    summary = {"suites": names, "passed": all_ok}
    return JobResult(outputs={"verify.csv": table.to_csv()}, summary=summary, passed=all_ok)

"""Acceptance suite.

One test per criterion, each asserting its stated tolerance and printing a
single PASS/FAIL line (run with ``pytest tests/test_acceptance.py -s``).
Every statistical check runs at desk scale with fixed seeds.
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.stats import jarque_bera

import infobridge.stochastic
from infobridge.filtering import (
    condition,
    consistency_reinitialize,
    log_weight_deviation,
)
from infobridge.market import FlatCurve, FlowSchedule
from infobridge.numerics import TimeGrid
from infobridge.options import CallSpec, call_price_analytic, call_price_mc
from infobridge.payoff import Payoff
from infobridge.pricing import (
    AssetSpec,
    CashFlowSpec,
    FactorState,
    XFactorSpec,
    closed_form_exponential,
    closed_form_gamma,
    correlation_common_factor,
    gaussian_power_tails,
    price_asset,
    price_gbm_factor,
    price_single,
)
from infobridge.priors import DiscreteAtoms, Exponential, Gamma, StandardNormal
from infobridge.scenario import load_scenario
from infobridge import jobs
from infobridge.stochastic import (
    RngStream,
    filter_mean_matrix,
    inverse_filter_roundtrip,
    sample_bridge_many,
    simulate_information_ensemble,
    simulate_information_path,
)

T = 1.0
ZERO = FlatCurve(0.0)
R_CURVE = FlatCurve(0.03)
CONST = FlowSchedule.constant(1.0, T)
EXP1 = Exponential(scale=1.0)

T_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
XI_GRID = [-1.0, -0.5, 0.0, 0.5, 1.0]
SIGMA_GRID = [0.5, 1.0, 2.0]


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def test_criterion_01_exponential_closed_form_vs_quadrature():
    worst = 0.0
    for sigma in SIGMA_GRID:
        sched = FlowSchedule.constant(sigma, T)
        for t in T_GRID:
            for xi in XI_GRID:
                cf = closed_form_exponential(1.0, sigma, R_CURVE, t, T, xi)
                q = price_single(EXP1, sched, R_CURVE, t, xi)
                worst = max(worst, abs(cf - q) / q)
    _report(1, "exponential closed form vs quadrature", worst <= 1e-8,
            f"max rel err {worst:.3e} <= 1e-8")


def test_criterion_02_gamma_closed_form_vs_quadrature():
    worst = 0.0
    for order in (1, 2, 3, 5):
        prior = Gamma(order=order, rate=1.0)
        for sigma in SIGMA_GRID:
            sched = FlowSchedule.constant(sigma, T)
            for t in T_GRID:
                for xi in XI_GRID:
                    cf = closed_form_gamma(order, 1.0, sigma, R_CURVE, t, T, xi)
                    q = price_single(prior, sched, R_CURVE, t, xi)
                    worst = max(worst, abs(cf - q) / q)
    worst_ident = 0.0
    for t in T_GRID:
        for xi in XI_GRID:
            g = closed_form_gamma(1, 2.0, 1.0, R_CURVE, t, T, xi)
            e = closed_form_exponential(0.5, 1.0, R_CURVE, t, T, xi)
            worst_ident = max(worst_ident, abs(g - e) / max(1.0, abs(e)))
    ok = worst <= 1e-6 and worst_ident <= 1e-10
    _report(2, "gamma closed form vs quadrature", ok,
            f"max rel err {worst:.3e} <= 1e-6; order-1 identity {worst_ident:.3e} <= 1e-10")


def test_criterion_03_gaussian_tail_recursion():
    worst = 0.0
    for x in np.linspace(-3.0, 3.0, 13):
        F = gaussian_power_tails(6, float(x))
        for k in range(7):
            target, _ = quad(lambda z, k=k: z**k * np.exp(-0.5 * z * z), x, np.inf)
            worst = max(worst, abs(F[k] - target))
    _report(3, "tail-integral recursion vs direct integration", worst <= 1e-9,
            f"max abs err {worst:.3e} <= 1e-9")


def test_criterion_04_lognormal_growth_recovery():
    s0, r, vol = 100.0, 0.05, 0.3
    sched = FlowSchedule.constant(1.0 / math.sqrt(T), T)
    factor = XFactorSpec(id="Z", maturity=T, prior=StandardNormal(), schedule=sched)
    payoff = Payoff.single_factor(
        "Z", lambda x: s0 * np.exp(r * T + vol * math.sqrt(T) * x - 0.5 * vol**2 * T)
    )
    asset = AssetSpec(id="S", cash_flows=(CashFlowSpec(pay_date=T, payoff=payoff),))
    curve = FlatCurve(r)
    worst = 0.0
    for t in T_GRID:
        for xi in XI_GRID:
            q = price_asset(asset, {"Z": factor}, curve, t, {"Z": FactorState(xi=xi)})
            exact = price_gbm_factor(s0, r, vol, sched, t, xi)
            worst = max(worst, abs(q - exact) / exact)
    _report(4, "lognormal-growth recovery", worst <= 1e-8, f"max rel err {worst:.3e} <= 1e-8")


def test_criterion_05_restart_consistency():
    worst = 0.0
    schedules = {
        "constant": CONST,
        "piecewise": FlowSchedule.piecewise_constant([0.35, 0.6], [0.5, 1.5, 1.0], T),
    }
    for name, sched in schedules.items():
        times = sorted(set(np.linspace(0.0, 0.9, 37)) | {0.2, 0.5, 0.8} | set(sched.breakpoints))
        grid = TimeGrid.from_times(times)
        path = simulate_information_path(EXP1, sched, grid, RngStream(2, 0))
        t_arr = grid.times
        stj = path.stieltjes()
        for s in (0.2, 0.5, 0.8):
            i_s = int(np.where(np.isclose(t_arr, s))[0][0])
            cd_s = condition(EXP1, sched, s, path.xi[i_s], stj[i_s])
            restarted = sched.reinitialize(s)
            eta = path.xi - ((T - t_arr) / (T - s)) * path.xi[i_s]
            sig = np.array([restarted.sigma_at(u) for u in t_arr[i_s:-1]])
            eta_stj = np.concatenate([[0.0], np.cumsum(sig * np.diff(eta[i_s:]))])
            for k in range(i_s + 1, len(t_arr)):
                direct = condition(EXP1, sched, t_arr[k], path.xi[k], stj[k])
                via = consistency_reinitialize(cd_s, sched, s, t_arr[k], eta[k], eta_stj[k - i_s])
                worst = max(worst, log_weight_deviation(direct, via))
    _report(5, "restart consistency", worst <= 1e-10,
            f"max log-weight deviation {worst:.3e} <= 1e-10")


def test_criterion_06_bridge_statistics():
    n = 100_000
    grid = TimeGrid.from_times([0.0, 0.25, 0.5, 0.75])
    beta = sample_bridge_many(T, grid, RngStream(66, 0).generator(), n)
    worst_z = 0.0
    for i, t in enumerate(grid.times[1:], start=1):
        target = t * (T - t) / T
        se = target * math.sqrt(2.0 / (n - 1))
        worst_z = max(worst_z, abs(beta[:, i].var(ddof=1) - target) / se)
    s_i, t_i = 1, 2
    target = grid.times[s_i] * (T - grid.times[t_i]) / T
    var_s = grid.times[s_i] * (T - grid.times[s_i]) / T
    var_t = grid.times[t_i] * (T - grid.times[t_i]) / T
    cov = float(np.cov(beta[:, s_i], beta[:, t_i], ddof=1)[0, 1])
    se = math.sqrt((var_s * var_t + target**2) / (n - 1))
    worst_z = max(worst_z, abs(cov - target) / se)
    _report(6, "bridge variance/covariance", worst_z <= 4.0, f"max |z| {worst_z:.2f} <= 4")


def test_criterion_07_martingale_checks():
    n = 10_000
    grid = TimeGrid.from_times(np.linspace(0.0, 0.95, 17))
    _, xi = simulate_information_ensemble(EXP1, CONST, grid, 77, n)
    means, variances = filter_mean_matrix(EXP1, CONST, grid, xi, nodes=128, with_variance=True)
    worst_mean_z = 0.0
    for i in range(len(grid.times)):
        se = means[:, i].std(ddof=1) / math.sqrt(n)
        if se > 0:
            worst_mean_z = max(worst_mean_z, abs(means[:, i].mean() - 1.0) / se)
    worst_super_z = -np.inf
    for i in range(len(grid.times) - 1):
        diff = variances[:, i + 1] - variances[:, i]
        se = diff.std(ddof=1) / math.sqrt(n)
        worst_super_z = max(worst_super_z, diff.mean() / se)
    scenario = load_scenario(
        """
curve: {kind: flat, rate: 0.04}
factors:
  - id: X1
    maturity: 0.6
    prior: {kind: exponential, scale: 1.0}
    schedule: {kind: constant, sigma: 1.0}
  - id: X2
    maturity: 1.2
    prior: {kind: gamma, order: 2, rate: 2.0}
    schedule: {kind: constant, sigma: 0.8}
assets:
  - id: A
    flows:
      - {pay_date: 0.6, payoff: X1}
      - {pay_date: 1.2, payoff: "X1 * X2"}
job: {seed: 31, grid_steps: 16, paths: 4000, nodes: 128}
"""
    )
    result = jobs.run_simulate(scenario)
    total_z = float(result.summary["max_martingale_z"])
    ok = worst_mean_z <= 4.0 and worst_super_z <= 4.0 and total_z <= 4.0
    _report(7, "martingale checks", ok,
            f"mean z {worst_mean_z:.2f}, variance-decrease z {worst_super_z:.2f}, "
            f"total-value z {total_z:.2f}, all <= 4")


def test_criterion_08_innovation_statistics():
    n = 10_000
    steps = 64
    h = T / steps
    grid = TimeGrid.from_times(np.linspace(0.0, T - h, steps))
    _, xi = simulate_information_ensemble(EXP1, CONST, grid, 1234, n)
    means = filter_mean_matrix(EXP1, CONST, grid, xi, nodes=128)
    from infobridge.stochastic import _innovation_matrix

    W = _innovation_matrix(CONST, grid, xi, means)
    z = np.diff(W, axis=1) / np.sqrt(np.diff(grid.times))[None, :]
    n_total = z.size
    mean_z = abs(z.mean()) * math.sqrt(n_total)
    var_z = abs(z.var(ddof=1) - 1.0) / math.sqrt(2.0 / n_total)
    jb_p = min(float(jarque_bera(z[:, c]).pvalue) for c in (0, 31, 62))
    ok = mean_z <= 4.0 and var_z <= 4.0 and jb_p > 0.01
    _report(8, "innovation mean/variance/normality", ok,
            f"mean z {mean_z:.2f}, var z {var_z:.2f} <= 4; min JB p {jb_p:.3f} > 0.01")


def test_criterion_09_option_pricing():
    details = []
    ok = True
    # analytic vs MC at K/forward in {0.8, 1.0, 1.2}
    priors = ((EXP1, "exponential"), (DiscreteAtoms(atoms=((0.5, 0.5), (1.5, 0.5))), "two-atom"))
    for p_idx, (prior, name) in enumerate(priors):
        fwd = prior.moments().mean  # zero curve: forward = prior mean
        for m_idx, m in enumerate((0.8, 1.0, 1.2)):
            spec = CallSpec(strike=m * fwd, expiry=0.5, prior=prior, schedule=CONST, curve=ZERO)
            analytic = call_price_analytic(spec)
            mc = call_price_mc(spec, 100_000, seed=9000 + 10 * p_idx + m_idx)
            z = abs(mc.estimate - analytic) / mc.standard_error
            ok = ok and z <= 4.0
            details.append(f"{name} K/F={m}: z={z:.2f}")
    # the two parameterizations agree for constant rates
    worst_param = 0.0
    for m in (0.8, 1.0, 1.2):
        spec = CallSpec(strike=m, expiry=0.5, prior=EXP1, schedule=CONST, curve=R_CURVE)
        a = call_price_analytic(spec, parameterization="omega")
        b = call_price_analytic(spec, parameterization="tau")
        worst_param = max(worst_param, abs(a - b))
    ok = ok and worst_param <= 1e-10
    # put-call parity
    from infobridge.options import put_price_parity

    spec = CallSpec(strike=1.1, expiry=0.5, prior=EXP1, schedule=CONST, curve=R_CURVE)
    parity_gap = abs(
        call_price_analytic(spec) - put_price_parity(spec)
        - (R_CURVE.discount(T) * 1.0 - R_CURVE.discount(0.5) * 1.1)
    )
    ok = ok and parity_gap <= 1e-10
    # decreasing and convex on an 11-point strike grid
    strikes = np.linspace(0.2, 2.2, 11)
    prices = [
        call_price_analytic(CallSpec(strike=float(k), expiry=0.5, prior=EXP1,
                                     schedule=CONST, curve=ZERO))
        for k in strikes
    ]
    diffs = np.diff(prices)
    ok = ok and bool(np.all(diffs <= 1e-12)) and bool(np.all(np.diff(diffs) >= -1e-10))
    _report(9, "option pricing", ok,
            "; ".join(details) + f"; param gap {worst_param:.1e} <= 1e-10; "
            f"parity gap {parity_gap:.1e} <= 1e-10; monotone+convex in K")


def test_criterion_10_inverse_round_trip():
    end = T / 2.0
    finest = 4096
    n = 96
    values, xi_fine = simulate_information_ensemble(
        EXP1, CONST, TimeGrid.uniform(end, finest), 909, n
    )
    gaps = {}
    for steps in (1024, 2048, 4096):
        sub = finest // steps
        grid = TimeGrid.from_times(np.linspace(0.0, end, finest + 1)[::sub])
        result = inverse_filter_roundtrip(
            EXP1, CONST, grid, 909, nodes=128, ensemble=(values, xi_fine[:, ::sub])
        )
        gaps[steps] = float(result.sup_gaps.mean())
    corr_result = inverse_filter_roundtrip(
        EXP1, CONST, TimeGrid.uniform(end, 256), 910, n_paths=10_000, nodes=128
    )
    corr_z = abs(corr_result.beta_factor_corr) * math.sqrt(10_000)
    ok = (
        gaps[1024] <= 5e-2
        and gaps[2048] < gaps[1024]
        and gaps[4096] < gaps[2048]
        and corr_z <= 4.0
    )
    _report(10, "inverse round trip", ok,
            f"mean sup gap {gaps[1024]:.4f} <= 0.05, refinement "
            f"{gaps[1024]:.4f} > {gaps[2048]:.4f} > {gaps[4096]:.4f}; "
            f"corr z {corr_z:.2f} <= 4")


def test_criterion_11_price_dynamics_residuals():
    r = 0.02
    priors = {"X1": EXP1, "X2": Gamma(order=2, rate=2.0)}
    finest, end, n = 512, 0.5, 192
    base = {
        fid: simulate_information_ensemble(priors[fid], CONST, TimeGrid.uniform(end, finest), seed, n)
        for fid, seed in (("X1", 91), ("X2", 92))
    }
    rms = {}
    for steps in (128, 256, 512):
        sub = finest // steps
        grid = TimeGrid.from_times(np.linspace(0.0, end, finest + 1)[::sub])
        t_arr = grid.times
        nu = np.array([CONST.nu(u) for u in t_arr])
        disc = np.exp(-r * (T - t_arr))
        S = np.zeros((n, len(t_arr)))
        gammas, dWs = [], []
        for fid in ("X1", "X2"):
            xi = base[fid][1][:, ::sub]
            means, variances = filter_mean_matrix(
                priors[fid], CONST, grid, xi, nodes=128, with_variance=True
            )
            from infobridge.stochastic import _innovation_matrix

            W = _innovation_matrix(CONST, grid, xi, means)
            S += disc[None, :] * means
            gammas.append(nu[None, :] * disc[None, :] * variances)
            dWs.append(np.diff(W, axis=1))
        dt = np.diff(t_arr)
        resid = np.diff(S, axis=1) - r * S[:, :-1] * dt[None, :]
        for g, dw in zip(gammas, dWs):
            resid -= g[:, :-1] * dw
        rms[steps] = float(np.sqrt((resid**2).mean()))
    r1 = rms[128] / rms[256]
    r2 = rms[256] / rms[512]
    ok = r1 >= 1.8 and r2 >= 1.8
    _report(11, "price dynamics residual refinement", ok,
            f"RMS ratios per doubling {r1:.2f}, {r2:.2f} >= 1.8")


def test_criterion_12_common_factor_correlation():
    horizon = 2.0
    def factor(fid):
        return XFactorSpec(id=fid, maturity=horizon, prior=EXP1,
                           schedule=FlowSchedule.constant(1.0, horizon))
    factors = {fid: factor(fid) for fid in ("C", "A1", "B1")}
    pa = Payoff.parse("C + A1", factors)
    pb = Payoff.parse("C + B1", factors)
    shared_a = AssetSpec(id="a", cash_flows=(CashFlowSpec(pay_date=horizon, payoff=pa),))
    shared_b = AssetSpec(id="b", cash_flows=(CashFlowSpec(pay_date=horizon, payoff=pb),))
    res_shared = correlation_common_factor(
        shared_a, shared_b, factors, ZERO, 0.0, 1.0, seed=121, n_paths=4096
    )
    lone_a = AssetSpec(id="a", cash_flows=(CashFlowSpec.single("A1", horizon),))
    lone_b = AssetSpec(id="b", cash_flows=(CashFlowSpec.single("B1", horizon),))
    res_disjoint = correlation_common_factor(
        lone_a, lone_b, factors, ZERO, 0.0, 1.0, seed=122, n_paths=4096
    )
    se = res_shared.zero_corr_se
    ok = res_shared.correlation > 4.0 * se and abs(res_disjoint.correlation) <= 4.0 * se
    _report(12, "common-factor correlation", ok,
            f"shared {res_shared.correlation:.3f} > 4se={4*se:.3f}; "
            f"disjoint |{res_disjoint.correlation:.3f}| <= 4se")


def test_criterion_13_determinism_across_thread_counts(monkeypatch):
    # small RNG blocks so several blocks exist and threading is exercised
    monkeypatch.setattr(infobridge.stochastic, "ENSEMBLE_BLOCK", 256)
    scenario_text = """
curve: {kind: flat, rate: 0.01}
factors:
  - id: X1
    maturity: 1.0
    prior: {kind: exponential, scale: 1.0}
    schedule: {kind: constant, sigma: 1.0}
assets:
  - id: A
    flows:
      - {pay_date: 1.0, payoff: X1}
job: {seed: 99, grid_steps: 12, paths: 1200, nodes: 96}
"""
    outputs = []
    for threads in (1, 4, 8):
        scenario = load_scenario(scenario_text).with_overrides(threads=threads)
        result = jobs.run_simulate(scenario)
        outputs.append(result.outputs)
    same = all(
        outputs[0][name] == outputs[k][name]
        for k in (1, 2)
        for name in outputs[0]
    )
    _report(13, "determinism across thread counts", same,
            "byte-identical CSVs for threads 1, 4, 8")

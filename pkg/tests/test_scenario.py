"""Scenario parsing and validation."""

import pytest

from infobridge.market import FlatCurve, TabulatedCurve
from infobridge.priors import DiscreteAtoms, Exponential, Gamma, StandardNormal
from infobridge.scenario import ScenarioError, load_scenario, load_scenario_file

GOOD = """
curve: {kind: flat, rate: 0.02}
factors:
  - id: X1
    maturity: 1.0
    prior: {kind: exponential, scale: 1.0}
    schedule: {kind: constant, sigma: 1.0}
  - id: X2
    maturity: 2.0
    prior: {kind: gamma, order: 2, rate: 2.0}
    schedule: {kind: piecewise, segments: [[0.0, 1.0, 0.5], [1.0, 2.0, 1.5]]}
assets:
  - id: A
    flows:
      - {pay_date: 1.0, payoff: X1}
      - {pay_date: 2.0, payoff: "X1 * X2"}
job: {seed: 7, grid_steps: 32, paths: 1000}
"""


class TestLoadScenario:
    def test_good_document(self):
        scn = load_scenario(GOOD)
        assert isinstance(scn.curve, FlatCurve)
        assert set(scn.factors) == {"X1", "X2"}
        assert isinstance(scn.factors["X1"].prior, Exponential)
        assert isinstance(scn.factors["X2"].prior, Gamma)
        assert scn.horizon == 2.0
        assert scn.job.seed == 7
        assert scn.assets[0].cash_flows[1].payoff.depends_on == ("X1", "X2")

    def test_overrides(self):
        scn = load_scenario(GOOD).with_overrides(nodes=64, threads=4, seed=None)
        assert scn.job.nodes == 64
        assert scn.job.threads == 4
        assert scn.job.seed == 7  # None leaves the scenario value

    def test_eps_override_applies_at_load_time(self):
        scn = load_scenario(GOOD, overrides={"eps": 1e-4})
        assert scn.job.eps == 1e-4
        assert scn.factors["X1"].schedule.maturity_guard == 1e-4
        with pytest.raises(ValueError, match="load time"):
            load_scenario(GOOD).with_overrides(eps=1e-4)

    def test_growth_prior_mean(self):
        doc = GOOD.replace(
            "{kind: exponential, scale: 1.0}", "{kind: growth, g: 0.05, order: 4}"
        )
        scn = load_scenario(doc)
        prior = scn.factors["X1"].prior
        assert isinstance(prior, Gamma)
        assert abs(prior.moments().mean - 1.05) <= 1e-12

    def test_standard_normal_prior(self):
        doc = GOOD.replace("{kind: exponential, scale: 1.0}", "{kind: standard_normal}")
        scn = load_scenario(doc)
        assert isinstance(scn.factors["X1"].prior, StandardNormal)

    def test_discrete_prior(self):
        doc = GOOD.replace(
            "{kind: exponential, scale: 1.0}",
            "{kind: discrete, atoms: [[0.0, 0.5], [1.0, 0.5]]}",
        )
        scn = load_scenario(doc)
        assert isinstance(scn.factors["X1"].prior, DiscreteAtoms)


class TestFieldLabelledErrors:
    @pytest.mark.parametrize(
        "mangle,field",
        [
            (lambda d: d.replace("kind: exponential", "kind: exp"), "factors[0].prior.kind"),
            (lambda d: d.replace("    maturity: 1.0\n", ""), "factors[0].maturity"),
            (lambda d: d.replace("payoff: X1}", "payoff: X9}"), "assets[0].flows[0].payoff"),
            (lambda d: d.replace("seed: 7, ", "seed: 7, bogus: 1, "), "job.bogus"),
            (lambda d: d.replace("sigma: 1.0", "sigma: -1.0"), "factors[0].schedule"),
        ],
    )
    def test_error_carries_field_path(self, mangle, field):
        with pytest.raises(ScenarioError) as err:
            load_scenario(mangle(GOOD))
        assert err.value.field == field

    def test_yaml_error_carries_line(self):
        with pytest.raises(ScenarioError, match="line"):
            load_scenario("curve: {kind: flat\nfactors: []")

    def test_missing_factors(self):
        with pytest.raises(ScenarioError, match="factors"):
            load_scenario("assets: []\njob: {}")

    def test_duplicate_factor_id(self):
        doc = GOOD.replace("id: X2", "id: X1")
        with pytest.raises(ScenarioError, match="duplicate"):
            load_scenario(doc)

    def test_payoff_on_late_factor_rejected(self):
        # a flow cannot depend on a factor revealed after its pay date
        doc = GOOD.replace('{pay_date: 1.0, payoff: X1}', '{pay_date: 1.0, payoff: X2}')
        with pytest.raises(ScenarioError, match="revealed"):
            load_scenario(doc)

    def test_seed_required_for_stochastic_jobs(self):
        doc = GOOD.replace("seed: 7, ", "")
        scn = load_scenario(doc)
        with pytest.raises(ScenarioError, match="seed"):
            scn.job.require_seed()


class TestFileInputs:
    def test_curve_and_schedule_files(self, tmp_path):
        (tmp_path / "curve.csv").write_text("t,P\n0.0,1.0\n1.0,0.97\n2.0,0.93\n")
        (tmp_path / "sched.csv").write_text("t_start,t_end,sigma\n0.0,1.0,1.0\n")
        (tmp_path / "prior.csv").write_text("x,density\n0.0,0.0\n1.0,1.0\n2.0,0.0\n")
        doc = """
curve: {kind: tabulated, file: curve.csv}
factors:
  - id: X1
    maturity: 1.0
    prior: {kind: tabulated, file: prior.csv}
    schedule: {kind: file, file: sched.csv}
assets:
  - id: A
    flows:
      - {pay_date: 1.0, payoff: X1}
job: {seed: 1}
"""
        scn_path = tmp_path / "scn.yaml"
        scn_path.write_text(doc)
        scn = load_scenario_file(str(scn_path))
        assert isinstance(scn.curve, TabulatedCurve)
        assert scn.factors["X1"].prior.support == (0.0, 2.0)
        assert scn.factors["X1"].schedule.maturity == 1.0

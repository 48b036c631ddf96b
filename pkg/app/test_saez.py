import numpy as np
import pytest

from baselines import BracketSchedule, schedule_to_action
from behavior_cloning import BehaviorParams, RuleOfThumbPolicy
from economy import EconConfig, GovAction
from errors import ConfigError, ContractError
from rollout import run_episode
from saez import (
    ELASTICITY_BOUNDS,
    SaezPolicy,
    SaezState,
    calibrate_elasticity,
    saez_fit_elasticity,
    saez_gov_policy,
    saez_marginal_rate,
    saez_rates,
)


def test_marginal_rate_examples():
    assert saez_marginal_rate(0.0, 2.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert saez_marginal_rate(1.0, 2.0, 1.0) == 0.0
    assert saez_marginal_rate(0.2, float('inf'), 1.0) == 0.0
    assert saez_marginal_rate(0.0, 0.0, 1.0) == 1.0


def test_marginal_rate_falls_as_weight_rises():
    for alpha in (0.5, 1.5, 3.0):
        for e in (0.2, 1.0, 4.0):
            rates = [saez_marginal_rate(G, alpha, e) for G in np.linspace(0.0, 0.95, 20)]
            assert all(b < a for a, b in zip(rates, rates[1:]))


def test_elasticity_fit_recovers_planted_value():
    state = SaezState()
    spread = np.array([0.5, 1.0, 2.0, 4.0])
    for rate in (0.0, 0.1, 0.2, 0.3, 0.4):
        state.record(100.0 * (1.0 - rate) * spread, rate)
    assert saez_fit_elasticity(state) == pytest.approx(1.0, rel=0.05)
    assert state.elasticity == pytest.approx(1.0, rel=0.05)


def test_elasticity_fit_fallbacks():
    single = SaezState()
    single.record([10.0, 20.0, 30.0], 0.2)
    assert saez_fit_elasticity(single) == 1.0
    assert saez_fit_elasticity(SaezState()) == 1.0

    flat = SaezState()
    for rate in (0.0, 0.2, 0.4):
        flat.record([50.0, 50.0], rate)
    assert saez_fit_elasticity(flat) == ELASTICITY_BOUNDS[0]


def test_state_buffer_is_bounded():
    state = SaezState(capacity=3)
    state.record([1.0, 2.0, 3.0, 4.0], 0.1)
    assert state.incomes().tolist() == [2.0, 3.0, 4.0]
    with pytest.raises(ConfigError):
        SaezState(capacity=0)


def test_saez_rates_shape_and_bounds():
    incomes = np.random.default_rng(0).lognormal(3.0, 0.8, size=2000)
    mean = incomes.mean()
    edges = [0.0, 0.5 * mean, mean, 2 * mean, 4 * mean]
    schedule = saez_rates(SaezState(), incomes, edges)
    assert schedule.edges == pytest.approx(tuple(edges))
    assert len(schedule.rates) == 5
    assert all(0.0 <= r <= 0.95 for r in schedule.rates)


def test_saez_rates_fall_with_elasticity():
    incomes = np.random.default_rng(1).lognormal(3.0, 0.8, size=500)
    edges = [0.0, 10.0, 20.0, 40.0]
    inelastic = saez_rates(SaezState(elasticity=0.5), incomes, edges)
    elastic = saez_rates(SaezState(elasticity=2.0), incomes, edges)
    assert all(a >= b for a, b in zip(inelastic.rates, elastic.rates))


def test_saez_rates_errors():
    with pytest.raises(ContractError):
        saez_rates(SaezState(), [], [0.0, 1.0])
    with pytest.raises(ConfigError):
        saez_rates(SaezState(), [1.0, 2.0], [0.0, 5.0, 3.0])


def test_saez_policy_in_episode():
    config = EconConfig(n_households=5, horizon=10)
    state = SaezState()
    policy = SaezPolicy(state, spend_ratio=0.2)
    log = run_episode(config, 0, policy, RuleOfThumbPolicy(BehaviorParams()))
    assert log.steps_survived >= 1
    assert state.schedule is not None
    assert len(state.observations) == 5 * log.steps_survived
    with pytest.raises(ConfigError):
        SaezPolicy(SaezState(), refit_interval=0)


def test_calibrate_elasticity_within_bounds():
    config = EconConfig(n_households=4, horizon=6)
    state = SaezState()
    elasticity = calibrate_elasticity(config, RuleOfThumbPolicy(BehaviorParams()), state, rates=(0.0, 0.2, 0.4))
    assert ELASTICITY_BOUNDS[0] <= elasticity <= ELASTICITY_BOUNDS[1]
    assert state.elasticity == elasticity
    assert len(state.observations) > 0


def test_gov_policy_without_fit_is_free_market():
    assert saez_gov_policy(None, SaezState()) == GovAction()


def test_gov_policy_follows_current_schedule():
    state = SaezState()
    state.schedule = BracketSchedule((0.0, 50.0, 100.0), (0.1, 0.3, 0.5))
    state.mean_income = 60.0
    action = saez_gov_policy(None, state, spend_ratio=0.2)
    assert action == schedule_to_action(state.schedule, 60.0, 0.2)
    assert action.income_progressivity > 0
    assert action.spend_ratio == 0.2


def test_saez_rates_ignore_sample_duplication():
    incomes = np.random.default_rng(2).lognormal(3.0, 0.8, size=400)
    edges = [0.0, 10.0, 20.0, 40.0, 80.0]
    once = saez_rates(SaezState(elasticity=0.7), incomes, edges)
    twice = saez_rates(SaezState(elasticity=0.7), np.concatenate([incomes, incomes]), edges)
    assert twice.rates == pytest.approx(once.rates, rel=1e-12, abs=1e-15)

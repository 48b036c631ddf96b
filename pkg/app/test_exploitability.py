from dataclasses import replace

import numpy as np
import pytest

from agents import build_agent_nets
from economy import HOUSEHOLD_ACTION_HIGH, HOUSEHOLD_ACTION_LOW
from errors import ContractError
from exploitability import collect_profile_buffer, exploitability, smfg_leader_policy
from trainer import train


def _hoarding_followers(obs, gov):
    """Consume the minimum share and work full time, whatever happens."""
    return np.tile([HOUSEHOLD_ACTION_LOW[0], HOUSEHOLD_ACTION_HIGH[1]], (obs.shape[0], 1))


def test_zero_budget_is_exactly_zero(tiny_econ, tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    report = exploitability(tiny_econ, nets, tiny_train, br_budget=0, eval_seeds=[0, 1])
    assert report.total == 0.0
    assert report.follower_gap == 0.0 and report.leader_gap == 0.0


def test_gaps_bounded_below_by_payoff_scale(tiny_econ, tiny_train):
    config = replace(tiny_train, critic_lr=1e-6, actor_lr=1e-6)
    nets = build_agent_nets(config, 0)
    leader, follower = nets.digest('leader'), nets.digest('follower')
    report = exploitability(tiny_econ, nets, config, br_budget=3, eval_seeds=[0, 1], seed=1)
    assert report.payoff_scale > 0
    assert report.total >= -1e-3 * report.payoff_scale
    assert np.isfinite(report.follower_gap) and np.isfinite(report.leader_gap)
    assert nets.digest('leader') == leader and nets.digest('follower') == follower


def test_sabotaged_followers_are_more_exploitable(tiny_econ, tiny_train):
    nets, _ = train(tiny_econ, tiny_train, seed=0)
    seeds = [0, 1]
    trained = exploitability(tiny_econ, nets, tiny_train, br_budget=2, eval_seeds=seeds, seed=3)
    sabotaged = exploitability(tiny_econ, nets, tiny_train, br_budget=2, eval_seeds=seeds, seed=3,
                               follower_policy=_hoarding_followers)
    assert sabotaged.follower_gap > trained.follower_gap
    assert sabotaged.total > trained.total


def test_profile_buffer_records_played_actions(tiny_econ, tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    buffer = collect_profile_buffer(tiny_econ, smfg_leader_policy(nets), _hoarding_followers, [0])
    batch = buffer.sample(len(buffer), np.random.default_rng(0))
    assert batch.size == tiny_econ.horizon
    assert np.all(batch.follower_actions[..., 0] == HOUSEHOLD_ACTION_LOW[0])
    assert np.all(batch.follower_actions[..., 1] == HOUSEHOLD_ACTION_HIGH[1])


def test_exploitability_is_seeded(tiny_econ, tiny_train):
    nets = build_agent_nets(tiny_train, 2)
    a = exploitability(tiny_econ, nets, tiny_train, br_budget=2, eval_seeds=[4], seed=9)
    b = exploitability(tiny_econ, nets, tiny_train, br_budget=2, eval_seeds=[4], seed=9)
    assert a == b


def test_invalid_arguments(tiny_econ, tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    with pytest.raises(ContractError):
        exploitability(tiny_econ, nets, tiny_train, br_budget=-1, eval_seeds=[0])
    with pytest.raises(ContractError):
        exploitability(tiny_econ, nets, tiny_train, br_budget=1, eval_seeds=[])

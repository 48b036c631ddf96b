from dataclasses import replace

import numpy as np
import pytest

from agents import (
    FOLLOWER_ACTION_DIM,
    LEADER_ACTION_DIM,
    NETWORK_NAMES,
    AgentNets,
    TrainConfig,
    act_follower,
    act_followers,
    act_leader,
    build_agent_nets,
    critic_input_sizes,
    follower_targets,
    leader_targets,
    load_agent_nets,
    network_specs,
    save_agent_nets,
    update_followers,
    update_leader,
)
from economy import (
    FOLLOWER_OBS_DIM,
    GOV_ACTION_HIGH,
    GOV_ACTION_LOW,
    HOUSEHOLD_ACTION_HIGH,
    HOUSEHOLD_ACTION_LOW,
    LEADER_OBS_DIM,
    GovAction,
)
from errors import CheckpointError, ConfigError
from network import NetworkParams
from replay_buffer import Transition, TransitionBatch


def _batch(n=3, size=1, done=False, seed=0, leader_reward=0.3):
    rng = np.random.default_rng(seed)
    transitions = [
        Transition(
            leader_obs=rng.normal(size=LEADER_OBS_DIM),
            leader_action=rng.uniform(GOV_ACTION_LOW, GOV_ACTION_HIGH),
            leader_reward=leader_reward,
            next_leader_obs=rng.normal(size=LEADER_OBS_DIM),
            follower_obs=rng.normal(size=(n, FOLLOWER_OBS_DIM)),
            follower_actions=rng.uniform(HOUSEHOLD_ACTION_LOW, HOUSEHOLD_ACTION_HIGH, size=(n, 2)),
            follower_rewards=rng.uniform(0.0, 0.5, size=n),
            next_follower_obs=rng.normal(size=(n, FOLLOWER_OBS_DIM)),
            done=done,
        )
        for _ in range(size)
    ]
    return TransitionBatch.stack(transitions)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({'gamma': 1.5})
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({'learning_rate': 0.1})
    assert TrainConfig.from_dict({'hidden_sizes': [16, 16]}).hidden_sizes == (16, 16)


def test_targets_start_equal_to_online(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    for name in ('leader_actor', 'leader_critic', 'follower_actor', 'follower_critic'):
        assert getattr(nets, name).digest() == getattr(nets, f"{name}_target").digest()
    assert nets.optim['leader_actor'].eps == tiny_train.adam_eps


def test_act_leader_deterministic_and_boxed(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    obs = np.random.default_rng(0).normal(size=(10_000, LEADER_OBS_DIM)) * 5
    assert act_leader(nets, obs[0]) == act_leader(nets, obs[0])
    rng = np.random.default_rng(1)
    for row in obs[:200]:
        action = act_leader(nets, row, explore=True, rng=rng, epsilon=0.5, noise_rate=0.5).to_array()
        assert np.all(action >= GOV_ACTION_LOW) and np.all(action <= GOV_ACTION_HIGH)


def test_zero_actor_gives_box_midpoint(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    zero = NetworkParams(nets.leader_actor.spec)
    action = act_leader(replace(nets, leader_actor=zero), np.ones(LEADER_OBS_DIM)).to_array()
    assert action == pytest.approx((GOV_ACTION_LOW + GOV_ACTION_HIGH) / 2.0)


def test_follower_policy_is_shared(tiny_train):
    nets = build_agent_nets(tiny_train, 3)
    obs = np.random.default_rng(0).normal(size=FOLLOWER_OBS_DIM)
    gov = GovAction(income_tax_rate=0.2)
    actions = act_followers(nets, np.vstack([obs, obs]), gov)
    assert np.array_equal(actions[0], actions[1])
    assert act_follower(nets, obs, gov) == act_follower(nets, obs, gov)

    other = act_followers(nets, obs[None, :], GovAction(income_tax_rate=0.7, spend_ratio=0.9))
    assert not np.array_equal(actions[:1], other)


def test_follower_actions_boxed_under_exploration(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    obs = np.random.default_rng(0).normal(size=(500, FOLLOWER_OBS_DIM)) * 5
    actions = act_followers(nets, obs, GovAction(), explore=True, rng=np.random.default_rng(2),
                            epsilon=0.5, noise_rate=1.0)
    assert actions.shape == (500, FOLLOWER_ACTION_DIM)
    assert np.all(actions >= HOUSEHOLD_ACTION_LOW) and np.all(actions <= HOUSEHOLD_ACTION_HIGH)


def test_update_followers_freezes_leader(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    leader_before = nets.digest('leader')
    updated, report = update_followers(nets, _batch(size=4), tiny_train, np.random.default_rng(0))
    assert updated.digest('leader') == leader_before
    assert updated.follower_critic.digest() != nets.follower_critic.digest()
    assert updated.follower_critic_target.digest() == nets.follower_critic_target.digest()
    assert np.isfinite(report.critic_loss) and np.isfinite(report.actor_objective)


def test_update_leader_freezes_followers(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    follower_before = nets.digest('follower')
    updated, _ = update_leader(nets, _batch(size=4), tiny_train)
    assert updated.digest('follower') == follower_before
    assert updated.leader_actor.digest() != nets.leader_actor.digest()


@pytest.mark.parametrize('use_mean_field', [True, False])
def test_zero_learning_rates_leave_parameters(tiny_train, use_mean_field):
    config = replace(tiny_train, use_mean_field=use_mean_field)
    nets = build_agent_nets(config, 1)
    batch = _batch(size=3)
    after_followers, report = update_followers(nets, batch, config, np.random.default_rng(0), 0.0, 0.0)
    after_leader, leader_report = update_leader(nets, batch, config, 0.0, 0.0)
    for name in NETWORK_NAMES:
        assert getattr(after_followers, name).digest() == getattr(nets, name).digest()
        assert getattr(after_leader, name).digest() == getattr(nets, name).digest()
    assert np.isfinite(report.critic_loss) and np.isfinite(leader_report.critic_loss)


def test_done_masks_bootstrap(tiny_train):
    nets = build_agent_nets(tiny_train, 0)
    batch = _batch(done=True, leader_reward=-0.7)
    assert leader_targets(nets, batch, tiny_train)[0] == -0.7

    own = np.array([[0, 2]])
    opponents = np.array([[[1, 2], [0, 1]]])
    targets = follower_targets(nets, batch, tiny_train, own, opponents)
    assert np.array_equal(targets[0], batch.follower_rewards[0, [0, 2]])


def test_gamma_zero_leader_target_is_reward(tiny_train):
    config = replace(tiny_train, gamma=0.0)
    nets = build_agent_nets(config, 0)
    batch = _batch(size=2, leader_reward=0.25)
    assert leader_targets(nets, batch, config).tolist() == [0.25, 0.25]


def test_gamma_zero_follower_critic_fixed_point(tiny_train):
    config = replace(tiny_train, gamma=0.0)
    nets = build_agent_nets(config, 0)
    critic = nets.follower_critic.copy()
    W_out, b_out = critic.layers[-1]
    W_out[...] = 0.0
    b_out[...] = 0.2
    nets = nets.with_updates(follower_critic=critic)
    batch = _batch(size=3)
    batch = replace(batch, follower_rewards=np.full_like(batch.follower_rewards, 0.2))

    updated, report = update_followers(nets, batch, config, np.random.default_rng(0), critic_lr=1e-2)
    assert report.critic_loss == 0.0
    assert np.array_equal(updated.follower_critic.flat, critic.flat)


def test_follower_critic_loss_non_increasing_on_one_transition():
    config = TrainConfig(hidden_sizes=(16, 16), follower_samples=1, opponent_samples=1)
    nets = build_agent_nets(config, 0)
    batch = _batch(n=1)
    rng = np.random.default_rng(0)
    losses = []
    for _ in range(100):
        nets, report = update_followers(nets, batch, config, rng, critic_lr=1e-5, actor_lr=1e-5)
        losses.append(report.critic_loss)
    assert all(b <= a + 1e-6 for a, b in zip(losses, losses[1:]))


@pytest.mark.slow
def test_leader_critic_overfits_one_transition():
    config = TrainConfig(hidden_sizes=(8,), gamma=0.975)
    nets = build_agent_nets(config, 0)
    assert nets.leader_critic.spec.layer_sizes == (21, 8, 1)
    batch = _batch(n=2, done=True, leader_reward=0.4)
    losses = []
    for step in range(1000):
        nets, report = update_leader(nets, batch, config, critic_lr=1e-2 * 0.995 ** step, actor_lr=0.0)
        losses.append(report.critic_loss)
    assert min(losses) < 1e-6


def test_concat_critic_width_follows_truncation_count():
    sizes = [critic_input_sizes(TrainConfig(use_mean_field=False, m_concat=m)) for m in (2, 4, 8)]
    leader_widths = [leader for leader, _ in sizes]
    assert leader_widths[1] - leader_widths[0] == 2 * (FOLLOWER_OBS_DIM + FOLLOWER_ACTION_DIM)
    assert leader_widths[2] - leader_widths[1] == 4 * (FOLLOWER_OBS_DIM + FOLLOWER_ACTION_DIM)
    assert critic_input_sizes(TrainConfig()) == (21, 29)


def test_concat_mode_updates_with_fewer_followers_than_slots(tiny_train):
    config = replace(tiny_train, use_mean_field=False, m_concat=5)
    nets = build_agent_nets(config, 0)
    updated, report = update_leader(nets, _batch(n=3, size=2), config)
    assert np.isfinite(report.critic_loss)
    updated, report = update_followers(updated, _batch(n=3, size=2), config, np.random.default_rng(0))
    assert np.isfinite(report.actor_objective)


def test_save_and_load_agent_nets(tmp_path, tiny_train):
    nets, _ = update_leader(build_agent_nets(tiny_train, 0), _batch(size=2), tiny_train)
    path = save_agent_nets(tmp_path / 'nets.zip', nets, tiny_train, seed=0, epoch=1, variant='smfg')
    loaded = load_agent_nets(path, tiny_train)
    for name in NETWORK_NAMES:
        assert getattr(loaded, name).digest() == getattr(nets, name).digest()
    assert loaded.optim['leader_critic'].step == 1

    with pytest.raises(CheckpointError):
        load_agent_nets(path, replace(tiny_train, hidden_sizes=(9,)))
    with pytest.raises(CheckpointError):
        load_agent_nets(path, replace(tiny_train, use_mean_field=False))


def test_network_specs_cover_every_network(tiny_train):
    specs = network_specs(tiny_train)
    assert set(specs) == set(NETWORK_NAMES)
    assert specs['leader_actor'].output_size == LEADER_ACTION_DIM
    assert isinstance(build_agent_nets(tiny_train, 0), AgentNets)

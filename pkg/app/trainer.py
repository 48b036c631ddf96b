"""SMFRL training loop: explore, store, alternate follower and leader updates."""

import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from agents import (
    AgentNets,
    LossReport,
    TrainConfig,
    act_followers,
    act_leader,
    build_agent_nets,
    update_followers,
    update_leader,
)
from economy import EconConfig, init_economy, observe_followers, observe_leader, step_economy
from errors import ConfigError
from network import soft_update
from replay_buffer import ReplayBuffer, Transition

logger = logging.getLogger('smfg-lab.trainer')

# algo name -> (use_leader_follower_update, use_mean_field)
ABLATION_FLAGS = {
    'smfg': (True, True),
    'smfg-s': (False, True),
    'smfg-mf': (True, False),
    'smfg-s-mf': (False, False),
}


@dataclass(frozen=True)
class AblationVariant:
    name: str
    use_leader_follower_update: bool
    use_mean_field: bool

    def apply(self, config: TrainConfig) -> TrainConfig:
        return replace(
            config,
            use_leader_follower_update=self.use_leader_follower_update,
            use_mean_field=self.use_mean_field,
        )


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    env_steps: int
    episodes_finished: int
    mean_leader_reward: float
    mean_follower_reward: float
    follower_critic_loss: float
    follower_actor_objective: float
    leader_critic_loss: float
    leader_actor_objective: float
    critic_lr: float
    epsilon: float
    updated: bool


def ablation_variant(use_leader_follower_update: bool, use_mean_field: bool) -> AblationVariant:
    """Name the trainer behavior selected by the two ablation flags."""
    for name, flags in ABLATION_FLAGS.items():
        if flags == (bool(use_leader_follower_update), bool(use_mean_field)):
            return AblationVariant(name, *flags)
    raise ConfigError('unreachable flag combination')


def variant_for_algo(algo: str) -> AblationVariant:
    if algo not in ABLATION_FLAGS:
        raise ConfigError(f"'{algo}' is not an SMFG training variant")
    return AblationVariant(algo, *ABLATION_FLAGS[algo])


def lr_schedule(base_lr: float, epoch: int, decay: float = 0.95, every: int = 35) -> float:
    """Step decay: base_lr * decay ** (epoch // every)."""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    return base_lr * decay ** (epoch // every)


def epsilon_at(config: TrainConfig, global_step: int) -> float:
    return max(config.epsilon_end, config.epsilon_start - config.epsilon_decay * global_step)


def soft_update_targets(nets: AgentNets, tau: float) -> AgentNets:
    return nets.with_updates(
        leader_actor_target=soft_update(nets.leader_actor_target, nets.leader_actor, tau),
        leader_critic_target=soft_update(nets.leader_critic_target, nets.leader_critic, tau),
        follower_actor_target=soft_update(nets.follower_actor_target, nets.follower_actor, tau),
        follower_critic_target=soft_update(nets.follower_critic_target, nets.follower_critic, tau),
    )


def update_cycle(nets: AgentNets, buffer: ReplayBuffer, config: TrainConfig, rng: np.random.Generator,
                 critic_lr: float, actor_lr: float) -> Tuple[AgentNets, LossReport, LossReport]:
    """One update cycle.

    Leader-follower mode runs inner_update_cycles follower updates and then a
    leader update against the refreshed followers. The S ablation updates both
    sides from the same snapshot on one shared batch.
    """
    if config.use_leader_follower_update:
        follower_report = None
        for _ in range(config.inner_update_cycles):
            batch = buffer.sample(config.batch_size, rng)
            nets, follower_report = update_followers(nets, batch, config, rng, critic_lr, actor_lr)
        batch = buffer.sample(config.batch_size, rng)
        nets, leader_report = update_leader(nets, batch, config, critic_lr, actor_lr)
        return nets, follower_report, leader_report

    batch = buffer.sample(config.batch_size, rng)
    follower_side, follower_report = update_followers(nets, batch, config, rng, critic_lr, actor_lr)
    leader_side, leader_report = update_leader(nets, batch, config, critic_lr, actor_lr)
    merged = leader_side.with_updates(
        follower_actor=follower_side.follower_actor,
        follower_critic=follower_side.follower_critic,
        optim={k: follower_side.optim[k] for k in ('follower_actor', 'follower_critic')},
    )
    return merged, follower_report, leader_report


def _stored_followers(config: TrainConfig, n: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    limit = config.follower_store_limit
    if limit and n > limit:
        return np.sort(rng.choice(n, size=limit, replace=False))
    return None


def collect_step(nets: AgentNets, state, config: TrainConfig, rng: np.random.Generator,
                 epsilon: float, explore: bool = True):
    """Act in the economy once and build the transition to store.

    Returns:
        (next state, transition, step report)
    """
    leader_obs = observe_leader(state)
    follower_obs = observe_followers(state)
    gov = act_leader(nets, leader_obs, explore, rng, epsilon, config.noise_rate)
    actions = act_followers(nets, follower_obs, gov, explore, rng, epsilon, config.noise_rate)
    next_state, report = step_economy(state, gov, actions)

    index = _stored_followers(config, state.n, rng)
    keep = slice(None) if index is None else index
    transition = Transition(
        leader_obs=leader_obs,
        leader_action=gov.to_array(),
        leader_reward=report.gov_reward,
        next_leader_obs=observe_leader(next_state),
        follower_obs=follower_obs[keep],
        follower_actions=actions[keep],
        follower_rewards=report.household_rewards[keep],
        next_follower_obs=observe_followers(next_state)[keep],
        done=report.done,
        follower_index=index,
    )
    return next_state, transition, report


def train(env_config: EconConfig, train_config: TrainConfig, seed: int,
          on_epoch: Optional[Callable[[int, AgentNets, EpochLog], None]] = None,
          should_stop: Optional[Callable[[], bool]] = None,
          initial_nets: Optional[AgentNets] = None) -> Tuple[AgentNets, List[EpochLog]]:
    """Run SMFRL end to end.

    Each epoch plays epoch_length exploring steps (episodes restart on
    termination), then, once the buffer holds warmup_batches * batch_size
    transitions, runs update_cycles update cycles and soft-updates the targets.

    Args:
        env_config: Economy parameters
        train_config: Trainer parameters, ablation flags included
        seed: Seeds network init, exploration, sampling and episode draws
        on_epoch: Called as on_epoch(epoch, nets, log_entry) after each epoch
        should_stop: Polled between epochs; True ends training early
        initial_nets: Start from these networks instead of a fresh init

    Returns:
        (trained nets, per-epoch log)
    """
    env_config.validate()
    train_config.validate()
    variant = ablation_variant(train_config.use_leader_follower_update, train_config.use_mean_field)
    logger.info(f"Training {variant.name}: N={env_config.n_households}, epochs={train_config.epochs}, "
                f"epoch_length={train_config.epoch_length}, seed={seed}")

    rng = np.random.default_rng(seed)
    nets = initial_nets.copy() if initial_nets is not None else build_agent_nets(train_config, seed)
    buffer = ReplayBuffer(min(train_config.buffer_capacity, max(1, train_config.epochs * train_config.epoch_length)))
    warmup = train_config.warmup_batches * train_config.batch_size

    state = init_economy(env_config, int(rng.integers(2 ** 31)))
    global_step = 0
    log: List[EpochLog] = []

    for epoch in range(train_config.epochs):
        if should_stop is not None and should_stop():
            logger.warning(f"Stop requested, ending training before epoch {epoch}")
            break

        leader_rewards, follower_rewards = [], []
        episodes_finished = 0
        epsilon = epsilon_at(train_config, global_step)
        for _ in range(train_config.epoch_length):
            epsilon = epsilon_at(train_config, global_step)
            next_state, transition, report = collect_step(nets, state, train_config, rng, epsilon)
            buffer.add(transition)
            leader_rewards.append(report.gov_reward)
            follower_rewards.append(float(np.mean(report.household_rewards)))
            global_step += 1
            if report.done:
                episodes_finished += 1
                state = init_economy(env_config, int(rng.integers(2 ** 31)))
            else:
                state = next_state

        critic_lr = lr_schedule(train_config.critic_lr, epoch, train_config.lr_decay, train_config.lr_decay_every)
        actor_lr = lr_schedule(train_config.actor_lr, epoch, train_config.lr_decay, train_config.lr_decay_every)
        follower_reports, leader_reports = [], []
        updated = len(buffer) >= warmup
        if updated:
            for _ in range(train_config.update_cycles):
                nets, follower_report, leader_report = update_cycle(
                    nets, buffer, train_config, rng, critic_lr, actor_lr)
                follower_reports.append(follower_report)
                leader_reports.append(leader_report)
            nets = soft_update_targets(nets, train_config.tau)

        def _mean(reports, attr):
            return float(np.mean([getattr(r, attr) for r in reports])) if reports else float('nan')

        entry = EpochLog(
            epoch=epoch,
            env_steps=global_step,
            episodes_finished=episodes_finished,
            mean_leader_reward=float(np.mean(leader_rewards)),
            mean_follower_reward=float(np.mean(follower_rewards)),
            follower_critic_loss=_mean(follower_reports, 'critic_loss'),
            follower_actor_objective=_mean(follower_reports, 'actor_objective'),
            leader_critic_loss=_mean(leader_reports, 'critic_loss'),
            leader_actor_objective=_mean(leader_reports, 'actor_objective'),
            critic_lr=critic_lr,
            epsilon=epsilon,
            updated=updated,
        )
        log.append(entry)
        logger.info(f"Epoch {epoch}: leader reward {entry.mean_leader_reward:.5f}, "
                    f"follower reward {entry.mean_follower_reward:.5f}, "
                    f"critic losses {entry.follower_critic_loss:.5g}/{entry.leader_critic_loss:.5g}")
        if on_epoch is not None:
            on_epoch(epoch, nets, entry)

    return nets, log

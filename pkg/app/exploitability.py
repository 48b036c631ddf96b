"""Exploitability of an SMFG policy profile via approximate best responses."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from agents import AgentNets, TrainConfig, act_followers, act_leader, update_followers, update_leader
from economy import EconConfig, init_economy, observe_followers, observe_leader, step_economy
from errors import ContractError
from replay_buffer import ReplayBuffer, Transition
from rollout import FollowerPolicy, LeaderPolicy, run_episode
from trainer import collect_step

logger = logging.getLogger('smfg-lab.exploitability')

DEVIATOR = 0


@dataclass(frozen=True)
class ExploitabilityReport:
    follower_gap: float
    leader_gap: float
    payoff_scale: float = 0.0

    @property
    def total(self) -> float:
        return self.follower_gap + self.leader_gap


def smfg_leader_policy(nets: AgentNets) -> LeaderPolicy:
    def policy(state):
        return act_leader(nets, observe_leader(state))
    return policy


def smfg_follower_policy(nets: AgentNets) -> FollowerPolicy:
    def policy(obs, gov):
        return act_followers(nets, obs, gov)
    return policy


def collect_buffer(env_config: EconConfig, nets: AgentNets, config: TrainConfig,
                   seeds: Sequence[int], rng: np.random.Generator) -> ReplayBuffer:
    """Exploring episodes of the current profile, one per seed."""
    buffer = ReplayBuffer(max(1, len(seeds) * env_config.horizon))
    for seed in seeds:
        state = init_economy(env_config, seed)
        while True:
            state, transition, report = collect_step(nets, state, config, rng, config.epsilon_end)
            buffer.add(transition)
            if report.done:
                break
    return buffer


def collect_profile_buffer(env_config: EconConfig, leader: LeaderPolicy, followers: FollowerPolicy,
                           seeds: Sequence[int]) -> ReplayBuffer:
    """Noise-free episodes of an arbitrary policy profile, one per seed."""
    buffer = ReplayBuffer(max(1, len(seeds) * env_config.horizon))
    for seed in seeds:
        state = init_economy(env_config, seed)
        while True:
            leader_obs = observe_leader(state)
            follower_obs = observe_followers(state)
            gov = leader(state)
            actions = np.asarray(followers(follower_obs, gov), dtype=float)
            next_state, report = step_economy(state, gov, actions)
            buffer.add(Transition(
                leader_obs=leader_obs,
                leader_action=gov.to_array(),
                leader_reward=report.gov_reward,
                next_leader_obs=observe_leader(next_state),
                follower_obs=follower_obs,
                follower_actions=actions,
                follower_rewards=report.household_rewards,
                next_follower_obs=observe_followers(next_state),
                done=report.done,
            ))
            state = next_state
            if report.done:
                break
    return buffer


def best_response_followers(nets: AgentNets, buffer: ReplayBuffer, config: TrainConfig,
                            br_budget: int, rng: np.random.Generator) -> AgentNets:
    """Refine a clone of the follower nets against the frozen leader."""
    clone = nets.copy()
    for _ in range(br_budget):
        clone, _ = update_followers(clone, buffer.sample(config.batch_size, rng), config, rng)
    return clone


def best_response_leader(nets: AgentNets, buffer: ReplayBuffer, config: TrainConfig,
                         br_budget: int, rng: np.random.Generator) -> AgentNets:
    """Refine a clone of the leader nets against the frozen followers."""
    clone = nets.copy()
    for _ in range(br_budget):
        clone, _ = update_leader(clone, buffer.sample(config.batch_size, rng), config)
    return clone


def exploitability(env_config: EconConfig, nets: AgentNets, config: TrainConfig, br_budget: int,
                   eval_seeds: Sequence[int], seed: int = 0,
                   leader_policy: Optional[LeaderPolicy] = None,
                   follower_policy: Optional[FollowerPolicy] = None) -> ExploitabilityReport:
    """Payoff a deviating follower and a deviating leader can gain.

    The played profile is the one held by ``nets`` unless ``leader_policy`` or
    ``follower_policy`` replaces a side of it. Each best response is a clone of
    the nets refined for br_budget updates on a buffer collected from the
    played profile, so a side given as a plain callable has its best response
    grown from the nets' actor. The follower side is measured on one
    representative household while the rest keep the played policy. Gaps are
    raw averages over eval_seeds and go negative when a best response is worse
    than the policy it replaces.

    Args:
        env_config: Economy parameters
        nets: Networks the best responses start from (and the default profile)
        config: Trainer settings (gamma, batch size, learning rates)
        br_budget: Best-response update rounds; 0 returns zero gaps
        eval_seeds: Episode seeds for collection and evaluation
        seed: Seed for exploration and batch sampling
        leader_policy: Played leader, the nets' leader when None
        follower_policy: Played household policy, the nets' followers when None

    Returns:
        ExploitabilityReport
    """
    if br_budget < 0:
        raise ContractError(f"br_budget must be >= 0, got {br_budget}")
    eval_seeds = list(eval_seeds)
    if not eval_seeds:
        raise ContractError('exploitability needs at least one evaluation seed')
    if br_budget == 0:
        return ExploitabilityReport(0.0, 0.0)

    rng = np.random.default_rng(seed)
    leader = leader_policy or smfg_leader_policy(nets)
    followers = follower_policy or smfg_follower_policy(nets)
    if leader_policy is None and follower_policy is None:
        buffer = collect_buffer(env_config, nets, config, eval_seeds, rng)
    else:
        buffer = collect_profile_buffer(env_config, leader, followers, eval_seeds)
    follower_br = best_response_followers(nets, buffer, config, br_budget, rng)
    leader_br = best_response_leader(nets, buffer, config, br_budget, rng)

    deviator = smfg_follower_policy(follower_br)
    others = np.setdiff1d(np.arange(env_config.n_households), [DEVIATOR])
    follower_gains, leader_gains, scales = [], [], []
    for episode_seed in eval_seeds:
        base = run_episode(env_config, episode_seed, leader, followers)
        deviated = run_episode(env_config, episode_seed, leader,
                               [([DEVIATOR], deviator), (others, followers)])
        base_follower = base.follower_return(DEVIATOR, config.gamma)
        base_leader = base.leader_payoff(config.gamma)
        follower_gains.append(deviated.follower_return(DEVIATOR, config.gamma) - base_follower)
        led = run_episode(env_config, episode_seed, smfg_leader_policy(leader_br), followers)
        leader_gains.append(led.leader_payoff(config.gamma) - base_leader)
        scales.append(abs(base_follower) + abs(base_leader))

    report = ExploitabilityReport(
        follower_gap=float(np.mean(follower_gains)),
        leader_gap=float(np.mean(leader_gains)),
        payoff_scale=float(np.mean(scales)),
    )
    logger.info(f"Exploitability {report.total:.6g} (follower {report.follower_gap:.6g}, "
                f"leader {report.leader_gap:.6g}, budget {br_budget})")
    return report

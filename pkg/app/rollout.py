"""Noise-free evaluation episodes and the indicators recorded along them."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from economy import (
    EconConfig,
    EconomyState,
    GovAction,
    apply_shock,
    gini,
    init_economy,
    observe_followers,
    step_economy,
)
from errors import ConfigError, ContractError
from mean_field import episode_return, social_welfare

logger = logging.getLogger('smfg-lab.rollout')

LeaderPolicy = Callable[[EconomyState], GovAction]
# (k, 6) observations of the group's households + leader action -> (k, 2) actions
FollowerPolicy = Callable[[np.ndarray, GovAction], np.ndarray]
FollowerGroups = Union[FollowerPolicy, Sequence[Tuple[Sequence[int], FollowerPolicy]]]


@dataclass(eq=False)
class EpisodeLog:
    leader_rewards: np.ndarray
    follower_rewards: np.ndarray
    steps_survived: int
    horizon: int
    trace: List[Dict[str, float]]
    wealth: np.ndarray
    income: np.ndarray
    consumption: np.ndarray
    labor: np.ndarray
    termination_reason: Optional[str]
    shock_step: Optional[int] = None
    pre_shock_mean_wealth: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.follower_rewards.shape[0])

    def leader_payoff(self, gamma: float) -> float:
        return episode_return(self.leader_rewards, gamma)

    def follower_return(self, i: int, gamma: float) -> float:
        return episode_return(self.follower_rewards[i], gamma)

    def welfare_returns(self) -> np.ndarray:
        """Per-household utility summed over steps and divided by the horizon."""
        return self.follower_rewards.sum(axis=1) / self.horizon

    def social_welfare(self) -> float:
        return social_welfare(self.welfare_returns())

    def recovery_steps(self, tolerance: float = 0.05) -> float:
        """Steps after the shock until mean wealth is back within tolerance.

        Returns inf when the shock never recovers inside the episode, or when
        no shock was applied.
        """
        if self.shock_step is None or self.pre_shock_mean_wealth is None:
            return math.inf
        target = (1.0 - tolerance) * self.pre_shock_mean_wealth
        for row in self.trace:
            if row['step'] > self.shock_step and row['mean_wealth'] >= target:
                return float(row['step'] - self.shock_step)
        return math.inf


def _normalize_groups(follower_groups: FollowerGroups, n: int) -> List[Tuple[np.ndarray, FollowerPolicy]]:
    if callable(follower_groups):
        return [(np.arange(n), follower_groups)]
    groups = [(np.asarray(idx, dtype=int), policy) for idx, policy in follower_groups]
    covered = np.concatenate([idx for idx, _ in groups]) if groups else np.array([], dtype=int)
    if covered.size != n or not np.array_equal(np.sort(covered), np.arange(n)):
        raise ContractError(f"Follower groups must partition the {n} households")
    return [(idx, policy) for idx, policy in groups if idx.size > 0]


def run_episode(econ_config: EconConfig, seed: int, leader_policy: LeaderPolicy,
                follower_groups: FollowerGroups, shock_step: Optional[int] = None,
                shock_factor: float = 1.0, initial_state: Optional[EconomyState] = None) -> EpisodeLog:
    """Play one episode to termination.

    Args:
        econ_config: Economy parameters
        seed: Seed for the initial draw
        leader_policy: Maps the state to a GovAction
        follower_groups: One policy for everybody, or (indices, policy) pairs
            that partition the households
        shock_step: Step at whose start wealth is multiplied by shock_factor
        shock_factor: Wealth multiplier applied at shock_step
        initial_state: Start from this state instead of a fresh draw

    Returns:
        EpisodeLog with rewards, matrices and the per-step trace
    """
    if shock_step is not None and not 0 <= shock_step < econ_config.horizon:
        raise ConfigError(f"shock_step must lie in [0, {econ_config.horizon}), got {shock_step}")
    state = initial_state if initial_state is not None else init_economy(econ_config, seed)
    groups = _normalize_groups(follower_groups, state.n)

    leader_rewards, follower_rewards, trace = [], [], []
    wealth, income, consumption, labor = [], [], [], []
    pre_shock = None
    reason = None
    while True:
        shocked = shock_step is not None and state.t == shock_step
        if shocked:
            pre_shock = float(state.wealth.mean())
            state = apply_shock(state, shock_factor)
            logger.debug(f"Shock x{shock_factor} at t={state.t}: mean wealth {pre_shock:.4f} -> {state.wealth.mean():.4f}")

        gov = leader_policy(state)
        obs = observe_followers(state)
        actions = np.empty((state.n, 2))
        for idx, policy in groups:
            actions[idx] = policy(obs[idx], gov)

        next_state, report = step_economy(state, gov, actions)
        acc = report.accounting
        trace.append({
            'step': state.t,
            'shock': bool(shocked),
            'gdp': acc.output,
            'per_capita_gdp': acc.output / state.n,
            'wealth_gini': gini(np.maximum(state.wealth, 0.0)),
            'income_gini': gini(acc.income),
            'mean_wealth': float(state.wealth.mean()),
            'end_mean_wealth': float(next_state.wealth.mean()),
            'mean_income': float(acc.income.mean()),
            'mean_consumption': float(acc.household_consumption.mean()),
            'social_welfare': float(report.household_rewards.sum()),
            'tax_revenue': acc.tax_revenue,
            'gov_debt': next_state.gov_debt,
        })
        leader_rewards.append(report.gov_reward)
        follower_rewards.append(report.household_rewards)
        wealth.append(state.wealth)
        income.append(acc.income)
        consumption.append(acc.household_consumption)
        labor.append(actions[:, 1])
        state = next_state
        if report.done:
            reason = report.reason
            break

    return EpisodeLog(
        leader_rewards=np.asarray(leader_rewards),
        follower_rewards=np.asarray(follower_rewards).T,
        steps_survived=len(trace),
        horizon=state.horizon,
        trace=trace,
        wealth=np.asarray(wealth).T,
        income=np.asarray(income).T,
        consumption=np.asarray(consumption).T,
        labor=np.asarray(labor).T,
        termination_reason=reason,
        shock_step=shock_step,
        pre_shock_mean_wealth=pre_shock,
    )

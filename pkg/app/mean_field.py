"""Population distribution, returns, welfare and the mean-field Q average."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractError, DomainError
from network import NetworkParams, net_forward

logger = logging.getLogger('smfg-lab.mean_field')

Critic = Union[NetworkParams, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class PopDistribution:
    """Empirical distribution of follower (observation, action) pairs."""

    obs: np.ndarray
    acts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.obs.shape[0])

    @property
    def pairs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [(self.obs[i], self.acts[i]) for i in range(self.n)]

    @property
    def moments(self) -> np.ndarray:
        """[state mean, state std, action mean, action std], population std."""
        return np.concatenate([
            self.obs.mean(axis=0), self.obs.std(axis=0),
            self.acts.mean(axis=0), self.acts.std(axis=0),
        ])


def empirical_distribution(obs, acts) -> PopDistribution:
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    acts = np.atleast_2d(np.asarray(acts, dtype=float))
    if obs.shape[0] == 0 or obs.shape[0] != acts.shape[0]:
        raise ContractError(
            f"Need equal, non-zero numbers of states and actions, got {obs.shape[0]} and {acts.shape[0]}")
    return PopDistribution(obs.copy(), acts.copy())


def episode_return(rewards: Sequence[float], gamma: float) -> float:
    """Discounted return sum_t gamma^t r_t."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        return 0.0
    discounts = gamma ** np.arange(rewards.size, dtype=float)
    return float(np.sum(discounts * rewards))


def social_welfare(follower_returns: Sequence[float]) -> float:
    returns = np.asarray(follower_returns, dtype=float)
    if returns.size == 0:
        raise ContractError('social_welfare needs at least one follower return')
    return float(returns.sum())


def multi_objective_score(per_capita_gdp: float, wealth_gini: float, alpha: float) -> float:
    """Efficiency-equity score ln(per-capita GDP) + alpha * (1 - wealth Gini)."""
    if per_capita_gdp <= 0:
        raise DomainError(f"per_capita_gdp must be > 0, got {per_capita_gdp}")
    return math.log(per_capita_gdp) + alpha * (1.0 - wealth_gini)


def evaluate_critic(critic: Critic, rows: np.ndarray) -> np.ndarray:
    """Critic values for a batch of input rows, as a flat vector."""
    if isinstance(critic, NetworkParams):
        values = net_forward(critic, rows)
    else:
        values = critic(rows)
    return np.asarray(values, dtype=float).reshape(rows.shape[0])


def mean_field_q(critic: Critic, leader_obs, leader_action, pairs: PopDistribution,
                 own_pair: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> float:
    """Factorized Q: average of the pairwise critic over the given pairs.

    Leader mode (no own_pair) feeds [s_l, a_l, s_j, a_j] per pair. Follower mode
    feeds [s_l, a_l, s_i, a_i, s_j, a_j] with the own pair fixed.
    """
    if pairs is None or pairs.n == 0:
        raise ContractError('mean_field_q needs at least one pair')
    head = np.concatenate([np.ravel(leader_obs), np.ravel(leader_action)])
    if own_pair is not None:
        head = np.concatenate([head, np.ravel(own_pair[0]), np.ravel(own_pair[1])])
    rows = np.hstack([np.tile(head, (pairs.n, 1)), pairs.obs, pairs.acts])
    return float(np.mean(evaluate_critic(critic, rows)))


def concat_selection(follower_obs: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Pick m followers per row, sorted by wealth and evenly spaced.

    Args:
        follower_obs: (B, N, d) observations; column 0 is own wealth
        m: Number of slots

    Returns:
        (indices (B, m), mask (B, m)); mask is 0 for padding slots when N < m
    """
    B, N = follower_obs.shape[:2]
    order = np.argsort(follower_obs[:, :, 0], axis=1, kind='stable')
    if N >= m:
        picks = np.round(np.linspace(0, N - 1, m)).astype(int)
        return order[:, picks], np.ones((B, m))
    indices = np.zeros((B, m), dtype=int)
    mask = np.zeros((B, m))
    indices[:, :N] = order
    mask[:, :N] = 1.0
    return indices, mask


def concat_pairs(follower_obs: np.ndarray, follower_acts: np.ndarray,
                 indices: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Flatten the selected (obs, action) pairs into one row per batch entry."""
    pairs = np.concatenate([follower_obs, follower_acts], axis=2)
    chosen = np.take_along_axis(pairs, indices[:, :, None], axis=1) * mask[:, :, None]
    return chosen.reshape(pairs.shape[0], -1)

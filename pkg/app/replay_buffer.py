import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from errors import ContractError

logger = logging.getLogger('smfg-lab.replay')


@dataclass(frozen=True, eq=False)
class Transition:
    """One joint step of the leader and the (possibly subsampled) followers."""

    leader_obs: np.ndarray
    leader_action: np.ndarray
    leader_reward: float
    next_leader_obs: np.ndarray
    follower_obs: np.ndarray
    follower_actions: np.ndarray
    follower_rewards: np.ndarray
    next_follower_obs: np.ndarray
    done: bool
    follower_index: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.follower_obs.shape[0]
        if not (self.follower_actions.shape[0] == self.follower_rewards.shape[0]
                == self.next_follower_obs.shape[0] == n):
            raise ContractError('Follower arrays in a transition must share their length')


@dataclass(frozen=True, eq=False)
class TransitionBatch:
    """Transitions stacked along a leading batch axis."""

    leader_obs: np.ndarray          # (B, dl)
    leader_action: np.ndarray       # (B, al)
    leader_reward: np.ndarray       # (B,)
    next_leader_obs: np.ndarray     # (B, dl)
    follower_obs: np.ndarray        # (B, N, df)
    follower_actions: np.ndarray    # (B, N, af)
    follower_rewards: np.ndarray    # (B, N)
    next_follower_obs: np.ndarray   # (B, N, df)
    done: np.ndarray                # (B,)

    @property
    def size(self) -> int:
        return int(self.leader_obs.shape[0])

    @property
    def n_followers(self) -> int:
        return int(self.follower_obs.shape[1])

    @classmethod
    def stack(cls, transitions: List[Transition]) -> 'TransitionBatch':
        if not transitions:
            raise ContractError('Cannot build an empty batch')
        return cls(
            leader_obs=np.stack([t.leader_obs for t in transitions]),
            leader_action=np.stack([t.leader_action for t in transitions]),
            leader_reward=np.array([t.leader_reward for t in transitions], dtype=float),
            next_leader_obs=np.stack([t.next_leader_obs for t in transitions]),
            follower_obs=np.stack([t.follower_obs for t in transitions]),
            follower_actions=np.stack([t.follower_actions for t in transitions]),
            follower_rewards=np.stack([t.follower_rewards for t in transitions]),
            next_follower_obs=np.stack([t.next_follower_obs for t in transitions]),
            done=np.array([t.done for t in transitions], dtype=float),
        )


class ReplayBuffer:
    """Bounded FIFO of transitions backed by a ring list."""

    def __init__(self, capacity: int = 1_000_000):
        if capacity < 1:
            raise ContractError(f"Replay capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._items: List[Transition] = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def add(self, transition: Transition):
        if self._items:
            first = self._items[0]
            if (transition.follower_obs.shape != first.follower_obs.shape
                    or transition.leader_obs.shape != first.leader_obs.shape):
                raise ContractError('Transition dimensions differ from the buffer contents')
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def items(self) -> List[Transition]:
        """Retained transitions, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next:] + self._items[:self._next]

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform sample without replacement; smaller when the buffer is short."""
        if not self._items:
            raise ContractError('Cannot sample from an empty replay buffer')
        size = min(int(batch_size), len(self._items))
        picks = rng.choice(len(self._items), size=size, replace=False)
        return TransitionBatch.stack([self._items[i] for i in picks])
